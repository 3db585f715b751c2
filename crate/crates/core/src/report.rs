//! Ratio tables produced by the experiment scans, with CSV and JSON serialization.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::slope_fit;

pub const CSV_HEADER: &str = "s,lhs,rhs,ratio,tail_est_lhs,tail_est_rhs";

/// First line of every CSV report; lets a report double as a config file.
pub const CSV_MAGIC: &str = "# fracspace report";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub tail_est_lhs: f64,
    pub tail_est_rhs: f64,
}

impl RatioRow {
    pub fn new(s: f64, lhs: f64, rhs: f64, tail_est_lhs: f64, tail_est_rhs: f64) -> Self {
        RatioRow {
            s,
            lhs,
            rhs,
            ratio: lhs / rhs,
            tail_est_lhs,
            tail_est_rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Band statistics of the ratio column over the rows with `s` inside `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub window: [f64; 2],
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max/min`, at least 1.
    pub band: f64,
    /// Slope of `log ratio` against `log(1-s)`; absent with fewer than four rows.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub kind: String,
    pub function: String,
    pub p: f64,
    pub q: f64,
    pub rows: Vec<RatioRow>,
    pub summary: Summary,
    pub verdict: Verdict,
    /// Resolved run configuration, echoed verbatim into every serialization.
    pub config: BTreeMap<String, String>,
    pub meta: BTreeMap<String, Value>,
}

impl RatioReport {
    /// Validates the rows and computes the band over `window`. The verdict starts as `Pass`;
    /// each experiment sets its own.
    pub fn new(
        kind: impl Into<String>,
        function: impl Into<String>,
        p: f64,
        q: f64,
        rows: Vec<RatioRow>,
        window: [f64; 2],
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("a report needs at least one row"));
        }
        for r in &rows {
            let ok = [r.lhs, r.rhs, r.ratio]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0);
            if !ok {
                return Err(Error::Resolution(format!(
                    "non-positive or non-finite entry at s={}: lhs={}, rhs={}",
                    r.s, r.lhs, r.rhs
                )));
            }
        }
        let inside: Vec<&RatioRow> = rows
            .iter()
            .filter(|r| r.s >= window[0] && r.s <= window[1])
            .collect();
        let pool: Vec<&RatioRow> = if inside.is_empty() {
            rows.iter().collect()
        } else {
            inside
        };
        let min_ratio = pool.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let max_ratio = pool.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let slope = if pool.len() >= 4 {
            let s: Vec<f64> = pool.iter().map(|r| r.s).collect();
            let v: Vec<f64> = pool.iter().map(|r| r.ratio).collect();
            slope_fit(&s, &v).ok().map(|f| f.slope)
        } else {
            None
        };
        Ok(RatioReport {
            kind: kind.into(),
            function: function.into(),
            p,
            q,
            rows,
            summary: Summary {
                window,
                min_ratio,
                max_ratio,
                band: max_ratio / min_ratio,
                slope,
            },
            verdict: Verdict::Pass,
            config: BTreeMap::new(),
            meta: BTreeMap::new(),
        })
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.insert(key.to_string(), value.into());
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.ratio).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_MAGIC);
        out.push('\n');
        for (k, v) in &self.config {
            let _ = writeln!(out, "#config {k}={v}");
        }
        let _ = writeln!(out, "# kind={}", self.kind);
        let _ = writeln!(out, "# function={}", self.function);
        let _ = writeln!(out, "# verdict={}", self.verdict);
        let sm = &self.summary;
        let _ = writeln!(
            out,
            "# band={:.16e} min_ratio={:.16e} max_ratio={:.16e} window={}..{}",
            sm.band, sm.min_ratio, sm.max_ratio, sm.window[0], sm.window[1]
        );
        if let Some(slope) = sm.slope {
            let _ = writeln!(out, "# slope={slope:.16e}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.s, r.lhs, r.rhs, r.ratio, r.tail_est_lhs, r.tail_est_rhs
            );
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "rows": self.rows,
            "meta": {
                "kind": self.kind,
                "function": self.function,
                "p": self.p,
                "q": self.q,
                "config": self.config,
                "verdict": self.verdict,
                "summary": self.summary,
                "notes": self.meta,
            }
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).unwrap_or_default();
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[f64]) -> Vec<RatioRow> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| RatioRow::new(0.5 + 0.1 * i as f64, *v, 1.0, 0.0, 0.0))
            .collect()
    }

    #[test]
    fn band_is_max_over_min_in_window() {
        let r = RatioReport::new("t", "f", 2.0, 2.0, rows(&[8.0, 1.0, 2.0, 4.0]), [0.55, 1.0])
            .unwrap();
        assert_eq!(r.summary.min_ratio, 1.0);
        assert_eq!(r.summary.max_ratio, 4.0);
        assert_eq!(r.summary.band, 4.0);
        assert!(r.summary.slope.is_none());
    }

    #[test]
    fn rejects_non_positive_rows() {
        assert!(RatioReport::new("t", "f", 2.0, 2.0, rows(&[1.0, 0.0]), [0.0, 1.0]).is_err());
        assert!(RatioReport::new("t", "f", 2.0, 2.0, rows(&[1.0, f64::NAN]), [0.0, 1.0]).is_err());
    }

    #[test]
    fn csv_has_fixed_schema() {
        let mut r = RatioReport::new("t", "f", 2.0, 2.0, rows(&[1.0, 2.0]), [0.0, 1.0]).unwrap();
        r.config.insert("p".into(), "2".into());
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_MAGIC);
        assert_eq!(lines[1], "#config p=2");
        let header = lines.iter().position(|l| *l == CSV_HEADER).unwrap();
        assert_eq!(lines.len(), header + 3);
        assert_eq!(
            lines[header + 1],
            "5.0000000000000000e-1,1.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"
        );
    }

    #[test]
    fn json_mirrors_rows_and_meta() {
        let r = RatioReport::new("t", "f", 2.0, 3.0, rows(&[1.0, 2.0]), [0.0, 1.0]).unwrap();
        let v = r.to_json();
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert_eq!(v["meta"]["verdict"], "PASS");
        assert_eq!(v["meta"]["summary"]["band"], 2.0);
        assert_eq!(v["meta"]["q"], 3.0);
    }
}
