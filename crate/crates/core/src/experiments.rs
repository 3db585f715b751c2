//! Parameter scans over `s` that turn the two-sided seminorm estimates, the interpolation
//! and lower Sobolev bounds, and the `s → 1` limit into ratio tables with verdicts.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{check_open, Error, Result};
use crate::grid::{grad_lp_norm, lp_norm, sample, GridSpec, TestFunction};
use crate::report::{RatioReport, RatioRow, Verdict};
use crate::seminorms::{Seminorm, SeminormEngine, SeminormParams, SeminormValue, LEVEL_TAIL_TOL};
use crate::spectral::Kernel;

/// Largest `s` the default grids certify: `1 - 2^{-10}`.
pub const S_CAP: f64 = 1.0 - 1.0 / 1024.0;

/// Cap on grid size when a kernel scan regrids to resolve omitted levels.
pub const MAX_REGRID_POINTS: usize = 1 << 22;

/// Fractions of `σ̄` swept by the lower Sobolev check.
pub const SIGMA_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 0.95];

/// Strictly increasing list of smoothness values in `(0,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SGrid {
    values: Vec<f64>,
}

impl SGrid {
    /// Sorts `values`; rejects duplicates and anything outside `(0,1)`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("s-grid is empty"));
        }
        for &s in &values {
            check_open("s", s, 0.0, 1.0)?;
        }
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("s-grid has repeated values"));
        }
        Ok(SGrid { values })
    }

    /// `{0.1, …, 0.9, 0.95}`: the range over which kernel equivalence is checked.
    pub fn kernel_default() -> Self {
        let mut values: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        values.push(0.95);
        SGrid { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

impl Default for SGrid {
    /// `{1 - 2^{-k} : k = 1..10} ∪ {0.1, 0.2, 0.3}`
    fn default() -> Self {
        let mut values = vec![0.1, 0.2, 0.3];
        values.extend((1..=10).map(|k| 1.0 - 2f64.powi(-k)));
        SGrid { values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationTriple {
    pub v: f64,
    pub s: f64,
    pub sigma: f64,
}

impl InterpolationTriple {
    pub fn new(v: f64, s: f64, sigma: f64) -> Result<Self> {
        let t = InterpolationTriple { v, s, sigma };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.v >= 0.0 && self.v < self.s && self.s < self.sigma && self.sigma <= 1.0;
        if !ok {
            return Err(Error::param(format!(
                "triple needs 0 ≤ v < s < σ ≤ 1, got v={}, s={}, σ={}",
                self.v, self.s, self.sigma
            )));
        }
        Ok(())
    }

    /// Twelve triples at `s ∈ {0.6, 0.7, 0.8, 0.9}`: `(0, s, 1)`, `(2s-1, s, 1)` and a
    /// symmetric window `(s-δ, s, s+δ)` with `δ = (1-s)/2`.
    pub fn default_grid() -> Vec<InterpolationTriple> {
        let mut out = Vec::with_capacity(12);
        for s in [0.6, 0.7, 0.8, 0.9] {
            let d = (1.0 - s) / 2.0;
            out.push(InterpolationTriple { v: 0.0, s, sigma: 1.0 });
            out.push(InterpolationTriple { v: 2.0 * s - 1.0, s, sigma: 1.0 });
            out.push(InterpolationTriple { v: s - d, s, sigma: s + d });
        }
        out
    }
}

/// `Θ > 1` and, for the Gagliardo variant, `γ > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerSobolevParams {
    pub theta_big: f64,
    pub gamma: Option<f64>,
}

impl LowerSobolevParams {
    pub fn new(theta_big: f64) -> Result<Self> {
        check_open("Theta", theta_big, 1.0, f64::INFINITY)?;
        Ok(LowerSobolevParams {
            theta_big,
            gamma: None,
        })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_open("gamma", gamma, 1.0, f64::INFINITY)?;
        self.gamma = Some(gamma);
        Ok(self)
    }

    /// Left end of the admissible `s` range: `1 - 1/(2Θ)`, or `1 - 1/(2γΘ)` with `γ`.
    pub fn s_lower(&self) -> f64 {
        1.0 - 1.0 / (2.0 * self.gamma.unwrap_or(1.0) * self.theta_big)
    }

    /// `σ̄` with `1 - σ̄ = Θ(1 - s)`.
    pub fn sigma_bar(&self, s: f64) -> f64 {
        1.0 - self.theta_big * (1.0 - s)
    }

    /// `θ = 1 - 1/γ`
    pub fn admissibility_theta(&self) -> Option<f64> {
        self.gamma.map(|g| 1.0 - 1.0 / g)
    }

    pub fn check(&self, s: f64) -> Result<()> {
        let lo = self.s_lower();
        if !(s > lo && s < 1.0) {
            return Err(Error::param(format!(
                "s={s} outside the range ({lo}, 1) allowed by Theta={}",
                self.theta_big
            )));
        }
        Ok(())
    }

    /// Six points `1 - 2^{-k}/(2Θ)` (with `γΘ` in place of `Θ` when `γ` is set), dropping any
    /// beyond [`S_CAP`].
    pub fn default_s_grid(&self) -> Result<SGrid> {
        let width = 1.0 - self.s_lower();
        let values: Vec<f64> = (1..=6)
            .map(|k| 1.0 - width * 2f64.powi(-k))
            .filter(|s| *s <= S_CAP)
            .collect();
        SGrid::new(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    EvsF,
    EvsFp2,
    WvsF,
    WvsFp2,
    WvsE,
    PtKernels,
}

impl Pair {
    pub const ALL: [Pair; 6] = [
        Pair::EvsF,
        Pair::EvsFp2,
        Pair::WvsF,
        Pair::WvsFp2,
        Pair::WvsE,
        Pair::PtKernels,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Pair::EvsF => "E_vs_F",
            Pair::EvsFp2 => "E_vs_Fp2",
            Pair::WvsF => "W_vs_F",
            Pair::WvsFp2 => "W_vs_Fp2",
            Pair::WvsE => "W_vs_E",
            Pair::PtKernels => "PT_kernels",
        }
    }

    pub fn uses_w(&self) -> bool {
        matches!(self, Pair::WvsF | Pair::WvsFp2 | Pair::WvsE)
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Pair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Pair::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown pair '{s}' (expected E_vs_F, E_vs_Fp2, W_vs_F, W_vs_Fp2, W_vs_E or PT_kernels)"
                ))
            })
    }
}

/// Which seminorm a Sobolev-type check bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    E,
    W,
}

impl Target {
    fn seminorm(self) -> Seminorm {
        match self {
            Target::E => Seminorm::E,
            Target::W => Seminorm::W,
        }
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E" => Ok(Target::E),
            "W" => Ok(Target::W),
            _ => Err(Error::param(format!("unknown target '{s}' (expected E or W)"))),
        }
    }
}

/// Verdict thresholds. The estimates carry no explicit constants, so these are regression
/// tripwires and are echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Band width for comparisons across seminorm families.
    pub cross_family: f64,
    /// Band width for the two Littlewood-Paley kernels.
    pub same_family: f64,
    /// Relative spread of the last three BBM ratios.
    pub stabilization: f64,
    /// `max/median` of the constants in the Sobolev-type checks.
    pub uniformity: f64,
    /// Smallest allowed slope of the lower Sobolev constants against `log(1-s)`, fitted over
    /// the four `s` closest to 1.
    pub growth_slope: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            cross_family: 50.0,
            same_family: 10.0,
            stabilization: 0.03,
            uniformity: 20.0,
            growth_slope: -0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares fit of `log value = intercept + slope · log(1-s)`.
pub fn slope_fit(s: &[f64], values: &[f64]) -> Result<SlopeFit> {
    if s.len() != values.len() {
        return Err(Error::param("slope_fit needs as many values as s points"));
    }
    if s.len() < 4 {
        return Err(Error::param(format!(
            "slope_fit needs at least 4 points, got {}",
            s.len()
        )));
    }
    for (&si, &v) in s.iter().zip(values) {
        check_open("s", si, 0.0, 1.0)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(format!(
                "slope_fit needs positive values, got {v} at s={si}"
            )));
        }
    }
    let x: Vec<f64> = s.iter().map(|si| (1.0 - si).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("slope_fit needs distinct s values"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

/// Gaussian (a=1), modulated Gaussians (ω = 4, 8) and the bump (R=1).
pub fn catalog(n: usize) -> Result<Vec<TestFunction>> {
    Ok(vec![
        TestFunction::gaussian(1.0, n)?,
        TestFunction::modulated_gaussian(1.0, 4.0, n)?,
        TestFunction::modulated_gaussian(1.0, 8.0, n)?,
        TestFunction::bump(1.0, n)?,
    ])
}

fn nonzero(engine: &SeminormEngine) -> Result<()> {
    if engine.function().is_zero() {
        return Err(Error::ZeroFunction("ratios are undefined for f = 0"));
    }
    Ok(())
}

fn function_label(engine: &SeminormEngine) -> String {
    engine
        .function()
        .analytic
        .map(|tf| tf.label())
        .unwrap_or_else(|| "sampled".to_string())
}

fn tail(v: &SeminormValue) -> f64 {
    v.tail_lo.max(v.tail_hi)
}

fn eval(engine: &SeminormEngine, which: Seminorm, s: f64, p: f64, q: f64) -> Result<SeminormValue> {
    SeminormParams::new(s, p, q)
        .and_then(|par| engine.evaluate(which, &par))
        .map_err(|e| e.with_context(format!("{} at s={s}", which.label())))
}

fn collect_rows(rows: Vec<Result<RatioRow>>) -> Result<Vec<RatioRow>> {
    rows.into_iter().collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Checks the admissibility conditions a W pair needs and returns `θ`.
fn w_admissibility(
    n: usize,
    p: f64,
    q: f64,
    theta: Option<f64>,
    needs_dual: bool,
) -> Result<(SeminormParams, f64)> {
    let theta =
        theta.ok_or_else(|| Error::param("comparisons involving W need an admissibility theta"))?;
    let base = SeminormParams::new(0.5, p, q)?.with_theta(theta)?;
    let nf = n as f64;
    if base.admissible_w(n) != Some(true) {
        return Err(Error::Inadmissible(format!(
            "need p > nq/(n+θq) = {}, got p = {p} (n={n}, q={q}, θ={theta})",
            nf * q / (nf + theta * q)
        )));
    }
    if needs_dual && base.admissible_dual(n) != Some(true) {
        let (pc, qc) = (base.p_conjugate(), base.q_conjugate());
        return Err(Error::Inadmissible(format!(
            "need p' > nq'/(n+θq') = {}, got p' = {pc} (n={n}, q'={qc}, θ={theta})",
            nf * qc / (nf + theta * qc)
        )));
    }
    Ok((base, theta))
}

/// Tabulates `lhs / ((1-s)^{-1/q} · rhs)` for one of the two-sided comparisons.
///
/// The `(1-s)^{-1/q}` rate is the upper bound for `q ≤ 2` and the lower bound for `q ≥ 2`; it is
/// the rate smooth functions attain, so the ratio stays in a bounded band. The other side of
/// each estimate carries `(1-s)^{-1/2}`; the slope of `lhs / ((1-s)^{-1/2} rhs)` is recorded as
/// `drift_slope` and changes sign as `q` crosses 2.
pub fn sharpness_scan(
    engine: &SeminormEngine,
    p: f64,
    q: f64,
    theta: Option<f64>,
    s_grid: &SGrid,
    pair: Pair,
    thresholds: &Thresholds,
) -> Result<RatioReport> {
    if pair == Pair::PtKernels {
        return kernel_equivalence_scan(engine, p, q, s_grid, thresholds);
    }
    nonzero(engine)?;
    SeminormParams::new(0.5, p, q)?;
    let n = engine.function().dim();
    let mut notes: Vec<(&str, serde_json::Value)> = Vec::new();
    let mut s_values: Vec<f64> = s_grid.values().to_vec();
    if pair.uses_w() {
        let needs_dual = pair != Pair::WvsE || q == 2.0;
        let (base, theta) = w_admissibility(n, p, q, theta, needs_dual)?;
        let excluded: Vec<f64> = s_values.iter().copied().filter(|s| *s <= theta).collect();
        s_values.retain(|s| *s > theta);
        if s_values.is_empty() {
            return Err(Error::param(format!("no s in the grid exceeds θ = {theta}")));
        }
        notes.push(("theta", json!(theta)));
        notes.push(("admissible_w", json!(base.admissible_w(n))));
        notes.push(("admissible_dual", json!(base.admissible_dual(n))));
        notes.push(("dual_condition_required", json!(needs_dual)));
        notes.push(("excluded_s_not_above_theta", json!(excluded)));
    }
    let (lhs_kind, rhs_kind, rhs_q, rated) = match pair {
        Pair::EvsF => (Seminorm::E, Seminorm::FCont, q, true),
        Pair::EvsFp2 => (Seminorm::E, Seminorm::FCont, 2.0, true),
        Pair::WvsF => (Seminorm::W, Seminorm::FCont, q, true),
        Pair::WvsFp2 => (Seminorm::W, Seminorm::FCont, 2.0, true),
        Pair::WvsE => (Seminorm::W, Seminorm::E, q, false),
        Pair::PtKernels => unreachable!(),
    };
    let raw: Vec<Result<(RatioRow, f64)>> = s_values
        .par_iter()
        .map(|&s| {
            let lhs = eval(engine, lhs_kind, s, p, q)?;
            let rhs = eval(engine, rhs_kind, s, p, rhs_q)?;
            let factor = if rated { (1.0 - s).powf(-1.0 / q) } else { 1.0 };
            let row = RatioRow::new(s, lhs.value, factor * rhs.value, tail(&lhs), tail(&rhs));
            let drift = lhs.value / ((1.0 - s).powf(-0.5) * rhs.value);
            Ok((row, drift))
        })
        .collect();
    let raw: Vec<(RatioRow, f64)> = raw.into_iter().collect::<Result<_>>()?;
    let rows: Vec<RatioRow> = raw.iter().map(|r| r.0).collect();
    let window = [0.5, s_grid.max()];
    let mut report = RatioReport::new(
        format!("scan:{}", pair.label()),
        function_label(engine),
        p,
        q,
        rows,
        window,
    )?;
    report.verdict = Verdict::from_bool(report.summary.band < thresholds.cross_family);
    report.note("pair", pair.label());
    report.note("lhs", lhs_kind.label());
    report.note(
        "rhs",
        format!(
            "{}{}",
            if rated { "(1-s)^(-1/q) * " } else { "" },
            if rhs_kind == Seminorm::FCont {
                format!("F_cont(p,{rhs_q})")
            } else {
                rhs_kind.label().to_string()
            }
        ),
    );
    if rated {
        let branch = if q < 2.0 {
            "q<=2"
        } else if q > 2.0 {
            "q>=2"
        } else {
            "q=2"
        };
        let (lower, upper) = match pair {
            Pair::EvsF | Pair::WvsF if q <= 2.0 => (json!(0.5), json!(1.0 / q)),
            Pair::EvsF | Pair::WvsF => (json!(1.0 / q), json!(0.5)),
            _ if q <= 2.0 => (json!(1.0 / q), serde_json::Value::Null),
            _ => (serde_json::Value::Null, json!(1.0 / q)),
        };
        report.note("branch", branch);
        report.note("lower_bound_rate_exponent", lower);
        report.note("upper_bound_rate_exponent", upper);
        let in_window: Vec<(f64, f64)> = raw
            .iter()
            .filter(|r| r.0.s >= window[0])
            .map(|r| (r.0.s, r.1))
            .collect();
        if in_window.len() >= 4 {
            let (s, d): (Vec<f64>, Vec<f64>) = in_window.into_iter().unzip();
            report.note("drift_slope", slope_fit(&s, &d)?.slope);
        }
    }
    report.note("band_threshold", thresholds.cross_family);
    for (k, v) in notes {
        report.note(k, v);
    }
    Ok(report)
}

/// `R(s) = (1-s)^{1/q} [f]_E / ‖∇f‖_p`; passes when the last three ratios agree to within the
/// stabilization tolerance.
pub fn bbm1_limit(
    engine: &SeminormEngine,
    p: f64,
    q: f64,
    s_grid: &SGrid,
    thresholds: &Thresholds,
) -> Result<RatioReport> {
    nonzero(engine)?;
    SeminormParams::new(0.5, p, q)?;
    let grad = grad_lp_norm(engine.function(), p)?;
    let rows = collect_rows(
        s_grid
            .values()
            .par_iter()
            .map(|&s| {
                let e = eval(engine, Seminorm::E, s, p, q)?;
                Ok(RatioRow::new(s, (1.0 - s).powf(1.0 / q) * e.value, grad, tail(&e), 0.0))
            })
            .collect(),
    )?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let mut report = RatioReport::new(
        "bbm",
        function_label(engine),
        p,
        q,
        rows,
        [s_grid.min(), s_grid.max()],
    )?;
    let k = ratios.len();
    let spread = if k >= 3 {
        let last = &ratios[k - 3..];
        let hi = last.iter().copied().fold(0.0, f64::max);
        let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    } else {
        f64::INFINITY
    };
    report.verdict = Verdict::from_bool(spread < thresholds.stabilization);
    report.note("stabilization_spread", spread);
    report.note("stabilization_tolerance", thresholds.stabilization);
    if k >= 4 {
        let inc: Vec<f64> = ratios[k - 4..].windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        report.note("increments_decreasing", inc.windows(2).all(|w| w[1] <= w[0]));
    }
    if p == 2.0 && q == 2.0 {
        report.note("expected_limit", 0.5f64.sqrt());
    }
    if s_grid.max() < S_CAP {
        report.note(
            "warning",
            format!("s-grid stops at {} below 1-2^-10", s_grid.max()),
        );
    }
    Ok(report)
}

/// `Ḟ^σ_{p,2}` with the order-1 and order-0 endpoints replaced by `‖∇f‖_p` and `‖f‖_p`.
fn f_p2(engine: &SeminormEngine, sigma: f64, p: f64) -> Result<(f64, f64, bool)> {
    if sigma >= 1.0 {
        Ok((grad_lp_norm(engine.function(), p)?, 0.0, true))
    } else if sigma <= 0.0 {
        Ok((lp_norm(engine.function(), p)?, 0.0, true))
    } else {
        let v = eval(engine, Seminorm::FCont, sigma, p, 2.0)?;
        Ok((v.value, tail(&v), false))
    }
}

/// Per triple, `C = [f]_target / ((σ-s)^{-1/q} [f]_{Ḟ^σ_{p,2}} + (s-v)^{-1/q} [f]_{Ḟ^v_{p,2}})`.
pub fn sobolev_interpolation_check(
    engine: &SeminormEngine,
    p: f64,
    q: f64,
    theta: Option<f64>,
    triples: &[InterpolationTriple],
    target: Target,
    thresholds: &Thresholds,
) -> Result<RatioReport> {
    nonzero(engine)?;
    if triples.is_empty() {
        return Err(Error::param("no interpolation triples given"));
    }
    for t in triples {
        t.validate()?;
    }
    SeminormParams::new(0.5, p, q)?;
    let n = engine.function().dim();
    let mut theta_used = None;
    if target == Target::W {
        let (_, th) = w_admissibility(n, p, q, theta, false)?;
        if let Some(t) = triples.iter().find(|t| t.s <= th) {
            return Err(Error::param(format!(
                "triple s={} must exceed θ = {th} for the W target",
                t.s
            )));
        }
        theta_used = Some(th);
    }
    let results: Vec<Result<(RatioRow, bool)>> = triples
        .par_iter()
        .map(|t| {
            let lhs = eval(engine, target.seminorm(), t.s, p, q)?;
            let (f_hi, tail_hi, sur_hi) = f_p2(engine, t.sigma, p)?;
            let (f_lo, tail_lo, sur_lo) = f_p2(engine, t.v, p)?;
            let rhs = (t.sigma - t.s).powf(-1.0 / q) * f_hi + (t.s - t.v).powf(-1.0 / q) * f_lo;
            let row = RatioRow::new(t.s, lhs.value, rhs, tail(&lhs), tail_hi.max(tail_lo));
            Ok((row, sur_hi || sur_lo))
        })
        .collect();
    let results: Vec<(RatioRow, bool)> = results.into_iter().collect::<Result<_>>()?;
    let surrogate = results.iter().any(|r| r.1);
    let rows: Vec<RatioRow> = results.into_iter().map(|r| r.0).collect();
    let mut report = RatioReport::new(
        format!("interp:{:?}", target),
        function_label(engine),
        p,
        q,
        rows,
        [0.0, 1.0],
    )?;
    let c = report.ratios();
    let c_max = c.iter().copied().fold(0.0, f64::max);
    let uniformity = c_max / median(&c);
    report.verdict = Verdict::from_bool(c_max.is_finite() && uniformity < thresholds.uniformity);
    report.note("triples", json!(triples));
    report.note("c_max", c_max);
    report.note("c_max_over_median", uniformity);
    report.note("uniformity_threshold", thresholds.uniformity);
    report.note("endpoint_surrogates", surrogate);
    if let Some(th) = theta_used {
        report.note("theta", th);
    }
    Ok(report)
}

/// Per `s`, `C(s) = sup_σ [f]_{Ḟ^σ_{p,2}} / (‖f‖_p + (1-s)^{1/q} [f]_target)` over
/// `σ ∈ SIGMA_FRACTIONS · σ̄`.
pub fn lower_sobolev_check(
    engine: &SeminormEngine,
    p: f64,
    q: f64,
    params: &LowerSobolevParams,
    target: Target,
    s_grid: &SGrid,
    thresholds: &Thresholds,
) -> Result<RatioReport> {
    nonzero(engine)?;
    SeminormParams::new(0.5, p, q)?;
    for &s in s_grid.values() {
        params.check(s)?;
    }
    let n = engine.function().dim();
    if target == Target::W {
        let theta = params
            .admissibility_theta()
            .ok_or_else(|| Error::param("the W target needs gamma"))?;
        let base = SeminormParams::new(0.5, p, q)?.with_theta(theta)?;
        if base.admissible_dual(n) != Some(true) {
            let qc = base.q_conjugate();
            let nf = n as f64;
            return Err(Error::Inadmissible(format!(
                "need p' > nq'/(n+θq') = {}, got p' = {} (θ = 1-1/γ = {theta})",
                nf * qc / (nf + theta * qc),
                base.p_conjugate()
            )));
        }
    }
    let norm = lp_norm(engine.function(), p)?;
    let results: Vec<Result<(RatioRow, f64)>> = s_grid
        .values()
        .par_iter()
        .map(|&s| {
            let bar = params.sigma_bar(s);
            let mut best = (0.0, 0.0, 0.0);
            for frac in SIGMA_FRACTIONS {
                let sigma = frac * bar;
                let v = eval(engine, Seminorm::FCont, sigma, p, 2.0)?;
                if v.value > best.0 {
                    best = (v.value, tail(&v), sigma);
                }
            }
            let sem = eval(engine, target.seminorm(), s, p, q)?;
            let rhs = norm + (1.0 - s).powf(1.0 / q) * sem.value;
            Ok((RatioRow::new(s, best.0, rhs, best.1, tail(&sem)), best.2))
        })
        .collect();
    let results: Vec<(RatioRow, f64)> = results.into_iter().collect::<Result<_>>()?;
    let argmax: Vec<f64> = results.iter().map(|r| r.1).collect();
    let rows: Vec<RatioRow> = results.into_iter().map(|r| r.0).collect();
    let mut report = RatioReport::new(
        format!("lower:{:?}", target),
        function_label(engine),
        p,
        q,
        rows,
        [0.0, 1.0],
    )?;
    let c = report.ratios();
    let c_max = c.iter().copied().fold(0.0, f64::max);
    let uniformity = c_max / median(&c);
    // trend over the four s closest to 1, where a blow-up would show
    let k = report.rows.len();
    let tail_slope = if k >= 4 {
        let last = &report.rows[k - 4..];
        let s: Vec<f64> = last.iter().map(|r| r.s).collect();
        Some(slope_fit(&s, &c[k - 4..])?.slope)
    } else {
        None
    };
    let no_growth = tail_slope.map_or(true, |slope| slope > thresholds.growth_slope);
    if let Some(slope) = tail_slope {
        report.note("tail_slope", slope);
    }
    report.verdict = Verdict::from_bool(uniformity < thresholds.uniformity && no_growth);
    report.note("Theta", params.theta_big);
    if let Some(g) = params.gamma {
        report.note("gamma", g);
    }
    report.note("sigma_fractions", json!(SIGMA_FRACTIONS));
    report.note("argmax_sigma", json!(argmax));
    report.note("c_max", c_max);
    report.note("c_max_over_median", uniformity);
    report.note("uniformity_threshold", thresholds.uniformity);
    report.note("growth_slope_threshold", thresholds.growth_slope);
    Ok(report)
}

/// [`lower_sobolev_check`] over several `Θ`, merged into one table. Passes when every `Θ`
/// passes and `max/median` of the constants over the whole `(Θ, s)` grid stays below the
/// uniformity threshold. `s_grid = None` uses each `Θ`'s default grid.
pub fn lower_sobolev_grid(
    engine: &SeminormEngine,
    p: f64,
    q: f64,
    thetas: &[f64],
    gamma: Option<f64>,
    target: Target,
    s_grid: Option<&SGrid>,
    thresholds: &Thresholds,
) -> Result<RatioReport> {
    if thetas.is_empty() {
        return Err(Error::param("no Theta values given"));
    }
    let mut parts = Vec::with_capacity(thetas.len());
    for &big in thetas {
        let mut params = LowerSobolevParams::new(big)?;
        if let Some(g) = gamma {
            params = params.with_gamma(g)?;
        }
        let grid = match s_grid {
            Some(g) => g.clone(),
            None => params.default_s_grid()?,
        };
        parts.push(lower_sobolev_check(engine, p, q, &params, target, &grid, thresholds)?);
    }
    let rows: Vec<RatioRow> = parts.iter().flat_map(|r| r.rows.iter().copied()).collect();
    let mut report = RatioReport::new(
        format!("lower:{:?}", target),
        function_label(engine),
        p,
        q,
        rows,
        [0.0, 1.0],
    )?;
    let c = report.ratios();
    let c_max = c.iter().copied().fold(0.0, f64::max);
    let uniformity = c_max / median(&c);
    let all_pass = parts.iter().all(|r| r.verdict.is_pass());
    report.verdict = Verdict::from_bool(all_pass && uniformity < thresholds.uniformity);
    report.note("c_max", c_max);
    report.note("c_max_over_median", uniformity);
    report.note("uniformity_threshold", thresholds.uniformity);
    report.note(
        "per_Theta",
        json!(parts
            .iter()
            .zip(thetas)
            .map(|(r, t)| json!({
                "Theta": t,
                "rows": r.rows.len(),
                "verdict": r.verdict,
                "c_max_over_median": r.meta.get("c_max_over_median"),
                "tail_slope": r.meta.get("tail_slope"),
            }))
            .collect::<Vec<_>>()),
    );
    Ok(report)
}

/// Poisson over band-limited discrete Triebel-Lizorkin seminorms.
///
/// When omitted levels exceed the tolerance on the engine's grid, the analytic function is
/// resampled on a wider grid (coarse levels) or a finer one (fine levels) until both kernels
/// resolve.
pub fn kernel_equivalence_scan(
    engine: &SeminormEngine,
    p: f64,
    q: f64,
    s_grid: &SGrid,
    thresholds: &Thresholds,
) -> Result<RatioReport> {
    nonzero(engine)?;
    SeminormParams::new(0.5, p, q)?;
    let mut regridded: Option<SeminormEngine> = None;
    let mut regrids = 0;
    let (rows, spec) = loop {
        let eng = regridded.as_ref().unwrap_or(engine);
        let mut rows = Vec::with_capacity(s_grid.len());
        let (mut coarse, mut fine) = (false, false);
        for &s in s_grid.values() {
            let par = SeminormParams::new(s, p, q)?;
            let a = eng.triebel_discrete_raw(&par, None, Kernel::Poisson)?;
            let b = eng.triebel_discrete_raw(&par, None, Kernel::Bandlimited)?;
            coarse |= a.tail_lo > LEVEL_TAIL_TOL || b.tail_lo > LEVEL_TAIL_TOL;
            fine |= a.tail_hi > LEVEL_TAIL_TOL || b.tail_hi > LEVEL_TAIL_TOL;
            rows.push(RatioRow::new(s, a.value, b.value, tail(&a), tail(&b)));
        }
        let spec = eng.function().spec;
        if !coarse && !fine {
            break (rows, spec);
        }
        let tf = eng.function().analytic.ok_or_else(|| {
            Error::Resolution(
                "kernel scan: omitted levels exceed tolerance and the function has no analytic handle to resample"
                    .to_string(),
            )
        })?;
        let widen = if coarse { 2.0 } else { 1.0 };
        let points = spec.points() * if coarse { 2 } else { 1 } * if fine { 2 } else { 1 };
        let next = GridSpec::new(spec.dim(), spec.half_width() * widen, points)?;
        if next.len() > MAX_REGRID_POINTS {
            return Err(Error::Resolution(format!(
                "kernel scan: resolving both kernels needs more than {MAX_REGRID_POINTS} grid points"
            )));
        }
        regridded = Some(SeminormEngine::with_defaults(sample(&tf, &next)?)?);
        regrids += 1;
    };
    let mut report = RatioReport::new(
        "kernels",
        function_label(engine),
        p,
        q,
        rows,
        [0.1, 0.95],
    )?;
    report.verdict = Verdict::from_bool(report.summary.band < thresholds.same_family);
    report.note("lhs", "F_disc_poisson");
    report.note("rhs", "F_disc_bandlimited");
    report.note("band_threshold", thresholds.same_family);
    report.note("regrids", regrids);
    report.note(
        "grid",
        json!({"n": spec.dim(), "L": spec.half_width(), "N": spec.points()}),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SampledFunction;

    #[test]
    fn default_s_grid() {
        let g = SGrid::default();
        assert_eq!(g.len(), 13);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.max(), S_CAP);
        assert_eq!(g.min(), 0.1);
    }

    #[test]
    fn s_grid_rejects_bad_values() {
        let err = SGrid::new(vec![0.5, 1.5]).unwrap_err();
        assert!(err.to_string().contains("s must lie in (0,1)"));
        assert!(SGrid::new(vec![0.5, 0.5]).is_err());
        assert!(SGrid::new(vec![]).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let s = [0.5, 0.75, 0.9, 0.99];
        let v: Vec<f64> = s.iter().map(|x: &f64| (1.0 - x).powf(-0.5)).collect();
        let fit = slope_fit(&s, &v).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        let flat = slope_fit(&s, &[3.0; 4]).unwrap();
        assert!(flat.slope.abs() < 1e-14);
    }

    #[test]
    fn slope_fit_rejects_bad_input() {
        assert!(slope_fit(&[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0]).is_err());
        assert!(slope_fit(&[0.1, 0.2, 0.3, 0.4], &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn triples_are_ordered() {
        assert!(InterpolationTriple::new(0.5, 0.5, 0.9).is_err());
        assert!(InterpolationTriple::new(0.1, 0.5, 1.1).is_err());
        let grid = InterpolationTriple::default_grid();
        assert_eq!(grid.len(), 12);
        for t in grid {
            t.validate().unwrap();
        }
    }

    #[test]
    fn lower_sobolev_ranges() {
        let p = LowerSobolevParams::new(2.0).unwrap();
        assert_eq!(p.s_lower(), 0.75);
        let s = 1.0 - 2f64.powi(-6);
        p.check(s).unwrap();
        assert!((p.sigma_bar(s) - (1.0 - 2f64.powi(-5))).abs() < 1e-15);
        let narrow = LowerSobolevParams::new(1.01).unwrap();
        assert!(narrow.check(0.4).is_err());
        let grid = p.default_s_grid().unwrap();
        assert_eq!(grid.len(), 6);
        assert!(grid.values().iter().all(|s| *s > 0.75 && *s <= S_CAP));
    }

    #[test]
    fn pair_names_round_trip() {
        for pair in Pair::ALL {
            assert_eq!(pair.label().parse::<Pair>().unwrap(), pair);
        }
        assert!("E_vs_G".parse::<Pair>().is_err());
    }

    fn gaussian_engine() -> SeminormEngine {
        let spec = GridSpec::default_for(1).unwrap();
        let f = sample(&TestFunction::gaussian(1.0, 1).unwrap(), &spec).unwrap();
        SeminormEngine::with_defaults(f).unwrap()
    }

    #[test]
    fn inadmissible_w_pair_is_reported() {
        let engine = gaussian_engine();
        let grid = SGrid::new(vec![0.6, 0.7]).unwrap();
        let err = sharpness_scan(
            &engine,
            1.2,
            3.0,
            Some(0.5),
            &grid,
            Pair::WvsF,
            &Thresholds::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)), "{err}");
    }

    #[test]
    fn zero_function_is_rejected() {
        let spec = GridSpec::default_for(1).unwrap();
        let zero = SampledFunction::from_values(spec, vec![0.0; spec.len()]).unwrap();
        let engine = SeminormEngine::with_defaults(zero).unwrap();
        let grid = SGrid::new(vec![0.5, 0.6]).unwrap();
        let th = Thresholds::default();
        let err = sharpness_scan(&engine, 2.0, 2.0, None, &grid, Pair::EvsF, &th).unwrap_err();
        assert!(matches!(err, Error::ZeroFunction(_)));
        assert!(bbm1_limit(&engine, 2.0, 2.0, &grid, &th).is_err());
        assert!(kernel_equivalence_scan(&engine, 2.0, 2.0, &grid, &th).is_err());
        let triples = InterpolationTriple::default_grid();
        assert!(sobolev_interpolation_check(&engine, 2.0, 2.0, None, &triples, Target::E, &th)
            .is_err());
    }

    #[test]
    fn narrowing_the_interpolation_window_shrinks_the_constant() {
        let engine = gaussian_engine();
        let triples: Vec<InterpolationTriple> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|d| InterpolationTriple::new(0.5 - d, 0.5, 0.5 + d).unwrap())
            .collect();
        let r = sobolev_interpolation_check(
            &engine,
            2.0,
            2.0,
            None,
            &triples,
            Target::E,
            &Thresholds::default(),
        )
        .unwrap();
        let c = r.ratios();
        assert!(c[0] > c[1] && c[1] > c[2], "{c:?}");
    }
}
