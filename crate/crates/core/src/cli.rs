//! Command-line front end. Every run resolves a flat `key=value` configuration (defaults, then
//! an optional config file, then command-line flags), executes one evaluation or scan and
//! writes a CSV or JSON report that embeds the resolved configuration.
//!
//! Exit codes: 0 completed/PASS, 1 verdict FAIL, 2 configuration error, 3 resolution error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{
    bbm1_limit, kernel_equivalence_scan, lower_sobolev_grid, sharpness_scan,
    sobolev_interpolation_check, InterpolationTriple, Pair, SGrid, Target, Thresholds,
};
use crate::grid::{sample, GridSpec, TestFunction};
use crate::oracle::{hilbertian_exact, oracle_check_with, refine_check, GammaFn};
use crate::quadrature::QuadratureSpec;
use crate::report::{RatioReport, RatioRow, Verdict, CSV_MAGIC};
use crate::seminorms::{Seminorm, SeminormEngine, SeminormParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOLUTION: i32 = 3;

/// Relative change allowed by `validate` under one doubling of grid and node density.
pub const REFINEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "fracspace", version, about = "Fractional seminorm engine and scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one seminorm at one or more s
    Seminorm(RunArgs),
    /// Two-sided comparison scan over s
    Scan(RunArgs),
    /// Renormalized limit (1-s)^{1/q}[f]_E / ||grad f||_p
    Bbm(RunArgs),
    /// Interpolation constants over (v, s, sigma) triples
    Interp(RunArgs),
    /// Lower Sobolev constants over (Theta, s)
    Lower(RunArgs),
    /// Grid and quadrature refinement suite
    Validate(RunArgs),
    /// Gamma identities against brute-force quadrature
    OracleCheck,
}

#[derive(Debug, Args, Default)]
struct RunArgs {
    /// Flat key=value file; a CSV report is accepted too (its #config lines are read)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value override, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Test function: gaussian, modulated or bump
    #[arg(long = "fn")]
    function: Option<String>,
    /// Dimension (1 or 2)
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Grid half-width
    #[arg(long = "L")]
    half_width: Option<String>,
    /// Grid points per axis
    #[arg(long = "N")]
    points: Option<String>,
    /// Comma-separated smoothness values
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Admissibility threshold for W comparisons
    #[arg(long)]
    theta: Option<String>,
    /// Seminorm (W, E, F_cont, F_disc, F_disc_bandlimited, M); comma list for validate
    #[arg(long)]
    which: Option<String>,
    #[arg(long)]
    pair: Option<String>,
    /// E or W
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated Theta values
    #[arg(long = "Theta")]
    theta_big: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Triples as v:s:sigma, comma-separated
    #[arg(long)]
    triples: Option<String>,
    #[arg(long = "t_min", alias = "t-min")]
    t_min: Option<String>,
    #[arg(long = "t_max", alias = "t-max")]
    t_max: Option<String>,
    #[arg(long = "nodes_per_decade", alias = "nodes-per-decade")]
    nodes_per_decade: Option<String>,
    #[arg(long = "z_r_min", alias = "z-r-min")]
    z_r_min: Option<String>,
    #[arg(long = "z_r_max", alias = "z-r-max")]
    z_r_max: Option<String>,
    #[arg(long = "angular_nodes", alias = "angular-nodes")]
    angular_nodes: Option<String>,
    #[arg(long = "tail_rel_tol", alias = "tail-rel-tol")]
    tail_rel_tol: Option<String>,
    #[arg(long = "band_threshold", alias = "band-threshold")]
    band_threshold: Option<String>,
    #[arg(long = "kernel_band_threshold", alias = "kernel-band-threshold")]
    kernel_band_threshold: Option<String>,
    #[arg(long = "stabilization_tol", alias = "stabilization-tol")]
    stabilization_tol: Option<String>,
    #[arg(long = "uniformity_threshold", alias = "uniformity-threshold")]
    uniformity_threshold: Option<String>,
    #[arg(long = "growth_slope", alias = "growth-slope")]
    growth_slope: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Report path; the report goes to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("fn", &self.function),
            ("n", &self.n),
            ("a", &self.a),
            ("omega", &self.omega),
            ("radius", &self.radius),
            ("L", &self.half_width),
            ("N", &self.points),
            ("s", &self.s),
            ("p", &self.p),
            ("q", &self.q),
            ("theta", &self.theta),
            ("which", &self.which),
            ("pair", &self.pair),
            ("target", &self.target),
            ("Theta", &self.theta_big),
            ("gamma", &self.gamma),
            ("triples", &self.triples),
            ("t_min", &self.t_min),
            ("t_max", &self.t_max),
            ("nodes_per_decade", &self.nodes_per_decade),
            ("z_r_min", &self.z_r_min),
            ("z_r_max", &self.z_r_max),
            ("angular_nodes", &self.angular_nodes),
            ("tail_rel_tol", &self.tail_rel_tol),
            ("band_threshold", &self.band_threshold),
            ("kernel_band_threshold", &self.kernel_band_threshold),
            ("stabilization_tol", &self.stabilization_tol),
            ("uniformity_threshold", &self.uniformity_threshold),
            ("growth_slope", &self.growth_slope),
            ("format", &self.format),
        ]
    }
}

const COMMON_KEYS: &[&str] = &[
    "command",
    "fn",
    "n",
    "a",
    "omega",
    "radius",
    "L",
    "N",
    "p",
    "q",
    "t_min",
    "t_max",
    "nodes_per_decade",
    "z_r_min",
    "z_r_max",
    "angular_nodes",
    "tail_rel_tol",
    "format",
];

fn command_keys(command: &str) -> &'static [&'static str] {
    match command {
        "seminorm" => &["s", "which"],
        "scan" => &["s", "pair", "theta", "band_threshold", "kernel_band_threshold"],
        "bbm" => &["s", "stabilization_tol"],
        "interp" => &["target", "theta", "triples", "uniformity_threshold"],
        "lower" => &["s", "target", "Theta", "gamma", "uniformity_threshold", "growth_slope"],
        "validate" => &["s", "which"],
        _ => &[],
    }
}

/// Failure of a run, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(e) if e.is_resolution() => EXIT_RESOLUTION,
            CliError::Run(e) => match e.root() {
                Error::SymmetryCorruption { .. } | Error::MissingAnalytic(_) => EXIT_RESOLUTION,
                _ => EXIT_CONFIG,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `key=value` lines; `#` starts a comment. In a CSV report only `#config` lines count.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let is_report = text.lines().next() == Some(CSV_MAGIC);
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = if is_report {
            match raw.strip_prefix("#config ") {
                Some(rest) => rest,
                None => continue,
            }
        } else {
            raw.split('#').next().unwrap_or("")
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("line {}: key '{k}' given twice", i + 1));
        }
    }
    Ok(map)
}

/// Raw key/value pairs with typed accessors; every read key is recorded for the echo.
struct Config {
    command: &'static str,
    raw: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    fn new(command: &'static str, raw: BTreeMap<String, String>) -> CliResult<Self> {
        let allowed = command_keys(command);
        for key in raw.keys() {
            let known = COMMON_KEYS.contains(&key.as_str())
                || ["s", "which", "pair", "theta", "target", "Theta", "gamma", "triples"]
                    .contains(&key.as_str())
                || [
                    "band_threshold",
                    "kernel_band_threshold",
                    "stabilization_tol",
                    "uniformity_threshold",
                    "growth_slope",
                ]
                .contains(&key.as_str());
            if !known {
                return Err(config_err(format!("unknown key '{key}'")));
            }
            if !COMMON_KEYS.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
                return Err(config_err(format!("key '{key}' does not apply to '{command}'")));
            }
        }
        if let Some(c) = raw.get("command") {
            if c != command {
                return Err(config_err(format!(
                    "config was written for '{c}', not '{command}'"
                )));
            }
        }
        let mut resolved = BTreeMap::new();
        resolved.insert("command".to_string(), command.to_string());
        Ok(Config {
            command,
            raw,
            resolved,
        })
    }

    fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        let v = self.raw.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.resolved.insert(key.to_string(), v.clone());
        v
    }

    fn f64(&mut self, key: &str, default: f64) -> CliResult<f64> {
        match self.raw.get(key) {
            Some(v) => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| config_err(format!("{key}: '{v}' is not a number")))?;
                self.resolved.insert(key.to_string(), v.clone());
                Ok(x)
            }
            None => {
                self.resolved.insert(key.to_string(), format!("{default}"));
                Ok(default)
            }
        }
    }

    fn opt_f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        if self.has(key) {
            self.f64(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> CliResult<usize> {
        match self.raw.get(key) {
            Some(v) => {
                let x: usize = v
                    .parse()
                    .map_err(|_| config_err(format!("{key}: '{v}' is not a positive integer")))?;
                self.resolved.insert(key.to_string(), v.clone());
                Ok(x)
            }
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    fn list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        let Some(v) = self.raw.get(key).cloned() else {
            return Ok(None);
        };
        let values = v
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| config_err(format!("{key}: '{x}' is not a number")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        self.resolved.insert(key.to_string(), v);
        Ok(Some(values))
    }

    fn s_grid(&mut self, default: SGrid) -> CliResult<SGrid> {
        match self.list("s")? {
            Some(values) => SGrid::new(values).map_err(|e| config_err(e.to_string())),
            None => {
                self.resolved.insert("s".to_string(), join(default.values()));
                Ok(default)
            }
        }
    }

    fn format(&mut self) -> CliResult<Format> {
        match self.string("format", "csv").as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(config_err(format!("format must be csv or json, got '{other}'"))),
        }
    }

    fn function(&mut self) -> CliResult<TestFunction> {
        let n = self.usize("n", 1)?;
        let kind = self.string("fn", "gaussian");
        let tf = match kind.as_str() {
            "gaussian" => {
                self.reject(&["omega", "radius"], &kind)?;
                TestFunction::gaussian(self.f64("a", 1.0)?, n)
            }
            "modulated" => {
                self.reject(&["radius"], &kind)?;
                let a = self.f64("a", 1.0)?;
                TestFunction::modulated_gaussian(a, self.f64("omega", 4.0)?, n)
            }
            "bump" => {
                self.reject(&["a", "omega"], &kind)?;
                TestFunction::bump(self.f64("radius", 1.0)?, n)
            }
            other => {
                return Err(config_err(format!(
                    "fn must be gaussian, modulated or bump, got '{other}'"
                )))
            }
        };
        tf.map_err(|e| config_err(e.to_string()))
    }

    fn reject(&self, keys: &[&str], kind: &str) -> CliResult<()> {
        match keys.iter().find(|k| self.has(k)) {
            Some(k) => Err(config_err(format!("key '{k}' does not apply to fn={kind}"))),
            None => Ok(()),
        }
    }

    fn grid(&mut self, n: usize) -> CliResult<GridSpec> {
        let d = GridSpec::default_for(n).map_err(|e| config_err(e.to_string()))?;
        let l = self.f64("L", d.half_width())?;
        let pts = self.usize("N", d.points())?;
        GridSpec::new(n, l, pts).map_err(|e| config_err(e.to_string()))
    }

    fn quadrature(&mut self, grid: &GridSpec) -> CliResult<QuadratureSpec> {
        let d = QuadratureSpec::for_grid(grid);
        let q = QuadratureSpec {
            t_min: self.f64("t_min", d.t_min)?,
            t_max: self.f64("t_max", d.t_max)?,
            nodes_per_decade: self.usize("nodes_per_decade", d.nodes_per_decade)?,
            z_r_min: self.f64("z_r_min", d.z_r_min)?,
            z_r_max: self.f64("z_r_max", d.z_r_max)?,
            angular_nodes: self.usize("angular_nodes", d.angular_nodes)?,
            tail_rel_tol: self.f64("tail_rel_tol", d.tail_rel_tol)?,
        };
        q.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(q)
    }

    fn exponents(&mut self) -> CliResult<(f64, f64)> {
        let p = self.f64("p", 2.0)?;
        let q = self.f64("q", 2.0)?;
        SeminormParams::new(0.5, p, q).map_err(|e| config_err(e.to_string()))?;
        Ok((p, q))
    }

    fn target(&mut self) -> CliResult<Target> {
        self.string("target", "E")
            .parse()
            .map_err(|e: Error| config_err(e.to_string()))
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

struct Setup {
    engine: SeminormEngine,
    tf: TestFunction,
    grid: GridSpec,
    quad: QuadratureSpec,
    p: f64,
    q: f64,
    format: Format,
}

fn setup(cfg: &mut Config) -> CliResult<Setup> {
    let tf = cfg.function()?;
    let grid = cfg.grid(tf.dim)?;
    let quad = cfg.quadrature(&grid)?;
    let (p, q) = cfg.exponents()?;
    let format = cfg.format()?;
    let f = sample(&tf, &grid)?;
    let engine = SeminormEngine::new(f, quad)?;
    Ok(Setup {
        engine,
        tf,
        grid,
        quad,
        p,
        q,
        format,
    })
}

fn thresholds(cfg: &mut Config) -> CliResult<Thresholds> {
    let d = Thresholds::default();
    let mut t = d;
    let allowed = command_keys(cfg.command);
    if allowed.contains(&"band_threshold") {
        t.cross_family = cfg.f64("band_threshold", d.cross_family)?;
    }
    if allowed.contains(&"kernel_band_threshold") {
        t.same_family = cfg.f64("kernel_band_threshold", d.same_family)?;
    }
    if allowed.contains(&"stabilization_tol") {
        t.stabilization = cfg.f64("stabilization_tol", d.stabilization)?;
    }
    if allowed.contains(&"uniformity_threshold") {
        t.uniformity = cfg.f64("uniformity_threshold", d.uniformity)?;
    }
    if allowed.contains(&"growth_slope") {
        t.growth_slope = cfg.f64("growth_slope", d.growth_slope)?;
    }
    Ok(t)
}

fn parse_triples(text: &str) -> CliResult<Vec<InterpolationTriple>> {
    text.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(config_err(format!("triple '{item}' must be v:s:sigma")));
            }
            let nums = parts
                .iter()
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| config_err(format!("triple '{item}': '{x}' is not a number")))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            InterpolationTriple::new(nums[0], nums[1], nums[2])
                .map_err(|e| config_err(e.to_string()))
        })
        .collect()
}

fn format_triples(triples: &[InterpolationTriple]) -> String {
    triples
        .iter()
        .map(|t| format!("{}:{}:{}", t.v, t.s, t.sigma))
        .collect::<Vec<_>>()
        .join(",")
}

fn run_seminorm(cfg: &mut Config) -> CliResult<(RatioReport, Format)> {
    let st = setup(cfg)?;
    let which: Seminorm = cfg
        .string("which", "E")
        .parse()
        .map_err(|e: Error| config_err(e.to_string()))?;
    let grid = cfg.s_grid(SGrid::new(vec![0.5])?)?;
    let hilbertian = st.p == 2.0 && st.q == 2.0;
    let mut rows = Vec::new();
    let mut oracle_used = true;
    for &s in grid.values() {
        let par = SeminormParams::new(s, st.p, st.q)?;
        let v = st.engine.evaluate(which, &par)?;
        let exact = if hilbertian {
            hilbertian_exact(&st.tf, s, which).ok()
        } else {
            None
        };
        oracle_used &= exact.is_some();
        let rhs = exact.unwrap_or(1.0);
        rows.push(RatioRow::new(s, v.value, rhs, v.tail_lo.max(v.tail_hi), 0.0));
    }
    if !oracle_used {
        for r in &mut rows {
            r.rhs = 1.0;
            r.ratio = r.lhs;
        }
    }
    let mut report = RatioReport::new(
        format!("seminorm:{}", which.label()),
        st.tf.label(),
        st.p,
        st.q,
        rows,
        [0.0, 1.0],
    )?;
    report.note("rhs", if oracle_used { "oracle" } else { "1" });
    report.note("seminorm", which.label());
    Ok((report, st.format))
}

fn run_scan(cfg: &mut Config) -> CliResult<(RatioReport, Format)> {
    let st = setup(cfg)?;
    let pair: Pair = cfg
        .string("pair", "E_vs_F")
        .parse()
        .map_err(|e: Error| config_err(e.to_string()))?;
    let default_grid = if pair == Pair::PtKernels {
        SGrid::kernel_default()
    } else {
        SGrid::default()
    };
    let grid = cfg.s_grid(default_grid)?;
    let theta = if pair.uses_w() {
        Some(cfg.f64("theta", 0.4)?)
    } else {
        cfg.opt_f64("theta")?
    };
    let th = thresholds(cfg)?;
    let report = if pair == Pair::PtKernels {
        kernel_equivalence_scan(&st.engine, st.p, st.q, &grid, &th)?
    } else {
        sharpness_scan(&st.engine, st.p, st.q, theta, &grid, pair, &th)?
    };
    Ok((report, st.format))
}

fn run_bbm(cfg: &mut Config) -> CliResult<(RatioReport, Format)> {
    let st = setup(cfg)?;
    let grid = cfg.s_grid(SGrid::default())?;
    let th = thresholds(cfg)?;
    Ok((bbm1_limit(&st.engine, st.p, st.q, &grid, &th)?, st.format))
}

fn run_interp(cfg: &mut Config) -> CliResult<(RatioReport, Format)> {
    let st = setup(cfg)?;
    let target = cfg.target()?;
    let triples = match cfg.raw.get("triples").cloned() {
        Some(t) => parse_triples(&t)?,
        None => InterpolationTriple::default_grid(),
    };
    cfg.resolved
        .insert("triples".to_string(), format_triples(&triples));
    let theta = if target == Target::W {
        Some(cfg.f64("theta", 0.4)?)
    } else {
        cfg.opt_f64("theta")?
    };
    let th = thresholds(cfg)?;
    let report =
        sobolev_interpolation_check(&st.engine, st.p, st.q, theta, &triples, target, &th)?;
    Ok((report, st.format))
}

fn run_lower(cfg: &mut Config) -> CliResult<(RatioReport, Format)> {
    let st = setup(cfg)?;
    let target = cfg.target()?;
    let thetas = match cfg.list("Theta")? {
        Some(v) => v,
        None => {
            let d = vec![1.5, 2.0, 4.0];
            cfg.resolved.insert("Theta".to_string(), join(&d));
            d
        }
    };
    let gamma = if target == Target::W {
        Some(cfg.f64("gamma", 2.0)?)
    } else {
        cfg.opt_f64("gamma")?
    };
    let grid = match cfg.list("s")? {
        Some(v) => Some(SGrid::new(v).map_err(|e| config_err(e.to_string()))?),
        None => None,
    };
    let th = thresholds(cfg)?;
    let report = lower_sobolev_grid(
        &st.engine,
        st.p,
        st.q,
        &thetas,
        gamma,
        target,
        grid.as_ref(),
        &th,
    )?;
    Ok((report, st.format))
}

fn run_validate(cfg: &mut Config) -> CliResult<(RatioReport, Format)> {
    let st = setup(cfg)?;
    let which_text = cfg.string("which", "W,E,F_cont,F_disc,M");
    let which: Vec<Seminorm> = which_text
        .split(',')
        .map(|w| w.trim().parse().map_err(|e: Error| config_err(e.to_string())))
        .collect::<CliResult<_>>()?;
    let grid = cfg.s_grid(SGrid::new(vec![0.5])?)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut deltas = Vec::new();
    let mut all_ok = true;
    for &s in grid.values() {
        let par = SeminormParams::new(s, st.p, st.q)?;
        for w in &which {
            let conv = refine_check(&st.grid, &st.quad, 1, |g, q| {
                let f = sample(&st.tf, g)?;
                Ok(SeminormEngine::new(f, *q)?.evaluate(*w, &par)?.value)
            });
            if let Some(e) = conv.error {
                return Err(CliError::Run(Error::Resolution(format!(
                    "{} at s={s}: {e}",
                    w.label()
                ))));
            }
            let delta = conv.deltas[0];
            all_ok &= delta < REFINEMENT_TOL;
            rows.push(RatioRow::new(s, conv.values[0], conv.values[1], 0.0, 0.0));
            labels.push(w.label());
            deltas.push(delta);
        }
    }
    let mut report = RatioReport::new("validate", st.tf.label(), st.p, st.q, rows, [0.0, 1.0])?;
    report.verdict = Verdict::from_bool(all_ok);
    report.note("row_seminorms", serde_json::json!(labels));
    report.note("relative_deltas", serde_json::json!(deltas));
    report.note("lhs", "value at the configured grid and quadrature");
    report.note("rhs", "value after doubling N and nodes_per_decade");
    report.note("tolerance", REFINEMENT_TOL);
    Ok((report, st.format))
}

fn emit(
    mut report: RatioReport,
    format: Format,
    cfg: Config,
    out_path: Option<&PathBuf>,
    out: &mut dyn Write,
) -> CliResult<i32> {
    report.config = cfg.resolved;
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json_string(),
    };
    match out_path {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
            let _ = writeln!(
                out,
                "{} {}: {} rows, band {:.6}, verdict {}",
                report.kind,
                report.function,
                report.rows.len(),
                report.summary.band,
                report.verdict
            );
            if report.kind.starts_with("seminorm") {
                for r in &report.rows {
                    let _ = writeln!(out, "s={} value={:.16e}", r.s, r.lhs);
                }
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(if report.verdict.is_pass() {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

fn load(command: &'static str, args: &RunArgs) -> CliResult<Config> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        None => BTreeMap::new(),
    };
    for item in &args.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| config_err(format!("--set expects key=value, got '{item}'")))?;
        raw.insert(k.trim().to_string(), v.trim().to_string());
    }
    for (k, v) in args.flags() {
        if let Some(v) = v {
            raw.insert(k.to_string(), v.clone());
        }
    }
    Config::new(command, raw)
}

/// Runs the oracle self-check with the given Gamma implementation.
pub fn oracle_check_exit(gamma: GammaFn, out: &mut dyn Write) -> i32 {
    let report = oracle_check_with(gamma);
    let _ = write!(out, "{report}");
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("FRACSPACE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| config_err(format!("FRACSPACE_THREADS must be a positive integer, got '{v}'")))?;
        // a pool built earlier in the process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "{e}");
        return e.exit_code();
    }
    let (name, args, runner): (
        &'static str,
        &RunArgs,
        fn(&mut Config) -> CliResult<(RatioReport, Format)>,
    ) = match &cli.command {
        Command::Seminorm(a) => ("seminorm", a, run_seminorm),
        Command::Scan(a) => ("scan", a, run_scan),
        Command::Bbm(a) => ("bbm", a, run_bbm),
        Command::Interp(a) => ("interp", a, run_interp),
        Command::Lower(a) => ("lower", a, run_lower),
        Command::Validate(a) => ("validate", a, run_validate),
        Command::OracleCheck => return oracle_check_exit(crate::oracle::gamma, out),
    };
    let result = load(name, args).and_then(|mut cfg| {
        let (report, format) = runner(&mut cfg)?;
        emit(report, format, cfg, args.out.as_ref(), out)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
