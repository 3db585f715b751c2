//! The seminorm functionals: Gagliardo `W`, harmonic extension `E`, its mixed square-function
//! form `M`, and the discrete and continuous Triebel-Lizorkin seminorms.
//!
//! The `t`-integrals share one set of Poisson fields `∂_t^m P_{t_i} ∗ f` per log-spaced node;
//! on each, the `[0, t_min]` piece is integrated against a polynomial model anchored at the
//! `t → 0` limit field and `[t_max, ∞)` against the power-law decay of the field.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_open, Error, Result};
use crate::grid::{PointEval, SampledFunction};
use crate::quadrature::{for_each_uniform_node, log_panel_nodes, LogGrid, QuadratureSpec};
use crate::spectral::{
    bandlimited_symbol, half_directions, level_scale, ray_box, resolvable_levels, Kernel,
    Spectrum,
};

/// Byte budget for keeping every `t`-field of one derivative order in memory.
const FIELD_CACHE_BYTES: usize = 256 << 20;

/// Relative size of the omitted Littlewood-Paley levels above which a level range is rejected.
pub const LEVEL_TAIL_TOL: f64 = 1e-3;

/// Far-field cut for the Gagliardo outer integral, in units of the near-window half-width.
const FAR_FIELD_DECADES: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub theta: Option<f64>,
}

impl SeminormParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        check_open("s", s, 0.0, 1.0)?;
        check_open("p", p, 1.0, f64::INFINITY)?;
        check_open("q", q, 1.0, f64::INFINITY)?;
        Ok(SeminormParams { s, p, q, theta: None })
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        check_open("theta", theta, 0.0, 1.0)?;
        self.theta = Some(theta);
        Ok(self)
    }

    /// Same exponents at another smoothness.
    pub fn at(&self, s: f64) -> Result<Self> {
        let mut out = SeminormParams::new(s, self.p, self.q)?;
        out.theta = self.theta;
        Ok(out)
    }

    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn q_conjugate(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    /// `p > nq/(n + θq)`; `None` when no θ is configured.
    pub fn admissible_w(&self, n: usize) -> Option<bool> {
        self.theta.map(|t| admissible(n as f64, self.p, self.q, t))
    }

    /// `p' > nq'/(n + θq')`
    pub fn admissible_dual(&self, n: usize) -> Option<bool> {
        self.theta
            .map(|t| admissible(n as f64, self.p_conjugate(), self.q_conjugate(), t))
    }
}

fn admissible(n: f64, p: f64, q: f64, theta: f64) -> bool {
    p > n * q / (n + theta * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Seminorm {
    /// Gagliardo `[f]_{W^s_{p,q}}`
    W,
    /// Harmonic extension `[f]_{E^s_{p,q}}`
    E,
    /// Continuous Triebel-Lizorkin form with `∂²_t P_t`
    FCont,
    /// Dyadic Triebel-Lizorkin sum over the resolvable levels
    FDisc(Kernel),
    /// Mixed square-function form of `E`
    M,
}

impl Seminorm {
    pub fn label(&self) -> &'static str {
        match self {
            Seminorm::W => "W",
            Seminorm::E => "E",
            Seminorm::FCont => "F_cont",
            Seminorm::FDisc(Kernel::Poisson) => "F_disc_poisson",
            Seminorm::FDisc(Kernel::Bandlimited) => "F_disc_bandlimited",
            Seminorm::M => "M",
        }
    }
}

impl FromStr for Seminorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "w" | "gagliardo" => Ok(Seminorm::W),
            "e" | "extension" => Ok(Seminorm::E),
            "f" | "f_cont" | "fcont" | "triebel_continuous" => Ok(Seminorm::FCont),
            "f_disc" | "f_disc_poisson" | "triebel_discrete" => {
                Ok(Seminorm::FDisc(Kernel::Poisson))
            }
            "f_disc_bandlimited" => Ok(Seminorm::FDisc(Kernel::Bandlimited)),
            "m" | "m_form" | "mixed" => Ok(Seminorm::M),
            other => Err(Error::param(format!(
                "unknown seminorm '{other}' (expected W, E, F_cont, F_disc, F_disc_bandlimited or M)"
            ))),
        }
    }
}

/// A seminorm value with relative error estimates for the modeled small-scale and
/// large-scale pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormValue {
    pub value: f64,
    pub tail_lo: f64,
    pub tail_hi: f64,
}

impl SeminormValue {
    fn zero() -> Self {
        SeminormValue {
            value: 0.0,
            tail_lo: 0.0,
            tail_hi: 0.0,
        }
    }
}

#[inline]
fn powq(v: f64, q: f64) -> f64 {
    if q == 2.0 {
        v * v
    } else {
        v.abs().powf(q)
    }
}

/// Weights `λ_k` with `Σ λ_k P(u_k) = ∫_0^1 u^{α-1} P(u) du` for every polynomial of degree
/// below `nodes.len()`.
fn moment_weights(nodes: &[f64], alpha: f64) -> Vec<f64> {
    let d = nodes.len();
    // rows i: Σ_k u_k^i λ_k = 1/(α + i)
    let mut a: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut row: Vec<f64> = nodes.iter().map(|u| u.powi(i as i32)).collect();
            row.push(1.0 / (alpha + i as f64));
            row
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        for row in 0..d {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=d {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d] / a[i][i]).collect()
}

/// `∫_0^{t0} t^{α-1} Q(t) dt` from `Q(0)` and the first three node values, by cubic and
/// quadratic models: returns the cubic value and the model discrepancy.
struct LowerTail {
    cubic: Vec<f64>,
    quadratic: Vec<f64>,
}

impl LowerTail {
    fn new(t: &[f64], alpha: f64) -> Self {
        let t0 = t[0];
        let u = [0.0, 1.0, t[1] / t0, t[2] / t0];
        let scale = t0.powf(alpha);
        let cubic = moment_weights(&u, alpha).into_iter().map(|w| w * scale).collect();
        let quadratic = moment_weights(&u[..3], alpha)
            .into_iter()
            .map(|w| w * scale)
            .collect();
        LowerTail { cubic, quadratic }
    }

    fn eval(&self, q: [f64; 4]) -> (f64, f64) {
        let c: f64 = self.cubic.iter().zip(&q).map(|(w, v)| w * v).sum();
        let l: f64 = self.quadratic.iter().zip(&q).map(|(w, v)| w * v).sum();
        (c, (c - l).abs())
    }
}

/// Per-point inner integrals plus absolute error estimates.
struct Inner {
    values: Vec<f64>,
    est_lo: Vec<f64>,
    est_hi: Vec<f64>,
}

impl Inner {
    /// `([∫ inner^{p/q}]^{1/p}`, linearized relative effect of each estimate).
    fn outer(&self, weight: f64, p: f64, q: f64) -> SeminormValue {
        let r = p / q;
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut hi = 0.0;
        for ((v, a), b) in self.values.iter().zip(&self.est_lo).zip(&self.est_hi) {
            let v = v.max(0.0);
            if v > 0.0 {
                let pw = v.powf(r);
                total += pw;
                lo += pw / v * a;
                hi += pw / v * b;
            }
        }
        let value = (weight * total).powf(1.0 / p);
        let rel = |e: f64| if total > 0.0 { e / (q * total) } else { 0.0 };
        SeminormValue {
            value,
            tail_lo: rel(lo),
            tail_hi: rel(hi),
        }
    }
}

/// Evaluates every seminorm of one function, sharing Poisson fields between calls.
pub struct SeminormEngine {
    f: SampledFunction,
    quad: QuadratureSpec,
    t: LogGrid,
    spectrum: OnceLock<Spectrum>,
    fields: [OnceLock<Option<Vec<Vec<f64>>>>; 2],
    limits: [OnceLock<Vec<f64>>; 2],
    /// Littlewood-Paley blocks over the resolvable band, per kernel.
    blocks: [OnceLock<Option<Vec<Vec<f64>>>>; 2],
}

impl SeminormEngine {
    pub fn new(f: SampledFunction, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let t = quad.t_grid();
        if t.len() < 4 {
            return Err(Error::param("t-grid needs at least four nodes"));
        }
        Ok(SeminormEngine {
            f,
            quad,
            t,
            spectrum: OnceLock::new(),
            fields: [OnceLock::new(), OnceLock::new()],
            limits: [OnceLock::new(), OnceLock::new()],
            blocks: [OnceLock::new(), OnceLock::new()],
        })
    }

    /// Engine with the grid-tied default quadrature.
    pub fn with_defaults(f: SampledFunction) -> Result<Self> {
        let quad = QuadratureSpec::for_grid(&f.spec);
        Self::new(f, quad)
    }

    pub fn function(&self) -> &SampledFunction {
        &self.f
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| Spectrum::new(&self.f))
    }

    /// `∂_t^m` symbol `(-2π|ξ|)^m e^{-2πt|ξ|}`
    fn dt_symbol(m: u32, t: f64) -> impl Fn(f64) -> f64 {
        move |r| (-2.0 * PI * r).powi(m as i32) * (-2.0 * PI * t * r).exp()
    }

    /// `lim_{t→0} ∂_t^m P_t ∗ f`
    fn limit_field(&self, m: u32) -> &[f64] {
        self.limits[m as usize - 1].get_or_init(|| {
            self.spectrum()
                .apply_radial(move |r| (-2.0 * PI * r).powi(m as i32))
        })
    }

    fn cached_fields(&self, m: u32) -> Option<&Vec<Vec<f64>>> {
        self.fields[m as usize - 1]
            .get_or_init(|| {
                let bytes = self.t.len() * self.f.values.len() * 8;
                if bytes > FIELD_CACHE_BYTES {
                    return None;
                }
                let spectrum = self.spectrum();
                let nodes = &self.t.nodes;
                let pairs: Vec<(Vec<f64>, Vec<f64>)> = nodes
                    .par_chunks(2)
                    .map(|chunk| {
                        let a = Self::dt_symbol(m, chunk[0]);
                        match chunk.get(1) {
                            Some(&tb) => spectrum.apply_radial_pair(a, Self::dt_symbol(m, tb)),
                            None => (spectrum.apply_radial(a), Vec::new()),
                        }
                    })
                    .collect();
                let mut out = Vec::with_capacity(nodes.len());
                for (a, b) in pairs {
                    out.push(a);
                    if !b.is_empty() {
                        out.push(b);
                    }
                }
                Some(out)
            })
            .as_ref()
    }

    /// Visits `(i, field_i)` over the `t`-grid in ascending (or descending) order.
    fn visit_fields(&self, m: u32, descending: bool, mut visit: impl FnMut(usize, &[f64])) {
        let count = self.t.len();
        let order: Vec<usize> = if descending {
            (0..count).rev().collect()
        } else {
            (0..count).collect()
        };
        if let Some(cache) = self.cached_fields(m) {
            for i in order {
                visit(i, &cache[i]);
            }
            return;
        }
        let spectrum = self.spectrum();
        for pair in order.chunks(2) {
            let a = Self::dt_symbol(m, self.t.nodes[pair[0]]);
            match pair.get(1) {
                Some(&ib) => {
                    let (fa, fb) =
                        spectrum.apply_radial_pair(a, Self::dt_symbol(m, self.t.nodes[ib]));
                    visit(pair[0], &fa);
                    visit(ib, &fb);
                }
                None => visit(pair[0], &spectrum.apply_radial(a)),
            }
        }
    }

    /// `∫_0^∞ t^{α-1} |∂_t^m P_t ∗ f(x)|^q dt` at every grid point; `decay` is the large-`t`
    /// exponent of `|∂_t^m P_t ∗ f|^q`.
    fn power_t_integral(&self, m: u32, alpha: f64, q: f64) -> Inner {
        let n = self.f.dim() as f64;
        let decay = q * (n + m as f64);
        let len = self.f.values.len();
        let t = &self.t;
        let last = t.len() - 1;
        let mut acc = vec![0.0; len];
        let mut head: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut top = Vec::new();
        self.visit_fields(m, false, |i, field| {
            let c = t.weights[i] * t.nodes[i].powf(alpha);
            acc.par_iter_mut()
                .zip(field.par_iter())
                .for_each(|(a, g)| *a += c * powq(*g, q));
            if i < 3 {
                head[i] = field.iter().map(|g| powq(*g, q)).collect();
            }
            if i == last {
                top = field.iter().map(|g| powq(*g, q)).collect();
            }
        });
        let lower = LowerTail::new(&t.nodes, alpha);
        let limit = self.limit_field(m);
        let t_max = t.nodes[last];
        let upper_coeff = t_max.powf(alpha) / (decay - alpha);
        let mut est_lo = vec![0.0; len];
        let mut est_hi = vec![0.0; len];
        for x in 0..len {
            let (v, e) = lower.eval([powq(limit[x], q), head[0][x], head[1][x], head[2][x]]);
            let up = top[x] * upper_coeff;
            acc[x] += v + up;
            est_lo[x] = e;
            est_hi[x] = up;
        }
        Inner {
            values: acc,
            est_lo,
            est_hi,
        }
    }

    fn check_tails(&self, v: SeminormValue, what: &str) -> Result<SeminormValue> {
        let tol = self.quad.tail_rel_tol;
        if v.tail_lo > tol || v.tail_hi > tol {
            return Err(Error::Resolution(format!(
                "{what}: tail estimates (small scale {:.2e}, large scale {:.2e}) exceed {tol:.1e}",
                v.tail_lo, v.tail_hi
            )));
        }
        Ok(v)
    }

    pub fn evaluate(&self, which: Seminorm, params: &SeminormParams) -> Result<SeminormValue> {
        match which {
            Seminorm::W => self.gagliardo(params),
            Seminorm::E => self.extension(params),
            Seminorm::FCont => self.triebel_continuous(params),
            Seminorm::FDisc(kernel) => self.triebel_discrete(params, None, kernel),
            Seminorm::M => self.mixed_form(params),
        }
    }

    /// `[f]_{E^s_{p,q}}`: inner integral `∫ t^{q(1-s)-1} |∂_t P_t ∗ f|^q dt`.
    pub fn extension(&self, params: &SeminormParams) -> Result<SeminormValue> {
        if self.f.is_zero() {
            return Ok(SeminormValue::zero());
        }
        let alpha = params.q * (1.0 - params.s);
        let inner = self.power_t_integral(1, alpha, params.q);
        let v = inner.outer(self.f.spec.cell_volume(), params.p, params.q);
        self.check_tails(v, "extension seminorm")
    }

    /// `[f]_{F^s_{p,q}}` through `∫ t^{q(2-s)} |∂²_t P_t ∗ f|^q dt/t`.
    pub fn triebel_continuous(&self, params: &SeminormParams) -> Result<SeminormValue> {
        if self.f.is_zero() {
            return Ok(SeminormValue::zero());
        }
        let alpha = params.q * (2.0 - params.s);
        let inner = self.power_t_integral(2, alpha, params.q);
        let v = inner.outer(self.f.spec.cell_volume(), params.p, params.q);
        self.check_tails(v, "continuous Triebel-Lizorkin seminorm")
    }

    /// Mixed form: `∫ r^{q(1-s)-1} [∫_r^∞ t |∂²_t P_t ∗ f|² dt]^{q/2} dr`.
    pub fn mixed_form(&self, params: &SeminormParams) -> Result<SeminormValue> {
        if self.f.is_zero() {
            return Ok(SeminormValue::zero());
        }
        let n = self.f.dim() as f64;
        let q = params.q;
        let alpha = q * (1.0 - params.s);
        let len = self.f.values.len();
        let t = &self.t;
        let last = t.len() - 1;
        let du = t.step;
        let mut cumulative = vec![0.0; len];
        let mut prev = vec![0.0; len];
        let mut acc = vec![0.0; len];
        let mut head: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut first_field = Vec::new();
        let mut top_tail = vec![0.0; len];
        // |∂²_t P_t ∗ f|² ~ t^{-2(n+2)}: ∫_T^∞ t·t^{-2(n+2)} dt scale
        let top_factor = 1.0 / (2.0 * (n + 2.0) - 2.0);
        self.visit_fields(2, true, |i, field| {
            let ti = t.nodes[i];
            if i == last {
                for x in 0..len {
                    let g = ti * ti * field[x] * field[x];
                    cumulative[x] = g * top_factor;
                    top_tail[x] = cumulative[x];
                    prev[x] = g;
                }
            } else {
                for x in 0..len {
                    let g = ti * ti * field[x] * field[x];
                    cumulative[x] += 0.5 * du * (g + prev[x]);
                    prev[x] = g;
                }
            }
            let c = t.weights[i] * ti.powf(alpha);
            for x in 0..len {
                acc[x] += c * cumulative[x].powf(0.5 * q);
            }
            if i < 3 {
                head[i] = cumulative.iter().map(|v| v.powf(0.5 * q)).collect();
            }
            if i == 0 {
                first_field = field.to_vec();
            }
        });
        let limit = self.limit_field(2);
        let lower = LowerTail::new(&t.nodes, alpha);
        let t0 = t.nodes[0];
        let t_max = t.nodes[last];
        // T(r) ~ r^{-2(n+1)}, so T^{q/2} ~ r^{-q(n+1)}
        let upper_coeff = t_max.powf(alpha) / (q * (n + 1.0) - alpha);
        let mut est_lo = vec![0.0; len];
        let mut est_hi = vec![0.0; len];
        for x in 0..len {
            // ∫_0^{t0} t (G0 + δ t/t0)² dt with the field linear between its limit and t0
            let g0 = limit[x];
            let d = first_field[x] - g0;
            let extra = t0 * t0 * (0.5 * g0 * g0 + 2.0 * g0 * d / 3.0 + 0.25 * d * d);
            let at_zero = (head[0][x].powf(2.0 / q) + extra).powf(0.5 * q);
            let (v, e) = lower.eval([at_zero, head[0][x], head[1][x], head[2][x]]);
            let top = top_tail[x].powf(0.5 * q);
            let up = top * upper_coeff;
            acc[x] += v + up;
            est_lo[x] = e;
            est_hi[x] = up;
        }
        let inner = Inner {
            values: acc,
            est_lo,
            est_hi,
        };
        let v = inner.outer(self.f.spec.cell_volume(), params.p, q);
        self.check_tails(v, "mixed-form seminorm")
    }

    fn level_field(&self, j: i32, kernel: Kernel) -> Vec<f64> {
        let spectrum = self.spectrum();
        match kernel {
            Kernel::Poisson => {
                let a = level_scale(j);
                spectrum.apply_radial(move |r| {
                    let u = a * r;
                    u * u * (-2.0 * PI * u).exp()
                })
            }
            Kernel::Bandlimited => spectrum.apply_radial(move |r| bandlimited_symbol(j, r)),
        }
    }

    fn cached_blocks(&self, kernel: Kernel) -> Option<&Vec<Vec<f64>>> {
        let slot = match kernel {
            Kernel::Poisson => 0,
            Kernel::Bandlimited => 1,
        };
        self.blocks[slot]
            .get_or_init(|| {
                let (lo, hi) = resolvable_levels(&self.f.spec);
                let bytes = (hi - lo + 1) as usize * self.f.values.len() * 8;
                if bytes > FIELD_CACHE_BYTES {
                    return None;
                }
                Some(
                    (lo..=hi)
                        .into_par_iter()
                        .map(|j| self.level_field(j, kernel))
                        .collect(),
                )
            })
            .as_ref()
    }

    /// `(∫ (Σ_j |2^{js} Δ_j f|^q)^{p/q} dx)^{1/p}` over `levels` (default: every resolvable
    /// level). `tail_lo`/`tail_hi` carry geometric estimates of the omitted coarse/fine levels.
    pub fn triebel_discrete(
        &self,
        params: &SeminormParams,
        levels: Option<(i32, i32)>,
        kernel: Kernel,
    ) -> Result<SeminormValue> {
        let v = self.triebel_discrete_raw(params, levels, kernel)?;
        if v.tail_lo > LEVEL_TAIL_TOL || v.tail_hi > LEVEL_TAIL_TOL {
            let (lo, hi) = levels.unwrap_or_else(|| resolvable_levels(&self.f.spec));
            return Err(Error::Resolution(format!(
                "level range [{lo}, {hi}] too narrow: omitted levels estimated at {:.2e} (coarse) and {:.2e} (fine) of the value",
                v.tail_lo, v.tail_hi
            )));
        }
        Ok(v)
    }

    /// As [`Self::triebel_discrete`] without the omitted-level tolerance check.
    pub fn triebel_discrete_raw(
        &self,
        params: &SeminormParams,
        levels: Option<(i32, i32)>,
        kernel: Kernel,
    ) -> Result<SeminormValue> {
        let (band_lo, band_hi) = resolvable_levels(&self.f.spec);
        let (lo, hi) = levels.unwrap_or((band_lo, band_hi));
        if lo > hi || lo < band_lo || hi > band_hi {
            return Err(Error::param(format!(
                "level range [{lo}, {hi}] must lie inside the resolvable band [{band_lo}, {band_hi}]"
            )));
        }
        if self.f.is_zero() {
            return Ok(SeminormValue::zero());
        }
        let (s, p, q) = (params.s, params.p, params.q);
        let mut sum = vec![0.0; self.f.values.len()];
        let mut level_mass = Vec::with_capacity((hi - lo + 1) as usize);
        let mut add = |j: i32, field: &[f64]| {
            let w = 2f64.powf(j as f64 * s * q);
            let mut mass = 0.0;
            for (acc, b) in sum.iter_mut().zip(field) {
                let v = w * powq(*b, q);
                *acc += v;
                mass += v;
            }
            level_mass.push(mass);
        };
        match self.cached_blocks(kernel) {
            Some(blocks) => {
                for j in lo..=hi {
                    add(j, &blocks[(j - band_lo) as usize]);
                }
            }
            None => {
                for j in lo..=hi {
                    add(j, &self.level_field(j, kernel));
                }
            }
        }
        let total: f64 = level_mass.iter().sum();
        let geometric = |edge: f64, next: f64| -> f64 {
            if edge == 0.0 {
                return 0.0;
            }
            let ratio = edge / next;
            if ratio < 1.0 {
                edge * ratio / (1.0 - ratio)
            } else {
                f64::INFINITY
            }
        };
        let k = level_mass.len();
        let (tail_lo, tail_hi) = if k >= 2 && total > 0.0 {
            (
                geometric(level_mass[0], level_mass[1]) / (q * total),
                geometric(level_mass[k - 1], level_mass[k - 2]) / (q * total),
            )
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let integral: f64 = sum.iter().map(|v| v.powf(p / q)).sum();
        let value = (self.f.spec.cell_volume() * integral).powf(1.0 / p);
        Ok(SeminormValue {
            value,
            tail_lo,
            tail_hi,
        })
    }

    /// `[f]_{W^s_{p,q}}` with the `z`-integral in polar form around each `x`.
    pub fn gagliardo(&self, params: &SeminormParams) -> Result<SeminormValue> {
        if self.f.is_zero() {
            return Ok(SeminormValue::zero());
        }
        let (s, p, q) = (params.s, params.p, params.q);
        let f = &self.f;
        let n = f.dim();
        let nf = n as f64;
        let beta = nf + s * q;
        let far_exponent = beta * p / q;
        if far_exponent <= nf {
            return Err(Error::Inadmissible(format!(
                "W seminorm diverges at spatial infinity: need p > nq/(n+sq) = {}, got p = {p}",
                nf * q / beta
            )));
        }
        let eval = f.evaluator();
        let eval: &dyn PointEval = eval.as_ref();
        let spec = f.spec;
        let h = spec.spacing();
        let rule = self.quad.radial_rule(h);
        let sq = s * q;
        let alpha = q * (1.0 - s);
        let r0 = rule.inner;
        let (center, radius) = eval.support();

        let half = half_directions(n, self.quad.angular_nodes);
        let w_dir = if n == 1 {
            1.0
        } else {
            2.0 * PI / self.quad.angular_nodes as f64
        };
        let log_nodes: Vec<(f64, f64)> = rule
            .log_nodes
            .iter()
            .map(|&(r, w)| (r, w * r.powf(-1.0 - sq)))
            .collect();
        let switch_pow = rule.switch.powf(-sq) / sq;

        let inner_at = |x: [f64; 2]| -> (f64, f64) {
            let fx = eval.value(&x);
            let mut g = [0.0; 2];
            eval.gradient(&x, &mut g);
            let fxq = powq(fx, q);
            let mut total = 0.0;
            let mut est = 0.0;
            for dir in &half {
                let diff = |r: f64, sign: f64| {
                    let y = [x[0] + sign * r * dir[0], x[1] + sign * r * dir[1]];
                    powq(eval.value(&y) - fx, q)
                };
                let slope = powq(g[0] * dir[0] + g[1] * dir[1], q);
                let taylor = 2.0 * slope * r0.powf(alpha) / alpha;
                let at_r0 = diff(r0, 1.0) + diff(r0, -1.0);
                let corr = (at_r0 - 2.0 * slope * r0.powf(q)) * r0.powf(-sq) / (alpha + 2.0);
                let mut j = taylor + corr;
                // relative model error, capped at the correction itself where f is negligible
                est += corr * corr / taylor.max(corr.abs()).max(f64::MIN_POSITIVE);
                for &(r, w) in &log_nodes {
                    j += w * (diff(r, 1.0) + diff(r, -1.0));
                }
                for sign in [1.0, -1.0] {
                    let d = [sign * dir[0], sign * dir[1]];
                    j += fxq * switch_pow;
                    if let Some((a, b)) = ray_box(&x, &d, &center, radius, n) {
                        let a = a.max(rule.switch);
                        if b > a {
                            j -= fxq * (a.powf(-sq) - b.powf(-sq)) / sq;
                            for_each_uniform_node(a, b, rule.uniform_width, |r, w| {
                                j += w * diff(r, sign) * r.powf(-1.0 - sq);
                            });
                        }
                    }
                }
                total += w_dir * j;
            }
            (total, w_dir * est)
        };

        // near window: grid points within K cells of the support center, trapezoid weights
        let k = (radius / h).ceil() as isize + 8;
        let c_idx: Vec<isize> = (0..n).map(|i| spec.nearest_index(center[i])).collect();
        let grid_center: Vec<f64> = c_idx.iter().map(|&c| spec.coordinate(0) + c as f64 * h).collect();
        let side = (2 * k + 1) as usize;
        let count = side.pow(n as u32);
        let edge_weight = |o: isize| if o.abs() == k { 0.5 } else { 1.0 };
        let near: Vec<(f64, f64, f64)> = (0..count)
            .into_par_iter()
            .map(|idx| {
                let o = [idx as isize % side as isize - k, idx as isize / side as isize - k];
                let mut x = [0.0; 2];
                let mut w = 1.0;
                for i in 0..n {
                    x[i] = spec.coordinate(0) + (c_idx[i] + o[i]) as f64 * h;
                    w *= edge_weight(o[i]);
                }
                let (v, e) = inner_at(x);
                (v.max(0.0), e, w)
            })
            .collect();

        let vol = spec.cell_volume();
        let r_pow = p / q;
        let mut total = 0.0;
        let mut est = 0.0;
        for &(v, e, w) in &near {
            if v > 0.0 {
                let pw = v.powf(r_pow);
                total += vol * w * pw;
                est += vol * w * pw / v * e;
            }
        }

        // far field: x outside the window, where f(x) = 0 and the inner integral reduces to
        // ∫ |f(y)|^q |x - y|^{-n-sq} dy
        let sources: Vec<([f64; 2], f64)> = near
            .iter()
            .enumerate()
            .filter_map(|(idx, _)| {
                let o = [idx as isize % side as isize - k, idx as isize / side as isize - k];
                let mut y = [0.0; 2];
                for i in 0..n {
                    y[i] = spec.coordinate(0) + (c_idx[i] + o[i]) as f64 * h;
                }
                let fy = powq(eval.value(&y), q);
                (fy > 0.0).then_some((y, fy * vol))
            })
            .collect();
        let mass: f64 = sources.iter().map(|(_, m)| m).sum();
        let far_inner = |x: [f64; 2]| -> f64 {
            sources
                .iter()
                .map(|(y, m)| {
                    let d2: f64 = (0..n).map(|i| (x[i] - y[i]).powi(2)).sum();
                    m * d2.powf(-0.5 * beta)
                })
                .sum()
        };
        let inner_edge = k as f64 * h;
        let outer_edge = inner_edge * 10f64.powf(FAR_FIELD_DECADES);
        let panels = (2.0 * FAR_FIELD_DECADES) as usize;
        let analytic_tail = |d: f64| mass.powf(r_pow) * d.powf(nf - far_exponent) / (far_exponent - nf);
        let mut far = 0.0;
        if n == 1 {
            for sign in [1.0, -1.0] {
                let nodes = log_panel_nodes(inner_edge, outer_edge, panels);
                far += nodes
                    .par_iter()
                    .map(|&(d, w)| w * far_inner([grid_center[0] + sign * d, 0.0]).powf(r_pow))
                    .collect::<Vec<f64>>()
                    .iter()
                    .sum::<f64>();
                far += analytic_tail(outer_edge);
            }
        } else {
            let (gx, gw) = crate::quadrature::gauss_legendre(crate::quadrature::PANEL_POINTS);
            let sectors = 8;
            let width = 2.0 * PI / sectors as f64;
            let mut angles = Vec::new();
            for sector in 0..sectors {
                let mid = (sector as f64 + 0.5) * width - PI / 4.0;
                for sub in 0..2 {
                    let lo = mid - 0.5 * width + sub as f64 * 0.5 * width;
                    for (xi, wi) in gx.iter().zip(&gw) {
                        angles.push((lo + 0.25 * width * (xi + 1.0), 0.25 * width * wi));
                    }
                }
            }
            far += angles
                .par_iter()
                .map(|&(phi, wphi)| {
                    let (sn, cs) = phi.sin_cos();
                    let start = inner_edge / cs.abs().max(sn.abs());
                    log_panel_nodes(start, outer_edge, panels)
                        .iter()
                        .map(|&(rho, w)| {
                            let x = [grid_center[0] + rho * cs, grid_center[1] + rho * sn];
                            wphi * w * rho * far_inner(x).powf(r_pow)
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum::<f64>();
            far += 2.0 * PI * analytic_tail(outer_edge);
        }
        total += far;
        let value = total.powf(1.0 / p);
        let tail_lo = if total > 0.0 { est * r_pow / (p * total) } else { 0.0 };
        let tail_hi = if total > 0.0 {
            let t = if n == 1 { 2.0 } else { 2.0 * PI } * analytic_tail(outer_edge);
            t / (p * total)
        } else {
            0.0
        };
        let out = SeminormValue {
            value,
            tail_lo,
            tail_hi,
        };
        if tail_lo > self.quad.tail_rel_tol {
            return Err(Error::Resolution(format!(
                "Gagliardo seminorm: small-|z| estimate {tail_lo:.2e} exceeds {:.1e}; lower z_r_min",
                self.quad.tail_rel_tol
            )));
        }
        Ok(out)
    }
}

pub fn gagliardo(f: &SampledFunction, params: &SeminormParams, quad: &QuadratureSpec) -> Result<f64> {
    Ok(SeminormEngine::new(f.clone(), *quad)?.gagliardo(params)?.value)
}

pub fn extension_seminorm(
    f: &SampledFunction,
    params: &SeminormParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(SeminormEngine::new(f.clone(), *quad)?.extension(params)?.value)
}

pub fn triebel_discrete(
    f: &SampledFunction,
    params: &SeminormParams,
    j_range: Option<(i32, i32)>,
    kernel: Kernel,
) -> Result<f64> {
    Ok(SeminormEngine::with_defaults(f.clone())?
        .triebel_discrete(params, j_range, kernel)?
        .value)
}

pub fn triebel_continuous(
    f: &SampledFunction,
    params: &SeminormParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(SeminormEngine::new(f.clone(), *quad)?
        .triebel_continuous(params)?
        .value)
}

pub fn extension_mixed_form(
    f: &SampledFunction,
    params: &SeminormParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok(SeminormEngine::new(f.clone(), *quad)?.mixed_form(params)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, GridSpec, TestFunction};

    #[test]
    fn parameter_validation() {
        assert!(SeminormParams::new(0.0, 2.0, 2.0).is_err());
        assert!(SeminormParams::new(1.0, 2.0, 2.0).is_err());
        assert!(SeminormParams::new(0.5, 1.0, 2.0).is_err());
        assert!(SeminormParams::new(0.5, 2.0, f64::INFINITY).is_err());
        let e = SeminormParams::new(1.5, 2.0, 3.0).unwrap_err();
        assert!(e.to_string().contains("s must lie in (0,1)"));
    }

    #[test]
    fn admissibility_boundary_is_strict() {
        let p = SeminormParams::new(0.5, 1.2, 3.0).unwrap().with_theta(0.5).unwrap();
        assert_eq!(p.admissible_w(1), Some(false));
        let p = SeminormParams::new(0.5, 1.3, 3.0).unwrap().with_theta(0.5).unwrap();
        assert_eq!(p.admissible_w(1), Some(true));
        assert_eq!(SeminormParams::new(0.5, 2.0, 2.0).unwrap().admissible_w(1), None);
        let p = SeminormParams::new(0.5, 2.0, 2.0).unwrap().with_theta(0.4).unwrap();
        assert_eq!(p.admissible_dual(1), Some(true));
        assert!((p.p_conjugate() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn moment_weights_integrate_polynomials() {
        let u = [0.0, 1.0, 1.04, 1.08];
        let alpha = 0.37;
        let w = moment_weights(&u, alpha);
        for k in 0..4 {
            let approx: f64 = w.iter().zip(&u).map(|(w, u)| w * u.powi(k)).sum();
            assert!((approx - 1.0 / (alpha + k as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_function_has_zero_seminorms() {
        let spec = GridSpec::new(1, 20.0, 1 << 10).unwrap();
        let z = SampledFunction::from_values(spec, vec![0.0; spec.len()]).unwrap();
        let engine = SeminormEngine::with_defaults(z).unwrap();
        let params = SeminormParams::new(0.5, 2.0, 2.0).unwrap();
        for which in [
            Seminorm::W,
            Seminorm::E,
            Seminorm::FCont,
            Seminorm::FDisc(Kernel::Poisson),
            Seminorm::M,
        ] {
            assert_eq!(engine.evaluate(which, &params).unwrap().value, 0.0);
        }
    }

    #[test]
    fn gagliardo_far_field_divergence_is_reported() {
        let spec = GridSpec::new(1, 20.0, 1 << 10).unwrap();
        let f = sample(&TestFunction::gaussian(1.0, 1).unwrap(), &spec).unwrap();
        let engine = SeminormEngine::with_defaults(f).unwrap();
        // n q/(n + s q) = 3/1.6
        let params = SeminormParams::new(0.2, 1.5, 3.0).unwrap();
        assert!(matches!(engine.gagliardo(&params), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn narrow_level_range_is_rejected() {
        let spec = GridSpec::new(1, 20.0, 1 << 12).unwrap();
        let f = sample(&TestFunction::gaussian(1.0, 1).unwrap(), &spec).unwrap();
        let engine = SeminormEngine::with_defaults(f).unwrap();
        let params = SeminormParams::new(0.5, 2.0, 2.0).unwrap();
        assert!(engine
            .triebel_discrete(&params, Some((0, 1)), Kernel::Poisson)
            .unwrap_err()
            .is_resolution());
        assert!(engine
            .triebel_discrete(&params, Some((-9, 1)), Kernel::Poisson)
            .is_err());
    }

    #[test]
    fn seminorm_names_parse() {
        assert_eq!("E".parse::<Seminorm>().unwrap(), Seminorm::E);
        assert_eq!("F_cont".parse::<Seminorm>().unwrap(), Seminorm::FCont);
        assert_eq!(
            "f_disc_bandlimited".parse::<Seminorm>().unwrap(),
            Seminorm::FDisc(Kernel::Bandlimited)
        );
        assert!("X".parse::<Seminorm>().is_err());
    }

    #[test]
    fn gagliardo_without_analytic_handle_uses_interpolated_samples() {
        let spec = GridSpec::new(1, 16.0, 2048).unwrap();
        let tf = TestFunction::modulated_gaussian(1.0, 4.0, 1).unwrap();
        let f = sample(&tf, &spec).unwrap();
        let mut raw = f.clone();
        raw.analytic = None;
        let quad = QuadratureSpec::for_grid(&spec);
        for (s, p, q) in [(0.5, 2.0, 2.0), (0.8, 3.0, 2.0)] {
            let par = SeminormParams::new(s, p, q).unwrap();
            let a = gagliardo(&f, &par, &quad).unwrap();
            let b = gagliardo(&raw, &par, &quad).unwrap();
            assert!((a - b).abs() < 1e-6 * a, "s={s}: {a} vs {b}");
        }
    }
}
