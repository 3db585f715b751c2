//! Fourier multipliers on the periodic grid: Poisson semigroup and its `t`-derivatives,
//! Littlewood-Paley blocks, and the fractional Laplacian in symbol and second-difference form.
//!
//! Convention: `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`. The discrete transform uses FFT order, so
//! index 0 is the DC mode and index `k ≥ N/2` carries frequency `(k - N)/(2L)`.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{check_open, Error, Result};
use crate::grid::{GridSpec, SampledFunction, TestFunction};
use crate::quadrature::{for_each_uniform_node, gauss_legendre, QuadratureSpec};

/// Imaginary residue allowed after an inverse transform, relative to `‖f‖₂`.
pub const RESIDUE_TOLERANCE: f64 = 1e-10;

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized n-dimensional FFT in place.
pub(crate) fn fft_nd(spec: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = spec.points();
    let fft = plan(n, inverse);
    fft.process(data);
    if spec.dim() == 2 {
        transpose(data, n);
        fft.process(data);
        transpose(data, n);
    }
}

/// Frequency vectors of the grid.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    spec: GridSpec,
    axis: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.points() as i64;
        let scale = 1.0 / (2.0 * spec.half_width());
        let axis = (0..n)
            .map(|k| if k < n / 2 { k } else { k - n } as f64 * scale)
            .collect();
        FrequencyGrid { spec: *spec, axis }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Per-axis frequency values in FFT order.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn nyquist(&self) -> f64 {
        self.spec.points() as f64 / (4.0 * self.spec.half_width())
    }

    pub fn vector(&self, idx: usize) -> [f64; 2] {
        match self.spec.dim() {
            1 => [self.axis[idx], 0.0],
            _ => {
                let n = self.spec.points();
                [self.axis[idx / n], self.axis[idx % n]]
            }
        }
    }

    pub fn norm(&self, idx: usize) -> f64 {
        let v = self.vector(idx);
        v[0].hypot(v[1])
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.spec.len()).map(|i| self.norm(i)).collect()
    }
}

/// Forward transform of a sampled function, kept for repeated multiplier application.
#[derive(Debug, Clone)]
pub struct Spectrum {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
    radii: Vec<f64>,
    l2: f64,
}

impl Spectrum {
    pub fn new(f: &SampledFunction) -> Self {
        Self::from_values(&f.spec, &f.values)
    }

    pub fn from_values(spec: &GridSpec, values: &[f64]) -> Self {
        let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(spec, &mut coeffs, false);
        let l2 = (spec.cell_volume() * values.iter().map(|v| v * v).sum::<f64>()).sqrt();
        Spectrum {
            spec: *spec,
            coeffs,
            radii: FrequencyGrid::new(spec).norms(),
            l2,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn frequencies(&self) -> FrequencyGrid {
        FrequencyGrid::new(&self.spec)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `|ξ|` for every mode, FFT order.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Inverse transform of `symbol · f̂`; returns the real part and the L² norm of the
    /// imaginary part.
    pub fn apply(&self, symbol: impl Fn([f64; 2]) -> Complex64) -> (Vec<f64>, f64) {
        let freq = self.frequencies();
        let mut work: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(freq.vector(i)))
            .collect();
        fft_nd(&self.spec, &mut work, true);
        let scale = 1.0 / self.spec.len() as f64;
        let residue = (self.spec.cell_volume()
            * work.iter().map(|z| (z.im * scale).powi(2)).sum::<f64>())
        .sqrt();
        (work.into_iter().map(|z| z.re * scale).collect(), residue)
    }

    /// Inverse transform of `symbol(|ξ|) · f̂` for a real radial symbol.
    pub fn apply_radial(&self, symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut work: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(&self.radii)
            .map(|(c, &r)| c * symbol(r))
            .collect();
        fft_nd(&self.spec, &mut work, true);
        let scale = 1.0 / self.spec.len() as f64;
        work.into_iter().map(|z| z.re * scale).collect()
    }

    /// Two real radial multipliers with a single inverse transform: both outputs are real,
    /// so one rides in the imaginary part.
    pub fn apply_radial_pair(
        &self,
        first: impl Fn(f64) -> f64,
        second: impl Fn(f64) -> f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut work: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(&self.radii)
            .map(|(c, &r)| c * first(r) + i * c * second(r))
            .collect();
        fft_nd(&self.spec, &mut work, true);
        let scale = 1.0 / self.spec.len() as f64;
        work.into_iter()
            .map(|z| (z.re * scale, z.im * scale))
            .unzip()
    }

    /// `∂f/∂x_axis` by spectral differentiation (Nyquist mode dropped).
    pub fn derivative(&self, axis: usize) -> Result<Vec<f64>> {
        if axis >= self.spec.dim() {
            return Err(Error::param(format!(
                "axis {axis} out of range for n={}",
                self.spec.dim()
            )));
        }
        let nyq = self.frequencies().nyquist();
        let (values, _) = self.apply(|xi| {
            if xi[axis].abs() >= nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 2.0 * PI * xi[axis])
            }
        });
        Ok(values)
    }

    /// `Δf` via the symbol `-4π²|ξ|²`.
    pub fn laplacian(&self) -> Vec<f64> {
        self.apply_radial(|r| -4.0 * PI * PI * r * r)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2
    }
}

/// Littlewood-Paley kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `φ_j` with symbol `|2^{-j}ξ|² e^{-2π 2^{-j}|ξ|}`
    Poisson,
    /// Smooth partition of unity supported in `2^{-j}|ξ| ∈ [1/2, 2]`
    Bandlimited,
}

impl FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(Kernel::Poisson),
            "bandlimited" | "band_limited" | "band-limited" => Ok(Kernel::Bandlimited),
            other => Err(Error::param(format!(
                "unknown kernel '{other}' (expected poisson or bandlimited)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierKind {
    PoissonSemigroup { t: f64 },
    PoissonDerivative { t: f64, m: u32 },
    LpBlockPoisson { j: i32 },
    LpBlockBandlimited { j: i32 },
    FracLaplacian { s: f64 },
}

impl MultiplierKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MultiplierKind::PoissonSemigroup { t } => check_open("t", t, 0.0, f64::INFINITY),
            MultiplierKind::PoissonDerivative { t, m } => {
                check_open("t", t, 0.0, f64::INFINITY)?;
                if m == 1 || m == 2 {
                    Ok(())
                } else {
                    Err(Error::param(format!("derivative order m must be 1 or 2, got {m}")))
                }
            }
            MultiplierKind::LpBlockPoisson { .. } | MultiplierKind::LpBlockBandlimited { .. } => {
                Ok(())
            }
            MultiplierKind::FracLaplacian { s } => check_open("s", s, 0.0, 2.0),
        }
    }

    /// Symbol as a function of `|ξ|`.
    pub fn symbol(&self, r: f64) -> f64 {
        match *self {
            MultiplierKind::PoissonSemigroup { t } => (-2.0 * PI * t * r).exp(),
            MultiplierKind::PoissonDerivative { t, m } => {
                (-2.0 * PI * r).powi(m as i32) * (-2.0 * PI * t * r).exp()
            }
            MultiplierKind::LpBlockPoisson { j } => {
                let u = level_scale(j) * r;
                u * u * (-2.0 * PI * u).exp()
            }
            MultiplierKind::LpBlockBandlimited { j } => bandlimited_symbol(j, r),
            MultiplierKind::FracLaplacian { s } => {
                if r == 0.0 {
                    0.0
                } else {
                    r.powf(s)
                }
            }
        }
    }
}

/// `2^{-j}`
pub fn level_scale(j: i32) -> f64 {
    2f64.powi(-j)
}

fn bump_g(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth step: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn cutoff(rho: f64) -> f64 {
    if rho <= 1.0 {
        1.0
    } else if rho >= 2.0 {
        0.0
    } else {
        let a = bump_g(2.0 - rho);
        a / (a + bump_g(rho - 1.0))
    }
}

/// `ψ̂_j(ξ) = H(2^{-j}|ξ|) - H(2^{-j+1}|ξ|)`
pub fn bandlimited_symbol(j: i32, r: f64) -> f64 {
    let u = level_scale(j) * r;
    cutoff(u) - cutoff(2.0 * u)
}

/// Levels `j` with `2^{-j} ∈ [h, 2L]`.
pub fn resolvable_levels(spec: &GridSpec) -> (i32, i32) {
    let lo = -(2.0 * spec.half_width()).log2().floor() as i32;
    let hi = -spec.spacing().log2().ceil() as i32;
    (lo, hi)
}

fn check_level(spec: &GridSpec, j: i32) -> Result<()> {
    let (lo, hi) = resolvable_levels(spec);
    if j < lo || j > hi {
        return Err(Error::param(format!(
            "level j={j} outside the resolvable band [{lo}, {hi}] (2^-j must lie in [h, 2L])"
        )));
    }
    Ok(())
}

/// `F⁻¹(symbol · f̂)` for an arbitrary symbol, rejecting outputs whose imaginary residue
/// exceeds `RESIDUE_TOLERANCE · ‖f‖₂`.
pub fn apply_symbol(
    f: &SampledFunction,
    symbol: impl Fn([f64; 2]) -> Complex64,
) -> Result<SampledFunction> {
    let spectrum = Spectrum::new(f);
    let (values, residue) = spectrum.apply(symbol);
    let limit = RESIDUE_TOLERANCE * spectrum.l2_norm();
    if residue > limit {
        return Err(Error::SymmetryCorruption { residue, limit });
    }
    Ok(f.with_values(values))
}

pub fn apply_multiplier(f: &SampledFunction, kind: MultiplierKind) -> Result<SampledFunction> {
    kind.validate()?;
    if let MultiplierKind::LpBlockPoisson { j } | MultiplierKind::LpBlockBandlimited { j } = kind {
        check_level(&f.spec, j)?;
    }
    apply_symbol(f, |xi| {
        Complex64::new(kind.symbol(xi[0].hypot(xi[1])), 0.0)
    })
}

/// `∂_t^m P_t ∗ f`
pub fn poisson_dt(f: &SampledFunction, t: f64, m: u32) -> Result<SampledFunction> {
    apply_multiplier(f, MultiplierKind::PoissonDerivative { t, m })
}

pub fn lp_block(f: &SampledFunction, j: i32, kernel: Kernel) -> Result<SampledFunction> {
    let kind = match kernel {
        Kernel::Poisson => MultiplierKind::LpBlockPoisson { j },
        Kernel::Bandlimited => MultiplierKind::LpBlockBandlimited { j },
    };
    apply_multiplier(f, kind)
}

/// `Δ^{s/2} f` through the symbol `|ξ|^s`, DC mode set to 0.
pub fn frac_laplacian_spectral(f: &SampledFunction, s: f64) -> Result<SampledFunction> {
    apply_multiplier(f, MultiplierKind::FracLaplacian { s })
}

/// `|S^{n-1}|`
pub(crate) fn sphere_area(n: usize) -> f64 {
    if n == 1 {
        2.0
    } else {
        2.0 * PI
    }
}

/// Interval of `r ≥ 0` on which `x + r·dir` stays in the box `|y - c|_∞ ≤ radius`.
pub(crate) fn ray_box(x: &[f64; 2], dir: &[f64; 2], c: &[f64; 2], radius: f64, n: usize) -> Option<(f64, f64)> {
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (c[i] - radius - x[i], c[i] + radius - x[i]);
        if dir[i].abs() < 1e-300 {
            if a > 0.0 || b < 0.0 {
                return None;
            }
        } else {
            let (t0, t1) = if dir[i] > 0.0 {
                (a / dir[i], b / dir[i])
            } else {
                (b / dir[i], a / dir[i])
            };
            lo = lo.max(t0);
            hi = hi.min(t1);
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// Unit directions `θ_m = πm/M'` covering half the circle (the full line for `n = 1`).
pub(crate) fn half_directions(n: usize, angular_nodes: usize) -> Vec<[f64; 2]> {
    if n == 1 {
        return vec![[1.0, 0.0]];
    }
    let pairs = angular_nodes / 2;
    (0..pairs)
        .map(|m| {
            let (s, c) = (PI * m as f64 / pairs as f64).sin_cos();
            [c, s]
        })
        .collect()
}

/// Moments of `f` about `c` up to order two: `(m0, m1, m2)`.
fn moments(f: &SampledFunction, c: &[f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let n = f.dim();
    let vol = f.spec.cell_volume();
    let mut m0 = 0.0;
    let mut m1 = [0.0; 2];
    let mut m2 = [[0.0; 2]; 2];
    for (idx, v) in f.values.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let p = f.spec.point(idx);
        let u = [p[0] - c[0], p[1] - c[1]];
        m0 += v;
        for a in 0..n {
            m1[a] += v * u[a];
            for b in 0..n {
                m2[a][b] += v * u[a] * u[b];
            }
        }
    }
    m1.iter_mut().for_each(|m| *m *= vol);
    m2.iter_mut().flatten().for_each(|m| *m *= vol);
    (m0 * vol, m1, m2)
}

/// Far-field sum `Σ_{k≠0} ∫ f(y) |y - x - 2Lk|^{-n-s} dy` over the periodic images of `f`,
/// by a second-order multipole expansion with a continuum tail.
struct ImageSum {
    n: usize,
    beta: f64,
    period: f64,
    center: [f64; 2],
    m0: f64,
    m1: [f64; 2],
    m2: [[f64; 2]; 2],
    shells: i64,
    tail_2d: f64,
}

impl ImageSum {
    fn new(f: &SampledFunction, center: [f64; 2], s: f64) -> Self {
        let n = f.dim();
        let (m0, m1, m2) = moments(f, &center);
        let shells = if n == 1 { 64 } else { 8 };
        let period = 2.0 * f.spec.half_width();
        let tail_2d = if n == 2 {
            // ∫ over the outside of the square of half-side A of |w|^{-2-s}
            // = A^{-s}/s · ∫_0^{2π} max(|cos|,|sin|)^s dθ
            let (x, w) = gauss_legendre(16);
            let quarter = PI / 4.0;
            let ang: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| 0.5 * quarter * wi * (0.5 * quarter * (xi + 1.0)).cos().powf(s))
                .sum();
            let a = period * (shells as f64 + 0.5);
            m0 / (period * period) * a.powf(-s) / s * 8.0 * ang
        } else {
            0.0
        };
        ImageSum {
            n,
            beta: n as f64 + s,
            period,
            center,
            m0,
            m1,
            m2,
            shells,
            tail_2d,
        }
    }

    fn multipole(&self, d: [f64; 2]) -> f64 {
        let n = self.n;
        let d2: f64 = (0..n).map(|i| d[i] * d[i]).sum();
        let b = self.beta;
        let dm1: f64 = (0..n).map(|i| d[i] * self.m1[i]).sum();
        let tr: f64 = (0..n).map(|i| self.m2[i][i]).sum();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += d[i] * self.m2[i][j] * d[j];
            }
        }
        d2.powf(-0.5 * b)
            * (self.m0 + b * dm1 / d2 - 0.5 * b * tr / d2 + 0.5 * b * (b + 2.0) * quad / (d2 * d2))
    }

    fn at(&self, x: &[f64; 2]) -> f64 {
        let d0 = [x[0] - self.center[0], x[1] - self.center[1]];
        let k = self.shells;
        let mut total = 0.0;
        if self.n == 1 {
            for i in 1..=k {
                let shift = self.period * i as f64;
                total += self.multipole([d0[0] + shift, 0.0]);
                total += self.multipole([d0[0] - shift, 0.0]);
            }
            let edge = self.period * (k as f64 + 0.5);
            let s = self.beta - 1.0;
            total += self.m0 / (self.period * s)
                * ((edge + d0[0]).powf(-s) + (edge - d0[0]).powf(-s));
        } else {
            for i in -k..=k {
                for j in -k..=k {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    total += self.multipole([
                        d0[0] + self.period * i as f64,
                        d0[1] + self.period * j as f64,
                    ]);
                }
            }
            total += self.tail_2d;
        }
        total
    }
}

/// Second-difference singular integral `∫ (2f(x) - f(x+z) - f(x-z)) |z|^{-n-s} dz` at every
/// grid node, with no normalizing constant. The function is taken as its `2L`-periodic
/// extension, the same object the FFT multipliers act on, so the ratio to
/// [`frac_laplacian_spectral`] is a pure constant.
pub fn frac_laplacian_difference(
    f: &SampledFunction,
    s: f64,
    quad: &QuadratureSpec,
) -> Result<SampledFunction> {
    check_open("s", s, 0.0, 2.0)?;
    quad.validate()?;
    let tf: TestFunction = f
        .analytic
        .ok_or(Error::MissingAnalytic("frac_laplacian_difference evaluates f off the grid"))?;
    if f.is_zero() {
        return Ok(f.with_values(vec![0.0; f.values.len()]));
    }
    let n = f.dim();
    let spec = f.spec;
    let rule = quad.radial_rule(spec.spacing());
    let dirs = half_directions(n, quad.angular_nodes);
    let w_dir = sphere_area(n) / dirs.len() as f64;
    let laplacian = Spectrum::new(f).laplacian();
    let center = tf.center;
    let radius = tf.support_radius();
    let images = ImageSum::new(f, center, s);
    let r0 = rule.inner;
    let taylor_coeff = sphere_area(n) / n as f64 * r0.powf(2.0 - s) / (2.0 - s);

    let eval = |idx: usize| -> (f64, f64) {
        let x = spec.point(idx);
        let fx = tf.value(&x);
        let mut total = -taylor_coeff * laplacian[idx];
        let mut at_r0 = 0.0;
        for dir in &dirs {
            let second = |r: f64| {
                let xp = [x[0] + r * dir[0], x[1] + r * dir[1]];
                let xm = [x[0] - r * dir[0], x[1] - r * dir[1]];
                2.0 * fx - tf.value(&xp) - tf.value(&xm)
            };
            let mut j = 0.0;
            for &(r, w) in &rule.log_nodes {
                j += w * second(r) * r.powf(-1.0 - s);
            }
            j += 2.0 * fx * rule.switch.powf(-s) / s;
            for sign in [1.0, -1.0] {
                let d = [sign * dir[0], sign * dir[1]];
                if let Some((a, b)) = ray_box(&x, &d, &center, radius, n) {
                    let a = a.max(rule.switch);
                    for_each_uniform_node(a, b, rule.uniform_width, |r, w| {
                        j -= w * tf.value(&[x[0] + r * d[0], x[1] + r * d[1]]) * r.powf(-1.0 - s);
                    });
                }
            }
            total += w_dir * j;
            at_r0 += w_dir * second(r0);
        }
        // fourth-order remainder of the small-r model: D(r) ≈ a r² + b r⁴
        let remainder =
            (at_r0 + sphere_area(n) / n as f64 * laplacian[idx] * r0 * r0) * r0.powf(-s) / (4.0 - s);
        total += remainder;
        total -= 2.0 * images.at(&x);
        (total, remainder.abs())
    };

    let (values, remainders): (Vec<f64>, Vec<f64>) =
        (0..spec.len()).into_par_iter().map(eval).unzip();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = remainders.iter().fold(0.0f64, |m, v| m.max(*v));
    if worst > quad.tail_rel_tol * scale {
        return Err(Error::Resolution(format!(
            "small-|z| remainder {worst:.3e} exceeds {:.1e} of max |output| {scale:.3e}; lower z_r_min",
            quad.tail_rel_tol
        )));
    }
    Ok(f.with_values(values))
}
