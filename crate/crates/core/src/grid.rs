//! Uniform periodic grids on `[-L, L)^n` and the analytic test-function catalog.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_open, Error, Result};
use crate::spectral::{fft_nd, Spectrum};

/// Default truncation tolerance for the boundary shell of a sampled catalog function.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// `|f| < e^{-SUPPORT_EXPONENT}` outside the numerical support of a Gaussian-type profile.
const SUPPORT_EXPONENT: f64 = 39.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    half_width: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, points: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-width L must be positive, got {half_width}"
            )));
        }
        if points < 64 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two ≥ 64, got {points}"
            )));
        }
        Ok(GridSpec {
            n,
            half_width,
            points,
        })
    }

    /// `L = 20, N = 2^14` for `n = 1`; `L = 12, N = 2^9` per axis for `n = 2`.
    pub fn default_for(n: usize) -> Result<Self> {
        match n {
            1 => GridSpec::new(1, 20.0, 1 << 14),
            2 => GridSpec::new(2, 12.0, 1 << 9),
            _ => Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {n}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^n` of the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing()
    }

    /// Coordinates of flat index `idx` (row-major, axis 0 slowest).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.n {
            1 => [self.coordinate(idx), 0.0],
            _ => [
                self.coordinate(idx / self.points),
                self.coordinate(idx % self.points),
            ],
        }
    }

    /// Same node count with the domain scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        GridSpec::new(self.n, self.half_width * factor, self.points)
    }

    /// Same domain with twice the points per axis.
    pub fn refined(&self) -> Result<Self> {
        GridSpec::new(self.n, self.half_width, self.points * 2)
    }

    pub fn nearest_index(&self, coord: f64) -> isize {
        ((coord + self.half_width) / self.spacing()).round() as isize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `e^{-π a |x|²}`
    Gaussian { a: f64 },
    /// `cos(2π ω x₁) e^{-π a |x|²}`
    ModulatedGaussian { a: f64, omega: f64 },
    /// `exp(-1/(1 - |x/R|²))` inside the ball of radius `R`
    Bump { radius: f64 },
}

/// Catalog function with closed-form value and gradient, and closed-form Fourier
/// transform for the Gaussian family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub profile: Profile,
    pub dim: usize,
    pub center: [f64; 2],
}

impl TestFunction {
    pub fn new(profile: Profile, dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::param(format!("dimension must be 1 or 2, got {dim}")));
        }
        match profile {
            Profile::Gaussian { a } => check_open("width a", a, 0.0, f64::INFINITY)?,
            Profile::ModulatedGaussian { a, omega } => {
                check_open("width a", a, 0.0, f64::INFINITY)?;
                if !omega.is_finite() {
                    return Err(Error::param("frequency ω must be finite"));
                }
            }
            Profile::Bump { radius } => check_open("radius R", radius, 0.0, f64::INFINITY)?,
        }
        Ok(TestFunction {
            profile,
            dim,
            center: [0.0; 2],
        })
    }

    pub fn gaussian(a: f64, dim: usize) -> Result<Self> {
        Self::new(Profile::Gaussian { a }, dim)
    }

    pub fn modulated_gaussian(a: f64, omega: f64, dim: usize) -> Result<Self> {
        Self::new(Profile::ModulatedGaussian { a, omega }, dim)
    }

    pub fn bump(radius: f64, dim: usize) -> Result<Self> {
        Self::new(Profile::Bump { radius }, dim)
    }

    /// `x ↦ f(x - shift)`
    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = *self;
        for (c, d) in out.center.iter_mut().zip(shift).take(self.dim) {
            *c += d;
        }
        out
    }

    /// `x ↦ f(λx)`
    pub fn dilated(&self, lambda: f64) -> Self {
        let profile = match self.profile {
            Profile::Gaussian { a } => Profile::Gaussian {
                a: a * lambda * lambda,
            },
            Profile::ModulatedGaussian { a, omega } => Profile::ModulatedGaussian {
                a: a * lambda * lambda,
                omega: omega * lambda,
            },
            Profile::Bump { radius } => Profile::Bump {
                radius: radius / lambda,
            },
        };
        TestFunction {
            profile,
            dim: self.dim,
            center: [self.center[0] / lambda, self.center[1] / lambda],
        }
    }

    pub fn label(&self) -> String {
        match self.profile {
            Profile::Gaussian { a } => format!("gaussian(a={a})"),
            Profile::ModulatedGaussian { a, omega } => format!("modulated(a={a},omega={omega})"),
            Profile::Bump { radius } => format!("bump(R={radius})"),
        }
    }

    fn offset(&self, x: &[f64]) -> ([f64; 2], f64) {
        let mut d = [0.0; 2];
        let mut r2 = 0.0;
        for i in 0..self.dim {
            d[i] = x[i] - self.center[i];
            r2 += d[i] * d[i];
        }
        (d, r2)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (d, r2) = self.offset(x);
        match self.profile {
            Profile::Gaussian { a } => (-PI * a * r2).exp(),
            Profile::ModulatedGaussian { a, omega } => {
                (2.0 * PI * omega * d[0]).cos() * (-PI * a * r2).exp()
            }
            Profile::Bump { radius } => {
                let rho2 = r2 / (radius * radius);
                if rho2 < 1.0 {
                    (-1.0 / (1.0 - rho2)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let (d, r2) = self.offset(x);
        match self.profile {
            Profile::Gaussian { a } => {
                let g = (-PI * a * r2).exp();
                for i in 0..self.dim {
                    out[i] = -2.0 * PI * a * d[i] * g;
                }
            }
            Profile::ModulatedGaussian { a, omega } => {
                let g = (-PI * a * r2).exp();
                let phase = 2.0 * PI * omega * d[0];
                let (s, c) = phase.sin_cos();
                for i in 0..self.dim {
                    out[i] = -2.0 * PI * a * d[i] * c * g;
                }
                out[0] -= 2.0 * PI * omega * s * g;
            }
            Profile::Bump { radius } => {
                let rho2 = r2 / (radius * radius);
                if rho2 < 1.0 {
                    let u = 1.0 - rho2;
                    let f = (-1.0 / u).exp();
                    for i in 0..self.dim {
                        out[i] = -f * 2.0 * d[i] / (radius * radius * u * u);
                    }
                } else {
                    out[..self.dim].iter_mut().for_each(|g| *g = 0.0);
                }
            }
        }
    }

    /// `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`; `None` for the bump.
    pub fn fourier(&self, xi: &[f64]) -> Option<Complex64> {
        let n = self.dim as i32;
        let gauss_hat = |a: f64, shift: f64| {
            let mut r2 = (xi[0] - shift).powi(2);
            if self.dim == 2 {
                r2 += xi[1] * xi[1];
            }
            a.powf(-0.5 * n as f64) * (-PI * r2 / a).exp()
        };
        let amplitude = match self.profile {
            Profile::Gaussian { a } => gauss_hat(a, 0.0),
            Profile::ModulatedGaussian { a, omega } => {
                0.5 * (gauss_hat(a, omega) + gauss_hat(a, -omega))
            }
            Profile::Bump { .. } => return None,
        };
        let phase: f64 = (0..self.dim).map(|i| self.center[i] * xi[i]).sum::<f64>();
        Some(Complex64::from_polar(amplitude, -2.0 * PI * phase))
    }

    pub fn fourier_abs2(&self, xi: &[f64]) -> Option<f64> {
        self.fourier(xi).map(|z| z.norm_sqr())
    }

    /// Radius around `center` outside of which `|f|` is below `1e-17` (exactly zero for the bump).
    pub fn support_radius(&self) -> f64 {
        match self.profile {
            Profile::Gaussian { a } | Profile::ModulatedGaussian { a, .. } => {
                (SUPPORT_EXPONENT / (PI * a)).sqrt()
            }
            Profile::Bump { radius } => radius,
        }
    }
}

/// Pointwise access to a function off the grid.
pub trait PointEval: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Center and radius of a ball (in the max-norm box sense) containing the support.
    fn support(&self) -> ([f64; 2], f64);
}

impl PointEval for TestFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        TestFunction::value(self, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        TestFunction::gradient(self, x, out)
    }
    fn support(&self) -> ([f64; 2], f64) {
        (self.center, self.support_radius())
    }
}

/// Trigonometric interpolant of grid samples (O(N^n) per evaluation).
pub struct TrigInterpolant {
    spec: GridSpec,
    /// `(frequency index vector, coefficient / N^n)` for the nonzero modes
    modes: Vec<([f64; 2], Complex64)>,
    support: ([f64; 2], f64),
}

impl TrigInterpolant {
    pub fn new(f: &SampledFunction) -> Self {
        let spec = f.spec;
        let spectrum = Spectrum::new(f);
        let freq = spectrum.frequencies();
        let norm = spec.len() as f64;
        let modes = spectrum
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(idx, c)| (freq.vector(idx), *c / norm))
            .collect();
        TrigInterpolant {
            spec,
            modes,
            support: f.sample_support(),
        }
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let l = self.spec.half_width();
        let mut value = 0.0;
        let mut g = [0.0; 2];
        for (xi, c) in &self.modes {
            let mut phase = 0.0;
            for i in 0..self.spec.dim() {
                phase += xi[i] * (x[i] + l);
            }
            let e = Complex64::from_polar(1.0, 2.0 * PI * phase) * c;
            value += e.re;
            for i in 0..self.spec.dim() {
                // d/dx e^{2πiξx} = 2πiξ e^{2πiξx}
                g[i] += -2.0 * PI * xi[i] * e.im;
            }
        }
        if let Some(out) = grad {
            out[..self.spec.dim()].copy_from_slice(&g[..self.spec.dim()]);
        }
        value
    }
}

impl PointEval for TrigInterpolant {
    fn dim(&self) -> usize {
        self.spec.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.eval(x, Some(out));
    }
    fn support(&self) -> ([f64; 2], f64) {
        self.support
    }
}

/// Local interpolation on an FFT-upsampled copy of the samples: the trigonometric interpolant
/// is evaluated exactly on a grid `factor` times finer, then read off with an 8-point Lagrange
/// stencil per axis. Costs O(8^n) per evaluation.
pub struct UpsampledInterpolant {
    fine: GridSpec,
    values: Vec<f64>,
    support: ([f64; 2], f64),
}

const STENCIL: usize = 8;
/// Total fine-grid size cap for [`UpsampledInterpolant`].
const MAX_FINE_POINTS: usize = 1 << 22;

impl UpsampledInterpolant {
    pub fn new(f: &SampledFunction) -> Self {
        let spec = f.spec;
        let n = spec.points();
        let dim = spec.dim();
        let mut factor = 16;
        while factor > 1 && (n * factor).pow(dim as u32) > MAX_FINE_POINTS {
            factor /= 2;
        }
        let m = n * factor;
        let fine = GridSpec::new(dim, spec.half_width(), m).expect("refined grid of a valid grid");
        let spectrum = Spectrum::new(f);
        // coarse mode k goes to fine mode k or k + m - n; the Nyquist mode is split evenly
        let targets = |k: usize| -> Vec<(usize, f64)> {
            if k < n / 2 {
                vec![(k, 1.0)]
            } else if k > n / 2 {
                vec![(k + m - n, 1.0)]
            } else if factor == 1 {
                vec![(k, 1.0)]
            } else {
                vec![(n / 2, 0.5), (m - n / 2, 0.5)]
            }
        };
        let mut work = vec![Complex64::new(0.0, 0.0); fine.len()];
        let scale = 1.0 / spec.len() as f64;
        for (idx, c) in spectrum.coefficients().iter().enumerate() {
            if dim == 1 {
                for (t, w) in targets(idx) {
                    work[t] += c * (w * scale);
                }
            } else {
                for (ti, wi) in targets(idx / n) {
                    for (tj, wj) in targets(idx % n) {
                        work[ti * m + tj] += c * (wi * wj * scale);
                    }
                }
            }
        }
        fft_nd(&fine, &mut work, true);
        UpsampledInterpolant {
            fine,
            values: work.into_iter().map(|z| z.re).collect(),
            support: f.sample_support(),
        }
    }

    /// Stencil start index and Lagrange weights (and their derivatives) along one axis.
    fn axis_weights(&self, x: f64, deriv: bool) -> (isize, [f64; STENCIL], [f64; STENCIL]) {
        let u = (x + self.fine.half_width()) / self.fine.spacing();
        let base = u.floor();
        let t = u - base;
        let offset = |j: usize| j as f64 - (STENCIL / 2 - 1) as f64;
        let mut w = [0.0; STENCIL];
        let mut dw = [0.0; STENCIL];
        for j in 0..STENCIL {
            let mut num = 1.0;
            let mut den = 1.0;
            for k in 0..STENCIL {
                if k != j {
                    num *= t - offset(k);
                    den *= offset(j) - offset(k);
                }
            }
            w[j] = num / den;
            if deriv {
                let mut d = 0.0;
                for k in 0..STENCIL {
                    if k == j {
                        continue;
                    }
                    let mut prod = 1.0;
                    for l in 0..STENCIL {
                        if l != j && l != k {
                            prod *= t - offset(l);
                        }
                    }
                    d += prod;
                }
                dw[j] = d / den / self.fine.spacing();
            }
        }
        (base as isize - (STENCIL / 2 - 1) as isize, w, dw)
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let m = self.fine.points() as isize;
        let wrap = |i: isize| i.rem_euclid(m) as usize;
        let deriv = grad.is_some();
        if self.fine.dim() == 1 {
            let (start, w, dw) = self.axis_weights(x[0], deriv);
            let mut value = 0.0;
            let mut g = 0.0;
            for j in 0..STENCIL {
                let v = self.values[wrap(start + j as isize)];
                value += w[j] * v;
                g += dw[j] * v;
            }
            if let Some(out) = grad {
                out[0] = g;
            }
            return value;
        }
        let (si, wi, dwi) = self.axis_weights(x[0], deriv);
        let (sj, wj, dwj) = self.axis_weights(x[1], deriv);
        let mut value = 0.0;
        let mut g = [0.0; 2];
        for a in 0..STENCIL {
            let row = wrap(si + a as isize) * m as usize;
            for b in 0..STENCIL {
                let v = self.values[row + wrap(sj + b as isize)];
                value += wi[a] * wj[b] * v;
                g[0] += dwi[a] * wj[b] * v;
                g[1] += wi[a] * dwj[b] * v;
            }
        }
        if let Some(out) = grad {
            out[..2].copy_from_slice(&g);
        }
        value
    }
}

impl PointEval for UpsampledInterpolant {
    fn dim(&self) -> usize {
        self.fine.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.eval(x, Some(out));
    }
    fn support(&self) -> ([f64; 2], f64) {
        self.support
    }
}

/// Samples of a real function on the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub analytic: Option<TestFunction>,
    /// Largest `|f|` on the boundary shell of the grid.
    pub tail_bound: f64,
    pub truncation_warning: bool,
}

impl SampledFunction {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("sample values must be finite"));
        }
        let tail_bound = boundary_max(&spec, &values);
        Ok(SampledFunction {
            spec,
            values,
            analytic: None,
            tail_bound,
            truncation_warning: tail_bound > TAIL_TOLERANCE,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Off-grid access: the analytic handle when present, otherwise interpolation on an
    /// upsampled copy of the samples.
    pub fn evaluator(&self) -> Box<dyn PointEval + '_> {
        match &self.analytic {
            Some(tf) => Box::new(*tf),
            None => Box::new(UpsampledInterpolant::new(self)),
        }
    }

    /// Centroid of `|f|` and the max-norm radius of the samples above `1e-17 max|f|`.
    pub(crate) fn sample_support(&self) -> ([f64; 2], f64) {
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut center = [0.0; 2];
        let mut mass = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let p = self.spec.point(idx);
            mass += v.abs();
            center[0] += v.abs() * p[0];
            center[1] += v.abs() * p[1];
        }
        if mass > 0.0 {
            center[0] /= mass;
            center[1] /= mass;
        }
        let mut radius: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            if v.abs() > 1e-17 * max {
                let p = self.spec.point(idx);
                for i in 0..self.dim() {
                    radius = radius.max((p[i] - center[i]).abs());
                }
            }
        }
        (center, radius + self.spec.spacing())
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> SampledFunction {
        let tail_bound = boundary_max(&self.spec, &values);
        SampledFunction {
            spec: self.spec,
            values,
            analytic: None,
            tail_bound,
            truncation_warning: tail_bound > TAIL_TOLERANCE,
        }
    }
}

fn boundary_max(spec: &GridSpec, values: &[f64]) -> f64 {
    let n = spec.points();
    let on_shell = |i: usize| i == 0 || i == n - 1;
    values
        .iter()
        .enumerate()
        .filter(|(idx, _)| match spec.dim() {
            1 => on_shell(*idx),
            _ => on_shell(idx / n) || on_shell(idx % n),
        })
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
}

/// Samples `tf` at the grid nodes `x_k ∈ [-L, L-h]^n`.
pub fn sample(tf: &TestFunction, spec: &GridSpec) -> Result<SampledFunction> {
    if tf.dim != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: tf.dim,
        });
    }
    let values: Vec<f64> = (0..spec.len())
        .map(|idx| tf.value(&spec.point(idx)))
        .collect();
    let tail_bound = boundary_max(spec, &values);
    Ok(SampledFunction {
        spec: *spec,
        values,
        analytic: Some(*tf),
        tail_bound,
        truncation_warning: tail_bound > TAIL_TOLERANCE,
    })
}

fn check_exponent(p: f64) -> Result<()> {
    check_open("p", p, 1.0, f64::INFINITY)
}

fn rectangle_norm(spec: &GridSpec, values: impl Iterator<Item = f64>, p: f64) -> f64 {
    let sum: f64 = values.map(|v| v.abs().powf(p)).sum();
    (spec.cell_volume() * sum).powf(1.0 / p)
}

/// Rectangle-rule `L^p` norm.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(rectangle_norm(&f.spec, f.values.iter().copied(), p))
}

/// `‖ |∇f| ‖_{L^p}`, from the analytic gradient when available, else spectral differentiation.
pub fn grad_lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let magnitudes = match &f.analytic {
        Some(tf) => analytic_gradient_magnitude(tf, &f.spec),
        None => spectral_gradient_magnitude(f)?,
    };
    Ok(rectangle_norm(&f.spec, magnitudes.into_iter(), p))
}

pub(crate) fn analytic_gradient_magnitude(tf: &TestFunction, spec: &GridSpec) -> Vec<f64> {
    let mut g = [0.0; 2];
    (0..spec.len())
        .map(|idx| {
            tf.gradient(&spec.point(idx), &mut g);
            g[..spec.dim()].iter().map(|c| c * c).sum::<f64>().sqrt()
        })
        .collect()
}

pub(crate) fn spectral_gradient_magnitude(f: &SampledFunction) -> Result<Vec<f64>> {
    let spectrum = Spectrum::new(f);
    let mut sq = vec![0.0; f.spec.len()];
    for axis in 0..f.dim() {
        let component = spectrum.derivative(axis)?;
        for (acc, c) in sq.iter_mut().zip(component) {
            *acc += c * c;
        }
    }
    Ok(sq.into_iter().map(f64::sqrt).collect())
}
