//! Grid-free reference values at `p = q = 2`.
//!
//! By Plancherel every seminorm of the crate reduces at `p = q = 2` to a weighted spectral
//! integral `∫ m(|ξ|) |f̂(ξ)|² dξ`:
//!
//! * `E`: `∫_0^∞ t^{1-2s} (2π|ξ|)² e^{-4πt|ξ|} dt = 4π² Γ(2-2s) (4π|ξ|)^{2s-2}`
//! * `F_cont`: `∫_0^∞ t^{3-2s} (2π|ξ|)⁴ e^{-4πt|ξ|} dt = (2π)⁴ Γ(4-2s) (4π|ξ|)^{2s-4}`
//! * `M`: swapping the `r` and `t` integrals gives `∫_0^∞ t^{3-2s}/(2-2s) |∂²_t P_t ∗ f|² dt`,
//!   so `M² = F_cont²/(2-2s)`
//! * `W`: `∫ |e^{2πiz·ξ} - 1|² |z|^{-n-2s} dz = A(n,s) |ξ|^{2s}` with
//!   `A(n,s) = ∫ (2 - 2cos 2πz₁) |z|^{-n-2s} dz`
//!
//! so all but the dyadic sums are multiples of the spectral moment `I_{2s} = ∫|ξ|^{2s}|f̂|²`.

use std::f64::consts::{LN_10, PI};
use std::fmt;

use serde::Serialize;

use crate::error::{check_open, Error, Result};
use crate::grid::{GridSpec, Profile, TestFunction};
use crate::quadrature::{gauss_legendre, log_panel_nodes, QuadratureSpec};
use crate::seminorms::Seminorm;
use crate::spectral::{bandlimited_symbol, level_scale, sphere_area, Kernel};

/// Log-trapezoid step of the oracle radial quadratures (ten times the engine's default).
pub const ORACLE_LOG_STEP: f64 = LN_10 / 640.0;

/// Angular nodes for `n = 2` spectral integrals.
const ORACLE_ANGULAR_NODES: usize = 2048;

pub type GammaFn = fn(f64) -> f64;

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralMoment {
    /// The exponent `2s`.
    pub order: f64,
    pub n: usize,
    pub value: f64,
}

fn check_dim(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::param(format!("dimension must be 1 or 2, got {n}")))
    }
}

/// `I_{2s} = ∫ |ξ|^{2s} |f̂(ξ)|² dξ` for `f(x) = e^{-πa|x|²}`.
///
/// `f̂(ξ) = a^{-n/2} e^{-π|ξ|²/a}`, so in polar coordinates
/// `I_{2s} = |S^{n-1}| a^{-n} ∫_0^∞ ρ^{2s+n-1} e^{-2πρ²/a} dρ`, and `ρ² = a v/(2π)` turns the
/// radial integral into `½ (2π/a)^{-(s+n/2)} Γ(s+n/2)`:
/// `I_{2s} = |S^{n-1}| a^{s-n/2} Γ(s+n/2) / (2 (2π)^{s+n/2})`.
/// The endpoints `s = 0` (`‖f‖₂²`) and `s = 1` (`‖∇f‖₂²/4π²`) are accepted.
pub fn gaussian_spectral_moment(s: f64, n: usize, a: f64) -> Result<f64> {
    gaussian_moment_with(s, n, a, gamma)
}

fn gaussian_moment_with(s: f64, n: usize, a: f64, gamma: GammaFn) -> Result<f64> {
    check_dim(n)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::param(format!("s must lie in [0,1], got {s}")));
    }
    check_open("width a", a, 0.0, f64::INFINITY)?;
    let half_n = n as f64 / 2.0;
    Ok(sphere_area(n) * a.powf(s - half_n) * gamma(s + half_n)
        / (2.0 * (2.0 * PI).powf(s + half_n)))
}

pub fn spectral_moment(tf: &TestFunction, s: f64) -> Result<SpectralMoment> {
    let value = match tf.profile {
        Profile::Gaussian { a } => gaussian_spectral_moment(s, tf.dim, a)?,
        _ => spectral_integral(tf, |r| r.powf(2.0 * s))?,
    };
    Ok(SpectralMoment {
        order: 2.0 * s,
        n: tf.dim,
        value,
    })
}

/// `∫ weight(|ξ|) |f̂(ξ)|² dξ` by log-trapezoid in `|ξ|` (and periodic trapezoid in angle).
pub fn spectral_integral(tf: &TestFunction, weight: impl Fn(f64) -> f64) -> Result<f64> {
    let (a, omega) = match tf.profile {
        Profile::Gaussian { a } => (a, 0.0),
        Profile::ModulatedGaussian { a, omega } => (a, omega.abs()),
        Profile::Bump { .. } => {
            return Err(Error::MissingAnalytic(
                "oracle values need a closed-form Fourier transform",
            ))
        }
    };
    // |f̂|² ≤ a^{-n} e^{-2π(|ξ|-ω)²/a}: negligible beyond e^{-700}
    let r_hi = omega + (700.0 * a / (2.0 * PI)).sqrt();
    let r_lo = 1e-16 * r_hi;
    let steps = ((r_hi / r_lo).ln() / ORACLE_LOG_STEP).ceil() as usize;
    let du = (r_hi / r_lo).ln() / steps as f64;
    let mut total = 0.0;
    for k in 0..=steps {
        let r = r_lo * (k as f64 * du).exp();
        let w = if k == 0 || k == steps { 0.5 * du } else { du };
        let wr = weight(r);
        if wr == 0.0 {
            continue;
        }
        let shell = match tf.dim {
            1 => tf.fourier_abs2(&[r]).unwrap_or(0.0) + tf.fourier_abs2(&[-r]).unwrap_or(0.0),
            _ => {
                let m = ORACLE_ANGULAR_NODES;
                let sum: f64 = (0..m)
                    .map(|i| {
                        let (sn, cs) = (2.0 * PI * i as f64 / m as f64).sin_cos();
                        tf.fourier_abs2(&[r * cs, r * sn]).unwrap_or(0.0)
                    })
                    .sum();
                r * 2.0 * PI * sum / m as f64
            }
        };
        total += w * r * wr * shell;
    }
    Ok(total)
}

/// `∫_0^∞ (2 - 2cos 2πu) u^{-1-2s} du`
fn radial_level_integral(s: f64) -> f64 {
    let beta = 1.0 + 2.0 * s;
    let two_pi = 2.0 * PI;
    // [0, ε]: 2 - 2cos x = Σ_{k≥1} 2(-1)^{k+1} x^{2k}/(2k)!
    let eps: f64 = 1e-3;
    let mut series = 0.0;
    let mut fact = 1.0;
    for k in 1..=8 {
        fact *= (2 * k - 1) as f64 * (2 * k) as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let e = 2.0 * k as f64 - 2.0 * s;
        series += sign * 2.0 * two_pi.powi(2 * k as i32) * eps.powf(e) / (fact * e);
    }
    let kernel = |u: f64| (2.0 - 2.0 * (two_pi * u).cos()) * u.powf(-beta);
    // [ε, 1]: log panels
    let near: f64 = log_panel_nodes(eps, 1.0, 48)
        .into_iter()
        .map(|(u, w)| w * kernel(u))
        .sum();
    // [1, K]: one Gauss-Legendre panel per period
    let big_k = 64usize;
    let (x, w) = gauss_legendre(24);
    let mut middle = 0.0;
    for j in 1..big_k {
        let mid = j as f64 + 0.5;
        for (xi, wi) in x.iter().zip(&w) {
            middle += 0.5 * wi * kernel(mid + 0.5 * xi);
        }
    }
    // [K, ∞): 2K^{1-β}/(β-1) - 2J(β), with J(b) = ∫_K^∞ cos(2πu) u^{-b} du expanded by
    // repeated integration by parts at integer K
    let kf = big_k as f64;
    let mut j_sum = 0.0;
    let mut coeff = 1.0;
    let mut b = beta;
    for _ in 0..6 {
        j_sum += coeff * b * kf.powf(-b - 1.0) / (two_pi * two_pi);
        coeff *= -b * (b + 1.0) / (two_pi * two_pi);
        b += 2.0;
    }
    let tail = 2.0 * kf.powf(1.0 - beta) / (beta - 1.0) - 2.0 * j_sum;
    series + near + middle + tail
}

/// `A(n,s) = ∫_{ℝ^n} (2 - 2cos 2πz₁) |z|^{-n-2s} dz`.
///
/// In polar form with `u = r|cos φ|` the integral factors into the radial integral above
/// (computed numerically) and `∫_{S^{n-1}} |θ₁|^{2s} dθ`, which is 2 for `n = 1` and
/// `2√π Γ(s+½)/Γ(s+1)` for `n = 2`.
pub fn gagliardo_level_constant(n: usize, s: f64) -> Result<f64> {
    check_dim(n)?;
    check_open("s", s, 0.0, 1.0)?;
    let radial = radial_level_integral(s);
    let angular = if n == 1 {
        2.0
    } else {
        2.0 * PI.sqrt() * gamma(s + 0.5) / gamma(s + 1.0)
    };
    let value = angular * radial;
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Resolution(format!(
            "level constant quadrature failed at n={n}, s={s}"
        )));
    }
    Ok(value)
}

/// Closed form of `A(1,s)`: `∫_ℝ |e^{2πiz} - 1|² |z|^{-1-2s} dz = 2π(2π)^{2s} / (Γ(1+2s) sin πs)`.
pub fn level_constant_closed(s: f64, gamma: GammaFn) -> f64 {
    2.0 * PI * (2.0 * PI).powf(2.0 * s) / (gamma(1.0 + 2.0 * s) * (PI * s).sin())
}

/// Fourier-side multiplier of the squared seminorm at `p = q = 2`, as a function of `|ξ|`.
fn dyadic_weight(kernel: Kernel, s: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        // levels with 2^{-j} r ∈ [1e-7, 64]; the rest is below 1e-24 of the peak
        let j_lo = (r / 64.0).log2().floor() as i32;
        let j_hi = (r / 1e-7).log2().ceil() as i32;
        (j_lo..=j_hi)
            .map(|j| {
                let block = match kernel {
                    Kernel::Poisson => {
                        let u = level_scale(j) * r;
                        u * u * (-2.0 * PI * u).exp()
                    }
                    Kernel::Bandlimited => bandlimited_symbol(j, r),
                };
                2f64.powf(2.0 * j as f64 * s) * block * block
            })
            .sum()
    }
}

/// Exact value of a seminorm at `p = q = 2` for a Gaussian-family test function.
pub fn hilbertian_exact(tf: &TestFunction, s: f64, which: Seminorm) -> Result<f64> {
    hilbertian_with(tf, s, which, gamma)
}

fn hilbertian_with(tf: &TestFunction, s: f64, which: Seminorm, gamma: GammaFn) -> Result<f64> {
    check_open("s", s, 0.0, 1.0)?;
    if let Profile::Bump { .. } = tf.profile {
        return Err(Error::MissingAnalytic(
            "oracle values need a closed-form Fourier transform",
        ));
    }
    let moment = || -> Result<f64> {
        match tf.profile {
            Profile::Gaussian { a } => gaussian_moment_with(s, tf.dim, a, gamma),
            _ => spectral_integral(tf, |r| r.powf(2.0 * s)),
        }
    };
    let four_pi = 4.0 * PI;
    let e2 = |i: f64| 4.0 * PI * PI * four_pi.powf(2.0 * s - 2.0) * gamma(2.0 - 2.0 * s) * i;
    let f2 = |i: f64| (2.0 * PI).powi(4) * four_pi.powf(2.0 * s - 4.0) * gamma(4.0 - 2.0 * s) * i;
    let squared = match which {
        Seminorm::E => e2(moment()?),
        Seminorm::FCont => f2(moment()?),
        Seminorm::M => f2(moment()?) / (2.0 - 2.0 * s),
        Seminorm::W => gagliardo_level_constant(tf.dim, s)? * moment()?,
        Seminorm::FDisc(kernel) => spectral_integral(tf, dyadic_weight(kernel, s))?,
    };
    Ok(squared.sqrt())
}

/// `‖∇f‖₂ = 2π I₂^{1/2}` from the closed Gaussian moment.
pub fn gradient_l2_exact(tf: &TestFunction) -> Result<f64> {
    Ok(2.0 * PI * spectral_moment(tf, 1.0)?.value.sqrt())
}

/// Successive values and relative changes under simultaneous grid and node-density doubling.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub values: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Each delta at most the previous one.
    pub monotone: bool,
    /// Some delta above the floor failed to shrink by at least 2×.
    pub stagnating: bool,
    pub error: Option<String>,
}

/// Re-runs `evaluator` on `budget_doublings` successive refinements of `(grid, quad)`.
pub fn refine_check(
    grid: &GridSpec,
    quad: &QuadratureSpec,
    budget_doublings: usize,
    evaluator: impl Fn(&GridSpec, &QuadratureSpec) -> Result<f64>,
) -> ConvergenceReport {
    const FLOOR: f64 = 1e-12;
    let mut values = Vec::new();
    let mut error = None;
    let mut g = *grid;
    let mut q = *quad;
    for level in 0..=budget_doublings {
        if level > 0 {
            match g.refined() {
                Ok(next) => g = next,
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
            q = QuadratureSpec {
                t_min: q.t_min / 2.0,
                z_r_min: q.z_r_min / 2.0,
                ..q.refined()
            };
        }
        match evaluator(&g, &q) {
            Ok(v) => values.push(v),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let deltas: Vec<f64> = values
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[1]).abs())
        .collect();
    let monotone = deltas.windows(2).all(|d| d[1] <= d[0] || d[1] < FLOOR);
    let stagnating = deltas
        .windows(2)
        .any(|d| d[1] > FLOOR && d[1] > 0.5 * d[0]);
    ConvergenceReport {
        values,
        deltas,
        monotone,
        stagnating,
        error,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub s: f64,
    pub closed: f64,
    pub brute: f64,
    pub rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheckReport {
    pub rows: Vec<IdentityCheck>,
    pub tolerance: f64,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.rel <= self.tolerance)
    }
}

impl fmt::Display for OracleCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} s={:.2} closed={:.16e} brute={:.16e} rel={:.3e} {}",
                r.name,
                r.s,
                r.closed,
                r.brute,
                r.rel,
                if r.rel <= self.tolerance { "ok" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "oracle-check: {} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.tolerance
        )
    }
}

/// Trapezoid nodes in `ln x` on `[lo, hi]` with step `du`: `(x, weight for dx)`.
fn log_nodes(lo: f64, hi: f64, du: f64) -> Vec<(f64, f64)> {
    let steps = ((hi / lo).ln() / du).ceil() as usize;
    let du = (hi / lo).ln() / steps as f64;
    (0..=steps)
        .map(|k| {
            let x = lo * (k as f64 * du).exp();
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 } * du * x;
            (x, w)
        })
        .collect()
}

/// Brute-force `∫∫ g(ξ, t) dt dξ` over `ξ ∈ ℝ`, `t > 0` for the unit Gaussian.
fn brute_xi_t(kernel: impl Fn(f64, f64) -> f64) -> f64 {
    let xi_nodes = log_nodes(1e-14, 6.0, 0.02);
    xi_nodes
        .iter()
        .map(|&(xi, wx)| {
            let t_nodes = log_nodes(1e-22 / xi, 60.0 / xi, 0.02);
            let inner: f64 = t_nodes.iter().map(|&(t, wt)| wt * kernel(xi, t)).sum();
            2.0 * wx * (-2.0 * PI * xi * xi).exp() * inner
        })
        .sum()
}

/// Gamma identities against brute-force quadrature, with an injectable Gamma function.
pub fn oracle_check_with(gamma: GammaFn) -> OracleCheckReport {
    let tolerance = 1e-6;
    let mut rows = Vec::new();
    let mut push = |name, s, closed: f64, brute: f64| {
        rows.push(IdentityCheck {
            name,
            s,
            closed,
            brute,
            rel: ((closed - brute) / brute).abs(),
        })
    };
    let tf = TestFunction {
        profile: Profile::Gaussian { a: 1.0 },
        dim: 1,
        center: [0.0; 2],
    };
    for s in [0.3, 0.5, 0.7] {
        let moment = gaussian_moment_with(s, 1, 1.0, gamma).unwrap_or(f64::NAN);
        let brute_moment = brute_xi_t(|xi, t| {
            // the t-integral of ξ e^{-tξ} is 1
            xi.powf(2.0 * s) * (-t * xi).exp() * xi
        });
        push("moment", s, moment, brute_moment);

        let e = hilbertian_with(&tf, s, Seminorm::E, gamma).unwrap_or(f64::NAN);
        let brute_e = brute_xi_t(|xi, t| {
            t.powf(1.0 - 2.0 * s) * (2.0 * PI * xi).powi(2) * (-4.0 * PI * t * xi).exp()
        });
        push("E", s, e * e, brute_e);

        let fc = hilbertian_with(&tf, s, Seminorm::FCont, gamma).unwrap_or(f64::NAN);
        let brute_f = brute_xi_t(|xi, t| {
            t.powf(3.0 - 2.0 * s) * (2.0 * PI * xi).powi(4) * (-4.0 * PI * t * xi).exp()
        });
        push("F_cont", s, fc * fc, brute_f);

        let m = hilbertian_with(&tf, s, Seminorm::M, gamma).unwrap_or(f64::NAN);
        // ∫_r^∞ t (2πξ)⁴ e^{-4πtξ} dt = (2πξ)⁴ e^{-cr}(cr + 1)/c², c = 4πξ
        let brute_m = brute_xi_t(|xi, r| {
            let c = 4.0 * PI * xi;
            r.powf(1.0 - 2.0 * s) * (2.0 * PI * xi).powi(4) * (-c * r).exp() * (c * r + 1.0)
                / (c * c)
        });
        push("M", s, m * m, brute_m);

        let closed_a = level_constant_closed(s, gamma);
        let quad_a = gagliardo_level_constant(1, s).unwrap_or(f64::NAN);
        push("A(1,s)", s, closed_a, quad_a);
    }
    OracleCheckReport { rows, tolerance }
}

pub fn oracle_check() -> OracleCheckReport {
    oracle_check_with(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gaussian_moment_examples() {
        assert!(rel(gaussian_spectral_moment(0.0, 1, 1.0).unwrap(), 0.5f64.sqrt()) < 1e-14);
        assert!(rel(gaussian_spectral_moment(0.5, 1, 1.0).unwrap(), 1.0 / (2.0 * PI)) < 1e-14);
        let exact = (2.0 * PI).powf(-1.5) * PI.sqrt() / 2.0;
        assert!(rel(gaussian_spectral_moment(1.0, 1, 1.0).unwrap(), exact) < 1e-14);
        assert!(gaussian_spectral_moment(1.2, 1, 1.0).is_err());
    }

    #[test]
    fn moment_matches_spectral_quadrature() {
        for (n, a) in [(1, 1.0), (1, 2.5), (2, 1.0), (2, 0.7)] {
            let tf = TestFunction::gaussian(a, n).unwrap();
            for s in [0.1, 0.5, 0.9] {
                let closed = gaussian_spectral_moment(s, n, a).unwrap();
                let quad = spectral_integral(&tf, |r| r.powf(2.0 * s)).unwrap();
                assert!(rel(closed, quad) < 1e-9, "n={n} a={a} s={s}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn level_constant_values() {
        assert!(rel(gagliardo_level_constant(1, 0.5).unwrap(), 4.0 * PI * PI) < 1e-8);
        for s in [0.05, 0.3, 0.7, 0.95] {
            let q = gagliardo_level_constant(1, s).unwrap();
            assert!(rel(q, level_constant_closed(s, gamma)) < 1e-8, "s={s}");
        }
        // (1-s) A(1,s) → 2π(2π)²/(Γ(3)π) = 4π²
        let limit = 4.0 * PI * PI;
        let mut prev = f64::INFINITY;
        for k in 4..=10 {
            let s = 1.0 - 2f64.powi(-k);
            let gap = rel(gagliardo_level_constant(1, s).unwrap() * (1.0 - s), limit);
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn level_constant_normalized_bounds() {
        for k in 1..=19 {
            let s = 0.05 * k as f64;
            let a = gagliardo_level_constant(1, s).unwrap();
            assert!(a * s * (1.0 - s) < 40.0 && a * s * (1.0 - s) > 1.0);
        }
    }

    #[test]
    fn hilbertian_examples() {
        let tf = TestFunction::gaussian(1.0, 1).unwrap();
        let e = hilbertian_exact(&tf, 0.5, Seminorm::E).unwrap();
        assert!(rel(e, 0.5f64.sqrt()) < 1e-12);
        let w = hilbertian_exact(&tf, 0.5, Seminorm::W).unwrap();
        assert!(rel(w, (2.0 * PI).sqrt()) < 1e-8);
        assert!(hilbertian_exact(&TestFunction::bump(1.0, 1).unwrap(), 0.5, Seminorm::E).is_err());
    }

    #[test]
    fn extension_limit_recovers_gradient() {
        let tf = TestFunction::gaussian(1.0, 1).unwrap();
        let target = gradient_l2_exact(&tf).unwrap() / 2f64.sqrt();
        let mut prev = f64::INFINITY;
        for k in 4..=10 {
            let s = 1.0 - 2f64.powi(-k);
            let scaled = hilbertian_exact(&tf, s, Seminorm::E).unwrap() * (1.0 - s).sqrt();
            let gap = rel(scaled, target);
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn dyadic_oracle_is_dilation_covariant() {
        let tf = TestFunction::gaussian(1.0, 1).unwrap();
        let s = 0.4;
        let f = hilbertian_exact(&tf, s, Seminorm::FDisc(Kernel::Poisson)).unwrap();
        let g = hilbertian_exact(&tf.dilated(2.0), s, Seminorm::FDisc(Kernel::Poisson)).unwrap();
        assert!(rel(g, 2f64.powf(s - 0.5) * f) < 1e-9);
    }

    #[test]
    fn oracle_check_passes_and_detects_faults() {
        let report = oracle_check();
        assert!(report.passed(), "{report}");
        fn bad_gamma(x: f64) -> f64 {
            gamma(x) * (1.0 + 1e-4 * x)
        }
        assert!(!oracle_check_with(bad_gamma).passed());
    }

    #[test]
    fn refine_check_reports_deltas() {
        let grid = GridSpec::new(1, 20.0, 1 << 10).unwrap();
        let quad = QuadratureSpec::for_grid(&grid);
        let report = refine_check(&grid, &quad, 2, |g, _| {
            let f = crate::grid::sample(&TestFunction::gaussian(1.0, 1).unwrap(), g)?;
            crate::grid::lp_norm(&f, 2.0)
        });
        assert_eq!(report.values.len(), 3);
        assert!(report.deltas.iter().all(|d| *d < 1e-10));
        assert!(report.error.is_none());
    }
}
