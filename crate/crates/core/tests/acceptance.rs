//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line and then asserts.
//!
//! Reference values at p = q = 2 come from a brute-force quadrature written here, independent
//! of the crate's Gamma closed forms: for f(x) = exp(-πx²), |f̂(ξ)|² = exp(-2πξ²) and every
//! seminorm squared is an explicit integral over (ξ, t) or over the difference step z.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use fracspace_core::experiments::{
    bbm1_limit, catalog, kernel_equivalence_scan, lower_sobolev_grid, slope_fit,
    sobolev_interpolation_check, sharpness_scan, InterpolationTriple, LowerSobolevParams, Pair,
    SGrid, Target, Thresholds, S_CAP,
};
use fracspace_core::grid::{sample, GridSpec, TestFunction};
use fracspace_core::oracle::{hilbertian_exact, oracle_check, refine_check};
use fracspace_core::seminorms::{Seminorm, SeminormEngine, SeminormParams};
use fracspace_core::spectral::{
    apply_multiplier, frac_laplacian_difference, frac_laplacian_spectral, Kernel, MultiplierKind,
};
use fracspace_core::{QuadratureSpec, SampledFunction};

/// Writes past the test harness capture so the verdict lines appear in the log.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

const ORACLE_TOL: f64 = 5e-3;
const ORACLE_TOL_M: f64 = 1e-2;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const BBM_LIMIT_TOL: f64 = 0.02;
const BBM_SPREAD_TOL: f64 = 0.03;
const BLOWUP_SLOPE: f64 = -0.5;
const BLOWUP_SLOPE_TOL: f64 = 0.05;
const CROSS_FAMILY_BAND: f64 = 50.0;
const KERNEL_BAND: f64 = 10.0;
const UNIFORMITY: f64 = 20.0;
const HOMOGENEITY_TOL: f64 = 1e-6;
const TRANSLATION_TOL: f64 = 1e-10;
const BULK_SPREAD_TOL: f64 = 1e-2;
const SEMIGROUP_TOL: f64 = 1e-10;
const REFINEMENT_TOL: f64 = 1e-3;
const ORACLE_CHECK_TOL: f64 = 1e-6;
const ORACLE_CHECK_BUDGET: Duration = Duration::from_secs(30);

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn gaussian() -> TestFunction {
    TestFunction::gaussian(1.0, 1).unwrap()
}

fn engine_for(tf: &TestFunction) -> SeminormEngine {
    let spec = GridSpec::default_for(tf.dim).unwrap();
    SeminormEngine::with_defaults(sample(tf, &spec).unwrap()).unwrap()
}

/// Trapezoid rule in `u = ln x` over `[lo, hi]`; `g(x)` is the integrand times `x`.
fn log_trapezoid(lo: f64, hi: f64, step: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / step).ceil() as usize;
    let h = (hi - lo) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * g((lo + i as f64 * h).exp())
        })
        .sum::<f64>()
        * h
}

/// Independent p = q = 2 values for exp(-πx²).
mod brute {
    use super::*;

    const STEP: f64 = 0.02;
    const XI_LO: f64 = -25.0;
    const XI_HI: f64 = 2.5;
    const T_LO: f64 = -60.0;
    const T_HI: f64 = 30.0;

    fn spectrum(xi: f64) -> f64 {
        (-2.0 * PI * xi * xi).exp()
    }

    /// `2 ∫₀^∞ |f̂(ξ)|² K(ξ) dξ`
    fn over_xi(kernel: impl Fn(f64) -> f64 + Sync) -> f64 {
        2.0 * log_trapezoid(XI_LO, XI_HI, STEP, |xi| xi * spectrum(xi) * kernel(xi))
    }

    /// `∫₀^∞ t^{β-1} (2πξ)^{2m} e^{-4πtξ} dt`, with the t < e^{T_LO} piece taken analytically.
    fn t_moment(xi: f64, beta: f64, m: i32) -> f64 {
        let c = (2.0 * PI * xi).powi(2 * m);
        let body = log_trapezoid(T_LO, T_HI, STEP, |t| t.powf(beta) * (-4.0 * PI * t * xi).exp());
        c * (body + T_LO.exp().powf(beta) / beta)
    }

    /// ∬ |f(x+z) - f(x)|² |z|^{-1-2s} dz dx = 2√2 ∫₀^∞ (1 - e^{-πz²/2}) z^{-1-2s} dz
    pub fn w(s: f64) -> f64 {
        let (lo, hi) = (-30.0f64, 20.0f64);
        let body = log_trapezoid(lo, hi, STEP, |z| -(-PI * z * z / 2.0).exp_m1() * z.powf(-2.0 * s));
        let small = PI / 2.0 * lo.exp().powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
        let large = hi.exp().powf(-2.0 * s) / (2.0 * s);
        (2.0 * SQRT_2 * (body + small + large)).sqrt()
    }

    pub fn e(s: f64) -> f64 {
        over_xi(|xi| t_moment(xi, 2.0 - 2.0 * s, 1)).sqrt()
    }

    pub fn f_cont(s: f64) -> f64 {
        over_xi(|xi| t_moment(xi, 4.0 - 2.0 * s, 2)).sqrt()
    }

    pub fn f_disc(s: f64) -> f64 {
        over_xi(|xi| {
            (-80..=80)
                .map(|j| {
                    let r = 2f64.powi(-j) * xi;
                    2f64.powf(2.0 * j as f64 * s) * r.powi(4) * (-4.0 * PI * r).exp()
                })
                .sum()
        })
        .sqrt()
    }

    /// ∫ r^{1-2s} ∫_r^∞ t |∂²_t P_t f|² dt dr, nested numerically.
    pub fn m(s: f64) -> f64 {
        over_xi(|xi| {
            // the cumulative tail is only second order, so it gets a finer step
            let n = ((T_HI - T_LO) / (STEP / 8.0)).ceil() as usize;
            let h = (T_HI - T_LO) / n as f64;
            let c = (2.0 * PI * xi).powi(4);
            let ts: Vec<f64> = (0..=n).map(|i| (T_LO + i as f64 * h).exp()).collect();
            let inner: Vec<f64> = ts.iter().map(|t| t * t * (-4.0 * PI * t * xi).exp()).collect();
            // tail[i] = ∫_{t_i}^∞ t (...) dt by cumulative trapezoid from the top
            let mut tail = vec![0.0; n + 1];
            for i in (0..n).rev() {
                tail[i] = tail[i + 1] + 0.5 * h * (inner[i] + inner[i + 1]);
            }
            let outer: f64 = (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * ts[i].powf(2.0 - 2.0 * s) * tail[i]
                })
                .sum::<f64>()
                * h;
            c * (outer + tail[0] * ts[0].powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s))
        })
        .sqrt()
    }

    pub fn value(which: Seminorm, s: f64) -> f64 {
        match which {
            Seminorm::W => w(s),
            Seminorm::E => e(s),
            Seminorm::FCont => f_cont(s),
            Seminorm::FDisc(_) => f_disc(s),
            Seminorm::M => m(s),
        }
    }
}

#[test]
fn brute_force_reference_agrees_with_closed_forms() {
    let tf = gaussian();
    for s in [0.3, 0.5, 0.7, 0.9] {
        for which in [
            Seminorm::W,
            Seminorm::E,
            Seminorm::FCont,
            Seminorm::FDisc(Kernel::Poisson),
            Seminorm::M,
        ] {
            let a = brute::value(which, s);
            let b = hilbertian_exact(&tf, s, which).unwrap();
            assert!(rel(a, b) < 1e-6, "{} s={s}: brute {a} closed {b}", which.label());
        }
    }
    assert!(rel(brute::e(0.5), 0.5f64.sqrt()) < 1e-8);
    assert!(rel(brute::w(0.5), (2.0 * PI).sqrt()) < 1e-8);
}

#[test]
fn criterion_1_hilbertian_oracle_equivalence() {
    let start = Instant::now();
    let engine = engine_for(&gaussian());
    let mut worst = (0.0f64, String::new());
    let mut ok = true;
    for s in [0.3, 0.5, 0.7, 0.9] {
        let params = SeminormParams::new(s, 2.0, 2.0).unwrap();
        for which in [
            Seminorm::W,
            Seminorm::E,
            Seminorm::FCont,
            Seminorm::FDisc(Kernel::Poisson),
            Seminorm::M,
        ] {
            let tol = if which == Seminorm::M { ORACLE_TOL_M } else { ORACLE_TOL };
            let got = engine.evaluate(which, &params).unwrap().value;
            let err = rel(got, brute::value(which, s));
            ok &= err < tol;
            if err / tol > worst.0 {
                worst = (err / tol, format!("{} s={s} rel={err:.2e} tol={tol:.0e}", which.label()));
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < ORACLE_BUDGET;
    say!(
        "criterion 1: {} hilbertian oracle equivalence, worst {} , {:.1?} (budget {:?})",
        verdict(ok),
        worst.1,
        elapsed,
        ORACLE_BUDGET
    );
    assert!(ok);
}

#[test]
fn criterion_2_bbm_limit() {
    let engine = engine_for(&gaussian());
    let th = Thresholds::default();
    let grid = SGrid::default();
    assert_eq!(grid.max(), S_CAP);
    let hilbert = bbm1_limit(&engine, 2.0, 2.0, &grid, &th).unwrap();
    let last = hilbert.rows.last().unwrap().ratio;
    let limit_err = rel(last, 0.5f64.sqrt());
    let mut ok = limit_err < BBM_LIMIT_TOL && hilbert.verdict.is_pass();
    let mut notes = format!("R(1-2^-10)={last:.5} vs 2^-1/2 rel={limit_err:.2e}");
    for (p, q) in [(2.0, 3.0), (3.0, 2.0)] {
        let r = bbm1_limit(&engine, p, q, &grid, &th).unwrap();
        let tail: Vec<f64> = r.ratios().iter().rev().take(3).copied().collect();
        let hi = tail.iter().cloned().fold(0.0, f64::max);
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = hi / lo - 1.0;
        ok &= spread < BBM_SPREAD_TOL && r.verdict.is_pass();
        notes.push_str(&format!("; (p,q)=({p},{q}) spread={spread:.2e}"));
    }
    say!("criterion 2: {} BBM limit, {notes}", verdict(ok));
    assert!(ok);
}

#[test]
fn criterion_3_blowup_slope() {
    let tf = gaussian();
    let engine = engine_for(&tf);
    let mut s: Vec<f64> = vec![0.9];
    s.extend((4..=10).map(|k| 1.0 - 2f64.powi(-k)));
    let oracle: Vec<f64> = s
        .iter()
        .map(|&s| hilbertian_exact(&tf, s, Seminorm::E).unwrap())
        .collect();
    let measured: Vec<f64> = s
        .iter()
        .map(|&s| {
            let p = SeminormParams::new(s, 2.0, 2.0).unwrap();
            engine.evaluate(Seminorm::E, &p).unwrap().value
        })
        .collect();
    let a = slope_fit(&s, &oracle).unwrap().slope;
    let b = slope_fit(&s, &measured).unwrap().slope;
    let ok = (a - BLOWUP_SLOPE).abs() <= BLOWUP_SLOPE_TOL && (b - BLOWUP_SLOPE).abs() <= BLOWUP_SLOPE_TOL;
    say!(
        "criterion 3: {} blow-up slope, oracle {a:.4}, engine {b:.4}, target {BLOWUP_SLOPE}±{BLOWUP_SLOPE_TOL}",
        verdict(ok)
    );
    assert!(ok);
}

#[test]
fn criterion_4_sandwich_bands() {
    let th = Thresholds::default();
    let grid = SGrid::default();
    let theta = Some(0.4);
    let mut worst = (0.0f64, String::new());
    let mut ok = true;
    for tf in catalog(1).unwrap() {
        let engine = engine_for(&tf);
        let mut runs: Vec<(Pair, f64, f64)> = Vec::new();
        for (p, q) in [(2.0, 2.0), (2.0, 3.0), (3.0, 2.0)] {
            runs.push((Pair::EvsF, p, q));
            runs.push((Pair::EvsFp2, p, q));
            runs.push((Pair::WvsF, p, q));
            if q == 2.0 {
                runs.push((Pair::WvsE, p, q));
            }
        }
        for (pair, p, q) in runs {
            let r = sharpness_scan(&engine, p, q, theta, &grid, pair, &th).unwrap();
            assert_eq!(r.summary.window[0], 0.5);
            assert_eq!(r.summary.window[1], S_CAP);
            let band = r.summary.band;
            ok &= band < CROSS_FAMILY_BAND;
            if band > worst.0 {
                worst = (band, format!("{pair} {} p={p} q={q}", tf.label()));
            }
        }
        let k = kernel_equivalence_scan(&engine, 2.0, 2.0, &SGrid::kernel_default(), &th).unwrap();
        assert_eq!(k.summary.window, [0.1, 0.95]);
        ok &= k.summary.band < KERNEL_BAND;
        say!("  kernel band {} = {:.3}", tf.label(), k.summary.band);
    }
    say!(
        "criterion 4: {} sandwich bands, worst cross-family band {:.3} ({}) < {CROSS_FAMILY_BAND}, kernel bands < {KERNEL_BAND}",
        verdict(ok),
        worst.0,
        worst.1
    );
    assert!(ok);
}

#[test]
fn criterion_5_interpolation_and_lower_sobolev() {
    let th = Thresholds::default();
    let triples = InterpolationTriple::default_grid();
    assert_eq!(triples.len(), 12);
    let thetas = [1.5, 2.0, 4.0];
    let mut ok = true;
    let mut worst = 0.0f64;
    for tf in catalog(1).unwrap() {
        let engine = engine_for(&tf);
        let r = sobolev_interpolation_check(&engine, 2.0, 2.0, None, &triples, Target::E, &th)
            .unwrap();
        assert_eq!(r.rows.len(), 12);
        let spread = r.meta["c_max_over_median"].as_f64().unwrap();
        ok &= r.verdict.is_pass() && spread < UNIFORMITY;
        worst = worst.max(spread);

        let r = lower_sobolev_grid(&engine, 2.0, 2.0, &thetas, None, Target::E, None, &th).unwrap();
        assert_eq!(r.rows.len(), 18);
        for big in thetas {
            assert_eq!(LowerSobolevParams::new(big).unwrap().default_s_grid().unwrap().len(), 6);
        }
        let ratios = r.ratios();
        let mut sorted = ratios.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let spread = sorted[sorted.len() - 1] / sorted[sorted.len() / 2];
        ok &= r.verdict.is_pass() && spread < UNIFORMITY;
        worst = worst.max(spread);
    }
    say!(
        "criterion 5: {} interpolation (12 triples) and lower Sobolev (3x6 grid), worst C max/median {worst:.3} < {UNIFORMITY}",
        verdict(ok)
    );
    assert!(ok);
}

fn rel_l2(a: &SampledFunction, b: &SampledFunction) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.values.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

const ALL: [Seminorm; 5] = [
    Seminorm::W,
    Seminorm::E,
    Seminorm::FCont,
    Seminorm::FDisc(Kernel::Poisson),
    Seminorm::M,
];

#[test]
fn criterion_6_invariants() {
    let tf = gaussian();
    let spec = GridSpec::default_for(1).unwrap();
    let f = sample(&tf, &spec).unwrap();
    let engine = SeminormEngine::with_defaults(f.clone()).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;

    // homogeneity: g = f(2·) sampled on the half-size grid
    let g_spec = spec.scaled(0.5).unwrap();
    let g = SeminormEngine::with_defaults(sample(&tf.dilated(2.0), &g_spec).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for (s, p, q) in [(0.5, 2.0, 2.0), (0.3, 3.0, 2.0), (0.7, 2.0, 3.0)] {
        let params = SeminormParams::new(s, p, q).unwrap();
        for which in ALL {
            let a = engine.evaluate(which, &params).unwrap().value;
            let b = g.evaluate(which, &params).unwrap().value;
            worst = worst.max(rel(b, 2f64.powf(s - 1.0 / p) * a));
        }
    }
    ok &= worst < HOMOGENEITY_TOL;
    notes.push(format!("homogeneity {worst:.1e}"));

    // translation by 512 grid steps
    let shifted = tf.translated(&[512.0 * spec.spacing()]);
    let t = SeminormEngine::with_defaults(sample(&shifted, &spec).unwrap()).unwrap();
    let mut worst = 0.0f64;
    for (s, p, q) in [(0.5, 2.0, 2.0), (0.7, 3.0, 2.0)] {
        let params = SeminormParams::new(s, p, q).unwrap();
        for which in ALL {
            let a = engine.evaluate(which, &params).unwrap().value;
            let b = t.evaluate(which, &params).unwrap().value;
            worst = worst.max(rel(b, a));
        }
    }
    ok &= worst < TRANSLATION_TOL;
    notes.push(format!("translation {worst:.1e}"));

    // difference vs spectral fractional Laplacian: constant ratio on |x| ≤ L/2
    let quad = QuadratureSpec::for_grid(&spec);
    let mut worst = 0.0f64;
    for s in [0.3, 0.5, 0.7] {
        let d = frac_laplacian_difference(&f, s, &quad).unwrap();
        let sp = frac_laplacian_spectral(&f, s).unwrap();
        let floor = 1e-3 * sp.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ratios: Vec<f64> = (0..spec.len())
            .filter(|&i| spec.coordinate(i).abs() <= spec.half_width() / 2.0 && sp.values[i].abs() > floor)
            .map(|i| d.values[i] / sp.values[i])
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
        worst = worst.max(var.sqrt() / mean.abs());
    }
    ok &= worst < BULK_SPREAD_TOL;
    notes.push(format!("bulk ratio spread {worst:.1e}"));

    // semigroup P_t P_r = P_{t+r}
    let mut worst = 0.0f64;
    for (t, r) in [(0.01, 0.2), (0.5, 1.3)] {
        let once = apply_multiplier(&f, MultiplierKind::PoissonSemigroup { t: t + r }).unwrap();
        let a = apply_multiplier(&f, MultiplierKind::PoissonSemigroup { t }).unwrap();
        let twice = apply_multiplier(&a, MultiplierKind::PoissonSemigroup { t: r }).unwrap();
        worst = worst.max(rel_l2(&twice, &once));
    }
    ok &= worst < SEMIGROUP_TOL;
    notes.push(format!("semigroup {worst:.1e}"));

    // one doubling of N and nodes_per_decade
    let mut worst = 0.0f64;
    let params = SeminormParams::new(0.5, 2.0, 2.0).unwrap();
    for which in ALL {
        let report = refine_check(&spec, &quad, 1, |grid, quad| {
            let f = sample(&tf, grid)?;
            Ok(SeminormEngine::new(f, *quad)?.evaluate(which, &params)?.value)
        });
        assert!(report.error.is_none(), "{:?}", report.error);
        worst = worst.max(report.deltas[0]);
    }
    ok &= worst < REFINEMENT_TOL;
    notes.push(format!("refinement {worst:.1e}"));

    say!("criterion 6: {} invariants, {}", verdict(ok), notes.join(", "));
    assert!(ok);
}

#[test]
fn criterion_7_oracle_check() {
    let start = Instant::now();
    let report = oracle_check();
    let elapsed = start.elapsed();
    let worst = report.rows.iter().map(|r| r.rel).fold(0.0, f64::max);
    let ok = report.passed() && worst < ORACLE_CHECK_TOL && elapsed < ORACLE_CHECK_BUDGET;
    let grid: Vec<f64> = {
        let mut v: Vec<f64> = report.rows.iter().map(|r| r.s).collect();
        v.dedup();
        v
    };
    for s in [0.3, 0.5, 0.7] {
        assert!(grid.contains(&s), "oracle-check misses s={s}");
    }
    say!(
        "criterion 7: {} oracle-check, worst rel {worst:.1e} < {ORACLE_CHECK_TOL:.0e}, {elapsed:.1?} (budget {ORACLE_CHECK_BUDGET:?})",
        verdict(ok)
    );
    assert!(ok);
}
