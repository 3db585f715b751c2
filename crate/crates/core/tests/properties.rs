use std::sync::OnceLock;

use proptest::prelude::*;

use fracspace_core::experiments::{slope_fit, SGrid};
use fracspace_core::grid::{sample, GridSpec, TestFunction};
use fracspace_core::seminorms::{Seminorm, SeminormEngine, SeminormParams};
use fracspace_core::spectral::Kernel;

const WHICH: [Seminorm; 6] = [
    Seminorm::W,
    Seminorm::E,
    Seminorm::FCont,
    Seminorm::FDisc(Kernel::Poisson),
    Seminorm::FDisc(Kernel::Bandlimited),
    Seminorm::M,
];

fn base_grid() -> GridSpec {
    GridSpec::new(1, 20.0, 4096).unwrap()
}

fn base_engine() -> &'static SeminormEngine {
    static ENGINE: OnceLock<SeminormEngine> = OnceLock::new();
    ENGINE.get_or_init(|| {
        let tf = TestFunction::gaussian(1.0, 1).unwrap();
        SeminormEngine::with_defaults(sample(&tf, &base_grid()).unwrap()).unwrap()
    })
}

/// Value of one seminorm; `None` when the engine declines the input as under-resolved.
fn value(e: &SeminormEngine, which: Seminorm, params: &SeminormParams) -> Option<f64> {
    match e.evaluate(which, params) {
        Ok(v) => Some(v.value),
        Err(err) if err.is_resolution() => None,
        Err(err) => panic!("{}: {err}", which.label()),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dilation_scales_by_lambda_power(
        s in 0.25f64..0.9,
        p in 1.5f64..4.0,
        q in 1.5f64..4.0,
        k in 0usize..6,
    ) {
        let which = WHICH[k];
        // W needs p > q/(1 + sq) to be finite
        prop_assume!(which != Seminorm::W || p > q / (1.0 + s * q));
        let tf = TestFunction::gaussian(1.0, 1).unwrap();
        let g_spec = base_grid().scaled(0.5).unwrap();
        let g = SeminormEngine::with_defaults(sample(&tf.dilated(2.0), &g_spec).unwrap()).unwrap();
        let params = SeminormParams::new(s, p, q).unwrap();
        let a = value(base_engine(), which, &params);
        let b = value(&g, which, &params);
        prop_assume!(a.is_some() && b.is_some());
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assert!(rel(b, 2f64.powf(s - 1.0 / p) * a) < 1e-6, "{} {a} {b}", which.label());
    }

    #[test]
    fn grid_translation_leaves_seminorms_unchanged(
        shift in -300i32..300,
        s in 0.25f64..0.9,
        p in 1.5f64..3.0,
        k in 0usize..6,
    ) {
        let which = WHICH[k];
        let spec = base_grid();
        let tf = TestFunction::gaussian(1.0, 1).unwrap().translated(&[shift as f64 * spec.spacing()]);
        let e = SeminormEngine::with_defaults(sample(&tf, &spec).unwrap()).unwrap();
        let params = SeminormParams::new(s, p, 2.0).unwrap();
        let a = value(base_engine(), which, &params);
        let b = value(&e, which, &params);
        prop_assume!(a.is_some() && b.is_some());
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assert!(rel(b, a) < 1e-10, "{} {a} {b}", which.label());
    }

    #[test]
    fn seminorms_are_homogeneous_of_degree_one(c in 0.1f64..10.0, s in 0.25f64..0.9, k in 0usize..6) {
        let which = WHICH[k];
        let f = base_engine().function();
        let scaled = fracspace_core::SampledFunction::from_values(
            f.spec,
            f.values.iter().map(|v| c * v).collect(),
        )
        .unwrap();
        let e = SeminormEngine::with_defaults(scaled).unwrap();
        let params = SeminormParams::new(s, 2.0, 2.0).unwrap();
        let a = value(base_engine(), which, &params);
        let b = value(&e, which, &params);
        prop_assume!(a.is_some() && b.is_some());
        prop_assert!(rel(b.unwrap(), c * a.unwrap()) < 1e-9);
    }
}

proptest! {
    #[test]
    fn slope_fit_recovers_power_laws(
        c in 0.01f64..100.0,
        alpha in -2.0f64..2.0,
        k0 in 1i32..4,
        len in 4usize..9,
    ) {
        let s: Vec<f64> = (0..len).map(|i| 1.0 - 2f64.powi(-(k0 + i as i32))).collect();
        let v: Vec<f64> = s.iter().map(|s| c * (1.0 - s).powf(alpha)).collect();
        let fit = slope_fit(&s, &v).unwrap();
        prop_assert!((fit.slope - alpha).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        prop_assert!(fit.residual < 1e-9);
    }

    #[test]
    fn s_grid_is_sorted_and_inside_the_unit_interval(values in prop::collection::btree_set(1u32..999, 1..20)) {
        let raw: Vec<f64> = values.iter().rev().map(|v| *v as f64 / 1000.0).collect();
        let grid = SGrid::new(raw.clone()).unwrap();
        prop_assert_eq!(grid.len(), raw.len());
        prop_assert!(grid.values().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(grid.min() > 0.0 && grid.max() < 1.0);
    }

    #[test]
    fn s_grid_rejects_values_outside(bad in prop_oneof![-5.0f64..=0.0, 1.0f64..5.0]) {
        prop_assert!(SGrid::new(vec![0.5, bad]).is_err());
    }

    #[test]
    fn admissibility_matches_reciprocal_form(
        p in 1.05f64..6.0,
        q in 1.05f64..6.0,
        theta in 0.01f64..0.89,
        n in 1usize..3,
    ) {
        let params = SeminormParams::new(0.5, p, q).unwrap().with_theta(theta).unwrap();
        let direct = params.admissible_w(n).unwrap();
        // p > nq/(n + θq)  ⟺  1/p < 1/q + θ/n
        let lhs = 1.0 / p;
        let rhs = 1.0 / q + theta / n as f64;
        if (lhs - rhs).abs() > 1e-12 {
            prop_assert_eq!(direct, lhs < rhs);
        }
        if direct {
            let looser = params.with_theta(theta + 0.1).unwrap();
            prop_assert!(looser.admissible_w(n).unwrap());
        }
        let dual = params.admissible_dual(n).unwrap();
        let (pc, qc) = (p / (p - 1.0), q / (q - 1.0));
        if (1.0 / pc - 1.0 / qc - theta / n as f64).abs() > 1e-12 {
            prop_assert_eq!(dual, 1.0 / pc < 1.0 / qc + theta / n as f64);
        }
    }
}
