use fracspace_core::experiments::{sharpness_scan, Pair, SGrid, Thresholds};
use fracspace_core::grid::{sample, GridSpec, TestFunction};
use fracspace_core::seminorms::{Seminorm, SeminormEngine, SeminormParams};
use fracspace_core::spectral::Kernel;

fn engine(tf: &TestFunction, spec: &GridSpec) -> SeminormEngine {
    SeminormEngine::with_defaults(sample(tf, spec).unwrap()).unwrap()
}

fn band(ratios: &[f64]) -> f64 {
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

#[test]
fn scan_ratios_ignore_translation_and_dilation() {
    let spec = GridSpec::default_for(1).unwrap();
    let tf = TestFunction::modulated_gaussian(1.0, 4.0, 1).unwrap();
    let grid = SGrid::new(vec![0.5, 0.75, 0.9, 0.99]).unwrap();
    let th = Thresholds::default();
    let scan = |e: &SeminormEngine, pair| sharpness_scan(e, 2.0, 3.0, Some(0.4), &grid, pair, &th).unwrap();
    let base = engine(&tf, &spec);
    let moved = engine(&tf.translated(&[512.0 * spec.spacing()]), &spec);
    let dilated = engine(&tf.dilated(2.0), &spec.scaled(0.5).unwrap());
    for pair in [Pair::EvsF, Pair::WvsF] {
        let r0 = scan(&base, pair);
        for other in [&moved, &dilated] {
            let r1 = scan(other, pair);
            for (a, b) in r0.rows.iter().zip(&r1.rows) {
                assert!((a.ratio - b.ratio).abs() < 1e-6 * a.ratio, "{pair} s={}: {} vs {}", a.s, a.ratio, b.ratio);
            }
        }
    }
}

#[test]
fn continuous_and_dyadic_triebel_forms_stay_comparable() {
    let e = engine(&TestFunction::gaussian(1.0, 1).unwrap(), &GridSpec::default_for(1).unwrap());
    for (p, q) in [(2.0, 2.0), (3.0, 2.0), (2.0, 3.0)] {
        let ratios: Vec<f64> = [0.2, 0.3, 0.5, 0.7, 0.9, 0.95]
            .iter()
            .map(|&s| {
                let par = SeminormParams::new(s, p, q).unwrap();
                let c = e.evaluate(Seminorm::FCont, &par).unwrap().value;
                let d = e.evaluate(Seminorm::FDisc(Kernel::Poisson), &par).unwrap().value;
                c / d
            })
            .collect();
        assert!(band(&ratios) < 10.0, "(p,q)=({p},{q}): {ratios:?}");
    }
}

#[test]
fn mixed_form_tracks_extension_seminorm() {
    let e = engine(&TestFunction::gaussian(1.0, 1).unwrap(), &GridSpec::default_for(1).unwrap());
    for (p, q) in [(2.0, 2.0), (3.0, 3.0)] {
        let ratios: Vec<f64> = [0.3, 0.5, 0.7, 0.9, 0.95]
            .iter()
            .map(|&s| {
                let par = SeminormParams::new(s, p, q).unwrap();
                let m = e.evaluate(Seminorm::M, &par).unwrap().value;
                let x = e.evaluate(Seminorm::E, &par).unwrap().value;
                m / x
            })
            .collect();
        assert!(band(&ratios) < 10.0, "(p,q)=({p},{q}): {ratios:?}");
    }
}

#[test]
fn two_dimensional_hilbertian_values() {
    let tf = TestFunction::gaussian(1.0, 2).unwrap();
    let e = engine(&tf, &GridSpec::default_for(2).unwrap());
    let par = SeminormParams::new(0.5, 2.0, 2.0).unwrap();
    for which in [Seminorm::E, Seminorm::FCont, Seminorm::W] {
        let got = e.evaluate(which, &par).unwrap().value;
        let exact = fracspace_core::oracle::hilbertian_exact(&tf, 0.5, which).unwrap();
        assert!((got - exact).abs() < 5e-3 * exact, "{}: {got} vs {exact}", which.label());
    }
}
