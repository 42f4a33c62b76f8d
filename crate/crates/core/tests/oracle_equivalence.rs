use springcool::model::{FeedbackParams, OscillatorParams, ReadoutParams, SystemParams};
use springcool::verify::{random_suite, verify_closed_form, verify_suite};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

fn benchmark(delta: f64, theta: f64, eta: f64) -> SystemParams {
    SystemParams::new(
        OscillatorParams::new(1e6, 1e8).unwrap(),
        ReadoutParams::new(10.0, delta, theta, eta).unwrap(),
        FeedbackParams::new(5.0, 500.0, 1e3).unwrap(),
    )
    .unwrap()
}

#[test]
fn benchmarks_match_quadrature() {
    for s in [benchmark(0.0, FRAC_PI_2, 1.0), benchmark(0.5, FRAC_PI_3, 0.8)] {
        let c = verify_closed_form(&s, 1e-10).unwrap();
        assert!(c.max_rel() < 1e-6, "{c:?}");
    }
}

#[test]
fn random_suite_matches_quadrature() {
    let cases = random_suite(2024, 100);
    let r = verify_suite(&cases, 1e-9).unwrap();
    let worst = r
        .cases
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.max_rel().total_cmp(&b.1.max_rel()))
        .unwrap();
    eprintln!(
        "max rel {:.3e} at case {}: {:?}",
        r.max_rel, worst.0, cases[worst.0]
    );
    assert!(r.max_rel < 1e-6);
}
