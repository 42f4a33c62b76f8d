//! Closed form against quadrature, on single points and on seeded random suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::closed_form::{purity_closed_form, CoolingResult};
use crate::error::Result;
use crate::model::{effective_angle, FeedbackParams, OscillatorParams, ReadoutParams, SystemParams};
use crate::oracle::{integrate_variances, QuadratureReport};
use crate::stability::check_stability;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub closed_form: CoolingResult,
    pub quadrature: QuadratureReport,
    pub rel_x: f64,
    pub rel_p: f64,
    pub rel_n: f64,
}

impl Comparison {
    pub fn max_rel(&self) -> f64 {
        self.rel_x.max(self.rel_p).max(self.rel_n)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn verify_closed_form(sys: &SystemParams, tol: f64) -> Result<Comparison> {
    let cf = purity_closed_form(sys)?;
    let q = integrate_variances(sys, tol)?;
    let n_q = 0.5 * (q.inverse_purity(cf.omega_eff) - 1.0);
    Ok(Comparison {
        closed_form: cf,
        quadrature: q,
        rel_x: rel(cf.x_var, q.x_var),
        rel_p: rel(cf.p_var, q.p_var),
        rel_n: rel(cf.n_eff, n_q),
    })
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

/// One draw from the verification distribution, or `None` if the draw is
/// signal-blind or unstable.
///
/// `Q0` in `[1e3, 1e9]`, `nth0` in `[1, 1e10]`, `omega_sql0` in `[0.1, 100]`
/// (all log-uniform), `delta` in `[-2, 2]`, `theta` in `(0, pi)`, `eta` in
/// `[0.1, 1]`, `omega_h` in `[0.1, 10]` and `omega_l / omega_h` in
/// `[10^0.3, 10^4]` (log-uniform), `gfb` in `[0.1, 1e4]` (log-uniform),
/// `kappa` in `[1e2, 1e5]` (log-uniform).
pub fn random_config<R: Rng>(rng: &mut R) -> Option<SystemParams> {
    let osc = OscillatorParams::new(log_uniform(rng, 1e3, 1e9), log_uniform(rng, 1.0, 1e10)).ok()?;
    let theta = rng.gen_range(0.0..PI);
    let readout = ReadoutParams::new(
        log_uniform(rng, 0.1, 100.0),
        rng.gen_range(-2.0..2.0),
        if theta > 0.0 { theta } else { 0.5 * PI },
        rng.gen_range(0.1..=1.0),
    )
    .ok()?
    .with_kappa(log_uniform(rng, 1e2, 1e5))
    .ok()?;
    let omega_h = log_uniform(rng, 0.1, 10.0);
    let ratio = log_uniform(rng, 10f64.powf(0.3), 1e4);
    let fb = FeedbackParams::new(omega_h, omega_h * ratio, log_uniform(rng, 0.1, 1e4)).ok()?;
    let sys = SystemParams::new(osc, readout, fb).ok()?;
    if effective_angle(&sys.readout).sin().abs() < 0.05 {
        return None;
    }
    check_stability(&sys).stable.then_some(sys)
}

/// The first `n` accepted draws from the seeded stream.
pub fn random_suite(seed: u64, n: usize) -> Vec<SystemParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if let Some(s) = random_config(&mut rng) {
            out.push(s);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub cases: Vec<Comparison>,
    pub max_rel: f64,
}

/// Runs the comparison on every case in parallel; results keep input order.
pub fn verify_suite(cases: &[SystemParams], tol: f64) -> Result<SuiteReport> {
    let cases: Vec<Comparison> = cases
        .par_iter()
        .map(|s| verify_closed_form(s, tol))
        .collect::<Result<_>>()?;
    let max_rel = cases.iter().map(Comparison::max_rel).fold(0.0, f64::max);
    Ok(SuiteReport { cases, max_rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic_and_stable() {
        let a = random_suite(7, 20);
        let b = random_suite(7, 20);
        assert_eq!(a, b);
        assert!(a.iter().all(|s| check_stability(s).stable));
    }
}
