//! Purity maximization over the feedback filter, detuning and homodyne angle
//! at fixed plant parameters, and sweeps over the quantum cooperativity.
//!
//! Search coordinates, with `S = omega_sql0`:
//!
//! ```text
//! u0 = log10(omega_h / S)          in [-2, 3]
//! u1 = log10(omega_l / omega_h)    in [log10(1 + 1e-6), 5],  omega_l <= 1e3 S
//! u2 = log10(gamma_fb / omega_l)   in [-10, log10(1/3)]
//! u3 = delta                       in [-2, 2]    (absent for resonant readout)
//! ```
//!
//! The homodyne angle is not searched: in free-angle mode it is the exact
//! minimizer of the inverse purity, otherwise `pi/2`.

pub mod nelder_mead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::closed_form::{optimal_angle_exact, purity_closed_form, CoolingResult};
use crate::error::{Error, Result};
use crate::model::{FeedbackParams, OscillatorParams, ReadoutParams, SystemParams, MIN_FILTER_RATIO};
use nelder_mead::{minimize, Settings};

/// Fixed part of the problem: the oscillator and the detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub osc: OscillatorParams,
    pub eta: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Homodyne angle optimized, detuning free.
    Free,
    /// `theta = pi/2`, detuning free.
    PhaseFixed,
    /// `theta = pi/2`, `delta = 0`.
    Resonant,
}

impl ReadoutMode {
    pub const ALL: [ReadoutMode; 3] = [ReadoutMode::Free, ReadoutMode::PhaseFixed, ReadoutMode::Resonant];

    fn dims(self) -> usize {
        match self {
            ReadoutMode::Resonant => 3,
            _ => 4,
        }
    }
}

/// Box in the search coordinates. Frequencies are relative to `omega_sql0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub log_omega_h: (f64, f64),
    pub log_filter_ratio: (f64, f64),
    pub log_gamma_over_omega_l: (f64, f64),
    pub delta: (f64, f64),
    /// Upper limit on `log10(omega_l / omega_sql0)`.
    pub log_omega_l_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            log_omega_h: (-2.0, 3.0),
            log_filter_ratio: (MIN_FILTER_RATIO.log10(), 5.0),
            log_gamma_over_omega_l: (-10.0, (1.0f64 / 3.0).log10()),
            delta: (-2.0, 2.0),
            log_omega_l_max: 3.0,
        }
    }
}

impl Bounds {
    fn boxes(&self, mode: ReadoutMode) -> Vec<(f64, f64)> {
        let mut b = vec![
            self.log_omega_h,
            self.log_filter_ratio,
            self.log_gamma_over_omega_l,
        ];
        if mode != ReadoutMode::Resonant {
            b.push(self.delta);
        }
        b
    }

    fn inside(&self, mode: ReadoutMode, u: &[f64]) -> bool {
        let ok = self
            .boxes(mode)
            .iter()
            .zip(u)
            .all(|(&(lo, hi), &x)| x >= lo && x <= hi);
        ok && u[0] + u[1] <= self.log_omega_l_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub plant: Plant,
    pub cq_sql: f64,
    pub mode: ReadoutMode,
    pub bounds: Bounds,
    /// Objective evaluations for the whole problem.
    pub budget: usize,
    /// Number of cold starts.
    pub starts: usize,
    pub seed: u64,
}

impl OptimizationProblem {
    pub fn new(plant: Plant, cq_sql: f64, mode: ReadoutMode) -> Self {
        Self {
            plant,
            cq_sql,
            mode,
            bounds: Bounds::default(),
            budget: 10_000,
            starts: 8,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.plant.osc.validate()?;
        if !(self.cq_sql > 0.0 && self.cq_sql.is_finite()) {
            return Err(Error::config("cq_sql", "must be finite and > 0"));
        }
        if !(self.plant.eta > 0.0 && self.plant.eta <= 1.0) {
            return Err(Error::config("eta", "must be in (0, 1]"));
        }
        if !(self.plant.kappa > 0.0 && self.plant.kappa.is_finite()) {
            return Err(Error::config("kappa", "must be finite and > 0"));
        }
        if self.budget < 1000 {
            return Err(Error::config("budget", "must be at least 1000"));
        }
        if self.starts == 0 {
            return Err(Error::config("starts", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub cq_sql: f64,
    pub omega_sql0: f64,
    pub mode: ReadoutMode,
    pub params: SystemParams,
    pub result: CoolingResult,
    /// Search coordinates of the optimum, reusable as a warm start.
    pub coords: [f64; 4],
    pub evals: usize,
}

/// `C_Q,SQL = S_rp(delta = 0) / S_th[omega_sql0]` with the structural
/// thermal force `2 (n_th[Omega] + 1/2) omega0^2 / Q0`:
/// `C = Q0 x^3 / (4 omega0^2 (nth0 omega0 + x / 2))`, `x = omega_sql0`.
pub fn cooperativity_at_sql(osc: &OscillatorParams, omega_sql0: f64) -> f64 {
    let w0 = osc.omega0;
    osc.q0 * omega_sql0.powi(3) / (4.0 * w0 * w0 * (osc.nth0 * w0 + 0.5 * omega_sql0))
}

/// Inverse of [`cooperativity_at_sql`]: the positive root of
/// `Q0 x^3 - 2 C omega0^2 x - 4 C omega0^3 nth0 = 0`.
pub fn cq_to_coupling(osc: &OscillatorParams, cq_sql: f64) -> Result<f64> {
    osc.validate()?;
    if !(cq_sql >= 0.0 && cq_sql.is_finite()) {
        return Err(Error::config("cq_sql", "must be finite and >= 0"));
    }
    if cq_sql == 0.0 {
        return Ok(0.0);
    }
    let w0 = osc.omega0;
    let p = 2.0 * cq_sql * w0 * w0 / osc.q0;
    let q = 4.0 * cq_sql * w0.powi(3) * osc.nth0 / osc.q0;
    if q == 0.0 {
        return Ok(p.sqrt());
    }
    // x^3 - p x - q is convex for x > 0, so Newton from above the root
    // decreases monotonically onto it
    let mut x = (2.0 * p).sqrt().max((2.0 * q).cbrt());
    for _ in 0..200 {
        let f = x * x * x - p * x - q;
        let df = 3.0 * x * x - p;
        let next = x - f / df;
        if !(next < x) {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Parameters at search coordinates `u`, or `None` outside the box.
fn system_at(problem: &OptimizationProblem, omega_sql0: f64, u: &[f64]) -> Option<SystemParams> {
    if !problem.bounds.inside(problem.mode, u) {
        return None;
    }
    let omega_h = omega_sql0 * 10f64.powf(u[0]);
    let omega_l = omega_h * 10f64.powf(u[1]);
    let gamma_fb = omega_l * 10f64.powf(u[2]);
    let w0 = problem.plant.osc.omega0;
    let gfb = gamma_fb * omega_h / (w0 * w0);
    let delta = if problem.mode == ReadoutMode::Resonant {
        0.0
    } else {
        u[3]
    };
    let readout = ReadoutParams::new(omega_sql0, delta, FRAC_PI_2, problem.plant.eta)
        .ok()?
        .with_kappa(problem.plant.kappa)
        .ok()?;
    let fb = FeedbackParams::new(omega_h, omega_l, gfb).ok()?;
    let mut sys = SystemParams::new(problem.plant.osc, readout, fb).ok()?;
    if problem.mode == ReadoutMode::Free {
        sys.readout.theta = optimal_angle_exact(&sys).ok()?;
    }
    Some(sys)
}

fn objective(problem: &OptimizationProblem, omega_sql0: f64, u: &[f64]) -> f64 {
    match system_at(problem, omega_sql0, u).map(|s| purity_closed_form(&s)) {
        Some(Ok(r)) if r.purity.is_finite() && r.purity > 0.0 => 1.0 / r.purity,
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone)]
struct StartResult {
    x: Vec<f64>,
    f: f64,
    evals: usize,
}

fn run_start(
    problem: &OptimizationProblem,
    omega_sql0: f64,
    x0: Option<Vec<f64>>,
    rng_seed: u64,
    budget: usize,
) -> Option<StartResult> {
    let boxes = problem.bounds.boxes(problem.mode);
    let mut evals = 0;
    let x0 = match x0 {
        Some(x) => {
            evals += 1;
            objective(problem, omega_sql0, &x).is_finite().then_some(x)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut found = None;
            while evals < budget / 4 {
                let x: Vec<f64> = boxes.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
                evals += 1;
                if objective(problem, omega_sql0, &x).is_finite() {
                    found = Some(x);
                    break;
                }
            }
            found
        }
    }?;
    let settings = Settings {
        max_evals: budget.saturating_sub(evals),
        ..Settings::default()
    };
    let m = minimize(|u| objective(problem, omega_sql0, u), &x0, &settings);
    m.f.is_finite().then(|| StartResult {
        x: m.x,
        f: m.f,
        evals: evals + m.evals,
    })
}

/// Multi-start search. `warm` adds one start at the given coordinates; the
/// cold starts and their budgets do not depend on it.
pub fn optimize_purity_from(problem: &OptimizationProblem, warm: Option<&[f64; 4]>) -> Result<Optimum> {
    problem.validate()?;
    let omega_sql0 = cq_to_coupling(&problem.plant.osc, problem.cq_sql)?;
    let per_start = problem.budget / (problem.starts + 1);
    let dims = problem.mode.dims();
    let mut jobs: Vec<(Option<Vec<f64>>, u64)> = (0..problem.starts)
        .map(|k| {
            (
                None,
                problem.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)),
            )
        })
        .collect();
    if let Some(w) = warm {
        jobs.push((Some(w[..dims].to_vec()), 0));
    }
    let results: Vec<Option<StartResult>> = jobs
        .into_par_iter()
        .map(|(x0, seed)| run_start(problem, omega_sql0, x0, seed, per_start))
        .collect();
    let evals = results.iter().flatten().map(|r| r.evals).sum();
    let best = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no stable configuration found for cq_sql={} in mode {:?}",
                problem.cq_sql, problem.mode
            ))
        })?;
    let params = system_at(problem, omega_sql0, &best.x).expect("optimum lies in the box");
    let result = purity_closed_form(&params)?;
    let mut coords = [0.0; 4];
    coords[..dims].copy_from_slice(&best.x);
    Ok(Optimum {
        cq_sql: problem.cq_sql,
        omega_sql0,
        mode: problem.mode,
        params,
        result,
        coords,
        evals,
    })
}

pub fn optimize_purity(problem: &OptimizationProblem) -> Result<Optimum> {
    optimize_purity_from(problem, None)
}

/// One row of a sweep; frequencies in units of `omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub cq_sql: f64,
    pub omega_sql0: f64,
    pub purity: f64,
    pub n_eff: f64,
    pub omega_h: f64,
    pub omega_l: f64,
    pub delta: f64,
    pub theta: f64,
    pub omega_eff: f64,
    pub gamma_eff: f64,
}

impl From<&Optimum> for SweepPoint {
    fn from(o: &Optimum) -> Self {
        Self {
            cq_sql: o.cq_sql,
            omega_sql0: o.omega_sql0,
            purity: o.result.purity,
            n_eff: o.result.n_eff,
            omega_h: o.params.fb.omega_h,
            omega_l: o.params.fb.omega_l,
            delta: o.params.readout.delta,
            theta: o.params.readout.theta,
            omega_eff: o.result.omega_eff,
            gamma_eff: o.result.gamma_eff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: ReadoutMode,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
    pub bounds: Bounds,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            budget: 10_000,
            starts: 8,
            seed: 0,
            bounds: Bounds::default(),
        }
    }
}

/// `n` log-spaced points over `[lo, hi]` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Optimizes every grid point in every mode, warm-starting each point from
/// the previous optimum of the same mode.
pub fn sweep_cooperativity(
    plant: &Plant,
    cq_grid: &[f64],
    modes: &[ReadoutMode],
    opts: &SweepOptions,
) -> Result<Vec<SweepResult>> {
    if cq_grid.windows(2).any(|w| !(w[0] < w[1])) || cq_grid.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::config(
            "cq_grid",
            "must be positive and strictly increasing",
        ));
    }
    modes
        .par_iter()
        .map(|&mode| {
            let mut warm: Option<[f64; 4]> = None;
            let mut points = Vec::with_capacity(cq_grid.len());
            for &cq in cq_grid {
                let problem = OptimizationProblem {
                    plant: *plant,
                    cq_sql: cq,
                    mode,
                    bounds: opts.bounds,
                    budget: opts.budget,
                    starts: opts.starts,
                    seed: opts.seed,
                };
                let best = optimize_purity_from(&problem, warm.as_ref())?;
                warm = Some(best.coords);
                points.push(SweepPoint::from(&best));
            }
            Ok(SweepResult { mode, points })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> Plant {
        Plant {
            osc: OscillatorParams::new(1e6, 1e12).unwrap(),
            eta: 0.8,
            kappa: 1e7,
        }
    }

    #[test]
    fn coupling_round_trip() {
        for osc in [
            plant().osc,
            OscillatorParams::new(1e3, 1.0).unwrap(),
            OscillatorParams::new(1e9, 0.0).unwrap(),
        ] {
            for c in [1e-4, 0.01, 1.0, 37.0, 1e4] {
                let x = cq_to_coupling(&osc, c).unwrap();
                assert!((cooperativity_at_sql(&osc, x) / c - 1.0).abs() < 1e-10, "c={c}");
            }
        }
        assert_eq!(cq_to_coupling(&plant().osc, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn coupling_monotone() {
        let o = plant().osc;
        let g = log_grid(1e-3, 1e3, 30);
        let xs: Vec<f64> = g.iter().map(|&c| cq_to_coupling(&o, c).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-2, 1e2, 15);
        assert_eq!(g.len(), 15);
        assert!((g[14] / 1e2 - 1.0).abs() < 1e-14 && g[0] == 1e-2);
        assert!((g[7] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn optimum_is_stable_and_in_bounds() {
        let mut p = OptimizationProblem::new(plant(), 1.0, ReadoutMode::Free);
        p.budget = 2000;
        let o = optimize_purity(&p).unwrap();
        assert!(crate::stability::check_stability(&o.params).stable);
        assert!(o.result.purity > 0.0 && o.result.purity < 0.8f64.sqrt());
        assert!(o.evals <= p.budget);
    }
}
