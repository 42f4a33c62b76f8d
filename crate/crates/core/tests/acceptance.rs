//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use springcool::closed_form::{
    c_coefficients, detailed_balance_floor, equipartition_neff, inverse_purity_lambda_form,
    inverse_purity_three_term, optimal_angle, optimal_angle_exact, optimal_spring, phase_readout_neff,
    purity_closed_form, stiffened_initial_occupation, CCoefficients,
};
use springcool::model::{
    effective_angle, wrap_angle, FeedbackParams, OscillatorParams, ReadoutParams, SystemParams,
};
use springcool::optimizer::{log_grid, sweep_cooperativity, Plant, ReadoutMode, SweepOptions};
use springcool::oracle::integrate_variances;
use springcool::quantum_noise::{noise_pair, phonon_budget, uncertainty_product_exact};
use springcool::stability::check_stability;
use springcool::verify::{random_suite, verify_suite};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn readout(delta: f64, theta: f64, eta: f64) -> ReadoutParams {
    ReadoutParams::new(1.0, delta, theta, eta).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let cases = random_suite(2024, 100);
    let r = verify_suite(&cases, 1e-9).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    check(
        r.max_rel < 1e-6 && secs < 60.0,
        format!("100 cases, max rel {:.2e} (< 1e-6), {secs:.1} s", r.max_rel),
    )
}

fn uncertainty_principle() -> Outcome {
    let deltas: Vec<f64> = (0..50).map(|i| -2.0 + 4.0 * i as f64 / 49.0).collect();
    let thetas: Vec<f64> = (0..50).map(|j| PI * (j as f64 + 0.5) / 50.0).collect();
    let ws = log_grid(1e-3, 10.0, 20);
    let mut worst_broadband = 0.0f64;
    let mut min_excess = f64::INFINITY;
    let mut below = 0;
    for &d in &deltas {
        for &th in &thetas {
            let r = readout(d, th, 1.0);
            let skip_blind = effective_angle(&r).sin().abs() < 1e-6;
            for &w in &ws {
                if !skip_blind {
                    let n = noise_pair(&r).unwrap();
                    // relative to the size of the two products being subtracted
                    let scale = (n.s_xx_imp * n.s_ff_rp).max(1.0);
                    worst_broadband = worst_broadband.max((n.uncertainty_defect() - 0.25).abs() / scale);
                }
                let p = uncertainty_product_exact(&r, w).unwrap();
                if p < 0.25 {
                    below += 1;
                }
                min_excess = min_excess.min(p / 0.25 - 1.0);
            }
        }
    }
    // equality point, for every w
    let eq = ws
        .iter()
        .map(|&w| (uncertainty_product_exact(&readout(0.0, FRAC_PI_2, 1.0), w).unwrap() - 0.25).abs())
        .fold(0.0, f64::max);
    check(
        worst_broadband < 1e-10 && below == 0 && min_excess > 0.0 && eq < 1e-15,
        format!(
            "broadband defect err {worst_broadband:.2e}; exact product min excess off the equality point {min_excess:.2e} ({below} below 1/4); at (0, pi/2) |p-1/4| = {eq:.1e}"
        ),
    )
}

fn rotation_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..41 {
        let d = -2.0 + 0.1 * i as f64;
        for j in 0..40 {
            let th = PI * (j as f64 + 0.5) / 40.0;
            let r = readout(d, th, 0.7);
            let teff = wrap_angle(th - d.atan());
            if teff.sin().abs() < 1e-3 {
                continue;
            }
            let a = uncertainty_product_exact(&r, 1e-12).unwrap();
            let b = uncertainty_product_exact(&readout(0.0, teff, 0.7), 0.0).unwrap();
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    check(worst < 1e-10, format!("max rel {worst:.2e} (< 1e-10)"))
}

fn three_term_identity() -> Outcome {
    let mut worst = 0.0f64;
    for s in random_suite(2024, 100) {
        let a = inverse_purity_three_term(&s).map_err(|e| e.to_string())?;
        let b = inverse_purity_lambda_form(&s).map_err(|e| e.to_string())?;
        worst = worst.max((a / b - 1.0).abs());
    }
    check(worst < 1e-10, format!("100 cases, max rel {worst:.2e} (< 1e-10)"))
}

/// Argmin over `theta_eff` of `f`, with delta fixed.
fn argmin_theta_eff<F: Fn(&SystemParams) -> f64>(s: &SystemParams, f: F) -> f64 {
    let d = s.readout.delta;
    golden(
        |te| {
            let mut t = *s;
            t.readout.theta = wrap_angle(te + d.atan());
            f(&t)
        },
        1e-3,
        PI - 1e-3,
        1e-11,
    )
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn optimal_angles() -> Outcome {
    let cases: Vec<SystemParams> = random_suite(99, 20);
    let (mut worst_printed, mut worst_exact) = (0.0f64, 0.0f64);
    for s in &cases {
        let d = s.readout.delta.atan();
        let num = argmin_theta_eff(s, |t| inverse_purity_three_term(t).unwrap_or(f64::INFINITY));
        let closed = optimal_angle(s).map_err(|e| e.to_string())? - d;
        worst_printed = worst_printed.max(angle_distance(num, closed));
        let num = argmin_theta_eff(s, |t| {
            purity_closed_form(t)
                .map(|r| 1.0 / r.purity)
                .unwrap_or(f64::INFINITY)
        });
        let closed = optimal_angle_exact(s).map_err(|e| e.to_string())? - d;
        worst_exact = worst_exact.max(angle_distance(num, closed));
    }
    check(
        worst_printed < 1e-4 && worst_exact < 1e-4,
        format!(
            "20 cases, three-term angle err {worst_printed:.2e} rad, exact angle err {worst_exact:.2e} rad (< 1e-4)"
        ),
    )
}

fn perfect_cancellation() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_derived = 0.0f64;
    let mut worst_printed = 0.0f64;
    for &(e, g0, wh, wl) in &[
        (1.0, 1e-6, 0.5, 50.0),
        (3.0, 1e-3, 2.0, 7.0),
        (0.2, 1e-9, 1e-2, 1e2),
        (10.0, 1e-4, 1.0, 1.0 + 1e-3),
    ] {
        let gamma = -2.0 * e * e / (wl - wh);
        let c = CCoefficients::from_rates(e, gamma, g0, wh, wl);
        worst = worst.max(c.backaction_residual().abs() + (c.c_tot - 2.0).abs());
        worst_derived = worst_derived.max((c.constraint_lhs() / c.constraint_derived(wh, wl) - 1.0).abs());
    }
    // identity away from the cancellation point, on physical configurations
    for s in random_suite(5, 50) {
        let c = c_coefficients(&s).map_err(|e| e.to_string())?;
        let (wh, wl) = (s.fb.omega_h, s.fb.omega_l);
        worst_derived = worst_derived.max((c.constraint_lhs() / c.constraint_derived(wh, wl) - 1.0).abs());
        worst_printed = worst_printed.max((c.constraint_lhs() / c.constraint_printed(wh, wl) - 1.0).abs());
    }
    check(
        worst < 1e-8 && worst_derived < 1e-10,
        format!(
            "residual at C_tot = 2: {worst:.1e} (< 1e-8); constraint with (1 + u r / 2)^2 holds to {worst_derived:.1e}; literal (1 + u r^2)^2 form is off by up to {worst_printed:.1e} (documented)"
        ),
    )
}

fn sweep_features() -> Outcome {
    let t = Instant::now();
    let plant = Plant {
        osc: OscillatorParams::new(1e6, 1e12).unwrap(),
        eta: 0.8,
        kappa: 1e7,
    };
    let grid = log_grid(1e-2, 1e2, 15);
    let res = sweep_cooperativity(
        &plant,
        &grid,
        &[ReadoutMode::Free, ReadoutMode::PhaseFixed],
        &SweepOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let free = &res[0].points;
    let fixed = &res[1].points;
    let secs = t.elapsed().as_secs_f64();

    let a = free.iter().zip(fixed).all(|(f, p)| f.purity >= p.purity);
    let top = free.last().unwrap().purity;
    let b = top > 0.85 && top < 0.894;
    let crossing = free
        .windows(2)
        .position(|w| w[0].purity < 1.0 / 3.0 && w[1].purity >= 1.0 / 3.0);
    let (c, d, c_at, th_at) = match crossing {
        Some(k) => {
            let (p, q) = (&free[k], &free[k + 1]);
            let x = (1.0 / 3.0 - p.purity) / (q.purity - p.purity);
            let c_at = 10f64.powf(p.cq_sql.log10() + x * (q.cq_sql.log10() - p.cq_sql.log10()));
            let th_at = p.theta + x * (q.theta - p.theta);
            (
                (0.3..=3.0).contains(&c_at),
                (FRAC_PI_4..=FRAC_PI_2).contains(&th_at),
                c_at,
                th_at,
            )
        }
        None => (false, false, f64::NAN, f64::NAN),
    };
    let upper = &free[free.len() / 2..];
    let spring_ratio = |p: &springcool::optimizer::SweepPoint| p.omega_eff / p.omega_sql0;
    let (lo, hi) = upper
        .iter()
        .map(spring_ratio)
        .fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r), h.max(r)));
    let e = lo >= 1.0 / 3.0 && hi <= 3.0;
    let flag = |x: bool| if x { "ok" } else { "FAIL" };
    check(
        a && b && c && d && e,
        format!(
            "(a) free >= phase-fixed: {}; (b) top purity {top:.4} in (0.85, 0.894): {}; (c) mu = 1/3 at C = {c_at:.3}: {}; (d) theta there {th_at:.3} rad (pi/3 = {:.3}): {}; (e) omega_eff/omega_sql0 in [{lo:.2}, {hi:.2}]: {}; {secs:.1} s",
            flag(a),
            flag(b),
            flag(c),
            FRAC_PI_3,
            flag(d),
            flag(e)
        ),
    )
}

fn phase_readout_limit() -> Outcome {
    let osc = OscillatorParams::new(1e6, 1e6).unwrap();
    let ro = ReadoutParams::new(10.0, 0.0, FRAC_PI_2, 1.0).unwrap();
    let mut gaps = Vec::new();
    for wl in [1e6, 1e7, 1e8, 1e9] {
        let s = SystemParams::new(osc, ro, FeedbackParams::new(10.0, wl, 1e6).unwrap()).unwrap();
        let general = equipartition_neff(&s).map_err(|e| e.to_string())?;
        let special = phase_readout_neff(&s).map_err(|e| e.to_string())?;
        gaps.push(((general - special) / special).abs());
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);

    // unstiffened oscillator, damping rate optimized
    let osc = OscillatorParams::new(1e6, 1e4).unwrap();
    let ro = ReadoutParams::new(0.1, 0.0, FRAC_PI_2, 1.0).unwrap();
    let at = |lg: f64| {
        SystemParams::new(osc, ro, FeedbackParams::new(1e-4, 1e4, 10f64.powf(lg)).unwrap()).unwrap()
    };
    let lg = golden(
        |lg| equipartition_neff(&at(lg)).unwrap_or(f64::INFINITY),
        -14.0,
        -4.0,
        1e-10,
    );
    let s = at(lg);
    let n_half = equipartition_neff(&s).map_err(|e| e.to_string())? + 0.5;
    let floor = detailed_balance_floor(&phonon_budget(&s).map_err(|e| e.to_string())?);
    let floor_err = (n_half / floor - 1.0).abs();
    check(
        monotone && floor_err < 0.01,
        format!(
            "relative gap over omega_l = 1e6..1e9: {}; optimized n + 1/2 = {n_half:.4e} vs floor {floor:.4e} (err {floor_err:.2e}, < 1e-2)",
            gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn optimal_spring_scaling() -> Outcome {
    let ro = ReadoutParams::new(0.1, 0.0, FRAC_PI_2, 1.0).unwrap();
    let mut worst = 0.0f64;
    let mut pts = Vec::new();
    let mut n_imp_max = 0.0f64;
    for k in 0..9 {
        let nth0 = 10f64.powi(k);
        let osc = OscillatorParams::new(1e6, nth0).unwrap();
        let spring = optimal_spring(&osc, &ro).map_err(|e| e.to_string())?;
        n_imp_max = n_imp_max.max(spring.n_imp);
        let lw = golden(
            |lw| stiffened_initial_occupation(&osc, spring.n_imp, 10f64.powf(lw)),
            -3.0,
            6.0,
            1e-12,
        );
        let w = 10f64.powf(lw);
        worst = worst.max((w / spring.from_n_imp - 1.0).abs());
        pts.push((nth0.ln(), w.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    check(
        worst < 0.01 && (slope - 0.2).abs() < 0.01 && n_imp_max <= 1e-3,
        format!("n_imp = {n_imp_max:.1e}; max rel err {worst:.2e} (< 1e-2); fitted exponent {slope:.5} (1/5 +- 0.01)"),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

/// `(s + omega_l)(s^2 + b s + a) + G omega_l (1 + s / omega_h)`, assembled from
/// the raw parameters.
fn cubic_roots_stable(s: &SystemParams) -> bool {
    let r = &s.readout;
    let one = 1.0 + r.delta * r.delta;
    let sql2 = r.omega_sql0 * r.omega_sql0 / one;
    let k_rp = sql2 * r.delta / (2.0 * one);
    let g_rp = -(sql2 / r.kappa) * r.delta / (one * one);
    let w0 = s.osc.omega0;
    let big_g = s.fb.gfb * w0 * w0;
    let e2 = w0 * w0 + k_rp + big_g;
    let at = if e2 > 0.0 { e2.sqrt() } else { w0 };
    let g0 = w0 * w0 / (s.osc.q0 * at);
    let (a, b) = (w0 * w0 + k_rp, g0 + g_rp);
    let (wl, wh) = (s.fb.omega_l, s.fb.omega_h);
    let c2 = wl + b;
    let c1 = a + wl * b + big_g * wl / wh;
    let c0 = wl * a + big_g * wl;
    let companion = Matrix3::new(-c2, -c1, -c0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    companion.complex_eigenvalues().iter().all(|z| z.re < 0.0)
}

fn stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut configs = Vec::new();
    while configs.len() < 1000 {
        let osc =
            OscillatorParams::new(log_uniform(&mut rng, 1e3, 1e9), log_uniform(&mut rng, 1.0, 1e10)).unwrap();
        let ro = ReadoutParams::new(
            log_uniform(&mut rng, 0.1, 100.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.05..PI - 0.05),
            rng.gen_range(0.1..=1.0),
        )
        .unwrap()
        .with_kappa(log_uniform(&mut rng, 1e2, 1e5))
        .unwrap();
        let wh = log_uniform(&mut rng, 0.1, 10.0);
        let fb = FeedbackParams::new(
            wh,
            wh * log_uniform(&mut rng, 2.0, 1e4),
            log_uniform(&mut rng, 1e-4, 1e4),
        )
        .unwrap();
        configs.push(SystemParams::new(osc, ro, fb).unwrap());
    }
    let mut disagree = 0;
    let mut stable = 0;
    let mut diverged = Vec::new();
    for s in &configs {
        let rh = check_stability(s).stable;
        if rh != cubic_roots_stable(s) {
            disagree += 1;
        }
        if rh {
            stable += 1;
            if effective_angle(&s.readout).sin().abs() < 0.05 {
                continue;
            }
            match integrate_variances(s, 1e-9) {
                Ok(q) if q.converged && q.x_var > 0.0 && q.p_var > 0.0 => {}
                other => diverged.push(format!("{other:?}")),
            }
        } else if integrate_variances(s, 1e-9).is_ok() {
            diverged.push("quadrature accepted an unstable configuration".into());
        }
    }
    check(
        disagree == 0 && diverged.is_empty() && stable > 0 && stable < 1000,
        format!(
            "1000 configs ({stable} stable): {disagree} Routh-Hurwitz/eigenvalue disagreements; {} oracle failures on stable configs",
            diverged.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 uncertainty principle", uncertainty_principle),
        ("3 detuning-rotation equivalence", rotation_equivalence),
        ("4 three-term identity", three_term_identity),
        ("5 optimal angle", optimal_angles),
        ("6 perfect cancellation", perfect_cancellation),
        ("7 cooperativity sweep", sweep_features),
        ("8 phase-readout limit", phase_readout_limit),
        ("9 optimal spring scaling", optimal_spring_scaling),
        ("10 stability", stability),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match out {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
