use springcool::closed_form::{
    c_coefficients, ground_state_thresholds, neff_decomposition, optimal_angle, optimal_angle_exact,
    optimal_spring, purity_closed_form,
};
use springcool::model::{effective_oscillator, OscillatorParams, ReadoutParams, SystemParams};
use springcool::optimizer::{log_grid, sweep_cooperativity, Plant, ReadoutMode, SweepOptions};
use springcool::quantum_noise::phonon_budget;
use springcool::spectra::spectrum_grid;
use springcool::stability::{check_stability, ensure_stable};
use springcool::verify::{random_suite, verify_suite};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{Cell, Format, Output, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Closed-form cooling result, noise budget and stability at one point.
    Eval,
    /// Displacement spectrum and its four contributions on a log grid.
    Spectrum,
    /// Closed form against adaptive quadrature.
    Verify,
    /// Optimal purity over a range of quantum cooperativities.
    Sweep,
    /// Ground-state thresholds and the optimal spring.
    Thresholds,
}

impl Command {
    pub fn default_format(self) -> Format {
        match self {
            Command::Eval | Command::Thresholds => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub config: Config,
    pub format: Format,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// What a command produced. `failure` is set when the output is complete
/// but the run must still exit with an error (verification above threshold).
#[derive(Debug)]
pub struct Report {
    pub output: Output,
    pub failure: Option<CliError>,
}

pub fn run(rc: &RunConfig) -> Result<Report, CliError> {
    if let Some(t) = rc.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::config("--tol", "must lie in (0, 1)"));
        }
    }
    let done = |output| {
        Ok(Report {
            output,
            failure: None,
        })
    };
    match rc.command {
        Command::Eval => done(eval(&rc.config)?),
        Command::Spectrum => done(spectrum(&rc.config)?),
        Command::Verify => verify(rc),
        Command::Sweep => done(sweep(rc)?),
        Command::Thresholds => done(thresholds(&rc.config)?),
    }
}

fn need_system(c: &Config, command: &str) -> Result<SystemParams, CliError> {
    c.system.ok_or_else(|| {
        CliError::config(
            "<document>",
            format!("`{command}` needs the oscillator, readout (with omega_sql0) and feedback sections"),
        )
    })
}

fn need_plant(c: &Config, command: &str) -> Result<(OscillatorParams, ReadoutParams), CliError> {
    match (c.osc, c.readout) {
        (Some(o), Some(r)) => Ok((o, r)),
        _ => Err(CliError::config(
            "<document>",
            format!("`{command}` needs the oscillator and readout (with omega_sql0) sections"),
        )),
    }
}

fn eval(c: &Config) -> Result<Output, CliError> {
    let sys = need_system(c, "eval")?;
    let report = check_stability(&sys);
    ensure_stable(&sys)?;
    let r = purity_closed_form(&sys)?;
    let eff = effective_oscillator(&sys)?;
    let b = phonon_budget(&sys)?;
    let d = neff_decomposition(&sys)?;
    let cc = c_coefficients(&sys)?;
    let sql = sys.readout.omega_sql0;
    let m = report.margins;
    let mut f: Vec<(String, Cell)> = vec![
        ("result.x_var".into(), r.x_var.into()),
        ("result.p_var".into(), r.p_var.into()),
        ("result.n_eff".into(), r.n_eff.into()),
        ("result.purity".into(), r.purity.into()),
        ("result.omega_eff".into(), r.omega_eff.into()),
        ("result.omega_eff_sql".into(), (r.omega_eff / sql).into()),
        ("result.gamma_eff".into(), r.gamma_eff.into()),
        ("result.gamma0".into(), eff.gamma0.into()),
        ("result.gamma_rp".into(), eff.gamma_rp.into()),
        ("result.gamma_fb".into(), eff.gamma_fb.into()),
        ("budget.n_th_eff".into(), b.n_th_eff.into()),
        ("budget.n_ba".into(), b.n_ba.into()),
        ("budget.n_imp".into(), b.n_imp.into()),
        ("budget.n_cor".into(), b.n_cor.into()),
        ("budget.cq".into(), b.cq.into()),
        (
            "approximation.thermal_backaction".into(),
            d.thermal_backaction.into(),
        ),
        ("approximation.fed_imprecision".into(), d.fed_imprecision.into()),
        ("approximation.correlation".into(), d.correlation.into()),
        ("approximation.inverse_purity".into(), d.inverse_purity.into()),
        ("approximation.c_tot".into(), cc.c_tot.into()),
        ("approximation.c_imp".into(), cc.c_imp.into()),
        ("approximation.c_cor".into(), cc.c_cor.into()),
        (
            "approximation.backaction_residual".into(),
            cc.backaction_residual().into(),
        ),
        ("stability.stable".into(), report.stable.into()),
        ("stability.s1".into(), m.s1.into()),
        ("stability.s2".into(), m.s2.into()),
        ("stability.a3".into(), m.a3.into()),
        ("stability.hurwitz".into(), m.hurwitz.into()),
        ("stability.gfb_min".into(), report.gfb_min.into()),
        (
            "stability.gfb_min_simplified".into(),
            report.gfb_min_simplified.into(),
        ),
        ("angle.theta".into(), sys.readout.theta.into()),
        ("angle.theta_opt".into(), optimal_angle_exact(&sys)?.into()),
        ("angle.theta_opt_three_term".into(), optimal_angle(&sys)?.into()),
    ];
    if let Some(si) = &c.si {
        let l2 = si.length_unit_m().powi(2);
        f.extend([
            ("si.length_unit_m".to_string(), si.length_unit_m().into()),
            ("si.x_var_m2".into(), (r.x_var * l2).into()),
            ("si.nth0".into(), si.nth0().into()),
            ("si.kappa".into(), si.kappa().into()),
            ("si.omega_sql0".into(), si.omega_sql0().into()),
        ]);
    }
    Ok(Output::Record(f))
}

fn spectrum(c: &Config) -> Result<Output, CliError> {
    let sys = need_system(c, "spectrum")?;
    ensure_stable(&sys)?;
    let eff = effective_oscillator(&sys)?;
    let s = &c.spectrum;
    let lo = s.omega_min.unwrap_or(1e-3 * sys.fb.omega_h.min(eff.omega_eff));
    let hi = s.omega_max.unwrap_or(1e3 * sys.fb.omega_l.max(eff.omega_eff));
    let pts = spectrum_grid(&sys, s.mode, lo, hi, s.points_per_decade)?;
    let sql = sys.readout.omega_sql0;
    Ok(Output::Table(Table {
        header: vec![
            "omega",
            "omega_sql",
            "s_total",
            "s_thermal",
            "s_backaction",
            "s_fed_imprecision",
            "s_correlation",
        ],
        rows: pts
            .iter()
            .map(|p| {
                vec![
                    p.omega.into(),
                    (p.omega / sql).into(),
                    p.s_xx_total.into(),
                    p.terms.thermal.into(),
                    p.terms.backaction.into(),
                    p.terms.fed_imprecision.into(),
                    p.terms.correlation.into(),
                ]
            })
            .collect(),
    }))
}

fn verify(rc: &RunConfig) -> Result<Report, CliError> {
    let c = &rc.config;
    let v = &c.verify;
    let tol = rc.tol.unwrap_or(v.tol);
    let seed = rc.seed.unwrap_or(v.seed);
    let mut cases: Vec<(String, SystemParams)> = Vec::new();
    if let Some(s) = c.system {
        cases.push(("config".into(), s));
    }
    if c.has_verify || c.system.is_none() {
        cases.extend(
            random_suite(seed, v.cases)
                .into_iter()
                .enumerate()
                .map(|(i, s)| (format!("random-{i}"), s)),
        );
    }
    let params: Vec<SystemParams> = cases.iter().map(|c| c.1).collect();
    let suite = verify_suite(&params, tol)?;
    let rows = cases
        .iter()
        .zip(&suite.cases)
        .map(|((name, _), r)| {
            vec![
                Cell::Text(name.clone()),
                r.closed_form.x_var.into(),
                r.quadrature.x_var.into(),
                r.closed_form.p_var.into(),
                r.quadrature.p_var.into(),
                r.closed_form.n_eff.into(),
                r.rel_x.into(),
                r.rel_p.into(),
                r.rel_n.into(),
                r.quadrature.rel_err().into(),
                r.quadrature.n_evals.into(),
            ]
        })
        .collect();
    let failure = (suite.max_rel > v.threshold).then(|| {
        CliError::Disagreement(format!(
            "max relative difference {:.3e} exceeds {:.1e}",
            suite.max_rel, v.threshold
        ))
    });
    Ok(Report {
        output: Output::Table(Table {
            header: vec![
                "case",
                "x_var_closed",
                "x_var_quad",
                "p_var_closed",
                "p_var_quad",
                "n_eff_closed",
                "rel_x",
                "rel_p",
                "rel_n",
                "quad_rel_err",
                "quad_evals",
            ],
            rows,
        }),
        failure,
    })
}

fn sweep(rc: &RunConfig) -> Result<Output, CliError> {
    let c = &rc.config;
    let osc = c
        .osc
        .ok_or_else(|| CliError::config("oscillator", "`sweep` needs the oscillator section"))?;
    let s = &c.sweep;
    let grid = log_grid(s.cq_min, s.cq_max, s.grid_len()?);
    let plant = Plant {
        osc,
        eta: c.eta,
        kappa: c.kappa,
    };
    let opts = SweepOptions {
        budget: s.budget,
        starts: s.starts,
        seed: rc.seed.unwrap_or(s.seed),
        ..SweepOptions::default()
    };
    let res = sweep_cooperativity(&plant, &grid, &ReadoutMode::ALL, &opts)?;
    let of = |m: ReadoutMode| &res.iter().find(|r| r.mode == m).expect("every mode swept").points;
    let (free, fixed, resonant) = (
        of(ReadoutMode::Free),
        of(ReadoutMode::PhaseFixed),
        of(ReadoutMode::Resonant),
    );
    let rows = (0..grid.len())
        .map(|i| {
            let p = &free[i];
            let sql = p.omega_sql0;
            vec![
                p.cq_sql.into(),
                sql.into(),
                p.purity.into(),
                fixed[i].purity.into(),
                resonant[i].purity.into(),
                p.n_eff.into(),
                p.omega_h.into(),
                p.omega_l.into(),
                (p.omega_h / sql).into(),
                (p.omega_l / sql).into(),
                p.delta.into(),
                p.theta.into(),
                p.omega_eff.into(),
                (p.omega_eff / sql).into(),
                p.gamma_eff.into(),
                fixed[i].delta.into(),
            ]
        })
        .collect();
    Ok(Output::Table(Table {
        header: vec![
            "cq_sql",
            "omega_sql0",
            "purity_free",
            "purity_phase_fixed",
            "purity_resonant",
            "n_eff_free",
            "omega_h_opt",
            "omega_l_opt",
            "omega_h_opt_sql",
            "omega_l_opt_sql",
            "delta_opt",
            "theta_opt",
            "omega_eff_opt",
            "omega_eff_opt_sql",
            "gamma_eff_opt",
            "delta_phase_fixed",
        ],
        rows,
    }))
}

fn thresholds(c: &Config) -> Result<Output, CliError> {
    let (osc, readout) = need_plant(c, "thresholds")?;
    let t = ground_state_thresholds(&osc, &readout)?;
    let s = optimal_spring(&osc, &readout)?;
    let mut f: Vec<(String, Cell)> = vec![
        ("n_imp".into(), t.n_imp.into()),
        ("n_imp_max".into(), t.n_imp_max.into()),
        ("q0".into(), osc.q0.into()),
        ("q0_min".into(), t.q0_min.into()),
        ("qf_min".into(), t.qf_min.into()),
        ("n_imp_ok".into(), (t.n_imp <= t.n_imp_max).into()),
        ("q0_ok".into(), (osc.q0 >= t.q0_min).into()),
        ("optimal_spring.omega_eff".into(), s.from_n_imp.into()),
        (
            "optimal_spring.omega_eff_from_coupling".into(),
            s.from_coupling.into(),
        ),
        (
            "optimal_spring.omega_eff_sql".into(),
            (s.from_n_imp / readout.omega_sql0).into(),
        ),
    ];
    if let Some(si) = &c.si {
        f.push(("si.qf_min_hz".into(), (t.q0_min * si.frequency_hz).into()));
        f.push((
            "si.optimal_spring_hz".into(),
            (s.from_n_imp * si.frequency_hz).into(),
        ));
    }
    Ok(Output::Record(f))
}
