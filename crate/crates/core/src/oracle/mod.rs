//! Brute-force variances by adaptive quadrature of the displacement spectrum.
//!
//! ```text
//! <x^2> = int dOmega/2pi S_xx,   <p^2> = int dOmega/2pi Omega^2 S_xx
//! ```
//!
//! Nothing here depends on the closed-form module; the only shared pieces
//! are the spectrum itself and the stability test used as a precondition.

pub mod gk;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::spectra::{SpectrumMode, SpectrumModel};
use crate::stability::ensure_stable;
use gk::{integrate, Panel};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_EVALS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub x_var: f64,
    pub p_var: f64,
    /// Absolute error estimates of `x_var` and `p_var`.
    pub x_abs_err: f64,
    pub p_abs_err: f64,
    pub n_evals: usize,
    pub converged: bool,
}

impl QuadratureReport {
    /// Larger of the two relative error estimates.
    pub fn rel_err(&self) -> f64 {
        (self.x_abs_err / self.x_var.abs()).max(self.p_abs_err / self.p_var.abs())
    }

    /// `omega_eff <x^2> + <p^2> / omega_eff`, i.e. `2 n_eff + 1`.
    pub fn inverse_purity(&self, omega_eff: f64) -> f64 {
        omega_eff * self.x_var + self.p_var / omega_eff
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_evals: usize,
    pub mode: SpectrumMode,
    /// Lower integration limit; must be positive for the structural mode.
    pub omega_min: f64,
    /// Integrate `(-inf, inf)` directly instead of twice the half line.
    pub full_line: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_evals: DEFAULT_MAX_EVALS,
            mode: SpectrumMode::Frozen,
            omega_min: 0.0,
            full_line: false,
        }
    }
}

impl OracleOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Variances of the frozen spectrum over the whole frequency axis.
pub fn integrate_variances(sys: &SystemParams, tol: f64) -> Result<QuadratureReport> {
    integrate_variances_with(sys, &OracleOptions::with_tol(tol))
}

pub fn integrate_variances_with(sys: &SystemParams, opts: &OracleOptions) -> Result<QuadratureReport> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::config(
            "tol",
            format!("must be in (0, 1), got {}", opts.tol),
        ));
    }
    if opts.mode == SpectrumMode::Structural && !(opts.omega_min > 0.0) {
        return Err(Error::domain(
            "structural quadrature",
            "the position variance diverges at DC; set omega_min > 0",
        ));
    }
    if opts.full_line && opts.omega_min != 0.0 {
        return Err(Error::config(
            "omega_min",
            "full-line integration needs omega_min = 0",
        ));
    }
    ensure_stable(sys)?;
    let model = SpectrumModel::new(sys, opts.mode)?;
    let f = |w: f64| match model.s_xx(w) {
        Ok(s) => [s, w * w * s],
        Err(_) => [f64::NAN; 2],
    };

    let cuts = breakpoints(&model, sys);
    let panels = if opts.full_line {
        full_line_panels(&cuts)
    } else {
        half_line_panels(&cuts, opts.omega_min)
    };
    let out = integrate(&f, &panels, opts.tol, opts.max_evals);
    if out.poisoned {
        return Err(Error::domain(
            "quadrature",
            "integrand evaluated to a non-finite value",
        ));
    }
    // half line: 2 * (1/2pi); full line: 1/2pi
    let scale = if opts.full_line { 0.5 / PI } else { 1.0 / PI };
    let report = QuadratureReport {
        x_var: out.value[0] * scale,
        p_var: out.value[1] * scale,
        x_abs_err: out.error[0] * scale,
        p_abs_err: out.error[1] * scale,
        n_evals: out.n_evals,
        converged: out.converged,
    };
    if !report.converged {
        return Err(Error::Convergence {
            n_evals: report.n_evals,
            x_partial: report.x_var,
            x_err: report.x_abs_err,
            p_partial: report.p_var,
            p_err: report.p_abs_err,
        });
    }
    Ok(report)
}

/// Variances of the structural spectrum over `[omega_min, inf)` (both signs).
pub fn integrate_structural(sys: &SystemParams, omega_min: f64, tol: f64) -> Result<QuadratureReport> {
    integrate_variances_with(
        sys,
        &OracleOptions {
            tol,
            mode: SpectrumMode::Structural,
            omega_min,
            ..OracleOptions::default()
        },
    )
}

/// Sorted positive frequencies at which the integrand changes character:
/// filter corners, the stiffened resonance, and a ladder around every
/// minimum of `|chi_eff^-1|` scaled by its local width.
fn breakpoints(model: &SpectrumModel, sys: &SystemParams) -> Vec<f64> {
    let eff = model.effective();
    let mut cuts = vec![sys.fb.omega_h, sys.fb.omega_l, eff.omega_eff, sys.osc.omega0];
    for (w, width) in resonances(model, sys) {
        cuts.push(w);
        for k in [0.5, 2.0, 8.0, 32.0, 128.0, 512.0] {
            cuts.push(w + k * width);
            cuts.push(w - k * width);
        }
    }
    cuts.retain(|c| c.is_finite() && *c > 0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    cuts
}

/// Local minima of `|chi_eff^-1(Omega)|` and the width `|chi_eff^-1| / Omega` there.
fn resonances(model: &SpectrumModel, sys: &SystemParams) -> Vec<(f64, f64)> {
    let eff = model.effective();
    let scales = [sys.fb.omega_h, sys.fb.omega_l, eff.omega_eff, sys.osc.omega0];
    let lo = scales.iter().cloned().fold(f64::INFINITY, f64::min) * 1e-3;
    let hi = scales.iter().cloned().fold(0.0, f64::max) * 1e3;
    let per_decade = 400.0;
    let n = ((hi / lo).log10() * per_decade).ceil() as usize;
    let mag = |w: f64| model.chi_eff_inv(w).map(|c| c.norm()).unwrap_or(f64::INFINITY);
    let grid: Vec<f64> = (0..=n).map(|k| lo * 10f64.powf(k as f64 / per_decade)).collect();
    let vals: Vec<f64> = grid.iter().map(|&w| mag(w)).collect();
    let mut found = Vec::new();
    for k in 1..n {
        if vals[k] <= vals[k - 1] && vals[k] < vals[k + 1] {
            let w = golden_min(&mag, grid[k - 1], grid[k + 1]);
            let width = (mag(w) / w).max(1e-300);
            found.push((vals[k], w, width));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.truncate(8);
    found.into_iter().map(|(_, w, width)| (w, width)).collect()
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
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

fn half_line_panels(cuts: &[f64], omega_min: f64) -> Vec<Panel> {
    let mut pts = vec![omega_min];
    pts.extend(cuts.iter().copied().filter(|&c| c > omega_min));
    let top = *pts.last().expect("non-empty") * 4.0;
    pts.push(top);
    let mut panels: Vec<Panel> = pts.windows(2).map(|w| Panel::linear(w[0], w[1])).collect();
    panels.push(Panel::tail(top, 1.0));
    panels
}

fn full_line_panels(cuts: &[f64]) -> Vec<Panel> {
    let half = half_line_panels(cuts, 0.0);
    let mut panels = Vec::with_capacity(2 * half.len());
    for p in &half {
        match p.map {
            gk::Map::Identity => panels.push(Panel::linear(-p.b, -p.a)),
            gk::Map::Tail { scale, .. } => panels.push(Panel::tail(scale, -1.0)),
        }
    }
    panels.extend(half);
    panels
}
