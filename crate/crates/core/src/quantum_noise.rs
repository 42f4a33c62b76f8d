//! Quantum noise of a detuned, broadband cavity readout.
//!
//! All spectral densities are symmetrized and double-sided, in `hbar = m = 1`
//! units. Imprecision is displacement-equivalent, back-action is a force,
//! and the cross term is the real part of the force-displacement
//! cross-spectrum. Detection loss is charged to the imprecision (`1/eta`)
//! and to the correlation (`1/sqrt(eta)`); back-action does not depend on it.
//!
//! The `*_exact` functions keep the full cavity response and take the
//! scaled frequency `w = 2 Omega / kappa` (see [`scaled_frequency`]). The
//! rest is the `w -> 0` limit used by the feedback model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{effective_angle, effective_oscillator, ReadoutParams, SystemParams};

/// `|sin(theta_eff)|` below this counts as amplitude-quadrature readout.
const BLIND_SIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePair {
    pub s_xx_imp: f64,
    pub s_ff_rp: f64,
    pub s_fx_re: f64,
}

impl NoisePair {
    /// `S_xx^imp S_FF^rp - (Re S_Fx)^2`; equals `1/(4 eta)`.
    pub fn uncertainty_defect(&self) -> f64 {
        self.s_xx_imp * self.s_ff_rp - self.s_fx_re * self.s_fx_re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononBudget {
    pub n_ba: f64,
    pub n_imp: f64,
    pub n_cor: f64,
    pub n_th_eff: f64,
    /// `n_ba / n_th_eff`; absent at zero temperature.
    pub cq: Option<f64>,
}

/// `2 Omega / kappa`.
pub fn scaled_frequency(readout: &ReadoutParams, omega: f64) -> f64 {
    2.0 * omega / readout.kappa
}

/// Zero-detuning back-action level at the current intracavity power,
/// `omega_sql^2 / 2`.
fn backaction_scale(readout: &ReadoutParams) -> Result<f64> {
    let s0 = 0.5 * readout.omega_sql_sq();
    if !(s0 > 0.0) {
        return Err(Error::SignalBlind(
            "omega_sql0 = 0: no optical power, no measurement".into(),
        ));
    }
    Ok(s0)
}

fn homodyne_denominator(readout: &ReadoutParams, w: f64) -> Result<f64> {
    let (s, c) = readout.theta.sin_cos();
    let a = s - readout.delta * c;
    let den = a * a + w * w * s * s;
    let scale = 1.0 + readout.delta * readout.delta;
    if !(den > BLIND_SIN * BLIND_SIN * scale) {
        return Err(Error::SignalBlind(format!(
            "theta={} delta={} w={w}: homodyne quadrature carries no displacement signal",
            readout.theta, readout.delta
        )));
    }
    Ok(den)
}

/// Imprecision PSD with the full cavity response.
pub fn imprecision_psd_exact(readout: &ReadoutParams, w: f64) -> Result<f64> {
    let s0 = backaction_scale(readout)?;
    let den = homodyne_denominator(readout, w)?;
    let d = readout.delta;
    let one_w = 1.0 + w * w;
    let a_imp = (1.0 + (d + w).powi(2)) * (1.0 + (d - w).powi(2)) / (one_w * den);
    let baseline = one_w / (4.0 * s0);
    Ok(a_imp * baseline / readout.eta)
}

/// Back-action force PSD with the full cavity response.
pub fn backaction_psd_exact(readout: &ReadoutParams, w: f64) -> f64 {
    let s0 = 0.5 * readout.omega_sql_sq();
    let d = readout.delta;
    let one_w = 1.0 + w * w;
    let a_rp = one_w * (1.0 + d * d + w * w) / ((1.0 + (d + w).powi(2)) * (1.0 + (d - w).powi(2)));
    a_rp * s0 / one_w
}

/// Imprecision-back-action product with the full cavity response:
/// `(1 + delta^2 + w^2) / (4 eta ((sin t - delta cos t)^2 + w^2 sin^2 t))`.
pub fn uncertainty_product_exact(readout: &ReadoutParams, w: f64) -> Result<f64> {
    let den = homodyne_denominator(readout, w)?;
    let d = readout.delta;
    Ok((1.0 + d * d + w * w) / (4.0 * readout.eta * den))
}

fn sin_eff(readout: &ReadoutParams) -> Result<(f64, f64)> {
    let (s, c) = effective_angle(readout).sin_cos();
    if s.abs() < BLIND_SIN {
        return Err(Error::SignalBlind(format!(
            "theta_eff = {} reads the amplitude quadrature",
            effective_angle(readout)
        )));
    }
    Ok((s, c))
}

/// Broadband `Re S_Fx = -cot(theta_eff) / (2 sqrt(eta))`.
pub fn cross_correlation_broadband(readout: &ReadoutParams) -> Result<f64> {
    let (s, c) = sin_eff(readout)?;
    Ok(-0.5 * (c / s) / readout.eta.sqrt())
}

/// All three broadband spectral densities.
pub fn noise_pair(readout: &ReadoutParams) -> Result<NoisePair> {
    let s0 = backaction_scale(readout)?;
    let (s, c) = sin_eff(readout)?;
    let one_d = 1.0 + readout.delta * readout.delta;
    Ok(NoisePair {
        s_xx_imp: one_d / (4.0 * s0 * s * s) / readout.eta,
        s_ff_rp: s0 / one_d,
        s_fx_re: -0.5 * (c / s) / readout.eta.sqrt(),
    })
}

/// Phonon-equivalent noise occupations of the stiffened mode.
///
/// `n_ba = S_FF^rp / (2 omega_eff gamma0[omega_eff])`, i.e. back-action per
/// quantum of the structural force spectrum, which leaves `n_ba`
/// temperature independent. It matches the ratio form
/// `n_th,eff S_FF^rp / S_FF^th` up to `O(1/n_th)`.
pub fn phonon_budget(sys: &SystemParams) -> Result<PhononBudget> {
    let eff = effective_oscillator(sys)?;
    let noise = noise_pair(&sys.readout)?;
    let unit = 2.0 * eff.omega_eff * eff.gamma0;
    let n_th_eff = sys.osc.nth0 * sys.osc.omega0 / eff.omega_eff;
    let n_ba = noise.s_ff_rp / unit;
    Ok(PhononBudget {
        n_ba,
        n_imp: noise.s_xx_imp * unit / 4.0,
        n_cor: -noise.s_fx_re,
        n_th_eff,
        cq: (n_th_eff > 0.0).then(|| n_ba / n_th_eff),
    })
}

/// Imprecision occupation for phase-quadrature readout at the same power,
/// `1 / (16 eta n_ba)`.
pub fn n_imp_phase(budget: &PhononBudget, eta: f64) -> f64 {
    1.0 / (16.0 * eta * budget.n_ba)
}

/// Correlation occupation at `theta_eff = pi/4`, `1 / (2 sqrt(eta))`.
pub fn n_cor_quarter(eta: f64) -> f64 {
    0.5 / eta.sqrt()
}
