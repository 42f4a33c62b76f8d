//! Dimensionless parameterization of the oscillator, the cavity readout and
//! the feedback filter.
//!
//! Units: `hbar = m = 1`. Every frequency is measured in the same unit as
//! `OscillatorParams::omega0`, which is 1 unless a caller chooses otherwise.
//! Damping rates are angular frequencies in the same unit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cavity decay rate used when none is given. Deep in the broadband regime.
pub const DEFAULT_KAPPA: f64 = 1.0e3;

/// Smallest admissible `omega_l / omega_h`. Narrower filters make the
/// closed-form occupation formally divergent.
pub const MIN_FILTER_RATIO: f64 = 1.0 + 1.0e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Intrinsic resonance frequency.
    pub omega0: f64,
    /// Intrinsic quality factor, `omega0 / gamma0[omega0]`.
    pub q0: f64,
    /// Thermal bath occupation at `omega0`.
    pub nth0: f64,
}

impl OscillatorParams {
    pub fn new(q0: f64, nth0: f64) -> Result<Self> {
        let p = Self {
            omega0: 1.0,
            q0,
            nth0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::config("omega0", "must be finite and > 0"));
        }
        if !(self.q0.is_finite() && self.q0 > 0.0) {
            return Err(Error::config("q0", "must be finite and > 0"));
        }
        if !(self.nth0.is_finite() && self.nth0 >= 0.0) {
            return Err(Error::config("nth0", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    /// SQL frequency at zero detuning for the chosen input power.
    pub omega_sql0: f64,
    /// Detuning normalized to the cavity half-linewidth, `2 Delta / kappa`.
    pub delta: f64,
    /// Homodyne local-oscillator angle in `(-pi, pi]`.
    pub theta: f64,
    /// Detection efficiency.
    pub eta: f64,
    /// Cavity energy decay rate.
    pub kappa: f64,
}

impl ReadoutParams {
    pub fn new(omega_sql0: f64, delta: f64, theta: f64, eta: f64) -> Result<Self> {
        let p = Self {
            omega_sql0,
            delta,
            theta: wrap_angle(theta),
            eta,
            kappa: DEFAULT_KAPPA,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_sql0.is_finite() && self.omega_sql0 >= 0.0) {
            return Err(Error::config("omega_sql0", "must be finite and >= 0"));
        }
        if !self.delta.is_finite() {
            return Err(Error::config("delta", "must be finite"));
        }
        if !(self.theta.is_finite() && self.theta > -PI && self.theta <= PI) {
            return Err(Error::config("theta", "must lie in (-pi, pi]"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::config("eta", "must lie in (0, 1]"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::config("kappa", "must be finite and > 0"));
        }
        Ok(())
    }

    /// SQL frequency at the actual detuning, for fixed input power.
    pub fn omega_sql_sq(&self) -> f64 {
        self.omega_sql0 * self.omega_sql0 / (1.0 + self.delta * self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    /// High-pass corner.
    pub omega_h: f64,
    /// Low-pass corner.
    pub omega_l: f64,
    /// Dimensionless DC gain.
    pub gfb: f64,
}

impl FeedbackParams {
    pub fn new(omega_h: f64, omega_l: f64, gfb: f64) -> Result<Self> {
        let p = Self {
            omega_h,
            omega_l,
            gfb,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_h.is_finite() && self.omega_h > 0.0) {
            return Err(Error::config("omega_h", "must be finite and > 0"));
        }
        if !(self.omega_l.is_finite() && self.omega_l > self.omega_h) {
            return Err(Error::config(
                "omega_h/omega_l",
                format!(
                    "need 0 < omega_h < omega_l, got omega_h={} omega_l={}",
                    self.omega_h, self.omega_l
                ),
            ));
        }
        if !(self.gfb.is_finite() && self.gfb >= 0.0) {
            return Err(Error::config("gfb", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub osc: OscillatorParams,
    pub readout: ReadoutParams,
    pub fb: FeedbackParams,
}

impl SystemParams {
    pub fn new(osc: OscillatorParams, readout: ReadoutParams, fb: FeedbackParams) -> Result<Self> {
        let s = Self { osc, readout, fb };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.osc.validate()?;
        self.readout.validate()?;
        self.fb.validate()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Structural damping rate `gamma0[omega] = (omega0/q0)(omega0/omega)`.
pub fn gamma_structural(osc: &OscillatorParams, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain(
            "gamma_structural",
            format!("omega must be > 0, got {omega}"),
        ));
    }
    Ok(osc.omega0 / osc.q0 * (osc.omega0 / omega))
}

/// Thermal occupation `n_th[omega] = nth0 omega0 / omega`.
pub fn n_thermal(osc: &OscillatorParams, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain(
            "n_thermal",
            format!("omega must be > 0, got {omega}"),
        ));
    }
    Ok(osc.nth0 * osc.omega0 / omega)
}

/// `theta - atan(delta)`: the quadrature actually read out after the
/// cavity rotation.
pub fn effective_angle(readout: &ReadoutParams) -> f64 {
    readout.theta - readout.delta.atan()
}

/// Broadband optical spring: `(omega_rp^2, gamma_rp)`.
pub fn optical_spring(readout: &ReadoutParams) -> (f64, f64) {
    let d = readout.delta;
    let w2 = readout.omega_sql_sq();
    let one = 1.0 + d * d;
    (w2 * d / (2.0 * one), -(w2 / readout.kappa) * d / (one * one))
}

/// Low-frequency spring and damping of the feedback filter:
/// `(omega_fb^2, gamma_fb)`.
pub fn feedback_spring(osc: &OscillatorParams, fb: &FeedbackParams) -> (f64, f64) {
    let k = fb.gfb * osc.omega0 * osc.omega0;
    (k, k / fb.omega_h)
}

/// The stiffened mode and the pieces that make up its damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveOscillator {
    pub omega_eff: f64,
    /// `gamma0[omega_eff] + gamma_rp + gamma_fb`.
    pub gamma_eff: f64,
    /// Structural damping frozen at `omega_eff`.
    pub gamma0: f64,
    pub gamma_rp: f64,
    pub gamma_fb: f64,
    pub omega_rp_sq: f64,
    pub omega_fb_sq: f64,
}

impl EffectiveOscillator {
    /// `g = gamma0[omega_eff] / gamma_eff`.
    pub fn damping_ratio(&self) -> f64 {
        self.gamma0 / self.gamma_eff
    }
}

/// `omega_eff^2 = omega0^2 + omega_rp^2 + omega_h gamma_fb`; damping with the
/// structural part frozen at `omega_eff`.
pub fn effective_oscillator(sys: &SystemParams) -> Result<EffectiveOscillator> {
    let (omega_rp_sq, gamma_rp) = optical_spring(&sys.readout);
    let (omega_fb_sq, gamma_fb) = feedback_spring(&sys.osc, &sys.fb);
    let w0 = sys.osc.omega0;
    let omega_eff_sq = w0 * w0 + omega_rp_sq + sys.fb.omega_h * gamma_fb;
    if !(omega_eff_sq > 0.0) {
        return Err(Error::config(
            "omega_eff",
            format!("statically unstable: omega_eff^2 = {omega_eff_sq:.6e} <= 0"),
        ));
    }
    let omega_eff = omega_eff_sq.sqrt();
    let gamma0 = gamma_structural(&sys.osc, omega_eff)?;
    Ok(EffectiveOscillator {
        omega_eff,
        gamma_eff: gamma0 + gamma_rp + gamma_fb,
        gamma0,
        gamma_rp,
        gamma_fb,
        omega_rp_sq,
        omega_fb_sq,
    })
}
