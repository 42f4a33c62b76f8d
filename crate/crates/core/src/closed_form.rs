//! Closed-form variances, occupation and purity of the feedback-cooled mode.
//!
//! The frozen spectrum is `(Lambda_L Omega^2 + Lambda_H omega_l^2) / |p(i Omega)|^2`
//! with `p` the characteristic cubic, so both variances are rational
//! integrals of a cubic:
//!
//! ```text
//! <x^2> = (Lambda_L omega_eff^2 + Lambda_H omega_l s1) / (2 omega_eff^2 (s1 s2 - omega_l omega_eff^2))
//! <p^2> = (Lambda_L s2 + Lambda_H omega_l^2)            / (2 (s1 s2 - omega_l omega_eff^2))
//! 2 n_eff + 1 = omega_eff <x^2> + <p^2> / omega_eff = 1 / mu
//! ```
//!
//! The approximate forms (`inverse_purity_three_term`, `inverse_purity_lambda_form`,
//! the C coefficients and `optimal_angle`) replace `s1` by `omega_l`, take
//! `s2 = omega_eff^2 + (omega_l - omega_h) gamma_eff` and use `gamma_eff` in the
//! Lambda coefficients.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    effective_angle, effective_oscillator, wrap_angle, EffectiveOscillator, OscillatorParams, ReadoutParams,
    SystemParams, MIN_FILTER_RATIO,
};
use crate::quantum_noise::{n_cor_quarter, n_imp_phase, noise_pair, phonon_budget, NoisePair, PhononBudget};
use crate::spectra::{lambda_coefficients, lambda_pair};
use crate::stability::ensure_stable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingResult {
    pub x_var: f64,
    pub p_var: f64,
    pub n_eff: f64,
    pub purity: f64,
    pub omega_eff: f64,
    pub gamma_eff: f64,
    pub stable: bool,
}

/// Terms of `mu^-1` in the approximate three-term form; they sum to
/// `inverse_purity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeffDecomposition {
    /// `g C_tot (n_th,eff + n_ba + 1/2) / R`
    pub thermal_backaction: f64,
    /// `C_imp n_imp / (g R)`
    pub fed_imprecision: f64,
    /// `-C_cor n_cor / R`
    pub correlation: f64,
    pub inverse_purity: f64,
}

impl NeffDecomposition {
    pub fn n_eff(&self) -> f64 {
        0.5 * (self.inverse_purity - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CCoefficients {
    pub c_tot: f64,
    pub c_imp: f64,
    pub c_cor: f64,
    /// `1 - omega_h / omega_l`
    pub r: f64,
    /// `gamma0[omega_eff] / gamma_eff`
    pub g: f64,
}

impl CCoefficients {
    /// From the rates directly. `gamma_eff` is not required to be physical,
    /// which allows probing the cancellation point `C_tot = 2`.
    pub fn from_rates(omega_eff: f64, gamma_eff: f64, gamma0: f64, omega_h: f64, omega_l: f64) -> Self {
        let w2 = omega_eff * omega_eff;
        let k = 2.0 * w2 + (omega_l - omega_h) * gamma_eff;
        Self {
            c_tot: (k + 2.0 * omega_l * omega_l) / (omega_l * omega_l),
            c_imp: (k + 2.0 * omega_h * omega_h) / w2,
            c_cor: (k + 2.0 * omega_l * omega_h) / (omega_l * omega_eff),
            r: 1.0 - omega_h / omega_l,
            g: gamma0 / gamma_eff,
        }
    }

    /// `1 - C_cor^2 / (C_tot C_imp)`, the fraction of back-action left after
    /// ideal cancellation.
    pub fn backaction_residual(&self) -> f64 {
        1.0 - self.c_cor * self.c_cor / (self.c_tot * self.c_imp)
    }

    /// Right-hand side of the constraint on `C_cor^2 / (2 C_imp)` as printed,
    /// `[1 + u r^2]^2 / (1 + u r^2 / 2)` with `u = C_tot - 2`, `r = omega_l/omega_h`.
    pub fn constraint_printed(&self, omega_h: f64, omega_l: f64) -> f64 {
        let u = self.c_tot - 2.0;
        let r2 = (omega_l / omega_h).powi(2);
        (1.0 + u * r2).powi(2) / (1.0 + 0.5 * u * r2)
    }

    /// The constraint the definitions actually imply,
    /// `[1 + u r / 2]^2 / (1 + u r^2 / 2)`.
    pub fn constraint_derived(&self, omega_h: f64, omega_l: f64) -> f64 {
        let u = self.c_tot - 2.0;
        let r = omega_l / omega_h;
        (1.0 + 0.5 * u * r).powi(2) / (1.0 + 0.5 * u * r * r)
    }

    /// `C_cor^2 / (2 C_imp)` from the coefficients.
    pub fn constraint_lhs(&self) -> f64 {
        self.c_cor * self.c_cor / (2.0 * self.c_imp)
    }
}

fn check_filter(sys: &SystemParams) -> Result<()> {
    if sys.fb.omega_l < MIN_FILTER_RATIO * sys.fb.omega_h {
        return Err(Error::config(
            "omega_h/omega_l",
            format!(
                "filter bandwidth too small: omega_l/omega_h = {} < {MIN_FILTER_RATIO}",
                sys.fb.omega_l / sys.fb.omega_h
            ),
        ));
    }
    Ok(())
}

fn prepare(sys: &SystemParams) -> Result<EffectiveOscillator> {
    sys.validate()?;
    check_filter(sys)?;
    ensure_stable(sys)?;
    effective_oscillator(sys)
}

/// `int dOmega/2pi (c0 Omega^4 + c1 Omega^2 + c2) / |p(i Omega)|^2` over the
/// real line for the monic cubic `p(s) = s^3 + s1 s^2 + s2 s + a3`.
/// Requires `p` Hurwitz.
pub fn rational_integral_cubic(c: [f64; 3], s1: f64, s2: f64, a3: f64) -> f64 {
    let [c0, c1, c2] = c;
    (c0 * s2 * a3 + c1 * a3 + c2 * s1) / (2.0 * a3 * (s1 * s2 - a3))
}

/// Position and momentum variances of the frozen spectrum.
pub fn variances_closed_form(sys: &SystemParams) -> Result<(f64, f64)> {
    let eff = prepare(sys)?;
    variances_from(sys, &eff)
}

fn variances_from(sys: &SystemParams, eff: &EffectiveOscillator) -> Result<(f64, f64)> {
    let lam = lambda_coefficients(sys)?;
    let wl = sys.fb.omega_l;
    let a3 = wl * eff.omega_eff * eff.omega_eff;
    let x = rational_integral_cubic([0.0, lam.lambda_l, lam.lambda_h * wl * wl], lam.s1, lam.s2, a3);
    let p = rational_integral_cubic([lam.lambda_l, lam.lambda_h * wl * wl, 0.0], lam.s1, lam.s2, a3);
    Ok((x, p))
}

pub fn purity_closed_form(sys: &SystemParams) -> Result<CoolingResult> {
    let eff = prepare(sys)?;
    let (x_var, p_var) = variances_from(sys, &eff)?;
    let inv = eff.omega_eff * x_var + p_var / eff.omega_eff;
    Ok(CoolingResult {
        x_var,
        p_var,
        n_eff: 0.5 * (inv - 1.0),
        purity: 1.0 / inv,
        omega_eff: eff.omega_eff,
        gamma_eff: eff.gamma_eff,
        stable: true,
    })
}

/// Occupation from the position variance alone, `omega_eff <x^2> - 1/2`.
pub fn equipartition_neff(sys: &SystemParams) -> Result<f64> {
    let eff = prepare(sys)?;
    let (x_var, _) = variances_from(sys, &eff)?;
    Ok(eff.omega_eff * x_var - 0.5)
}

pub fn c_coefficients(sys: &SystemParams) -> Result<CCoefficients> {
    let eff = effective_oscillator(sys)?;
    Ok(CCoefficients::from_rates(
        eff.omega_eff,
        eff.gamma_eff,
        eff.gamma0,
        sys.fb.omega_h,
        sys.fb.omega_l,
    ))
}

/// `R mu^-1 = g C_tot (n_th,eff + n_ba + 1/2) + C_imp n_imp / g - C_cor n_cor`.
pub fn neff_decomposition(sys: &SystemParams) -> Result<NeffDecomposition> {
    let eff = prepare(sys)?;
    let b = phonon_budget(sys)?;
    let c = c_coefficients(sys)?;
    let tb = c.g * c.c_tot * (b.n_th_eff + b.n_ba + 0.5) / c.r;
    let fi = c.c_imp * b.n_imp / (c.g * c.r);
    let co = -c.c_cor * b.n_cor / c.r;
    debug_assert!(eff.omega_eff > 0.0);
    Ok(NeffDecomposition {
        thermal_backaction: tb,
        fed_imprecision: fi,
        correlation: co,
        inverse_purity: tb + fi + co,
    })
}

/// Three-term approximate inverse purity.
pub fn inverse_purity_three_term(sys: &SystemParams) -> Result<f64> {
    Ok(neff_decomposition(sys)?.inverse_purity)
}

/// `mu^-1 = (Lambda_L (omega_eff^2 + s2) + 2 Lambda_H omega_l^2) / (2 omega_eff omega_l (s2 - omega_eff^2))`
/// with the approximate `s2` and `gamma_eff` in the Lambdas.
pub fn inverse_purity_lambda_form(sys: &SystemParams) -> Result<f64> {
    let eff = prepare(sys)?;
    let noise = noise_pair(&sys.readout)?;
    let force = thermal_force(sys, &eff) + noise.s_ff_rp;
    let (ll, lh) = lambda_pair(force, &noise, eff.gamma_eff, &sys.fb);
    let w2 = eff.omega_eff * eff.omega_eff;
    let wl = sys.fb.omega_l;
    let s2 = w2 + (wl - sys.fb.omega_h) * eff.gamma_eff;
    Ok((ll * (w2 + s2) + 2.0 * lh * wl * wl) / (2.0 * eff.omega_eff * wl * (s2 - w2)))
}

fn thermal_force(sys: &SystemParams, eff: &EffectiveOscillator) -> f64 {
    let n = sys.osc.nth0 * sys.osc.omega0 / eff.omega_eff;
    2.0 * (n + 0.5) * eff.omega_eff * eff.gamma0
}

/// Homodyne angle that minimizes the three-term form,
/// `cot theta_eff = g C_cor n_cor^{pi/4} / (2 C_imp n_imp^{pi/2})`,
/// returned as `theta = theta_eff + atan(delta)` in `(0, pi]`.
pub fn optimal_angle(sys: &SystemParams) -> Result<f64> {
    prepare(sys)?;
    let c = c_coefficients(sys)?;
    let b = phase_budget(sys)?;
    let cot =
        c.g * c.c_cor * n_cor_quarter(sys.readout.eta) / (2.0 * c.c_imp * n_imp_phase(&b, sys.readout.eta));
    Ok(angle_from_cot(cot, sys.readout.delta))
}

/// Homodyne angle that minimizes the exact inverse purity. It is quadratic
/// in `cot theta_eff`, so the minimizer is explicit.
pub fn optimal_angle_exact(sys: &SystemParams) -> Result<f64> {
    let eff = prepare(sys)?;
    let cubic = ensure_stable(sys)?;
    let r = &sys.readout;
    let w2 = eff.omega_eff * eff.omega_eff;
    let (wh, wl) = (sys.fb.omega_h, sys.fb.omega_l);
    let weight_l = w2 + cubic.s2;
    let weight_h = wl * (cubic.s1 + wl);
    let g = eff.gamma_fb;
    let quad = g * g * (wl * wl * weight_l + wh * wh * weight_h);
    let lin = g * (wl * weight_l + wh * weight_h);
    if !(quad > 0.0) {
        // no feedback: the angle only enters through the readout, which
        // does not act on the mode
        return Ok(wrap_angle(0.5 * PI + r.delta.atan()));
    }
    let s = effective_angle(r).sin();
    let i0 = noise_pair(r)?.s_xx_imp * s * s;
    let x0 = n_cor_quarter(r.eta);
    Ok(angle_from_cot(x0 * lin / (i0 * quad), r.delta))
}

fn angle_from_cot(cot: f64, delta: f64) -> f64 {
    wrap_angle(1.0f64.atan2(cot) + delta.atan())
}

/// Budget the mode would have at phase-quadrature readout and the same
/// detuning.
fn phase_budget(sys: &SystemParams) -> Result<PhononBudget> {
    let mut s = *sys;
    s.readout.theta = wrap_angle(0.5 * PI + s.readout.delta.atan());
    phonon_budget(&s)
}

/// Wideband-filter limit (`omega_l -> infinity`) of the occupation inferred
/// from `<x^2>`:
/// `(n_th,eff + n_ba + 1/2) g + (1 + omega_h^2/omega_eff^2) n_imp / g - (omega_h/omega_eff) n_cor - 1/2`.
pub fn wideband_neff(sys: &SystemParams) -> Result<f64> {
    let eff = prepare(sys)?;
    let b = phonon_budget(sys)?;
    let g = eff.damping_ratio();
    let h = sys.fb.omega_h / eff.omega_eff;
    Ok((b.n_th_eff + b.n_ba + 0.5) * g + (1.0 + h * h) * b.n_imp / g - h * b.n_cor - 0.5)
}

/// Phase-quadrature, resonant-readout specialization
/// `n + 1/2 = [n_th,eff + n_ba + 1/2 + (omega_eff/gamma0)^2 n_imp] g + n_imp / g`.
pub fn phase_readout_neff(sys: &SystemParams) -> Result<f64> {
    if sys.readout.delta != 0.0 || effective_angle(&sys.readout).cos().abs() > 1e-12 {
        return Err(Error::domain(
            "phase_readout_neff",
            "requires delta = 0 and theta = pi/2",
        ));
    }
    let eff = prepare(sys)?;
    let b = phonon_budget(sys)?;
    let g = eff.damping_ratio();
    let q = eff.omega_eff / eff.gamma0;
    Ok((b.n_th_eff + b.n_ba + 0.5 + q * q * b.n_imp) * g + b.n_imp / g - 0.5)
}

/// Lower bound on `n + 1/2` after optimizing the damping rate of an
/// unstiffened oscillator, `2 sqrt((n_th + n_ba + 1/2) n_imp)`.
pub fn detailed_balance_floor(budget: &PhononBudget) -> f64 {
    2.0 * ((budget.n_th_eff + budget.n_ba + 0.5) * budget.n_imp).sqrt()
}

/// Imprecision occupation of resonant phase readout of the bare structural
/// oscillator, `omega0^2 / (4 eta Q0 omega_sql0^2)`. Independent of the
/// spring frequency.
pub fn n_imp_structural(osc: &OscillatorParams, readout: &ReadoutParams) -> f64 {
    osc.omega0 * osc.omega0 / (4.0 * readout.eta * osc.q0 * readout.omega_sql0 * readout.omega_sql0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSpring {
    /// `omega0 (n_th / (4 n_imp Q0^2))^(1/5)`
    pub from_n_imp: f64,
    /// `omega0 (eta n_th / Q0)^(1/5) (omega_sql0 / omega0)^(2/5)`
    pub from_coupling: f64,
    pub n_imp: f64,
}

/// Spring frequency balancing thermal dilution (`~ 1/omega_eff`) against
/// fed-back imprecision (`~ omega_eff^4`). Meaningful for `n_imp << 1`.
pub fn optimal_spring(osc: &OscillatorParams, readout: &ReadoutParams) -> Result<OptimalSpring> {
    osc.validate()?;
    readout.validate()?;
    if !(readout.omega_sql0 > 0.0) {
        return Err(Error::SignalBlind("omega_sql0 = 0".into()));
    }
    let n_imp = n_imp_structural(osc, readout);
    let w0 = osc.omega0;
    Ok(OptimalSpring {
        from_n_imp: w0 * (osc.nth0 / (4.0 * n_imp * osc.q0 * osc.q0)).powf(0.2),
        from_coupling: w0 * (readout.eta * osc.nth0 / osc.q0).powf(0.2) * (readout.omega_sql0 / w0).powf(0.4),
        n_imp,
    })
}

/// `n_th,eff + n_imp (omega_eff / gamma0[omega_eff])^2`, the apparent initial
/// occupation of the stiffened mode, as a function of `omega_eff`.
pub fn stiffened_initial_occupation(osc: &OscillatorParams, n_imp: f64, omega_eff: f64) -> f64 {
    let w0 = osc.omega0;
    let q = omega_eff * omega_eff * osc.q0 / (w0 * w0);
    osc.nth0 * w0 / omega_eff + n_imp * q * q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateThresholds {
    /// `sqrt(2) / 5^(5/6) n_th^(-2/3) Q0^(-1/3)`
    pub n_imp_max: f64,
    /// `(5/8)^(5/4) n_th (omega0 / omega_sql0)^3`
    pub q0_min: f64,
    /// `q0_min f0` with `f0 = omega0 / 2 pi`, in cycles per unit of time.
    pub qf_min: f64,
    /// Current `n_imp`, for comparison with `n_imp_max`.
    pub n_imp: f64,
}

/// Advisory thresholds for reaching `n_eff < 1` with an actively stiffened
/// structurally damped oscillator.
pub fn ground_state_thresholds(
    osc: &OscillatorParams,
    readout: &ReadoutParams,
) -> Result<GroundStateThresholds> {
    osc.validate()?;
    readout.validate()?;
    if !(osc.nth0 > 0.0) {
        return Err(Error::domain("ground_state_thresholds", "requires nth0 > 0"));
    }
    if !(readout.omega_sql0 > 0.0) {
        return Err(Error::SignalBlind("omega_sql0 = 0".into()));
    }
    let w0 = osc.omega0;
    let q0_min = (5.0f64 / 8.0).powf(1.25) * osc.nth0 * (w0 / readout.omega_sql0).powi(3);
    Ok(GroundStateThresholds {
        n_imp_max: 2f64.sqrt() / 5f64.powf(5.0 / 6.0) * osc.nth0.powf(-2.0 / 3.0) * osc.q0.powf(-1.0 / 3.0),
        q0_min,
        qf_min: q0_min * w0 / (2.0 * PI),
        n_imp: n_imp_structural(osc, readout),
    })
}

/// Noise pair used by the closed form, exposed for reporting.
pub fn closed_form_noise(sys: &SystemParams) -> Result<NoisePair> {
    noise_pair(&sys.readout)
}
