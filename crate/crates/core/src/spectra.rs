//! Closed-loop displacement spectrum.
//!
//! ```text
//! S_xx = |chi_eff|^2 ( S_FF^th + S_FF^rp + |chi_fb^-1|^2 S_xx^imp
//!                      + 2 Re(chi_fb^-1[-Omega] S_Fx) )
//! chi_fb^-1 = omega0^2 gfb (1 + i Omega/omega_h) / (1 + i Omega/omega_l)
//! ```
//!
//! Two treatments of the structural damping are offered. `Frozen` holds
//! `gamma0` and the thermal force at their values at `omega_eff`, which
//! turns the intrinsic oscillator into a velocity-damped one; this is the
//! integrand the closed-form variances describe exactly. `Structural` keeps
//! `gamma0 ~ 1/Omega` and `n_th ~ 1/Omega` at every frequency; its position
//! variance diverges logarithmically at DC.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{effective_oscillator, EffectiveOscillator, FeedbackParams, SystemParams};
use crate::quantum_noise::{noise_pair, NoisePair};
use crate::stability::CharacteristicCubic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    Frozen,
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTerms {
    pub thermal: f64,
    pub backaction: f64,
    pub fed_imprecision: f64,
    /// May be negative.
    pub correlation: f64,
}

impl SpectrumTerms {
    pub fn total(&self) -> f64 {
        self.thermal + self.backaction + self.fed_imprecision + self.correlation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub chi_eff_inv_re: f64,
    pub chi_eff_inv_im: f64,
    pub s_xx_total: f64,
    pub terms: SpectrumTerms,
}

impl SpectrumPoint {
    pub fn chi_eff_inv(&self) -> Complex64 {
        Complex64::new(self.chi_eff_inv_re, self.chi_eff_inv_im)
    }
}

/// `Lambda_L Omega^2 + Lambda_H omega_l^2 = (Omega^2 + omega_l^2) |chi_eff|^-2 S_xx`
/// for the frozen spectrum, plus the cubic coefficients `s1`, `s2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaCoefficients {
    pub lambda_l: f64,
    pub lambda_h: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Everything needed to evaluate the spectrum repeatedly for one parameter set.
#[derive(Debug, Clone)]
pub struct SpectrumModel {
    mode: SpectrumMode,
    eff: EffectiveOscillator,
    noise: NoisePair,
    fb: FeedbackParams,
    /// `omega0^2 + omega_rp^2`
    stiffness: f64,
    omega0: f64,
    q0: f64,
    nth0: f64,
    fb_gain: f64,
}

impl SpectrumModel {
    pub fn new(sys: &SystemParams, mode: SpectrumMode) -> Result<Self> {
        sys.validate()?;
        let eff = effective_oscillator(sys)?;
        let noise = noise_pair(&sys.readout)?;
        let w0 = sys.osc.omega0;
        Ok(Self {
            mode,
            eff,
            noise,
            fb: sys.fb,
            stiffness: w0 * w0 + eff.omega_rp_sq,
            omega0: w0,
            q0: sys.osc.q0,
            nth0: sys.osc.nth0,
            fb_gain: eff.omega_fb_sq,
        })
    }

    pub fn mode(&self) -> SpectrumMode {
        self.mode
    }

    pub fn effective(&self) -> &EffectiveOscillator {
        &self.eff
    }

    pub fn noise(&self) -> &NoisePair {
        &self.noise
    }

    /// Feedback filter `chi_fb^-1(Omega)`.
    pub fn chi_fb_inv(&self, omega: f64) -> Complex64 {
        let num = Complex64::new(1.0, omega / self.fb.omega_h);
        let den = Complex64::new(1.0, omega / self.fb.omega_l);
        num / den * self.fb_gain
    }

    fn intrinsic_loss(&self, omega: f64) -> Result<f64> {
        match self.mode {
            SpectrumMode::Frozen => Ok(omega * self.eff.gamma0),
            SpectrumMode::Structural => {
                if omega == 0.0 {
                    return Err(Error::domain("structural spectrum", "undefined at Omega = 0"));
                }
                Ok(self.omega0 * self.omega0 / self.q0 * omega.signum())
            }
        }
    }

    fn thermal_force(&self, omega: f64) -> f64 {
        let w0 = self.omega0;
        let loss = w0 * w0 / self.q0;
        let n = match self.mode {
            SpectrumMode::Frozen => self.nth0 * w0 / self.eff.omega_eff,
            SpectrumMode::Structural => self.nth0 * w0 / omega.abs(),
        };
        2.0 * (n + 0.5) * loss
    }

    pub fn chi_eff_inv(&self, omega: f64) -> Result<Complex64> {
        let passive = Complex64::new(
            self.stiffness - omega * omega,
            self.intrinsic_loss(omega)? + omega * self.eff.gamma_rp,
        );
        Ok(passive + self.chi_fb_inv(omega))
    }

    pub fn point(&self, omega: f64) -> Result<SpectrumPoint> {
        let chi_inv = self.chi_eff_inv(omega)?;
        let gain = 1.0 / chi_inv.norm_sqr();
        let fb = self.chi_fb_inv(omega);
        let terms = SpectrumTerms {
            thermal: gain * self.thermal_force(omega),
            backaction: gain * self.noise.s_ff_rp,
            fed_imprecision: gain * fb.norm_sqr() * self.noise.s_xx_imp,
            correlation: gain * 2.0 * fb.conj().re * self.noise.s_fx_re,
        };
        Ok(SpectrumPoint {
            omega,
            chi_eff_inv_re: chi_inv.re,
            chi_eff_inv_im: chi_inv.im,
            s_xx_total: terms.total(),
            terms,
        })
    }

    /// Total displacement PSD.
    pub fn s_xx(&self, omega: f64) -> Result<f64> {
        Ok(self.point(omega)?.s_xx_total)
    }
}

/// Inverse effective susceptibility with `gamma0` frozen at `omega_eff`.
pub fn chi_eff_inv(sys: &SystemParams, omega: f64) -> Result<Complex64> {
    SpectrumModel::new(sys, SpectrumMode::Frozen)?.chi_eff_inv(omega)
}

pub fn displacement_psd(sys: &SystemParams, omega: f64, mode: SpectrumMode) -> Result<SpectrumPoint> {
    SpectrumModel::new(sys, mode)?.point(omega)
}

/// Log-spaced spectrum over `[omega_min, omega_max]`.
pub fn spectrum_grid(
    sys: &SystemParams,
    mode: SpectrumMode,
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
) -> Result<Vec<SpectrumPoint>> {
    if !(omega_min > 0.0 && omega_max > omega_min) || points_per_decade == 0 {
        return Err(Error::config(
            "spectrum",
            "need 0 < omega_min < omega_max and points_per_decade > 0",
        ));
    }
    let model = SpectrumModel::new(sys, mode)?;
    let decades = (omega_max / omega_min).log10();
    let n = ((decades * points_per_decade as f64).round() as usize).max(1);
    (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            model.point(omega_min * 10f64.powf(t * decades))
        })
        .collect()
}

/// Numerator coefficients of the frozen spectrum. The force-like terms use
/// the feedback damping `gamma_fb = gfb omega0^2 / omega_h`, which makes the
/// factorization exact at every frequency.
pub fn lambda_coefficients(sys: &SystemParams) -> Result<LambdaCoefficients> {
    let eff = effective_oscillator(sys)?;
    let noise = noise_pair(&sys.readout)?;
    let thermal = 2.0 * (sys.osc.nth0 * sys.osc.omega0 / eff.omega_eff + 0.5) * eff.omega_eff * eff.gamma0;
    let cubic = CharacteristicCubic::from_oscillator(&eff, &sys.fb);
    let (l, h) = lambda_pair(thermal + noise.s_ff_rp, &noise, eff.gamma_fb, &sys.fb);
    Ok(LambdaCoefficients {
        lambda_l: l,
        lambda_h: h,
        s1: cubic.s1,
        s2: cubic.s2,
    })
}

/// `(Lambda_L, Lambda_H)` for a force level `force` and damping `gamma`.
pub(crate) fn lambda_pair(force: f64, noise: &NoisePair, gamma: f64, fb: &FeedbackParams) -> (f64, f64) {
    let at = |corner: f64| {
        let k = corner * gamma;
        force + k * k * noise.s_xx_imp + 2.0 * k * noise.s_fx_re
    };
    (at(fb.omega_l), at(fb.omega_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OscillatorParams, ReadoutParams};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn benchmark(delta: f64, theta: f64, gfb: f64) -> SystemParams {
        SystemParams::new(
            OscillatorParams::new(1e6, 1e8).unwrap(),
            ReadoutParams::new(10.0, delta, theta, 1.0).unwrap(),
            FeedbackParams::new(5.0, 500.0, gfb).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn bare_oscillator_on_resonance_is_imaginary() {
        let s = benchmark(0.0, FRAC_PI_2, 0.0);
        let c = chi_eff_inv(&s, 1.0).unwrap();
        assert!(c.re.abs() < 1e-15);
        assert!((c.im - 1e-6).abs() < 1e-20);
    }

    #[test]
    fn feedback_filter_limits() {
        let s = benchmark(0.0, FRAC_PI_2, 7.0);
        let m = SpectrumModel::new(&s, SpectrumMode::Frozen).unwrap();
        let low = m.chi_fb_inv(0.0);
        assert_eq!(low, Complex64::new(7.0, 0.0));
        let mid = m.chi_fb_inv(5.0);
        let expect = Complex64::new(1.0, 1.0) / Complex64::new(1.0, 0.01) * 7.0;
        assert!((mid - expect).norm() < 1e-14 * expect.norm());
        let high = m.chi_fb_inv(1e9).norm_sqr();
        let plateau = (7.0f64 * 500.0 / 5.0).powi(2);
        assert!((high / plateau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase_readout_has_no_correlation_term() {
        let s = benchmark(0.0, FRAC_PI_2, 1e3);
        let m = SpectrumModel::new(&s, SpectrumMode::Frozen).unwrap();
        for w in [0.1, 3.0, 31.6, 200.0, 1e4] {
            let p = m.point(w).unwrap();
            assert!(p.terms.correlation.abs() < 1e-15 * p.s_xx_total);
        }
    }

    #[test]
    fn fed_imprecision_decays_above_corners() {
        let s = benchmark(0.0, FRAC_PI_2, 1e3);
        let m = SpectrumModel::new(&s, SpectrumMode::Frozen).unwrap();
        // |chi_eff|^2 ~ Omega^-4 and |chi_fb|^-2 flat, so Omega^2 S ~ Omega^-2
        let a = m.point(1e6).unwrap().terms.fed_imprecision;
        let b = m.point(1e7).unwrap().terms.fed_imprecision;
        assert!((a / b / 1e4 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn structural_spectrum_rejects_dc() {
        let s = benchmark(0.0, FRAC_PI_2, 1e3);
        assert!(displacement_psd(&s, 0.0, SpectrumMode::Structural).is_err());
        assert!(displacement_psd(&s, 0.0, SpectrumMode::Frozen).is_ok());
    }

    #[test]
    fn lambda_degenerate_filter_and_phase_readout() {
        let s = benchmark(0.0, FRAC_PI_2, 1e3);
        let noise = noise_pair(&s.readout).unwrap();
        assert!(noise.s_fx_re.abs() < 1e-16);
        let mut near = s;
        near.fb.omega_l = near.fb.omega_h * (1.0 + 1e-9);
        let l = lambda_coefficients(&near).unwrap();
        assert!((l.lambda_l / l.lambda_h - 1.0).abs() < 1e-8);
    }

    #[test]
    fn factorization_on_benchmark() {
        let s = benchmark(0.5, FRAC_PI_3, 1e3);
        let lam = lambda_coefficients(&s).unwrap();
        let m = SpectrumModel::new(&s, SpectrumMode::Frozen).unwrap();
        for w in [1e-3, 0.7, 5.0, 31.0, 32.0, 499.0, 1e5] {
            let p = m.point(w).unwrap();
            let lhs = (w * w + 250_000.0) * p.chi_eff_inv().norm_sqr() * p.s_xx_total;
            let rhs = lam.lambda_l * w * w + lam.lambda_h * 250_000.0;
            assert!((lhs / rhs - 1.0).abs() < 1e-10, "w={w}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn grid_is_log_spaced() {
        let s = benchmark(0.0, FRAC_PI_2, 1e3);
        let g = spectrum_grid(&s, SpectrumMode::Frozen, 1.0, 100.0, 10).unwrap();
        assert_eq!(g.len(), 21);
        assert!((g[20].omega - 100.0).abs() < 1e-12);
        assert!((g[10].omega - 10.0).abs() < 1e-12);
    }
}
