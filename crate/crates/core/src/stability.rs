//! Closed-loop stability of the feedback-stiffened oscillator.
//!
//! Multiplying the inverse effective susceptibility by `(omega_l + i Omega)`
//! gives, with `s = i Omega`, the cubic
//!
//! ```text
//! p(s) = s^3 + s1 s^2 + s2 s + a3
//! s1 = omega_l + gamma0 + gamma_rp
//! s2 = omega_eff^2 + omega_l (gamma0 + gamma_rp + gamma_fb) - omega_h gamma_fb
//! a3 = omega_l omega_eff^2
//! ```
//!
//! which is Hurwitz iff `s1 > 0`, `a3 > 0` and `s1 s2 > a3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    feedback_spring, gamma_structural, optical_spring, EffectiveOscillator, FeedbackParams, SystemParams,
};

/// Coefficients of the monic characteristic cubic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCubic {
    pub s1: f64,
    pub s2: f64,
    pub a3: f64,
}

impl CharacteristicCubic {
    pub fn from_oscillator(eff: &EffectiveOscillator, fb: &FeedbackParams) -> Self {
        let w2 = eff.omega_eff * eff.omega_eff;
        let passive = eff.gamma0 + eff.gamma_rp;
        Self {
            s1: fb.omega_l + passive,
            s2: w2 + fb.omega_l * (passive + eff.gamma_fb) - fb.omega_h * eff.gamma_fb,
            a3: fb.omega_l * w2,
        }
    }

    /// `s1 s2 - a3`, the last Hurwitz determinant over `a3`.
    pub fn hurwitz(&self) -> f64 {
        self.s1 * self.s2 - self.a3
    }

    pub fn margins(&self) -> StabilityMargins {
        StabilityMargins {
            s1: self.s1,
            s2: self.s2,
            a3: self.a3,
            hurwitz: self.hurwitz(),
        }
    }
}

/// Slack in each Routh-Hurwitz inequality; all positive iff stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityMargins {
    pub s1: f64,
    pub s2: f64,
    pub a3: f64,
    pub hurwitz: f64,
}

impl StabilityMargins {
    pub fn is_stable(&self) -> bool {
        self.s1 > 0.0 && self.s2 > 0.0 && self.a3 > 0.0 && self.hurwitz > 0.0
    }

    /// Name of the first violated inequality.
    pub fn violated(&self) -> Option<&'static str> {
        if !(self.a3 > 0.0) {
            Some("omega_l omega_eff^2 > 0")
        } else if !(self.s1 > 0.0) {
            Some("s1 > 0")
        } else if !(self.s2 > 0.0) {
            Some("s2 > 0")
        } else if !(self.hurwitz > 0.0) {
            Some("s1 s2 > omega_l omega_eff^2")
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// Smallest stabilizing gain with everything else fixed, from the full
    /// Routh-Hurwitz test. `None` when no gain stabilizes the loop.
    pub gfb_min: Option<f64>,
    /// The one-line bound `-gamma_rp omega_l omega_h / (omega0^2 (omega_l - omega_h))`.
    /// Advisory only: it drops the structural damping.
    pub gfb_min_simplified: f64,
    pub margins: StabilityMargins,
}

/// The cubic for any parameter set, including statically unstable ones
/// (`omega_eff^2 <= 0`), for which the structural damping is taken at
/// `omega0`.
pub fn characteristic_cubic(sys: &SystemParams) -> CharacteristicCubic {
    let (omega_rp_sq, gamma_rp) = optical_spring(&sys.readout);
    let (omega_fb_sq, gamma_fb) = feedback_spring(&sys.osc, &sys.fb);
    let w0 = sys.osc.omega0;
    let w2 = w0 * w0 + omega_rp_sq + omega_fb_sq;
    let at = if w2 > 0.0 { w2.sqrt() } else { w0 };
    let gamma0 = gamma_structural(&sys.osc, at).unwrap_or(0.0);
    let passive = gamma0 + gamma_rp;
    let fb = &sys.fb;
    CharacteristicCubic {
        s1: fb.omega_l + passive,
        s2: w2 + fb.omega_l * (passive + gamma_fb) - fb.omega_h * gamma_fb,
        a3: fb.omega_l * w2,
    }
}

pub fn check_stability(sys: &SystemParams) -> StabilityReport {
    let margins = characteristic_cubic(sys).margins();
    let (_, gamma_rp) = optical_spring(&sys.readout);
    let fb = &sys.fb;
    let w0 = sys.osc.omega0;
    StabilityReport {
        stable: margins.is_stable(),
        gfb_min: minimum_stable_gain(sys),
        gfb_min_simplified: -gamma_rp * fb.omega_l * fb.omega_h / (w0 * w0 * (fb.omega_l - fb.omega_h)),
        margins,
    }
}

/// `Ok(())` when stable, otherwise an [`Error::Unstable`] naming the
/// violated inequality.
pub fn ensure_stable(sys: &SystemParams) -> Result<CharacteristicCubic> {
    let cubic = characteristic_cubic(sys);
    let margins = cubic.margins();
    match margins.violated() {
        None => Ok(cubic),
        Some(violated) => Err(Error::Unstable { violated, margins }),
    }
}

fn minimum_stable_gain(sys: &SystemParams) -> Option<f64> {
    let stable_at = |g: f64| {
        let mut s = *sys;
        s.fb.gfb = g;
        characteristic_cubic(&s).margins().is_stable()
    };
    if stable_at(0.0) {
        return Some(0.0);
    }
    let mut lo = 1e-12;
    if stable_at(lo) {
        return Some(lo);
    }
    let mut hi = lo;
    loop {
        hi *= 4.0;
        if hi > 1e30 {
            return None;
        }
        if stable_at(hi) {
            break;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if stable_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{effective_oscillator, OscillatorParams, ReadoutParams};
    use std::f64::consts::FRAC_PI_2;

    fn sys(delta: f64, gfb: f64, kappa: f64) -> SystemParams {
        SystemParams::new(
            OscillatorParams::new(1e6, 1e8).unwrap(),
            ReadoutParams::new(10.0, delta, FRAC_PI_2, 1.0)
                .unwrap()
                .with_kappa(kappa)
                .unwrap(),
            FeedbackParams::new(5.0, 500.0, gfb).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn resonant_readout_stable_for_any_gain() {
        for g in [1e-6, 1e-2, 1.0, 1e3, 1e8] {
            let r = check_stability(&sys(0.0, g, 1e3));
            assert!(r.stable, "gfb={g}");
            assert_eq!(r.gfb_min_simplified, 0.0);
        }
    }

    #[test]
    fn blue_detuning_without_feedback_is_unstable() {
        // gamma_rp = -(50/1e2) * 0.4/1.5625... far exceeds gamma0 = 1e-6
        let s = sys(0.5, 0.0, 1e2);
        let r = check_stability(&s);
        assert!(!r.stable);
        assert!(r.margins.hurwitz <= 0.0 || r.margins.s1 <= 0.0);
        let g = r.gfb_min.expect("feedback can stabilize");
        assert!(g > 0.0);
        let mut ok = s;
        ok.fb.gfb = g * 1.001;
        assert!(check_stability(&ok).stable);
        let mut bad = s;
        bad.fb.gfb = g * 0.999;
        assert!(!check_stability(&bad).stable);
        assert!(matches!(ensure_stable(&s), Err(Error::Unstable { .. })));
    }

    #[test]
    fn cubic_matches_effective_oscillator() {
        let s = sys(0.3, 50.0, 1e3);
        let eff = effective_oscillator(&s).unwrap();
        let a = CharacteristicCubic::from_oscillator(&eff, &s.fb);
        let b = characteristic_cubic(&s);
        assert!((a.s1 - b.s1).abs() <= 1e-14 * a.s1.abs());
        assert!((a.s2 - b.s2).abs() <= 1e-14 * a.s2.abs());
        assert!((a.a3 - b.a3).abs() <= 1e-14 * a.a3.abs());
    }

    #[test]
    fn static_instability_reported() {
        let s = SystemParams::new(
            OscillatorParams::new(1e6, 1e8).unwrap(),
            ReadoutParams::new(10.0, -2.0, FRAC_PI_2, 1.0).unwrap(),
            FeedbackParams::new(5.0, 500.0, 0.0).unwrap(),
        )
        .unwrap();
        let r = check_stability(&s);
        assert!(!r.stable);
        assert!(r.margins.a3 < 0.0);
        assert_eq!(r.margins.violated(), Some("omega_l omega_eff^2 > 0"));
    }
}
