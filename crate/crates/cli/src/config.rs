//! Configuration documents: JSON with one object per section.
//!
//! ```json
//! {
//!   "oscillator": { "q0": 1e6, "nth0": 1e8 },
//!   "readout":    { "omega_sql0": 10, "delta": 0.5, "theta": 1.047, "eta": 0.8, "kappa": 1e3 },
//!   "feedback":   { "omega_h": 5, "omega_l": 500, "gfb": 1e3 }
//! }
//! ```
//!
//! Frequencies are in units of the bare resonance `omega0`. An `si` section
//! may replace `nth0`, `kappa` and `omega_sql0` with laboratory values.

use serde::Deserialize;
use std::f64::consts::{FRAC_PI_2, PI};

use springcool::model::{FeedbackParams, OscillatorParams, ReadoutParams, SystemParams, DEFAULT_KAPPA};
use springcool::spectra::SpectrumMode;

use crate::error::CliError;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSection {
    pub q0: f64,
    pub nth0: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    pub omega_sql0: Option<f64>,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "half_pi")]
    pub theta: f64,
    #[serde(default = "one")]
    pub eta: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub omega_h: f64,
    pub omega_l: f64,
    pub gfb: f64,
}

/// Laboratory quantities. `omega_sql_hz` stands in for the input power: it
/// is the SQL frequency (in Hz) at zero detuning.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiSection {
    pub mass_kg: f64,
    pub frequency_hz: f64,
    pub temperature_k: f64,
    pub linewidth_hz: f64,
    pub omega_sql_hz: f64,
}

impl SiSection {
    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("si.mass_kg", self.mass_kg),
            ("si.frequency_hz", self.frequency_hz),
            ("si.linewidth_hz", self.linewidth_hz),
            ("si.omega_sql_hz", self.omega_sql_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(name, "must be finite and > 0"));
            }
        }
        if !(self.temperature_k.is_finite() && self.temperature_k >= 0.0) {
            return Err(CliError::config("si.temperature_k", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `k_B T / (hbar 2 pi f)`.
    pub fn nth0(&self) -> f64 {
        K_B * self.temperature_k / (HBAR * 2.0 * PI * self.frequency_hz)
    }

    /// Cavity decay rate in units of `omega0`.
    pub fn kappa(&self) -> f64 {
        self.linewidth_hz / self.frequency_hz
    }

    pub fn omega_sql0(&self) -> f64 {
        self.omega_sql_hz / self.frequency_hz
    }

    /// Unit of length, `sqrt(hbar / (m omega0))`, in metres.
    pub fn length_unit_m(&self) -> f64 {
        (HBAR / (self.mass_kg * 2.0 * PI * self.frequency_hz)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    #[serde(default = "spectrum_ppd")]
    pub points_per_decade: usize,
    #[serde(default = "frozen")]
    pub mode: SpectrumMode,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            omega_min: None,
            omega_max: None,
            points_per_decade: spectrum_ppd(),
            mode: frozen(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "verify_cases")]
    pub cases: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "verify_tol")]
    pub tol: f64,
    /// Largest accepted relative disagreement.
    #[serde(default = "verify_threshold")]
    pub threshold: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            cases: verify_cases(),
            seed: 0,
            tol: verify_tol(),
            threshold: verify_threshold(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "cq_min")]
    pub cq_min: f64,
    #[serde(default = "cq_max")]
    pub cq_max: f64,
    pub points_per_decade: Option<usize>,
    /// Total number of grid points; excludes `points_per_decade`.
    pub points: Option<usize>,
    #[serde(default = "budget")]
    pub budget: usize,
    #[serde(default = "starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            cq_min: cq_min(),
            cq_max: cq_max(),
            points_per_decade: None,
            points: None,
            budget: budget(),
            starts: starts(),
            seed: 0,
        }
    }
}

impl SweepSection {
    pub fn grid_len(&self) -> Result<usize, CliError> {
        if !(self.cq_min > 0.0 && self.cq_max > self.cq_min && self.cq_max.is_finite()) {
            return Err(CliError::config(
                "sweep.cq_min/cq_max",
                "need 0 < cq_min < cq_max",
            ));
        }
        match (self.points, self.points_per_decade) {
            (Some(_), Some(_)) => Err(CliError::config(
                "sweep.points/points_per_decade",
                "give at most one of the two",
            )),
            (Some(n), None) if n >= 2 => Ok(n),
            (Some(_), None) => Err(CliError::config("sweep.points", "must be at least 2")),
            (None, ppd) => {
                let ppd = ppd.unwrap_or(25);
                if ppd == 0 {
                    return Err(CliError::config("sweep.points_per_decade", "must be > 0"));
                }
                let decades = (self.cq_max / self.cq_min).log10();
                Ok(((decades * ppd as f64).round() as usize).max(1) + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub oscillator: Option<OscillatorSection>,
    pub readout: Option<ReadoutSection>,
    pub feedback: Option<FeedbackSection>,
    pub si: Option<SiSection>,
    pub spectrum: Option<SpectrumSection>,
    pub verify: Option<VerifySection>,
    pub sweep: Option<SweepSection>,
}

fn half_pi() -> f64 {
    FRAC_PI_2
}
fn one() -> f64 {
    1.0
}
fn spectrum_ppd() -> usize {
    200
}
fn frozen() -> SpectrumMode {
    SpectrumMode::Frozen
}
fn verify_cases() -> usize {
    100
}
fn verify_tol() -> f64 {
    1e-9
}
fn verify_threshold() -> f64 {
    1e-6
}
fn cq_min() -> f64 {
    1e-2
}
fn cq_max() -> f64 {
    1e2
}
fn budget() -> usize {
    10_000
}
fn starts() -> usize {
    8
}

/// A parsed document with the SI block folded in and every model-level
/// invariant checked.
#[derive(Debug, Clone)]
pub struct Config {
    pub osc: Option<OscillatorParams>,
    /// Readout with `omega_sql0` resolved, when one is available.
    pub readout: Option<ReadoutParams>,
    /// Detection efficiency and cavity decay rate, needed even without a
    /// coupling (sweeps).
    pub eta: f64,
    pub kappa: f64,
    pub system: Option<SystemParams>,
    pub si: Option<SiSection>,
    pub spectrum: SpectrumSection,
    pub verify: VerifySection,
    pub sweep: SweepSection,
    pub has_verify: bool,
}

/// Takes a value from exactly one of the explicit field and the SI block.
fn one_source(field: &str, explicit: Option<f64>, si: Option<f64>) -> Result<Option<f64>, CliError> {
    match (explicit, si) {
        (Some(_), Some(_)) => Err(CliError::config(
            field,
            "given both explicitly and through the si section",
        )),
        (a, b) => Ok(a.or(b)),
    }
}

/// Prefixes a model error's field with its section.
fn in_section(section: &str, e: springcool::Error) -> CliError {
    match e {
        springcool::Error::Config { field, reason } => CliError::config(format!("{section}.{field}"), reason),
        other => CliError::config(section, other.to_string()),
    }
}

pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(
            if path == "." { "<document>".into() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    resolve(doc)
}

fn resolve(doc: Document) -> Result<Config, CliError> {
    if let Some(si) = &doc.si {
        si.validate()?;
        if doc.oscillator.is_none() {
            return Err(CliError::config("oscillator.q0", "required with an si section"));
        }
    }
    let si = doc.si;
    let osc = match &doc.oscillator {
        Some(o) => {
            let nth0 = one_source("oscillator.nth0", o.nth0, si.map(|s| s.nth0()))?
                .ok_or_else(|| CliError::config("oscillator.nth0", "missing (or give an si section)"))?;
            Some(OscillatorParams::new(o.q0, nth0).map_err(|e| in_section("oscillator", e))?)
        }
        None => None,
    };
    let r = doc.readout.clone();
    let kappa = one_source(
        "readout.kappa",
        r.as_ref().and_then(|r| r.kappa),
        si.map(|s| s.kappa()),
    )?
    .unwrap_or(DEFAULT_KAPPA);
    let omega_sql0 = one_source(
        "readout.omega_sql0",
        r.as_ref().and_then(|r| r.omega_sql0),
        si.map(|s| s.omega_sql0()),
    )?;
    let eta = r.as_ref().map_or(1.0, |r| r.eta);
    let readout = match omega_sql0 {
        Some(x) => {
            let (delta, theta) = r.as_ref().map_or((0.0, FRAC_PI_2), |r| (r.delta, r.theta));
            Some(
                ReadoutParams::new(x, delta, theta, eta)
                    .and_then(|p| p.with_kappa(kappa))
                    .map_err(|e| in_section("readout", e))?,
            )
        }
        None => {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(CliError::config("readout.eta", "must lie in (0, 1]"));
            }
            if !(kappa.is_finite() && kappa > 0.0) {
                return Err(CliError::config("readout.kappa", "must be finite and > 0"));
            }
            None
        }
    };
    let fb = match &doc.feedback {
        Some(f) => {
            Some(FeedbackParams::new(f.omega_h, f.omega_l, f.gfb).map_err(|e| in_section("feedback", e))?)
        }
        None => None,
    };
    let system = match (osc, readout, fb) {
        (Some(o), Some(r), Some(f)) => Some(SystemParams::new(o, r, f).map_err(|e| in_section("system", e))?),
        _ => None,
    };
    let spectrum = doc.spectrum.unwrap_or_default();
    if spectrum.points_per_decade == 0 {
        return Err(CliError::config("spectrum.points_per_decade", "must be > 0"));
    }
    let verify = doc.verify.unwrap_or_default();
    if !(verify.tol > 0.0 && verify.tol < 1.0) {
        return Err(CliError::config("verify.tol", "must lie in (0, 1)"));
    }
    let sweep = doc.sweep.unwrap_or_default();
    if doc.sweep.is_some() {
        sweep.grid_len()?;
    }
    Ok(Config {
        osc,
        readout,
        eta,
        kappa,
        system,
        si,
        spectrum,
        verify,
        sweep,
        has_verify: doc.verify.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "oscillator": {"q0": 1e6, "nth0": 1e8},
        "readout": {"omega_sql0": 10, "delta": 0, "theta": 1.5707963267948966, "eta": 1},
        "feedback": {"omega_h": 5, "omega_l": 500, "gfb": 1000}
    }"#;

    #[test]
    fn minimal_eval_document() {
        let c = parse_config(MINIMAL).unwrap();
        let s = c.system.unwrap();
        assert_eq!(s.fb.gfb, 1000.0);
        assert_eq!(s.readout.kappa, DEFAULT_KAPPA);
    }

    #[test]
    fn inverted_filter_names_both_fields() {
        let text = MINIMAL.replace("\"omega_h\": 5", "\"omega_h\": 600");
        let e = parse_config(&text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("feedback.omega_h/omega_l"), "{msg}");
    }

    #[test]
    fn unknown_key_is_reported_with_path() {
        let text = MINIMAL.replace("\"gfb\"", "\"gain\"");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("feedback") && msg.contains("gain"), "{msg}");
    }

    #[test]
    fn si_block_room_temperature_one_hertz() {
        let si = SiSection {
            mass_kg: 1e-12,
            frequency_hz: 1.0,
            temperature_k: 300.0,
            linewidth_hz: 1e3,
            omega_sql_hz: 10.0,
        };
        // k_B 300 K / (h 1 Hz)
        let expect = 1.380_649e-23 * 300.0 / 6.626_070_15e-34;
        assert!((si.nth0() / expect - 1.0).abs() < 1e-9);
        assert!((si.nth0() / 6.25e12 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn si_conflicts_with_explicit_fields() {
        let text = r#"{
            "oscillator": {"q0": 1e6, "nth0": 1e8},
            "si": {"mass_kg": 1e-12, "frequency_hz": 1e5, "temperature_k": 4, "linewidth_hz": 1e8, "omega_sql_hz": 1e6}
        }"#;
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("oscillator.nth0"), "{msg}");
        let ok = text.replace("\"nth0\": 1e8", "\"nth0\": null");
        let c = parse_config(&ok).unwrap();
        assert!((c.kappa - 1e3).abs() < 1e-9 && (c.readout.unwrap().omega_sql0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_grid_sizes() {
        let s = SweepSection::default();
        assert_eq!(s.grid_len().unwrap(), 101);
        let s = SweepSection {
            points: Some(15),
            ..s
        };
        assert_eq!(s.grid_len().unwrap(), 15);
        let s = SweepSection {
            points_per_decade: Some(3),
            ..s
        };
        assert!(s.grid_len().is_err());
    }
}
