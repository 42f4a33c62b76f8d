//! Feedback cooling of a structurally damped mechanical oscillator whose
//! position is read out by a detuned optical cavity.
//!
//! Units: `hbar = m = 1`; frequencies are in the same unit as `omega0`
//! (1 by default).

pub mod closed_form;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod quantum_noise;
pub mod spectra;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    effective_oscillator, EffectiveOscillator, FeedbackParams, OscillatorParams, ReadoutParams, SystemParams,
};
