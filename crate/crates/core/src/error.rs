use thiserror::Error;

use crate::stability::StabilityMargins;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A function was evaluated outside the set where it is defined.
    #[error("domain error in {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    /// A parameter violates a model invariant.
    #[error("invalid parameter `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The readout carries no information about the displacement.
    #[error("signal-blind readout: {0}")]
    SignalBlind(String),

    /// The closed loop fails the Routh-Hurwitz test.
    #[error("closed loop is unstable: {violated} (margins {margins:?})")]
    Unstable {
        violated: &'static str,
        margins: StabilityMargins,
    },

    /// Adaptive quadrature ran out of budget before meeting the tolerance.
    #[error(
        "quadrature did not converge after {n_evals} evaluations: \
         x_var={x_partial:.6e} (err {x_err:.2e}), p_var={p_partial:.6e} (err {p_err:.2e})"
    )]
    Convergence {
        n_evals: usize,
        x_partial: f64,
        x_err: f64,
        p_partial: f64,
        p_err: f64,
    },

    /// The optimizer found no stable point inside the search box.
    #[error("no feasible point: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }
}
