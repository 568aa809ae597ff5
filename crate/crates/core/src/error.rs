use std::fmt;

use thiserror::Error;

/// A `(source, eavesdropper multiplicity)` pair, 1-based as in the model
/// notation, identifying the product `p * a_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductTerm {
    pub source: usize,
    pub multiplicity: usize,
}

/// Two products `p * a_k` and `q * a_j` (with `j != k`) that are too close
/// for the partial-fraction expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub first: ProductTerm,
    pub second: ProductTerm,
    /// `|p a_k - q a_j| / max(p a_k, q a_j)`
    pub relative_gap: f64,
}

impl fmt::Display for Collision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}*a_{} ~ {}*a_{} (rel gap {:e})",
            self.first.multiplicity,
            self.first.source,
            self.second.multiplicity,
            self.second.source,
            self.relative_gap
        )
    }
}

#[derive(Debug, Error)]
pub enum EsrError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("degenerate products i_k*a_k ({} collisions, first: {})", .0.len(), .0[0])]
    DegenerateProducts(Vec<Collision>),

    #[error("guard exceeded: {what} requires {requested}, limit is {limit}")]
    GuardExceeded {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("{function}: argument {x} outside the domain")]
    Domain { function: &'static str, x: f64 },

    #[error("asymptote undefined: slope is zero (no backhaul can be active)")]
    DegenerateAsymptote,

    #[error("{function}: no convergence after {iterations} iterations at x = {x}")]
    NoConvergence {
        function: &'static str,
        iterations: usize,
        x: f64,
    },

    #[error("numerical cancellation: {what} evaluated to {value:e} (term magnitude {scale:e})")]
    Cancellation {
        what: &'static str,
        value: f64,
        scale: f64,
    },
}

impl EsrError {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        EsrError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for errors raised by the combinatorial or numerical guards, as
    /// opposed to bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            EsrError::GuardExceeded { .. }
                | EsrError::NoConvergence { .. }
                | EsrError::Cancellation { .. }
        )
    }
}

pub type Result<T, E = EsrError> = std::result::Result<T, E>;
