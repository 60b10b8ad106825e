//! Master-side reputation metrics.
//!
//! All metrics are driven by audits only: `validations` (audits in which a
//! worker was honest) and the master's audit count, plus an error rate for
//! the BOINC-style metric.

mod properties;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::WorkerState;

pub use properties::{
    check_property1, find_property2_counterexample, Property1Report, Property2Counterexample,
    RepState,
};

/// Reputation assigned to every worker before the first audit.
pub const PRE_AUDIT_REPUTATION: f64 = 0.5;

/// Reputation floor of the error-rate metric once the error bound is exceeded.
pub const ERROR_RATE_FLOOR: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReputationScheme {
    /// `(v + 1) / (aud + 2)`.
    Type1,
    /// `epsilon^(aud - v)`, 1/2 before the first audit.
    Type2 { epsilon: f64 },
    /// BOINC-style error rate: decays on honest audits, grows on caught
    /// cheats; reputation is `1 - sqrt(beta / A)` under the bound `A`.
    Type3 {
        error_bound: f64,
        beta_init: f64,
        decay: f64,
        increment: f64,
    },
    /// Constant 1/2: plain majority voting.
    None,
}

impl ReputationScheme {
    pub fn type2() -> Self {
        ReputationScheme::Type2 { epsilon: 0.5 }
    }

    pub fn type3() -> Self {
        ReputationScheme::Type3 {
            error_bound: 0.05,
            beta_init: 0.1,
            decay: 0.95,
            increment: 0.1,
        }
    }

    /// Looks a scheme up by name with its default parameters.
    pub fn from_name(name: &str) -> Result<Self, Error> {
        match name.trim().to_ascii_lowercase().as_str() {
            "type1" | "1" => Ok(ReputationScheme::Type1),
            "type2" | "2" => Ok(Self::type2()),
            "type3" | "3" => Ok(Self::type3()),
            "none" => Ok(ReputationScheme::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown reputation scheme `{other}` (expected type1, type2, type3 or none)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReputationScheme::Type1 => "type1",
            ReputationScheme::Type2 { .. } => "type2",
            ReputationScheme::Type3 { .. } => "type3",
            ReputationScheme::None => "none",
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            ReputationScheme::Type2 { epsilon } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "epsilon must lie strictly inside (0, 1), got {epsilon}"
                    )));
                }
            }
            ReputationScheme::Type3 {
                error_bound,
                beta_init,
                decay,
                increment,
            } => {
                if !(error_bound.is_finite() && error_bound > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "error bound A must be positive, got {error_bound}"
                    )));
                }
                if !(beta_init.is_finite() && beta_init >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "beta_init must be non-negative, got {beta_init}"
                    )));
                }
                if !(decay.is_finite() && (0.0..=1.0).contains(&decay)) {
                    return Err(Error::InvalidConfig(format!(
                        "beta decay must lie in [0, 1], got {decay}"
                    )));
                }
                if !(increment.is_finite() && increment >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "beta increment must be non-negative, got {increment}"
                    )));
                }
            }
            ReputationScheme::Type1 | ReputationScheme::None => {}
        }
        Ok(())
    }

    /// Error rate a fresh worker starts with.
    pub fn initial_error_rate(&self) -> f64 {
        match *self {
            ReputationScheme::Type3 { beta_init, .. } => beta_init,
            _ => 0.0,
        }
    }

    /// Reputation of a worker with the given counters.
    pub fn reputation(&self, validations: u64, error_rate: f64, audits: u64) -> f64 {
        assert!(
            validations <= audits,
            "validation count {validations} exceeds audit count {audits}"
        );
        match *self {
            ReputationScheme::Type1 => (validations + 1) as f64 / (audits + 2) as f64,
            ReputationScheme::Type2 { epsilon } => {
                if audits == 0 {
                    PRE_AUDIT_REPUTATION
                } else {
                    pow_u64(epsilon, audits - validations)
                }
            }
            ReputationScheme::Type3 { error_bound, .. } => {
                if audits == 0 {
                    PRE_AUDIT_REPUTATION
                } else if error_rate > error_bound {
                    ERROR_RATE_FLOOR
                } else {
                    1.0 - (error_rate / error_bound).sqrt()
                }
            }
            ReputationScheme::None => PRE_AUDIT_REPUTATION,
        }
    }

    /// Reputation of `worker` given the master's audit count.
    pub fn value(&self, worker: &WorkerState, audits: u64) -> f64 {
        self.reputation(worker.validations, worker.error_rate, audits)
    }

    /// Error rate after one audit.
    pub fn next_error_rate(&self, error_rate: f64, truthful: bool) -> f64 {
        match *self {
            ReputationScheme::Type3 {
                decay, increment, ..
            } => {
                if truthful {
                    error_rate * decay
                } else {
                    error_rate + increment
                }
            }
            _ => error_rate,
        }
    }

    /// Applies one audit's verdict to a worker's reputation counters.
    pub fn update_on_audit(&self, worker: &WorkerState, truthful: bool) -> WorkerState {
        let mut next = worker.clone();
        if truthful {
            next.validations += 1;
        }
        next.error_rate = self.next_error_rate(worker.error_rate, truthful);
        next
    }

    /// Aggregate (summed) reputation of the selected workers.
    pub fn aggregate<'a, I>(&self, workers: I, audits: u64) -> f64
    where
        I: IntoIterator<Item = &'a WorkerState>,
    {
        workers.into_iter().map(|w| self.value(w, audits)).sum()
    }
}

impl fmt::Display for ReputationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn pow_u64(base: f64, exp: u64) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => 0.0,
    }
}
