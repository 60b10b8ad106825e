//! Domain types shared by the round engine and the exact oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Behavioural type of a worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkerType {
    Rational,
    Altruistic,
    Malicious,
}

impl WorkerType {
    /// Cheat probability forced by the type, if any.
    pub fn fixed_cheat_probability(self) -> Option<f64> {
        match self {
            WorkerType::Rational => None,
            WorkerType::Altruistic => Some(0.0),
            WorkerType::Malicious => Some(1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WorkerType::Rational => "rational",
            WorkerType::Altruistic => "altruistic",
            WorkerType::Malicious => "malicious",
        }
    }
}

impl fmt::Display for WorkerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "r" => Ok(WorkerType::Rational),
            "altruistic" | "a" => Ok(WorkerType::Altruistic),
            "malicious" | "m" => Ok(WorkerType::Malicious),
            other => Err(Error::InvalidArgument(format!(
                "unknown worker type `{other}` (expected rational, altruistic or malicious)"
            ))),
        }
    }
}

/// Worker-side payoff parameters, in reward units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffParams {
    /// Punishment for being caught cheating.
    pub wpc: f64,
    /// Cost of computing the task.
    pub wct: f64,
    /// Reward paid to an accepted worker.
    pub wby: f64,
}

impl Default for PayoffParams {
    fn default() -> Self {
        PayoffParams {
            wpc: 0.0,
            wct: 0.1,
            wby: 1.0,
        }
    }
}

impl PayoffParams {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("wpc", self.wpc), ("wct", self.wct), ("wby", self.wby)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Mutable per-worker state.
///
/// `validations` counts the audited rounds in which the worker was found
/// honest; `error_rate` is only read by the BOINC-style scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub kind: WorkerType,
    pub p_cheat: f64,
    pub validations: u64,
    pub error_rate: f64,
    pub aspiration: f64,
}

impl WorkerState {
    pub fn new(kind: WorkerType, p_cheat: f64, aspiration: f64, error_rate: f64) -> Self {
        let p_cheat = kind
            .fixed_cheat_probability()
            .unwrap_or_else(|| p_cheat.clamp(0.0, 1.0));
        WorkerState {
            kind,
            p_cheat,
            validations: 0,
            error_rate,
            aspiration,
        }
    }

    /// Cheat probability actually used for the strategy draw.
    pub fn effective_p_cheat(&self) -> f64 {
        self.kind.fixed_cheat_probability().unwrap_or(self.p_cheat)
    }

    /// Replaces the worker's type, keeping its audit history.
    pub fn change_type(&mut self, kind: WorkerType) {
        self.kind = kind;
        if let Some(p) = kind.fixed_cheat_probability() {
            self.p_cheat = p;
        }
    }

    pub fn is_covered(&self, params: &PayoffParams) -> bool {
        is_covered(self, params)
    }
}

/// A worker is covered when honest work can meet its aspiration:
/// `wby >= aspiration + wct`.
pub fn is_covered(worker: &WorkerState, params: &PayoffParams) -> bool {
    params.wby >= worker.aspiration + params.wct
}

/// Master-side learning state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterState {
    pub p_audit: f64,
    pub audits: u64,
    pub p_audit_min: f64,
    pub tolerance: f64,
    pub learning_rate: f64,
}

impl Default for MasterState {
    fn default() -> Self {
        MasterState {
            p_audit: 0.5,
            audits: 0,
            p_audit_min: 0.01,
            tolerance: 0.5,
            learning_rate: 0.1,
        }
    }
}

impl MasterState {
    pub fn validate(&self) -> Result<(), Error> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(self.p_audit_min) {
            return Err(Error::InvalidConfig(format!(
                "pamin must lie in [0, 1], got {}",
                self.p_audit_min
            )));
        }
        if !unit(self.p_audit) || self.p_audit < self.p_audit_min {
            return Err(Error::InvalidConfig(format!(
                "pa0 must lie in [pamin, 1] = [{}, 1], got {}",
                self.p_audit_min, self.p_audit
            )));
        }
        if !unit(self.tolerance) {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in [0, 1], got {}",
                self.tolerance
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_m must be non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub round: u64,
    /// Indices of workers that returned the wrong value.
    pub cheaters: Vec<usize>,
    pub audited: bool,
    /// Workers whose value was accepted; empty when audited.
    pub majority: Vec<usize>,
    pub tie_broken: bool,
    pub accepted_correct: bool,
    /// Net payoffs (honest workers already charged `wct`).
    pub payoffs: Vec<f64>,
    /// Rewards actually paid by the master.
    pub rewards: Vec<f64>,
    pub reputations_after: Vec<f64>,
    pub p_audit_after: f64,
    pub p_cheat_after: Vec<f64>,
}

impl RoundOutcome {
    pub fn cheated(&self, worker: usize) -> bool {
        self.cheaters.binary_search(&worker).is_ok()
    }

    pub fn workers(&self) -> usize {
        self.p_cheat_after.len()
    }
}

/// Net payoff of every worker for one round.
///
/// Audited: caught cheaters get `-wpc`, honest workers `wby`. Not audited:
/// members of the accepted majority get `wby`, everyone else 0. Honest
/// workers then pay their computing cost `wct`.
pub fn compute_payoffs(
    cheated: &[bool],
    audited: bool,
    majority: &[bool],
    params: &[PayoffParams],
) -> Vec<f64> {
    assert_eq!(
        cheated.len(),
        params.len(),
        "cheater mask / roster mismatch"
    );
    assert_eq!(
        majority.len(),
        params.len(),
        "majority mask / roster mismatch"
    );
    assert!(
        !audited || majority.iter().all(|m| !m),
        "majority must be empty in an audited round"
    );
    cheated
        .iter()
        .zip(majority)
        .zip(params)
        .map(|((&cheat, &in_majority), p)| {
            let gross = if audited {
                if cheat {
                    -p.wpc
                } else {
                    p.wby
                }
            } else if in_majority {
                p.wby
            } else {
                0.0
            };
            if cheat {
                gross
            } else {
                gross - p.wct
            }
        })
        .collect()
}

/// Reward paid by the master to each worker (the positive part of the
/// gross payoff, before any computing cost).
pub fn rewards_paid(
    cheated: &[bool],
    audited: bool,
    majority: &[bool],
    params: &[PayoffParams],
) -> Vec<f64> {
    cheated
        .iter()
        .zip(majority)
        .zip(params)
        .map(|((&cheat, &in_majority), p)| {
            let rewarded = if audited { !cheat } else { in_majority };
            if rewarded {
                p.wby
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults(n: usize) -> Vec<PayoffParams> {
        vec![PayoffParams::default(); n]
    }

    #[test]
    fn caught_cheater_without_punishment_gets_zero() {
        let pay = compute_payoffs(&[true], true, &[false], &defaults(1));
        assert_eq!(pay, vec![0.0]);
    }

    #[test]
    fn caught_cheater_is_punished() {
        let params = [PayoffParams {
            wpc: 1.0,
            ..PayoffParams::default()
        }];
        assert_eq!(
            compute_payoffs(&[true], true, &[false], &params),
            vec![-1.0]
        );
    }

    #[test]
    fn audited_honest_worker_nets_reward_minus_cost() {
        let pay = compute_payoffs(&[false], true, &[false], &defaults(1));
        assert!((pay[0] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn honest_minority_pays_cost_only() {
        // worker 0 honest but outvoted by cheater 1
        let pay = compute_payoffs(&[false, true], false, &[false, true], &defaults(2));
        assert!((pay[0] + 0.1).abs() < 1e-12);
        assert_eq!(pay[1], 1.0);
    }

    #[test]
    fn losing_cheater_gets_nothing() {
        let pay = compute_payoffs(&[false, true], false, &[true, false], &defaults(2));
        assert!((pay[0] - 0.9).abs() < 1e-12);
        assert_eq!(pay[1], 0.0);
    }

    #[test]
    #[should_panic(expected = "majority must be empty")]
    fn audited_round_with_majority_is_rejected() {
        compute_payoffs(&[false], true, &[true], &defaults(1));
    }

    #[test]
    fn rewards_paid_ignores_costs() {
        let paid = rewards_paid(&[false, true], true, &[false, false], &defaults(2));
        assert_eq!(paid, vec![1.0, 0.0]);
    }

    #[test]
    fn coverage_boundary() {
        let w = WorkerState::new(WorkerType::Rational, 0.5, 0.1, 0.0);
        assert!(is_covered(&w, &PayoffParams::default()));
        let uncovered = PayoffParams {
            wby: 0.1,
            ..PayoffParams::default()
        };
        assert!(!is_covered(&w, &uncovered));
        // wby == a + wct exactly (binary-exact values)
        let w = WorkerState::new(WorkerType::Rational, 0.5, 0.25, 0.0);
        let edge = PayoffParams {
            wpc: 0.0,
            wct: 0.5,
            wby: 0.75,
        };
        assert!(is_covered(&w, &edge));
    }

    #[test]
    fn fixed_types_pin_cheat_probability() {
        let mut w = WorkerState::new(WorkerType::Malicious, 0.3, 0.1, 0.0);
        assert_eq!(w.p_cheat, 1.0);
        w.change_type(WorkerType::Altruistic);
        assert_eq!(w.effective_p_cheat(), 0.0);
        w.change_type(WorkerType::Rational);
        assert_eq!(w.effective_p_cheat(), 0.0);
    }

    #[test]
    fn worker_type_parses_names() {
        assert_eq!(
            "Malicious".parse::<WorkerType>().unwrap(),
            WorkerType::Malicious
        );
        assert!("byzantine".parse::<WorkerType>().is_err());
    }
}
