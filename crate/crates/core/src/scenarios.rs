//! Named experiment presets and the multi-seed runner.
//!
//! Naming scheme (`<scheme>` is one of type1, type2, type3, none):
//!
//! - `rational9-<scheme>-pc{0.5,1}`: nine covered rationals.
//! - `mal{4,5,8}-rat{5,4,1}-<scheme>`: malicious first, then rationals
//!   starting at `pc0 = 1`.
//! - `mal{4,5,8}-alt{5,4,1}-<scheme>`: malicious and altruistic only.
//! - `{cov1of9,cov5of9,mal4-rat5-cov1}-<scheme>-tau{0.1,0.5}[-wpc1]`:
//!   partial coverage. Covered rationals get `wby = 1`, every other worker
//!   `wby = 0.1`. Rationals start at `pc0 = 1` under type2 and `0.5`
//!   otherwise.
//! - `dynamic-<scheme>`: nine rationals from `pc0 = 1`, 2000 rounds;
//!   workers 0-4 turn malicious at round 500.

use rayon::prelude::*;

use crate::config::{RoleChange, SystemConfig, WorkerSpec};
use crate::engine::run_simulation;
use crate::error::{Error, Result};
use crate::metrics::{Convergence, ScenarioSummary};
use crate::model::{RoundOutcome, WorkerType};
use crate::reputation::ReputationScheme;

pub const SCHEMES: [&str; 4] = ["type1", "type2", "type3", "none"];

const UNCOVERED_WBY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub config: SystemConfig,
}

fn base(scheme: &str) -> SystemConfig {
    SystemConfig {
        scheme: ReputationScheme::from_name(scheme).expect("known scheme"),
        ..SystemConfig::default()
    }
}

fn repeat(spec: WorkerSpec, k: usize) -> impl Iterator<Item = WorkerSpec> {
    std::iter::repeat_n(spec, k)
}

fn rational_only(scheme: &str, pc0: f64) -> Scenario {
    Scenario {
        name: format!("rational9-{scheme}-pc{pc0}"),
        description: format!("9 covered rational workers, initial p_c {pc0}, {scheme} reputation"),
        config: SystemConfig {
            workers: vec![WorkerSpec::rational(pc0); 9],
            ..base(scheme)
        },
    }
}

fn mixed(scheme: &str, malicious: usize, other: WorkerType) -> Scenario {
    let rest = 9 - malicious;
    let (tag, spec) = match other {
        WorkerType::Rational => ("rat", WorkerSpec::rational(1.0)),
        _ => ("alt", WorkerSpec::of_kind(WorkerType::Altruistic)),
    };
    Scenario {
        name: format!("mal{malicious}-{tag}{rest}-{scheme}"),
        description: format!(
            "{malicious} malicious and {rest} {other} workers, {scheme} reputation"
        ),
        config: SystemConfig {
            workers: repeat(WorkerSpec::of_kind(WorkerType::Malicious), malicious)
                .chain(repeat(spec, rest))
                .collect(),
            ..base(scheme)
        },
    }
}

fn coverage(roster: &str, scheme: &str, tau: f64, wpc: f64) -> Scenario {
    let pc0 = if scheme == "type2" { 1.0 } else { 0.5 };
    let covered = WorkerSpec::rational(pc0);
    let uncovered = WorkerSpec::rational(pc0).with_wby(UNCOVERED_WBY);
    let (workers, what): (Vec<_>, _) = match roster {
        "cov1of9" => (
            repeat(covered, 1).chain(repeat(uncovered, 8)).collect(),
            "1 of 9 rational workers covered",
        ),
        "cov5of9" => (
            repeat(covered, 5).chain(repeat(uncovered, 4)).collect(),
            "5 of 9 rational workers covered",
        ),
        _ => (
            repeat(
                WorkerSpec::of_kind(WorkerType::Malicious).with_wby(UNCOVERED_WBY),
                4,
            )
            .chain(repeat(covered, 1))
            .chain(repeat(uncovered, 4))
            .collect(),
            "4 malicious and 5 rational workers, 1 covered",
        ),
    };
    let mut config = SystemConfig {
        workers,
        ..base(scheme)
    };
    config.master.tolerance = tau;
    config.payoffs.wpc = wpc;
    let suffix = if wpc > 0.0 {
        format!("-wpc{wpc}")
    } else {
        String::new()
    };
    Scenario {
        name: format!("{roster}-{scheme}-tau{tau}{suffix}"),
        description: format!("{what}, tau {tau}, wpc {wpc}, {scheme} reputation"),
        config,
    }
}

fn dynamic(scheme: &str) -> Scenario {
    Scenario {
        name: format!("dynamic-{scheme}"),
        description: format!(
            "9 rational workers; workers 0-4 turn malicious at round 500, {scheme} reputation"
        ),
        config: SystemConfig {
            workers: vec![WorkerSpec::rational(1.0); 9],
            horizon: 2000,
            role_changes: (0..5)
                .map(|worker| RoleChange {
                    round: 500,
                    worker,
                    kind: WorkerType::Malicious,
                })
                .collect(),
            ..base(scheme)
        },
    }
}

/// Every built-in scenario, in listing order.
pub fn catalog() -> Vec<Scenario> {
    let mut out = Vec::new();
    for scheme in SCHEMES {
        for pc0 in [0.5, 1.0] {
            out.push(rational_only(scheme, pc0));
        }
    }
    for other in [WorkerType::Rational, WorkerType::Altruistic] {
        for malicious in [4, 5, 8] {
            for scheme in SCHEMES {
                out.push(mixed(scheme, malicious, other));
            }
        }
    }
    for roster in ["cov1of9", "cov5of9", "mal4-rat5-cov1"] {
        for scheme in SCHEMES {
            for tau in [0.1, 0.5] {
                for wpc in [0.0, 1.0] {
                    out.push(coverage(roster, scheme, tau, wpc));
                }
            }
        }
    }
    for scheme in SCHEMES {
        out.push(dynamic(scheme));
    }
    out
}

pub fn names() -> Vec<String> {
    catalog().into_iter().map(|s| s.name).collect()
}

/// Looks a scenario up by name; `τ` is accepted for `tau`.
pub fn scenario(name: &str) -> Result<Scenario> {
    let wanted = name.trim().replace('τ', "tau").to_ascii_lowercase();
    catalog()
        .into_iter()
        .find(|s| s.name == wanted)
        .ok_or_else(|| Error::UnknownScenario {
            name: name.to_string(),
            available: "rational9-<scheme>-pc{0.5,1}, mal{4,5,8}-rat{5,4,1}-<scheme>, \
                        mal{4,5,8}-alt{5,4,1}-<scheme>, \
                        {cov1of9,cov5of9,mal4-rat5-cov1}-<scheme>-tau{0.1,0.5}[-wpc1], \
                        dynamic-<scheme>; <scheme> = type1|type2|type3|none \
                        (run `list-scenarios` for the full list)"
                .into(),
        })
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: SystemConfig,
    /// `(seed, trace)` in the configured seed order.
    pub runs: Vec<(u64, Vec<RoundOutcome>)>,
    pub summary: ScenarioSummary,
}

/// Runs every configured seed (in parallel) and summarises.
pub fn run_scenario(config: &SystemConfig) -> Result<ScenarioRun> {
    run_scenario_with(config, &Convergence::default())
}

pub fn run_scenario_with(config: &SystemConfig, conv: &Convergence) -> Result<ScenarioRun> {
    config.validate()?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| run_simulation(config, seed).map(|t| (seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let summary = ScenarioSummary::of(&runs, config.master.p_audit_min, conv);
    Ok(ScenarioRun {
        config: config.clone(),
        runs,
        summary,
    })
}
