//! Ready-made verification suites over the reputation checkers and the
//! exact oracle. Each line passes when the result agrees with what the
//! mechanism's analysis predicts.

use std::fmt;

use crate::engine::{self, MarkovState, Mechanism, SimulationState};
use crate::error::{Error, Result};
use crate::model::{MasterState, PayoffParams, WorkerState, WorkerType};
use crate::oracle::{
    compare_engine_distribution, compare_sampler_distribution, ClosureBounds, ExactState, Oracle,
    OutcomeKey,
};
use crate::reputation::{
    check_property1, find_property2_counterexample, RepState, ReputationScheme,
};

pub const SUITES: [&str; 5] = [
    "property1",
    "property2",
    "lemma1",
    "transitions",
    "closed-sets",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{}: {verdict} ({})", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.suite)?;
        for l in &self.lines {
            writeln!(f, "  {l}")?;
        }
        Ok(())
    }
}

/// Bounds shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyBounds {
    /// Property 1 witness horizon.
    pub horizon: u64,
    /// Roster size split into honest and cheating sets for property 1.
    pub workers: usize,
    pub max_aud: u64,
    pub max_set_size: usize,
    /// Lemma 1 reachability horizon and state budget.
    pub reach_horizon: usize,
    pub budget: usize,
    pub samples: usize,
    pub significance: f64,
}

impl Default for VerifyBounds {
    fn default() -> Self {
        VerifyBounds {
            horizon: 500,
            workers: 9,
            max_aud: 10,
            max_set_size: 3,
            reach_horizon: 200,
            budget: 2_000_000,
            samples: 100_000,
            significance: 0.01,
        }
    }
}

fn schemes() -> [ReputationScheme; 3] {
    [
        ReputationScheme::Type1,
        ReputationScheme::type2(),
        ReputationScheme::type3(),
    ]
}

pub fn run_suite(name: &str, bounds: &VerifyBounds) -> Result<SuiteReport> {
    let lines = match name {
        "property1" => property1(bounds)?,
        "property2" => property2(bounds)?,
        "lemma1" => lemma1(bounds)?,
        "transitions" => transitions(bounds)?,
        "closed-sets" => closed_sets()?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite `{other}` (expected one of {})",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        suite: name.to_string(),
        lines,
    })
}

fn property1(b: &VerifyBounds) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for scheme in schemes() {
        let fresh = RepState::fresh(&scheme);
        let mut worst = 0;
        let mut failed = Vec::new();
        for x in 1..b.workers {
            let r = check_property1(
                &scheme,
                &vec![fresh; x],
                &vec![fresh; b.workers - x],
                0,
                b.horizon,
            )?;
            worst = worst.max(r.last_violation);
            if !r.holds {
                failed.push(format!("{x}/{}", b.workers - x));
            }
        }
        lines.push(CheckLine {
            name: scheme.to_string(),
            passed: failed.is_empty(),
            detail: if failed.is_empty() {
                format!(
                    "honest side dominates after round {} at worst, horizon {}",
                    worst, b.horizon
                )
            } else {
                format!(
                    "no dominance within {} rounds for splits {}",
                    b.horizon,
                    failed.join(", ")
                )
            },
        });
    }
    Ok(lines)
}

fn property2(b: &VerifyBounds) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for scheme in schemes() {
        let found = find_property2_counterexample(&scheme, b.max_aud, b.max_set_size)?;
        // the exponential metric preserves order; the other two do not
        let expect_counterexample = !matches!(scheme, ReputationScheme::Type2 { .. });
        let detail = match &found {
            None => format!(
                "no counterexample with aud <= {} and sets of <= {}",
                b.max_aud, b.max_set_size
            ),
            Some(ce) => format!(
                "counterexample at aud={}: X={:?} Y={:?}, before {:.6} > {:.6}, after {:.6} <= {:.6}",
                ce.audits,
                ce.heavier
                    .iter()
                    .map(|s| (s.validations, s.error_rate))
                    .collect::<Vec<_>>(),
                ce.lighter
                    .iter()
                    .map(|s| (s.validations, s.error_rate))
                    .collect::<Vec<_>>(),
                ce.before.0,
                ce.before.1,
                ce.after.0,
                ce.after.1
            ),
        };
        lines.push(CheckLine {
            name: scheme.to_string(),
            passed: found.is_some() == expect_counterexample,
            detail,
        });
    }
    Ok(lines)
}

/// Three rational workers, no auditing at all, covered.
pub fn lemma1_setup() -> (Mechanism, MarkovState) {
    let mech = Mechanism {
        scheme: ReputationScheme::type2(),
        alpha_w: 0.1,
        payoffs: vec![PayoffParams::default(); 3],
    };
    let state = MarkovState {
        master: MasterState {
            p_audit: 0.0,
            p_audit_min: 0.0,
            ..MasterState::default()
        },
        workers: vec![WorkerState::new(WorkerType::Rational, 0.5, 0.1, 0.0); 3],
    };
    (mech, state)
}

/// The untruthful set: nobody audits and every worker always cheats.
pub fn all_cheat(state: &MarkovState) -> bool {
    state.master.p_audit == 0.0 && state.workers.iter().all(|w| w.effective_p_cheat() == 1.0)
}

/// In-set seed states for the untruthful set: every validation history
/// with up to `max_aud` past audits.
pub fn all_cheat_seeds(template: &MarkovState, max_aud: u64) -> Vec<ExactState> {
    let n = template.workers.len();
    let mut seeds = Vec::new();
    for aud in 0..=max_aud {
        let combos = (aud + 1).pow(n as u32);
        for mut code in 0..combos {
            let mut s = template.clone();
            s.master.audits = aud;
            for w in &mut s.workers {
                w.p_cheat = 1.0;
                w.validations = code % (aud + 1);
                code /= aud + 1;
            }
            seeds.push(ExactState::new(s));
        }
    }
    seeds
}

fn lemma1(b: &VerifyBounds) -> Result<Vec<CheckLine>> {
    let (mech, start) = lemma1_setup();
    let oracle = Oracle::new(mech).symmetric();
    let closed = oracle.check_closed(
        &all_cheat_seeds(&start, 2),
        all_cheat,
        ClosureBounds::default(),
    )?;
    let reach = match oracle.reach_probability(
        &ExactState::new(start),
        |s, _| all_cheat(s),
        b.reach_horizon,
        b.budget,
    ) {
        Ok(p) => (p, true),
        Err(Error::BudgetExceeded { lower_bound, .. }) => (lower_bound, false),
        Err(e) => return Err(e),
    };
    Ok(vec![
        CheckLine {
            name: "closed".into(),
            passed: closed.closed && closed.exhaustive,
            detail: format!("{} in-set states explored", closed.explored),
        },
        CheckLine {
            name: "reachable".into(),
            passed: reach.0 > 0.0,
            detail: if reach.1 {
                format!(
                    "probability {:.12} within {} rounds",
                    reach.0, b.reach_horizon
                )
            } else {
                format!("probability >= {:.12} (state budget hit)", reach.0)
            },
        },
    ])
}

/// Mixed three-worker state with one exact-tie outcome.
pub fn fit_state() -> (Mechanism, MarkovState) {
    let mech = Mechanism {
        scheme: ReputationScheme::type2(),
        alpha_w: 0.1,
        payoffs: vec![PayoffParams::default(); 3],
    };
    let mut workers = vec![
        WorkerState::new(WorkerType::Rational, 0.3, 0.1, 0.0),
        WorkerState::new(WorkerType::Rational, 0.6, 0.1, 0.0),
        WorkerState::new(WorkerType::Malicious, 1.0, 0.1, 0.0),
    ];
    // reputations 1, 0.5, 0.5: worker 0 alone ties the other two
    workers[0].validations = 2;
    workers[1].validations = 1;
    workers[2].validations = 1;
    let state = MarkovState {
        master: MasterState {
            p_audit: 0.4,
            audits: 2,
            ..MasterState::default()
        },
        workers,
    };
    (mech, state)
}

/// An engine whose audit probability is silently halved.
pub fn halved_audit_sampler<'a>(
    mech: &'a Mechanism,
    state: &'a MarkovState,
) -> impl Fn(u64) -> OutcomeKey + Sync + 'a {
    move |seed| {
        let mut s = state.clone();
        s.master.p_audit /= 2.0;
        let mut sim = SimulationState::from_chain(s, seed);
        OutcomeKey::of(&engine::run_round(mech, &mut sim))
    }
}

fn transitions(b: &VerifyBounds) -> Result<Vec<CheckLine>> {
    let (mech, state) = fit_state();
    let fit = compare_engine_distribution(&mech, &state, b.samples, b.significance)?;
    let mutant = compare_sampler_distribution(
        &mech,
        &state,
        b.samples,
        b.significance,
        halved_audit_sampler(&mech, &state),
    )?;
    Ok(vec![
        CheckLine {
            name: "engine".into(),
            passed: fit.passed,
            detail: format!(
                "chi2={:.3}, dof={}, p={:.4}, {} samples",
                fit.statistic, fit.degrees_of_freedom, fit.p_value, fit.samples
            ),
        },
        CheckLine {
            name: "mutant rejected".into(),
            passed: !mutant.passed,
            detail: format!("halved audit probability: p={:.3e}", mutant.p_value),
        },
    ])
}

fn truthful(s: &MarkovState) -> bool {
    s.workers.iter().all(|w| w.effective_p_cheat() == 0.0)
}

fn closed_sets() -> Result<Vec<CheckLine>> {
    let (mech, start) = lemma1_setup();
    let bounds = ClosureBounds {
        max_depth: 40,
        max_states: 200_000,
    };
    let untruthful =
        Oracle::new(mech).check_closed(&all_cheat_seeds(&start, 2), all_cheat, bounds)?;

    let truthful_seed = |wby: f64| {
        let mech = Mechanism {
            scheme: ReputationScheme::type2(),
            alpha_w: 0.1,
            payoffs: vec![
                PayoffParams {
                    wby,
                    ..PayoffParams::default()
                };
                3
            ],
        };
        let s = MarkovState {
            master: MasterState::default(),
            workers: vec![WorkerState::new(WorkerType::Rational, 0.0, 0.1, 0.0); 3],
        };
        (mech, ExactState::new(s))
    };
    let (mech, seed) = truthful_seed(1.0);
    let covered = Oracle::new(mech).check_closed(&[seed], truthful, bounds)?;
    let (mech, seed) = truthful_seed(0.1);
    let uncovered = Oracle::new(mech).check_closed(&[seed], truthful, bounds)?;

    Ok(vec![
        CheckLine {
            name: "no audits, all cheating".into(),
            passed: untruthful.closed,
            detail: format!("closed over {} states", untruthful.explored),
        },
        CheckLine {
            name: "covered, all honest".into(),
            passed: covered.closed,
            detail: format!(
                "closed over {} states to depth {}",
                covered.explored, bounds.max_depth
            ),
        },
        CheckLine {
            name: "uncovered, all honest".into(),
            passed: !uncovered.closed,
            detail: match &uncovered.escape {
                Some((_, t)) => format!(
                    "leaves the set with probability {:.4} (audited: {})",
                    t.probability, t.label.audited
                ),
                None => "stayed closed".into(),
            },
        },
    ])
}
