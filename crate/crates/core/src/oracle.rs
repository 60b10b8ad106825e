//! Exact enumeration of the mechanism's Markov chain on small rosters.
//!
//! States are snapped to a 1e-12 grid so that equal states reached along
//! different paths merge. Successors are produced by [`engine::advance`],
//! the same step function the simulator uses; only the randomness differs
//! (explicit weighted branches instead of RNG draws, ties as two half
//! branches).

use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::engine::{self, compare_sides, MarkovState, Mechanism, SimulationState, Verdict};
use crate::error::{Error, Result};
use crate::model::{RoundOutcome, WorkerType};

pub const DEFAULT_MAX_WORKERS: usize = 10;

const GRID: f64 = 1e12;

fn snap(x: f64) -> i64 {
    (x * GRID).round() as i64
}

fn on_grid(x: f64) -> f64 {
    snap(x) as f64 / GRID
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct StateKey {
    p_audit: i64,
    audits: u64,
    workers: Vec<(WorkerType, i64, u64, i64)>,
}

/// A chain state rounded to the canonical grid.
#[derive(Debug, Clone)]
pub struct ExactState {
    state: MarkovState,
    key: StateKey,
}

impl ExactState {
    pub fn new(mut state: MarkovState) -> Self {
        state.master.p_audit = on_grid(state.master.p_audit);
        for w in &mut state.workers {
            w.p_cheat = on_grid(w.p_cheat);
            w.error_rate = on_grid(w.error_rate);
        }
        let key = StateKey {
            p_audit: snap(state.master.p_audit),
            audits: state.master.audits,
            workers: state
                .workers
                .iter()
                .map(|w| (w.kind, snap(w.p_cheat), w.validations, snap(w.error_rate)))
                .collect(),
        };
        ExactState { state, key }
    }

    pub fn state(&self) -> &MarkovState {
        &self.state
    }

    pub fn into_state(self) -> MarkovState {
        self.state
    }
}

impl PartialEq for ExactState {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for ExactState {}

impl Hash for ExactState {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.key.hash(h)
    }
}

/// Observable label of a round: who cheated, whether the master audited,
/// and for a tie which side the coin favoured (`Some(true)` = honest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeKey {
    pub cheaters: u64,
    pub audited: bool,
    pub tie: Option<bool>,
}

impl OutcomeKey {
    pub fn of(outcome: &RoundOutcome) -> Self {
        OutcomeKey {
            cheaters: outcome.cheaters.iter().fold(0, |m, &i| m | 1 << i),
            audited: outcome.audited,
            tie: outcome.tie_broken.then_some(outcome.accepted_correct),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub probability: f64,
    pub label: OutcomeKey,
    pub outcome: RoundOutcome,
    pub next: ExactState,
}

#[derive(Debug, Clone, Default)]
pub struct TransitionDistribution {
    pub transitions: Vec<Transition>,
}

impl TransitionDistribution {
    pub fn total(&self) -> f64 {
        self.transitions.iter().map(|t| t.probability).sum()
    }

    /// Probability per successor state, equal states merged.
    pub fn merged(&self) -> HashMap<ExactState, f64> {
        let mut out: HashMap<ExactState, f64> = HashMap::new();
        for t in &self.transitions {
            *out.entry(t.next.clone()).or_default() += t.probability;
        }
        out
    }

    /// Probability per outcome label.
    pub fn by_label(&self) -> HashMap<OutcomeKey, f64> {
        let mut out: HashMap<OutcomeKey, f64> = HashMap::new();
        for t in &self.transitions {
            *out.entry(t.label).or_default() += t.probability;
        }
        out
    }
}

/// Limits for closure checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureBounds {
    /// Rounds of successors to follow from the seed states.
    pub max_depth: usize,
    /// Distinct in-set states allowed before giving up.
    pub max_states: usize,
}

impl Default for ClosureBounds {
    fn default() -> Self {
        ClosureBounds {
            max_depth: 50,
            max_states: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub closed: bool,
    pub explored: usize,
    /// True when no new in-set state remained to expand, i.e. the verdict
    /// covers every in-set state reachable from the seeds.
    pub exhaustive: bool,
    /// A successor that left the set, with the state it came from.
    pub escape: Option<(ExactState, Transition)>,
}

#[derive(Debug, Clone)]
pub struct Oracle {
    pub mech: Mechanism,
    pub max_workers: usize,
    /// Merge states that differ only by a permutation of interchangeable
    /// workers (same type, aspiration and payoffs). Only sound for
    /// predicates that do not single out individual workers.
    pub merge_symmetric: bool,
}

impl Oracle {
    pub fn new(mech: Mechanism) -> Self {
        Oracle {
            mech,
            max_workers: DEFAULT_MAX_WORKERS,
            merge_symmetric: false,
        }
    }

    pub fn symmetric(mut self) -> Self {
        self.merge_symmetric = true;
        self
    }

    /// Canonical form of a state, sorting interchangeable workers when
    /// symmetry merging is on.
    pub fn canonical(&self, mut state: MarkovState) -> ExactState {
        if self.merge_symmetric {
            let classes: Vec<_> = state
                .workers
                .iter()
                .zip(&self.mech.payoffs)
                .map(|(w, p)| {
                    let bits = [w.aspiration, p.wby, p.wct, p.wpc].map(f64::to_bits);
                    (w.kind, bits)
                })
                .collect();
            let n = classes.len();
            let mut done = vec![false; n];
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let members: Vec<usize> = (i..n).filter(|&j| classes[j] == classes[i]).collect();
                let mut group: Vec<_> = members.iter().map(|&j| state.workers[j].clone()).collect();
                group.sort_by_key(|w| (snap(w.p_cheat), w.validations, snap(w.error_rate)));
                for (&j, w) in members.iter().zip(group) {
                    state.workers[j] = w;
                    done[j] = true;
                }
            }
        }
        ExactState::new(state)
    }

    /// Every one-round successor of `state` with its exact probability.
    /// Zero-probability branches are dropped.
    pub fn enumerate_transitions(&self, state: &ExactState) -> Result<TransitionDistribution> {
        let s = &state.state;
        let n = s.workers.len();
        if n > self.max_workers || n > 63 {
            return Err(Error::RosterTooLarge {
                n,
                bound: self.max_workers.min(63),
            });
        }
        if n != self.mech.payoffs.len() {
            return Err(Error::InvalidArgument(format!(
                "state has {n} workers but the mechanism has {}",
                self.mech.payoffs.len()
            )));
        }
        let p_audit = s.master.p_audit;
        let scheme = &self.mech.scheme;
        let mut transitions = Vec::new();
        let mut cheated = vec![false; n];

        for mask in 0u64..(1 << n) {
            let mut p_f = 1.0;
            for (i, w) in s.workers.iter().enumerate() {
                cheated[i] = mask >> i & 1 == 1;
                let p = w.effective_p_cheat();
                p_f *= if cheated[i] { p } else { 1.0 - p };
            }
            if p_f == 0.0 {
                continue;
            }
            let mut push = |prob: f64, verdict: Verdict| {
                if prob > 0.0 {
                    let (next, outcome) = engine::advance(&self.mech, s, 0, &cheated, verdict);
                    transitions.push(Transition {
                        probability: prob,
                        label: OutcomeKey::of(&outcome),
                        outcome,
                        next: ExactState::new(next),
                    });
                }
            };
            push(p_f * p_audit, Verdict::Audited);
            let p_free = p_f * (1.0 - p_audit);
            let (rho_f, rho_h) = s.side_weights(scheme, &cheated);
            match compare_sides(rho_h, rho_f) {
                std::cmp::Ordering::Equal => {
                    for honest_wins in [true, false] {
                        push(
                            p_free / 2.0,
                            Verdict::Majority {
                                honest_wins,
                                tie: true,
                            },
                        );
                    }
                }
                ord => push(
                    p_free,
                    Verdict::Majority {
                        honest_wins: ord.is_gt(),
                        tie: false,
                    },
                ),
            }
        }
        Ok(TransitionDistribution { transitions })
    }

    /// Exact probability that `predicate` holds at or before `horizon`
    /// rounds. The predicate sees the start state with no outcome, then
    /// every successor with the outcome of the round that produced it;
    /// paths stop at their first hit.
    ///
    /// Every reachable state is expanded once into a transition graph and
    /// probability mass is then pushed through it round by round. `budget`
    /// caps the number of distinct states; on overflow the error carries
    /// the exact hit probability for the rounds that were fully explored,
    /// a lower bound on the answer.
    pub fn reach_probability<P>(
        &self,
        start: &ExactState,
        predicate: P,
        horizon: usize,
        budget: usize,
    ) -> Result<f64>
    where
        P: Fn(&MarkovState, Option<&RoundOutcome>) -> bool,
    {
        let start = self.canonical(start.state.clone());
        if predicate(&start.state, None) {
            return Ok(1.0);
        }
        // edge target `HIT` marks a transition on which the predicate holds
        const HIT: u32 = u32::MAX;
        let mut index: HashMap<ExactState, u32> = HashMap::new();
        let mut states = vec![start.clone()];
        let mut depth = vec![0usize];
        let mut edges: Vec<Vec<(u32, f64)>> = Vec::new();
        index.insert(start, 0);

        let mut explored = horizon;
        while edges.len() < states.len() {
            let i = edges.len();
            if depth[i] >= horizon {
                break;
            }
            if states.len() > budget {
                explored = depth[i];
                break;
            }
            let mut out = Vec::new();
            for t in self.enumerate_transitions(&states[i])?.transitions {
                if predicate(&t.next.state, Some(&t.outcome)) {
                    out.push((HIT, t.probability));
                    continue;
                }
                let next = self.canonical(t.next.state);
                let j = *index.entry(next.clone()).or_insert_with(|| {
                    states.push(next);
                    depth.push(depth[i] + 1);
                    (states.len() - 1) as u32
                });
                out.push((j, t.probability));
            }
            edges.push(out);
        }

        let mut mass = vec![0.0; states.len()];
        mass[0] = 1.0;
        let mut hit = 0.0;
        for _ in 0..explored {
            let mut next = vec![0.0; states.len()];
            for (i, &m) in mass.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                for &(j, p) in &edges[i] {
                    if j == HIT {
                        hit += m * p;
                    } else {
                        next[j as usize] += m * p;
                    }
                }
            }
            mass = next;
        }
        let hit = hit.min(1.0);
        if explored < horizon {
            return Err(Error::BudgetExceeded {
                budget,
                rounds: explored,
                lower_bound: hit,
            });
        }
        Ok(hit)
    }

    /// Checks that no successor of an in-set state leaves the set, exploring
    /// every in-set state reachable from `seeds` within the bounds.
    pub fn check_closed<P>(
        &self,
        seeds: &[ExactState],
        in_set: P,
        bounds: ClosureBounds,
    ) -> Result<ClosureReport>
    where
        P: Fn(&MarkovState) -> bool,
    {
        if let Some(s) = seeds.iter().find(|s| !in_set(&s.state)) {
            return Err(Error::InvalidArgument(format!(
                "seed state is not in the set: {:?}",
                s.state
            )));
        }
        let mut visited: HashSet<ExactState> = seeds.iter().cloned().collect();
        let mut frontier: Vec<ExactState> = visited.iter().cloned().collect();

        for depth in 0..bounds.max_depth {
            if frontier.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for state in &frontier {
                for t in self.enumerate_transitions(state)?.transitions {
                    if !in_set(&t.next.state) {
                        return Ok(ClosureReport {
                            closed: false,
                            explored: visited.len(),
                            exhaustive: false,
                            escape: Some((state.clone(), t)),
                        });
                    }
                    if visited.insert(t.next.clone()) {
                        if visited.len() > bounds.max_states {
                            return Err(Error::StateBoundExceeded {
                                bound: bounds.max_states,
                                depth,
                            });
                        }
                        next.push(t.next);
                    }
                }
            }
            frontier = next;
        }
        Ok(ClosureReport {
            closed: true,
            explored: visited.len(),
            exhaustive: frontier.is_empty(),
            escape: None,
        })
    }
}

/// Goodness-of-fit of sampled one-round outcomes against the exact
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub samples: usize,
    /// Bins after pooling those with expected count below 5.
    pub bins: usize,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Samples whose outcome has probability zero under the oracle.
    pub impossible: usize,
    pub passed: bool,
}

/// Pearson chi-square test of observed outcome counts against `expected`
/// probabilities. Bins with expected count below 5 are pooled; any
/// observation outside the support fails outright.
pub fn chi_square_fit(
    expected: &HashMap<OutcomeKey, f64>,
    observed: &HashMap<OutcomeKey, usize>,
    significance: f64,
) -> FitReport {
    let samples: usize = observed.values().sum();
    let impossible: usize = observed
        .iter()
        .filter(|(k, _)| expected.get(k).is_none_or(|&p| p <= 0.0))
        .map(|(_, &c)| c)
        .sum();

    let mut keys: Vec<&OutcomeKey> = expected.keys().collect();
    keys.sort();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for k in keys {
        let e = expected[k] * samples as f64;
        let o = observed.get(k).copied().unwrap_or(0) as f64;
        if e < 5.0 {
            pooled.0 += e;
            pooled.1 += o;
        } else {
            cells.push((e, o));
        }
    }
    if pooled.0 > 0.0 {
        cells.push(pooled);
    }
    let statistic: f64 = cells
        .iter()
        .filter(|(e, _)| *e > 0.0)
        .map(|(e, o)| (o - e).powi(2) / e)
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if impossible > 0 {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - chi.cdf(statistic)
    };
    FitReport {
        samples,
        bins: cells.len(),
        statistic,
        degrees_of_freedom: dof,
        p_value,
        impossible,
        passed: p_value >= significance,
    }
}

/// Samples one round from `state` `samples` times with `sampler` (given a
/// fresh seed each time) and tests the outcome labels against the exact
/// distribution.
pub fn compare_sampler_distribution<F>(
    mech: &Mechanism,
    state: &MarkovState,
    samples: usize,
    significance: f64,
    sampler: F,
) -> Result<FitReport>
where
    F: Fn(u64) -> OutcomeKey + Sync,
{
    let oracle = Oracle::new(mech.clone());
    let exact = oracle.enumerate_transitions(&ExactState::new(state.clone()))?;
    let observed = (0..samples as u64)
        .into_par_iter()
        .fold(HashMap::new, |mut acc: HashMap<OutcomeKey, usize>, k| {
            *acc.entry(sampler(k + 1)).or_default() += 1;
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_default() += c;
            }
            a
        });
    Ok(chi_square_fit(&exact.by_label(), &observed, significance))
}

/// [`compare_sampler_distribution`] with the real engine as the sampler.
pub fn compare_engine_distribution(
    mech: &Mechanism,
    state: &MarkovState,
    samples: usize,
    significance: f64,
) -> Result<FitReport> {
    let start = ExactState::new(state.clone()).into_state();
    compare_sampler_distribution(mech, &start, samples, significance, |seed| {
        let mut sim = SimulationState::from_chain(start.clone(), seed);
        OutcomeKey::of(&engine::run_round(mech, &mut sim))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MasterState, PayoffParams, WorkerState};
    use crate::reputation::ReputationScheme;
    use proptest::prelude::*;

    fn mech(n: usize, scheme: ReputationScheme) -> Mechanism {
        Mechanism {
            scheme,
            alpha_w: 0.1,
            payoffs: vec![PayoffParams::default(); n],
        }
    }

    fn state(p_audit: f64, workers: Vec<WorkerState>) -> ExactState {
        ExactState::new(MarkovState {
            master: MasterState {
                p_audit,
                ..MasterState::default()
            },
            workers,
        })
    }

    fn rational(p: f64) -> WorkerState {
        WorkerState::new(WorkerType::Rational, p, 0.1, 0.0)
    }

    #[test]
    fn single_altruist_has_two_successors() {
        let o = Oracle::new(mech(1, ReputationScheme::type2()));
        let alt = WorkerState::new(WorkerType::Altruistic, 0.0, 0.1, 0.0);
        let d = o.enumerate_transitions(&state(0.3, vec![alt])).unwrap();
        assert_eq!(d.transitions.len(), 2);
        assert!(d.transitions.iter().all(|t| t.label.cheaters == 0));
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_state_has_one_successor() {
        let o = Oracle::new(mech(1, ReputationScheme::type2()));
        let d = o
            .enumerate_transitions(&state(1.0, vec![rational(1.0)]))
            .unwrap();
        assert_eq!(d.transitions.len(), 1);
        let t = &d.transitions[0];
        assert_eq!(t.probability, 1.0);
        assert!(t.label.audited);
        assert!((t.next.state().workers[0].p_cheat - 0.99).abs() < 1e-12);
    }

    #[test]
    fn two_rationals_give_eight_base_branches() {
        let o = Oracle::new(mech(2, ReputationScheme::type2()));
        let d = o
            .enumerate_transitions(&state(0.5, vec![rational(0.5), rational(0.5)]))
            .unwrap();
        let base: HashSet<(u64, bool)> = d
            .transitions
            .iter()
            .map(|t| (t.label.cheaters, t.label.audited))
            .collect();
        assert_eq!(base.len(), 8);
        for t in &d.transitions {
            let expected = if t.label.tie.is_some() { 0.0625 } else { 0.125 };
            assert!((t.probability - expected).abs() < 1e-15);
        }
        // one cheater against one honest worker ties before any audit
        assert_eq!(d.transitions.len(), 10);
    }

    #[test]
    fn roster_bound_is_enforced() {
        let mut o = Oracle::new(mech(4, ReputationScheme::type2()));
        o.max_workers = 3;
        let s = state(0.5, vec![rational(0.5); 4]);
        assert!(matches!(
            o.enumerate_transitions(&s),
            Err(Error::RosterTooLarge { n: 4, bound: 3 })
        ));
    }

    #[test]
    fn reach_at_horizon_zero() {
        let o = Oracle::new(mech(1, ReputationScheme::type2()));
        let s = state(0.5, vec![rational(0.5)]);
        let p = o
            .reach_probability(&s, |m, _| m.master.p_audit == 0.5, 0, 10)
            .unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn single_rational_without_audits_can_turn_cheater() {
        let mut m = mech(1, ReputationScheme::type2());
        m.payoffs[0].wby = 1.0;
        let o = Oracle::new(m);
        let mut s = state(0.0, vec![rational(0.5)]).into_state();
        s.master.p_audit_min = 0.0;
        let p = o
            .reach_probability(
                &ExactState::new(s),
                |m, _| m.workers.iter().all(|w| w.p_cheat == 1.0),
                200,
                1_000_000,
            )
            .unwrap();
        assert!(p > 0.0);
    }

    #[test]
    fn all_malicious_never_yields_correct_unaudited_value() {
        let o = Oracle::new(mech(2, ReputationScheme::type2()));
        let mal = WorkerState::new(WorkerType::Malicious, 1.0, 0.1, 0.0);
        let s = state(0.5, vec![mal; 2]);
        let p = o
            .reach_probability(
                &s,
                |m, out| {
                    out.is_some_and(|o| !o.audited && o.accepted_correct) && m.master.audits >= 1
                },
                30,
                100_000,
            )
            .unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn budget_overflow_reports_lower_bound() {
        let o = Oracle::new(mech(3, ReputationScheme::type2()));
        let s = state(0.5, vec![rational(0.5); 3]);
        let err = o
            .reach_probability(&s, |m, _| m.master.audits >= 3, 100, 50)
            .unwrap_err();
        match err {
            Error::BudgetExceeded { lower_bound, .. } => {
                assert!((0.0..=1.0).contains(&lower_bound))
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn covered_truthful_set_is_closed_uncovered_is_not() {
        let truthful = |m: &MarkovState| m.workers.iter().all(|w| w.p_cheat == 0.0);
        let seed = state(0.5, vec![rational(0.0); 3]);
        let bounds = ClosureBounds {
            max_depth: 30,
            max_states: 100_000,
        };
        let covered = Oracle::new(mech(3, ReputationScheme::type2()));
        assert!(
            covered
                .check_closed(std::slice::from_ref(&seed), truthful, bounds)
                .unwrap()
                .closed
        );

        let mut m = mech(3, ReputationScheme::type2());
        m.payoffs.iter_mut().for_each(|p| p.wby = 0.1);
        let r = Oracle::new(m)
            .check_closed(&[seed], truthful, bounds)
            .unwrap();
        assert!(!r.closed);
        assert!(r.escape.is_some());
    }

    #[test]
    fn seeds_outside_the_set_are_rejected() {
        let o = Oracle::new(mech(1, ReputationScheme::type2()));
        let s = state(0.5, vec![rational(0.5)]);
        assert!(o
            .check_closed(
                &[s],
                |m| m.workers[0].p_cheat == 0.0,
                ClosureBounds::default()
            )
            .is_err());
    }

    #[test]
    fn fit_passes_on_degenerate_state() {
        let m = mech(2, ReputationScheme::type2());
        let mal = WorkerState::new(WorkerType::Malicious, 1.0, 0.1, 0.0);
        let s = state(1.0, vec![mal; 2]).into_state();
        let r = compare_engine_distribution(&m, &s, 500, 0.01).unwrap();
        assert_eq!(r.bins, 1);
        assert!(r.passed);
    }

    #[test]
    fn impossible_observation_fails_fit() {
        let mut expected = HashMap::new();
        let k = OutcomeKey {
            cheaters: 0,
            audited: true,
            tie: None,
        };
        expected.insert(k, 1.0);
        let mut observed = HashMap::new();
        observed.insert(k, 99);
        observed.insert(
            OutcomeKey {
                audited: false,
                ..k
            },
            1,
        );
        let r = chi_square_fit(&expected, &observed, 0.01);
        assert_eq!(r.impossible, 1);
        assert!(!r.passed);
    }

    fn arb_state() -> impl Strategy<Value = (Mechanism, ExactState)> {
        let worker = (0u8..3, 0.0f64..=1.0, 0u64..4, 0.0f64..0.3).prop_map(|(k, p, v, beta)| {
            let kind = [
                WorkerType::Rational,
                WorkerType::Altruistic,
                WorkerType::Malicious,
            ][k as usize];
            let mut w = WorkerState::new(kind, p, 0.1, beta);
            w.validations = v;
            w
        });
        let scheme = prop_oneof![
            Just(ReputationScheme::Type1),
            Just(ReputationScheme::type2()),
            Just(ReputationScheme::type3()),
            Just(ReputationScheme::None),
        ];
        (
            proptest::collection::vec(worker, 1..5),
            scheme,
            0.0f64..=1.0,
        )
            .prop_map(|(workers, scheme, p_audit)| {
                let n = workers.len();
                let mut s = MarkovState {
                    master: MasterState {
                        p_audit,
                        p_audit_min: 0.0,
                        ..MasterState::default()
                    },
                    workers,
                };
                s.master.audits = s.workers.iter().map(|w| w.validations).max().unwrap_or(0) + 1;
                (mech(n, scheme), ExactState::new(s))
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distributions_sum_to_one((m, s) in arb_state()) {
            let d = Oracle::new(m).enumerate_transitions(&s).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert!(d.transitions.iter().all(|t| t.probability > 0.0));
        }

        #[test]
        fn successors_match_engine_step((m, s) in arb_state()) {
            // replaying each branch through the engine's step function lands
            // on the same canonical state
            let d = Oracle::new(m.clone()).enumerate_transitions(&s).unwrap();
            for t in &d.transitions {
                let n = s.state().workers.len();
                let cheated: Vec<bool> = (0..n).map(|i| t.label.cheaters >> i & 1 == 1).collect();
                let verdict = if t.label.audited {
                    Verdict::Audited
                } else {
                    Verdict::Majority {
                        honest_wins: t.outcome.accepted_correct,
                        tie: t.label.tie.is_some(),
                    }
                };
                let (next, _) = engine::advance(&m, s.state(), 0, &cheated, verdict);
                prop_assert_eq!(&ExactState::new(next), &t.next);
            }
        }

        #[test]
        fn pure_states_without_ties_have_two_support_points((m, s) in arb_state()) {
            let mut st = s.into_state();
            for w in &mut st.workers {
                w.p_cheat = w.p_cheat.round();
            }
            let d = Oracle::new(m).enumerate_transitions(&ExactState::new(st)).unwrap();
            if d.transitions.iter().all(|t| t.label.tie.is_none()) {
                prop_assert!(d.merged().len() <= 2);
            } else {
                prop_assert!(d.merged().len() <= 3);
            }
        }
    }
}
