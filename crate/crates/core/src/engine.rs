//! Round engine: worker decisions, optional audit, weighted-majority
//! acceptance, payoffs and the two reinforcement updates.
//!
//! RNG draw order per round is part of the contract: one strategy draw per
//! worker in index order, one audit draw, and a tie coin only when the two
//! sides weigh exactly the same.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::error::Result;
use crate::model::{
    compute_payoffs, rewards_paid, MasterState, PayoffParams, RoundOutcome, WorkerState, WorkerType,
};
use crate::reputation::ReputationScheme;

/// The static rules of a run: everything that is not chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub scheme: ReputationScheme,
    pub alpha_w: f64,
    pub payoffs: Vec<PayoffParams>,
}

impl Mechanism {
    pub fn from_config(config: &SystemConfig) -> Self {
        Mechanism {
            scheme: config.scheme,
            alpha_w: config.alpha_w,
            payoffs: config.worker_payoffs(),
        }
    }
}

/// The Markov state: master's audit probability and count, plus every
/// worker's cheat probability and reputation counters.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovState {
    pub master: MasterState,
    pub workers: Vec<WorkerState>,
}

impl MarkovState {
    pub fn initial(config: &SystemConfig) -> Self {
        let beta = config.scheme.initial_error_rate();
        MarkovState {
            master: config.master,
            workers: config
                .workers
                .iter()
                .map(|w| WorkerState::new(w.kind, w.p_cheat, w.aspiration, beta))
                .collect(),
        }
    }

    pub fn reputations(&self, scheme: &ReputationScheme) -> Vec<f64> {
        self.workers
            .iter()
            .map(|w| scheme.value(w, self.master.audits))
            .collect()
    }

    /// Aggregate reputation of cheaters and of honest workers.
    pub fn side_weights(&self, scheme: &ReputationScheme, cheated: &[bool]) -> (f64, f64) {
        let mut cheaters = 0.0;
        let mut honest = 0.0;
        for (w, &c) in self.workers.iter().zip(cheated) {
            let rho = scheme.value(w, self.master.audits);
            if c {
                cheaters += rho;
            } else {
                honest += rho;
            }
        }
        (cheaters, honest)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    pub chain: MarkovState,
    pub round: u64,
    pub rng: ChaCha8Rng,
}

impl SimulationState {
    pub fn new(config: &SystemConfig, seed: u64) -> Self {
        Self::from_chain(MarkovState::initial(config), seed)
    }

    pub fn from_chain(chain: MarkovState, seed: u64) -> Self {
        SimulationState {
            chain,
            round: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// How a round's value was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Audited,
    Majority { honest_wins: bool, tie: bool },
}

/// Compares honest weight against cheater weight. The honest side wins on
/// `Greater`.
pub fn compare_sides(honest: f64, cheaters: f64) -> Ordering {
    honest
        .partial_cmp(&cheaters)
        .expect("reputations are finite")
}

/// One Bernoulli draw per worker, in index order. Every worker consumes a
/// draw, fixed types included, so the stream layout does not depend on the
/// roster's types.
pub fn decide_strategies<R: Rng + ?Sized>(workers: &[WorkerState], rng: &mut R) -> Vec<bool> {
    workers
        .iter()
        .map(|w| rng.gen::<f64>() < w.effective_p_cheat())
        .collect()
}

/// Weighted-majority acceptance for an unaudited round. Draws the tie
/// coin only on an exact tie.
pub fn weighted_majority<R: Rng + ?Sized>(
    scheme: &ReputationScheme,
    state: &MarkovState,
    cheated: &[bool],
    rng: &mut R,
) -> Verdict {
    let (cheaters, honest) = state.side_weights(scheme, cheated);
    match compare_sides(honest, cheaters) {
        Ordering::Greater => Verdict::Majority {
            honest_wins: true,
            tie: false,
        },
        Ordering::Less => Verdict::Majority {
            honest_wins: false,
            tie: false,
        },
        Ordering::Equal => Verdict::Majority {
            honest_wins: rng.gen_bool(0.5),
            tie: true,
        },
    }
}

/// `p_a <- min(1, max(p_a_min, p_a + alpha_m (rho_F / rho_W - tau)))`, and
/// one more audit on the books.
pub fn master_update(master: &MasterState, rho_cheaters: f64, rho_all: f64) -> MasterState {
    assert!(
        rho_all > 0.0,
        "total reputation must be positive, got {rho_all}"
    );
    let step = master.learning_rate * (rho_cheaters / rho_all - master.tolerance);
    MasterState {
        p_audit: (master.p_audit + step).max(master.p_audit_min).min(1.0),
        audits: master.audits + 1,
        ..*master
    }
}

/// `p_c <- clamp(p_c - alpha_w (payoff - a) S)` with `S = -1` for cheating.
/// Non-rational workers pass through unchanged.
pub fn worker_update(
    worker: &WorkerState,
    payoff: f64,
    cheated: bool,
    alpha_w: f64,
) -> WorkerState {
    if worker.kind != WorkerType::Rational {
        return worker.clone();
    }
    let s = if cheated { -1.0 } else { 1.0 };
    WorkerState {
        p_cheat: (worker.p_cheat - alpha_w * (payoff - worker.aspiration) * s).clamp(0.0, 1.0),
        ..worker.clone()
    }
}

/// Deterministic part of a round: given who cheated and how the value was
/// decided, produce the successor state. Shared by engine and oracle.
pub fn advance(
    mech: &Mechanism,
    state: &MarkovState,
    round: u64,
    cheated: &[bool],
    verdict: Verdict,
) -> (MarkovState, RoundOutcome) {
    let n = state.workers.len();
    assert_eq!(cheated.len(), n, "cheater mask / roster mismatch");
    let scheme = &mech.scheme;

    let mut next = state.clone();
    let (audited, majority, tie_broken, accepted_correct) = match verdict {
        Verdict::Audited => {
            for (w, &c) in next.workers.iter_mut().zip(cheated) {
                *w = scheme.update_on_audit(w, !c);
            }
            let audits = state.master.audits + 1;
            let mut rho_cheaters = 0.0;
            let mut rho_all = 0.0;
            for (w, &c) in next.workers.iter().zip(cheated) {
                let rho = scheme.value(w, audits);
                rho_all += rho;
                if c {
                    rho_cheaters += rho;
                }
            }
            next.master = master_update(&state.master, rho_cheaters, rho_all);
            (true, vec![false; n], false, true)
        }
        Verdict::Majority { honest_wins, tie } => {
            let majority: Vec<bool> = cheated.iter().map(|&c| c != honest_wins).collect();
            (false, majority, tie, honest_wins)
        }
    };

    let payoffs = compute_payoffs(cheated, audited, &majority, &mech.payoffs);
    let rewards = rewards_paid(cheated, audited, &majority, &mech.payoffs);
    for ((w, &pay), &c) in next.workers.iter_mut().zip(&payoffs).zip(cheated) {
        *w = worker_update(w, pay, c, mech.alpha_w);
    }

    let outcome = RoundOutcome {
        round,
        cheaters: (0..n).filter(|&i| cheated[i]).collect(),
        audited,
        majority: (0..n).filter(|&i| majority[i]).collect(),
        tie_broken,
        accepted_correct,
        payoffs,
        rewards,
        reputations_after: next.reputations(scheme),
        p_audit_after: next.master.p_audit,
        p_cheat_after: next.workers.iter().map(|w| w.effective_p_cheat()).collect(),
    };
    (next, outcome)
}

/// Executes one round, consuming the RNG in the documented order.
pub fn run_round(mech: &Mechanism, sim: &mut SimulationState) -> RoundOutcome {
    let cheated = decide_strategies(&sim.chain.workers, &mut sim.rng);
    let audit = sim.rng.gen::<f64>() < sim.chain.master.p_audit;
    let verdict = if audit {
        Verdict::Audited
    } else {
        weighted_majority(&mech.scheme, &sim.chain, &cheated, &mut sim.rng)
    };
    let (next, outcome) = advance(mech, &sim.chain, sim.round, &cheated, verdict);
    sim.chain = next;
    sim.round += 1;
    outcome
}

/// Runs `config.horizon` rounds from the initial state with the given seed.
/// Role changes take effect at the start of their round (rounds count
/// from 0).
pub fn run_simulation(config: &SystemConfig, seed: u64) -> Result<Vec<RoundOutcome>> {
    config.validate()?;
    let mech = Mechanism::from_config(config);
    let mut sim = SimulationState::new(config, seed);
    let mut changes = config.role_changes.clone();
    changes.sort_by_key(|c| c.round);
    let mut pending = changes.iter().peekable();

    let mut trace = Vec::with_capacity(config.horizon as usize);
    for round in 0..config.horizon {
        while let Some(c) = pending.next_if(|c| c.round <= round) {
            sim.chain.workers[c.worker].change_type(c.kind);
        }
        trace.push(run_round(&mech, &mut sim));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RoleChange, WorkerSpec};
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    fn rational(p: f64) -> WorkerState {
        WorkerState::new(WorkerType::Rational, p, 0.1, 0.0)
    }

    fn mech(n: usize, params: PayoffParams) -> Mechanism {
        Mechanism {
            scheme: ReputationScheme::type2(),
            alpha_w: 0.1,
            payoffs: vec![params; n],
        }
    }

    fn chain(workers: Vec<WorkerState>) -> MarkovState {
        MarkovState {
            master: MasterState::default(),
            workers,
        }
    }

    fn punishing() -> PayoffParams {
        PayoffParams {
            wpc: 0.5,
            wct: 0.1,
            wby: 1.0,
        }
    }

    fn delta(before: &MarkovState, after: &MarkovState, i: usize) -> f64 {
        after.workers[i].p_cheat - before.workers[i].p_cheat
    }

    // Worker 0 is the subject of each numbered transition; a = 0.1,
    // alpha_w = 0.1, wby = 1, wct = 0.1, wpc = 0.5.

    #[test]
    fn transition_1_audited_cheater() {
        let p = punishing();
        let s = chain(vec![rational(0.5), rational(0.5)]);
        let (t, _) = advance(&mech(2, p), &s, 0, &[true, false], Verdict::Audited);
        assert!((delta(&s, &t, 0) - -0.1 * (0.1 + p.wpc)).abs() < TOL);
    }

    #[test]
    fn transition_2_audited_honest() {
        let p = punishing();
        let s = chain(vec![rational(0.5), rational(0.5)]);
        let (t, _) = advance(&mech(2, p), &s, 0, &[false, true], Verdict::Audited);
        assert!((delta(&s, &t, 0) - 0.1 * (0.1 - (p.wby - p.wct))).abs() < TOL);
    }

    #[test]
    fn transition_3_unaudited_winning_cheater() {
        let p = punishing();
        let s = chain(vec![rational(0.5), rational(0.5), rational(0.5)]);
        let (t, _) = advance(
            &mech(3, p),
            &s,
            0,
            &[true, true, false],
            Verdict::Majority {
                honest_wins: false,
                tie: false,
            },
        );
        assert!((delta(&s, &t, 0) - 0.1 * (p.wby - 0.1)).abs() < TOL);
    }

    #[test]
    fn transition_4_unaudited_losing_cheater() {
        let p = punishing();
        let s = chain(vec![rational(0.5), rational(0.5), rational(0.5)]);
        let (t, _) = advance(
            &mech(3, p),
            &s,
            0,
            &[true, false, false],
            Verdict::Majority {
                honest_wins: true,
                tie: false,
            },
        );
        assert!((delta(&s, &t, 0) - -0.1 * 0.1).abs() < TOL);
    }

    #[test]
    fn transition_5_unaudited_losing_honest() {
        let p = punishing();
        let s = chain(vec![rational(0.5), rational(0.5), rational(0.5)]);
        let (t, _) = advance(
            &mech(3, p),
            &s,
            0,
            &[false, true, true],
            Verdict::Majority {
                honest_wins: false,
                tie: false,
            },
        );
        assert!((delta(&s, &t, 0) - 0.1 * (0.1 + p.wct)).abs() < TOL);
    }

    #[test]
    fn transition_6_unaudited_winning_honest() {
        let p = punishing();
        let s = chain(vec![rational(0.5), rational(0.5), rational(0.5)]);
        let (t, _) = advance(
            &mech(3, p),
            &s,
            0,
            &[false, false, true],
            Verdict::Majority {
                honest_wins: true,
                tie: false,
            },
        );
        assert!((delta(&s, &t, 0) - 0.1 * (0.1 - (p.wby - p.wct))).abs() < TOL);
    }

    #[test]
    fn worker_update_examples() {
        let w = worker_update(&rational(1.0), 0.0, true, 0.1);
        assert!((w.p_cheat - 0.99).abs() < TOL);
        let w = worker_update(&rational(0.5), 0.9, false, 0.1);
        assert!((w.p_cheat - 0.42).abs() < TOL);
        let w = worker_update(&rational(0.0), -0.1, false, 0.1);
        assert!((w.p_cheat - 0.02).abs() < TOL);
        let m = WorkerState::new(WorkerType::Malicious, 1.0, 0.1, 0.0);
        assert_eq!(worker_update(&m, 1.0, true, 0.1), m);
    }

    #[test]
    fn master_update_examples() {
        let m = MasterState::default();
        assert!((master_update(&m, 4.5, 4.5).p_audit - 0.55).abs() < TOL);
        assert!((master_update(&m, 0.0, 4.5).p_audit - 0.45).abs() < TOL);
        assert_eq!(master_update(&m, 0.0, 4.5).audits, 1);
        let low = MasterState {
            p_audit: 0.011,
            ..m
        };
        assert_eq!(master_update(&low, 0.0, 1.0).p_audit, 0.01);
        let high = MasterState { p_audit: 1.0, ..m };
        assert_eq!(master_update(&high, 1.0, 1.0).p_audit, 1.0);
    }

    #[test]
    #[should_panic(expected = "total reputation must be positive")]
    fn master_update_rejects_zero_weight() {
        master_update(&MasterState::default(), 0.0, 0.0);
    }

    #[test]
    fn strategy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alt = vec![WorkerState::new(WorkerType::Altruistic, 0.7, 0.1, 0.0); 5];
        assert!(decide_strategies(&alt, &mut rng).iter().all(|c| !c));
        let mal = vec![WorkerState::new(WorkerType::Malicious, 0.0, 0.1, 0.0); 5];
        assert!(decide_strategies(&mal, &mut rng).iter().all(|&c| c));
        assert!(decide_strategies(&[rational(1.0)], &mut rng)[0]);
    }

    #[test]
    fn weighted_majority_examples() {
        let scheme = ReputationScheme::type2();
        let s = chain(vec![rational(0.5); 9]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = weighted_majority(&scheme, &s, &[false; 9], &mut rng);
        assert_eq!(
            v,
            Verdict::Majority {
                honest_wins: true,
                tie: false
            }
        );
        let mut f = [false; 9];
        f[..4].iter_mut().for_each(|c| *c = true);
        let v = weighted_majority(&scheme, &s, &f, &mut rng);
        assert_eq!(
            v,
            Verdict::Majority {
                honest_wins: true,
                tie: false
            }
        );

        let s = chain(vec![rational(0.5); 2]);
        let mut wins = 0;
        for _ in 0..2000 {
            match weighted_majority(&scheme, &s, &[true, false], &mut rng) {
                Verdict::Majority { honest_wins, tie } => {
                    assert!(tie);
                    wins += usize::from(honest_wins);
                }
                Verdict::Audited => unreachable!(),
            }
        }
        assert!((900..1100).contains(&wins), "{wins}");
    }

    #[test]
    fn tie_coin_only_drawn_on_tie() {
        let scheme = ReputationScheme::type2();
        let s = chain(vec![rational(0.5); 3]);
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let b = a.clone();
        weighted_majority(&scheme, &s, &[true, false, false], &mut a);
        assert_eq!(a.get_word_pos(), b.get_word_pos());
    }

    #[test]
    fn audited_round_outcome() {
        let m = mech(3, PayoffParams::default());
        let s = chain(vec![
            WorkerState::new(WorkerType::Altruistic, 0.0, 0.1, 0.0);
            3
        ]);
        let (t, out) = advance(&m, &s, 4, &[false; 3], Verdict::Audited);
        assert!(out.audited && out.accepted_correct && out.majority.is_empty());
        assert!(out.payoffs.iter().all(|&p| (p - 0.9).abs() < TOL));
        assert!(t.master.p_audit < s.master.p_audit);
        assert_eq!(t.master.audits, 1);
        assert!(t.workers.iter().all(|w| w.validations == 1));
    }

    #[test]
    fn all_malicious_at_full_audit_stays_put() {
        let m = mech(3, PayoffParams::default());
        let mut s = chain(vec![
            WorkerState::new(WorkerType::Malicious, 1.0, 0.1, 0.0);
            3
        ]);
        s.master.p_audit = 1.0;
        let (t, _) = advance(&m, &s, 0, &[true; 3], Verdict::Audited);
        assert_eq!(t.master.p_audit, 1.0);
        assert!(t.workers.iter().all(|w| w.p_cheat == 1.0));
    }

    #[test]
    fn single_covered_worker_audited_every_round_turns_honest() {
        let m = mech(1, PayoffParams::default());
        let mut s = chain(vec![rational(1.0)]);
        s.master.p_audit = 1.0;
        s.master.p_audit_min = 1.0;
        let mut sim = SimulationState::from_chain(s, 5);
        let mut rounds = 0;
        while sim.chain.workers[0].p_cheat > 0.0 {
            run_round(&m, &mut sim);
            rounds += 1;
            assert!(rounds < 10_000);
        }
        assert!(rounds > 10);
    }

    #[test]
    fn simulation_is_deterministic() {
        let config = SystemConfig {
            horizon: 200,
            ..SystemConfig::default()
        };
        assert_eq!(
            run_simulation(&config, 7).unwrap(),
            run_simulation(&config, 7).unwrap()
        );
        assert_ne!(
            run_simulation(&config, 7).unwrap(),
            run_simulation(&config, 8).unwrap()
        );
    }

    #[test]
    fn zero_horizon_gives_empty_trace() {
        let config = SystemConfig {
            horizon: 0,
            ..SystemConfig::default()
        };
        assert!(run_simulation(&config, 1).unwrap().is_empty());
    }

    #[test]
    fn role_change_forces_cheating() {
        let mut config = SystemConfig {
            horizon: 60,
            ..SystemConfig::default()
        };
        config.role_changes = (0..5)
            .map(|worker| RoleChange {
                round: 30,
                worker,
                kind: WorkerType::Malicious,
            })
            .collect();
        let trace = run_simulation(&config, 2).unwrap();
        for out in &trace[30..] {
            assert!((0..5).all(|i| out.cheated(i)));
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let config = SystemConfig {
            workers: vec![],
            ..SystemConfig::default()
        };
        assert!(run_simulation(&config, 1).is_err());
    }

    fn roster() -> impl Strategy<Value = Vec<WorkerSpec>> {
        let kind = prop_oneof![
            6 => Just(WorkerType::Rational),
            1 => Just(WorkerType::Altruistic),
            1 => Just(WorkerType::Malicious),
        ];
        proptest::collection::vec(
            (kind, 0.0f64..=1.0, prop_oneof![Just(0.1), Just(1.0)]),
            1..8,
        )
        .prop_map(|ws| {
            ws.into_iter()
                .map(|(kind, p, wby)| WorkerSpec {
                    p_cheat: kind.fixed_cheat_probability().unwrap_or(p),
                    ..WorkerSpec::of_kind(kind).with_wby(wby)
                })
                .collect()
        })
    }

    fn scheme() -> impl Strategy<Value = ReputationScheme> {
        prop_oneof![
            Just(ReputationScheme::Type1),
            Just(ReputationScheme::type2()),
            Just(ReputationScheme::type3()),
            Just(ReputationScheme::None),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_invariants(
            workers in roster(),
            scheme in scheme(),
            seed in any::<u64>(),
            tau in prop_oneof![Just(0.1), Just(0.5)],
            wpc in prop_oneof![Just(0.0), Just(1.0)],
        ) {
            let mut config = SystemConfig {
                workers,
                scheme,
                horizon: 300,
                ..SystemConfig::default()
            };
            config.master.tolerance = tau;
            config.payoffs.wpc = wpc;
            let mech = Mechanism::from_config(&config);
            let mut sim = SimulationState::new(&config, seed);
            let (mut audits, mut correct) = (0u64, 0u64);
            for _ in 0..config.horizon {
                let before = sim.chain.clone();
                let out = run_round(&mech, &mut sim);
                let m = &sim.chain.master;
                prop_assert!(m.p_audit >= m.p_audit_min && m.p_audit <= 1.0);
                prop_assert!(m.audits >= before.master.audits);
                for (w, b) in sim.chain.workers.iter().zip(&before.workers) {
                    prop_assert!((0.0..=1.0).contains(&w.p_cheat));
                    prop_assert!(w.validations >= b.validations);
                    prop_assert!(w.validations <= m.audits);
                }
                for (i, w) in before.workers.iter().enumerate() {
                    match w.kind {
                        WorkerType::Altruistic => prop_assert!(!out.cheated(i)),
                        WorkerType::Malicious => prop_assert!(out.cheated(i)),
                        WorkerType::Rational => {}
                    }
                }
                prop_assert!(out.reputations_after.iter().all(|r| (0.0..=1.0).contains(r)));
                if out.audited {
                    prop_assert!(out.accepted_correct && out.majority.is_empty());
                    audits += 1;
                } else {
                    let mask: Vec<bool> = (0..out.workers()).map(|i| out.cheated(i)).collect();
                    let (f, h) = before.side_weights(&config.scheme, &mask);
                    if !out.tie_broken {
                        prop_assert_eq!(out.accepted_correct, h > f);
                    } else {
                        prop_assert_eq!(h, f);
                    }
                }
                correct += u64::from(out.accepted_correct);
                prop_assert!(correct >= audits);
            }
        }

        #[test]
        fn none_scheme_is_simple_majority(
            seed in any::<u64>(),
            mask in proptest::collection::vec(any::<bool>(), 9),
        ) {
            let scheme = ReputationScheme::None;
            let mut s = chain(vec![rational(0.5); 9]);
            s.master.audits = 3;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cheaters = mask.iter().filter(|&&c| c).count();
            match weighted_majority(&scheme, &s, &mask, &mut rng) {
                Verdict::Majority { honest_wins, tie } => {
                    prop_assert!(!tie);
                    prop_assert_eq!(honest_wins, cheaters < 5);
                }
                Verdict::Audited => prop_assert!(false),
            }
        }
    }
}
