//! Per-round diagnostics and multi-seed summaries.

use crate::model::RoundOutcome;

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_SLACK: f64 = 0.005;

/// `sum_i rho_i S_i / n` with `S_i = -1` for cheaters, on post-round
/// reputations.
pub fn reputation_ratio(outcome: &RoundOutcome) -> f64 {
    let n = outcome.reputations_after.len();
    if n == 0 {
        return 0.0;
    }
    let signed: f64 = outcome
        .reputations_after
        .iter()
        .enumerate()
        .map(|(i, rho)| if outcome.cheated(i) { -rho } else { *rho })
        .sum();
    signed / n as f64
}

/// Convergence test parameters: `window` consecutive rounds with a correct
/// accepted value and `p_a <= p_a_min + slack`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub window: usize,
    pub slack: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence {
            window: DEFAULT_WINDOW,
            slack: DEFAULT_SLACK,
        }
    }
}

impl Convergence {
    /// Earliest round index starting a qualifying window, if any.
    pub fn detect(&self, trace: &[RoundOutcome], p_audit_min: f64) -> Option<u64> {
        self.detect_from(trace, p_audit_min, 0)
    }

    /// Like [`detect`](Self::detect) but only considers windows starting at
    /// or after trace position `from`.
    pub fn detect_from(
        &self,
        trace: &[RoundOutcome],
        p_audit_min: f64,
        from: usize,
    ) -> Option<u64> {
        assert!(self.window >= 1, "convergence window must be at least 1");
        let mut run = 0;
        for (i, out) in trace.iter().enumerate().skip(from) {
            if out.accepted_correct && out.p_audit_after <= p_audit_min + self.slack {
                run += 1;
                if run == self.window {
                    return Some(trace[i + 1 - self.window].round);
                }
            } else {
                run = 0;
            }
        }
        None
    }
}

/// Defaults: window 100, slack 0.005.
pub fn detect_convergence(trace: &[RoundOutcome], p_audit_min: f64) -> Option<u64> {
    Convergence::default().detect(trace, p_audit_min)
}

/// Totals for one seed's trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub convergence: Option<u64>,
    pub audits: u64,
    pub correct: u64,
    pub reward_paid: f64,
    pub final_p_audit: f64,
}

impl SeedSummary {
    pub fn of(seed: u64, trace: &[RoundOutcome], p_audit_min: f64, conv: &Convergence) -> Self {
        SeedSummary {
            seed,
            convergence: conv.detect(trace, p_audit_min),
            audits: trace.iter().filter(|o| o.audited).count() as u64,
            correct: trace.iter().filter(|o| o.accepted_correct).count() as u64,
            reward_paid: trace.iter().flat_map(|o| &o.rewards).sum(),
            final_p_audit: trace.last().map_or(f64::NAN, |o| o.p_audit_after),
        }
    }
}

/// Per-round means over seeds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundMeans {
    pub p_audit: Vec<f64>,
    pub audited: Vec<f64>,
    pub correct: Vec<f64>,
    pub reputation_ratio: Vec<f64>,
    /// Indexed `[round][worker]`.
    pub p_cheat: Vec<Vec<f64>>,
    pub reputation: Vec<Vec<f64>>,
}

impl RoundMeans {
    /// Arithmetic means of equally long traces.
    pub fn of(traces: &[&[RoundOutcome]]) -> Self {
        let Some(first) = traces.first() else {
            return RoundMeans::default();
        };
        let rounds = first.len();
        assert!(
            traces.iter().all(|t| t.len() == rounds),
            "traces must have equal length"
        );
        let k = traces.len() as f64;
        let n = first.first().map_or(0, |o| o.workers());
        let mut m = RoundMeans {
            p_audit: vec![0.0; rounds],
            audited: vec![0.0; rounds],
            correct: vec![0.0; rounds],
            reputation_ratio: vec![0.0; rounds],
            p_cheat: vec![vec![0.0; n]; rounds],
            reputation: vec![vec![0.0; n]; rounds],
        };
        for trace in traces {
            for (r, o) in trace.iter().enumerate() {
                m.p_audit[r] += o.p_audit_after / k;
                m.audited[r] += f64::from(u8::from(o.audited)) / k;
                m.correct[r] += f64::from(u8::from(o.accepted_correct)) / k;
                m.reputation_ratio[r] += reputation_ratio(o) / k;
                for i in 0..n {
                    m.p_cheat[r][i] += o.p_cheat_after[i] / k;
                    m.reputation[r][i] += o.reputations_after[i] / k;
                }
            }
        }
        m
    }

    pub fn rounds(&self) -> usize {
        self.p_audit.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub means: RoundMeans,
    pub seeds: Vec<SeedSummary>,
    /// First window in which every seed is simultaneously converged.
    pub convergence: Option<u64>,
}

impl ScenarioSummary {
    pub fn of(runs: &[(u64, Vec<RoundOutcome>)], p_audit_min: f64, conv: &Convergence) -> Self {
        let traces: Vec<&[RoundOutcome]> = runs.iter().map(|(_, t)| t.as_slice()).collect();
        let means = RoundMeans::of(&traces);
        let mut run = 0;
        let mut convergence = None;
        for r in 0..means.rounds() {
            if means.correct[r] >= 1.0
                && traces
                    .iter()
                    .all(|t| t[r].p_audit_after <= p_audit_min + conv.slack)
            {
                run += 1;
                if run == conv.window {
                    convergence = Some((r + 1 - conv.window) as u64);
                    break;
                }
            } else {
                run = 0;
            }
        }
        ScenarioSummary {
            means,
            seeds: runs
                .iter()
                .map(|(seed, t)| SeedSummary::of(*seed, t, p_audit_min, conv))
                .collect(),
            convergence,
        }
    }

    pub fn converged_seeds(&self) -> usize {
        self.seeds
            .iter()
            .filter(|s| s.convergence.is_some())
            .count()
    }

    pub fn total_audits(&self) -> u64 {
        self.seeds.iter().map(|s| s.audits).sum()
    }

    pub fn total_reward_paid(&self) -> f64 {
        self.seeds.iter().map(|s| s.reward_paid).sum()
    }

    /// Mean of the per-round mean audit probability over rounds `range`.
    pub fn mean_p_audit(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.means.p_audit[range];
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}
