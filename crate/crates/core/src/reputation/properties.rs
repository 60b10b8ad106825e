//! Checkers for the two structural properties a reputation metric needs
//! for eventual correctness:
//!
//! 1. a set that is always found honest eventually outweighs a set that is
//!    never found honest;
//! 2. an audit in which everybody is honest preserves a strict ordering
//!    between two sets.

use std::collections::HashSet;

use super::ReputationScheme;
use crate::error::{Error, Result};

/// Audit-driven reputation counters of one worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepState {
    pub validations: u64,
    pub error_rate: f64,
}

impl RepState {
    pub fn fresh(scheme: &ReputationScheme) -> Self {
        RepState {
            validations: 0,
            error_rate: scheme.initial_error_rate(),
        }
    }

    fn audited(self, scheme: &ReputationScheme, truthful: bool) -> Self {
        RepState {
            validations: self.validations + u64::from(truthful),
            error_rate: scheme.next_error_rate(self.error_rate, truthful),
        }
    }
}

fn aggregate(scheme: &ReputationScheme, set: &[RepState], audits: u64) -> f64 {
    set.iter()
        .map(|s| scheme.reputation(s.validations, s.error_rate, audits))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property1Report {
    pub holds: bool,
    /// Last audit (counted from the end of the prefix) at which the honest
    /// set did not strictly outweigh the cheating set; 0 if never.
    pub last_violation: u64,
    pub final_honest: f64,
    pub final_cheating: f64,
}

/// Audits every round for `horizon` rounds, with `honest` found truthful
/// and `cheating` caught each time, starting from the given counters at
/// `start_audits`. Holds if the honest side strictly dominates from some
/// round on, up to and including the horizon.
pub fn check_property1(
    scheme: &ReputationScheme,
    honest: &[RepState],
    cheating: &[RepState],
    start_audits: u64,
    horizon: u64,
) -> Result<Property1Report> {
    if horizon == 0 {
        return Err(Error::InvalidArgument(
            "property 1 horizon must be at least 1".into(),
        ));
    }
    if let Some(s) = honest
        .iter()
        .chain(cheating)
        .find(|s| s.validations > start_audits)
    {
        return Err(Error::InvalidArgument(format!(
            "prefix has {} validations but only {start_audits} audits",
            s.validations
        )));
    }
    let mut x = honest.to_vec();
    let mut y = cheating.to_vec();
    let mut last_violation = 0;
    let (mut rho_x, mut rho_y) = (0.0, 0.0);
    for r in 1..=horizon {
        x.iter_mut().for_each(|s| *s = s.audited(scheme, true));
        y.iter_mut().for_each(|s| *s = s.audited(scheme, false));
        let audits = start_audits + r;
        rho_x = aggregate(scheme, &x, audits);
        rho_y = aggregate(scheme, &y, audits);
        if rho_x <= rho_y {
            last_violation = r;
        }
    }
    Ok(Property1Report {
        holds: last_violation < horizon,
        last_violation,
        final_honest: rho_x,
        final_cheating: rho_y,
    })
}

/// A state in which a strictly heavier set loses its lead after an audit
/// that finds every member of both sets honest.
#[derive(Debug, Clone, PartialEq)]
pub struct Property2Counterexample {
    pub audits: u64,
    pub heavier: Vec<RepState>,
    pub lighter: Vec<RepState>,
    pub before: (f64, f64),
    pub after: (f64, f64),
}

/// Starting error rates explored for the error-rate metric: multiples of a
/// tenth of the error bound up to twice the bound, plus the default start.
fn error_rate_grid(scheme: &ReputationScheme) -> Vec<f64> {
    match *scheme {
        ReputationScheme::Type3 {
            error_bound,
            beta_init,
            ..
        } => {
            let mut grid: Vec<f64> = (0..=20).map(|k| k as f64 * error_bound / 10.0).collect();
            if !grid.iter().any(|&b| (b - beta_init).abs() < 1e-15) {
                grid.push(beta_init);
            }
            grid
        }
        _ => vec![0.0],
    }
}

/// Every distinct counter state a worker can hold after `audits` audits.
fn worker_states(scheme: &ReputationScheme, audits: u64) -> Vec<RepState> {
    if !matches!(scheme, ReputationScheme::Type3 { .. }) {
        return (0..=audits)
            .map(|v| RepState {
                validations: v,
                error_rate: 0.0,
            })
            .collect();
    }
    let mut layer: Vec<RepState> = error_rate_grid(scheme)
        .into_iter()
        .map(|b| RepState {
            validations: 0,
            error_rate: b,
        })
        .collect();
    for _ in 0..audits {
        let mut seen = HashSet::new();
        let mut next = Vec::with_capacity(layer.len() * 2);
        for s in &layer {
            for truthful in [true, false] {
                let t = s.audited(scheme, truthful);
                if seen.insert((t.validations, t.error_rate.to_bits())) {
                    next.push(t);
                }
            }
        }
        layer = next;
    }
    layer
}

/// Calls `f` on every non-decreasing index sequence of length `k` over
/// `0..m`; stops early when `f` returns true.
fn for_each_multiset(m: usize, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        m: usize,
        k: usize,
        start: usize,
        buf: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if buf.len() == k {
            return f(buf);
        }
        for i in start..m {
            buf.push(i);
            if rec(m, k, i, buf, f) {
                return true;
            }
            buf.pop();
        }
        false
    }
    let mut buf = Vec::with_capacity(k);
    rec(m, k, 0, &mut buf, f)
}

/// Exhaustive search for a violation of the order-preservation property,
/// over audit counts `0..=max_aud` and set sizes `1..=max_set_size`.
pub fn find_property2_counterexample(
    scheme: &ReputationScheme,
    max_aud: u64,
    max_set_size: usize,
) -> Result<Option<Property2Counterexample>> {
    if max_aud < 1 || max_set_size < 1 {
        return Err(Error::InvalidArgument(
            "property 2 search needs max_aud >= 1 and max_set_size >= 1".into(),
        ));
    }
    for audits in 0..=max_aud {
        let states = worker_states(scheme, audits);
        let before: Vec<f64> = states
            .iter()
            .map(|s| scheme.reputation(s.validations, s.error_rate, audits))
            .collect();
        let after: Vec<f64> = states
            .iter()
            .map(|s| {
                let t = s.audited(scheme, true);
                scheme.reputation(t.validations, t.error_rate, audits + 1)
            })
            .collect();
        let sum = |idx: &[usize], vals: &[f64]| idx.iter().map(|&i| vals[i]).sum::<f64>();

        for sx in 1..=max_set_size {
            for sy in 1..=max_set_size {
                let mut found = None;
                for_each_multiset(states.len(), sx, &mut |xs| {
                    let (bx, ax) = (sum(xs, &before), sum(xs, &after));
                    for_each_multiset(states.len(), sy, &mut |ys| {
                        let (by, ay) = (sum(ys, &before), sum(ys, &after));
                        if bx > by && ax <= ay {
                            found = Some(Property2Counterexample {
                                audits,
                                heavier: xs.iter().map(|&i| states[i]).collect(),
                                lighter: ys.iter().map(|&i| states[i]).collect(),
                                before: (bx, by),
                                after: (ax, ay),
                            });
                            return true;
                        }
                        false
                    })
                });
                if found.is_some() {
                    return Ok(found);
                }
            }
        }
    }
    Ok(None)
}
