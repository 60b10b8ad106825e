//! Experiment configuration and its plain-text (TOML key/value) form.
//!
//! Every key is optional; omitted keys take the defaults below.
//!
//! ```toml
//! horizon = 1000            # rounds per run
//! seeds = [1, 2, 3]         # default 1..=10
//! scheme = "type2"          # type1 | type2 | type3 | none
//! epsilon = 0.5             # type2
//! error_bound = 0.05        # type3: A
//! beta_init = 0.1           # type3
//! beta_decay = 0.95         # type3
//! beta_increment = 0.1      # type3
//! pa0 = 0.5                 # initial audit probability
//! pamin = 0.01
//! tau = 0.5
//! alpha = 0.1               # sets alpha_m and alpha_w together
//! alpha_m = 0.1
//! alpha_w = 0.1
//! wpc = 0.0
//! wct = 0.1
//! wby = 1.0                 # default reward, overridable per roster group
//! aspiration = 0.1
//! pc0 = 1.0                 # default initial cheat probability of rationals
//! n = 9                     # roster size when no [[roster]] is given
//!
//! [[roster]]                # groups, expanded in order
//! kind = "malicious"
//! count = 5
//!
//! [[roster]]
//! kind = "rational"
//! count = 4
//! wby = 0.1                 # optional: pc0, aspiration, wby
//!
//! [[role_change]]
//! round = 500
//! workers = [0, 1, 2, 3, 4]
//! kind = "malicious"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MasterState, PayoffParams, WorkerType};
use crate::reputation::ReputationScheme;

pub const DEFAULT_HORIZON: u64 = 1000;
pub const DEFAULT_WORKERS: usize = 9;
pub const DEFAULT_ASPIRATION: f64 = 0.1;
pub const DEFAULT_P_CHEAT: f64 = 1.0;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

pub fn default_seeds() -> Vec<u64> {
    (1..=10).collect()
}

/// Initial description of one worker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkerSpec {
    pub kind: WorkerType,
    pub p_cheat: f64,
    pub aspiration: f64,
    pub wby: f64,
}

impl WorkerSpec {
    pub fn rational(p_cheat: f64) -> Self {
        WorkerSpec {
            kind: WorkerType::Rational,
            p_cheat,
            aspiration: DEFAULT_ASPIRATION,
            wby: PayoffParams::default().wby,
        }
    }

    pub fn of_kind(kind: WorkerType) -> Self {
        WorkerSpec {
            kind,
            p_cheat: kind.fixed_cheat_probability().unwrap_or(DEFAULT_P_CHEAT),
            ..WorkerSpec::rational(DEFAULT_P_CHEAT)
        }
    }

    pub fn with_wby(self, wby: f64) -> Self {
        WorkerSpec { wby, ..self }
    }
}

/// A worker switching type at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoleChange {
    pub round: u64,
    pub worker: usize,
    pub kind: WorkerType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub workers: Vec<WorkerSpec>,
    /// Global `wpc` and `wct`; `wby` here is only the roster default.
    pub payoffs: PayoffParams,
    pub alpha_w: f64,
    pub master: MasterState,
    pub scheme: ReputationScheme,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub role_changes: Vec<RoleChange>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            workers: vec![WorkerSpec::rational(DEFAULT_P_CHEAT); DEFAULT_WORKERS],
            payoffs: PayoffParams::default(),
            alpha_w: DEFAULT_LEARNING_RATE,
            master: MasterState::default(),
            scheme: ReputationScheme::type2(),
            horizon: DEFAULT_HORIZON,
            seeds: default_seeds(),
            role_changes: Vec::new(),
        }
    }
}

impl SystemConfig {
    pub fn n(&self) -> usize {
        self.workers.len()
    }

    /// Effective payoff parameters of worker `i`.
    pub fn payoffs_for(&self, i: usize) -> PayoffParams {
        PayoffParams {
            wby: self.workers[i].wby,
            ..self.payoffs
        }
    }

    pub fn worker_payoffs(&self) -> Vec<PayoffParams> {
        (0..self.n()).map(|i| self.payoffs_for(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one worker is required".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        self.payoffs.validate()?;
        self.master.validate()?;
        self.scheme.validate()?;
        if !(self.alpha_w.is_finite() && self.alpha_w >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha_w must be non-negative, got {}",
                self.alpha_w
            )));
        }
        for (i, w) in self.workers.iter().enumerate() {
            if !(w.p_cheat.is_finite() && (0.0..=1.0).contains(&w.p_cheat)) {
                return Err(Error::InvalidConfig(format!(
                    "worker {i}: pc0 must lie in [0, 1], got {}",
                    w.p_cheat
                )));
            }
            if !w.aspiration.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "worker {i}: aspiration must be finite"
                )));
            }
            if !(w.wby.is_finite() && w.wby >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "worker {i}: wby must be non-negative, got {}",
                    w.wby
                )));
            }
        }
        for c in &self.role_changes {
            if c.worker >= self.n() {
                return Err(Error::InvalidConfig(format!(
                    "role change names worker {} but the roster has {}",
                    c.worker,
                    self.n()
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        let config = file.resolve()?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Fully-resolved configuration; parsing it back yields `self`.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ConfigFile::from_config(self)).expect("config serializes to TOML")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterGroup {
    kind: WorkerType,
    #[serde(default = "one")]
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pc0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aspiration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wby: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleChangeEntry {
    round: u64,
    workers: Vec<usize>,
    kind: WorkerType,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_increment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pa0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pamin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wpc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wby: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aspiration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pc0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    roster: Vec<RosterGroup>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    role_change: Vec<RoleChangeEntry>,
}

impl ConfigFile {
    fn resolve(self) -> Result<SystemConfig> {
        let base = SystemConfig::default();
        let scheme = self.resolve_scheme()?;

        let alpha_m = self
            .alpha_m
            .or(self.alpha)
            .unwrap_or(base.master.learning_rate);
        let alpha_w = self.alpha_w.or(self.alpha).unwrap_or(base.alpha_w);
        let p_audit_min = self.pamin.unwrap_or(base.master.p_audit_min);
        let master = MasterState {
            p_audit: self.pa0.unwrap_or(base.master.p_audit),
            audits: 0,
            p_audit_min,
            tolerance: self.tau.unwrap_or(base.master.tolerance),
            learning_rate: alpha_m,
        };
        let payoffs = PayoffParams {
            wpc: self.wpc.unwrap_or(base.payoffs.wpc),
            wct: self.wct.unwrap_or(base.payoffs.wct),
            wby: self.wby.unwrap_or(base.payoffs.wby),
        };
        let aspiration = self.aspiration.unwrap_or(DEFAULT_ASPIRATION);
        let pc0 = self.pc0.unwrap_or(DEFAULT_P_CHEAT);

        let workers = if self.roster.is_empty() {
            let n = self.n.unwrap_or(DEFAULT_WORKERS);
            vec![
                WorkerSpec {
                    kind: WorkerType::Rational,
                    p_cheat: pc0,
                    aspiration,
                    wby: payoffs.wby,
                };
                n
            ]
        } else {
            if self.n.is_some() {
                return Err(Error::InvalidConfig(
                    "give either `n` or `[[roster]]` groups, not both".into(),
                ));
            }
            let mut workers = Vec::new();
            for g in &self.roster {
                let p_cheat = g
                    .kind
                    .fixed_cheat_probability()
                    .unwrap_or_else(|| g.pc0.unwrap_or(pc0));
                let spec = WorkerSpec {
                    kind: g.kind,
                    p_cheat,
                    aspiration: g.aspiration.unwrap_or(aspiration),
                    wby: g.wby.unwrap_or(payoffs.wby),
                };
                workers.extend(std::iter::repeat_n(spec, g.count));
            }
            workers
        };

        let role_changes = self
            .role_change
            .iter()
            .flat_map(|e| {
                e.workers.iter().map(move |&worker| RoleChange {
                    round: e.round,
                    worker,
                    kind: e.kind,
                })
            })
            .collect();

        Ok(SystemConfig {
            workers,
            payoffs,
            alpha_w,
            master,
            scheme,
            horizon: self.horizon.unwrap_or(base.horizon),
            seeds: self.seeds.unwrap_or(base.seeds),
            role_changes,
        })
    }

    fn resolve_scheme(&self) -> Result<ReputationScheme> {
        let name = self.scheme.as_deref().unwrap_or("type2");
        let scheme = match ReputationScheme::from_name(name)? {
            ReputationScheme::Type2 { epsilon } => ReputationScheme::Type2 {
                epsilon: self.epsilon.unwrap_or(epsilon),
            },
            ReputationScheme::Type3 {
                error_bound,
                beta_init,
                decay,
                increment,
            } => ReputationScheme::Type3 {
                error_bound: self.error_bound.unwrap_or(error_bound),
                beta_init: self.beta_init.unwrap_or(beta_init),
                decay: self.beta_decay.unwrap_or(decay),
                increment: self.beta_increment.unwrap_or(increment),
            },
            other => other,
        };
        Ok(scheme)
    }

    fn from_config(c: &SystemConfig) -> Self {
        let mut file = ConfigFile {
            horizon: Some(c.horizon),
            seeds: Some(c.seeds.clone()),
            scheme: Some(c.scheme.name().to_string()),
            pa0: Some(c.master.p_audit),
            pamin: Some(c.master.p_audit_min),
            tau: Some(c.master.tolerance),
            alpha_m: Some(c.master.learning_rate),
            alpha_w: Some(c.alpha_w),
            wpc: Some(c.payoffs.wpc),
            wct: Some(c.payoffs.wct),
            wby: Some(c.payoffs.wby),
            ..ConfigFile::default()
        };
        match c.scheme {
            ReputationScheme::Type2 { epsilon } => file.epsilon = Some(epsilon),
            ReputationScheme::Type3 {
                error_bound,
                beta_init,
                decay,
                increment,
            } => {
                file.error_bound = Some(error_bound);
                file.beta_init = Some(beta_init);
                file.beta_decay = Some(decay);
                file.beta_increment = Some(increment);
            }
            _ => {}
        }
        // consecutive identical workers collapse into one group
        for w in &c.workers {
            match file.roster.last_mut() {
                Some(g)
                    if g.kind == w.kind
                        && g.pc0 == Some(w.p_cheat)
                        && g.aspiration == Some(w.aspiration)
                        && g.wby == Some(w.wby) =>
                {
                    g.count += 1
                }
                _ => file.roster.push(RosterGroup {
                    kind: w.kind,
                    count: 1,
                    pc0: Some(w.p_cheat),
                    aspiration: Some(w.aspiration),
                    wby: Some(w.wby),
                }),
            }
        }
        for rc in &c.role_changes {
            match file.role_change.last_mut() {
                Some(e) if e.round == rc.round && e.kind == rc.kind => e.workers.push(rc.worker),
                _ => file.role_change.push(RoleChangeEntry {
                    round: rc.round,
                    workers: vec![rc.worker],
                    kind: rc.kind,
                }),
            }
        }
        file
    }
}

/// Command-line style overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub horizon: Option<u64>,
    pub scheme: Option<String>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub wpc: Option<f64>,
    pub wby: Option<f64>,
    pub wct: Option<f64>,
    pub alpha: Option<f64>,
    pub aspiration: Option<f64>,
    pub pa0: Option<f64>,
    pub pamin: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut SystemConfig) -> Result<()> {
        if let Some(s) = &self.seeds {
            config.seeds = s.clone();
        }
        if let Some(h) = self.horizon {
            config.horizon = h;
        }
        if let Some(name) = &self.scheme {
            config.scheme = ReputationScheme::from_name(name)?;
        }
        if let Some(eps) = self.epsilon {
            match &mut config.scheme {
                ReputationScheme::Type2 { epsilon } => *epsilon = eps,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "epsilon only applies to type2, scheme is {other}"
                    )))
                }
            }
        }
        if let Some(t) = self.tau {
            config.master.tolerance = t;
        }
        if let Some(v) = self.wpc {
            config.payoffs.wpc = v;
        }
        if let Some(v) = self.wct {
            config.payoffs.wct = v;
        }
        if let Some(v) = self.wby {
            config.payoffs.wby = v;
            config.workers.iter_mut().for_each(|w| w.wby = v);
        }
        if let Some(a) = self.alpha {
            config.alpha_w = a;
            config.master.learning_rate = a;
        }
        if let Some(a) = self.aspiration {
            config.workers.iter_mut().for_each(|w| w.aspiration = a);
        }
        if let Some(p) = self.pa0 {
            config.master.p_audit = p;
        }
        if let Some(p) = self.pamin {
            config.master.p_audit_min = p;
        }
        config.validate()
    }
}

/// Parses seed lists such as `1-10`, `3,5,8` or `1-3,7`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("invalid seed list `{text}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}
