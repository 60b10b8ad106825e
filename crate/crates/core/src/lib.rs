//! Reputation-based master–worker mechanism: a seeded round simulator, an
//! exact Markov-chain oracle for small rosters, and the experiment presets
//! that drive both.

pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod reputation;
pub mod scenarios;
pub mod verify;

pub use config::{Overrides, RoleChange, SystemConfig, WorkerSpec};
pub use engine::{run_simulation, MarkovState, Mechanism, SimulationState, Verdict};
pub use error::{Error, Result};
pub use model::{MasterState, PayoffParams, RoundOutcome, WorkerState, WorkerType};
pub use reputation::ReputationScheme;
pub use scenarios::{run_scenario, scenario, Scenario, ScenarioRun};
