use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("roster of {n} workers exceeds the oracle bound of {bound}")]
    RosterTooLarge { n: usize, bound: usize },

    #[error("state budget of {budget} exceeded after {rounds} rounds (probability lower bound {lower_bound})")]
    BudgetExceeded {
        budget: usize,
        rounds: usize,
        lower_bound: f64,
    },

    #[error("closure check exceeded {bound} states at depth {depth}")]
    StateBoundExceeded { bound: usize, depth: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
