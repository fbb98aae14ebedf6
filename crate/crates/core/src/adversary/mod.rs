//! Network adversary: a scheduler that owns every in-flight message, executes
//! attacker strategies and tracks what the attacker can derive.

mod knowledge;
mod sim;
mod strategy;
mod world;

use thiserror::Error;

pub use knowledge::{Atom, Closure, Knowledge, Sort, CLOSURE_DEPTH};
pub use sim::{
    get_field, run, set_field, Endpoint, InFlight, Payload, RunOutcome, Simulation, MAX_FLUSH_STEPS,
};
pub use strategy::{Action, Func, InjectEvent, Principal, Strategy, Term};
pub use world::{
    core_channel, radio_channel, LinkConfig, SessionSpec, SnConfig, SubscriberConfig, WorldConfig,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("message #{0} does not exist")]
    DanglingMessage(u64),
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("unknown serving network {0}")]
    UnknownServingNetwork(String),
    #[error("unknown subscriber {0}")]
    UnknownSubscriber(String),
    #[error("channel {0} is not attacker-controlled")]
    NotControlled(String),
    #[error("message #{0} was already delivered or dropped")]
    AlreadyDelivered(u64),
    #[error("message #{msg} field {field}: {detail}")]
    InvalidField {
        msg: u64,
        field: String,
        detail: String,
    },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("not derivable: {0}")]
    NotDerivable(String),
    #[error("nothing pending on {0}")]
    NothingPending(String),
    #[error("world configuration: {0}")]
    Config(String),
}

impl StrategyError {
    /// Errors that depend on how the run unfolded are recorded and skipped;
    /// the rest mean the strategy does not fit the world.
    pub fn is_fatal(&self) -> bool {
        !matches!(
            self,
            StrategyError::AlreadyDelivered(_)
                | StrategyError::NotDerivable(_)
                | StrategyError::NothingPending(_)
        )
    }
}
