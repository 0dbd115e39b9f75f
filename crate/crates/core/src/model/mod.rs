//! Domain types shared by the protocol engines, the baseline and the
//! privacy game.

pub mod fixtures;
mod graph;
mod message;
mod outcome;
mod party;
mod scenario;

use thiserror::Error;

pub use graph::{Edge, FailureGraph};
pub use message::{ProtocolMessage, ShareState};
pub use outcome::RoundOutcome;
pub use party::PartyId;
pub use scenario::{
    BackendKind, Scenario, ScenarioError, SendingList, ValidScenario, DEFAULT_DELTA_T,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown party {0}")]
    UnknownParty(PartyId),
    #[error("self-loop at {0}")]
    SelfLoop(PartyId),
    #[error("bad party name {0:?}; expected \"DC\" or \"SM<k>\" with k >= 1")]
    BadPartyName(String),
    #[error("the DC cannot carry a measurement, key or online flag")]
    UnexpectedDc,
}
