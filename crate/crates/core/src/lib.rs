//! Fault-tolerant privacy-preserving aggregation of smart meter readings
//! over a simulated network with static link failures.
//!
//! [`protocol`] runs rounds with either [`masking`] or [`paillier`] as the
//! computation, [`baseline`] runs the earlier ring protocol for comparison,
//! and [`game`] plays the unlinkability game against both.

pub mod baseline;
pub mod game;
pub mod masking;
pub mod model;
pub mod net;
pub mod paillier;
pub mod protocol;
pub mod seed;

pub use model::{BackendKind, PartyId, RoundOutcome, Scenario, ValidScenario};
pub use protocol::{run_round, run_scenario};
