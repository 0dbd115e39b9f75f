//! The unlinkability game: the adversary picks two measurements, the
//! network failures and the sending list; the challenger assigns the
//! measurements to two honest meters by a secret bit and runs a round; the
//! adversary guesses the bit from its view.

pub mod adversary;
pub mod attacks;
pub mod experiments;
pub mod fuzz;
mod setup;
mod stats;
mod view;

pub use setup::{
    challenge, check_setup, measurement_bound, play_game, AbortReason, Challenge, Corruption, GameOutcome,
    GameSetup, Strategy,
};
pub use stats::{empirical_unlinkability, trial_seed, wilson_interval, StatsError, WinRate, Z_99};
pub use view::{AdversaryView, DcSecrets, SmSecrets};
