use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::setup::{play_game, GameSetup, Strategy};
use crate::seed;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758;

/// Wilson score interval for `wins` successes in `trials`.
pub fn wilson_interval(wins: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = wins as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinRate {
    pub trials: usize,
    pub wins: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub aborts: usize,
}

impl WinRate {
    pub fn new(wins: usize, trials: usize, aborts: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(wins, trials, Z_99);
        WinRate {
            trials,
            wins,
            rate: if trials == 0 { 0.0 } else { wins as f64 / trials as f64 },
            ci_low,
            ci_high,
            aborts,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("at least 100 trials are needed, got {0}")]
    TooFewTrials(usize),
}

/// The seed of trial `t` in a batch started from `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    seed::child(seed, "trial", &[t as u64])
}

/// Plays `trials` independent games with fresh seeds and reports the
/// adversary's win rate. Aborted games count as losses.
pub fn empirical_unlinkability(
    setup: &GameSetup,
    adversary: Strategy,
    trials: usize,
    seed: u64,
) -> Result<WinRate, StatsError> {
    if trials < 100 {
        return Err(StatsError::TooFewTrials(trials));
    }
    let (wins, aborts) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let out = play_game(&setup.with_seed(trial_seed(seed, t)), adversary);
            (usize::from(out.won()), usize::from(out.aborted()))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(WinRate::new(wins, trials, aborts))
}
