//! Generators of adversary choices the challenger must reject.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::setup::GameSetup;
use crate::model::PartyId;

/// The kinds of invalid `(L, G')` produced by [`invalid_variant`].
pub const MUTATIONS: usize = 8;

/// Applies mutation `which % MUTATIONS` to a valid setup. Each result
/// breaks the list rules, leaves `G'` outside `G`, or cuts `i*` off.
pub fn invalid_variant<R: Rng>(base: &GameSetup, which: usize, rng: &mut R) -> GameSetup {
    let mut s = base.clone();
    let n = s.n_sm;
    let any_sm = |rng: &mut R| PartyId::Sm(rng.random_range(1..=n));
    match which % MUTATIONS {
        0 => {
            s.sending_list.remove(0);
        }
        1 => {
            s.sending_list.pop();
        }
        2 => {
            // Repeat one meter in place of another.
            let a = rng.random_range(1..=n as usize);
            let mut b = rng.random_range(1..=n as usize);
            if a == b {
                b = if b == 1 { 2 } else { b - 1 };
            }
            s.sending_list[a] = s.sending_list[b];
        }
        3 => {
            let at = rng.random_range(1..=n as usize);
            s.sending_list.remove(at);
        }
        4 => {
            let at = rng.random_range(1..=n as usize);
            s.sending_list.insert(at, PartyId::Dc);
        }
        5 => {
            // A link to a meter that does not exist.
            let a = any_sm(rng);
            s.working_edges.push([a, PartyId::Sm(n + 1 + rng.random_range(0..3))]);
        }
        6 => {
            let a = any_sm(rng);
            s.working_edges.push([a, a]);
        }
        _ => {
            let target = PartyId::Sm(*s.challenged.choose(rng).expect("two meters"));
            s.cut(target, PartyId::Dc);
        }
    }
    s
}
