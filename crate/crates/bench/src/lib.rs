//! Shared helpers for the criterion benches.

use landrl::replay::Transition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible batch of plausible landing transitions.
pub fn synthetic_batch(n: usize, seed: u64) -> Vec<Transition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut state = [0.0; 6];
            let mut next_state = [0.0; 6];
            for v in state.iter_mut().chain(next_state.iter_mut()) {
                *v = rng.gen_range(-2.0..2.0);
            }
            state[2] = rng.gen_range(0.1f64..2.0);
            next_state[2] = (state[2] - 0.05).max(0.01);
            Transition {
                state,
                action: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                reward: rng.gen_range(-30.0..30.0),
                next_state,
                done: rng.gen_bool(0.05),
            }
        })
        .collect()
}
