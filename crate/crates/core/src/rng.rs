//! Per-trial random streams derived from a master seed.
//!
//! Each trial owns two ChaCha streams keyed by `(master_seed, trial)`: one
//! for the entanglement pattern and one for noise. Streams do not depend
//! on which worker runs the trial or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub placement: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl TrialStreams {
    pub fn derive(master_seed: u64, trial: u64) -> Self {
        TrialStreams {
            placement: stream(master_seed, 2 * trial),
            noise: stream(master_seed, 2 * trial + 1),
        }
    }
}

fn stream(master_seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}
