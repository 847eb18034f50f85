//! Seeded, splittable random streams.
//!
//! Every Monte Carlo loop derives one ChaCha stream per work item from a
//! `(seed, stream)` pair, so results do not depend on how rayon schedules the
//! items.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
