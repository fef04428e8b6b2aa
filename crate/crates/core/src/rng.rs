use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for `(seed, major, minor)`. Stream selection is the only
/// input besides the seed, so results never depend on scheduling.
pub(crate) fn stream(seed: u64, major: u64, minor: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((major << 32) ^ minor);
    rng
}
