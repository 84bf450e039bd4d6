use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Every simulation replication gets its own stream index so that batches can
/// run in parallel and still be replayed bit-for-bit one episode at a time.
/// ChaCha's 64-bit stream counter gives independent sequences per index
/// without any coordination between streams.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw from [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
