use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::classifier::Draw;
use crate::scalar::Scalar;
use crate::statfun::std_normal_quantile;

/// Each sample owns a window of `2^32` outputs: slot 0 feeds [`Draw`],
/// slot `c + 1` feeds coordinate `c`.
const WINDOW_BITS: u32 = 32;
const MAX_COORDINATE: u64 = (1 << WINDOW_BITS) - 2;

/// Replayable source of standard normal deviates.
///
/// The deviate for `(run_seed, example_id, sample_index, coordinate)` is a
/// pure function of that tuple: ChaCha8 keyed by `run_seed`, stream
/// `example_id`, seeked to a word offset derived from
/// `(sample_index, coordinate)`. The 64-bit output becomes a uniform in
/// `(0, 1)` and then a normal deviate through the inverse CDF. Evaluation
/// order and thread count therefore never change the numbers.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    run_seed: u64,
    base: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(run_seed: u64) -> Self {
        Self { run_seed, base: ChaCha8Rng::seed_from_u64(run_seed) }
    }

    pub fn run_seed(&self) -> u64 {
        self.run_seed
    }

    fn positioned(&self, example_id: u64, sample_index: u64, slot: u64) -> ChaCha8Rng {
        debug_assert!(sample_index < 1 << 35 && slot <= MAX_COORDINATE + 1);
        let mut rng = self.base.clone();
        rng.set_stream(example_id);
        // two 32-bit words per u64 output
        let word = ((sample_index as u128) << (WINDOW_BITS + 1)) | ((slot as u128) << 1);
        rng.set_word_pos(word);
        rng
    }

    fn to_deviate(bits: u64) -> f64 {
        let u = Draw(bits).uniform();
        std_normal_quantile(u).expect("uniform lies in (0, 1)")
    }

    /// One standard normal deviate.
    pub fn deviate(&self, example_id: u64, sample_index: u64, coordinate: u64) -> f64 {
        assert!(coordinate <= MAX_COORDINATE, "coordinate out of range");
        Self::to_deviate(self.positioned(example_id, sample_index, coordinate + 1).next_u64())
    }

    /// Deviates for coordinates `0..out.len()` of one sample, plus the
    /// sample's [`Draw`].
    pub fn fill<S: Scalar>(&self, example_id: u64, sample_index: u64, out: &mut [S]) -> Draw {
        assert!(out.len() as u64 <= MAX_COORDINATE + 1, "input dimension too large");
        let mut rng = self.positioned(example_id, sample_index, 0);
        let draw = Draw(rng.next_u64());
        for v in out.iter_mut() {
            *v = S::of(Self::to_deviate(rng.next_u64()));
        }
        draw
    }

    /// Entropy for a randomized base classifier at this sample.
    pub fn draw(&self, example_id: u64, sample_index: u64) -> Draw {
        Draw(self.positioned(example_id, sample_index, 0).next_u64())
    }
}
