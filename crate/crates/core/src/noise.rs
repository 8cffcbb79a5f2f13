//! The independent standard normal family indexed by dyadic times.
//!
//! [`CounterNoise`] computes the draw at a canonical dyadic `k / 2^n` as a pure
//! function of `(seed, k, n)`: a ChaCha8 keystream keyed by the seed and level,
//! positioned on stream `k`, feeds a ziggurat normal sampler. Nothing is
//! stateful, so refinement order and thread scheduling cannot change a path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dyadic::Dyadic;

/// Identifier recorded in every report that used [`CounterNoise`].
pub const COUNTER_GENERATOR_ID: &str = "chacha8-stream-ziggurat/v1";

/// A deterministic map from canonical dyadics to standard normal draws.
pub trait NoiseSource: Sync {
    fn seed(&self) -> u64;

    fn generator_id(&self) -> &str;

    /// The draw `X_r`. Must return the same value for the same `r` every time.
    fn draw(&self, r: Dyadic) -> f64;
}

impl<N: NoiseSource + ?Sized> NoiseSource for &N {
    fn seed(&self) -> u64 {
        (**self).seed()
    }

    fn generator_id(&self) -> &str {
        (**self).generator_id()
    }

    fn draw(&self, r: Dyadic) -> f64 {
        (**self).draw(r)
    }
}

/// Convenience wrapper for [`NoiseSource::draw`].
pub fn noise_at<N: NoiseSource + ?Sized>(src: &N, r: Dyadic) -> f64 {
    src.draw(r)
}

/// Domain tags keep streams used for different purposes apart.
const DOMAIN_PATH: u32 = 0x6264_7931;

pub(crate) fn keyed_stream(seed: u64, domain: u32, level: u32, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&level.to_le_bytes());
    key[12..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterNoise {
    seed: u64,
}

impl CounterNoise {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl NoiseSource for CounterNoise {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn generator_id(&self) -> &str {
        COUNTER_GENERATOR_ID
    }

    fn draw(&self, r: Dyadic) -> f64 {
        let mut rng = keyed_stream(self.seed, DOMAIN_PATH, r.level(), r.numerator());
        StandardNormal.sample(&mut rng)
    }
}

/// Multiplies every draw of an inner source by a constant.
///
/// Used as a fault-injection hook: a scale other than one breaks the law.
#[derive(Debug, Clone)]
pub struct ScaledNoise<N> {
    inner: N,
    scale: f64,
    id: String,
}

impl<N: NoiseSource> ScaledNoise<N> {
    pub fn new(inner: N, scale: f64) -> Self {
        let id = format!("{}*{}", inner.generator_id(), scale);
        Self { inner, scale, id }
    }
}

impl<N: NoiseSource> NoiseSource for ScaledNoise<N> {
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn generator_id(&self) -> &str {
        &self.id
    }

    fn draw(&self, r: Dyadic) -> f64 {
        self.inner.draw(r) * self.scale
    }
}

/// Noise given by an arbitrary pure function of the dyadic; a test double.
pub struct FnNoise<F> {
    seed: u64,
    f: F,
}

impl<F: Fn(Dyadic) -> f64 + Sync> FnNoise<F> {
    pub fn new(seed: u64, f: F) -> Self {
        Self { seed, f }
    }
}

impl<F: Fn(Dyadic) -> f64 + Sync> NoiseSource for FnNoise<F> {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn generator_id(&self) -> &str {
        "fn"
    }

    fn draw(&self, r: Dyadic) -> f64 {
        (self.f)(r)
    }
}

/// All draws zero: every path degenerates to the zero function.
pub fn zero_noise(seed: u64) -> FnNoise<fn(Dyadic) -> f64> {
    FnNoise::new(seed, |_| 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::canonicalize;

    #[test]
    fn draws_are_pure() {
        let src = CounterNoise::new(42);
        let r = canonicalize(5, 3);
        assert_eq!(src.draw(r).to_bits(), src.draw(r).to_bits());
        assert_eq!(noise_at(&src, r), CounterNoise::new(42).draw(r));
        assert_ne!(src.draw(r), CounterNoise::new(43).draw(r));
        assert_ne!(src.draw(r), src.draw(canonicalize(7, 3)));
        // same numerator, different level
        assert_ne!(src.draw(canonicalize(1, 1)), src.draw(canonicalize(1, 2)));
    }

    #[test]
    fn scaled_noise_scales() {
        let base = CounterNoise::new(7);
        let scaled = ScaledNoise::new(base, 1.1);
        let r = canonicalize(3, 2);
        assert_eq!(scaled.draw(r), base.draw(r) * 1.1);
        assert_eq!(scaled.seed(), 7);
        assert!(scaled.generator_id().starts_with(COUNTER_GENERATOR_ID));
    }
}
