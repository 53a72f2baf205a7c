//! Counter-based random streams and scalar samplers.
//!
//! The generator is a keyed SplitMix64: output `i` of a stream is
//! `mix64(key + i·GOLDEN)` where `key` is derived from `(seed, stream_id)`
//! and `mix64` is the SplitMix64 finalizer. There is no sequential state
//! beyond the counter, so a stream is reproducible from its identity alone
//! and streams with distinct ids behave as independent generators.

/// Golden-ratio increment used by SplitMix64.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014; same constants as
/// `java.util.SplittableRandom`).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream id from a tag and a list of integer parts by chaining
/// the SplitMix64 finalizer. Used by the harness to give every
/// (cell, trial) its own stream.
pub fn derive_stream_id(tag: u64, parts: &[u64]) -> u64 {
    let mut h = mix64(tag.wrapping_add(GOLDEN));
    for &p in parts {
        h = mix64(h ^ p.wrapping_add(GOLDEN));
    }
    h
}

/// A seeded, counter-based random stream.
///
/// Identical `(seed, stream_id)` pairs produce identical output sequences.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(mix64(seed.wrapping_add(GOLDEN)) ^ mix64(stream_id ^ 0xD1B5_4A32_D192_ED03));
        RandomStream { seed, stream_id, key, counter: 0, spare_normal: None }
    }

    /// The `(seed, stream_id)` pair this stream was built from.
    pub fn identity(&self) -> (u64, u64) {
        (self.seed, self.stream_id)
    }

    /// A new stream with the same seed and a derived stream id.
    pub fn substream(&self, tag: u64, parts: &[u64]) -> RandomStream {
        RandomStream::new(self.seed, derive_stream_id(tag ^ self.stream_id, parts))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        // 53 random bits, offset by half an ulp so 0 and 1 are excluded.
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// A Rademacher sign, +1 or -1 with equal probability.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal draw by the Marsaglia polar method.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }

    /// Gamma(shape, scale 1) draw by Marsaglia–Tsang squeeze, with the
    /// `U^{1/shape}` boost for shape < 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            let u = self.uniform();
            return g * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (3.0 * d.sqrt());
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}
