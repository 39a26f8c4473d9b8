use rand::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function (Stafford "Mix13" finalizer). A bijection on
/// `u64` with full avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for trial `index` of an experiment: the `index`-th output of a
/// SplitMix64 stream started at `mix64(master)`. Serial and parallel runs
/// see the same per-trial seeds.
#[inline]
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Folds a sequence of words into one key. Each step is a `mix64` of the
/// running hash combined with the next word, so any single-word change
/// avalanches through the key.
#[inline]
pub(crate) fn hash_words(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x243f_6a88_85a3_08d3);
    for &w in words {
        h = mix64(h.rotate_left(29) ^ w.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN);
    }
    h
}

/// SplitMix64 generator started from a key. Cheap to construct, so every
/// address gets its own instance and draws stay a pure function of
/// `(seed, address)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { state: key }
    }

    /// Uniform in `(0, 1]` with 53 bits of resolution.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

/// Each of the 64 bits is set independently with probability `p`.
/// Positions are generated by geometric skipping, so the cost is
/// proportional to the number of set bits.
pub fn bernoulli_mask(rng: &mut CounterRng, p: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return u64::MAX;
    }
    if p == 0.5 {
        return rng.next_u64();
    }
    let log_q = (1.0 - p).ln();
    let mut mask = 0u64;
    let mut pos = 0.0f64;
    loop {
        let gap = (rng.open_unit().ln() / log_q).floor();
        pos += gap;
        if pos >= 64.0 {
            return mask;
        }
        mask |= 1u64 << (pos as u32);
        pos += 1.0;
    }
}
