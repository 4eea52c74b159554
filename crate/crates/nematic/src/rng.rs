//! Counter-based deterministic random numbers.
//!
//! Reproducibility here is byte-level: ledgers produced from the same seed
//! must be identical across runs, platforms, and refactorings of call order.
//! A counter-based generator gives each draw an explicit address, so inserting
//! a new consumer cannot silently shift every later draw the way a stateful
//! stream would. The mixer is SplitMix64 (Steele/Lea/Flood), a published
//! finalizer with well-tested avalanche behavior; value(i) is the SplitMix64
//! output for state seed + (i+1)*GAMMA.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Raw 64-bit output for a counter.
    pub fn value(&self, counter: u64) -> u64 {
        let mut z = self
            .seed
            .wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1) with 53 random bits.
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.value(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in [lo, hi).
    pub fn uniform_in(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform(counter)
    }

    /// A derived generator for an independent subsystem; `label` is hashed
    /// into the seed so subsystems cannot collide on counters.
    pub fn child(&self, label: u64) -> CounterRng {
        CounterRng { seed: self.value(label ^ 0xA5A5_A5A5_5A5A_5A5A) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_values() {
        // Frozen outputs; a change here means the reproducibility contract
        // (same seed => same ledger bytes) is broken.
        let r = CounterRng::new(0);
        assert_eq!(r.value(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.value(1), 0x6E78_9E6A_A1B9_65F4);
        let r2 = CounterRng::new(42);
        assert_eq!(r2.value(0), 0xBDD7_3226_2FEB_6E95);
    }

    #[test]
    fn uniform_range_and_determinism() {
        let r = CounterRng::new(123);
        for i in 0..1000 {
            let x = r.uniform(i);
            assert!((0.0..1.0).contains(&x));
            assert_eq!(x, r.uniform(i), "same counter, same value");
        }
    }

    #[test]
    fn children_decorrelate() {
        let r = CounterRng::new(1);
        let a = r.child(1);
        let b = r.child(2);
        assert_ne!(a.value(0), b.value(0));
        assert_ne!(a.value(0), r.value(0));
    }
}
