//! Deterministic random streams.
//!
//! Every stream is a PCG-XSL-RR 128/64 generator whose state and increment
//! are fixed by `(seed, stream_id)`, so independent workers (trials, sweep
//! points) draw reproducible, non-overlapping sequences.

use rand_core::RngCore;
use rand_pcg::Pcg64;

/// Low half of the initial PCG state; the seed occupies the high half.
const STATE_LOW: u128 = 0x853c_49e6_748f_ea9b;

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: Pcg64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let state = ((seed as u128) << 64) | STATE_LOW;
        Self {
            inner: Pcg64::new(state, stream_id as u128),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform double in `[0, 1)` from the top 53 bits of one draw.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Generator for `(seed, stream_id)`.
pub fn rng_stream(seed: u64, stream_id: u64) -> RngStream {
    RngStream::new(seed, stream_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_first_draws() {
        let mut rng = rng_stream(0, 0);
        let draws = [rng.next_f64(), rng.next_f64(), rng.next_f64()];
        assert_eq!(draws, GOLDEN_SEED0_STREAM0);
    }

    // Generated once from this implementation, then frozen.
    const GOLDEN_SEED0_STREAM0: [f64; 3] = [0.538671168917234, 0.57223524499015, 0.02426471569148858];

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = rng_stream(42, 7);
        let mut b = rng_stream(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let n = 100_000;
        let mut a = rng_stream(5, 0);
        let mut b = rng_stream(5, 1);
        let xs: Vec<f64> = (0..n).map(|_| a.next_f64()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.next_f64()).collect();
        assert_ne!(xs[..10], ys[..10]);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&xs), mean(&ys));
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let rho = cov / (vx * vy).sqrt();
        assert!(rho.abs() < 0.01, "rho = {rho}");
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = rng_stream(1, 2);
        for _ in 0..10_000 {
            let x = rng.uniform(-1.0, 1.0);
            assert!((-1.0..1.0).contains(&x));
        }
    }
}
