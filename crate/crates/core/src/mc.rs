//! Seeded Monte Carlo plumbing.
//!
//! Every stochastic routine in the crate draws from [`ChaCha8Rng`] streams
//! derived from one 64-bit seed. Work is cut into fixed-size chunks; chunk `i`
//! owns the stream `stream_seed(seed, i)`, so an estimate is a pure function of
//! `(seed, n_samples)` no matter how many worker threads rayon uses.
//!
//! The mixing function is the SplitMix64 finalizer applied to
//! `seed ^ (i * 0x9E3779B97F4A7C15)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per deterministic work unit.
pub const CHUNK: usize = 1 << 14;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `stream`-th independent stream derived from `seed`.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ stream.wrapping_mul(GOLDEN))
}

/// The generator used for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream))
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Estimate {
    /// |estimate - target| measured in standard errors; infinite when SE = 0
    /// and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.estimate - target).abs();
        if diff == 0.0 {
            0.0
        } else if self.standard_error == 0.0 {
            f64::INFINITY
        } else {
            diff / self.standard_error
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        self.z_score(target) <= n_se
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments { n, mean: self.mean + d * other.n / n, m2: self.m2 + other.m2 + d * d * self.n * other.n / n }
    }
}

/// Estimates `K` means at once from `n_samples` draws of `draw`.
///
/// `draw` is called once per sample with that sample's chunk generator and
/// must fill all `K` observables. A non-finite observable aborts the run with
/// [`Error::NonFinite`]; `draw` may also return its own error.
pub fn mean_estimates<const K: usize, F>(n_samples: usize, seed: u64, draw: F) -> Result<[Estimate; K]>
where
    F: Fn(&mut ChaCha8Rng) -> Result<[f64; K]> + Sync,
{
    if n_samples < 2 {
        return Err(Error::input(format!("n_samples must be >= 2, got {n_samples}")));
    }
    let n_chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<Result<[Moments; K]>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk as u64);
            let len = CHUNK.min(n_samples - chunk * CHUNK);
            let mut acc = [Moments::default(); K];
            for _ in 0..len {
                let obs = draw(&mut rng)?;
                for (a, &x) in acc.iter_mut().zip(obs.iter()) {
                    if !x.is_finite() {
                        return Err(Error::NonFinite { value: x, sample: obs.to_vec() });
                    }
                    a.push(x);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = [Moments::default(); K];
    for part in partials {
        let part = part?;
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total.map(|m| {
        let var = m.m2 / (m.n - 1.0);
        Estimate { estimate: m.mean, standard_error: (var / m.n).sqrt(), n_samples, seed }
    }))
}

/// Single-observable convenience wrapper around [`mean_estimates`].
pub fn mean_estimate<F>(n_samples: usize, seed: u64, draw: F) -> Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let [e] = mean_estimates::<1, _>(n_samples, seed, |rng| Ok([draw(rng)?]))?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_differ() {
        assert_ne!(stream_seed(7, 0), stream_seed(7, 1));
        assert_ne!(stream_seed(7, 0), stream_seed(8, 0));
    }

    #[test]
    fn constant_observable_has_zero_error() {
        let e = mean_estimate(1000, 1, |_| Ok(1.0)).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.standard_error, 0.0);
    }

    #[test]
    fn uniform_mean() {
        let e = mean_estimate(200_000, 3, |rng| Ok(rng.random::<f64>())).unwrap();
        assert!(e.within(0.5, 4.0), "{e:?}");
    }

    #[test]
    fn repeatable_across_thread_pools() {
        let run = || mean_estimate(100_000, 42, |rng| Ok(rng.random::<f64>())).unwrap();
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
    }

    #[test]
    fn non_finite_is_reported() {
        let err = mean_estimate(10, 0, |_| Ok(f64::NAN)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rejects_tiny_sample_count() {
        assert!(mean_estimate(1, 0, |_| Ok(0.0)).is_err());
    }
}
