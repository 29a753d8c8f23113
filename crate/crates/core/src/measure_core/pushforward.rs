use rand_chacha::ChaCha8Rng;

use super::component::ProductMeasureSpec;
use crate::error::{Error, Result};
use crate::mc::{self, Estimate};

/// A seeded source of points in `ℝ^N`.
pub trait Sampler: Sync {
    fn dim(&self) -> usize;
    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// Draws coordinates `1..=N` of a product measure.
#[derive(Debug, Clone)]
pub struct ProductSampler {
    spec: ProductMeasureSpec,
    dim: usize,
}

impl ProductSampler {
    pub fn new(spec: ProductMeasureSpec, dim: usize) -> Result<Self> {
        spec.validate()?;
        if dim == 0 {
            return Err(Error::input("sampler dimension must be >= 1"));
        }
        Ok(ProductSampler { spec, dim })
    }
}

impl Sampler for ProductSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (k, x) in out.iter_mut().enumerate() {
            *x = self.spec.component(k as u64 + 1).sample(rng);
        }
    }
}

/// Monte Carlo estimate of `∫ f(φ(x)) dμ(x)`, which is also `∫ f dμ_φ` for the
/// push-forward measure `μ_φ = μ ∘ φ^{-1}`.
pub fn pushforward_integral_mc<S, Phi, F>(sampler: &S, phi: Phi, f: F, n_samples: usize, seed: u64) -> Result<Estimate>
where
    S: Sampler + ?Sized,
    Phi: Fn(&[f64]) -> Vec<f64> + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    mc::mean_estimate(n_samples, seed, |rng| {
        let mut x = vec![0.0; sampler.dim()];
        sampler.sample_into(rng, &mut x);
        let v = f(&phi(&x));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { value: v, sample: x })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_core::component::Component1DMeasure;

    fn std_gauss(dim: usize) -> ProductSampler {
        ProductSampler::new(ProductMeasureSpec::Identical(Component1DMeasure::Gaussian { rho: 1.0 }), dim).unwrap()
    }

    #[test]
    fn constant_integrand() {
        let e = pushforward_integral_mc(&std_gauss(3), |x| x.to_vec(), |_| 1.0, 1000, 1).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.standard_error, 0.0);
    }

    #[test]
    fn mean_shift() {
        let c = 0.7;
        let e = pushforward_integral_mc(&std_gauss(1), |x| vec![x[0] + c], |u| u[0], 200_000, 5).unwrap();
        assert!(e.within(c, 4.0), "{e:?}");
    }

    #[test]
    fn variance_scaling() {
        let e = pushforward_integral_mc(&std_gauss(1), |x| vec![2.0 * x[0]], |u| u[0] * u[0], 200_000, 6).unwrap();
        assert!(e.within(4.0, 4.0), "{e:?}");
    }

    #[test]
    fn non_finite_carries_sample() {
        let err = pushforward_integral_mc(&std_gauss(2), |x| x.to_vec(), |_| f64::INFINITY, 10, 0).unwrap_err();
        match err {
            Error::NonFinite { sample, .. } => assert_eq!(sample.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
