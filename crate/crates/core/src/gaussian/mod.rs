//! Centered Gaussian measures on `ℝ^ℕ` with diagonal covariance.
//!
//! The measure `μ_ρ` is the product of centered normals of variance `ρ_n` at
//! coordinate `n`. Its covariance inner product on finitely supported test
//! sequences is `⟨ξ, η⟩_ρ = Σ ρ_n ξ_n η_n`, and its characteristic function is
//! `χ(ξ) = exp(-⟨ξ, ξ⟩_ρ / 2)`.

mod bochner;
mod wick;

pub use bochner::{
    positive_type_gram, positive_type_gram_hermitian, GramReport, GramVerdict, GRAM_TOL, MAX_GRAM_POINTS,
};
pub use wick::{
    double_factorial, pairings, pairings_with_cap, wick_moment, wick_moment_enumerated, Pairing, Pairings, PAIRING_CAP,
};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc;
use crate::measure_core::Sampler;
use crate::seq::FiniteSequence;
use crate::series::{SeqClass, SignRule};

/// A strictly positive variance sequence `ρ_1, ρ_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeqClass", into = "SeqClass")]
pub struct CovarianceSeq(SeqClass);

impl TryFrom<SeqClass> for CovarianceSeq {
    type Error = Error;

    fn try_from(class: SeqClass) -> Result<Self> {
        CovarianceSeq::new(class)
    }
}

impl From<CovarianceSeq> for SeqClass {
    fn from(c: CovarianceSeq) -> Self {
        c.0
    }
}

impl CovarianceSeq {
    pub fn new(class: SeqClass) -> Result<Self> {
        class.validate(SignRule::Positive)?;
        Ok(CovarianceSeq(class))
    }

    /// `ρ_n = rho` for every `n`.
    pub fn constant(rho: f64) -> Result<Self> {
        CovarianceSeq::new(SeqClass::constant(rho))
    }

    pub fn class(&self) -> &SeqClass {
        &self.0
    }

    /// `ρ_n`; fails past the end of a tabulated covariance.
    pub fn rho(&self, n: u64) -> Result<f64> {
        self.0.value(n).ok_or_else(|| {
            Error::input(format!(
                "covariance is tabulated up to index {} but index {n} was requested",
                self.0.known_len().unwrap_or(0)
            ))
        })
    }
}

/// `⟨ξ, η⟩_ρ = Σ_n ρ_n ξ_n η_n`.
pub fn inner(xi: &FiniteSequence, eta: &FiniteSequence, cov: &CovarianceSeq) -> Result<f64> {
    xi.weighted_dot(eta, |n| cov.rho(n))
}

/// The characteristic function `exp(-⟨ξ, ξ⟩_ρ / 2)`.
pub fn chi(xi: &FiniteSequence, cov: &CovarianceSeq) -> Result<f64> {
    Ok((-0.5 * inner(xi, xi, cov)?).exp())
}

/// A draw of the first `truncation` coordinates of `μ_ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSample {
    pub truncation: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    pub covariance: CovarianceSeq,
}

/// Sampler for coordinates `1..=N` of `μ_ρ`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    std_devs: Vec<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &CovarianceSeq, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::input("truncation N must be >= 1"));
        }
        let std_devs = (1..=truncation as u64).map(|n| cov.rho(n).map(f64::sqrt)).collect::<Result<_>>()?;
        Ok(GaussianSampler { std_devs })
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }
}

impl Sampler for GaussianSampler {
    fn dim(&self) -> usize {
        self.std_devs.len()
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (x, s) in out.iter_mut().zip(&self.std_devs) {
            let z: f64 = StandardNormal.sample(rng);
            *x = s * z;
        }
    }
}

/// `N` independent centered normals with variances `ρ_1, ..., ρ_N`,
/// reproducible from `(cov, N, seed)`.
pub fn sample(cov: &CovarianceSeq, truncation: usize, seed: u64) -> Result<GaussianSample> {
    let sampler = GaussianSampler::new(cov, truncation)?;
    let mut rng = mc::stream_rng(seed, 0);
    let mut values = vec![0.0; truncation];
    sampler.sample_into(&mut rng, &mut values);
    Ok(GaussianSample { truncation, values, seed, covariance: cov.clone() })
}
