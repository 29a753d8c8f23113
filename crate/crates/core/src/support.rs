//! Where a diagonal Gaussian measure lives.
//!
//! A sample `x` of `μ_ρ` lies in the weighted space `{x : Σ a_n² x_n² < ∞}`
//! almost surely iff `Σ a_n² ρ_n < ∞`, and in a null set otherwise. The
//! decision is exact on closed-form classes; [`mc_tail_growth`] watches the
//! partial sums of sampled paths as an independent check.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceSeq;
use crate::mc;
use crate::seq::FiniteSequence;
use crate::series::{partial_sum_trace, SeqClass, SeriesDecision, SignRule};

/// A diagonal operator `(Hy)_n = h_n y_n` with `h_n > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeqClass", into = "SeqClass")]
pub struct DiagonalOperator(SeqClass);

impl TryFrom<SeqClass> for DiagonalOperator {
    type Error = Error;

    fn try_from(class: SeqClass) -> Result<Self> {
        DiagonalOperator::new(class)
    }
}

impl From<DiagonalOperator> for SeqClass {
    fn from(h: DiagonalOperator) -> Self {
        h.0
    }
}

impl DiagonalOperator {
    pub fn new(class: SeqClass) -> Result<Self> {
        class.validate(SignRule::Positive)?;
        Ok(DiagonalOperator(class))
    }

    pub fn class(&self) -> &SeqClass {
        &self.0
    }

    pub fn entry(&self, n: u64) -> Result<f64> {
        self.0.value(n).ok_or_else(|| Error::input(format!("diagonal entries are tabulated only below index {n}")))
    }
}

/// `Σ h_n²` decided on the closed form of `h`.
pub fn hilbert_schmidt_series(h: &DiagonalOperator) -> Result<SeriesDecision> {
    let t =
        h.class().tail_form().ok_or_else(|| Error::Undecided("tabulated diagonal: Σ h_n² cannot be decided".into()))?;
    Ok(SeriesDecision::of_leading(t.mul(&t).leading()))
}

/// Whether `H` is Hilbert–Schmidt, i.e. `Σ h_n² < ∞`.
pub fn hilbert_schmidt_check(h: &DiagonalOperator) -> Result<bool> {
    Ok(hilbert_schmidt_series(h)?.converges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    Supported,
    NotSupported,
    /// Tabulated input: only partial sums are known.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVerdict {
    pub verdict: Support,
    /// Decision on `Σ a_n² ρ_n`; absent for heuristic verdicts.
    pub series: Option<SeriesDecision>,
    /// Partial sums of `a_n² ρ_n` at powers of two, for heuristic verdicts.
    pub trace: Option<Vec<(u64, f64)>>,
}

/// Whether `μ_ρ` is carried by `{x : Σ a_n² x_n² < ∞}`.
pub fn weighted_support_check(cov: &CovarianceSeq, a: &DiagonalOperator) -> SupportVerdict {
    match (a.class().tail_form(), cov.class().tail_form()) {
        (Some(at), Some(rt)) => {
            let series = SeriesDecision::of_leading(at.mul(&at).mul(&rt).leading());
            let verdict = if series.converges { Support::Supported } else { Support::NotSupported };
            SupportVerdict { verdict, series: Some(series), trace: None }
        }
        _ => {
            let known = [a.class().known_len(), cov.class().known_len()].into_iter().flatten().min().unwrap_or(0);
            let trace = partial_sum_trace(known, |n| {
                let an = a.entry(n).unwrap_or(f64::NAN);
                an * an * cov.rho(n).unwrap_or(f64::NAN)
            });
            SupportVerdict { verdict: Support::Heuristic, series: None, trace: Some(trace) }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Growth {
    /// Partial sums still grow over the second half of the range.
    Growing,
    Plateau,
}

/// Relative growth of the mean partial sum over `(N/2, N]` above which the
/// sums are called growing.
pub const GROWTH_THRESHOLD: f64 = 0.05;

/// One row of the mean-path trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: u64,
    pub mean: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailGrowth {
    pub verdict: Growth,
    /// Least-squares slope of the mean partial sum against `n` on `[N/2, N]`.
    pub slope: f64,
    /// Mean of `S_N`.
    pub plateau: f64,
    pub plateau_standard_error: f64,
    /// `(S_N - S_{N/2}) / S_N` for the mean path.
    pub relative_growth: f64,
    pub trace: Vec<TracePoint>,
    pub truncation: usize,
    pub n_samples: usize,
    pub seed: u64,
}

/// Monte Carlo view of `S_n = Σ_{k<=n} a_k² x_k²` along paths of `μ_ρ`.
///
/// Coordinates are drawn by Latin hypercube sampling: coordinate `k` of the
/// `n_samples` paths uses one normal quantile from each of `n_samples` equal
/// probability strata, in an independent random order. Every path is still an
/// exact draw from `μ_ρ`; the stratification only removes most of the
/// sample-to-sample noise in the mean of an additive functional like `S_n`.
/// Standard errors are the ordinary iid ones, which bound the stratified
/// error from above up to a factor `n/(n-1)`.
///
/// Coordinate `k` draws from stream `k` of `seed`, so results do not depend
/// on the thread count.
pub fn mc_tail_growth(
    cov: &CovarianceSeq,
    a: &DiagonalOperator,
    truncation: usize,
    n_samples: usize,
    seed: u64,
) -> Result<TailGrowth> {
    if truncation < 100 {
        return Err(Error::input(format!("truncation N must be >= 100, got {truncation}")));
    }
    if n_samples < 100 {
        return Err(Error::input(format!("n_samples must be >= 100, got {n_samples}")));
    }
    let weights: Vec<f64> = (1..=truncation as u64)
        .map(|n| {
            let an = a.entry(n)?;
            Ok(an * an * cov.rho(n)?)
        })
        .collect::<Result<_>>()?;
    let normal = Normal::standard();
    // columns[k][i] = a_k² x_{ik}² for coordinate k+1 of path i
    let columns: Vec<Vec<f64>> = weights
        .par_iter()
        .enumerate()
        .map(|(k, &w)| {
            let mut rng = mc::stream_rng(seed, k as u64);
            let mut strata: Vec<usize> = (0..n_samples).collect();
            strata.shuffle(&mut rng);
            strata
                .iter()
                .map(|&s| {
                    let u = (s as f64 + rng.random::<f64>()) / n_samples as f64;
                    let z = normal.inverse_cdf(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0));
                    w * z * z
                })
                .collect()
        })
        .collect();

    let mut paths = vec![0.0; n_samples];
    let mut mean_path = Vec::with_capacity(truncation);
    let mut trace = Vec::new();
    let mut next = 1;
    for (k, col) in columns.iter().enumerate() {
        for (s, v) in paths.iter_mut().zip(col) {
            *s += v;
        }
        let n = k + 1;
        let mean = paths.iter().sum::<f64>() / n_samples as f64;
        mean_path.push(mean);
        if n == next || n == truncation {
            trace.push(TracePoint { n: n as u64, mean, standard_error: path_se(&paths, mean) });
            next *= 2;
        }
    }
    let plateau = mean_path[truncation - 1];
    let half = mean_path[truncation / 2 - 1];
    let relative_growth = if plateau > 0.0 { (plateau - half) / plateau } else { 0.0 };
    let verdict = if relative_growth > GROWTH_THRESHOLD { Growth::Growing } else { Growth::Plateau };
    Ok(TailGrowth {
        verdict,
        slope: ls_slope(&mean_path, truncation / 2),
        plateau,
        plateau_standard_error: path_se(&paths, plateau),
        relative_growth,
        trace,
        truncation,
        n_samples,
        seed,
    })
}

fn path_se(paths: &[f64], mean: f64) -> f64 {
    let n = paths.len() as f64;
    let var = paths.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Slope of `ys[k]` against `k + 1` for `k >= start`.
fn ls_slope(ys: &[f64], start: usize) -> f64 {
    let pts = &ys[start..];
    let m = pts.len() as f64;
    let xbar = (start + 1) as f64 + (m - 1.0) / 2.0;
    let ybar = pts.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (j, y) in pts.iter().enumerate() {
        let dx = (start + 1 + j) as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Result of comparing `⟨ξ, η⟩_k` with `⟨Hξ, Hη⟩_{k+1}` over all pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuclearCheck {
    pub holds: bool,
    pub max_relative_error: f64,
    pub pairs_checked: usize,
}

pub const NUCLEAR_TOL: f64 = 1e-12;

/// `⟨y, z⟩_k = Σ n^{2k} y_n z_n`.
pub fn sobolev_inner(k: u32, y: &FiniteSequence, z: &FiniteSequence) -> Result<f64> {
    y.weighted_dot(z, |n| weight(n, 2 * k))
}

fn weight(n: u64, e: u32) -> Result<f64> {
    let w = (n as f64).powi(e as i32);
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::input(format!("weight {n}^{e} overflows")))
    }
}

/// Checks `⟨ξ, η⟩_k = ⟨Hξ, Hη⟩_{k+1}` with `(Hy)_n = y_n / n` for every
/// pair of `vectors` (each vector with itself included), to relative
/// tolerance [`NUCLEAR_TOL`] measured against `Σ n^{2k} |ξ_n η_n|`.
pub fn nuclear_embedding_check(k: u32, vectors: &[FiniteSequence]) -> Result<NuclearCheck> {
    if vectors.is_empty() {
        return Err(Error::input("at least one vector is required"));
    }
    let h = |y: &FiniteSequence| FiniteSequence::new(y.iter().map(|(n, v)| (n, v / n as f64)).collect());
    let images: Vec<FiniteSequence> = vectors.iter().map(h).collect::<Result<_>>()?;
    let abs = |y: &FiniteSequence| FiniteSequence::new(y.iter().map(|(n, v)| (n, v.abs())).collect());
    let mut max_rel: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..vectors.len() {
        for j in i..vectors.len() {
            let lhs = sobolev_inner(k, &vectors[i], &vectors[j])?;
            let rhs = sobolev_inner(k + 1, &images[i], &images[j])?;
            let scale = sobolev_inner(k, &abs(&vectors[i])?, &abs(&vectors[j])?)?;
            let rel = if scale == 0.0 { (lhs - rhs).abs() } else { (lhs - rhs).abs() / scale };
            max_rel = max_rel.max(rel);
            pairs += 1;
        }
    }
    Ok(NuclearCheck { holds: max_rel <= NUCLEAR_TOL, max_relative_error: max_rel, pairs_checked: pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn op(c: SeqClass) -> DiagonalOperator {
        DiagonalOperator::new(c).unwrap()
    }

    fn c(rho: f64) -> CovarianceSeq {
        CovarianceSeq::constant(rho).unwrap()
    }

    #[test]
    fn hs_examples() {
        assert!(hilbert_schmidt_check(&op(SeqClass::power(1.0, 1.0))).unwrap());
        assert!(!hilbert_schmidt_check(&op(SeqClass::constant(1.0))).unwrap());
        assert!(hilbert_schmidt_check(&op(SeqClass::geometric(1.0, 0.9))).unwrap());
        // n^-1/2: Σ 1/n
        assert!(!hilbert_schmidt_check(&op(SeqClass::power(1.0, 0.5))).unwrap());
        let tab = op(SeqClass::tabulated(vec![1.0]));
        assert!(matches!(hilbert_schmidt_check(&tab), Err(Error::Undecided(_))));
    }

    #[test]
    fn support_examples() {
        let v = weighted_support_check(&c(3.0), &op(SeqClass::power(1.0, 1.0)));
        assert_eq!(v.verdict, Support::Supported);
        assert_eq!(weighted_support_check(&c(3.0), &op(SeqClass::constant(1.0))).verdict, Support::NotSupported);
        assert_eq!(weighted_support_check(&c(1.0), &op(SeqClass::geometric(1.0, 0.5))).verdict, Support::Supported);
        // a_n = 1, ρ_n = n^-2 is supported
        let cov = CovarianceSeq::new(SeqClass::power(1.0, 2.0)).unwrap();
        assert_eq!(weighted_support_check(&cov, &op(SeqClass::constant(1.0))).verdict, Support::Supported);
    }

    #[test]
    fn tabulated_support_is_heuristic() {
        let v = weighted_support_check(&c(1.0), &op(SeqClass::tabulated(vec![1.0, 0.5, 0.25, 0.125])));
        assert_eq!(v.verdict, Support::Heuristic);
        assert_eq!(v.series, None);
        let trace = v.trace.unwrap();
        assert_eq!(trace.last().unwrap(), &(4, 1.0 + 0.25 + 0.0625 + 0.015625));
    }

    #[test]
    fn tail_growth_slope_and_plateau() {
        let g = mc_tail_growth(&c(1.0), &op(SeqClass::constant(1.0)), 10_000, 100, 11).unwrap();
        assert_eq!(g.verdict, Growth::Growing);
        assert!((g.slope - 1.0).abs() < 0.05, "slope {}", g.slope);
        let g = mc_tail_growth(&c(2.0), &op(SeqClass::constant(1.0)), 10_000, 100, 12).unwrap();
        assert!((g.slope - 2.0).abs() < 0.1, "slope {}", g.slope);
        let g = mc_tail_growth(&c(1.0), &op(SeqClass::power(1.0, 1.0)), 10_000, 100, 13).unwrap();
        assert_eq!(g.verdict, Growth::Plateau);
        let target = PI * PI / 6.0;
        assert!((g.plateau - target).abs() < 0.05 * target, "plateau {}", g.plateau);
    }

    #[test]
    fn tail_growth_is_deterministic_and_validated() {
        let a = op(SeqClass::power(1.0, 0.7));
        let x = mc_tail_growth(&c(1.0), &a, 200, 100, 5).unwrap();
        let y = mc_tail_growth(&c(1.0), &a, 200, 100, 5).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.trace.last().unwrap().n, 200);
        assert!(mc_tail_growth(&c(1.0), &a, 99, 100, 5).is_err());
        assert!(mc_tail_growth(&c(1.0), &a, 100, 99, 5).is_err());
    }

    #[test]
    fn nuclear_examples() {
        let e1 = FiniteSequence::unit(1).unwrap();
        let e2 = FiniteSequence::unit(2).unwrap();
        assert_eq!(sobolev_inner(1, &e1, &e1).unwrap(), 1.0);
        assert_eq!(sobolev_inner(1, &e2, &e2).unwrap(), 4.0);
        let r = nuclear_embedding_check(1, &[e1, e2]).unwrap();
        assert!(r.holds);
        assert_eq!(r.pairs_checked, 3);
        let v: FiniteSequence = "3:0.7;10:-1.3;41:2.2".parse().unwrap();
        assert!(nuclear_embedding_check(4, &[v]).unwrap().holds);
    }
}
