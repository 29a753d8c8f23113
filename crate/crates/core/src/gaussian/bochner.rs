use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::FiniteSequence;

/// Eigenvalues above `-GRAM_TOL` count as round-off, not indefiniteness.
pub const GRAM_TOL: f64 = 1e-10;
pub const MAX_GRAM_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GramVerdict {
    #[serde(rename = "PSD")]
    Psd,
    #[serde(rename = "NotPSD")]
    NotPsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub min_eigenvalue: f64,
    /// Whether the Gram matrix was (Hermitian-)symmetric to `GRAM_TOL`.
    pub symmetric: bool,
    pub verdict: GramVerdict,
}

fn check_points(points: &[FiniteSequence]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::input("at least one point is required"));
    }
    if points.len() > MAX_GRAM_POINTS {
        return Err(Error::input(format!("{} points exceed the limit {MAX_GRAM_POINTS}", points.len())));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return Err(Error::input(format!("points {} and {} coincide", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

fn report(min_eigenvalue: f64, symmetric: bool) -> GramReport {
    let verdict = if symmetric && min_eigenvalue >= -GRAM_TOL { GramVerdict::Psd } else { GramVerdict::NotPsd };
    GramReport { min_eigenvalue, symmetric, verdict }
}

/// Bochner diagnostic for a real function on test sequences: the smallest
/// eigenvalue of `G_kl = chi(ξ_k - ξ_l)`.
///
/// A real positive-type function is even, so an asymmetric `G` is `NotPsd`
/// regardless of its spectrum; the eigenvalue reported is then that of the
/// symmetric part.
pub fn positive_type_gram<F>(chi_fn: F, points: &[FiniteSequence]) -> Result<GramReport>
where
    F: Fn(&FiniteSequence) -> f64,
{
    check_points(points)?;
    let k = points.len();
    let g = DMatrix::from_fn(k, k, |i, j| chi_fn(&points[i].sub(&points[j])));
    let symmetric = (0..k).all(|i| (0..i).all(|j| (g[(i, j)] - g[(j, i)]).abs() <= GRAM_TOL));
    let sym = (&g + g.transpose()) * 0.5;
    Ok(report(sym.symmetric_eigenvalues().min(), symmetric))
}

/// Complex variant: `chi_fn` returns `(re, im)`. The Hermitian Gram matrix
/// `H = A + iB` is diagonalized through its real embedding `[[A, -B], [B, A]]`,
/// whose spectrum is that of `H` with every eigenvalue doubled.
pub fn positive_type_gram_hermitian<F>(chi_fn: F, points: &[FiniteSequence]) -> Result<GramReport>
where
    F: Fn(&FiniteSequence) -> (f64, f64),
{
    check_points(points)?;
    let k = points.len();
    let vals: Vec<Vec<(f64, f64)>> =
        (0..k).map(|i| (0..k).map(|j| chi_fn(&points[i].sub(&points[j]))).collect()).collect();
    let symmetric = (0..k).all(|i| {
        (0..=i).all(|j| {
            let (a, b) = vals[i][j];
            let (c, d) = vals[j][i];
            (a - c).abs() <= GRAM_TOL && (b + d).abs() <= GRAM_TOL
        })
    });
    let m = DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let (i, j) = (r % k, c % k);
        let (re, im) = vals[i][j];
        let (re_t, im_t) = vals[j][i];
        // Hermitian part of H
        let (a, b) = (0.5 * (re + re_t), 0.5 * (im - im_t));
        match (r < k, c < k) {
            (true, true) | (false, false) => a,
            (true, false) => -b,
            (false, true) => b,
        }
    });
    Ok(report(m.symmetric_eigenvalues().min(), symmetric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{chi, CovarianceSeq};

    #[test]
    fn single_point_identity() {
        let r = positive_type_gram(|_| 1.0, &[FiniteSequence::zero()]).unwrap();
        assert_eq!(r.min_eigenvalue, 1.0);
        assert_eq!(r.verdict, GramVerdict::Psd);
    }

    #[test]
    fn negative_constant_is_not_psd() {
        let r = positive_type_gram(|_| -1.0, &[FiniteSequence::zero()]).unwrap();
        assert_eq!(r.min_eigenvalue, -1.0);
        assert_eq!(r.verdict, GramVerdict::NotPsd);
    }

    #[test]
    fn gaussian_chi_is_positive_type() {
        let cov = CovarianceSeq::constant(1.0).unwrap();
        let pts: Vec<FiniteSequence> = (0..8)
            .map(|k| format!("1:{};2:{}", (k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()).parse().unwrap())
            .collect();
        let r = positive_type_gram(|x| chi(x, &cov).unwrap(), &pts).unwrap();
        assert_eq!(r.verdict, GramVerdict::Psd);
    }

    #[test]
    fn indefinite_function_is_detected() {
        // cos-free bump that is not positive type: 1 at 0, 2 elsewhere
        let pts = vec![FiniteSequence::zero(), FiniteSequence::unit(1).unwrap()];
        let r = positive_type_gram(|x| if x.is_zero() { 1.0 } else { 2.0 }, &pts).unwrap();
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
        assert_eq!(r.verdict, GramVerdict::NotPsd);
    }

    #[test]
    fn hermitian_character_is_positive_type() {
        // exp(i ξ_1) is a character, hence positive type with rank-one Gram.
        let pts: Vec<FiniteSequence> =
            [0.0, 0.4, 1.1, 2.5].iter().map(|&t| FiniteSequence::new(vec![(1, t)]).unwrap()).collect();
        let r = positive_type_gram_hermitian(|x| (x.get(1).cos(), x.get(1).sin()), &pts).unwrap();
        assert!(r.symmetric);
        assert_eq!(r.verdict, GramVerdict::Psd);
        assert!(r.min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn input_checks() {
        let z = FiniteSequence::zero();
        assert!(positive_type_gram(|_| 1.0, &[z.clone(), z]).is_err());
        assert!(positive_type_gram(|_| 1.0, &[]).is_err());
    }
}
