//! Translations of diagonal Gaussian measures.
//!
//! For `μ_ρ` and a shift `y`, the law of `x + y` has density
//! `exp(Σ x_n y_n / ρ_n - ½ Σ y_n² / ρ_n)` with respect to `μ_ρ` when
//! `Σ y_n² / ρ_n < ∞` (the Cameron–Martin space of `ρ`), and is singular to it
//! otherwise. Two diagonal Gaussians `μ_ρ`, `μ_ρ'` are equivalent exactly when
//! `a_n = ρ'_n / ρ_n` satisfies `Σ (a_n - 1)² < ∞`, and singular otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceSeq;
use crate::seq::FiniteSequence;
use crate::series::{leading_ratio, Limit, SeqClass, SeriesDecision, SignRule};

/// A translation of sequence space: either finitely supported or an infinite
/// sequence from a closed-form class (any sign).
///
/// JSON: a list of `[index, value]` pairs, or a class object such as
/// `{"power": {"c": 1.0, "p": 1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Finite(FiniteSequence),
    Class(SeqClass),
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ShiftSpec::Finite(_) => Ok(()),
            ShiftSpec::Class(c) => c.validate(SignRule::Any),
        }
    }
}

fn check_support(x: &[f64], y: &FiniteSequence) -> Result<()> {
    if y.max_index() as usize > x.len() {
        return Err(Error::input(format!("shift has index {} outside the truncation 1..={}", y.max_index(), x.len())));
    }
    Ok(())
}

/// `log d(μ_ρ ∘ τ_y^{-1}) / dμ_ρ (x) = Σ x_n y_n / ρ_n - ½ Σ y_n² / ρ_n` on the
/// truncation `ℝ^N`, `N = x.len()`.
pub fn log_rn_density(x: &[f64], y: &FiniteSequence, cov: &CovarianceSeq) -> Result<f64> {
    check_support(x, y)?;
    let mut acc = 0.0;
    for (n, yn) in y.iter() {
        let rho = cov.rho(n)?;
        acc += (x[n as usize - 1] - 0.5 * yn) * yn / rho;
    }
    Ok(acc)
}

/// The Radon–Nikodym density of the shifted measure, `exp(log_rn_density)`.
pub fn rn_density(x: &[f64], y: &FiniteSequence, cov: &CovarianceSeq) -> Result<f64> {
    Ok(log_rn_density(x, y, cov)?.exp())
}

/// Exact decision on `Σ y_n² / ρ_n < ∞`.
///
/// Finitely supported shifts always qualify. For class shifts the leading
/// term of `y_n² / ρ_n` decides; a tabulated part on either side makes the
/// question [`Error::Undecided`].
pub fn cameron_martin_series(y: &ShiftSpec, cov: &CovarianceSeq) -> Result<SeriesDecision> {
    y.validate()?;
    match y {
        ShiftSpec::Finite(f) => {
            for (n, _) in f.iter() {
                cov.rho(n)?;
            }
            Ok(SeriesDecision { converges: true, leading_term: None })
        }
        ShiftSpec::Class(c) => {
            let (yt, rt) = match (c.tail_form(), cov.class().tail_form()) {
                (Some(yt), Some(rt)) => (yt, rt),
                _ => return Err(Error::Undecided("tabulated tail: Σ y_n²/ρ_n cannot be decided".into())),
            };
            Ok(SeriesDecision::of_leading(leading_ratio(&yt.mul(&yt), &rt)?))
        }
    }
}

/// Whether `μ_ρ` is quasi-invariant under translation by `y`.
pub fn shift_admissible(y: &ShiftSpec, cov: &CovarianceSeq) -> Result<bool> {
    Ok(cameron_martin_series(y, cov)?.converges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equivalence {
    Equivalent,
    Singular,
    Undecided,
}

/// What the classification rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceEvidence {
    /// Smallest and largest `a_n = ρ'_n / ρ_n` over `n <= ratio_window`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_window: u64,
    /// `lim a_n`; `None` when undecided.
    pub ratio_limit: Option<Limit>,
    /// Decision on `Σ (a_n - 1)²`; `None` when undecided.
    pub hs_series: Option<SeriesDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub verdict: Equivalence,
    pub evidence: EquivalenceEvidence,
}

const RATIO_WINDOW: u64 = 1024;

/// Equivalent/singular classification of `μ_ρ` (cov_a) against `μ_ρ'` (cov_b).
///
/// `Σ (a_n - 1)² < ∞` forces `a_n → 1`, so together with `a_n > 0` it already
/// gives `0 < inf a_n <= sup a_n < ∞`; the summand is
/// `((ρ' - ρ) / ρ)²`, whose leading term is read off the closed forms.
/// Failure means singular, by the equivalence/orthogonality dichotomy for
/// Gaussian measures. Tabulated covariances give `Undecided`.
pub fn equivalence_classify(cov_a: &CovarianceSeq, cov_b: &CovarianceSeq) -> EquivalenceVerdict {
    let known = [cov_a, cov_b].iter().filter_map(|c| c.class().known_len()).min();
    let ratio_window = known.unwrap_or(RATIO_WINDOW).max(1);
    let (mut ratio_min, mut ratio_max) = (f64::INFINITY, 0.0f64);
    for n in 1..=ratio_window {
        // in-range by construction of ratio_window
        let a = cov_b.rho(n).unwrap_or(f64::NAN) / cov_a.rho(n).unwrap_or(f64::NAN);
        ratio_min = ratio_min.min(a);
        ratio_max = ratio_max.max(a);
    }
    let mut evidence = EquivalenceEvidence { ratio_min, ratio_max, ratio_window, ratio_limit: None, hs_series: None };
    let (ra, rb) = match (cov_a.class().tail_form(), cov_b.class().tail_form()) {
        (Some(ra), Some(rb)) => (ra, rb),
        _ => return EquivalenceVerdict { verdict: Equivalence::Undecided, evidence },
    };
    // Closed-form tails never vanish identically for positive classes.
    let ratio = leading_ratio(&rb, &ra).ok().flatten();
    evidence.ratio_limit = Some(ratio.map_or(Limit::Zero, |m| m.limit()));
    let dev = leading_ratio(&rb.sub(&ra), &ra).ok().flatten();
    let hs = SeriesDecision::of_leading(dev.map(|m| m.mul(&m)));
    let verdict = if hs.converges { Equivalence::Equivalent } else { Equivalence::Singular };
    evidence.hs_series = Some(hs);
    EquivalenceVerdict { verdict, evidence }
}

/// A symbolic family of translations.
///
/// JSON: `"finitely_supported"`, `"empty"`, or
/// `{"weighted_l2": {"weights": <class>}}` for `{y : Σ y_n² / w_n < ∞}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftFamily {
    FinitelySupported,
    WeightedL2 { weights: CovarianceSeq },
    Empty,
}

/// Whether `μ_ρ` is ergodic under the translations in `family`, i.e. whether
/// the family is a dense subspace of the Cameron–Martin space of `cov`.
///
/// Finitely supported sequences are dense in every weighted ℓ². A weighted
/// space `ℓ²(1/w)` lies inside `ℓ²(1/ρ)` iff `w_n / ρ_n` is bounded, and then
/// contains the finitely supported sequences, so it is dense; when the ratio
/// is unbounded the family leaves the Cameron–Martin space and `μ_ρ` is not
/// even quasi-invariant under it.
pub fn ergodicity_flag(family: &ShiftFamily, cov: &CovarianceSeq) -> Result<bool> {
    match family {
        ShiftFamily::FinitelySupported => Ok(true),
        ShiftFamily::Empty => Ok(false),
        ShiftFamily::WeightedL2 { weights } => {
            let (w, r) = match (weights.class().tail_form(), cov.class().tail_form()) {
                (Some(w), Some(r)) => (w, r),
                _ => return Err(Error::Undecided("tabulated weights or covariance".into())),
            };
            let ratio = leading_ratio(&w, &r)?;
            Ok(!matches!(ratio.map(|m| m.limit()), Some(Limit::Infinite)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1() -> CovarianceSeq {
        CovarianceSeq::constant(1.0).unwrap()
    }

    #[test]
    fn rn_density_examples() {
        let x = [1.0, 0.0, 0.0];
        assert_eq!(rn_density(&x, &FiniteSequence::zero(), &c1()).unwrap(), 1.0);
        let e1 = FiniteSequence::unit(1).unwrap();
        assert!((rn_density(&x, &e1, &c1()).unwrap() - 0.5f64.exp()).abs() < 1e-15);
        assert!(rn_density(&x, &FiniteSequence::unit(4).unwrap(), &c1()).is_err());
    }

    #[test]
    fn rn_density_uses_variances() {
        let cov = CovarianceSeq::constant(2.0).unwrap();
        let y: FiniteSequence = "2:1".parse().unwrap();
        // (x y - y²/2) / ρ = (3 - 0.5) / 2
        let l = log_rn_density(&[0.0, 3.0], &y, &cov).unwrap();
        assert!((l - 1.25).abs() < 1e-15);
    }

    #[test]
    fn cocycle() {
        let cov = CovarianceSeq::new(SeqClass::power(1.0, 1.0)).unwrap();
        let x = [0.3, -1.2, 0.8, 2.0];
        let y1: FiniteSequence = "1:0.5;3:-1".parse().unwrap();
        let y2: FiniteSequence = "2:0.25;3:0.4;4:1".parse().unwrap();
        let shifted: Vec<f64> = x.iter().enumerate().map(|(i, v)| v - y1.get(i as u64 + 1)).collect();
        let lhs = log_rn_density(&x, &y1.add(&y2), &cov).unwrap();
        let rhs = log_rn_density(&x, &y1, &cov).unwrap() + log_rn_density(&shifted, &y2, &cov).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn admissibility() {
        assert!(shift_admissible(&ShiftSpec::Class(SeqClass::power(1.0, 1.0)), &c1()).unwrap());
        assert!(!shift_admissible(&ShiftSpec::Class(SeqClass::power(1.0, 0.5)), &c1()).unwrap());
        let f = ShiftSpec::Finite("1:3;7:-2".parse().unwrap());
        assert!(shift_admissible(&f, &c1()).unwrap());
        // y_n = n^-1 against ρ_n = n^-2: summand 1, diverges
        let cov = CovarianceSeq::new(SeqClass::power(1.0, 2.0)).unwrap();
        assert!(!shift_admissible(&ShiftSpec::Class(SeqClass::power(1.0, 1.0)), &cov).unwrap());
        // negative amplitudes are allowed
        assert!(shift_admissible(&ShiftSpec::Class(SeqClass::geometric(-3.0, 0.5)), &cov).unwrap());
        let tab = ShiftSpec::Class(SeqClass::tabulated(vec![1.0, 2.0]));
        assert!(matches!(shift_admissible(&tab, &c1()), Err(Error::Undecided(_))));
    }

    #[test]
    fn shift_spec_json() {
        let f: ShiftSpec = serde_json::from_str("[[1, 0.5], [3, 2]]").unwrap();
        assert!(matches!(f, ShiftSpec::Finite(_)));
        let c: ShiftSpec = serde_json::from_str(r#"{"power": {"c": -1, "p": 1}}"#).unwrap();
        assert_eq!(c, ShiftSpec::Class(SeqClass::power(-1.0, 1.0)));
    }

    #[test]
    fn equivalence_examples() {
        let v = equivalence_classify(&c1(), &c1());
        assert_eq!(v.verdict, Equivalence::Equivalent);
        let c2 = CovarianceSeq::constant(2.0).unwrap();
        let v = equivalence_classify(&c1(), &c2);
        assert_eq!(v.verdict, Equivalence::Singular);
        assert_eq!(v.evidence.ratio_limit, Some(Limit::Finite(2.0)));
        let pert = CovarianceSeq::new(SeqClass::Sum(vec![SeqClass::constant(1.0), SeqClass::power(1.0, 1.0)])).unwrap();
        let v = equivalence_classify(&c1(), &pert);
        assert_eq!(v.verdict, Equivalence::Equivalent);
        assert_eq!(v.evidence.ratio_max, 2.0);
        // 1 + n^-1/2: Σ 1/n diverges
        let half = CovarianceSeq::new(SeqClass::Sum(vec![SeqClass::constant(1.0), SeqClass::power(1.0, 0.5)])).unwrap();
        assert_eq!(equivalence_classify(&c1(), &half).verdict, Equivalence::Singular);
        assert_eq!(equivalence_classify(&half, &c1()).verdict, Equivalence::Singular);
    }

    #[test]
    fn equivalence_ignores_prefix_and_flags_tables() {
        let pre = CovarianceSeq::new(SeqClass::prefixed(vec![5.0, 0.1, 9.0], SeqClass::constant(1.0))).unwrap();
        assert_eq!(equivalence_classify(&c1(), &pre).verdict, Equivalence::Equivalent);
        let tab = CovarianceSeq::new(SeqClass::tabulated(vec![1.0, 1.0])).unwrap();
        let v = equivalence_classify(&c1(), &tab);
        assert_eq!(v.verdict, Equivalence::Undecided);
        assert_eq!(v.evidence.ratio_window, 2);
        assert_eq!(v.evidence.hs_series, None);
    }

    #[test]
    fn ergodicity() {
        assert!(ergodicity_flag(&ShiftFamily::FinitelySupported, &c1()).unwrap());
        assert!(!ergodicity_flag(&ShiftFamily::Empty, &c1()).unwrap());
        let own = ShiftFamily::WeightedL2 { weights: c1() };
        assert!(ergodicity_flag(&own, &c1()).unwrap());
        let bigger = ShiftFamily::WeightedL2 { weights: CovarianceSeq::constant(1.0).unwrap() };
        let decaying = CovarianceSeq::new(SeqClass::power(1.0, 2.0)).unwrap();
        assert!(!ergodicity_flag(&bigger, &decaying).unwrap());
        let f: ShiftFamily = serde_json::from_str(r#""finitely_supported""#).unwrap();
        assert_eq!(f, ShiftFamily::FinitelySupported);
        assert!(serde_json::from_str::<ShiftFamily>(r#""dense""#).is_err());
    }
}
