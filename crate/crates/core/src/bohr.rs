//! Haar measure on the tori approximating the Bohr compactification.
//!
//! For rationally independent frequencies `k_1, ..., k_n` the characters
//! `t ↦ e^{i k_j t}` generate a copy of the `n`-torus, and the Bohr
//! compactification of `ℝ` is the projective limit of these tori. Its Haar
//! measure restricted to functions of finitely many phases (cylindrical
//! functions) is the uniform measure on `[0, 2π)^n`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc;

/// Largest number of coefficient vectors [`independence_check`] will try.
pub const SEARCH_BUDGET: f64 = 1e8;
/// Relative tolerance of the null-combination test.
pub const NULL_TOL: f64 = 1e-12;
/// Largest dimension integrated by the tensor trapezoid rule.
pub const MAX_QUADRATURE_DIM: usize = 4;

/// Distinct nonzero frequencies `k_1, ..., k_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencySet {
    freqs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FrequencySet {
    type Error = Error;

    fn try_from(freqs: Vec<f64>) -> Result<Self> {
        FrequencySet::new(freqs)
    }
}

impl From<FrequencySet> for Vec<f64> {
    fn from(f: FrequencySet) -> Self {
        f.freqs
    }
}

impl FrequencySet {
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::input("at least one frequency is required"));
        }
        for (i, &k) in freqs.iter().enumerate() {
            if !k.is_finite() || k == 0.0 {
                return Err(Error::input(format!("frequency {k} must be finite and nonzero")));
            }
            if freqs[..i].contains(&k) {
                return Err(Error::input(format!("frequency {k} appears twice")));
            }
        }
        Ok(FrequencySet { freqs })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

impl FromStr for FrequencySet {
    type Err = Error;

    /// Comma-separated reals, e.g. `1,1.4142135623730951`.
    fn from_str(s: &str) -> Result<Self> {
        let freqs = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::input(format!("bad frequency {t:?}"))))
            .collect::<Result<_>>()?;
        FrequencySet::new(freqs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Independence {
    /// No integer combination with coefficients in `[-bound, bound]` vanishes.
    IndependentUpTo { bound: u64 },
    /// `Σ m_i k_i = 0`; the witness has minimal `max |m_i|` and its first
    /// nonzero entry positive.
    Dependent { witness: Vec<i64> },
}

/// Searches `m ∈ ℤ^n \ {0}`, `|m_i| <= bound`, for `Σ m_i k_i = 0` up to
/// [`NULL_TOL`] relative to `Σ |m_i k_i|`.
///
/// Candidates are visited shell by shell in `max |m_i|`, so a witness is as
/// small as possible. Fails with [`Error::BudgetExceeded`] when
/// `(2 bound + 1)^n` exceeds [`SEARCH_BUDGET`].
pub fn independence_check(gamma: &FrequencySet, bound: u64) -> Result<Independence> {
    if bound == 0 {
        return Err(Error::input("coefficient bound M must be >= 1"));
    }
    let n = gamma.len();
    let needed = (2.0 * bound as f64 + 1.0).powi(n as i32);
    if needed > SEARCH_BUDGET {
        let max_bound = ((SEARCH_BUDGET.powf(1.0 / n as f64) - 1.0) / 2.0).floor();
        return Err(Error::BudgetExceeded {
            needed,
            budget: SEARCH_BUDGET,
            hint: format!("use M <= {max_bound} for {n} frequencies"),
        });
    }
    let k = gamma.freqs();
    let mut m = vec![0i64; n];
    for s in 1..=bound as i64 {
        // vectors whose first entry of modulus s sits at position j
        for j in 0..n {
            for sign in [1, -1] {
                let mut ranges = vec![(-(s - 1), s - 1); j];
                ranges.push((sign * s, sign * s));
                ranges.extend(std::iter::repeat_n((-s, s), n - j - 1));
                for (slot, r) in m.iter_mut().zip(&ranges) {
                    *slot = r.0;
                }
                loop {
                    let first_nonzero = m.iter().find(|&&v| v != 0).copied().unwrap_or(0);
                    if first_nonzero > 0 {
                        let (mut sum, mut scale) = (0.0, 0.0);
                        for (mi, ki) in m.iter().zip(k) {
                            let t = *mi as f64 * ki;
                            sum += t;
                            scale += t.abs();
                        }
                        if sum.abs() <= NULL_TOL * scale {
                            return Ok(Independence::Dependent { witness: m });
                        }
                    }
                    if !advance(&mut m, &ranges) {
                        break;
                    }
                }
            }
        }
    }
    Ok(Independence::IndependentUpTo { bound })
}

// Odometer step over the box `ranges`; false once it wraps around.
fn advance(m: &mut [i64], ranges: &[(i64, i64)]) -> bool {
    for i in (0..m.len()).rev() {
        if m[i] < ranges[i].1 {
            m[i] += 1;
            return true;
        }
        m[i] = ranges[i].0;
    }
    false
}

/// A point of the torus `ℝ_γ`: one phase per frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterSample {
    pub phases: Vec<f64>,
    pub seed: u64,
}

fn draw_phases(rng: &mut impl Rng, out: &mut [f64]) {
    for p in out {
        *p = rng.random_range(0.0..2.0 * PI);
    }
}

/// `n` independent uniform phases on `[0, 2π)`.
///
/// Phases are drawn in frequency order from one stream, so the first `n`
/// phases for `n + 1` frequencies coincide with the sample for the first `n`.
pub fn haar_sample(gamma: &FrequencySet, seed: u64) -> CharacterSample {
    let mut phases = vec![0.0; gamma.len()];
    draw_phases(&mut mc::stream_rng(seed, 0), &mut phases);
    CharacterSample { phases, seed }
}

/// A cylindrical integrand from the fixed catalog.
///
/// Text form: `one`, `char:<m_1>,...,<m_n>` for `e^{i m·θ}`, `cos2:<j>` for
/// `cos² θ_j`, `abs2:<j>` for `|e^{i θ_j}|²` (1-based `j`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    One,
    Character(Vec<i64>),
    Cos2(usize),
    Abs2(usize),
}

impl Integrand {
    /// Number of phases the integrand reads.
    pub fn arity(&self) -> usize {
        match self {
            Integrand::One => 0,
            Integrand::Character(m) => m.len(),
            Integrand::Cos2(j) | Integrand::Abs2(j) => *j,
        }
    }

    pub fn eval(&self, theta: &[f64]) -> Complex64 {
        match self {
            Integrand::One => Complex64::new(1.0, 0.0),
            Integrand::Character(m) => {
                let phase: f64 = m.iter().zip(theta).map(|(&mi, t)| mi as f64 * t).sum();
                Complex64::from_polar(1.0, phase)
            }
            Integrand::Cos2(j) => Complex64::new(theta[j - 1].cos().powi(2), 0.0),
            Integrand::Abs2(j) => Complex64::new(Complex64::from_polar(1.0, theta[j - 1]).norm_sqr(), 0.0),
        }
    }

    /// The exact Haar integral.
    pub fn exact(&self) -> Complex64 {
        match self {
            Integrand::One | Integrand::Abs2(_) => Complex64::new(1.0, 0.0),
            Integrand::Character(m) if m.iter().all(|&v| v == 0) => Complex64::new(1.0, 0.0),
            Integrand::Character(_) => Complex64::new(0.0, 0.0),
            Integrand::Cos2(_) => Complex64::new(0.5, 0.0),
        }
    }
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input(format!("unknown integrand {s:?}; expected one, char:m1,..., cos2:j or abs2:j"));
        let index = |t: &str| match t.trim().parse::<usize>() {
            Ok(j) if j >= 1 => Ok(j),
            _ => Err(bad()),
        };
        match s.trim().split_once(':') {
            None if s.trim() == "one" => Ok(Integrand::One),
            Some(("char", rest)) => Ok(Integrand::Character(
                rest.split(',').map(|t| t.trim().parse::<i64>().map_err(|_| bad())).collect::<Result<_>>()?,
            )),
            Some(("cos2", rest)) => Ok(Integrand::Cos2(index(rest)?)),
            Some(("abs2", rest)) => Ok(Integrand::Abs2(index(rest)?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::One => write!(f, "one"),
            Integrand::Character(m) => {
                let parts: Vec<String> = m.iter().map(|v| v.to_string()).collect();
                write!(f, "char:{}", parts.join(","))
            }
            Integrand::Cos2(j) => write!(f, "cos2:{j}"),
            Integrand::Abs2(j) => write!(f, "abs2:{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaarMethod {
    /// Tensor periodic trapezoid rule with this many points per axis.
    Quadrature {
        points: usize,
    },
    Mc {
        n_samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarIntegral {
    pub re: f64,
    pub im: f64,
    /// Quadrature: difference from the rule with half the points (when the
    /// point count is even, else the full-grid value is its own estimate and
    /// this is `None`). MC: standard errors of the real and imaginary parts.
    pub error_estimate: Option<f64>,
    pub standard_error_re: Option<f64>,
    pub standard_error_im: Option<f64>,
}

impl HaarIntegral {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn trapezoid(n: usize, points: usize, f: &impl Fn(&[f64]) -> Complex64) -> Result<Complex64> {
    let h = 2.0 * PI / points as f64;
    let mut idx = vec![0usize; n];
    let mut theta = vec![0.0; n];
    let mut acc = Complex64::new(0.0, 0.0);
    let total = points.pow(n as u32);
    for _ in 0..total {
        for (t, &i) in theta.iter_mut().zip(&idx) {
            *t = i as f64 * h;
        }
        let v = f(&theta);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { value: if v.re.is_finite() { v.im } else { v.re }, sample: theta });
        }
        acc += v;
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < points {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(acc / total as f64)
}

/// `(2π)^{-n} ∫_{[0,2π)^n} f(θ) dθ` for `n = |γ|`.
pub fn haar_cylinder_integral<F>(gamma: &FrequencySet, f: F, method: HaarMethod) -> Result<HaarIntegral>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = gamma.len();
    match method {
        HaarMethod::Quadrature { points } => {
            if n > MAX_QUADRATURE_DIM {
                return Err(Error::input(format!(
                    "quadrature supports at most {MAX_QUADRATURE_DIM} frequencies, got {n}; use Monte Carlo"
                )));
            }
            if points == 0 || (points as f64).powi(n as i32) > 1e8 {
                return Err(Error::input(format!("{points} points per axis is out of range")));
            }
            let v = trapezoid(n, points, &f)?;
            let error_estimate = if points % 2 == 0 { Some((v - trapezoid(n, points / 2, &f)?).norm()) } else { None };
            Ok(HaarIntegral { re: v.re, im: v.im, error_estimate, standard_error_re: None, standard_error_im: None })
        }
        HaarMethod::Mc { n_samples, seed } => {
            let [re, im] = mc::mean_estimates::<2, _>(n_samples, seed, |rng| {
                let mut theta = vec![0.0; n];
                draw_phases(rng, &mut theta);
                let v = f(&theta);
                Ok([v.re, v.im])
            })?;
            Ok(HaarIntegral {
                re: re.estimate,
                im: im.estimate,
                error_estimate: Some(4.0 * re.standard_error.hypot(im.standard_error)),
                standard_error_re: Some(re.standard_error),
                standard_error_im: Some(im.standard_error),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> FrequencySet {
        FrequencySet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn independence_examples() {
        assert_eq!(
            independence_check(&set(&[1.0, 2f64.sqrt()]), 100).unwrap(),
            Independence::IndependentUpTo { bound: 100 }
        );
        assert_eq!(independence_check(&set(&[1.0, 2.0]), 5).unwrap(), Independence::Dependent { witness: vec![2, -1] });
        assert_eq!(independence_check(&set(&[3.7]), 1000).unwrap(), Independence::IndependentUpTo { bound: 1000 });
        // 3·(1/3) - 1 = 0, with 1/3 rounded
        assert_eq!(
            independence_check(&set(&[1.0, 1.0 / 3.0]), 4).unwrap(),
            Independence::Dependent { witness: vec![1, -3] }
        );
    }

    #[test]
    fn three_term_dependence() {
        let r = independence_check(&set(&[1.0, 2f64.sqrt(), 1.0 + 2f64.sqrt()]), 3).unwrap();
        assert_eq!(r, Independence::Dependent { witness: vec![1, 1, -1] });
    }

    #[test]
    fn budget_and_input_errors() {
        let e = independence_check(&set(&[1.0, 2.0, 3.0, 5.0]), 1000).unwrap_err();
        assert!(matches!(e, Error::BudgetExceeded { .. }));
        assert!(independence_check(&set(&[1.0]), 0).is_err());
        assert!(FrequencySet::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencySet::new(vec![0.0]).is_err());
        assert!(FrequencySet::new(vec![]).is_err());
        assert_eq!("1, 2.5".parse::<FrequencySet>().unwrap().freqs(), &[1.0, 2.5]);
    }

    #[test]
    fn haar_samples_are_deterministic_and_nested() {
        let g3 = set(&[1.0, 2f64.sqrt(), 3f64.sqrt()]);
        let a = haar_sample(&g3, 42);
        assert_eq!(a, haar_sample(&g3, 42));
        assert!(a.phases.iter().all(|&p| (0.0..2.0 * PI).contains(&p)));
        let g2 = set(&[1.0, 2f64.sqrt()]);
        assert_eq!(haar_sample(&g2, 42).phases, a.phases[..2]);
    }

    #[test]
    fn quadrature_examples() {
        let g = set(&[1.0, 2f64.sqrt()]);
        let q = HaarMethod::Quadrature { points: 16 };
        let one = haar_cylinder_integral(&g, |t| Integrand::One.eval(t), q).unwrap();
        assert_eq!(one.value(), Complex64::new(1.0, 0.0));
        let c = Integrand::Character(vec![1, 0]);
        assert!(haar_cylinder_integral(&g, |t| c.eval(t), q).unwrap().value().norm() < 1e-8);
        let c = Integrand::Character(vec![1, -1]);
        assert!(haar_cylinder_integral(&g, |t| c.eval(t), q).unwrap().value().norm() < 1e-8);
        let c2 = Integrand::Cos2(2);
        assert!((haar_cylinder_integral(&g, |t| c2.eval(t), q).unwrap().re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mc_integral() {
        let g = set(&[1.0]);
        let r = haar_cylinder_integral(
            &g,
            |t| Integrand::Character(vec![1]).eval(t),
            HaarMethod::Mc { n_samples: 100_000, seed: 3 },
        )
        .unwrap();
        assert!(r.re.abs() < 4.0 * r.standard_error_re.unwrap());
        assert!(r.im.abs() < 4.0 * r.standard_error_im.unwrap());
        let r = haar_cylinder_integral(&g, |t| Integrand::Abs2(1).eval(t), HaarMethod::Mc { n_samples: 1000, seed: 3 })
            .unwrap();
        assert_eq!(r.re, 1.0);
    }

    #[test]
    fn quadrature_dimension_limit() {
        let g = set(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(haar_cylinder_integral(&g, |_| Complex64::new(1.0, 0.0), HaarMethod::Quadrature { points: 4 }).is_err());
    }

    #[test]
    fn integrand_text_form() {
        for s in ["one", "char:1,-2,0", "cos2:2", "abs2:1"] {
            assert_eq!(s.parse::<Integrand>().unwrap().to_string(), s);
        }
        assert!("sin:1".parse::<Integrand>().is_err());
        assert!("cos2:0".parse::<Integrand>().is_err());
    }
}
