//! Closed-form sequence classes and exact series-convergence decisions.
//!
//! Every closed-form class reduces, after finitely many prefix entries, to a
//! finite sum of monomials `c · n^p · q^n` with `q > 0`. Sums, products and
//! quotients of such tails are ordered by growth rate (first `q`, then `p`),
//! and a series of nonnegative terms converges iff its leading monomial does:
//! `q < 1`, or `q = 1` and `p < -1`. Prefix entries never affect the answer.
//! Tabulated sequences carry no tail and every decision on them is refused.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to identify growth rates and cancelling
/// coefficients in symbolic arithmetic.
pub const SYMBOLIC_TOL: f64 = 1e-12;

/// A real sequence `s_1, s_2, ...` given by a closed-form class.
///
/// JSON: `{"constant": {"rho": 1.0}}`, `{"power": {"c": 1.0, "p": 2.0}}`
/// (`c·n^-p`), `{"geometric": {"c": 1.0, "q": 0.5}}` (`c·q^n`),
/// `{"prefixed": {"prefix": [..], "tail": {..}}}`, `{"sum": [..]}`,
/// `{"product": [..]}`, `{"tabulated": {"values": [..]}}`.
///
/// Prefix entries replace the first values and the tail keeps its absolute
/// indexing: `prefixed([a, b], t)` is `a, b, t_3, t_4, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeqClass {
    Constant {
        #[serde(alias = "c", alias = "value")]
        rho: f64,
    },
    Power {
        c: f64,
        p: f64,
    },
    Geometric {
        c: f64,
        q: f64,
    },
    Prefixed {
        prefix: Vec<f64>,
        tail: Box<SeqClass>,
    },
    Sum(Vec<SeqClass>),
    Product(Vec<SeqClass>),
    Tabulated {
        values: Vec<f64>,
    },
}

/// Which signs a class may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRule {
    /// Every entry strictly positive (covariances, diagonal operators).
    Positive,
    /// Any finite real (shifts).
    Any,
}

impl SeqClass {
    pub fn constant(rho: f64) -> Self {
        SeqClass::Constant { rho }
    }

    pub fn power(c: f64, p: f64) -> Self {
        SeqClass::Power { c, p }
    }

    pub fn geometric(c: f64, q: f64) -> Self {
        SeqClass::Geometric { c, q }
    }

    pub fn prefixed(prefix: Vec<f64>, tail: SeqClass) -> Self {
        SeqClass::Prefixed { prefix, tail: Box::new(tail) }
    }

    pub fn tabulated(values: Vec<f64>) -> Self {
        SeqClass::Tabulated { values }
    }

    pub fn validate(&self, sign: SignRule) -> Result<()> {
        let check = |v: f64, what: &str| -> Result<()> {
            if !v.is_finite() {
                return Err(Error::input(format!("{what} must be finite, got {v}")));
            }
            if sign == SignRule::Positive && v <= 0.0 {
                return Err(Error::input(format!("{what} must be > 0, got {v}")));
            }
            Ok(())
        };
        match self {
            SeqClass::Constant { rho } => check(*rho, "constant value"),
            SeqClass::Power { c, p } => {
                check(*c, "power amplitude c")?;
                if !p.is_finite() {
                    return Err(Error::input(format!("power exponent p must be finite, got {p}")));
                }
                Ok(())
            }
            SeqClass::Geometric { c, q } => {
                check(*c, "geometric amplitude c")?;
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(Error::input(format!("geometric ratio q must lie in (0,1), got {q}")));
                }
                Ok(())
            }
            SeqClass::Prefixed { prefix, tail } => {
                for v in prefix {
                    check(*v, "prefix entry")?;
                }
                tail.validate(sign)
            }
            SeqClass::Sum(terms) | SeqClass::Product(terms) => {
                if terms.is_empty() {
                    return Err(Error::input("sum/product needs at least one term"));
                }
                terms.iter().try_for_each(|t| t.validate(sign))
            }
            SeqClass::Tabulated { values } => {
                if values.is_empty() {
                    return Err(Error::input("tabulated sequence is empty"));
                }
                values.iter().try_for_each(|v| check(*v, "tabulated entry"))
            }
        }
    }

    /// The value at index `n >= 1`; `None` past the end of a table.
    pub fn value(&self, n: u64) -> Option<f64> {
        debug_assert!(n >= 1);
        match self {
            SeqClass::Constant { rho } => Some(*rho),
            SeqClass::Power { c, p } => Some(c * (n as f64).powf(-p)),
            SeqClass::Geometric { c, q } => Some(c * q.powf(n as f64)),
            SeqClass::Prefixed { prefix, tail } => match prefix.get(n as usize - 1) {
                Some(v) => Some(*v),
                None => tail.value(n),
            },
            SeqClass::Sum(terms) => terms.iter().map(|t| t.value(n)).sum(),
            SeqClass::Product(terms) => terms.iter().map(|t| t.value(n)).product(),
            SeqClass::Tabulated { values } => values.get(n as usize - 1).copied(),
        }
    }

    /// Number of indices on which the sequence is known; `None` = all of them.
    pub fn known_len(&self) -> Option<u64> {
        match self {
            SeqClass::Tabulated { values } => Some(values.len() as u64),
            SeqClass::Prefixed { prefix, tail } => tail.known_len().map(|l| l.max(prefix.len() as u64)),
            SeqClass::Sum(t) | SeqClass::Product(t) => t.iter().filter_map(|x| x.known_len()).min(),
            _ => None,
        }
    }

    /// The closed-form tail, or `None` if any part is tabulated.
    pub fn tail_form(&self) -> Option<ExpSum> {
        match self {
            SeqClass::Constant { rho } => Some(ExpSum::monomial(*rho, 0.0, 1.0)),
            SeqClass::Power { c, p } => Some(ExpSum::monomial(*c, -p, 1.0)),
            SeqClass::Geometric { c, q } => Some(ExpSum::monomial(*c, 0.0, *q)),
            SeqClass::Prefixed { tail, .. } => tail.tail_form(),
            SeqClass::Sum(terms) => {
                let mut acc = ExpSum::zero();
                for t in terms {
                    acc = acc.add(&t.tail_form()?);
                }
                Some(acc)
            }
            SeqClass::Product(terms) => {
                let mut acc = ExpSum::monomial(1.0, 0.0, 1.0);
                for t in terms {
                    acc = acc.mul(&t.tail_form()?);
                }
                Some(acc)
            }
            SeqClass::Tabulated { .. } => None,
        }
    }
}

/// `coef · n^power · base^n` with `base > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub power: f64,
    pub base: f64,
}

/// Limit of `|m_n|` as `n → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Zero,
    Finite(f64),
    Infinite,
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYMBOLIC_TOL * a.abs().max(b.abs()).max(1.0)
}

impl Monomial {
    pub fn eval(&self, n: u64) -> f64 {
        let n = n as f64;
        self.coef * (self.power * n.ln() + n * self.base.ln()).exp()
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        Monomial { coef: self.coef * o.coef, power: self.power + o.power, base: self.base * o.base }
    }

    pub fn div(&self, o: &Monomial) -> Monomial {
        Monomial { coef: self.coef / o.coef, power: self.power - o.power, base: self.base / o.base }
    }

    fn same_rate(&self, o: &Monomial) -> bool {
        approx_eq(self.base, o.base) && approx_eq(self.power, o.power)
    }

    /// Growth order: larger base dominates, then larger power.
    fn rate_cmp(&self, o: &Monomial) -> Ordering {
        if !approx_eq(self.base, o.base) {
            return self.base.total_cmp(&o.base);
        }
        if !approx_eq(self.power, o.power) {
            return self.power.total_cmp(&o.power);
        }
        Ordering::Equal
    }

    pub fn limit(&self) -> Limit {
        let unit = Monomial { coef: 1.0, power: 0.0, base: 1.0 };
        match self.rate_cmp(&unit) {
            Ordering::Less => Limit::Zero,
            Ordering::Equal => Limit::Finite(self.coef.abs()),
            Ordering::Greater => Limit::Infinite,
        }
    }

    /// Whether `Σ |m_n|` converges.
    pub fn summable(&self) -> bool {
        if approx_eq(self.base, 1.0) {
            self.power < -1.0 && !approx_eq(self.power, -1.0)
        } else {
            self.base < 1.0
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coef)?;
        if self.power != 0.0 {
            write!(f, "*n^{}", self.power)?;
        }
        if self.base != 1.0 {
            write!(f, "*{}^n", self.base)?;
        }
        Ok(())
    }
}

/// A finite sum of monomials, kept sorted from the dominant term down with
/// like terms merged and cancelled terms removed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpSum {
    terms: Vec<Monomial>,
}

impl ExpSum {
    pub fn zero() -> Self {
        ExpSum::default()
    }

    pub fn monomial(coef: f64, power: f64, base: f64) -> Self {
        ExpSum::from_terms(vec![Monomial { coef, power, base }])
    }

    fn from_terms(mut raw: Vec<Monomial>) -> Self {
        raw.sort_by(|a, b| b.base.total_cmp(&a.base).then(b.power.total_cmp(&a.power)));
        let mut terms: Vec<Monomial> = Vec::new();
        let mut scales: Vec<f64> = Vec::new();
        for m in raw {
            if m.coef == 0.0 {
                continue;
            }
            match terms.last_mut() {
                Some(last) if last.same_rate(&m) => {
                    last.coef += m.coef;
                    *scales.last_mut().unwrap() += m.coef.abs();
                }
                _ => {
                    terms.push(m);
                    scales.push(m.coef.abs());
                }
            }
        }
        let terms =
            terms.into_iter().zip(scales).filter(|(m, s)| m.coef.abs() > SYMBOLIC_TOL * s).map(|(m, _)| m).collect();
        ExpSum { terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// The dominant term; `None` when the tail is identically zero.
    pub fn leading(&self) -> Option<Monomial> {
        self.terms.first().copied()
    }

    pub fn eval(&self, n: u64) -> f64 {
        self.terms.iter().map(|m| m.eval(n)).sum()
    }

    pub fn add(&self, o: &ExpSum) -> ExpSum {
        ExpSum::from_terms(self.terms.iter().chain(o.terms.iter()).copied().collect())
    }

    pub fn scale(&self, c: f64) -> ExpSum {
        ExpSum::from_terms(self.terms.iter().map(|m| Monomial { coef: c * m.coef, ..*m }).collect())
    }

    pub fn sub(&self, o: &ExpSum) -> ExpSum {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &ExpSum) -> ExpSum {
        let mut out = Vec::with_capacity(self.terms.len() * o.terms.len());
        for a in &self.terms {
            for b in &o.terms {
                out.push(a.mul(b));
            }
        }
        ExpSum::from_terms(out)
    }
}

/// Leading behaviour of a quotient or product of tails; `None` = eventually 0.
pub type Leading = Option<Monomial>;

/// Leading term of `num / den`. `den` must not vanish identically.
pub fn leading_ratio(num: &ExpSum, den: &ExpSum) -> Result<Leading> {
    let d = den.leading().ok_or_else(|| Error::input("denominator tail vanishes identically"))?;
    Ok(num.leading().map(|n| n.div(&d)))
}

/// Exact convergence decision for a series of nonnegative terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDecision {
    pub converges: bool,
    /// The leading asymptotic term of the summand, e.g. `1*n^-2`.
    pub leading_term: Option<String>,
}

impl SeriesDecision {
    /// Decides `Σ t_n` for nonnegative `t_n` with the given leading term.
    pub fn of_leading(lead: Leading) -> Self {
        match lead {
            None => SeriesDecision { converges: true, leading_term: Some("0".into()) },
            Some(m) => SeriesDecision { converges: m.summable(), leading_term: Some(m.to_string()) },
        }
    }
}

/// Partial sums of `term(1) + term(2) + ...` reported at powers of two and
/// at `n_max`.
pub fn partial_sum_trace(n_max: u64, mut term: impl FnMut(u64) -> f64) -> Vec<(u64, f64)> {
    let mut trace = Vec::new();
    let mut sum = 0.0;
    let mut next = 1;
    for n in 1..=n_max {
        sum += term(n);
        if n == next || n == n_max {
            trace.push((n, sum));
            next *= 2;
        }
    }
    trace
}
