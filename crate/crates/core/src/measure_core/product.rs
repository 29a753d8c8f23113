use serde::{Deserialize, Serialize};

use super::component::ProductMeasureSpec;
use super::interval::IntervalUnion;
use crate::error::{Error, Result};

/// The constraint `ω_k` on coordinates past the explicit prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TailRule {
    /// `ω_k = ℝ`: the constraint is cylindrical.
    Full,
    /// The same box at every tail index, measured by that index's component.
    SameBox(IntervalUnion),
    /// `μ(ω_k) = p` for every tail index.
    ConstantFactor { p: f64 },
    /// `μ(ω_k) = 1 - c·q^k`.
    OneMinusGeometric { c: f64, q: f64 },
    /// `μ(ω_k) = 1 - c·k^{-p}`.
    OneMinusPower { c: f64, p: f64 },
    /// Explicit factors for the indices following the prefix, then `ℝ`.
    Tabulated { factors: Vec<f64> },
}

/// A countable box constraint: explicit boxes on `1..=N`, then a tail rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountableConstraint {
    pub prefix: Vec<IntervalUnion>,
    pub tail: TailRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductOptions {
    /// Factor budget for closed-form tail rules.
    pub n_max_closed: u64,
    /// Factor budget for tabulated tails.
    pub n_max_tabulated: u64,
    /// Absolute tolerance on the limit.
    pub tol: f64,
}

impl Default for ProductOptions {
    fn default() -> Self {
        ProductOptions { n_max_closed: 1_000_000, n_max_tabulated: 10_000, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum LimitVerdict {
    /// The limit lies in `[value - error_bound, value]`.
    Converged { error_bound: f64 },
    /// The factor budget ran out before the tail could be bounded.
    DecreasingUnconverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductLimit {
    /// Last partial product; partial products never increase.
    pub value: f64,
    pub factors_used: u64,
    pub verdict: LimitVerdict,
}

impl TailRule {
    fn validate(&self) -> Result<()> {
        let unit = |v: f64, what: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::input(format!("{what} must lie in [0,1], got {v}")))
            }
        };
        match self {
            TailRule::Full | TailRule::SameBox(_) => Ok(()),
            TailRule::ConstantFactor { p } => unit(*p, "factor"),
            TailRule::OneMinusGeometric { c, q } => {
                unit(*c, "geometric deficit c")?;
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(Error::input(format!("q must lie in (0,1), got {q}")));
                }
                Ok(())
            }
            TailRule::OneMinusPower { c, p } => {
                unit(*c, "power deficit c")?;
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(Error::input(format!("p must be finite and > 0, got {p}")));
                }
                Ok(())
            }
            TailRule::Tabulated { factors } => factors.iter().try_for_each(|f| unit(*f, "tabulated factor")),
        }
    }

    fn is_tabulated(&self) -> bool {
        matches!(self, TailRule::Tabulated { .. })
    }
}

struct TailEval<'a> {
    rule: &'a TailRule,
    spec: &'a ProductMeasureSpec,
    prefix_len: u64,
}

impl TailEval<'_> {
    fn factor(&self, k: u64) -> f64 {
        match self.rule {
            TailRule::Full => 1.0,
            TailRule::SameBox(b) => self.spec.component(k).prob(b),
            TailRule::ConstantFactor { p } => *p,
            TailRule::OneMinusGeometric { c, q } => 1.0 - c * q.powf(k as f64),
            TailRule::OneMinusPower { c, p } => 1.0 - c * (k as f64).powf(-p),
            TailRule::Tabulated { factors } => factors.get((k - self.prefix_len - 1) as usize).copied().unwrap_or(1.0),
        }
    }

    /// An upper bound on `Σ_{j>k} (1 - μ(ω_j))`, when one is available.
    fn deficit_tail(&self, k: u64) -> Option<f64> {
        match self.rule {
            TailRule::Full => Some(0.0),
            TailRule::SameBox(b) => {
                if k < self.spec.last_special_index() {
                    return None;
                }
                let f = self.spec.component(k + 1).prob(b);
                if f == 1.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            TailRule::ConstantFactor { p } => (*p == 1.0).then_some(0.0),
            TailRule::OneMinusGeometric { c, q } => Some(c * q.powf(k as f64 + 1.0) / (1.0 - q)),
            // Σ_{j>k} j^{-p} <= k^{1-p}/(p-1) for p > 1.
            TailRule::OneMinusPower { c, p } => (*p > 1.0 && k >= 1).then(|| c * (k as f64).powf(1.0 - p) / (p - 1.0)),
            TailRule::Tabulated { factors } => (k >= self.prefix_len + factors.len() as u64).then_some(0.0),
        }
    }
}

/// Probability of a countable box constraint under a product measure, as the
/// limit of the partial products `∏_{k<=n} μ^k(ω_k)`.
///
/// Partial products never increase. The run stops once the remaining factors
/// provably change the product by at most `opts.tol` (via a bound on the sum
/// of their deficits, or because the product itself fell below `tol`), or
/// reports `DecreasingUnconverged` when the factor budget is exhausted first.
pub fn countable_product_measure(
    spec: &ProductMeasureSpec,
    constraint: &CountableConstraint,
    opts: ProductOptions,
) -> Result<ProductLimit> {
    spec.validate()?;
    constraint.tail.validate()?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::input(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let n_prefix = constraint.prefix.len() as u64;
    let mut partial = 1.0;
    for (k, boxes) in constraint.prefix.iter().enumerate() {
        partial *= spec.component(k as u64 + 1).prob(boxes);
    }
    let tail = TailEval { rule: &constraint.tail, spec, prefix_len: n_prefix };
    let budget = if constraint.tail.is_tabulated() { opts.n_max_tabulated } else { opts.n_max_closed };

    let mut k = n_prefix;
    loop {
        if partial <= opts.tol {
            return Ok(ProductLimit {
                value: partial,
                factors_used: k,
                verdict: LimitVerdict::Converged { error_bound: partial },
            });
        }
        if let Some(deficit) = tail.deficit_tail(k) {
            let bound = partial * deficit.min(1.0);
            if bound <= opts.tol {
                return Ok(ProductLimit {
                    value: partial,
                    factors_used: k,
                    verdict: LimitVerdict::Converged { error_bound: bound },
                });
            }
        }
        if k >= budget {
            return Ok(ProductLimit { value: partial, factors_used: k, verdict: LimitVerdict::DecreasingUnconverged });
        }
        k += 1;
        partial *= tail.factor(k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_core::component::Component1DMeasure;

    fn uniform() -> ProductMeasureSpec {
        ProductMeasureSpec::Identical(Component1DMeasure::Uniform { a: 0.0, b: 1.0 })
    }

    fn half() -> IntervalUnion {
        IntervalUnion::from_pairs(&[(0.0, 0.5)]).unwrap()
    }

    #[test]
    fn finite_prefix_then_full() {
        let c = CountableConstraint { prefix: vec![half(), half()], tail: TailRule::Full };
        let r = countable_product_measure(&uniform(), &c, ProductOptions::default()).unwrap();
        assert_eq!(r.value, 0.25);
        assert_eq!(r.verdict, LimitVerdict::Converged { error_bound: 0.0 });
    }

    #[test]
    fn euler_function_at_one_half() {
        // ∏_{k>=1} (1 - 2^-k), reference from 200 factors multiplied directly.
        let reference: f64 = (1..=200).map(|k| 1.0 - 0.5f64.powi(k)).product();
        let c = CountableConstraint { prefix: vec![], tail: TailRule::OneMinusGeometric { c: 1.0, q: 0.5 } };
        let r = countable_product_measure(&uniform(), &c, ProductOptions::default()).unwrap();
        assert!((r.value - reference).abs() < 1e-12);
        assert!((r.value - 0.288_788_095_086_602_4).abs() < 1e-12);
        assert!(matches!(r.verdict, LimitVerdict::Converged { .. }));
    }

    #[test]
    fn halves_go_to_zero() {
        let c = CountableConstraint { prefix: vec![], tail: TailRule::SameBox(half()) };
        let r = countable_product_measure(&uniform(), &c, ProductOptions::default()).unwrap();
        assert!(r.value <= 1e-12);
        assert_eq!(r.factors_used, 40);
    }

    #[test]
    fn slowly_vanishing_product_is_reported_unconverged() {
        // ∏ (1 - 1/(2k)) ~ k^{-1/2}: still ~1e-3 after 10^6 factors.
        let c = CountableConstraint { prefix: vec![], tail: TailRule::OneMinusPower { c: 0.5, p: 1.0 } };
        let r = countable_product_measure(&uniform(), &c, ProductOptions::default()).unwrap();
        assert_eq!(r.verdict, LimitVerdict::DecreasingUnconverged);
        assert_eq!(r.factors_used, 1_000_000);
    }

    #[test]
    fn summable_power_deficits_converge() {
        let c = CountableConstraint { prefix: vec![], tail: TailRule::OneMinusPower { c: 0.5, p: 3.0 } };
        let opts = ProductOptions { tol: 1e-9, ..Default::default() };
        let r = countable_product_measure(&uniform(), &c, opts).unwrap();
        let reference: f64 = (1..=200_000u64).map(|k| 1.0 - 0.5 * (k as f64).powi(-3)).product();
        assert!((r.value - reference).abs() < 1e-9);
    }

    #[test]
    fn tabulated_tail() {
        let c = CountableConstraint { prefix: vec![half()], tail: TailRule::Tabulated { factors: vec![0.5, 0.5] } };
        let r = countable_product_measure(&uniform(), &c, ProductOptions::default()).unwrap();
        assert_eq!(r.value, 0.125);
        assert_eq!(r.factors_used, 3);
    }

    #[test]
    fn partial_products_decrease() {
        let tail = TailRule::OneMinusGeometric { c: 0.3, q: 0.9 };
        let spec = uniform();
        let eval = TailEval { rule: &tail, spec: &spec, prefix_len: 0 };
        let mut p = 1.0;
        for k in 1..500 {
            let next = p * eval.factor(k);
            assert!(next <= p);
            p = next;
        }
    }

    #[test]
    fn rejects_bad_factors() {
        let c = CountableConstraint { prefix: vec![], tail: TailRule::ConstantFactor { p: 1.5 } };
        assert!(countable_product_measure(&uniform(), &c, ProductOptions::default()).is_err());
    }
}
