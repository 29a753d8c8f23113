use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::interval::{Interval, IntervalUnion};
use crate::error::{Error, Result};

// low word of 1/sqrt(2) in double-double
const FRAC_1_SQRT_2_LO: f64 = -4.833646656726457e-17;

/// `erfc(z / sqrt(2))` with the rounding of the scaled argument corrected to
/// first order. Without the correction the relative error grows like
/// `z^2 * eps`, about 1e-14 at `z = 10`.
fn erfc_scaled(z: f64) -> f64 {
    let t = z * FRAC_1_SQRT_2;
    if !t.is_finite() {
        return libm::erfc(t);
    }
    let e = z.mul_add(FRAC_1_SQRT_2, -t) + z * FRAC_1_SQRT_2_LO;
    libm::erfc(t) - e * FRAC_2_SQRT_PI * (-t * t).exp()
}

/// Upper tail of the standard normal, `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc_scaled(z)
}

/// `P(Z <= z)` for a standard normal.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc_scaled(-z)
}

/// `P(a < Z <= b)` for a standard normal, evaluated through whichever tail
/// keeps the difference free of cancellation.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= b {
        0.0
    } else if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_sf(b)
    }
}

/// A probability measure on one coordinate axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Component1DMeasure {
    /// Centered Gaussian of variance `rho`.
    Gaussian {
        rho: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    PointMass {
        c: f64,
    },
}

impl Component1DMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Component1DMeasure::Gaussian { rho } if !(rho > 0.0 && rho.is_finite()) => {
                Err(Error::input(format!("gaussian variance must be finite and > 0, got {rho}")))
            }
            Component1DMeasure::Uniform { a, b } if !(a.is_finite() && b.is_finite() && a < b) => {
                Err(Error::input(format!("uniform needs finite a < b, got ({a}, {b})")))
            }
            Component1DMeasure::PointMass { c } if !c.is_finite() => {
                Err(Error::input(format!("point mass location must be finite, got {c}")))
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Component1DMeasure::Gaussian { rho } => normal_cdf(x / rho.sqrt()),
            Component1DMeasure::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Component1DMeasure::PointMass { c } => {
                if x >= c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn interval_prob(&self, i: &Interval) -> f64 {
        if i.is_empty() {
            return 0.0;
        }
        match *self {
            Component1DMeasure::Gaussian { rho } => {
                let s = rho.sqrt();
                normal_interval(i.lo() / s, i.hi() / s)
            }
            _ => self.cdf(i.hi()) - self.cdf(i.lo()),
        }
    }

    pub fn prob(&self, u: &IntervalUnion) -> f64 {
        let p: f64 = u.parts().iter().map(|i| self.interval_prob(i)).sum();
        p.clamp(0.0, 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Component1DMeasure::Gaussian { rho } => rho.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Component1DMeasure::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Component1DMeasure::PointMass { c } => c,
        }
    }
}

/// How each coordinate of `ℝ^ℕ` gets its factor measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProductMeasureSpec {
    Identical(Component1DMeasure),
    Indexed { components: BTreeMap<u64, Component1DMeasure>, default: Component1DMeasure },
}

impl ProductMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProductMeasureSpec::Identical(c) => c.validate(),
            ProductMeasureSpec::Indexed { components, default } => {
                if components.contains_key(&0) {
                    return Err(Error::input("coordinate indices start at 1"));
                }
                components.values().try_for_each(|c| c.validate())?;
                default.validate()
            }
        }
    }

    pub fn component(&self, index: u64) -> &Component1DMeasure {
        match self {
            ProductMeasureSpec::Identical(c) => c,
            ProductMeasureSpec::Indexed { components, default } => components.get(&index).unwrap_or(default),
        }
    }

    /// Largest index with its own component; beyond it every factor is the same.
    pub fn last_special_index(&self) -> u64 {
        match self {
            ProductMeasureSpec::Identical(_) => 0,
            ProductMeasureSpec::Indexed { components, .. } => components.keys().next_back().copied().unwrap_or(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tails_are_accurate() {
        // P(Z > 10) = 7.619853024160526e-24
        let p = normal_sf(10.0);
        let rel = (p - 7.619853024160526e-24).abs() / 7.619853024160526e-24;
        assert!(rel <= 1e-15, "relative error {rel:e}");
        for (z, q) in [(1.0, 0.15865525393145705), (5.0, 2.866515718791939e-7), (20.0, 2.7536241186062337e-89)] {
            let rel = (normal_sf(z) - q).abs() / q;
            assert!(rel <= 1e-15, "z = {z}: relative error {rel:e}");
        }
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_eq!(normal_interval(f64::NEG_INFINITY, f64::INFINITY), 1.0);
    }

    #[test]
    fn interval_probabilities() {
        let g = Component1DMeasure::Gaussian { rho: 1.0 };
        let left = Interval::new(f64::NEG_INFINITY, 0.0).unwrap();
        assert_eq!(g.interval_prob(&left), 0.5);
        let u = Component1DMeasure::Uniform { a: 0.0, b: 1.0 };
        assert_eq!(u.interval_prob(&Interval::new(0.0, 0.5).unwrap()), 0.5);
        assert_eq!(u.interval_prob(&Interval::new(-3.0, 9.0).unwrap()), 1.0);
        let pm = Component1DMeasure::PointMass { c: 1.0 };
        assert_eq!(pm.interval_prob(&Interval::new(0.0, 1.0).unwrap()), 1.0);
        assert_eq!(pm.interval_prob(&Interval::new(1.0, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn additivity_on_split_interval() {
        let g = Component1DMeasure::Gaussian { rho: 2.0 };
        let whole = g.interval_prob(&Interval::new(-1.0, 3.0).unwrap());
        let parts =
            g.interval_prob(&Interval::new(-1.0, 0.7).unwrap()) + g.interval_prob(&Interval::new(0.7, 3.0).unwrap());
        assert!((whole - parts).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Component1DMeasure::Gaussian { rho: 0.0 }.validate().is_err());
        assert!(Component1DMeasure::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(Component1DMeasure::PointMass { c: f64::INFINITY }.validate().is_err());
    }

    #[test]
    fn spec_json() {
        let s: ProductMeasureSpec = serde_json::from_str(r#"{"identical": {"gaussian": {"rho": 1.0}}}"#).unwrap();
        assert_eq!(s.component(7), &Component1DMeasure::Gaussian { rho: 1.0 });
        let s: ProductMeasureSpec = serde_json::from_str(
            r#"{"indexed": {"components": {"2": {"point_mass": {"c": 0.0}}}, "default": {"uniform": {"a": 0, "b": 1}}}}"#,
        )
        .unwrap();
        assert_eq!(s.component(2), &Component1DMeasure::PointMass { c: 0.0 });
        assert_eq!(s.component(3), &Component1DMeasure::Uniform { a: 0.0, b: 1.0 });
        assert_eq!(s.last_special_index(), 2);
    }
}
