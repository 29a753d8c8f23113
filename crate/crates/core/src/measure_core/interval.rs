use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serde adapter for extended reals: numbers, or the strings `"inf"` / `"-inf"`.
pub mod ext_real {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn parse(raw: &str) -> Option<f64> {
        match raw.trim() {
            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            other => other.parse::<f64>().ok().filter(|v| v.is_finite()),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => {
                parse(&t).ok_or_else(|| de::Error::custom(format!("expected number, \"inf\" or \"-inf\", got {t:?}")))
            }
        }
    }
}

/// The half-open interval `(lo, hi]` of the extended real line.
///
/// The left-open convention makes interval probabilities `F(hi) - F(lo)` for
/// every component distribution, atoms included. `lo == hi` is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval(#[serde(with = "ext_real")] f64, #[serde(with = "ext_real")] f64);

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawInterval(self.lo, self.hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let RawInterval(lo, hi) = RawInterval::deserialize(d)?;
        Interval::new(lo, hi).map_err(de::Error::custom)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::input("interval endpoint is NaN"));
        }
        if lo > hi {
            return Err(Error::input(format!("malformed box: lo {lo} > hi {hi}")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn full() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_point(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }

    /// `other ⊆ self`.
    pub fn covers(&self, other: &Interval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }
}

/// A finite union of intervals, stored sorted, disjoint and non-adjacent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl From<Vec<Interval>> for IntervalUnion {
    fn from(parts: Vec<Interval>) -> Self {
        IntervalUnion::new(parts)
    }
}

impl From<IntervalUnion> for Vec<Interval> {
    fn from(u: IntervalUnion) -> Self {
        u.parts
    }
}

impl From<Interval> for IntervalUnion {
    fn from(i: Interval) -> Self {
        IntervalUnion::new(vec![i])
    }
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<Interval>) -> Self {
        parts.retain(|p| !p.is_empty());
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
                _ => merged.push(p),
            }
        }
        IntervalUnion { parts: merged }
    }

    /// Builds a union from `[lo, hi]` pairs, rejecting malformed ones.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let parts = pairs.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect::<Result<Vec<_>>>()?;
        Ok(IntervalUnion::new(parts))
    }

    pub fn full() -> Self {
        IntervalUnion { parts: vec![Interval::full()] }
    }

    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.parts.len() == 1 && self.parts[0] == Interval::full()
    }

    pub fn contains_point(&self, x: f64) -> bool {
        self.parts.iter().any(|p| p.contains_point(x))
    }

    /// `other ⊆ self`. Parts are maximal, so each part of `other` must sit
    /// inside a single part of `self`.
    pub fn covers(&self, other: &IntervalUnion) -> bool {
        other.parts.iter().all(|o| self.parts.iter().any(|s| s.covers(o)))
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo < hi {
                    out.push(Interval { lo, hi });
                }
            }
        }
        IntervalUnion::new(out)
    }
}
