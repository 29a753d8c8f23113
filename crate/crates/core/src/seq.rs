//! Finitely supported real sequences indexed by `1, 2, 3, ...`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real sequence that vanishes after some index.
///
/// Canonical form: indices strictly increasing, no explicit zeros. An absent
/// index means the value 0. JSON form is a list of `[index, value]` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u64, f64)>", into = "Vec<(u64, f64)>")]
pub struct FiniteSequence {
    entries: Vec<(u64, f64)>,
}

impl FiniteSequence {
    /// Builds a sequence from `(index, value)` pairs. Indices must be distinct
    /// and at least 1; values must be finite.
    pub fn new(mut entries: Vec<(u64, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::input(format!("duplicate index {}", w[0].0)));
            }
        }
        for &(i, v) in &entries {
            if i == 0 {
                return Err(Error::input("sequence indices start at 1"));
            }
            if !v.is_finite() {
                return Err(Error::input(format!("non-finite value {v} at index {i}")));
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(FiniteSequence { entries })
    }

    pub fn zero() -> Self {
        FiniteSequence::default()
    }

    /// The unit vector `e_k`.
    pub fn unit(k: u64) -> Result<Self> {
        FiniteSequence::new(vec![(k, 1.0)])
    }

    /// Dense values `v[0], v[1], ...` placed at indices `1, 2, ...`.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        FiniteSequence::new(values.iter().enumerate().map(|(i, &v)| (i as u64 + 1, v)).collect())
    }

    pub fn get(&self, index: u64) -> f64 {
        self.entries.binary_search_by_key(&index, |&(i, _)| i).map(|pos| self.entries[pos].1).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Largest index carrying a nonzero value, 0 for the zero sequence.
    pub fn max_index(&self) -> u64 {
        self.entries.last().map_or(0, |&(i, _)| i)
    }

    pub fn scale(&self, c: f64) -> Self {
        let entries = self.entries.iter().map(|&(i, v)| (i, c * v)).filter(|&(_, v)| v != 0.0).collect();
        FiniteSequence { entries }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Self {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(&&(i, x)), Some(&&(j, y))) => {
                    if i == j {
                        a.next();
                        b.next();
                        (i, op(x, y))
                    } else if i < j {
                        a.next();
                        (i, op(x, 0.0))
                    } else {
                        b.next();
                        (j, op(0.0, y))
                    }
                }
                (Some(&&(i, x)), None) => {
                    a.next();
                    (i, op(x, 0.0))
                }
                (None, Some(&&(j, y))) => {
                    b.next();
                    (j, op(0.0, y))
                }
                (None, None) => break,
            };
            if next.1 != 0.0 {
                out.push(next);
            }
        }
        FiniteSequence { entries: out }
    }

    /// `Σ_n w(n) ξ_n η_n` over the common support.
    pub fn weighted_dot<E>(&self, other: &Self, mut weight: impl FnMut(u64) -> Result<f64, E>) -> Result<f64, E> {
        let mut sum = 0.0;
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            if i == j {
                sum += weight(i)? * x * y;
                a.next();
                b.next();
            } else if i < j {
                a.next();
            } else {
                b.next();
            }
        }
        Ok(sum)
    }
}

impl TryFrom<Vec<(u64, f64)>> for FiniteSequence {
    type Error = Error;

    fn try_from(entries: Vec<(u64, f64)>) -> Result<Self> {
        FiniteSequence::new(entries)
    }
}

impl From<FiniteSequence> for Vec<(u64, f64)> {
    fn from(s: FiniteSequence) -> Self {
        s.entries
    }
}

impl fmt::Display for FiniteSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.entries.iter().map(|(i, v)| format!("{i}:{v}")).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Parses `e3` (unit vector), `0` (zero) or `1:0.5;4:-2` (index:value list).
impl FromStr for FiniteSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(FiniteSequence::zero());
        }
        if let Some(k) = s.strip_prefix('e') {
            let k: u64 = k.parse().map_err(|_| Error::input(format!("bad unit vector `{s}`")))?;
            return FiniteSequence::unit(k);
        }
        let mut entries = Vec::new();
        for part in s.split(';') {
            let (i, v) =
                part.split_once(':').ok_or_else(|| Error::input(format!("expected index:value, got `{part}`")))?;
            let i: u64 = i.trim().parse().map_err(|_| Error::input(format!("bad index `{i}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::input(format!("bad value `{v}`")))?;
            entries.push((i, v));
        }
        FiniteSequence::new(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_sorts_and_drops_zeros() {
        let s = FiniteSequence::new(vec![(3, 1.0), (1, 2.0), (2, 0.0)]).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(1, 2.0), (3, 1.0)]);
        assert_eq!(s.get(2), 0.0);
        assert_eq!(s.max_index(), 3);
    }

    #[test]
    fn rejects_duplicates_and_index_zero() {
        assert!(FiniteSequence::new(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(FiniteSequence::new(vec![(0, 1.0)]).is_err());
        assert!(FiniteSequence::new(vec![(1, f64::NAN)]).is_err());
    }

    #[test]
    fn arithmetic() {
        let a: FiniteSequence = "1:1;2:1".parse().unwrap();
        let b: FiniteSequence = "1:1;2:-1".parse().unwrap();
        assert_eq!(a.add(&b), FiniteSequence::new(vec![(1, 2.0)]).unwrap());
        assert_eq!(a.sub(&b), FiniteSequence::new(vec![(2, 2.0)]).unwrap());
        assert!(a.sub(&a).is_zero());
        let dot = a.weighted_dot(&b, |_| Ok::<_, Error>(1.0)).unwrap();
        assert_eq!(dot, 0.0);
    }

    #[test]
    fn parse_forms() {
        assert_eq!("e2".parse::<FiniteSequence>().unwrap(), FiniteSequence::unit(2).unwrap());
        assert!("0".parse::<FiniteSequence>().unwrap().is_zero());
        assert!("x".parse::<FiniteSequence>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = FiniteSequence::new(vec![(1, 0.5), (4, -2.0)]).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, "[[1,0.5],[4,-2.0]]");
        assert_eq!(serde_json::from_str::<FiniteSequence>(&text).unwrap(), s);
        assert!(serde_json::from_str::<FiniteSequence>("[[0,1.0]]").is_err());
    }
}
