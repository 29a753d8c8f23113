use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::component::ProductMeasureSpec;
use super::interval::IntervalUnion;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseEntry {
    pub index: u64,
    pub boxes: IntervalUnion,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCylinder {
    base: Vec<BaseEntry>,
}

/// The set `{x ∈ ℝ^ℕ : x_i ∈ B_i for every i in the base}`.
///
/// Stored sorted by index; repeated indices are intersected on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCylinder")]
pub struct CylinderSet {
    base: Vec<BaseEntry>,
}

impl TryFrom<RawCylinder> for CylinderSet {
    type Error = Error;

    fn try_from(raw: RawCylinder) -> Result<Self> {
        CylinderSet::new(raw.base.into_iter().map(|e| (e.index, e.boxes)).collect())
    }
}

impl CylinderSet {
    pub fn new(entries: Vec<(u64, IntervalUnion)>) -> Result<Self> {
        let mut map: BTreeMap<u64, IntervalUnion> = BTreeMap::new();
        for (index, boxes) in entries {
            if index == 0 {
                return Err(Error::input("coordinate indices start at 1"));
            }
            match map.get_mut(&index) {
                Some(existing) => *existing = existing.intersect(&boxes),
                None => {
                    map.insert(index, boxes);
                }
            }
        }
        Ok(CylinderSet { base: map.into_iter().map(|(index, boxes)| BaseEntry { index, boxes }).collect() })
    }

    /// The whole space (empty base).
    pub fn whole() -> Self {
        CylinderSet { base: Vec::new() }
    }

    pub fn base(&self) -> &[BaseEntry] {
        &self.base
    }

    /// Box constraint at `index`; the full line when unconstrained.
    pub fn boxes_at(&self, index: u64) -> IntervalUnion {
        self.base
            .binary_search_by_key(&index, |e| e.index)
            .map(|pos| self.base[pos].boxes.clone())
            .unwrap_or_else(|_| IntervalUnion::full())
    }

    pub fn is_empty(&self) -> bool {
        self.base.iter().any(|e| e.boxes.is_empty())
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.base.iter().map(|e| e.index)
    }

    pub fn intersect(&self, other: &CylinderSet) -> CylinderSet {
        let entries = self.base.iter().chain(other.base.iter()).map(|e| (e.index, e.boxes.clone())).collect();
        CylinderSet::new(entries).expect("indices already validated")
    }

    /// `other ⊆ self`, decided after refining both sets to the union of
    /// their bases (an index missing from a base constrains nothing).
    pub fn contains(&self, other: &CylinderSet) -> bool {
        if other.is_empty() {
            return true;
        }
        let mut idx: Vec<u64> = self.indices().chain(other.indices()).collect();
        idx.sort_unstable();
        idx.dedup();
        idx.into_iter().all(|i| self.boxes_at(i).covers(&other.boxes_at(i)))
    }
}

/// Product-measure probability of a cylinder set: the product over the base
/// of each coordinate's component probability.
pub fn cylinder_measure(spec: &ProductMeasureSpec, c: &CylinderSet) -> f64 {
    c.base.iter().map(|e| spec.component(e.index).prob(&e.boxes)).product()
}

/// Result of [`increasing_limit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreasingLimit {
    /// `sup_n μ(C_n)`, attained at the last set of a finite chain.
    pub value: f64,
    /// 1-based position where the supremum is attained.
    pub attained_at: usize,
    pub measures: Vec<f64>,
}

/// Measure of the union of an increasing chain of cylinder sets, as the
/// supremum of the measures along the chain.
pub fn increasing_limit(spec: &ProductMeasureSpec, chain: &[CylinderSet]) -> Result<IncreasingLimit> {
    if chain.is_empty() {
        return Err(Error::input("chain is empty"));
    }
    for (k, w) in chain.windows(2).enumerate() {
        if !w[1].contains(&w[0]) {
            return Err(Error::Precondition(format!(
                "chain not increasing: set {} is not contained in set {}",
                k + 1,
                k + 2
            )));
        }
    }
    let measures: Vec<f64> = chain.iter().map(|c| cylinder_measure(spec, c)).collect();
    let (mut best, mut at) = (measures[0], 0);
    for (k, &m) in measures.iter().enumerate() {
        if m >= best {
            best = m;
            at = k;
        }
    }
    Ok(IncreasingLimit { value: best, attained_at: at + 1, measures })
}
