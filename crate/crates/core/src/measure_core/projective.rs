use serde::{Deserialize, Serialize};

use super::component::ProductMeasureSpec;
use super::interval::Interval;
use crate::error::{Error, Result};

/// Tolerance for cell-by-cell agreement of marginal tables.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// A finite-dimensional marginal given on a product partition.
///
/// For each index the finite `cuts` `c_1 < ... < c_m` split the line into the
/// cells `(-∞, c_1], (c_1, c_2], ..., (c_m, ∞)`. `probs` lists the mass of
/// every product cell in row-major order (last index varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalTable {
    pub indices: Vec<u64>,
    pub cuts: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

fn cells_of(cuts: &[f64]) -> Vec<Interval> {
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(f64::NEG_INFINITY);
    edges.extend_from_slice(cuts);
    edges.push(f64::INFINITY);
    edges.windows(2).map(|w| Interval::new(w[0], w[1]).expect("cuts are sorted")).collect()
}

impl MarginalTable {
    pub fn validate(&self) -> Result<()> {
        if self.indices.len() != self.cuts.len() {
            return Err(Error::input("one cut list per index required"));
        }
        if self.indices.contains(&0) {
            return Err(Error::input("coordinate indices start at 1"));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("table indices must be strictly increasing"));
        }
        for c in &self.cuts {
            if c.iter().any(|v| !v.is_finite()) || c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input("cuts must be finite and strictly increasing"));
            }
        }
        if self.probs.len() != self.shape().iter().product::<usize>() {
            return Err(Error::input(format!(
                "table {:?} needs {} cells, got {}",
                self.indices,
                self.shape().iter().product::<usize>(),
                self.probs.len()
            )));
        }
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::input("cell masses must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cuts.iter().map(|c| c.len() + 1).collect()
    }

    /// The marginal of a product measure on the given partition.
    pub fn from_product(spec: &ProductMeasureSpec, indices: Vec<u64>, cuts: Vec<Vec<f64>>) -> Result<Self> {
        let mut table = MarginalTable { indices, cuts, probs: Vec::new() };
        let per_axis: Vec<Vec<f64>> = table
            .indices
            .iter()
            .zip(&table.cuts)
            .map(|(&i, c)| cells_of(c).iter().map(|cell| spec.component(i).interval_prob(cell)).collect())
            .collect();
        let mut probs = vec![1.0];
        for axis in &per_axis {
            probs = probs.iter().flat_map(|p| axis.iter().map(move |q| p * q)).collect();
        }
        table.probs = probs;
        table.validate()?;
        Ok(table)
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    }

    fn ravel(shape: &[usize], idx: &[usize]) -> usize {
        idx.iter().zip(shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    /// Sums out every index not in `keep` and merges cells down to the
    /// partitions `keep_cuts`, which must be coarsenings of this table's.
    pub fn project(&self, keep: &[u64], keep_cuts: &[Vec<f64>]) -> Result<MarginalTable> {
        let mut axis_maps: Vec<(usize, Vec<usize>)> = Vec::with_capacity(keep.len());
        for (&index, target) in keep.iter().zip(keep_cuts) {
            let d = self
                .indices
                .iter()
                .position(|&i| i == index)
                .ok_or_else(|| Error::input(format!("index {index} missing from the larger table")))?;
            let own = &self.cuts[d];
            // cell j of `own` lies in the target cell counting target cuts < its upper edge
            if let Some(c) = target.iter().find(|c| !own.contains(c)) {
                return Err(Error::input(format!(
                    "partition at index {index} is not a coarsening: cut {c} absent from the larger table"
                )));
            }
            let map = (0..=own.len())
                .map(|j| match own.get(j) {
                    Some(upper) => target.iter().filter(|c| *c < upper).count(),
                    None => target.len(),
                })
                .collect();
            axis_maps.push((d, map));
        }
        let out_shape: Vec<usize> = keep_cuts.iter().map(|c| c.len() + 1).collect();
        let mut probs = vec![0.0; out_shape.iter().product()];
        for (flat, p) in self.probs.iter().enumerate() {
            let idx = self.unravel(flat);
            let target: Vec<usize> = axis_maps.iter().map(|(d, map)| map[idx[*d]]).collect();
            probs[Self::ravel(&out_shape, &target)] += p;
        }
        Ok(MarginalTable { indices: keep.to_vec(), cuts: keep_cuts.to_vec(), probs })
    }
}

/// First disagreement found by [`consistency_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub smaller: Vec<u64>,
    pub larger: Vec<u64>,
    /// Multi-index of the offending cell in the smaller table.
    pub cell: Vec<usize>,
    /// Mass obtained by marginalizing the larger table.
    pub expected: f64,
    pub found: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub consistent: bool,
    pub violation: Option<Violation>,
}

/// Checks that a chain of marginals is self-consistent: marginalizing each
/// larger table over its extra indices reproduces every smaller one to
/// within [`CONSISTENCY_TOL`].
pub fn consistency_check(tables: &[MarginalTable]) -> Result<Consistency> {
    for t in tables {
        t.validate()?;
    }
    let mut order: Vec<&MarginalTable> = tables.iter().collect();
    order.sort_by_key(|t| t.indices.len());
    for w in order.windows(2) {
        if !w[0].indices.iter().all(|i| w[1].indices.contains(i)) {
            return Err(Error::input(format!(
                "index sets do not form a chain: {:?} is not contained in {:?}",
                w[0].indices, w[1].indices
            )));
        }
    }
    for (a, small) in order.iter().enumerate() {
        for large in &order[a + 1..] {
            let projected = large.project(&small.indices, &small.cuts)?;
            for (flat, (&exp, &got)) in projected.probs.iter().zip(&small.probs).enumerate() {
                if (exp - got).abs() > CONSISTENCY_TOL {
                    return Ok(Consistency {
                        consistent: false,
                        violation: Some(Violation {
                            smaller: small.indices.clone(),
                            larger: large.indices.clone(),
                            cell: small.unravel(flat),
                            expected: exp,
                            found: got,
                        }),
                    });
                }
            }
        }
    }
    Ok(Consistency { consistent: true, violation: None })
}
