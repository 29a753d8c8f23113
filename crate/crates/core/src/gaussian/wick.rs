use serde::{Deserialize, Serialize};

use super::{inner, CovarianceSeq};
use crate::error::{Error, Result};
use crate::seq::FiniteSequence;

/// Largest moment order enumerated by default; `19!! ≈ 6.5e8` pairings.
pub const PAIRING_CAP: usize = 20;

/// A perfect matching of the labels `1..=2n`, pairs `(i, j)` with `i < j`
/// sorted by first element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
}

/// `k!! = k (k-2) (k-4) ...`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(k: i64) -> u128 {
    let mut acc: u128 = 1;
    let mut j = k;
    while j > 1 {
        acc *= j as u128;
        j -= 2;
    }
    acc
}

/// Lazy enumeration of every pairing of `1..=2n` in canonical order.
///
/// A pairing is encoded as one choice per level: at level `l` the smallest
/// unpaired label is matched with the `(c_l + 1)`-th smallest remaining one.
/// Counting the choice vector up like a mixed-radix number walks the pairings
/// in lexicographic order.
#[derive(Debug, Clone)]
pub struct Pairings {
    n_pairs: usize,
    choices: Vec<usize>,
    done: bool,
}

impl Pairings {
    fn radix(&self, level: usize) -> usize {
        2 * (self.n_pairs - level) - 1
    }

    fn decode(&self) -> Pairing {
        let mut remaining: Vec<usize> = (1..=2 * self.n_pairs).collect();
        let mut pairs = Vec::with_capacity(self.n_pairs);
        for &c in &self.choices {
            let partner = remaining.remove(1 + c);
            let first = remaining.remove(0);
            pairs.push((first, partner));
        }
        Pairing { pairs }
    }
}

impl Iterator for Pairings {
    type Item = Pairing;

    fn next(&mut self) -> Option<Pairing> {
        if self.done {
            return None;
        }
        let out = self.decode();
        let mut level = self.n_pairs;
        loop {
            if level == 0 {
                self.done = true;
                break;
            }
            level -= 1;
            if self.choices[level] + 1 < self.radix(level) {
                self.choices[level] += 1;
                break;
            }
            self.choices[level] = 0;
        }
        Some(out)
    }
}

/// All pairings of `1..=two_n`, capped at [`PAIRING_CAP`] labels.
pub fn pairings(two_n: usize) -> Result<Pairings> {
    pairings_with_cap(two_n, PAIRING_CAP)
}

pub fn pairings_with_cap(two_n: usize, cap: usize) -> Result<Pairings> {
    if !two_n.is_multiple_of(2) {
        return Err(Error::input(format!("pairings need an even number of labels, got {two_n}")));
    }
    if two_n > cap {
        return Err(Error::input(format!("{two_n} labels exceed the pairing cap {cap}")));
    }
    Ok(Pairings { n_pairs: two_n / 2, choices: vec![0; two_n / 2], done: false })
}

fn gram(cov: &CovarianceSeq, xs: &[FiniteSequence]) -> Result<Vec<Vec<f64>>> {
    let k = xs.len();
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = inner(&xs[i], &xs[j], cov)?;
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

fn check_len(len: usize) -> Result<()> {
    if len > PAIRING_CAP {
        return Err(Error::input(format!("{len} factors exceed the moment cap {PAIRING_CAP}")));
    }
    Ok(())
}

/// `∫ φ(ξ_1) ... φ(ξ_k) dμ_ρ`: zero for odd `k`, otherwise the sum over all
/// pairings of the products of covariances of the paired factors.
///
/// Evaluated as a hafnian by dynamic programming over subsets of factors,
/// `O(2^k k)` rather than `(k-1)!!`.
pub fn wick_moment(cov: &CovarianceSeq, xs: &[FiniteSequence]) -> Result<f64> {
    check_len(xs.len())?;
    let k = xs.len();
    if k % 2 == 1 {
        return Ok(0.0);
    }
    if k == 0 {
        return Ok(1.0);
    }
    let g = gram(cov, xs)?;
    let full = (1usize << k) - 1;
    let mut haf = vec![0.0; full + 1];
    haf[0] = 1.0;
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut acc = 0.0;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            acc += g[i][j] * haf[rest & !(1 << j)];
        }
        haf[mask] = acc;
    }
    Ok(haf[full])
}

/// The same moment summed pairing by pairing over [`pairings`].
pub fn wick_moment_enumerated(cov: &CovarianceSeq, xs: &[FiniteSequence]) -> Result<f64> {
    check_len(xs.len())?;
    if xs.len() % 2 == 1 {
        return Ok(0.0);
    }
    let g = gram(cov, xs)?;
    Ok(pairings(xs.len())?.map(|p| p.pairs.iter().map(|&(i, j)| g[i - 1][j - 1]).product::<f64>()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn e(k: u64) -> FiniteSequence {
        FiniteSequence::unit(k).unwrap()
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(-1), 1);
        assert_eq!(double_factorial(1), 1);
        assert_eq!(double_factorial(7), 105);
        assert_eq!(double_factorial(19), 654_729_075);
    }

    #[test]
    fn small_pairing_lists() {
        let p2: Vec<_> = pairings(2).unwrap().collect();
        assert_eq!(p2, vec![Pairing { pairs: vec![(1, 2)] }]);
        let p4: Vec<_> = pairings(4).unwrap().map(|p| p.pairs).collect();
        assert_eq!(p4, vec![vec![(1, 2), (3, 4)], vec![(1, 3), (2, 4)], vec![(1, 4), (2, 3)]]);
    }

    #[test]
    fn pairings_are_distinct_perfect_matchings() {
        for two_n in [6, 8, 10] {
            let all: Vec<Pairing> = pairings(two_n).unwrap().collect();
            assert_eq!(all.len() as u128, double_factorial(two_n as i64 - 1));
            let set: HashSet<_> = all.iter().cloned().collect();
            assert_eq!(set.len(), all.len());
            for p in &all {
                let mut labels: Vec<usize> = p.pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
                assert!(p.pairs.iter().all(|&(i, j)| i < j));
                assert!(p.pairs.windows(2).all(|w| w[0].0 < w[1].0));
                labels.sort_unstable();
                assert_eq!(labels, (1..=two_n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn pairing_input_errors() {
        assert!(pairings(3).is_err());
        assert!(pairings(22).is_err());
        assert!(pairings_with_cap(22, 22).is_ok());
    }

    #[test]
    fn wick_examples() {
        let c1 = CovarianceSeq::constant(1.0).unwrap();
        assert_eq!(wick_moment(&c1, &[e(1), e(1), e(1)]).unwrap(), 0.0);
        let a: FiniteSequence = "1:0.3;2:-1.2".parse().unwrap();
        let b: FiniteSequence = "2:0.7;5:2".parse().unwrap();
        assert_eq!(wick_moment(&c1, &[a.clone(), b.clone()]).unwrap(), inner(&a, &b, &c1).unwrap());
        assert_eq!(wick_moment(&c1, &[e(1), e(1), e(1), e(1)]).unwrap(), 3.0);
        // E[x^6] = 15
        assert_eq!(wick_moment(&c1, &vec![e(1); 6]).unwrap(), 15.0);
    }

    #[test]
    fn hafnian_matches_enumeration() {
        let cov = CovarianceSeq::new(crate::series::SeqClass::power(2.0, 1.0)).unwrap();
        let xs: Vec<FiniteSequence> = (1..=8)
            .map(|k| {
                format!("{}:{};{}:{}", k % 3 + 1, 0.5 + k as f64 * 0.1, k % 3 + 4, 1.0 - k as f64 * 0.2)
                    .parse()
                    .unwrap()
            })
            .collect();
        let fast = wick_moment(&cov, &xs).unwrap();
        let slow = wick_moment_enumerated(&cov, &xs).unwrap();
        assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0));
    }

    #[test]
    fn full_cap_is_tractable() {
        let c1 = CovarianceSeq::constant(1.0).unwrap();
        let m = wick_moment(&c1, &vec![e(1); 20]).unwrap();
        assert_eq!(m, 654_729_075.0);
        assert!(wick_moment(&c1, &vec![e(1); 21]).is_err());
    }
}
