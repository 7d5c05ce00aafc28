//! Ordered-statistics postprocessing.
//!
//! Columns are visited from most to least likely fault. Each column is reduced
//! against the basis built so far; independent columns become pivots until the
//! rank of the check matrix is reached. Every basis vector carries the set of
//! pivot columns it is a sum of, so the syndrome and any non-pivot column can
//! be written in terms of pivots. The combination sweep flips non-pivot
//! columns and keeps the cheapest consistent solution.

use crate::error::{Error, Result};
use crate::gf2::BitVector;
use crate::Real;

use super::bp::prior_llr;

pub struct OsdSolver {
    n_rows: usize,
    rw: usize,
    columns: Vec<u64>,
    weights: Vec<f64>,
    rank: usize,
    basis: Vec<u64>,
    combos: Vec<u64>,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
}

/// Reduction of one vector against the basis.
struct Reduced {
    residual_zero: bool,
    combo: Vec<u64>,
}

impl OsdSolver {
    pub fn new(n_rows: usize, columns: &[Vec<usize>], priors: &[f64]) -> Self {
        let rw = n_rows.div_ceil(64).max(1);
        let mut packed = vec![0u64; columns.len() * rw];
        for (c, sup) in columns.iter().enumerate() {
            for &r in sup {
                packed[c * rw + r / 64] ^= 1 << (r % 64);
            }
        }
        let mut s = Self {
            n_rows,
            rw,
            columns: packed,
            weights: priors.iter().map(|&p| prior_llr::<f64>(p)).collect(),
            rank: 0,
            basis: Vec::new(),
            combos: Vec::new(),
            pivot_row: Vec::new(),
            pivot_col: Vec::new(),
        };
        let order: Vec<usize> = (0..columns.len()).collect();
        s.rank = s.eliminate(&order, usize::MAX);
        s
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn column(&self, c: usize) -> &[u64] {
        &self.columns[c * self.rw..(c + 1) * self.rw]
    }

    fn cw(&self) -> usize {
        self.n_rows.div_ceil(64).max(1)
    }

    fn reduce(&self, v: &mut [u64]) -> Reduced {
        let cw = self.cw();
        let rw = self.rw;
        let mut combo = vec![0u64; cw];
        for slot in 0..self.pivot_row.len() {
            let p = self.pivot_row[slot];
            if (v[p / 64] >> (p % 64)) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(&self.basis[slot * rw..(slot + 1) * rw]) {
                    *a ^= b;
                }
                for (a, b) in combo.iter_mut().zip(&self.combos[slot * cw..(slot + 1) * cw]) {
                    *a ^= b;
                }
            }
        }
        Reduced { residual_zero: v.iter().all(|&w| w == 0), combo }
    }

    /// Builds the pivot basis along `order`; returns its size. Stops at
    /// `target_rank` pivots.
    fn eliminate(&mut self, order: &[usize], target_rank: usize) -> usize {
        let cw = self.cw();
        self.basis.clear();
        self.combos.clear();
        self.pivot_row.clear();
        self.pivot_col.clear();
        let mut v = vec![0u64; self.rw];
        for &c in order {
            if self.pivot_col.len() >= target_rank {
                break;
            }
            v.copy_from_slice(self.column(c));
            let red = self.reduce(&mut v);
            if red.residual_zero {
                continue;
            }
            let slot = self.pivot_col.len();
            let first = v.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, &w)| i * 64 + w.trailing_zeros() as usize).unwrap();
            let mut combo = red.combo;
            combo.resize(cw, 0);
            combo[slot / 64] ^= 1 << (slot % 64);
            self.basis.extend_from_slice(&v);
            self.combos.extend_from_slice(&combo);
            self.pivot_row.push(first);
            self.pivot_col.push(c);
        }
        self.pivot_col.len()
    }

    fn cost(&self, slots: &[u64], extra: &[usize]) -> f64 {
        let mut total: f64 = extra.iter().map(|&c| self.weights[c]).sum();
        for (wi, &w) in slots.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                total += self.weights[self.pivot_col[wi * 64 + b]];
                bits &= bits - 1;
            }
        }
        total
    }

    /// Syndrome-consistent correction guided by `posteriors` (LLR, lower is
    /// likelier to be a fault).
    pub fn solve<T: Real>(
        &mut self,
        syndrome: &BitVector,
        posteriors: &[T],
        order: usize,
        candidates: Option<usize>,
    ) -> Result<BitVector> {
        let n_cols = self.weights.len();
        if syndrome.len() != self.n_rows || posteriors.len() != n_cols {
            return Err(Error::DimensionMismatch(format!(
                "OSD on {}x{} with syndrome {} and {} posteriors",
                self.n_rows,
                n_cols,
                syndrome.len(),
                posteriors.len()
            )));
        }
        let mut sorted: Vec<usize> = (0..n_cols).collect();
        sorted.sort_by(|&a, &b| {
            posteriors[a]
                .partial_cmp(&posteriors[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        self.eliminate(&sorted, self.rank);
        let mut s = syndrome.words().to_vec();
        s.resize(self.rw, 0);
        let base = self.reduce(&mut s);
        if !base.residual_zero {
            return Err(Error::RankDeficient);
        }
        let mut best_slots = base.combo.clone();
        let mut best_extra: Vec<usize> = Vec::new();
        if order > 0 {
            let mut is_pivot = vec![false; n_cols];
            for &c in &self.pivot_col {
                is_pivot[c] = true;
            }
            let limit = candidates.unwrap_or(usize::MAX);
            let mut cand: Vec<(usize, Vec<u64>)> = Vec::new();
            let mut v = vec![0u64; self.rw];
            for &c in sorted.iter().filter(|&&c| !is_pivot[c]).take(limit) {
                v.copy_from_slice(self.column(c));
                let red = self.reduce(&mut v);
                cand.push((c, red.combo));
            }
            let mut best_cost = self.cost(&best_slots, &[]);
            let mut trial = vec![0u64; base.combo.len()];
            for (c, combo) in &cand {
                for ((t, a), b) in trial.iter_mut().zip(&base.combo).zip(combo) {
                    *t = a ^ b;
                }
                let cost = self.cost(&trial, &[*c]);
                if cost < best_cost {
                    best_cost = cost;
                    best_slots.copy_from_slice(&trial);
                    best_extra = vec![*c];
                }
            }
            let w = order.min(cand.len());
            for i in 0..w {
                for j in i + 1..w {
                    for (((t, a), b), d) in trial.iter_mut().zip(&base.combo).zip(&cand[i].1).zip(&cand[j].1) {
                        *t = a ^ b ^ d;
                    }
                    let cost = self.cost(&trial, &[cand[i].0, cand[j].0]);
                    if cost < best_cost {
                        best_cost = cost;
                        best_slots.copy_from_slice(&trial);
                        best_extra = vec![cand[i].0, cand[j].0];
                    }
                }
            }
        }
        let mut x = BitVector::zeros(n_cols);
        for (wi, &w) in best_slots.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                x.flip(self.pivot_col[wi * 64 + b]);
                bits &= bits - 1;
            }
        }
        for c in best_extra {
            x.flip(c);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitMatrix;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rank_matches_dense_elimination(rows in 1usize..12, cols in 1usize..20, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let columns: Vec<Vec<usize>> = (0..cols).map(|_| (0..rows).filter(|_| rng.random_bool(0.4)).collect()).collect();
            let mut dense = BitMatrix::zeros(rows, cols);
            for (c, sup) in columns.iter().enumerate() {
                for &r in sup {
                    dense.set(r, c, true);
                }
            }
            let osd = OsdSolver::new(rows, &columns, &vec![0.1; cols]);
            prop_assert_eq!(osd.rank(), dense.rank());
        }
    }

    #[test]
    fn solution_is_supported_on_pivots_for_order_zero() {
        let columns = vec![vec![0], vec![1], vec![0, 1]];
        let mut osd = OsdSolver::new(2, &columns, &[0.1, 0.1, 0.1]);
        let x = osd.solve(&BitVector::from_indices(2, [0, 1]), &[1.0f64, 1.0, -1.0], 0, None).unwrap();
        assert_eq!(x.iter_ones().collect::<Vec<_>>(), vec![2]);
    }
}
