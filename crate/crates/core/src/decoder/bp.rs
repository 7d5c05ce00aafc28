//! Log-domain belief propagation.

use crate::gf2::BitVector;
use crate::Real;

use super::{BpVariant, DecoderConfig, Schedule};

const LLR_CLAMP: f64 = 50.0;

/// Tanner graph in compressed form: edges are grouped by check, and each
/// column keeps the list of its edge ids.
pub struct TannerGraph<T> {
    n_checks: usize,
    check_ptr: Vec<usize>,
    edge_col: Vec<u32>,
    col_ptr: Vec<usize>,
    col_edges: Vec<u32>,
    prior_llr: Vec<T>,
    q: Vec<T>,
    r: Vec<T>,
    post: Vec<T>,
    buf: Vec<T>,
    old: Vec<T>,
}

pub struct BpOutput<T> {
    pub posteriors: Vec<T>,
    pub hard: BitVector,
    pub converged: bool,
    pub iterations: usize,
}

/// `ln((1 - p) / p)` clamped to the LLR range.
pub fn prior_llr<T: Real>(p: f64) -> T {
    let v = ((1.0 - p) / p).ln();
    T::lit(v.clamp(-LLR_CLAMP, LLR_CLAMP))
}

impl<T: Real> TannerGraph<T> {
    pub fn new(n_checks: usize, columns: &[Vec<usize>], priors: &[f64]) -> Self {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n_checks];
        for (c, sup) in columns.iter().enumerate() {
            for &r in sup {
                rows[r].push(c as u32);
            }
        }
        let mut check_ptr = vec![0];
        let mut edge_col = Vec::new();
        for row in &rows {
            edge_col.extend_from_slice(row);
            check_ptr.push(edge_col.len());
        }
        let mut per_col: Vec<Vec<u32>> = vec![Vec::new(); columns.len()];
        for (e, &c) in edge_col.iter().enumerate() {
            per_col[c as usize].push(e as u32);
        }
        let mut col_ptr = vec![0];
        let mut col_edges = Vec::new();
        for es in &per_col {
            col_edges.extend_from_slice(es);
            col_ptr.push(col_edges.len());
        }
        let max_deg = rows.iter().map(Vec::len).max().unwrap_or(0);
        let ne = edge_col.len();
        Self {
            n_checks,
            check_ptr,
            edge_col,
            col_ptr,
            col_edges,
            prior_llr: priors.iter().map(|&p| prior_llr(p)).collect(),
            q: vec![T::zero(); ne],
            r: vec![T::zero(); ne],
            post: vec![T::zero(); columns.len()],
            buf: vec![T::zero(); max_deg + 1],
            old: vec![T::zero(); max_deg],
        }
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_cols(&self) -> usize {
        self.prior_llr.len()
    }

    pub fn satisfies(&self, x: &BitVector, syndrome: &BitVector) -> bool {
        (0..self.n_checks).all(|c| {
            let parity = self.edge_col[self.check_ptr[c]..self.check_ptr[c + 1]]
                .iter()
                .fold(false, |acc, &v| acc ^ x.get(v as usize));
            parity == syndrome.get(c)
        })
    }

    fn hard_decision(&self) -> BitVector {
        let mut x = BitVector::zeros(self.n_cols());
        for (v, &p) in self.post.iter().enumerate() {
            if p < T::zero() {
                x.set(v, true);
            }
        }
        x
    }

    /// Updates the outgoing messages of one check from `q[lo..hi]` into
    /// `r[lo..hi]`.
    fn check_update(&mut self, lo: usize, hi: usize, flip: bool, variant: BpVariant<T>) {
        let clamp = T::lit(LLR_CLAMP);
        let sign0 = if flip { -T::one() } else { T::one() };
        match variant {
            BpVariant::ProductSum => {
                let half = T::lit(0.5);
                let two = T::lit(2.0);
                // prefix products in buf, suffix product on the fly
                let deg = hi - lo;
                self.buf[0] = T::one();
                for i in 0..deg {
                    self.buf[i + 1] = self.buf[i] * (self.q[lo + i] * half).tanh();
                }
                let mut suffix = T::one();
                for i in (0..deg).rev() {
                    let prod = self.buf[i] * suffix;
                    let v = sign0 * two * prod.atanh();
                    self.r[lo + i] = v.max(-clamp).min(clamp);
                    suffix = suffix * (self.q[lo + i] * half).tanh();
                }
            }
            BpVariant::MinSum { scale } => {
                let mut min1 = T::infinity();
                let mut min2 = T::infinity();
                let mut arg = usize::MAX;
                let mut negative = flip;
                for i in lo..hi {
                    let a = self.q[i].abs();
                    if self.q[i] < T::zero() {
                        negative = !negative;
                    }
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = i;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for i in lo..hi {
                    let mag = if i == arg { min2 } else { min1 };
                    let own_negative = self.q[i] < T::zero();
                    let s = if negative ^ own_negative { -T::one() } else { T::one() };
                    self.r[i] = (s * scale * mag).max(-clamp).min(clamp);
                }
            }
        }
    }

    pub fn run(&mut self, syndrome: &BitVector, config: &DecoderConfig<T>) -> BpOutput<T> {
        let clamp = T::lit(LLR_CLAMP);
        let n_cols = self.n_cols();
        for v in 0..n_cols {
            self.post[v] = self.prior_llr[v];
            for &e in &self.col_edges[self.col_ptr[v]..self.col_ptr[v + 1]] {
                self.q[e as usize] = self.prior_llr[v];
            }
        }
        self.r.iter_mut().for_each(|x| *x = T::zero());
        let mut iterations = 0;
        let mut hard = BitVector::zeros(n_cols);
        let mut converged = false;
        while iterations < config.max_iterations {
            iterations += 1;
            match config.schedule {
                Schedule::Parallel => {
                    for c in 0..self.n_checks {
                        let (lo, hi) = (self.check_ptr[c], self.check_ptr[c + 1]);
                        self.check_update(lo, hi, syndrome.get(c), config.variant);
                    }
                    for v in 0..n_cols {
                        let edges = &self.col_edges[self.col_ptr[v]..self.col_ptr[v + 1]];
                        let mut total = self.prior_llr[v];
                        for &e in edges {
                            total = total + self.r[e as usize];
                        }
                        for &e in edges {
                            self.q[e as usize] = (total - self.r[e as usize]).max(-clamp).min(clamp);
                        }
                        self.post[v] = total.max(-clamp).min(clamp);
                    }
                }
                Schedule::Serial => {
                    for c in 0..self.n_checks {
                        let (lo, hi) = (self.check_ptr[c], self.check_ptr[c + 1]);
                        for e in lo..hi {
                            let v = self.edge_col[e] as usize;
                            self.q[e] = (self.post[v] - self.r[e]).max(-clamp).min(clamp);
                            self.old[e - lo] = self.r[e];
                        }
                        self.check_update(lo, hi, syndrome.get(c), config.variant);
                        for e in lo..hi {
                            let v = self.edge_col[e] as usize;
                            self.post[v] = self.post[v] - self.old[e - lo] + self.r[e];
                        }
                    }
                }
            }
            hard = self.hard_decision();
            if self.satisfies(&hard, syndrome) {
                converged = true;
                break;
            }
        }
        BpOutput { posteriors: self.post.clone(), hard, converged, iterations }
    }
}
