//! Column partition of the torus into equal-width QPU blocks.

use serde::{Deserialize, Serialize};

use crate::circuit::ScheduledCircuit;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Locality {
    Local,
    Nonlocal,
}

/// Assignment of every torus site (and all four qubits of its cell) to a QPU.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionMap {
    l: usize,
    m: usize,
    n_qpu: usize,
    block_width: usize,
    labels: Vec<usize>,
}

impl PartitionMap {
    /// Splits the `l` x-columns into `n_qpu` contiguous blocks of width `l / n_qpu`.
    pub fn new(l: usize, m: usize, n_qpu: usize) -> Result<Self> {
        if l == 0 || m == 0 || n_qpu == 0 || !l.is_multiple_of(n_qpu) {
            return Err(Error::InvalidPartition { l, n_qpu, valid: divisors(l) });
        }
        let block_width = l / n_qpu;
        let labels = (0..l * m).map(|site| (site / m) / block_width).collect();
        Ok(Self { l, m, n_qpu, block_width, labels })
    }

    pub fn n_qpu(&self) -> usize {
        self.n_qpu
    }

    pub fn block_width(&self) -> usize {
        self.block_width
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// QPU label of a site.
    pub fn label(&self, site: usize) -> usize {
        self.labels[site]
    }

    pub fn label_of_coord(&self, x: usize, y: usize) -> usize {
        self.labels[(x % self.l) * self.m + (y % self.m)]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The x-columns owned by each QPU.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        (0..self.n_qpu)
            .map(|q| (q * self.block_width..(q + 1) * self.block_width).collect())
            .collect()
    }

    /// Qubits (four per cell) hosted by each QPU.
    pub fn qubits_per_qpu(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_qpu];
        for &q in &self.labels {
            counts[q] += 4;
        }
        counts
    }

    pub fn classify(&self, site_a: usize, site_b: usize) -> Locality {
        if self.labels[site_a] == self.labels[site_b] {
            Locality::Local
        } else {
            Locality::Nonlocal
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.labels).expect("labels serialize")
    }
}

/// Nonlocal CNOTs in one syndrome-extraction cycle.
pub fn count_nonlocal_cnots(cycle: &ScheduledCircuit) -> usize {
    cycle
        .ops()
        .iter()
        .filter(|op| op.cycle == 0 && op.locality == Some(Locality::Nonlocal))
        .count()
}

fn divisors(l: usize) -> Vec<usize> {
    (1..=l).filter(|&d| l.is_multiple_of(d)).collect()
}
