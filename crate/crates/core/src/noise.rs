//! Two-rate circuit-level Pauli noise.
//!
//! Idles depolarize at `p`, preparations and measurements flip at `p`, and
//! CNOTs depolarize at `p` (local) or `alpha * p` (nonlocal). Each fault site
//! also carries its CSS projection: the X- and Z-type error classes the
//! decoder sees, with their marginal probabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::frame::Pauli;
use crate::circuit::{OpKind, ScheduledCircuit};
use crate::code::Sector;
use crate::error::{Error, Result};
use crate::partition::Locality;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    p: f64,
    alpha: f64,
}

impl NoiseParams {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("physical error rate {p} outside [0, 1]")));
        }
        if alpha.is_nan() || alpha < 1.0 {
            return Err(Error::InvalidInput(format!("nonlocal penalty {alpha} must be >= 1")));
        }
        if alpha * p > 1.0 {
            return Err(Error::InvalidInput(format!("nonlocal rate alpha*p = {} exceeds 1", alpha * p)));
        }
        Ok(Self { p, alpha })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Total CNOT error rate for a gate of the given locality.
    pub fn cnot_rate(&self, locality: Locality) -> f64 {
        match locality {
            Locality::Local => self.p,
            Locality::Nonlocal => self.alpha * self.p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    IdleDepolarize,
    PrepFlip,
    MeasFlip,
    CnotDepolarize,
}

/// Which qubits of the op a projected class acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassSupport {
    /// The single qubit of a one-qubit op.
    Single,
    /// CNOT control only.
    First,
    /// CNOT target only.
    Second,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectedClass {
    pub sector: Sector,
    pub support: ClassSupport,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultSite {
    pub op_index: usize,
    pub kind: ChannelKind,
    pub rate: f64,
    pub classes: Vec<ProjectedClass>,
}

/// Outcome of sampling one fault site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampledFault {
    /// Pauli on the single qubit (idle, or the equivalent Pauli of a flip).
    One(Pauli),
    /// Paulis on (control, target).
    Two(Pauli, Pauli),
}

const TWO_QUBIT_PAULIS: [(Pauli, Pauli); 15] = {
    use Pauli::{I, X, Y, Z};
    [
        (I, X), (I, Y), (I, Z),
        (X, I), (X, X), (X, Y), (X, Z),
        (Y, I), (Y, X), (Y, Y), (Y, Z),
        (Z, I), (Z, X), (Z, Y), (Z, Z),
    ]
};

impl FaultSite {
    /// Draws this site: `None` with probability `1 - rate`, otherwise a
    /// uniformly chosen nonidentity Pauli (depolarizing) or the basis flip.
    pub fn sample<R: Rng + ?Sized>(&self, op: &OpKind, rng: &mut R) -> Option<SampledFault> {
        if self.rate <= 0.0 || rng.random::<f64>() >= self.rate {
            return None;
        }
        Some(match self.kind {
            ChannelKind::IdleDepolarize => {
                SampledFault::One([Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)])
            }
            ChannelKind::CnotDepolarize => {
                let (a, b) = TWO_QUBIT_PAULIS[rng.random_range(0..15)];
                SampledFault::Two(a, b)
            }
            ChannelKind::PrepFlip | ChannelKind::MeasFlip => SampledFault::One(flip_pauli(op)),
        })
    }
}

/// The Pauli equivalent to a preparation or measurement flip on `op`.
pub fn flip_pauli(op: &OpKind) -> Pauli {
    match op {
        OpKind::PreparePlus(_) | OpKind::MeasureX(_) => Pauli::Z,
        OpKind::PrepareZero(_) | OpKind::MeasureZ(_) => Pauli::X,
        _ => Pauli::I,
    }
}

/// Sector class index hit by a sampled fault, if any, following the class
/// order produced by [`project_css`].
pub fn class_hit(kind: ChannelKind, fault: SampledFault, sector: Sector) -> Option<ClassSupport> {
    let has = |p: Pauli| match sector {
        Sector::X => p.has_x(),
        Sector::Z => p.has_z(),
    };
    match (kind, fault) {
        (ChannelKind::CnotDepolarize, SampledFault::Two(a, b)) => match (has(a), has(b)) {
            (true, false) => Some(ClassSupport::First),
            (false, true) => Some(ClassSupport::Second),
            (true, true) => Some(ClassSupport::Both),
            (false, false) => None,
        },
        (_, SampledFault::One(p)) if has(p) => Some(ClassSupport::Single),
        _ => None,
    }
}

/// CSS projection of a site's channel.
///
/// Single-qubit depolarizing at rate `r` gives one class per sector at `2r/3`;
/// two-qubit depolarizing gives three classes per sector at `4r/15`; a flip
/// gives one class at `r` in the sector it is visible to.
pub fn project_css(kind: ChannelKind, rate: f64, op: &OpKind) -> Vec<ProjectedClass> {
    let class = |sector, support, probability| ProjectedClass { sector, support, probability };
    match kind {
        ChannelKind::IdleDepolarize => Sector::BOTH
            .iter()
            .map(|&s| class(s, ClassSupport::Single, 2.0 * rate / 3.0))
            .collect(),
        ChannelKind::CnotDepolarize => Sector::BOTH
            .iter()
            .flat_map(|&s| {
                [ClassSupport::First, ClassSupport::Second, ClassSupport::Both]
                    .into_iter()
                    .map(move |sup| class(s, sup, 4.0 * rate / 15.0))
            })
            .collect(),
        ChannelKind::PrepFlip | ChannelKind::MeasFlip => {
            let sector = if flip_pauli(op).has_x() { Sector::X } else { Sector::Z };
            vec![class(sector, ClassSupport::Single, rate)]
        }
    }
}

/// One fault site per op of the circuit, indexed like `circuit.ops()`.
pub fn assign_rates(circuit: &ScheduledCircuit, params: &NoiseParams) -> Vec<FaultSite> {
    circuit
        .ops()
        .iter()
        .enumerate()
        .map(|(op_index, op)| {
            let (kind, rate) = match op.kind {
                OpKind::Idle(_) => (ChannelKind::IdleDepolarize, params.p),
                OpKind::PreparePlus(_) | OpKind::PrepareZero(_) => (ChannelKind::PrepFlip, params.p),
                OpKind::MeasureX(_) | OpKind::MeasureZ(_) => (ChannelKind::MeasFlip, params.p),
                OpKind::Cnot { .. } => (
                    ChannelKind::CnotDepolarize,
                    params.cnot_rate(op.locality.expect("CNOTs carry a locality tag")),
                ),
            };
            FaultSite { op_index, kind, rate, classes: project_css(kind, rate, &op.kind) }
        })
        .collect()
}
