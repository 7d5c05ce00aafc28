//! Forward Pauli-frame simulation of a scheduled circuit.
//!
//! Used as an independent route to detector values: inject Paulis at chosen
//! points, push the frame through the Clifford ops, and read which measurement
//! outcomes flip.

use serde::{Deserialize, Serialize};

use super::{OpKind, ScheduledCircuit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// A Pauli applied to `qubit` immediately before op `before_op`
/// (`ops.len()` means after the last op).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub before_op: usize,
    pub qubit: usize,
    pub pauli: Pauli,
}

/// Measurement-outcome flips in circuit order, with the op index of each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameRecord {
    pub measurement_ops: Vec<usize>,
    pub flips: Vec<bool>,
}

pub fn simulate(circuit: &ScheduledCircuit, injections: &[Injection]) -> FrameRecord {
    let nq = circuit.n_qubits();
    let mut x = vec![false; nq];
    let mut z = vec![false; nq];
    let mut sorted: Vec<Injection> = injections.to_vec();
    sorted.sort_by_key(|inj| inj.before_op);
    let mut next = 0;
    let mut record = FrameRecord { measurement_ops: Vec::new(), flips: Vec::new() };
    for (index, op) in circuit.ops().iter().enumerate() {
        while next < sorted.len() && sorted[next].before_op == index {
            let inj = sorted[next];
            x[inj.qubit] ^= inj.pauli.has_x();
            z[inj.qubit] ^= inj.pauli.has_z();
            next += 1;
        }
        match op.kind {
            OpKind::PreparePlus(q) | OpKind::PrepareZero(q) => {
                x[q] = false;
                z[q] = false;
            }
            OpKind::Cnot { control, target } => {
                x[target] ^= x[control];
                z[control] ^= z[target];
            }
            OpKind::MeasureZ(q) => {
                record.measurement_ops.push(index);
                record.flips.push(x[q]);
            }
            OpKind::MeasureX(q) => {
                record.measurement_ops.push(index);
                record.flips.push(z[q]);
            }
            OpKind::Idle(_) => {}
        }
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{memory_circuit, MemoryBasis, RoundOrder};
    use crate::code::BBCode;
    use crate::partition::PartitionMap;

    #[test]
    fn noiseless_frame_has_no_flips() {
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, 6).unwrap();
        let c = memory_circuit(&code, &pm, &RoundOrder::default(), 3, MemoryBasis::Z).unwrap();
        let rec = simulate(&c, &[]);
        assert_eq!(rec.flips.len(), 3 * 144 + 144);
        assert!(rec.flips.iter().all(|&f| !f));
    }

    #[test]
    fn x_before_z_measurement_flips_it() {
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, 1).unwrap();
        let c = memory_circuit(&code, &pm, &RoundOrder::default(), 1, MemoryBasis::Z).unwrap();
        let (idx, q) = c
            .ops()
            .iter()
            .enumerate()
            .find_map(|(i, op)| match op.kind {
                OpKind::MeasureZ(q) if op.round == 7 => Some((i, q)),
                _ => None,
            })
            .unwrap();
        let rec = simulate(&c, &[Injection { before_op: idx, qubit: q, pauli: Pauli::X }]);
        let flipped: Vec<usize> = rec.flips.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| rec.measurement_ops[i]).collect();
        assert_eq!(flipped, vec![idx]);
        // a Z error is invisible to a Z measurement
        let rec = simulate(&c, &[Injection { before_op: idx, qubit: q, pauli: Pauli::Z }]);
        assert!(rec.flips.iter().all(|&f| !f));
    }
}
