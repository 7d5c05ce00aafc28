//! Depth-8 syndrome-extraction cycle and memory-experiment circuits.
//!
//! Qubit layout for a code with `s = l*m` sites: `[0, s)` left data,
//! `[s, 2s)` right data, `[2s, 3s)` X-check ancillas, `[3s, 4s)` Z-check
//! ancillas. Within one cycle:
//!
//! | round | X ancillas           | Z ancillas         | data            |
//! |-------|----------------------|--------------------|-----------------|
//! | 1     | prepare `|+>`        | CNOT (data->Z)     | idle if unused  |
//! | 2-6   | CNOT (X->data)       | CNOT (data->Z)     |                 |
//! | 7     | CNOT (X->data)       | measure Z          | idle if unused  |
//! | 8     | measure X            | prepare `|0>`      | idle            |
//!
//! Memory experiments add an initialization layer (round 0 of cycle 0: data
//! in the memory basis, Z ancillas in `|0>`) and a readout layer (round 0 of
//! cycle `n_cycles`: transversal data measurement in the memory basis).

pub mod frame;
pub mod gadget;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::code::{BBCode, Sector};
use crate::error::{Error, Result};
use crate::partition::{Locality, PartitionMap};

pub const ROUNDS_PER_CYCLE: u8 = 8;
pub const CNOT_ROUNDS: usize = 7;

/// One of the six monomial couplings of a check: term `j` of `A` or of `B`.
///
/// For an X check, `A(j)` reaches a left data qubit and `B(j)` a right one.
/// For a Z check the transposes apply: `B(j)` reaches left, `A(j)` right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coupling {
    A(usize),
    B(usize),
}

/// Which coupling each ancilla type fires in each of the seven CNOT rounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOrder {
    pub x_rounds: [Option<Coupling>; CNOT_ROUNDS],
    pub z_rounds: [Option<Coupling>; CNOT_ROUNDS],
}

impl Default for RoundOrder {
    /// The depth-8 ordering of the reference BB144 circuit.
    fn default() -> Self {
        use Coupling::{A, B};
        Self {
            x_rounds: [None, Some(A(1)), Some(B(1)), Some(B(0)), Some(B(2)), Some(A(0)), Some(A(2))],
            z_rounds: [Some(A(0)), Some(A(2)), Some(B(0)), Some(B(1)), Some(B(2)), Some(A(1)), None],
        }
    }
}

impl RoundOrder {
    fn validate(&self, n_a: usize, n_b: usize) -> Result<()> {
        if self.x_rounds[0].is_some() {
            return Err(Error::ScheduleConflict("X ancillas are prepared in round 1 and cannot couple then".into()));
        }
        if self.z_rounds[CNOT_ROUNDS - 1].is_some() {
            return Err(Error::ScheduleConflict("Z ancillas are measured in round 7 and cannot couple then".into()));
        }
        for (name, rounds) in [("X", &self.x_rounds), ("Z", &self.z_rounds)] {
            let mut used: Vec<Coupling> = rounds.iter().flatten().copied().collect();
            let expected: Vec<Coupling> =
                (0..n_a).map(Coupling::A).chain((0..n_b).map(Coupling::B)).collect();
            for c in &used {
                if !expected.contains(c) {
                    return Err(Error::ScheduleConflict(format!("{name} rounds use unknown coupling {c:?}")));
                }
            }
            used.sort_by_key(|c| match c {
                Coupling::A(j) => (0, *j),
                Coupling::B(j) => (1, *j),
            });
            if used != expected {
                return Err(Error::ScheduleConflict(format!(
                    "{name} rounds must use each of the {} couplings exactly once, got {used:?}",
                    expected.len()
                )));
            }
        }
        Ok(())
    }

    /// Stable digest of the table, used in cache keys.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("round order serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    PreparePlus(usize),
    PrepareZero(usize),
    Cnot { control: usize, target: usize },
    MeasureX(usize),
    MeasureZ(usize),
    Idle(usize),
}

impl OpKind {
    pub fn qubits(&self) -> OpQubits {
        match *self {
            OpKind::Cnot { control, target } => OpQubits::Two(control, target),
            OpKind::PreparePlus(q)
            | OpKind::PrepareZero(q)
            | OpKind::MeasureX(q)
            | OpKind::MeasureZ(q)
            | OpKind::Idle(q) => OpQubits::One(q),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, OpKind::Idle(_))
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, OpKind::MeasureX(_) | OpKind::MeasureZ(_))
    }

    fn label(&self) -> &'static str {
        match self {
            OpKind::PreparePlus(_) => "prepare-plus",
            OpKind::PrepareZero(_) => "prepare-zero",
            OpKind::Cnot { .. } => "cnot",
            OpKind::MeasureX(_) => "measure-x",
            OpKind::MeasureZ(_) => "measure-z",
            OpKind::Idle(_) => "idle",
        }
    }
}

/// Qubits an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpQubits {
    One(usize),
    Two(usize, usize),
}

impl OpQubits {
    pub fn as_vec(self) -> Vec<usize> {
        match self {
            OpQubits::One(a) => vec![a],
            OpQubits::Two(a, b) => vec![a, b],
        }
    }

    pub fn contains(self, q: usize) -> bool {
        match self {
            OpQubits::One(a) => a == q,
            OpQubits::Two(a, b) => a == q || b == q,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduledOp {
    /// Cycle index; the readout layer uses `n_cycles`.
    pub cycle: usize,
    /// Round 1..=8 inside a cycle, 0 for boundary layers.
    pub round: u8,
    pub kind: OpKind,
    /// Set for CNOTs only.
    pub locality: Option<Locality>,
}

/// Basis of a memory experiment: `Z` stores `|0...0>` and reads out in the Z
/// basis (it protects against X errors), `X` is the mirror image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryBasis {
    X,
    Z,
}

impl MemoryBasis {
    /// Error sector whose logical flips this experiment observes.
    pub fn sector(self) -> Sector {
        match self {
            MemoryBasis::Z => Sector::X,
            MemoryBasis::X => Sector::Z,
        }
    }

    pub fn for_sector(sector: Sector) -> Self {
        match sector {
            Sector::X => MemoryBasis::Z,
            Sector::Z => MemoryBasis::X,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRoster {
    pub n_sites: usize,
}

impl QubitRoster {
    pub fn n_qubits(&self) -> usize {
        4 * self.n_sites
    }

    pub fn n_data(&self) -> usize {
        2 * self.n_sites
    }

    pub fn x_ancilla(&self, site: usize) -> usize {
        2 * self.n_sites + site
    }

    pub fn z_ancilla(&self, site: usize) -> usize {
        3 * self.n_sites + site
    }

    pub fn is_data(&self, q: usize) -> bool {
        q < 2 * self.n_sites
    }

    pub fn is_x_ancilla(&self, q: usize) -> bool {
        (2 * self.n_sites..3 * self.n_sites).contains(&q)
    }

    pub fn is_z_ancilla(&self, q: usize) -> bool {
        (3 * self.n_sites..4 * self.n_sites).contains(&q)
    }

    /// Torus site hosting the qubit.
    pub fn site(&self, q: usize) -> usize {
        q % self.n_sites
    }

    pub fn data_qubits(&self) -> std::ops::Range<usize> {
        0..2 * self.n_sites
    }

    pub fn x_ancillas(&self) -> std::ops::Range<usize> {
        2 * self.n_sites..3 * self.n_sites
    }

    pub fn z_ancillas(&self) -> std::ops::Range<usize> {
        3 * self.n_sites..4 * self.n_sites
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledCircuit {
    ops: Vec<ScheduledOp>,
    n_cycles: usize,
    roster: QubitRoster,
    basis: Option<MemoryBasis>,
}

impl ScheduledCircuit {
    pub fn ops(&self) -> &[ScheduledOp] {
        &self.ops
    }

    pub fn n_cycles(&self) -> usize {
        self.n_cycles
    }

    pub fn roster(&self) -> QubitRoster {
        self.roster
    }

    pub fn basis(&self) -> Option<MemoryBasis> {
        self.basis
    }

    pub fn n_qubits(&self) -> usize {
        self.roster.n_qubits()
    }

    pub fn cnots(&self) -> impl Iterator<Item = &ScheduledOp> {
        self.ops.iter().filter(|op| matches!(op.kind, OpKind::Cnot { .. }))
    }

    pub fn count(&self, pred: impl Fn(&OpKind) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(&op.kind)).count()
    }

    /// One line per op: `<cycle> <round> <kind> <qubits> <locality>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for op in &self.ops {
            let qubits: Vec<String> = op.kind.qubits().as_vec().iter().map(usize::to_string).collect();
            let locality = match op.locality {
                Some(Locality::Local) => "local",
                Some(Locality::Nonlocal) => "nonlocal",
                None => "-",
            };
            let _ = writeln!(s, "{} {} {} {} {}", op.cycle, op.round, op.kind.label(), qubits.join(","), locality);
        }
        s
    }

    /// Structural checks: per round no qubit is used twice, every ancilla meets
    /// each of its check neighbors once per cycle, orientation is X->data and
    /// data->Z, and preparation/measurement rounds are where they belong.
    pub fn check_invariants(&self, code: &BBCode) -> Result<()> {
        let roster = self.roster;
        let nq = roster.n_qubits();
        let mut last_slot: Vec<Option<(usize, u8)>> = vec![None; nq];
        let mut touched: Vec<Vec<usize>> = vec![Vec::new(); nq];
        let mut current_cycle = None;
        let flush = |touched: &mut Vec<Vec<usize>>, cycle: usize| -> Result<()> {
            for site in 0..roster.n_sites {
                let (i, j) = code.site_coord(site);
                for (anc, nbrs) in [
                    (roster.x_ancilla(site), code.x_check_neighbors(i, j)),
                    (roster.z_ancilla(site), code.z_check_neighbors(i, j)),
                ] {
                    let mut expect: Vec<usize> = nbrs.into_iter().filter_map(|c| code.data_qubit(c)).collect();
                    expect.sort_unstable();
                    let mut got = std::mem::take(&mut touched[anc]);
                    got.sort_unstable();
                    if got != expect {
                        return Err(Error::ScheduleConflict(format!(
                            "cycle {cycle}: ancilla {anc} touched {got:?}, expected {expect:?}"
                        )));
                    }
                }
            }
            Ok(())
        };
        for op in &self.ops {
            if op.round == 0 {
                if matches!(op.kind, OpKind::Cnot { .. }) {
                    return Err(Error::ScheduleConflict("CNOT in a boundary layer".into()));
                }
                continue;
            }
            if current_cycle != Some(op.cycle) {
                if let Some(c) = current_cycle {
                    flush(&mut touched, c)?;
                }
                current_cycle = Some(op.cycle);
            }
            for q in op.kind.qubits().as_vec() {
                if last_slot[q] == Some((op.cycle, op.round)) {
                    return Err(Error::ScheduleConflict(format!(
                        "qubit {q} used twice in cycle {} round {}",
                        op.cycle, op.round
                    )));
                }
                last_slot[q] = Some((op.cycle, op.round));
            }
            match op.kind {
                OpKind::Cnot { control, target } => {
                    if control == target {
                        return Err(Error::ScheduleConflict("CNOT with equal endpoints".into()));
                    }
                    if op.round == ROUNDS_PER_CYCLE {
                        return Err(Error::ScheduleConflict("CNOT in round 8".into()));
                    }
                    if roster.is_x_ancilla(control) && roster.is_data(target) {
                        touched[control].push(target);
                    } else if roster.is_data(control) && roster.is_z_ancilla(target) {
                        touched[target].push(control);
                    } else {
                        return Err(Error::ScheduleConflict(format!("misoriented CNOT {control}->{target}")));
                    }
                    if op.locality.is_none() {
                        return Err(Error::ScheduleConflict("CNOT without locality tag".into()));
                    }
                }
                OpKind::PreparePlus(q) if !(roster.is_x_ancilla(q) && op.round == 1) => {
                    return Err(Error::ScheduleConflict(format!("unexpected |+> preparation of {q} in round {}", op.round)));
                }
                OpKind::MeasureX(q) if !(roster.is_x_ancilla(q) && op.round == 8) => {
                    return Err(Error::ScheduleConflict(format!("unexpected X measurement of {q} in round {}", op.round)));
                }
                OpKind::MeasureZ(q) if !(roster.is_z_ancilla(q) && op.round == 7) => {
                    return Err(Error::ScheduleConflict(format!("unexpected Z measurement of {q} in round {}", op.round)));
                }
                OpKind::PrepareZero(q) if !(roster.is_z_ancilla(q) && op.round == 8) => {
                    return Err(Error::ScheduleConflict(format!("unexpected |0> preparation of {q} in round {}", op.round)));
                }
                _ => {}
            }
        }
        if let Some(c) = current_cycle {
            flush(&mut touched, c)?;
        }
        Ok(())
    }

    /// Confirms by Heisenberg back-propagation that, in the last full cycle,
    /// every X ancilla measures its X stabilizer and every Z ancilla its Z
    /// stabilizer, with no dependence on any other freshly prepared qubit.
    pub fn check_measured_operators(&self, code: &BBCode) -> Result<()> {
        let roster = self.roster;
        let cycle = self
            .ops
            .iter()
            .filter(|op| op.round != 0)
            .map(|op| op.cycle)
            .max()
            .ok_or_else(|| Error::ScheduleConflict("circuit has no cycles".into()))?;
        let start = self
            .ops
            .iter()
            .position(|op| op.cycle == cycle && op.round != 0)
            .expect("cycle has ops");
        for (index, op) in self.ops.iter().enumerate().filter(|(_, op)| op.cycle == cycle) {
            let (q, sector) = match op.kind {
                OpKind::MeasureZ(q) => (q, Sector::Z),
                OpKind::MeasureX(q) => (q, Sector::X),
                _ => continue,
            };
            // `sector` is the Pauli type of the measured observable.
            let mut support = vec![false; roster.n_qubits()];
            support[q] = true;
            for prior in self.ops[start..index].iter().rev() {
                match prior.kind {
                    OpKind::Cnot { control, target } => match sector {
                        // conjugation: X_c -> X_c X_t and Z_t -> Z_c Z_t
                        Sector::X => support[target] ^= support[control],
                        Sector::Z => support[control] ^= support[target],
                    },
                    OpKind::PreparePlus(p) if support[p] => {
                        if sector == Sector::Z {
                            return Err(Error::ScheduleConflict(format!(
                                "measurement of {q} depends on Z of freshly prepared |+> qubit {p}"
                            )));
                        }
                        support[p] = false;
                    }
                    OpKind::PrepareZero(p) if support[p] => {
                        if sector == Sector::X {
                            return Err(Error::ScheduleConflict(format!(
                                "measurement of {q} depends on X of freshly prepared |0> qubit {p}"
                            )));
                        }
                        support[p] = false;
                    }
                    OpKind::MeasureX(p) | OpKind::MeasureZ(p) if support[p] => {
                        return Err(Error::ScheduleConflict(format!(
                            "measurement of {q} is entangled with the earlier measurement of {p}"
                        )));
                    }
                    _ => {}
                }
            }
            // Z ancillas were prepared in |0> just before the cycle.
            for z in roster.z_ancillas() {
                if support[z] {
                    if sector == Sector::X {
                        return Err(Error::ScheduleConflict(format!(
                            "X measurement of {q} depends on X of Z ancilla {z}"
                        )));
                    }
                    support[z] = false;
                }
            }
            if roster.x_ancillas().any(|x| support[x]) {
                return Err(Error::ScheduleConflict(format!("measurement of {q} leaks onto X ancillas")));
            }
            let data: Vec<usize> = roster.data_qubits().filter(|&d| support[d]).collect();
            let site = roster.site(q);
            let expected = match sector {
                Sector::X => code.h_x().row_support(site),
                Sector::Z => code.h_z().row_support(site),
            };
            if data != expected {
                return Err(Error::ScheduleConflict(format!(
                    "ancilla {q} measures data {data:?} instead of stabilizer {expected:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Builds one syndrome-extraction cycle (cycle index 0) with locality tags.
pub fn build_cycle(code: &BBCode, pm: &PartitionMap, order: &RoundOrder) -> Result<ScheduledCircuit> {
    if pm.l() != code.l() || pm.m() != code.m() {
        return Err(Error::InvalidInput("partition and code lattices differ".into()));
    }
    order.validate(code.a_terms().len(), code.b_terms().len())?;
    let roster = QubitRoster { n_sites: code.n_sites() };
    let nq = roster.n_qubits();
    let mut ops = Vec::with_capacity(nq * 8);

    let x_target = |site: usize, c: Coupling| -> usize {
        let (i, j) = code.site_coord(site);
        let nbrs = code.x_check_neighbors(i, j);
        let na = code.a_terms().len();
        let cell = match c {
            Coupling::A(t) => nbrs[t],
            Coupling::B(t) => nbrs[na + t],
        };
        code.data_qubit(cell).expect("X neighbor is data")
    };
    let z_control = |site: usize, c: Coupling| -> usize {
        let (i, j) = code.site_coord(site);
        let nbrs = code.z_check_neighbors(i, j);
        let nb = code.b_terms().len();
        let cell = match c {
            Coupling::B(t) => nbrs[t],
            Coupling::A(t) => nbrs[nb + t],
        };
        code.data_qubit(cell).expect("Z neighbor is data")
    };
    let cnot = |control: usize, target: usize, round: u8| ScheduledOp {
        cycle: 0,
        round,
        kind: OpKind::Cnot { control, target },
        locality: Some(pm.classify(roster.site(control), roster.site(target))),
    };
    let single = |kind: OpKind, round: u8| ScheduledOp { cycle: 0, round, kind, locality: None };

    for r in 0..CNOT_ROUNDS {
        let round = (r + 1) as u8;
        let mut busy = vec![false; nq];
        let mut round_ops = Vec::new();
        let claim = |q: usize, busy: &mut Vec<bool>| -> Result<()> {
            if std::mem::replace(&mut busy[q], true) {
                return Err(Error::ScheduleConflict(format!("qubit {q} double-booked in round {round}")));
            }
            Ok(())
        };
        if round == 1 {
            for site in 0..roster.n_sites {
                let q = roster.x_ancilla(site);
                claim(q, &mut busy)?;
                round_ops.push(single(OpKind::PreparePlus(q), round));
            }
        }
        if round == 7 {
            for site in 0..roster.n_sites {
                let q = roster.z_ancilla(site);
                claim(q, &mut busy)?;
                round_ops.push(single(OpKind::MeasureZ(q), round));
            }
        }
        if let Some(c) = order.x_rounds[r] {
            for site in 0..roster.n_sites {
                let (a, d) = (roster.x_ancilla(site), x_target(site, c));
                claim(a, &mut busy)?;
                claim(d, &mut busy)?;
                round_ops.push(cnot(a, d, round));
            }
        }
        if let Some(c) = order.z_rounds[r] {
            for site in 0..roster.n_sites {
                let (d, z) = (z_control(site, c), roster.z_ancilla(site));
                claim(d, &mut busy)?;
                claim(z, &mut busy)?;
                round_ops.push(cnot(d, z, round));
            }
        }
        for q in 0..nq {
            if !busy[q] {
                round_ops.push(single(OpKind::Idle(q), round));
            }
        }
        ops.extend(round_ops);
    }
    for site in 0..roster.n_sites {
        ops.push(single(OpKind::MeasureX(roster.x_ancilla(site)), ROUNDS_PER_CYCLE));
    }
    for site in 0..roster.n_sites {
        ops.push(single(OpKind::PrepareZero(roster.z_ancilla(site)), ROUNDS_PER_CYCLE));
    }
    for q in roster.data_qubits() {
        ops.push(single(OpKind::Idle(q), ROUNDS_PER_CYCLE));
    }
    Ok(ScheduledCircuit { ops, n_cycles: 1, roster, basis: None })
}

/// Repeats a single cycle `n_cycles` times between memory-experiment
/// boundary layers in the given basis.
pub fn repeat_cycles(cycle: &ScheduledCircuit, n_cycles: usize, basis: MemoryBasis) -> Result<ScheduledCircuit> {
    if n_cycles == 0 {
        return Err(Error::InvalidInput("at least one cycle is required".into()));
    }
    let roster = cycle.roster;
    let body: Vec<ScheduledOp> = cycle.ops.iter().filter(|op| op.cycle == 0 && op.round != 0).copied().collect();
    let mut ops = Vec::with_capacity(body.len() * n_cycles + 3 * roster.n_sites);
    let boundary = |kind: OpKind, cycle: usize| ScheduledOp { cycle, round: 0, kind, locality: None };
    for q in roster.data_qubits() {
        ops.push(boundary(
            match basis {
                MemoryBasis::Z => OpKind::PrepareZero(q),
                MemoryBasis::X => OpKind::PreparePlus(q),
            },
            0,
        ));
    }
    for q in roster.z_ancillas() {
        ops.push(boundary(OpKind::PrepareZero(q), 0));
    }
    for c in 0..n_cycles {
        ops.extend(body.iter().map(|op| ScheduledOp { cycle: c, ..*op }));
    }
    for q in roster.data_qubits() {
        ops.push(boundary(
            match basis {
                MemoryBasis::Z => OpKind::MeasureZ(q),
                MemoryBasis::X => OpKind::MeasureX(q),
            },
            n_cycles,
        ));
    }
    Ok(ScheduledCircuit { ops, n_cycles, roster, basis: Some(basis) })
}

/// Convenience: BB code, partition and default order to a memory circuit.
pub fn memory_circuit(
    code: &BBCode,
    pm: &PartitionMap,
    order: &RoundOrder,
    n_cycles: usize,
    basis: MemoryBasis,
) -> Result<ScheduledCircuit> {
    repeat_cycles(&build_cycle(code, pm, order)?, n_cycles, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::count_nonlocal_cnots;

    fn bb144_cycle(n_qpu: usize) -> (BBCode, ScheduledCircuit) {
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, n_qpu).unwrap();
        let cycle = build_cycle(&code, &pm, &RoundOrder::default()).unwrap();
        (code, cycle)
    }

    #[test]
    fn cycle_op_counts() {
        let (code, cycle) = bb144_cycle(1);
        assert_eq!(cycle.cnots().count(), 864);
        let preps = cycle.count(|k| matches!(k, OpKind::PreparePlus(_) | OpKind::PrepareZero(_)));
        let meas = cycle.count(|k| k.is_measurement());
        assert_eq!((preps, meas), (144, 144));
        // 72 idle data in rounds 1 and 7, all 144 in round 8
        assert_eq!(cycle.count(|k| k.is_idle()), 72 + 72 + 144);
        cycle.check_invariants(&code).unwrap();
    }

    #[test]
    fn round_contents() {
        let (_, cycle) = bb144_cycle(1);
        let roster = cycle.roster();
        for op in cycle.ops().iter().filter(|op| op.round == 1) {
            match op.kind {
                OpKind::PreparePlus(q) => assert!(roster.is_x_ancilla(q)),
                OpKind::Cnot { target, .. } => assert!(roster.is_z_ancilla(target)),
                OpKind::Idle(q) => assert!(roster.is_data(q)),
                other => panic!("unexpected op in round 1: {other:?}"),
            }
        }
        assert!(cycle.ops().iter().filter(|op| op.round == 8).all(|op| !matches!(op.kind, OpKind::Cnot { .. })));
        let rounds: std::collections::BTreeSet<u8> = cycle.ops().iter().map(|op| op.round).collect();
        assert_eq!(rounds.into_iter().collect::<Vec<_>>(), (1..=8).collect::<Vec<u8>>());
    }

    #[test]
    fn cycle_measures_the_stabilizers() {
        let (code, cycle) = bb144_cycle(1);
        let two = repeat_cycles(&cycle, 2, MemoryBasis::Z).unwrap();
        two.check_measured_operators(&code).unwrap();
    }

    #[test]
    fn naive_order_fails_operator_check() {
        use Coupling::{A, B};
        // all X couplings before all Z couplings on shared data would clash;
        // this order is structurally valid but interleaves badly.
        let order = RoundOrder {
            x_rounds: [None, Some(A(0)), Some(A(1)), Some(A(2)), Some(B(0)), Some(B(1)), Some(B(2))],
            z_rounds: [Some(A(0)), Some(A(1)), Some(A(2)), Some(B(0)), Some(B(1)), Some(B(2)), None],
        };
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, 1).unwrap();
        match build_cycle(&code, &pm, &order) {
            Err(Error::ScheduleConflict(_)) => {}
            Ok(cycle) => {
                let two = repeat_cycles(&cycle, 2, MemoryBasis::Z).unwrap();
                assert!(two.check_measured_operators(&code).is_err());
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn invalid_orders_rejected() {
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, 1).unwrap();
        let mut order = RoundOrder::default();
        order.x_rounds.swap(0, 1);
        assert!(matches!(build_cycle(&code, &pm, &order), Err(Error::ScheduleConflict(_))));
        let mut order = RoundOrder::default();
        order.z_rounds[1] = order.z_rounds[0];
        assert!(matches!(build_cycle(&code, &pm, &order), Err(Error::ScheduleConflict(_))));
    }

    #[test]
    fn double_booking_detected() {
        use Coupling::{A, B};
        // X and Z both reach left data in the same round through A and B^T;
        // with A(0) = x^3 and B(1)^T = x^-1 they collide on some qubit.
        let order = RoundOrder {
            x_rounds: [None, Some(A(0)), Some(A(1)), Some(A(2)), Some(B(0)), Some(B(1)), Some(B(2))],
            z_rounds: [Some(A(0)), Some(B(1)), Some(A(1)), Some(A(2)), Some(B(0)), Some(B(2)), None],
        };
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, 1).unwrap();
        assert!(matches!(build_cycle(&code, &pm, &order), Err(Error::ScheduleConflict(_))));
    }

    #[test]
    fn repeat_counts_and_boundaries() {
        let (code, cycle) = bb144_cycle(12);
        let one = repeat_cycles(&cycle, 1, MemoryBasis::Z).unwrap();
        assert_eq!(one.cnots().count(), 864);
        assert_eq!(one.ops().first().unwrap().kind, OpKind::PrepareZero(0));
        assert_eq!(one.ops().last().unwrap().kind, OpKind::MeasureZ(143));
        let twelve = repeat_cycles(&cycle, 12, MemoryBasis::X).unwrap();
        assert_eq!(twelve.cnots().count(), 12 * 864);
        assert_eq!(twelve.ops().first().unwrap().kind, OpKind::PreparePlus(0));
        twelve.check_invariants(&code).unwrap();
        assert!(repeat_cycles(&cycle, 0, MemoryBasis::Z).is_err());
    }

    #[test]
    fn locality_tags_follow_partition() {
        let counts: Vec<usize> = [1, 4, 6, 12].iter().map(|&n| count_nonlocal_cnots(&bb144_cycle(n).1)).collect();
        assert_eq!(counts[0], 0);
        assert!(counts[1] <= counts[2] && counts[2] <= counts[3], "{counts:?}");
    }

    #[test]
    fn text_export_is_stable() {
        let (_, cycle) = bb144_cycle(6);
        let text = cycle.to_text();
        assert_eq!(text, cycle.clone().to_text());
        let first = text.lines().next().unwrap();
        assert_eq!(first, "0 1 prepare-plus 144 -");
        assert!(text.lines().any(|l| l.ends_with(" nonlocal") && l.contains(" cnot ")));
    }
}
