//! Detector-model compilation.
//!
//! Each projected fault class is pushed through the Clifford circuit to the
//! detectors and logical observables it flips. Detectors compare consecutive
//! outcomes of the same ancilla; the final transversal data measurement closes
//! the last cycle and reads out the observables. The result is one sparse
//! check matrix, one observable matrix and one prior vector per sector.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::circuit::frame::FrameRecord;
use crate::circuit::{OpKind, ScheduledCircuit};
use crate::code::{BBCode, Sector};
use crate::error::{Error, Result};
use crate::gf2::{BitVector, SparseIndexMatrix};
use crate::noise::{ClassSupport, FaultSite};

/// Position of a detector: layer `0..=n_cycles` and check site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorCoord {
    pub layer: usize,
    pub site: usize,
}

/// One projected fault class feeding a model column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultRef {
    pub op_index: usize,
    pub support: ClassSupport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub sector: Sector,
    pub n_cycles: usize,
    pub checks: SparseIndexMatrix,
    pub observables: SparseIndexMatrix,
    pub priors: Vec<f64>,
    pub layout: Vec<DetectorCoord>,
    pub sources: Vec<Vec<FaultRef>>,
}

impl DetectorModel {
    pub fn n_detectors(&self) -> usize {
        self.checks.rows()
    }

    pub fn n_observables(&self) -> usize {
        self.observables.rows()
    }

    pub fn n_columns(&self) -> usize {
        self.priors.len()
    }

    /// Syndrome and observable flips of a fault-indicator vector.
    pub fn apply(&self, faults: &BitVector) -> Result<(BitVector, BitVector)> {
        Ok((self.checks.mul_vec(faults)?, self.observables.mul_vec(faults)?))
    }

    /// Column lookup indexed by op, then by [`support_slot`].
    pub fn class_columns(&self, n_ops: usize) -> Vec<[Option<u32>; 4]> {
        let mut table = vec![[None; 4]; n_ops];
        for (col, refs) in self.sources.iter().enumerate() {
            for r in refs {
                table[r.op_index][support_slot(r.support)] = Some(col as u32);
            }
        }
        table
    }

    /// Structural equality: same columns and priors, sources ignored.
    pub fn same_structure(&self, other: &DetectorModel) -> bool {
        self.sector == other.sector
            && self.checks == other.checks
            && self.observables == other.observables
            && self.priors == other.priors
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn support_slot(s: ClassSupport) -> usize {
    match s {
        ClassSupport::Single => 0,
        ClassSupport::First => 1,
        ClassSupport::Second => 2,
        ClassSupport::Both => 3,
    }
}

/// Detector and observable bits (detectors first) set by one recorded
/// measurement, or empty if the measurement is invisible to `sector`.
pub fn measurement_contributions(
    code: &BBCode,
    circuit: &ScheduledCircuit,
    sector: Sector,
    op_index: usize,
) -> Vec<usize> {
    let op = &circuit.ops()[op_index];
    let roster = circuit.roster();
    let ns = roster.n_sites;
    let n_det = ns * (circuit.n_cycles() + 1);
    let q = match (sector, op.kind) {
        (Sector::X, OpKind::MeasureZ(q)) | (Sector::Z, OpKind::MeasureX(q)) => q,
        _ => return Vec::new(),
    };
    let is_check_ancilla = match sector {
        Sector::X => roster.is_z_ancilla(q),
        Sector::Z => roster.is_x_ancilla(q),
    };
    if is_check_ancilla {
        let s = roster.site(q);
        return vec![op.cycle * ns + s, (op.cycle + 1) * ns + s];
    }
    if roster.is_data(q) && op.cycle == circuit.n_cycles() {
        let h = code.checks_detecting(sector);
        let mut out: Vec<usize> = (0..h.rows()).filter(|&r| h.get(r, q)).map(|r| circuit.n_cycles() * ns + r).collect();
        out.extend(
            code.logicals_flipped_by(sector)
                .iter()
                .enumerate()
                .filter(|(_, l)| l.get(q))
                .map(|(j, _)| n_det + j),
        );
        return out;
    }
    Vec::new()
}

/// Detector and observable flips implied by a frame-simulation record.
pub fn detectors_from_record(
    code: &BBCode,
    circuit: &ScheduledCircuit,
    sector: Sector,
    record: &FrameRecord,
) -> (BitVector, BitVector) {
    let ns = circuit.roster().n_sites;
    let n_det = ns * (circuit.n_cycles() + 1);
    let mut bits = BitVector::zeros(n_det + code.k());
    for (&op, &flip) in record.measurement_ops.iter().zip(&record.flips) {
        if flip {
            for b in measurement_contributions(code, circuit, sector, op) {
                bits.flip(b);
            }
        }
    }
    let det = BitVector::from_indices(n_det, bits.iter_ones().filter(|&b| b < n_det));
    let obs = BitVector::from_indices(code.k(), bits.iter_ones().filter(|&b| b >= n_det).map(|b| b - n_det));
    (det, obs)
}

fn qubits_of(support: ClassSupport, kind: &OpKind) -> (usize, Option<usize>) {
    match (support, *kind) {
        (ClassSupport::First, OpKind::Cnot { control, .. }) => (control, None),
        (ClassSupport::Second, OpKind::Cnot { target, .. }) => (target, None),
        (ClassSupport::Both, OpKind::Cnot { control, target }) => (control, Some(target)),
        (_, k) => match k.qubits() {
            crate::circuit::OpQubits::One(q) => (q, None),
            crate::circuit::OpQubits::Two(c, _) => (c, None),
        },
    }
}

/// Unmerged model: one column per nonempty projected class of `sector`.
pub fn build_detector_model(
    code: &BBCode,
    circuit: &ScheduledCircuit,
    faults: &[FaultSite],
    sector: Sector,
) -> Result<DetectorModel> {
    let ops = circuit.ops();
    let ns = circuit.roster().n_sites;
    let n_det = ns * (circuit.n_cycles() + 1);
    let n_bits = n_det + code.k();
    let w = n_bits.div_ceil(64);
    let nq = circuit.n_qubits();

    let mut by_op: Vec<Vec<usize>> = vec![Vec::new(); ops.len()];
    for (i, f) in faults.iter().enumerate() {
        if f.op_index >= ops.len() {
            return Err(Error::UnknownLocation(f.op_index));
        }
        by_op[f.op_index].push(i);
    }

    let mut sens = vec![0u64; nq * w];
    let mut scratch = vec![0u64; w];
    // per op, columns in class order
    let mut raw: Vec<Vec<(FaultRef, f64, Vec<u64>)>> = vec![Vec::new(); ops.len()];

    for (index, op) in ops.iter().enumerate().rev() {
        let contrib = measurement_contributions(code, circuit, sector, index);
        for &fi in &by_op[index] {
            let site = &faults[fi];
            for class in site.classes.iter().filter(|c| c.sector == sector) {
                scratch.iter_mut().for_each(|x| *x = 0);
                if op.kind.is_measurement() {
                    for &b in &contrib {
                        scratch[b / 64] ^= 1 << (b % 64);
                    }
                } else {
                    let (a, b) = qubits_of(class.support, &op.kind);
                    for k in 0..w {
                        scratch[k] ^= sens[a * w + k];
                    }
                    if let Some(b) = b {
                        for k in 0..w {
                            scratch[k] ^= sens[b * w + k];
                        }
                    }
                }
                raw[index].push((FaultRef { op_index: index, support: class.support }, class.probability, scratch.clone()));
            }
        }
        match op.kind {
            OpKind::PreparePlus(q) | OpKind::PrepareZero(q) => {
                sens[q * w..(q + 1) * w].iter_mut().for_each(|x| *x = 0);
            }
            OpKind::Cnot { control, target } => {
                let (dst, src) = match sector {
                    Sector::X => (control, target),
                    Sector::Z => (target, control),
                };
                for k in 0..w {
                    let v = sens[src * w + k];
                    sens[dst * w + k] ^= v;
                }
            }
            OpKind::MeasureZ(q) | OpKind::MeasureX(q) => {
                for &b in &contrib {
                    sens[q * w + b / 64] ^= 1 << (b % 64);
                }
            }
            OpKind::Idle(_) => {}
        }
    }

    let mut det_cols = Vec::new();
    let mut obs_cols = Vec::new();
    let mut priors = Vec::new();
    let mut sources = Vec::new();
    for (fref, prior, sig) in raw.into_iter().flatten() {
        let bits = BitVector::from_words(n_bits, sig);
        if bits.is_zero() {
            continue;
        }
        det_cols.push(bits.iter_ones().filter(|&b| b < n_det).collect::<Vec<_>>());
        obs_cols.push(bits.iter_ones().filter(|&b| b >= n_det).map(|b| b - n_det).collect::<Vec<_>>());
        priors.push(prior);
        sources.push(vec![fref]);
    }
    Ok(DetectorModel {
        sector,
        n_cycles: circuit.n_cycles(),
        checks: SparseIndexMatrix::from_columns(n_det, &det_cols),
        observables: SparseIndexMatrix::from_columns(code.k(), &obs_cols),
        priors,
        layout: (0..n_det).map(|d| DetectorCoord { layer: d / ns, site: d % ns }).collect(),
        sources,
    })
}

/// Probability that exactly one of two independent events occurs.
pub fn xor_prior(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

/// Merges columns with identical signatures and drops zero-prior columns.
/// Column order follows the first occurrence of each signature.
pub fn merge_equivalent_columns(model: &DetectorModel) -> DetectorModel {
    let det = model.checks.column_supports();
    let obs = model.observables.column_supports();
    let mut index: HashMap<(&[usize], &[usize]), usize> = HashMap::new();
    let mut det_cols: Vec<Vec<usize>> = Vec::new();
    let mut obs_cols: Vec<Vec<usize>> = Vec::new();
    let mut priors: Vec<f64> = Vec::new();
    let mut sources: Vec<Vec<FaultRef>> = Vec::new();
    for c in 0..model.n_columns() {
        match index.get(&(det[c].as_slice(), obs[c].as_slice())) {
            Some(&m) => {
                priors[m] = xor_prior(priors[m], model.priors[c]);
                sources[m].extend(model.sources[c].iter().copied());
            }
            None => {
                index.insert((det[c].as_slice(), obs[c].as_slice()), det_cols.len());
                det_cols.push(det[c].clone());
                obs_cols.push(obs[c].clone());
                priors.push(model.priors[c]);
                sources.push(model.sources[c].clone());
            }
        }
    }
    let keep: Vec<usize> = (0..priors.len()).filter(|&c| priors[c] > 0.0).collect();
    let pick = |v: &[Vec<usize>]| keep.iter().map(|&c| v[c].clone()).collect::<Vec<_>>();
    DetectorModel {
        sector: model.sector,
        n_cycles: model.n_cycles,
        checks: SparseIndexMatrix::from_columns(model.checks.rows(), &pick(&det_cols)),
        observables: SparseIndexMatrix::from_columns(model.observables.rows(), &pick(&obs_cols)),
        priors: keep.iter().map(|&c| priors[c]).collect(),
        layout: model.layout.clone(),
        sources: keep.iter().map(|&c| sources[c].clone()).collect(),
    }
}

/// Build and merge in one step.
pub fn compile_model(
    code: &BBCode,
    circuit: &ScheduledCircuit,
    faults: &[FaultSite],
    sector: Sector,
) -> Result<DetectorModel> {
    Ok(merge_equivalent_columns(&build_detector_model(code, circuit, faults, sector)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::frame::{simulate, Injection, Pauli};
    use crate::circuit::{memory_circuit, MemoryBasis, RoundOrder};
    use crate::code::{CellCoord, QubitKind};
    use crate::noise::{assign_rates, NoiseParams};
    use crate::partition::PartitionMap;
    use rand::{Rng, SeedableRng};

    fn setup(n_qpu: usize, n_cycles: usize, basis: MemoryBasis) -> (BBCode, ScheduledCircuit) {
        let code = BBCode::bb144();
        let pm = PartitionMap::new(12, 6, n_qpu).unwrap();
        let c = memory_circuit(&code, &pm, &RoundOrder::default(), n_cycles, basis).unwrap();
        (code, c)
    }

    fn fired(code: &BBCode, c: &ScheduledCircuit, sector: Sector, inj: &[Injection]) -> (BitVector, BitVector) {
        detectors_from_record(code, c, sector, &simulate(c, inj))
    }

    #[test]
    fn noiseless_fires_nothing() {
        for basis in [MemoryBasis::X, MemoryBasis::Z] {
            let (code, c) = setup(6, 3, basis);
            let (d, o) = fired(&code, &c, basis.sector(), &[]);
            assert!(d.is_zero() && o.is_zero());
        }
    }

    #[test]
    fn measurement_flip_fires_consecutive_pair() {
        let (code, c) = setup(1, 4, MemoryBasis::Z);
        let ns = 72;
        for t in 0..4 {
            let site = 17;
            let q = c.roster().z_ancilla(site);
            let idx = c
                .ops()
                .iter()
                .position(|op| op.cycle == t && op.kind == OpKind::MeasureZ(q))
                .unwrap();
            let (d, _) = fired(&code, &c, Sector::X, &[Injection { before_op: idx, qubit: q, pauli: Pauli::X }]);
            assert_eq!(d.iter_ones().collect::<Vec<_>>(), vec![t * ns + site, (t + 1) * ns + site]);
        }
    }

    #[test]
    fn data_error_fires_adjacent_z_checks() {
        let (code, c) = setup(1, 3, MemoryBasis::Z);
        let t = 1;
        let first = c.ops().iter().position(|op| op.cycle == t && op.round == 1).unwrap();
        for (x, y, kind) in [(0, 0, QubitKind::L), (5, 3, QubitKind::R), (11, 5, QubitKind::L)] {
            let q = code.data_qubit(CellCoord::new(x, y, kind)).unwrap();
            let (d, o) = fired(&code, &c, Sector::X, &[Injection { before_op: first, qubit: q, pauli: Pauli::X }]);
            let mut expect: Vec<usize> = (0..12)
                .flat_map(|i| (0..6).map(move |j| (i, j)))
                .filter(|&(i, j)| code.z_check_neighbors(i, j).contains(&CellCoord::new(x, y, kind)))
                .map(|(i, j)| t * 72 + code.site_index(i, j))
                .collect();
            expect.sort_unstable();
            assert_eq!(expect.len(), 3);
            assert_eq!(d.iter_ones().collect::<Vec<_>>(), expect);
            let _ = o;
        }
    }

    #[test]
    fn detector_count() {
        for n in [1, 3, 12] {
            let (code, c) = setup(12, n, MemoryBasis::Z);
            let f = assign_rates(&c, &NoiseParams::new(0.001, 1.0).unwrap());
            let m = compile_model(&code, &c, &f, Sector::X).unwrap();
            assert_eq!(m.n_detectors(), 72 * (n + 1));
            assert_eq!(m.n_observables(), 12);
        }
    }

    #[test]
    fn model_invariants() {
        let (code, c) = setup(6, 2, MemoryBasis::X);
        let f = assign_rates(&c, &NoiseParams::new(0.003, 3.0).unwrap());
        let m = compile_model(&code, &c, &f, Sector::Z).unwrap();
        assert!(m.priors.iter().all(|&p| p > 0.0 && p < 1.0));
        let det = m.checks.column_supports();
        let obs = m.observables.column_supports();
        let mut seen = std::collections::HashSet::new();
        for c in 0..m.n_columns() {
            assert!(!det[c].is_empty() || !obs[c].is_empty());
            assert!(seen.insert((det[c].clone(), obs[c].clone())));
        }
    }

    #[test]
    fn unknown_location_rejected() {
        let (code, c) = setup(1, 1, MemoryBasis::Z);
        let mut f = assign_rates(&c, &NoiseParams::new(0.001, 1.0).unwrap());
        f[0].op_index = c.ops().len() + 3;
        assert!(matches!(build_detector_model(&code, &c, &f, Sector::X), Err(Error::UnknownLocation(_))));
    }

    #[test]
    fn alpha_one_models_identical_across_partitions() {
        for basis in [MemoryBasis::Z, MemoryBasis::X] {
            let (code, c1) = setup(1, 2, basis);
            let f1 = assign_rates(&c1, &NoiseParams::new(0.004, 1.0).unwrap());
            let base = compile_model(&code, &c1, &f1, basis.sector()).unwrap();
            for n in [4, 6, 12] {
                let (_, c) = setup(n, 2, basis);
                let f = assign_rates(&c, &NoiseParams::new(0.004, 1.0).unwrap());
                let m = compile_model(&code, &c, &f, basis.sector()).unwrap();
                assert!(m.same_structure(&base), "n_qpu = {n}");
                assert_eq!(m, base);
            }
            let (_, c) = setup(12, 2, basis);
            let f = assign_rates(&c, &NoiseParams::new(0.004, 3.0).unwrap());
            let m = compile_model(&code, &c, &f, basis.sector()).unwrap();
            assert!(!m.same_structure(&base));
        }
    }

    #[test]
    fn merge_examples() {
        let mk = |cols: Vec<Vec<usize>>, priors: Vec<f64>| DetectorModel {
            sector: Sector::X,
            n_cycles: 1,
            checks: SparseIndexMatrix::from_columns(3, &cols),
            observables: SparseIndexMatrix::from_columns(1, &vec![vec![]; cols.len()]),
            sources: (0..cols.len()).map(|i| vec![FaultRef { op_index: i, support: ClassSupport::Single }]).collect(),
            priors,
            layout: vec![],
        };
        let m = merge_equivalent_columns(&mk(vec![vec![0, 1], vec![0, 1]], vec![0.1, 0.1]));
        assert_eq!(m.n_columns(), 1);
        assert!((m.priors[0] - 0.18).abs() < 1e-15);
        assert_eq!(m.sources[0].len(), 2);
        let u = mk(vec![vec![0], vec![1], vec![2]], vec![0.1, 0.2, 0.3]);
        assert_eq!(merge_equivalent_columns(&u), u);
        assert_eq!(xor_prior(0.5, 0.37), 0.5);
    }

    #[test]
    fn propagation_is_linear_against_frame_simulation() {
        for basis in [MemoryBasis::Z, MemoryBasis::X] {
            let sector = basis.sector();
            let (code, c) = setup(6, 2, basis);
            let f = assign_rates(&c, &NoiseParams::new(0.01, 2.0).unwrap());
            let m = compile_model(&code, &c, &f, sector).unwrap();
            let lookup = m.class_columns(c.ops().len());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
            for _ in 0..20 {
                let mut inj = Vec::new();
                let mut e = BitVector::zeros(m.n_columns());
                for site in &f {
                    let op = &c.ops()[site.op_index];
                    if let Some(fault) = site.sample(&op.kind, &mut rng) {
                        let after = site.op_index + !op.kind.is_measurement() as usize;
                        match (fault, op.kind.qubits()) {
                            (crate::noise::SampledFault::One(p), crate::circuit::OpQubits::One(q)) => {
                                inj.push(Injection { before_op: after, qubit: q, pauli: p })
                            }
                            (crate::noise::SampledFault::Two(a, b), crate::circuit::OpQubits::Two(x, y)) => {
                                inj.push(Injection { before_op: after, qubit: x, pauli: a });
                                inj.push(Injection { before_op: after, qubit: y, pauli: b });
                            }
                            _ => unreachable!(),
                        }
                        if let Some(s) = crate::noise::class_hit(site.kind, fault, sector) {
                            if let Some(col) = lookup[site.op_index][support_slot(s)] {
                                e.flip(col as usize);
                            }
                        }
                    }
                }
                let (d, o) = fired(&code, &c, sector, &inj);
                let (d2, o2) = m.apply(&e).unwrap();
                assert_eq!(d, d2);
                assert_eq!(o, o2);
            }
        }
    }

    #[test]
    fn random_single_faults_match_columns() {
        let (code, c) = setup(4, 2, MemoryBasis::Z);
        let f = assign_rates(&c, &NoiseParams::new(0.01, 1.0).unwrap());
        let m = build_detector_model(&code, &c, &f, Sector::X).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let det = m.checks.column_supports();
        for _ in 0..200 {
            let col = rng.random_range(0..m.n_columns());
            let r = m.sources[col][0];
            let op = c.ops()[r.op_index];
            let after = r.op_index + !op.kind.is_measurement() as usize;
            let (a, b) = qubits_of(r.support, &op.kind);
            let mut inj = vec![Injection { before_op: after, qubit: a, pauli: Pauli::X }];
            if let Some(b) = b {
                inj.push(Injection { before_op: after, qubit: b, pauli: Pauli::X });
            }
            let (d, _) = fired(&code, &c, Sector::X, &inj);
            assert_eq!(d.iter_ones().collect::<Vec<_>>(), det[col]);
        }
    }

    #[test]
    fn json_round_trip() {
        let (code, c) = setup(12, 1, MemoryBasis::Z);
        let f = assign_rates(&c, &NoiseParams::new(0.002, 5.0).unwrap());
        let m = compile_model(&code, &c, &f, Sector::X).unwrap();
        assert_eq!(DetectorModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }
}
