//! Bivariate bicycle codes `H_X = [A | B]`, `H_Z = [B^T | A^T]` on an `l x m` torus.
//!
//! Qubits are indexed as follows: left data qubit of site `i` is `i`, right data
//! qubit is `l*m + i`. Check rows are indexed by site. Sites follow the
//! canonical ordering `i <-> (i / m, i % m)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{circulant_from_terms, reduce_terms, BitMatrix, BitVector, SparseIndexMatrix, SpanBasis};

/// Pauli type of an error component, which is also the decoding sector it
/// belongs to: X errors are seen by Z checks and vice versa.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    X,
    Z,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::X, Sector::Z];

    pub fn opposite(self) -> Sector {
        match self {
            Sector::X => Sector::Z,
            Sector::Z => Sector::X,
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sector::X => "X",
            Sector::Z => "Z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitKind {
    L,
    R,
    XCheck,
    ZCheck,
}

/// A qubit slot of the unit cell at torus coordinate `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub x: usize,
    pub y: usize,
    pub kind: QubitKind,
}

impl CellCoord {
    pub fn new(x: usize, y: usize, kind: QubitKind) -> Self {
        Self { x, y, kind }
    }
}

/// Monomial exponent pair `(a, b)` standing for `x^a y^b`.
pub type Term = (i64, i64);

/// Exponents of `A = x^3 + y + y^2` for the [[144,12,12]] code.
pub const BB144_A: [Term; 3] = [(3, 0), (0, 1), (0, 2)];
/// Exponents of `B = y^3 + x + x^2` for the [[144,12,12]] code.
pub const BB144_B: [Term; 3] = [(0, 3), (1, 0), (2, 0)];

#[derive(Clone, Debug)]
pub struct BBCode {
    l: usize,
    m: usize,
    a_terms: Vec<Term>,
    b_terms: Vec<Term>,
    h_x: BitMatrix,
    h_z: BitMatrix,
    k: usize,
    logical_x: Vec<BitVector>,
    logical_z: Vec<BitVector>,
}

impl BBCode {
    /// Builds the code and a symplectic logical basis.
    pub fn new(l: usize, m: usize, a_terms: &[Term], b_terms: &[Term]) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidInput(format!("lattice must be nonempty, got {l}x{m}")));
        }
        let a = circulant_from_terms(l, m, a_terms)?;
        let b = circulant_from_terms(l, m, b_terms)?;
        let h_x = a.hstack(&b)?;
        let h_z = b.transpose().hstack(&a.transpose())?;
        if !h_x.mul(&h_z.transpose())?.is_zero() {
            return Err(Error::CssViolation);
        }
        let n = 2 * l * m;
        let k = n - h_x.rank() - h_z.rank();
        let (logical_x, logical_z) = symplectic_logicals(&h_x, &h_z, k);
        let reduce = |terms: &[Term]| -> Vec<Term> {
            reduce_terms(l, m, terms).into_iter().map(|(a, b)| (a as i64, b as i64)).collect()
        };
        // keep the caller's term order, which drives neighbor ordering
        let a_terms = ordered_unique(a_terms, &reduce(a_terms), l, m);
        let b_terms = ordered_unique(b_terms, &reduce(b_terms), l, m);
        Ok(Self { l, m, a_terms, b_terms, h_x, h_z, k, logical_x, logical_z })
    }

    /// The [[144,12,12]] code on the 12 x 6 torus.
    pub fn bb144() -> Self {
        Self::new(12, 6, &BB144_A, &BB144_B).expect("BB144 parameters are valid")
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_sites(&self) -> usize {
        self.l * self.m
    }

    /// Number of data qubits, `2 l m`.
    pub fn n(&self) -> usize {
        2 * self.l * self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a_terms(&self) -> &[Term] {
        &self.a_terms
    }

    pub fn b_terms(&self) -> &[Term] {
        &self.b_terms
    }

    pub fn h_x(&self) -> &BitMatrix {
        &self.h_x
    }

    pub fn h_z(&self) -> &BitMatrix {
        &self.h_z
    }

    /// Check matrix that detects errors of the given type.
    pub fn checks_detecting(&self, sector: Sector) -> &BitMatrix {
        match sector {
            Sector::X => &self.h_z,
            Sector::Z => &self.h_x,
        }
    }

    pub fn logical_x(&self) -> &[BitVector] {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &[BitVector] {
        &self.logical_z
    }

    /// Logical operators whose parity an error of type `sector` can flip.
    pub fn logicals_flipped_by(&self, sector: Sector) -> &[BitVector] {
        match sector {
            Sector::X => &self.logical_z,
            Sector::Z => &self.logical_x,
        }
    }

    pub fn site_index(&self, x: usize, y: usize) -> usize {
        (x % self.l) * self.m + (y % self.m)
    }

    pub fn site_coord(&self, site: usize) -> (usize, usize) {
        (site / self.m, site % self.m)
    }

    fn shifted(&self, x: usize, y: usize, (a, b): Term, sign: i64) -> (usize, usize) {
        let nx = (x as i64 + sign * a).rem_euclid(self.l as i64) as usize;
        let ny = (y as i64 + sign * b).rem_euclid(self.m as i64) as usize;
        (nx, ny)
    }

    /// Data qubits of X check `(i, j)`: terms of `A` on L, terms of `B` on R.
    pub fn x_check_neighbors(&self, i: usize, j: usize) -> Vec<CellCoord> {
        let (i, j) = (i % self.l, j % self.m);
        let left = self.a_terms.iter().map(|&t| {
            let (x, y) = self.shifted(i, j, t, 1);
            CellCoord::new(x, y, QubitKind::L)
        });
        let right = self.b_terms.iter().map(|&t| {
            let (x, y) = self.shifted(i, j, t, 1);
            CellCoord::new(x, y, QubitKind::R)
        });
        left.chain(right).collect()
    }

    /// Data qubits of Z check `(i, j)`: terms of `B^T` on L, terms of `A^T` on R.
    pub fn z_check_neighbors(&self, i: usize, j: usize) -> Vec<CellCoord> {
        let (i, j) = (i % self.l, j % self.m);
        let left = self.b_terms.iter().map(|&t| {
            let (x, y) = self.shifted(i, j, t, -1);
            CellCoord::new(x, y, QubitKind::L)
        });
        let right = self.a_terms.iter().map(|&t| {
            let (x, y) = self.shifted(i, j, t, -1);
            CellCoord::new(x, y, QubitKind::R)
        });
        left.chain(right).collect()
    }

    /// Data-qubit index of an L or R cell coordinate.
    pub fn data_qubit(&self, c: CellCoord) -> Option<usize> {
        let site = self.site_index(c.x, c.y);
        match c.kind {
            QubitKind::L => Some(site),
            QubitKind::R => Some(self.n_sites() + site),
            _ => None,
        }
    }

    /// Logical flips caused by a residual error of type `sector`; the residual
    /// has to commute with the opposite-type checks.
    pub fn logical_flip(&self, sector: Sector, residual: &BitVector) -> Result<BitVector> {
        if residual.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "residual of length {} for n = {}",
                residual.len(),
                self.n()
            )));
        }
        if !self.checks_detecting(sector).mul_vec(residual)?.is_zero() {
            return Err(Error::ResidueLeaked);
        }
        let logicals = self.logicals_flipped_by(sector);
        Ok(BitVector::from_bools(
            &logicals.iter().map(|op| op.dot(residual)).collect::<Vec<_>>(),
        ))
    }

    pub fn export(&self) -> CodeExport {
        CodeExport {
            l: self.l,
            m: self.m,
            n: self.n(),
            k: self.k,
            a_terms: self.a_terms.clone(),
            b_terms: self.b_terms.clone(),
            h_x: self.h_x.to_sparse(),
            h_z: self.h_z.to_sparse(),
            logical_x: self.logical_x.clone(),
            logical_z: self.logical_z.clone(),
        }
    }
}

/// JSON shape of an exported code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeExport {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub a_terms: Vec<Term>,
    pub b_terms: Vec<Term>,
    pub h_x: SparseIndexMatrix,
    pub h_z: SparseIndexMatrix,
    pub logical_x: Vec<BitVector>,
    pub logical_z: Vec<BitVector>,
}

fn ordered_unique(original: &[Term], reduced: &[Term], l: usize, m: usize) -> Vec<Term> {
    let mut out = Vec::new();
    for &(a, b) in original {
        let t = (a.rem_euclid(l as i64), b.rem_euclid(m as i64));
        if reduced.contains(&t) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// Quotient basis `ker(checks) / rowspace(stabilizers)`.
fn quotient_basis(checks: &BitMatrix, stabilizers: &BitMatrix) -> Vec<BitVector> {
    let mut span = SpanBasis::new(stabilizers.cols());
    for r in 0..stabilizers.rows() {
        span.insert(&stabilizers.row(r));
    }
    checks.kernel_basis().into_iter().filter(|v| span.insert(v)).collect()
}

/// Pairs X- and Z-type logicals so that `x_i . z_j = delta_ij`.
fn symplectic_logicals(h_x: &BitMatrix, h_z: &BitMatrix, k: usize) -> (Vec<BitVector>, Vec<BitVector>) {
    // X logicals commute with Z checks and are not X stabilizers; likewise for Z.
    let mut xs = quotient_basis(h_z, h_x);
    let mut zs = quotient_basis(h_x, h_z);
    assert_eq!(xs.len(), k, "X logical count disagrees with k");
    assert_eq!(zs.len(), k, "Z logical count disagrees with k");
    let (mut out_x, mut out_z) = (Vec::with_capacity(k), Vec::with_capacity(k));
    while let Some(x) = xs.pop() {
        let zi = zs.iter().position(|z| x.dot(z)).expect("logical pairing is degenerate");
        let z = zs.swap_remove(zi);
        for other in &mut xs {
            if other.dot(&z) {
                other.xor_assign(&x);
            }
        }
        for other in &mut zs {
            if x.dot(other) {
                other.xor_assign(&z);
            }
        }
        out_x.push(x);
        out_z.push(z);
    }
    (out_x, out_z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(list: &[(usize, usize, QubitKind)]) -> Vec<CellCoord> {
        list.iter().map(|&(x, y, k)| CellCoord::new(x, y, k)).collect()
    }

    #[test]
    fn bb144_parameters() {
        let code = BBCode::bb144();
        assert_eq!(code.n(), 144);
        assert_eq!(code.h_x().rank(), 66);
        assert_eq!(code.h_z().rank(), 66);
        assert_eq!(code.k(), 12);
        for h in [code.h_x(), code.h_z()] {
            assert_eq!((h.rows(), h.cols()), (72, 144));
            for r in 0..72 {
                assert_eq!(h.row_weight(r), 6);
            }
            for c in 0..144 {
                assert_eq!(h.col_weight(c), 3);
            }
        }
        assert!(code.h_x().mul(&code.h_z().transpose()).unwrap().is_zero());
        assert_eq!(code.h_x().kernel_basis().len(), 78);
    }

    #[test]
    fn logicals_are_symplectic_and_commute_with_checks() {
        let code = BBCode::bb144();
        for (i, x) in code.logical_x().iter().enumerate() {
            assert!(code.h_z().mul_vec(x).unwrap().is_zero());
            for (j, z) in code.logical_z().iter().enumerate() {
                assert_eq!(x.dot(z), i == j, "pair ({i}, {j})");
            }
        }
        for z in code.logical_z() {
            assert!(code.h_x().mul_vec(z).unwrap().is_zero());
        }
    }

    #[test]
    fn degenerate_single_site_code() {
        let code = BBCode::new(1, 1, &[(0, 0)], &[(0, 0)]).unwrap();
        assert_eq!(code.h_x(), &BitMatrix::from_dense(&[vec![1, 1]]));
        assert_eq!(code.n(), 2);
        assert_eq!(code.k(), 0);
    }

    #[test]
    fn bb72_rank_oracle() {
        let code = BBCode::new(6, 6, &BB144_A, &BB144_B).unwrap();
        assert_eq!(code.n(), 72);
        let k = 72 - code.h_x().rank() - code.h_z().rank();
        assert_eq!(code.k(), k);
        assert_eq!(code.k(), 12);
    }

    #[test]
    fn x_neighbors_examples() {
        let code = BBCode::bb144();
        use QubitKind::{L, R};
        assert_eq!(
            code.x_check_neighbors(0, 0),
            coords(&[(3, 0, L), (0, 1, L), (0, 2, L), (0, 3, R), (1, 0, R), (2, 0, R)])
        );
        assert_eq!(
            code.x_check_neighbors(11, 5),
            coords(&[(2, 5, L), (11, 0, L), (11, 1, L), (11, 2, R), (0, 5, R), (1, 5, R)])
        );
    }

    #[test]
    fn z_neighbors_examples() {
        let code = BBCode::bb144();
        use QubitKind::{L, R};
        assert_eq!(
            code.z_check_neighbors(0, 0),
            coords(&[(0, 3, L), (11, 0, L), (10, 0, L), (9, 0, R), (0, 5, R), (0, 4, R)])
        );
        assert_eq!(
            code.z_check_neighbors(3, 3),
            coords(&[(3, 0, L), (2, 3, L), (1, 3, L), (0, 3, R), (3, 2, R), (3, 1, R)])
        );
    }

    #[test]
    fn neighbors_agree_with_matrix_rows() {
        let code = BBCode::bb144();
        for site in 0..72 {
            let (i, j) = code.site_coord(site);
            let mut xs: Vec<usize> =
                code.x_check_neighbors(i, j).into_iter().filter_map(|c| code.data_qubit(c)).collect();
            xs.sort_unstable();
            assert_eq!(xs, code.h_x().row_support(site));
            let mut zs: Vec<usize> =
                code.z_check_neighbors(i, j).into_iter().filter_map(|c| code.data_qubit(c)).collect();
            zs.sort_unstable();
            assert_eq!(zs, code.h_z().row_support(site));
        }
    }

    #[test]
    fn translation_symmetry() {
        let code = BBCode::bb144();
        let shift_qubit = |q: usize| {
            let half = code.n_sites();
            let (base, site) = if q < half { (0, q) } else { (half, q - half) };
            let (x, y) = code.site_coord(site);
            base + code.site_index(x + 1, y)
        };
        for h in [code.h_x(), code.h_z()] {
            for site in 0..72 {
                let (x, y) = code.site_coord(site);
                let mut shifted: Vec<usize> = h.row_support(site).into_iter().map(shift_qubit).collect();
                shifted.sort_unstable();
                assert_eq!(shifted, h.row_support(code.site_index(x + 1, y)));
            }
        }
    }

    #[test]
    fn logical_flip_cases() {
        let code = BBCode::bb144();
        let zero = BitVector::zeros(144);
        assert!(code.logical_flip(Sector::X, &zero).unwrap().is_zero());
        // an X stabilizer acts trivially
        assert!(code.logical_flip(Sector::X, &code.h_x().row(5)).unwrap().is_zero());
        let flips = code.logical_flip(Sector::X, &code.logical_x()[0]).unwrap();
        assert_eq!(flips.iter_ones().collect::<Vec<_>>(), vec![0]);
        let flips = code.logical_flip(Sector::Z, &code.logical_z()[3]).unwrap();
        assert_eq!(flips.iter_ones().collect::<Vec<_>>(), vec![3]);
        let single = BitVector::from_indices(144, [0]);
        assert!(matches!(code.logical_flip(Sector::X, &single), Err(Error::ResidueLeaked)));
    }

    #[test]
    fn export_json_round_trip() {
        let code = BBCode::bb144();
        let json = serde_json::to_string(&code.export()).unwrap();
        let back: CodeExport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, code.export());
        assert_eq!(back.h_x.to_dense(), *code.h_x());
    }
}
