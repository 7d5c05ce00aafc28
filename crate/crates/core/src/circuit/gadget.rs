//! State-vector oracle for the Bell-pair-mediated remote CNOT.
//!
//! Four qubits: control `c` (bit 0), communication qubits `a` (bit 1) and `b`
//! (bit 2) sharing `|Phi+>`, target `t` (bit 3). Protocol: CNOT c->a, CNOT
//! b->t, measure `a` in Z and `b` in X, then apply `X^{m_a}` to `t` and
//! `Z^{m_b}` to `c`.

use num_complex::Complex64;

const C: usize = 0;
const A: usize = 1;
const B: usize = 2;
const T: usize = 3;
const DIM: usize = 16;

type State = [Complex64; DIM];

fn zero_state() -> State {
    [Complex64::new(0.0, 0.0); DIM]
}

fn cnot(s: &State, control: usize, target: usize) -> State {
    let mut out = zero_state();
    for (i, &amp) in s.iter().enumerate() {
        let j = if (i >> control) & 1 == 1 { i ^ (1 << target) } else { i };
        out[j] += amp;
    }
    out
}

fn hadamard(s: &State, q: usize) -> State {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = zero_state();
    for (i, &amp) in s.iter().enumerate() {
        let i0 = i & !(1 << q);
        let i1 = i | (1 << q);
        if (i >> q) & 1 == 0 {
            out[i0] += amp * h;
            out[i1] += amp * h;
        } else {
            out[i0] += amp * h;
            out[i1] -= amp * h;
        }
    }
    out
}

fn pauli_x(s: &State, q: usize) -> State {
    let mut out = zero_state();
    for (i, &amp) in s.iter().enumerate() {
        out[i ^ (1 << q)] = amp;
    }
    out
}

fn pauli_z(s: &State, q: usize) -> State {
    let mut out = *s;
    for (i, amp) in out.iter_mut().enumerate() {
        if (i >> q) & 1 == 1 {
            *amp = -*amp;
        }
    }
    out
}

fn project(s: &State, q: usize, outcome: usize) -> State {
    let mut out = *s;
    for (i, amp) in out.iter_mut().enumerate() {
        if (i >> q) & 1 != outcome {
            *amp = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// The six single-qubit Pauli eigenstates.
pub fn pauli_basis_states() -> [(&'static str, [Complex64; 2]); 6] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    let i = |x: f64| Complex64::new(0.0, x);
    [
        ("|0>", [r(1.0), r(0.0)]),
        ("|1>", [r(0.0), r(1.0)]),
        ("|+>", [r(h), r(h)]),
        ("|->", [r(h), r(-h)]),
        ("|+i>", [r(h), i(h)]),
        ("|-i>", [r(h), i(-h)]),
    ]
}

/// Runs the gadget on a two-qubit input `psi` (index `c + 2 t`) and returns the
/// unnormalized post-correction (c, t) amplitudes for branch `(m_a, m_b)`.
pub fn run_branch(psi: &[Complex64; 4], m_a: usize, m_b: usize) -> [Complex64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut s = zero_state();
    for (ct, &amp) in psi.iter().enumerate() {
        let (cbit, tbit) = (ct & 1, ct >> 1);
        for ab in 0..2 {
            let idx = (cbit << C) | (ab << A) | (ab << B) | (tbit << T);
            s[idx] += amp * h;
        }
    }
    s = cnot(&s, C, A);
    s = cnot(&s, B, T);
    s = project(&s, A, m_a);
    s = hadamard(&s, B);
    s = project(&s, B, m_b);
    if m_a == 1 {
        s = pauli_x(&s, T);
    }
    if m_b == 1 {
        s = pauli_z(&s, C);
    }
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (ct, o) in out.iter_mut().enumerate() {
        let (cbit, tbit) = (ct & 1, ct >> 1);
        *o = s[(cbit << C) | (m_a << A) | (m_b << B) | (tbit << T)];
    }
    out
}

/// Global phase of branch `(m_a, m_b)`, read off the `|00>` input. It is
/// `(-1)^(m_a m_b)` and physically irrelevant; the checks divide it out once
/// per branch, never per input.
pub fn branch_phase(m_a: usize, m_b: usize) -> Complex64 {
    let mut psi = [Complex64::new(0.0, 0.0); 4];
    psi[0] = Complex64::new(1.0, 0.0);
    let a = run_branch(&psi, m_a, m_b)[0];
    a / a.norm()
}

fn ideal_cnot(psi: &[Complex64; 4]) -> [Complex64; 4] {
    // index c + 2t; control c flips t
    [psi[0], psi[3], psi[2], psi[1]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetFailure {
    pub branch: (usize, usize),
    pub input: String,
    pub max_error: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GadgetReport {
    pub cases_checked: usize,
    pub max_amplitude_error: f64,
    pub failures: Vec<GadgetFailure>,
}

impl GadgetReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the gadget against an ideal CNOT on (c, t) for every product of
/// Pauli eigenstates and every measurement branch, and checks that each
/// branch's induced linear map is `CNOT / 2`.
pub fn verify_remote_cnot_gadget(tolerance: f64) -> GadgetReport {
    let mut report = GadgetReport::default();
    let basis = pauli_basis_states();
    let record = |report: &mut GadgetReport, branch, input: String, err: f64| {
        report.cases_checked += 1;
        report.max_amplitude_error = report.max_amplitude_error.max(err);
        if err > tolerance || err.is_nan() {
            report.failures.push(GadgetFailure { branch, input, max_error: err });
        }
    };
    for m_a in 0..2 {
        for m_b in 0..2 {
            let phase = branch_phase(m_a, m_b).conj();
            for (cname, cstate) in &basis {
                for (tname, tstate) in &basis {
                    let mut psi = [Complex64::new(0.0, 0.0); 4];
                    for (ct, amp) in psi.iter_mut().enumerate() {
                        *amp = cstate[ct & 1] * tstate[ct >> 1];
                    }
                    let out = run_branch(&psi, m_a, m_b).map(|a| a * phase);
                    let norm: f64 = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                    let expected = ideal_cnot(&psi);
                    let err = out
                        .iter()
                        .zip(&expected)
                        .map(|(o, e)| (o / norm - e).norm())
                        .fold(0.0, f64::max);
                    record(&mut report, (m_a, m_b), format!("{cname}{tname}"), err);
                }
            }
            // linear map on computational inputs
            let mut err: f64 = 0.0;
            for input in 0..4 {
                let mut psi = [Complex64::new(0.0, 0.0); 4];
                psi[input] = Complex64::new(1.0, 0.0);
                let out = run_branch(&psi, m_a, m_b).map(|a| a * phase);
                let expected = ideal_cnot(&psi);
                for (o, e) in out.iter().zip(&expected) {
                    err = err.max((o - e * 0.5).norm());
                }
            }
            record(&mut report, (m_a, m_b), "operator".into(), err);
        }
    }
    report
}
