//! Small dense state-vector and density-matrix oracle.
//!
//! Used only by test suites to verify the channel algebra, circuits and graph
//! construction by brute force; nothing on the analytic path depends on it.
//! Unlike [`pauli`](crate::pauli), amplitudes here carry exact phases.
//!
//! Qubit `i` is bit `i` of the basis index (little endian).

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::pauli::{BellIndex, CliffordGate, Pauli, PauliOperator};

/// Largest register the oracle will simulate as a pure state.
pub const MAX_DENSE_QUBITS: usize = 12;

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Dense pure state on up to [`MAX_DENSE_QUBITS`] qubits.
#[derive(Debug, Clone)]
pub struct DenseState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    /// |0...0>
    pub fn zero(n_qubits: usize) -> Self {
        assert!(
            (1..=MAX_DENSE_QUBITS).contains(&n_qubits),
            "dense oracle limited to {MAX_DENSE_QUBITS} qubits"
        );
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        DenseState { n_qubits, amps }
    }

    /// |+...+>
    pub fn plus(n_qubits: usize) -> Self {
        let mut s = Self::zero(n_qubits);
        for q in 0..n_qubits {
            s.apply_gate(CliffordGate::H(q));
        }
        s
    }

    /// Bell state `(|0,mu> + (-1)^nu |1, mu^1>) / sqrt(2)` on qubits (0, 1),
    /// embedded in an `n_qubits` register with the remaining qubits in |0>.
    pub fn bell(n_qubits: usize, index: BellIndex) -> Self {
        let mut s = Self::zero(n_qubits);
        let a = usize::from(index.mu) << 1;
        let b = usize::from(!index.mu) << 1 | 1;
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[a] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        s.amps[b] = Complex64::new(if index.nu { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 }, 0.0);
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.n_qubits, other.n_qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_gate(&mut self, gate: CliffordGate) {
        match gate {
            CliffordGate::H(q) => {
                let bit = 1usize << q;
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let a = self.amps[i];
                        let b = self.amps[i | bit];
                        self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                        self.amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
            CliffordGate::S(q) => {
                let bit = 1usize << q;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a *= Complex64::new(0.0, 1.0);
                    }
                }
            }
            CliffordGate::Cnot { control, target } => {
                let cb = 1usize << control;
                let tb = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
            }
            CliffordGate::Cz(a, b) => {
                let ab = 1usize << a;
                let bb = 1usize << b;
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & ab != 0 && i & bb != 0 {
                        *amp = -*amp;
                    }
                }
            }
        }
    }

    /// Applies a Pauli operator with exact phase (Y = i X Z).
    pub fn apply_pauli(&mut self, op: &PauliOperator) {
        assert_eq!(op.n_qubits(), self.n_qubits);
        for q in 0..self.n_qubits {
            let bit = 1usize << q;
            match op.get(q) {
                Pauli::I => {}
                Pauli::X => {
                    for i in 0..self.amps.len() {
                        if i & bit == 0 {
                            self.amps.swap(i, i | bit);
                        }
                    }
                }
                Pauli::Z => {
                    for (i, a) in self.amps.iter_mut().enumerate() {
                        if i & bit != 0 {
                            *a = -*a;
                        }
                    }
                }
                Pauli::Y => {
                    for i in 0..self.amps.len() {
                        if i & bit == 0 {
                            let a0 = self.amps[i];
                            let a1 = self.amps[i | bit];
                            self.amps[i] = Complex64::new(0.0, -1.0) * a1;
                            self.amps[i | bit] = Complex64::new(0.0, 1.0) * a0;
                        }
                    }
                }
            }
        }
    }

    /// Projects onto the `outcome` eigenspace of Z on `q`; returns the outcome
    /// probability and leaves the state unnormalized.
    pub fn project_z(&mut self, q: usize, outcome: bool) -> f64 {
        let bit = 1usize << q;
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                p += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        p
    }

    /// Projects onto the even (`parity = false`) or odd Z-parity subspace of
    /// two qubits; returns the outcome probability, state left unnormalized.
    pub fn project_zz(&mut self, q1: usize, q2: usize, parity: bool) -> f64 {
        let b1 = 1usize << q1;
        let b2 = 1usize << q2;
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            let par = ((i & b1 != 0) as u8 ^ (i & b2 != 0) as u8) == 1;
            if par == parity {
                p += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        p
    }

    pub fn renormalize(&mut self) {
        let n = libm::sqrt(self.norm_sq());
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }
}

/// Dense density matrix, for mixed-state circuit oracles on a few qubits.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    // row-major: rho[r * dim + c]
    elems: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &DenseState) -> Self {
        let dim = state.amps.len();
        let mut elems = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                elems[r * dim + c] = state.amps[r] * state.amps[c].conj();
            }
        }
        DensityMatrix { n_qubits: state.n_qubits, dim, elems }
    }

    /// Weighted mixture of pure states.
    pub fn mixture(states: &[(f64, DenseState)]) -> Self {
        assert!(!states.is_empty());
        let n = states[0].1.n_qubits;
        let dim = 1usize << n;
        let mut out = DensityMatrix {
            n_qubits: n,
            dim,
            elems: vec![Complex64::new(0.0, 0.0); dim * dim],
        };
        for (w, s) in states {
            assert_eq!(s.n_qubits, n);
            for r in 0..dim {
                for c in 0..dim {
                    out.elems[r * dim + c] += s.amps[r] * s.amps[c].conj() * *w;
                }
            }
        }
        out
    }

    /// Tensor product self (low qubits) with other (high qubits).
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.n_qubits + other.n_qubits;
        let dim = 1usize << n;
        let mut elems = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.elems[r1 * self.dim + c1];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        let b = other.elems[r2 * other.dim + c2];
                        let r = r1 | (r2 << self.n_qubits);
                        let c = c1 | (c2 << self.n_qubits);
                        elems[r * dim + c] += a * b;
                    }
                }
            }
        }
        DensityMatrix { n_qubits: n, dim, elems }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.elems[i * self.dim + i].re).sum()
    }

    fn map_rows_and_cols<F>(&mut self, f: F)
    where
        F: Fn(&mut [Complex64], bool),
    {
        // rho -> U rho U^dag: apply U to every column vector of rho (fixed c),
        // then U* to every row vector (fixed r). Work on strided copies.
        let dim = self.dim;
        let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
        for c in 0..dim {
            for r in 0..dim {
                scratch[r] = self.elems[r * dim + c];
            }
            f(&mut scratch, false);
            for r in 0..dim {
                self.elems[r * dim + c] = scratch[r];
            }
        }
        for r in 0..dim {
            scratch.copy_from_slice(&self.elems[r * dim..(r + 1) * dim]);
            f(&mut scratch, true);
            self.elems[r * dim..(r + 1) * dim].copy_from_slice(&scratch);
        }
    }

    pub fn apply_gate(&mut self, gate: CliffordGate) {
        self.map_rows_and_cols(|vec, conj| match gate {
            CliffordGate::H(q) => {
                let bit = 1usize << q;
                for i in 0..vec.len() {
                    if i & bit == 0 {
                        let a = vec[i];
                        let b = vec[i | bit];
                        vec[i] = (a + b) * FRAC_1_SQRT_2;
                        vec[i | bit] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
            CliffordGate::S(q) => {
                let bit = 1usize << q;
                let phase = Complex64::new(0.0, if conj { -1.0 } else { 1.0 });
                for (i, a) in vec.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a *= phase;
                    }
                }
            }
            CliffordGate::Cnot { control, target } => {
                let cb = 1usize << control;
                let tb = 1usize << target;
                for i in 0..vec.len() {
                    if i & cb != 0 && i & tb == 0 {
                        vec.swap(i, i | tb);
                    }
                }
            }
            CliffordGate::Cz(a, b) => {
                let ab = 1usize << a;
                let bb = 1usize << b;
                for (i, amp) in vec.iter_mut().enumerate() {
                    if i & ab != 0 && i & bb != 0 {
                        *amp = -*amp;
                    }
                }
            }
        });
    }

    /// Applies a Pauli channel: `rho -> sum_k p_k U_k rho U_k^dag`.
    pub fn apply_channel(&mut self, channel: &crate::pauli::PauliChannel) {
        assert_eq!(channel.n_qubits(), self.n_qubits);
        let dim = self.dim;
        let mut acc = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (op, w) in channel.terms() {
            // conjugating by a Pauli permutes basis indices and adds signs
            let xm = op.x_mask() as usize;
            for r in 0..dim {
                for c in 0..dim {
                    let v = self.elems[r * dim + c];
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let (nr, sr) = pauli_index_action(op, r);
                    let (nc, sc) = pauli_index_action(op, c);
                    let sign = sr * sc.conj();
                    acc[nr * dim + nc] += v * sign * w;
                }
            }
            let _ = xm;
        }
        self.elems = acc;
    }

    /// Probability of Z-measurement outcomes on a set of qubits, and the
    /// projected (unnormalized) state.
    pub fn project_z(&mut self, qubits: &[usize], outcomes: &[bool]) -> f64 {
        assert_eq!(qubits.len(), outcomes.len());
        let dim = self.dim;
        let keep = |i: usize| {
            qubits
                .iter()
                .zip(outcomes)
                .all(|(&q, &o)| ((i >> q) & 1 == 1) == o)
        };
        let mut p = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                if keep(r) && keep(c) {
                    if r == c {
                        p += self.elems[r * dim + c].re;
                    }
                } else {
                    self.elems[r * dim + c] = Complex64::new(0.0, 0.0);
                }
            }
        }
        p
    }

    /// Traces out `qubits`, returning the reduced state on the rest
    /// (remaining qubits keep their relative order).
    pub fn partial_trace(&self, qubits: &[usize]) -> Self {
        let kept: Vec<usize> = (0..self.n_qubits).filter(|q| !qubits.contains(q)).collect();
        let n_out = kept.len();
        let dim_out = 1usize << n_out;
        let mut elems = vec![Complex64::new(0.0, 0.0); dim_out * dim_out];
        let expand = |small: usize, env: usize| -> usize {
            let mut full = 0usize;
            for (i, &q) in kept.iter().enumerate() {
                full |= ((small >> i) & 1) << q;
            }
            for (i, &q) in qubits.iter().enumerate() {
                full |= ((env >> i) & 1) << q;
            }
            full
        };
        for r in 0..dim_out {
            for c in 0..dim_out {
                let mut sum = Complex64::new(0.0, 0.0);
                for env in 0..(1usize << qubits.len()) {
                    sum += self.elems[expand(r, env) * self.dim + expand(c, env)];
                }
                elems[r * dim_out + c] = sum;
            }
        }
        DensityMatrix { n_qubits: n_out, dim: dim_out, elems }
    }

    /// `<psi| rho |psi>`
    pub fn expectation(&self, psi: &DenseState) -> f64 {
        assert_eq!(psi.n_qubits, self.n_qubits);
        let mut sum = Complex64::new(0.0, 0.0);
        for r in 0..self.dim {
            for c in 0..self.dim {
                sum += psi.amps[r].conj() * self.elems[r * self.dim + c] * psi.amps[c];
            }
        }
        sum.re
    }

    pub fn scale(&mut self, s: f64) {
        for e in &mut self.elems {
            *e *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.n_qubits, other.n_qubits);
        for (a, b) in self.elems.iter_mut().zip(&other.elems) {
            *a += b;
        }
    }
}

/// Brute-force references for the purification circuits, built directly from
/// density-matrix evolution. Independent of the Pauli-frame propagation these
/// references are used to check.
pub mod oracle {
    use super::{DenseState, DensityMatrix};
    use crate::pauli::{depolarizing1, depolarizing2, BellIndex, CliffordGate};
    use crate::purify::BellDiagonalState;

    /// The Bell-diagonal mixture as an explicit two-qubit density matrix.
    pub fn bell_mixture(s: &BellDiagonalState) -> DensityMatrix {
        DensityMatrix::mixture(&[
            (s.a, DenseState::bell(2, BellIndex { mu: false, nu: false })),
            (s.b, DenseState::bell(2, BellIndex { mu: false, nu: true })),
            (s.c, DenseState::bell(2, BellIndex { mu: true, nu: false })),
            (s.d, DenseState::bell(2, BellIndex { mu: true, nu: true })),
        ])
    }

    /// Reads the Bell-diagonal weights back out of an (unnormalized)
    /// two-qubit density matrix with trace `norm`.
    pub fn bell_weights(rho: &DensityMatrix, norm: f64) -> BellDiagonalState {
        let w = |mu, nu| rho.expectation(&DenseState::bell(2, BellIndex { mu, nu })) / norm;
        BellDiagonalState {
            a: w(false, false),
            b: w(false, true),
            c: w(true, false),
            d: w(true, true),
        }
    }

    /// One pumping round simulated as a dense 4-qubit density matrix:
    /// qubits (0, 1) hold the stored pair, (2, 3) the fresh broker pair;
    /// CNOT from stored onto broker in each node, dressed two-qubit noise,
    /// dressed broker readout, post-selected on agreeing outcomes.
    ///
    /// Returns the accepted stored-pair state and the acceptance probability.
    pub fn pump_bit_error_oracle(
        target: &BellDiagonalState,
        raw: &BellDiagonalState,
        p_local: f64,
    ) -> (BellDiagonalState, f64) {
        let mut rho = bell_mixture(target).tensor(&bell_mixture(raw));
        rho.apply_gate(CliffordGate::Cnot { control: 0, target: 2 });
        rho.apply_channel(&depolarizing2(p_local).unwrap().embed(4, &[0, 2]));
        rho.apply_gate(CliffordGate::Cnot { control: 1, target: 3 });
        rho.apply_channel(&depolarizing2(p_local).unwrap().embed(4, &[1, 3]));
        rho.apply_channel(&depolarizing1(p_local).unwrap().embed(4, &[2]));
        rho.apply_channel(&depolarizing1(p_local).unwrap().embed(4, &[3]));

        let mut accept = 0.0;
        let mut kept: Option<DensityMatrix> = None;
        for outcome in [false, true] {
            let mut branch = rho.clone();
            accept += branch.project_z(&[2, 3], &[outcome, outcome]);
            let reduced = branch.partial_trace(&[2, 3]);
            match &mut kept {
                Some(k) => k.add_assign(&reduced),
                None => kept = Some(reduced),
            }
        }
        let kept = kept.expect("two branches");
        (bell_weights(&kept, accept), accept)
    }
}

/// Action of a Pauli on a computational basis index: `P |i> = phase |j>`.
fn pauli_index_action(op: &PauliOperator, index: usize) -> (usize, Complex64) {
    let x = op.x_mask() as usize;
    let z = op.z_mask() as usize;
    let new_index = index ^ x;
    // Z part acts on the flipped ket; Y contributes i per site
    let z_sign = ((new_index & z).count_ones() & 1) == 1;
    let y_count = (x & z).count_ones() % 4;
    let mut phase = match y_count {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    if z_sign {
        phase = -phase;
    }
    (new_index, phase)
}
