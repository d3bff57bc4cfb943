//! Pauli-string and Pauli-channel algebra.
//!
//! Channels are sparse maps from Pauli operators to probabilities. Global
//! phases are discarded throughout: a channel only ever needs to know *which*
//! Pauli acts, never with which sign, so operators are identified by their
//! X/Z bit masks alone. The [`dense`](crate::dense) oracle is the only place
//! phases are tracked.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

/// Largest qubit count supported by the mask representation.
pub const MAX_QUBITS: usize = 64;

/// Probability-sum tolerance for channel normalization checks.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliError {
    /// Operator or channel constructed with zero or more than [`MAX_QUBITS`] qubits.
    BadQubitCount(usize),
    /// Qubit index outside the operator.
    QubitOutOfRange { index: usize, n_qubits: usize },
    /// Channel sizes disagree.
    SizeMismatch { left: usize, right: usize },
    /// A probability was negative, non-finite, or the sum was not 1.
    NotNormalized,
}

impl fmt::Display for PauliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PauliError::BadQubitCount(n) => {
                write!(f, "qubit count {n} outside 1..={MAX_QUBITS}")
            }
            PauliError::QubitOutOfRange { index, n_qubits } => {
                write!(f, "qubit index {index} out of range for {n_qubits} qubits")
            }
            PauliError::SizeMismatch { left, right } => {
                write!(f, "channel size mismatch: {left} vs {right} qubits")
            }
            PauliError::NotNormalized => write!(f, "probabilities must be >= 0 and sum to 1"),
        }
    }
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// (x, z) bit pair: I=(0,0), X=(1,0), Z=(0,1), Y=(1,1).
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

/// Multi-qubit Pauli operator, phase discarded.
///
/// Bit `i` of `x_mask` / `z_mask` gives the (x, z) pair of qubit `i`;
/// equality and ordering depend only on the masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliOperator {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliOperator {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(
            (1..=MAX_QUBITS).contains(&n_qubits),
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        );
        PauliOperator { n_qubits, x_mask: 0, z_mask: 0 }
    }

    pub fn from_masks(n_qubits: usize, x_mask: u64, z_mask: u64) -> Self {
        let mut op = Self::identity(n_qubits);
        let valid = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        assert!(x_mask & !valid == 0 && z_mask & !valid == 0, "mask bits beyond qubit count");
        op.x_mask = x_mask;
        op.z_mask = z_mask;
        op
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut op = Self::identity(paulis.len());
        for (i, p) in paulis.iter().enumerate() {
            op.set(i, *p);
        }
        op
    }

    /// Single non-identity Pauli on qubit `index` of an `n_qubits` register.
    pub fn single(n_qubits: usize, index: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n_qubits);
        op.set(index, p);
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, index: usize) -> Pauli {
        assert!(index < self.n_qubits);
        Pauli::from_bits(self.x_mask >> index & 1 == 1, self.z_mask >> index & 1 == 1)
    }

    pub fn set(&mut self, index: usize, p: Pauli) {
        assert!(index < self.n_qubits);
        let (x, z) = p.bits();
        let bit = 1u64 << index;
        self.x_mask = self.x_mask & !bit | if x { bit } else { 0 };
        self.z_mask = self.z_mask & !bit | if z { bit } else { 0 };
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        (self.x_mask | self.z_mask).count_ones() as usize
    }

    /// Product up to phase: masks XOR.
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits);
        PauliOperator {
            n_qubits: self.n_qubits,
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
        }
    }

    /// Embeds this operator into a larger register, placing its qubit `i` on
    /// `targets[i]`.
    pub fn embed_on(&self, n_qubits: usize, targets: &[usize]) -> Self {
        assert_eq!(targets.len(), self.n_qubits);
        let mut out = PauliOperator::identity(n_qubits);
        for (i, &t) in targets.iter().enumerate() {
            out.set(t, self.get(i));
        }
        out
    }

    /// Restriction to a subset of qubits, in the order given.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut op = PauliOperator::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            op.set(i, self.get(q));
        }
        op
    }

    pub fn paulis(&self) -> Vec<Pauli> {
        (0..self.n_qubits).map(|i| self.get(i)).collect()
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_qubits {
            let c = match self.get(i) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Labels the four Bell states: `mu` is the bit-parity index, `nu` the phase index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BellIndex {
    pub mu: bool,
    pub nu: bool,
}

/// Clifford gates used to propagate Pauli errors through circuits.
///
/// Conjugation maps every Pauli to exactly one Pauli; the discarded sign is
/// irrelevant for channel weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
}

impl CliffordGate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            CliffordGate::H(q) | CliffordGate::S(q) => (q, None),
            CliffordGate::Cnot { control, target } => (control, Some(target)),
            CliffordGate::Cz(a, b) => (a, Some(b)),
        }
    }

    /// Image of `op` under g · P · g†, phase discarded.
    pub fn conjugate_op(&self, op: &PauliOperator) -> PauliOperator {
        let mut out = *op;
        let (q1, q2) = self.qubits();
        assert!(q1 < op.n_qubits());
        if let Some(q) = q2 {
            assert!(q < op.n_qubits() && q != q1);
        }
        match *self {
            // H: X <-> Z
            CliffordGate::H(q) => {
                let bit = 1u64 << q;
                let x = out.x_mask & bit;
                let z = out.z_mask & bit;
                out.x_mask = out.x_mask & !bit | z;
                out.z_mask = out.z_mask & !bit | x;
            }
            // S: X -> Y, Z -> Z
            CliffordGate::S(q) => {
                let bit = 1u64 << q;
                out.z_mask ^= out.x_mask & bit;
            }
            // CNOT: X_c -> X_c X_t, Z_t -> Z_c Z_t
            CliffordGate::Cnot { control, target } => {
                if out.x_mask >> control & 1 == 1 {
                    out.x_mask ^= 1 << target;
                }
                if out.z_mask >> target & 1 == 1 {
                    out.z_mask ^= 1 << control;
                }
            }
            // CZ: X_a -> X_a Z_b, X_b -> X_b Z_a
            CliffordGate::Cz(a, b) => {
                if out.x_mask >> a & 1 == 1 {
                    out.z_mask ^= 1 << b;
                }
                if out.x_mask >> b & 1 == 1 {
                    out.z_mask ^= 1 << a;
                }
            }
        }
        out
    }
}

/// Probability distribution over Pauli operators on a fixed register.
///
/// Invariant: all weights are >= 0 and sum to 1 within [`NORM_TOL`]; zero-weight
/// terms are dropped. Backed by an ordered map so iteration is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliChannel {
    n_qubits: usize,
    terms: BTreeMap<PauliOperator, f64>,
}

impl PauliChannel {
    pub fn identity(n_qubits: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(PauliOperator::identity(n_qubits), 1.0);
        PauliChannel { n_qubits, terms }
    }

    /// Builds a channel from (operator, probability) pairs; weights for
    /// repeated operators accumulate.
    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self, PauliError>
    where
        I: IntoIterator<Item = (PauliOperator, f64)>,
    {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(PauliError::BadQubitCount(n_qubits));
        }
        let mut map: BTreeMap<PauliOperator, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (op, p) in terms {
            if op.n_qubits() != n_qubits {
                return Err(PauliError::SizeMismatch { left: op.n_qubits(), right: n_qubits });
            }
            if !p.is_finite() || p < 0.0 {
                return Err(PauliError::NotNormalized);
            }
            total += p;
            if p > 0.0 {
                *map.entry(op).or_insert(0.0) += p;
            }
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(PauliError::NotNormalized);
        }
        Ok(PauliChannel { n_qubits, terms: map })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliOperator, f64)> {
        self.terms.iter().map(|(op, &p)| (op, p))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn probability(&self, op: &PauliOperator) -> f64 {
        self.terms.get(op).copied().unwrap_or(0.0)
    }

    pub fn total_probability(&self) -> f64 {
        self.terms.values().sum()
    }

    /// Probability that the channel acts non-trivially.
    pub fn error_probability(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(op, _)| !op.is_identity())
            .map(|(_, p)| p)
            .sum()
    }

    /// Convolution of two channels acting on the same register: the
    /// distribution of the product Pauli.
    pub fn compose(&self, other: &Self) -> Result<Self, PauliError> {
        if self.n_qubits != other.n_qubits {
            return Err(PauliError::SizeMismatch { left: self.n_qubits, right: other.n_qubits });
        }
        let mut terms: BTreeMap<PauliOperator, f64> = BTreeMap::new();
        for (a, pa) in &self.terms {
            for (b, pb) in &other.terms {
                *terms.entry(a.product(b)).or_insert(0.0) += pa * pb;
            }
        }
        Ok(PauliChannel { n_qubits: self.n_qubits, terms })
    }

    /// Conjugates every term by the gate; probabilities are unchanged and the
    /// term count is preserved (conjugation is a bijection on Paulis).
    pub fn conjugate(&self, gate: CliffordGate) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(op, &p)| (gate.conjugate_op(op), p))
            .collect();
        PauliChannel { n_qubits: self.n_qubits, terms }
    }

    /// Embeds a channel on `qubits` (in order) into a larger register.
    pub fn embed(&self, n_qubits: usize, qubits: &[usize]) -> Self {
        assert_eq!(qubits.len(), self.n_qubits);
        let mut terms = BTreeMap::new();
        for (op, &p) in &self.terms {
            let mut big = PauliOperator::identity(n_qubits);
            for (i, &q) in qubits.iter().enumerate() {
                big.set(q, op.get(i));
            }
            terms.insert(big, p);
        }
        PauliChannel { n_qubits, terms }
    }

    /// Marginal channel on a subset of qubits (in the order given).
    pub fn marginal(&self, qubits: &[usize]) -> Self {
        let mut terms: BTreeMap<PauliOperator, f64> = BTreeMap::new();
        for (op, &p) in &self.terms {
            *terms.entry(op.restrict(qubits)).or_insert(0.0) += p;
        }
        PauliChannel { n_qubits: qubits.len(), terms }
    }

    /// Weighted mixture of channels on a common register.
    pub fn mix(parts: &[(f64, &PauliChannel)]) -> Result<Self, PauliError> {
        let n = parts.first().map(|(_, c)| c.n_qubits()).unwrap_or(0);
        let mut terms: BTreeMap<PauliOperator, f64> = BTreeMap::new();
        for (w, chan) in parts {
            if chan.n_qubits() != n {
                return Err(PauliError::SizeMismatch { left: chan.n_qubits(), right: n });
            }
            for (op, p) in chan.terms() {
                *terms.entry(*op).or_insert(0.0) += w * p;
            }
        }
        PauliChannel::from_terms(n, terms)
    }

    /// Single-qubit marginal weights (pI, pX, pY, pZ) of qubit `q`.
    pub fn marginal_weights(&self, q: usize) -> [f64; 4] {
        let mut w = [0.0; 4];
        for (op, &p) in &self.terms {
            let idx = match op.get(q) {
                Pauli::I => 0,
                Pauli::X => 1,
                Pauli::Y => 2,
                Pauli::Z => 3,
            };
            w[idx] += p;
        }
        w
    }
}

/// Network entanglement noise: `A [II] + B [Z.] + C [X.] + D [Y.]` with the
/// error placed on the first qubit. `A` is the fidelity of the entanglement.
pub fn raw_entanglement_channel(a: f64, b: f64, c: f64, d: f64) -> Result<PauliChannel, PauliError> {
    let ops = [
        (PauliOperator::identity(2), a),
        (PauliOperator::single(2, 0, Pauli::Z), b),
        (PauliOperator::single(2, 0, Pauli::X), c),
        (PauliOperator::single(2, 0, Pauli::Y), d),
    ];
    PauliChannel::from_terms(2, ops)
}

/// Single-qubit depolarizing channel `(1-p)[I] + p/3 ([X]+[Y]+[Z])`.
pub fn depolarizing1(p: f64) -> Result<PauliChannel, PauliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PauliError::NotNormalized);
    }
    PauliChannel::from_terms(
        1,
        [
            (PauliOperator::identity(1), 1.0 - p),
            (PauliOperator::single(1, 0, Pauli::X), p / 3.0),
            (PauliOperator::single(1, 0, Pauli::Y), p / 3.0),
            (PauliOperator::single(1, 0, Pauli::Z), p / 3.0),
        ],
    )
}

/// Two-qubit depolarizing channel: `(1-p)[II] + p/15` on each of the 15
/// non-identity two-qubit Paulis.
pub fn depolarizing2(p: f64) -> Result<PauliChannel, PauliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PauliError::NotNormalized);
    }
    let mut terms = Vec::with_capacity(16);
    for p0 in Pauli::ALL {
        for p1 in Pauli::ALL {
            let op = PauliOperator::from_paulis(&[p0, p1]);
            let w = if op.is_identity() { 1.0 - p } else { p / 15.0 };
            terms.push((op, w));
        }
    }
    PauliChannel::from_terms(2, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op1(p: Pauli) -> PauliOperator {
        PauliOperator::from_paulis(&[p])
    }

    fn op2(a: Pauli, b: Pauli) -> PauliOperator {
        PauliOperator::from_paulis(&[a, b])
    }

    #[test]
    fn identity_channel_from_unit_fidelity() {
        let c = raw_entanglement_channel(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(c.term_count(), 1);
        assert_eq!(c.probability(&PauliOperator::identity(2)), 1.0);
    }

    #[test]
    fn uniform_entanglement_mixture() {
        let c = raw_entanglement_channel(0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(c.term_count(), 4);
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            assert_eq!(c.probability(&PauliOperator::single(2, 0, p)), 0.25);
        }
    }

    #[test]
    fn entanglement_channel_rejects_bad_input() {
        assert!(raw_entanglement_channel(0.9, 0.2, 0.0, 0.0).is_err());
        assert!(raw_entanglement_channel(1.1, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn depolarizing1_weights() {
        let c = depolarizing1(0.3).unwrap();
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            assert!((c.probability(&op1(p)) - 0.1).abs() < 1e-15);
        }
        assert_eq!(depolarizing1(0.0).unwrap().term_count(), 1);
        assert!(depolarizing1(1.5).is_err());
        assert!(depolarizing1(-0.1).is_err());
    }

    #[test]
    fn depolarizing2_weights() {
        let c = depolarizing2(0.15).unwrap();
        assert_eq!(c.term_count(), 16);
        assert!((c.probability(&op2(Pauli::X, Pauli::Y)) - 0.01).abs() < 1e-15);
        assert!((c.probability(&PauliOperator::identity(2)) - 0.85).abs() < 1e-15);
    }

    /// Independent oracle for composing two single-qubit channels: exhaustive
    /// 4x4 product table over Pauli labels.
    fn compose_oracle_1q(a: &PauliChannel, b: &PauliChannel) -> [f64; 4] {
        let label = |p: &PauliOperator| match p.get(0) {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        };
        // product table over (I, X, Y, Z) indices, phases dropped
        let mul = |i: usize, j: usize| -> usize {
            const T: [[usize; 4]; 4] =
                [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];
            T[i][j]
        };
        let mut out = [0.0; 4];
        for (pa, wa) in a.terms() {
            for (pb, wb) in b.terms() {
                out[mul(label(pa), label(pb))] += wa * wb;
            }
        }
        out
    }

    #[test]
    fn compose_depolarizing_matches_oracle() {
        let d = depolarizing1(0.3).unwrap();
        let c = d.compose(&d).unwrap();
        let oracle = compose_oracle_1q(&d, &d);
        assert!((oracle[0] - 0.52).abs() < 1e-12);
        assert!((c.probability(&PauliOperator::identity(1)) - 0.52).abs() < 1e-12);
        for (i, p) in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
            assert!((c.probability(&op1(p)) - oracle[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_identities() {
        let d = depolarizing1(0.3).unwrap();
        let id = PauliChannel::identity(1);
        assert_eq!(d.compose(&id).unwrap(), d);
        // Z composed with Z is the identity
        let z = PauliChannel::from_terms(1, [(op1(Pauli::Z), 1.0)]).unwrap();
        let zz = z.compose(&z).unwrap();
        assert_eq!(zz, PauliChannel::identity(1));
        assert!(d.compose(&depolarizing2(0.1).unwrap()).is_err());
    }

    #[test]
    fn depolarizing2_marginal_is_depolarizing1() {
        // Tracing out qubit 0 leaves qubit 1 depolarized at 12/15 of the rate.
        let p = 0.15;
        let c = depolarizing2(p).unwrap();
        let m = c.marginal(&[1]);
        let expect = depolarizing1(12.0 / 15.0 * p).unwrap();
        for pl in Pauli::ALL {
            assert!((m.probability(&op1(pl)) - expect.probability(&op1(pl))).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugation_table_basics() {
        let cnot = CliffordGate::Cnot { control: 0, target: 1 };
        assert_eq!(cnot.conjugate_op(&op2(Pauli::X, Pauli::I)), op2(Pauli::X, Pauli::X));
        assert_eq!(cnot.conjugate_op(&op2(Pauli::I, Pauli::Z)), op2(Pauli::Z, Pauli::Z));
        let h = CliffordGate::H(0);
        assert_eq!(h.conjugate_op(&op1(Pauli::Z)), op1(Pauli::X));
        assert_eq!(h.conjugate_op(&op1(Pauli::Y)), op1(Pauli::Y));
        let cz = CliffordGate::Cz(0, 1);
        assert_eq!(cz.conjugate_op(&op2(Pauli::X, Pauli::I)), op2(Pauli::X, Pauli::Z));
        assert_eq!(cz.conjugate_op(&op2(Pauli::Z, Pauli::I)), op2(Pauli::Z, Pauli::I));
    }

    #[test]
    fn conjugate_preserves_support_and_norm() {
        let c = depolarizing2(0.4).unwrap();
        let g = CliffordGate::Cz(0, 1);
        let conj = c.conjugate(g);
        assert_eq!(conj.term_count(), c.term_count());
        assert!((conj.total_probability() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn embed_and_restrict_roundtrip() {
        let d2 = depolarizing2(0.3).unwrap();
        let big = d2.embed(4, &[1, 3]);
        assert_eq!(big.n_qubits(), 4);
        let back = big.marginal(&[1, 3]);
        for (op, p) in d2.terms() {
            assert!((back.probability(op) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_counts_nonidentity_sites() {
        assert_eq!(op2(Pauli::X, Pauli::Y).weight(), 2);
        assert_eq!(op2(Pauli::I, Pauli::Z).weight(), 1);
        assert_eq!(PauliOperator::identity(2).weight(), 0);
    }
}
