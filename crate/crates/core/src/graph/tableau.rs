//! Stabilizer tableau with exact sign tracking.
//!
//! Generators are stored as X/Z bit rows plus a sign; products use the
//! standard phase bookkeeping (2r_h + 2r_i + sum g_j mod 4), so deterministic
//! measurement outcomes and byproduct signs are exact, not up-to-phase.

use alloc::vec;
use alloc::vec::Vec;

use crate::pauli::{CliffordGate, Pauli};

use super::schedule::LocalGate;
use super::spec::GraphSpec;

/// A Pauli on the tableau register (arbitrary width), sign +1 implied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableauPauli {
    pub n: usize,
    pub x: Vec<u64>,
    pub z: Vec<u64>,
}

impl TableauPauli {
    pub fn identity(n: usize) -> Self {
        let words = n.div_ceil(64);
        TableauPauli { n, x: vec![0; words], z: vec![0; words] }
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n);
        let (xb, zb) = p.bits();
        set_bit(&mut self.x, q, xb);
        set_bit(&mut self.z, q, zb);
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(get_bit(&self.x, q), get_bit(&self.z, q))
    }

    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut t = Self::identity(n);
        t.set(q, p);
        t
    }

    /// Z-parity operator on a pair.
    pub fn zz(n: usize, q1: usize, q2: usize) -> Self {
        let mut t = Self::identity(n);
        t.set(q1, Pauli::Z);
        t.set(q2, Pauli::Z);
        t
    }

    /// Graph-state stabilizer `K_a = X_a prod_{b in N(a)} Z_b`.
    pub fn graph_generator(n: usize, graph: &GraphSpec, a: usize) -> Self {
        let mut t = Self::identity(n);
        t.set(a, Pauli::X);
        for b in graph.neighbors(a) {
            let cur = get_bit(&t.z, b);
            set_bit(&mut t.z, b, !cur);
        }
        t
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|w| *w == 0) && self.z.iter().all(|w| *w == 0)
    }
}

fn set_bit(words: &mut [u64], i: usize, v: bool) {
    let (w, b) = (i / 64, i % 64);
    if v {
        words[w] |= 1 << b;
    } else {
        words[w] &= !(1 << b);
    }
}

fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[derive(Debug, Clone)]
struct Row {
    x: Vec<u64>,
    z: Vec<u64>,
    /// Sign bit: operator is (-1)^neg times the literal I/X/Y/Z product.
    neg: bool,
}

impl Row {
    fn from_pauli(p: &TableauPauli) -> Self {
        Row { x: p.x.clone(), z: p.z.clone(), neg: false }
    }

    fn anticommutes(&self, other: &Row) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & other.z[i]).count_ones() & 1;
            acc ^= (self.z[i] & other.x[i]).count_ones() & 1;
        }
        acc & 1 == 1
    }
}

/// Outcome of a generic Pauli measurement on the tableau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureOutcome {
    /// Measured eigenvalue: false for +1, true for -1.
    pub value: bool,
    /// True when the operator was already in the stabilizer group (up to
    /// sign) and the state is unchanged.
    pub deterministic: bool,
}

/// Outcome of a two-qubit parity projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PpOutcome {
    /// false = even parity (+1 eigenvalue of ZZ), true = odd.
    pub parity: bool,
    /// The parity was forced by the existing stabilizer group.
    pub deterministic: bool,
}

#[derive(Debug, Clone)]
pub struct StabilizerTableau {
    n: usize,
    rows: Vec<Row>,
}

impl StabilizerTableau {
    /// All qubits in |+>.
    pub fn all_plus(n: usize) -> Self {
        assert!(n >= 1);
        let words = n.div_ceil(64);
        let rows = (0..n)
            .map(|q| {
                let mut x = vec![0u64; words];
                set_bit(&mut x, q, true);
                Row { x, z: vec![0u64; words], neg: false }
            })
            .collect();
        StabilizerTableau { n, rows }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Phase bookkeeping for row_h := row_h * row_i.
    fn rowsum(h: &mut Row, i: &Row) {
        let mut g: i32 = 0;
        for w in 0..h.x.len() {
            // per-bit loop; registers here are small enough not to care
            let mut bits = h.x[w] | h.z[w] | i.x[w] | i.z[w];
            while bits != 0 {
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                let x1 = i.x[w] >> b & 1;
                let z1 = i.z[w] >> b & 1;
                let x2 = h.x[w] >> b & 1;
                let z2 = h.z[w] >> b & 1;
                g += match (x1, z1) {
                    (0, 0) => 0,
                    (1, 1) => z2 as i32 - x2 as i32,
                    (1, 0) => (z2 as i32) * (2 * x2 as i32 - 1),
                    _ => (x2 as i32) * (1 - 2 * z2 as i32),
                };
            }
        }
        let r = 2 * (h.neg as i32) + 2 * (i.neg as i32) + g;
        debug_assert!(r.rem_euclid(4) % 2 == 0, "product of commuting stabilizers");
        h.neg = r.rem_euclid(4) == 2;
        for w in 0..h.x.len() {
            h.x[w] ^= i.x[w];
            h.z[w] ^= i.z[w];
        }
    }

    pub fn apply_gate(&mut self, gate: CliffordGate) {
        match gate {
            CliffordGate::H(q) => self.h(q),
            CliffordGate::S(q) => self.s(q),
            CliffordGate::Cnot { control, target } => self.cnot(control, target),
            CliffordGate::Cz(a, b) => {
                self.h(b);
                self.cnot(a, b);
                self.h(b);
            }
        }
    }

    pub fn apply_local(&mut self, q: usize, gate: LocalGate) {
        match gate {
            LocalGate::H => self.h(q),
            LocalGate::S => self.s(q),
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        for row in &mut self.rows {
            let x = get_bit(&row.x, q);
            let z = get_bit(&row.z, q);
            let flip = match p {
                Pauli::I => false,
                Pauli::X => z,
                Pauli::Z => x,
                Pauli::Y => x ^ z,
            };
            row.neg ^= flip;
        }
    }

    fn h(&mut self, q: usize) {
        assert!(q < self.n);
        for row in &mut self.rows {
            let x = get_bit(&row.x, q);
            let z = get_bit(&row.z, q);
            row.neg ^= x & z;
            set_bit(&mut row.x, q, z);
            set_bit(&mut row.z, q, x);
        }
    }

    fn s(&mut self, q: usize) {
        assert!(q < self.n);
        for row in &mut self.rows {
            let x = get_bit(&row.x, q);
            let z = get_bit(&row.z, q);
            row.neg ^= x & z;
            set_bit(&mut row.z, q, x ^ z);
        }
    }

    fn cnot(&mut self, c: usize, t: usize) {
        assert!(c < self.n && t < self.n && c != t);
        for row in &mut self.rows {
            let xc = get_bit(&row.x, c);
            let zc = get_bit(&row.z, c);
            let xt = get_bit(&row.x, t);
            let zt = get_bit(&row.z, t);
            row.neg ^= xc & zt & (xt == zc);
            set_bit(&mut row.x, t, xt ^ xc);
            set_bit(&mut row.z, c, zc ^ zt);
        }
    }

    /// Measures a Pauli observable. `choice` supplies the outcome when it is
    /// not determined by the group (both eigenvalues have probability 1/2, so
    /// forcing one is exact post-selection).
    pub fn measure<F>(&mut self, op: &TableauPauli, choice: F) -> MeasureOutcome
    where
        F: FnOnce() -> bool,
    {
        assert_eq!(op.n, self.n);
        let m = Row::from_pauli(op);
        let anti: Vec<usize> = (0..self.n)
            .filter(|&i| self.rows[i].anticommutes(&m))
            .collect();
        if let Some((&pivot, rest)) = anti.split_first() {
            let pivot_row = self.rows[pivot].clone();
            for &j in rest {
                Self::rowsum(&mut self.rows[j], &pivot_row);
            }
            let value = choice();
            self.rows[pivot] = Row { x: m.x, z: m.z, neg: value };
            MeasureOutcome { value, deterministic: false }
        } else {
            let sign = self
                .sign_in_group(op)
                .expect("a commuting Pauli lies in the stabilizer group of a pure state");
            MeasureOutcome { value: sign, deterministic: true }
        }
    }

    /// If `op` (with +1 sign) is in the group up to sign, returns the sign it
    /// carries there (false = +). Returns None when not a member.
    pub fn sign_in_group(&self, op: &TableauPauli) -> Option<bool> {
        // Gaussian elimination over the symplectic bits with exact phases.
        let words = self.rows[0].x.len();
        let mut work = self.rows.clone();
        let mut acc = Row { x: vec![0; words], z: vec![0; words], neg: false };
        let target = Row::from_pauli(op);
        let mut used = vec![false; work.len()];
        let columns: Vec<(bool, usize)> = (0..self.n)
            .flat_map(|q| [(false, q), (true, q)])
            .collect();
        for (is_z, q) in columns {
            let bit_of = |row: &Row| {
                if is_z {
                    get_bit(&row.z, q)
                } else {
                    get_bit(&row.x, q)
                }
            };
            let Some(p) = (0..work.len()).find(|&i| !used[i] && bit_of(&work[i])) else {
                continue;
            };
            used[p] = true;
            let pivot_row = work[p].clone();
            for i in 0..work.len() {
                if i != p && !used[i] && bit_of(&work[i]) {
                    Self::rowsum(&mut work[i], &pivot_row);
                }
            }
            let acc_target_bit = if is_z {
                get_bit(&acc.z, q) != get_bit(&target.z, q)
            } else {
                get_bit(&acc.x, q) != get_bit(&target.x, q)
            };
            if acc_target_bit {
                Self::rowsum(&mut acc, &pivot_row);
            }
        }
        if acc.x == target.x && acc.z == target.z {
            Some(acc.neg)
        } else {
            None
        }
    }

    /// Parity projection: non-destructive measurement of `Z_{q1} Z_{q2}`.
    /// `choice` picks the parity when it is not already determined.
    pub fn parity_projection<F>(&mut self, q1: usize, q2: usize, choice: F) -> PpOutcome
    where
        F: FnOnce() -> bool,
    {
        assert!(q1 != q2 && q1 < self.n && q2 < self.n, "invalid projection pair");
        let op = TableauPauli::zz(self.n, q1, q2);
        let out = self.measure(&op, choice);
        PpOutcome { parity: out.value, deterministic: out.deterministic }
    }

    /// Generators remain pairwise commuting and independent; used by tests
    /// after every schedule step.
    pub fn invariants_hold(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.rows[i].anticommutes(&self.rows[j]) {
                    return false;
                }
            }
        }
        self.rank() == self.n
    }

    fn rank(&self) -> usize {
        let mut vecs: Vec<Vec<u64>> = self
            .rows
            .iter()
            .map(|r| {
                let mut v = r.x.clone();
                v.extend_from_slice(&r.z);
                v
            })
            .collect();
        let mut rank = 0;
        let bits = 2 * self.rows[0].x.len() * 64;
        for col in 0..bits {
            let Some(p) = (rank..vecs.len()).find(|&i| get_bit(&vecs[i], col)) else {
                continue;
            };
            vecs.swap(rank, p);
            let pivot = vecs[rank].clone();
            for (i, v) in vecs.iter_mut().enumerate() {
                if i != rank && get_bit(v, col) {
                    for (a, b) in v.iter_mut().zip(&pivot) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Standalone parity projection with an explicit outcome choice; `forced`
/// substitutes for the fair coin when the parity is undetermined.
pub fn apply_parity_projection(
    tableau: &mut StabilizerTableau,
    q1: usize,
    q2: usize,
    forced: Option<bool>,
) -> PpOutcome {
    tableau.parity_projection(q1, q2, || forced.unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::spec::GraphSpec;

    #[test]
    fn bell_pair_parity_is_deterministic() {
        // H + CNOT entangles a pair whose ZZ parity is even with certainty.
        let mut t = StabilizerTableau::all_plus(2);
        // |++> -> measure ZZ to entangle, forcing even
        let out = apply_parity_projection(&mut t, 0, 1, Some(false));
        assert!(!out.deterministic);
        assert!(!out.parity);
        // repeating the projection has no new effect
        let again = apply_parity_projection(&mut t, 0, 1, None);
        assert!(again.deterministic);
        assert!(!again.parity);
        assert!(t.invariants_hold());
    }

    #[test]
    fn pp_on_fresh_plus_pair_gives_xx_zz_stabilizers() {
        let mut t = StabilizerTableau::all_plus(2);
        apply_parity_projection(&mut t, 0, 1, Some(false));
        let mut xx = TableauPauli::identity(2);
        xx.set(0, Pauli::X);
        xx.set(1, Pauli::X);
        assert_eq!(t.sign_in_group(&xx), Some(false));
        assert_eq!(t.sign_in_group(&TableauPauli::zz(2, 0, 1)), Some(false));
    }

    #[test]
    fn forced_odd_outcome_flips_sign() {
        let mut t = StabilizerTableau::all_plus(2);
        let out = apply_parity_projection(&mut t, 0, 1, Some(true));
        assert!(out.parity);
        assert_eq!(t.sign_in_group(&TableauPauli::zz(2, 0, 1)), Some(true));
    }

    #[test]
    fn sign_in_group_detects_nonmembers() {
        let t = StabilizerTableau::all_plus(3);
        let z0 = TableauPauli::single(3, 0, Pauli::Z);
        assert_eq!(t.sign_in_group(&z0), None);
        let x0 = TableauPauli::single(3, 0, Pauli::X);
        assert_eq!(t.sign_in_group(&x0), Some(false));
    }

    #[test]
    fn pauli_byproduct_flips_generator_signs() {
        let mut t = StabilizerTableau::all_plus(1);
        t.apply_pauli(0, Pauli::Z);
        let x = TableauPauli::single(1, 0, Pauli::X);
        assert_eq!(t.sign_in_group(&x), Some(true));
    }

    #[test]
    fn graph_state_stabilizers_from_cz_construction() {
        // build a 4-cycle graph state with CZ gates and verify every K_a
        let mut g = GraphSpec::with_vertices(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            g.add_edge(a, b).unwrap();
        }
        let mut t = StabilizerTableau::all_plus(4);
        for &(a, b) in g.edges().iter() {
            t.apply_gate(CliffordGate::Cz(a, b));
        }
        for a in 0..4 {
            let k = TableauPauli::graph_generator(4, &g, a);
            assert_eq!(t.sign_in_group(&k), Some(false), "K_{a}");
        }
        assert!(t.invariants_hold());
    }

    #[test]
    fn measurement_collapse_and_rank() {
        let mut t = StabilizerTableau::all_plus(3);
        t.apply_gate(CliffordGate::Cz(0, 1));
        t.apply_gate(CliffordGate::Cz(1, 2));
        let z1 = TableauPauli::single(3, 1, Pauli::Z);
        let out = t.measure(&z1, || false);
        assert!(!out.deterministic);
        assert!(t.invariants_hold());
        // after measuring Z on the middle vertex, its neighbors decouple with
        // Z-type stabilizers intact
        assert_eq!(t.sign_in_group(&z1), Some(false));
    }
}
