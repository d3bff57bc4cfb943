//! Fixed circuit layouts for the pumping round and the parity-projection
//! application, shared by the analytic channel propagation and the Monte
//! Carlo sampler so both always evaluate the same dressed circuit.
//!
//! Qubit numbering inside both four-qubit layouts:
//! 0, 1 — the stored pair (intermediate qubits of node 1 and node 2);
//! 2, 3 — the consumed pair (brokers during pumping, clients during the PP).

use alloc::vec;
use alloc::vec::Vec;

use crate::pauli::{CliffordGate, PauliChannel, PauliOperator};

/// One element of a dressed Clifford circuit.
#[derive(Debug, Clone, Copy)]
pub enum CircuitOp {
    Gate(CliffordGate),
    /// depolarizing1(rate) on one qubit
    Depol1 { qubit: usize, rate: f64 },
    /// depolarizing2(rate) on a pair
    Depol2 { a: usize, b: usize, rate: f64 },
}

/// A four-qubit dressed circuit ending in two single-qubit measurements whose
/// outcome-flip parity is classified, with a residual read off two kept qubits.
#[derive(Debug, Clone)]
pub struct NoisyCircuit {
    pub n_qubits: usize,
    pub ops: Vec<CircuitOp>,
    /// The two measured qubits.
    pub measured: (usize, usize),
    /// If true the measurements are X-basis (outcome flipped by a Z
    /// component); otherwise Z-basis (flipped by an X component).
    pub measured_in_x: bool,
    /// The two surviving qubits carrying the residual error.
    pub kept: (usize, usize),
}

impl NoisyCircuit {
    /// Whether an accumulated Pauli flips the parity of the two measurement
    /// outcomes relative to the noiseless circuit.
    pub fn flips_parity(&self, op: &PauliOperator) -> bool {
        let mask = if self.measured_in_x { op.z_mask() } else { op.x_mask() };
        let (q1, q2) = self.measured;
        (mask >> q1 & 1) ^ (mask >> q2 & 1) == 1
    }

    /// Residual Pauli on the kept pair; errors on the measured qubits are
    /// discarded (they act after readout).
    pub fn residual(&self, op: &PauliOperator) -> PauliOperator {
        op.restrict(&[self.kept.0, self.kept.1])
    }

    /// Exact channel propagation: conjugates through gates and convolves the
    /// noise dressings, starting from `initial` on the full register.
    pub fn propagate(&self, initial: &PauliChannel) -> PauliChannel {
        assert_eq!(initial.n_qubits(), self.n_qubits);
        let mut chan = initial.clone();
        for op in &self.ops {
            match *op {
                CircuitOp::Gate(g) => chan = chan.conjugate(g),
                CircuitOp::Depol1 { qubit, rate } => {
                    let d = crate::pauli::depolarizing1(rate)
                        .expect("rate validated by caller")
                        .embed(self.n_qubits, &[qubit]);
                    chan = chan.compose(&d).expect("equal sizes");
                }
                CircuitOp::Depol2 { a, b, rate } => {
                    let d = crate::pauli::depolarizing2(rate)
                        .expect("rate validated by caller")
                        .embed(self.n_qubits, &[a, b]);
                    chan = chan.compose(&d).expect("equal sizes");
                }
            }
        }
        chan
    }
}

/// One bit-error pumping round. The stored pair controls a CNOT onto the
/// fresh broker pair and the brokers are read out in the computational
/// basis; the round is accepted when the two bits agree. Each CNOT is dressed
/// with depolarizing2 and each readout with depolarizing1 at `p_local`.
pub fn pump_round(p_local: f64) -> NoisyCircuit {
    NoisyCircuit {
        n_qubits: 4,
        ops: vec![
            CircuitOp::Gate(CliffordGate::Cnot { control: 0, target: 2 }),
            CircuitOp::Depol2 { a: 0, b: 2, rate: p_local },
            CircuitOp::Gate(CliffordGate::Cnot { control: 1, target: 3 }),
            CircuitOp::Depol2 { a: 1, b: 3, rate: p_local },
            CircuitOp::Depol1 { qubit: 2, rate: p_local },
            CircuitOp::Depol1 { qubit: 3, rate: p_local },
        ],
        measured: (2, 3),
        measured_in_x: false,
        kept: (0, 1),
    }
}

/// Application of one effective parity projection to the clients: a CZ from
/// each intermediate qubit onto its client, then X-basis readout of the
/// intermediates. The recorded client parity is the XOR of the two outcomes,
/// so a phase flip on the stored pair corrupts only the record, while a
/// residual bit flip deposits Z on a client.
pub fn pp_application(p_local: f64) -> NoisyCircuit {
    NoisyCircuit {
        n_qubits: 4,
        ops: vec![
            CircuitOp::Gate(CliffordGate::Cz(0, 2)),
            CircuitOp::Depol2 { a: 0, b: 2, rate: p_local },
            CircuitOp::Gate(CliffordGate::Cz(1, 3)),
            CircuitOp::Depol2 { a: 1, b: 3, rate: p_local },
            CircuitOp::Depol1 { qubit: 0, rate: p_local },
            CircuitOp::Depol1 { qubit: 1, rate: p_local },
        ],
        measured: (0, 1),
        measured_in_x: true,
        kept: (2, 3),
    }
}

/// Effective single-qubit marginal of the two-qubit gate dressing, as seen by
/// the surviving qubit when its partner is discarded: depolarizing1(12p/15).
pub fn transfer_marginal_rate(p_local: f64) -> f64 {
    12.0 / 15.0 * p_local
}

/// Inverse-CDF tables for a circuit's noise ops, so the Monte Carlo sampler
/// draws from exactly the channels the analytic propagation convolves.
pub struct CircuitSampler {
    circ: NoisyCircuit,
    tables: Vec<Option<Vec<(f64, PauliOperator)>>>,
}

impl CircuitSampler {
    pub fn new(circ: NoisyCircuit) -> Self {
        let n = circ.n_qubits;
        let tables = circ
            .ops
            .iter()
            .map(|op| match *op {
                CircuitOp::Gate(_) => None,
                CircuitOp::Depol1 { qubit, rate } => Some(cumulative(
                    &crate::pauli::depolarizing1(rate).expect("valid rate").embed(n, &[qubit]),
                )),
                CircuitOp::Depol2 { a, b, rate } => Some(cumulative(
                    &crate::pauli::depolarizing2(rate).expect("valid rate").embed(n, &[a, b]),
                )),
            })
            .collect();
        CircuitSampler { circ, tables }
    }

    pub fn circuit(&self) -> &NoisyCircuit {
        &self.circ
    }

    /// One Pauli-frame pass: conjugates `initial` through the gates and
    /// multiplies in one sample from every noise dressing.
    pub fn sample<R: rand_chacha::rand_core::RngCore>(
        &self,
        initial: PauliOperator,
        rng: &mut R,
    ) -> PauliOperator {
        let mut frame = initial;
        for (op, table) in self.circ.ops.iter().zip(&self.tables) {
            match op {
                CircuitOp::Gate(g) => frame = g.conjugate_op(&frame),
                _ => {
                    let t = table.as_ref().expect("noise ops carry tables");
                    frame = frame.product(&draw(t, rng));
                }
            }
        }
        frame
    }
}

fn cumulative(chan: &PauliChannel) -> Vec<(f64, PauliOperator)> {
    let mut acc = 0.0;
    chan.terms()
        .map(|(op, p)| {
            acc += p;
            (acc, *op)
        })
        .collect()
}

pub(crate) fn draw<R: rand_chacha::rand_core::RngCore>(
    table: &[(f64, PauliOperator)],
    rng: &mut R,
) -> PauliOperator {
    let u = uniform_f64(rng);
    for (cum, op) in table {
        if u < *cum {
            return *op;
        }
    }
    table.last().expect("non-empty table").1
}

/// Uniform in [0, 1) from the top 53 bits of a 64-bit draw.
pub(crate) fn uniform_f64<R: rand_chacha::rand_core::RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliChannel};

    #[test]
    fn noiseless_pump_round_is_transparent() {
        let circ = pump_round(0.0);
        let out = circ.propagate(&PauliChannel::identity(4));
        assert_eq!(out.term_count(), 1);
        assert!(!circ.flips_parity(out.terms().next().unwrap().0));
    }

    #[test]
    fn stored_bit_error_flips_pump_parity() {
        let circ = pump_round(0.0);
        let x_on_stored = PauliChannel::from_terms(
            4,
            [(PauliOperator::single(4, 0, Pauli::X), 1.0)],
        )
        .unwrap();
        let out = circ.propagate(&x_on_stored);
        let (op, _) = out.terms().next().unwrap();
        assert!(circ.flips_parity(op));
        // the stored pair keeps its bit error
        assert_eq!(circ.residual(op), PauliOperator::single(2, 0, Pauli::X));
    }

    #[test]
    fn broker_phase_error_lands_on_stored_pair() {
        let circ = pump_round(0.0);
        let z_on_broker = PauliChannel::from_terms(
            4,
            [(PauliOperator::single(4, 2, Pauli::Z), 1.0)],
        )
        .unwrap();
        let out = circ.propagate(&z_on_broker);
        let (op, _) = out.terms().next().unwrap();
        assert!(!circ.flips_parity(op));
        assert_eq!(circ.residual(op), PauliOperator::single(2, 0, Pauli::Z));
    }

    #[test]
    fn stored_phase_error_flips_pp_record_only() {
        let circ = pp_application(0.0);
        let z_on_stored = PauliChannel::from_terms(
            4,
            [(PauliOperator::single(4, 0, Pauli::Z), 1.0)],
        )
        .unwrap();
        let out = circ.propagate(&z_on_stored);
        let (op, _) = out.terms().next().unwrap();
        assert!(circ.flips_parity(op));
        assert!(circ.residual(op).is_identity());
    }

    #[test]
    fn stored_bit_error_deposits_z_on_client() {
        let circ = pp_application(0.0);
        let x_on_stored = PauliChannel::from_terms(
            4,
            [(PauliOperator::single(4, 0, Pauli::X), 1.0)],
        )
        .unwrap();
        let out = circ.propagate(&x_on_stored);
        let (op, _) = out.terms().next().unwrap();
        assert!(!circ.flips_parity(op));
        assert_eq!(circ.residual(op), PauliOperator::single(2, 0, Pauli::Z));
    }
}
