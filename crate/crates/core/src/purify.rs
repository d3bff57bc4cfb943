//! Bit-error entanglement pumping and the truncated parity-projection walk.
//!
//! The stored pair is described in the Bell-diagonal picture throughout: all
//! circuits here are Clifford with Pauli noise, so the four Bell-state weights
//! are a complete description. The analysis fixes the target Bell state to
//! (mu, nu) = (0, 0); the other targets are identical up to relabeling.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::circuit::{self, NoisyCircuit};
use crate::pauli::{Pauli, PauliChannel, PauliOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PurifyError {
    /// Bell-diagonal weights or a rate negative / not summing to 1.
    NotNormalized,
    /// Phase-error probability outside [0, 1/2): majority voting is
    /// uninformative at or above one half.
    PhaseErrorOutOfRange(f64),
    /// Walk truncation must satisfy 1 <= M <= H.
    BadTruncation { m_target: usize, h_max: usize },
}

impl fmt::Display for PurifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PurifyError::NotNormalized => {
                write!(f, "Bell-diagonal weights must be >= 0 and sum to 1")
            }
            PurifyError::PhaseErrorOutOfRange(p) => {
                write!(f, "phase-error probability {p} outside [0, 0.5)")
            }
            PurifyError::BadTruncation { m_target, h_max } => {
                write!(f, "need 1 <= M <= H, got M = {m_target}, H = {h_max}")
            }
        }
    }
}

/// Two-qubit Bell-diagonal state: weights of the target Bell state and of its
/// Z-, X- and Y-errored partners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalState {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BellDiagonalState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, PurifyError> {
        let vals = [a, b, c, d];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PurifyError::NotNormalized);
        }
        if (a + b + c + d - 1.0).abs() > Self::NORM_TOL {
            return Err(PurifyError::NotNormalized);
        }
        Ok(BellDiagonalState { a, b, c, d })
    }

    pub fn perfect() -> Self {
        BellDiagonalState { a: 1.0, b: 0.0, c: 0.0, d: 0.0 }
    }

    /// State of infidelity `p` with the error split over the Z/X/Y partners by
    /// the given weights (which must sum to 1).
    pub fn from_infidelity(p: f64, split: (f64, f64, f64)) -> Result<Self, PurifyError> {
        let (wb, wc, wd) = split;
        Self::new(1.0 - p, p * wb, p * wc, p * wd)
    }

    /// Weight of states carrying a bit flip relative to the target.
    pub fn bit_error_weight(&self) -> f64 {
        self.c + self.d
    }

    /// Weight of states carrying a phase flip relative to the target.
    pub fn phase_error_weight(&self) -> f64 {
        self.b + self.d
    }

    /// The state viewed as a single-qubit error distribution acting on
    /// `qubit` of an `n_qubits` register.
    pub fn as_error_channel(&self, n_qubits: usize, qubit: usize) -> PauliChannel {
        PauliChannel::from_terms(
            n_qubits,
            [
                (PauliOperator::identity(n_qubits), self.a),
                (PauliOperator::single(n_qubits, qubit, Pauli::Z), self.b),
                (PauliOperator::single(n_qubits, qubit, Pauli::X), self.c),
                (PauliOperator::single(n_qubits, qubit, Pauli::Y), self.d),
            ],
        )
        .expect("weights normalized by construction")
    }

    /// Applies a single-qubit Pauli channel (weights in I, X, Y, Z order) to
    /// either qubit; in the Bell-diagonal picture both sides act identically.
    pub fn apply_one_sided(&self, w: [f64; 4]) -> Self {
        let [pi, px, py, pz] = w;
        let BellDiagonalState { a, b, c, d } = *self;
        BellDiagonalState {
            a: pi * a + pz * b + px * c + py * d,
            b: pz * a + pi * b + py * c + px * d,
            c: px * a + py * b + pi * c + pz * d,
            d: py * a + px * b + pz * c + pi * d,
        }
    }

    /// Classifies a residual two-qubit Pauli relative to the target Bell
    /// state: on a Bell state a two-sided Pauli acts like the one-sided
    /// product of its halves.
    pub fn class_of(residual: &PauliOperator) -> BellClass {
        debug_assert_eq!(residual.n_qubits(), 2);
        let bit = (residual.x_mask() & 1) ^ (residual.x_mask() >> 1 & 1) == 1;
        let phase = (residual.z_mask() & 1) ^ (residual.z_mask() >> 1 & 1) == 1;
        match (bit, phase) {
            (false, false) => BellClass::Target,
            (false, true) => BellClass::PhaseFlip,
            (true, false) => BellClass::BitFlip,
            (true, true) => BellClass::Both,
        }
    }
}

/// Which Bell-diagonal component a residual error maps the target into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellClass {
    Target,
    PhaseFlip,
    BitFlip,
    Both,
}

/// Outcome of a pumping round or schedule, post-selected on acceptance.
#[derive(Debug, Clone)]
pub struct PumpingResult {
    pub state: BellDiagonalState,
    /// Probability that every round of the schedule accepted.
    pub accept_prob: f64,
    pub rounds_used: usize,
    /// Local gate/readout layers consumed (waiting time for entanglement
    /// attempts is priced separately by the error accounting).
    pub elementary_steps: usize,
    /// Acceptance probability of each round in order.
    pub round_accept_probs: Vec<f64>,
}

/// One bit-error pumping round: consumes a fresh `raw` pair on the brokers to
/// test the stored `target` pair, accepting when the broker readouts agree.
///
/// Computed by exact Pauli-channel propagation through the fixed dressed
/// circuit of [`circuit::pump_round`].
pub fn pump_bit_error(
    target: &BellDiagonalState,
    raw: &BellDiagonalState,
    p_local: f64,
) -> Result<PumpingResult, PurifyError> {
    check_rate(p_local)?;
    let circ = circuit::pump_round(p_local);
    let initial = target
        .as_error_channel(4, 0)
        .compose(&raw.as_error_channel(4, 2))
        .expect("equal sizes");
    let (state, accept_prob) = classify_accepted(&circ, &initial);
    Ok(PumpingResult {
        state,
        accept_prob,
        rounds_used: 1,
        elementary_steps: 2,
        round_accept_probs: alloc::vec![accept_prob],
    })
}

/// Propagates `initial` through the pump circuit and post-selects on the
/// broker parities agreeing.
fn classify_accepted(circ: &NoisyCircuit, initial: &PauliChannel) -> (BellDiagonalState, f64) {
    let out = circ.propagate(initial);
    let mut accept = 0.0;
    let mut w = [0.0f64; 4];
    for (op, p) in out.terms() {
        if circ.flips_parity(op) {
            continue;
        }
        accept += p;
        let idx = match BellDiagonalState::class_of(&circ.residual(op)) {
            BellClass::Target => 0,
            BellClass::PhaseFlip => 1,
            BellClass::BitFlip => 2,
            BellClass::Both => 3,
        };
        w[idx] += p;
    }
    let state = if accept > 0.0 {
        BellDiagonalState {
            a: w[0] / accept,
            b: w[1] / accept,
            c: w[2] / accept,
            d: w[3] / accept,
        }
    } else {
        BellDiagonalState::perfect()
    };
    (state, accept)
}

/// Full pumping schedule: transfers a raw pair onto the intermediate qubits
/// (one dressed two-qubit gate per node; only the marginal on the kept qubit
/// survives), then runs `n_rounds` pumping rounds against fresh copies of
/// `raw`. `between_rounds` is invoked on the stored state before each round
/// and before the final hand-off, letting the caller interleave storage noise
/// accrued while the next raw pair is generated.
pub fn pump_schedule_with<F>(
    raw: &BellDiagonalState,
    n_rounds: usize,
    p_local: f64,
    mut between_rounds: F,
) -> Result<PumpingResult, PurifyError>
where
    F: FnMut(&mut BellDiagonalState),
{
    check_rate(p_local)?;
    let transfer = crate::pauli::depolarizing1(circuit::transfer_marginal_rate(p_local))
        .expect("rate checked");
    let tw = transfer.marginal_weights(0);
    let mut state = raw.apply_one_sided(tw).apply_one_sided(tw);
    let mut accept_prob = 1.0;
    let mut round_accept_probs = Vec::with_capacity(n_rounds);
    let mut steps = 1; // the transfer layer
    for _ in 0..n_rounds {
        between_rounds(&mut state);
        let round = pump_bit_error(&state, raw, p_local)?;
        state = round.state;
        accept_prob *= round.accept_prob;
        round_accept_probs.push(round.accept_prob);
        steps += round.elementary_steps;
    }
    between_rounds(&mut state);
    Ok(PumpingResult {
        state,
        accept_prob,
        rounds_used: n_rounds,
        elementary_steps: steps,
        round_accept_probs,
    })
}

/// [`pump_schedule_with`] without storage noise between rounds.
pub fn pump_schedule(
    raw: &BellDiagonalState,
    n_rounds: usize,
    p_local: f64,
) -> Result<PumpingResult, PurifyError> {
    pump_schedule_with(raw, n_rounds, p_local, |_| {})
}

fn check_rate(p: f64) -> Result<(), PurifyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PurifyError::NotNormalized);
    }
    Ok(())
}

/// `alpha^{-2m} = (p / (1 - p))^m`, the likelihood-ratio power used by both
/// voting formulas. Written this way the expressions below stay finite for
/// every `0 <= p < 1/2`, including the noiseless limit.
fn likelihood_ratio_pow(p_p: f64, m: usize) -> f64 {
    let r = p_p / (1.0 - p_p);
    libm::pow(r, m as f64)
}

fn check_p_p(p_p: f64) -> Result<(), PurifyError> {
    if !p_p.is_finite() || !(0.0..0.5).contains(&p_p) {
        return Err(PurifyError::PhaseErrorOutOfRange(p_p));
    }
    Ok(())
}

/// Probability that the majority vote is wrong after the outcome counts
/// differ by `m`: `alpha^-m / (alpha^m + alpha^-m)` with
/// `alpha = sqrt(1/p_P - 1)`.
pub fn wrong_parity_probability(p_p: f64, m: usize) -> Result<f64, PurifyError> {
    check_p_p(p_p)?;
    let r = likelihood_ratio_pow(p_p, m);
    Ok(r / (1.0 + r))
}

/// Probability that the next projection increases the count difference:
/// `(alpha^m (1-p_P) + alpha^-m p_P) / (alpha^m + alpha^-m)`.
pub fn step_probability(p_p: f64, m: usize) -> Result<f64, PurifyError> {
    check_p_p(p_p)?;
    let r = likelihood_ratio_pow(p_p, m);
    Ok(((1.0 - p_p) + r * p_p) / (1.0 + r))
}

/// Truncation parameters of the parity-projection walk: succeed once the
/// count difference reaches `m_target` (M), abandon after `h_max` (H)
/// projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpWalkParams {
    pub p_p: f64,
    pub m_target: usize,
    pub h_max: usize,
}

impl PpWalkParams {
    pub fn new(p_p: f64, m_target: usize, h_max: usize) -> Result<Self, PurifyError> {
        check_p_p(p_p)?;
        if m_target < 1 || h_max < m_target {
            return Err(PurifyError::BadTruncation { m_target, h_max });
        }
        Ok(PpWalkParams { p_p, m_target, h_max })
    }
}

/// Exact absorption statistics of the truncated walk.
#[derive(Debug, Clone)]
pub struct PpWalkResult {
    pub success_prob: f64,
    pub fail_prob: f64,
    /// Expected wrong-parity probability at successful termination; the walk
    /// always absorbs at exactly m = M, so this equals `P_P(p_P, M)`.
    pub residual_wrong_parity: f64,
    /// Expected number of effective parity projections consumed, counting
    /// both success and failure paths.
    pub expected_pp_count: f64,
    /// Absorption distribution over (m, h).
    pub terminal_distribution: BTreeMap<(usize, usize), f64>,
}

/// Dynamic program over the walk states (m, h). The difference m reflects at
/// zero (|m| is tracked): from m = 0 either outcome yields |m| = 1.
pub fn walk_dp(params: &PpWalkParams) -> Result<PpWalkResult, PurifyError> {
    let PpWalkParams { p_p, m_target, h_max } = *params;
    let mut live = alloc::vec![0.0f64; m_target]; // live[m], m in 0..m_target
    live[0] = 1.0;
    let mut acc = WalkAccumulator::default();

    for h in 1..=h_max {
        let mut next = alloc::vec![0.0f64; m_target];
        for (m, &p) in live.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if m == 0 {
                // reflection: either outcome moves |m| to 1
                acc.push(&mut next, m_target, 1, h, p);
            } else {
                let up = step_probability(p_p, m)?;
                acc.push(&mut next, m_target, m + 1, h, p * up);
                acc.push(&mut next, m_target, m - 1, h, p * (1.0 - up));
            }
        }
        live = next;
    }

    let mut fail_prob = 0.0;
    for (m, &p) in live.iter().enumerate() {
        if p > 0.0 {
            fail_prob += p;
            acc.expected_pp += p * h_max as f64;
            *acc.terminal.entry((m, h_max)).or_insert(0.0) += p;
        }
    }

    let residual = wrong_parity_probability(p_p, m_target)?;
    Ok(PpWalkResult {
        success_prob: acc.success,
        fail_prob,
        residual_wrong_parity: residual,
        expected_pp_count: acc.expected_pp,
        terminal_distribution: acc.terminal,
    })
}

#[derive(Default)]
struct WalkAccumulator {
    success: f64,
    expected_pp: f64,
    terminal: BTreeMap<(usize, usize), f64>,
}

impl WalkAccumulator {
    fn push(&mut self, next: &mut [f64], m_target: usize, m_new: usize, h: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        if m_new >= m_target {
            self.success += p;
            self.expected_pp += p * h as f64;
            *self.terminal.entry((m_target, h)).or_insert(0.0) += p;
        } else {
            next[m_new] += p;
        }
    }
}
