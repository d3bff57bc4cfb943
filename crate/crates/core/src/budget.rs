//! Error accounting: translates protocol-level noise into an effective
//! phase-error / loss budget on the cluster state.
//!
//! The chain is: network infidelity and local noise feed the pumping
//! schedule; the pumped pair drives one effective parity projection whose
//! record-flip probability and client-deposited channel come from exact
//! Pauli-frame propagation; the truncated walk turns those into a per-action
//! client channel, a failure (loss) probability and a time cost; walking a
//! construction schedule then accumulates per-qubit channels, folds everything
//! into Z equivalents through the cluster stabilizers, and reports face/edge
//! budgets separately.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use crate::circuit;
use crate::graph::{Action, ConstructionSchedule, QubitRole, StepKind, Sublattice};
use crate::pauli::{depolarizing1, Pauli, PauliChannel, PauliOperator};
use crate::purify::{
    pump_schedule_with, walk_dp, BellDiagonalState, PpWalkParams, PpWalkResult, PumpingResult,
    PurifyError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum BudgetError {
    InvalidParams(&'static str),
    /// Effective record-flip probability reached 1/2: majority voting cannot
    /// work, the parameters are outside the protocol's regime.
    VotingImpossible(f64),
    Purify(PurifyError),
}

impl fmt::Display for BudgetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetError::InvalidParams(what) => write!(f, "invalid parameter: {what}"),
            BudgetError::VotingImpossible(p) => {
                write!(f, "record-flip probability {p} >= 1/2, majority voting impossible")
            }
            BudgetError::Purify(e) => write!(f, "{e}"),
        }
    }
}

impl From<PurifyError> for BudgetError {
    fn from(e: PurifyError) -> Self {
        BudgetError::Purify(e)
    }
}

/// All knobs of the protocol relevant to the error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    /// Network entanglement infidelity (1 - A).
    pub p_ent: f64,
    /// How the infidelity splits over the Z/X/Y error classes; uniform by
    /// default.
    pub ent_split: (f64, f64, f64),
    /// Shared rate of every local operation (rotations, two-qubit gates,
    /// measurements, preparations).
    pub p_local: f64,
    /// Error probability per inactive qubit per elementary time step.
    pub p_mem: f64,
    /// Heralded failure rate of the network entangling operation.
    pub f_herald: f64,
    /// Pumping rounds per effective parity projection.
    pub n_rounds: usize,
    /// Walk target difference M.
    pub m_target: usize,
    /// Walk projection cap H.
    pub h_max: usize,
    /// Scales idle time of concurrent projections waiting for the slowest
    /// one; 1.0 charges plain expected durations.
    pub sync_factor: f64,
}

impl ProtocolParams {
    pub const UNIFORM_SPLIT: (f64, f64, f64) = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);

    pub fn new(p_ent: f64, p_local: f64, p_mem: f64, f_herald: f64) -> Self {
        ProtocolParams {
            p_ent,
            ent_split: Self::UNIFORM_SPLIT,
            p_local,
            p_mem,
            f_herald,
            n_rounds: 1,
            m_target: 2,
            h_max: 6,
            sync_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        let in01 = |v: f64| (0.0..1.0).contains(&v);
        if !in01(self.p_ent) {
            return Err(BudgetError::InvalidParams("p_ent must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.p_local) {
            return Err(BudgetError::InvalidParams("p_local must lie in [0, 1]"));
        }
        if !in01(self.p_mem) {
            return Err(BudgetError::InvalidParams("p_mem must lie in [0, 1)"));
        }
        if !in01(self.f_herald) {
            return Err(BudgetError::InvalidParams("f_herald must lie in [0, 1)"));
        }
        let (wb, wc, wd) = self.ent_split;
        if [wb, wc, wd].iter().any(|w| *w < 0.0) || (wb + wc + wd - 1.0).abs() > 1e-9 {
            return Err(BudgetError::InvalidParams("ent_split must be nonnegative and sum to 1"));
        }
        if self.m_target < 1 {
            return Err(BudgetError::InvalidParams("M must be at least 1"));
        }
        if self.h_max < self.m_target {
            return Err(BudgetError::InvalidParams("H must be at least M"));
        }
        if !(self.sync_factor > 0.0) {
            return Err(BudgetError::InvalidParams("sync_factor must be positive"));
        }
        Ok(())
    }

    pub fn raw_state(&self) -> Result<BellDiagonalState, BudgetError> {
        BellDiagonalState::from_infidelity(self.p_ent, self.ent_split).map_err(Into::into)
    }

    /// Expected entanglement attempts per raw pair under heralded failure.
    pub fn attempts_per_raw_pair(&self) -> f64 {
        1.0 / (1.0 - self.f_herald)
    }
}

/// Expected time and resource cost of one effective parity projection,
/// including pump-rejection restarts and heralded retries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpCost {
    /// Mean entanglement attempts per raw pair (geometric retries).
    pub attempts_per_raw_pair: f64,
    /// Raw Bell pairs consumed per effective projection, restarts included.
    pub raw_pairs: f64,
    /// Entanglement attempts per effective projection.
    pub expected_eo_attempts: f64,
    /// Elementary time units per effective projection (one unit = one
    /// entanglement attempt = one local gate layer).
    pub expected_elementary_steps: f64,
    /// Idle units each client stores per effective projection.
    pub client_idle_steps: f64,
    /// Idle units the stored pair waits per pumping round.
    pub stored_idle_steps: f64,
}

/// Noise profile of one effective parity projection.
#[derive(Debug, Clone)]
pub struct EffectivePp {
    /// Probability that the recorded parity is flipped.
    pub p_p: f64,
    /// Channel deposited on the two clients per effective projection,
    /// including their storage noise over its duration.
    pub residual: PauliChannel,
    /// Walk abandon probability.
    pub fail_prob: f64,
    pub cost: PpCost,
    pub walk: PpWalkResult,
    pub pumped: PumpingResult,
    /// Success-conditioned client channel of one whole purified projection.
    pub walk_channel: PauliChannel,
}

/// Storage noise accumulated over `idle_steps` elementary units:
/// depolarizing at rate `1 - (1 - p_mem)^idle_steps`.
pub fn memory_channel(idle_steps: f64, p_mem: f64) -> PauliChannel {
    assert!(idle_steps >= 0.0, "idle steps must be nonnegative");
    let rate = 1.0 - libm::pow(1.0 - p_mem, idle_steps);
    depolarizing1(rate).expect("rate in [0, 1] by construction")
}

/// Analyzes one effective parity projection: pumps the stored pair (with
/// storage noise while raw pairs are generated), propagates the projection
/// circuit, and extracts the record-flip probability, the client channel,
/// the walk statistics and the expected costs.
pub fn effective_pp_noise(params: &ProtocolParams) -> Result<EffectivePp, BudgetError> {
    params.validate()?;
    let raw = params.raw_state()?;
    let attempts = params.attempts_per_raw_pair();
    let stored_wait = memory_channel(attempts, params.p_mem).marginal_weights(0);

    // storage noise hits the stored pair while each round's raw pair is
    // generated; the hand-off to the projection circuit is immediate
    let n_rounds = params.n_rounds;
    let mut waits = 0usize;
    let pumped = pump_schedule_with(&raw, n_rounds, params.p_local, |state| {
        if waits < n_rounds {
            *state = state.apply_one_sided(stored_wait).apply_one_sided(stored_wait);
        }
        waits += 1;
    })?;

    // the stored pair's error acts on either side with equal weight; the
    // Bell-diagonal picture cannot distinguish them and the symmetric split
    // is the faithful reading of "acting on arbitrary one of the two qubits"
    let circ = circuit::pp_application(params.p_local);
    let initial = PauliChannel::mix(&[
        (0.5, &pumped.state.as_error_channel(4, 0)),
        (0.5, &pumped.state.as_error_channel(4, 1)),
    ])
    .expect("same register");
    let out = circ.propagate(&initial);

    let mut p_p = 0.0;
    let mut residual_terms: BTreeMap<PauliOperator, f64> = BTreeMap::new();
    for (op, w) in out.terms() {
        if circ.flips_parity(op) {
            p_p += w;
        }
        *residual_terms.entry(circ.residual(op)).or_insert(0.0) += w;
    }
    if p_p >= 0.5 {
        return Err(BudgetError::VotingImpossible(p_p));
    }
    let residual_raw =
        PauliChannel::from_terms(2, residual_terms).expect("propagated channel stays normalized");

    let walk = walk_dp(&PpWalkParams::new(p_p, params.m_target, params.h_max)?)?;
    let cost = pp_cost(params, &pumped);

    // clients idle through all of the effective projection except their own
    // gate layer
    let client_mem = memory_channel(cost.client_idle_steps, params.p_mem);
    let residual = residual_raw
        .compose(&client_mem.embed(2, &[0]))
        .and_then(|c| c.compose(&client_mem.embed(2, &[1])))
        .expect("equal sizes");

    let walk_channel = client_error_accumulation(&walk, &residual);
    Ok(EffectivePp { p_p, residual, fail_prob: walk.fail_prob, cost, walk, pumped, walk_channel })
}

/// Wald accounting for pump rejections: a rejected round discards the stored
/// pair and the whole schedule restarts with fresh raw pairs.
fn pp_cost(params: &ProtocolParams, pumped: &PumpingResult) -> PpCost {
    let attempts = params.attempts_per_raw_pair();
    let q = &pumped.round_accept_probs;
    let success: f64 = pumped.accept_prob;
    // probability of reaching round r (attempting it)
    let mut reach = 1.0;
    let mut expected_rounds = 0.0;
    for &qr in q {
        expected_rounds += reach;
        reach *= qr;
    }
    let pairs_per_run = 1.0 + expected_rounds;
    let steps_per_run = pairs_per_run * attempts + 1.0 + 2.0 * expected_rounds;
    let raw_pairs = pairs_per_run / success;
    let expected_elementary_steps = steps_per_run / success + 2.0;
    PpCost {
        attempts_per_raw_pair: attempts,
        raw_pairs,
        expected_eo_attempts: raw_pairs * attempts,
        expected_elementary_steps,
        client_idle_steps: expected_elementary_steps - 1.0,
        stored_idle_steps: attempts,
    }
}

/// Success-conditioned client channel of a whole purified projection: the
/// per-projection channel composed over the walk's distribution of consumed
/// projections, then charged with the residual wrong-parity probability as a
/// correlated phase error on the pair (a misrecorded parity is a misapplied
/// Z byproduct).
pub fn client_error_accumulation(walk: &PpWalkResult, per_pp: &PauliChannel) -> PauliChannel {
    assert_eq!(per_pp.n_qubits(), 2);
    let m_target = walk
        .terminal_distribution
        .keys()
        .map(|(m, _)| *m)
        .max()
        .unwrap_or(0);
    let h_max = walk
        .terminal_distribution
        .keys()
        .map(|(_, h)| *h)
        .max()
        .unwrap_or(0);
    let mut parts: Vec<(f64, PauliChannel)> = Vec::new();
    let mut power = PauliChannel::identity(2);
    for h in 1..=h_max {
        power = power.compose(per_pp).expect("equal sizes");
        if let Some(&p) = walk.terminal_distribution.get(&(m_target, h)) {
            if walk.success_prob > 0.0 {
                parts.push((p / walk.success_prob, power.clone()));
            }
        }
    }
    if parts.is_empty() {
        parts.push((1.0, PauliChannel::identity(2)));
    }
    let averaged = PauliChannel::mix(
        &parts.iter().map(|(w, c)| (*w, c)).collect::<Vec<_>>(),
    )
    .expect("convex mixture of normalized channels");

    let w = walk.residual_wrong_parity;
    let zz = PauliChannel::from_terms(
        2,
        [
            (PauliOperator::identity(2), 1.0 - w),
            (PauliOperator::from_paulis(&[Pauli::Z, Pauli::Z]), w),
        ],
    )
    .expect("normalized");
    averaged.compose(&zz).expect("equal sizes")
}

/// Effective budget of independent-Z, correlated-ZZ and loss probabilities on
/// one sublattice of the cluster.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SubBudget {
    pub p_z: f64,
    pub p_zz: f64,
    pub p_loss: f64,
    /// Worst per-qubit folded phase-error probability (independent part plus
    /// one Z per touching correlated event), the scalar compared against the
    /// loss-adjusted threshold.
    pub epsilon: f64,
}

/// Face- and edge-sublattice budgets; the headline numbers are the
/// element-wise worse of the two.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorBudget {
    pub p_z: f64,
    pub p_zz: f64,
    pub p_loss: f64,
    pub face: SubBudget,
    pub edge: SubBudget,
}

impl ErrorBudget {
    /// Plain-text `key = value` report.
    pub fn report_text(&self, cost: Option<&PpCost>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p_z = {:.6e}", self.p_z);
        let _ = writeln!(out, "p_zz = {:.6e}", self.p_zz);
        let _ = writeln!(out, "p_loss = {:.6e}", self.p_loss);
        let _ = writeln!(out, "face.epsilon = {:.6e}", self.face.epsilon);
        let _ = writeln!(out, "edge.epsilon = {:.6e}", self.edge.epsilon);
        if let Some(c) = cost {
            let _ = writeln!(out, "attempts_per_raw_pair = {:.6}", c.attempts_per_raw_pair);
            let _ = writeln!(out, "expected_eo_attempts = {:.6}", c.expected_eo_attempts);
            let _ = writeln!(out, "expected_elementary_steps = {:.6}", c.expected_elementary_steps);
        }
        out
    }
}

/// One classified Z-equivalent event. Each accumulated error component maps
/// to exactly one event, so total probability is conserved.
#[derive(Debug, Clone, PartialEq)]
enum ZEvent {
    /// Independent phase error on a qubit (its Z or Y component).
    Z(usize, f64),
    /// X component: through K_a it equals the closed Z loop around the qubit,
    /// which is homologically trivial for both corrections. Classified for
    /// probability conservation, harmless for the threshold.
    TrivialLoop(usize, f64),
    /// Correlated phase error on a pair.
    Pair(usize, usize, f64),
}

impl ZEvent {
    #[cfg(test)]
    fn probability(&self) -> f64 {
        match self {
            ZEvent::Z(_, p) | ZEvent::TrivialLoop(_, p) | ZEvent::Pair(_, _, p) => *p,
        }
    }
}

/// Walks a construction schedule and produces its error budget under the
/// given protocol parameters.
pub fn schedule_error_budget(
    schedule: &ConstructionSchedule,
    params: &ProtocolParams,
) -> Result<ErrorBudget, BudgetError> {
    let eff = effective_pp_noise(params)?;
    Ok(budget_from_effective(schedule, params, &eff))
}

/// Budget walk with a precomputed effective projection (the projection
/// analysis does not depend on the schedule).
pub fn budget_from_effective(
    schedule: &ConstructionSchedule,
    params: &ProtocolParams,
    eff: &EffectivePp,
) -> ErrorBudget {
    let acc = accumulate(schedule, params, eff);
    let events = classify_events(schedule, &acc);
    aggregate(schedule, &events, &acc.loss)
}

/// Raw accumulation state over a schedule walk.
#[doc(hidden)]
pub struct Accumulated {
    /// Physical Pauli channel accumulated per qubit.
    pub channels: Vec<PauliChannel>,
    /// Loss probability per qubit.
    pub loss: Vec<f64>,
    /// Correlated phase events per projected pair.
    pub pairs: BTreeMap<(usize, usize), f64>,
    /// Misapplied-byproduct (frame) Z probability per qubit: record flips
    /// are classical, so they never feed back into the physical dynamics.
    pub frame_z: Vec<f64>,
}

/// Per-qubit accumulated channels, loss probabilities and correlated pair
/// events after walking the whole schedule.
#[doc(hidden)]
pub fn accumulate(
    schedule: &ConstructionSchedule,
    params: &ProtocolParams,
    eff: &EffectivePp,
) -> Accumulated {
    schedule.validate().expect("executable schedule");
    let n = schedule.n_qubits;
    let mut channels: Vec<PauliChannel> = (0..n).map(|_| PauliChannel::identity(1)).collect();
    let mut loss = alloc::vec![0.0f64; n];
    let mut frame_z = alloc::vec![0.0f64; n];
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let e1 = depolarizing1(params.p_local).expect("rate validated");
    // which qubit inherits a removed dangler's misread byproduct
    let mut removal_partner: BTreeMap<usize, usize> = BTreeMap::new();

    // Split the per-projection client channel: terms whose phase-relevant
    // (Z or Y) part touches both clients are correlated phase events; all
    // other components act independently per side. X components are kept in
    // the per-qubit channels for their dynamic effects (they flip later
    // projection records) even though they are harmless on the finished
    // cluster.
    let zrel = |p: Pauli| matches!(p, Pauli::Z | Pauli::Y);
    let mut one_sided = [[0.0f64; 4], [0.0f64; 4]];
    let mut correlated = 0.0;
    for (op, p) in eff.walk_channel.terms() {
        let (a, b) = (op.get(0), op.get(1));
        if zrel(a) && zrel(b) {
            correlated += p;
            continue;
        }
        if a != Pauli::I {
            one_sided[0][pauli_index(a)] += p;
        }
        if b != Pauli::I {
            one_sided[1][pauli_index(b)] += p;
        }
    }
    let walk_marginal_0 = one_sided_channel(one_sided[0]);
    let walk_marginal_1 = one_sided_channel(one_sided[1]);

    for step in &schedule.steps {
        let duration = match step.kind() {
            StepKind::PpLayer => {
                eff.walk.expected_pp_count * eff.cost.expected_elementary_steps
                    * params.sync_factor
            }
            _ => 1.0,
        };
        let active = step.active_qubits();
        for action in &step.actions {
            match action {
                Action::Prepare { qubit } => {
                    compose_onto(&mut channels[*qubit], &e1);
                }
                Action::Rotate { qubit, gate } => {
                    conjugate_local(&mut channels[*qubit], *qubit, *gate);
                    compose_onto(&mut channels[*qubit], &e1);
                }
                Action::Pp { q1, q2, inheritor, pre } => {
                    for (q, g) in pre {
                        conjugate_local(&mut channels[*q], *q, *g);
                        compose_onto(&mut channels[*q], &e1);
                    }
    compose_onto(&mut channels[*q1], &walk_marginal_0);
                    compose_onto(&mut channels[*q2], &walk_marginal_1);
                    let entry = pairs.entry(ordered(*q1, *q2)).or_insert(0.0);
                    *entry = combine(*entry, correlated);
                    loss[*q1] = combine(loss[*q1], eff.fail_prob);
                    loss[*q2] = combine(loss[*q2], eff.fail_prob);
                    let other = if inheritor == q1 { *q2 } else { *q1 };
                    removal_partner.insert(other, *inheritor);
                }
                Action::Measure { qubit, .. } => {
                    compose_onto(&mut channels[*qubit], &e1);
                    // a misread removal misapplies the byproduct: a frame Z
                    // lands on the qubit the dangler hung from
                    if let Some(&partner) = removal_partner.get(qubit) {
                        let flip = phase_weight(&channels[*qubit]); // Z/Y flip an X readout
                        frame_z[partner] = combine(frame_z[partner], flip);
                    }
                }
            }
        }
        if params.p_mem > 0.0 {
            let mem = memory_channel(duration, params.p_mem);
            for q in 0..n {
                if !active.contains(&q) {
                    compose_onto(&mut channels[q], &mem);
                }
            }
        }
    }

    Accumulated { channels, loss, pairs, frame_z }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Probability that at least one of two independent events occurs.
fn combine(a: f64, b: f64) -> f64 {
    1.0 - (1.0 - a) * (1.0 - b)
}

fn pauli_index(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

/// Single-qubit channel from non-identity weights (I, X, Y, Z order with the
/// identity entry ignored); the identity takes the remaining probability.
fn one_sided_channel(w: [f64; 4]) -> PauliChannel {
    let err: f64 = w[1] + w[2] + w[3];
    PauliChannel::from_terms(
        1,
        [
            (PauliOperator::identity(1), 1.0 - err),
            (PauliOperator::single(1, 0, Pauli::X), w[1]),
            (PauliOperator::single(1, 0, Pauli::Y), w[2]),
            (PauliOperator::single(1, 0, Pauli::Z), w[3]),
        ],
    )
    .expect("weights bounded by a normalized channel")
}

/// Weight of components that flip an X-basis readout (Z or Y).
fn phase_weight(chan: &PauliChannel) -> f64 {
    let [_, _, y, z] = chan.marginal_weights(0);
    y + z
}

fn compose_onto(target: &mut PauliChannel, chan: &PauliChannel) {
    *target = target.compose(chan).expect("equal sizes");
}

fn conjugate_local(chan: &mut PauliChannel, _q: usize, gate: crate::graph::LocalGate) {
    let g = match gate {
        crate::graph::LocalGate::H => crate::pauli::CliffordGate::H(0),
        crate::graph::LocalGate::S => crate::pauli::CliffordGate::S(0),
    };
    *chan = chan.conjugate(g);
}

fn is_proper(role: QubitRole) -> bool {
    matches!(role, QubitRole::Center | QubitRole::Link)
}

/// Classifies every accumulated error into Z-equivalent events. Cluster
/// qubits are consumed by X-basis measurements, so only the phase-relevant
/// (Z or Y) component of an error matters; the X component is K_a-equivalent
/// to a closed Z loop around the qubit, which both corrections ignore.
/// Errors on leftover danglers and boundary arms act through their eventual
/// removal, flipping a Z onto their unique attachment.
fn classify_events(schedule: &ConstructionSchedule, acc: &Accumulated) -> Vec<ZEvent> {
    let mut events = Vec::new();
    for (q, chan) in acc.channels.iter().enumerate() {
        if !schedule.target.vertices().contains(&q) {
            continue; // consumed during construction; charged at removal
        }
        let [_, x, y, z] = chan.marginal_weights(0);
        if x > 0.0 {
            events.push(ZEvent::TrivialLoop(q, x));
        }
        if is_proper(schedule.qubits[q].role) {
            if z + y > 0.0 {
                events.push(ZEvent::Z(q, z + y));
            }
        } else if z + y > 0.0 {
            // degree-one decoration: Z/Y flip its eventual X-basis removal
            let nbrs = schedule.target.neighbors(q);
            debug_assert_eq!(nbrs.len(), 1, "decorations hang on one vertex");
            if let Some(&host) = nbrs.first() {
                events.push(ZEvent::Z(host, z + y));
            }
        }
    }
    for (q, &p) in acc.frame_z.iter().enumerate() {
        if p > 0.0 {
            events.push(ZEvent::Z(q, p));
        }
    }
    for (&(a, b), &p) in &acc.pairs {
        if p > 0.0 {
            events.push(ZEvent::Pair(a, b, p));
        }
    }
    events
}

fn aggregate(schedule: &ConstructionSchedule, events: &[ZEvent], loss: &[f64]) -> ErrorBudget {
    let n = schedule.n_qubits;
    let mut indep = alloc::vec![0.0f64; n];
    let mut pair_touch = alloc::vec![0.0f64; n];
    let mut pair_max = [0.0f64; 2]; // per sublattice
    for ev in events {
        match *ev {
            ZEvent::Z(q, p) => indep[q] += p,
            ZEvent::TrivialLoop(..) => {}
            ZEvent::Pair(a, b, p) => {
                for q in [a, b] {
                    if is_proper(schedule.qubits[q].role) {
                        pair_touch[q] += p;
                        let s = sublattice_index(schedule, q);
                        pair_max[s] = pair_max[s].max(p);
                    }
                }
            }
        }
    }

    let mut subs = [SubBudget::default(), SubBudget::default()];
    for q in 0..n {
        if !is_proper(schedule.qubits[q].role) || !schedule.target.vertices().contains(&q) {
            continue;
        }
        let s = sublattice_index(schedule, q);
        let eps = indep[q] + pair_touch[q];
        subs[s].p_z = subs[s].p_z.max(indep[q]);
        subs[s].epsilon = subs[s].epsilon.max(eps);
        subs[s].p_loss = subs[s].p_loss.max(loss[q]);
    }
    subs[0].p_zz = pair_max[0];
    subs[1].p_zz = pair_max[1];

    let [face, edge] = subs;
    ErrorBudget {
        p_z: face.p_z.max(edge.p_z),
        p_zz: face.p_zz.max(edge.p_zz),
        p_loss: face.p_loss.max(edge.p_loss),
        face,
        edge,
    }
}

fn sublattice_index(schedule: &ConstructionSchedule, q: usize) -> usize {
    match schedule.qubits[q].sublattice() {
        Some(Sublattice::Face) => 0,
        _ => 1,
    }
}

/// Total classified event probability; conservation against the inputs is an
/// invariant checked by the tests.
#[cfg(test)]
fn total_event_probability(events: &[ZEvent]) -> f64 {
    events.iter().map(|e| e.probability()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lattice_sheet, fuse_sheets, SheetSpec};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn rep_schedule() -> ConstructionSchedule {
        fuse_sheets(&[
            SheetSpec { lx: 3, ly: 3 },
            SheetSpec { lx: 2, ly: 2 },
            SheetSpec { lx: 3, ly: 3 },
        ])
        .unwrap()
    }

    #[test]
    fn noiseless_effective_pp() {
        let mut p = ProtocolParams::new(0.0, 0.0, 0.0, 0.0);
        p.n_rounds = 2;
        p.m_target = 2;
        p.h_max = 4;
        let eff = effective_pp_noise(&p).unwrap();
        assert_eq!(eff.p_p, 0.0);
        assert_eq!(eff.fail_prob, 0.0);
        assert_eq!(eff.residual.term_count(), 1);
        assert_eq!(eff.walk_channel.term_count(), 1);
        assert!(close(eff.cost.expected_eo_attempts, 3.0, 1e-12)); // transfer + 2 rounds
    }

    #[test]
    fn pure_phase_noise_flips_records_only() {
        let mut p = ProtocolParams::new(0.08, 0.0, 0.0, 0.0);
        p.ent_split = (1.0, 0.0, 0.0);
        p.n_rounds = 0;
        p.m_target = 1;
        p.h_max = 1;
        let eff = effective_pp_noise(&p).unwrap();
        assert!(close(eff.p_p, 0.08, 1e-12));
        assert_eq!(eff.residual.error_probability(), 0.0);
    }

    #[test]
    fn heralded_failure_costs_ten_attempts() {
        let mut p = ProtocolParams::new(0.0, 0.0, 0.0, 0.9);
        p.n_rounds = 0;
        p.m_target = 1;
        p.h_max = 1;
        let eff = effective_pp_noise(&p).unwrap();
        assert!(close(eff.cost.attempts_per_raw_pair, 10.0, 1e-12));
        // one raw pair per effective projection at zero rounds
        assert!(close(eff.cost.expected_eo_attempts, 10.0, 1e-12));
    }

    #[test]
    fn voting_impossible_rejected() {
        let mut p = ProtocolParams::new(0.8, 0.0, 0.0, 0.0);
        p.ent_split = (1.0, 0.0, 0.0);
        p.n_rounds = 0;
        match effective_pp_noise(&p) {
            Err(BudgetError::VotingImpossible(v)) => assert!(v >= 0.5),
            other => panic!("expected voting failure, got {other:?}"),
        }
    }

    #[test]
    fn memory_channel_values() {
        assert_eq!(memory_channel(0.0, 0.5).error_probability(), 0.0);
        assert_eq!(memory_channel(100.0, 0.0).error_probability(), 0.0);
        let c = memory_channel(100.0, 1e-4);
        let expect = 1.0 - (1.0f64 - 1e-4).powi(100);
        assert!(close(c.error_probability(), expect, 1e-12));
        assert!(close(c.error_probability(), 0.00995, 5e-5));
        // composing unit steps agrees at leading order; the closed form
        // deliberately ignores the tiny chance of Pauli cancellation, so the
        // exact composition sits a hair below it
        let unit = memory_channel(1.0, 1e-4);
        let mut acc = PauliChannel::identity(1);
        for _ in 0..100 {
            acc = acc.compose(&unit).unwrap();
        }
        let composed = 0.75 * (1.0 - (1.0f64 - 4.0 * 1e-4 / 3.0).powi(100));
        assert!(close(acc.error_probability(), composed, 1e-12));
        assert!(acc.error_probability() <= expect);
        assert!(close(acc.error_probability(), expect, 2e-5));
        assert!(close(acc.error_probability(), 0.00995, 5e-5));
    }

    #[test]
    fn accumulation_degenerate_cases() {
        let walk = walk_dp(&PpWalkParams::new(0.2, 2, 2).unwrap()).unwrap();
        let identity = PauliChannel::identity(2);
        let out = client_error_accumulation(&walk, &identity);
        // identity residual leaves only the wrong-parity ZZ charge
        let zz = PauliOperator::from_paulis(&[Pauli::Z, Pauli::Z]);
        assert!(close(out.probability(&zz), walk.residual_wrong_parity, 1e-15));

        // a walk consuming exactly k projections composes the residual k times
        let z0 = PauliChannel::from_terms(
            2,
            [
                (PauliOperator::identity(2), 0.9),
                (PauliOperator::single(2, 0, Pauli::Z), 0.1),
            ],
        )
        .unwrap();
        let only_two = walk_dp(&PpWalkParams::new(1e-9, 2, 2).unwrap()).unwrap();
        assert!(close(only_two.success_prob, 1.0, 1e-6));
        let out = client_error_accumulation(&only_two, &z0);
        let twice = z0.compose(&z0).unwrap();
        let z_op = PauliOperator::single(2, 0, Pauli::Z);
        assert!(close(out.probability(&z_op), twice.probability(&z_op), 1e-6));
    }

    #[test]
    fn zero_noise_budget_is_zero() {
        let p = ProtocolParams::new(0.0, 0.0, 0.0, 0.0);
        let s = build_lattice_sheet(2, 2).unwrap();
        let b = schedule_error_budget(&s, &p).unwrap();
        assert_eq!(b.p_z, 0.0);
        assert_eq!(b.p_zz, 0.0);
        assert_eq!(b.p_loss, 0.0);
    }

    #[test]
    fn walk_failure_translates_to_loss_only() {
        // phase-only network noise, zero local noise: nonzero abandon
        // probability but no deposited errors
        let mut p = ProtocolParams::new(0.2, 0.0, 0.0, 0.0);
        p.ent_split = (1.0, 0.0, 0.0);
        p.n_rounds = 0;
        p.m_target = 2;
        p.h_max = 2;
        let s = build_lattice_sheet(2, 2).unwrap();
        let eff = effective_pp_noise(&p).unwrap();
        assert!(eff.fail_prob > 0.0);
        let b = schedule_error_budget(&s, &p).unwrap();
        assert!(b.p_loss > 0.0);
        assert_eq!(b.p_z, 0.0, "no independent phase errors deposited");
        // wrong-parity charge shows up as correlated events only
        assert!(b.p_zz > 0.0);
    }

    #[test]
    fn budgets_monotone_in_each_rate() {
        let s = build_lattice_sheet(2, 2).unwrap();
        let base = ProtocolParams {
            p_ent: 0.05,
            ent_split: ProtocolParams::UNIFORM_SPLIT,
            p_local: 5e-4,
            p_mem: 1e-5,
            f_herald: 0.5,
            n_rounds: 1,
            m_target: 2,
            h_max: 6,
            sync_factor: 1.0,
        };
        let b0 = schedule_error_budget(&s, &base).unwrap();
        let metric = |b: &ErrorBudget| (b.face.epsilon.max(b.edge.epsilon), b.p_loss);
        for scale in [2.0, 4.0] {
            for field in 0..3 {
                let mut p = base.clone();
                match field {
                    0 => p.p_ent *= scale,
                    1 => p.p_local *= scale,
                    _ => p.p_mem *= scale,
                }
                let b = schedule_error_budget(&s, &p).unwrap();
                assert!(
                    metric(&b).0 >= metric(&b0).0 - 1e-15 && metric(&b).1 >= metric(&b0).1 - 1e-15,
                    "budget not monotone in field {field}"
                );
            }
        }
    }

    #[test]
    fn sync_factor_irrelevant_without_memory_or_heralding() {
        let s = build_lattice_sheet(2, 2).unwrap();
        let mut p = ProtocolParams::new(0.05, 1e-3, 0.0, 0.0);
        p.n_rounds = 1;
        p.m_target = 2;
        p.h_max = 6;
        let b1 = schedule_error_budget(&s, &p).unwrap();
        p.sync_factor = 7.5;
        let b2 = schedule_error_budget(&s, &p).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn classification_conserves_event_probability() {
        let s = rep_schedule();
        let params = ProtocolParams {
            p_ent: 0.08,
            ent_split: ProtocolParams::UNIFORM_SPLIT,
            p_local: 1e-3,
            p_mem: 1e-5,
            f_herald: 0.9,
            n_rounds: 1,
            m_target: 2,
            h_max: 8,
            sync_factor: 1.0,
        };
        let eff = effective_pp_noise(&params).unwrap();
        let acc = accumulate(&s, &params, &eff);
        // total error weight entering classification, over qubits that are
        // still part of the final state
        let mut total_in = 0.0;
        for (q, chan) in acc.channels.iter().enumerate() {
            if s.target.vertices().contains(&q) {
                let [_, x, y, z] = chan.marginal_weights(0);
                total_in += x + y + z;
            }
        }
        total_in += acc.pairs.values().sum::<f64>();
        total_in += acc.frame_z.iter().sum::<f64>();
        let events = classify_events(&s, &acc);
        let total_out = total_event_probability(&events);
        assert!(total_in > 0.0);
        assert!(
            close(total_out, total_in, 1e-12),
            "events out {total_out} vs in {total_in}"
        );
    }

    #[test]
    fn face_and_edge_tracked_separately() {
        let s = rep_schedule();
        let mut p = ProtocolParams::new(0.08, 1e-3, 0.0, 0.0);
        p.n_rounds = 1;
        p.m_target = 2;
        p.h_max = 8;
        let b = schedule_error_budget(&s, &p).unwrap();
        assert!(b.face.epsilon > 0.0);
        assert!(b.edge.epsilon > 0.0);
        assert!(b.p_z >= b.face.p_z.max(b.edge.p_z) - 1e-18);
        let text = b.report_text(None);
        assert!(text.contains("p_z = "));
        assert!(text.contains("face.epsilon"));
    }
}
