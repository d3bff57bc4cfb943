//! Construction schedules: time-stepped parallel action sets, their tableau
//! executor, and the target-equivalence check.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{GraphSpec, Sublattice};
use super::tableau::{PpOutcome, StabilizerTableau, TableauPauli};
use crate::pauli::Pauli;

/// Single-qubit Clifford rotations used for corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalGate {
    H,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasBasis {
    Z,
    X,
}

/// Construction role of a qubit within its sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitRole {
    /// Cross center; a lattice vertex of its sheet.
    Center,
    /// Arm that inherited the connection at an interior link site.
    Link,
    /// Arm left dangling by the sheet connection step.
    Dangler,
    /// Unpaired arm at the sheet boundary.
    BoundaryArm,
}

#[derive(Debug, Clone)]
pub struct QubitInfo {
    /// Lattice coordinates (x, y, z); danglers share their link's site.
    pub site: (i64, i64, i64),
    pub role: QubitRole,
    pub sheet: usize,
}

impl QubitInfo {
    /// Sublattice from coordinate parity: two odd coordinates = face site,
    /// one = edge site.
    pub fn sublattice(&self) -> Option<Sublattice> {
        let odd = [self.site.0, self.site.1, self.site.2]
            .iter()
            .filter(|v| (**v).rem_euclid(2) == 1)
            .count();
        match odd {
            2 => Some(Sublattice::Face),
            1 => Some(Sublattice::Edge),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Action {
    /// Initialize a qubit in |+>.
    Prepare { qubit: usize },
    /// Parity projection on a pair. `pre` are rotations applied to the pair's
    /// own qubits at the start of the slot (subsumed corrections); `inheritor`
    /// records which side keeps the combined connections in the graph view.
    Pp {
        q1: usize,
        q2: usize,
        inheritor: usize,
        pre: Vec<(usize, LocalGate)>,
    },
    Rotate { qubit: usize, gate: LocalGate },
    /// Readout removing a qubit from the cluster.
    Measure { qubit: usize, basis: MeasBasis },
}

impl Action {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Action::Prepare { qubit } | Action::Rotate { qubit, .. } | Action::Measure { qubit, .. } => {
                alloc::vec![*qubit]
            }
            Action::Pp { q1, q2, .. } => alloc::vec![*q1, *q2],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleStep {
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Prepare,
    PpLayer,
    LocalLayer,
    MeasureLayer,
}

impl ScheduleStep {
    pub fn kind(&self) -> StepKind {
        match self.actions.first() {
            Some(Action::Prepare { .. }) => StepKind::Prepare,
            Some(Action::Pp { .. }) => StepKind::PpLayer,
            Some(Action::Rotate { .. }) => StepKind::LocalLayer,
            Some(Action::Measure { .. }) | None => StepKind::MeasureLayer,
        }
    }

    pub fn active_qubits(&self) -> BTreeSet<usize> {
        self.actions.iter().flat_map(|a| a.qubits()).collect()
    }

    pub fn pp_pairs(&self) -> Vec<(usize, usize)> {
        self.actions
            .iter()
            .filter_map(|a| match a {
                Action::Pp { q1, q2, .. } => Some((*q1, *q2)),
                _ => None,
            })
            .collect()
    }
}

/// Ordered time steps of parallel actions, with the target graph the
/// execution should produce and the local corrections still pending at the
/// end (recorded, not executed).
#[derive(Debug, Clone)]
pub struct ConstructionSchedule {
    pub n_qubits: usize,
    pub qubits: Vec<QubitInfo>,
    pub steps: Vec<ScheduleStep>,
    /// Corrections that map the final tableau state onto `target`.
    pub pending_corrections: Vec<(usize, LocalGate)>,
    /// Target graph over the surviving qubits.
    pub target: GraphSpec,
    /// Qubits measured out during construction.
    pub removed: Vec<usize>,
}

impl ConstructionSchedule {
    /// Every step must use each qubit in at most one action.
    pub fn validate(&self) -> Result<(), usize> {
        for (i, step) in self.steps.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for action in &step.actions {
                for q in action.qubits() {
                    if !seen.insert(q) || q >= self.n_qubits {
                        return Err(i);
                    }
                }
                if let Action::Pp { q1, q2, pre, .. } = action {
                    if pre.iter().any(|(q, _)| q != q1 && q != q2) {
                        return Err(i);
                    }
                }
            }
        }
        Ok(())
    }

    /// Steps after the preparation layer(s).
    pub fn post_preparation_steps(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind() != StepKind::Prepare)
            .count()
    }

    /// Line-oriented plain text: one step per line with action type and
    /// qubit ids. Pairs are `q1:q2`, rotations and basis choices `g@q`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} qubits, {} steps", self.n_qubits, self.steps.len());
        for (i, step) in self.steps.iter().enumerate() {
            let kind = match step.kind() {
                StepKind::Prepare => "prepare",
                StepKind::PpLayer => "pp",
                StepKind::LocalLayer => "rotate",
                StepKind::MeasureLayer => "measure",
            };
            let _ = write!(out, "{i} {kind}");
            for action in &step.actions {
                match action {
                    Action::Prepare { qubit } => {
                        let _ = write!(out, " {qubit}");
                    }
                    Action::Pp { q1, q2, pre, .. } => {
                        let tag = |q: &usize| {
                            pre.iter()
                                .find(|(p, _)| p == q)
                                .map(|(_, g)| match g {
                                    LocalGate::H => "h@",
                                    LocalGate::S => "s@",
                                })
                                .unwrap_or("")
                        };
                        let _ = write!(out, " {}{}:{}{}", tag(q1), q1, tag(q2), q2);
                    }
                    Action::Rotate { qubit, gate } => {
                        let g = match gate {
                            LocalGate::H => 'h',
                            LocalGate::S => 's',
                        };
                        let _ = write!(out, " {g}@{qubit}");
                    }
                    Action::Measure { qubit, basis } => {
                        let b = match basis {
                            MeasBasis::Z => 'z',
                            MeasBasis::X => 'x',
                        };
                        let _ = write!(out, " {b}@{qubit}");
                    }
                }
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// How undetermined measurement outcomes are chosen during execution.
#[derive(Debug, Clone, Copy)]
pub enum ExecutionMode {
    /// Every free outcome is forced to +1 (even parity); deterministic.
    ForceEven,
    /// Outcomes drawn from a seeded generator; byproducts show up as
    /// generator signs in the equivalence report.
    Random { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub tableau: StabilizerTableau,
    /// (step index, q1, q2, outcome) per parity projection.
    pub pp_outcomes: Vec<(usize, usize, usize, PpOutcome)>,
    /// (qubit, value) per removal readout.
    pub measure_outcomes: Vec<(usize, bool)>,
}

/// Runs the schedule on a fresh tableau. Preparation steps are bookkeeping:
/// the register starts in |+...+> and the schedule is expected to prepare
/// every qubit exactly once up front.
pub fn execute_schedule(schedule: &ConstructionSchedule, mode: ExecutionMode) -> ExecutionResult {
    schedule.validate().expect("schedule step uses a qubit twice");
    let mut rng = match mode {
        ExecutionMode::ForceEven => None,
        ExecutionMode::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut coin = move || match &mut rng {
        None => false,
        Some(r) => r.next_u32() & 1 == 1,
    };

    let mut tableau = StabilizerTableau::all_plus(schedule.n_qubits);
    let mut pp_outcomes = Vec::new();
    let mut measure_outcomes = Vec::new();

    for (i, step) in schedule.steps.iter().enumerate() {
        for action in &step.actions {
            match action {
                Action::Prepare { .. } => {}
                Action::Pp { q1, q2, pre, .. } => {
                    for (q, g) in pre {
                        tableau.apply_local(*q, *g);
                    }
                    let out = tableau.parity_projection(*q1, *q2, &mut coin);
                    pp_outcomes.push((i, *q1, *q2, out));
                }
                Action::Rotate { qubit, gate } => tableau.apply_local(*qubit, *gate),
                Action::Measure { qubit, basis } => {
                    let op = match basis {
                        MeasBasis::Z => TableauPauli::single(schedule.n_qubits, *qubit, Pauli::Z),
                        MeasBasis::X => TableauPauli::single(schedule.n_qubits, *qubit, Pauli::X),
                    };
                    let out = tableau.measure(&op, &mut coin);
                    measure_outcomes.push((*qubit, out.value));
                }
            }
        }
    }

    ExecutionResult { tableau, pp_outcomes, measure_outcomes }
}

/// Sign vector of a successful equivalence check: one entry per target
/// generator and per removed qubit. All-even signs mean the state is exactly
/// the target graph state; odd entries are Pauli byproducts from odd
/// measurement outcomes.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub generator_signs: Vec<(usize, bool)>,
    pub removed_signs: Vec<(usize, bool)>,
}

impl EquivalenceReport {
    pub fn is_exact(&self) -> bool {
        self.generator_signs.iter().all(|(_, s)| !s)
            && self.removed_signs.iter().all(|(_, s)| !s)
    }
}

/// Applies the schedule's recorded corrections to a copy of the final state
/// and checks that the stabilizer group equals the target graph state's
/// (times a definite state on each removed qubit). Returns None if the state
/// is not the target graph state even up to Pauli byproducts.
pub fn check_target_equivalence(
    schedule: &ConstructionSchedule,
    result: &ExecutionResult,
) -> Option<EquivalenceReport> {
    let mut t = result.tableau.clone();
    for (q, g) in &schedule.pending_corrections {
        t.apply_local(*q, *g);
    }
    let n = schedule.n_qubits;
    let mut generator_signs = Vec::new();
    for &a in schedule.target.vertices() {
        let k = TableauPauli::graph_generator(n, &schedule.target, a);
        match t.sign_in_group(&k) {
            Some(sign) => generator_signs.push((a, sign)),
            None => return None,
        }
    }
    let mut removed_signs = Vec::new();
    for &q in &schedule.removed {
        // removal readout leaves an X eigenstate in the corrected frame when
        // the basis was X, Z when Z; membership of either marks decoupling
        let x = TableauPauli::single(n, q, Pauli::X);
        let z = TableauPauli::single(n, q, Pauli::Z);
        match t.sign_in_group(&x).or_else(|| t.sign_in_group(&z)) {
            Some(sign) => removed_signs.push((q, sign)),
            None => return None,
        }
    }
    Some(EquivalenceReport { generator_signs, removed_signs })
}
