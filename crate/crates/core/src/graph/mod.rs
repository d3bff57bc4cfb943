//! Graph states, the parity-projection primitive and cluster-state
//! construction schedules.
//!
//! The tableau is the ground truth: every schedule built here is executable on
//! [`StabilizerTableau`] and checked against its target [`GraphSpec`] by exact
//! stabilizer-group comparison. The graph rewrite rule is a convenience view
//! of what a parity projection does; it is validated against the tableau, not
//! trusted.

mod build;
mod schedule;
mod spec;
mod tableau;

pub use build::{build_cross, build_lattice_sheet, fuse_sheets, tpcs_target, SheetSpec, TpcsSite};
pub use schedule::{
    Action, ConstructionSchedule, ExecutionMode, ExecutionResult, LocalGate, MeasBasis,
    QubitInfo, QubitRole, ScheduleStep, StepKind,
};
pub use spec::{pp_graph_rule, GraphError, GraphSpec, Sublattice};
pub use tableau::{MeasureOutcome, PpOutcome, StabilizerTableau, TableauPauli};

pub use schedule::{check_target_equivalence, execute_schedule, EquivalenceReport};
pub use tableau::apply_parity_projection;
