//! Cluster-state construction: crosses, 2D lattice sheets, and fusion of
//! sheet stacks into the 3D topologically protected structure.
//!
//! Every plane of the 3D lattice is the same 2D pattern: degree-4 centers
//! with link qubits between them, diagonally offset in alternate planes so
//! that centers sit at face sites in even planes and at edge sites in odd
//! planes. Sheets are connected by parity projections between a sheet's
//! dangling bonds and the next sheet's link qubits, followed by removal of
//! the dangler, which leaves a direct vertical link-link bond.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::schedule::{
    Action, ConstructionSchedule, LocalGate, MeasBasis, QubitInfo, QubitRole, ScheduleStep,
};
use super::spec::{GraphError, GraphSpec, Sublattice};

/// Size of one lattice sheet, in crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SheetSpec {
    pub lx: usize,
    pub ly: usize,
}

/// A labeled site of the 3D target lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TpcsSite {
    pub coord: (i64, i64, i64),
    pub sublattice: Sublattice,
}

const ARM_DIRS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)]; // W E N S
const ARM_W: usize = 0;
const ARM_E: usize = 1;
const ARM_N: usize = 2;
const ARM_S: usize = 3;

struct Cross {
    center: usize,
    arms: [usize; 4],
}

struct Sheet {
    offset: i64,
    crosses: Vec<Cross>, // row-major, j * lx + i
    spec: SheetSpec,
    /// interior link sites -> (inheritor arm, dangler arm)
    links: BTreeMap<(i64, i64), (usize, usize)>,
}

struct Builder {
    qubits: Vec<QubitInfo>,
    sheets: Vec<Sheet>,
}

impl Builder {
    fn new() -> Self {
        Builder { qubits: Vec::new(), sheets: Vec::new() }
    }

    fn push_qubit(&mut self, site: (i64, i64, i64), role: QubitRole, sheet: usize) -> usize {
        self.qubits.push(QubitInfo { site, role, sheet });
        self.qubits.len() - 1
    }

    /// Allocates the qubits of one sheet and classifies its arms.
    fn add_sheet(&mut self, spec: SheetSpec) {
        let index = self.sheets.len();
        let offset = (index % 2) as i64;
        let z = index as i64;
        let mut crosses = Vec::with_capacity(spec.lx * spec.ly);
        for j in 0..spec.ly {
            for i in 0..spec.lx {
                let (cx, cy) = (2 * i as i64 + 1 + offset, 2 * j as i64 + 1 + offset);
                let center = self.push_qubit((cx, cy, z), QubitRole::Center, index);
                let mut arms = [0; 4];
                for (k, (dx, dy)) in ARM_DIRS.iter().enumerate() {
                    // roles refined below once link sites are known
                    arms[k] =
                        self.push_qubit((cx + dx, cy + dy, z), QubitRole::BoundaryArm, index);
                }
                crosses.push(Cross { center, arms });
            }
        }

        // interior link sites: the east arm of the west cross inherits on
        // x-links, the north arm of the south cross on y-links
        let mut links = BTreeMap::new();
        let at = |i: usize, j: usize| -> &Cross { &crosses[j * spec.lx + i] };
        for j in 0..spec.ly {
            for i in 0..spec.lx.saturating_sub(1) {
                let site = (2 * i as i64 + 2 + offset, 2 * j as i64 + 1 + offset);
                links.insert(site, (at(i, j).arms[ARM_E], at(i + 1, j).arms[ARM_W]));
            }
        }
        for j in 0..spec.ly.saturating_sub(1) {
            for i in 0..spec.lx {
                let site = (2 * i as i64 + 1 + offset, 2 * j as i64 + 2 + offset);
                links.insert(site, (at(i, j).arms[ARM_N], at(i, j + 1).arms[ARM_S]));
            }
        }
        for (link, dangler) in links.values() {
            self.qubits[*link].role = QubitRole::Link;
            self.qubits[*dangler].role = QubitRole::Dangler;
        }
        self.sheets.push(Sheet { offset, crosses, spec, links });
    }

    /// The per-sheet in-plane steps: preparation, two cross PP layers, the
    /// arm rotation layer, and (when interior links exist) the connection
    /// PP layer. All sheets proceed in parallel.
    fn in_plane_steps(&self) -> Vec<ScheduleStep> {
        let mut prepare = Vec::new();
        let mut cross_a = Vec::new();
        let mut cross_b = Vec::new();
        let mut rotate = Vec::new();
        let mut connect = Vec::new();
        for sheet in &self.sheets {
            for cross in &sheet.crosses {
                prepare.push(Action::Prepare { qubit: cross.center });
                for arm in cross.arms {
                    prepare.push(Action::Prepare { qubit: arm });
                }
                cross_a.push(pp(cross.center, cross.arms[ARM_W], cross.center));
                cross_a.push(pp(cross.arms[ARM_E], cross.arms[ARM_N], cross.arms[ARM_E]));
                cross_b.push(pp(cross.center, cross.arms[ARM_E], cross.center));
                cross_b.push(pp(cross.arms[ARM_W], cross.arms[ARM_S], cross.arms[ARM_W]));
                for arm in cross.arms {
                    rotate.push(Action::Rotate { qubit: arm, gate: LocalGate::H });
                }
            }
            for (link, dangler) in sheet.links.values() {
                connect.push(pp(*link, *dangler, *link));
            }
        }
        let mut steps = alloc::vec![
            ScheduleStep { actions: prepare },
            ScheduleStep { actions: cross_a },
            ScheduleStep { actions: cross_b },
            ScheduleStep { actions: rotate },
        ];
        if !connect.is_empty() {
            steps.push(ScheduleStep { actions: connect });
        }
        steps
    }

    /// Pairs of (lower-sheet dangler, upper-sheet link) at the common link
    /// sites of each consecutive sheet pair.
    fn fusion_pairs(&self) -> Result<Vec<(usize, usize)>, GraphError> {
        let mut pairs = Vec::new();
        for w in self.sheets.windows(2) {
            let (lower, upper) = (&w[0], &w[1]);
            let mut common = 0;
            for (site, (_, dangler)) in &lower.links {
                if let Some((link_up, _)) = upper.links.get(site) {
                    pairs.push((*dangler, *link_up));
                    common += 1;
                }
            }
            if common == 0 {
                return Err(GraphError::IncompatibleSheets);
            }
        }
        Ok(pairs)
    }

    /// Target graph over all qubits, with `consumed` danglers removed.
    fn target(&self, fused: &[(usize, usize)]) -> (GraphSpec, Vec<usize>) {
        let consumed: BTreeSet<usize> = fused.iter().map(|(d, _)| *d).collect();
        let mut g = GraphSpec::new();
        for (q, _) in self.qubits.iter().enumerate() {
            if !consumed.contains(&q) {
                g.add_vertex(q);
            }
        }
        for sheet in &self.sheets {
            let at = |i: usize, j: usize| -> &Cross { &sheet.crosses[j * sheet.spec.lx + i] };
            // boundary arms keep their center bond
            for cross in &sheet.crosses {
                for arm in cross.arms {
                    if self.qubits[arm].role == QubitRole::BoundaryArm {
                        g.add_edge(cross.center, arm).expect("vertices exist");
                    }
                }
            }
            // links bond both centers and their surviving dangler
            for (site, (link, dangler)) in &sheet.links {
                let (x, y) = *site;
                let (ca, cb) = if (x - sheet.offset) % 2 == 0 {
                    // x-link between horizontally adjacent crosses
                    let i = ((x - sheet.offset) / 2 - 1) as usize;
                    let j = ((y - sheet.offset - 1) / 2) as usize;
                    (at(i, j).center, at(i + 1, j).center)
                } else {
                    let i = ((x - sheet.offset - 1) / 2) as usize;
                    let j = ((y - sheet.offset) / 2 - 1) as usize;
                    (at(i, j).center, at(i, j + 1).center)
                };
                g.add_edge(*link, ca).expect("vertices exist");
                g.add_edge(*link, cb).expect("vertices exist");
                if !consumed.contains(dangler) {
                    g.add_edge(*link, *dangler).expect("vertices exist");
                }
            }
        }
        // vertical bonds: the consumed dangler's link inherits the upper link
        for (dangler, link_up) in fused {
            let lower_link = self
                .sheets
                .iter()
                .flat_map(|s| s.links.values())
                .find(|(_, d)| d == dangler)
                .map(|(l, _)| *l)
                .expect("dangler belongs to a link site");
            g.add_edge(lower_link, *link_up).expect("vertices exist");
        }
        (g, consumed.into_iter().collect())
    }

    fn finish(self, fused: Vec<(usize, usize)>) -> ConstructionSchedule {
        let mut steps = self.in_plane_steps();
        if !fused.is_empty() {
            let fusion = fused
                .iter()
                .map(|(d, l)| Action::Pp {
                    q1: *d,
                    q2: *l,
                    inheritor: *l,
                    pre: alloc::vec![(*d, LocalGate::H)],
                })
                .collect();
            let removal = fused
                .iter()
                .map(|(d, _)| Action::Measure { qubit: *d, basis: MeasBasis::X })
                .collect();
            steps.push(ScheduleStep { actions: fusion });
            steps.push(ScheduleStep { actions: removal });
        }
        let (target, removed) = self.target(&fused);
        let consumed: BTreeSet<usize> = removed.iter().copied().collect();
        let pending_corrections = self
            .qubits
            .iter()
            .enumerate()
            .filter(|(q, info)| info.role == QubitRole::Dangler && !consumed.contains(q))
            .map(|(q, _)| (q, LocalGate::H))
            .collect();
        ConstructionSchedule {
            n_qubits: self.qubits.len(),
            qubits: self.qubits,
            steps,
            pending_corrections,
            target,
            removed,
        }
    }
}

fn pp(q1: usize, q2: usize, inheritor: usize) -> Action {
    Action::Pp { q1, q2, inheritor, pre: Vec::new() }
}

/// A single five-qubit cross: preparation, two steps of two parallel parity
/// projections, and one local-rotation step.
pub fn build_cross() -> ConstructionSchedule {
    let mut b = Builder::new();
    b.add_sheet(SheetSpec { lx: 1, ly: 1 });
    b.finish(Vec::new())
}

/// A 2D lattice sheet of `lx` by `ly` crosses connected by one parallel PP
/// step; five time steps in total.
pub fn build_lattice_sheet(lx: usize, ly: usize) -> Result<ConstructionSchedule, GraphError> {
    if lx < 2 || ly < 2 {
        return Err(GraphError::TooSmall);
    }
    let mut b = Builder::new();
    b.add_sheet(SheetSpec { lx, ly });
    Ok(b.finish(Vec::new()))
}

/// Builds a stack of sheets (consecutive planes alternate their diagonal
/// offset) and fuses every consecutive pair in one PP step plus one removal
/// step: two steps beyond the in-plane construction regardless of the number
/// of sheets.
pub fn fuse_sheets(sheets: &[SheetSpec]) -> Result<ConstructionSchedule, GraphError> {
    if sheets.len() < 2 {
        return Err(GraphError::TooSmall);
    }
    if sheets.iter().any(|s| s.lx < 2 || s.ly < 2) {
        return Err(GraphError::TooSmall);
    }
    let mut b = Builder::new();
    for spec in sheets {
        b.add_sheet(*spec);
    }
    let fused = b.fusion_pairs()?;
    Ok(b.finish(fused))
}

/// The 3D target lattice of `lx * ly * lz` cells: qubits on the faces (two
/// odd coordinates) and edges (one odd coordinate) of a cubic lattice, with
/// face and edge sites adjacent at unit distance.
pub fn tpcs_target(lx: usize, ly: usize, lz: usize) -> (GraphSpec, Vec<TpcsSite>) {
    assert!(lx >= 1 && ly >= 1 && lz >= 1);
    let (mx, my, mz) = (2 * lx as i64, 2 * ly as i64, 2 * lz as i64);
    let mut sites = Vec::new();
    for z in 0..=mz {
        for y in 0..=my {
            for x in 0..=mx {
                let odd = [x, y, z].iter().filter(|v| *v % 2 == 1).count();
                let sublattice = match odd {
                    2 => Sublattice::Face,
                    1 => Sublattice::Edge,
                    _ => continue,
                };
                sites.push(TpcsSite { coord: (x, y, z), sublattice });
            }
        }
    }
    let index: BTreeMap<(i64, i64, i64), usize> =
        sites.iter().enumerate().map(|(i, s)| (s.coord, i)).collect();
    let mut g = GraphSpec::new();
    for i in 0..sites.len() {
        g.add_vertex(i);
    }
    for (i, s) in sites.iter().enumerate() {
        let (x, y, z) = s.coord;
        for (dx, dy, dz) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
            if let Some(&j) = index.get(&(x + dx, y + dy, z + dz)) {
                g.add_edge(i, j).expect("vertices exist");
            }
        }
    }
    (g, sites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::schedule::{
        check_target_equivalence, execute_schedule, ExecutionMode, StepKind,
    };

    fn run_forced(s: &ConstructionSchedule) -> crate::graph::schedule::ExecutionResult {
        execute_schedule(s, ExecutionMode::ForceEven)
    }

    #[test]
    fn cross_builds_star_graph_exactly() {
        let s = build_cross();
        assert_eq!(s.n_qubits, 5);
        assert_eq!(s.post_preparation_steps(), 3);
        assert!(s.validate().is_ok());
        // target is the 4-star
        let center: Vec<usize> = s
            .target
            .vertices()
            .iter()
            .copied()
            .filter(|&v| s.target.degree(v) == 4)
            .collect();
        assert_eq!(center.len(), 1);
        assert_eq!(s.target.edges().len(), 4);

        let result = run_forced(&s);
        assert!(result.tableau.invariants_hold());
        let report = check_target_equivalence(&s, &result).expect("stabilizer equivalent");
        assert!(report.is_exact());
    }

    #[test]
    fn sheet_counts_and_equivalence() {
        let s = build_lattice_sheet(2, 2).unwrap();
        // five time steps: prepare, two cross PP layers, rotations, connection PPs
        assert_eq!(s.steps.len(), 5);
        assert_eq!(s.post_preparation_steps(), 4);
        assert_eq!(
            s.steps.iter().filter(|st| st.kind() == StepKind::PpLayer).count(),
            3
        );
        // closed-form counts: every cross qubit survives
        let n_int = (2 - 1) * 2 + 2 * (2 - 1);
        assert_eq!(s.n_qubits, 5 * 4);
        assert_eq!(s.target.vertices().len(), 20);
        assert_eq!(s.target.edges().len(), 3 * n_int + 2 * (2 + 2));

        let result = run_forced(&s);
        assert!(result.tableau.invariants_hold());
        let report = check_target_equivalence(&s, &result).expect("stabilizer equivalent");
        assert!(report.is_exact());
        assert!(build_lattice_sheet(1, 3).is_err());
    }

    #[test]
    fn sheet_connection_adds_exactly_one_pp_step_over_cross() {
        let cross = build_cross();
        let sheet = build_lattice_sheet(3, 2).unwrap();
        assert_eq!(sheet.steps.len(), cross.steps.len() + 1);
    }

    #[test]
    fn two_sheet_fusion_adds_two_steps_and_matches_target() {
        let single = build_lattice_sheet(2, 2).unwrap();
        let fused = fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }, SheetSpec { lx: 2, ly: 2 }]).unwrap();
        assert_eq!(fused.steps.len(), single.steps.len() + 2);
        assert!(fused.validate().is_ok());

        let result = run_forced(&fused);
        assert!(result.tableau.invariants_hold());
        let report = check_target_equivalence(&fused, &result).expect("stabilizer equivalent");
        assert!(report.is_exact());

        // the two offset 2x2 sheets share exactly two interior sites
        assert_eq!(fused.removed.len(), 2);
        // each fused site carries a vertical link-link bond
        let by_site = |q: usize| fused.qubits[q].site;
        let mut vertical = 0;
        for &(a, b) in fused.target.edges() {
            let (sa, sb) = (by_site(a), by_site(b));
            if sa.0 == sb.0 && sa.1 == sb.1 && (sa.2 - sb.2).abs() == 1 {
                vertical += 1;
            }
        }
        assert_eq!(vertical, 2);
    }

    #[test]
    fn multi_sheet_fusion_keeps_step_count() {
        let two = fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }; 2]).unwrap();
        let four = fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }; 4]).unwrap();
        assert_eq!(two.steps.len(), four.steps.len());
        let result = run_forced(&four);
        let report = check_target_equivalence(&four, &result).expect("stabilizer equivalent");
        assert!(report.is_exact());
    }

    #[test]
    fn random_outcomes_differ_only_by_byproducts() {
        let s = fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }; 2]).unwrap();
        let result = execute_schedule(&s, ExecutionMode::Random { seed: 7 });
        let report = check_target_equivalence(&s, &result).expect("stabilizer equivalent");
        // some odd outcomes are near-certain with this seed; equivalence may
        // only hold up to Pauli byproducts (generator signs)
        let _ = report.is_exact();
    }

    #[test]
    fn fusion_rejects_incompatible_stacks() {
        assert!(fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }]).is_err());
        assert!(fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }, SheetSpec { lx: 1, ly: 1 }]).is_err());
    }

    #[test]
    fn unit_cell_counts_and_structure() {
        let (g, sites) = tpcs_target(1, 1, 1);
        assert_eq!(sites.len(), 18);
        let faces = sites.iter().filter(|s| s.sublattice == Sublattice::Face).count();
        let edges = sites.iter().filter(|s| s.sublattice == Sublattice::Edge).count();
        assert_eq!(faces, 6);
        assert_eq!(edges, 12);
        // within one isolated cell every face touches its four boundary edges
        for (i, s) in sites.iter().enumerate() {
            match s.sublattice {
                Sublattice::Face => assert_eq!(g.degree(i), 4),
                Sublattice::Edge => assert_eq!(g.degree(i), 2),
            }
        }
    }

    #[test]
    fn bulk_interior_qubits_have_degree_four() {
        let (g, sites) = tpcs_target(3, 3, 3);
        let interior = |c: (i64, i64, i64)| {
            c.0 > 0 && c.0 < 6 && c.1 > 0 && c.1 < 6 && c.2 > 0 && c.2 < 6
        };
        let mut seen = 0;
        for (i, s) in sites.iter().enumerate() {
            if interior(s.coord) {
                assert_eq!(g.degree(i), 4, "site {:?}", s.coord);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn graph_generators_commute() {
        use crate::graph::tableau::TableauPauli;
        let (g, sites) = tpcs_target(1, 1, 2);
        let n = sites.len();
        let gens: Vec<TableauPauli> = (0..n)
            .map(|a| TableauPauli::graph_generator(n, &g, a))
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut anti = 0u32;
                for w in 0..gens[i].x.len() {
                    anti ^= (gens[i].x[w] & gens[j].z[w]).count_ones() & 1;
                    anti ^= (gens[i].z[w] & gens[j].x[w]).count_ones() & 1;
                }
                assert_eq!(anti & 1, 0, "K_{i} vs K_{j}");
            }
        }
    }

    #[test]
    fn fused_stack_contains_unit_cell() {
        // even 3x3 / odd 2x2 / even 3x3: the cell spanning x, y in [2, 4] and
        // z in [0, 2] is fully interior to this stack
        let stack = fuse_sheets(&[
            SheetSpec { lx: 3, ly: 3 },
            SheetSpec { lx: 2, ly: 2 },
            SheetSpec { lx: 3, ly: 3 },
        ])
        .unwrap();
        let result = run_forced(&stack);
        let report = check_target_equivalence(&stack, &result).expect("stabilizer equivalent");
        assert!(report.is_exact());

        // map stack qubits at cell sites; danglers excluded
        let (cell, cell_sites) = tpcs_target(1, 1, 1);
        let mut built = GraphSpec::new();
        let mut site_of = BTreeMap::new();
        for (q, info) in stack.qubits.iter().enumerate() {
            if info.role == QubitRole::Dangler || info.role == QubitRole::BoundaryArm {
                continue;
            }
            let (x, y, z) = info.site;
            if (2..=4).contains(&x) && (2..=4).contains(&y) && (0..=2).contains(&z) {
                site_of.insert(q, (x - 2, y - 2, z));
            }
        }
        assert_eq!(site_of.len(), 18);
        let index: BTreeMap<(i64, i64, i64), usize> = cell_sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.coord, i))
            .collect();
        for (_, &c) in &site_of {
            built.add_vertex(index[&c]);
        }
        for &(a, b) in stack.target.edges() {
            if let (Some(&ca), Some(&cb)) = (site_of.get(&a), site_of.get(&b)) {
                built.add_edge(index[&ca], index[&cb]).unwrap();
            }
        }
        assert_eq!(&built, &cell, "cell adjacency reproduced by the fused stack");
    }

    #[test]
    fn schedule_text_round_readable() {
        let s = build_cross();
        let text = s.to_text();
        assert!(text.lines().count() == s.steps.len() + 1);
        assert!(text.contains("prepare"));
        assert!(text.contains("pp"));
        assert!(text.contains("rotate"));
        let f = fuse_sheets(&[SheetSpec { lx: 2, ly: 2 }; 2]).unwrap();
        let text = f.to_text();
        assert!(text.contains("measure"));
        assert!(text.contains("h@"));
    }
}
