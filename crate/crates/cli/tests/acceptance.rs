//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p dqc3 --test acceptance -- --nocapture` to see the
//! per-criterion lines and timings.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use dqc3_core::budget::{schedule_error_budget, ProtocolParams};
use dqc3_core::dense::oracle::pump_bit_error_oracle;
use dqc3_core::graph::{
    build_cross, build_lattice_sheet, check_target_equivalence, execute_schedule, fuse_sheets,
    tpcs_target, ExecutionMode, GraphSpec, QubitRole, SheetSpec, StepKind, Sublattice,
};
use dqc3_core::mc::{validate, SampleConfig};
use dqc3_core::purify::{
    pump_bit_error, step_probability, wrong_parity_probability, BellDiagonalState,
};
use dqc3_core::threshold::{
    default_p_local_grid, find_threshold, loss_adjusted_threshold, representative_schedule,
    ThresholdConfig,
};

fn report(criterion: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    println!(
        "ACCEPTANCE {criterion} ({name}): {} in {:.2?} — {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

/// Criterion 1: the voting formulas match brute-force Bayesian enumeration
/// over all outcome sequences up to length 12, exactly.
#[test]
fn criterion_1_formula_fidelity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &p in &[0.05, 0.1, 0.2, 0.3, 0.4] {
        for h in 0..=12u32 {
            // enumerate every sequence of h reports; the reference parity is
            // even and each report independently flips with probability p
            let mut by_m: BTreeMap<u32, [f64; 3]> = BTreeMap::new(); // m -> [P(seq), P(wrong), P(next=maj)]
            for seq in 0..(1u64 << h) {
                let wrong_reports = seq.count_ones();
                let right_reports = h - wrong_reports;
                let prob = p.powi(wrong_reports as i32) * (1.0 - p).powi(right_reports as i32);
                let m = right_reports.abs_diff(wrong_reports);
                let entry = by_m.entry(m).or_insert([0.0; 3]);
                entry[0] += prob;
                // the posterior averages over the unknown true parity: the
                // mirrored sequence has the complementary report counts
                let prob_mirror =
                    p.powi(right_reports as i32) * (1.0 - p).powi(wrong_reports as i32);
                let wrong_is_majority = wrong_reports > right_reports;
                let posterior_wrong = if wrong_is_majority {
                    prob / (prob + prob_mirror)
                } else {
                    prob_mirror / (prob + prob_mirror)
                };
                entry[1] += prob * posterior_wrong;
                // predictive probability that the next report matches the
                // current majority (either side at m = 0)
                let p_next_maj = (1.0 - p) * (1.0 - posterior_wrong) + p * posterior_wrong;
                entry[2] += prob * p_next_maj;
            }
            for (m, [total, wrong, next_maj]) in by_m {
                let got_w = wrong_parity_probability(p, m as usize).unwrap();
                let got_h = step_probability(p, m as usize).unwrap();
                worst = worst.max((got_w - wrong / total).abs());
                worst = worst.max((got_h - next_maj / total).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "formula fidelity",
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        elapsed,
        &format!("max deviation {worst:.2e} over all sequences with H <= 12"),
    );
}

/// Criterion 2: the loss-adjusted threshold hits its published endpoints
/// exactly.
#[test]
fn criterion_2_loss_threshold_endpoints() {
    let start = Instant::now();
    let at_zero = loss_adjusted_threshold(0.0);
    let at_cap = loss_adjusted_threshold(0.249);
    report(
        2,
        "loss-adjusted threshold endpoints",
        at_zero == 0.0293 && at_cap == 0.0,
        start.elapsed(),
        &format!("t(0) = {at_zero}, t(0.249) = {at_cap}"),
    );
}

/// Criterion 3: the pumping recurrence matches the dense density-matrix
/// simulation of the fixed circuit over a 5x5x5 grid of Bell-diagonal inputs
/// and three local rates, within 1e-10.
#[test]
fn criterion_3_pumping_oracle_equivalence() {
    let start = Instant::now();
    let grid = [0.0, 0.05, 0.1, 0.15, 0.2];
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for &b in &grid {
        for &c in &grid {
            for &d in &grid {
                let state = BellDiagonalState::new(1.0 - b - c - d, b, c, d).unwrap();
                for &p_local in &[0.0, 1e-3, 1e-2] {
                    let got = pump_bit_error(&state, &state, p_local).unwrap();
                    let (oracle_state, oracle_accept) =
                        pump_bit_error_oracle(&state, &state, p_local);
                    worst = worst.max((got.accept_prob - oracle_accept).abs());
                    worst = worst.max((got.state.a - oracle_state.a).abs());
                    worst = worst.max((got.state.b - oracle_state.b).abs());
                    worst = worst.max((got.state.c - oracle_state.c).abs());
                    worst = worst.max((got.state.d - oracle_state.d).abs());
                    cases += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        "pumping oracle equivalence",
        worst <= 1e-10 && elapsed < Duration::from_secs(10),
        elapsed,
        &format!("max deviation {worst:.2e} over {cases} cases"),
    );
}

/// Criterion 4: executing the construction schedules on the tableau yields
/// the target graphs (including the elementary cell) with the published step
/// counts: five steps to a 2D lattice, two more per fusion round.
#[test]
fn criterion_4_graph_construction() {
    let start = Instant::now();
    let mut detail = String::new();
    let mut pass = true;

    // cross: three steps after preparation, exact star
    let cross = build_cross();
    let cross_result = execute_schedule(&cross, ExecutionMode::ForceEven);
    let cross_ok = cross.post_preparation_steps() == 3
        && check_target_equivalence(&cross, &cross_result)
            .map(|r| r.is_exact())
            .unwrap_or(false);
    pass &= cross_ok;
    detail.push_str(&format!("cross 3 post-prep steps + exact: {cross_ok}; "));

    // 2D lattice: five steps total
    let sheet = build_lattice_sheet(2, 2).unwrap();
    let sheet_result = execute_schedule(&sheet, ExecutionMode::ForceEven);
    let sheet_ok = sheet.steps.len() == 5
        && check_target_equivalence(&sheet, &sheet_result)
            .map(|r| r.is_exact())
            .unwrap_or(false);
    pass &= sheet_ok;
    detail.push_str(&format!("sheet 5 steps + exact: {sheet_ok}; "));

    // fusion adds exactly two steps regardless of stack height
    let stack = fuse_sheets(&[
        SheetSpec { lx: 3, ly: 3 },
        SheetSpec { lx: 2, ly: 2 },
        SheetSpec { lx: 3, ly: 3 },
    ])
    .unwrap();
    let fused_steps_ok = stack.steps.len() == sheet.steps.len() + 2;
    pass &= fused_steps_ok;
    let result = execute_schedule(&stack, ExecutionMode::ForceEven);
    let equal = check_target_equivalence(&stack, &result)
        .map(|r| r.is_exact())
        .unwrap_or(false);
    pass &= equal;
    detail.push_str(&format!("fusion +2 steps: {fused_steps_ok}, stack exact: {equal}; "));

    // the unit cell of the 3D lattice is reproduced inside the stack
    let (cell, cell_sites) = tpcs_target(1, 1, 1);
    let index: BTreeMap<(i64, i64, i64), usize> =
        cell_sites.iter().enumerate().map(|(i, s)| (s.coord, i)).collect();
    let mut built = GraphSpec::new();
    let mut site_of = BTreeMap::new();
    for (q, info) in stack.qubits.iter().enumerate() {
        if matches!(info.role, QubitRole::Center | QubitRole::Link) {
            let (x, y, z) = info.site;
            if (2..=4).contains(&x) && (2..=4).contains(&y) && (0..=2).contains(&z) {
                site_of.insert(q, (x - 2, y - 2, z));
            }
        }
    }
    for c in site_of.values() {
        built.add_vertex(index[c]);
    }
    for &(a, b) in stack.target.edges() {
        if let (Some(ca), Some(cb)) = (site_of.get(&a), site_of.get(&b)) {
            built.add_edge(index[ca], index[cb]).unwrap();
        }
    }
    let cell_ok = site_of.len() == 18 && built == cell;
    pass &= cell_ok;
    detail.push_str(&format!("18-qubit elementary cell reproduced: {cell_ok}"));

    report(4, "graph construction", pass, start.elapsed(), &detail);
}

/// Criterion 5: at the paper regime every analytic observable agrees with a
/// 100000-sample Monte Carlo run within three sigma.
#[test]
fn criterion_5_monte_carlo_consistency() {
    let start = Instant::now();
    let params = ProtocolParams {
        p_ent: 0.1,
        ent_split: ProtocolParams::UNIFORM_SPLIT,
        p_local: 1e-3,
        p_mem: 0.0,
        f_herald: 0.9,
        n_rounds: 2,
        m_target: 3,
        h_max: 12,
        sync_factor: 1.0,
    };
    let rep = validate(&SampleConfig::new(params, 100_000, 20260809)).unwrap();
    let pass = rep.all_pass(3.0);
    let attempts_ok = (rep.mean_attempts_per_raw_pair - 10.0).abs() < 0.2;
    let elapsed = start.elapsed();
    let mut detail = format!(
        "{} observables, attempts/pair = {:.3}",
        rep.observables.len(),
        rep.mean_attempts_per_raw_pair
    );
    if !pass {
        detail.push_str("\n");
        detail.push_str(&rep.report_text());
    }
    report(
        5,
        "Monte Carlo consistency",
        pass && attempts_ok && elapsed < Duration::from_secs(120),
        elapsed,
        &detail,
    );
}

/// Criterion 6: the headline threshold at the paper regime falls in the
/// reproducibility band [0.05, 0.15].
#[test]
fn criterion_6_headline_threshold_band() {
    let start = Instant::now();
    let cfg = ThresholdConfig::default();
    let pt = find_threshold(&cfg, 1e-3, 0.0, 0.0).unwrap();
    let elapsed = start.elapsed();
    let pass = pt.feasible_at_zero
        && (0.05..=0.15).contains(&pt.p_ent_star)
        && elapsed < Duration::from_secs(600);
    report(
        6,
        "headline threshold band",
        pass,
        elapsed,
        &format!(
            "p_ent_star = {:.4} with (n_rounds, M, H) = ({}, {}, {})",
            pt.p_ent_star,
            pt.best_params.n_rounds,
            pt.best_params.m_target,
            pt.best_params.h_max
        ),
    );
}

/// Criterion 7: with 90% heralded failure and memory errors the tolerable
/// infidelity stays at least 5% across the default local-rate grid.
#[test]
fn criterion_7_memory_error_robustness() {
    let start = Instant::now();
    let cfg = ThresholdConfig::default();
    let mut detail = String::new();
    let mut pass = true;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for &p_local in &default_p_local_grid() {
        let pt = find_threshold(&cfg, p_local, 1e-5, 0.9).unwrap();
        detail.push_str(&format!("{:.3e}->{:.4} ", p_local, pt.p_ent_star));
        pass &= pt.p_ent_star >= 0.05;
        monotone &= pt.p_ent_star <= prev + cfg.tol;
        prev = pt.p_ent_star;
    }
    // stash monotonicity for criterion 8's interest as well
    pass &= monotone;
    report(7, "memory-error robustness", pass, start.elapsed(), detail.trim());
}

/// Criterion 8: thresholds fall monotonically with each noise rate, and
/// budget components grow monotonically with each rate.
#[test]
fn criterion_8_monotonicity_suite() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();

    // p_ent_star non-increasing in p_local (trimmed search keeps it quick)
    let cfg = ThresholdConfig {
        search: dqc3_core::threshold::SearchSpace { n_rounds_max: 2, m_max: 4, h_max: 12 },
        tol: 1e-3,
        ..ThresholdConfig::default()
    };
    let mut prev = f64::INFINITY;
    for &p_local in &default_p_local_grid() {
        let pt = find_threshold(&cfg, p_local, 0.0, 0.0).unwrap();
        pass &= pt.p_ent_star <= prev + cfg.tol;
        prev = pt.p_ent_star;
    }
    detail.push_str(&format!("monotone in p_local: {pass}; "));

    // p_ent_star non-increasing in p_mem at fixed p_local
    let mut prev = f64::INFINITY;
    let mut mem_ok = true;
    for &p_mem in &[0.0, 1e-5, 1e-4] {
        let pt = find_threshold(&cfg, 3e-4, p_mem, 0.9).unwrap();
        mem_ok &= pt.p_ent_star <= prev + cfg.tol;
        prev = pt.p_ent_star;
    }
    pass &= mem_ok;
    detail.push_str(&format!("monotone in p_mem: {mem_ok}; "));

    // budget components non-decreasing in every noise rate
    let schedule = representative_schedule();
    let base = ProtocolParams {
        p_ent: 0.04,
        ent_split: ProtocolParams::UNIFORM_SPLIT,
        p_local: 3e-4,
        p_mem: 1e-5,
        f_herald: 0.9,
        n_rounds: 1,
        m_target: 2,
        h_max: 8,
        sync_factor: 1.0,
    };
    let b0 = schedule_error_budget(&schedule, &base).unwrap();
    let mut budget_ok = true;
    for field in 0..3 {
        for scale in [2.0, 5.0] {
            let mut p = base.clone();
            match field {
                0 => p.p_ent *= scale,
                1 => p.p_local *= scale,
                _ => p.p_mem *= scale,
            }
            let b = schedule_error_budget(&schedule, &p).unwrap();
            budget_ok &= b.p_z >= b0.p_z - 1e-15
                && b.p_zz >= b0.p_zz - 1e-15
                && b.p_loss >= b0.p_loss - 1e-15;
        }
    }
    pass &= budget_ok;
    detail.push_str(&format!("budget non-decreasing: {budget_ok}"));

    report(8, "monotonicity suite", pass, start.elapsed(), &detail);
}

/// Criterion 9: every command is byte-deterministic for a fixed seed.
#[test]
fn criterion_9_determinism() {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_dqc3");
    let run = |args: &[&str], threads: &str| {
        let out = std::process::Command::new(bin)
            .args(args)
            .env("DQC3_THREADS", threads)
            .output()
            .expect("binary runs");
        (out.status.code().unwrap_or(-1), out.stdout)
    };
    let mut pass = true;
    let mut detail = String::new();

    let validate_args =
        ["validate", "--n_samples", "20000", "--seed", "424242", "--p_ent", "0.1"];
    let a = run(&validate_args, "1");
    let b = run(&validate_args, "4");
    pass &= a == b && a.0 == 0;
    detail.push_str(&format!("validate stable across reruns/threads: {}; ", a == b));

    let point_args = [
        "threshold-point", "--p_local", "4e-4", "--f_herald", "0",
        "--opt_n_rounds_max", "1", "--opt_m_max", "2", "--opt_h_max", "6", "--tol", "1e-3",
    ];
    let a = run(&point_args, "2");
    let b = run(&point_args, "2");
    pass &= a == b;
    detail.push_str(&format!("threshold-point CSV stable: {}; ", a == b));

    let graph_args = ["build-graph", "--lx", "1", "--ly", "1", "--lz", "1"];
    let a = run(&graph_args, "1");
    let b = run(&graph_args, "1");
    pass &= a == b && a.0 == 0;
    detail.push_str(&format!("build-graph stable: {}", a == b));

    report(9, "determinism", pass, start.elapsed(), &detail);
}

/// The two sublattices never mix: every proper qubit carries a definite
/// face/edge label and both labels appear in the representative build.
#[test]
fn sublattice_labels_cover_the_representative_build() {
    let schedule = representative_schedule();
    let mut faces = 0;
    let mut edges = 0;
    for info in &schedule.qubits {
        if matches!(info.role, QubitRole::Center | QubitRole::Link) {
            match info.sublattice() {
                Some(Sublattice::Face) => faces += 1,
                Some(Sublattice::Edge) => edges += 1,
                None => panic!("proper qubit without a sublattice"),
            }
        }
    }
    assert!(faces > 0 && edges > 0);
    // every step kind appears in the full build
    let kinds: Vec<StepKind> = schedule.steps.iter().map(|s| s.kind()).collect();
    assert!(kinds.contains(&StepKind::Prepare));
    assert!(kinds.contains(&StepKind::PpLayer));
    assert!(kinds.contains(&StepKind::LocalLayer));
    assert!(kinds.contains(&StepKind::MeasureLayer));
}
