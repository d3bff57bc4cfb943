//! Command handlers: each returns the process exit code and writes its
//! artifact to the configured output (or standard output).

use std::fmt::Write as _;
use std::sync::mpsc;
use std::thread;

use dqc3_core::budget::{effective_pp_noise, BudgetError};
use dqc3_core::graph::{
    check_target_equivalence, execute_schedule, fuse_sheets, ConstructionSchedule, ExecutionMode,
    SheetSpec,
};
use dqc3_core::mc::{Aggregate, SampleConfig, TrialRunner};
use dqc3_core::threshold::{find_threshold, ThresholdError, ThresholdPoint};

use crate::config::{Command, RunConfig};

/// Exit codes: 0 success, 1 usage/configuration/IO error, 2 infeasible
/// parameters, 3 a validation or equivalence check failed.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const CHECK_FAILED: i32 = 3;
}

pub struct Outcome {
    pub exit: i32,
    /// One-line summary printed to standard output.
    pub summary: String,
    /// Artifact body written to the output path (or stdout when unset).
    pub artifact: String,
}

pub fn run(cfg: &RunConfig) -> Outcome {
    match cfg.command {
        Command::PpWalk => pp_walk(cfg),
        Command::Validate => validate(cfg),
        Command::ThresholdPoint => threshold_point(cfg),
        Command::ThresholdCurve => threshold_curve(cfg),
        Command::BuildGraph => build_graph(cfg),
    }
}

fn budget_error_outcome(e: &BudgetError) -> Outcome {
    let exit = match e {
        BudgetError::VotingImpossible(_) => exit_code::INFEASIBLE,
        _ => exit_code::ERROR,
    };
    Outcome { exit, summary: format!("error: {e}"), artifact: String::new() }
}

/// Analytic report of one purified parity projection and its walk.
fn pp_walk(cfg: &RunConfig) -> Outcome {
    let params = cfg.protocol_params();
    let eff = match effective_pp_noise(&params) {
        Ok(eff) => eff,
        Err(e) => return budget_error_outcome(&e),
    };
    let mut out = String::new();
    let _ = writeln!(out, "p_P = {:.6e}", eff.p_p);
    let _ = writeln!(out, "success_prob = {:.6e}", eff.walk.success_prob);
    let _ = writeln!(out, "fail_prob = {:.6e}", eff.walk.fail_prob);
    let _ = writeln!(out, "residual_wrong_parity = {:.6e}", eff.walk.residual_wrong_parity);
    let _ = writeln!(out, "expected_pp_count = {:.6e}", eff.walk.expected_pp_count);
    let _ = writeln!(out, "residual_error_prob = {:.6e}", eff.residual.error_probability());
    let _ = writeln!(out, "attempts_per_raw_pair = {:.6}", eff.cost.attempts_per_raw_pair);
    let _ = writeln!(out, "raw_pairs_per_pp = {:.6}", eff.cost.raw_pairs);
    let _ = writeln!(out, "expected_eo_attempts = {:.6}", eff.cost.expected_eo_attempts);
    let _ = writeln!(out, "expected_elementary_steps = {:.6}", eff.cost.expected_elementary_steps);
    for (op, p) in eff.walk_channel.terms() {
        if p > 0.0 && !op.is_identity() {
            let _ = writeln!(out, "client[{op}] = {p:.6e}");
        }
    }
    Outcome {
        exit: exit_code::OK,
        summary: format!(
            "pp-walk: p_P = {:.4e}, success = {:.4}, expected PPs = {:.3}",
            eff.p_p, eff.walk.success_prob, eff.walk.expected_pp_count
        ),
        artifact: out,
    }
}

/// Monte Carlo validation of the analytic path; trials are partitioned over
/// threads by index range, which cannot change the aggregate.
fn validate(cfg: &RunConfig) -> Outcome {
    let sample = SampleConfig::new(cfg.protocol_params(), cfg.n_samples, cfg.seed);
    let runner = match TrialRunner::new(sample) {
        Ok(r) => r,
        Err(e) => return budget_error_outcome(&e),
    };
    let threads = thread_count(cfg.n_samples);
    let report = if threads <= 1 {
        let mut agg = Aggregate::default();
        for i in 0..cfg.n_samples {
            agg.push(&runner.run_trial(i));
        }
        runner.report(vec![agg])
    } else {
        let chunk = cfg.n_samples.div_ceil(threads);
        let (tx, rx) = mpsc::channel();
        thread::scope(|scope| {
            for t in 0..threads {
                let tx = tx.clone();
                let runner = &runner;
                scope.spawn(move || {
                    let mut agg = Aggregate::default();
                    let lo = t * chunk;
                    let hi = ((t + 1) * chunk).min(cfg.n_samples);
                    for i in lo..hi {
                        agg.push(&runner.run_trial(i));
                    }
                    let _ = tx.send(agg);
                });
            }
        });
        drop(tx);
        runner.report(rx.into_iter().collect())
    };
    let pass = report.all_pass(3.0);
    Outcome {
        exit: if pass { exit_code::OK } else { exit_code::CHECK_FAILED },
        summary: format!(
            "validate: {} samples, success = {:.4}, all observables within 3 sigma: {}",
            report.n_samples, report.success_prob, pass
        ),
        artifact: report.report_text(),
    }
}

pub fn csv_header() -> &'static str {
    "p_local,p_mem,f_herald,p_ent_star,n_rounds,M,H,p_z,p_zz,p_loss\n"
}

pub fn csv_row(pt: &ThresholdPoint) -> String {
    format!(
        "{:.6e},{:.6e},{:.6e},{:.6e},{},{},{},{:.6e},{:.6e},{:.6e}\n",
        pt.p_local,
        pt.p_mem,
        pt.f_herald,
        pt.p_ent_star,
        pt.best_params.n_rounds,
        pt.best_params.m_target,
        pt.best_params.h_max,
        pt.budget_at_star.p_z,
        pt.budget_at_star.p_zz,
        pt.budget_at_star.p_loss,
    )
}

fn threshold_error_outcome(e: &ThresholdError) -> Outcome {
    Outcome {
        exit: exit_code::ERROR,
        summary: format!("error: {e}"),
        artifact: String::new(),
    }
}

fn threshold_point(cfg: &RunConfig) -> Outcome {
    let tc = cfg.threshold_config();
    let pt = match find_threshold(&tc, cfg.p_local, cfg.p_mem, cfg.f_herald) {
        Ok(pt) => pt,
        Err(e) => return threshold_error_outcome(&e),
    };
    let mut artifact = String::from(csv_header());
    artifact.push_str(&csv_row(&pt));
    let exit = if pt.feasible_at_zero { exit_code::OK } else { exit_code::INFEASIBLE };
    Outcome {
        exit,
        summary: format!(
            "threshold-point: p_local = {:.3e} -> p_ent_star = {:.4} (n_rounds = {}, M = {}, H = {})",
            pt.p_local, pt.p_ent_star, pt.best_params.n_rounds, pt.best_params.m_target,
            pt.best_params.h_max
        ),
        artifact,
    }
}

fn threshold_curve(cfg: &RunConfig) -> Outcome {
    let grid = cfg.grid();
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return threshold_error_outcome(&ThresholdError::BadGrid);
    }
    let tc = cfg.threshold_config();
    let threads = thread_count(grid.len());
    let mut points: Vec<Option<Result<ThresholdPoint, ThresholdError>>> =
        (0..grid.len()).map(|_| None).collect();
    if threads <= 1 {
        for (i, &p_local) in grid.iter().enumerate() {
            points[i] = Some(find_threshold(&tc, p_local, cfg.p_mem, cfg.f_herald));
        }
    } else {
        let (tx, rx) = mpsc::channel();
        thread::scope(|scope| {
            for (i, &p_local) in grid.iter().enumerate() {
                let tx = tx.clone();
                let tc = &tc;
                scope.spawn(move || {
                    let _ = tx.send((i, find_threshold(tc, p_local, cfg.p_mem, cfg.f_herald)));
                });
            }
        });
        drop(tx);
        for (i, r) in rx {
            points[i] = Some(r);
        }
    }
    let mut artifact = String::from(csv_header());
    let mut any_feasible = false;
    let mut last = None;
    for slot in points {
        match slot.expect("every grid point computed") {
            Ok(pt) => {
                any_feasible |= pt.feasible_at_zero;
                artifact.push_str(&csv_row(&pt));
                last = Some(pt);
            }
            Err(e) => return threshold_error_outcome(&e),
        }
    }
    let exit = if any_feasible { exit_code::OK } else { exit_code::INFEASIBLE };
    let last = last.expect("non-empty grid");
    Outcome {
        exit,
        summary: format!(
            "threshold-curve: {} points over p_local in [{:.3e}, {:.3e}]; last p_ent_star = {:.4}",
            grid.len(),
            grid[0],
            grid[grid.len() - 1],
            last.p_ent_star
        ),
        artifact,
    }
}

/// Stack of sheets realizing an lx x ly x lz cell block: planes alternate
/// between (lx+2) x (ly+2) and (lx+1) x (ly+1) crosses so the block interior
/// is fully in the bulk.
pub fn cell_block_schedule(lx: usize, ly: usize, lz: usize) -> ConstructionSchedule {
    let sheets: Vec<SheetSpec> = (0..=2 * lz)
        .map(|k| {
            if k % 2 == 0 {
                SheetSpec { lx: lx + 2, ly: ly + 2 }
            } else {
                SheetSpec { lx: lx + 1, ly: ly + 1 }
            }
        })
        .collect();
    fuse_sheets(&sheets).expect("alternating stacks always share interior sites")
}

fn build_graph(cfg: &RunConfig) -> Outcome {
    let schedule = cell_block_schedule(cfg.lx, cfg.ly, cfg.lz);
    let result = execute_schedule(&schedule, ExecutionMode::ForceEven);
    let report = check_target_equivalence(&schedule, &result);
    let status = match &report {
        Some(r) if r.is_exact() => "exact",
        Some(_) => "equivalent up to byproducts",
        None => "FAILED",
    };
    let mut artifact = schedule.to_text();
    let _ = writeln!(artifact, "# equivalence = {status}");
    let _ = writeln!(
        artifact,
        "# qubits = {}, steps = {}, removed = {}",
        schedule.n_qubits,
        schedule.steps.len(),
        schedule.removed.len()
    );
    Outcome {
        exit: if report.is_some() { exit_code::OK } else { exit_code::CHECK_FAILED },
        summary: format!(
            "build-graph: {} qubits in {} steps, target equivalence {status}",
            schedule.n_qubits,
            schedule.steps.len()
        ),
        artifact,
    }
}

/// Worker count: `DQC3_THREADS` caps parallelism, 0 or unset means auto.
pub fn thread_count(work_items: usize) -> usize {
    let configured = std::env::var("DQC3_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let auto = thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = if configured == 0 { auto } else { configured.min(auto) };
    cap.max(1).min(work_items.max(1))
}
