//! Loss-adjusted threshold test, protocol-parameter optimization and
//! threshold curves.
//!
//! Feasibility is decided on the analytic error-accounting path only; the
//! Monte Carlo sampler validates that path but never drives the bisection.

use alloc::vec::Vec;
use core::fmt;

use crate::budget::{
    budget_from_effective, effective_pp_noise, BudgetError, ErrorBudget, ProtocolParams,
};
use crate::graph::{fuse_sheets, ConstructionSchedule, SheetSpec};

/// Phase-error threshold for totally independent phase errors.
pub const INDEPENDENT_Z_THRESHOLD: f64 = 0.0293;
/// Largest tolerable known-loss fraction.
pub const LOSS_TOLERANCE: f64 = 0.249;

/// `max(0, 2.93% - (2.93% / 24.9%) p_loss)`: the phase-error threshold after
/// trading away known losses.
pub fn loss_adjusted_threshold(p_loss: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p_loss));
    let t = INDEPENDENT_Z_THRESHOLD - INDEPENDENT_Z_THRESHOLD / LOSS_TOLERANCE * p_loss;
    t.max(0.0)
}

/// Signed feasibility margin of a budget: the worse sublattice's folded
/// phase-error probability minus its loss-adjusted threshold. Negative means
/// fault tolerant.
pub fn feasibility_margin(budget: &ErrorBudget) -> f64 {
    let face = budget.face.epsilon - loss_adjusted_threshold(budget.face.p_loss);
    let edge = budget.edge.epsilon - loss_adjusted_threshold(budget.edge.p_loss);
    face.max(edge)
}

pub fn is_fault_tolerant(budget: &ErrorBudget) -> bool {
    feasibility_margin(budget) < 0.0
}

/// Protocol-parameter search bounds, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchSpace {
    pub n_rounds_max: usize,
    pub m_max: usize,
    pub h_max: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace { n_rounds_max: 4, m_max: 7, h_max: 25 }
    }
}

/// Everything a threshold computation needs besides the three axis rates.
#[derive(Debug, Clone)]
pub struct ThresholdConfig {
    pub search: SearchSpace,
    pub ent_split: (f64, f64, f64),
    pub sync_factor: f64,
    /// Representative construction whose budget decides feasibility.
    pub schedule: ConstructionSchedule,
    /// Absolute bisection tolerance on the network infidelity.
    pub tol: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            search: SearchSpace::default(),
            ent_split: ProtocolParams::UNIFORM_SPLIT,
            sync_factor: 1.0,
            schedule: representative_schedule(),
            tol: 1e-4,
        }
    }
}

/// The default budget carrier: three fused sheets sized so a full elementary
/// cell sits in the interior, giving bulk exposure on every qubit role.
pub fn representative_schedule() -> ConstructionSchedule {
    fuse_sheets(&[
        SheetSpec { lx: 3, ly: 3 },
        SheetSpec { lx: 2, ly: 2 },
        SheetSpec { lx: 3, ly: 3 },
    ])
    .expect("static stack is fusable")
}

/// Chosen pumping/truncation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BestParams {
    pub n_rounds: usize,
    pub m_target: usize,
    pub h_max: usize,
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub params: BestParams,
    pub budget: ErrorBudget,
    pub margin: f64,
}

/// Exhaustive search over the space, minimizing the feasibility margin with
/// the deterministic tie-break (smaller H, then n_rounds, then M). Returns
/// None when no candidate admits majority voting at all.
pub fn optimize_params(
    cfg: &ThresholdConfig,
    p_ent: f64,
    p_local: f64,
    p_mem: f64,
    f_herald: f64,
) -> Result<Option<Optimum>, BudgetError> {
    let mut best: Option<Optimum> = None;
    for n_rounds in 0..=cfg.search.n_rounds_max {
        for m_target in 1..=cfg.search.m_max {
            for h_max in m_target..=cfg.search.h_max {
                let params = ProtocolParams {
                    p_ent,
                    ent_split: cfg.ent_split,
                    p_local,
                    p_mem,
                    f_herald,
                    n_rounds,
                    m_target,
                    h_max,
                    sync_factor: cfg.sync_factor,
                };
                params.validate()?;
                let eff = match effective_pp_noise(&params) {
                    Ok(eff) => eff,
                    Err(BudgetError::VotingImpossible(_)) => continue,
                    Err(e) => return Err(e),
                };
                let budget = budget_from_effective(&cfg.schedule, &params, &eff);
                let margin = feasibility_margin(&budget);
                let cand = Optimum {
                    params: BestParams { n_rounds, m_target, h_max },
                    budget,
                    margin,
                };
                best = Some(match best.take() {
                    None => cand,
                    Some(cur) => {
                        if better(&cand, &cur) {
                            cand
                        } else {
                            cur
                        }
                    }
                });
            }
        }
    }
    Ok(best)
}

fn better(cand: &Optimum, cur: &Optimum) -> bool {
    if cand.margin != cur.margin {
        return cand.margin < cur.margin;
    }
    let key = |o: &Optimum| (o.params.h_max, o.params.n_rounds, o.params.m_target);
    key(cand) < key(cur)
}

/// Maximal tolerable network infidelity at one grid point.
#[derive(Debug, Clone)]
pub struct ThresholdPoint {
    pub p_local: f64,
    pub p_mem: f64,
    pub f_herald: f64,
    /// Largest network infidelity known feasible, within the bisection
    /// tolerance; 0 when even a perfect network is infeasible.
    pub p_ent_star: f64,
    /// False when no feasible point exists even at zero infidelity.
    pub feasible_at_zero: bool,
    pub best_params: BestParams,
    pub budget_at_star: ErrorBudget,
}

#[derive(Debug, Clone)]
pub struct ThresholdCurve {
    pub points: Vec<ThresholdPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdError {
    Budget(BudgetError),
    /// Grid must be non-empty and strictly increasing.
    BadGrid,
    BadTolerance(f64),
}

impl fmt::Display for ThresholdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdError::Budget(e) => write!(f, "{e}"),
            ThresholdError::BadGrid => write!(f, "grid must be non-empty and strictly increasing"),
            ThresholdError::BadTolerance(t) => write!(f, "bisection tolerance {t} must be > 0"),
        }
    }
}

impl From<BudgetError> for ThresholdError {
    fn from(e: BudgetError) -> Self {
        ThresholdError::Budget(e)
    }
}

/// Bisection on the network infidelity over [0, 1/2), calling the optimizer
/// at every probe. The bracket keeps the lower edge feasible and the upper
/// infeasible until it closes below the tolerance.
pub fn find_threshold(
    cfg: &ThresholdConfig,
    p_local: f64,
    p_mem: f64,
    f_herald: f64,
) -> Result<ThresholdPoint, ThresholdError> {
    if !(cfg.tol > 0.0) {
        return Err(ThresholdError::BadTolerance(cfg.tol));
    }
    let probe = |p_ent: f64| -> Result<Option<Optimum>, BudgetError> {
        match optimize_params(cfg, p_ent, p_local, p_mem, f_herald) {
            Ok(Some(o)) if o.margin < 0.0 => Ok(Some(o)),
            Ok(_) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let Some(mut at_best) = probe(0.0)? else {
        // infeasible outright: local noise alone exceeds the threshold
        let fallback = optimize_params(cfg, 0.0, p_local, p_mem, f_herald)?;
        let (best_params, budget_at_star) = match fallback {
            Some(o) => (o.params, o.budget),
            None => (
                BestParams { n_rounds: 0, m_target: 1, h_max: 1 },
                ErrorBudget::default(),
            ),
        };
        return Ok(ThresholdPoint {
            p_local,
            p_mem,
            f_herald,
            p_ent_star: 0.0,
            feasible_at_zero: false,
            best_params,
            budget_at_star,
        });
    };

    let mut lo = 0.0f64;
    let mut hi = 0.5f64;
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        match probe(mid)? {
            Some(opt) => {
                lo = mid;
                at_best = opt;
            }
            None => hi = mid,
        }
    }

    Ok(ThresholdPoint {
        p_local,
        p_mem,
        f_herald,
        p_ent_star: lo,
        feasible_at_zero: true,
        best_params: at_best.params,
        budget_at_star: at_best.budget,
    })
}

/// Default grid of local error rates: five log-spaced points over the
/// protocol's operating regime, from 1e-4 to 5e-4.
pub fn default_p_local_grid() -> Vec<f64> {
    log_grid(1e-4, 5e-4, 5)
}

/// Log-spaced grid, inclusive of both endpoints.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1 && min > 0.0 && max >= min);
    if points == 1 {
        return alloc::vec![min];
    }
    let (la, lb) = (libm::log(min), libm::log(max));
    (0..points)
        .map(|i| libm::exp(la + (lb - la) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Maps [`find_threshold`] over a grid of local error rates.
pub fn threshold_curve(
    cfg: &ThresholdConfig,
    p_local_grid: &[f64],
    p_mem: f64,
    f_herald: f64,
) -> Result<ThresholdCurve, ThresholdError> {
    if p_local_grid.is_empty() || p_local_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ThresholdError::BadGrid);
    }
    let mut points = Vec::with_capacity(p_local_grid.len());
    for &p_local in p_local_grid {
        points.push(find_threshold(cfg, p_local, p_mem, f_herald)?);
    }
    Ok(ThresholdCurve { points })
}
