//! Smoothed activity penalty, its tangent upper bound, and the outer
//! majorization-minimization (MM) loop.
//!
//! The exact backhaul cost charges a fixed fee whenever an RRH transmits at
//! all (an l0 indicator on its energy). That indicator is approximated by
//! `smoothed_l0`, and the resulting concave-log objective is majorized at the
//! current iterate by a linear function of the per-RRH energies. [`mm_solve`]
//! alternates between re-linearizing ([`weights`]) and an inner convex solve
//! supplied by the caller.

use serde::Serialize;

use crate::caching::CachePlacement;
use crate::numerics::{NumericsError, TimeGrid};
use crate::scalar::{real, to_f64, Real};
use crate::scenario::{cost_backhaul, cost_transmit, ScenarioConfig, ScenarioError};
use crate::trajectory::PowerTrajectory;

/// Relative change of the smoothed objective below which MM stops.
pub const MM_TOL: f64 = 1e-6;
/// Hard cap on MM iterations.
pub const MM_MAX_ITER: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Coefficients of the linear majorizer at one expansion point.
///
/// For RRH `n` with requested content cached (`c_{n,l}=1`) the backhaul
/// weight `b_bh` vanishes and the effective per-watt-second price `k` is 1;
/// otherwise `k = 1 + b_bh/(theta + E)` with `E` the expansion-point energy.
#[derive(Debug, Clone)]
pub struct SurrogateWeights<T> {
    pub theta: T,
    /// `1 / ln(1/theta + 1)`, the smoothing normalizer.
    pub c_smooth: T,
    /// `c_smooth * beta * (1 - c_{n,l}) * ∫R_n dt` per RRH.
    pub b_bh: Vec<T>,
    /// Effective per-watt-second price per RRH, `>= 1`.
    pub k: Vec<T>,
    /// Expansion-point energies `E_n = ∫P⁰_n dt`, watt-seconds.
    pub expansion: Vec<T>,
}

/// `ln(x/theta + 1) / ln(1/theta + 1)`: 0 at 0, 1 at 1, concave increasing.
pub fn smoothed_l0<T: Real>(x: T, theta: T) -> T {
    debug_assert!(x >= T::zero() && theta > T::zero());
    (x / theta + T::one()).ln() / (T::one() / theta + T::one()).ln()
}

/// Builds the majorizer coefficients at the expansion trajectory `p0`.
pub fn weights<T: Real>(
    cfg: &ScenarioConfig<T>,
    placement: &CachePlacement,
    requested: usize,
    p0: &PowerTrajectory<T>,
    grid: &TimeGrid<T>,
) -> Result<SurrogateWeights<T>, SolveError> {
    let rate_int = cfg.backhaul_rate_integral(grid)?;
    let theta = cfg.theta;
    let c_smooth = T::one() / (T::one() / theta + T::one()).ln();
    let expansion = p0.energies()?;
    let b_bh: Vec<T> = (0..p0.n_rrh())
        .map(|n| {
            if placement.cached(n, requested) {
                T::zero()
            } else {
                c_smooth * cfg.beta * rate_int
            }
        })
        .collect();
    let k = b_bh
        .iter()
        .zip(&expansion)
        .map(|(&b, &e)| T::one() + b / (theta + e))
        .collect();
    Ok(SurrogateWeights {
        theta,
        c_smooth,
        b_bh,
        k,
        expansion,
    })
}

/// The smoothed objective itself: `Σ E_n + Σ b_bh_n ln(E_n/theta + 1)`.
///
/// Independent of the expansion point; this is the quantity MM drives down.
pub fn smoothed_cost<T: Real>(
    traj: &PowerTrajectory<T>,
    w: &SurrogateWeights<T>,
) -> Result<T, SolveError> {
    let e = traj.energies()?;
    let mut total = T::zero();
    for (n, &en) in e.iter().enumerate() {
        total = total + en + w.b_bh[n] * (en / w.theta + T::one()).ln();
    }
    Ok(total)
}

/// The linear majorizer: `Σ k_n E_n + const`, tangent to [`smoothed_cost`]
/// at the expansion point and above it everywhere else.
pub fn surrogate_cost<T: Real>(
    traj: &PowerTrajectory<T>,
    w: &SurrogateWeights<T>,
) -> Result<T, SolveError> {
    let e = traj.energies()?;
    let mut total = T::zero();
    for (n, &en) in e.iter().enumerate() {
        let e0 = w.expansion[n];
        let constant = w.b_bh[n] * ((e0 / w.theta + T::one()).ln() - e0 / (w.theta + e0));
        total = total + w.k[n] * en + constant;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

/// Outcome summary of one end-to-end solve; serializes to the report JSON.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Exact cost: transmit energy plus the hard-indicator backhaul fee.
    pub cost_total: f64,
    pub cost_transmit: f64,
    pub cost_backhaul: f64,
    pub iterations: usize,
    /// Smoothed objective after each MM iteration.
    pub cost_history: Vec<f64>,
}

/// Runs MM to a stationary point of the smoothed objective.
///
/// `inner` must return a minimizer of `Σ k_n ∫P_n dt` over the feasible set
/// for the supplied weights. Convergence is declared when the smoothed
/// objective changes by less than [`MM_TOL`] relative, or immediately when
/// the weights stop moving (then the inner solution cannot change either).
pub fn mm_solve<T, F>(
    cfg: &ScenarioConfig<T>,
    placement: &CachePlacement,
    requested: usize,
    grid: &TimeGrid<T>,
    inner: F,
) -> Result<(PowerTrajectory<T>, SolveReport), SolveError>
where
    T: Real,
    F: Fn(&ScenarioConfig<T>, &SurrogateWeights<T>, &TimeGrid<T>) -> Result<PowerTrajectory<T>, SolveError>,
{
    let n_rrh = cfg.n_rrh();
    let half: Vec<T> = cfg.p_avg.iter().map(|&p| p * real::<T>(0.5)).collect();
    let mut current = PowerTrajectory::constant(grid.clone(), &half);
    let mut history: Vec<f64> = Vec::new();
    let mut prev_k: Option<Vec<T>> = None;
    let mut final_weights: Option<SurrogateWeights<T>> = None;

    for _ in 0..MM_MAX_ITER {
        let w = weights(cfg, placement, requested, &current, grid)?;
        if let Some(pk) = &prev_k {
            let moved = w
                .k
                .iter()
                .zip(pk)
                .any(|(&a, &b)| (a - b).abs() > real::<T>(1e-12) * (T::one() + b.abs()));
            if !moved {
                break;
            }
        }
        let next = inner(cfg, &w, grid)?;
        assert_eq!(next.n_rrh(), n_rrh, "inner solver changed the RRH count");
        let cost = to_f64(smoothed_cost(&next, &w)?);
        let converged = history
            .last()
            .is_some_and(|&prev| (prev - cost).abs() <= MM_TOL * prev.abs().max(1.0));
        history.push(cost);
        prev_k = Some(w.k.clone());
        final_weights = Some(w);
        current = next;
        if converged {
            break;
        }
    }

    let w = match final_weights {
        Some(w) => w,
        None => weights(cfg, placement, requested, &current, grid)?,
    };
    let transmit = to_f64(cost_transmit(&current)?);
    let backhaul = to_f64(cost_backhaul(&current, placement, requested, cfg, grid)?);
    let _ = &w;
    let report = SolveReport {
        status: SolveStatus::Optimal,
        cost_total: transmit + backhaul,
        cost_transmit: transmit,
        cost_backhaul: backhaul,
        iterations: history.len(),
        cost_history: history,
    };
    Ok((current, report))
}
