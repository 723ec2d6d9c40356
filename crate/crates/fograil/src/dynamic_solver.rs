//! Exact solvers for the inner convex scheduling problem.
//!
//! Two regimes, split by whether the instantaneous-delay constraint alone
//! already delivers the content within the horizon:
//!
//! * Regime 1 (`T/tau_max >= Q`): the achieved rate is pinned to `1/tau_max`
//!   at every instant, which reduces the two-RRH problem to a scalar
//!   bang-bang choice for RRH 2 — zero or its saturation profile `a3(t)`
//!   with at most one switch. Four cases arise from the budget and deficit
//!   constraints; a discretized LP covers non-monotone geometries.
//! * Regime 2 (`T/tau_max < Q`): extra power on top of the delay floor is
//!   needed. The solver of record performs dual bisection on the delivery
//!   multiplier with per-time analytic waterfilling (only the RRH with the
//!   cheapest price-per-SNR receives above-floor power) and projected
//!   ascent on the budget multipliers. A Gauss-Seidel KKT fixed-point path
//!   is provided as an independent cross-check.

use crate::numerics::{
    integrate_samples, solve_lp, LinearProgram, LpOutcome, RowSense, TimeGrid,
};
use crate::scalar::{real, to_f64, Real};
use crate::scenario::ScenarioConfig;
use crate::surrogate::{SolveError, SurrogateWeights};
use crate::trajectory::{PowerTrajectory, SegmentMode};

/// Absolute slack on constraint sums (watt-seconds scale is O(100)).
const FEAS_TOL: f64 = 1e-9;

/// `2^{1/(B tau_max)} - 1`: the SNR that pins the rate to `1/tau_max`.
pub fn snr_floor<T: Real>(cfg: &ScenarioConfig<T>) -> T {
    (T::one() / (cfg.bandwidth_hz * cfg.tau_max_s)).exp2() - T::one()
}

/// True when the delay floor alone delivers the content: `T/tau_max >= Q`.
pub fn is_regime1<T: Real>(cfg: &ScenarioConfig<T>) -> bool {
    cfg.horizon() / cfg.tau_max_s >= cfg.content_size * (T::one() - real::<T>(1e-12))
}

/// Grid samples of the reduced channel functions plus their two integrals.
#[derive(Debug, Clone)]
pub struct ReducedCoefficients<T> {
    /// `a0(t) = (2^{1/(B tau)} - 1)/kappa_1(t)`: RRH-1 power pinning the rate.
    pub a0: Vec<T>,
    /// `a2(t) = kappa_2(t)/kappa_1(t)`.
    pub a2: Vec<T>,
    /// `a3(t) = a0(t)/a2(t)`: RRH-2 power at which RRH 1 can shut off.
    pub a3: Vec<T>,
    /// `A = ∫ a0 dt`: energy RRH 1 needs if it serves alone.
    pub a_total: T,
    /// `D = A - T P_{1,avg}`: RRH-1 deficit the tail of RRH 2 must cover.
    pub deficit: T,
}

/// Critical switch times; any of them may not exist inside `(0, T]`.
#[derive(Debug, Clone, Copy)]
pub struct CriticalTimes<T> {
    /// Sign change of the price gap `k2 - k1 a2(t)`.
    pub t_price: Option<T>,
    /// Start of the saturation tail that exactly covers the deficit.
    pub t_deficit: Option<T>,
    /// Start of the saturation tail that exactly exhausts RRH-2's budget.
    pub t_budget: Option<T>,
}

/// Which closed-form case produced a regime-1 solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime1Case {
    /// Budget slack, no deficit: switch purely on price.
    PriceOnly,
    /// Deficit positive, budget slack.
    DeficitLimited,
    /// Budget binding, no deficit.
    BudgetLimited,
    /// Both budget binding and deficit positive.
    BudgetAndDeficit,
}

impl Regime1Case {
    pub fn label(self) -> &'static str {
        match self {
            Regime1Case::PriceOnly => "price_only",
            Regime1Case::DeficitLimited => "deficit_limited",
            Regime1Case::BudgetLimited => "budget_limited",
            Regime1Case::BudgetAndDeficit => "budget_and_deficit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Regime1Solution<T> {
    pub trajectory: PowerTrajectory<T>,
    pub case: Regime1Case,
    /// True when the discretized LP path was used instead of a closed form.
    pub via_lp: bool,
    pub critical: CriticalTimes<T>,
}

/// Multipliers of the regime-2 dual: budgets, delivery, and the pointwise
/// delay floor.
#[derive(Debug, Clone)]
pub struct DualState<T> {
    pub mu1: Vec<T>,
    pub mu2: T,
    pub mu3: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Regime2Solution<T> {
    pub trajectory: PowerTrajectory<T>,
    pub duals: DualState<T>,
    /// `∫ C dt` at the solution, bits.
    pub delivered: T,
}

/// Per-assumption result of the structural scan behind the closed forms.
#[derive(Debug, Clone)]
pub struct MonotonicityReport<T> {
    pub price_gap_nonincreasing: bool,
    pub a2_nondecreasing: bool,
    pub a3_nonincreasing: bool,
    /// Earliest sample time at which any assumption fails.
    pub first_violation: Option<T>,
}

impl<T> MonotonicityReport<T> {
    pub fn all_hold(&self) -> bool {
        self.price_gap_nonincreasing && self.a2_nondecreasing && self.a3_nonincreasing
    }
}

pub fn reduce<T: Real>(
    cfg: &ScenarioConfig<T>,
    grid: &TimeGrid<T>,
) -> Result<ReducedCoefficients<T>, SolveError> {
    assert_eq!(cfg.n_rrh(), 2, "reduction assumes exactly two RRHs");
    let gamma = snr_floor(cfg);
    let kappas = cfg.kappa_samples(grid);
    let m = grid.len();
    let mut a0 = Vec::with_capacity(m);
    let mut a2 = Vec::with_capacity(m);
    let mut a3 = Vec::with_capacity(m);
    for i in 0..m {
        a0.push(gamma / kappas[0][i]);
        a2.push(kappas[1][i] / kappas[0][i]);
        a3.push(gamma / kappas[1][i]);
    }
    let a_total = integrate_samples(&a0, grid)?;
    let deficit = a_total - cfg.horizon() * cfg.p_avg[0];
    Ok(ReducedCoefficients {
        a0,
        a2,
        a3,
        a_total,
        deficit,
    })
}

pub fn verify_monotonicity<T: Real>(
    rc: &ReducedCoefficients<T>,
    w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
) -> MonotonicityReport<T> {
    let tol = real::<T>(1e-12);
    let slack = |x: T| tol * (T::one() + x.abs());
    let gap: Vec<T> = rc.a2.iter().map(|&a| w.k[1] - w.k[0] * a).collect();
    let mut report = MonotonicityReport {
        price_gap_nonincreasing: true,
        a2_nondecreasing: true,
        a3_nonincreasing: true,
        first_violation: None,
    };
    for i in 1..grid.len() {
        let t = grid.samples()[i];
        let mut bad = false;
        if gap[i] > gap[i - 1] + slack(gap[i - 1]) {
            report.price_gap_nonincreasing = false;
            bad = true;
        }
        if rc.a2[i] < rc.a2[i - 1] - slack(rc.a2[i - 1]) {
            report.a2_nondecreasing = false;
            bad = true;
        }
        if rc.a3[i] > rc.a3[i - 1] + slack(rc.a3[i - 1]) {
            report.a3_nonincreasing = false;
            bad = true;
        }
        if bad && report.first_violation.is_none() {
            report.first_violation = Some(t);
        }
    }
    report
}

/// Trapezoid tail integrals of sampled values: `tail[m] = ∫_{t_m}^{T}`.
fn tail_integrals<T: Real>(vals: &[T], grid: &TimeGrid<T>) -> Vec<T> {
    let m = vals.len();
    let half = real::<T>(0.5);
    let mut tail = vec![T::zero(); m];
    for i in (0..m - 1).rev() {
        let dt = grid.samples()[i + 1] - grid.samples()[i];
        tail[i] = tail[i + 1] + half * (vals[i] + vals[i + 1]) * dt;
    }
    tail
}

/// Inverts a decreasing piecewise-linear tail integral: smallest `t` with
/// `tail(t) = target`. `None` when the target is outside `(0, tail(t_1)]`.
fn invert_tail<T: Real>(vals: &[T], grid: &TimeGrid<T>, target: T) -> Option<T> {
    if !(target > T::zero()) {
        return None;
    }
    let tail = tail_integrals(vals, grid);
    if target > tail[0] {
        return None;
    }
    let s = grid.samples();
    for i in 0..tail.len() - 1 {
        if tail[i] >= target && target >= tail[i + 1] {
            let span = tail[i] - tail[i + 1];
            if span <= T::zero() {
                return Some(s[i]);
            }
            let frac = (tail[i] - target) / span;
            return Some(s[i] + frac * (s[i + 1] - s[i]));
        }
    }
    Some(*s.last().unwrap())
}

pub fn critical_times<T: Real>(
    rc: &ReducedCoefficients<T>,
    w: &SurrogateWeights<T>,
    budgets: &[T],
    grid: &TimeGrid<T>,
) -> CriticalTimes<T> {
    let horizon = grid.t_end();
    let s = grid.samples();
    // price gap root on the piecewise-linear interpolant of the samples
    let gap: Vec<T> = rc.a2.iter().map(|&a| w.k[1] - w.k[0] * a).collect();
    let mut t_price = None;
    for i in 0..gap.len() - 1 {
        if gap[i] > T::zero() && gap[i + 1] <= T::zero() {
            let span = gap[i] - gap[i + 1];
            let frac = if span > T::zero() {
                gap[i] / span
            } else {
                T::zero()
            };
            t_price = Some(s[i] + frac * (s[i + 1] - s[i]));
            break;
        }
    }
    let t_deficit = invert_tail(&rc.a0, grid, rc.deficit);
    let cap2 = horizon * budgets[1];
    let t_budget = if tail_integrals(&rc.a3, grid)[0] <= cap2 {
        None
    } else {
        invert_tail(&rc.a3, grid, cap2)
    };
    CriticalTimes {
        t_price,
        t_deficit,
        t_budget,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible(String),
}

/// Regime-1 feasibility: the budget-limited saturation tail of RRH 2 must be
/// able to cover RRH-1's deficit (otherwise `t_budget > t_deficit`).
pub fn check_feasibility<T: Real>(
    rc: &ReducedCoefficients<T>,
    budgets: &[T],
    grid: &TimeGrid<T>,
) -> Feasibility {
    let tol = real::<T>(FEAS_TOL);
    if rc.deficit <= tol * (T::one() + rc.a_total.abs()) {
        return Feasibility::Feasible;
    }
    if rc.deficit > rc.a_total * (T::one() + real::<T>(1e-12)) {
        return Feasibility::Infeasible(format!(
            "RRH-1 deficit {} exceeds the total assist energy {}",
            to_f64(rc.deficit),
            to_f64(rc.a_total)
        ));
    }
    let wts = grid.quad_weights();
    let cap2 = grid.t_end() * budgets[1];
    let coverage = max_tail_coverage(rc, &wts, cap2);
    if coverage + tol * (T::one() + coverage.abs()) < rc.deficit {
        return Feasibility::Infeasible(format!(
            "RRH-2 budget tail covers {} of the required deficit {}",
            to_f64(coverage),
            to_f64(rc.deficit)
        ));
    }
    Feasibility::Feasible
}

/// Deficit coverage `∫ a2 P2` of the latest saturation tail whose power sum
/// stays within `cap2` (fractional boundary sample included).
fn max_tail_coverage<T: Real>(rc: &ReducedCoefficients<T>, wts: &[T], cap2: T) -> T {
    let mut spent = T::zero();
    let mut coverage = T::zero();
    for i in (0..rc.a3.len()).rev() {
        let cell = wts[i] * rc.a3[i];
        if cell <= T::zero() {
            continue;
        }
        if spent + cell <= cap2 {
            spent = spent + cell;
            coverage = coverage + wts[i] * rc.a0[i];
        } else {
            let phi = (cap2 - spent) / cell;
            coverage = coverage + phi * wts[i] * rc.a0[i];
            break;
        }
    }
    coverage
}

/// Latest start `(index, fraction)` so that the weighted tail of `vals` sums
/// exactly to `target`; `None` when even the full sum falls short.
fn fractional_tail<T: Real>(vals: &[T], wts: &[T], target: T) -> Option<(usize, T)> {
    let mut acc = T::zero();
    for i in (0..vals.len()).rev() {
        let cell = wts[i] * vals[i];
        if cell <= T::zero() {
            continue;
        }
        if acc + cell >= target {
            let phi = ((target - acc) / cell).max(T::zero()).min(T::one());
            return Some((i, phi));
        }
        acc = acc + cell;
    }
    None
}

/// Builds the two-RRH trajectory from a saturation rule for RRH 2.
///
/// `switch = Some((j, phi))` saturates samples after `j`, puts `phi * a3` at
/// `j`, zero before; `None` means RRH 2 stays off.
fn assemble_regime1<T: Real>(
    rc: &ReducedCoefficients<T>,
    grid: &TimeGrid<T>,
    switch: Option<(usize, T)>,
) -> Result<(Vec<T>, Vec<T>, Vec<SegmentMode>, Vec<SegmentMode>), SolveError> {
    let m = grid.len();
    let mut p2 = vec![T::zero(); m];
    let mut modes2 = vec![SegmentMode::Zero; m];
    if let Some((j, phi)) = switch {
        for i in j..m {
            if i == j && phi < T::one() {
                p2[i] = phi * rc.a3[i];
                modes2[i] = if phi > T::zero() {
                    SegmentMode::ClosedForm
                } else {
                    SegmentMode::Zero
                };
            } else {
                p2[i] = rc.a3[i];
                modes2[i] = SegmentMode::Saturated;
            }
        }
    }
    let (p1, modes1) = recover_p1(rc, &p2)?;
    Ok((p1, p2, modes1, modes2))
}

/// `P1 = a0 - a2 P2`, clipped to zero within tolerance.
fn recover_p1<T: Real>(
    rc: &ReducedCoefficients<T>,
    p2: &[T],
) -> Result<(Vec<T>, Vec<SegmentMode>), SolveError> {
    let mut p1 = Vec::with_capacity(p2.len());
    let mut modes = Vec::with_capacity(p2.len());
    for i in 0..p2.len() {
        let mut v = rc.a0[i] - rc.a2[i] * p2[i];
        let tol = real::<T>(1e-9) * (T::one() + rc.a0[i].abs());
        if v < -tol {
            return Err(SolveError::Diverged(format!(
                "recovered RRH-1 power {} below zero at sample {i}",
                to_f64(v)
            )));
        }
        if v < T::zero() {
            v = T::zero();
        }
        modes.push(if v > T::zero() {
            SegmentMode::ClosedForm
        } else {
            SegmentMode::Zero
        });
        p1.push(v);
    }
    Ok((p1, modes))
}

/// Solves the regime-1 (delay-pinned) problem for two RRHs.
pub fn solve_regime1<T: Real>(
    cfg: &ScenarioConfig<T>,
    w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
) -> Result<Regime1Solution<T>, SolveError> {
    let rc = reduce(cfg, grid)?;
    if let Feasibility::Infeasible(reason) = check_feasibility(&rc, &cfg.p_avg, grid) {
        return Err(SolveError::Infeasible(reason));
    }
    let critical = critical_times(&rc, w, &cfg.p_avg, grid);
    let mono = verify_monotonicity(&rc, w, grid);

    let wts = grid.quad_weights();
    let m = grid.len();
    let gap: Vec<T> = rc.a2.iter().map(|&a| w.k[1] - w.k[0] * a).collect();
    let horizon = grid.t_end();
    let cap2 = horizon * cfg.p_avg[1];
    let total_a3: T = wts.iter().zip(&rc.a3).map(|(&wt, &v)| wt * v).sum();
    let tol = real::<T>(FEAS_TOL) * (T::one() + cap2.abs());
    let budget_limited = total_a3 > cap2 + tol;
    let deficit_limited = rc.deficit > real::<T>(FEAS_TOL) * (T::one() + rc.a_total.abs());
    let case = match (budget_limited, deficit_limited) {
        (false, false) => Regime1Case::PriceOnly,
        (false, true) => Regime1Case::DeficitLimited,
        (true, false) => Regime1Case::BudgetLimited,
        (true, true) => Regime1Case::BudgetAndDeficit,
    };

    let closed_form = if mono.all_hold() {
        // first sample where saturating becomes profitable
        let j_price = (0..m).find(|&i| gap[i] <= T::zero()).unwrap_or(m);
        let price_tail_power: T = (j_price..m).map(|i| wts[i] * rc.a3[i]).sum();
        let price_affordable = price_tail_power <= cap2 + tol;
        match case {
            Regime1Case::PriceOnly => Some(switch_at(j_price, m)),
            Regime1Case::DeficitLimited | Regime1Case::BudgetAndDeficit
                if case == Regime1Case::DeficitLimited || price_affordable =>
            {
                let price_coverage: T = (j_price..m).map(|i| wts[i] * rc.a0[i]).sum();
                if price_coverage >= rc.deficit {
                    Some(switch_at(j_price, m))
                } else {
                    // extend the tail backwards until it exactly covers D
                    let (j, phi) = fractional_tail(&rc.a0, &wts, rc.deficit)
                        .expect("feasibility check guarantees coverage");
                    Some(Some((j, phi)))
                }
            }
            Regime1Case::BudgetLimited => {
                if price_affordable {
                    Some(switch_at(j_price, m))
                } else {
                    let (j, phi) = fractional_tail(&rc.a3, &wts, cap2)
                        .expect("cap below the total tail sum");
                    Some(Some((j, phi)))
                }
            }
            // budget + deficit with the price switch unaffordable: LP
            _ => None,
        }
    } else {
        None
    };

    let (p1, p2, modes1, modes2, via_lp) = match closed_form {
        Some(switch) => {
            let (p1, p2, m1, m2) = assemble_regime1(&rc, grid, switch)?;
            (p1, p2, m1, m2, false)
        }
        None => {
            let p2 = regime1_lp(&rc, &gap, &wts, cap2)?;
            let (p1, m1) = recover_p1(&rc, &p2)?;
            let m2 = p2
                .iter()
                .zip(&rc.a3)
                .map(|(&v, &s)| {
                    let t = real::<T>(1e-9) * (T::one() + s.abs());
                    if v <= t {
                        SegmentMode::Zero
                    } else if (v - s).abs() <= t {
                        SegmentMode::Saturated
                    } else {
                        SegmentMode::ClosedForm
                    }
                })
                .collect();
            (p1, p2, m1, m2, true)
        }
    };

    let trajectory = PowerTrajectory {
        grid: grid.clone(),
        p: vec![p1, p2],
        modes: Some(vec![modes1, modes2]),
    };
    Ok(Regime1Solution {
        trajectory,
        case,
        via_lp,
        critical,
    })
}

fn switch_at<T>(j: usize, m: usize) -> Option<(usize, T)>
where
    T: Real,
{
    if j >= m {
        None
    } else {
        Some((j, T::one()))
    }
}

/// Full-horizon discretization of the reduced problem, used when the
/// structural monotonicity fails or in the hard budget-and-deficit case.
fn regime1_lp<T: Real>(
    rc: &ReducedCoefficients<T>,
    gap: &[T],
    wts: &[T],
    cap2: T,
) -> Result<Vec<T>, SolveError> {
    let m = rc.a3.len();
    let objective: Vec<T> = (0..m).map(|i| wts[i] * gap[i]).collect();
    let mut lp = LinearProgram::new(objective);
    for i in 0..m {
        lp = lp.bound(i, T::zero(), rc.a3[i]);
    }
    lp = lp.row(wts.to_vec(), RowSense::Le, cap2);
    if rc.deficit > T::zero() {
        let cov: Vec<T> = (0..m).map(|i| wts[i] * rc.a2[i]).collect();
        lp = lp.row(cov, RowSense::Ge, rc.deficit);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { values, .. } => Ok(values),
        LpOutcome::Infeasible => Err(SolveError::Infeasible(
            "discretized regime-1 program has no feasible point".into(),
        )),
    }
}

/// Single-RRH closed form: the power that pins the rate to `1/tau_max`.
pub fn solve_single_rrh<T: Real>(
    cfg: &ScenarioConfig<T>,
    _w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
) -> Result<PowerTrajectory<T>, SolveError> {
    assert_eq!(cfg.n_rrh(), 1, "single-RRH form needs exactly one RRH");
    let gamma = snr_floor(cfg);
    let kappas = cfg.kappa_samples(grid);
    let p1: Vec<T> = kappas[0].iter().map(|&k| gamma / k).collect();
    let energy = integrate_samples(&p1, grid)?;
    let cap = grid.t_end() * cfg.p_avg[0];
    if energy > cap * (T::one() + real::<T>(1e-12)) + real::<T>(FEAS_TOL) {
        return Err(SolveError::Infeasible(format!(
            "single-RRH energy {} exceeds the budget {}",
            to_f64(energy),
            to_f64(cap)
        )));
    }
    let modes = vec![vec![SegmentMode::ClosedForm; grid.len()]];
    Ok(PowerTrajectory {
        grid: grid.clone(),
        p: vec![p1],
        modes: Some(modes),
    })
}

// --- regime 2 -------------------------------------------------------------

/// Per-time waterfilling for fixed duals: total SNR and the serving RRH.
struct WaterfillContext<T> {
    kappas: Vec<Vec<T>>,
    /// Serving RRH per sample: argmin of `(k_n + mu1_n)/kappa_n`.
    serving: Vec<usize>,
    /// Price-per-SNR of the serving RRH per sample.
    price: Vec<T>,
    gamma: T,
    bandwidth: T,
    wts: Vec<T>,
}

impl<T: Real> WaterfillContext<T> {
    fn new(cfg: &ScenarioConfig<T>, prices: &[T], grid: &TimeGrid<T>) -> Self {
        let kappas = cfg.kappa_samples(grid);
        let m = grid.len();
        let mut serving = Vec::with_capacity(m);
        let mut price = Vec::with_capacity(m);
        for i in 0..m {
            let mut best = 0usize;
            let mut best_q = prices[0] / kappas[0][i];
            for (n, row) in kappas.iter().enumerate().skip(1) {
                let q = prices[n] / row[i];
                if q < best_q {
                    best_q = q;
                    best = n;
                }
            }
            serving.push(best);
            price.push(best_q);
        }
        Self {
            kappas,
            serving,
            price,
            gamma: snr_floor(cfg),
            bandwidth: cfg.bandwidth_hz,
            wts: grid.quad_weights(),
        }
    }

    /// SNR per sample at delivery price `mu2`.
    fn snr(&self, mu2: T, i: usize) -> T {
        let ln2 = real::<T>(std::f64::consts::LN_2);
        let level = mu2 * self.bandwidth / (ln2 * self.price[i]) - T::one();
        level.max(self.gamma)
    }

    fn delivered(&self, mu2: T) -> T {
        let mut total = T::zero();
        for i in 0..self.serving.len() {
            let y = self.snr(mu2, i);
            total = total + self.wts[i] * self.bandwidth * (T::one() + y).log2();
        }
        total
    }

    /// Energies per RRH at delivery price `mu2`.
    fn energies(&self, mu2: T, n_rrh: usize) -> Vec<T> {
        let mut e = vec![T::zero(); n_rrh];
        for i in 0..self.serving.len() {
            let n = self.serving[i];
            e[n] = e[n] + self.wts[i] * self.snr(mu2, i) / self.kappas[n][i];
        }
        e
    }

    /// Smallest `mu2 >= 0` delivering at least `q` bits (binding equality).
    fn bisect_mu2(&self, q: T) -> Result<T, SolveError> {
        if self.delivered(T::zero()) >= q {
            return Ok(T::zero());
        }
        let mut hi = T::one();
        let mut grow = 0;
        while self.delivered(hi) < q {
            hi = hi * real::<T>(2.0);
            grow += 1;
            if grow > 200 {
                return Err(SolveError::Diverged(
                    "delivery multiplier bracket did not close".into(),
                ));
            }
        }
        let mut lo = T::zero();
        let two = real::<T>(2.0);
        for _ in 0..200 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.delivered(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}

/// Maximum deliverable content under the budgets with the delay floor kept.
///
/// Rate-price duals per RRH are driven to budget equality by Gauss-Seidel
/// bisection; each RRH's spend is monotone in its own dual.
pub fn max_deliverable<T: Real>(
    cfg: &ScenarioConfig<T>,
    grid: &TimeGrid<T>,
) -> Result<T, SolveError> {
    let n_rrh = cfg.n_rrh();
    let caps: Vec<T> = cfg.p_avg.iter().map(|&p| p * grid.t_end()).collect();
    let mut lambda = vec![T::one(); n_rrh];
    let eval = |lambda: &[T]| -> (Vec<T>, T) {
        let ctx = WaterfillContext::new(cfg, lambda, grid);
        // with prices = duals themselves, the waterfilling level is 1/price
        (ctx.energies(T::one(), n_rrh), ctx.delivered(T::one()))
    };
    for _ in 0..60 {
        for n in 0..n_rrh {
            let mut lo = real::<T>(1e-15);
            let mut hi = real::<T>(1e15);
            for _ in 0..100 {
                let mid = (lo * hi).sqrt();
                lambda[n] = mid;
                let (e, _) = eval(&lambda);
                if e[n] > caps[n] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lambda[n] = hi;
        }
        let (e, _) = eval(&lambda);
        let ok = (0..n_rrh).all(|n| {
            (e[n] - caps[n]).abs() <= real::<T>(1e-8) * (T::one() + caps[n].abs())
        });
        if ok {
            break;
        }
    }
    let (_, rate) = eval(&lambda);
    Ok(rate)
}

/// Dual-bisection solver for regime 2 (`T/tau_max < Q`).
pub fn solve_regime2<T: Real>(
    cfg: &ScenarioConfig<T>,
    w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
) -> Result<Regime2Solution<T>, SolveError> {
    assert_eq!(cfg.n_rrh(), 2, "regime-2 solver assumes two RRHs");
    // the delay floor alone must be affordable
    let rc = reduce(cfg, grid)?;
    if let Feasibility::Infeasible(reason) = check_feasibility(&rc, &cfg.p_avg, grid) {
        return Err(SolveError::Infeasible(reason));
    }
    let q = cfg.content_size;
    let n_rrh = 2usize;
    let caps: Vec<T> = cfg.p_avg.iter().map(|&p| p * grid.t_end()).collect();
    let budget_tol: Vec<T> = caps
        .iter()
        .map(|&c| real::<T>(1e-10) * (T::one() + c.abs()))
        .collect();

    let solve_at = |mu1: &[T]| -> Result<(WaterfillContext<T>, T, Vec<T>), SolveError> {
        let prices: Vec<T> = (0..n_rrh).map(|n| w.k[n] + mu1[n]).collect();
        let ctx = WaterfillContext::new(cfg, &prices, grid);
        let mu2 = ctx.bisect_mu2(q)?;
        let e = ctx.energies(mu2, n_rrh);
        Ok((ctx, mu2, e))
    };

    let mut mu1 = vec![T::zero(); n_rrh];
    let (_, _, mut energies) = solve_at(&mu1)?;
    let residual_ok = |e: &[T]| (0..n_rrh).all(|n| e[n] <= caps[n] + budget_tol[n]);

    if !residual_ok(&energies) {
        // projected subgradient ascent on the budget multipliers
        for iter in 1..=500 {
            let step = real::<T>(0.1) / real::<T>(iter as f64).sqrt();
            let mut moved = false;
            for n in 0..n_rrh {
                let r = energies[n] / grid.t_end() - cfg.p_avg[n];
                let next = (mu1[n] + step * r).max(T::zero());
                if next != mu1[n] {
                    moved = true;
                }
                mu1[n] = next;
            }
            let (_, _, e) = solve_at(&mu1)?;
            energies = e;
            let tight = (0..n_rrh).all(|n| {
                energies[n] <= caps[n] + real::<T>(1e-6) * (T::one() + caps[n].abs())
            });
            if tight && !moved {
                break;
            }
            if tight && iter > 50 {
                break;
            }
        }
        // exact polish: per-coordinate bisection to budget equality,
        // keeping the delivery constraint binding throughout
        for _ in 0..40 {
            let (_, _, e) = solve_at(&mu1)?;
            energies = e;
            if residual_ok(&energies) && complementary(&mu1, &energies, &caps, &budget_tol) {
                break;
            }
            for n in 0..n_rrh {
                let at = |v: T, mu1: &mut Vec<T>| -> Result<T, SolveError> {
                    mu1[n] = v;
                    let (_, _, e) = solve_at(mu1)?;
                    Ok(e[n])
                };
                if at(T::zero(), &mut mu1)? <= caps[n] + budget_tol[n] {
                    mu1[n] = T::zero();
                    continue;
                }
                let mut lo = T::zero();
                let mut hi = T::one();
                let mut grow = 0;
                while at(hi, &mut mu1)? > caps[n] {
                    hi = hi * real::<T>(2.0);
                    grow += 1;
                    if grow > 200 {
                        break;
                    }
                }
                let two = real::<T>(2.0);
                for _ in 0..120 {
                    let mid = (lo + hi) / two;
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if at(mid, &mut mu1)? > caps[n] {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                mu1[n] = hi;
            }
        }
        let (_, _, e) = solve_at(&mu1)?;
        energies = e;
        if !residual_ok(&energies) {
            let best = max_deliverable(cfg, grid)?;
            if best < q * (T::one() - real::<T>(1e-9)) {
                return Err(SolveError::Infeasible(format!(
                    "budgets deliver at most {} of the required {}",
                    to_f64(best),
                    to_f64(q)
                )));
            }
            return Err(SolveError::Diverged(
                "budget multipliers failed to converge".into(),
            ));
        }
    }

    let (ctx, mu2, _) = solve_at(&mu1)?;
    let m = grid.len();
    let mut p = vec![vec![T::zero(); m]; n_rrh];
    let mut modes = vec![vec![SegmentMode::Zero; m]; n_rrh];
    let ln2 = real::<T>(std::f64::consts::LN_2);
    let mut mu3 = Vec::with_capacity(m);
    for i in 0..m {
        let n = ctx.serving[i];
        let y = ctx.snr(mu2, i);
        p[n][i] = y / ctx.kappas[n][i];
        modes[n][i] = SegmentMode::ClosedForm;
        // floor shadow price, nonzero only where the delay floor binds
        let floor_price = ctx.price[i] - mu2 * ctx.bandwidth / (ln2 * (T::one() + y));
        mu3.push(floor_price.max(T::zero()));
    }
    let trajectory = PowerTrajectory {
        grid: grid.clone(),
        p,
        modes: Some(modes),
    };
    let delivered = ctx.delivered(mu2);
    Ok(Regime2Solution {
        trajectory,
        duals: DualState { mu1, mu2, mu3 },
        delivered,
    })
}

fn complementary<T: Real>(mu1: &[T], e: &[T], caps: &[T], tol: &[T]) -> bool {
    mu1.iter()
        .zip(e.iter().zip(caps.iter().zip(tol)))
        .all(|(&mu, (&en, (&cap, &tl)))| mu == T::zero() || (en - cap).abs() <= tl * real(100.0))
}

/// One Gauss-Seidel sweep of the stationarity fixed point over the extra
/// powers `p2` (relative to the delay-only base `p1_star`).
///
/// For each sample and RRH in turn, the update solves the per-RRH
/// stationarity condition with the other RRH held fixed and projects onto
/// the floor `p2 >= -p1_star`.
pub fn kkt_update<T: Real>(
    state: &DualState<T>,
    p2: &[Vec<T>],
    p1_star: &[Vec<T>],
    w: &SurrogateWeights<T>,
    cfg: &ScenarioConfig<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<Vec<T>>, SolveError> {
    let kappas = cfg.kappa_samples(grid);
    let n_rrh = p2.len();
    let m = grid.len();
    let ln2 = real::<T>(std::f64::consts::LN_2);
    let mut next: Vec<Vec<T>> = p2.to_vec();
    let mut worst = T::zero();
    for i in 0..m {
        for n in 0..n_rrh {
            let mut c_other = T::one();
            for j in 0..n_rrh {
                c_other = c_other + kappas[j][i] * p1_star[j][i];
                if j != n {
                    c_other = c_other + kappas[j][i] * next[j][i];
                }
            }
            let d = w.k[n] + state.mu1[n] - state.mu3[i] * kappas[n][i];
            let cand = if d > real::<T>(1e-300) {
                state.mu2 * cfg.bandwidth_hz / (ln2 * d) - c_other / kappas[n][i]
            } else {
                T::infinity()
            };
            let v = cand.max(-p1_star[n][i]);
            if !v.is_finite() || v.abs() > real::<T>(1e6) * (T::one() + p1_star[n][i].abs()) {
                return Err(SolveError::Diverged(format!(
                    "fixed-point iterate blew up at sample {i}"
                )));
            }
            worst = worst.max((v - next[n][i]).abs());
            next[n][i] = v;
        }
    }
    let _ = worst;
    Ok(next)
}

/// Alternative regime-2 path: same dual logic, primal map replaced by the
/// Gauss-Seidel stationarity fixed point. Used as an independent cross-check.
pub fn solve_regime2_kkt<T: Real>(
    cfg: &ScenarioConfig<T>,
    w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
) -> Result<Regime2Solution<T>, SolveError> {
    assert_eq!(cfg.n_rrh(), 2);
    let base = solve_regime1(cfg, w, grid)?;
    let p1_star = base.trajectory.p.clone();
    let kappas = cfg.kappa_samples(grid);
    let m = grid.len();
    let gamma = snr_floor(cfg);
    let c0 = T::one() + gamma;
    let ln2 = real::<T>(std::f64::consts::LN_2);
    let wts = grid.quad_weights();
    let q = cfg.content_size;

    // for fixed (mu1, mu2) the floor shadow price has a closed per-sample
    // form; the fixed point then converges to the per-time optimum
    let primal = |mu1: &[T], mu2: T| -> Result<Vec<Vec<T>>, SolveError> {
        let mu3: Vec<T> = (0..m)
            .map(|i| {
                let q_star = (0..2)
                    .map(|n| (w.k[n] + mu1[n]) / kappas[n][i])
                    .fold(T::infinity(), |a, b| a.min(b));
                (q_star - mu2 * cfg.bandwidth_hz / (ln2 * c0)).max(T::zero())
            })
            .collect();
        let state = DualState {
            mu1: mu1.to_vec(),
            mu2,
            mu3,
        };
        let mut p2 = vec![vec![T::zero(); m]; 2];
        for sweep in 0..400 {
            let next = kkt_update(&state, &p2, &p1_star, w, cfg, grid)?;
            let delta = (0..2)
                .flat_map(|n| (0..m).map(move |i| (n, i)))
                .map(|(n, i)| (next[n][i] - p2[n][i]).abs())
                .fold(T::zero(), |a, b| a.max(b));
            p2 = next;
            if delta < real::<T>(1e-12) {
                break;
            }
            if sweep == 399 {
                return Err(SolveError::Diverged(
                    "stationarity fixed point did not settle".into(),
                ));
            }
        }
        Ok(p2)
    };
    let delivered = |p2: &[Vec<T>]| -> T {
        (0..m)
            .map(|i| {
                let snr: T = (0..2)
                    .map(|n| kappas[n][i] * (p1_star[n][i] + p2[n][i]))
                    .sum();
                wts[i] * cfg.bandwidth_hz * (T::one() + snr).log2()
            })
            .sum()
    };
    let energies = |p2: &[Vec<T>]| -> Vec<T> {
        (0..2)
            .map(|n| {
                (0..m)
                    .map(|i| wts[i] * (p1_star[n][i] + p2[n][i]))
                    .sum()
            })
            .collect()
    };

    let caps: Vec<T> = cfg.p_avg.iter().map(|&p| p * grid.t_end()).collect();
    let mut mu1 = vec![T::zero(); 2];
    let two = real::<T>(2.0);
    let solve_mu2 = |mu1: &[T]| -> Result<(Vec<Vec<T>>, T), SolveError> {
        let mut hi = T::one();
        let mut grow = 0;
        while delivered(&primal(mu1, hi)?) < q {
            hi = hi * two;
            grow += 1;
            if grow > 200 {
                return Err(SolveError::Diverged("mu2 bracket did not close".into()));
            }
        }
        let mut lo = T::zero();
        for _ in 0..90 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if delivered(&primal(mu1, mid)?) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p2 = primal(mu1, hi)?;
        Ok((p2, hi))
    };

    let (mut p2, mut mu2) = solve_mu2(&mu1)?;
    for iter in 1..=200 {
        let e = energies(&p2);
        let viol = (0..2)
            .map(|n| (e[n] - caps[n]).max(T::zero()) / (T::one() + caps[n]))
            .fold(T::zero(), |a, b| a.max(b));
        if viol < real::<T>(1e-8) {
            break;
        }
        let step = real::<T>(0.1) / real::<T>(iter as f64).sqrt();
        for n in 0..2 {
            let r = e[n] / grid.t_end() - cfg.p_avg[n];
            mu1[n] = (mu1[n] + step * r).max(T::zero());
        }
        let (np2, nmu2) = solve_mu2(&mu1)?;
        p2 = np2;
        mu2 = nmu2;
    }

    let mut p = vec![vec![T::zero(); m]; 2];
    let mut modes = vec![vec![SegmentMode::Zero; m]; 2];
    for n in 0..2 {
        for i in 0..m {
            let v = (p1_star[n][i] + p2[n][i]).max(T::zero());
            p[n][i] = v;
            if v > T::zero() {
                modes[n][i] = SegmentMode::ClosedForm;
            }
        }
    }
    let total = delivered(&p2);
    let mu3 = vec![T::zero(); m];
    Ok(Regime2Solution {
        trajectory: PowerTrajectory {
            grid: grid.clone(),
            p,
            modes: Some(modes),
        },
        duals: DualState { mu1, mu2, mu3 },
        delivered: total,
    })
}

/// Regime dispatch used as the MM inner solver.
pub fn solve_inner<T: Real>(
    cfg: &ScenarioConfig<T>,
    w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
) -> Result<PowerTrajectory<T>, SolveError> {
    match cfg.n_rrh() {
        1 => solve_single_rrh(cfg, w, grid),
        2 => {
            if is_regime1(cfg) {
                solve_regime1(cfg, w, grid).map(|s| s.trajectory)
            } else {
                solve_regime2(cfg, w, grid).map(|s| s.trajectory)
            }
        }
        n => Err(SolveError::Diverged(format!(
            "no solver path for {n} RRHs"
        ))),
    }
}
