//! Brute-force reference solvers used to validate the closed-form and
//! dual-based paths at desk scale. Deliberately slow and structurally
//! different from the production solvers.

use crate::numerics::{solve_lp, LinearProgram, LpOutcome, RowSense, TimeGrid};
use crate::scalar::{real, Real};
use crate::scenario::ScenarioConfig;
use crate::dynamic_solver::{snr_floor, ReducedCoefficients};
use crate::surrogate::{SolveError, SurrogateWeights};

/// Reference answer: cost, the minimizer found, and bookkeeping.
#[derive(Debug, Clone)]
pub struct OracleResult<T> {
    pub cost: T,
    pub values: OracleValues<T>,
    pub feasible: bool,
    pub evaluations: usize,
    /// Upper bound on the cost excess due to quantization (zero for the
    /// exact LP / vertex oracles).
    pub quantization: T,
}

#[derive(Debug, Clone)]
pub enum OracleValues<T> {
    /// Per-RRH samples on the grid.
    Trajectory(Vec<Vec<T>>),
    /// Constant per-RRH powers.
    Constants(Vec<T>),
    None,
}

/// Full discretization of the reduced regime-1 problem solved as an LP over
/// the per-sample powers of RRH 2.
pub fn oracle_regime1_lp<T: Real>(
    rc: &ReducedCoefficients<T>,
    w: &SurrogateWeights<T>,
    budgets: &[T],
    grid: &TimeGrid<T>,
) -> Result<OracleResult<T>, SolveError> {
    let m = grid.len();
    let wts = grid.quad_weights();
    let cap2 = grid.t_end() * budgets[1];
    let objective: Vec<T> = (0..m)
        .map(|i| wts[i] * (w.k[1] - w.k[0] * rc.a2[i]))
        .collect();
    let mut lp = LinearProgram::new(objective);
    for i in 0..m {
        lp = lp.bound(i, T::zero(), rc.a3[i]);
    }
    lp = lp.row(wts.clone(), RowSense::Le, cap2);
    if rc.deficit > T::zero() {
        let cov: Vec<T> = (0..m).map(|i| wts[i] * rc.a2[i]).collect();
        lp = lp.row(cov, RowSense::Ge, rc.deficit);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { values, objective } => {
            let p1: Vec<T> = (0..m)
                .map(|i| (rc.a0[i] - rc.a2[i] * values[i]).max(T::zero()))
                .collect();
            let cost = w.k[0] * rc.a_total + objective;
            Ok(OracleResult {
                cost,
                values: OracleValues::Trajectory(vec![p1, values]),
                feasible: true,
                evaluations: m,
                quantization: T::zero(),
            })
        }
        LpOutcome::Infeasible => Ok(OracleResult {
            cost: T::infinity(),
            values: OracleValues::None,
            feasible: false,
            evaluations: m,
            quantization: T::zero(),
        }),
    }
}

/// Exhaustive-per-time reference for regime 2 on a coarse grid.
///
/// Candidates at each sample are `k_levels` quantized power levels per RRH
/// (only one RRH active at a time), all at or above the delay floor. A
/// scalar scan over the delivery price picks per-time argmin candidates; a
/// coarse dual grid over the budget prices is overlaid only when budgets
/// come out violated.
pub fn oracle_regime2_grid<T: Real>(
    cfg: &ScenarioConfig<T>,
    w: &SurrogateWeights<T>,
    grid: &TimeGrid<T>,
    k_levels: usize,
) -> Result<OracleResult<T>, SolveError> {
    assert!(grid.len() <= 40, "coarse-grid oracle only");
    assert!((2..=50).contains(&k_levels));
    let m = grid.len();
    let n_rrh = cfg.n_rrh();
    let kappas = cfg.kappa_samples(grid);
    let gamma = snr_floor(cfg);
    let wts = grid.quad_weights();
    let caps: Vec<T> = cfg.p_avg.iter().map(|&p| p * grid.t_end()).collect();
    let q = cfg.content_size;
    let mut evaluations = 0usize;

    // power levels per (sample, rrh): log-spaced from the delay floor up to
    // the whole budget spent in this one sample
    let levels: Vec<Vec<Vec<T>>> = (0..m)
        .map(|i| {
            (0..n_rrh)
                .map(|n| {
                    let lo = gamma / kappas[n][i];
                    let hi = if wts[i] > T::zero() {
                        (caps[n] / wts[i]).max(lo * real::<T>(2.0))
                    } else {
                        lo * real::<T>(2.0)
                    };
                    let ratio = (hi / lo).max(T::one() + real::<T>(1e-9));
                    (0..k_levels)
                        .map(|k| {
                            let f = real::<T>(k as f64 / (k_levels - 1) as f64);
                            lo * ratio.powf(f)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    // allocation for given budget prices and delivery price
    let allocate = |lambda: &[T], nu: T| -> (Vec<(usize, T)>, T, Vec<T>, T) {
        let mut choice = Vec::with_capacity(m);
        let mut rate = T::zero();
        let mut cost = T::zero();
        let mut energy = vec![T::zero(); n_rrh];
        for i in 0..m {
            let mut best: Option<(usize, T, T)> = None;
            for n in 0..n_rrh {
                for &p in &levels[i][n] {
                    let r = cfg.bandwidth_hz * (T::one() + kappas[n][i] * p).log2();
                    let score = (w.k[n] + lambda[n]) * p - nu * r;
                    if best.map_or(true, |(_, _, s)| score < s) {
                        best = Some((n, p, score));
                    }
                }
            }
            let (n, p, _) = best.unwrap();
            choice.push((n, p));
            rate = rate + wts[i] * cfg.bandwidth_hz * (T::one() + kappas[n][i] * p).log2();
            cost = cost + wts[i] * w.k[n] * p;
            energy[n] = energy[n] + wts[i] * p;
        }
        (choice, rate, energy, cost)
    };

    // smallest delivery price reaching Q under the given budget prices
    let mut best: Option<(T, Vec<(usize, T)>)> = None;
    let lambda_grid: Vec<Vec<T>> = {
        let vals: Vec<T> = std::iter::once(T::zero())
            .chain((0..7).map(|i| real::<T>(0.05) * real::<T>(3.0f64.powi(i))))
            .collect();
        let mut combos = vec![vec![T::zero(); n_rrh]];
        // only expand the dual grid lazily: the first combo is all-zero
        for v1 in &vals {
            for v2 in &vals {
                if *v1 == T::zero() && *v2 == T::zero() {
                    continue;
                }
                combos.push(vec![*v1, *v2]);
            }
        }
        combos
    };
    for (ci, lambda) in lambda_grid.iter().enumerate() {
        let mut hi = T::one();
        let mut tries = 0;
        loop {
            let (_, rate, _, _) = allocate(lambda, hi);
            evaluations += m * n_rrh * k_levels;
            if rate >= q {
                break;
            }
            hi = hi * real::<T>(2.0);
            tries += 1;
            if tries > 120 {
                break;
            }
        }
        let (_, rate_hi, _, _) = allocate(lambda, hi);
        if rate_hi < q {
            continue;
        }
        let mut lo = T::zero();
        for _ in 0..80 {
            let mid = (lo + hi) * real::<T>(0.5);
            let (_, rate, _, _) = allocate(lambda, mid);
            evaluations += m * n_rrh * k_levels;
            if rate < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (choice, _, energy, cost) = allocate(lambda, hi);
        let within = (0..n_rrh).all(|n| {
            energy[n] <= caps[n] * (T::one() + real::<T>(1e-9)) + real::<T>(1e-9)
        });
        if within && best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, choice));
        }
        // the unconstrained combo already feasible: no need for the grid
        if ci == 0 && within {
            break;
        }
    }

    match best {
        Some((cost, choice)) => {
            let mut p = vec![vec![T::zero(); m]; n_rrh];
            // one-step quantization bound on the cost excess
            let mut quant = T::zero();
            for (i, &(n, pw)) in choice.iter().enumerate() {
                p[n][i] = pw;
                let row = &levels[i][n];
                let step = (1..row.len())
                    .find(|&j| row[j] >= pw - real::<T>(1e-15))
                    .map(|j| row[j] - row[j - 1])
                    .unwrap_or(T::zero());
                quant = quant + wts[i] * w.k[n] * step;
            }
            Ok(OracleResult {
                cost,
                values: OracleValues::Trajectory(p),
                feasible: true,
                evaluations,
                quantization: quant,
            })
        }
        None => Ok(OracleResult {
            cost: T::infinity(),
            values: OracleValues::None,
            feasible: false,
            evaluations,
            quantization: T::zero(),
        }),
    }
}

/// Vertex-enumeration reference for the two-variable constant-power LP.
pub fn oracle_invariant_vertices<T: Real>(
    cfg: &ScenarioConfig<T>,
    k_prime: &[T],
    grid: &TimeGrid<T>,
) -> Result<OracleResult<T>, SolveError> {
    assert_eq!(cfg.n_rrh(), 2, "vertex oracle is two-dimensional");
    let gamma = snr_floor(cfg);
    let kappas = cfg.kappa_samples(grid);
    let m = grid.len();
    let caps = [cfg.p_avg[0], cfg.p_avg[1]];

    // constraint list as (a1, a2, b) meaning a1 x + a2 y >= b, plus boxes
    let mut rows: Vec<(T, T, T)> = (0..m)
        .map(|i| (kappas[0][i], kappas[1][i], gamma))
        .collect();
    // dedup nearly identical rows
    rows.sort_by(|p, q| {
        p.0.partial_cmp(&q.0)
            .unwrap()
            .then(p.1.partial_cmp(&q.1).unwrap())
    });
    rows.dedup_by(|p, q| {
        (p.0 - q.0).abs() <= real::<T>(1e-12) && (p.1 - q.1).abs() <= real::<T>(1e-12)
    });

    let mut candidates: Vec<[T; 2]> = vec![
        [T::zero(), T::zero()],
        [caps[0], T::zero()],
        [T::zero(), caps[1]],
        [caps[0], caps[1]],
    ];
    // row-row intersections
    for i in 0..rows.len() {
        let (a1, a2, b1) = rows[i];
        for &(c1, c2, b2) in rows.iter().skip(i + 1) {
            let det = a1 * c2 - a2 * c1;
            if det.abs() <= real::<T>(1e-14) {
                continue;
            }
            candidates.push([(b1 * c2 - a2 * b2) / det, (a1 * b2 - b1 * c1) / det]);
        }
        // row-box intersections
        for &(xfix, idx) in &[(T::zero(), 0usize), (caps[0], 0), (T::zero(), 1), (caps[1], 1)] {
            let pt = if idx == 0 {
                if a2.abs() <= real::<T>(1e-14) {
                    continue;
                }
                [xfix, (b1 - a1 * xfix) / a2]
            } else {
                if a1.abs() <= real::<T>(1e-14) {
                    continue;
                }
                [(b1 - a2 * xfix) / a1, xfix]
            };
            candidates.push(pt);
        }
    }

    let tol = real::<T>(1e-9) * (T::one() + gamma);
    let feasible = |p: &[T; 2]| -> bool {
        p[0] >= -tol
            && p[1] >= -tol
            && p[0] <= caps[0] + tol
            && p[1] <= caps[1] + tol
            && rows
                .iter()
                .all(|&(a1, a2, b)| a1 * p[0] + a2 * p[1] >= b - tol)
    };
    let mut best: Option<([T; 2], T)> = None;
    let mut evaluations = 0;
    for cand in &candidates {
        evaluations += 1;
        if !feasible(cand) {
            continue;
        }
        let clipped = [
            cand[0].max(T::zero()).min(caps[0]),
            cand[1].max(T::zero()).min(caps[1]),
        ];
        let cost = k_prime[0] * clipped[0] + k_prime[1] * clipped[1];
        if best.as_ref().map_or(true, |(_, c)| cost < *c) {
            best = Some((clipped, cost));
        }
    }
    match best {
        Some((p, cost)) => Ok(OracleResult {
            cost,
            values: OracleValues::Constants(p.to_vec()),
            feasible: true,
            evaluations,
            quantization: T::zero(),
        }),
        None => Ok(OracleResult {
            cost: T::infinity(),
            values: OracleValues::None,
            feasible: false,
            evaluations,
            quantization: T::zero(),
        }),
    }
}
