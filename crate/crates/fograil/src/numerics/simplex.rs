//! Dense two-phase simplex with bounded variables and Bland's rule.
//!
//! The instances this crate produces are small and benign: at most a few
//! thousand variables, a handful of coupling rows, and box bounds on every
//! variable. Boxes are handled natively (bound flips) instead of being
//! expanded into rows, which keeps the tableau at `rows x vars`.

use crate::scalar::{real, Real};

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow<T> {
    pub coeffs: Vec<T>,
    pub sense: RowSense,
    pub rhs: T,
}

/// `min c'x` subject to rows `a'x {<=,>=,=} b` and per-variable boxes.
/// Bounds may be infinite.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub rows: Vec<LpRow<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> LinearProgram<T> {
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
        }
    }

    pub fn bound(mut self, var: usize, lower: T, upper: T) -> Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn row(mut self, coeffs: Vec<T>, sense: RowSense, rhs: T) -> Self {
        self.rows.push(LpRow { coeffs, sense, rhs });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { values: Vec<T>, objective: T },
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau<T> {
    ncols: usize,
    rows: Vec<Vec<T>>,
    lower: Vec<T>,
    upper: Vec<T>,
    status: Vec<VarStatus>,
    value: Vec<T>,
    xb: Vec<T>,
    basis: Vec<usize>,
    artificials: Vec<usize>,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;

/// Solves the program. `Infeasible` is a status, not an error; an unbounded
/// objective is reported as [`NumericsError::Unbounded`].
pub fn solve_lp<T: Real>(lp: &LinearProgram<T>) -> Result<LpOutcome<T>, NumericsError> {
    let n = lp.objective.len();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(NumericsError::BadProgram(
            "bound vectors must match variable count".into(),
        ));
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(NumericsError::BadProgram(format!(
                "row {i} has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
    }
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Ok(LpOutcome::Infeasible);
        }
    }

    let mut tab = Tableau::build(lp);
    if !tab.artificials.is_empty() {
        let mut phase1_cost = vec![T::zero(); tab.ncols];
        for &a in &tab.artificials {
            phase1_cost[a] = T::one();
        }
        tab.optimize(&phase1_cost, true)?;
        let infeas: T = tab
            .artificials
            .iter()
            .map(|&a| tab.current_value(a))
            .sum();
        let scale = T::one() + tab.rhs_scale();
        if infeas > real::<T>(1e-7) * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // pin artificials at zero for phase 2
        for &a in &tab.artificials.clone() {
            tab.lower[a] = T::zero();
            tab.upper[a] = T::zero();
            if !matches!(tab.status[a], VarStatus::Basic(_)) {
                tab.status[a] = VarStatus::AtLower;
                tab.value[a] = T::zero();
            }
        }
    }

    let mut cost = vec![T::zero(); tab.ncols];
    cost[..n].copy_from_slice(&lp.objective);
    tab.optimize(&cost, false)?;

    let values: Vec<T> = (0..n).map(|j| tab.current_value(j)).collect();
    let objective = values
        .iter()
        .zip(&lp.objective)
        .map(|(&v, &c)| v * c)
        .sum();
    Ok(LpOutcome::Optimal { values, objective })
}

impl<T: Real> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.objective.len();
        let m = lp.rows.len();
        let nslack = m;
        // slack bounds by row sense
        let slack_bounds = |sense: RowSense| match sense {
            RowSense::Le => (T::zero(), T::infinity()),
            RowSense::Ge => (T::neg_infinity(), T::zero()),
            RowSense::Eq => (T::zero(), T::zero()),
        };

        // pick the structural starting corner (all-lower vs all-upper) that
        // violates fewer rows, so phase 1 needs few or no artificials
        let corner = |prefer_upper: bool| -> Vec<T> {
            (0..n)
                .map(|j| {
                    let (lo, up) = (lp.lower[j], lp.upper[j]);
                    if prefer_upper {
                        if up.is_finite() {
                            up
                        } else if lo.is_finite() {
                            lo
                        } else {
                            T::zero()
                        }
                    } else if lo.is_finite() {
                        lo
                    } else if up.is_finite() {
                        up
                    } else {
                        T::zero()
                    }
                })
                .collect()
        };
        let violations = |x: &[T]| -> usize {
            lp.rows
                .iter()
                .filter(|row| {
                    let r = row.rhs
                        - row
                            .coeffs
                            .iter()
                            .zip(x)
                            .map(|(&a, &v)| a * v)
                            .sum::<T>();
                    let (sl, su) = slack_bounds(row.sense);
                    r < sl || r > su
                })
                .count()
        };
        let lo_corner = corner(false);
        let up_corner = corner(true);
        let start = if violations(&up_corner) < violations(&lo_corner) {
            up_corner
        } else {
            lo_corner
        };

        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut value = start.clone();
        let mut status: Vec<VarStatus> = (0..n)
            .map(|j| {
                if start[j] == lp.upper[j] && lp.upper[j].is_finite() {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                }
            })
            .collect();
        for row in &lp.rows {
            let (sl, su) = slack_bounds(row.sense);
            lower.push(sl);
            upper.push(su);
            value.push(T::zero());
            status.push(VarStatus::AtLower);
        }

        let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut xb = Vec::with_capacity(m);
        let mut artificials = Vec::new();
        let mut extra_cols: Vec<(usize, T)> = Vec::new(); // (row, sign) per artificial

        for (i, row) in lp.rows.iter().enumerate() {
            let residual = row.rhs
                - row
                    .coeffs
                    .iter()
                    .zip(&start)
                    .map(|(&a, &v)| a * v)
                    .sum::<T>();
            let (sl, su) = slack_bounds(row.sense);
            let slack = n + i;
            if residual >= sl && residual <= su {
                basis.push(slack);
                status[slack] = VarStatus::Basic(i);
                xb.push(residual);
            } else {
                // slack parks at its nearest bound; an artificial absorbs the rest
                let parked = if residual < sl { sl } else { su };
                value[slack] = parked;
                status[slack] = if parked == sl {
                    VarStatus::AtLower
                } else {
                    VarStatus::AtUpper
                };
                let deficit = residual - parked;
                let sign = if deficit >= T::zero() {
                    T::one()
                } else {
                    -T::one()
                };
                let art = n + nslack + artificials.len();
                artificials.push(art);
                extra_cols.push((i, sign));
                lower.push(T::zero());
                upper.push(T::infinity());
                value.push(deficit.abs());
                status.push(VarStatus::Basic(i));
                basis.push(art);
                xb.push(deficit.abs());
            }
            let mut tab_row = Vec::with_capacity(n + nslack + 4);
            tab_row.extend_from_slice(&row.coeffs);
            for k in 0..nslack {
                tab_row.push(if k == i { T::one() } else { T::zero() });
            }
            rows.push(tab_row);
        }

        let ncols = n + nslack + artificials.len();
        for row in rows.iter_mut() {
            row.resize(ncols, T::zero());
        }
        for (a_idx, &(i, sign)) in extra_cols.iter().enumerate() {
            let col = n + nslack + a_idx;
            rows[i][col] = sign;
            if sign < T::zero() {
                // keep the basic artificial's column an identity column
                for v in rows[i].iter_mut() {
                    *v = -*v;
                }
                rows[i][col] = T::one();
            }
        }

        Tableau {
            ncols,
            rows,
            lower,
            upper,
            status,
            value,
            xb,
            basis,
            artificials,
        }
    }

    fn rhs_scale(&self) -> T {
        self.xb
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    fn current_value(&self, j: usize) -> T {
        match self.status[j] {
            VarStatus::Basic(i) => self.xb[i],
            _ => self.value[j],
        }
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let m = self.rows.len();
        let cb: Vec<T> = (0..m).map(|i| cost[self.basis[i]]).collect();
        (0..self.ncols)
            .map(|j| {
                let dot: T = (0..m).map(|i| cb[i] * self.rows[i][j]).sum();
                cost[j] - dot
            })
            .collect()
    }

    fn optimize(&mut self, cost: &[T], phase1: bool) -> Result<(), NumericsError> {
        let cost_tol = real::<T>(COST_TOL);
        let pivot_tol = real::<T>(PIVOT_TOL);
        let mut z = self.reduced_costs(cost);
        let max_iters = 200 * (self.ncols + self.rows.len() + 10);

        for _ in 0..max_iters {
            // entering variable: Bland's rule, lowest index first
            let mut entering = None;
            for j in 0..self.ncols {
                if self.lower[j] >= self.upper[j] {
                    continue; // fixed
                }
                match self.status[j] {
                    VarStatus::Basic(_) => {}
                    VarStatus::AtLower => {
                        if z[j] < -cost_tol {
                            entering = Some((j, T::one()));
                            break;
                        }
                    }
                    VarStatus::AtUpper => {
                        if z[j] > cost_tol {
                            entering = Some((j, -T::one()));
                            break;
                        }
                    }
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(());
            };

            // ratio test over basic variables plus the entering bound flip
            let own_range = if self.lower[q].is_finite() && self.upper[q].is_finite() {
                self.upper[q] - self.lower[q]
            } else {
                T::infinity()
            };
            let mut t_star = own_range;
            let mut leave: Option<usize> = None; // row index
            for i in 0..self.rows.len() {
                let alpha = self.rows[i][q] * dir;
                if alpha.abs() <= pivot_tol {
                    continue;
                }
                let k = self.basis[i];
                let limit = if alpha > T::zero() {
                    // basic value decreases toward its lower bound
                    if self.lower[k].is_finite() {
                        (self.xb[i] - self.lower[k]) / alpha
                    } else {
                        T::infinity()
                    }
                } else if self.upper[k].is_finite() {
                    (self.xb[i] - self.upper[k]) / alpha
                } else {
                    T::infinity()
                };
                let limit = limit.max(T::zero());
                let replace = match leave {
                    _ if limit < t_star - real::<T>(1e-12) => true,
                    Some(r) if limit <= t_star + real::<T>(1e-12) => self.basis[i] < self.basis[r],
                    None => limit <= t_star,
                    _ => false,
                };
                if replace {
                    t_star = limit.min(t_star);
                    leave = Some(i);
                }
            }

            if !t_star.is_finite() {
                if phase1 {
                    return Err(NumericsError::BadProgram(
                        "phase-1 objective unbounded (internal error)".into(),
                    ));
                }
                return Err(NumericsError::Unbounded);
            }

            match leave {
                None => {
                    // entering variable flips to its opposite bound
                    for i in 0..self.rows.len() {
                        let alpha = self.rows[i][q];
                        self.xb[i] = self.xb[i] - dir * t_star * alpha;
                    }
                    self.status[q] = if dir > T::zero() {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.value[q] = if dir > T::zero() {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some(r) => {
                    let entering_val = self.current_value(q) + dir * t_star;
                    for i in 0..self.rows.len() {
                        if i != r {
                            let alpha = self.rows[i][q];
                            self.xb[i] = self.xb[i] - dir * t_star * alpha;
                        }
                    }
                    let k = self.basis[r];
                    let alpha_r = self.rows[r][q] * dir;
                    self.status[k] = if alpha_r > T::zero() {
                        VarStatus::AtLower
                    } else {
                        VarStatus::AtUpper
                    };
                    self.value[k] = if alpha_r > T::zero() {
                        self.lower[k]
                    } else {
                        self.upper[k]
                    };

                    // pivot on (r, q)
                    let p = self.rows[r][q];
                    for v in self.rows[r].iter_mut() {
                        *v = *v / p;
                    }
                    for i in 0..self.rows.len() {
                        if i == r {
                            continue;
                        }
                        let f = self.rows[i][q];
                        if f.abs() > T::zero() {
                            for j in 0..self.ncols {
                                let upd = self.rows[r][j] * f;
                                self.rows[i][j] = self.rows[i][j] - upd;
                            }
                        }
                    }
                    let zf = z[q];
                    if zf.abs() > T::zero() {
                        for j in 0..self.ncols {
                            z[j] = z[j] - self.rows[r][j] * zf;
                        }
                    }
                    self.basis[r] = q;
                    self.status[q] = VarStatus::Basic(r);
                    self.xb[r] = entering_val;
                }
            }
        }
        Err(NumericsError::BadProgram(
            "simplex iteration limit exceeded".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn optimal(lp: &LinearProgram<f64>) -> (Vec<f64>, f64) {
        match solve_lp(lp).unwrap() {
            LpOutcome::Optimal { values, objective } => (values, objective),
            LpOutcome::Infeasible => panic!("expected optimal"),
        }
    }

    #[test]
    fn min_x_above_one() {
        let lp = LinearProgram::new(vec![1.0])
            .bound(0, 0.0, 2.0)
            .row(vec![1.0], RowSense::Ge, 1.0);
        let (x, obj) = optimal(&lp);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(obj, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn face_optimum() {
        // oracle: vertex enumeration of the unit box cut by x+y <= 1 gives -1
        let lp = LinearProgram::new(vec![-1.0, -1.0])
            .bound(0, 0.0, 1.0)
            .bound(1, 0.0, 1.0)
            .row(vec![1.0, 1.0], RowSense::Le, 1.0);
        let (x, obj) = optimal(&lp);
        assert_abs_diff_eq!(obj, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0] + x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_box() {
        let lp = LinearProgram::new(vec![1.0])
            .bound(0, 0.0, 1.0)
            .row(vec![1.0], RowSense::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::new(vec![-1.0]).bound(0, 0.0, f64::INFINITY);
        assert!(matches!(solve_lp(&lp), Err(NumericsError::Unbounded)));
    }

    #[test]
    fn equality_row() {
        let lp = LinearProgram::new(vec![1.0, 2.0])
            .bound(0, 0.0, 10.0)
            .bound(1, 0.0, 10.0)
            .row(vec![1.0, 1.0], RowSense::Eq, 3.0);
        let (x, obj) = optimal(&lp);
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(obj, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_duplicate_rows() {
        let lp = LinearProgram::new(vec![1.0, 1.0])
            .bound(0, 0.0, 5.0)
            .bound(1, 0.0, 5.0)
            .row(vec![1.0, 1.0], RowSense::Ge, 2.0)
            .row(vec![1.0, 1.0], RowSense::Ge, 2.0)
            .row(vec![2.0, 2.0], RowSense::Ge, 4.0);
        let (_, obj) = optimal(&lp);
        assert_abs_diff_eq!(obj, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn random_feasible_points_never_beat_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(2..5);
            let mut lp = LinearProgram::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
            for j in 0..n {
                lp = lp.bound(j, 0.0, rng.gen_range(0.5..3.0));
            }
            for _ in 0..rng.gen_range(1..4) {
                let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.5)).collect();
                // rhs chosen so the all-half point stays feasible
                let mid: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * lp.upper[j] * 0.5)
                    .sum();
                lp = lp.row(coeffs, RowSense::Le, mid + rng.gen_range(0.0..1.0));
            }
            let (_, obj) = optimal(&lp);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..n).map(|j| rng.gen_range(0.0..lp.upper[j])).collect();
                let feasible = lp.rows.iter().all(|row| {
                    let lhs: f64 = row.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
                    lhs <= row.rhs + 1e-12
                });
                if feasible {
                    let val: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    assert!(val >= obj - 1e-8, "random point beats simplex: {val} < {obj}");
                }
            }
        }
    }

    #[test]
    fn many_row_two_var_program() {
        // worst-case row binds: x >= max_m rhs_m / coeff
        let mut lp = LinearProgram::new(vec![1.0, 1.0])
            .bound(0, 0.0, 100.0)
            .bound(1, 0.0, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let a: f64 = rng.gen_range(0.5..2.0);
            let b: f64 = rng.gen_range(0.5..2.0);
            let r: f64 = rng.gen_range(1.0..10.0);
            lp = lp.row(vec![a, b], RowSense::Ge, r);
            worst = worst.max(r / (a + b).max(1e-12));
        }
        let (x, obj) = optimal(&lp);
        for row in &lp.rows {
            let lhs = row.coeffs[0] * x[0] + row.coeffs[1] * x[1];
            assert!(lhs >= row.rhs - 1e-8);
        }
        assert!(obj <= 20.0, "objective {obj} far from expected scale {worst}");
    }
}
