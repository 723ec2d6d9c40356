//! Deterministic numeric primitives shared by every solver: composite
//! quadrature on a uniform time grid, monotone bisection, and a small dense
//! LP solver (see [`simplex`]).

mod simplex;

pub use simplex::{solve_lp, LinearProgram, LpOutcome, LpRow, RowSense};

use crate::scalar::{real, to_f64, Real};

#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("non-finite value at sample index {index} (t = {t})")]
    NonFinite { index: usize, t: f64 },
    #[error("no sign change over bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("invalid time grid: {0}")]
    Grid(String),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    BadProgram(String),
}

/// Uniform sampling of the interval `(t_start, t_end]`.
///
/// The grid holds `M` samples `t_m = t_start + m * step`, `m = 1..=M`, so the
/// last sample coincides with `t_end`. The left endpoint is deliberately not a
/// sample: integrands may be defined only on the half-open interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    t_start: T,
    t_end: T,
    step: T,
    samples: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_start: T, t_end: T, m_points: usize) -> Result<Self, NumericsError> {
        if m_points < 2 {
            return Err(NumericsError::Grid(format!(
                "need at least 2 points, got {m_points}"
            )));
        }
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(NumericsError::Grid(format!(
                "need t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        let step = (t_end - t_start) / real::<T>(m_points as f64);
        let samples = (1..=m_points)
            .map(|m| {
                if m == m_points {
                    t_end
                } else {
                    t_start + step * real::<T>(m as f64)
                }
            })
            .collect();
        Ok(Self {
            t_start,
            t_end,
            step,
            samples,
        })
    }

    /// Grid over `(0, t_end]`.
    pub fn uniform(t_end: T, m_points: usize) -> Result<Self, NumericsError> {
        Self::new(T::zero(), t_end, m_points)
    }

    pub fn t_start(&self) -> T {
        self.t_start
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Quadrature weight of sample `i`: `sum_i w_i * f(t_i)` is the composite
    /// trapezoid over `(t_start, t_end]` with the missing left endpoint
    /// replaced by linear extrapolation from the first two samples. Exact for
    /// affine integrands, O(step^2) otherwise.
    pub fn quad_weight(&self, i: usize) -> T {
        let m = self.samples.len();
        debug_assert!(i < m);
        let half = real::<T>(0.5);
        let w = if m == 2 {
            // extrapolated cell + one trapezoid cell collapse to [2, 0]
            if i == 0 {
                real::<T>(2.0)
            } else {
                T::zero()
            }
        } else if i == 0 {
            real::<T>(2.0)
        } else if i == 1 || i == m - 1 {
            half
        } else {
            T::one()
        };
        w * self.step
    }

    pub fn quad_weights(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.quad_weight(i)).collect()
    }
}

/// Composite trapezoid of `f` over the grid's interval.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, grid: &TimeGrid<T>) -> Result<T, NumericsError> {
    let values: Vec<T> = grid.samples().iter().map(|&t| f(t)).collect();
    integrate_samples(&values, grid)
}

/// Same quadrature, applied to pre-sampled values (one per grid sample).
pub fn integrate_samples<T: Real>(values: &[T], grid: &TimeGrid<T>) -> Result<T, NumericsError> {
    assert_eq!(values.len(), grid.len(), "sample count must match grid");
    let mut acc = T::zero();
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(NumericsError::NonFinite {
                index: i,
                t: to_f64(grid.samples()[i]),
            });
        }
        acc = acc + grid.quad_weight(i) * v;
    }
    Ok(acc)
}

/// Root of a monotone scalar function by bisection.
///
/// The bracket `[lo, hi]` must straddle a sign change (or hit zero at an
/// endpoint). Returns the midpoint of the final bracket once its width drops
/// below `tol` or an exact zero is found.
pub fn bisect<T: Real, F: Fn(T) -> T>(
    g: F,
    lo: T,
    hi: T,
    tol: T,
) -> Result<T, NumericsError> {
    let mut lo = lo;
    let mut hi = hi;
    let f_lo = g(lo);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    let f_hi = g(hi);
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo * f_hi > T::zero() {
        return Err(NumericsError::Bracket {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    let neg_at_lo = f_lo < T::zero();
    let two = real::<T>(2.0);
    // bracket width halves each step; 200 iterations exhausts f64 resolution
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = g(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm < T::zero()) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(t_end: f64, m: usize) -> TimeGrid<f64> {
        TimeGrid::uniform(t_end, m).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid(18.0, 1000);
        assert_eq!(g.len(), 1000);
        assert_eq!(*g.samples().last().unwrap(), 18.0);
        assert_abs_diff_eq!(g.step(), 18.0 / 1000.0, epsilon = 1e-15);
        let s = g.samples();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::uniform(1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn integrate_constant() {
        let g = grid(18.0, 1000);
        let v = integrate(|_| 1.0, &g).unwrap();
        assert_abs_diff_eq!(v, 18.0, epsilon = 1e-9);
    }

    #[test]
    fn integrate_linear_is_exact() {
        let g = grid(2.0, 1000);
        let v = integrate(|t| t, &g).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn integrate_quadratic() {
        // oracle: antiderivative t^3/3 over (0,1]
        let g = grid(1.0, 1000);
        let v = integrate(|t| t * t, &g).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let g = grid(1.0, 10);
        assert!(matches!(
            integrate(|t| 1.0 / (t - g.samples()[3]), &g),
            Err(NumericsError::NonFinite { index: 3, .. })
        ));
    }

    #[test]
    fn integrate_is_linear() {
        let g = grid(3.0, 500);
        let f = |t: f64| (t * 1.3).sin();
        let h = |t: f64| t * t - 2.0;
        let lhs = integrate(|t| 2.5 * f(t) + 0.75 * h(t), &g).unwrap();
        let rhs = 2.5 * integrate(f, &g).unwrap() + 0.75 * integrate(h, &g).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
    }

    #[test]
    fn integrate_f32_constant() {
        let g: TimeGrid<f32> = TimeGrid::uniform(18.0_f32, 100).unwrap();
        let v = integrate(|_| 1.0_f32, &g).unwrap();
        assert!((v - 18.0).abs() < 1e-3);
    }

    #[test]
    fn bisect_linear() {
        let r = bisect(|t: f64| t - 1.0, 0.0, 2.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn bisect_sqrt2() {
        // oracle: root of t^2 - 2 is sqrt(2)
        let r = bisect(|t: f64| t * t - 2.0, 0.0, 2.0, 1e-10).unwrap();
        assert_abs_diff_eq!(r, 1.41421356, epsilon = 1e-8);
    }

    #[test]
    fn bisect_no_root() {
        assert!(matches!(
            bisect(|_: f64| -1.0, 0.0, 1.0, 1e-10),
            Err(NumericsError::Bracket { .. })
        ));
    }

    #[test]
    fn bisect_tol_refinement_stable() {
        let g = |t: f64| (t - 0.7345).exp() - 1.0;
        let loose = bisect(g, 0.0, 2.0, 1e-6).unwrap();
        let tight = bisect(g, 0.0, 2.0, 1e-7).unwrap();
        assert!((loose - tight).abs() < 1e-6);
    }
}
