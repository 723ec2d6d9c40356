//! Per-RRH power profiles sampled on a time grid.

use crate::numerics::{integrate_samples, NumericsError, TimeGrid};
use crate::scalar::{to_f64, Real};

/// What a sample of RRH power represents in a closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    /// Power is exactly zero.
    Zero,
    /// Power sits at its saturation profile (for RRH 2 that is `a3(t)`).
    Saturated,
    /// An interior value, e.g. the fractional sample at a switch, the
    /// recovered `P1`, or an LP solution component.
    ClosedForm,
}

impl SegmentMode {
    pub fn label(self) -> &'static str {
        match self {
            SegmentMode::Zero => "zero",
            SegmentMode::Saturated => "saturated",
            SegmentMode::ClosedForm => "closed_form",
        }
    }
}

/// `N x M` nonnegative power samples plus optional per-sample mode labels.
#[derive(Debug, Clone)]
pub struct PowerTrajectory<T> {
    pub grid: TimeGrid<T>,
    /// `p[n][m]`: power of RRH `n` at grid sample `m`, watts.
    pub p: Vec<Vec<T>>,
    /// Parallel to `p` when the solver knows the bang-bang structure.
    pub modes: Option<Vec<Vec<SegmentMode>>>,
}

impl<T: Real> PowerTrajectory<T> {
    pub fn zeros(grid: TimeGrid<T>, n_rrh: usize) -> Self {
        let m = grid.len();
        Self {
            grid,
            p: vec![vec![T::zero(); m]; n_rrh],
            modes: None,
        }
    }

    pub fn constant(grid: TimeGrid<T>, levels: &[T]) -> Self {
        let m = grid.len();
        Self {
            grid,
            p: levels.iter().map(|&v| vec![v; m]).collect(),
            modes: None,
        }
    }

    pub fn n_rrh(&self) -> usize {
        self.p.len()
    }

    /// `∫ P_n dt`, watt-seconds.
    pub fn energy(&self, n: usize) -> Result<T, NumericsError> {
        integrate_samples(&self.p[n], &self.grid)
    }

    pub fn energies(&self) -> Result<Vec<T>, NumericsError> {
        (0..self.n_rrh()).map(|n| self.energy(n)).collect()
    }

    /// Maximal runs of equal mode, as `(first_sample, last_sample, mode)`.
    pub fn segments(&self, n: usize) -> Vec<(usize, usize, SegmentMode)> {
        let Some(modes) = &self.modes else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let row = &modes[n];
        let mut start = 0;
        for i in 1..=row.len() {
            if i == row.len() || row[i] != row[start] {
                out.push((start, i - 1, row[start]));
                start = i;
            }
        }
        out
    }

    /// CSV rows `t,P1,P2,C_t,segment_mode_1,segment_mode_2` (header included).
    /// `c_t` carries the achieved rate at each sample.
    pub fn to_csv(&self, c_t: &[T]) -> String {
        assert_eq!(c_t.len(), self.grid.len());
        assert_eq!(self.n_rrh(), 2, "CSV schema is fixed to two RRHs");
        let mut out = String::from("t,P1,P2,C_t,segment_mode_1,segment_mode_2\n");
        for m in 0..self.grid.len() {
            let mode = |n: usize| {
                self.modes
                    .as_ref()
                    .map(|md| md[n][m].label())
                    .unwrap_or("")
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                to_f64(self.grid.samples()[m]),
                to_f64(self.p[0][m]),
                to_f64(self.p[1][m]),
                to_f64(c_t[m]),
                mode(0),
                mode(1),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::TimeGrid;

    #[test]
    fn segments_group_runs() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let mut tr = PowerTrajectory::zeros(grid, 1);
        tr.modes = Some(vec![vec![
            SegmentMode::Zero,
            SegmentMode::Zero,
            SegmentMode::ClosedForm,
            SegmentMode::Saturated,
        ]]);
        assert_eq!(
            tr.segments(0),
            vec![
                (0, 1, SegmentMode::Zero),
                (2, 2, SegmentMode::ClosedForm),
                (3, 3, SegmentMode::Saturated)
            ]
        );
    }

    #[test]
    fn csv_shape() {
        let grid = TimeGrid::uniform(1.0, 3).unwrap();
        let tr = PowerTrajectory::zeros(grid, 2);
        let csv = tr.to_csv(&[0.0, 0.0, 0.0]);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,P1,P2,C_t,segment_mode_1,segment_mode_2"));
    }
}
