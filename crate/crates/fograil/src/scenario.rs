//! Track geometry, LOS channel, rate and cost functionals.

use serde::{Deserialize, Serialize};

use crate::caching::CachePlacement;
use crate::numerics::{integrate_samples, NumericsError, TimeGrid};
use crate::scalar::{real, to_f64, Real};
use crate::trajectory::PowerTrajectory;

/// Below this transmitted energy (watt-seconds) an RRH counts as inactive for
/// the exact l0 backhaul indicator.
pub const ACTIVITY_EPSILON: f64 = 1e-9;

/// Default number of grid samples for a solve.
pub const DEFAULT_GRID_POINTS: usize = 2000;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("time {t} outside the serving interval (0, {horizon}]")]
    Domain { t: f64, horizon: f64 },
    #[error("negative power {p} for RRH {rrh}")]
    NegativePower { rrh: usize, p: f64 },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Backhaul delivery rate profile `R_n(t)`, shared by all RRHs.
#[derive(Debug, Clone, PartialEq)]
pub enum BackhaulRate<T> {
    Constant(T),
    /// One value per grid sample of the solve grid.
    Tabulated(Vec<T>),
}

/// Geometry, channel, QoS and solver parameters.
///
/// The field names mirror the JSON schema; accessors convert to SI solver
/// units (`speed_kmh` -> m/s, `horizon_s` defaulting to the time the train
/// needs to reach the last RRH abscissa).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    try_from = "ScenarioWire",
    into = "ScenarioWire",
    bound(serialize = "T: Real", deserialize = "T: Real")
)]
pub struct ScenarioConfig<T> {
    pub height_m: T,
    pub spacing_m: T,
    pub road_offset_m: T,
    pub rrh_x_m: Vec<T>,
    pub alpha: T,
    pub gain: T,
    pub speed_kmh: T,
    pub sigma2: T,
    pub beta: T,
    pub num_contents: usize,
    pub content_size: T,
    pub storage_size: T,
    pub zipf_eta: T,
    pub bandwidth_hz: T,
    pub tau_max_s: T,
    /// `None` resolves to `rrh_x_m.last() / speed`.
    pub horizon_s: Option<T>,
    pub p_avg: Vec<T>,
    pub theta: T,
    /// `None` resolves to the constant `max(1/tau_max, Q/T)`.
    pub backhaul_rate: Option<BackhaulRate<T>>,
    /// 1-based index of the content requested during a single solve.
    pub requested_content: usize,
}

impl<T: Real> Default for ScenarioConfig<T> {
    fn default() -> Self {
        Self {
            height_m: real(20.0),
            spacing_m: real(1000.0),
            road_offset_m: real(100.0),
            rrh_x_m: vec![real(-200.0), real(800.0)],
            alpha: real(0.8),
            gain: real(2.0),
            speed_kmh: real(200.0),
            sigma2: real(1.0),
            beta: real(2.8),
            num_contents: 15,
            content_size: real(1.0),
            storage_size: real(5.0),
            zipf_eta: real(1.0),
            bandwidth_hz: real(1.0),
            tau_max_s: real(3.0),
            horizon_s: None,
            p_avg: vec![real(10.0), real(10.0)],
            theta: real(0.01),
            backhaul_rate: None,
            requested_content: 1,
        }
    }
}

impl<T: Real> ScenarioConfig<T> {
    pub fn n_rrh(&self) -> usize {
        self.rrh_x_m.len()
    }

    /// Train speed in m/s.
    pub fn speed_mps(&self) -> T {
        self.speed_kmh * real::<T>(1000.0 / 3600.0)
    }

    /// Serving interval length `T` in seconds.
    pub fn horizon(&self) -> T {
        match self.horizon_s {
            Some(t) => t,
            None => *self.rrh_x_m.last().expect("at least one RRH") / self.speed_mps(),
        }
    }

    /// Copy with `horizon_s` pinned to its resolved value, so later parameter
    /// changes (e.g. a speed sweep) keep the interval fixed.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.horizon_s = Some(self.horizon());
        out
    }

    pub fn grid(&self, m_points: usize) -> Result<TimeGrid<T>, ScenarioError> {
        Ok(TimeGrid::uniform(self.horizon(), m_points)?)
    }

    /// Constant backhaul rate default `max(1/tau_max, Q/T)`.
    pub fn backhaul_rate_at(&self, sample: usize, grid: &TimeGrid<T>) -> T {
        match &self.backhaul_rate {
            Some(BackhaulRate::Constant(r)) => *r,
            Some(BackhaulRate::Tabulated(v)) => v[sample],
            None => {
                let _ = grid;
                (T::one() / self.tau_max_s).max(self.content_size / self.horizon())
            }
        }
    }

    /// `∫_0^T R_n(t) dt` on the given grid.
    pub fn backhaul_rate_integral(&self, grid: &TimeGrid<T>) -> Result<T, ScenarioError> {
        let samples: Vec<T> = (0..grid.len())
            .map(|m| self.backhaul_rate_at(m, grid))
            .collect();
        Ok(integrate_samples(&samples, grid)?)
    }

    pub fn validate(&self, grid: &TimeGrid<T>) -> Result<(), ScenarioError> {
        let pos = [
            ("height_m", self.height_m),
            ("spacing_m", self.spacing_m),
            ("road_offset_m", self.road_offset_m),
            ("gain", self.gain),
            ("sigma2", self.sigma2),
            ("bandwidth_hz", self.bandwidth_hz),
            ("content_size", self.content_size),
            ("tau_max_s", self.tau_max_s),
            ("theta", self.theta),
            ("speed_kmh", self.speed_kmh),
            ("alpha", self.alpha),
        ];
        for (name, v) in pos {
            if !(v > T::zero()) {
                return Err(ScenarioError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.horizon() <= T::zero() {
            return Err(ScenarioError::Invalid("horizon must be positive".into()));
        }
        if self.p_avg.len() != self.n_rrh() {
            return Err(ScenarioError::Invalid(format!(
                "p_avg has {} entries for {} RRHs",
                self.p_avg.len(),
                self.n_rrh()
            )));
        }
        if self.p_avg.iter().any(|p| *p < T::zero()) {
            return Err(ScenarioError::Invalid("p_avg must be nonnegative".into()));
        }
        if self.requested_content == 0 || self.requested_content > self.num_contents {
            return Err(ScenarioError::Invalid(format!(
                "requested_content {} outside 1..={}",
                self.requested_content, self.num_contents
            )));
        }
        // standing assumption: backhaul never slower than the wireless hop
        let floor = T::one() / self.tau_max_s;
        for m in 0..grid.len() {
            let r = self.backhaul_rate_at(m, grid);
            if r < floor - real::<T>(1e-12) {
                return Err(ScenarioError::Invalid(format!(
                    "backhaul rate {} below 1/tau_max at sample {m}",
                    to_f64(r)
                )));
            }
        }
        Ok(())
    }

    fn check_time(&self, t: T) -> Result<(), ScenarioError> {
        let horizon = self.horizon();
        if t <= T::zero() || t > horizon {
            return Err(ScenarioError::Domain {
                t: to_f64(t),
                horizon: to_f64(horizon),
            });
        }
        Ok(())
    }

    /// Train-to-RRH distance `sqrt((v t - l_n)^2 + d0^2 + h^2)`, meters.
    pub fn distance(&self, rrh: usize, t: T) -> Result<T, ScenarioError> {
        self.check_time(t)?;
        Ok(self.distance_unchecked(rrh, t))
    }

    pub(crate) fn distance_unchecked(&self, rrh: usize, t: T) -> T {
        let along = self.speed_mps() * t - self.rrh_x_m[rrh];
        (along * along + self.road_offset_m * self.road_offset_m + self.height_m * self.height_m)
            .sqrt()
    }

    /// Channel-over-noise factor `kappa_n(t) = G / (d_n(t)^alpha sigma^2)`, 1/W.
    pub fn kappa(&self, rrh: usize, t: T) -> Result<T, ScenarioError> {
        self.check_time(t)?;
        Ok(self.kappa_unchecked(rrh, t))
    }

    pub(crate) fn kappa_unchecked(&self, rrh: usize, t: T) -> T {
        self.gain / (self.distance_unchecked(rrh, t).powf(self.alpha) * self.sigma2)
    }

    /// Received-SNR samples per RRH on a grid: `kappas[n][m]`.
    pub fn kappa_samples(&self, grid: &TimeGrid<T>) -> Vec<Vec<T>> {
        (0..self.n_rrh())
            .map(|n| {
                grid.samples()
                    .iter()
                    .map(|&t| self.kappa_unchecked(n, t))
                    .collect()
            })
            .collect()
    }

    /// Instantaneous achievable rate `B log2(1 + sum_n kappa_n P_n)`, bits/s.
    pub fn rate(&self, powers: &[T], t: T) -> Result<T, ScenarioError> {
        self.check_time(t)?;
        let mut snr = T::zero();
        for (n, &p) in powers.iter().enumerate() {
            if p < T::zero() {
                return Err(ScenarioError::NegativePower {
                    rrh: n,
                    p: to_f64(p),
                });
            }
            snr = snr + self.kappa_unchecked(n, t) * p;
        }
        Ok(self.bandwidth_hz * (T::one() + snr).log2())
    }

    /// Achieved rate at every sample of a trajectory.
    pub fn rate_samples(&self, traj: &PowerTrajectory<T>) -> Vec<T> {
        let kappas = self.kappa_samples(&traj.grid);
        (0..traj.grid.len())
            .map(|m| {
                let snr: T = (0..traj.n_rrh()).map(|n| kappas[n][m] * traj.p[n][m]).sum();
                self.bandwidth_hz * (T::one() + snr).log2()
            })
            .collect()
    }
}

/// `∫_0^T sum_n P_n(t) dt`, watt-seconds.
pub fn cost_transmit<T: Real>(traj: &PowerTrajectory<T>) -> Result<T, ScenarioError> {
    let mut total = T::zero();
    for n in 0..traj.n_rrh() {
        total = total + traj.energy(n)?;
    }
    Ok(total)
}

/// Exact-l0 backhaul cost: `beta * sum_n 1[∫P_n > eps] (1 - c_{n,l}) ∫R_n dt`.
pub fn cost_backhaul<T: Real>(
    traj: &PowerTrajectory<T>,
    placement: &CachePlacement,
    requested: usize,
    cfg: &ScenarioConfig<T>,
    grid: &TimeGrid<T>,
) -> Result<T, ScenarioError> {
    let rate_int = cfg.backhaul_rate_integral(grid)?;
    let eps = real::<T>(ACTIVITY_EPSILON);
    let mut total = T::zero();
    for n in 0..traj.n_rrh() {
        if traj.energy(n)? > eps && !placement.cached(n, requested) {
            total = total + cfg.beta * rate_int;
        }
    }
    Ok(total)
}

// --- JSON wire form -------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum WireRate {
    Constant(f64),
    Tabulated(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioWire {
    #[serde(default = "d_height")]
    height_m: f64,
    #[serde(default = "d_spacing")]
    spacing_m: f64,
    #[serde(default = "d_offset")]
    road_offset_m: f64,
    #[serde(default = "d_rrh_x")]
    rrh_x_m: Vec<f64>,
    #[serde(default = "d_alpha")]
    alpha: f64,
    #[serde(default = "d_gain")]
    gain: f64,
    #[serde(default = "d_speed")]
    speed_kmh: f64,
    #[serde(default = "d_one")]
    sigma2: f64,
    #[serde(default = "d_beta")]
    beta: f64,
    #[serde(default = "d_contents")]
    num_contents: usize,
    #[serde(default = "d_one")]
    content_size: f64,
    #[serde(default = "d_storage")]
    storage_size: f64,
    #[serde(default = "d_one")]
    zipf_eta: f64,
    #[serde(default = "d_one")]
    bandwidth_hz: f64,
    #[serde(default = "d_tau")]
    tau_max_s: f64,
    #[serde(default)]
    horizon_s: Option<f64>,
    #[serde(default = "d_p_avg")]
    p_avg: Vec<f64>,
    #[serde(default = "d_theta")]
    theta: f64,
    #[serde(default)]
    backhaul_rate: Option<WireRate>,
    #[serde(default = "d_req")]
    requested_content: usize,
}

fn d_height() -> f64 {
    20.0
}
fn d_spacing() -> f64 {
    1000.0
}
fn d_offset() -> f64 {
    100.0
}
fn d_rrh_x() -> Vec<f64> {
    vec![-200.0, 800.0]
}
fn d_alpha() -> f64 {
    0.8
}
fn d_gain() -> f64 {
    2.0
}
fn d_speed() -> f64 {
    200.0
}
fn d_one() -> f64 {
    1.0
}
fn d_beta() -> f64 {
    2.8
}
fn d_contents() -> usize {
    15
}
fn d_storage() -> f64 {
    5.0
}
fn d_tau() -> f64 {
    3.0
}
fn d_p_avg() -> Vec<f64> {
    vec![10.0, 10.0]
}
fn d_theta() -> f64 {
    0.01
}
fn d_req() -> usize {
    1
}

impl<T: Real> TryFrom<ScenarioWire> for ScenarioConfig<T> {
    type Error = String;

    fn try_from(w: ScenarioWire) -> Result<Self, String> {
        Ok(Self {
            height_m: real(w.height_m),
            spacing_m: real(w.spacing_m),
            road_offset_m: real(w.road_offset_m),
            rrh_x_m: w.rrh_x_m.iter().map(|&v| real(v)).collect(),
            alpha: real(w.alpha),
            gain: real(w.gain),
            speed_kmh: real(w.speed_kmh),
            sigma2: real(w.sigma2),
            beta: real(w.beta),
            num_contents: w.num_contents,
            content_size: real(w.content_size),
            storage_size: real(w.storage_size),
            zipf_eta: real(w.zipf_eta),
            bandwidth_hz: real(w.bandwidth_hz),
            tau_max_s: real(w.tau_max_s),
            horizon_s: w.horizon_s.map(real),
            p_avg: w.p_avg.iter().map(|&v| real(v)).collect(),
            theta: real(w.theta),
            backhaul_rate: w.backhaul_rate.map(|r| match r {
                WireRate::Constant(v) => BackhaulRate::Constant(real(v)),
                WireRate::Tabulated(v) => {
                    BackhaulRate::Tabulated(v.iter().map(|&x| real(x)).collect())
                }
            }),
            requested_content: w.requested_content,
        })
    }
}

impl<T: Real> From<ScenarioConfig<T>> for ScenarioWire {
    fn from(c: ScenarioConfig<T>) -> Self {
        ScenarioWire {
            height_m: to_f64(c.height_m),
            spacing_m: to_f64(c.spacing_m),
            road_offset_m: to_f64(c.road_offset_m),
            rrh_x_m: c.rrh_x_m.iter().map(|&v| to_f64(v)).collect(),
            alpha: to_f64(c.alpha),
            gain: to_f64(c.gain),
            speed_kmh: to_f64(c.speed_kmh),
            sigma2: to_f64(c.sigma2),
            beta: to_f64(c.beta),
            num_contents: c.num_contents,
            content_size: to_f64(c.content_size),
            storage_size: to_f64(c.storage_size),
            zipf_eta: to_f64(c.zipf_eta),
            bandwidth_hz: to_f64(c.bandwidth_hz),
            tau_max_s: to_f64(c.tau_max_s),
            horizon_s: c.horizon_s.map(to_f64),
            p_avg: c.p_avg.iter().map(|&v| to_f64(v)).collect(),
            theta: to_f64(c.theta),
            backhaul_rate: c.backhaul_rate.map(|r| match r {
                BackhaulRate::Constant(v) => WireRate::Constant(to_f64(v)),
                BackhaulRate::Tabulated(v) => {
                    WireRate::Tabulated(v.iter().map(|&x| to_f64(x)).collect())
                }
            }),
            requested_content: c.requested_content,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caching;
    use approx::assert_abs_diff_eq;

    fn cfg() -> ScenarioConfig<f64> {
        ScenarioConfig::default()
    }

    #[test]
    fn distance_at_start_and_closest_approach() {
        let c = cfg();
        // oracle: direct evaluation with vt ~ 0 and vt = l_n
        let d = c.distance(0, 1e-9).unwrap();
        assert_abs_diff_eq!(d, (200.0f64 * 200.0 + 100.0 * 100.0 + 20.0 * 20.0).sqrt(), epsilon = 1e-3);
        assert_abs_diff_eq!(d, 224.4994, epsilon = 1e-3);

        let t_closest = c.rrh_x_m[1] / c.speed_mps();
        assert_abs_diff_eq!(t_closest, 14.4, epsilon = 1e-9);
        let d2 = c.distance(1, t_closest).unwrap();
        assert_abs_diff_eq!(d2, 101.9804, epsilon = 1e-2);
    }

    #[test]
    fn distance_domain() {
        let c = cfg();
        assert!(c.distance(0, 0.0).is_err());
        assert!(c.distance(0, c.horizon() + 1.0).is_err());
        assert!(c.distance(0, c.horizon()).is_ok());
    }

    #[test]
    fn distance_convex_and_symmetric() {
        let c = cfg();
        let t_c = c.rrh_x_m[1] / c.speed_mps();
        let grid = c.grid(200).unwrap();
        let h = grid.step();
        for &t in &grid.samples()[1..grid.len() - 1] {
            let dd = c.distance_unchecked(1, t - h) - 2.0 * c.distance_unchecked(1, t)
                + c.distance_unchecked(1, t + h);
            assert!(dd > 0.0, "second difference must be positive at t={t}");
        }
        let dt = 3.0;
        assert_abs_diff_eq!(
            c.distance_unchecked(1, t_c - dt),
            c.distance_unchecked(1, t_c + dt),
            epsilon = 1e-9
        );
    }

    #[test]
    fn kappa_values() {
        let mut c = cfg();
        c.horizon_s = Some(20.0);
        // oracle: 2 / 101.9804^0.8 at the closest approach of RRH 2
        let t_c = c.rrh_x_m[1] / c.speed_mps();
        assert_abs_diff_eq!(c.kappa(1, t_c).unwrap(), 0.04946, epsilon = 1e-4);

        c.alpha = 1e-300; // effectively zero path loss
        let k = c.kappa(0, 1.0).unwrap();
        assert_abs_diff_eq!(k, c.gain / c.sigma2, epsilon = 1e-9);

        let mut c2 = cfg();
        c2.sigma2 = 2.0;
        assert_abs_diff_eq!(
            c2.kappa(0, 1.0).unwrap() * 2.0,
            cfg().kappa(0, 1.0).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rate_values() {
        let c = cfg();
        assert_abs_diff_eq!(c.rate(&[0.0, 0.0], 1.0).unwrap(), 0.0, epsilon = 1e-12);
        // sum kappa P = 1 with B = 1 gives one bit/s
        let k = c.kappa(0, 1.0).unwrap();
        assert_abs_diff_eq!(c.rate(&[1.0 / k, 0.0], 1.0).unwrap(), 1.0, epsilon = 1e-9);
        // sum kappa P = 3 with B = 2 gives 4 bits/s
        let mut c2 = cfg();
        c2.bandwidth_hz = 2.0;
        assert_abs_diff_eq!(c2.rate(&[3.0 / k, 0.0], 1.0).unwrap(), 4.0, epsilon = 1e-9);
        assert!(c.rate(&[-1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn rate_monotone_and_concave_in_power() {
        let c = cfg();
        let t = 5.0;
        let h = 1e-4;
        for n in 0..2 {
            let at = |p: f64| {
                let mut pw = [2.0, 3.0];
                pw[n] = p;
                c.rate(&pw, t).unwrap()
            };
            let base = at(2.5);
            assert!(at(2.5 + h) > base);
            let second = at(2.5 + h) - 2.0 * base + at(2.5 - h);
            assert!(second <= 1e-12);
        }
    }

    #[test]
    fn transmit_cost() {
        let c = cfg();
        let mut c18 = c.clone();
        c18.horizon_s = Some(18.0);
        let grid = c18.grid(400).unwrap();
        let zero = PowerTrajectory::zeros(grid.clone(), 2);
        assert_abs_diff_eq!(cost_transmit(&zero).unwrap(), 0.0, epsilon = 1e-12);

        let one = PowerTrajectory::constant(grid.clone(), &[1.0, 0.0]);
        assert_abs_diff_eq!(cost_transmit(&one).unwrap(), 18.0, epsilon = 1e-9);

        // arbitrary profile matches an independent weighted sum
        let mut tr = PowerTrajectory::zeros(grid.clone(), 2);
        for m in 0..grid.len() {
            tr.p[0][m] = (m as f64 * 0.01).sin().abs();
            tr.p[1][m] = 0.5 + (m as f64 * 0.02).cos().abs();
        }
        let manual: f64 = (0..grid.len())
            .map(|m| grid.quad_weight(m) * (tr.p[0][m] + tr.p[1][m]))
            .sum();
        assert_abs_diff_eq!(cost_transmit(&tr).unwrap(), manual, epsilon = 1e-9);
    }

    #[test]
    fn backhaul_cost_cases() {
        let c = cfg();
        let grid = c.grid(200).unwrap();
        let all = caching::place_popc(c.num_contents, f64::INFINITY, 1.0, 2);
        let none = caching::place_nonc(2, c.num_contents);

        let active = PowerTrajectory::constant(grid.clone(), &[1.0, 0.0]);
        // cached content -> zero backhaul
        assert_abs_diff_eq!(
            cost_backhaul(&active, &all, 1, &c, &grid).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // one active uncached RRH with constant R
        let r = c.backhaul_rate_at(0, &grid);
        let expect = c.beta * r * c.horizon();
        assert_abs_diff_eq!(
            cost_backhaul(&active, &none, 1, &c, &grid).unwrap(),
            expect,
            epsilon = 1e-6
        );
        // both inactive
        let idle = PowerTrajectory::zeros(grid.clone(), 2);
        assert_abs_diff_eq!(
            cost_backhaul(&idle, &none, 1, &c, &grid).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c: ScenarioConfig<f64> = serde_json::from_str("{}").unwrap();
        assert_abs_diff_eq!(c.height_m, 20.0);
        assert_abs_diff_eq!(c.horizon(), 14.4, epsilon = 1e-9);
        let text = serde_json::to_string(&c).unwrap();
        let back: ScenarioConfig<f64> = serde_json::from_str(&text).unwrap();
        assert_abs_diff_eq!(back.beta, 2.8);

        let custom: ScenarioConfig<f64> =
            serde_json::from_str(r#"{"tau_max_s": 1.5, "backhaul_rate": 2.0}"#).unwrap();
        assert_abs_diff_eq!(custom.tau_max_s, 1.5);
        assert_eq!(custom.backhaul_rate, Some(BackhaulRate::Constant(2.0)));
        assert!(serde_json::from_str::<ScenarioConfig<f64>>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validate_catches_standing_assumption() {
        let mut c = cfg();
        let grid = c.grid(50).unwrap();
        assert!(c.validate(&grid).is_ok());
        c.backhaul_rate = Some(BackhaulRate::Constant(1e-6));
        assert!(c.validate(&grid).is_err());
    }
}
