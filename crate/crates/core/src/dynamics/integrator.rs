//! Explicit Runge–Kutta integration of complex linear systems ẏ = f(t, y).
//!
//! Two methods: the Dormand–Prince 5(4) embedded pair with PI step-size
//! control, and classical fixed-step RK4.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Dormand–Prince 5(4) with error control.
    Adaptive,
    /// Classical RK4 with a fixed step (ns).
    Rk4 { step: f64 },
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

fn default_max_steps() -> usize {
    50_000_000
}

fn default_norm_limit() -> f64 {
    1e-6
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Upper bound on the step (ns); `None` lets the error control decide.
    #[serde(default)]
    pub max_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Keep every n-th accepted step in the trajectory (the last is always kept).
    #[serde(default = "default_stride")]
    pub save_stride: usize,
    /// If set, save on a uniform grid with this spacing instead (ns).
    #[serde(default)]
    pub save_interval: Option<f64>,
    /// Propagation aborts when |‖ψ‖² − 1| exceeds this.
    #[serde(default = "default_norm_limit")]
    pub norm_drift_limit: f64,
}

fn default_method() -> Method {
    Method::Adaptive
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            method: Method::Adaptive,
            rtol: default_rtol(),
            atol: default_atol(),
            max_step: None,
            max_steps: default_max_steps(),
            save_stride: 1,
            save_interval: None,
            norm_drift_limit: default_norm_limit(),
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = Some(h);
        self
    }

    pub fn with_save_interval(mut self, dt: f64) -> Self {
        self.save_interval = Some(dt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return bad("integrator tolerances must be > 0");
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > 0.0) {
                return bad("RK4 step must be > 0");
            }
        }
        if matches!(self.max_step, Some(h) if !(h > 0.0)) {
            return bad("max_step must be > 0");
        }
        if matches!(self.save_interval, Some(h) if !(h > 0.0)) {
            return bad("save_interval must be > 0");
        }
        if self.save_stride == 0 {
            return bad("save_stride must be >= 1");
        }
        if !(self.norm_drift_limit > 0.0) {
            return bad("norm_drift_limit must be > 0");
        }
        Ok(())
    }
}

/// Per-run integration statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub max_norm_drift: f64,
}

/// Output of [`integrate`]: saved times and states.
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub stats: IntegrationStats,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights equal the last row of A (FSAL); E = b5 − b4.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

fn norm_sqr(y: &[Complex64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

struct Saver {
    interval: Option<f64>,
    stride: usize,
    next_grid: f64,
    since_save: usize,
}

/// Relative window (in units of the span) within which a step is stretched
/// onto the next save-grid point.
const SNAP: f64 = 1e-10;

/// Integrates `rhs` from `t0` to `t1` starting at `y0`.
///
/// `rhs(t, y, dy)` writes f(t, y) into `dy`. The norm ‖y‖² is monitored (not
/// corrected) against `settings.norm_drift_limit`.
pub fn integrate<F>(mut rhs: F, t0: f64, t1: f64, y0: &[Complex64], settings: &IntegratorSettings) -> Result<Solution>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    settings.validate()?;
    if !(t1 >= t0) {
        return Err(Error::InvalidConfig(format!("integration window [{t0}, {t1}] is empty")));
    }
    let n = y0.len();
    let norm0 = norm_sqr(y0);
    let mut stats = IntegrationStats::default();
    let mut times = vec![t0];
    let mut states = vec![y0.to_vec()];
    if t1 == t0 {
        return Ok(Solution { times, states, stats });
    }

    let span = t1 - t0;
    let mut saver = Saver {
        interval: settings.save_interval,
        stride: settings.save_stride,
        next_grid: settings.save_interval.map_or(f64::INFINITY, |dt| t0 + dt),
        since_save: 0,
    };
    let max_step = settings.max_step.unwrap_or(span).min(span);

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    let mut tmp = vec![Complex64::default(); n];
    let mut y_new = vec![Complex64::default(); n];

    let check_norm = |t: f64, y: &[Complex64], stats: &mut IntegrationStats| -> Result<()> {
        let drift = (norm_sqr(y) - norm0).abs();
        stats.max_norm_drift = stats.max_norm_drift.max(drift);
        if drift > settings.norm_drift_limit {
            return Err(Error::NormDrift { t, drift, limit: settings.norm_drift_limit });
        }
        Ok(())
    };

    match settings.method {
        Method::Rk4 { step } => {
            let h_nominal = step.min(max_step);
            while t < t1 {
                if stats.accepted >= settings.max_steps {
                    return Err(Error::StepLimit { limit: settings.max_steps, t_end: t1 });
                }
                let mut h = h_nominal.min(t1 - t);
                let target = saver.next_grid;
                let hits_grid = target < t1 - SNAP * span && t + h >= target - SNAP * span;
                if hits_grid {
                    h = target - t;
                }
                rk4_step(&mut rhs, t, h, &y, &mut k, &mut tmp, &mut y_new);
                std::mem::swap(&mut y, &mut y_new);
                t = if hits_grid {
                    target
                } else if t1 - (t + h) < 1e-12 * span {
                    t1
                } else {
                    t + h
                };
                stats.accepted += 1;
                check_norm(t, &y, &mut stats)?;
                save(&mut saver, t, t1, &y, &mut times, &mut states);
            }
        }
        Method::Adaptive => {
            rhs(t, &y, &mut k[0]);
            let mut h = initial_step(&y, &k[0], settings, max_step);
            let mut err_prev: f64 = 1e-4;
            while t < t1 {
                if stats.accepted + stats.rejected >= settings.max_steps {
                    return Err(Error::StepLimit { limit: settings.max_steps, t_end: t1 });
                }
                let mut h_try = h.min(max_step).min(t1 - t);
                let target = saver.next_grid;
                // snap steps ending just short of a grid point onto it
                let hits_grid = target < t1 - SNAP * span && t + h_try >= target - SNAP * span;
                if hits_grid {
                    h_try = target - t;
                }
                if h_try <= 1e-15 * t.abs().max(span) {
                    return Err(Error::StepUnderflow { t, step: h_try });
                }
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for j in 0..s {
                            if A[s][j] != 0.0 {
                                acc += k[j][i] * (h_try * A[s][j]);
                            }
                        }
                        tmp[i] = acc;
                    }
                    rhs(t + C[s] * h_try, &tmp, &mut k[s]);
                }
                // stage 6 input is the 5th-order solution (FSAL)
                y_new.copy_from_slice(&tmp);
                let mut err: f64 = 0.0;
                for i in 0..n {
                    let mut e = Complex64::default();
                    for j in 0..7 {
                        if E[j] != 0.0 {
                            e += k[j][i] * E[j];
                        }
                    }
                    let scale = settings.atol + settings.rtol * y[i].norm().max(y_new[i].norm());
                    err = err.max((e * h_try).norm() / scale);
                }
                if err <= 1.0 || h_try <= 1e-13 * span {
                    let t_next = t + h_try;
                    t = if hits_grid {
                        target
                    } else if t1 - t_next < 1e-12 * span {
                        t1
                    } else {
                        t_next
                    };
                    std::mem::swap(&mut y, &mut y_new);
                    k.swap(0, 6);
                    stats.accepted += 1;
                    check_norm(t, &y, &mut stats)?;
                    save(&mut saver, t, t1, &y, &mut times, &mut states);
                    // PI step-size control
                    let e = err.max(1e-10);
                    let factor = 0.9 * e.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                    err_prev = e;
                    if !hits_grid {
                        h = h_try * factor.clamp(0.2, 5.0);
                    }
                } else {
                    stats.rejected += 1;
                    h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                }
            }
        }
    }
    Ok(Solution { times, states, stats })
}

fn save(saver: &mut Saver, t: f64, t1: f64, y: &[Complex64], times: &mut Vec<f64>, states: &mut Vec<Vec<Complex64>>) {
    let keep = if let Some(dt) = saver.interval {
        if t >= saver.next_grid || t == t1 {
            while saver.next_grid <= t {
                saver.next_grid += dt;
            }
            true
        } else {
            false
        }
    } else {
        saver.since_save += 1;
        saver.since_save >= saver.stride || t == t1
    };
    if keep {
        saver.since_save = 0;
        times.push(t);
        states.push(y.to_vec());
    }
}

fn rk4_step<F>(
    rhs: &mut F,
    t: f64,
    h: f64,
    y: &[Complex64],
    k: &mut [Vec<Complex64>],
    tmp: &mut [Complex64],
    out: &mut [Complex64],
) where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y.len();
    rhs(t, y, &mut k[0]);
    for i in 0..n {
        tmp[i] = y[i] + k[0][i] * (0.5 * h);
    }
    rhs(t + 0.5 * h, tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + k[1][i] * (0.5 * h);
    }
    rhs(t + 0.5 * h, tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + k[2][i] * h;
    }
    rhs(t + h, tmp, &mut k[3]);
    for i in 0..n {
        out[i] = y[i] + (k[0][i] + k[1][i] * 2.0 + k[2][i] * 2.0 + k[3][i]) * (h / 6.0);
    }
}

fn initial_step(y: &[Complex64], dy: &[Complex64], s: &IntegratorSettings, max_step: f64) -> f64 {
    let scale = |i: usize| s.atol + s.rtol * y[i].norm();
    let d0 = (0..y.len()).map(|i| y[i].norm() / scale(i)).fold(0.0, f64::max);
    let d1 = (0..y.len()).map(|i| dy[i].norm() / scale(i)).fold(0.0, f64::max);
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(max_step).max(1e-12 * max_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    // ẏ = -iω y has y(t) = e^{-iωt} y0.
    fn rotate(omega: f64) -> impl FnMut(f64, &[Complex64], &mut [Complex64]) {
        move |_t, y, dy| {
            for i in 0..y.len() {
                dy[i] = Complex64::new(0.0, -omega) * y[i];
            }
        }
    }

    #[test]
    fn adaptive_solves_rotation() {
        let s = IntegratorSettings::default();
        let sol = integrate(rotate(3.0), 0.0, 10.0, &[Complex64::new(1.0, 0.0)], &s).unwrap();
        let exact = Complex64::from_polar(1.0, -30.0);
        let got = sol.states.last().unwrap();
        assert!((got[0] - exact).norm() < 1e-8, "{:?}", got);
        assert_eq!(*sol.times.last().unwrap(), 10.0);
        assert!(sol.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let s = IntegratorSettings { method: Method::Rk4 { step: h }, ..Default::default() };
            let sol = integrate(rotate(2.0), 0.0, 1.0, &[Complex64::new(1.0, 0.0)], &s).unwrap();
            (sol.states.last().unwrap()[0] - Complex64::from_polar(1.0, -2.0)).norm()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "order {}", ratio.log2());
    }

    #[test]
    fn uniform_save_grid() {
        let s = IntegratorSettings::default().with_save_interval(0.25);
        let sol = integrate(rotate(1.0), 0.0, 2.0, &[Complex64::new(1.0, 0.0)], &s).unwrap();
        assert_eq!(sol.times.len(), 9);
        for (i, t) in sol.times.iter().enumerate() {
            assert!((t - 0.25 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn accumulated_grid_does_not_strand_a_tiny_last_step() {
        let span = 111.48279013519301;
        let s = IntegratorSettings::default().with_save_interval(span / 1200.0);
        let sol = integrate(rotate(0.3), 0.0, span, &[Complex64::new(1.0, 0.0)], &s).unwrap();
        assert_eq!(*sol.times.last().unwrap(), span);
        assert!(sol.times.len() >= 1200 && sol.times.len() <= 1201);
    }

    #[test]
    fn norm_drift_aborts() {
        // non-Hermitian growth
        let grow = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = y[0];
        let s = IntegratorSettings::default();
        let err = integrate(grow, 0.0, 1.0, &[Complex64::new(1.0, 0.0)], &s).err().unwrap();
        assert!(matches!(err, Error::NormDrift { .. }));
    }

    #[test]
    fn step_limit_reported() {
        let s = IntegratorSettings { max_steps: 5, ..Default::default() };
        let err = integrate(rotate(500.0), 0.0, 10.0, &[Complex64::new(1.0, 0.0)], &s).err().unwrap();
        assert!(matches!(err, Error::StepLimit { .. }));
    }
}
