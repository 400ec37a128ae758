//! Post-processing of trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::drive::{CouplingSet, PulsePair};
use crate::error::{Error, Result};

/// Residual threshold above which adiabatic elimination is reported invalid.
pub const ELIMINATION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    /// Per level: max_t |b_k − b_k^ad| / max_t |b_k^ad|.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub peak_manifold_population: f64,
    pub valid: bool,
}

/// Compares the manifold amplitudes of `trajectory` with the slaved solution
/// b_k ≈ (λ*_0k(t) c₀ + λ*_1k(t) c₁) / δ_k.
///
/// Accepts averaged or rotating-wave trajectories; the latter are converted
/// to the b_k picture first.
pub fn check_adiabatic_elimination(
    trajectory: &Trajectory,
    pulses: &PulsePair,
    couplings: &CouplingSet,
) -> Result<EliminationReport> {
    let tr = trajectory.to_averaged(couplings)?;
    let n = couplings.len();
    if tr.n_excited() != n {
        return Err(Error::DimensionMismatch { expected: n + 2, found: tr.n_excited() + 2 });
    }
    if let Some(k) = couplings.delta.iter().position(|d| *d == 0.0) {
        return Err(Error::ZeroDetuning { level: k });
    }
    let p0 = Complex64::from_polar(1.0, pulses.phi0);
    let p1 = Complex64::from_polar(1.0, pulses.phi1);
    let mut err = vec![0.0f64; n];
    let mut scale = vec![0.0f64; n];
    for (t, a) in tr.times.iter().zip(&tr.amplitudes) {
        let (f0, f1) = pulses.envelopes_at(*t);
        for k in 0..n {
            let l0 = couplings.lambda0[k] * p0 * f0;
            let l1 = couplings.lambda1[k] * p1 * f1;
            let slaved = (l0.conj() * a[0] + l1.conj() * a[1]) / couplings.delta[k];
            err[k] = err[k].max((a[2 + k] - slaved).norm());
            scale[k] = scale[k].max(slaved.norm());
        }
    }
    let residuals: Vec<f64> = err
        .iter()
        .zip(&scale)
        .map(|(e, s)| {
            if *s > 0.0 {
                e / s
            } else if *e > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(EliminationReport {
        max_residual,
        peak_manifold_population: tr.peak_manifold_population(),
        valid: max_residual <= ELIMINATION_THRESHOLD,
        residuals,
    })
}

/// Least-squares fit of y(t) ≈ a + b cos(ωt) + c sin(ωt) over ω ∈ [w_lo, w_hi].
///
/// The range is scanned on `scan` points and the best bracket is refined by
/// golden-section search. Returns (ω, residual RMS).
pub fn fit_angular_frequency(times: &[f64], values: &[f64], w_lo: f64, w_hi: f64, scan: usize) -> (f64, f64) {
    assert!(times.len() == values.len() && times.len() >= 4, "need at least four samples");
    assert!(w_hi > w_lo && w_lo >= 0.0 && scan >= 3);
    let cost = |w: f64| -> f64 {
        // normal equations of the 3×3 linear problem
        let mut m = nalgebra::Matrix3::<f64>::zeros();
        let mut r = nalgebra::Vector3::<f64>::zeros();
        for (t, y) in times.iter().zip(values) {
            let v = nalgebra::Vector3::new(1.0, (w * t).cos(), (w * t).sin());
            m += v * v.transpose();
            r += v * *y;
        }
        let coef = m.lu().solve(&r).unwrap_or_else(nalgebra::Vector3::zeros);
        let ss: f64 = times
            .iter()
            .zip(values)
            .map(|(t, y)| {
                let model = coef[0] + coef[1] * (w * t).cos() + coef[2] * (w * t).sin();
                (y - model).powi(2)
            })
            .sum();
        ss / times.len() as f64
    };
    let step = (w_hi - w_lo) / (scan - 1) as f64;
    let (best, _) = (0..scan).map(|i| (i, cost(w_lo + step * i as f64))).fold((0, f64::INFINITY), |acc, x| {
        if x.1 < acc.1 {
            x
        } else {
            acc
        }
    });
    let mut a = (w_lo + step * (best as f64 - 1.0)).max(w_lo);
    let mut b = (w_lo + step * (best as f64 + 1.0)).min(w_hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * b.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    let w = 0.5 * (a + b);
    (w, cost(w).sqrt())
}

impl Trajectory {
    /// Population of amplitude `index` over the saved samples.
    pub fn population_series(&self, index: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a[index].norm_sqr()).collect()
    }
}
