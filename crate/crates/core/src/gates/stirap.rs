//! Adiabatic passage with staggered Gaussian pulses.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::drive::{Envelope, PulsePair};
use crate::effective::{
    diagonal_evolution_check, evolution_matrix_with_levels, mixing_angle_and_rabi, AdiabaticityReport,
    EffectiveHamiltonian,
};
use crate::error::{Error, Result};
use crate::units::{wrap_angle, HBAR};

/// Below this peak envelope product the pulses are considered disjoint.
pub const MIN_OVERLAP: f64 = 1e-9;
/// Allowed distance (rad) of Θ at the window edges from its limit; a ±4σ
/// window leaves about 2e^{-4.5} ≈ 0.022.
pub const LIMIT_TOL: f64 = 5e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseOrdering {
    /// Pulse 0 (|0⟩ ↔ |k⟩) first.
    Intuitive,
    /// Pulse 1 (|1⟩ ↔ |k⟩) first.
    Counterintuitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirapSchedule {
    pub ordering: PulseOrdering,
    pub envelope0: Envelope,
    pub envelope1: Envelope,
    /// Center of pulse 0 minus center of pulse 1 (ns).
    pub delay: f64,
    pub sigma: f64,
    /// Window [0, duration] (ns), chosen so that TΔ/ħ = π(2m+1).
    pub duration: f64,
    pub m: i64,
    /// max_t f₀f₁.
    pub overlap: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    /// Limits implied by the ordering and the signs of Λ₀, Λ₁.
    pub expected_theta_start: f64,
    pub expected_theta_end: f64,
    pub omega_tilde: f64,
    /// arg Λ₂ ∓ Ω̃ − πn before the phase correction (rad).
    pub phase_residual: f64,
    /// Offset added to φ₀ that zeroes `phase_residual`.
    pub phase_correction: f64,
    pub n: i64,
    /// TΔ/ħ − π(2m+1) (rad).
    pub delta_residual: f64,
    /// Analytic |⟨1|U|0⟩|².
    pub transfer_probability: f64,
    pub adiabaticity: AdiabaticityReport,
}

impl StirapSchedule {
    pub fn configure(&self, pulses: &PulsePair) -> PulsePair {
        let mut p = pulses.clone();
        p.envelope0 = self.envelope0;
        p.envelope1 = self.envelope1;
        p.t_start = 0.0;
        p.duration = self.duration;
        p.phi0 = pulses.phi0 + self.phase_correction;
        p
    }

    pub fn limits_match_ordering(&self) -> bool {
        (self.theta_start - self.expected_theta_start).abs() < LIMIT_TOL
            && (self.theta_end - self.expected_theta_end).abs() < LIMIT_TOL
    }
}

/// Θ in the limit where one envelope dominates: f₀/f₁ → 0 leaves D ≈ −Λ₁f₁²,
/// f₀/f₁ → ∞ leaves D ≈ Λ₀f₀².
fn limiting_theta(ham: &EffectiveHamiltonian, pulse0_dominates: bool) -> f64 {
    let d = if pulse0_dominates { ham.lambda0 } else { -ham.lambda1 };
    if d >= 0.0 {
        0.0
    } else {
        PI
    }
}

/// Lays out two Gaussians of width `sigma` separated by `delay` in the given
/// order, pads each side by `half_window_sigmas`·σ and checks the inversion
/// conditions arg Λ₂ ∓ Ω̃ = πn, TΔ = π(2m+1).
pub fn schedule_stirap(
    ham: &EffectiveHamiltonian,
    delta_qubit: f64,
    ordering: PulseOrdering,
    sigma: f64,
    delay: f64,
    half_window_sigmas: f64,
) -> Result<StirapSchedule> {
    if !(sigma > 0.0) || !(delay >= 0.0) || !(half_window_sigmas > 0.0) {
        return Err(Error::InvalidConfig("sigma, half_window_sigmas must be > 0 and delay >= 0".into()));
    }
    let nominal = delay + 2.0 * half_window_sigmas * sigma;
    let (duration, m) = if delta_qubit == 0.0 {
        (nominal, 0)
    } else {
        let unit = PI * HBAR / delta_qubit.abs();
        let m = ((nominal / unit - 1.0) / 2.0).ceil().max(0.0);
        (unit * (2.0 * m + 1.0), m as i64)
    };
    let mid = 0.5 * duration;
    let (c0, c1) = match ordering {
        PulseOrdering::Counterintuitive => (mid + 0.5 * delay, mid - 0.5 * delay),
        PulseOrdering::Intuitive => (mid - 0.5 * delay, mid + 0.5 * delay),
    };
    let envelope0 = Envelope::Gaussian { center: c0, sigma };
    let envelope1 = Envelope::Gaussian { center: c1, sigma };
    let overlap = envelope0.value(mid) * envelope1.value(mid);
    if overlap < MIN_OVERLAP {
        return Err(Error::ZeroOverlap { overlap });
    }
    if ham.lambda2.norm() == 0.0 {
        return Err(Error::MissingCoupling);
    }
    let evo = mixing_angle_and_rabi(ham, &envelope0, &envelope1, 0.0, duration)?;
    let theta_start = evo.theta(0.0);
    let theta_end = evo.theta(duration);
    let first_is_0 = ordering == PulseOrdering::Intuitive;
    let expected_theta_start = limiting_theta(ham, first_is_0);
    let expected_theta_end = limiting_theta(ham, !first_is_0);
    let omega_tilde = evo.omega_integral(duration);
    let alpha = ham.lambda2.arg();
    // Θ: π → 0 needs α − Ω̃ = πn, Θ: 0 → π needs α + Ω̃ = πn.
    let combined = if theta_start > theta_end { alpha - omega_tilde } else { alpha + omega_tilde };
    let n = (combined / PI).round();
    let phase_residual = combined - PI * n;
    let phase_correction = wrap_angle(-phase_residual);
    let delta_residual =
        if delta_qubit == 0.0 { 0.0 } else { duration * delta_qubit.abs() / HBAR - PI * (2 * m + 1) as f64 };
    let gate = evolution_matrix_with_levels(&evo, 0.0, delta_qubit, 0.0, duration);
    Ok(StirapSchedule {
        ordering,
        envelope0,
        envelope1,
        delay,
        sigma,
        duration,
        m,
        overlap,
        theta_start,
        theta_end,
        expected_theta_start,
        expected_theta_end,
        omega_tilde,
        phase_residual,
        phase_correction,
        n: n as i64,
        delta_residual,
        transfer_probability: gate.u10.norm_sqr(),
        adiabaticity: diagonal_evolution_check(&evo),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::evolution_matrix_with_levels;
    use crate::linalg::pauli_x;
    use num_complex::Complex64;

    fn positive() -> EffectiveHamiltonian {
        EffectiveHamiltonian { lambda0: 3.0, lambda1: 2.0, lambda2: Complex64::from_polar(2.4, 0.3) }
    }

    #[test]
    fn counterintuitive_limits_for_blue_detuning() {
        let s = schedule_stirap(&positive(), 0.0, PulseOrdering::Counterintuitive, 2.0, 2.0, 5.0).unwrap();
        assert!((s.theta_start - PI).abs() < 1e-2 && s.theta_end.abs() < 1e-2, "{s:?}");
        assert!(s.limits_match_ordering());
        assert!(s.transfer_probability > 0.99);
    }

    #[test]
    fn intuitive_ordering_swaps_limits() {
        let s = schedule_stirap(&positive(), 0.0, PulseOrdering::Intuitive, 2.0, 2.0, 5.0).unwrap();
        assert!(s.theta_start.abs() < 1e-2 && (s.theta_end - PI).abs() < 1e-2);
        assert!(s.limits_match_ordering());
    }

    #[test]
    fn red_detuning_reverses_limits() {
        let h = EffectiveHamiltonian { lambda0: -3.0, lambda1: -2.0, lambda2: Complex64::from_polar(2.4, 0.3) };
        let s = schedule_stirap(&h, 0.0, PulseOrdering::Counterintuitive, 2.0, 2.0, 5.0).unwrap();
        assert!(s.theta_start.abs() < 1e-2 && (s.theta_end - PI).abs() < 1e-2);
        assert!(s.limits_match_ordering());
        assert!(s.transfer_probability > 0.99);
    }

    #[test]
    fn disjoint_pulses_are_rejected() {
        let r = schedule_stirap(&positive(), 0.0, PulseOrdering::Counterintuitive, 1.0, 20.0, 5.0);
        assert!(matches!(r, Err(Error::ZeroOverlap { .. })));
    }

    #[test]
    fn phase_conditions_give_not_gate() {
        let delta = 30.0;
        let s = schedule_stirap(&positive(), delta, PulseOrdering::Counterintuitive, 2.0, 2.0, 5.0).unwrap();
        assert!(s.delta_residual.abs() < 1e-9);
        let corrected = EffectiveHamiltonian {
            lambda2: positive().lambda2 * Complex64::from_polar(1.0, s.phase_correction),
            ..positive()
        };
        let evo = mixing_angle_and_rabi(&corrected, &s.envelope0, &s.envelope1, 0.0, s.duration).unwrap();
        let g = evolution_matrix_with_levels(&evo, 0.0, delta, 0.0, s.duration);
        let f = (pauli_x().adjoint() * g.to_matrix()).trace().norm() / 2.0;
        assert!(f > 0.999, "fidelity {f}");
    }
}
