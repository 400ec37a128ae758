//! Gate synthesis on top of the effective two-level model.
//!
//! With equal envelopes the effective operator is the SU(2) rotation
//! cos Ω̃ − i sin Ω̃ (n·σ) with n_z = cos Θ₀ and n_x − i n_y = e^{iα} sin Θ₀,
//! α = arg Λ₂. A target is reached by choosing the E₁/E₀ ratio (sets Θ₀), a
//! phase offset on pulse 0 (sets α) and the duration (sets Ω̃), subject to
//! TΔ = 2πl so that the e^{−iΔT} row phase drops out.

mod leakage;
mod stirap;

pub use leakage::{polarization_leakage, LeakageEstimate};
pub use stirap::{schedule_stirap, PulseOrdering, StirapSchedule};

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{PulsePair, PulseShape};
use crate::effective::{evolution_matrix_with_levels, mixing_angle_and_rabi, EffectiveHamiltonian, GateMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, unitarity_deviation, Mat2};
use crate::units::{wrap_angle, HBAR};

/// Accepted ‖U†U − I‖ for inputs to [`gate_fidelity`] and custom targets.
pub const UNITARITY_TOL: f64 = 1e-9;

const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateTarget {
    Not,
    Phase,
    Hadamard,
    /// Row-major 2×2 unitary.
    Custom {
        matrix: [[Complex64; 2]; 2],
    },
}

impl GateTarget {
    pub fn matrix(&self) -> Mat2 {
        match self {
            GateTarget::Not => linalg::pauli_x(),
            GateTarget::Phase => linalg::pauli_z(),
            GateTarget::Hadamard => linalg::hadamard(),
            GateTarget::Custom { matrix: m } => Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateTarget::Not => "not",
            GateTarget::Phase => "phase",
            GateTarget::Hadamard => "hadamard",
            GateTarget::Custom { .. } => "custom",
        }
    }

    /// The textbook mixing angle for the named gates.
    fn base_theta0(&self) -> Option<f64> {
        match self {
            GateTarget::Not => Some(0.5 * PI),
            GateTarget::Phase => Some(0.0),
            GateTarget::Hadamard => Some(0.25 * PI),
            GateTarget::Custom { .. } => None,
        }
    }
}

/// Upper bounds of the integer branches in Ω̃ = θ + πk and TΔ = 2πl.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchBounds {
    #[serde(default = "default_bound")]
    pub max_k: u32,
    #[serde(default = "default_bound")]
    pub max_l: u32,
}

fn default_bound() -> u32 {
    64
}

impl Default for BranchBounds {
    fn default() -> Self {
        Self { max_k: 64, max_l: 64 }
    }
}

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.25
}

fn default_shape() -> PulseShape {
    PulseShape::Sin2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub target: GateTarget,
    #[serde(default)]
    pub bounds: BranchBounds,
    /// Pin the Ω̃ branch instead of taking the shortest solution.
    #[serde(default)]
    pub k: Option<u32>,
    /// Whether E₁/E₀ may be changed to reach Θ₀.
    #[serde(default = "default_true")]
    pub allow_ratio_rescale: bool,
    /// Common amplitude scale s is restricted to [1/max, max] (used for Δ ≠ 0).
    #[serde(default = "default_scale")]
    pub max_amplitude_scale: f64,
    /// Envelope family used for both pulses.
    #[serde(default = "default_shape")]
    pub shape: PulseShape,
}

impl GateSpec {
    pub fn new(target: GateTarget) -> Self {
        Self {
            target,
            bounds: BranchBounds::default(),
            k: None,
            allow_ratio_rescale: true,
            max_amplitude_scale: default_scale(),
            shape: default_shape(),
        }
    }

    pub fn with_shape(mut self, shape: PulseShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_bounds(mut self, max_k: u32, max_l: u32) -> Self {
        self.bounds = BranchBounds { max_k, max_l };
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.max_amplitude_scale >= 1.0) {
            return Err(Error::InvalidConfig("max_amplitude_scale must be >= 1".into()));
        }
        if let Some(k) = self.k {
            if k > self.bounds.max_k {
                return Err(Error::InvalidConfig(format!("k = {k} exceeds max_k = {}", self.bounds.max_k)));
            }
        }
        if let GateTarget::Custom { .. } = self.target {
            let dev = unitarity_deviation(&self.target.matrix());
            if dev > 1e-12 {
                return Err(Error::NonUnitary { deviation: dev });
            }
        }
        Ok(())
    }
}

/// Parameters realizing a gate with equal envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSolution {
    pub target: GateTarget,
    /// Pulse duration T (ns).
    pub duration: f64,
    /// Realized mixing angle Θ₀ ∈ [0, π].
    pub theta0: f64,
    /// Ω̃(T) (rad).
    pub omega_tilde: f64,
    /// Multiplier applied to E₁ relative to E₀ (0 for the single-pulse branch).
    pub amplitude_ratio: f64,
    /// Common multiplier applied to both amplitudes.
    pub amplitude_scale: f64,
    /// Offset added to φ₀ so that arg Λ₂ equals `alpha`.
    pub phase_correction: f64,
    pub alpha: f64,
    pub k: u32,
    pub l: u32,
    pub m: i64,
    /// Branch of the textbook Θ₀ condition, if the realized Θ₀ is of that form.
    pub n: Option<i64>,
    /// TΔ/ħ − 2πl (rad).
    pub delta_phase_residual: f64,
    /// Analytic-model fidelity of the configured gate.
    pub predicted_fidelity: f64,
    /// Λ at unit envelopes after rescaling.
    pub hamiltonian: EffectiveHamiltonian,
    /// Ω at unit envelopes after rescaling (µeV).
    pub rabi_frequency: f64,
    pub shape: PulseShape,
}

impl GateSolution {
    /// Applies amplitudes, phase, envelopes and duration to `pulses`.
    pub fn configure(&self, pulses: &PulsePair) -> PulsePair {
        let mut p = pulses.clone();
        p.amp0 = pulses.amp0 * self.amplitude_scale;
        p.amp1 = pulses.amp1 * self.amplitude_scale * self.amplitude_ratio;
        p.phi0 = pulses.phi0 + self.phase_correction;
        p.duration = self.duration;
        let env = self.shape.instantiate(p.t_start, self.duration);
        p.envelope0 = env;
        p.envelope1 = env;
        p
    }
}

/// (θ, Θ₀, α) with U ∝ cos θ − i sin θ (n·σ), θ ∈ [0, π].
fn rotation_parameters(u: &Mat2) -> (f64, f64, f64) {
    let v = u / u.determinant().sqrt();
    let (a, b) = (v[(0, 0)], v[(0, 1)]);
    let theta = a.re.clamp(-1.0, 1.0).acos();
    let s = theta.sin();
    if s < 1e-12 {
        return (theta, 0.0, 0.0);
    }
    let nz = (-a.im / s).clamp(-1.0, 1.0);
    let ib = Complex64::i() * b;
    let transverse = (ib.norm() / s).min(1.0);
    (theta, transverse.atan2(nz), if transverse > 0.0 { ib.arg() } else { 0.0 })
}

/// Positive roots of Λ₁ sinΘ₀ ρ² + 2|Λ₂| cosΘ₀ ρ − Λ₀ sinΘ₀ = 0.
fn ratio_roots(ham: &EffectiveHamiltonian, theta0: f64) -> Vec<f64> {
    let (s, c) = theta0.sin_cos();
    let a = ham.lambda1 * s;
    let b = 2.0 * ham.lambda2.norm() * c;
    let cc = -ham.lambda0 * s;
    let mut roots = Vec::new();
    if a.abs() < 1e-300 {
        if b.abs() > 0.0 {
            roots.push(-cc / b);
        }
    } else {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q != 0.0 {
                roots.push(q / a);
                roots.push(cc / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    roots.retain(|r| r.is_finite() && *r > 0.0);
    roots
}

struct Candidate {
    theta: f64,
    theta0: f64,
    alpha: f64,
    ratio: f64,
}

/// Finds pulse parameters realizing `spec.target` for the structure
/// described by `ham` (Λ at the current amplitudes and phases).
pub fn synthesize_gate(spec: &GateSpec, ham: &EffectiveHamiltonian, delta_qubit: f64) -> Result<GateSolution> {
    spec.validate()?;
    let target = spec.target.matrix();
    let (theta_t, theta0_t, alpha_t) = rotation_parameters(&target);
    // U_n(θ) and U_{−n}(π − θ) agree up to a global sign.
    let forms = [(theta_t, theta0_t, alpha_t), (PI - theta_t, PI - theta0_t, alpha_t + PI)];
    let polar = |th0: f64| th0.sin() <= ANGLE_TOL;

    let mut candidates = Vec::new();
    for &(theta, theta0, alpha) in &forms {
        if polar(theta0) {
            // Θ₀ ∈ {0, π}: single pulse, Θ = 0 for Λ₀ > 0 and π for Λ₀ < 0.
            if ham.lambda0 == 0.0 {
                continue;
            }
            let reached = if ham.lambda0 > 0.0 { 0.0 } else { PI };
            let want = if theta0.cos() > 0.0 { 0.0 } else { PI };
            if reached == want {
                candidates.push(Candidate { theta, theta0: reached, alpha: 0.0, ratio: 0.0 });
            }
            continue;
        }
        if ham.lambda2.norm() == 0.0 {
            return Err(Error::MissingCoupling);
        }
        if spec.allow_ratio_rescale {
            for ratio in ratio_roots(ham, theta0) {
                candidates.push(Candidate { theta, theta0, alpha, ratio });
            }
        } else if (ham.theta0() - theta0).abs() <= ANGLE_TOL {
            candidates.push(Candidate { theta, theta0, alpha, ratio: 1.0 });
        }
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| {
            let cost = |c: &Candidate| if c.ratio == 0.0 { 0.0 } else { c.ratio.ln().abs() };
            cost(a).total_cmp(&cost(b))
        })
        .ok_or_else(|| unreachable(spec, ham, theta0_t))?;

    let scaled = EffectiveHamiltonian {
        lambda0: ham.lambda0,
        lambda1: ham.lambda1 * best.ratio * best.ratio,
        lambda2: ham.lambda2 * best.ratio,
    };
    let rabi = scaled.rabi();
    if !(rabi > 0.0) {
        return Err(Error::MissingCoupling);
    }
    let fill = spec.shape.fill_factor();
    let phase_correction = if polar(best.theta0) { 0.0 } else { wrap_angle(best.alpha - scaled.lambda2.arg()) };

    // Ω̃_k = θ + πk; Ω̃ = 0 is not a pulse.
    let k_range: Vec<u32> = match spec.k {
        Some(k) => vec![k],
        None => (0..=spec.bounds.max_k).collect(),
    };
    let omega_tilde = |k: u32| best.theta + PI * k as f64;
    // Natural duration at unit amplitude scale.
    let natural = |w: f64| HBAR * w / (rabi * fill);

    let mut chosen: Option<(u32, u32, f64, f64)> = None; // (k, l, T, s)
    for &k in &k_range {
        let w = omega_tilde(k);
        if w <= ANGLE_TOL {
            continue;
        }
        if delta_qubit == 0.0 {
            chosen = Some((k, 0, natural(w), 1.0));
            break;
        }
        // s² = natural / T_l must lie in [1/M², M²].
        let period = TAU * HBAR / delta_qubit.abs();
        let m2 = spec.max_amplitude_scale.powi(2);
        let l_min = ((natural(w) / m2) / period).ceil().max(1.0);
        if l_min > spec.bounds.max_l as f64 {
            continue;
        }
        let l = l_min as u32;
        let t = period * l as f64;
        let s = (natural(w) / t).sqrt();
        if s > spec.max_amplitude_scale * (1.0 + 1e-12) || s < (1.0 - 1e-12) / spec.max_amplitude_scale {
            continue;
        }
        if chosen.is_none_or(|c| t < c.2) {
            chosen = Some((k, l, t, s));
        }
    }
    let (k, l, duration, scale) = chosen
        .ok_or(Error::NoBranchSolution { max_k: spec.k.unwrap_or(spec.bounds.max_k), max_l: spec.bounds.max_l })?;

    let final_ham = EffectiveHamiltonian {
        lambda0: scaled.lambda0 * scale * scale,
        lambda1: scaled.lambda1 * scale * scale,
        lambda2: scaled.lambda2 * Complex64::from_polar(scale * scale, phase_correction),
    };
    let delta_phase_residual =
        if delta_qubit == 0.0 { 0.0 } else { duration * delta_qubit.abs() / HBAR - TAU * l as f64 };
    let n = spec.target.base_theta0().and_then(|base| {
        let x = (best.theta0 - base) / PI;
        ((x - x.round()).abs() < 1e-9).then(|| x.round() as i64)
    });
    let mut solution = GateSolution {
        target: spec.target,
        duration,
        theta0: best.theta0,
        omega_tilde: omega_tilde(k),
        amplitude_ratio: best.ratio,
        amplitude_scale: scale,
        phase_correction,
        alpha: if polar(best.theta0) { 0.0 } else { wrap_angle(best.alpha) },
        k,
        l,
        m: 0,
        n,
        delta_phase_residual,
        predicted_fidelity: 0.0,
        hamiltonian: final_ham,
        rabi_frequency: final_ham.rabi(),
        shape: spec.shape,
    };
    let gate = analytic_gate(&solution, delta_qubit)?;
    solution.predicted_fidelity = gate_fidelity(&gate.to_matrix(), &target)?;
    Ok(solution)
}

fn unreachable(spec: &GateSpec, ham: &EffectiveHamiltonian, theta0: f64) -> Error {
    let reason = match spec.target {
        GateTarget::Not if !spec.allow_ratio_rescale => format!(
            "complete population transfer requires Lambda0 = Lambda1 (here {} vs {} µeV) and amplitude rescaling is disabled",
            ham.lambda0, ham.lambda1
        ),
        GateTarget::Phase => "the single-pulse branch needs Lambda0 != 0".to_string(),
        _ if !spec.allow_ratio_rescale => format!(
            "structure gives Theta0 = {} rad and amplitude rescaling is disabled",
            ham.theta0()
        ),
        _ => "no positive amplitude ratio reaches this mixing angle".to_string(),
    };
    Error::UnreachableTheta { target: theta0, reason }
}

/// Effective-model operator of a solution, in the frame with ε₀ = 0, ε₁ = Δ.
pub fn analytic_gate(solution: &GateSolution, delta_qubit: f64) -> Result<GateMatrix> {
    let env = solution.shape.instantiate(0.0, solution.duration);
    let evo = mixing_angle_and_rabi(&solution.hamiltonian, &env, &env, 0.0, solution.duration)?;
    Ok(evolution_matrix_with_levels(&evo, 0.0, delta_qubit, 0.0, solution.duration))
}

/// Global-phase-invariant fidelity |tr(V†U)|/2; both inputs must be unitary.
pub fn gate_fidelity(achieved: &Mat2, target: &Mat2) -> Result<f64> {
    for m in [achieved, target] {
        let deviation = unitarity_deviation(m);
        if deviation > UNITARITY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
    }
    Ok(overlap_fidelity(achieved, target))
}

/// |tr(V†U)|/2 without the unitarity check, for qubit blocks of a larger
/// propagator where leakage makes U slightly sub-unitary.
pub fn overlap_fidelity(achieved: &Mat2, target: &Mat2) -> f64 {
    ((target.adjoint() * achieved).trace().norm() / 2.0).min(1.0)
}
