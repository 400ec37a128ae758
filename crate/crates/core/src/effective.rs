//! Adiabatically eliminated two-level model.
//!
//! With b_k ≈ (λ*_0k(t) c₀ + λ*_1k(t) c₁)/δ_k the qubit amplitudes obey
//! i ċ = H(t) c with H = [[Λ₀f₀², Λ₂f₀f₁], [Λ₂*f₀f₁, Λ₁f₁²]]. Its dressed
//! states are parameterized by the mixing angle Θ(t) and split by 2Ω(t).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{derive_couplings, CouplingSet, Envelope, PulsePair};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::quad;
use crate::spectrum::SpectrumModel;
use crate::units::{self, HBAR};

/// Pass/fail threshold on max_t Θ̇/(2Ω).
pub const ADIABATICITY_THRESHOLD: f64 = 0.1;

/// Ω below this fraction of its peak counts as a gap where Θ is undefined.
pub const GAP_FRACTION: f64 = 1e-12;

/// The adiabaticity ratio is only evaluated where Ω exceeds this fraction of
/// its peak; in the pulse tails both Θ̇ and Ω vanish and the ratio carries no
/// information about the dynamics.
pub const ADIABATIC_WINDOW: f64 = 1e-2;

const GRID_POINTS: usize = 4001;
const QUAD_TOL: f64 = 1e-13;

/// Λ parameters at unit envelopes (µeV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: Complex64,
}

/// Instantaneous effective-model quantities at given envelope values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantParams {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: Complex64,
    pub omega: f64,
    pub theta: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

impl EffectiveHamiltonian {
    pub fn instant(&self, f0: f64, f1: f64) -> InstantParams {
        let l0 = self.lambda0 * f0 * f0;
        let l1 = self.lambda1 * f1 * f1;
        let l2 = self.lambda2 * (f0 * f1);
        let half_gap = 0.5 * (l0 - l1);
        let omega = half_gap.hypot(l2.norm());
        let mean = 0.5 * (l0 + l1);
        InstantParams {
            lambda0: l0,
            lambda1: l1,
            lambda2: l2,
            omega,
            theta: l2.norm().atan2(half_gap),
            e_plus: mean + omega,
            e_minus: mean - omega,
        }
    }

    /// [[Λ₀f₀², Λ₂f₀f₁], [Λ₂*f₀f₁, Λ₁f₁²]] in µeV.
    pub fn matrix(&self, f0: f64, f1: f64) -> Mat2 {
        let p = self.instant(f0, f1);
        Mat2::new(Complex64::new(p.lambda0, 0.0), p.lambda2, p.lambda2.conj(), Complex64::new(p.lambda1, 0.0))
    }

    /// Mixing angle for equal envelopes, Θ₀ = atan2(|Λ₂|, (Λ₀ − Λ₁)/2).
    pub fn theta0(&self) -> f64 {
        self.instant(1.0, 1.0).theta
    }

    /// Ω at unit envelopes (µeV).
    pub fn rabi(&self) -> f64 {
        self.instant(1.0, 1.0).omega
    }

    /// Convenience: couplings of `pulses` on `spectrum`, then Λ.
    pub fn from_pulses(spectrum: &SpectrumModel, pulses: &PulsePair) -> Result<Self> {
        let couplings = derive_couplings(spectrum, pulses)?;
        effective_hamiltonian(&couplings, pulses.phi0, pulses.phi1)
    }
}

/// Λ₀ = Σ|λ_0k|²/δ_k, Λ₁ = Σ|λ_1k|²/δ_k, Λ₂ = e^{i(φ₀−φ₁)} Σ λ_0k λ*_1k/δ_k.
pub fn effective_hamiltonian(couplings: &CouplingSet, phi0: f64, phi1: f64) -> Result<EffectiveHamiltonian> {
    if let Some(k) = couplings.delta.iter().position(|d| *d == 0.0) {
        return Err(Error::ZeroDetuning { level: k });
    }
    let mut lambda0 = 0.0;
    let mut lambda1 = 0.0;
    let mut sum2 = Complex64::default();
    for k in 0..couplings.len() {
        let d = couplings.delta[k];
        lambda0 += couplings.lambda0[k].norm_sqr() / d;
        lambda1 += couplings.lambda1[k].norm_sqr() / d;
        sum2 += couplings.lambda0[k] * couplings.lambda1[k].conj() / d;
    }
    Ok(EffectiveHamiltonian { lambda0, lambda1, lambda2: sum2 * Complex64::from_polar(1.0, phi0 - phi1) })
}

/// One row of a sampled [`EffectiveEvolution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSample {
    pub t: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub omega: f64,
    pub omega_integral: f64,
    pub phi_lambda: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

/// Time-dependent dressed-state description over a pulse window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveEvolution {
    pub hamiltonian: EffectiveHamiltonian,
    pub envelope0: Envelope,
    pub envelope1: Envelope,
    pub t0: f64,
    pub t1: f64,
    pub peak_omega: f64,
    /// Intervals of nonzero length on which Ω vanishes; Θ is held there.
    pub gaps: Vec<(f64, f64)>,
    grid: Vec<f64>,
    grid_valid: Vec<bool>,
}

/// Builds the dressed-state description of `ham` driven by `env0`, `env1`
/// on [t0, t1].
pub fn mixing_angle_and_rabi(
    ham: &EffectiveHamiltonian,
    env0: &Envelope,
    env1: &Envelope,
    t0: f64,
    t1: f64,
) -> Result<EffectiveEvolution> {
    if !(t1 > t0) {
        return Err(Error::InvalidConfig(format!("evolution window [{t0}, {t1}] is empty")));
    }
    env0.validate()?;
    env1.validate()?;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| t0 + (t1 - t0) * i as f64 / (GRID_POINTS - 1) as f64).collect();
    let omegas: Vec<f64> = grid.iter().map(|t| ham.instant(env0.value(*t), env1.value(*t)).omega).collect();
    let peak_omega = omegas.iter().copied().fold(0.0, f64::max);
    let cut = GAP_FRACTION * peak_omega;
    let grid_valid: Vec<bool> = omegas.iter().map(|w| *w > cut && *w > 0.0).collect();
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < grid.len() {
        if grid_valid[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < grid.len() && !grid_valid[i] {
            i += 1;
        }
        if i - start >= 2 {
            gaps.push((grid[start], grid[i - 1]));
        }
    }
    // zeros at the window edges are expected for pulses that switch on and off
    let interior = gaps.iter().filter(|(a, b)| *a > t0 && *b < t1).count();
    if interior > 0 {
        log::warn!("Rabi frequency vanishes on {interior} interior interval(s); mixing angle held constant there");
    } else if !gaps.is_empty() {
        log::debug!("Rabi frequency vanishes at the window edges");
    }
    Ok(EffectiveEvolution {
        hamiltonian: *ham,
        envelope0: *env0,
        envelope1: *env1,
        t0,
        t1,
        peak_omega,
        gaps,
        grid,
        grid_valid,
    })
}

impl EffectiveEvolution {
    pub fn params(&self, t: f64) -> InstantParams {
        self.hamiltonian.instant(self.envelope0.value(t), self.envelope1.value(t))
    }

    fn in_gap(&self, omega: f64) -> bool {
        !(omega > GAP_FRACTION * self.peak_omega && omega > 0.0)
    }

    /// Ω(t) in µeV.
    pub fn omega(&self, t: f64) -> f64 {
        self.params(t).omega
    }

    /// Θ(t) ∈ [0, π]; inside a gap the nearest defined value (earlier if any) is used.
    pub fn theta(&self, t: f64) -> f64 {
        let p = self.params(t);
        if !self.in_gap(p.omega) {
            return p.theta;
        }
        let n = self.grid.len();
        let pos = ((t - self.t0) / (self.t1 - self.t0) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let i = pos.floor() as usize;
        let before = (0..=i).rev().find(|&j| self.grid_valid[j]);
        let after = || (i..n).find(|&j| self.grid_valid[j]);
        match before.or_else(after) {
            Some(j) => self.params(self.grid[j]).theta,
            None => p.theta,
        }
    }

    /// Signed dΘ/dt in rad/ns (zero inside gaps).
    pub fn theta_dot(&self, t: f64) -> f64 {
        let (f0, f1) = (self.envelope0.value(t), self.envelope1.value(t));
        let (g0, g1) = (self.envelope0.derivative(t), self.envelope1.derivative(t));
        let p = self.hamiltonian.instant(f0, f1);
        if self.in_gap(p.omega) {
            return 0.0;
        }
        // D·d|Λ₂|/dt − |Λ₂|·Ḋ factors as |Λ₂|(Λ₀f₀² + Λ₁f₁²)(f₀f₁′ − f₁f₀′),
        // which vanishes exactly for equal envelopes.
        let wronskian = f0 * g1 - f1 * g0;
        self.hamiltonian.lambda2.norm() * (p.lambda0 + p.lambda1) * wronskian / (2.0 * p.omega * p.omega)
    }

    /// Magnitude in the conventional closed form
    /// |Ḋ|Λ₂| − (d|Λ₂|/dt) D| / Ω², which equals 2|Θ̇|.
    pub fn theta_dot_closed_form(&self, t: f64) -> f64 {
        2.0 * self.theta_dot(t).abs()
    }

    /// Ω̃(t) = ∫_{t₀}^{t} Ω dt′/ħ (rad).
    pub fn omega_integral(&self, t: f64) -> f64 {
        self.omega_integral_between(self.t0, t)
    }

    pub fn omega_integral_between(&self, a: f64, b: f64) -> f64 {
        let f = |s: f64| self.omega(s);
        quad::integrate(&f, a, b, QUAD_TOL * self.peak_omega.max(1e-300) * (b - a).abs()) / HBAR
    }

    /// φ_Λ(t) = ∫_{t₀}^{t} (Λ₀(t′)+Λ₁(t′))/2 dt′/ħ (rad).
    pub fn phi_lambda(&self, t: f64) -> f64 {
        self.phi_lambda_between(self.t0, t)
    }

    pub fn phi_lambda_between(&self, a: f64, b: f64) -> f64 {
        let f = |s: f64| {
            let p = self.params(s);
            0.5 * (p.lambda0 + p.lambda1)
        };
        let scale = self.hamiltonian.lambda0.abs().max(self.hamiltonian.lambda1.abs()).max(1e-300);
        quad::integrate(&f, a, b, QUAD_TOL * scale * (b - a).abs()) / HBAR
    }

    pub fn e_plus(&self, t: f64) -> f64 {
        self.params(t).e_plus
    }

    pub fn e_minus(&self, t: f64) -> f64 {
        self.params(t).e_minus
    }

    /// Dressed basis at t: columns |+⟩ = (cos Θ/2, e^{−iα} sin Θ/2) and
    /// |−⟩ = (−e^{iα} sin Θ/2, cos Θ/2), α = arg Λ₂.
    pub fn dressed_basis(&self, t: f64) -> Mat2 {
        let half = 0.5 * self.theta(t);
        let a = Complex64::from_polar(1.0, self.hamiltonian.lambda2.arg());
        let (c, s) = (Complex64::new(half.cos(), 0.0), half.sin());
        Mat2::new(c, -a * s, a.conj() * s, c)
    }

    /// Dressed amplitudes (a₊, a₋) at t under diagonal evolution from the
    /// qubit amplitudes (c₀, c₁) at t₀.
    pub fn dressed_amplitudes(&self, initial: (Complex64, Complex64), t: f64) -> (Complex64, Complex64) {
        let d0 = self.dressed_basis(self.t0);
        let v = d0.adjoint() * nalgebra::Vector2::new(initial.0, initial.1);
        let w = self.omega_integral(t);
        let g = Complex64::from_polar(1.0, -self.phi_lambda(t));
        (g * v[0] * Complex64::from_polar(1.0, -w), g * v[1] * Complex64::from_polar(1.0, w))
    }

    /// Samples every quantity on `n` uniform points with cumulative integrals.
    pub fn samples(&self, n: usize) -> Vec<EvolutionSample> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n);
        let (mut wi, mut pl) = (0.0, 0.0);
        let mut prev = self.t0;
        for i in 0..n {
            let t = self.t0 + (self.t1 - self.t0) * i as f64 / (n - 1) as f64;
            wi += self.omega_integral_between(prev, t);
            pl += self.phi_lambda_between(prev, t);
            prev = t;
            let p = self.params(t);
            out.push(EvolutionSample {
                t,
                theta: self.theta(t),
                theta_dot: self.theta_dot(t),
                omega: p.omega,
                omega_integral: wi,
                phi_lambda: pl,
                e_plus: p.e_plus,
                e_minus: p.e_minus,
            });
        }
        out
    }

    fn grid_times(&self) -> &[f64] {
        &self.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticityReport {
    /// max_t Θ̇/(2Ω/ħ), with Θ̇ in the closed form with |·| in the numerator.
    pub max_ratio: f64,
    pub t_at_max: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// Checks Θ̇ ≪ 2Ω over the window where Ω ≥ [`ADIABATIC_WINDOW`]·max Ω.
pub fn diagonal_evolution_check(evolution: &EffectiveEvolution) -> AdiabaticityReport {
    let floor = ADIABATIC_WINDOW * evolution.peak_omega;
    let (mut max_ratio, mut t_at_max) = (0.0, evolution.t0);
    for &t in evolution.grid_times() {
        let w = evolution.omega(t);
        if !(w >= floor) || w <= 0.0 {
            continue;
        }
        let r = evolution.theta_dot_closed_form(t) * HBAR / (2.0 * w);
        if r > max_ratio {
            max_ratio = r;
            t_at_max = t;
        }
    }
    AdiabaticityReport {
        max_ratio,
        t_at_max,
        threshold: ADIABATICITY_THRESHOLD,
        passes: max_ratio <= ADIABATICITY_THRESHOLD,
    }
}

/// Evolution operator of the effective model.
///
/// `u` is the rotating-frame part D(t) diag(e^{−iΩ̃}, e^{iΩ̃}) D†(t₀); the
/// laboratory operator is
/// e^{−iφ_Λ} diag(e^{−iε₀t}, e^{−iε₁t}) u diag(e^{iε₀t₀}, e^{iε₁t₀}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMatrix {
    pub u00: Complex64,
    pub u01: Complex64,
    pub u10: Complex64,
    pub u11: Complex64,
    pub phi_lambda: f64,
    pub omega_integral: f64,
    pub epsilon0: f64,
    pub epsilon1: f64,
    pub t0: f64,
    pub t: f64,
    pub adiabaticity: AdiabaticityReport,
    pub valid: bool,
}

impl GateMatrix {
    /// Rotating-frame block u (no global or Δ phases).
    pub fn rotating(&self) -> Mat2 {
        Mat2::new(self.u00, self.u01, self.u10, self.u11)
    }

    /// e^{−i[ε₀(t − t₀)/ħ + φ_Λ]}.
    pub fn global_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, -(units::to_rate(self.epsilon0) * (self.t - self.t0) + self.phi_lambda))
    }

    /// e^{−iΔt/ħ}, the extra factor on the |1⟩ row.
    pub fn delta_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, -units::to_rate(self.epsilon1 - self.epsilon0) * self.t)
    }

    /// Full laboratory-frame operator.
    pub fn to_matrix(&self) -> Mat2 {
        let d = units::to_rate(self.epsilon1 - self.epsilon0);
        let g = self.global_phase();
        let row = Complex64::from_polar(1.0, -d * self.t);
        let col = Complex64::from_polar(1.0, d * self.t0);
        Mat2::new(g * self.u00, g * self.u01 * col, g * row * self.u10, g * row * self.u11 * col)
    }

    /// Maps lab-frame qubit amplitudes at t₀ to t.
    pub fn apply(&self, state: (Complex64, Complex64)) -> Result<(Complex64, Complex64)> {
        let n = state.0.norm_sqr() + state.1.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let v = self.to_matrix() * nalgebra::Vector2::new(state.0, state.1);
        Ok((v[0], v[1]))
    }
}

/// Evaluates the diagonal-evolution operator from `t0` to `t`.
pub fn evolution_matrix(evolution: &EffectiveEvolution, spectrum: &SpectrumModel, t0: f64, t: f64) -> GateMatrix {
    evolution_matrix_with_levels(evolution, spectrum.epsilon0, spectrum.epsilon1, t0, t)
}

/// [`evolution_matrix`] with the qubit energies given directly (µeV).
pub fn evolution_matrix_with_levels(
    evolution: &EffectiveEvolution,
    epsilon0: f64,
    epsilon1: f64,
    t0: f64,
    t: f64,
) -> GateMatrix {
    let c = |th: f64| (0.5 * th).cos();
    let s = |th: f64| (0.5 * th).sin();
    let (th0, th) = (evolution.theta(t0), evolution.theta(t));
    let w = evolution.omega_integral_between(t0, t);
    let em = Complex64::from_polar(1.0, -w);
    let ep = em.conj();
    let a = Complex64::from_polar(1.0, evolution.hamiltonian.lambda2.arg());
    let u00 = em * c(th) * c(th0) + ep * s(th) * s(th0);
    let u01 = a * (em * c(th) * s(th0) - ep * s(th) * c(th0));
    let adiabaticity = diagonal_evolution_check(evolution);
    if !adiabaticity.passes {
        log::warn!(
            "diagonal evolution not justified: max Θ̇/2Ω = {:.3} > {}",
            adiabaticity.max_ratio,
            adiabaticity.threshold
        );
    }
    GateMatrix {
        u00,
        u01,
        u10: -u01.conj(),
        u11: u00.conj(),
        phi_lambda: evolution.phi_lambda_between(t0, t),
        omega_integral: w,
        epsilon0,
        epsilon1,
        t0,
        t,
        valid: adiabaticity.passes,
        adiabaticity,
    }
}

/// Effective-model evolution over the whole pulse window of `pulses`.
pub fn gate_for_pulses(spectrum: &SpectrumModel, pulses: &PulsePair) -> Result<GateMatrix> {
    let ham = EffectiveHamiltonian::from_pulses(spectrum, pulses)?;
    let evo = mixing_angle_and_rabi(&ham, &pulses.envelope0, &pulses.envelope1, pulses.t_start, pulses.t_end())?;
    Ok(evolution_matrix(&evo, spectrum, pulses.t_start, pulses.t_end()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_deviation;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn single(l0: f64, l1: f64, delta: f64) -> CouplingSet {
        CouplingSet {
            lambda0: vec![Complex64::new(l0, 0.0)],
            lambda1: vec![Complex64::new(l1, 0.0)],
            mu0: vec![Complex64::new(l1, 0.0)],
            mu1: vec![Complex64::new(l0, 0.0)],
            delta: vec![delta],
            delta_qubit: 0.0,
        }
    }

    fn spectrum() -> SpectrumModel {
        let cfg =
            crate::spectrum::SpectrumConfig::single(0.0, 500.0, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        crate::spectrum::build_spectrum(&cfg).unwrap()
    }

    #[test]
    fn one_term_sums() {
        let h = effective_hamiltonian(&single(10.0, 10.0, -100.0), 0.0, 0.0).unwrap();
        assert!((h.lambda0 + 1.0).abs() < 1e-15);
        assert!((h.lambda1 + 1.0).abs() < 1e-15);
        assert!((h.lambda2 - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        // |Λ₀| ≥ λ²/|δ| = 1 µeV, about 1.5e9 s⁻¹
        assert!(units::to_rate_per_second(h.lambda0.abs()) >= 1e9);
    }

    #[test]
    fn phase_factor_enters_lambda2_only() {
        let h = effective_hamiltonian(&single(10.0, 5.0, -100.0), 0.7, 0.2).unwrap();
        assert!(units::wrap_angle(h.lambda2.arg() - 0.5 - PI).abs() < 1e-12);
        assert!((h.lambda0 + 1.0).abs() < 1e-15 && (h.lambda1 + 0.25).abs() < 1e-15);
    }

    #[test]
    fn destructive_levels_cancel_lambda2() {
        let c = CouplingSet {
            lambda0: vec![Complex64::new(10.0, 0.0), Complex64::new(10.0, 0.0)],
            lambda1: vec![Complex64::new(10.0, 0.0), Complex64::new(-10.0, 0.0)],
            mu0: vec![Complex64::default(); 2],
            mu1: vec![Complex64::default(); 2],
            delta: vec![-100.0, -100.0],
            delta_qubit: 0.0,
        };
        let h = effective_hamiltonian(&c, 0.0, 0.0).unwrap();
        assert_eq!(h.lambda2.norm(), 0.0);
        let th = h.theta0();
        assert!(th == 0.0 || th == PI);
    }

    #[test]
    fn zero_detuning_is_rejected() {
        assert_eq!(effective_hamiltonian(&single(1.0, 1.0, 0.0), 0.0, 0.0), Err(Error::ZeroDetuning { level: 0 }));
    }

    #[test]
    fn symmetric_structure_has_quarter_turn_angle() {
        let h = EffectiveHamiltonian { lambda0: -1.0, lambda1: -1.0, lambda2: Complex64::new(0.0, 0.4) };
        assert!((h.theta0() - FRAC_PI_2).abs() < 1e-15);
        let p = h.instant(0.8, 0.8);
        assert!((p.e_plus - p.e_minus - 2.0 * p.omega).abs() < 1e-15);
    }

    #[test]
    fn equal_envelopes_freeze_theta() {
        let h = EffectiveHamiltonian { lambda0: -1.0, lambda1: -0.3, lambda2: Complex64::new(0.5, 0.2) };
        let env = Envelope::Sin2 { start: 0.0, duration: 4.0 };
        let evo = mixing_angle_and_rabi(&h, &env, &env, 0.0, 4.0).unwrap();
        for i in 1..40 {
            let t = 0.1 * i as f64;
            assert!(evo.theta_dot(t).abs() < 1e-12);
            assert!((evo.theta(t) - h.theta0()).abs() < 1e-12);
        }
        assert!((evo.theta(0.0) - h.theta0()).abs() < 1e-12, "edge value is held");
        let rep = diagonal_evolution_check(&evo);
        assert!(rep.passes && rep.max_ratio < 1e-12);
    }

    #[test]
    fn theta_dot_matches_finite_difference() {
        let h = EffectiveHamiltonian { lambda0: -2.0, lambda1: -1.0, lambda2: Complex64::new(-1.2, 0.3) };
        let e0 = Envelope::Gaussian { center: 6.0, sigma: 1.5 };
        let e1 = Envelope::Gaussian { center: 4.0, sigma: 1.5 };
        let evo = mixing_angle_and_rabi(&h, &e0, &e1, 0.0, 10.0).unwrap();
        for i in 1..50 {
            let t = 0.2 * i as f64;
            let eps = 1e-5;
            let fd = (evo.params(t + eps).theta - evo.params(t - eps).theta) / (2.0 * eps);
            assert!((fd - evo.theta_dot(t)).abs() < 1e-6 * (1.0 + fd.abs()), "t = {t}");
            assert!((evo.theta_dot_closed_form(t) - 2.0 * fd.abs()).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn staggered_weak_pulses_fail_adiabaticity() {
        let e0 = Envelope::Gaussian { center: 6.0, sigma: 1.0 };
        let e1 = Envelope::Gaussian { center: 4.0, sigma: 1.0 };
        let strong = EffectiveHamiltonian { lambda0: -100.0, lambda1: -100.0, lambda2: Complex64::new(-100.0, 0.0) };
        let weak = EffectiveHamiltonian { lambda0: -0.02, lambda1: -0.02, lambda2: Complex64::new(-0.02, 0.0) };
        let good = diagonal_evolution_check(&mixing_angle_and_rabi(&strong, &e0, &e1, 0.0, 10.0).unwrap());
        let bad = diagonal_evolution_check(&mixing_angle_and_rabi(&weak, &e0, &e1, 0.0, 10.0).unwrap());
        assert!(good.passes, "{good:?}");
        assert!(!bad.passes, "{bad:?}");
    }

    #[test]
    fn rabi_integral_of_constant_drive() {
        let h = EffectiveHamiltonian { lambda0: -1.0, lambda1: -1.0, lambda2: Complex64::new(-1.0, 0.0) };
        let evo = mixing_angle_and_rabi(&h, &Envelope::Constant, &Envelope::Constant, 0.0, 2.0).unwrap();
        assert!((evo.omega_integral(2.0) - 2.0 / HBAR).abs() < 1e-12);
        assert!((evo.phi_lambda(2.0) + 2.0 / HBAR).abs() < 1e-12);
        let s = evo.samples(11);
        assert!((s[10].omega_integral - 2.0 / HBAR).abs() < 1e-12);
    }

    #[test]
    fn identity_at_window_start_and_full_transfer() {
        let h = EffectiveHamiltonian { lambda0: -1.0, lambda1: -1.0, lambda2: Complex64::new(-1.0, 0.0) };
        let t_not = FRAC_PI_2 * HBAR;
        let evo = mixing_angle_and_rabi(&h, &Envelope::Constant, &Envelope::Constant, 0.0, t_not).unwrap();
        let sp = spectrum();
        let u = evolution_matrix(&evo, &sp, 0.0, 0.0).rotating();
        assert!((u - Mat2::identity()).norm() < 1e-15);
        let g = evolution_matrix(&evo, &sp, 0.0, t_not);
        assert!((g.u01.norm() - 1.0).abs() < 1e-12);
        let (a, b) = g.apply((Complex64::new(1.0, 0.0), Complex64::default())).unwrap();
        assert!(a.norm() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
        assert!(g.apply((Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0))).is_err());
    }

    #[test]
    fn equal_envelopes_reduce_to_closed_form() {
        let h = EffectiveHamiltonian { lambda0: -1.3, lambda1: -0.4, lambda2: Complex64::from_polar(0.9, 0.8) };
        let env = Envelope::Sin2 { start: 0.0, duration: 5.0 };
        let evo = mixing_angle_and_rabi(&h, &env, &env, 0.0, 5.0).unwrap();
        let g = evolution_matrix(&evo, &spectrum(), 0.0, 3.3);
        let (th, w) = (h.theta0(), evo.omega_integral(3.3));
        let u00 = Complex64::new(w.cos(), -th.cos() * w.sin());
        let u01 = -Complex64::i() * Complex64::from_polar(1.0, 0.8) * th.sin() * w.sin();
        assert!((g.u00 - u00).norm() < 1e-12 && (g.u01 - u01).norm() < 1e-12);
        assert!(unitarity_deviation(&g.to_matrix()) < 1e-12);
    }

    #[test]
    fn hadamard_angle_gives_balanced_output() {
        let h = EffectiveHamiltonian { lambda0: -1.0, lambda1: 0.0, lambda2: Complex64::new(-0.5, 0.0) };
        // Θ₀ = atan2(0.5, −0.5) = 3π/4 ~ Hadamard class π − π/4
        assert!((h.theta0() - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let w = h.rabi();
        let evo = mixing_angle_and_rabi(&h, &Envelope::Constant, &Envelope::Constant, 0.0, 10.0).unwrap();
        let t = FRAC_PI_2 * HBAR / w;
        let g = evolution_matrix(&evo, &spectrum(), 0.0, t);
        let (a, b) = g.apply((Complex64::new(1.0, 0.0), Complex64::default())).unwrap();
        assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-12 && (b.norm() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn dressed_amplitudes_reproduce_matrix() {
        let h = EffectiveHamiltonian { lambda0: -1.3, lambda1: -0.4, lambda2: Complex64::from_polar(0.9, 0.8) };
        let e0 = Envelope::Gaussian { center: 6.0, sigma: 2.0 };
        let e1 = Envelope::Gaussian { center: 5.0, sigma: 2.0 };
        let evo = mixing_angle_and_rabi(&h, &e0, &e1, 0.0, 11.0).unwrap();
        let init = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let (ap, am) = evo.dressed_amplitudes(init, 7.0);
        let c = evo.dressed_basis(7.0) * nalgebra::Vector2::new(ap, am);
        let g = evolution_matrix(&evo, &spectrum(), 0.0, 7.0);
        let want = g.rotating() * nalgebra::Vector2::new(init.0, init.1) * Complex64::from_polar(1.0, -g.phi_lambda);
        assert!((c - want).norm() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cauchy_schwarz_for_same_sign_detunings(
                l in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 1..6),
                d in proptest::collection::vec(-300.0f64..-1.0, 6),
                phi in -3.0f64..3.0,
            ) {
                let n = l.len();
                let c = CouplingSet {
                    lambda0: l.iter().map(|x| Complex64::new(x.0, x.1)).collect(),
                    lambda1: l.iter().map(|x| Complex64::new(x.2, x.3)).collect(),
                    mu0: vec![Complex64::default(); n],
                    mu1: vec![Complex64::default(); n],
                    delta: d[..n].to_vec(),
                    delta_qubit: 0.0,
                };
                let h = effective_hamiltonian(&c, phi, 0.0).unwrap();
                prop_assert!(h.lambda2.norm() <= (h.lambda0 * h.lambda1).sqrt() * (1.0 + 1e-12) + 1e-14);
            }

            #[test]
            fn dressed_quantities_are_consistent(
                l0 in -5.0f64..5.0, l1 in -5.0f64..5.0, m in 0.0f64..5.0, a in -3.0f64..3.0,
                f0 in 0.0f64..1.0, f1 in 0.0f64..1.0,
            ) {
                let h = EffectiveHamiltonian { lambda0: l0, lambda1: l1, lambda2: Complex64::from_polar(m, a) };
                let p = h.instant(f0, f1);
                prop_assert!(p.omega >= 0.0);
                prop_assert!((0.0..=PI).contains(&p.theta));
                prop_assert!((p.e_plus - p.e_minus - 2.0 * p.omega).abs() < 1e-12);
                let d = p.lambda0 - p.lambda1;
                prop_assert!((p.omega * p.omega - (d * d / 4.0 + p.lambda2.norm_sqr())).abs() < 1e-10);
                if p.omega > 0.0 {
                    let (c, s) = (0.5 * d / p.omega, p.lambda2.norm() / p.omega);
                    prop_assert!((c - p.theta.cos()).abs() < 1e-12 && (s - p.theta.sin()).abs() < 1e-12);
                }
                // eigenvalues of the 2×2 matrix are E±
                let mtx = h.matrix(f0, f1);
                let tr = (mtx[(0, 0)] + mtx[(1, 1)]).re;
                let det = (mtx[(0, 0)] * mtx[(1, 1)] - mtx[(0, 1)] * mtx[(1, 0)]).re;
                prop_assert!((tr - p.e_plus - p.e_minus).abs() < 1e-10);
                prop_assert!((det - p.e_plus * p.e_minus).abs() < 1e-9);
            }
        }
    }
}
