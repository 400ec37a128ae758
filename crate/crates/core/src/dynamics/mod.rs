//! Numerical propagation of the multi-level amplitudes.
//!
//! Index layout of every state vector: `[c_0, c_1, c_k0, c_k1, ...]` with the
//! manifold in spectrum order. Three pictures are supported:
//!
//! - [`Frame::Bare`]: amplitudes of |Ψ⟩ = Σ c_n e^{−iε_n t}|n⟩ under the full
//!   real carrier field (no rotating-wave approximation).
//! - [`Frame::Rwa`]: same amplitudes after dropping counter-rotating terms; all
//!   four two-photon paths (λ and cross-coupling μ) are kept with their
//!   e^{±iΔt}, e^{±iδ_k t} phases evaluated analytically at each stage time.
//! - [`Frame::Averaged`]: c_0, c_1 and b_k = c_k e^{iδ_k t} after averaging out
//!   the e^{±iΔt} cross terms.

pub mod analysis;
pub mod integrator;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{self, CouplingSet, PulsePair};
use crate::error::{Error, Result};
use crate::spectrum::SpectrumModel;
use crate::units::{self, DIPOLE_FIELD_TO_UEV};

pub use analysis::{check_adiabatic_elimination, fit_angular_frequency, EliminationReport};
pub use integrator::{IntegrationStats, IntegratorSettings, Method};

/// Tolerance on ‖ψ₀‖² − 1 for initial states.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Bare,
    Rwa,
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub frame: Frame,
}

impl StateVector {
    /// Qubit superposition α|0⟩ + β|1⟩ with an empty manifold of size `n_excited`.
    pub fn qubit(alpha: Complex64, beta: Complex64, n_excited: usize, frame: Frame) -> Self {
        let mut amplitudes = vec![Complex64::default(); 2 + n_excited];
        amplitudes[0] = alpha;
        amplitudes[1] = beta;
        Self { amplitudes, frame }
    }

    pub fn ground(n_excited: usize, frame: Frame) -> Self {
        Self::qubit(Complex64::new(1.0, 0.0), Complex64::default(), n_excited, frame)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Σ_k |c_k|².
    pub fn manifold_population(&self) -> f64 {
        self.amplitudes[2..].iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn n_excited(&self) -> usize {
        self.amplitudes.len() - 2
    }

    /// Rejects a wrong frame, dimension or norm.
    pub fn check(&self, frame: Frame, n_excited: usize) -> Result<()> {
        if self.frame != frame {
            return Err(Error::InvalidConfig(format!(
                "initial state is in the {:?} frame, propagation expects {:?}",
                self.frame, frame
            )));
        }
        if self.n_excited() != n_excited {
            return Err(Error::DimensionMismatch { expected: n_excited + 2, found: self.amplitudes.len() });
        }
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(())
    }
}

/// Saved time grid and amplitudes of one propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<Complex64>>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_excited(&self) -> usize {
        self.amplitudes.first().map_or(0, |a| a.len().saturating_sub(2))
    }

    pub fn state(&self, i: usize) -> StateVector {
        StateVector { amplitudes: self.amplitudes[i].clone(), frame: self.frame }
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.len() - 1)
    }

    pub fn populations(&self, i: usize) -> Vec<f64> {
        self.amplitudes[i].iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn final_populations(&self) -> Vec<f64> {
        self.populations(self.len() - 1)
    }

    /// max_t Σ_k |c_k(t)|².
    pub fn peak_manifold_population(&self) -> f64 {
        self.amplitudes.iter().map(|a| a[2..].iter().map(|z| z.norm_sqr()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// max_t |‖ψ(t)‖² − ‖ψ(t₀)‖²| over the saved samples.
    pub fn max_norm_drift(&self) -> f64 {
        let n0: f64 = self.amplitudes[0].iter().map(|z| z.norm_sqr()).sum();
        self.amplitudes.iter().map(|a| (a.iter().map(|z| z.norm_sqr()).sum::<f64>() - n0).abs()).fold(0.0, f64::max)
    }

    /// Manifold amplitudes in the averaged picture, b_k = c_k e^{iδ_k t}.
    ///
    /// Averaged trajectories are returned unchanged; bare trajectories are rejected.
    pub fn to_averaged(&self, couplings: &CouplingSet) -> Result<Trajectory> {
        match self.frame {
            Frame::Averaged => Ok(self.clone()),
            Frame::Bare => Err(Error::InvalidConfig("bare trajectories have no averaged picture".into())),
            Frame::Rwa => {
                let rates: Vec<f64> = couplings.delta.iter().map(|d| units::to_rate(*d)).collect();
                let amplitudes = self
                    .times
                    .iter()
                    .zip(&self.amplitudes)
                    .map(|(t, a)| {
                        let mut b = a.clone();
                        for (k, r) in rates.iter().enumerate() {
                            b[2 + k] *= Complex64::from_polar(1.0, r * t);
                        }
                        b
                    })
                    .collect();
                Ok(Trajectory { frame: Frame::Averaged, times: self.times.clone(), amplitudes, stats: self.stats })
            }
        }
    }

    /// Writes `t, re/im of each amplitude, populations` as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let n = self.amplitudes.first().map_or(0, |a| a.len());
        let label = |i: usize| match i {
            0 => "c0".to_string(),
            1 => "c1".to_string(),
            k => format!("k{}", k - 2),
        };
        let mut header = vec!["t".to_string()];
        for i in 0..n {
            header.push(format!("re_{}", label(i)));
            header.push(format!("im_{}", label(i)));
        }
        for i in 0..n {
            header.push(format!("p_{}", label(i)));
        }
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv: {e}"));
        w.write_record(&header).map_err(io)?;
        for (t, a) in self.times.iter().zip(&self.amplitudes) {
            let mut row = Vec::with_capacity(1 + 3 * n);
            row.push(t.to_string());
            for z in a {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            }
            for z in a {
                row.push(z.norm_sqr().to_string());
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| std::io::Error::other(e.to_string()))
    }
}

fn check_dimensions(spectrum: &SpectrumModel, couplings: &CouplingSet) -> Result<()> {
    let n = spectrum.len();
    for len in [
        couplings.lambda0.len(),
        couplings.lambda1.len(),
        couplings.mu0.len(),
        couplings.mu1.len(),
        couplings.delta.len(),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    Ok(())
}

fn finish(frame: Frame, sol: integrator::Solution) -> Trajectory {
    Trajectory { frame, times: sol.times, amplitudes: sol.states, stats: sol.stats }
}

fn scaled(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z / units::HBAR).collect()
}

/// Solves the rotating-wave equations over the pulse window.
///
/// ```text
/// i ċ₀ = Σ_k [λ_0k(t) + μ_1k(t) e^{−iΔt}] c_k e^{iδ_k t}
/// i ċ₁ = Σ_k [μ_0k(t) e^{+iΔt} + λ_1k(t)] c_k e^{iδ_k t}
/// i ċ_k = ([λ_0k(t) + μ_1k(t) e^{−iΔt}]* c₀ + [μ_0k(t) e^{+iΔt} + λ_1k(t)]* c₁) e^{−iδ_k t}
/// ```
///
/// with λ_0k(t) = λ_0k f₀(t) e^{iφ₀} etc. Pulse 1 reaches |k⟩ from |0⟩ at
/// detuning δ_k − Δ and pulse 0 reaches it from |1⟩ at δ_k + Δ.
pub fn propagate_rwa(
    spectrum: &SpectrumModel,
    pulses: &PulsePair,
    couplings: &CouplingSet,
    psi0: &StateVector,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    check_dimensions(spectrum, couplings)?;
    psi0.check(Frame::Rwa, spectrum.len())?;
    let n = spectrum.len();
    let lam0 = scaled(&couplings.lambda0);
    let lam1 = scaled(&couplings.lambda1);
    let mu0 = scaled(&couplings.mu0);
    let mu1 = scaled(&couplings.mu1);
    let det: Vec<f64> = couplings.delta.iter().map(|d| units::to_rate(*d)).collect();
    let big = units::to_rate(couplings.delta_qubit);
    let (env0, env1) = (pulses.envelope0, pulses.envelope1);
    let (p0, p1) = (Complex64::from_polar(1.0, pulses.phi0), Complex64::from_polar(1.0, pulses.phi1));
    let mut a = vec![Complex64::default(); n];
    let mut b = vec![Complex64::default(); n];
    let rhs = move |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let g0 = p0 * env0.value(t);
        let g1 = p1 * env1.value(t);
        let cross = Complex64::from_polar(1.0, big * t);
        let mut d0 = Complex64::default();
        let mut d1 = Complex64::default();
        for k in 0..n {
            let ph = Complex64::from_polar(1.0, det[k] * t);
            // coupling of c_0 (resp. c_1) to c_k, including the e^{iδ_k t} phase
            a[k] = (lam0[k] * g0 + mu1[k] * g1 * cross.conj()) * ph;
            b[k] = (mu0[k] * g0 * cross + lam1[k] * g1) * ph;
            d0 += a[k] * y[2 + k];
            d1 += b[k] * y[2 + k];
        }
        dy[0] = Complex64::new(d0.im, -d0.re);
        dy[1] = Complex64::new(d1.im, -d1.re);
        for k in 0..n {
            let s = a[k].conj() * y[0] + b[k].conj() * y[1];
            dy[2 + k] = Complex64::new(s.im, -s.re);
        }
    };
    let sol = integrator::integrate(rhs, pulses.t_start, pulses.t_end(), &psi0.amplitudes, settings)?;
    Ok(finish(Frame::Rwa, sol))
}

/// Solves the Δ-averaged equations in the b_k picture:
///
/// ```text
/// i ċ₀ = Σ_k λ_0k(t) b_k,   i ċ₁ = Σ_k λ_1k(t) b_k,
/// i ḃ_k = −δ_k b_k + λ*_0k(t) c₀ + λ*_1k(t) c₁.
/// ```
pub fn propagate_averaged(
    spectrum: &SpectrumModel,
    pulses: &PulsePair,
    couplings: &CouplingSet,
    psi0: &StateVector,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    check_dimensions(spectrum, couplings)?;
    psi0.check(Frame::Averaged, spectrum.len())?;
    drive::check_slow_switching(pulses, couplings.delta_qubit);
    let n = spectrum.len();
    let lam0 = scaled(&couplings.lambda0);
    let lam1 = scaled(&couplings.lambda1);
    let det: Vec<f64> = couplings.delta.iter().map(|d| units::to_rate(*d)).collect();
    let (env0, env1) = (pulses.envelope0, pulses.envelope1);
    let (p0, p1) = (Complex64::from_polar(1.0, pulses.phi0), Complex64::from_polar(1.0, pulses.phi1));
    let rhs = move |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let g0 = p0 * env0.value(t);
        let g1 = p1 * env1.value(t);
        let mut d0 = Complex64::default();
        let mut d1 = Complex64::default();
        for k in 0..n {
            let l0 = lam0[k] * g0;
            let l1 = lam1[k] * g1;
            let bk = y[2 + k];
            d0 += l0 * bk;
            d1 += l1 * bk;
            let s = -bk * det[k] + l0.conj() * y[0] + l1.conj() * y[1];
            dy[2 + k] = Complex64::new(s.im, -s.re);
        }
        dy[0] = Complex64::new(d0.im, -d0.re);
        dy[1] = Complex64::new(d1.im, -d1.re);
    };
    let sol = integrator::integrate(rhs, pulses.t_start, pulses.t_end(), &psi0.amplitudes, settings)?;
    Ok(finish(Frame::Averaged, sol))
}

/// Largest step that resolves the optical carrier: 2π/(50·ω₀) in ns.
pub fn carrier_step_limit(pulses: &PulsePair) -> f64 {
    let w = units::to_rate(pulses.omega0.max(pulses.omega1));
    2.0 * std::f64::consts::PI / (50.0 * w)
}

/// Solves the bare amplitude equations with the full real field:
///
/// ```text
/// i ċ₀ = E(t) Σ_k d_0k c_k e^{−iω_0k t},  i ċ₁ = E(t) Σ_k d_1k c_k e^{−iω_1k t},
/// i ċ_k = E(t) (d*_0k c₀ e^{iω_0k t} + d*_1k c₁ e^{iω_1k t}).
/// ```
///
/// The step is capped at [`carrier_step_limit`]; runtime scales with ω₀·T.
pub fn propagate_bare(
    spectrum: &SpectrumModel,
    pulses: &PulsePair,
    psi0: &StateVector,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    psi0.check(Frame::Bare, spectrum.len())?;
    let n = spectrum.len();
    let limit = carrier_step_limit(pulses);
    let mut settings = settings.clone();
    settings.max_step = Some(settings.max_step.map_or(limit, |h| h.min(limit)));
    if let Method::Rk4 { step } = settings.method {
        settings.method = Method::Rk4 { step: step.min(limit) };
    }
    let cycles = units::to_rate(pulses.omega0) * pulses.duration / (2.0 * std::f64::consts::PI);
    if cycles > 1e5 {
        log::warn!("bare propagation spans {cycles:.3e} optical cycles; expect a long run");
    }
    // E(t)·d in rad/ns per (V/cm · e·nm)
    let to_rate = DIPOLE_FIELD_TO_UEV / units::HBAR;
    let d0: Vec<Complex64> = spectrum.excited_levels.iter().map(|l| l.dipole_to_0 * to_rate).collect();
    let d1: Vec<Complex64> = spectrum.excited_levels.iter().map(|l| l.dipole_to_1 * to_rate).collect();
    let w0k: Vec<f64> = (0..n).map(|k| units::to_rate(spectrum.omega_0k(k))).collect();
    let w1k: Vec<f64> = (0..n).map(|k| units::to_rate(spectrum.omega_1k(k))).collect();
    let pulses_c = pulses.clone();
    let rhs = move |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let field = drive::field_at(&pulses_c, t).field;
        let mut s0 = Complex64::default();
        let mut s1 = Complex64::default();
        for k in 0..n {
            let e0 = Complex64::from_polar(1.0, -w0k[k] * t);
            let e1 = Complex64::from_polar(1.0, -w1k[k] * t);
            s0 += d0[k] * y[2 + k] * e0;
            s1 += d1[k] * y[2 + k] * e1;
            let sk = (d0[k].conj() * y[0] * e0.conj() + d1[k].conj() * y[1] * e1.conj()) * field;
            dy[2 + k] = Complex64::new(sk.im, -sk.re);
        }
        s0 *= field;
        s1 *= field;
        dy[0] = Complex64::new(s0.im, -s0.re);
        dy[1] = Complex64::new(s1.im, -s1.re);
    };
    let sol = integrator::integrate(rhs, pulses.t_start, pulses.t_end(), &psi0.amplitudes, &settings)?;
    Ok(finish(Frame::Bare, sol))
}

/// Qubit-subspace block of the propagator in the interaction picture:
/// column j holds (c₀, c₁)(T) for the initial state |j⟩.
pub fn qubit_block(
    spectrum: &SpectrumModel,
    pulses: &PulsePair,
    couplings: &CouplingSet,
    settings: &IntegratorSettings,
) -> Result<crate::linalg::Mat2> {
    let n = spectrum.len();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let col = |alpha, beta| -> Result<(Complex64, Complex64)> {
        let psi = StateVector::qubit(alpha, beta, n, Frame::Rwa);
        let tr = propagate_rwa(spectrum, pulses, couplings, &psi, settings)?;
        let f = tr.final_state();
        Ok((f.amplitudes[0], f.amplitudes[1]))
    };
    let (a00, a10) = col(one, zero)?;
    let (a01, a11) = col(zero, one)?;
    Ok(crate::linalg::Mat2::new(a00, a01, a10, a11))
}

/// Lab-frame qubit block diag(e^{−iε_n T}) · [`qubit_block`] · diag(e^{iε_n t₀}).
pub fn lab_frame_block(
    spectrum: &SpectrumModel,
    pulses: &PulsePair,
    couplings: &CouplingSet,
    settings: &IntegratorSettings,
) -> Result<crate::linalg::Mat2> {
    let mut u = qubit_block(spectrum, pulses, couplings, settings)?;
    let eps = [spectrum.epsilon0, spectrum.epsilon1];
    for i in 0..2 {
        for j in 0..2 {
            let phase = units::to_rate(eps[j]) * pulses.t_start - units::to_rate(eps[i]) * pulses.t_end();
            u[(i, j)] *= Complex64::from_polar(1.0, phase);
        }
    }
    Ok(u)
}
