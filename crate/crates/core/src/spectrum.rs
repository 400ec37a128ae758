//! Stationary level structure of the double-donor system.
//!
//! Two localized qubit states |0⟩ (donor A) and |1⟩ (donor B) sit below a
//! manifold of excited transport states delocalized over both donors. The
//! manifold is synthetic: a single level, a uniform ladder, a ladder of
//! symmetric/antisymmetric doublets, or an explicit list.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One excited (transport) level with its dipole couplings to the qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitedLevel {
    /// ε_k in µeV.
    pub energy: f64,
    /// d_0k along the interdonor axis, e·nm.
    pub dipole_to_0: Complex64,
    /// d_1k along the interdonor axis, e·nm.
    pub dipole_to_1: Complex64,
}

impl ExcitedLevel {
    pub fn new(energy: f64, dipole_to_0: Complex64, dipole_to_1: Complex64) -> Self {
        Self { energy, dipole_to_0, dipole_to_1 }
    }

    /// Whether the level couples to at least one qubit state.
    pub fn is_transport(&self) -> bool {
        self.dipole_to_0.norm() > 0.0 || self.dipole_to_1.norm() > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumModel {
    pub epsilon0: f64,
    pub epsilon1: f64,
    /// Sorted ascending in energy.
    pub excited_levels: Vec<ExcitedLevel>,
    /// Effective Bohr radius a_B in nm.
    pub bohr_radius: f64,
    /// Interdonor distance R in nm.
    pub donor_separation: f64,
}

impl SpectrumModel {
    /// Builds a model from explicit levels, sorting them and checking the
    /// ordering invariants.
    pub fn new(
        epsilon0: f64,
        epsilon1: f64,
        mut excited_levels: Vec<ExcitedLevel>,
        bohr_radius: f64,
        donor_separation: f64,
    ) -> Result<Self> {
        if !(epsilon1 >= epsilon0) {
            return Err(Error::InvalidConfig(format!("epsilon1 ({epsilon1}) must be >= epsilon0 ({epsilon0})")));
        }
        if excited_levels.is_empty() {
            return Err(Error::InvalidConfig("excited manifold is empty".into()));
        }
        if excited_levels.iter().any(|l| !l.energy.is_finite()) {
            return Err(Error::InvalidConfig("non-finite excited level energy".into()));
        }
        excited_levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let model = Self { epsilon0, epsilon1, excited_levels, bohr_radius, donor_separation };
        let omega_exc = model.omega_exc();
        if omega_exc <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lowest excited level must lie above epsilon1 (gap {omega_exc} µeV)"
            )));
        }
        if omega_exc <= model.delta() {
            return Err(Error::Hierarchy { omega_exc, delta: model.delta() });
        }
        Ok(model)
    }

    /// Δ = ε_1 − ε_0.
    pub fn delta(&self) -> f64 {
        self.epsilon1 - self.epsilon0
    }

    /// ω_exc = min_k ε_k − ε_1.
    pub fn omega_exc(&self) -> f64 {
        self.excited_levels[0].energy - self.epsilon1
    }

    /// max |ε_m − ε_n| over the manifold.
    pub fn manifold_spread(&self) -> f64 {
        let first = self.excited_levels.first().map_or(0.0, |l| l.energy);
        let last = self.excited_levels.last().map_or(0.0, |l| l.energy);
        last - first
    }

    pub fn len(&self) -> usize {
        self.excited_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excited_levels.is_empty()
    }

    /// Transition energy ω_0k = ε_k − ε_0.
    pub fn omega_0k(&self, k: usize) -> f64 {
        self.excited_levels[k].energy - self.epsilon0
    }

    /// Transition energy ω_1k = ε_k − ε_1.
    pub fn omega_1k(&self, k: usize) -> f64 {
        self.excited_levels[k].energy - self.epsilon1
    }
}

/// Layout of the synthetic transport manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldShape {
    /// One transport level at ε_1 + ω_exc.
    Single,
    /// `n_levels` equally spaced levels.
    Uniform { spacing: f64 },
    /// Pairs of symmetric (d, d) and antisymmetric (d, −d) levels split by
    /// `splitting`, with consecutive pairs `spacing` apart.
    Doublet { splitting: f64, spacing: f64 },
    /// Levels given directly.
    Explicit { levels: Vec<ExcitedLevel> },
}

fn default_one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn default_bohr() -> f64 {
    3.0
}

fn default_separation() -> f64 {
    20.0
}

fn default_levels() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub epsilon0: f64,
    /// Δ in µeV.
    #[serde(default)]
    pub delta: f64,
    /// Gap between |1⟩ and the lowest excited level, µeV.
    pub omega_exc: f64,
    #[serde(default = "default_levels")]
    pub n_levels: usize,
    pub manifold: ManifoldShape,
    /// d_0k for generated levels (e·nm).
    #[serde(default = "default_one")]
    pub dipole0: Complex64,
    /// d_1k for generated levels (e·nm).
    #[serde(default = "default_one")]
    pub dipole1: Complex64,
    /// Per-level dipole scale: level j gets `dipole_decay^j`.
    #[serde(default)]
    pub dipole_decay: Option<f64>,
    /// Relative random jitter of level spacings, drawn uniformly in ±jitter/2.
    #[serde(default)]
    pub spacing_jitter: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bohr")]
    pub bohr_radius: f64,
    #[serde(default = "default_separation")]
    pub donor_separation: f64,
}

impl SpectrumConfig {
    /// Minimal config: a single transport level.
    pub fn single(delta: f64, omega_exc: f64, dipole0: Complex64, dipole1: Complex64) -> Self {
        Self {
            epsilon0: 0.0,
            delta,
            omega_exc,
            n_levels: 1,
            manifold: ManifoldShape::Single,
            dipole0,
            dipole1,
            dipole_decay: None,
            spacing_jitter: None,
            seed: 0,
            bohr_radius: default_bohr(),
            donor_separation: default_separation(),
        }
    }
}

/// Generates the spectrum described by `config`.
pub fn build_spectrum(config: &SpectrumConfig) -> Result<SpectrumModel> {
    let bad = |msg: String| Err(Error::InvalidConfig(msg));
    if !(config.delta >= 0.0) {
        return bad(format!("delta must be >= 0, got {}", config.delta));
    }
    if !(config.omega_exc > 0.0) {
        return bad(format!("omega_exc must be > 0, got {}", config.omega_exc));
    }
    if config.omega_exc <= config.delta {
        return Err(Error::Hierarchy { omega_exc: config.omega_exc, delta: config.delta });
    }
    let epsilon1 = config.epsilon0 + config.delta;
    let base = epsilon1 + config.omega_exc;

    let levels = match &config.manifold {
        ManifoldShape::Explicit { levels } => {
            if levels.iter().any(|l| !l.is_transport()) {
                return bad("explicit level without any dipole coupling".into());
            }
            levels.clone()
        }
        shape => {
            if config.n_levels == 0 {
                return bad("n_levels must be >= 1".into());
            }
            if config.dipole0.norm() <= 0.0 || config.dipole1.norm() <= 0.0 {
                return bad("generated manifolds need nonzero dipole0 and dipole1".into());
            }
            let decay = config.dipole_decay.unwrap_or(1.0);
            if !(decay > 0.0) {
                return bad(format!("dipole_decay must be > 0, got {decay}"));
            }
            let jitter = config.spacing_jitter.unwrap_or(0.0);
            if !(0.0..1.0).contains(&jitter) {
                return bad(format!("spacing_jitter must be in [0, 1), got {jitter}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut jittered = |spacing: f64| {
                if jitter > 0.0 {
                    spacing * (1.0 + jitter * (rng.gen::<f64>() - 0.5))
                } else {
                    spacing
                }
            };
            let d0 = config.dipole0;
            let d1 = config.dipole1;
            match shape {
                ManifoldShape::Single => {
                    if config.n_levels != 1 {
                        return bad("single manifold requires n_levels = 1".into());
                    }
                    vec![ExcitedLevel::new(base, d0, d1)]
                }
                ManifoldShape::Uniform { spacing } => {
                    if !(*spacing > 0.0) {
                        return bad(format!("spacing must be > 0, got {spacing}"));
                    }
                    let mut energy = base;
                    (0..config.n_levels)
                        .map(|j| {
                            if j > 0 {
                                energy += jittered(*spacing);
                            }
                            let scale = decay.powi(j as i32);
                            ExcitedLevel::new(energy, d0 * scale, d1 * scale)
                        })
                        .collect()
                }
                ManifoldShape::Doublet { splitting, spacing } => {
                    if !(*splitting > 0.0) || !(*spacing > 0.0) {
                        return bad("doublet splitting and spacing must be > 0".into());
                    }
                    let mut pair_base = base;
                    (0..config.n_levels)
                        .map(|j| {
                            let pair = j / 2;
                            if j > 0 && j % 2 == 0 {
                                pair_base += jittered(*spacing);
                            }
                            let scale = decay.powi(pair as i32);
                            if j % 2 == 0 {
                                ExcitedLevel::new(pair_base, d0 * scale, d1 * scale)
                            } else {
                                ExcitedLevel::new(pair_base + splitting, d0 * scale, -d1 * scale)
                            }
                        })
                        .collect()
                }
                ManifoldShape::Explicit { .. } => unreachable!(),
            }
        }
    };

    let model = SpectrumModel::new(config.epsilon0, epsilon1, levels, config.bohr_radius, config.donor_separation)?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub delta: f64,
    pub omega_exc: f64,
    pub max_level_spread: f64,
    /// ω_exc > Δ.
    pub exceeds_delta: bool,
    /// ω_exc > max Δ_mn.
    pub exceeds_spread: bool,
}

impl HierarchyReport {
    pub fn passes(&self) -> bool {
        self.exceeds_delta && self.exceeds_spread
    }
}

/// Checks that the excitation gap dominates the other energy scales.
pub fn validate_hierarchy(model: &SpectrumModel) -> HierarchyReport {
    let delta = model.delta();
    let omega_exc = model.omega_exc();
    let spread = model.manifold_spread();
    HierarchyReport {
        delta,
        omega_exc,
        max_level_spread: spread,
        exceeds_delta: omega_exc > delta,
        exceeds_spread: omega_exc > spread,
    }
}
