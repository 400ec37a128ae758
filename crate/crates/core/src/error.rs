use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("energy hierarchy violated: omega_exc = {omega_exc} µeV must exceed delta = {delta} µeV")]
    Hierarchy { omega_exc: f64, delta: f64 },

    #[error("second pulse frequency {omega1} µeV is not positive (omega0 = {omega0}, delta = {delta})")]
    NonPositiveFrequency { omega0: f64, omega1: f64, delta: f64 },

    #[error("pulses violate two-photon resonance: omega0 - omega1 = {difference} µeV, delta = {delta} µeV")]
    TwoPhotonMismatch { difference: f64, delta: f64 },

    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("detuning of excited level {level} is zero; adiabatic elimination is undefined")]
    ZeroDetuning { level: usize },

    #[error("integrator step size underflow at t = {t} ns (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("integrator exceeded {limit} steps before reaching t = {t_end} ns")]
    StepLimit { limit: usize, t_end: f64 },

    #[error("norm drift {drift:e} at t = {t} ns exceeds limit {limit:e}")]
    NormDrift { t: f64, drift: f64, limit: f64 },

    #[error("state is not normalized: norm² = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("matrix is not unitary: ||U†U - I|| = {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("no branch solution within k <= {max_k}, l <= {max_l}")]
    NoBranchSolution { max_k: u32, max_l: u32 },

    #[error("mixing angle {target} rad is unreachable: {reason}")]
    UnreachableTheta { target: f64, reason: String },

    #[error("pulses carry no qubit coupling (Lambda_2 = 0)")]
    MissingCoupling,

    #[error("pulse envelopes do not overlap (max f0·f1 = {overlap:e})")]
    ZeroOverlap { overlap: f64 },
}
