use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("step size underflow at tau = {t} (h = {h:e}){detail}")]
    StepUnderflow { t: f64, h: f64, detail: String },

    #[error("maximum number of steps ({steps}) exceeded at tau = {t}")]
    MaxSteps { t: f64, steps: usize },

    #[error("state is not stationary: |rhs| = {residual:e}")]
    NotStationary { residual: f64 },

    #[error("no stationary photon amplitude on this branch (exact cavity resonance)")]
    Resonance,

    #[error("reduced model singular at z = {z}, theta = {theta}: |delta_c_eff| = {delta:e}")]
    Singular { z: f64, theta: f64, delta: f64 },

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("photon cutoff too small: population {leak:e} at the cutoff exceeds {threshold:e}")]
    CutoffLeak { leak: f64, threshold: f64 },

    #[error("Hilbert space dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("relative energy drift {drift:e} exceeds the bound {bound:e}")]
    EnergyDrift { drift: f64, bound: f64 },

    #[error("Krylov propagator failed to converge at tau = {0}")]
    Propagator(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
