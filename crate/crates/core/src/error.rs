use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The linear chain is not a valid equilibrium at this transverse
    /// frequency (negative radicand in the transverse dispersion).
    #[error("soft-mode instability at k = {k}: omega^2 = {omega_sq}")]
    SoftModeInstability { k: f64, omega_sq: f64 },

    #[error("wrong phase: {0}")]
    WrongPhase(String),

    #[error("unstable equilibrium: Hessian eigenvalue {eigenvalue} below -1e-8")]
    UnstableEquilibrium { eigenvalue: f64 },

    /// A coupled mode has zero frequency, so |alpha|^2 = eta^2 s1^2 / (2 omega)
    /// diverges.
    #[error("soft-mode divergence: coupled mode with zero frequency (s1 = {s1})")]
    SoftModeDivergence { s1: f64 },

    #[error("Fock cutoff {n_max} insufficient for mode omega = {omega}: thermal tail {tail:e}")]
    CutoffInsufficient { omega: f64, n_max: usize, tail: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("resource limit: {0}")]
    ResourceLimit(String),
}
