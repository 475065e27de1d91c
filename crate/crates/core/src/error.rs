//! Error types shared across the library.

use crate::fock::Mode;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A mode space failed validation (Fock truncation below 2, missing spin
    /// factor, ...).
    #[error("invalid mode space: {0}")]
    InvalidSpace(String),

    /// Two objects live on different mode spaces.
    #[error("mode-space mismatch: {0}")]
    SpaceMismatch(String),

    /// A physical parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A drive of the wrong kind was passed to a builder.
    #[error("wrong drive kind: {0}")]
    WrongDriveKind(String),

    /// Population in the top two Fock levels of a mode exceeds the leakage
    /// bound, so the truncation cannot be trusted.
    #[error("truncation leakage in mode {mode:?}: top-level population {population:.3e} exceeds {limit:.0e}")]
    TruncationLeakage {
        mode: Mode,
        population: f64,
        limit: f64,
    },

    /// The drive frequency sits on (or too close to) the axial resonance pole
    /// of the effective couplings.
    #[error("drive frequency too close to the axial resonance pole: |phi^2 - omega_z^2| = {gap:.3e} < {bound:.3e} rad^2/s^2")]
    ResonancePole { gap: f64, bound: f64 },

    /// Time averaging is undefined for a term oscillating at zero frequency.
    #[error("ill-defined time average: {0}")]
    IllDefinedAverage(String),

    /// The propagator exceeded its norm-drift budget or could not take a step.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// An iterative solver ran out of iterations.
    #[error("solver did not converge: {0}")]
    ConvergenceFailure(String),

    /// Ion positions coincide; the Coulomb matrices are singular.
    #[error("singular ion configuration: {0}")]
    SingularConfiguration(String),

    /// A normal-mode eigenvalue is non-positive; the configuration is
    /// unstable in the harmonic approximation.
    #[error("unstable normal mode: {0}")]
    Instability(String),
}
