//! Physical constants (CODATA 2018) and unit-conversion factors.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS: f64 = 1.66053906660e-27;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Yoctonewtons per newton.
pub const YN_PER_N: f64 = 1e24;
