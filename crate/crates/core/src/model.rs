//! Trap/drive parameter model and Hamiltonian assembly.
//!
//! The taper couples the axial (z) and radial (x) modes of a single ion with
//! strength λ = r_{0z} ω_x / (2 l₀), where r_{0z} is the axial ground-state
//! length and l₀ the taper length. An oscillating axial force of amplitude
//! F_z drives the z mode at frequency Φ with rate Ω = r_{0z} F_z / ħ; a
//! bichromatic laser drive replaces Ω sin(Φt) by g sin(μt) σ(φ₊) and adds a
//! spin factor. Every Hamiltonian here is stored as H/ħ in rad/s, with the
//! zero-point energy dropped.
//!
//! At the vibrational resonance (drive frequency = 2ω_x) the time-averaged
//! dynamics of the radial mode is a squeezed Kerr oscillator,
//!
//! ```text
//! H_eff/ħ = -K n̂²_x - ω n̂_x - ε (a†²_x + a²_x) - χ (n̂_z + 2 n̂_z n̂_x),
//! K = λ²(4/ω_z - 2ω_z/(Φ² - ω_z²)),   ω = λ²((4Φ - 2ω_z)/(Φ² - ω_z²) + 4/ω_z),
//! ε = ΩλΦ/(Φ² - ω_z²),                χ = 4λ²Φ/(Φ² - ω_z²),
//! ```
//!
//! with the squeeze term picking up a σ_x factor for the spin-dependent
//! drive (Φ → μ, Ω → g).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::analytics::{self, HarmonicTerm};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::fock::{
    build_ladder, build_number, build_spin, Mode, ModeSpace, OperatorMatrix, SpinAxis,
};

/// Guard levels used when the effective Hamiltonian is rebuilt from
/// commutators, so truncation artifacts never reach the requested space.
const GUARD_LEVELS: usize = 2;

/// Relative width of the exclusion window around the axial resonance pole
/// Φ² = ω_z² of the effective couplings.
pub const POLE_GUARD: f64 = 1e-6;

/// Default pass/fail threshold for the time-averaging validity ratios.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.1;

/// Static trap and ion parameters. Frequencies are angular (rad/s); the
/// taper length `l0` may be `f64::INFINITY` to switch the taper off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    /// Taper length, m.
    pub l0: f64,
    /// Ion mass, kg.
    pub mass: f64,
    /// Ion charge, C.
    pub charge: f64,
}

impl TrapConfig {
    pub fn new(
        omega_x: f64,
        omega_y: f64,
        omega_z: f64,
        l0: f64,
        mass: f64,
        charge: f64,
    ) -> Result<Self> {
        let cfg = Self {
            omega_x,
            omega_y,
            omega_z,
            l0,
            mass,
            charge,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builder from laboratory units: frequencies as ω/2π in Hz, taper
    /// length in mm, mass in atomic mass units, charge in elementary charges.
    pub fn from_lab_units(
        freq_x_hz: f64,
        freq_y_hz: f64,
        freq_z_hz: f64,
        l0_mm: f64,
        mass_amu: f64,
        charge_e: f64,
    ) -> Result<Self> {
        let tau = std::f64::consts::TAU;
        Self::new(
            tau * freq_x_hz,
            tau * freq_y_hz,
            tau * freq_z_hz,
            l0_mm * 1e-3,
            mass_amu * crate::constants::ATOMIC_MASS,
            charge_e * crate::constants::ELEMENTARY_CHARGE,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_x", self.omega_x),
            ("omega_y", self.omega_y),
            ("omega_z", self.omega_z),
            ("l0", self.l0),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.charge.is_finite() || self.charge == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "charge must be finite and nonzero, got {}",
                self.charge
            )));
        }
        Ok(())
    }

    fn omega(&self, mode: Mode) -> f64 {
        match mode {
            Mode::X => self.omega_x,
            Mode::Z => self.omega_z,
        }
    }

    /// Ground-state length r_{0k} = √(ħ / 2 m ω_k), m.
    pub fn ground_state_length(&self, mode: Mode) -> f64 {
        (HBAR / (2.0 * self.mass * self.omega(mode))).sqrt()
    }

    /// Taper-induced mode coupling λ = r_{0z} ω_x / (2 l₀), rad/s.
    pub fn nonlinear_coupling(&self) -> f64 {
        self.ground_state_length(Mode::Z) * self.omega_x / (2.0 * self.l0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    /// Classical oscillating electric field along the trap axis.
    Classical,
    /// Bichromatic spin-dependent laser drive along the trap axis.
    Spin,
}

/// Axial drive parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub kind: DriveKind,
    /// Classical: force amplitude F_z in N. Spin: coupling g = ηΩ_L in rad/s.
    pub amplitude: f64,
    /// Drive frequency Φ (classical) or beat note μ (spin), rad/s.
    pub frequency: f64,
    /// Classical drive phase φ.
    pub phase: f64,
    /// Spin phase φ₊ of σ(φ₊) = σ₊e^{iφ₊} + σ₋e^{-iφ₊}.
    pub spin_phase_plus: f64,
    /// Motional phase φ₋ of the spin drive.
    pub spin_phase_minus: f64,
}

impl DriveConfig {
    /// Classical force drive with the standard phase φ = π/2.
    pub fn classical(force: f64, frequency: f64) -> Result<Self> {
        let cfg = Self {
            kind: DriveKind::Classical,
            amplitude: force,
            frequency,
            phase: FRAC_PI_2,
            spin_phase_plus: 0.0,
            spin_phase_minus: FRAC_PI_2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Spin-dependent drive with the standard phases φ₊ = 0, φ₋ = π/2.
    pub fn spin(coupling: f64, frequency: f64) -> Result<Self> {
        let cfg = Self {
            kind: DriveKind::Spin,
            amplitude: coupling,
            frequency,
            phase: FRAC_PI_2,
            spin_phase_plus: 0.0,
            spin_phase_minus: FRAC_PI_2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_spin_phases(mut self, plus: f64, minus: f64) -> Self {
        self.spin_phase_plus = plus;
        self.spin_phase_minus = minus;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.frequency > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive frequency must be positive, got {}",
                self.frequency
            )));
        }
        Ok(())
    }

    /// Drive rate in rad/s: Ω = r_{0z} F_z / ħ for the classical drive, g for
    /// the spin drive.
    pub fn drive_rate(&self, trap: &TrapConfig) -> f64 {
        match self.kind {
            DriveKind::Classical => trap.ground_state_length(Mode::Z) * self.amplitude / HBAR,
            DriveKind::Spin => self.amplitude,
        }
    }

    /// Motional phase at the drive sidebands: φ for the classical drive, φ₋
    /// for the spin drive.
    fn motional_phase(&self) -> f64 {
        match self.kind {
            DriveKind::Classical => self.phase,
            DriveKind::Spin => self.spin_phase_minus,
        }
    }

    fn uses_standard_phases(&self) -> bool {
        match self.kind {
            DriveKind::Classical => (self.phase - FRAC_PI_2).abs() < 1e-12,
            DriveKind::Spin => {
                self.spin_phase_plus.abs() < 1e-12
                    && (self.spin_phase_minus - FRAC_PI_2).abs() < 1e-12
            }
        }
    }
}

/// Derived couplings of the time-averaged squeezed-Kerr dynamics, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCouplings {
    /// Kerr coefficient K.
    pub kerr: f64,
    /// Radial frequency shift ω.
    pub omega_eff: f64,
    /// Squeezing rate ε.
    pub epsilon: f64,
    /// Residual cross-Kerr prefactor χ = 4λ²Φ/(Φ² - ω_z²) multiplying
    /// n̂_z + 2 n̂_z n̂_x.
    pub cross_kerr: f64,
}

/// Closed-form effective couplings. Errors if the drive frequency sits
/// within the [`POLE_GUARD`] window of the axial resonance pole.
pub fn effective_couplings(trap: &TrapConfig, drive: &DriveConfig) -> Result<EffectiveCouplings> {
    trap.validate()?;
    drive.validate()?;
    let lambda = trap.nonlinear_coupling();
    let wz = trap.omega_z;
    let phi = drive.frequency;
    let denom = phi * phi - wz * wz;
    let bound = POLE_GUARD * phi * phi;
    if denom.abs() < bound {
        return Err(Error::ResonancePole {
            gap: denom.abs(),
            bound,
        });
    }
    let rate = drive.drive_rate(trap);
    Ok(EffectiveCouplings {
        kerr: lambda * lambda * (4.0 / wz - 2.0 * wz / denom),
        omega_eff: lambda * lambda * ((4.0 * phi - 2.0 * wz) / denom + 4.0 / wz),
        epsilon: rate * lambda * phi / denom,
        cross_kerr: 4.0 * lambda * lambda * phi / denom,
    })
}

/// (a†_z + a_z)(a†_x + a_x)², the taper coupling operator.
fn taper_coupling_op(space: ModeSpace) -> OperatorMatrix {
    let ax = build_ladder(space, Mode::X);
    let az = build_ladder(space, Mode::Z);
    let pos_x = &ax.adjoint() + &ax;
    let pos_z = &az.adjoint() + &az;
    &pos_z * &(&pos_x * &pos_x)
}

/// σ(φ₊) = σ₊ e^{iφ₊} + σ₋ e^{-iφ₊} = cos φ₊ σ_x − sin φ₊ σ_y.
fn spin_quadrature(space: ModeSpace, phase_plus: f64) -> Result<OperatorMatrix> {
    let sx = build_spin(space, SpinAxis::X)?;
    let sy = build_spin(space, SpinAxis::Y)?;
    Ok(&sx.scale(Complex64::new(phase_plus.cos(), 0.0))
        - &sy.scale(Complex64::new(phase_plus.sin(), 0.0)))
}

/// Lab-frame Hamiltonian H/ħ at time `t`:
///
/// ```text
/// ω_x n̂_x + ω_z n̂_z + λ(a†_z + a_z)(a†_x + a_x)²
///   + Ω sin(Φt)(a†_z e^{iφ} + a_z e^{-iφ}).
/// ```
///
/// Classical drives only; a spin factor in `space` is left idle.
pub fn lab_hamiltonian(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
    t: f64,
) -> Result<OperatorMatrix> {
    let (static_part, terms) = lab_terms(trap, drive, space)?;
    let mut h = static_part;
    if let Some(drive_term) = terms.first() {
        let phase = Complex64::from_polar(1.0, drive_term.freq * t);
        h = &h + &drive_term.op.scale(phase);
        h = &h + &drive_term.op.adjoint().scale(phase.conj());
    }
    Ok(h)
}

/// Static part and harmonic drive term of the lab-frame Hamiltonian, for
/// propagation. `Ω sin(Φt) D` is carried as the single harmonic term
/// (D/2i) e^{iΦt} + h.c. with D = Ω(a†_z e^{iφ} + a_z e^{-iφ}).
pub fn lab_terms(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
) -> Result<(OperatorMatrix, Vec<HarmonicTerm>)> {
    trap.validate()?;
    drive.validate()?;
    if drive.kind != DriveKind::Classical {
        return Err(Error::WrongDriveKind(
            "the lab-frame Hamiltonian is defined for the classical drive".into(),
        ));
    }
    let nx = build_number(space, Mode::X);
    let nz = build_number(space, Mode::Z);
    let lambda = trap.nonlinear_coupling();
    let mut static_part = &nx.scale(Complex64::new(trap.omega_x, 0.0))
        + &nz.scale(Complex64::new(trap.omega_z, 0.0));
    if lambda != 0.0 {
        static_part = &static_part + &taper_coupling_op(space).scale(Complex64::new(lambda, 0.0));
    }

    let rate = drive.drive_rate(trap);
    let mut terms = Vec::new();
    if rate != 0.0 {
        let az = build_ladder(space, Mode::Z);
        let phase = Complex64::from_polar(1.0, drive.phase);
        let displacement = &az.adjoint().scale(phase) + &az.scale(phase.conj());
        let amp = Complex64::new(rate, 0.0) / (2.0 * Complex64::i());
        terms.push(HarmonicTerm::new(displacement.scale(amp), drive.frequency));
    }
    Ok((static_part, terms))
}

/// Interaction-picture Hamiltonian H_R/ħ at time `t` (rotating frame of
/// ω_x n̂_x + ω_z n̂_z), built from the explicit operator expression:
///
/// ```text
/// λ[(e^{i(2ω_x+ω_z)t} a†²_x a†_z + h.c.) + (e^{i(2ω_x-ω_z)t} a†²_x a_z + h.c.)]
///   + λ(a†_z e^{iω_z t} + a_z e^{-iω_z t})(2n̂_x + 1)
///   + Ω sin(Φt)(a†_z e^{i(ω_z t + φ)} + h.c.)          [classical]
///   + g sin(μt) σ(φ₊)(a†_z e^{i(ω_z t + φ₋)} + h.c.)    [spin]
/// ```
pub fn interaction_hamiltonian(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
    t: f64,
) -> Result<OperatorMatrix> {
    trap.validate()?;
    drive.validate()?;
    if drive.kind == DriveKind::Spin && !space.has_spin() {
        return Err(Error::InvalidSpace(
            "spin drive needs a space with a spin factor".into(),
        ));
    }
    let ax = build_ladder(space, Mode::X);
    let az = build_ladder(space, Mode::Z);
    let adx2 = &ax.adjoint() * &ax.adjoint();
    let lambda = trap.nonlinear_coupling();
    let wx = trap.omega_x;
    let wz = trap.omega_z;

    let mut h = OperatorMatrix::zeros(space);
    if lambda != 0.0 {
        let lam = Complex64::new(lambda, 0.0);
        // a†²_x a†_z branch
        let b1 = (&adx2 * &az.adjoint())
            .scale(lam * Complex64::from_polar(1.0, (2.0 * wx + wz) * t));
        // a†²_x a_z branch
        let b2 = (&adx2 * &az).scale(lam * Complex64::from_polar(1.0, (2.0 * wx - wz) * t));
        h = &h + &(&b1 + &b1.adjoint());
        h = &h + &(&b2 + &b2.adjoint());
        // displacement branch (2n̂_x + 1)(a†_z e^{iω_z t} + h.c.)
        let two_nx_plus_1 =
            &build_number(space, Mode::X).scale(Complex64::new(2.0, 0.0)) + &OperatorMatrix::identity(space);
        let disp = az
            .adjoint()
            .scale(lam * Complex64::from_polar(1.0, wz * t));
        let disp = &disp + &disp.adjoint();
        h = &h + &(&two_nx_plus_1 * &disp);
    }

    let rate = drive.drive_rate(trap);
    if rate != 0.0 {
        let sin_drive = (drive.frequency * t).sin();
        let rot = Complex64::from_polar(1.0, wz * t + drive.motional_phase());
        let disp = &az.adjoint().scale(rot) + &az.scale(rot.conj());
        let driven = disp.scale(Complex64::new(rate * sin_drive, 0.0));
        match drive.kind {
            DriveKind::Classical => {
                h = &h + &driven;
            }
            DriveKind::Spin => {
                let sigma = spin_quadrature(space, drive.spin_phase_plus)?;
                h = &h + &(&driven * &sigma);
            }
        }
    }
    Ok(h)
}

/// Harmonic-term decomposition of the interaction-picture Hamiltonian:
/// H_R(t) = Σ_m (ĥ_m e^{iω_m t} + h.c.). Zero-amplitude terms are omitted.
pub fn interaction_terms(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
) -> Result<Vec<HarmonicTerm>> {
    trap.validate()?;
    drive.validate()?;
    if drive.kind == DriveKind::Spin && !space.has_spin() {
        return Err(Error::InvalidSpace(
            "spin drive needs a space with a spin factor".into(),
        ));
    }
    let ax = build_ladder(space, Mode::X);
    let az = build_ladder(space, Mode::Z);
    let adx2 = &ax.adjoint() * &ax.adjoint();
    let lambda = trap.nonlinear_coupling();
    let wx = trap.omega_x;
    let wz = trap.omega_z;

    let mut terms = Vec::new();
    if lambda != 0.0 {
        let lam = Complex64::new(lambda, 0.0);
        terms.push(HarmonicTerm::new(
            (&adx2 * &az.adjoint()).scale(lam),
            2.0 * wx + wz,
        ));
        terms.push(HarmonicTerm::new((&adx2 * &az).scale(lam), 2.0 * wx - wz));
        let two_nx_plus_1 = &build_number(space, Mode::X).scale(Complex64::new(2.0, 0.0))
            + &OperatorMatrix::identity(space);
        terms.push(HarmonicTerm::new(
            (&two_nx_plus_1 * &az.adjoint()).scale(lam),
            wz,
        ));
    }
    let rate = drive.drive_rate(trap);
    if rate != 0.0 {
        // Ω sin(Φt)(a†_z e^{i(ω_z t+φ)} + h.c.) regrouped by sideband:
        //   (Ω e^{iφ}/2i) a†_z e^{i(Φ+ω_z)t} + (Ω e^{-iφ}/2i) a_z e^{i(Φ-ω_z)t} + h.c.
        let amp = Complex64::new(rate, 0.0) / (2.0 * Complex64::i());
        let phase = Complex64::from_polar(1.0, drive.motional_phase());
        let (upper, lower) = match drive.kind {
            DriveKind::Classical => (
                az.adjoint().scale(amp * phase),
                az.scale(amp * phase.conj()),
            ),
            DriveKind::Spin => {
                let sigma = spin_quadrature(space, drive.spin_phase_plus)?;
                (
                    (&az.adjoint() * &sigma).scale(amp * phase),
                    (&az * &sigma).scale(amp * phase.conj()),
                )
            }
        };
        terms.push(HarmonicTerm::new(upper, drive.frequency + wz));
        terms.push(HarmonicTerm::new(lower, drive.frequency - wz));
    }
    Ok(terms)
}

/// Closed-form time-averaged Hamiltonian H_eff/ħ (see module docs). Warns
/// when the drive is off the vibrational resonance (frequency ≠ 2ω_x) or
/// uses non-standard phases, where the closed form stops being the true time
/// average.
pub fn effective_hamiltonian(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
) -> Result<OperatorMatrix> {
    if drive.kind == DriveKind::Spin && !space.has_spin() {
        return Err(Error::InvalidSpace(
            "spin drive needs a space with a spin factor".into(),
        ));
    }
    let c = effective_couplings(trap, drive)?;
    let detuning = drive.frequency - 2.0 * trap.omega_x;
    if detuning.abs() > 1e-9 * trap.omega_x {
        log::warn!(
            "effective Hamiltonian built off resonance: drive frequency differs from 2*omega_x by {detuning:.3e} rad/s"
        );
    }
    if !drive.uses_standard_phases() {
        log::warn!(
            "effective Hamiltonian assumes the standard drive phases; the closed-form squeeze quadrature does not track the configured phase"
        );
    }

    let ax = build_ladder(space, Mode::X);
    let nx = build_number(space, Mode::X);
    let nz = build_number(space, Mode::Z);
    let mut h = (&nx * &nx).scale(Complex64::new(-c.kerr, 0.0));
    h = &h + &nx.scale(Complex64::new(-c.omega_eff, 0.0));
    let squeeze = &(&ax.adjoint() * &ax.adjoint()) + &(&ax * &ax);
    let squeeze = match drive.kind {
        DriveKind::Classical => squeeze,
        DriveKind::Spin => &squeeze * &spin_quadrature(space, drive.spin_phase_plus)?,
    };
    h = &h + &squeeze.scale(Complex64::new(-c.epsilon, 0.0));
    let residual = &nz + &(&nz * &nx).scale(Complex64::new(2.0, 0.0));
    h = &h + &residual.scale(Complex64::new(-c.cross_kerr, 0.0));
    Ok(h)
}

/// Effective Hamiltonian rebuilt through the commutator time average of the
/// interaction-picture term list — the independent route to the same
/// operator as [`effective_hamiltonian`].
///
/// The term list is built with guard levels, averaged, shifted so the double
/// ground state has zero energy, and restricted back to `space`.
pub fn time_averaged_hamiltonian(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
) -> Result<OperatorMatrix> {
    let padded = space.padded(GUARD_LEVELS);
    let terms = interaction_terms(trap, drive, padded)?;
    let averaged = analytics::time_average(&terms)?;
    let vacuum_energy = averaged.matrix()[(0, 0)];
    let shifted = &averaged - &OperatorMatrix::identity(padded).scale(vacuum_energy);
    shifted.restricted_to(&space)
}

/// Dimensionless ratios controlling the validity of the time averaging,
/// with a pass/fail verdict against `threshold`.
#[derive(Debug, Clone)]
pub struct ValidityReport {
    /// Labelled ratios; all must stay at or below the threshold.
    pub ratios: Vec<(&'static str, f64)>,
    pub threshold: f64,
    pub pass: bool,
}

/// Evaluates λ/(2ω_x ± ω_z), λ/ω_z and (Ω/2)/|Φ ± ω_z| against `threshold`
/// (use [`DEFAULT_VALIDITY_THRESHOLD`] for the standard 0.1).
pub fn resonance_check(trap: &TrapConfig, drive: &DriveConfig, threshold: f64) -> ValidityReport {
    let lambda = trap.nonlinear_coupling();
    let rate = drive.drive_rate(trap);
    let wx = trap.omega_x;
    let wz = trap.omega_z;
    let phi = drive.frequency;
    let ratios = vec![
        ("lambda / (2 omega_x + omega_z)", lambda / (2.0 * wx + wz).abs()),
        ("lambda / (2 omega_x - omega_z)", lambda / (2.0 * wx - wz).abs()),
        ("lambda / omega_z", lambda / wz),
        ("(rate/2) / |phi + omega_z|", 0.5 * rate / (phi + wz).abs()),
        ("(rate/2) / |phi - omega_z|", 0.5 * rate / (phi - wz).abs()),
    ];
    let pass = ratios.iter().all(|(_, r)| *r <= threshold);
    ValidityReport {
        ratios,
        threshold,
        pass,
    }
}
