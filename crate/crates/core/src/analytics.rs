//! Closed-form results and the commutator time-averaging engine.
//!
//! An interaction-picture Hamiltonian written as a sum of harmonic terms
//! H(t) = Σ_m (ĥ_m e^{iω_m t} + h.c.) averages, to second order in the
//! couplings, to the static operator
//!
//! ```text
//! H_eff = Σ_{m,n: ω_m ≈ ω_n} (1/ω̄_mn) [ĥ_m, ĥ†_n],   1/ω̄_mn = (1/ω_m + 1/ω_n)/2,
//! ```
//!
//! where only secular pairs (equal frequencies within [`SECULAR_TOL`]) are
//! retained and all oscillating cross terms are dropped. The harmonic mean
//! carries the plus sign and the commutator is ordered [ĥ_m, ĥ†_n]; this is
//! the combination that reproduces the closed-form squeezed-Kerr couplings
//! (checked against the dressed-state shift of a detuned two-level drive,
//! which it gives with the correct sign).
//!
//! Commutators on a truncated ladder are wrong on the top Fock levels
//! ([a, a†] ≠ 1 there), so callers that want the effective Hamiltonian on a
//! given space should build the term list on a guard-padded space and
//! restrict the result back down; `model::time_averaged_hamiltonian` does
//! exactly that.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{build_ladder, Mode, ModeSpace, OperatorMatrix, QuantumState, LEAKAGE_LIMIT};

/// Frequency pairs closer than this (relative to the largest |ω| in the term
/// list) count as resonant and survive the averaging.
pub const SECULAR_TOL: f64 = 1e-9;

/// One harmonic term ĥ e^{iωt} of an interaction Hamiltonian; the Hermitian
/// conjugate ĥ† e^{-iωt} is implied.
#[derive(Debug, Clone)]
pub struct HarmonicTerm {
    pub op: OperatorMatrix,
    /// Angular frequency of the e^{iωt} factor, rad/s.
    pub freq: f64,
}

impl HarmonicTerm {
    pub fn new(op: OperatorMatrix, freq: f64) -> Self {
        Self { op, freq }
    }
}

/// Rebuilds Σ_m (ĥ_m e^{iω_m t} + h.c.) at time `t`.
pub fn reconstruct_at(terms: &[HarmonicTerm], t: f64) -> Result<OperatorMatrix> {
    let space = terms
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty term list".into()))?
        .op
        .space();
    let mut h = OperatorMatrix::zeros(*space);
    for term in terms {
        let phase = Complex64::from_polar(1.0, term.freq * t);
        h = &h + &term.op.scale(phase);
        h = &h + &term.op.adjoint().scale(phase.conj());
    }
    Ok(h)
}

/// Secular part of the second-order time average of a harmonic term list.
///
/// Returns the raw commutator sum, including any scalar (identity) shifts it
/// produces; errors if any term oscillates at exactly zero frequency.
pub fn time_average(terms: &[HarmonicTerm]) -> Result<OperatorMatrix> {
    let space = terms
        .first()
        .ok_or_else(|| Error::IllDefinedAverage("empty term list".into()))?
        .op
        .space();
    let freq_max = terms.iter().fold(0.0f64, |m, t| m.max(t.freq.abs()));
    let mut h = OperatorMatrix::zeros(*space);
    for (m, tm) in terms.iter().enumerate() {
        if tm.freq == 0.0 {
            return Err(Error::IllDefinedAverage(format!(
                "term {m} oscillates at zero frequency"
            )));
        }
        for tn in terms.iter() {
            if (tm.freq - tn.freq).abs() >= SECULAR_TOL * freq_max {
                continue;
            }
            let inv_mean = 0.5 * (1.0 / tm.freq + 1.0 / tn.freq);
            let comm = tm.op.commutator(&tn.op.adjoint())?;
            h = &h + &comm.scale(Complex64::new(inv_mean, 0.0));
        }
    }
    Ok(h)
}

/// Diagonal Kerr unitary e^{iKt n̂²_x} e^{iωt n̂_x} on the radial mode.
pub fn kerr_unitary(kerr: f64, omega_eff: f64, t: f64, space: ModeSpace) -> OperatorMatrix {
    let d = space.total_dim();
    let mut m = DMatrix::zeros(d, d);
    let spins = if space.has_spin() { 2 } else { 1 };
    for s in 0..spins {
        for nz in 0..space.dim_z() {
            for nx in 0..space.dim_x() {
                let n = nx as f64;
                let phase = kerr * t * n * n + omega_eff * t * n;
                let i = space.index_of(s, nz, nx);
                m[(i, i)] = Complex64::from_polar(1.0, phase);
            }
        }
    }
    OperatorMatrix::from_matrix(space, m).expect("diagonal build matches space")
}

/// Squeeze unitary e^{iεt (a†²_x + a²_x)} via scaling-and-squaring.
///
/// Errors if the squeezed vacuum it produces no longer fits the truncation
/// (more than [`LEAKAGE_LIMIT`] population in the top two x levels).
pub fn squeeze_unitary(epsilon: f64, t: f64, space: ModeSpace) -> Result<OperatorMatrix> {
    let a = build_ladder(space, Mode::X);
    let ad = a.adjoint();
    let generator = &(&ad * &ad) + &(&a * &a);
    let exponent = generator.scale(Complex64::new(0.0, epsilon * t));
    let u = OperatorMatrix::from_matrix(*exponent.space(), expm(exponent.matrix()))
        .expect("exponential preserves dimensions");

    let vacuum = QuantumState::ground(space);
    let squeezed = u.matrix() * vacuum.amplitudes();
    let leaked = QuantumState::from_amplitudes(space, squeezed).map_err(|_| {
        Error::IntegrationFailure("squeeze unitary lost unitarity".into())
    })?;
    let tail = leaked.top_level_population(Mode::X);
    if tail > LEAKAGE_LIMIT {
        return Err(Error::TruncationLeakage {
            mode: Mode::X,
            population: tail,
            limit: LEAKAGE_LIMIT,
        });
    }
    Ok(u)
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
///
/// The argument is scaled so its max-norm is below 1/4, the series is summed
/// to machine precision, and the result squared back up; accuracy is far
/// below 1e-12 for the generator norms used here.
pub(crate) fn expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = m.nrows();
    let norm = m.iter().fold(0.0f64, |acc, v| acc.max(v.norm())) * d as f64;
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil().min(60.0).max(0.0) as u32
    } else {
        0
    };
    let scaled = m.map(|v| v / 2.0f64.powi(squarings as i32));

    let mut result = DMatrix::<Complex64>::identity(d, d);
    let mut term = DMatrix::<Complex64>::identity(d, d);
    for k in 1..=64 {
        term = (&term * &scaled).map(|v| v / k as f64);
        result += &term;
        let tmax = term.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        if tmax < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Closed-form moments of a coherent state evolved by the Kerr unitary.
#[derive(Debug, Clone, Copy)]
pub struct KerrStateMoments {
    /// ⟨a⟩ of the evolved state.
    pub mean_a: Complex64,
    /// ⟨a²⟩ of the evolved state.
    pub mean_a2: Complex64,
    /// Quantum Fisher information 4Δ²Ĝ for displacement sensing at θ = 0.
    pub qfi: f64,
}

/// Moments and QFI of Û_K(K, ω)|α⟩, truncation-free closed forms:
///
/// ```text
/// ⟨a⟩  = e^{i(K+ω)t} α e^{|α|²(e^{2iKt} - 1)}
/// ⟨a²⟩ = e^{2i(K+ω)t} α² e^{2iKt} e^{|α|²(e^{4iKt} - 1)}
/// F_Q  = 2[(⟨a²⟩ + c.c.) + 2|α|² + 1 - (⟨a⟩ + c.c.)²]
/// ```
pub fn kerr_state_moments(
    alpha: Complex64,
    kerr: f64,
    omega_eff: f64,
    t: f64,
) -> KerrStateMoments {
    let i = Complex64::i();
    let asq = alpha.norm_sqr();
    let kt = kerr * t;
    let rot = (i * (kerr + omega_eff) * t).exp();
    let mean_a = rot * alpha * (asq * ((2.0 * i * kt).exp() - 1.0)).exp();
    let mean_a2 =
        rot * rot * alpha * alpha * (2.0 * i * kt).exp() * (asq * ((4.0 * i * kt).exp() - 1.0)).exp();
    let qfi = 2.0 * (2.0 * mean_a2.re + 2.0 * asq + 1.0 - (2.0 * mean_a.re).powi(2));
    KerrStateMoments {
        mean_a,
        mean_a2,
        qfi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_number, build_spin, expectation, SpinAxis};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_drive_term_gives_commutator_shift() {
        // ĥ = (Ω/2) â_z at frequency ω averages to (Ω²/4ω)[â_z, â†_z].
        let space = ModeSpace::without_spin(3, 4).unwrap();
        let omega = 2.0e6;
        let half_rabi = 0.5 * 8.0e3;
        let az = build_ladder(space, Mode::Z);
        let term = HarmonicTerm::new(az.scale(c(half_rabi)), omega);
        let avg = time_average(&[term]).unwrap();
        let expect = az
            .commutator(&az.adjoint())
            .unwrap()
            .scale(c(half_rabi * half_rabi / omega));
        assert!((&avg - &expect).max_abs() < 1e-12 * expect.max_abs());
    }

    #[test]
    fn time_average_hermitian_output() {
        let space = ModeSpace::without_spin(4, 3).unwrap();
        let ax = build_ladder(space, Mode::X);
        let az = build_ladder(space, Mode::Z);
        let terms = vec![
            HarmonicTerm::new(&ax.adjoint() * &az.adjoint(), 3.1e6),
            HarmonicTerm::new(az.adjoint().scale(Complex64::new(0.3, -0.4)), 1.7e6),
        ];
        let avg = time_average(&terms).unwrap();
        assert!(avg.is_hermitian(1e-12));
    }

    #[test]
    fn time_average_rejects_zero_frequency() {
        let space = ModeSpace::without_spin(3, 3).unwrap();
        let term = HarmonicTerm::new(build_ladder(space, Mode::X), 0.0);
        assert!(matches!(
            time_average(&[term]),
            Err(Error::IllDefinedAverage(_))
        ));
    }

    #[test]
    fn degenerate_pair_matches_merged_term() {
        // Two terms at the same frequency must average exactly like their sum.
        let space = ModeSpace::without_spin(5, 4).unwrap();
        let ax = build_ladder(space, Mode::X);
        let az = build_ladder(space, Mode::Z);
        let omega = 7.7e5;
        let h1 = (&ax.adjoint() * &ax.adjoint()).scale(c(150.0));
        let h2 = az.adjoint().scale(c(40.0));
        let split = vec![
            HarmonicTerm::new(h1.clone(), omega),
            HarmonicTerm::new(h2.clone(), omega),
        ];
        let merged = vec![HarmonicTerm::new(&h1 + &h2, omega)];
        let a = time_average(&split).unwrap();
        let b = time_average(&merged).unwrap();
        assert!((&a - &b).max_abs() < 1e-12 * b.max_abs());
    }

    #[test]
    fn detuned_two_level_drive_shift_sign() {
        // ĥ = g σ₊ at detuning Δ must average to +(g²/Δ) σ_z: the dressed
        // upper level shifts up for positive detuning.
        let space = ModeSpace::with_spin(2, 2).unwrap();
        let sx = build_spin(space, SpinAxis::X).unwrap();
        let sy = build_spin(space, SpinAxis::Y).unwrap();
        let sz = build_spin(space, SpinAxis::Z).unwrap();
        let splus = (&sx + &sy.scale(Complex64::i())).scale(c(0.5));
        let g = 2.0e3;
        let delta = 4.0e5;
        let avg = time_average(&[HarmonicTerm::new(splus.scale(c(g)), delta)]).unwrap();
        let expect = sz.scale(c(g * g / delta));
        assert!((&avg - &expect).max_abs() < 1e-10 * expect.max_abs());
    }

    #[test]
    fn kerr_unitary_identity_and_unitarity() {
        let space = ModeSpace::without_spin(7, 3).unwrap();
        let u0 = kerr_unitary(123.0, 45.0, 0.0, space);
        assert!((&u0 - &OperatorMatrix::identity(space)).max_abs() < 1e-15);
        let u = kerr_unitary(321.0, 77.0, 1.3e-3, space);
        let uu = &u.adjoint() * &u;
        assert!((&uu - &OperatorMatrix::identity(space)).max_abs() < 1e-12);
    }

    #[test]
    fn kerr_unitary_parity_identity() {
        // With Kt = π the n² phase collapses to the n phase: e^{iπn²} = e^{iπn}.
        let space = ModeSpace::without_spin(9, 2).unwrap();
        let t = 2.5e-3;
        let kerr = std::f64::consts::PI / t;
        let omega = 1234.5;
        let u = kerr_unitary(kerr, omega, t, space);
        let folded = kerr_unitary(0.0, omega + kerr, t, space);
        assert!((&u - &folded).max_abs() < 1e-9);
    }

    #[test]
    fn kerr_unitary_commutes_with_number() {
        let space = ModeSpace::without_spin(6, 3).unwrap();
        let u = kerr_unitary(200.0, 50.0, 1e-3, space);
        let n = build_number(space, Mode::X);
        assert!(u.commutator(&n).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn squeeze_vacuum_occupation() {
        // ⟨n̂⟩ on the squeezed vacuum is sinh²(2εt).
        let space = ModeSpace::without_spin(90, 2).unwrap();
        let eps_t: f64 = 0.5;
        let u = squeeze_unitary(eps_t, 1.0, space).unwrap();
        let vac = QuantumState::ground(space);
        let sv = QuantumState::from_amplitudes(space, u.matrix() * vac.amplitudes()).unwrap();
        let n = build_number(space, Mode::X);
        let mean = expectation(&sv, &n).unwrap().re;
        let expect = (2.0 * eps_t).sinh().powi(2);
        assert!((mean - expect).abs() < 1e-8, "{mean} vs {expect}");
    }

    #[test]
    fn squeeze_identity_and_noncommutation() {
        let space = ModeSpace::without_spin(30, 2).unwrap();
        let u0 = squeeze_unitary(0.0, 1.0, space).unwrap();
        assert!((&u0 - &OperatorMatrix::identity(space)).max_abs() < 1e-14);
        let u = squeeze_unitary(0.2, 1.0, space).unwrap();
        let n = build_number(space, Mode::X);
        assert!(u.commutator(&n).unwrap().max_abs() > 1e-3);
    }

    #[test]
    fn squeeze_leakage_rejected() {
        // εt = 1.5 needs ⟨n⟩ ≈ sinh²(3) ≈ 100; dim 20 cannot hold it.
        let space = ModeSpace::without_spin(20, 2).unwrap();
        assert!(matches!(
            squeeze_unitary(1.5, 1.0, space),
            Err(Error::TruncationLeakage { .. })
        ));
    }

    #[test]
    fn squeezed_vacuum_qfi_optimal_angle() {
        // 4Δ²Ĝ at θ = π/4 grows as 2e^{4εt} for this squeeze phase; the
        // variance is computed from matrices as an independent route.
        let space = ModeSpace::without_spin(60, 2).unwrap();
        let eps_t: f64 = 0.4;
        let u = squeeze_unitary(eps_t, 1.0, space).unwrap();
        let vac = QuantumState::ground(space);
        let sv = QuantumState::from_amplitudes(space, u.matrix() * vac.amplitudes()).unwrap();
        let a = build_ladder(space, Mode::X);
        let theta = std::f64::consts::FRAC_PI_4;
        let phase = Complex64::from_polar(1.0, theta);
        let g = &a.adjoint().scale(phase / 2.0f64.sqrt()) + &a.scale(phase.conj() / 2.0f64.sqrt());
        let g2 = expectation(&sv, &(&g * &g)).unwrap().re;
        let g1 = expectation(&sv, &g).unwrap().re;
        let qfi = 4.0 * (g2 - g1 * g1);
        let expect = 2.0 * (4.0 * eps_t).exp();
        assert!(
            (qfi - expect).abs() < 1e-7 * expect,
            "qfi {qfi} vs {expect}"
        );
    }

    #[test]
    fn kerr_moments_initial_and_vacuum() {
        let alpha = Complex64::new(1.2, -0.3);
        let m0 = kerr_state_moments(alpha, 300.0, 70.0, 0.0);
        assert!((m0.mean_a - alpha).norm() < 1e-14);
        assert!((m0.mean_a2 - alpha * alpha).norm() < 1e-14);
        assert!((m0.qfi - 2.0).abs() < 1e-12);
        for t in [0.0, 1e-3, 7e-3] {
            let mv = kerr_state_moments(Complex64::ZERO, 300.0, 70.0, t);
            assert_eq!(mv.mean_a, Complex64::ZERO);
            assert!((mv.qfi - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kerr_moments_amplitude_bound() {
        let alpha = c(1.7);
        for k in 0..40 {
            let t = k as f64 * 3.3e-4;
            let m = kerr_state_moments(alpha, 450.0, 80.0, t);
            assert!(m.mean_a.norm() <= alpha.norm() + 1e-12);
            assert!(m.qfi >= 0.0);
        }
    }

    #[test]
    fn expm_matches_diagonal_exponential() {
        let space = ModeSpace::without_spin(5, 2).unwrap();
        let n = build_number(space, Mode::X);
        let e = expm(&n.scale(Complex64::new(0.0, 0.7)).matrix().clone());
        for nx in 0..5 {
            let i = space.index_of(0, 0, nx);
            let expect = Complex64::from_polar(1.0, 0.7 * nx as f64);
            assert!((e[(i, i)] - expect).norm() < 1e-13);
        }
    }
}
