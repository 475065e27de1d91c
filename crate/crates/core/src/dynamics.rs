//! Time-dependent Schrödinger propagation with observable recording.
//!
//! States evolve under i d|ψ⟩/dt = (H/ħ)|ψ⟩ with an adaptive embedded
//! Runge–Kutta 5(4) stepper (Dormand–Prince pair) applied directly to the
//! truncated state vector. The norm is monitored, never repaired: drift
//! beyond the configured limit aborts the run, because it means the local
//! error control was not tight enough to trust the observables.
//!
//! Hamiltonians enter through [`HamiltonianSource`], which exposes both a
//! dense matrix (for checks) and a fast application path. Dense operators
//! built by the model are "compiled" once into their nonzero Fock-space
//! diagonals; every operator in this problem is a short stack of such
//! diagonals, so one Hamiltonian application costs O(dim) instead of O(dim²).

use num_complex::Complex64;

use crate::analytics::HarmonicTerm;
use crate::error::{Error, Result};
use crate::fock::{Mode, ModeSpace, OperatorMatrix, QuantumState, LEAKAGE_LIMIT};
use crate::model::{self, DriveConfig, TrapConfig};

/// Propagation frame for the exact dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Full lab-frame Hamiltonian including the free oscillation.
    Lab,
    /// Rotating frame of the free oscillation (default; far cheaper to step).
    Interaction,
}

/// Controls for one propagation run.
#[derive(Debug, Clone, Copy)]
pub struct PropagationSpec {
    /// Final time, s.
    pub t_final: f64,
    /// Number of output samples (uniform grid including t = 0 and t_final).
    pub n_outputs: usize,
    pub frame: Frame,
    /// Relative local error tolerance per step.
    pub step_control: f64,
    /// Largest tolerated |‖ψ‖ - 1| before the run is rejected.
    pub norm_drift_limit: f64,
    /// Keep the full state at every output (memory permitting).
    pub store_states: bool,
}

impl PropagationSpec {
    pub fn new(t_final: f64, n_outputs: usize) -> Result<Self> {
        let spec = Self {
            t_final,
            n_outputs,
            frame: Frame::Interaction,
            step_control: 1e-9,
            norm_drift_limit: 1e-6,
            store_states: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn with_step_control(mut self, tol: f64) -> Self {
        self.step_control = tol;
        self
    }

    pub fn with_store_states(mut self, store: bool) -> Self {
        self.store_states = store;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.n_outputs < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_outputs must be at least 2, got {}",
                self.n_outputs
            )));
        }
        for (name, tol) in [
            ("step_control", self.step_control),
            ("norm_drift_limit", self.norm_drift_limit),
        ] {
            if !(tol > 0.0 && tol < 1e-2) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1e-2), got {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// Result of one propagation: output grid plus named observable series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Stored states, present when requested in the spec.
    pub states: Option<Vec<QuantumState>>,
    /// ⟨n̂_x⟩.
    pub mean_nx: Vec<f64>,
    /// ⟨n̂_z⟩.
    pub mean_nz: Vec<f64>,
    /// Displacement QFI 4Δ²Ĝ at θ = 0.
    pub qfi: Vec<f64>,
    /// ‖ψ‖ at each output.
    pub norm: Vec<f64>,
    /// Worst top-two-level population over the two modes (leakage monitor).
    pub top_level_population: Vec<f64>,
}

/// A possibly time-dependent Hamiltonian H(t)/ħ.
pub trait HamiltonianSource {
    fn space(&self) -> &ModeSpace;
    /// Dense matrix at time `t` (reference path, not used while stepping).
    fn matrix_at(&self, t: f64) -> OperatorMatrix;
    /// out = H(t)/ħ · ψ.
    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]);
}

/// Offset-diagonal of a Fock-space operator: entries (col + offset, col).
struct DiagonalBand {
    offset: isize,
    col_start: usize,
    values: Vec<Complex64>,
}

/// Sparse application form of a dense operator: the stack of its nonzero
/// Fock-space diagonals.
pub struct CompiledOperator {
    bands: Vec<DiagonalBand>,
}

impl CompiledOperator {
    pub fn from_matrix(m: &nalgebra::DMatrix<Complex64>) -> Self {
        let d = m.nrows() as isize;
        let mut bands = Vec::new();
        for offset in (1 - d)..d {
            let col_lo = 0.max(-offset) as usize;
            let col_hi = (d.min(d - offset)) as usize;
            let mut first = None;
            let mut last = 0;
            for c in col_lo..col_hi {
                let v = m[((c as isize + offset) as usize, c)];
                if v != Complex64::ZERO {
                    if first.is_none() {
                        first = Some(c);
                    }
                    last = c;
                }
            }
            if let Some(start) = first {
                let values = (start..=last)
                    .map(|c| m[((c as isize + offset) as usize, c)])
                    .collect();
                bands.push(DiagonalBand {
                    offset,
                    col_start: start,
                    values,
                });
            }
        }
        Self { bands }
    }

    /// out += scale · (M ψ).
    pub fn apply_add(&self, scale: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        for band in &self.bands {
            let len = band.values.len();
            let row_start = (band.col_start as isize + band.offset) as usize;
            let cols = &psi[band.col_start..band.col_start + len];
            let rows = &mut out[row_start..row_start + len];
            for ((r, &v), &c) in rows.iter_mut().zip(&band.values).zip(cols) {
                *r += scale * v * c;
            }
        }
    }
}

/// Time-independent Hamiltonian.
pub struct StaticHamiltonian {
    op: OperatorMatrix,
    compiled: CompiledOperator,
}

impl StaticHamiltonian {
    pub fn new(op: OperatorMatrix) -> Self {
        let compiled = CompiledOperator::from_matrix(op.matrix());
        Self { op, compiled }
    }
}

impl HamiltonianSource for StaticHamiltonian {
    fn space(&self) -> &ModeSpace {
        self.op.space()
    }

    fn matrix_at(&self, _t: f64) -> OperatorMatrix {
        self.op.clone()
    }

    fn apply(&self, _t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::ZERO);
        self.compiled.apply_add(Complex64::ONE, psi, out);
    }
}

struct CompiledTerm {
    freq: f64,
    op: CompiledOperator,
    op_adjoint: CompiledOperator,
}

/// Hamiltonian of the form S + Σ_m (ĥ_m e^{iω_m t} + h.c.) with a static
/// part S and harmonic terms ĥ_m.
pub struct HarmonicHamiltonian {
    space: ModeSpace,
    static_op: Option<(OperatorMatrix, CompiledOperator)>,
    terms: Vec<(HarmonicTerm, CompiledTerm)>,
}

impl HarmonicHamiltonian {
    pub fn new(static_part: Option<OperatorMatrix>, terms: Vec<HarmonicTerm>) -> Result<Self> {
        let space = match (&static_part, terms.first()) {
            (Some(s), _) => *s.space(),
            (None, Some(t)) => *t.op.space(),
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "harmonic Hamiltonian needs a static part or at least one term".into(),
                ))
            }
        };
        for t in &terms {
            if *t.op.space() != space {
                return Err(Error::SpaceMismatch(
                    "harmonic terms live on different spaces".into(),
                ));
            }
        }
        let static_op =
            static_part.map(|s| (s.clone(), CompiledOperator::from_matrix(s.matrix())));
        let terms = terms
            .into_iter()
            .map(|t| {
                let compiled = CompiledTerm {
                    freq: t.freq,
                    op: CompiledOperator::from_matrix(t.op.matrix()),
                    op_adjoint: CompiledOperator::from_matrix(t.op.adjoint().matrix()),
                };
                (t, compiled)
            })
            .collect();
        Ok(Self {
            space,
            static_op,
            terms,
        })
    }

    /// Interaction-picture source for the configured trap and drive.
    pub fn interaction(
        trap: &TrapConfig,
        drive: &DriveConfig,
        space: ModeSpace,
    ) -> Result<Self> {
        Self::new(None, model::interaction_terms(trap, drive, space)?)
    }

    /// Lab-frame source (classical drive only).
    pub fn lab(trap: &TrapConfig, drive: &DriveConfig, space: ModeSpace) -> Result<Self> {
        let (static_part, terms) = model::lab_terms(trap, drive, space)?;
        Self::new(Some(static_part), terms)
    }
}

impl HamiltonianSource for HarmonicHamiltonian {
    fn space(&self) -> &ModeSpace {
        &self.space
    }

    fn matrix_at(&self, t: f64) -> OperatorMatrix {
        let mut h = match &self.static_op {
            Some((s, _)) => s.clone(),
            None => OperatorMatrix::zeros(self.space),
        };
        for (term, _) in &self.terms {
            let phase = Complex64::from_polar(1.0, term.freq * t);
            h = &h + &term.op.scale(phase);
            h = &h + &term.op.adjoint().scale(phase.conj());
        }
        h
    }

    fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::ZERO);
        if let Some((_, compiled)) = &self.static_op {
            compiled.apply_add(Complex64::ONE, psi, out);
        }
        for (_, term) in &self.terms {
            let phase = Complex64::from_polar(1.0, term.freq * t);
            term.op.apply_add(phase, psi, out);
            term.op_adjoint.apply_add(phase.conj(), psi, out);
        }
    }
}

/// Displacement QFI 4(⟨Ĝ²⟩ − ⟨Ĝ⟩²) with Ĝ = (a†_x e^{iθ} + a_x e^{-iθ})/√2.
pub fn qfi_displacement(state: &QuantumState, theta: f64) -> f64 {
    let (mean_a, mean_a2, mean_n) = state.mode_moments(Mode::X);
    let rot = Complex64::from_polar(1.0, -theta);
    let g1 = 2.0f64.sqrt() * (mean_a * rot).re;
    let g2 = ((mean_a2 * rot * rot).re + mean_n) + 0.5;
    4.0 * g2 - 4.0 * g1 * g1
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// 5th-order weights (identical to the last A row; the pair is FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// B minus the embedded 4th-order weights, used for the error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 100_000_000;

struct Stepper<'a, S: HamiltonianSource + ?Sized> {
    source: &'a S,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    t: f64,
    h: f64,
    psi: Vec<Complex64>,
    rtol: f64,
    steps: usize,
    k1_fresh: bool,
}

impl<'a, S: HamiltonianSource + ?Sized> Stepper<'a, S> {
    fn new(source: &'a S, psi0: Vec<Complex64>, rtol: f64, h0: f64) -> Self {
        let d = psi0.len();
        Self {
            source,
            k: std::array::from_fn(|_| vec![Complex64::ZERO; d]),
            stage: vec![Complex64::ZERO; d],
            t: 0.0,
            h: h0,
            psi: psi0,
            rtol,
            steps: 0,
            k1_fresh: false,
        }
    }

    /// k[slot] = -i H(t) ψ_stage.
    fn eval(&mut self, slot: usize, t: f64, from_stage: bool) {
        let input = if from_stage { &self.stage } else { &self.psi };
        self.source.apply(t, input, &mut self.k[slot]);
        for v in self.k[slot].iter_mut() {
            *v = Complex64::new(v.im, -v.re); // multiply by -i
        }
    }

    /// Advances exactly to `t_target`, stepping adaptively.
    fn advance_to(&mut self, t_target: f64) -> Result<()> {
        let d = self.psi.len();
        while self.t < t_target {
            let h = self.h.min(t_target - self.t);
            if !(h > 0.0) || self.t + h == self.t {
                return Err(Error::IntegrationFailure(format!(
                    "step size underflow at t = {:.6e} s",
                    self.t
                )));
            }
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::IntegrationFailure(format!(
                    "exceeded {MAX_STEPS} steps"
                )));
            }

            if !self.k1_fresh {
                self.eval(0, self.t, false);
                self.k1_fresh = true;
            }
            for s in 1..7 {
                for i in 0..d {
                    let mut acc = self.psi[i];
                    for (j, aj) in A[s - 1].iter().enumerate().take(s) {
                        if *aj != 0.0 {
                            acc += h * *aj * self.k[j][i];
                        }
                    }
                    self.stage[i] = acc;
                }
                self.eval(s, self.t + C[s] * h, true);
            }

            // error estimate and L2 error norm against rtol·‖ψ‖
            let mut err_sq = 0.0;
            let mut norm_sq = 0.0;
            for i in 0..d {
                let mut e = Complex64::ZERO;
                for (j, ej) in E.iter().enumerate() {
                    if *ej != 0.0 {
                        e += h * *ej * self.k[j][i];
                    }
                }
                err_sq += e.norm_sqr();
                norm_sq += self.psi[i].norm_sqr();
            }
            let err_norm = err_sq.sqrt() / (self.rtol * norm_sq.sqrt().max(1e-300));

            if err_norm <= 1.0 {
                // accept: 5th-order solution is stage 7's input (B row == A[5])
                for i in 0..d {
                    let mut acc = self.psi[i];
                    for (j, bj) in B.iter().enumerate() {
                        if *bj != 0.0 {
                            acc += h * *bj * self.k[j][i];
                        }
                    }
                    self.psi[i] = acc;
                }
                self.t += h;
                // FSAL: k7 was evaluated at (t + h, ψ_new)
                self.k.swap(0, 6);
                self.k1_fresh = true;
            } else {
                self.k1_fresh = true; // k1 still valid at unchanged (t, ψ)
            }

            let scale = if err_norm > 0.0 {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            } else {
                MAX_SCALE
            };
            self.h = h * scale;
        }
        Ok(())
    }
}

/// Integrates i dψ/dt = H(t)ψ from `psi0` and samples observables on the
/// uniform output grid of `spec`.
///
/// Errors if the norm drifts beyond the configured limit; warns (once per
/// mode) if the truncation-leakage monitor trips.
pub fn propagate<S: HamiltonianSource + ?Sized>(
    source: &S,
    psi0: &QuantumState,
    spec: &PropagationSpec,
) -> Result<Trajectory> {
    spec.validate()?;
    if psi0.space() != source.space() {
        return Err(Error::SpaceMismatch(
            "initial state and Hamiltonian live on different spaces".into(),
        ));
    }
    let space = *psi0.space();
    let n = spec.n_outputs;
    let dt_out = spec.t_final / (n - 1) as f64;

    let mut stepper = Stepper::new(
        source,
        psi0.amplitudes().iter().copied().collect(),
        spec.step_control,
        dt_out / 16.0,
    );

    let mut traj = Trajectory {
        times: Vec::with_capacity(n),
        states: spec.store_states.then(|| Vec::with_capacity(n)),
        mean_nx: Vec::with_capacity(n),
        mean_nz: Vec::with_capacity(n),
        qfi: Vec::with_capacity(n),
        norm: Vec::with_capacity(n),
        top_level_population: Vec::with_capacity(n),
    };
    let mut leak_warned = [false; 2];

    for j in 0..n {
        let t_out = spec.t_final * j as f64 / (n - 1) as f64;
        stepper.advance_to(t_out)?;

        let amplitudes = nalgebra::DVector::from_column_slice(&stepper.psi);
        let norm = amplitudes.norm();
        let drift = (norm - 1.0).abs();
        if drift > spec.norm_drift_limit {
            return Err(Error::IntegrationFailure(format!(
                "norm drift {drift:.3e} exceeds limit {:.3e} at t = {t_out:.6e} s",
                spec.norm_drift_limit
            )));
        }
        // observables are evaluated on the raw (never renormalized) state
        let state = QuantumState::from_amplitudes_unchecked(space, amplitudes);
        let (_, _, nx) = state.mode_moments(Mode::X);
        let (_, _, nz) = state.mode_moments(Mode::Z);
        let mut worst_leak = 0.0f64;
        for (idx, mode) in [Mode::X, Mode::Z].into_iter().enumerate() {
            let leak = state.top_level_population(mode);
            worst_leak = worst_leak.max(leak);
            if leak > LEAKAGE_LIMIT && !leak_warned[idx] {
                log::warn!(
                    "truncation leakage in mode {mode:?}: top-level population {leak:.3e} at t = {t_out:.3e} s"
                );
                leak_warned[idx] = true;
            }
        }
        traj.times.push(t_out);
        traj.mean_nx.push(nx);
        traj.mean_nz.push(nz);
        traj.qfi.push(qfi_displacement(&state, 0.0));
        traj.norm.push(norm);
        traj.top_level_population.push(worst_leak);
        if let Some(states) = traj.states.as_mut() {
            states.push(state);
        }
    }
    Ok(traj)
}

/// Exact and effective trajectories on a shared grid.
#[derive(Debug, Clone)]
pub struct Fig2Record {
    pub exact: Trajectory,
    pub effective: Trajectory,
}

/// Propagates the same initial ground state under the exact dynamics (frame
/// chosen by the spec) and under the closed-form effective Hamiltonian.
pub fn record_fig2(
    trap: &TrapConfig,
    drive: &DriveConfig,
    space: ModeSpace,
    spec: &PropagationSpec,
) -> Result<Fig2Record> {
    let psi0 = QuantumState::ground(space);
    let exact = match spec.frame {
        Frame::Interaction => {
            let source = HarmonicHamiltonian::interaction(trap, drive, space)?;
            propagate(&source, &psi0, spec)?
        }
        Frame::Lab => {
            let source = HarmonicHamiltonian::lab(trap, drive, space)?;
            propagate(&source, &psi0, spec)?
        }
    };
    let effective = StaticHamiltonian::new(model::effective_hamiltonian(trap, drive, space)?);
    let effective = propagate(&effective, &psi0, spec)?;
    Ok(Fig2Record { exact, effective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_ladder, coherent_state, QuantumState};
    use crate::model::TrapConfig;

    fn figure_trap(freq_z_hz: f64) -> TrapConfig {
        TrapConfig::from_lab_units(1.2e6, 1.0e6, freq_z_hz, 0.05, 40.0, 1.0).unwrap()
    }

    fn figure_drive() -> DriveConfig {
        DriveConfig::classical(700e-24, std::f64::consts::TAU * 2.4e6).unwrap()
    }

    #[test]
    fn compiled_operator_matches_dense_product() {
        let space = ModeSpace::with_spin(5, 3).unwrap();
        let trap = figure_trap(100e3);
        let drive = DriveConfig::spin(2e4, 2.0 * trap.omega_x).unwrap();
        let h = model::interaction_hamiltonian(&trap, &drive, space, 1.3e-6).unwrap();
        let compiled = CompiledOperator::from_matrix(h.matrix());
        let d = space.total_dim();
        let mut v = nalgebra::DVector::from_fn(d, |i, _| {
            Complex64::new((i % 7) as f64 + 0.5, ((i % 3) as f64 - 1.0) * 0.3)
        });
        v /= Complex64::new(v.norm(), 0.0);
        let psi = QuantumState::from_amplitudes(space, v).unwrap();
        let mut out = vec![Complex64::ZERO; space.total_dim()];
        compiled.apply_add(Complex64::ONE, psi.amplitudes().as_slice(), &mut out);
        let dense = h.matrix() * psi.amplitudes();
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for i in 0..space.total_dim() {
            assert!((out[i] - dense[i]).norm() < 1e-13 * scale);
        }
    }

    #[test]
    fn harmonic_source_matrix_matches_model() {
        let space = ModeSpace::without_spin(5, 4).unwrap();
        let trap = figure_trap(100e3);
        let drive = figure_drive();
        let source = HarmonicHamiltonian::interaction(&trap, &drive, space).unwrap();
        for t in [0.0, 2.7e-7, 5.5e-6] {
            let direct = model::interaction_hamiltonian(&trap, &drive, space, t).unwrap();
            let from_source = source.matrix_at(t);
            assert!((&direct - &from_source).max_abs() < 1e-10 * direct.max_abs().max(1.0));
        }
    }

    #[test]
    fn fock_state_is_stationary_without_coupling() {
        // λ = 0, Ω = 0: every Fock state is an eigenstate of the lab frame.
        let space = ModeSpace::without_spin(4, 3).unwrap();
        let trap =
            TrapConfig::from_lab_units(1.2e6, 1.0e6, 100e3, f64::INFINITY, 40.0, 1.0).unwrap();
        let drive = DriveConfig::classical(0.0, std::f64::consts::TAU * 2.4e6).unwrap();
        let source = HarmonicHamiltonian::lab(&trap, &drive, space).unwrap();
        let psi0 = QuantumState::fock(space, 1, 0).unwrap();
        let spec = PropagationSpec::new(5e-5, 11).unwrap().with_step_control(1e-13);
        let traj = propagate(&source, &psi0, &spec).unwrap();
        for (nx, nz) in traj.mean_nx.iter().zip(&traj.mean_nz) {
            assert!((nx - 1.0).abs() < 1e-10, "{nx}");
            assert!(nz.abs() < 1e-10);
        }
    }

    #[test]
    fn squeeze_only_growth_matches_closed_form() {
        // H = -ε(a†² + a²): ⟨n̂_x⟩(t) = sinh²(2εt) from vacuum.
        let space = ModeSpace::without_spin(56, 2).unwrap();
        let epsilon = 50.0;
        let a = build_ladder(space, Mode::X);
        let squeeze = &(&a.adjoint() * &a.adjoint()) + &(&a * &a);
        let h = squeeze.scale(Complex64::new(-epsilon, 0.0));
        let source = StaticHamiltonian::new(h);
        let psi0 = QuantumState::ground(space);
        let t_final = 0.4 / epsilon; // 2εt up to 0.8
        let spec = PropagationSpec::new(t_final, 9).unwrap();
        let traj = propagate(&source, &psi0, &spec).unwrap();
        for (t, nx) in traj.times.iter().zip(&traj.mean_nx) {
            let expect = (2.0 * epsilon * t).sinh().powi(2);
            assert!((nx - expect).abs() < 1e-8, "t {t}: {nx} vs {expect}");
        }
    }

    #[test]
    fn frame_invariance_of_occupations() {
        // ⟨n̂_x⟩ and ⟨n̂_z⟩ agree between lab-frame and interaction-picture
        // propagation ([n̂_k, H₀] = 0).
        let space = ModeSpace::without_spin(8, 4).unwrap();
        let trap = figure_trap(100e3);
        // stronger, slower drive so the occupations move visibly within μs
        let drive = DriveConfig::classical(5e-21, std::f64::consts::TAU * 0.9e6).unwrap();
        let spec = PropagationSpec::new(2e-5, 9).unwrap().with_step_control(1e-10);
        let psi0 = QuantumState::ground(space);
        let lab = HarmonicHamiltonian::lab(&trap, &drive, space).unwrap();
        let rot = HarmonicHamiltonian::interaction(&trap, &drive, space).unwrap();
        let t_lab = propagate(&lab, &psi0, &spec).unwrap();
        let t_rot = propagate(&rot, &psi0, &spec).unwrap();
        let moved = t_lab.mean_nz.iter().fold(0.0f64, |m, v| m.max(*v));
        assert!(moved > 1e-3, "drive too weak to test anything: {moved}");
        for j in 0..t_lab.times.len() {
            assert!(
                (t_lab.mean_nx[j] - t_rot.mean_nx[j]).abs() < 1e-6,
                "nx mismatch at {j}"
            );
            assert!(
                (t_lab.mean_nz[j] - t_rot.mean_nz[j]).abs() < 1e-6,
                "nz mismatch at {j}"
            );
        }
    }

    #[test]
    fn tightened_tolerance_converges() {
        // Halving step_control moves the final ⟨n̂_x⟩ by far less than 10x
        // the tolerance.
        let space = ModeSpace::without_spin(12, 6).unwrap();
        let trap = figure_trap(100e3);
        let drive = figure_drive();
        let source = HarmonicHamiltonian::interaction(&trap, &drive, space).unwrap();
        let psi0 = QuantumState::ground(space);
        let base = PropagationSpec::new(2e-4, 5).unwrap().with_step_control(2e-9);
        let tight = base.with_step_control(1e-9);
        let a = propagate(&source, &psi0, &base).unwrap();
        let b = propagate(&source, &psi0, &tight).unwrap();
        let diff = (a.mean_nx.last().unwrap() - b.mean_nx.last().unwrap()).abs();
        assert!(diff < 10.0 * 2e-9, "diff {diff}");
    }

    #[test]
    fn qfi_vacuum_and_coherent() {
        let space = ModeSpace::without_spin(40, 2).unwrap();
        let vac = QuantumState::ground(space);
        for theta in [0.0, 0.7, 2.1] {
            assert!((qfi_displacement(&vac, theta) - 2.0).abs() < 1e-12);
        }
        let psi = coherent_state(space, Mode::X, Complex64::new(1.0, 0.0)).unwrap();
        for theta in [0.0, 0.7, 2.1] {
            let f = qfi_displacement(&psi, theta);
            assert!((f - 2.0).abs() < 1e-6, "theta {theta}: {f}");
        }
    }

    #[test]
    fn qfi_squeezed_vacuum_closed_form() {
        // θ = 0 on the squeezed vacuum: 4Δ²Ĝ = 2cosh(4εt).
        let space = ModeSpace::without_spin(90, 2).unwrap();
        let eps_t = 0.5;
        let u = crate::analytics::squeeze_unitary(eps_t, 1.0, space).unwrap();
        let vac = QuantumState::ground(space);
        let sv = QuantumState::from_amplitudes(space, u.matrix() * vac.amplitudes()).unwrap();
        let f = qfi_displacement(&sv, 0.0);
        let expect = 2.0 * (4.0 * eps_t).cosh();
        assert!((f - expect).abs() < 1e-7 * expect, "{f} vs {expect}");
    }

    #[test]
    fn record_fig2_initial_points_and_no_coupling() {
        let space = ModeSpace::without_spin(6, 4).unwrap();
        let trap = figure_trap(100e3);
        let drive = figure_drive();
        let spec = PropagationSpec::new(1e-5, 3).unwrap();
        let rec = record_fig2(&trap, &drive, space, &spec).unwrap();
        assert_eq!(rec.exact.mean_nx[0], 0.0);
        assert_eq!(rec.effective.mean_nx[0], 0.0);
        // λ = 0: the radial mode never moves in either picture
        let bare =
            TrapConfig::from_lab_units(1.2e6, 1.0e6, 100e3, f64::INFINITY, 40.0, 1.0).unwrap();
        let rec = record_fig2(&bare, &drive, space, &spec).unwrap();
        for (a, b) in rec.exact.mean_nx.iter().zip(&rec.effective.mean_nx) {
            assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(PropagationSpec::new(0.0, 10).is_err());
        assert!(PropagationSpec::new(1e-3, 1).is_err());
        let bad = PropagationSpec::new(1e-3, 10).unwrap().with_step_control(0.5);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn space_mismatch_rejected() {
        let s1 = ModeSpace::without_spin(4, 3).unwrap();
        let s2 = ModeSpace::without_spin(4, 4).unwrap();
        let trap = figure_trap(100e3);
        let drive = figure_drive();
        let source = HarmonicHamiltonian::interaction(&trap, &drive, s1).unwrap();
        let psi0 = QuantumState::ground(s2);
        let spec = PropagationSpec::new(1e-5, 3).unwrap();
        assert!(propagate(&source, &psi0, &spec).is_err());
    }
}
