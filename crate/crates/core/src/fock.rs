//! Truncated Fock-space operator algebra.
//!
//! Operators act on the tensor product of a radial (x) and an axial (z)
//! vibrational mode, optionally extended by a two-level spin. The factor
//! ordering is fixed as (spin ⊗ z ⊗ x): the basis index of |s, n_z, n_x⟩ is
//! `(s * dim_z + n_z) * dim_x + n_x`, with s = 0 for |↑⟩. All builders embed
//! their single-factor operator into the full space with identities on the
//! other factors, so operators on different factors commute exactly.
//!
//! Matrices are dense; the dimensions in play (≲ 10⁴) make dense algebra
//! simple and fast enough.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Population allowed in the top two Fock levels of a mode before the
/// truncation is considered broken. State constructors raise
/// [`Error::TruncationLeakage`] above this bound; the propagator only warns.
pub const LEAKAGE_LIMIT: f64 = 1e-8;

/// Norm tolerance for state construction.
pub const NORM_TOL: f64 = 1e-10;

/// One of the two vibrational modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Radial mode (the squeezed Kerr oscillator).
    X,
    /// Axial mode (the driven mode).
    Z,
}

/// Pauli-operator axis for the optional spin factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

/// Truncated tensor-product space: x and z Fock ladders plus optional spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSpace {
    dim_x: usize,
    dim_z: usize,
    spin: bool,
}

impl ModeSpace {
    /// Makes a space with the given Fock truncations. Both truncations must
    /// be at least 2.
    pub fn new(dim_x: usize, dim_z: usize, spin: bool) -> Result<Self> {
        if dim_x < 2 || dim_z < 2 {
            return Err(Error::InvalidSpace(format!(
                "Fock truncations must be >= 2, got dim_x = {dim_x}, dim_z = {dim_z}"
            )));
        }
        Ok(Self { dim_x, dim_z, spin })
    }

    pub fn without_spin(dim_x: usize, dim_z: usize) -> Result<Self> {
        Self::new(dim_x, dim_z, false)
    }

    pub fn with_spin(dim_x: usize, dim_z: usize) -> Result<Self> {
        Self::new(dim_x, dim_z, true)
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_z(&self) -> usize {
        self.dim_z
    }

    pub fn has_spin(&self) -> bool {
        self.spin
    }

    pub fn mode_dim(&self, mode: Mode) -> usize {
        match mode {
            Mode::X => self.dim_x,
            Mode::Z => self.dim_z,
        }
    }

    /// Total Hilbert dimension `dim_x * dim_z * (2 if spin)`.
    pub fn total_dim(&self) -> usize {
        self.dim_x * self.dim_z * if self.spin { 2 } else { 1 }
    }

    /// Basis index of |s, n_z, n_x⟩ (s = 0 without spin or for |↑⟩).
    pub fn index_of(&self, s: usize, n_z: usize, n_x: usize) -> usize {
        debug_assert!(n_x < self.dim_x && n_z < self.dim_z);
        debug_assert!(s < if self.spin { 2 } else { 1 });
        (s * self.dim_z + n_z) * self.dim_x + n_x
    }

    /// Same space with `extra` guard levels added to both Fock ladders.
    /// Commutator algebra evaluated with guard levels and then restricted
    /// back is free of top-level truncation artifacts.
    pub fn padded(&self, extra: usize) -> Self {
        Self {
            dim_x: self.dim_x + extra,
            dim_z: self.dim_z + extra,
            spin: self.spin,
        }
    }

    fn check_same(&self, other: &Self, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch(format!(
                "{what}: {self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

/// Dense complex operator on a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: ModeSpace,
    matrix: DMatrix<Complex64>,
}

impl OperatorMatrix {
    /// Wraps a dense matrix, checking that its side matches the space.
    pub fn from_matrix(space: ModeSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "matrix is {}x{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: ModeSpace) -> Self {
        let d = space.total_dim();
        Self {
            space,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: ModeSpace) -> Self {
        let d = space.total_dim();
        Self {
            space,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    /// [self, other] = self·other − other·self.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.space.check_same(&other.space, "commutator")?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.map(|v| c * v),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Whether max |H − H†| ≤ tol · max |H|.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let dev = (&self.matrix - self.matrix.adjoint())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()));
        dev <= rel_tol * scale
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Projects onto a smaller space: keeps the rows and columns whose x and
    /// z occupations fit inside `sub`. Used to strip guard levels after
    /// commutator algebra.
    pub fn restricted_to(&self, sub: &ModeSpace) -> Result<Self> {
        if sub.dim_x > self.space.dim_x
            || sub.dim_z > self.space.dim_z
            || sub.spin != self.space.spin
        {
            return Err(Error::SpaceMismatch(format!(
                "cannot restrict {:?} to {:?}",
                self.space, sub
            )));
        }
        let spins = if sub.spin { 2 } else { 1 };
        let keep: Vec<usize> = (0..spins)
            .flat_map(|s| {
                (0..sub.dim_z).flat_map(move |nz| {
                    (0..sub.dim_x).map(move |nx| (s, nz, nx))
                })
            })
            .map(|(s, nz, nx)| self.space.index_of(s, nz, nx))
            .collect();
        let d = sub.total_dim();
        let mut m = DMatrix::zeros(d, d);
        for (i, &ri) in keep.iter().enumerate() {
            for (j, &cj) in keep.iter().enumerate() {
                m[(i, j)] = self.matrix[(ri, cj)];
            }
        }
        Ok(Self { space: *sub, matrix: m })
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl std::ops::Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

/// Single-mode annihilation matrix: (a)_{n-1,n} = √n.
fn ladder_block(dim: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

fn pauli_block(axis: SpinAxis) -> DMatrix<Complex64> {
    let i = Complex64::i();
    let one = Complex64::ONE;
    let zero = Complex64::ZERO;
    // basis order (|↑⟩, |↓⟩)
    match axis {
        SpinAxis::X => DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
        SpinAxis::Y => DMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]),
        SpinAxis::Z => DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
    }
}

/// Embeds single-factor blocks into the full (spin ⊗ z ⊗ x) space.
fn embed(
    space: ModeSpace,
    spin_block: Option<&DMatrix<Complex64>>,
    z_block: Option<&DMatrix<Complex64>>,
    x_block: Option<&DMatrix<Complex64>>,
) -> OperatorMatrix {
    let eye = |d: usize| DMatrix::<Complex64>::identity(d, d);
    let x = x_block.cloned().unwrap_or_else(|| eye(space.dim_x));
    let z = z_block.cloned().unwrap_or_else(|| eye(space.dim_z));
    let zx = z.kronecker(&x);
    let full = if space.spin {
        let s = spin_block.cloned().unwrap_or_else(|| eye(2));
        s.kronecker(&zx)
    } else {
        zx
    };
    OperatorMatrix {
        space,
        matrix: full,
    }
}

/// Annihilation operator of `mode`, tensored with identities on the other
/// factors. The creation operator is its conjugate transpose.
pub fn build_ladder(space: ModeSpace, mode: Mode) -> OperatorMatrix {
    let block = ladder_block(space.mode_dim(mode));
    match mode {
        Mode::X => embed(space, None, None, Some(&block)),
        Mode::Z => embed(space, None, Some(&block), None),
    }
}

/// Phonon-number operator n̂ = a†a of `mode` (diagonal in the Fock basis).
pub fn build_number(space: ModeSpace, mode: Mode) -> OperatorMatrix {
    let dim = space.mode_dim(mode);
    let block = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(r as f64, 0.0)
        } else {
            Complex64::ZERO
        }
    });
    match mode {
        Mode::X => embed(space, None, None, Some(&block)),
        Mode::Z => embed(space, None, Some(&block), None),
    }
}

/// Pauli operator on the spin factor, tensored with mode identities.
pub fn build_spin(space: ModeSpace, axis: SpinAxis) -> Result<OperatorMatrix> {
    if !space.spin {
        return Err(Error::InvalidSpace(
            "build_spin requires a space with a spin factor".into(),
        ));
    }
    Ok(embed(space, Some(&pauli_block(axis)), None, None))
}

/// Normalized state vector on a [`ModeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    space: ModeSpace,
    amplitudes: DVector<Complex64>,
}

impl QuantumState {
    /// Wraps an amplitude vector; the Euclidean norm must be 1 within
    /// [`NORM_TOL`].
    pub fn from_amplitudes(space: ModeSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::SpaceMismatch(format!(
                "amplitude vector has length {}, space dimension is {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "state norm {norm} differs from 1 by more than {NORM_TOL:.0e}"
            )));
        }
        Ok(Self { space, amplitudes })
    }

    /// Wraps amplitudes without the norm check. Reserved for propagation
    /// snapshots, whose norm is allowed to drift within the run's declared
    /// drift budget and is monitored separately.
    pub(crate) fn from_amplitudes_unchecked(
        space: ModeSpace,
        amplitudes: DVector<Complex64>,
    ) -> Self {
        debug_assert_eq!(amplitudes.len(), space.total_dim());
        Self { space, amplitudes }
    }

    /// Ground state |0, 0⟩ (spin |↑⟩ if present).
    pub fn ground(space: ModeSpace) -> Self {
        Self::fock(space, 0, 0).expect("ground state always fits")
    }

    /// Fock state |n_z, n_x⟩ with spin |↑⟩ if present.
    pub fn fock(space: ModeSpace, n_x: usize, n_z: usize) -> Result<Self> {
        if n_x >= space.dim_x || n_z >= space.dim_z {
            return Err(Error::InvalidSpace(format!(
                "Fock labels ({n_x}, {n_z}) exceed truncations ({}, {})",
                space.dim_x, space.dim_z
            )));
        }
        let mut v = DVector::zeros(space.total_dim());
        v[space.index_of(0, n_z, n_x)] = Complex64::ONE;
        Ok(Self {
            space,
            amplitudes: v,
        })
    }

    /// Replaces the spin factor of a product state with
    /// cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩ applied to the current motional
    /// amplitudes (valid for states built by the constructors here, which are
    /// products with spin |↑⟩).
    pub fn with_spin_superposition(&self, up: Complex64, down: Complex64) -> Result<Self> {
        if !self.space.spin {
            return Err(Error::InvalidSpace(
                "state has no spin factor".into(),
            ));
        }
        let block = self.space.dim_x * self.space.dim_z;
        let motional = self.amplitudes.rows(0, block).into_owned();
        if self.amplitudes.rows(block, block).norm() > 0.0 {
            return Err(Error::InvalidParameter(
                "spin factor is already in a superposition".into(),
            ));
        }
        let mut v = DVector::zeros(2 * block);
        for k in 0..block {
            v[k] = up * motional[k];
            v[block + k] = down * motional[k];
        }
        Self::from_amplitudes(self.space, v)
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Marginal Fock-level populations of `mode`.
    pub fn mode_populations(&self, mode: Mode) -> Vec<f64> {
        let dim = self.space.mode_dim(mode);
        let mut pops = vec![0.0; dim];
        let spins = if self.space.spin { 2 } else { 1 };
        for s in 0..spins {
            for nz in 0..self.space.dim_z {
                for nx in 0..self.space.dim_x {
                    let p = self.amplitudes[self.space.index_of(s, nz, nx)].norm_sqr();
                    let level = match mode {
                        Mode::X => nx,
                        Mode::Z => nz,
                    };
                    pops[level] += p;
                }
            }
        }
        pops
    }

    /// Population in the top two Fock levels of `mode` (the leakage monitor).
    pub fn top_level_population(&self, mode: Mode) -> f64 {
        let pops = self.mode_populations(mode);
        let d = pops.len();
        pops[d - 1] + pops[d - 2]
    }

    /// ⟨a⟩, ⟨a²⟩ and ⟨n⟩ of `mode`, computed directly from amplitudes.
    pub fn mode_moments(&self, mode: Mode) -> (Complex64, Complex64, f64) {
        let spins = if self.space.spin { 2 } else { 1 };
        let mut mean_a = Complex64::ZERO;
        let mut mean_a2 = Complex64::ZERO;
        let mut mean_n = 0.0;
        let dim = self.space.mode_dim(mode);
        let shifted = |s: usize, nz: usize, nx: usize, by: usize| match mode {
            Mode::X => self.space.index_of(s, nz, nx + by),
            Mode::Z => self.space.index_of(s, nz + by, nx),
        };
        for s in 0..spins {
            for nz in 0..self.space.dim_z {
                for nx in 0..self.space.dim_x {
                    let n = match mode {
                        Mode::X => nx,
                        Mode::Z => nz,
                    };
                    let c = self.amplitudes[self.space.index_of(s, nz, nx)];
                    mean_n += n as f64 * c.norm_sqr();
                    if n + 1 < dim {
                        let c1 = self.amplitudes[shifted(s, nz, nx, 1)];
                        mean_a += c.conj() * c1 * ((n + 1) as f64).sqrt();
                    }
                    if n + 2 < dim {
                        let c2 = self.amplitudes[shifted(s, nz, nx, 2)];
                        mean_a2 +=
                            c.conj() * c2 * (((n + 1) * (n + 2)) as f64).sqrt();
                    }
                }
            }
        }
        (mean_a, mean_a2, mean_n)
    }
}

/// Coherent state |α⟩ in `mode`, ground state in the other factors.
///
/// The Poisson amplitudes are renormalized after truncation; if the top two
/// Fock levels would carry more than [`LEAKAGE_LIMIT`] population the
/// truncation is rejected instead.
pub fn coherent_state(space: ModeSpace, mode: Mode, alpha: Complex64) -> Result<QuantumState> {
    let dim = space.mode_dim(mode);
    let mut block = DVector::zeros(dim);
    // c_n = α^n / √(n!) e^{-|α|²/2}, built by recurrence
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        block[n] = c;
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    let tail = block[dim - 1].norm_sqr() + block[dim - 2].norm_sqr();
    if tail > LEAKAGE_LIMIT {
        return Err(Error::TruncationLeakage {
            mode,
            population: tail,
            limit: LEAKAGE_LIMIT,
        });
    }
    let norm = block.norm();
    block /= Complex64::new(norm, 0.0);

    let mut v = DVector::zeros(space.total_dim());
    for n in 0..dim {
        let idx = match mode {
            Mode::X => space.index_of(0, 0, n),
            Mode::Z => space.index_of(0, n, 0),
        };
        v[idx] = block[n];
    }
    QuantumState::from_amplitudes(space, v)
}

/// ⟨ψ|Ô|ψ⟩.
pub fn expectation(state: &QuantumState, op: &OperatorMatrix) -> Result<Complex64> {
    state
        .space
        .check_same(&op.space, "expectation of operator on a different space")?;
    let applied = &op.matrix * &state.amplitudes;
    Ok(state.amplitudes.dotc(&applied))
}
