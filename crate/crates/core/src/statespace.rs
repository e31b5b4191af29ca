//! Multipartite pure states, reduced density matrices and local unitary action.

use std::fmt;

use num_complex::Complex64;

use crate::linalg::{self, HermitianMatrix, SpectralDecomposition};
use crate::{CMatrix, CVector, Error, Result};

/// Renormalizations larger than this are reported through
/// [`PureState::was_renormalized`].
pub const RENORMALIZATION_WARN: f64 = 1e-9;
/// Entrywise Hermiticity and trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a positive semidefinite density matrix.
pub const PSD_TOL: f64 = -1e-10;
/// Unitarity tolerance on every factor of a [`LocalUnitaryTuple`].
pub const UNITARY_TOL: f64 = 1e-10;

/// Local dimensions `(N_1, ..., N_n)`, `n >= 2`, every entry `>= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsystemDims(Vec<usize>);

impl SubsystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidDims(format!(
                "need at least two subsystems, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidDims(format!(
                "zero local dimension in {dims:?}"
            )));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidDims(format!("total dimension of {dims:?} overflows")))?;
        Ok(Self(dims))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of subsystems.
    pub fn parties(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self, subsystem: usize) -> usize {
        self.0[subsystem]
    }

    /// Product of all local dimensions.
    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    fn check_subsystem(&self, subsystem: usize) -> Result<()> {
        if subsystem >= self.parties() {
            return Err(Error::InvalidSubsystems(format!(
                "subsystem {subsystem} out of range for {} parties",
                self.parties()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SubsystemDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

/// Splits every flat index over `dims` into a (row, column) pair where the
/// row digits are the positions in `rows` and the column digits the rest,
/// both in mixed-radix order with earlier positions more significant.
fn split_indices(dims: &[usize], rows: &[usize]) -> Vec<(usize, usize)> {
    let total: usize = dims.iter().product();
    let in_rows: Vec<bool> = (0..dims.len()).map(|i| rows.contains(&i)).collect();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..total {
        let mut r = 0;
        let mut c = 0;
        for (pos, &digit) in digits.iter().enumerate() {
            if in_rows[pos] {
                r = r * dims[pos] + digit;
            } else {
                c = c * dims[pos] + digit;
            }
        }
        out.push((r, c));
        // Increment the mixed-radix counter, last position fastest.
        for pos in (0..dims.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    out
}

/// Reshapes a flat tensor into a matrix whose rows run over the positions
/// `rows` (ascending) and columns over the remaining positions.
fn group_matrix(amps: &CVector, dims: &[usize], rows: &[usize]) -> CMatrix {
    let nrows: usize = rows.iter().map(|&p| dims[p]).product();
    let ncols = amps.len() / nrows;
    let mut m = CMatrix::zeros(nrows, ncols);
    for (flat, (r, c)) in split_indices(dims, rows).into_iter().enumerate() {
        m[(r, c)] = amps[flat];
    }
    m
}

/// Partial trace of a square operator on `dims` over the positions `traced`.
/// The result acts on the remaining positions in their original order.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], traced: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, dims {dims:?} need side {total}",
            m.nrows(),
            m.ncols()
        )));
    }
    if traced.iter().any(|&t| t >= dims.len()) {
        return Err(Error::InvalidSubsystems(format!(
            "traced positions {traced:?} out of range for {} factors",
            dims.len()
        )));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|p| !traced.contains(p)).collect();
    let side: usize = kept.iter().map(|&p| dims[p]).product();
    let idx = split_indices(dims, &kept);
    let mut out = CMatrix::zeros(side, side);
    for (i, &(ri, ti)) in idx.iter().enumerate() {
        for (j, &(rj, tj)) in idx.iter().enumerate() {
            if ti == tj {
                out[(ri, rj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Normalized pure state on a tensor product of finite-dimensional spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: SubsystemDims,
    amps: CVector,
    norm_deviation: f64,
}

/// Builds a state from raw amplitudes, dividing by their norm.
pub fn make_state(dims: SubsystemDims, amplitudes: Vec<Complex64>) -> Result<PureState> {
    PureState::new(dims, amplitudes)
}

impl PureState {
    pub fn new(dims: SubsystemDims, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = dims.total();
        if amplitudes.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: amplitudes.len(),
            });
        }
        let amps = CVector::from_vec(amplitudes);
        let norm = amps.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            dims,
            amps: amps / Complex64::new(norm, 0.0),
            norm_deviation: (norm - 1.0).abs(),
        })
    }

    /// Computational basis state `|index>` in flat mixed-radix order.
    pub fn basis(dims: SubsystemDims, index: usize) -> Result<Self> {
        let total = dims.total();
        if index >= total {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {total}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); total];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(dims, amps)
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`; all local dimensions must be equal and `>= 2`.
    pub fn ghz(dims: SubsystemDims) -> Result<Self> {
        let d = dims.dim(0);
        if d < 2 || dims.as_slice().iter().any(|&x| x != d) {
            return Err(Error::InvalidDims(format!(
                "GHZ needs equal local dimensions >= 2, got {dims}"
            )));
        }
        let total = dims.total();
        let mut amps = vec![Complex64::new(0.0, 0.0); total];
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = h;
        // |1...1> in base d.
        let ones = dims.as_slice().iter().fold(0, |acc, &dd| acc * dd + 1);
        amps[ones] = h;
        Self::new(dims, amps)
    }

    /// Equal superposition of single-excitation qubit states.
    pub fn w(dims: SubsystemDims) -> Result<Self> {
        if dims.as_slice().iter().any(|&x| x != 2) {
            return Err(Error::InvalidDims(format!(
                "W state needs all dims 2, got {dims}"
            )));
        }
        let n = dims.parties();
        let mut amps = vec![Complex64::new(0.0, 0.0); dims.total()];
        let a = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        for k in 0..n {
            amps[1 << k] = a;
        }
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> &SubsystemDims {
        &self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// `| ||input|| - 1 |` before normalization.
    pub fn norm_deviation(&self) -> f64 {
        self.norm_deviation
    }

    pub fn was_renormalized(&self) -> bool {
        self.norm_deviation > RENORMALIZATION_WARN
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch(
                self.dims.as_slice().to_vec(),
                other.dims.as_slice().to_vec(),
            ));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Wraps amplitudes that are already unit norm (up to rounding).
    pub(crate) fn from_normalized(dims: SubsystemDims, amps: CVector) -> Self {
        Self {
            dims,
            amps,
            norm_deviation: 0.0,
        }
    }

    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, traced)
    }
}

fn normalize_traced(dims: &SubsystemDims, traced: &[usize]) -> Result<Vec<usize>> {
    let mut t = traced.to_vec();
    t.sort_unstable();
    t.dedup();
    for &s in &t {
        dims.check_subsystem(s)?;
    }
    if t.is_empty() || t.len() == dims.parties() {
        return Err(Error::InvalidSubsystems(format!(
            "traced set {traced:?} must be a nonempty proper subset of {} subsystems",
            dims.parties()
        )));
    }
    Ok(t)
}

/// Reduced state of `state` after tracing out the subsystems in `traced`.
pub fn partial_trace(state: &PureState, traced: &[usize]) -> Result<DensityMatrix> {
    let traced = normalize_traced(&state.dims, traced)?;
    let kept: Vec<usize> = (0..state.dims.parties())
        .filter(|p| !traced.contains(p))
        .collect();
    // rho = Psi Psi^dagger with Psi[(kept), (traced)] = amplitude.
    let psi = group_matrix(&state.amps, state.dims.as_slice(), &kept);
    let mut m = &psi * psi.adjoint();
    symmetrize(&mut m);
    Ok(DensityMatrix {
        parent: state.dims.clone(),
        dims: kept.iter().map(|&p| state.dims.dim(p)).collect(),
        subsystems: kept,
        matrix: m,
    })
}

/// Matricization with `pivot` as the row index and the remaining subsystems,
/// in order, as the mixed-radix column index.
pub fn unfold(state: &PureState, pivot: usize) -> Result<CMatrix> {
    state.dims.check_subsystem(pivot)?;
    Ok(group_matrix(&state.amps, state.dims.as_slice(), &[pivot]))
}

/// Per-index slices `A^(j)` of a tripartite state along `pivot`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceFamily {
    pub pivot: usize,
    /// Subsystem indexing the rows of every slice.
    pub row_subsystem: usize,
    /// Subsystem indexing the columns of every slice.
    pub col_subsystem: usize,
    pub matrices: Vec<CMatrix>,
}

pub fn slice_matrices(state: &PureState, pivot: usize) -> Result<SliceFamily> {
    let dims = state.dims.as_slice();
    if dims.len() != 3 {
        return Err(Error::NotTripartite(dims.len()));
    }
    state.dims.check_subsystem(pivot)?;
    let others: Vec<usize> = (0..3).filter(|&p| p != pivot).collect();
    let (row_subsystem, col_subsystem) = (others[0], others[1]);
    let a = unfold(state, pivot)?;
    let (nr, nc) = (dims[row_subsystem], dims[col_subsystem]);
    let matrices = (0..dims[pivot])
        .map(|j| CMatrix::from_fn(nr, nc, |k, l| a[(j, k * nc + l)]))
        .collect();
    Ok(SliceFamily {
        pivot,
        row_subsystem,
        col_subsystem,
        matrices,
    })
}

/// Reduced density matrix on a subset of the subsystems of a parent state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    parent: SubsystemDims,
    subsystems: Vec<usize>,
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checked constructor: Hermitian and unit trace within 1e-12, smallest
    /// eigenvalue at least -1e-10.
    pub fn new(parent: SubsystemDims, subsystems: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let mut sorted = subsystems.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != subsystems || subsystems.is_empty() {
            return Err(Error::InvalidSubsystems(format!(
                "retained subsystems {subsystems:?} must be nonempty, ascending and distinct"
            )));
        }
        for &s in &subsystems {
            parent.check_subsystem(s)?;
        }
        let dims: Vec<usize> = subsystems.iter().map(|&s| parent.dim(s)).collect();
        let side: usize = dims.iter().product();
        if matrix.nrows() != side || matrix.ncols() != side {
            return Err(Error::ShapeMismatch(format!(
                "density matrix is {}x{}, retained dims {dims:?} need side {side}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = Self {
            parent,
            subsystems,
            dims,
            matrix,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermitian_residual(&self.matrix);
        if herm > DENSITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = linalg::trace(&self.matrix);
        if (tr - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace is {tr}"
            )));
        }
        let min = self.spectrum().eigenvalues.last().copied().unwrap_or(0.0);
        if min < PSD_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix has eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::new_unchecked(self.matrix.clone())
    }

    pub fn spectrum(&self) -> SpectralDecomposition {
        linalg::herm_eig(&self.hermitian())
    }

    /// Original indices of the retained subsystems, ascending.
    pub fn subsystems(&self) -> &[usize] {
        &self.subsystems
    }

    /// Local dimensions of the retained subsystems.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Dimensions of the full system this state was reduced from.
    pub fn parent(&self) -> &SubsystemDims {
        &self.parent
    }

    /// Position of an original subsystem index inside this matrix's factors.
    pub fn position_of(&self, subsystem: usize) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|&s| s == subsystem)
            .ok_or_else(|| {
                Error::InvalidSubsystems(format!(
                    "subsystem {subsystem} is not among retained {:?}",
                    self.subsystems
                ))
            })
    }

    /// Further partial trace; `traced` uses original subsystem indices.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DensityMatrix> {
        let mut positions = traced
            .iter()
            .map(|&s| self.position_of(s))
            .collect::<Result<Vec<_>>>()?;
        positions.sort_unstable();
        positions.dedup();
        if positions.is_empty() || positions.len() == self.subsystems.len() {
            return Err(Error::InvalidSubsystems(format!(
                "traced set {traced:?} must be a nonempty proper subset of {:?}",
                self.subsystems
            )));
        }
        let mut m = partial_trace_matrix(&self.matrix, &self.dims, &positions)?;
        symmetrize(&mut m);
        let subsystems: Vec<usize> = self
            .subsystems
            .iter()
            .enumerate()
            .filter(|(p, _)| !positions.contains(p))
            .map(|(_, &s)| s)
            .collect();
        Ok(DensityMatrix {
            parent: self.parent.clone(),
            dims: subsystems.iter().map(|&s| self.parent.dim(s)).collect(),
            subsystems,
            matrix: m,
        })
    }
}

/// One unitary per subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitaryTuple(Vec<CMatrix>);

impl LocalUnitaryTuple {
    pub fn new(unitaries: Vec<CMatrix>) -> Result<Self> {
        for u in &unitaries {
            let r = linalg::unitarity_residual(u);
            if r >= UNITARY_TOL {
                return Err(Error::NotUnitary(r));
            }
        }
        Ok(Self(unitaries))
    }

    pub(crate) fn new_unchecked(unitaries: Vec<CMatrix>) -> Self {
        Self(unitaries)
    }

    pub fn identity(dims: &SubsystemDims) -> Self {
        Self(
            dims.as_slice()
                .iter()
                .map(|&d| CMatrix::identity(d, d))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> &CMatrix {
        &self.0[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        self.0.iter()
    }

    pub(crate) fn set(&mut self, k: usize, u: CMatrix) {
        self.0[k] = u;
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(|u| u.nrows()).collect()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().map(|u| u.adjoint()).collect())
    }

    /// Factorwise product `self_k * other_k`: applying the result equals
    /// applying `other` first and then `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimsMismatch(self.dims(), other.dims()));
        }
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(u, v)| u * v).collect(),
        ))
    }
}

/// Applies `u` to the factor at position `k` of a flat tensor over `dims`.
pub fn apply_on_subsystem(amps: &CVector, dims: &[usize], k: usize, u: &CMatrix) -> CVector {
    let d = dims[k];
    let right: usize = dims[k + 1..].iter().product();
    let left = amps.len() / (d * right);
    let mut out = CVector::zeros(amps.len());
    for l in 0..left {
        for a in 0..d {
            for i in 0..d {
                let coeff = u[(a, i)];
                if coeff == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let dst = (l * d + a) * right;
                let src = (l * d + i) * right;
                for r in 0..right {
                    out[dst + r] += coeff * amps[src + r];
                }
            }
        }
    }
    out
}

/// `(U_1 x ... x U_n) |psi>`.
pub fn apply_local_unitaries(state: &PureState, us: &LocalUnitaryTuple) -> Result<PureState> {
    let dims = state.dims.as_slice();
    if us.dims() != dims {
        return Err(Error::ShapeMismatch(format!(
            "unitary sizes {:?} do not match dims {dims:?}",
            us.dims()
        )));
    }
    let mut amps = state.amps.clone();
    for (k, u) in us.iter().enumerate() {
        amps = apply_on_subsystem(&amps, dims, k, u);
    }
    Ok(PureState::from_normalized(state.dims.clone(), amps))
}
