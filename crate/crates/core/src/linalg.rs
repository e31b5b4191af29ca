//! Dense complex kernels: Hermitian eigendecomposition by cyclic Jacobi
//! rotations, integer matrix powers, polar factors and traces.
//!
//! Matrices here are small (side at most a few dozen), so the Jacobi method's
//! robustness on clustered spectra matters more than its cubic-per-sweep cost.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{CMatrix, CVector, Error, Result};

/// Entrywise tolerance on `H - H^dagger` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated on the trace of a Hermitian product.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

/// Largest entry modulus of `m`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |H - H^dagger|` entrywise.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |U^dagger U - I|` entrywise.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let g = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for ((i, j), z) in g
        .iter()
        .enumerate()
        .map(|(k, z)| ((k % g.nrows(), k / g.nrows()), z))
    {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((z - Complex64::new(target, 0.0)).norm());
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Trace of a matrix that is Hermitian (or a product whose trace is real in
/// exact arithmetic). Fails rather than silently dropping an imaginary part
/// above [`IMAG_RESIDUE_TOL`].
pub fn real_trace(m: &CMatrix) -> Result<f64> {
    let t = trace(m);
    if t.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(t.im));
    }
    Ok(t.re)
}

/// Complex square matrix checked to be Hermitian within [`HERMITIAN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let residual = hermitian_residual(&m);
        if residual >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(residual));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be Hermitian by construction.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        debug_assert!(hermitian_residual(&m) < 1e-8);
        Self(m)
    }

    pub fn from_real_symmetric(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn eig(&self) -> SpectralDecomposition {
        herm_eig(self)
    }

    pub fn pow(&self, exponent: u32) -> Result<Self> {
        mat_pow_nat(self, exponent)
    }
}

/// Eigenvalues sorted in descending order, with matching eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `m` is the eigenvector for `eigenvalues[m]`.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, m: usize) -> CVector {
        self.eigenvectors.column(m).into_owned()
    }

    /// Number of eigenvalues strictly above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > cutoff).count()
    }

    /// `sum_m lambda_m phi_m phi_m^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (m, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(m);
            out += (v * v.adjoint()) * Complex64::new(lambda, 0.0);
        }
        out
    }

    /// `sum_m lambda_m^alpha`: the eigenvalue route to `Tr H^alpha`.
    pub fn power_trace(&self, exponent: u32) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&l| l.powi(exponent as i32))
            .sum()
    }

    /// Smallest relative gap between neighbouring eigenvalues,
    /// `|a - b| / max(|a|, |b|)`; zero when two eigenvalues coincide
    /// (including two zeros). `None` for fewer than two eigenvalues.
    pub fn min_relative_gap(&self) -> Option<f64> {
        min_relative_gap(&self.eigenvalues)
    }
}

/// Relative gap `|a - b| / max(|a|, |b|)`, defined as zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Smallest relative gap over all pairs of a descending sequence.
pub fn min_relative_gap(sorted_desc: &[f64]) -> Option<f64> {
    // Relative gap is not monotone in index distance, so check every pair.
    let mut best: Option<f64> = None;
    for i in 0..sorted_desc.len() {
        for j in i + 1..sorted_desc.len() {
            let g = relative_gap(sorted_desc[i], sorted_desc[j]);
            best = Some(best.map_or(g, |b: f64| b.min(g)));
        }
    }
    best
}

/// Smallest absolute gap between neighbours of a descending sequence.
pub fn min_absolute_gap(sorted_desc: &[f64]) -> Option<f64> {
    sorted_desc
        .windows(2)
        .map(|w| (w[0] - w[1]).abs())
        .fold(None, |acc, g| Some(acc.map_or(g, |a: f64| a.min(g))))
}

/// Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi sweeps.
///
/// Each rotation acts on the plane `(p, q)` as `J = D R D^dagger` where `D`
/// carries the phase of `h_pq` and `R` is the classical real rotation, so the
/// diagonal stays real throughout. Eigenvalues are returned in descending
/// order; equal eigenvalues keep the order in which the sweeps left them.
pub fn herm_eig(h: &HermitianMatrix) -> SpectralDecomposition {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    // Symmetrize so the iteration sees an exactly Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n, n);

    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = f64::EPSILON * f64::EPSILON * total * total;

    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let se = phase * s;
                let sec = phase.conj() * s;

                // A <- A J (columns p, q).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * sec;
                    a[(k, q)] = akp * se + akq * c;
                }
                // A <- J^dagger A (rows p, q).
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * se;
                    a[(q, k)] = apk * sec + aqk * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // V <- V J.
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * sec;
                    v[(k, q)] = vkp * se + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps first-use order among ties.
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// `H^alpha` by binary exponentiation of the matrix, `alpha >= 1`.
pub fn mat_pow_nat(h: &HermitianMatrix, exponent: u32) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::new_unchecked(mat_pow(
        h.as_matrix(),
        exponent,
    )?))
}

/// Integer power of any square matrix by repeated squaring.
pub fn mat_pow(m: &CMatrix, exponent: u32) -> Result<CMatrix> {
    if exponent == 0 {
        return Err(Error::ZeroExponent);
    }
    if !m.is_square() {
        return Err(Error::ShapeMismatch(
            "matrix power of a non-square matrix".into(),
        ));
    }
    let mut base = m.clone();
    let mut acc: Option<CMatrix> = None;
    let mut e = exponent;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => &a * &base,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    Ok(acc.expect("exponent >= 1 sets the accumulator"))
}

/// Unitary `U` maximizing `Re Tr(U^dagger M)`: `U = V W^dagger` from the SVD
/// `M = V S W^dagger`. For singular `M` the completion of the null space is
/// whatever the SVD returns, which is deterministic for a given input.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(
            "polar factor of a non-square matrix".into(),
        ));
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(Error::Internal(
                "SVD did not return singular vectors".into(),
            ))
        }
    };
    Ok(u * v_t)
}
