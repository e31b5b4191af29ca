//! Local unitary invariants of pure states and of their reduced states.
//!
//! * `I_alpha^p = Tr (Tr_p |psi><psi|)^alpha` ([`i_alpha`]),
//! * `I_{alpha,beta}^{j,k} = Tr (Tr_k (Tr_j |psi><psi|)^alpha)^beta`
//!   ([`i_alpha_beta`], with an independent slice-matrix evaluation in
//!   [`i_alpha_beta_slices`]),
//! * the nested n-partite generalization ([`nested_invariant`]),
//! * `J_alpha^j(rho) = Tr Tr_j(rho^alpha)` ([`j_alpha`]),
//! * the Gram data `Theta`, `Omega`, `X`, `Y` built from the eigenprojector
//!   reductions of a bipartite state ([`gram_invariants`]),
//! * per-eigenvector multiplicity data ([`multiplicity_report`]).

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{self, mat_pow, real_trace, SpectralDecomposition};
use crate::statespace::{
    partial_trace, partial_trace_matrix, slice_matrices, DensityMatrix, PureState,
};
use crate::{subsystem_name, CMatrix, Error, Result};

/// Eigenvalues below this are treated as zero when retaining eigenvectors.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Relative eigenvalue gap below which a spectrum counts as degenerate.
pub const MULTIPLICITY_GAP: f64 = 1e-8;
/// Agreement demanded between the `beta = 1` pair invariant and `I_alpha`.
const BETA_ONE_CONSISTENCY: f64 = 1e-12;
/// Upper bound on the number of index tuples the slice path will enumerate.
const SLICE_TERM_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvariantKind {
    /// `I_alpha^p`.
    Simple,
    /// Nested traces and powers; two steps give `I_{alpha,beta}^{j,k}`.
    Nested,
    /// `J_alpha^j` of a reduced state.
    MixedJ,
}

/// Names one invariant: its family, the subsystems traced (in application
/// order) and the exponent applied after each trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InvariantLabel {
    pub kind: InvariantKind,
    pub subsystems: Vec<usize>,
    pub exponents: Vec<u32>,
}

impl InvariantLabel {
    pub fn simple(pivot: usize, alpha: u32) -> Self {
        Self {
            kind: InvariantKind::Simple,
            subsystems: vec![pivot],
            exponents: vec![alpha],
        }
    }

    pub fn pair(j: usize, k: usize, alpha: u32, beta: u32) -> Self {
        Self {
            kind: InvariantKind::Nested,
            subsystems: vec![j, k],
            exponents: vec![alpha, beta],
        }
    }

    pub fn nested(order: Vec<usize>, exponents: Vec<u32>) -> Self {
        Self {
            kind: InvariantKind::Nested,
            subsystems: order,
            exponents,
        }
    }

    pub fn mixed_j(subsystem: usize, alpha: u32) -> Self {
        Self {
            kind: InvariantKind::MixedJ,
            subsystems: vec![subsystem],
            exponents: vec![alpha],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsystems.is_empty() || self.subsystems.len() != self.exponents.len() {
            return Err(Error::InvalidArgument(format!(
                "label {self} needs equally long nonempty subsystem and exponent lists"
            )));
        }
        if self.exponents.contains(&0) {
            return Err(Error::ZeroExponent);
        }
        for (i, s) in self.subsystems.iter().enumerate() {
            if self.subsystems[..i].contains(s) {
                return Err(Error::InvalidSubsystems(format!(
                    "subsystem {} repeated in {self}",
                    subsystem_name(*s)
                )));
            }
        }
        match self.kind {
            InvariantKind::Simple | InvariantKind::MixedJ if self.subsystems.len() != 1 => Err(
                Error::InvalidArgument(format!("label {self} must name exactly one subsystem")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for InvariantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.kind {
            InvariantKind::MixedJ => "J",
            _ => "I",
        };
        let subs: Vec<String> = self.subsystems.iter().map(|&s| subsystem_name(s)).collect();
        let exps: Vec<String> = self.exponents.iter().map(|e| e.to_string()).collect();
        write!(f, "{head}[{};{}]", subs.join(","), exps.join(","))
    }
}

/// Ordered `(label, value)` list used to compare two states.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantProfile {
    entries: Vec<(InvariantLabel, f64)>,
}

impl InvariantProfile {
    pub fn new(entries: Vec<(InvariantLabel, f64)>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[(InvariantLabel, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &InvariantLabel) -> Option<f64> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(InvariantLabel, f64)> {
        self.entries.iter()
    }
}

fn check_exponent(e: u32) -> Result<()> {
    if e == 0 {
        Err(Error::ZeroExponent)
    } else {
        Ok(())
    }
}

/// `Tr rho^alpha` with `rho = Tr_p |psi><psi|`.
pub fn i_alpha(state: &PureState, pivot: usize, alpha: u32) -> Result<f64> {
    check_exponent(alpha)?;
    let rho = partial_trace(state, &[pivot])?;
    real_trace(&mat_pow(rho.matrix(), alpha)?)
}

/// `Tr (Tr_k (Tr_j |psi><psi|)^alpha)^beta`, evaluated on dense reduced
/// matrices.
pub fn i_alpha_beta(state: &PureState, j: usize, k: usize, alpha: u32, beta: u32) -> Result<f64> {
    check_exponent(alpha)?;
    check_exponent(beta)?;
    if j == k {
        return Err(Error::InvalidSubsystems(format!(
            "pair invariant needs distinct subsystems, got {} twice",
            subsystem_name(j)
        )));
    }
    if k >= state.dims().parties() {
        return Err(Error::InvalidSubsystems(format!(
            "subsystem {k} out of range"
        )));
    }
    let rho = partial_trace(state, &[j])?;
    let powered = mat_pow(rho.matrix(), alpha)?;
    let reduced = partial_trace_matrix(&powered, rho.dims(), &[rho.position_of(k)?])?;
    let value = real_trace(&mat_pow(&reduced, beta)?)?;
    if beta == 1 {
        let simple = i_alpha(state, j, alpha)?;
        if (simple - value).abs() > BETA_ONE_CONSISTENCY {
            return Err(Error::Internal(format!(
                "I[{};{alpha},1] = {value} but I[{};{alpha}] = {simple}",
                subsystem_name(j),
                subsystem_name(j)
            )));
        }
    }
    Ok(value)
}

/// `I_{alpha,beta}^{j,k}` of a tripartite state from the slices `A^(m)` along
/// `j`, by explicit enumeration of all `N_j^(alpha*beta)` index tuples:
///
/// `sum prod_b [prod_t Tr(A^(m_{b,t})^dagger A^(m_{b,t+1}))] * Tr(prod_b T_b)`
///
/// where `T_b = A^(m_{b,1})^T conj(A^(m_{b,alpha}))` when `k` indexes the slice
/// rows and `T_b = A^(m_{b,1}) A^(m_{b,alpha})^dagger` when it indexes the
/// columns. This never forms a density matrix and serves as a cross-check of
/// [`i_alpha_beta`].
pub fn i_alpha_beta_slices(
    state: &PureState,
    j: usize,
    k: usize,
    alpha: u32,
    beta: u32,
) -> Result<f64> {
    check_exponent(alpha)?;
    check_exponent(beta)?;
    if j == k {
        return Err(Error::InvalidSubsystems(
            "pair invariant needs distinct subsystems".into(),
        ));
    }
    let family = slice_matrices(state, j)?;
    let slices = &family.matrices;
    let n = slices.len();
    let (alpha, beta) = (alpha as usize, beta as usize);
    let digits = alpha * beta;
    let terms = (n as u64).checked_pow(digits as u32).unwrap_or(u64::MAX);
    if terms > SLICE_TERM_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "slice enumeration would need {terms} terms"
        )));
    }
    let trace_rows = if k == family.row_subsystem {
        true
    } else if k == family.col_subsystem {
        false
    } else {
        return Err(Error::InvalidSubsystems(format!(
            "subsystem {k} out of range"
        )));
    };

    // G[a][b] = Tr(A^(a)^dagger A^(b)).
    let gram: Vec<Vec<Complex64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| linalg::trace(&(slices[a].adjoint() * &slices[b])))
                .collect()
        })
        .collect();
    // T[a][b]: the surviving factor once the traced index is summed out.
    let tail: Vec<Vec<CMatrix>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    if trace_rows {
                        slices[a].transpose() * slices[b].map(|z| z.conj())
                    } else {
                        &slices[a] * slices[b].adjoint()
                    }
                })
                .collect()
        })
        .collect();

    let mut idx = vec![0usize; digits];
    let mut total = Complex64::new(0.0, 0.0);
    for _ in 0..terms {
        let mut coeff = Complex64::new(1.0, 0.0);
        for b in 0..beta {
            for t in 0..alpha - 1 {
                coeff *= gram[idx[b * alpha + t]][idx[b * alpha + t + 1]];
            }
        }
        if coeff != Complex64::new(0.0, 0.0) {
            let mut prod = tail[idx[0]][idx[alpha - 1]].clone();
            for b in 1..beta {
                prod *= &tail[idx[b * alpha]][idx[b * alpha + alpha - 1]];
            }
            total += coeff * linalg::trace(&prod);
        }
        for d in (0..digits).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    if total.im.abs() > linalg::IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(total.im));
    }
    Ok(total.re)
}

/// Alternates partial traces and powers: trace `order[0]`, raise to
/// `exponents[0]`, trace `order[1]`, raise to `exponents[1]`, and so on, then
/// take the full trace. At least one subsystem must survive every step.
pub fn nested_invariant(state: &PureState, order: &[usize], exponents: &[u32]) -> Result<f64> {
    let label = InvariantLabel::nested(order.to_vec(), exponents.to_vec());
    label.validate()?;
    if order.len() >= state.dims().parties() {
        return Err(Error::InvalidSubsystems(format!(
            "tracing {} of {} subsystems leaves nothing",
            order.len(),
            state.dims().parties()
        )));
    }
    let rho = partial_trace(state, &order[..1])?;
    let mut kept: Vec<usize> = rho.subsystems().to_vec();
    let mut m = mat_pow(rho.matrix(), exponents[0])?;
    for (&s, &e) in order[1..].iter().zip(&exponents[1..]) {
        let pos = kept
            .iter()
            .position(|&x| x == s)
            .ok_or_else(|| Error::InvalidSubsystems(format!("subsystem {s} out of range")))?;
        let dims: Vec<usize> = kept.iter().map(|&x| state.dims().dim(x)).collect();
        m = partial_trace_matrix(&m, &dims, &[pos])?;
        kept.remove(pos);
        m = mat_pow(&m, e)?;
    }
    real_trace(&m)
}

/// `Tr Tr_j(rho^alpha)`; `subsystem` is an original subsystem index.
pub fn j_alpha(rho: &DensityMatrix, subsystem: usize, alpha: u32) -> Result<f64> {
    check_exponent(alpha)?;
    let pos = rho.position_of(subsystem)?;
    let powered = mat_pow(rho.matrix(), alpha)?;
    real_trace(&partial_trace_matrix(&powered, rho.dims(), &[pos])?)
}

/// Evaluates any state-level label.
pub fn evaluate(state: &PureState, label: &InvariantLabel) -> Result<f64> {
    label.validate()?;
    match label.kind {
        InvariantKind::Simple => i_alpha(state, label.subsystems[0], label.exponents[0]),
        InvariantKind::Nested if label.subsystems.len() == 2 => i_alpha_beta(
            state,
            label.subsystems[0],
            label.subsystems[1],
            label.exponents[0],
            label.exponents[1],
        ),
        InvariantKind::Nested => nested_invariant(state, &label.subsystems, &label.exponents),
        InvariantKind::MixedJ => Err(Error::InvalidArgument(format!(
            "{label} is defined on a reduced state, not on a pure state"
        ))),
    }
}

/// Canonical label list for a tripartite state with local dims `dims`:
///
/// 1. `I_alpha^p` for `p = A, B, C` and `alpha = 1..=min(N_p, N/N_p)`;
/// 2. `I_{alpha,beta}^{j,k}` for ordered pairs in lexicographic order, with
///    `alpha` then `beta` ascending. Pairs `(A, s)` use
///    `alpha <= min(N_B^2, N_C^2)`, `beta <= N_r`; the other pairs use
///    `alpha <= N_k * N_r`, `beta <= N_r`, where `r` is the third subsystem.
pub fn profile_labels(dims: &[usize]) -> Result<Vec<InvariantLabel>> {
    if dims.len() != 3 {
        return Err(Error::NotTripartite(dims.len()));
    }
    let total: usize = dims.iter().product();
    let mut labels = Vec::new();
    for (p, &np) in dims.iter().enumerate() {
        for alpha in 1..=np.min(total / np) {
            labels.push(InvariantLabel::simple(p, alpha as u32));
        }
    }
    for j in 0..3 {
        for k in 0..3 {
            if j == k {
                continue;
            }
            let r = 3 - j - k;
            let alpha_max = if j == 0 {
                (dims[1] * dims[1]).min(dims[2] * dims[2])
            } else {
                dims[k] * dims[r]
            };
            for alpha in 1..=alpha_max {
                for beta in 1..=dims[r] {
                    labels.push(InvariantLabel::pair(j, k, alpha as u32, beta as u32));
                }
            }
        }
    }
    Ok(labels)
}

/// Full invariant profile of a tripartite state in [`profile_labels`] order.
pub fn invariant_profile(state: &PureState) -> Result<InvariantProfile> {
    let labels = profile_labels(state.dims().as_slice())?;
    let values = labels
        .par_iter()
        .map(|l| evaluate(state, l))
        .collect::<Result<Vec<f64>>>()?;
    Ok(InvariantProfile::new(
        labels.into_iter().zip(values).collect(),
    ))
}

/// Gram-type invariants of a bipartite state's eigenprojectors.
///
/// Factors are relabeled so that the first has the smaller dimension
/// (`swapped` records whether that exchanged them). With `S_m` the reduction
/// of `|phi_m><phi_m|` onto the smaller factor and `L_m` onto the larger one:
///
/// * `Omega_jk = Tr(S_j S_k)`, `X_jkl = Tr(S_j S_k S_l)`,
/// * `Theta_jk = Tr(L_j^* L_k^*)`, `Y_jkl = Tr(L_j^* L_k^* L_l^*)`.
///
/// `Theta` and `Omega` are zero-padded to `side = N_small^2`. `X` and `Y` are
/// complex in general; they are stored flat in `[j][k][l]` order over the
/// retained indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GramInvariants {
    pub n_eff: usize,
    pub side: usize,
    pub swapped: bool,
    pub theta: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl GramInvariants {
    pub fn x_at(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.x[(j * self.n_eff + k) * self.n_eff + l]
    }

    pub fn y_at(&self, j: usize, k: usize, l: usize) -> Complex64 {
        self.y[(j * self.n_eff + k) * self.n_eff + l]
    }
}

fn real_entry(z: Complex64) -> Result<f64> {
    if z.im.abs() > linalg::IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// Reductions of `|phi><phi|` for `phi` on `n_b x n_c`: `(Tr_C, Tr_B)`.
fn projector_reductions(phi: &[Complex64], n_b: usize, n_c: usize) -> (CMatrix, CMatrix) {
    let m = CMatrix::from_fn(n_b, n_c, |k, l| phi[k * n_c + l]);
    let on_b = &m * m.adjoint();
    let on_c = m.transpose() * m.map(|z| z.conj());
    (on_b, on_c)
}

pub fn gram_invariants(
    spec: &SpectralDecomposition,
    dims: &[usize],
    rank_cutoff: f64,
) -> Result<GramInvariants> {
    if dims.len() != 2 {
        return Err(Error::InvalidDims(format!(
            "Gram invariants need a bipartite state, got dims {dims:?}"
        )));
    }
    let (n_b, n_c) = (dims[0], dims[1]);
    if spec.dim() != n_b * n_c {
        return Err(Error::ShapeMismatch(format!(
            "spectral decomposition of side {} does not match dims {dims:?}",
            spec.dim()
        )));
    }
    let swapped = n_b > n_c;
    let small = n_b.min(n_c);
    let side = small * small;
    let n_eff = spec.rank(rank_cutoff);
    if n_eff > side {
        return Err(Error::PaddingImpossible { n_eff, side });
    }

    let mut s_red = Vec::with_capacity(n_eff);
    let mut l_red = Vec::with_capacity(n_eff);
    for m in 0..n_eff {
        let phi: Vec<Complex64> = spec.eigenvectors.column(m).iter().copied().collect();
        let (on_b, on_c) = projector_reductions(&phi, n_b, n_c);
        let (s, l) = if swapped { (on_c, on_b) } else { (on_b, on_c) };
        s_red.push(s);
        l_red.push(l.map(|z| z.conj()));
    }

    let mut theta = DMatrix::<f64>::zeros(side, side);
    let mut omega = DMatrix::<f64>::zeros(side, side);
    for j in 0..n_eff {
        for k in j..n_eff {
            let t = real_entry(linalg::trace(&(&l_red[j] * &l_red[k])))?;
            let o = real_entry(linalg::trace(&(&s_red[j] * &s_red[k])))?;
            theta[(j, k)] = t;
            theta[(k, j)] = t;
            omega[(j, k)] = o;
            omega[(k, j)] = o;
        }
    }

    let cube = n_eff * n_eff * n_eff;
    let mut x = Vec::with_capacity(cube);
    let mut y = Vec::with_capacity(cube);
    let s_pairs: Vec<CMatrix> = (0..n_eff * n_eff)
        .map(|jk| &s_red[jk / n_eff] * &s_red[jk % n_eff])
        .collect();
    let l_pairs: Vec<CMatrix> = (0..n_eff * n_eff)
        .map(|jk| &l_red[jk / n_eff] * &l_red[jk % n_eff])
        .collect();
    for jk in 0..n_eff * n_eff {
        for l in 0..n_eff {
            x.push(linalg::trace(&(&s_pairs[jk] * &s_red[l])));
            y.push(linalg::trace(&(&l_pairs[jk] * &l_red[l])));
        }
    }

    Ok(GramInvariants {
        n_eff,
        side,
        swapped,
        theta,
        omega,
        x,
        y,
    })
}

/// Spectra of `rho_l = A_l A_l^dagger` and `theta_l = A_l^dagger A_l` for one
/// eigenvector `xi_l`, reshaped as `A_l[i][j] = xi_l[i * n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityEntry {
    pub eigenvalue: f64,
    pub rho_spectrum: Vec<f64>,
    pub theta_spectrum: Vec<f64>,
    pub rho_min_gap: Option<f64>,
    pub theta_min_gap: Option<f64>,
    pub rho_multiplicity_free: bool,
    pub theta_multiplicity_free: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityReport {
    pub entries: Vec<MultiplicityEntry>,
}

impl MultiplicityReport {
    /// Whether `rho_0` and `theta_0` (largest eigenvalue) are both
    /// multiplicity free.
    pub fn leading_multiplicity_free(&self) -> bool {
        self.entries
            .first()
            .is_some_and(|e| e.rho_multiplicity_free && e.theta_multiplicity_free)
    }
}

/// Multiplicity data for every eigenvector with eigenvalue above `rank_cutoff`.
pub fn multiplicity_report(
    spec: &SpectralDecomposition,
    dims: &[usize],
    rank_cutoff: f64,
) -> Result<MultiplicityReport> {
    if dims.len() != 2 {
        return Err(Error::InvalidDims(format!(
            "multiplicity data needs a bipartite state, got dims {dims:?}"
        )));
    }
    let (m, n) = (dims[0], dims[1]);
    if spec.dim() != m * n {
        return Err(Error::ShapeMismatch(format!(
            "spectral decomposition of side {} does not match dims {dims:?}",
            spec.dim()
        )));
    }
    let free = |gap: Option<f64>| gap.is_none_or(|g| g >= MULTIPLICITY_GAP);
    let entries = (0..spec.rank(rank_cutoff))
        .map(|l| {
            let a = CMatrix::from_fn(m, n, |i, j| spec.eigenvectors[(i * n + j, l)]);
            let rho = linalg::herm_eig(&linalg::HermitianMatrix::new_unchecked(&a * a.adjoint()));
            let theta = linalg::herm_eig(&linalg::HermitianMatrix::new_unchecked(a.adjoint() * &a));
            let rho_min_gap = rho.min_relative_gap();
            let theta_min_gap = theta.min_relative_gap();
            MultiplicityEntry {
                eigenvalue: spec.eigenvalues[l],
                rho_multiplicity_free: free(rho_min_gap),
                theta_multiplicity_free: free(theta_min_gap),
                rho_spectrum: rho.eigenvalues,
                theta_spectrum: theta.eigenvalues,
                rho_min_gap,
                theta_min_gap,
            }
        })
        .collect();
    Ok(MultiplicityReport { entries })
}
