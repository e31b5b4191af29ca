//! Genericity test and the decision procedure for local unitary equivalence of
//! tripartite pure states.
//!
//! The procedure compares invariant profiles, then reduced spectra, and on the
//! generic class with a non-degenerate spectrum compares the Gram invariants
//! of `rho = Tr_A |psi><psi|`. Outside that class it returns
//! [`Outcome::Indeterminate`] rather than guessing.

use std::fmt;

use num_complex::Complex64;

use crate::invariants::{
    gram_invariants, invariant_profile, GramInvariants, InvariantLabel, InvariantProfile,
};
use crate::linalg::{min_absolute_gap, min_relative_gap, HermitianMatrix, SpectralDecomposition};
use crate::statespace::{partial_trace, DensityMatrix, PureState};
use crate::{Error, Result};

/// Every numerical threshold used by the decision procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance for profile, spectrum and Gram comparisons.
    pub profile: f64,
    /// Relative eigenvalue gap below which eigenvalues count as equal.
    pub gap: f64,
    /// Eigenvalues at or below this are treated as zero.
    pub rank_cutoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            profile: 1e-8,
            gap: 1e-8,
            rank_cutoff: 1e-10,
        }
    }
}

/// Whether `a` and `b` differ by more than `tol * max(1, |a|, |b|)`.
pub fn differs(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() > tol * 1f64.max(a.abs()).max(b.abs())
}

fn differs_complex(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() > tol * 1f64.max(a.norm()).max(b.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenericityFailure {
    /// `n_eff` exceeds the padded side `N_small^2`.
    PaddingImpossible,
    /// `rho` is not of full rank `N_B * N_C`.
    RankDeficient,
    /// Two eigenvalues of `Theta` or `Omega` are too close.
    DegenerateGram,
    /// `Theta` or `Omega` has an eigenvalue too close to zero.
    SingularGram,
}

impl GenericityFailure {
    pub fn code(self) -> &'static str {
        match self {
            Self::PaddingImpossible => "PADDING_IMPOSSIBLE",
            Self::RankDeficient => "RANK_DEFICIENT",
            Self::DegenerateGram => "DEGENERATE_GRAM",
            Self::SingularGram => "SINGULAR_GRAM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericityReport {
    pub is_generic: bool,
    pub failure: Option<GenericityFailure>,
    /// Smallest absolute gap between eigenvalues of `Theta` (none if 1 x 1 or
    /// not computed).
    pub theta_min_gap: Option<f64>,
    pub omega_min_gap: Option<f64>,
    pub theta_min_abs: Option<f64>,
    pub omega_min_abs: Option<f64>,
    pub n_eff: usize,
    /// Padded side `N_small^2`.
    pub side: usize,
    /// `N_A >= N_B * N_C`, where `N_A` is the dimension traced out of `rho`.
    pub dims_ok: bool,
    /// Some pair of eigenvalues of `rho` is closer than the gap threshold.
    pub spectrum_degenerate: bool,
}

fn gram_spectrum(m: &nalgebra::DMatrix<f64>) -> Result<SpectralDecomposition> {
    Ok(HermitianMatrix::from_real_symmetric(m)?.eig())
}

/// Genericity of a two-subsystem reduced state.
pub fn genericity(rho: &DensityMatrix, tol: &Tolerances) -> Result<GenericityReport> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidDims(format!(
            "genericity needs a bipartite reduced state, got dims {dims:?}"
        )));
    }
    let local = dims[0] * dims[1];
    let traced: usize = rho.parent().total() / local;
    let spec = rho.spectrum();
    let n_eff = spec.rank(tol.rank_cutoff);
    let small = dims[0].min(dims[1]);
    let mut report = GenericityReport {
        is_generic: false,
        failure: None,
        theta_min_gap: None,
        omega_min_gap: None,
        theta_min_abs: None,
        omega_min_abs: None,
        n_eff,
        side: small * small,
        dims_ok: traced >= local,
        spectrum_degenerate: min_relative_gap(&spec.eigenvalues).is_some_and(|g| g < tol.gap),
    };

    let gram = match gram_invariants(&spec, dims, tol.rank_cutoff) {
        Ok(g) => g,
        Err(Error::PaddingImpossible { .. }) => {
            report.failure = Some(GenericityFailure::PaddingImpossible);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let theta = gram_spectrum(&gram.theta)?;
    let omega = gram_spectrum(&gram.omega)?;
    let min_abs = |s: &SpectralDecomposition| {
        s.eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(x.abs()))
    };
    report.theta_min_gap = min_absolute_gap(&theta.eigenvalues);
    report.omega_min_gap = min_absolute_gap(&omega.eigenvalues);
    report.theta_min_abs = Some(min_abs(&theta));
    report.omega_min_abs = Some(min_abs(&omega));

    let separated =
        |s: &SpectralDecomposition| min_relative_gap(&s.eigenvalues).is_none_or(|g| g > tol.gap);
    report.failure = if report.theta_min_abs.unwrap() <= tol.rank_cutoff
        || report.omega_min_abs.unwrap() <= tol.rank_cutoff
    {
        Some(GenericityFailure::SingularGram)
    } else if !separated(&theta) || !separated(&omega) {
        Some(GenericityFailure::DegenerateGram)
    } else if n_eff != local || n_eff != report.side {
        Some(GenericityFailure::RankDeficient)
    } else {
        None
    };
    report.is_generic = report.failure.is_none();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Equivalent,
    Inequivalent,
    Indeterminate,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Equivalent => "Equivalent",
            Self::Inequivalent => "Inequivalent",
            Self::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReasonCode {
    ProfileMismatch,
    SpectrumMismatch,
    GramMismatch,
    NotGeneric,
    DegenerateSpectrum,
    GramMatch,
}

impl ReasonCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProfileMismatch => "PROFILE_MISMATCH",
            Self::SpectrumMismatch => "SPECTRUM_MISMATCH",
            Self::GramMismatch => "GRAM_MISMATCH",
            Self::NotGeneric => "NOT_GENERIC",
            Self::DegenerateSpectrum => "DEGENERATE_SPECTRUM",
            Self::GramMatch => "GRAM_MATCH",
        }
    }
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Entry of the Gram data, indices over eigenvectors in descending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramEntry {
    Theta(usize, usize),
    Omega(usize, usize),
    X(usize, usize, usize),
    Y(usize, usize, usize),
}

impl fmt::Display for GramEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Theta(j, k) => write!(f, "Theta[{j},{k}]"),
            Self::Omega(j, k) => write!(f, "Omega[{j},{k}]"),
            Self::X(j, k, l) => write!(f, "X[{j},{k},{l}]"),
            Self::Y(j, k, l) => write!(f, "Y[{j},{k},{l}]"),
        }
    }
}

/// Evidence of a difference between the two states.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Invariant {
        label: InvariantLabel,
        left: f64,
        right: f64,
    },
    Eigenvalue {
        index: usize,
        left: f64,
        right: f64,
    },
    Gram {
        entry: GramEntry,
        left: Complex64,
        right: Complex64,
    },
}

/// Formats `x` with 15 significant digits, dropping trailing zeros.
pub fn format_significant(x: f64) -> String {
    format!("{x:.14e}")
        .parse::<f64>()
        .map_or_else(|_| x.to_string(), |r| r.to_string())
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format_significant(z.re)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!(
            "{}{sign}{}i",
            format_significant(z.re),
            format_significant(z.im.abs())
        )
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invariant { label, left, right } => write!(
                f,
                "{label}: {} vs {}",
                format_significant(*left),
                format_significant(*right)
            ),
            Self::Eigenvalue { index, left, right } => write!(
                f,
                "lambda[{index}]: {} vs {}",
                format_significant(*left),
                format_significant(*right)
            ),
            Self::Gram { entry, left, right } => {
                write!(
                    f,
                    "{entry}: {} vs {}",
                    format_complex(*left),
                    format_complex(*right)
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub reason: ReasonCode,
    pub witness: Option<Witness>,
    /// Genericity of `Tr_A` of the first and second state, when reached.
    pub genericity: Option<(GenericityReport, GenericityReport)>,
}

impl Verdict {
    fn inequivalent(reason: ReasonCode, witness: Witness) -> Self {
        Self {
            outcome: Outcome::Inequivalent,
            reason,
            witness: Some(witness),
            genericity: None,
        }
    }
}

/// First entry where the profiles differ, if any.
pub fn compare_profiles(
    p: &InvariantProfile,
    q: &InvariantProfile,
    tol: f64,
) -> Result<Option<Witness>> {
    if p.len() != q.len() || p.iter().zip(q.iter()).any(|(a, b)| a.0 != b.0) {
        return Err(Error::LabelMismatch);
    }
    Ok(p.iter().zip(q.iter()).find_map(|((label, a), (_, b))| {
        differs(*a, *b, tol).then(|| Witness::Invariant {
            label: label.clone(),
            left: *a,
            right: *b,
        })
    }))
}

fn compare_gram(g: &GramInvariants, h: &GramInvariants, tol: f64) -> Option<Witness> {
    let n = g.n_eff;
    for j in 0..n {
        for k in 0..n {
            for (entry, a, b) in [
                (GramEntry::Theta(j, k), g.theta[(j, k)], h.theta[(j, k)]),
                (GramEntry::Omega(j, k), g.omega[(j, k)], h.omega[(j, k)]),
            ] {
                if differs(a, b, tol) {
                    return Some(Witness::Gram {
                        entry,
                        left: Complex64::new(a, 0.0),
                        right: Complex64::new(b, 0.0),
                    });
                }
            }
        }
    }
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                for (entry, a, b) in [
                    (GramEntry::X(j, k, l), g.x_at(j, k, l), h.x_at(j, k, l)),
                    (GramEntry::Y(j, k, l), g.y_at(j, k, l), h.y_at(j, k, l)),
                ] {
                    if differs_complex(a, b, tol) {
                        return Some(Witness::Gram {
                            entry,
                            left: a,
                            right: b,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Decides local unitary equivalence of two tripartite states with equal dims.
pub fn decide_equivalence(psi: &PureState, phi: &PureState, tol: &Tolerances) -> Result<Verdict> {
    if psi.dims() != phi.dims() {
        return Err(Error::DimsMismatch(
            psi.dims().as_slice().to_vec(),
            phi.dims().as_slice().to_vec(),
        ));
    }
    if psi.dims().parties() != 3 {
        return Err(Error::NotTripartite(psi.dims().parties()));
    }

    let (p, q) = rayon::join(|| invariant_profile(psi), || invariant_profile(phi));
    if let Some(w) = compare_profiles(&p?, &q?, tol.profile)? {
        return Ok(Verdict::inequivalent(ReasonCode::ProfileMismatch, w));
    }

    let rho = partial_trace(psi, &[0])?;
    let sigma = partial_trace(phi, &[0])?;
    let (rs, ss) = (rho.spectrum(), sigma.spectrum());
    let mismatch = rs
        .eigenvalues
        .iter()
        .zip(&ss.eigenvalues)
        .enumerate()
        .find(|(_, (a, b))| differs(**a, **b, tol.profile));
    if let Some((index, (a, b))) = mismatch {
        return Ok(Verdict::inequivalent(
            ReasonCode::SpectrumMismatch,
            Witness::Eigenvalue {
                index,
                left: *a,
                right: *b,
            },
        ));
    }

    let gr = genericity(&rho, tol)?;
    let gs = genericity(&sigma, tol)?;
    let undecided = |reason| Verdict {
        outcome: Outcome::Indeterminate,
        reason,
        witness: None,
        genericity: Some((gr.clone(), gs.clone())),
    };
    if !gr.is_generic || !gs.is_generic {
        return Ok(undecided(ReasonCode::NotGeneric));
    }
    if gr.spectrum_degenerate || gs.spectrum_degenerate {
        return Ok(undecided(ReasonCode::DegenerateSpectrum));
    }

    let g = gram_invariants(&rs, rho.dims(), tol.rank_cutoff)?;
    let h = gram_invariants(&ss, sigma.dims(), tol.rank_cutoff)?;
    let (outcome, reason, witness) = match compare_gram(&g, &h, tol.profile) {
        Some(w) => (Outcome::Inequivalent, ReasonCode::GramMismatch, Some(w)),
        None => (Outcome::Equivalent, ReasonCode::GramMatch, None),
    };
    Ok(Verdict {
        outcome,
        reason,
        witness,
        genericity: Some((gr, gs)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::InvariantLabel;
    use crate::linalg::HermitianMatrix;
    use crate::sampling::{random_lu_pair, random_pure_state, RandomStream};
    use crate::statespace::SubsystemDims;
    use crate::CMatrix;

    fn dims(v: &[usize]) -> SubsystemDims {
        SubsystemDims::new(v.to_vec()).unwrap()
    }

    #[test]
    fn differs_is_relative_above_one() {
        assert!(!differs(1.0, 1.0 + 1e-12, 1e-8));
        assert!(differs(1.0, 1.0 + 1e-7, 1e-8));
        assert!(!differs(1e6, 1e6 + 1e-3, 1e-8));
        assert!(differs(0.0, 2e-8, 1e-8));
    }

    #[test]
    fn formatting() {
        assert_eq!(format_significant(0.5), "0.5");
        assert_eq!(format_significant(5.0 / 9.0), "0.555555555555556");
        assert_eq!(format_significant(1.0), "1");
    }

    #[test]
    fn genericity_examples() {
        let psi = PureState::basis(dims(&[4, 2, 2]), 5).unwrap();
        let pure = partial_trace(&psi, &[0]).unwrap();
        let r = genericity(&pure, &Tolerances::default()).unwrap();
        assert!(!r.is_generic);
        assert!(r.dims_ok);

        let mixed = DensityMatrix::new(
            dims(&[4, 2, 2]),
            vec![1, 2],
            CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0),
        )
        .unwrap();
        let r = genericity(&mixed, &Tolerances::default()).unwrap();
        assert!(!r.is_generic);
        assert_eq!(r.failure, Some(GenericityFailure::SingularGram));
        assert!(r.spectrum_degenerate);

        let mut s = RandomStream::new(11).split("genericity");
        let generic = (0..200)
            .filter(|_| {
                let psi = random_pure_state(&dims(&[4, 2, 2]), &mut s).unwrap();
                let rho = partial_trace(&psi, &[0]).unwrap();
                genericity(&rho, &Tolerances::default()).unwrap().is_generic
            })
            .count();
        assert!(generic > 190, "{generic}/200");
    }

    #[test]
    fn unequal_factor_dims_are_never_generic() {
        let mut s = RandomStream::new(12);
        for d in [[6, 2, 3], [2, 2, 3], [9, 3, 2]] {
            let psi = random_pure_state(&dims(&d), &mut s).unwrap();
            let rho = partial_trace(&psi, &[0]).unwrap();
            let r = genericity(&rho, &Tolerances::default()).unwrap();
            assert!(!r.is_generic, "{d:?}");
        }
    }

    #[test]
    fn ghz_and_w() {
        let ghz = PureState::ghz(dims(&[2, 2, 2])).unwrap();
        let w = PureState::w(dims(&[2, 2, 2])).unwrap();
        let v = decide_equivalence(&ghz, &w, &Tolerances::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Inequivalent);
        assert_eq!(v.reason, ReasonCode::ProfileMismatch);
        match v.witness.unwrap() {
            Witness::Invariant { label, left, right } => {
                assert_eq!(label, InvariantLabel::simple(0, 2));
                assert!((left - 0.5).abs() < 1e-12);
                assert!((right - 5.0 / 9.0).abs() < 1e-12);
            }
            other => panic!("unexpected witness {other:?}"),
        }

        let v = decide_equivalence(&ghz, &ghz, &Tolerances::default()).unwrap();
        assert_eq!(v.outcome, Outcome::Indeterminate);
        assert_eq!(v.reason, ReasonCode::NotGeneric);
        assert!(v.witness.is_none());
        assert_eq!(v.genericity.unwrap().0.n_eff, 2);
    }

    #[test]
    fn lu_pairs_and_cross_pairs() {
        let mut s = RandomStream::new(21).split("pairs");
        let tol = Tolerances::default();
        let d = dims(&[4, 2, 2]);
        for _ in 0..5 {
            let psi = random_pure_state(&d, &mut s).unwrap();
            let (phi, _) = random_lu_pair(&psi, &mut s).unwrap();
            let v = decide_equivalence(&psi, &phi, &tol).unwrap();
            assert_eq!(v.outcome, Outcome::Equivalent, "{v:?}");
            assert!(v.witness.is_none());
            let back = decide_equivalence(&phi, &psi, &tol).unwrap();
            assert_eq!(back.outcome, Outcome::Equivalent);

            let other = random_pure_state(&d, &mut s).unwrap();
            let v = decide_equivalence(&psi, &other, &tol).unwrap();
            assert_eq!(v.outcome, Outcome::Inequivalent);
            assert!(v.witness.is_some());
        }
    }

    #[test]
    fn loosening_tolerance_keeps_equivalent() {
        let mut s = RandomStream::new(22);
        let psi = random_pure_state(&dims(&[4, 2, 2]), &mut s).unwrap();
        let (phi, _) = random_lu_pair(&psi, &mut s).unwrap();
        for profile in [1e-8, 1e-6, 1e-4] {
            let tol = Tolerances {
                profile,
                ..Tolerances::default()
            };
            assert_eq!(
                decide_equivalence(&psi, &phi, &tol).unwrap().outcome,
                Outcome::Equivalent
            );
        }
    }

    #[test]
    fn gram_catches_what_profiles_might_miss() {
        // Same spectrum, different eigenvectors: the Gram stage must separate
        // them even though nothing about them is LU related.
        let mut s = RandomStream::new(23);
        let psi = random_pure_state(&dims(&[4, 2, 2]), &mut s).unwrap();
        let rho = partial_trace(&psi, &[0]).unwrap();
        let g = gram_invariants(&rho.spectrum(), &[2, 2], 1e-10).unwrap();
        let u = crate::sampling::haar_unitary(4, &mut s).unwrap();
        let rotated = HermitianMatrix::new(&u * rho.matrix() * u.adjoint())
            .unwrap()
            .eig();
        let h = gram_invariants(&rotated, &[2, 2], 1e-10).unwrap();
        assert!(compare_gram(&g, &h, 1e-8).is_some());
        assert!(compare_gram(&g, &g, 1e-8).is_none());
    }

    #[test]
    fn profile_comparison_contract() {
        let ghz = invariant_profile(&PureState::ghz(dims(&[2, 2, 2])).unwrap()).unwrap();
        assert_eq!(compare_profiles(&ghz, &ghz, 1e-8).unwrap(), None);
        let nudged =
            InvariantProfile::new(ghz.iter().map(|(l, v)| (l.clone(), v + 1e-12)).collect());
        assert_eq!(compare_profiles(&ghz, &nudged, 1e-8).unwrap(), None);
        let short = InvariantProfile::new(ghz.entries()[1..].to_vec());
        assert_eq!(
            compare_profiles(&ghz, &short, 1e-8),
            Err(Error::LabelMismatch)
        );
        let other = invariant_profile(&PureState::ghz(dims(&[3, 3, 3])).unwrap()).unwrap();
        assert!(compare_profiles(&ghz, &other, 1e-8).is_err());
    }

    #[test]
    fn mismatched_dims_rejected() {
        let a = PureState::ghz(dims(&[2, 2, 2])).unwrap();
        let b = PureState::basis(dims(&[4, 2, 2]), 0).unwrap();
        assert!(matches!(
            decide_equivalence(&a, &b, &Tolerances::default()),
            Err(Error::DimsMismatch(..))
        ));
    }
}
