use luequiv::equivalence::{compare_profiles, decide_equivalence, Outcome, Tolerances};
use luequiv::invariants::{
    i_alpha, invariant_profile, j_alpha, nested_invariant, InvariantProfile,
};
use luequiv::linalg::{hermitian_residual, relative_gap, HermitianMatrix};
use luequiv::lusearch::{alternating_search, fidelity, SearchConfig};
use luequiv::sampling::{haar_tuple, random_lu_pair, random_pure_state, RandomStream};
use luequiv::statespace::{
    apply_local_unitaries, partial_trace, LocalUnitaryTuple, PureState, SubsystemDims,
};
use luequiv::Complex64;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        Just(vec![2, 2, 2]),
        Just(vec![3, 2, 2]),
        Just(vec![2, 3, 2]),
        Just(vec![2, 2, 3]),
        Just(vec![4, 2, 2]),
        Just(vec![2, 3]),
        Just(vec![2, 2, 2, 2]),
    ]
}

fn state(shape: &[usize], seed: u64) -> PureState {
    let d = SubsystemDims::new(shape.to_vec()).unwrap();
    random_pure_state(&d, &mut RandomStream::new(seed)).unwrap()
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduced_states_are_density_matrices(shape in shape(), seed in any::<u64>(), pick in 0usize..8) {
        let psi = state(&shape, seed);
        let p = pick % shape.len();
        let rho = partial_trace(&psi, &[p]).unwrap();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(hermitian_residual(rho.matrix()) < 1e-12);
        prop_assert!(rho.spectrum().eigenvalues.iter().all(|&x| x > -1e-10));
    }

    #[test]
    fn normalization_is_applied(amps in amplitudes(8)) {
        let psi = PureState::new(SubsystemDims::new(vec![2, 2, 2]).unwrap(), amps).unwrap();
        prop_assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simple_invariants_are_lu_invariant(shape in shape(), seed in any::<u64>(), alpha in 1u32..5) {
        let psi = state(&shape, seed);
        let (phi, _) = random_lu_pair(&psi, &mut RandomStream::new(seed).split("lu")).unwrap();
        for p in 0..shape.len() {
            let a = i_alpha(&psi, p, alpha).unwrap();
            let b = i_alpha(&phi, p, alpha).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
            prop_assert!(a <= 1.0 + 1e-12 && a > 0.0);
        }
    }

    #[test]
    fn simple_invariants_match_eigenvalue_powers(shape in shape(), seed in any::<u64>(), alpha in 1u32..7) {
        let psi = state(&shape, seed);
        for p in 0..shape.len() {
            let via_spectrum = partial_trace(&psi, &[p]).unwrap().spectrum().power_trace(alpha);
            prop_assert!((i_alpha(&psi, p, alpha).unwrap() - via_spectrum).abs() < 1e-12);
        }
    }

    #[test]
    fn purities_decrease_with_exponent(shape in shape(), seed in any::<u64>()) {
        let psi = state(&shape, seed);
        let values: Vec<f64> = (1..6).map(|a| i_alpha(&psi, 0, a).unwrap()).collect();
        prop_assert!((values[0] - 1.0).abs() < 1e-12);
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn nested_invariants_are_lu_invariant(seed in any::<u64>(), e1 in 1u32..4, e2 in 1u32..4, e3 in 1u32..3) {
        let psi = state(&[2, 2, 2, 2], seed);
        let (phi, _) = random_lu_pair(&psi, &mut RandomStream::new(seed).split("lu")).unwrap();
        for order in [[0, 1, 2], [3, 1, 0], [2, 0, 3]] {
            let a = nested_invariant(&psi, &order, &[e1, e2, e3]).unwrap();
            let b = nested_invariant(&phi, &order, &[e1, e2, e3]).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn j_alpha_is_invariant_under_reduced_local_unitaries(seed in any::<u64>(), alpha in 1u32..5) {
        let psi = state(&[4, 2, 2], seed);
        let mut us: Vec<_> = haar_tuple(psi.dims(), &mut RandomStream::new(seed).split("u")).unwrap().iter().cloned().collect();
        us[0] = luequiv::CMatrix::identity(4, 4);
        let phi = apply_local_unitaries(&psi, &LocalUnitaryTuple::new(us).unwrap()).unwrap();
        let (r, s) = (partial_trace(&psi, &[0]).unwrap(), partial_trace(&phi, &[0]).unwrap());
        for j in [1, 2] {
            prop_assert!((j_alpha(&r, j, alpha).unwrap() - j_alpha(&s, j, alpha).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_is_bounded_and_phase_blind(seed in any::<u64>(), theta in 0.0f64..6.3) {
        let psi = state(&[2, 3, 2], seed);
        let phi = state(&[2, 3, 2], seed.wrapping_add(1));
        let t = haar_tuple(psi.dims(), &mut RandomStream::new(seed)).unwrap();
        let f = fidelity(&psi, &phi, &t).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        let rotated = PureState::new(
            phi.dims().clone(),
            phi.amplitudes().iter().map(|z| z * Complex64::from_polar(1.0, theta)).collect(),
        ).unwrap();
        prop_assert!((fidelity(&psi, &rotated, &t).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn inverse_tuple_undoes_action(shape in shape(), seed in any::<u64>()) {
        let psi = state(&shape, seed);
        let (phi, t) = random_lu_pair(&psi, &mut RandomStream::new(seed).split("lu")).unwrap();
        let back = apply_local_unitaries(&phi, &t.inverse()).unwrap();
        prop_assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn relative_gap_is_symmetric_and_bounded(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let g = relative_gap(a, b);
        prop_assert_eq!(g, relative_gap(b, a));
        prop_assert!(g >= 0.0);
    }

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), side in 1usize..10) {
        let mut s = RandomStream::new(seed);
        let g = luequiv::CMatrix::from_fn(side, side, |_, _| s.complex_gaussian());
        let h = HermitianMatrix::new(&g + g.adjoint()).unwrap();
        let spec = h.eig();
        prop_assert!((spec.reconstruct() - h.as_matrix()).norm() < 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verdicts_are_symmetric(seed in any::<u64>(), kind in 0usize..3, small in any::<bool>()) {
        let shape: &[usize] = if small { &[2, 2, 2] } else { &[4, 2, 2] };
        let psi = state(shape, seed);
        let phi = match kind {
            0 => random_lu_pair(&psi, &mut RandomStream::new(seed).split("lu")).unwrap().0,
            1 => state(shape, seed.wrapping_add(1)),
            _ => psi.clone(),
        };
        let tol = Tolerances::default();
        let ab = decide_equivalence(&psi, &phi, &tol).unwrap();
        let ba = decide_equivalence(&phi, &psi, &tol).unwrap();
        prop_assert_eq!(ab.outcome, ba.outcome);
        prop_assert_eq!(ab.outcome == Outcome::Inequivalent, ab.witness.is_some());
        if kind != 1 {
            prop_assert_ne!(ab.outcome, Outcome::Inequivalent);
        }
    }

    #[test]
    fn loosening_never_breaks_equivalence(seed in any::<u64>(), scale in 1.0f64..1e4) {
        let psi = state(&[4, 2, 2], seed);
        let (phi, _) = random_lu_pair(&psi, &mut RandomStream::new(seed).split("lu")).unwrap();
        let tight = Tolerances::default();
        let loose = Tolerances { profile: tight.profile * scale, ..tight };
        let a = decide_equivalence(&psi, &phi, &tight).unwrap().outcome;
        let b = decide_equivalence(&psi, &phi, &loose).unwrap().outcome;
        if a == Outcome::Equivalent {
            prop_assert_eq!(b, Outcome::Equivalent);
        }
    }

    #[test]
    fn perturbed_profiles_match(seed in any::<u64>(), eps in -1e-12f64..1e-12) {
        let p = invariant_profile(&state(&[3, 2, 2], seed)).unwrap();
        let q = InvariantProfile::new(p.iter().map(|(l, v)| (l.clone(), v + eps)).collect());
        prop_assert!(compare_profiles(&p, &q, 1e-8).unwrap().is_none());
    }

    #[test]
    fn search_traces_are_monotone(seed in any::<u64>()) {
        let psi = state(&[2, 2, 2], seed);
        let phi = state(&[2, 2, 2], seed.wrapping_add(7));
        let cfg = SearchConfig { restarts: 4, max_iters: 100, ..SearchConfig::with_seed(seed) };
        let r = alternating_search(&psi, &phi, &cfg).unwrap();
        for t in &r.traces {
            prop_assert!(t.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
        prop_assert!(r.traces.iter().all(|t| *t.last().unwrap() <= r.best_fidelity + 1e-12));
    }
}
