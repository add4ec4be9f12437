use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resfock::central_ext::schwinger_cocycle;
use resfock::dirac1d::{self, EvolveOptions, LatticeModel, Method};
use resfock::fock;
use resfock::linop::{ss_defect, ModeWindow};
use resfock::loopgroup::{self, FourierFunction};
use resfock::{c64, sampling, Complex64};

fn win(n: usize, p: usize) -> ModeWindow {
    ModeWindow::new(n, p).unwrap()
}

fn real_poly(seed: u64, band: usize) -> FourierFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![c64(0.0, 0.0); 2 * band + 1];
    for j in 0..=band {
        let z = sampling::gaussian(&mut rng);
        let z = if j == 0 { c64(z.re, 0.0) } else { z };
        c[band + j] = z;
        c[band - j] = z.conj();
    }
    FourierFunction::new(c, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shale_stinespring_identity(seed in any::<u64>(), n in 1usize..6, p in 1usize..6) {
        let u = sampling::random_unitary(win(n, p), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(ss_defect(&u).identity_residual() <= 1e-12);
    }

    #[test]
    fn schwinger_cocycle_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sampling::random_operator(win(3, 2), &mut rng);
        let y = sampling::random_operator(win(3, 2), &mut rng);
        let a = schwinger_cocycle(&x, &y).unwrap();
        let b = schwinger_cocycle(&y, &x).unwrap();
        prop_assert!((a + b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn dgamma_respects_adjoints(seed in any::<u64>()) {
        let a = sampling::random_operator(win(2, 2), &mut ChaCha8Rng::seed_from_u64(seed));
        let lhs = fock::dgamma(&a).unwrap().adjoint();
        let rhs = fock::dgamma(&a.adjoint()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn implementer_is_projective(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = sampling::random_unitary(win(2, 2), &mut rng);
        let v = sampling::random_unitary(win(2, 2), &mut rng);
        let one = Complex64::new(1.0, 0.0);
        let gu = fock::bogoliubov_implement(&u, one).unwrap().op;
        let gv = fock::bogoliubov_implement(&v, one).unwrap().op;
        let guv = fock::bogoliubov_implement(&u.mul(&v).unwrap(), one).unwrap().op;
        let (lambda, resid) = fock::projective_factor(&gu, &gv, &guv).unwrap();
        prop_assert!(resid <= 1e-9);
        prop_assert!((lambda.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn loop_cocycle_formulas_agree(s1 in any::<u64>(), s2 in any::<u64>(), b1 in 0usize..4, b2 in 0usize..4) {
        let (h, g) = (real_poly(s1, b1), real_poly(s2, b2));
        prop_assert!(loopgroup::loop_cocycle(&h, &g).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lattice_hamiltonian_is_hermitian(seed in any::<u64>(), t in 0.0f64..2.0) {
        let model = LatticeModel::new(1.0, 6.0, 3, 0.8).unwrap();
        let field = dirac1d::random_field(2, 0.7, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let h = dirac1d::build_hamiltonian(&model, &field, t).unwrap();
        prop_assert!((h.matrix() - h.matrix().adjoint()).norm() <= 1e-12);
        let oracle = dirac1d::build_hamiltonian_spinor(&model, &field, t).unwrap();
        prop_assert!((h.matrix() - oracle).norm() <= 1e-12);
    }

    #[test]
    fn q_operator_is_skew(seed in any::<u64>(), t in 0.0f64..2.0) {
        let model = LatticeModel::new(0.7, 5.0, 3, 1.0).unwrap();
        let field = dirac1d::random_field(2, 0.7, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let q = dirac1d::q_operator(&model, &field, t).unwrap();
        prop_assert!((q.matrix() + q.matrix().adjoint()).norm() <= 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_certified(seed in any::<u64>()) {
        let model = LatticeModel::new(1.0, 6.0, 2, 1.0).unwrap();
        let field = dirac1d::random_field(1, 0.5, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let opts = EvolveOptions::default();
        let r = dirac1d::evolve(&model, &field, 0.0, 2.0, Method::Dyson, &opts).unwrap();
        prop_assert!(r.unitarity_defect <= 1e-9);
        prop_assert!(r.bounds_hold(0.0));
        let o = dirac1d::evolve(&model, &field, 0.0, 2.0, Method::Ode, &opts).unwrap();
        prop_assert!(o.norm_drift <= 1e-10);
    }
}
