use nalgebra::DMatrix;
use num_complex::Complex64;
use parabell_core::bounds::{relation3, tsirelson_chain, tlm, Side};
use parabell_core::correlator::{
    correlation_matrix, expectation, min_eigenvalue, pearson, quasiprobability, spectral_projectors,
};
use parabell_core::observables::{build_standard_sets, ParafermionObservables};
use parabell_core::{CorrelationReport, ObservableSet, Operator, QuantumState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian_operator(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    Operator::new("X", m).unwrap()
}

fn state_strategy(dim: usize) -> impl Strategy<Value = QuantumState> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| QuantumState::from_reals(&v).unwrap())
}

fn standard_set() -> impl Strategy<Value = ObservableSet> {
    (0usize..10).prop_map(|k| build_standard_sets().swap_remove(k))
}

fn epsilon() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1e-4), Just(1e-3), Just(1e-2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn correlator_modulus_bounded(seed in any::<u64>(), dim in 2usize..6, eps in epsilon()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_operator(&mut rng, dim);
        let y = gaussian_operator(&mut rng, dim);
        let psi = QuantumState::random(&mut rng, dim);
        let c = pearson(&x, &y, &psi, eps).unwrap();
        prop_assert!(c.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn bounded_near_eigenstates(k in 0usize..9, tilt in 0.0f64..1e-4, eps in 1e-4f64..1e-2) {
        let obs = ParafermionObservables::new();
        let mut reals = vec![tilt; 18];
        reals[k] = 1.0;
        let psi = QuantumState::from_reals(&reals).unwrap();
        let c = pearson(&obs.a0, &obs.b0, &psi, eps).unwrap();
        prop_assert!(c.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn shift_by_identity_is_invisible(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_operator(&mut rng, 4);
        let y = gaussian_operator(&mut rng, 4);
        let psi = QuantumState::random(&mut rng, 4);
        let a = pearson(&x, &y, &psi, 1e-3).unwrap();
        let b = pearson(&x.shifted(Complex64::new(re, im)), &y, &psi, 1e-3).unwrap();
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn global_phase_is_invisible(set in standard_set(), psi in state_strategy(9), phase in 0.0f64..6.3) {
        let a = CorrelationReport::compute(&set, &psi, 1e-3).unwrap();
        let b = CorrelationReport::compute(&set, &psi.with_global_phase(phase), 1e-3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a.c[i][j] - b.c[i][j]).norm() < 1e-12);
            }
        }
        prop_assert!((a.eta_a - b.eta_a).norm() < 1e-12);
    }

    #[test]
    fn phase_covariance(seed in any::<u64>(), theta in 0.0f64..6.3, scale in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_operator(&mut rng, 3);
        let y = gaussian_operator(&mut rng, 3);
        let psi = QuantumState::random(&mut rng, 3);
        let z = Complex64::from_polar(scale, theta);
        let a = pearson(&x, &y, &psi, 0.0).unwrap();
        let b = pearson(&x.scaled(z), &y, &psi, 0.0).unwrap();
        prop_assert!((b - a * Complex64::from_polar(1.0, theta)).norm() < 1e-10);
    }

    #[test]
    fn correlation_matrix_is_psd(seed in any::<u64>(), n in 2usize..5, dim in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<Operator> = (0..n).map(|_| gaussian_operator(&mut rng, dim)).collect();
        let refs: Vec<&Operator> = ops.iter().collect();
        let psi = QuantumState::random(&mut rng, dim);
        let m = correlation_matrix(&refs, &psi, 0.0).unwrap();
        prop_assert!((&m - m.adjoint()).norm() < 1e-14);
        prop_assert!(min_eigenvalue(&m) >= -1e-9);
    }

    #[test]
    fn inequalities_hold_on_standard_sets(set in standard_set(), psi in state_strategy(9), eps in epsilon()) {
        let r = match CorrelationReport::compute(&set, &psi, eps) {
            Ok(r) => r,
            Err(_) => return Ok(()),
        };
        prop_assert!(tsirelson_chain(&r).holds(1e-9));
        let t = tlm(&r);
        prop_assert!(t.lhs <= t.rhs + 1e-9);
        for side in Side::BOTH {
            prop_assert!(relation3(&r, side) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn quasiprobability_marginals(set in standard_set(), psi in state_strategy(9)) {
        let [a0, _, b0, _] = set.operators();
        let w = quasiprobability(a0, b0, &psi).unwrap();
        prop_assert!((w.total() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let projectors = spectral_projectors(a0).unwrap();
        for (p, m) in projectors.iter().zip(w.marginal_x()) {
            let direct = psi.amplitudes().dotc(&(p * psi.amplitudes()));
            prop_assert!((direct - m).norm() < 1e-12);
        }
        let moment = a0.entries().ad_mul(psi.amplitudes()).dotc(&b0.entries().ad_mul(psi.amplitudes()));
        prop_assert!((w.product_moment() - moment).norm() < 1e-10);
    }

    #[test]
    fn unitary_expectation_in_unit_disk(psi in state_strategy(9)) {
        for op in ParafermionObservables::new().all() {
            prop_assert!(expectation(op, &psi).unwrap().norm() <= 1.0 + 1e-12);
        }
    }
}
