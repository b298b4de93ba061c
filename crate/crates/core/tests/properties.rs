use std::sync::Arc;

use bosehub::fock::{
    apply_quadratic_exponential, enumerate_basis, overlap_rank1, rank1_to_vector, sector_size, RankOneState,
};
use bosehub::hamiltonian::{
    build_model1_hamiltonian, build_model2_hamiltonian_full, build_spin_operators, commutator_max,
};
use bosehub::lattice::{ModelSpec, ModelTwoSpec};
use bosehub::qmc::{resample_population, Propagator, Splitting, Walker};
use bosehub::verify::sweep::{random_model_one, random_model_two};
use bosehub::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex_vec(m: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), m)
}

/// Overlap signs are guaranteed for even particle numbers only.
fn even_particles() -> impl Strategy<Value = usize> {
    (1usize..3).prop_map(|k| 2 * k)
}

fn splitting() -> impl Strategy<Value = Splitting> {
    prop_oneof![Just(Splitting::FirstOrder), Just(Splitting::Symmetric)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_indexing_round_trips(m in 1usize..6, n in 0usize..5) {
        let basis = enumerate_basis(m, n).unwrap();
        prop_assert_eq!(basis.len() as u128, sector_size(m, n));
        for k in 0..basis.len() {
            let occ = basis.state(k);
            prop_assert_eq!(occ.iter().map(|&x| x as usize).sum::<usize>(), n);
            prop_assert_eq!(basis.index_of(occ), Some(k));
        }
    }

    #[test]
    fn hamiltonians_are_hermitian(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let one = random_model_one(1, 4, &mut rng);
        prop_assert!(build_model1_hamiltonian(&one, n).unwrap().hermitian_deviation() < 1e-12);
        let two = random_model_two(1, 3, false, &mut rng);
        prop_assert!(build_model2_hamiltonian_full(&two, n).unwrap().hermitian_deviation() < 1e-12);
    }

    #[test]
    fn overlap_formula_matches_expansion(
        (phi, psi) in (1usize..4).prop_flat_map(|m| (complex_vec(m), complex_vec(m))),
        n in 0usize..5,
    ) {
        let basis = Arc::new(enumerate_basis(phi.len(), n).unwrap());
        let (a, b) = (RankOneState::new(phi, n), RankOneState::new(psi, n));
        let closed = overlap_rank1(&a, &b).unwrap();
        let expanded = rank1_to_vector(&a, &basis).unwrap().inner(&rank1_to_vector(&b, &basis).unwrap()).unwrap();
        prop_assert!((closed - expanded).norm() <= 1e-10 * expanded.norm().max(1.0));
    }

    #[test]
    fn unitary_exponential_preserves_norm(
        (psi, h) in (1usize..4).prop_flat_map(|m| (complex_vec(m), complex_vec(m * m))),
        n in 0usize..4,
    ) {
        let m = psi.len();
        let h = DMatrix::from_vec(m, m, h);
        let generator = (&h + h.adjoint()) * Complex64::new(0.0, 0.5);
        let state = RankOneState::new(psi, n);
        let out = apply_quadratic_exponential(&generator, &state).unwrap();
        prop_assert!((out.state_norm() - state.state_norm()).abs() <= 1e-10 * state.state_norm().max(1.0));
    }

    #[test]
    fn model_one_walkers_stay_real_and_positive(seed in any::<u64>(), split in splitting(), n in even_particles()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_model_one(1, 4, &mut rng);
        let prop = Propagator::new(&ModelSpec::One(spec), n, 0.05).unwrap();
        let trial = prop.trial();
        let mut w = prop.initial_walker();
        for _ in 0..20 {
            prop.step(&mut w, split, &mut rng);
            prop_assert_eq!(w.state.max_imaginary(), 0.0);
        }
        let (overlap, _) = prop.local_energy(&trial, &w.state);
        prop_assert!(overlap.re >= 0.0);
        prop_assert!(overlap.im == 0.0);
    }

    #[test]
    fn model_two_walkers_keep_reflection_structure(seed in any::<u64>(), split in splitting(), n in even_particles()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_model_two(1, 3, false, &mut rng);
        let prop = Propagator::new(&ModelSpec::Two(spec), n, 0.05).unwrap();
        let trial = prop.trial();
        let mut w = prop.initial_walker();
        for _ in 0..20 {
            prop.step(&mut w, split, &mut rng);
            prop_assert!(w.state.reflection_defect() < 1e-12);
        }
        let (overlap, _) = prop.local_energy(&trial, &w.state);
        prop_assert!(overlap.re >= 0.0);
        prop_assert!(overlap.im.abs() <= 1e-10 * overlap.re.max(1e-300));
    }

    #[test]
    fn resampling_conserves_total_weight(
        weights in prop::collection::vec(0.0f64..5.0, 1..40),
        target in 1usize..64,
        seed in any::<u64>(),
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-9);
        let walkers: Vec<Walker> = weights
            .iter()
            .map(|&weight| Walker { state: RankOneState::from_real(&[1.0], 1), weight })
            .collect();
        let out = resample_population(&walkers, target, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(out.len(), target);
        let sum: f64 = out.iter().map(|w| w.weight).sum();
        prop_assert!((sum - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn model_two_conserves_spin_projection(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_model_two(1, 3, seed % 2 == 0, &mut rng);
        let h = build_model2_hamiltonian_full(&spec, n).unwrap();
        let spin = build_spin_operators(&spec, n).unwrap();
        prop_assert!(commutator_max(&h, &spin.sz).unwrap() < 1e-12);
    }

    #[test]
    fn total_spin_is_conserved_without_u2(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_model_two(1, 3, true, &mut rng);
        let spec = ModelTwoSpec::new(
            base.hopping_b().clone(),
            base.interactions_1().to_vec(),
            vec![0.0; base.sites()],
        )
        .unwrap();
        let h = build_model2_hamiltonian_full(&spec, n).unwrap();
        let spin = build_spin_operators(&spec, n).unwrap();
        prop_assert!(commutator_max(&h, &spin.s2).unwrap() < 1e-10);
    }
}
