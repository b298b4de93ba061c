//! Cross-checks against an independent second-quantized implementation
//! that stores states as sparse maps and applies ladder operators directly.

use std::collections::BTreeMap;
use std::sync::Arc;

use bosehub::eigensolver::{dense_spectrum, lanczos_lowest, LanczosOptions};
use bosehub::fock::{enumerate_basis, rank1_matrix_element, rank1_to_vector, MatrixElementOp, RankOneState};
use bosehub::hamiltonian::{build_model1_hamiltonian, build_model2_hamiltonian, build_model2_hamiltonian_full};
use bosehub::lattice::{LatticeKind, ModelOneSpec, ModelTwoSpec};
use bosehub::verify::sweep::{random_model_one, random_model_two};
use bosehub::Complex64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Ket = BTreeMap<Vec<u16>, Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn vacuum(modes: usize) -> Ket {
    BTreeMap::from([(vec![0; modes], c(1.0))])
}

fn create(i: usize, ket: &Ket) -> Ket {
    let mut out = Ket::new();
    for (occ, a) in ket {
        let mut next = occ.clone();
        next[i] += 1;
        *out.entry(next).or_default() += a * (occ[i] as f64 + 1.0).sqrt();
    }
    out
}

fn annihilate(i: usize, ket: &Ket) -> Ket {
    let mut out = Ket::new();
    for (occ, a) in ket {
        if occ[i] == 0 {
            continue;
        }
        let mut next = occ.clone();
        next[i] -= 1;
        *out.entry(next).or_default() += a * (occ[i] as f64).sqrt();
    }
    out
}

fn add_scaled(acc: &mut Ket, ket: &Ket, s: Complex64) {
    for (occ, a) in ket {
        *acc.entry(occ.clone()).or_default() += a * s;
    }
}

fn inner(bra: &Ket, ket: &Ket) -> Complex64 {
    bra.iter().filter_map(|(occ, a)| ket.get(occ).map(|b| a.conj() * b)).sum()
}

/// `(Σ ψ_i a_i⁺)^N |0⟩`.
fn rank1_ket(psi: &[Complex64], n: usize) -> Ket {
    let mut ket = vacuum(psi.len());
    for _ in 0..n {
        let mut next = Ket::new();
        for (i, &p) in psi.iter().enumerate() {
            add_scaled(&mut next, &create(i, &ket), p);
        }
        ket = next;
    }
    ket
}

/// `−Σ t_ij a_i⁺ a_j` over `offset..offset+l` with the given matrix.
fn hopping(t: &DMatrix<Complex64>, offset: usize, ket: &Ket) -> Ket {
    let mut out = Ket::new();
    for i in 0..t.nrows() {
        for j in 0..t.ncols() {
            if t[(i, j)] != c(0.0) {
                add_scaled(&mut out, &create(offset + i, &annihilate(offset + j, ket)), -t[(i, j)]);
            }
        }
    }
    out
}

/// `n_i n_j` through ladder operators.
fn density_pair(i: usize, j: usize, ket: &Ket) -> Ket {
    let number = |k: usize, v: &Ket| create(k, &annihilate(k, v));
    number(i, &number(j, ket))
}

fn model_one_oracle(spec: &ModelOneSpec, ket: &Ket) -> Ket {
    let t = spec.hopping().map(c);
    let mut out = hopping(&t, 0, ket);
    for (i, &u) in spec.interactions().iter().enumerate() {
        add_scaled(&mut out, &density_pair(i, i, ket), c(u));
    }
    out
}

fn model_two_oracle(spec: &ModelTwoSpec, ket: &Ket) -> Ket {
    let l = spec.sites();
    let mut out = hopping(spec.hopping_b(), 0, ket);
    add_scaled(&mut out, &hopping(&spec.hopping_c(), l, ket), c(1.0));
    for i in 0..l {
        let (u1, u2) = (spec.interactions_1()[i], spec.interactions_2()[i]);
        let (b, cc) = (i, l + i);
        add_scaled(&mut out, &density_pair(b, b, ket), c(u1 + u2));
        add_scaled(&mut out, &density_pair(cc, cc, ket), c(u1 + u2));
        add_scaled(&mut out, &density_pair(b, cc, ket), c(2.0 * (u1 - u2)));
    }
    out
}

fn basis_ket(occ: &[u16]) -> Ket {
    BTreeMap::from([(occ.to_vec(), c(1.0))])
}

fn random_psi(m: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

#[test]
fn rank1_expansion_matches_ladder_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(0..=4);
        let psi = random_psi(m, &mut rng);
        let basis = Arc::new(enumerate_basis(m, n).unwrap());
        let v = rank1_to_vector(&RankOneState::new(psi.clone(), n), &basis).unwrap();
        let oracle = rank1_ket(&psi, n);
        assert_eq!(oracle.len(), basis.len());
        for (occ, a) in basis.iter().zip(v.amplitudes()) {
            let b = oracle[occ];
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1.0), "{occ:?}: {a} vs {b}");
        }
    }
}

#[test]
fn closed_form_matrix_elements_match_ladder_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..40 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(2..=4);
        let phi = random_psi(m, &mut rng);
        let psi = random_psi(m, &mut rng);
        let (bra, ket) = (rank1_ket(&phi, n), rank1_ket(&psi, n));
        let (sb, sk) = (RankOneState::new(phi.clone(), n), RankOneState::new(psi.clone(), n));
        let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
        let cases = [
            (MatrixElementOp::Hop(i, j), create(i, &annihilate(j, &ket))),
            (MatrixElementOp::Number(i), create(i, &annihilate(i, &ket))),
            (MatrixElementOp::Pair(i), create(i, &create(i, &annihilate(i, &annihilate(i, &ket))))),
            (MatrixElementOp::DensityDensity(i, j), create(i, &create(j, &annihilate(j, &annihilate(i, &ket))))),
        ];
        for (op, applied) in cases {
            let want = inner(&bra, &applied);
            let got = rank1_matrix_element(&sb, &sk, op).unwrap();
            assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0), "{op:?}: {got} vs {want}");
        }
    }
}

#[test]
fn model_one_hamiltonian_matches_ladder_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let spec = random_model_one(1, 4, &mut rng);
        let n = rng.random_range(1..=3);
        let h = build_model1_hamiltonian(&spec, n).unwrap();
        let basis = h.basis().clone();
        for col in 0..basis.len() {
            let image = model_one_oracle(&spec, &basis_ket(basis.state(col)));
            for row in 0..basis.len() {
                let want = image.get(basis.state(row)).copied().unwrap_or_default();
                assert!((h.get(row, col) - want).norm() < 1e-12, "({row}, {col})");
            }
        }
    }
}

#[test]
fn model_two_hamiltonian_matches_ladder_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for trial in 0..12 {
        let spec = random_model_two(1, 3, trial % 2 == 0, &mut rng);
        let n = rng.random_range(1..=3);
        let h = build_model2_hamiltonian_full(&spec, n).unwrap();
        let basis = h.basis().clone();
        for col in 0..basis.len() {
            let image = model_two_oracle(&spec, &basis_ket(basis.state(col)));
            for row in 0..basis.len() {
                let want = image.get(basis.state(row)).copied().unwrap_or_default();
                assert!((h.get(row, col) - want).norm() < 1e-12, "({row}, {col})");
            }
        }
    }
}

#[test]
fn equal_couplings_decouple_the_components() {
    // U₁ = U₂ = U leaves 2U(n_b² + n_c²): two independent model-one copies.
    let t = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.4, 1.0, 0.0, 0.7, 0.4, 0.7, 0.0]);
    let u = vec![-0.8, -0.3, -1.1];
    let two = ModelTwoSpec::new(t.map(c), u.clone(), u.clone()).unwrap();
    let one = ModelOneSpec::new(t, u.iter().map(|x| 2.0 * x).collect()).unwrap();
    for (n_b, n_c) in [(1, 1), (2, 1), (2, 2), (3, 0)] {
        let eb = dense_spectrum(&build_model1_hamiltonian(&one, n_b).unwrap()).unwrap().eigenvalues;
        let ec = dense_spectrum(&build_model1_hamiltonian(&one, n_c).unwrap()).unwrap().eigenvalues;
        let mut sums: Vec<f64> = eb.iter().flat_map(|a| ec.iter().map(move |b| a + b)).collect();
        sums.sort_by(f64::total_cmp);
        let sector = dense_spectrum(&build_model2_hamiltonian(&two, n_b, n_c).unwrap()).unwrap().eigenvalues;
        assert_eq!(sector.len(), sums.len());
        for (a, b) in sector.iter().zip(&sums) {
            assert!((a - b).abs() < 1e-10, "({n_b}, {n_c}): {a} vs {b}");
        }
    }
}

#[test]
fn lanczos_agrees_with_dense_diagonalization() {
    let one = ModelOneSpec::standard(LatticeKind::Chain, 6, 1.0, -0.7).unwrap();
    let two = ModelTwoSpec::standard(LatticeKind::Chain, 3, Complex64::from_polar(1.0, 0.3), -1.0, 0.6).unwrap();
    let ops = [build_model1_hamiltonian(&one, 4).unwrap(), build_model2_hamiltonian(&two, 2, 2).unwrap()];
    for op in ops {
        let dense = dense_spectrum(&op).unwrap().eigenvalues;
        let lanczos = lanczos_lowest(&op, LanczosOptions { k: 4, seed: 3, ..Default::default() }).unwrap();
        for (a, b) in lanczos.eigenvalues.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(lanczos.residuals.iter().all(|&r| r < 1e-8 * op.norm_estimate().max(1.0)));
    }
}
