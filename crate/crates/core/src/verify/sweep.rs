//! Random connected model specifications for property sweeps.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::lattice::{ModelOneSpec, ModelTwoSpec};

/// Random connected bond set on `sites` vertices: a random spanning tree
/// plus each remaining pair with probability `extra`.
pub fn random_connected_bonds(sites: usize, extra: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..sites).collect();
    order.shuffle(rng);
    let mut bonds = Vec::new();
    for k in 1..sites {
        let parent = order[rng.random_range(0..k)];
        bonds.push((parent.min(order[k]), parent.max(order[k])));
    }
    for i in 0..sites {
        for j in i + 1..sites {
            if !bonds.contains(&(i, j)) && rng.random_bool(extra) {
                bonds.push((i, j));
            }
        }
    }
    bonds.sort_unstable();
    bonds
}

fn magnitude(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.2..1.5)
}

/// Model one with real hoppings of random sign and `U ∈ [−2, −0.1]`.
pub fn random_model_one(min_sites: usize, max_sites: usize, rng: &mut impl Rng) -> ModelOneSpec {
    let l = rng.random_range(min_sites..=max_sites);
    let mut t = DMatrix::zeros(l, l);
    for (i, j) in random_connected_bonds(l, 0.4, rng) {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let v = sign * magnitude(rng);
        t[(i, j)] = v;
        t[(j, i)] = v;
    }
    let u = (0..l).map(|_| rng.random_range(-2.0..=-0.1)).collect();
    ModelOneSpec::new(t, u).expect("shapes agree")
}

/// Model two with `U₁ ∈ [−2, −0.1]`, `U₂ ∈ [0.1, 2]`; hoppings are real
/// with random sign, or complex with uniform phase.
pub fn random_model_two(min_sites: usize, max_sites: usize, real: bool, rng: &mut impl Rng) -> ModelTwoSpec {
    let l = rng.random_range(min_sites..=max_sites);
    let mut t = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
    for (i, j) in random_connected_bonds(l, 0.4, rng) {
        let v = if real {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Complex64::new(sign * magnitude(rng), 0.0)
        } else {
            Complex64::from_polar(magnitude(rng), rng.random_range(0.0..std::f64::consts::TAU))
        };
        t[(i, j)] = v;
        t[(j, i)] = v.conj();
    }
    let u1 = (0..l).map(|_| rng.random_range(-2.0..=-0.1)).collect();
    let u2 = (0..l).map(|_| rng.random_range(0.1..=2.0)).collect();
    ModelTwoSpec::new(t, u1, u2).expect("shapes agree")
}

/// Nonnegative hoppings on a connected graph, `U ∈ [−2, 2]`.
pub fn random_nonnegative_variant(min_sites: usize, max_sites: usize, rng: &mut impl Rng) -> ModelOneSpec {
    let l = rng.random_range(min_sites..=max_sites);
    let mut t = DMatrix::zeros(l, l);
    for (i, j) in random_connected_bonds(l, 0.4, rng) {
        let v = magnitude(rng);
        t[(i, j)] = v;
        t[(j, i)] = v;
    }
    let u = (0..l).map(|_| rng.random_range(-2.0..=2.0)).collect();
    ModelOneSpec::new(t, u).expect("shapes agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_specs_satisfy_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            assert!(random_model_one(1, 5, &mut rng).validate().passed());
            assert!(random_model_two(1, 4, false, &mut rng).validate().passed());
            assert!(random_model_two(1, 4, true, &mut rng).validate().passed());
            assert!(random_nonnegative_variant(2, 4, &mut rng).validate_nonnegative_variant().passed());
        }
    }
}
