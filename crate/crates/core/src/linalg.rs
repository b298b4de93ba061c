//! Dense matrix helpers: Hermitian eigendecomposition and the matrix
//! exponential.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);

fn scale_of(t: &CMatrix) -> f64 {
    t.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

/// Largest entry of `T − T†` relative to `max(1, max|T_ij|)`.
pub fn hermitian_deviation(t: &CMatrix) -> f64 {
    let n = t.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((t[(i, j)] - t[(j, i)].conj()).norm());
        }
    }
    dev / scale_of(t)
}

fn anti_hermitian_deviation(t: &CMatrix) -> f64 {
    let n = t.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((t[(i, j)] + t[(j, i)].conj()).norm());
        }
    }
    dev / scale_of(t)
}

const STRUCTURE_TOL: f64 = 1e-14;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `V diag(f(λ)) V†` for Hermitian `h`.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, v) = hermitian_eigen(h);
    let n = h.nrows();
    let mut scaled = v.clone();
    for (j, &lam) in values.iter().enumerate() {
        let fl = f(lam);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    scaled * v.adjoint()
}

/// Matrix exponential.
///
/// Hermitian and anti-Hermitian inputs go through an eigendecomposition;
/// anything else falls back to [`matrix_exponential_pade`].
pub fn matrix_exponential(t: &CMatrix) -> Result<CMatrix> {
    if t.nrows() != t.ncols() {
        return Err(Error::Dimension(format!("exp of a {}x{} matrix", t.nrows(), t.ncols())));
    }
    if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix_exponential input"));
    }
    let out = if hermitian_deviation(t) <= STRUCTURE_TOL {
        hermitian_function(t, |l| Complex64::new(l.exp(), 0.0))
    } else if anti_hermitian_deviation(t) <= STRUCTURE_TOL {
        // T = iK with K = −iT Hermitian
        let k = t.map(|z| z * Complex64::new(0.0, -1.0));
        hermitian_function(&k, |l| Complex64::from_polar(1.0, l))
    } else {
        return matrix_exponential_pade(t);
    };
    finite_or(out, "matrix_exponential")
}

fn finite_or(m: CMatrix, what: &'static str) -> Result<CMatrix> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(m)
    } else {
        Err(Error::NonFinite(what))
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Scaling-and-squaring with a degree-13 Padé approximant, valid for any
/// square matrix.
pub fn matrix_exponential_pade(t: &CMatrix) -> Result<CMatrix> {
    let n = t.nrows();
    if n != t.ncols() {
        return Err(Error::Dimension(format!("exp of a {}x{} matrix", n, t.ncols())));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm1 = (0..n).map(|j| (0..n).map(|i| t[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    if !norm1.is_finite() {
        return Err(Error::NonFinite("matrix_exponential input"));
    }
    let squarings = if norm1 > THETA13 { (norm1 / THETA13).log2().ceil() as i32 } else { 0 };
    let a = t * Complex64::new(0.5f64.powi(squarings), 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::NonFinite("Padé denominator is singular"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    finite_or(r, "matrix_exponential")
}

/// Exponential of a real matrix; exact symmetric path when possible.
pub fn matrix_exponential_real(t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = t.map(|x| Complex64::new(x, 0.0));
    let e = matrix_exponential(&c)?;
    Ok(e.map(|z| z.re))
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn zeros_vec(n: usize) -> Vec<Complex64> {
    vec![C0; n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn max_rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        frobenius(&(a - b)) / frobenius(b)
    }

    // Truncated Taylor series with scaling and squaring: an independent
    // oracle for both exponential paths.
    fn taylor_oracle(t: &CMatrix) -> CMatrix {
        let n = t.nrows();
        let s = 10;
        let a = t * Complex64::new(0.5f64.powi(s), 0.0);
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &a * Complex64::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn zero_and_diagonal() {
        let z = CMatrix::zeros(4, 4);
        assert_eq!(matrix_exponential(&z).unwrap(), CMatrix::identity(4, 4));
        let d = [0.3, -1.2, 2.0];
        let t = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, d.iter().map(|&x| Complex64::new(x, 0.0))));
        let e = matrix_exponential(&t).unwrap();
        for i in 0..3 {
            assert!((e[(i, i)].re - d[i].exp()).abs() <= 1e-14 * d[i].exp());
            for j in 0..3 {
                if i != j {
                    assert!(e[(i, j)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn hermitian_paths_agree_with_pade_and_taylor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 5, 16, 32] {
            let a = random_matrix(n, &mut rng);
            let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = matrix_exponential(&h).unwrap();
            let pade = matrix_exponential_pade(&h).unwrap();
            assert!(max_rel_diff(&pade, &eig) < 1e-12, "n={n}");
            let skew = (&a - a.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = matrix_exponential(&skew).unwrap();
            let pade = matrix_exponential_pade(&skew).unwrap();
            assert!(max_rel_diff(&pade, &eig) < 1e-12, "n={n}");
            // unitary
            let id = CMatrix::identity(n, n);
            assert!(max_rel_diff(&(&eig * eig.adjoint()), &id) < 1e-12);
        }
    }

    #[test]
    fn general_matrix_matches_taylor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 3, 8] {
            let t = random_matrix(n, &mut rng) * Complex64::new(3.0, 0.0);
            let e = matrix_exponential(&t).unwrap();
            assert!(max_rel_diff(&e, &taylor_oracle(&t)) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn non_finite_input_is_reported() {
        let mut t = CMatrix::zeros(2, 2);
        t[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(matrix_exponential(&t), Err(Error::NonFinite(_))));
        let big = CMatrix::from_element(2, 2, Complex64::new(1e5, 0.0));
        assert!(matches!(matrix_exponential(&big), Err(Error::NonFinite(_))));
    }
}
