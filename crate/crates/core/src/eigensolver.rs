//! Lowest eigenpairs of Hermitian sector operators.
//!
//! [`dense_spectrum`] is the small-sector oracle. [`lanczos_lowest`] runs
//! Lanczos with full reorthogonalization and locking: each converged
//! eigenvector is deflated before the next restart, so exactly degenerate
//! levels are resolved one copy at a time instead of collapsing into a
//! single Ritz value.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::SectorVector;
use crate::hamiltonian::SparseOperator;
use crate::linalg::{hermitian_eigen, CMatrix};

pub const DENSE_DIM_CAP: usize = 4096;

/// Sectors up to this size are solved densely by [`lowest_spectrum`].
pub const DENSE_PREFERRED_DIM: usize = 600;

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<SectorVector>,
    /// `‖Hv − λv‖` per pair.
    pub residuals: Vec<f64>,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }
}

fn residual(op: &SparseOperator, v: &[Complex64], lambda: f64) -> f64 {
    op.apply(v).iter().zip(v).map(|(hv, x)| (hv - x * lambda).norm_sqr()).sum::<f64>().sqrt()
}

/// Full spectrum by dense Hermitian diagonalization.
pub fn dense_spectrum(op: &SparseOperator) -> Result<SpectrumResult> {
    let n = op.dim();
    if n > DENSE_DIM_CAP {
        return Err(Error::CapExceeded { what: "dense eigensolver input", size: n as u128, cap: DENSE_DIM_CAP });
    }
    let (values, vectors) = hermitian_eigen(&op.to_dense());
    let basis = op.basis();
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (j, &lam) in values.iter().enumerate() {
        let v: Vec<Complex64> = vectors.column(j).iter().copied().collect();
        residuals.push(residual(op, &v, lam));
        eigenvectors.push(SectorVector::new(Arc::clone(basis), v)?);
    }
    Ok(SpectrumResult { eigenvalues: values, eigenvectors, residuals })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosOptions {
    pub k: usize,
    /// Residual target relative to the operator-norm estimate.
    pub tol: f64,
    /// Krylov dimension limit per locked eigenpair.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { k: 6, tol: 1e-10, max_iter: 500, seed: 0 }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Two passes of classical Gram-Schmidt against every vector in `basis`.
fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let k = (0..m).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

/// One Lanczos run in the complement of `locked`; returns the lowest Ritz
/// pair and its estimated residual.
fn lanczos_run(
    op: &SparseOperator,
    locked: &[Vec<Complex64>],
    opts: &LanczosOptions,
    h_norm: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, Vec<Complex64>, f64, usize, bool)> {
    let n = op.dim();
    let room = n - locked.len();
    if room == 0 {
        return None;
    }
    let mut v0: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
    orthogonalize(&mut v0, locked);
    let nv = norm(&v0);
    if nv < 1e-12 {
        return None;
    }
    v0.iter_mut().for_each(|x| *x /= nv);

    let breakdown = 1e-12 * h_norm.max(1.0);
    let mut krylov: Vec<Vec<Complex64>> = vec![v0];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = krylov.len() - 1;
        let mut w = op.apply(&krylov[j]);
        alpha.push(dot(&krylov[j], &w).re);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &krylov);
        let b = norm(&w);
        let size = krylov.len();
        let exhausted = b <= breakdown || size >= room;
        let at_limit = size >= opts.max_iter;
        let check = exhausted || at_limit || size < 40 || size.is_multiple_of(5);
        if check {
            let (theta, s) = tridiagonal_lowest(&alpha, &beta);
            let est = if exhausted { 0.0 } else { b * s[size - 1].abs() };
            if exhausted || est <= opts.tol * h_norm || at_limit {
                let mut x = vec![Complex64::new(0.0, 0.0); n];
                for (q, &c) in krylov.iter().zip(&s) {
                    x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += qi * c);
                }
                orthogonalize(&mut x, locked);
                let nx = norm(&x);
                x.iter_mut().for_each(|xi| *xi /= nx);
                let converged = exhausted || est <= opts.tol * h_norm;
                return Some((theta, x, est, size, converged));
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        krylov.push(w);
    }
}

/// `k` lowest eigenpairs; deterministic for a given seed.
pub fn lanczos_lowest(op: &SparseOperator, opts: LanczosOptions) -> Result<SpectrumResult> {
    if opts.k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let n = op.dim();
    let k = opts.k.min(n);
    let h_norm = op.norm_estimate();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let mut failure: Option<(usize, f64)> = None;
    while locked.len() < k {
        let Some((theta, x, est, iters, converged)) = lanczos_run(op, &locked, &opts, h_norm, &mut rng) else {
            break;
        };
        if !converged && failure.is_none() {
            failure = Some((iters, est));
        }
        values.push(theta);
        locked.push(x);
    }

    // Rayleigh-Ritz on the locked space fixes ordering and mixes
    // near-degenerate copies consistently.
    let m = locked.len();
    let hq: Vec<Vec<Complex64>> = locked.iter().map(|q| op.apply(q)).collect();
    let proj = CMatrix::from_fn(m, m, |i, j| dot(&locked[i], &hq[j]));
    let proj = (&proj + proj.adjoint()) * Complex64::new(0.5, 0.0);
    let (ritz, coeffs) = hermitian_eigen(&proj);
    let mut eigenvectors = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for (j, &lam) in ritz.iter().enumerate() {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (q, c) in locked.iter().zip(coeffs.column(j).iter()) {
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi += qi * c);
        }
        residuals.push(residual(op, &v, lam));
        eigenvectors.push(SectorVector::new(Arc::clone(op.basis()), v)?);
    }
    let result = SpectrumResult { eigenvalues: ritz, eigenvectors, residuals };
    debug_assert_eq!(values.len(), m);
    if let Some((iterations, residual)) = failure {
        return Err(Error::NoConvergence { iterations, residual, best: Box::new(result) });
    }
    Ok(result)
}

/// Dense for small sectors, Lanczos above [`DENSE_PREFERRED_DIM`]; at most
/// `k` eigenpairs either way.
pub fn lowest_spectrum(op: &SparseOperator, k: usize, seed: u64) -> Result<SpectrumResult> {
    if op.dim() <= DENSE_PREFERRED_DIM {
        let mut full = dense_spectrum(op)?;
        full.eigenvalues.truncate(k);
        full.eigenvectors.truncate(k);
        full.residuals.truncate(k);
        Ok(full)
    } else {
        lanczos_lowest(op, LanczosOptions { k, seed, ..Default::default() })
    }
}

/// `1e-8 · max(1, |E₀|)`.
pub fn default_degeneracy_tol(ground_energy: f64) -> f64 {
    1e-8 * ground_energy.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Degeneracy {
    pub count: usize,
    /// Set when only one eigenvalue was available, so the count could not
    /// be checked against a second level.
    pub unchecked: bool,
}

/// Number of eigenvalues within `tol` of the minimum.
pub fn degeneracy_count(eigenvalues: &[f64], tol: f64) -> Degeneracy {
    if eigenvalues.len() < 2 {
        return Degeneracy { count: 1, unchecked: true };
    }
    let e0 = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let count = eigenvalues.iter().filter(|&&e| e - e0 <= tol).count();
    Degeneracy { count, unchecked: false }
}
