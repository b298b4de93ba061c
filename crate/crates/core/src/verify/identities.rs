//! Numerical checks of the algebraic identities behind the projector:
//! auxiliary-field (Gaussian) decoupling of `exp(−τU n²)`, first-order
//! operator splitting, the two-exponential split of `1 − c·dτ·U n²`, the
//! rank-1 overlap formula and `exp(a⁺Ta)|ψ^N⟩ = |(e^T ψ)^N⟩`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::quadrature;
use crate::error::{Error, Result};
use crate::fock::{self, RankOneState};
use crate::hamiltonian::{build_one_body, HamiltonianTerms};
use crate::linalg::{self, frobenius, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    /// `U < 0`: real auxiliary coupling `e^{−n x}`.
    Attractive,
    /// `U > 0`: imaginary auxiliary coupling `e^{−i n x}`.
    RepulsiveImaginary,
}

impl CouplingKind {
    fn check(self, u: f64) -> Result<()> {
        match self {
            CouplingKind::Attractive if u < 0.0 => Ok(()),
            CouplingKind::RepulsiveImaginary if u > 0.0 => Ok(()),
            CouplingKind::Attractive => Err(Error::Precondition(format!("attractive kind needs U < 0, got {u}"))),
            CouplingKind::RepulsiveImaginary => {
                Err(Error::Precondition(format!("repulsive kind needs U > 0, got {u}")))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HsRow {
    pub n: usize,
    pub closed_form: f64,
    pub quadrature_re: f64,
    pub quadrature_im: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HsReport {
    pub kind: CouplingKind,
    pub coupling: f64,
    pub tau: f64,
    pub rows: Vec<HsRow>,
    pub max_relative_error: f64,
}

/// Compares `exp(−τU n²)` with the Gaussian integral over the auxiliary
/// field for `n = 0..=n_max`.
pub fn verify_hs_identity(u: f64, tau: f64, n_max: usize, kind: CouplingKind) -> Result<HsReport> {
    kind.check(u)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    // field variance 2τ|U|
    let a = tau * u.abs();
    let sigma = (2.0 * a).sqrt();
    let prefactor = (1.0 / (4.0 * PI * a)).sqrt();
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let nf = n as f64;
        let closed = (-tau * u * nf * nf).exp();
        let (re, im) = match kind {
            CouplingKind::Attractive => {
                // exp(x²/(4τU) − n x), peaked at x = −2τ|U| n
                let center = -2.0 * a * nf;
                let f = |x: f64| prefactor * (-(x * x) / (4.0 * a) - nf * x).exp();
                let (v, _) = quadrature::integrate(f, center - 14.0 * sigma, center + 14.0 * sigma, 8, 0.0, 1e-13)?;
                (v, 0.0)
            }
            CouplingKind::RepulsiveImaginary => {
                let g = |x: f64| prefactor * (-(x * x) / (4.0 * a)).exp();
                let (lo, hi) = (-14.0 * sigma, 14.0 * sigma);
                let pieces = 8 + 2 * n;
                let (re, _) = quadrature::integrate(|x| g(x) * (nf * x).cos(), lo, hi, pieces, 1e-16, 1e-13)?;
                let (im, _) = quadrature::integrate(|x| -g(x) * (nf * x).sin(), lo, hi, pieces, 1e-16, 1e-13)?;
                (re, im)
            }
        };
        let relative_error = Complex64::new(re - closed, im).norm() / closed;
        rows.push(HsRow { n, closed_form: closed, quadrature_re: re, quadrature_im: im, relative_error });
    }
    let max_relative_error = rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(HsReport { kind, coupling: u, tau, rows, max_relative_error })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrotterRow {
    pub steps: usize,
    pub tau: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrotterReport {
    pub beta: f64,
    pub rows: Vec<TrotterRow>,
    /// Least-squares slope of `ln ε` against `ln τ`; `None` when the
    /// splitting is exact to roundoff.
    pub slope: Option<f64>,
    pub slope_in_range: bool,
}

/// Accepted window for the fitted first-order splitting slope.
pub const TROTTER_SLOPE_RANGE: (f64, f64) = (0.85, 1.15);

pub const TROTTER_DIM_CAP: usize = 512;

/// `ε(M) = ‖e^{−βH} − (e^{−τH₀} e^{−τH_U})^M‖_F / ‖e^{−βH}‖_F` over `M`.
pub fn verify_trotter_scaling(terms: &HamiltonianTerms, beta: f64, steps: &[usize]) -> Result<TrotterReport> {
    let dim = terms.kinetic.dim();
    if dim > TROTTER_DIM_CAP {
        return Err(Error::CapExceeded { what: "dense Trotter check", size: dim as u128, cap: TROTTER_DIM_CAP });
    }
    if !(beta > 0.0) || steps.contains(&0) {
        return Err(Error::InvalidArgument("beta must be > 0 and every M >= 1".into()));
    }
    let h0 = terms.kinetic.to_dense();
    let hu = terms.interaction.to_dense();
    let h = &h0 + &hu;
    let exact = linalg::hermitian_function(&h, |e| Complex64::new((-beta * e).exp(), 0.0));
    let exact_norm = frobenius(&exact);
    let mut rows = Vec::with_capacity(steps.len());
    for &m in steps {
        let tau = beta / m as f64;
        let k = linalg::hermitian_function(&h0, |e| Complex64::new((-tau * e).exp(), 0.0));
        let u = linalg::hermitian_function(&hu, |e| Complex64::new((-tau * e).exp(), 0.0));
        let product = matrix_power(&(k * u), m);
        rows.push(TrotterRow { steps: m, tau, error: frobenius(&(&exact - product)) / exact_norm });
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.error > 1e-13) {
        Some(fit_slope(
            &rows.iter().map(|r| r.tau.ln()).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.error.ln()).collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    let slope_in_range = slope.is_some_and(|s| (TROTTER_SLOPE_RANGE.0..=TROTTER_SLOPE_RANGE.1).contains(&s));
    Ok(TrotterReport { beta, rows, slope, slope_in_range })
}

fn matrix_power(a: &CMatrix, mut m: usize) -> CMatrix {
    let mut result = CMatrix::identity(a.nrows(), a.ncols());
    let mut base = a.clone();
    while m > 0 {
        if m & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        m >>= 1;
    }
    result
}

/// Ordinary least-squares slope.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitRow {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub kind: CouplingKind,
    pub coupling: f64,
    pub dtau: f64,
    pub prefactor: f64,
    pub rows: Vec<SplitRow>,
    pub max_deviation: f64,
}

/// `1 − c·dτ·U n²` against `½ e^{+κ n} + ½ e^{−κ n}` with
/// `κ = √(−2c·dτ·U)` (attractive) or `κ = i√(2c·dτ·U)` (repulsive, where
/// `n` stands for `n^b − n^c`).
pub fn verify_split_identity(
    u: f64,
    dtau: f64,
    prefactor: f64,
    n_max: usize,
    kind: CouplingKind,
) -> Result<SplitReport> {
    kind.check(u)?;
    if !(dtau > 0.0) || !(prefactor > 0.0) {
        return Err(Error::InvalidArgument("dtau and prefactor must be > 0".into()));
    }
    let rows = (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            let lhs = 1.0 - prefactor * dtau * u * nf * nf;
            let rhs = match kind {
                CouplingKind::Attractive => {
                    let k = (-2.0 * prefactor * dtau * u).sqrt();
                    0.5 * (k * nf).exp() + 0.5 * (-k * nf).exp()
                }
                CouplingKind::RepulsiveImaginary => {
                    let k = (2.0 * prefactor * dtau * u).sqrt();
                    let z = Complex64::new(0.0, k * nf).exp() * 0.5 + Complex64::new(0.0, -k * nf).exp() * 0.5;
                    z.re
                }
            };
            SplitRow { n, lhs, rhs, deviation: (lhs - rhs).abs() }
        })
        .collect::<Vec<_>>();
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(SplitReport { kind, coupling: u, dtau, prefactor, rows, max_deviation })
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitSweep {
    pub dtaus: Vec<f64>,
    pub max_deviations: Vec<f64>,
    /// `dev(dτ) / dev(dτ/2)` for consecutive halvings.
    pub ratios: Vec<f64>,
    /// Least-squares `C` in `dev ≈ C·dτ²`.
    pub fitted_constant: f64,
    pub ratios_in_range: bool,
}

/// Accepted window for the deviation ratio under `dτ → dτ/2`.
pub const SPLIT_RATIO_RANGE: (f64, f64) = (3.5, 4.5);

pub fn split_identity_sweep(
    u: f64,
    dtau0: f64,
    prefactor: f64,
    n_max: usize,
    halvings: usize,
    kind: CouplingKind,
) -> Result<SplitSweep> {
    let dtaus: Vec<f64> = (0..=halvings).map(|k| dtau0 / 2f64.powi(k as i32)).collect();
    let max_deviations = dtaus
        .iter()
        .map(|&d| verify_split_identity(u, d, prefactor, n_max, kind).map(|r| r.max_deviation))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = max_deviations.windows(2).map(|w| w[0] / w[1]).collect();
    let fitted_constant = dtaus.iter().zip(&max_deviations).map(|(d, e)| e * d * d).sum::<f64>()
        / dtaus.iter().map(|d| d.powi(4)).sum::<f64>();
    let ratios_in_range =
        !ratios.is_empty() && ratios.iter().all(|r| (SPLIT_RATIO_RANGE.0..=SPLIT_RATIO_RANGE.1).contains(r));
    Ok(SplitSweep { dtaus, max_deviations, ratios, fitted_constant, ratios_in_range })
}

#[derive(Clone, Debug, Serialize)]
pub struct RandomizedCheck {
    pub trials: usize,
    pub max_error: f64,
}

/// `rank1_to_vector` of `exp(a⁺Ta)` applied in mode space against the
/// occupation-basis exponential of `a⁺Ta`, for random complex `T` and `ψ`.
pub fn verify_quadratic_exponential(
    max_modes: usize,
    max_particles: usize,
    trials: usize,
    seed: u64,
) -> Result<RandomizedCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0f64;
    for _ in 0..trials {
        let m = rng.random_range(1..=max_modes);
        let n = rng.random_range(0..=max_particles);
        let t = CMatrix::from_fn(m, m, |_, _| Complex64::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)));
        let state = RankOneState::new(random_orbital(m, &mut rng), n);
        let basis = Arc::new(fock::enumerate_basis(m, n)?);
        let via_orbital = fock::rank1_to_vector(&fock::apply_quadratic_exponential(&t, &state)?, &basis)?;
        let generator = build_one_body(Arc::clone(&basis), &t)?.to_dense();
        let propagator = linalg::matrix_exponential_pade(&generator)?;
        let start = fock::rank1_to_vector(&state, &basis)?;
        let via_basis = &propagator * nalgebra::DVector::from_column_slice(start.amplitudes());
        let diff: f64 =
            via_orbital.amplitudes().iter().zip(via_basis.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale = via_basis.norm().max(f64::MIN_POSITIVE);
        max_error = max_error.max(diff / scale);
    }
    Ok(RandomizedCheck { trials, max_error })
}

/// Closed-form `N!(φ†ψ)^N` against explicit contraction of the expanded
/// occupation vectors.
pub fn verify_overlap_formula(
    max_modes: usize,
    max_particles: usize,
    trials: usize,
    seed: u64,
) -> Result<RandomizedCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0f64;
    for _ in 0..trials {
        let m = rng.random_range(1..=max_modes);
        let n = rng.random_range(0..=max_particles);
        let a = RankOneState::new(random_orbital(m, &mut rng), n);
        let b = RankOneState::new(random_orbital(m, &mut rng), n);
        let basis = Arc::new(fock::enumerate_basis(m, n)?);
        let contracted = fock::rank1_to_vector(&a, &basis)?.inner(&fock::rank1_to_vector(&b, &basis)?)?;
        let closed = fock::overlap_rank1(&a, &b)?;
        let scale = a.state_norm() * b.state_norm();
        max_error = max_error.max((contracted - closed).norm() / scale);
    }
    Ok(RandomizedCheck { trials, max_error })
}

fn random_orbital(m: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect()
}
