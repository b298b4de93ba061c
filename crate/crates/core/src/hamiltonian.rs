//! Sparse sector Hamiltonians, spin operators and the projector factor.
//!
//! All operators are assembled directly in an occupation basis with the
//! ladder rules `a_j|n⟩ = √n_j |n − e_j⟩`, `a_i⁺|n⟩ = √(n_i+1) |n + e_i⟩`,
//! so particle number (and `(N_b, N_c)` for model two) is conserved by
//! construction. Hopping sums run over all ordered pairs `(i, j)`,
//! diagonal `t_ii` included.

use std::collections::VecDeque;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, hop_action, Layout, OccupationBasis};
use crate::lattice::{ModelOneSpec, ModelTwoSpec};
use crate::linalg::CMatrix;
use crate::par;

/// Default cap on stored nonzeros per operator.
pub const DEFAULT_NNZ_CAP: usize = 10_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Compressed-row operator over a fixed basis.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    basis: Arc<OccupationBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Sums duplicate `(row, col)` entries and drops exact zeros.
    pub fn from_triplets(basis: Arc<OccupationBasis>, mut triplets: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        let dim = basis.len();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::Dimension(format!("entry ({r}, {c}) outside a {dim}-dimensional basis")));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = merged.iter().map(|e| e.1).collect();
        let vals = merged.iter().map(|e| e.2).collect();
        Ok(Self { basis, row_ptr, cols, vals })
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    /// `y = A x`; rows are independent so the summation order is fixed.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim(), "vector length does not match operator");
        par::map_range(self.dim(), |r| self.row(r).map(|(c, v)| v * x[c]).sum())
    }

    /// `⟨x|A|x⟩`.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let ax = self.apply(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum; bounds the spectral norm of a Hermitian
    /// operator.
    pub fn norm_estimate(&self) -> f64 {
        (0..self.dim()).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.linear_combination(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: Complex64, other: &SparseOperator, b: Complex64) -> Result<SparseOperator> {
        if self.basis != other.basis {
            return Err(Error::Dimension("operators live on different bases".into()));
        }
        let triplets = self
            .entries()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.entries().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        SparseOperator::from_triplets(Arc::clone(&self.basis), triplets)
    }

    pub fn identity(basis: Arc<OccupationBasis>) -> SparseOperator {
        let triplets = (0..basis.len()).map(|k| (k, k, Complex64::new(1.0, 0.0))).collect();
        SparseOperator::from_triplets(basis, triplets).expect("diagonal entries are in range")
    }

    /// Coordinate-format text, one `row col re im` line per stored entry
    /// (0-based indices, full precision). Signed zeros print as `0e0`.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {:e} {:e}", v.re + 0.0, v.im + 0.0)?;
        }
        Ok(())
    }
}

fn check_nnz(count: usize, cap: usize) -> Result<()> {
    if count > cap {
        return Err(Error::CapExceeded { what: "operator", size: count as u128, cap });
    }
    Ok(())
}

/// `Σ coeff · a_i⁺ a_j` over the listed `(i, j, coeff)` terms.
fn one_body_triplets(basis: &OccupationBasis, terms: &[(usize, usize, Complex64)]) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for (col, occ) in basis.iter().enumerate() {
        for &(i, j, coeff) in terms {
            if let Some((next, amp)) = hop_action(occ, i, j) {
                let row = basis.index_of(&next).expect("one-body terms conserve the sector");
                out.push((row, col, coeff * amp));
            }
        }
    }
    out
}

fn diagonal_triplets(basis: &OccupationBasis, f: impl Fn(&[u16]) -> f64) -> Vec<(usize, usize, Complex64)> {
    basis.iter().enumerate().map(|(k, occ)| (k, k, Complex64::new(f(occ), 0.0))).collect()
}

fn hopping_terms(t: impl Fn(usize, usize) -> Complex64, sites: usize, offset: usize) -> Vec<(usize, usize, Complex64)> {
    let mut terms = Vec::new();
    for i in 0..sites {
        for j in 0..sites {
            let tij = t(i, j);
            if tij != ZERO {
                terms.push((offset + i, offset + j, -tij));
            }
        }
    }
    terms
}

/// `a⁺Ta = Σ_ij T_ij a_i⁺ a_j` on the given basis.
pub fn build_one_body(basis: Arc<OccupationBasis>, t: &CMatrix) -> Result<SparseOperator> {
    let m = basis.modes();
    if t.nrows() != m || t.ncols() != m {
        return Err(Error::Dimension(format!("{}x{} generator on {m} modes", t.nrows(), t.ncols())));
    }
    if basis.layout() != Layout::Full {
        return Err(Error::InvalidArgument("a general one-body operator needs a full N-particle basis".into()));
    }
    let terms: Vec<_> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| t[(i, j)] != ZERO)
        .map(|(i, j)| (i, j, t[(i, j)]))
        .collect();
    let triplets = one_body_triplets(&basis, &terms);
    SparseOperator::from_triplets(basis, triplets)
}

/// Kinetic and interaction parts on a shared basis.
#[derive(Clone, Debug)]
pub struct HamiltonianTerms {
    pub kinetic: SparseOperator,
    pub interaction: SparseOperator,
}

impl HamiltonianTerms {
    pub fn total(&self) -> Result<SparseOperator> {
        self.kinetic.add(&self.interaction)
    }
}

fn model1_terms_on(spec: &ModelOneSpec, basis: Arc<OccupationBasis>, cap: usize) -> Result<HamiltonianTerms> {
    if basis.modes() != spec.sites() {
        return Err(Error::Dimension("basis modes differ from the site count".into()));
    }
    let l = spec.sites();
    let t = spec.hopping();
    let terms = hopping_terms(|i, j| Complex64::new(t[(i, j)], 0.0), l, 0);
    let kin = one_body_triplets(&basis, &terms);
    check_nnz(kin.len() + basis.len(), cap)?;
    let u = spec.interactions();
    let diag = diagonal_triplets(&basis, |occ| occ.iter().zip(u).map(|(&n, &ui)| ui * (n as f64).powi(2)).sum());
    Ok(HamiltonianTerms {
        kinetic: SparseOperator::from_triplets(Arc::clone(&basis), kin)?,
        interaction: SparseOperator::from_triplets(basis, diag)?,
    })
}

/// `H₀` and `H_U` of model one in the `N`-particle sector.
pub fn build_model1_terms(spec: &ModelOneSpec, particles: usize) -> Result<HamiltonianTerms> {
    let basis = Arc::new(fock::enumerate_basis(spec.sites(), particles)?);
    model1_terms_on(spec, basis, DEFAULT_NNZ_CAP)
}

/// Model-one Hamiltonian, real symmetric in the occupation basis.
pub fn build_model1_hamiltonian(spec: &ModelOneSpec, particles: usize) -> Result<SparseOperator> {
    build_model1_terms(spec, particles)?.total()
}

fn model2_terms_on(spec: &ModelTwoSpec, basis: Arc<OccupationBasis>, cap: usize) -> Result<HamiltonianTerms> {
    let l = spec.sites();
    if basis.modes() != 2 * l {
        return Err(Error::Dimension("basis modes differ from twice the site count".into()));
    }
    let tb = spec.hopping_b();
    let mut terms = hopping_terms(|i, j| tb[(i, j)], l, 0);
    terms.extend(hopping_terms(|i, j| tb[(i, j)].conj(), l, l));
    let kin = one_body_triplets(&basis, &terms);
    check_nnz(kin.len() + basis.len(), cap)?;
    let (u1, u2) = (spec.interactions_1(), spec.interactions_2());
    let diag = diagonal_triplets(&basis, |occ| {
        (0..l)
            .map(|i| {
                let (nb, nc) = (occ[i] as f64, occ[l + i] as f64);
                u1[i] * (nb + nc).powi(2) + u2[i] * (nb - nc).powi(2)
            })
            .sum()
    });
    Ok(HamiltonianTerms {
        kinetic: SparseOperator::from_triplets(Arc::clone(&basis), kin)?,
        interaction: SparseOperator::from_triplets(basis, diag)?,
    })
}

/// `H₀` and `H_U` of model two in the `(N_b, N_c)` sector.
pub fn build_model2_terms(spec: &ModelTwoSpec, n_b: usize, n_c: usize) -> Result<HamiltonianTerms> {
    let basis = Arc::new(fock::component_sector(spec.sites(), n_b, n_c)?);
    model2_terms_on(spec, basis, DEFAULT_NNZ_CAP)
}

pub fn build_model2_hamiltonian(spec: &ModelTwoSpec, n_b: usize, n_c: usize) -> Result<SparseOperator> {
    build_model2_terms(spec, n_b, n_c)?.total()
}

/// Model two over the whole `N`-particle space (all `(N_b, N_c)` sectors).
pub fn build_model2_hamiltonian_full(spec: &ModelTwoSpec, particles: usize) -> Result<SparseOperator> {
    let basis = Arc::new(fock::enumerate_basis(2 * spec.sites(), particles)?);
    model2_terms_on(spec, basis, DEFAULT_NNZ_CAP)?.total()
}

/// Total-spin operators over the full `N`-particle space of model two.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub sz: SparseOperator,
    pub s2: SparseOperator,
    /// `S⁺ = Σ_i b_i⁺ c_i`.
    pub s_plus: SparseOperator,
}

/// `S^z = (N_b − N_c)/2` and `S² = S⁻S⁺ + S^z(S^z + 1)`.
pub fn build_spin_operators(spec: &ModelTwoSpec, particles: usize) -> Result<SpinOperators> {
    let l = spec.sites();
    let basis = Arc::new(fock::enumerate_basis(2 * l, particles)?);
    let sz_of = |occ: &[u16]| {
        let nb: f64 = occ[..l].iter().map(|&n| n as f64).sum();
        let nc: f64 = occ[l..].iter().map(|&n| n as f64).sum();
        0.5 * (nb - nc)
    };
    let raise = |occ: &[u16]| -> Vec<(Vec<u16>, f64)> { (0..l).filter_map(|i| hop_action(occ, i, l + i)).collect() };
    let lower = |occ: &[u16]| -> Vec<(Vec<u16>, f64)> { (0..l).filter_map(|i| hop_action(occ, l + i, i)).collect() };

    let mut plus = Vec::new();
    let mut s2 = Vec::new();
    for (col, occ) in basis.iter().enumerate() {
        let sz = sz_of(occ);
        s2.push((col, col, Complex64::new(sz * (sz + 1.0), 0.0)));
        for (up, a) in raise(occ) {
            let mid = basis.index_of(&up).expect("S+ conserves N");
            plus.push((mid, col, Complex64::new(a, 0.0)));
            for (down, b) in lower(&up) {
                let row = basis.index_of(&down).expect("S- conserves N");
                s2.push((row, col, Complex64::new(a * b, 0.0)));
            }
        }
    }
    let sz = diagonal_triplets(&basis, sz_of);
    Ok(SpinOperators {
        sz: SparseOperator::from_triplets(Arc::clone(&basis), sz)?,
        s2: SparseOperator::from_triplets(Arc::clone(&basis), s2)?,
        s_plus: SparseOperator::from_triplets(basis, plus)?,
    })
}

/// `1 − dτ·H` with positivity diagnostics.
#[derive(Clone, Debug)]
pub struct ProjectorFactor {
    pub operator: SparseOperator,
    /// Every entry is real and `≥ 0`.
    pub nonnegative: bool,
    /// The directed graph of nonzero entries is strongly connected.
    pub irreducible: bool,
    /// Most negative real part among stored entries (0 when none).
    pub min_entry: f64,
}

/// Builds `1 − dτ·H` for model one without enforcing any sign condition;
/// violations show up in the flags.
pub fn build_projector_factor(spec: &ModelOneSpec, particles: usize, dtau: f64) -> Result<ProjectorFactor> {
    if !(dtau > 0.0) {
        return Err(Error::InvalidArgument(format!("dtau must be > 0, got {dtau}")));
    }
    let h = build_model1_hamiltonian(spec, particles)?;
    let id = SparseOperator::identity(Arc::clone(h.basis()));
    let operator = id.linear_combination(Complex64::new(1.0, 0.0), &h, Complex64::new(-dtau, 0.0))?;
    let min_entry = operator.entries().map(|(_, _, v)| v.re).fold(0.0, f64::min);
    let nonnegative = operator.entries().all(|(_, _, v)| v.re >= 0.0 && v.im == 0.0);
    let irreducible = strongly_connected(&operator);
    Ok(ProjectorFactor { operator, nonnegative, irreducible, min_entry })
}

/// Strong connectivity of the nonzero pattern, via forward and reverse
/// reachability from index 0.
pub fn strongly_connected(op: &SparseOperator) -> bool {
    let n = op.dim();
    if n <= 1 {
        return true;
    }
    let mut forward = vec![Vec::new(); n];
    let mut reverse = vec![Vec::new(); n];
    for (r, c, _) in op.entries() {
        if r != c {
            forward[r].push(c);
            reverse[c].push(r);
        }
    }
    let reach_all = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    };
    reach_all(&forward) && reach_all(&reverse)
}

/// Largest entry of `AB − BA`, computed densely.
pub fn commutator_max(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    if a.basis() != b.basis() {
        return Err(Error::Dimension("commutator across different bases".into()));
    }
    let (da, db) = (a.to_dense(), b.to_dense());
    let c = &da * &db - &db * &da;
    Ok(c.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
