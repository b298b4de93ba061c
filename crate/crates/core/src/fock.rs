//! Occupation-number bases and rank-1 symmetric-tensor states.
//!
//! A rank-1 state `|ψ^N⟩ = (Σ_i ψ_i a_i⁺)^N |0⟩` expands by the multinomial
//! theorem into occupation amplitudes `N! Π_i ψ_i^{n_i} / √(n_i!)`. All
//! overlaps and ladder matrix elements between two such states collapse to
//! powers of the mode-space inner product `φ†ψ`.
//!
//! Bases list occupation vectors in lexicographically descending order,
//! e.g. `(2,0), (1,1), (0,2)`. Model-two modes are ordered `b_1..b_L,
//! c_1..c_L`.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::par;

/// Default cap on the number of basis states in a sector.
pub const DEFAULT_STATE_CAP: usize = 10_000_000;

/// `N!` in floating point: exact below 21, log-gamma above.
pub fn factorial(n: usize) -> f64 {
    if n <= 20 {
        (1..=n as u64).product::<u64>() as f64
    } else {
        ln_gamma(n as f64 + 1.0).exp()
    }
}

/// Binomial coefficient with 128-bit intermediates; saturates on overflow.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of occupation vectors of `m` modes holding `n` bosons.
pub fn sector_size(m: usize, n: usize) -> u128 {
    if m == 0 {
        return u128::from(n == 0);
    }
    binomial(n + m - 1, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Every occupation vector of `modes` modes with the given total.
    Full,
    /// Model-two sector with fixed `(N_b, N_c)`: modes `0..sites` are b,
    /// `sites..2·sites` are c.
    Components { sites: usize, n_b: usize, n_c: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupationBasis {
    modes: usize,
    particles: usize,
    layout: Layout,
    states: Vec<u16>,
    len: usize,
}

impl OccupationBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn state(&self, index: usize) -> &[u16] {
        &self.states[index * self.modes..(index + 1) * self.modes]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[u16]> + '_ {
        self.states.chunks_exact(self.modes.max(1)).take(self.len)
    }

    /// Position of an occupation vector, or `None` when it lies outside
    /// the basis.
    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        if occ.len() != self.modes {
            return None;
        }
        match self.layout {
            Layout::Full => {
                let total: usize = occ.iter().map(|&n| n as usize).sum();
                (total == self.particles).then(|| rank_descending(occ, total))
            }
            Layout::Components { sites, n_b, n_c } => {
                let (b, c) = occ.split_at(sites);
                let sb: usize = b.iter().map(|&n| n as usize).sum();
                let sc: usize = c.iter().map(|&n| n as usize).sum();
                if sb != n_b || sc != n_c {
                    return None;
                }
                let dim_c = sector_size(sites, n_c) as usize;
                Some(rank_descending(b, n_b) * dim_c + rank_descending(c, n_c))
            }
        }
    }
}

/// Rank of `occ` among all vectors with the same length and total, in
/// lexicographically descending order.
fn rank_descending(occ: &[u16], total: usize) -> usize {
    let m = occ.len();
    let mut rem = total;
    let mut rank: u128 = 0;
    for (k, &nk) in occ.iter().enumerate().take(m.saturating_sub(1)) {
        let nk = nk as usize;
        // vectors with a larger entry at position k: hockey-stick sum
        let tail = m - k - 2;
        if rem > nk {
            rank += binomial(rem - nk + tail, tail + 1);
        }
        rem -= nk;
    }
    rank as usize
}

fn check_cap(size: u128, cap: usize) -> Result<()> {
    if size > cap as u128 {
        return Err(Error::CapExceeded { what: "sector basis", size, cap });
    }
    Ok(())
}

/// Calls `f` on every occupation vector of `m` modes with `n` bosons, in
/// lexicographically descending order.
fn for_each_descending(m: usize, n: usize, mut f: impl FnMut(&[u16])) {
    if m == 0 {
        if n == 0 {
            f(&[]);
        }
        return;
    }
    let mut cur = vec![0u16; m];
    cur[0] = n as u16;
    loop {
        f(&cur);
        // rightmost nonzero entry before the last mode
        let Some(k) = (0..m - 1).rev().find(|&k| cur[k] > 0) else {
            return;
        };
        let tail: u16 = cur[k + 1..].iter().sum();
        cur[k] -= 1;
        cur[k + 1] = tail + 1;
        cur[k + 2..].iter_mut().for_each(|x| *x = 0);
    }
}

/// All occupation vectors of `m` modes with `n` bosons.
pub fn enumerate_basis(m: usize, n: usize) -> Result<OccupationBasis> {
    enumerate_basis_with_cap(m, n, DEFAULT_STATE_CAP)
}

pub fn enumerate_basis_with_cap(m: usize, n: usize, cap: usize) -> Result<OccupationBasis> {
    if m == 0 {
        return Err(Error::InvalidArgument("basis needs at least one mode".into()));
    }
    if n > u16::MAX as usize {
        return Err(Error::InvalidArgument(format!("{n} particles exceed the occupation range")));
    }
    let size = sector_size(m, n);
    check_cap(size, cap)?;
    let mut states = Vec::with_capacity(size as usize * m);
    for_each_descending(m, n, |occ| states.extend_from_slice(occ));
    Ok(OccupationBasis { modes: m, particles: n, layout: Layout::Full, states, len: size as usize })
}

/// The `(N_b, N_c)` sector of a two-component model on `sites` sites.
pub fn component_sector(sites: usize, n_b: usize, n_c: usize) -> Result<OccupationBasis> {
    component_sector_with_cap(sites, n_b, n_c, DEFAULT_STATE_CAP)
}

pub fn component_sector_with_cap(sites: usize, n_b: usize, n_c: usize, cap: usize) -> Result<OccupationBasis> {
    if sites == 0 {
        return Err(Error::InvalidArgument("basis needs at least one site".into()));
    }
    let dim_b = sector_size(sites, n_b);
    let dim_c = sector_size(sites, n_c);
    let size = dim_b.saturating_mul(dim_c);
    check_cap(size, cap)?;
    let mut c_states = Vec::with_capacity(dim_c as usize * sites);
    for_each_descending(sites, n_c, |occ| c_states.extend_from_slice(occ));
    let mut states = Vec::with_capacity(size as usize * 2 * sites);
    for_each_descending(sites, n_b, |b| {
        for c in c_states.chunks_exact(sites) {
            states.extend_from_slice(b);
            states.extend_from_slice(c);
        }
    });
    Ok(OccupationBasis {
        modes: 2 * sites,
        particles: n_b + n_c,
        layout: Layout::Components { sites, n_b, n_c },
        states,
        len: size as usize,
    })
}

/// Amplitude vector over a basis.
#[derive(Clone, Debug)]
pub struct SectorVector {
    basis: Arc<OccupationBasis>,
    amplitudes: Vec<Complex64>,
}

impl SectorVector {
    pub fn new(basis: Arc<OccupationBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a basis of {} states",
                amplitudes.len(),
                basis.len()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn zeros(basis: Arc<OccupationBasis>) -> Self {
        let amplitudes = linalg::zeros_vec(basis.len());
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SectorVector) -> Result<Complex64> {
        if self.basis != other.basis {
            return Err(Error::Dimension("inner product across different bases".into()));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amplitudes.iter_mut().for_each(|z| *z *= factor);
    }

    /// Re-expresses the vector in a larger basis containing every state of
    /// this one (e.g. a `(N_b, N_c)` sector inside the full `N` space).
    pub fn embed(&self, target: Arc<OccupationBasis>) -> Result<SectorVector> {
        let mut out = SectorVector::zeros(target);
        for (k, occ) in self.basis.iter().enumerate() {
            let idx = out
                .basis
                .index_of(occ)
                .ok_or_else(|| Error::Dimension(format!("state {occ:?} missing from the target basis")))?;
            out.amplitudes[idx] = self.amplitudes[k];
        }
        Ok(out)
    }
}

/// `|ψ^N⟩ = (a⁺ψ)^N |0⟩`, stored unnormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneState {
    psi: Vec<Complex64>,
    particles: usize,
}

impl RankOneState {
    pub fn new(psi: Vec<Complex64>, particles: usize) -> Self {
        Self { psi, particles }
    }

    pub fn from_real(psi: &[f64], particles: usize) -> Self {
        Self::new(psi.iter().map(|&x| Complex64::new(x, 0.0)).collect(), particles)
    }

    /// `ψ = (φ, conj φ)`: the reflection-structured orbitals of the
    /// two-component cone.
    pub fn reflection(phi: &[Complex64], particles: usize) -> Self {
        let psi = phi.iter().copied().chain(phi.iter().map(|z| z.conj())).collect();
        Self::new(psi, particles)
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn psi_mut(&mut self) -> &mut [Complex64] {
        &mut self.psi
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn modes(&self) -> usize {
        self.psi.len()
    }

    pub fn orbital_norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖ψ^N‖ = √(N!) ‖ψ‖^N`.
    pub fn state_norm(&self) -> f64 {
        factorial(self.particles).sqrt() * self.orbital_norm().powi(self.particles as i32)
    }

    pub fn max_imaginary(&self) -> f64 {
        self.psi.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// `max_i |ψ_{L+i} − conj(ψ_i)|`; zero for reflection-structured states.
    pub fn reflection_defect(&self) -> f64 {
        let l = self.psi.len() / 2;
        (0..l).map(|i| (self.psi[l + i] - self.psi[i].conj()).norm()).fold(0.0, f64::max)
    }
}

/// Occupation amplitude `N! Π ψ_i^{n_i} / √(n_i!)` of `|ψ^N⟩`.
pub fn rank1_amplitude(psi: &[Complex64], occ: &[u16], particles: usize) -> Complex64 {
    let mut acc = Complex64::new(factorial(particles), 0.0);
    for (&p, &n) in psi.iter().zip(occ) {
        if n > 0 {
            acc *= p.powu(n as u32) / factorial(n as usize).sqrt();
        }
    }
    acc
}

fn check_state_basis(state: &RankOneState, basis: &OccupationBasis) -> Result<()> {
    if state.modes() != basis.modes() || state.particles() != basis.particles() {
        return Err(Error::Dimension(format!(
            "state has (m={}, N={}), basis has (m={}, N={})",
            state.modes(),
            state.particles(),
            basis.modes(),
            basis.particles()
        )));
    }
    Ok(())
}

/// Expands `|ψ^N⟩` in the occupation basis. For a component sector the
/// result is the projection onto that sector.
pub fn rank1_to_vector(state: &RankOneState, basis: &Arc<OccupationBasis>) -> Result<SectorVector> {
    check_state_basis(state, basis)?;
    let amps = par::map_range(basis.len(), |k| rank1_amplitude(&state.psi, basis.state(k), state.particles));
    SectorVector::new(Arc::clone(basis), amps)
}

/// `⟨ψ^N|v⟩` without materializing the rank-1 vector.
pub fn rank1_overlap_vector(state: &RankOneState, v: &SectorVector) -> Result<Complex64> {
    check_state_basis(state, v.basis())?;
    Ok(v.basis()
        .iter()
        .zip(v.amplitudes())
        .map(|(occ, a)| rank1_amplitude(&state.psi, occ, state.particles).conj() * a)
        .sum())
}

fn check_pair(a: &RankOneState, b: &RankOneState) -> Result<()> {
    if a.modes() != b.modes() || a.particles() != b.particles() {
        return Err(Error::Dimension(format!(
            "rank-1 states differ: (m={}, N={}) vs (m={}, N={})",
            a.modes(),
            a.particles(),
            b.modes(),
            b.particles()
        )));
    }
    Ok(())
}

/// `φ†ψ`.
pub fn orbital_inner(phi: &[Complex64], psi: &[Complex64]) -> Complex64 {
    phi.iter().zip(psi).map(|(a, b)| a.conj() * b).sum()
}

/// `⟨φ^N|ψ^N⟩ = N! (φ†ψ)^N`.
pub fn overlap_rank1(bra: &RankOneState, ket: &RankOneState) -> Result<Complex64> {
    check_pair(bra, ket)?;
    let s = orbital_inner(&bra.psi, &ket.psi);
    Ok(s.powu(bra.particles as u32) * factorial(bra.particles))
}

/// Normal-ordered one- and two-body operators with closed-form rank-1
/// matrix elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixElementOp {
    /// `a_i⁺ a_j`
    Hop(usize, usize),
    /// `a_i⁺ a_i⁺ a_i a_i`
    Pair(usize),
    /// `a_i⁺ a_i`
    Number(usize),
    /// `a_i⁺ a_j⁺ a_j a_i`; equals `Pair(i)` for `i == j` and
    /// `n_i n_j` otherwise.
    DensityDensity(usize, usize),
}

/// `⟨φ^N| op |ψ^N⟩` from the ladder action `a_j|ψ^N⟩ = N ψ_j |ψ^{N−1}⟩`.
pub fn rank1_matrix_element(bra: &RankOneState, ket: &RankOneState, op: MatrixElementOp) -> Result<Complex64> {
    check_pair(bra, ket)?;
    let n = bra.particles;
    let m = bra.modes();
    let in_range = |i: usize| {
        if i < m {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("mode {i} out of range for {m} modes")))
        }
    };
    let phi = &bra.psi;
    let psi = &ket.psi;
    let s = orbital_inner(phi, psi);
    let nf = n as f64;
    let one_body = |i: usize, j: usize| {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        phi[i].conj() * psi[j] * s.powu(n as u32 - 1) * (nf * nf * factorial(n - 1))
    };
    let two_body = |i: usize, j: usize| -> Result<Complex64> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("two-body element needs N >= 2, got {n}")));
        }
        let c = nf * nf * (nf - 1.0) * (nf - 1.0) * factorial(n - 2);
        Ok(phi[i].conj() * phi[j].conj() * psi[i] * psi[j] * s.powu(n as u32 - 2) * c)
    };
    match op {
        MatrixElementOp::Hop(i, j) => {
            in_range(i)?;
            in_range(j)?;
            Ok(one_body(i, j))
        }
        MatrixElementOp::Number(i) => {
            in_range(i)?;
            Ok(one_body(i, i))
        }
        MatrixElementOp::Pair(i) => {
            in_range(i)?;
            two_body(i, i)
        }
        MatrixElementOp::DensityDensity(i, j) => {
            in_range(i)?;
            in_range(j)?;
            two_body(i, j)
        }
    }
}

/// `exp(a⁺Ta)|ψ^N⟩ = |(exp(T)ψ)^N⟩`.
pub fn apply_quadratic_exponential(t: &CMatrix, state: &RankOneState) -> Result<RankOneState> {
    if t.nrows() != state.modes() || t.ncols() != state.modes() {
        return Err(Error::Dimension(format!(
            "generator is {}x{}, state has {} modes",
            t.nrows(),
            t.ncols(),
            state.modes()
        )));
    }
    let e = linalg::matrix_exponential(t)?;
    Ok(apply_mode_matrix(&e, state))
}

/// `ψ ← Eψ` for an already-exponentiated one-body propagator `E`.
pub fn apply_mode_matrix(e: &CMatrix, state: &RankOneState) -> RankOneState {
    let v = e * DVector::from_column_slice(&state.psi);
    RankOneState::new(v.iter().copied().collect(), state.particles)
}

/// `a_i⁺ a_j |occ⟩ = amp |occ'⟩`, or `None` when `n_j = 0`.
pub fn hop_action(occ: &[u16], i: usize, j: usize) -> Option<(Vec<u16>, f64)> {
    if occ[j] == 0 {
        return None;
    }
    let mut out = occ.to_vec();
    let mut amp = (out[j] as f64).sqrt();
    out[j] -= 1;
    amp *= (out[i] as f64 + 1.0).sqrt();
    out[i] += 1;
    Some((out, amp))
}
