//! Executable checks of the ground-state theorems and the identities used
//! to prove them.
//!
//! Theorem checks return fail verdicts rather than errors, so they can be
//! pointed at specs outside the hypotheses. Only malformed input (wrong
//! shapes, disconnected lattices, wrong-sign couplings) is an error.

pub mod identities;
pub mod quadrature;
pub mod sweep;

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

pub use identities::{
    split_identity_sweep, verify_hs_identity, verify_overlap_formula, verify_quadratic_exponential,
    verify_split_identity, verify_trotter_scaling, CouplingKind, HsReport, RandomizedCheck, SplitReport, SplitSweep,
    TrotterReport,
};

use crate::eigensolver::{default_degeneracy_tol, degeneracy_count, lowest_spectrum, Degeneracy};
use crate::error::{Error, Result};
use crate::fock::{self, rank1_overlap_vector, Layout, RankOneState, SectorVector};
use crate::hamiltonian::{
    build_model1_hamiltonian, build_model2_hamiltonian, build_projector_factor, build_spin_operators,
};
use crate::lattice::{ModelOneSpec, ModelTwoSpec};
use crate::par;

/// Normalized overlaps at or below this value count as zero.
pub const POSITIVITY_THRESHOLD: f64 = 1e-12;

/// Eigenpairs requested per sector.
const LEVELS_PER_SECTOR: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Degeneracy window; `None` selects `1e-8·max(1, |E₀|)`.
    pub degeneracy_tol: Option<f64>,
    /// Upper bound on `⟨S²⟩` for the zero-spin claim.
    pub spin_tol: f64,
    /// Random cone directions tested against the ground state.
    pub trials: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { degeneracy_tol: None, spin_tol: 1e-8, trials: 1000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SectorLabel {
    pub particles: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_c: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorEnergy {
    pub n_b: usize,
    pub n_c: usize,
    pub dimension: usize,
    pub ground_energy: f64,
}

/// Per-claim verdicts; `None` marks a claim that does not apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub unique: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sz_zero: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_spin: Option<bool>,
    pub cone_positive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paired_overlap_positive: Option<bool>,
    pub pass: bool,
}

impl Verdict {
    fn finish(mut self) -> Self {
        self.pass = self.unique
            && self.sz_zero.unwrap_or(true)
            && self.zero_spin.unwrap_or(true)
            && self.cone_positive
            && self.paired_overlap_positive.unwrap_or(true);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub model: &'static str,
    pub particles: usize,
    pub dimension: usize,
    pub ground_energy: f64,
    pub first_excited: Option<f64>,
    pub gap: Option<f64>,
    pub degeneracy: Degeneracy,
    pub degeneracy_tol: f64,
    pub sector_of_ground: SectorLabel,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sector_energies: Vec<SectorEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2_expectation: Option<f64>,
    pub positivity_trials: usize,
    /// Minimum of `⟨ψ^N|GS⟩ / (‖ψ^N‖·‖GS‖)` over the trials.
    pub positivity_min_overlap: f64,
    /// Largest `|Im⟨ψ^N|GS⟩|`, normalized as above.
    pub positivity_max_imaginary: f64,
    /// Normalized overlap with the all-ones reference after phase fixing.
    pub reference_overlap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singlet: Option<SingletReport>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub ground_state: SectorVector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedOverlap {
    /// Pair counts `(i₁, …, i_L)`.
    pub pairing: Vec<u16>,
    /// Overlap of the normalized paired state with the ground state.
    pub overlap: f64,
    pub imaginary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingletReport {
    pub overlaps: Vec<PairedOverlap>,
    pub max_overlap: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantReport {
    pub particles: usize,
    pub dtau: f64,
    pub nonnegative: bool,
    pub irreducible: bool,
    pub min_entry: f64,
    pub ground_energy: f64,
    pub gap: Option<f64>,
    pub degeneracy: Degeneracy,
    pub odd_particle_number: bool,
    pub pass: bool,
}

/// Multiplies `gs` by the phase that makes `⟨ref|gs⟩` real positive and
/// returns the normalized reference overlap.
fn fix_phase(reference: &RankOneState, gs: &mut SectorVector) -> Result<f64> {
    let ov = rank1_overlap_vector(reference, gs)?;
    let mag = ov.norm();
    if mag > 0.0 {
        gs.scale(ov.conj() / mag);
    }
    Ok(mag / (reference.state_norm() * gs.norm()))
}

struct Positivity {
    min_overlap: f64,
    max_imaginary: f64,
}

/// Normalized overlaps of `trials` random cone states with `gs`; trial `k`
/// draws from its own stream so results are independent of scheduling.
fn cone_positivity(
    gs: &SectorVector,
    trials: usize,
    seed: u64,
    draw: impl Fn(&mut ChaCha8Rng) -> RankOneState + Sync + Send,
) -> Result<Positivity> {
    let gs_norm = gs.norm();
    let overlaps = par::map_range(trials, |k| -> Result<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let state = loop {
            let s = draw(&mut rng);
            if s.orbital_norm() > 0.0 {
                break s;
            }
        };
        Ok(rank1_overlap_vector(&state, gs)? / (state.state_norm() * gs_norm))
    });
    let mut out = Positivity { min_overlap: f64::INFINITY, max_imaginary: 0.0 };
    for ov in overlaps {
        let ov = ov?;
        out.min_overlap = out.min_overlap.min(ov.re);
        out.max_imaginary = out.max_imaginary.max(ov.im.abs());
    }
    Ok(out)
}

fn require_pairs(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("pair count n must be ≥ 1".into()));
    }
    Ok(2 * n)
}

/// Uniqueness and cone positivity of the `N = 2n` ground state of model one.
pub fn verify_theorem1(spec: &ModelOneSpec, n: usize, opts: VerifyOptions) -> Result<TheoremReport> {
    let particles = require_pairs(n)?;
    spec.validate().into_result()?;
    let h = build_model1_hamiltonian(spec, particles)?;
    let dim = h.dim();
    let spectrum = lowest_spectrum(&h, LEVELS_PER_SECTOR.min(dim), opts.seed)?;
    let e0 = spectrum.eigenvalues[0];
    let tol = opts.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(e0));
    let degeneracy = degeneracy_count(&spectrum.eigenvalues, tol);

    let mut gs = spectrum.eigenvectors[0].clone();
    let l = spec.sites();
    let reference = RankOneState::from_real(&vec![1.0; l], particles);
    let reference_overlap = fix_phase(&reference, &mut gs)?;
    let pos = cone_positivity(&gs, opts.trials, opts.seed, |rng| {
        let psi: Vec<f64> = (0..l).map(|_| StandardNormal.sample(rng)).collect();
        RankOneState::from_real(&psi, particles)
    })?;

    let verdict = Verdict {
        unique: degeneracy.count == 1,
        sz_zero: None,
        zero_spin: None,
        cone_positive: reference_overlap > POSITIVITY_THRESHOLD
            && (opts.trials == 0 || pos.min_overlap > POSITIVITY_THRESHOLD),
        paired_overlap_positive: None,
        pass: false,
    }
    .finish();

    Ok(TheoremReport {
        model: "one",
        particles,
        dimension: dim,
        ground_energy: e0,
        first_excited: spectrum.eigenvalues.get(1).copied(),
        gap: spectrum.gap(),
        degeneracy,
        degeneracy_tol: tol,
        sector_of_ground: SectorLabel { particles, n_b: None, n_c: None },
        sector_energies: Vec::new(),
        s2_expectation: None,
        positivity_trials: opts.trials,
        positivity_min_overlap: if opts.trials == 0 { f64::NAN } else { pos.min_overlap },
        positivity_max_imaginary: pos.max_imaginary,
        reference_overlap,
        singlet: None,
        verdict,
        ground_state: gs,
    })
}

/// Uniqueness across all `(N_b, N_c)` sectors with `N_b + N_c = 2n`, the
/// `S^z = 0` sector claim, zero total spin for real hoppings, reflection
/// cone positivity and a positive paired-state overlap.
pub fn verify_theorem2(spec: &ModelTwoSpec, n: usize, opts: VerifyOptions) -> Result<TheoremReport> {
    let particles = require_pairs(n)?;
    spec.validate().into_result()?;
    let l = spec.sites();

    // nb descending: (N,0), (N−1,1), …, (0,N)
    let solved = par::map_range(particles + 1, |k| {
        let nb = particles - k;
        let h = build_model2_hamiltonian(spec, nb, particles - nb)?;
        let spectrum = lowest_spectrum(&h, LEVELS_PER_SECTOR.min(h.dim()), opts.seed)?;
        Ok::<_, Error>((nb, h.dim(), spectrum))
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;

    let mut pooled: Vec<f64> = solved.iter().flat_map(|(_, _, s)| s.eigenvalues.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let e0 = pooled[0];
    let tol = opts.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(e0));
    let degeneracy = degeneracy_count(&pooled, tol);

    // first sector in nb-descending order attaining the minimum
    let (nb, _, ground_spectrum) =
        solved.iter().find(|(_, _, s)| s.eigenvalues[0] == e0).expect("minimum comes from some sector");
    let (nb, nc) = (*nb, particles - *nb);
    let mut gs = ground_spectrum.eigenvectors[0].clone();

    let reference = RankOneState::reflection(&vec![Complex64::new(1.0, 0.0); l], particles);
    let reference_overlap = fix_phase(&reference, &mut gs)?;
    let pos = cone_positivity(&gs, opts.trials, opts.seed, |rng| {
        let phi: Vec<Complex64> = (0..l)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        RankOneState::reflection(&phi, particles)
    })?;

    let s2_expectation = if spec.has_real_hopping() {
        let spin = build_spin_operators(spec, particles)?;
        let full = gs.embed(Arc::clone(spin.s2.basis()))?;
        Some(spin.s2.expectation(full.amplitudes()).re / full.norm().powi(2))
    } else {
        None
    };
    let singlet = verify_singlet_overlap(spec, n, &gs)?;

    let verdict = Verdict {
        unique: degeneracy.count == 1,
        sz_zero: Some(nb == nc),
        zero_spin: s2_expectation.map(|s2| s2 <= opts.spin_tol),
        cone_positive: reference_overlap > POSITIVITY_THRESHOLD
            && (opts.trials == 0 || pos.min_overlap > POSITIVITY_THRESHOLD),
        paired_overlap_positive: Some(singlet.pass),
        pass: false,
    }
    .finish();

    let sector_energies = solved
        .iter()
        .map(|(nb, dim, s)| SectorEnergy {
            n_b: *nb,
            n_c: particles - nb,
            dimension: *dim,
            ground_energy: s.eigenvalues[0],
        })
        .collect();

    Ok(TheoremReport {
        model: "two",
        particles,
        dimension: solved.iter().map(|(_, d, _)| d).sum(),
        ground_energy: e0,
        first_excited: pooled.get(1).copied(),
        gap: (pooled.len() >= 2).then(|| pooled[1] - pooled[0]),
        degeneracy,
        degeneracy_tol: tol,
        sector_of_ground: SectorLabel { particles, n_b: Some(nb), n_c: Some(nc) },
        sector_energies,
        s2_expectation,
        positivity_trials: opts.trials,
        positivity_min_overlap: if opts.trials == 0 { f64::NAN } else { pos.min_overlap },
        positivity_max_imaginary: pos.max_imaginary,
        reference_overlap,
        singlet: Some(singlet),
        verdict,
        ground_state: gs,
    })
}

/// Overlaps of the normalized paired states
/// `Π_i (b_i⁺c_i⁺)^{k_i}|0⟩ / Π k_i!` with `ground`, for `Σ k_i = n`.
///
/// A ground state outside the `(n, n)` sector has zero overlap with every
/// paired state.
pub fn verify_singlet_overlap(spec: &ModelTwoSpec, n: usize, ground: &SectorVector) -> Result<SingletReport> {
    let l = spec.sites();
    let basis = ground.basis();
    if basis.modes() != 2 * l {
        return Err(Error::Dimension(format!("ground state has {} modes, spec has {}", basis.modes(), 2 * l)));
    }
    let norm = ground.norm();
    let pairings = fock::enumerate_basis(l, n)?;
    let overlaps: Vec<PairedOverlap> = pairings
        .iter()
        .map(|k| {
            let occ: Vec<u16> = k.iter().chain(k.iter()).copied().collect();
            let amp = basis.index_of(&occ).map(|idx| ground.amplitudes()[idx] / norm).unwrap_or_default();
            PairedOverlap { pairing: k.to_vec(), overlap: amp.re, imaginary: amp.im }
        })
        .collect();
    let max_overlap = overlaps.iter().map(|p| p.overlap).fold(f64::NEG_INFINITY, f64::max);
    let in_sector = matches!(basis.layout(), Layout::Components { n_b, n_c, .. } if n_b == n && n_c == n)
        || matches!(basis.layout(), Layout::Full);
    Ok(SingletReport { pass: in_sector && max_overlap > POSITIVITY_THRESHOLD, overlaps, max_overlap })
}

/// Nonnegativity and irreducibility of `1 − dτ·H` and uniqueness of the
/// ground state for nonnegative hoppings, any `U` and any `N ≥ 1`.
pub fn verify_variant_uniqueness(
    spec: &ModelOneSpec,
    particles: usize,
    dtau: f64,
    tol: Option<f64>,
) -> Result<VariantReport> {
    if particles == 0 {
        return Err(Error::InvalidArgument("particle number must be ≥ 1".into()));
    }
    spec.validate_nonnegative_variant().into_result()?;
    let factor = build_projector_factor(spec, particles, dtau)?;
    let h = build_model1_hamiltonian(spec, particles)?;
    let spectrum = lowest_spectrum(&h, LEVELS_PER_SECTOR.min(h.dim()), 0)?;
    let e0 = spectrum.eigenvalues[0];
    let degeneracy = degeneracy_count(&spectrum.eigenvalues, tol.unwrap_or_else(|| default_degeneracy_tol(e0)));
    let pass = factor.nonnegative && factor.irreducible && degeneracy.count == 1;
    Ok(VariantReport {
        particles,
        dtau,
        nonnegative: factor.nonnegative,
        irreducible: factor.irreducible,
        min_entry: factor.min_entry,
        ground_energy: e0,
        gap: spectrum.gap(),
        degeneracy,
        odd_particle_number: particles % 2 == 1,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeKind;

    fn opts(trials: usize) -> VerifyOptions {
        VerifyOptions { trials, seed: 3, ..Default::default() }
    }

    #[test]
    fn theorem1_two_site_chain() {
        let spec = ModelOneSpec::standard(LatticeKind::Chain, 2, 1.0, -1.0).unwrap();
        let r = verify_theorem1(&spec, 1, opts(200)).unwrap();
        assert!((r.ground_energy + 3.0 + 5f64.sqrt()).abs() < 1e-10);
        assert_eq!(r.degeneracy.count, 1);
        assert!(r.positivity_min_overlap > 0.0);
        assert_eq!(r.positivity_max_imaginary, 0.0);
        assert!(r.verdict.pass);
    }

    #[test]
    fn theorem1_three_site_chain_unique() {
        let spec = ModelOneSpec::standard(LatticeKind::Chain, 3, 1.0, -1.0).unwrap();
        let r = verify_theorem1(&spec, 1, opts(50)).unwrap();
        assert_eq!(r.degeneracy.count, 1);
        assert!(r.gap.unwrap() > 1e-3);
    }

    #[test]
    fn theorem1_rejects_disconnected() {
        let spec = ModelOneSpec::new(nalgebra::DMatrix::zeros(2, 2), vec![-1.0, -1.0]).unwrap();
        assert!(matches!(verify_theorem1(&spec, 1, opts(10)), Err(Error::Precondition(_))));
    }

    #[test]
    fn theorem1_repeatable() {
        let spec = ModelOneSpec::standard(LatticeKind::Ring, 3, -1.0, -0.7).unwrap();
        let a = verify_theorem1(&spec, 1, opts(100)).unwrap();
        let b = verify_theorem1(&spec, 1, opts(100)).unwrap();
        assert_eq!(a.positivity_min_overlap, b.positivity_min_overlap);
    }

    #[test]
    fn theorem2_real_chain() {
        let spec = ModelTwoSpec::standard(LatticeKind::Chain, 2, Complex64::new(1.0, 0.0), -1.0, 0.5).unwrap();
        let r = verify_theorem2(&spec, 1, opts(200)).unwrap();
        assert_eq!(r.degeneracy.count, 1);
        assert_eq!((r.sector_of_ground.n_b, r.sector_of_ground.n_c), (Some(1), Some(1)));
        assert_eq!(r.sector_energies.len(), 3);
        assert!(r.verdict.cone_positive);
        assert_eq!(r.verdict.paired_overlap_positive, Some(true));
        // the on-site pair b⁺c⁺ is the m = 0 member of a triplet; U₂ does not
        // restore SU(2), so the ground state carries S = 1
        let s2 = r.s2_expectation.unwrap();
        assert!((s2 - 2.0).abs() < 1e-8, "⟨S²⟩ = {s2}");
        assert_eq!(r.verdict.zero_spin, Some(false));
    }

    #[test]
    fn theorem2_zero_spin_without_u2() {
        let spec = ModelTwoSpec::new(
            nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|x| Complex64::new(x, 0.0))),
            vec![-1.0; 2],
            vec![0.0; 2],
        )
        .unwrap();
        // outside the strict hypotheses (U₂ = 0), so call the pieces directly
        let spin = build_spin_operators(&spec, 2).unwrap();
        let h = crate::hamiltonian::build_model2_hamiltonian_full(&spec, 2).unwrap();
        assert!(crate::hamiltonian::commutator_max(&h, &spin.s2).unwrap() < 1e-12);
    }

    #[test]
    fn theorem2_complex_phase() {
        let t = Complex64::from_polar(1.0, std::f64::consts::PI / 5.0);
        let spec = ModelTwoSpec::standard(LatticeKind::Chain, 2, t, -1.0, 0.5).unwrap();
        let r = verify_theorem2(&spec, 1, opts(200)).unwrap();
        assert!(r.verdict.pass);
        assert_eq!(r.s2_expectation, None);
        assert_eq!(r.sector_of_ground.n_b, Some(1));
    }

    #[test]
    fn theorem2_single_site() {
        let spec = ModelTwoSpec::new(nalgebra::DMatrix::zeros(1, 1), vec![-1.0], vec![1.0]).unwrap();
        let r = verify_theorem2(&spec, 1, opts(20)).unwrap();
        assert_eq!(r.ground_energy, -4.0);
        let energies: Vec<f64> = r.sector_energies.iter().map(|s| s.ground_energy).collect();
        assert_eq!(energies, vec![0.0, -4.0, 0.0]);
        let singlet = r.singlet.unwrap();
        assert_eq!(singlet.overlaps.len(), 1);
        assert!((singlet.overlaps[0].overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singlet_family_excludes_unpaired_states() {
        let spec = ModelTwoSpec::standard(LatticeKind::Chain, 2, Complex64::new(1.0, 0.0), -1.0, 0.5).unwrap();
        let r = verify_theorem2(&spec, 1, opts(0)).unwrap();
        let s = r.singlet.unwrap();
        let pairings: Vec<_> = s.overlaps.iter().map(|p| p.pairing.clone()).collect();
        assert_eq!(pairings, vec![vec![1, 0], vec![0, 1]]);
        assert!(s.pass);
    }

    #[test]
    fn variant_odd_and_even() {
        let spec = ModelOneSpec::standard(LatticeKind::Chain, 2, 1.0, 1.0).unwrap();
        let r = verify_variant_uniqueness(&spec, 3, 0.01, None).unwrap();
        assert!(r.pass && r.odd_particle_number);
        let spec = ModelOneSpec::standard(LatticeKind::Chain, 3, 1.0, -0.5).unwrap();
        assert!(verify_variant_uniqueness(&spec, 2, 0.01, None).unwrap().pass);
    }

    #[test]
    fn variant_large_step_loses_nonnegativity() {
        let spec = ModelOneSpec::standard(LatticeKind::Chain, 2, 1.0, 1.0).unwrap();
        let r = verify_variant_uniqueness(&spec, 3, 1.0, None).unwrap();
        assert!(!r.nonnegative && !r.pass);
        assert_eq!(r.degeneracy.count, 1);
    }

    #[test]
    fn variant_rejects_negative_hopping() {
        let spec = ModelOneSpec::standard(LatticeKind::Chain, 2, -1.0, 1.0).unwrap();
        assert!(matches!(verify_variant_uniqueness(&spec, 2, 0.01, None), Err(Error::Precondition(_))));
    }
}
