//! Projector Monte Carlo over rank-1 walkers `|ψ^N⟩`.
//!
//! Each step applies `exp(−τH_U)` through per-site Gaussian auxiliary
//! fields, each of which acts as a one-body diagonal factor, and then
//! `exp(−τH₀)` as `ψ ← e^{τK}ψ` with `K` the mode-space hopping matrix.
//! Walkers therefore stay rank-1. Model-one orbitals stay real and
//! model-two orbitals keep the `(φ, conj φ)` form, so every trial overlap
//! is nonnegative and there is no sign problem. This is checked at every
//! step.
//!
//! Field densities absorb the Gaussian prefactor, so weights change only
//! through the orbital norm: after every one-body factor `ψ` is normalized
//! and `‖ψ‖^N` is folded into the weight.
//!
//! Resampling resets weights to one. With a nonzero population window the
//! energy undoes the resulting population-control bias: each measurement
//! enters the ratio `Σ Π·num / Σ Π·den` with `Π` the product of the
//! preceding window's mean-weight growth factors.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::RankOneState;
use crate::lattice::ModelSpec;
use crate::linalg::{matrix_exponential, matrix_exponential_real, to_complex, CMatrix};
use crate::par;

/// Stream index reserved for population control.
const RESAMPLE_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// `e^{−τH₀} e^{−τH_U}` per step.
    #[default]
    FirstOrder,
    /// `e^{−τH₀/2} e^{−τH_U} e^{−τH₀/2}` per step.
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectionSchedule {
    pub beta: f64,
    pub steps: usize,
    /// Measurements at or before this step are excluded from the average.
    pub equilibration_steps: usize,
    /// Steps between measurements; resampling follows each measurement.
    pub measure_interval: usize,
    pub splitting: Splitting,
    /// Each measurement is reweighted by the product of this many preceding
    /// population growth factors; 0 disables the population-control correction.
    pub population_window: usize,
}

impl ProjectionSchedule {
    pub fn new(beta: f64, steps: usize) -> Result<Self> {
        let s = Self {
            beta,
            steps,
            equilibration_steps: steps / 2,
            measure_interval: 10,
            splitting: Splitting::FirstOrder,
            population_window: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn tau(&self) -> f64 {
        self.beta / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite and > 0, got {}", self.beta)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("step count must be ≥ 1".into()));
        }
        if self.measure_interval == 0 {
            return Err(Error::InvalidArgument("measure_interval must be ≥ 1".into()));
        }
        if self.equilibration_steps >= self.steps {
            return Err(Error::InvalidArgument(format!(
                "equilibration_steps {} leaves no measurements in {} steps",
                self.equilibration_steps, self.steps
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Walker {
    /// Unit-norm orbital.
    pub state: RankOneState,
    pub weight: f64,
}

impl Walker {
    /// Normalizes `ψ`, folding `‖ψ‖^N` into the weight.
    fn renormalize(&mut self) {
        let norm = self.state.orbital_norm();
        let inv = Complex64::new(1.0 / norm, 0.0);
        self.state.psi_mut().iter_mut().for_each(|z| *z *= inv);
        self.weight *= norm.powi(self.state.particles() as i32);
    }
}

/// Sampled auxiliary fields for one time step.
#[derive(Clone, Debug, PartialEq)]
pub enum InteractionFields {
    /// `x_i`, acting as `e^{−x_i}` on mode `i`.
    One(Vec<f64>),
    /// `(x₁ᵢ, x₂ᵢ)`, acting as `e^{−x₁ᵢ−ix₂ᵢ}` on `b_i` and
    /// `e^{−x₁ᵢ+ix₂ᵢ}` on `c_i`.
    Two(Vec<(f64, f64)>),
}

#[derive(Clone, Debug)]
enum Couplings {
    One { u: Vec<f64> },
    Two { u1: Vec<f64>, u2: Vec<f64> },
}

/// Precomputed one-body factors and field widths for a fixed `τ`.
#[derive(Clone, Debug)]
pub struct Propagator {
    couplings: Couplings,
    sites: usize,
    particles: usize,
    tau: f64,
    /// `e^{τt}` (model one) or `e^{τt^b}` (model two, `b` block).
    full: CMatrix,
    half: CMatrix,
    /// Mode-space hopping `K`, with `H₀ = −Σ K_ij a_i⁺a_j`.
    kinetic: CMatrix,
    /// Field standard deviations per site: `√(2τ|U|)` or `(√(2τ|U₁|), √(2τU₂))`.
    sigma: Vec<(f64, f64)>,
}

impl Propagator {
    /// Requires a Hermitian hopping, `U ≤ 0` for model one, and `U₁ ≤ 0`,
    /// `U₂ ≥ 0` for model two. Connectivity is not required.
    pub fn new(spec: &ModelSpec, particles: usize, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must be finite and ≥ 0, got {tau}")));
        }
        if particles == 0 {
            return Err(Error::InvalidArgument("particle number must be ≥ 1".into()));
        }
        let sites = spec.sites();
        match spec {
            ModelSpec::One(s) => {
                let t = s.hopping();
                if t != &t.transpose() {
                    return Err(Error::Precondition("hopping matrix is not symmetric".into()));
                }
                if let Some(i) = s.interactions().iter().position(|&u| !(u <= 0.0)) {
                    return Err(Error::Precondition(format!(
                        "site {i}: U = {} must be ≤ 0 for a real auxiliary field",
                        s.interactions()[i]
                    )));
                }
                let sigma = s.interactions().iter().map(|&u| ((2.0 * tau * -u).sqrt(), 0.0)).collect();
                Ok(Self {
                    couplings: Couplings::One { u: s.interactions().to_vec() },
                    sites,
                    particles,
                    tau,
                    full: to_complex(&matrix_exponential_real(&(t * tau))?),
                    half: to_complex(&matrix_exponential_real(&(t * (0.5 * tau)))?),
                    kinetic: to_complex(t),
                    sigma,
                })
            }
            ModelSpec::Two(s) => {
                let tb = s.hopping_b();
                if tb != &tb.adjoint() {
                    return Err(Error::Precondition("b hopping matrix is not Hermitian".into()));
                }
                let (u1, u2) = (s.interactions_1(), s.interactions_2());
                if let Some(i) = u1.iter().position(|&u| !(u <= 0.0)) {
                    return Err(Error::Precondition(format!("site {i}: U1 = {} must be ≤ 0", u1[i])));
                }
                if let Some(i) = u2.iter().position(|&u| !(u >= 0.0)) {
                    return Err(Error::Precondition(format!("site {i}: U2 = {} must be ≥ 0", u2[i])));
                }
                let mut kinetic = CMatrix::zeros(2 * sites, 2 * sites);
                kinetic.view_mut((0, 0), (sites, sites)).copy_from(tb);
                kinetic.view_mut((sites, sites), (sites, sites)).copy_from(&s.hopping_c());
                let scale = |f: f64| tb.map(|z| z * f);
                let sigma =
                    u1.iter().zip(u2).map(|(&a, &b)| ((2.0 * tau * -a).sqrt(), (2.0 * tau * b).sqrt())).collect();
                Ok(Self {
                    couplings: Couplings::Two { u1: u1.to_vec(), u2: u2.to_vec() },
                    sites,
                    particles,
                    tau,
                    full: matrix_exponential(&scale(tau))?,
                    half: matrix_exponential(&scale(0.5 * tau))?,
                    kinetic,
                    sigma,
                })
            }
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn is_model_two(&self) -> bool {
        matches!(self.couplings, Couplings::Two { .. })
    }

    /// Unit-norm all-ones orbital, reflection-structured for model two.
    pub fn trial(&self) -> RankOneState {
        let m = if self.is_model_two() { 2 * self.sites } else { self.sites };
        let v = 1.0 / (m as f64).sqrt();
        RankOneState::new(vec![Complex64::new(v, 0.0); m], self.particles)
    }

    pub fn initial_walker(&self) -> Walker {
        Walker { state: self.trial(), weight: 1.0 }
    }

    fn apply_block(e: &CMatrix, psi: &mut [Complex64], conjugate: bool) {
        let input = psi.to_vec();
        for (i, out) in psi.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in input.iter().enumerate() {
                let m = if conjugate { e[(i, j)].conj() } else { e[(i, j)] };
                acc += m * x;
            }
            *out = acc;
        }
    }

    fn hop_with(&self, e: &CMatrix, walker: &mut Walker) {
        let l = self.sites;
        let psi = walker.state.psi_mut();
        if self.is_model_two() {
            let (b, c) = psi.split_at_mut(l);
            Self::apply_block(e, b, false);
            Self::apply_block(e, c, true);
        } else {
            Self::apply_block(e, psi, false);
        }
        walker.renormalize();
    }

    /// `ψ ← e^{τK}ψ`, then renormalization.
    pub fn propagate_hopping(&self, walker: &mut Walker) {
        self.hop_with(&self.full, walker);
    }

    /// Half-step variant used by symmetric splitting.
    pub fn propagate_hopping_half(&self, walker: &mut Walker) {
        self.hop_with(&self.half, walker);
    }

    /// Draws one field per site (two for model two) from centred Gaussians
    /// of variance `2τ|U|`.
    pub fn sample_fields(&self, rng: &mut impl Rng) -> InteractionFields {
        let mut draw = |s: f64| s * rng.sample::<f64, _>(StandardNormal);
        match self.couplings {
            Couplings::One { .. } => InteractionFields::One(self.sigma.iter().map(|&(s, _)| draw(s)).collect()),
            Couplings::Two { .. } => {
                InteractionFields::Two(self.sigma.iter().map(|&(s1, s2)| (draw(s1), draw(s2))).collect())
            }
        }
    }

    /// Applies the one-body factors for given fields, then renormalizes.
    pub fn apply_interaction_fields(&self, walker: &mut Walker, fields: &InteractionFields) -> Result<()> {
        let l = self.sites;
        let psi = walker.state.psi_mut();
        match fields {
            InteractionFields::One(x) if x.len() == l && !self.is_model_two() => {
                for (p, &xi) in psi.iter_mut().zip(x) {
                    *p *= (-xi).exp();
                }
            }
            InteractionFields::Two(x) if x.len() == l && self.is_model_two() => {
                for (i, &(x1, x2)) in x.iter().enumerate() {
                    let f = Complex64::from_polar((-x1).exp(), -x2);
                    psi[i] *= f;
                    psi[l + i] *= f.conj();
                }
            }
            _ => return Err(Error::Dimension("auxiliary fields do not match the model".into())),
        }
        walker.renormalize();
        Ok(())
    }

    /// Samples fields and applies them.
    pub fn sample_interaction(&self, walker: &mut Walker, rng: &mut impl Rng) {
        let fields = self.sample_fields(rng);
        self.apply_interaction_fields(walker, &fields).expect("fields sampled for this model");
    }

    /// One time step under the given splitting.
    pub fn step(&self, walker: &mut Walker, splitting: Splitting, rng: &mut impl Rng) {
        match splitting {
            Splitting::FirstOrder => {
                self.sample_interaction(walker, rng);
                self.propagate_hopping(walker);
            }
            Splitting::Symmetric => {
                self.propagate_hopping_half(walker);
                self.sample_interaction(walker, rng);
                self.propagate_hopping_half(walker);
            }
        }
    }

    /// `(⟨T^N|ψ^N⟩ / N!, ⟨T^N|H|ψ^N⟩ / ⟨T^N|ψ^N⟩)` from the closed-form
    /// rank-1 matrix elements, written as ratios so no factorial appears.
    pub fn local_energy(&self, trial: &RankOneState, psi: &RankOneState) -> (Complex64, Complex64) {
        let (t, p) = (trial.psi(), psi.psi());
        let n = self.particles as f64;
        let s: Complex64 = t.iter().zip(p).map(|(a, b)| a.conj() * b).sum();
        let overlap = s.powu(self.particles as u32);
        if s == Complex64::new(0.0, 0.0) {
            return (overlap, Complex64::new(f64::NAN, f64::NAN));
        }
        let kp = &self.kinetic * nalgebra::DVector::from_column_slice(p);
        let hop: Complex64 = t.iter().zip(kp.iter()).map(|(a, b)| a.conj() * b).sum();
        let mut energy = -n * hop / s;
        // r_k = conj(T_k)ψ_k/s: number(k) = N r_k, normal-ordered pair terms N(N−1) r_k r_l
        let r: Vec<Complex64> = t.iter().zip(p).map(|(a, b)| a.conj() * b / s).collect();
        let pair = n * (n - 1.0);
        let square = |k: usize| pair * r[k] * r[k] + n * r[k];
        match &self.couplings {
            Couplings::One { u } => {
                for (k, &uk) in u.iter().enumerate() {
                    energy += uk * square(k);
                }
            }
            Couplings::Two { u1, u2 } => {
                let l = self.sites;
                for i in 0..l {
                    energy += (u1[i] + u2[i]) * (square(i) + square(l + i));
                    energy += 2.0 * (u1[i] - u2[i]) * pair * r[i] * r[l + i];
                }
            }
        }
        (overlap, energy)
    }
}

/// `Σ w·⟨T|H|ψ⟩ / Σ w·⟨T|ψ⟩` (real part).
pub fn mixed_energy_estimator(walkers: &[Walker], trial: &RankOneState, prop: &Propagator) -> Result<f64> {
    let (num, den) = mixed_energy_terms(walkers, trial, prop)?;
    let est = (num / den).re;
    if !est.is_finite() {
        return Err(Error::NonFinite("mixed energy estimator"));
    }
    Ok(est)
}

/// Numerator `Σ w⟨T|φ⟩E_L` and denominator `Σ w⟨T|φ⟩` of the mixed estimator.
fn mixed_energy_terms(walkers: &[Walker], trial: &RankOneState, prop: &Propagator) -> Result<(Complex64, Complex64)> {
    let terms = par::map_range(walkers.len(), |k| prop.local_energy(trial, &walkers[k].state));
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (w, (ov, e)) in walkers.iter().zip(terms) {
        let wo = w.weight * ov;
        scale += wo.norm();
        den += wo;
        if wo != Complex64::new(0.0, 0.0) {
            num += wo * e;
        }
    }
    if !(scale > 0.0) || den.norm() <= 1e-12 * scale {
        return Err(Error::DegenerateEnsemble(format!(
            "estimator denominator {:.3e} against scale {scale:.3e}",
            den.norm()
        )));
    }
    Ok((num, den))
}

/// Systematic (comb) resampling to `target` walkers of weight `W/target`.
pub fn resample_population(walkers: &[Walker], target: usize, rng: &mut impl Rng) -> Result<Vec<Walker>> {
    let total: f64 = walkers.iter().map(|w| w.weight).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateEnsemble(format!("total weight {total} cannot be resampled")));
    }
    if target == 0 {
        return Err(Error::InvalidArgument("target population must be ≥ 1".into()));
    }
    let step = total / target as f64;
    let offset: f64 = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(target);
    let mut cumulative = 0.0;
    let mut k = 0;
    for w in walkers {
        cumulative += w.weight;
        while k < target && offset + k as f64 * step < cumulative {
            out.push(Walker { state: w.state.clone(), weight: step });
            k += 1;
        }
    }
    // roundoff can leave the last tooth past the final cumulative sum
    let last = walkers.iter().rposition(|w| w.weight > 0.0).expect("positive total weight");
    while out.len() < target {
        out.push(Walker { state: walkers[last].state.clone(), weight: step });
    }
    Ok(out)
}

/// Standard error of the mean with serial correlations, by repeated
/// pairwise blocking; the largest estimate over levels down to eight
/// blocks. `None` for fewer than two samples.
pub fn blocking_error(samples: &[f64]) -> Option<f64> {
    ratio_blocking_error(samples, &vec![1.0; samples.len()])
}

/// Blocking error of the ratio `Σ num / Σ den`, linearized about the
/// pooled ratio. `None` for fewer than two samples or a vanishing `Σ den`.
pub fn ratio_blocking_error(num: &[f64], den: &[f64]) -> Option<f64> {
    assert_eq!(num.len(), den.len(), "numerator and denominator lengths differ");
    if num.len() < 2 {
        return None;
    }
    let total: f64 = den.iter().sum();
    if total == 0.0 {
        return None;
    }
    let ratio = num.iter().sum::<f64>() / total;
    let mut data: Vec<(f64, f64)> = num.iter().copied().zip(den.iter().copied()).collect();
    let mut best: f64 = 0.0;
    loop {
        let n = data.len() as f64;
        let mean_den = data.iter().map(|d| d.1).sum::<f64>() / n;
        let var = data.iter().map(|&(a, b)| ((a - ratio * b) / mean_den).powi(2)).sum::<f64>() / (n - 1.0);
        best = best.max((var / n).sqrt());
        if data.len() < 16 {
            return Some(best);
        }
        data = data.chunks_exact(2).map(|c| (c[0].0 + c[1].0, c[0].1 + c[1].1)).collect();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub estimator: f64,
    /// Blocking error of the post-equilibration measurements so far.
    pub block_error: Option<f64>,
    /// Population weight just before resampling, relative to unit weights
    /// after the previous resampling.
    pub total_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionSummary {
    pub model: &'static str,
    pub particles: usize,
    pub beta: f64,
    pub steps: usize,
    pub tau: f64,
    pub splitting: Splitting,
    pub population_window: usize,
    pub walkers: usize,
    pub seed: u64,
    /// Mixed estimate over post-equilibration measurements.
    pub energy: f64,
    /// Blocking error of `energy`.
    pub error: Option<f64>,
    pub measurements: usize,
    /// Smallest normalized trial overlap `Re (T†ψ)^N` seen at any step.
    pub min_overlap: f64,
    pub negative_overlaps: usize,
    /// Largest `|Im ψ|` (model one) or `|ψ_c − conj ψ_b|` (model two).
    pub max_structure_defect: f64,
    /// `ln` of the total population weight growth over the run.
    pub log_weight_growth: f64,
    pub odd_particle_number: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionRun {
    pub trace: Vec<TraceRow>,
    pub summary: ProjectionSummary,
}

struct Slot {
    walker: Walker,
    rng: ChaCha8Rng,
    overlap: f64,
    defect: f64,
}

/// Runs the projection from the all-ones trial state.
///
/// Walker `k` draws from stream `k` of the seed and resampling from a
/// reserved stream; every reduction is index-ordered, so results are
/// bit-identical for a given seed regardless of thread count.
pub fn run_projection(
    spec: &ModelSpec,
    particles: usize,
    schedule: ProjectionSchedule,
    walker_count: usize,
    seed: u64,
) -> Result<ProjectionRun> {
    schedule.validate()?;
    if walker_count == 0 {
        return Err(Error::InvalidArgument("walker count must be ≥ 1".into()));
    }
    let prop = Propagator::new(spec, particles, schedule.tau())?;
    let trial = prop.trial();
    let mut slots: Vec<Slot> = (0..walker_count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            Slot { walker: prop.initial_walker(), rng, overlap: 1.0, defect: 0.0 }
        })
        .collect();
    let mut resample_rng = ChaCha8Rng::seed_from_u64(seed);
    resample_rng.set_stream(RESAMPLE_STREAM);

    let model_two = prop.is_model_two();
    let mut trace = Vec::new();
    let mut measured = Vec::new();
    let mut min_overlap = f64::INFINITY;
    let mut max_defect: f64 = 0.0;
    let mut log_scale = 0.0;
    let mut growth_logs: Vec<f64> = Vec::new();
    let (mut corrected_num, mut corrected_den) = (Vec::new(), Vec::new());

    for step in 1..=schedule.steps {
        par::for_each_mut(&mut slots, |_, slot| {
            prop.step(&mut slot.walker, schedule.splitting, &mut slot.rng);
            let (ov, _) = prop.local_energy(&trial, &slot.walker.state);
            slot.overlap = ov.re;
            slot.defect =
                if model_two { slot.walker.state.reflection_defect() } else { slot.walker.state.max_imaginary() };
        });
        for (k, slot) in slots.iter().enumerate() {
            if !(slot.overlap >= 0.0) {
                return Err(Error::SignViolation { step, walker: k, overlap: slot.overlap });
            }
            min_overlap = min_overlap.min(slot.overlap);
            max_defect = max_defect.max(slot.defect);
        }

        if step % schedule.measure_interval == 0 || step == schedule.steps {
            let walkers: Vec<Walker> = slots.iter().map(|s| s.walker.clone()).collect();
            let (num, den) = mixed_energy_terms(&walkers, &trial, &prop)?;
            let estimator = (num / den).re;
            if !estimator.is_finite() {
                return Err(Error::NonFinite("mixed energy estimator"));
            }
            let total: f64 = walkers.iter().map(|w| w.weight).sum();
            if step > schedule.equilibration_steps {
                measured.push(estimator);
                let start = growth_logs.len().saturating_sub(schedule.population_window);
                let pi = growth_logs[start..].iter().sum::<f64>().exp();
                corrected_num.push(pi * num.re);
                corrected_den.push(pi * den.re);
            }
            growth_logs.push((total / walker_count as f64).ln());
            trace.push(TraceRow { step, estimator, block_error: blocking_error(&measured), total_weight: total });
            let next = resample_population(&walkers, walker_count, &mut resample_rng)?;
            log_scale += growth_logs[growth_logs.len() - 1];
            for (slot, w) in slots.iter_mut().zip(next) {
                slot.walker = Walker { state: w.state, weight: 1.0 };
            }
        }
    }

    let (energy, error) = if schedule.population_window == 0 {
        (measured.iter().sum::<f64>() / measured.len() as f64, blocking_error(&measured))
    } else {
        (
            corrected_num.iter().sum::<f64>() / corrected_den.iter().sum::<f64>(),
            ratio_blocking_error(&corrected_num, &corrected_den),
        )
    };
    let summary = ProjectionSummary {
        model: if model_two { "two" } else { "one" },
        particles,
        beta: schedule.beta,
        steps: schedule.steps,
        tau: schedule.tau(),
        splitting: schedule.splitting,
        population_window: schedule.population_window,
        walkers: walker_count,
        seed,
        energy,
        error,
        measurements: measured.len(),
        min_overlap,
        negative_overlaps: 0,
        max_structure_defect: max_defect,
        log_weight_growth: log_scale,
        odd_particle_number: particles % 2 == 1,
    };
    Ok(ProjectionRun { trace, summary })
}
