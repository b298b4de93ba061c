//! Batch front-end: TOML experiment configs, command dispatch and
//! machine-readable reports.
//!
//! Every command writes one schema-versioned JSON document into the output
//! directory, plus CSV for traces and sweeps. Exit status is 0 when every
//! verdict passes, 1 when a verdict fails, and 2 on an error, in which
//! case `error.json` describes it.
//!
//! A minimal config:
//!
//! ```toml
//! model = "one"
//!
//! [lattice]
//! kind = "chain"
//! sites = 2
//! t = 1.0
//!
//! [interactions]
//! u = -1.0
//!
//! [sector]
//! particles = 2
//! ```

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{default_degeneracy_tol, degeneracy_count, lowest_spectrum, Degeneracy};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_model1_hamiltonian, build_model1_terms, build_model2_hamiltonian, build_model2_terms};
use crate::lattice::{build_standard_lattice, LatticeKind, ModelOneSpec, ModelSpec, ModelTwoSpec};
use crate::qmc::{run_projection, ProjectionSchedule, ProjectionSummary, Splitting, TraceRow};
use crate::verify::{
    self, split_identity_sweep, verify_hs_identity, verify_overlap_formula, verify_quadratic_exponential,
    verify_trotter_scaling, CouplingKind, HsReport, RandomizedCheck, SplitSweep, TheoremReport, TrotterReport,
    VariantReport, VerifyOptions,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TRACE_HEADER: &str = "step,estimator,block_error,total_weight";
pub const TROTTER_HEADER: &str = "steps,tau,error";
/// Acceptance bound for the randomized rank-1 identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Acceptance bound for the auxiliary-field quadrature checks.
pub const HS_TOL: f64 = 1e-8;

// ---------------------------------------------------------------- config

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    One,
    Two,
    /// Model one with `t ≥ 0` and interactions of either sign.
    Variant,
}

/// A single value for every site or one value per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSite {
    Uniform(f64),
    List(Vec<f64>),
}

impl PerSite {
    fn resolve(&self, sites: usize, path: &str, errors: &mut Vec<String>) -> Vec<f64> {
        match self {
            PerSite::Uniform(v) => vec![*v; sites],
            PerSite::List(v) => {
                if v.len() != sites {
                    errors.push(format!("{path}: has {} entries, lattice has {sites} sites", v.len()));
                }
                v.clone()
            }
        }
    }
}

/// Real hopping `t` or complex `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HoppingValue {
    Real(f64),
    Complex([f64; 2]),
}

impl HoppingValue {
    pub fn value(self) -> Complex64 {
        match self {
            HoppingValue::Real(x) => Complex64::new(x, 0.0),
            HoppingValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl Default for HoppingValue {
    fn default() -> Self {
        HoppingValue::Real(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub sites: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<LatticeKind>,
    /// Bond amplitude for `kind`; the lower triangle takes the conjugate.
    #[serde(default)]
    pub t: HoppingValue,
    /// `[i, j, re, im]` with 1-based sites; sets `t_ij` and `t_ji = conj`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonds: Option<Vec<(usize, usize, f64, f64)>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<PerSite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<PerSite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2: Option<PerSite>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub particles: usize,
    /// Model two only: restricts `ed` to `N_b = n_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Degeneracy window; unset selects `1e-8·max(1, |E₀|)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<f64>,
    pub spin: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { degeneracy: None, spin: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdConfig {
    pub levels: usize,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self { levels: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub trials: usize,
    /// Step of the `1 − dτ·H` factor for the variant model.
    pub dtau: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { trials: 1000, dtau: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QmcConfig {
    pub beta: f64,
    pub steps: usize,
    pub walkers: usize,
    /// Unset selects a quarter of the steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibration_steps: Option<usize>,
    pub measure_interval: usize,
    pub splitting: Splitting,
    /// Unset spans the equilibration length in measurements.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population_window: Option<usize>,
    /// Unset uses the top-level seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for QmcConfig {
    fn default() -> Self {
        Self {
            beta: 8.0,
            steps: 256,
            walkers: 512,
            equilibration_steps: None,
            measure_interval: 10,
            splitting: Splitting::FirstOrder,
            population_window: None,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    pub hs_tau: f64,
    pub hs_attractive_u: f64,
    pub hs_repulsive_u: f64,
    pub hs_n_max: usize,
    pub trotter_beta: f64,
    pub trotter_steps: Vec<usize>,
    pub split_u: f64,
    pub split_dtau: f64,
    pub split_prefactor: f64,
    pub split_n_max: usize,
    pub split_halvings: usize,
    pub exp_quadratic_trials: usize,
    pub overlap_trials: usize,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            hs_tau: 0.1,
            hs_attractive_u: -1.0,
            hs_repulsive_u: 1.0,
            hs_n_max: 4,
            trotter_beta: 1.0,
            trotter_steps: vec![8, 16, 32, 64],
            split_u: -1.0,
            split_dtau: 1e-3,
            split_prefactor: 3.0,
            split_n_max: 4,
            split_halvings: 4,
            exp_quadratic_trials: 100,
            overlap_trials: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Overridden by `--out`.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub seed: u64,
    pub lattice: LatticeConfig,
    pub interactions: InteractionConfig,
    pub sector: SectorConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub ed: EdConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub qmc: QmcConfig,
    #[serde(default)]
    pub identities: IdentitiesConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

/// Parses and validates a TOML config. Validation problems are reported
/// together, each prefixed by its field path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    config.model_spec()?;
    Ok(config)
}

/// TOML text that [`parse_config`] maps back to an equal config.
pub fn serialize_config(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Config(vec![e.to_string()]))
}

fn hopping_matrix(lat: &LatticeConfig, errors: &mut Vec<String>) -> DMatrix<Complex64> {
    let l = lat.sites;
    let zero = Complex64::new(0.0, 0.0);
    let mut t = DMatrix::from_element(l, l, zero);
    match (&lat.kind, &lat.bonds) {
        (Some(_), Some(_)) | (None, None) => {
            errors.push("lattice: exactly one of `kind` and `bonds` must be given".into());
        }
        (Some(kind), None) => {
            let value = lat.t.value();
            if value == zero && l >= 2 {
                errors.push("lattice.t: must be nonzero for a standard lattice".into());
                return t;
            }
            match build_standard_lattice(*kind, l, 1.0) {
                Ok(pattern) => {
                    for i in 0..l {
                        for j in 0..l {
                            if pattern[(i, j)] != 0.0 {
                                t[(i, j)] = if i < j { value } else { value.conj() };
                            }
                        }
                    }
                }
                Err(e) => errors.push(format!("lattice: {e}")),
            }
        }
        (None, Some(bonds)) => {
            for (k, &(i, j, re, im)) in bonds.iter().enumerate() {
                let path = format!("lattice.bonds[{k}]");
                if !(1..=l).contains(&i) || !(1..=l).contains(&j) {
                    errors.push(format!("{path}: site index outside [1, {l}] in ({i}, {j})"));
                    continue;
                }
                if i == j && im != 0.0 {
                    errors.push(format!("{path}: on-site term must be real"));
                }
                let v = Complex64::new(re, im);
                t[(i - 1, j - 1)] = v;
                t[(j - 1, i - 1)] = v.conj();
            }
        }
    }
    t
}

impl ExperimentConfig {
    /// Builds the model spec, collecting every field error.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mut errors = Vec::new();
        let l = self.lattice.sites;
        if l == 0 {
            return Err(Error::Config(vec!["lattice.sites: must be ≥ 1".into()]));
        }
        if self.sector.particles == 0 {
            errors.push("sector.particles: must be ≥ 1".into());
        }
        let t = hopping_matrix(&self.lattice, &mut errors);
        let ints = &self.interactions;
        let spec = match self.model {
            ModelKind::One | ModelKind::Variant => {
                for (name, v) in [("u1", &ints.u1), ("u2", &ints.u2)] {
                    if v.is_some() {
                        errors.push(format!("interactions.{name}: only valid for model two"));
                    }
                }
                if self.sector.n_b.is_some() {
                    errors.push("sector.n_b: only valid for model two".into());
                }
                if t.iter().any(|z| z.im != 0.0) {
                    errors.push("lattice: hoppings must be real for this model".into());
                }
                let variant = self.model == ModelKind::Variant;
                if variant && t.iter().any(|z| z.re < 0.0) {
                    errors.push("lattice: hoppings must be ≥ 0 for the variant model".into());
                }
                let u = match &ints.u {
                    Some(u) => u.resolve(l, "interactions.u", &mut errors),
                    None => {
                        errors.push("interactions.u: required".into());
                        Vec::new()
                    }
                };
                for (i, &ui) in u.iter().enumerate() {
                    if !ui.is_finite() || (!variant && ui >= 0.0) {
                        errors.push(format!("interactions.u[{i}]: must be < 0 for model one (got {ui})"));
                    }
                }
                if !errors.is_empty() {
                    return Err(Error::Config(errors));
                }
                ModelSpec::One(ModelOneSpec::new(t.map(|z| z.re), u)?)
            }
            ModelKind::Two => {
                if ints.u.is_some() {
                    errors.push("interactions.u: use u1 and u2 for model two".into());
                }
                let mut get = |v: &Option<PerSite>, name: &str| match v {
                    Some(v) => v.resolve(l, &format!("interactions.{name}"), &mut errors),
                    None => {
                        errors.push(format!("interactions.{name}: required for model two"));
                        Vec::new()
                    }
                };
                let u1 = get(&ints.u1, "u1");
                let u2 = get(&ints.u2, "u2");
                for (i, &u) in u1.iter().enumerate() {
                    if !(u < 0.0) {
                        errors.push(format!("interactions.u1[{i}]: must be < 0 (got {u})"));
                    }
                }
                for (i, &u) in u2.iter().enumerate() {
                    if !(u > 0.0) || !u.is_finite() {
                        errors.push(format!("interactions.u2[{i}]: must be > 0 (got {u})"));
                    }
                }
                if let Some(nb) = self.sector.n_b {
                    if nb > self.sector.particles {
                        errors.push(format!("sector.n_b: {nb} exceeds sector.particles"));
                    }
                }
                if !errors.is_empty() {
                    return Err(Error::Config(errors));
                }
                ModelSpec::Two(ModelTwoSpec::new(t, u1, u2)?)
            }
        };
        Ok(spec)
    }

    fn qmc_seed(&self) -> u64 {
        self.qmc.seed.unwrap_or(self.seed)
    }
}

// ---------------------------------------------------------------- reports

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'static str,
    config: &'a ExperimentConfig,
    pass: bool,
    result: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdSector {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_c: Option<usize>,
    pub dimension: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdReport {
    pub particles: usize,
    pub sectors: Vec<EdSector>,
    pub ground_energy: f64,
    pub gap: Option<f64>,
    pub degeneracy: Degeneracy,
    pub degeneracy_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum VerifyReport {
    Theorem(Box<TheoremReport>),
    Variant(VariantReport),
}

#[derive(Clone, Debug, Serialize)]
pub struct QmcReport {
    pub summary: ProjectionSummary,
    pub trace_rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityVerdicts {
    pub hs: bool,
    pub trotter: bool,
    pub split: bool,
    pub exp_quadratic: bool,
    pub overlap: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitiesReport {
    pub hs: Vec<HsReport>,
    pub trotter: TrotterReport,
    pub split: SplitSweep,
    pub exp_quadratic: RandomizedCheck,
    pub overlap: RandomizedCheck,
    pub verdicts: IdentityVerdicts,
}

// ---------------------------------------------------------------- commands

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact spectrum of the configured sector(s).
    Ed,
    /// Ground-state uniqueness and positivity checks.
    Verify,
    /// Projector Monte Carlo run.
    Qmc,
    /// Auxiliary-field, splitting and rank-1 identity checks.
    Identities,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ed => "ed",
            Command::Verify => "verify",
            Command::Qmc => "qmc",
            Command::Identities => "identities",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bosehub", version, about = "Bose-Hubbard exact diagonalization, verification and projector QMC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `outputs.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed (overrides the config seeds).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Degeneracy tolerance (overrides `tolerances.degeneracy`).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

/// Outcome of a command: whether every verdict passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub pass: bool,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn envelope<'a, T: Serialize>(cmd: Command, config: &'a ExperimentConfig, pass: bool, result: T) -> Envelope<'a, T> {
    Envelope { schema_version: SCHEMA_VERSION, command: cmd.name(), config, pass, result }
}

fn verify_options(config: &ExperimentConfig) -> VerifyOptions {
    VerifyOptions {
        degeneracy_tol: config.tolerances.degeneracy,
        spin_tol: config.tolerances.spin,
        trials: config.verify.trials,
        seed: config.seed,
    }
}

fn run_ed(config: &ExperimentConfig, spec: &ModelSpec) -> Result<EdReport> {
    let n = config.sector.particles;
    let levels = config.ed.levels.max(1);
    let mut sectors = Vec::new();
    match spec {
        ModelSpec::One(s) => {
            let h = build_model1_hamiltonian(s, n)?;
            let r = lowest_spectrum(&h, levels.min(h.dim()), config.seed)?;
            sectors.push(EdSector {
                n_b: None,
                n_c: None,
                dimension: h.dim(),
                eigenvalues: r.eigenvalues,
                residuals: r.residuals,
            });
        }
        ModelSpec::Two(s) => {
            let nbs: Vec<usize> = match config.sector.n_b {
                Some(nb) => vec![nb],
                None => (0..=n).rev().collect(),
            };
            for nb in nbs {
                let h = build_model2_hamiltonian(s, nb, n - nb)?;
                let r = lowest_spectrum(&h, levels.min(h.dim()), config.seed)?;
                sectors.push(EdSector {
                    n_b: Some(nb),
                    n_c: Some(n - nb),
                    dimension: h.dim(),
                    eigenvalues: r.eigenvalues,
                    residuals: r.residuals,
                });
            }
        }
    }
    let mut pooled: Vec<f64> = sectors.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let e0 = pooled[0];
    let tol = config.tolerances.degeneracy.unwrap_or_else(|| default_degeneracy_tol(e0));
    Ok(EdReport {
        particles: n,
        ground_energy: e0,
        gap: (pooled.len() >= 2).then(|| pooled[1] - pooled[0]),
        degeneracy: degeneracy_count(&pooled, tol),
        degeneracy_tol: tol,
        sectors,
    })
}

fn run_verify(config: &ExperimentConfig, spec: &ModelSpec) -> Result<VerifyReport> {
    let n = config.sector.particles;
    let opts = verify_options(config);
    let pairs = || {
        if n % 2 == 1 {
            Err(Error::Config(vec![format!("sector.particles: must be even for the theorem checks (got {n})")]))
        } else {
            Ok(n / 2)
        }
    };
    Ok(match (config.model, spec) {
        (ModelKind::Variant, ModelSpec::One(s)) => VerifyReport::Variant(verify::verify_variant_uniqueness(
            s,
            n,
            config.verify.dtau,
            config.tolerances.degeneracy,
        )?),
        (_, ModelSpec::One(s)) => VerifyReport::Theorem(Box::new(verify::verify_theorem1(s, pairs()?, opts)?)),
        (_, ModelSpec::Two(s)) => VerifyReport::Theorem(Box::new(verify::verify_theorem2(s, pairs()?, opts)?)),
    })
}

fn write_trace(dir: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let err = r.block_error.map(|e| e.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.step, r.estimator, err, r.total_weight));
    }
    fs::write(dir.join("qmc_trace.csv"), out)?;
    Ok(())
}

fn run_identities(config: &ExperimentConfig, spec: &ModelSpec) -> Result<IdentitiesReport> {
    let id = &config.identities;
    let hs = vec![
        verify_hs_identity(id.hs_attractive_u, id.hs_tau, id.hs_n_max, CouplingKind::Attractive)?,
        verify_hs_identity(id.hs_repulsive_u, id.hs_tau, id.hs_n_max, CouplingKind::RepulsiveImaginary)?,
    ];
    let n = config.sector.particles;
    let terms = match spec {
        ModelSpec::One(s) => build_model1_terms(s, n)?,
        ModelSpec::Two(s) => {
            let nb = config.sector.n_b.unwrap_or(n / 2);
            build_model2_terms(s, nb, n - nb)?
        }
    };
    let trotter = verify_trotter_scaling(&terms, id.trotter_beta, &id.trotter_steps)?;
    let split = split_identity_sweep(
        id.split_u,
        id.split_dtau,
        id.split_prefactor,
        id.split_n_max,
        id.split_halvings,
        CouplingKind::Attractive,
    )?;
    let exp_quadratic = verify_quadratic_exponential(3, 4, id.exp_quadratic_trials, config.seed)?;
    let overlap = verify_overlap_formula(4, 6, id.overlap_trials, config.seed)?;
    let verdicts = IdentityVerdicts {
        hs: hs.iter().all(|r| r.max_relative_error <= HS_TOL),
        trotter: trotter.slope_in_range,
        split: split.ratios_in_range,
        exp_quadratic: exp_quadratic.max_error <= IDENTITY_TOL,
        overlap: overlap.max_error <= IDENTITY_TOL,
    };
    Ok(IdentitiesReport { hs, trotter, split, exp_quadratic, overlap, verdicts })
}

fn write_trotter(dir: &Path, report: &TrotterReport) -> Result<()> {
    let mut out = String::from(TROTTER_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!("{},{},{}\n", r.steps, r.tau, r.error));
    }
    fs::write(dir.join("trotter_sweep.csv"), out)?;
    Ok(())
}

/// Runs one command and writes its artifacts into `dir`.
pub fn run_command(cmd: Command, config: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let spec = config.model_spec()?;
    fs::create_dir_all(dir)?;
    let pass = match cmd {
        Command::Ed => {
            let report = run_ed(config, &spec)?;
            write_json(dir, "ed.json", &envelope(cmd, config, true, report))?;
            true
        }
        Command::Verify => {
            let report = run_verify(config, &spec)?;
            let pass = match &report {
                VerifyReport::Theorem(r) => r.verdict.pass,
                VerifyReport::Variant(r) => r.pass,
            };
            write_json(dir, "verify.json", &envelope(cmd, config, pass, report))?;
            pass
        }
        Command::Qmc => {
            let q = &config.qmc;
            let equilibration_steps = q.equilibration_steps.unwrap_or(q.steps / 4);
            let schedule = ProjectionSchedule {
                beta: q.beta,
                steps: q.steps,
                equilibration_steps,
                measure_interval: q.measure_interval,
                splitting: q.splitting,
                population_window: q.population_window.unwrap_or(equilibration_steps / q.measure_interval.max(1)),
            };
            let run = run_projection(&spec, config.sector.particles, schedule, q.walkers, config.qmc_seed())?;
            write_trace(dir, &run.trace)?;
            let pass = run.summary.negative_overlaps == 0;
            let report = QmcReport { summary: run.summary, trace_rows: run.trace.len() };
            write_json(dir, "qmc_summary.json", &envelope(cmd, config, pass, report))?;
            pass
        }
        Command::Identities => {
            let report = run_identities(config, &spec)?;
            write_trotter(dir, &report.trotter)?;
            let v = &report.verdicts;
            let pass = v.hs && v.trotter && v.split && v.exp_quadratic && v.overlap;
            write_json(dir, "identities.json", &envelope(cmd, config, pass, report))?;
            pass
        }
    };
    Ok(Outcome { pass })
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    command: &'static str,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    details: Vec<String>,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config(vec!["--config: a config file is required".into()]))?;
    let text = fs::read_to_string(path)?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        if config.qmc.seed.is_some() {
            config.qmc.seed = Some(seed);
        }
    }
    if let Some(tol) = cli.tol {
        config.tolerances.degeneracy = Some(tol);
    }
    if let Some(out) = &cli.out {
        config.outputs.dir = out.clone();
    }
    Ok(config)
}

/// Runs a parsed command line; returns the process exit status.
pub fn run_cli(cli: Cli) -> i32 {
    let config = load_config(&cli);
    let dir = match (&cli.out, &config) {
        (Some(out), _) => out.clone(),
        (None, Ok(c)) => c.outputs.dir.clone(),
        (None, Err(_)) => PathBuf::from("out"),
    };
    let result = config.and_then(|c| run_command(cli.command, &c, &dir));
    match result {
        Ok(outcome) => {
            if outcome.pass {
                0
            } else {
                eprintln!("{}: a verdict failed; see the report in {}", cli.command.name(), dir.display());
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let details = match &e {
                Error::Config(list) => list.clone(),
                _ => Vec::new(),
            };
            let report = ErrorReport {
                schema_version: SCHEMA_VERSION,
                command: cli.command.name(),
                error: ErrorBody { kind: e.kind(), message: e.to_string(), details },
            };
            if fs::create_dir_all(&dir).is_ok() {
                let _ = write_json(&dir, "error.json", &report);
            }
            let _ = std::io::stderr().flush();
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
model = "one"

[lattice]
kind = "chain"
sites = 2

[interactions]
u = -1.0

[sector]
particles = 2
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.lattice.t, HoppingValue::Real(1.0));
        assert_eq!(c.qmc, QmcConfig::default());
        assert_eq!(c.verify.trials, 1000);
        assert_eq!(c.outputs.dir, PathBuf::from("out"));
        let ModelSpec::One(s) = c.model_spec().unwrap() else { panic!() };
        assert_eq!(s.hopping()[(0, 1)], 1.0);
    }

    #[test]
    fn round_trip() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.qmc.seed = Some(7);
        c.tolerances.degeneracy = Some(1e-9);
        let back = parse_config(&serialize_config(&c).unwrap()).unwrap();
        assert_eq!(back, c);

        let two = r#"
model = "two"
[lattice]
sites = 3
bonds = [[1, 2, 0.5, 0.25], [2, 3, 1, 0]]
[interactions]
u1 = [-1.0, -0.5, -2.0]
u2 = 0.5
[sector]
particles = 2
n_b = 1
"#;
        let c = parse_config(two).unwrap();
        assert_eq!(parse_config(&serialize_config(&c).unwrap()).unwrap(), c);
        let ModelSpec::Two(s) = c.model_spec().unwrap() else { panic!() };
        assert_eq!(s.hopping_b()[(1, 0)], Complex64::new(0.5, -0.25));
    }

    #[test]
    fn negative_u2_names_field() {
        let text = r#"
model = "two"
[lattice]
kind = "chain"
sites = 2
[interactions]
u1 = -1.0
u2 = [0.5, -0.5]
[sector]
particles = 2
"#;
        let Err(Error::Config(errs)) = parse_config(text) else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("interactions.u2[1]")), "{errs:?}");
    }

    #[test]
    fn bond_out_of_range() {
        let text = r#"
model = "one"
[lattice]
sites = 2
bonds = [[1, 3, 1.0, 0.0]]
[interactions]
u = -1.0
[sector]
particles = 2
"#;
        let Err(Error::Config(errs)) = parse_config(text) else { panic!() };
        assert!(errs[0].contains("lattice.bonds[0]") && errs[0].contains("[1, 2]"), "{errs:?}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("particles = 2", "particles = 2\nparticle = 3");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("[sector]", "[qmc]\nbeta_ = 1.0\n[sector]");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
    }

    #[test]
    fn lattice_needs_one_source() {
        let text = MINIMAL.replace("kind = \"chain\"", "kind = \"chain\"\nbonds = [[1, 2, 1.0, 0.0]]");
        let Err(Error::Config(errs)) = parse_config(&text) else { panic!() };
        assert!(errs[0].starts_with("lattice:"));
    }

    #[test]
    fn variant_allows_positive_u_but_not_negative_t() {
        let text = MINIMAL.replace("\"one\"", "\"variant\"").replace("u = -1.0", "u = 1.0");
        assert!(parse_config(&text).is_ok());
        let text = text.replace("sites = 2", "sites = 2\nt = -1.0");
        assert!(parse_config(&text).is_err());
    }
}
