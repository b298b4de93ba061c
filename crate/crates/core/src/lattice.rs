//! Model specifications for the one- and two-component Bose-Hubbard models.
//!
//! Model one: `H = −Σ t_ij a_i⁺a_j + Σ U_i n_i²` with real symmetric `t` and
//! `U_i < 0`. Model two: `H = −Σ t^b_ij b_i⁺b_j − Σ t^c_ij c_i⁺c_j +
//! Σ U_1i (n^b_i + n^c_i)² + Σ U_2i (n^b_i − n^c_i)²` with `t^c = conj(t^b)`,
//! `U_1i < 0` and `U_2i > 0`.
//!
//! Constructors only check shapes. Sign, symmetry and connectivity
//! conditions are reported by [`ModelOneSpec::validate`] and
//! [`ModelTwoSpec::validate`], so out-of-hypothesis models can still be
//! built and explored.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOneSpec {
    hopping: DMatrix<f64>,
    interactions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelTwoSpec {
    hopping_b: DMatrix<Complex64>,
    interactions_1: Vec<f64>,
    interactions_2: Vec<f64>,
}

/// Either model; used where code paths are shared.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    One(ModelOneSpec),
    Two(ModelTwoSpec),
}

fn check_square<T>(m: &DMatrix<T>, sites: usize, name: &str) -> Result<()> {
    if m.nrows() != sites || m.ncols() != sites {
        return Err(Error::Dimension(format!("{name} is {}x{}, expected {sites}x{sites}", m.nrows(), m.ncols())));
    }
    Ok(())
}

impl ModelOneSpec {
    pub fn new(hopping: DMatrix<f64>, interactions: Vec<f64>) -> Result<Self> {
        if interactions.is_empty() {
            return Err(Error::Dimension("lattice must have at least one site".into()));
        }
        check_square(&hopping, interactions.len(), "hopping")?;
        Ok(Self { hopping, interactions })
    }

    pub fn standard(kind: LatticeKind, sites: usize, t: f64, u: f64) -> Result<Self> {
        let hopping = build_standard_lattice(kind, sites, t)?;
        Self::new(hopping, vec![u; sites])
    }

    pub fn sites(&self) -> usize {
        self.interactions.len()
    }

    pub fn hopping(&self) -> &DMatrix<f64> {
        &self.hopping
    }

    pub fn interactions(&self) -> &[f64] {
        &self.interactions
    }

    /// Checks the hypotheses of the attractive model: symmetric hopping,
    /// `U_i < 0` and a connected bond graph.
    pub fn validate(&self) -> ValidationReport {
        let l = self.sites();
        let mut report = ValidationReport::default();
        let asym = (0..l)
            .flat_map(|i| (0..l).map(move |j| (i, j)))
            .find(|&(i, j)| self.hopping[(i, j)] != self.hopping[(j, i)]);
        report.push("hopping_symmetric", asym.is_none(), asym.map(|(i, j)| format!("t[{i}][{j}] != t[{j}][{i}]")));
        push_sign_check(&mut report, "interactions_negative", &self.interactions, |u| u < 0.0, "< 0");
        push_connectivity(&mut report, &adjacency(&self.hopping, |t| *t != 0.0));
        report
    }

    /// Checks the relaxed hypotheses of the nonnegative-hopping variant:
    /// symmetric `t_ij ≥ 0` on a connected graph, arbitrary real `U_i`.
    pub fn validate_nonnegative_variant(&self) -> ValidationReport {
        let l = self.sites();
        let mut report = ValidationReport::default();
        let asym = (0..l)
            .flat_map(|i| (0..l).map(move |j| (i, j)))
            .find(|&(i, j)| self.hopping[(i, j)] != self.hopping[(j, i)]);
        report.push("hopping_symmetric", asym.is_none(), asym.map(|(i, j)| format!("t[{i}][{j}] != t[{j}][{i}]")));
        let neg = (0..l).flat_map(|i| (0..l).map(move |j| (i, j))).find(|&(i, j)| self.hopping[(i, j)] < 0.0);
        report.push(
            "hopping_nonnegative",
            neg.is_none(),
            neg.map(|(i, j)| format!("t[{i}][{j}] = {} < 0", self.hopping[(i, j)])),
        );
        let finite = self.interactions.iter().all(|u| u.is_finite());
        report.push("interactions_finite", finite, None);
        push_connectivity(&mut report, &adjacency(&self.hopping, |t| *t != 0.0));
        report
    }
}

impl ModelTwoSpec {
    pub fn new(hopping_b: DMatrix<Complex64>, interactions_1: Vec<f64>, interactions_2: Vec<f64>) -> Result<Self> {
        if interactions_1.is_empty() {
            return Err(Error::Dimension("lattice must have at least one site".into()));
        }
        if interactions_2.len() != interactions_1.len() {
            return Err(Error::Dimension(format!(
                "interactions_2 has {} sites, interactions_1 has {}",
                interactions_2.len(),
                interactions_1.len()
            )));
        }
        check_square(&hopping_b, interactions_1.len(), "hopping_b")?;
        Ok(Self { hopping_b, interactions_1, interactions_2 })
    }

    pub fn standard(kind: LatticeKind, sites: usize, t: Complex64, u1: f64, u2: f64) -> Result<Self> {
        let real = build_standard_lattice(kind, sites, 1.0)?;
        let mut hopping = real.map(|x| Complex64::new(x, 0.0) * t);
        // keep Hermitian: the upper triangle carries t, the lower conj(t)
        for i in 0..sites {
            for j in 0..i {
                hopping[(i, j)] = hopping[(j, i)].conj();
            }
        }
        Self::new(hopping, vec![u1; sites], vec![u2; sites])
    }

    pub fn sites(&self) -> usize {
        self.interactions_1.len()
    }

    pub fn hopping_b(&self) -> &DMatrix<Complex64> {
        &self.hopping_b
    }

    /// Elementwise conjugate of `hopping_b`; never stored separately.
    pub fn hopping_c(&self) -> DMatrix<Complex64> {
        self.hopping_b.map(|z| z.conj())
    }

    pub fn interactions_1(&self) -> &[f64] {
        &self.interactions_1
    }

    pub fn interactions_2(&self) -> &[f64] {
        &self.interactions_2
    }

    /// True when every hopping amplitude has exactly zero imaginary part.
    pub fn has_real_hopping(&self) -> bool {
        self.hopping_b.iter().all(|z| z.im == 0.0)
    }

    pub fn validate(&self) -> ValidationReport {
        let l = self.sites();
        let mut report = ValidationReport::default();
        let bad = (0..l)
            .flat_map(|i| (0..l).map(move |j| (i, j)))
            .find(|&(i, j)| self.hopping_b[(i, j)] != self.hopping_b[(j, i)].conj());
        report.push(
            "hopping_hermitian",
            bad.is_none(),
            bad.map(|(i, j)| format!("t_b[{i}][{j}] != conj(t_b[{j}][{i}])")),
        );
        push_sign_check(&mut report, "interactions_1_negative", &self.interactions_1, |u| u < 0.0, "< 0");
        push_sign_check(&mut report, "interactions_2_positive", &self.interactions_2, |u| u > 0.0, "> 0");
        push_connectivity(&mut report, &adjacency(&self.hopping_b, |t| *t != Complex64::new(0.0, 0.0)));
        report
    }
}

impl ModelSpec {
    pub fn sites(&self) -> usize {
        match self {
            ModelSpec::One(s) => s.sites(),
            ModelSpec::Two(s) => s.sites(),
        }
    }

    /// Number of single-particle modes: `L` for model one, `2L` for model two.
    pub fn modes(&self) -> usize {
        match self {
            ModelSpec::One(s) => s.sites(),
            ModelSpec::Two(s) => 2 * s.sites(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            ModelSpec::One(s) => s.validate(),
            ModelSpec::Two(s) => s.validate(),
        }
    }
}

fn push_sign_check(
    report: &mut ValidationReport,
    name: &'static str,
    values: &[f64],
    ok: impl Fn(f64) -> bool,
    want: &str,
) {
    let bad = values.iter().position(|&u| !ok(u));
    report.push(name, bad.is_none(), bad.map(|i| format!("site {i}: {} is not {want}", values[i])));
}

fn push_connectivity(report: &mut ValidationReport, adj: &[Vec<usize>]) {
    let connected = is_connected(adj);
    report.push(
        "connected",
        connected,
        (!connected).then(|| "bond graph of nonzero hoppings is disconnected".to_string()),
    );
}

/// Adjacency lists of the bond graph `{(i, j) : i ≠ j, nonzero(t_ij)}`.
/// Diagonal entries never create bonds.
pub fn adjacency<T>(hopping: &DMatrix<T>, nonzero: impl Fn(&T) -> bool) -> Vec<Vec<usize>> {
    let l = hopping.nrows();
    (0..l)
        .map(|i| (0..l).filter(|&j| j != i && (nonzero(&hopping[(i, j)]) || nonzero(&hopping[(j, i)]))).collect())
        .collect()
}

/// Breadth-first reachability from site 0.
pub fn is_connected(adj: &[Vec<usize>]) -> bool {
    if adj.is_empty() {
        return false;
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
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
    count == adj.len()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ValidationReport {
    fn push(&mut self, name: &'static str, passed: bool, detail: Option<String>) {
        self.checks.push(Check { name, passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Converts a failing report into a precondition error.
    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let msg = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| match &c.detail {
                Some(d) => format!("{}: {d}", c.name),
                None => c.name.to_string(),
            })
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::Precondition(msg))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Ring,
    Complete,
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeKind::Chain => "chain",
            LatticeKind::Ring => "ring",
            LatticeKind::Complete => "complete",
        };
        f.write_str(s)
    }
}

/// Real symmetric hopping matrix with amplitude `t` on every bond of the
/// requested graph. Sites are 0-based here.
pub fn build_standard_lattice(kind: LatticeKind, sites: usize, t: f64) -> Result<DMatrix<f64>> {
    if sites == 0 {
        return Err(Error::InvalidArgument("lattice needs at least one site".into()));
    }
    if sites >= 2 && t == 0.0 {
        return Err(Error::InvalidArgument("t = 0 leaves the lattice disconnected".into()));
    }
    let mut h = DMatrix::zeros(sites, sites);
    let mut bond = |i: usize, j: usize| {
        h[(i, j)] = t;
        h[(j, i)] = t;
    };
    match kind {
        LatticeKind::Chain => (1..sites).for_each(|i| bond(i - 1, i)),
        LatticeKind::Ring => {
            (1..sites).for_each(|i| bond(i - 1, i));
            if sites > 2 {
                bond(sites - 1, 0);
            }
        }
        LatticeKind::Complete => {
            for i in 0..sites {
                for j in 0..i {
                    bond(i, j);
                }
            }
        }
    }
    Ok(h)
}
