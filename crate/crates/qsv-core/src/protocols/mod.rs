//! Test sets of the verification protocols, represented as adaptive branch
//! structures.
//!
//! A test is a tree of local projective measurements: the measuring parties
//! project one after another, and the last party projects onto the
//! conditional reduced state of the target given the observed outcomes. We
//! store each accepting path as a [`Branch`]; the dense projector
//! `E = sum_b |u_b><u_b|` is only materialized on demand via
//! [`TestBranches::densify`], because symmetrized families can hold
//! `3^{n-1} n` tests and bulk densification would exhaust memory.
//!
//! Branches whose Born probability under the target falls at or below
//! `1e-12` are excluded. This keeps `E |Psi> = |Psi>` while making each test
//! maximally stringent: outcome strings the target cannot produce are
//! rejected outright.

mod mub;
mod sd;

pub use mub::{hps_tests, mub_family_tests};
pub use sd::sd_tests;

use std::fmt;
use std::sync::Arc;

use crate::bases::{
    design_bases, icosahedron_directions, pauli_eigenbases, tetrahedron_directions,
    LocalBasis,
};
use crate::linalg::ComplexMatrix;
use crate::states::PureState;
use crate::{C64, QsvError, Result};

/// Branch weights at or below this threshold are dropped.
pub const BRANCH_WEIGHT_CUTOFF: f64 = 1e-12;

/// Identifier of a test: which party measures last and which basis each of
/// the other parties uses (for the SD family, the settings string is the
/// Schmidt-vs-Fourier choice per step).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestLabel {
    pub last_party: usize,
    pub settings: Vec<usize>,
}

impl fmt::Display for TestLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m=")?;
        for &s in &self.settings {
            write!(f, "{s}")?;
        }
        write!(f, ";k={}", self.last_party + 1)
    }
}

/// One measurement step of a branch: `party` measures in `basis` and the
/// branch accepts outcome `outcome`.
#[derive(Debug, Clone)]
pub struct BranchStep {
    pub party: usize,
    pub basis: Arc<LocalBasis>,
    pub outcome: usize,
}

/// An accepting measurement path. `final_state` is the conditional reduced
/// state of the target on `final_party`; `weight` is the Born probability of
/// the path under the target, so weights over a test sum to one.
#[derive(Debug, Clone)]
pub struct Branch {
    pub steps: Vec<BranchStep>,
    pub final_party: usize,
    pub final_state: Vec<C64>,
    pub weight: f64,
}

/// A single test as its list of accepting branches.
#[derive(Debug, Clone)]
pub struct TestBranches {
    pub label: TestLabel,
    pub dims: Vec<usize>,
    pub branches: Vec<Branch>,
}

impl TestBranches {
    /// Total Born probability of the accepting branches under the target
    /// (1 within 1e-10 by construction).
    pub fn target_pass_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// The full product vector `u_b` of a branch, assembled in party order.
    pub fn branch_vector(&self, branch: &Branch) -> Vec<C64> {
        let n = self.dims.len();
        let mut per_party: Vec<&[C64]> = vec![&[]; n];
        let step_vectors: Vec<Vec<C64>> =
            branch.steps.iter().map(|s| s.basis.vector(s.outcome)).collect();
        for (step, v) in branch.steps.iter().zip(&step_vectors) {
            per_party[step.party] = v;
        }
        per_party[branch.final_party] = &branch.final_state;
        let mut out = vec![C64::new(1.0, 0.0)];
        for p in 0..n {
            out = crate::linalg::matrix::kron_vec(&out, per_party[p]);
        }
        out
    }

    /// Dense projector `E = sum_b |u_b><u_b|`.
    pub fn densify(&self) -> ComplexMatrix {
        let dim: usize = self.dims.iter().product();
        let mut e = ComplexMatrix::zeros(dim, dim);
        for b in &self.branches {
            e.add_outer(1.0, &self.branch_vector(b));
        }
        e
    }

    /// `<u_b|v>` without materializing `u_b`: contract `v` against the
    /// branch's per-party vectors in ascending party order.
    pub fn branch_overlap(&self, branch: &Branch, v: &[C64]) -> C64 {
        let n = self.dims.len();
        let mut per_party: Vec<Vec<C64>> = vec![Vec::new(); n];
        for step in &branch.steps {
            per_party[step.party] = step.basis.vector(step.outcome);
        }
        per_party[branch.final_party] = branch.final_state.clone();
        let mut buf = v.to_vec();
        for p in 0..n {
            let d = self.dims[p];
            let rest = buf.len() / d;
            let w = &per_party[p];
            let mut next = vec![C64::new(0.0, 0.0); rest];
            for (j, wj) in w.iter().enumerate() {
                let wj = wj.conj();
                for (y, out) in next.iter_mut().enumerate() {
                    *out += wj * buf[j * rest + y];
                }
            }
            buf = next;
        }
        buf[0]
    }

    /// Accumulate `out += coeff * E v`.
    ///
    /// Branches are walked as a prefix tree (construction emits them in
    /// depth-first outcome order, and all branches sharing an outcome prefix
    /// share the next basis), so common measurement prefixes are contracted
    /// once instead of per branch.
    pub fn accumulate_apply(&self, coeff: f64, v: &[C64], out: &mut [C64]) {
        if self.branches.is_empty() {
            return;
        }
        let group: Vec<usize> = (0..self.branches.len()).collect();
        let remaining: Vec<usize> = (0..self.dims.len()).collect();
        let up = self.tree_apply(&group, 0, v, &remaining);
        for (o, u) in out.iter_mut().zip(up) {
            *o += coeff * u;
        }
    }

    fn tree_apply(&self, group: &[usize], depth: usize, buf: &[C64], remaining: &[usize]) -> Vec<C64> {
        let lead = &self.branches[group[0]];
        if depth == lead.steps.len() {
            // Leaf (single branch): project onto the conditional state.
            let amp: C64 = lead.final_state.iter().zip(buf).map(|(f, x)| f.conj() * x).sum();
            return lead.final_state.iter().map(|f| f * amp).collect();
        }
        let party = lead.steps[depth].party;
        let pos = remaining.iter().position(|&p| p == party).expect("party still present");
        let d = self.dims[party];
        let before: usize = remaining[..pos].iter().map(|&p| self.dims[p]).product();
        let after: usize = remaining[pos + 1..].iter().map(|&p| self.dims[p]).product();
        let next_remaining: Vec<usize> =
            remaining.iter().copied().filter(|&p| p != party).collect();
        let mut up = vec![C64::new(0.0, 0.0); buf.len()];
        let mut i = 0;
        while i < group.len() {
            let outcome = self.branches[group[i]].steps[depth].outcome;
            let mut j = i;
            while j < group.len() && self.branches[group[j]].steps[depth].outcome == outcome {
                j += 1;
            }
            let w = self.branches[group[i]].steps[depth].basis.vector(outcome);
            // Contract the measured party out of the buffer.
            let mut child = vec![C64::new(0.0, 0.0); before * after];
            for a in 0..before {
                for (k, wk) in w.iter().enumerate() {
                    let wk = wk.conj();
                    if wk.norm_sqr() == 0.0 {
                        continue;
                    }
                    let src = (a * d + k) * after;
                    let dst = a * after;
                    for b in 0..after {
                        child[dst + b] += wk * buf[src + b];
                    }
                }
            }
            let child_up = self.tree_apply(&group[i..j], depth + 1, &child, &next_remaining);
            // Re-insert the measured party's vector.
            for a in 0..before {
                for (k, &wk) in w.iter().enumerate() {
                    if wk.norm_sqr() == 0.0 {
                        continue;
                    }
                    let dst = (a * d + k) * after;
                    let src = a * after;
                    for b in 0..after {
                        up[dst + b] += wk * child_up[src + b];
                    }
                }
            }
            i = j;
        }
        up
    }

    /// `<v|E|v>` for a unit vector `v`.
    pub fn pass_probability(&self, v: &[C64]) -> f64 {
        self.branches.iter().map(|b| self.branch_overlap(b, v).norm_sqr()).sum()
    }
}

/// A verification strategy: tests, their sampling probabilities, and an
/// optional hedging weight `p` realizing `Omega_p = p 1 + (1 - p) Omega`.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub dims: Vec<usize>,
    pub tests: Vec<TestBranches>,
    pub probabilities: Vec<f64>,
    pub pass_weight: f64,
}

impl Strategy {
    pub fn uniform(dims: Vec<usize>, tests: Vec<TestBranches>) -> Self {
        let p = 1.0 / tests.len() as f64;
        let probabilities = vec![p; tests.len()];
        Self { dims, tests, probabilities, pass_weight: 0.0 }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Replace the test probabilities, checking the simplex constraint.
    pub fn with_probabilities(mut self, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != self.tests.len() {
            return Err(QsvError::SimplexViolation(format!(
                "{} probabilities for {} tests",
                probabilities.len(),
                self.tests.len()
            )));
        }
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| p < -1e-12) || (sum - 1.0).abs() > 1e-9 {
            return Err(QsvError::SimplexViolation(format!("sum {sum}")));
        }
        self.probabilities = probabilities;
        Ok(self)
    }

    /// Hedged variant `Omega_p = p 1 + (1 - p) Omega`.
    pub fn with_pass_weight(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QsvError::InvalidArgument(format!("pass weight {p} outside [0, 1]")));
        }
        self.pass_weight = p;
        Ok(self)
    }

    /// `Omega v`, including the hedging term.
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        let hedge = self.pass_weight;
        for (o, x) in out.iter_mut().zip(v) {
            *o = hedge * x;
        }
        let scale = 1.0 - hedge;
        for (test, &p) in self.tests.iter().zip(&self.probabilities) {
            test.accumulate_apply(scale * p, v, out);
        }
    }
}

/// Which MUB family a protocol draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MubCount {
    Two,
    Three,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    Tetrahedron,
    Icosahedron,
}

/// Catalog of the supported protocols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolSpec {
    /// Schmidt-decomposition protocol with a fixed measurement order.
    Sd { order: Option<Vec<usize>> },
    /// Cyclic SD: uniform mixture of the n cyclic measurement orders.
    Csd,
    MubFamily { num_bases: MubCount, correlated: bool, symmetrized: bool },
    /// Qubit Bloch designs; settings are always correlated.
    BlochDesign { kind: DesignKind, symmetrized: bool },
    /// All parties but one measure computationally; the remaining party
    /// projects onto the conditional reduced state.
    Hps,
}

impl ProtocolSpec {
    /// Parse a canonical protocol name.
    pub fn parse(name: &str) -> Result<Self> {
        use DesignKind::*;
        use MubCount::*;
        let mub = |num_bases, correlated, symmetrized| ProtocolSpec::MubFamily {
            num_bases,
            correlated,
            symmetrized,
        };
        Ok(match name {
            "sd" => ProtocolSpec::Sd { order: None },
            "csd" => ProtocolSpec::Csd,
            "mub" => mub(Two, false, false),
            "cmub" => mub(Two, true, false),
            "smub" => mub(Two, false, true),
            "scmub" => mub(Two, true, true),
            "3mub" => mub(Three, false, false),
            "3cmub" => mub(Three, true, false),
            "3smub" => mub(Three, false, true),
            "3scmub" => mub(Three, true, true),
            "cmub-complete" => mub(Complete, false, false),
            "ccmub-complete" => mub(Complete, true, false),
            "4c-tet" => ProtocolSpec::BlochDesign { kind: Tetrahedron, symmetrized: false },
            "4sc-tet" => ProtocolSpec::BlochDesign { kind: Tetrahedron, symmetrized: true },
            "6c-ico" => ProtocolSpec::BlochDesign { kind: Icosahedron, symmetrized: false },
            "6sc-ico" => ProtocolSpec::BlochDesign { kind: Icosahedron, symmetrized: true },
            "hps" => ProtocolSpec::Hps,
            other => {
                return Err(QsvError::InvalidArgument(format!(
                    "unknown protocol name {other:?}"
                )))
            }
        })
    }

    pub fn canonical_name(&self) -> String {
        use DesignKind::*;
        use MubCount::*;
        match self {
            ProtocolSpec::Sd { .. } => "sd".into(),
            ProtocolSpec::Csd => "csd".into(),
            ProtocolSpec::MubFamily { num_bases, correlated, symmetrized } => {
                let (head, tail) = match num_bases {
                    Two => ("", ""),
                    Three => ("3", ""),
                    Complete => ("c", "-complete"),
                };
                let body = match (symmetrized, correlated) {
                    (false, false) => "mub",
                    (false, true) => "cmub",
                    (true, false) => "smub",
                    (true, true) => "scmub",
                };
                format!("{head}{body}{tail}")
            }
            ProtocolSpec::BlochDesign { kind: Tetrahedron, symmetrized: false } => "4c-tet".into(),
            ProtocolSpec::BlochDesign { kind: Tetrahedron, symmetrized: true } => "4sc-tet".into(),
            ProtocolSpec::BlochDesign { kind: Icosahedron, symmetrized: false } => "6c-ico".into(),
            ProtocolSpec::BlochDesign { kind: Icosahedron, symmetrized: true } => "6sc-ico".into(),
            ProtocolSpec::Hps => "hps".into(),
        }
    }
}

/// Assemble the full strategy of a protocol for a target state, with the
/// protocol's canonical (uniform) test probabilities.
pub fn build_strategy(spec: &ProtocolSpec, state: &PureState) -> Result<Strategy> {
    let n = state.num_parties();
    let dims = state.dims().to_vec();
    match spec {
        ProtocolSpec::Sd { order } => {
            let order = match order {
                Some(o) => o.clone(),
                None => (0..n).collect(),
            };
            let tests = sd_tests(state, &order)?;
            Ok(Strategy::uniform(dims, tests))
        }
        ProtocolSpec::Csd => {
            // Uniform mixture of the n cyclic orders: each order's tests
            // enter with weight (1/n) * 2^{1-n}.
            let mut tests = Vec::new();
            for k in 0..n {
                let order: Vec<usize> = (0..n).map(|i| (k + i) % n).collect();
                tests.extend(sd_tests(state, &order)?);
            }
            Ok(Strategy::uniform(dims, tests))
        }
        ProtocolSpec::MubFamily { num_bases, correlated, symmetrized } => {
            let d = uniform_local_dim(state)?;
            let count = match num_bases {
                MubCount::Two => 2,
                MubCount::Three => 3,
                MubCount::Complete => d + 1,
            };
            let family = pauli_eigenbases(d, count)?;
            family_strategy(state, &family, *correlated, *symmetrized)
        }
        ProtocolSpec::BlochDesign { kind, symmetrized } => {
            let d = uniform_local_dim(state)?;
            if d != 2 {
                return Err(QsvError::InvalidArgument(format!(
                    "Bloch designs require qubits (got d = {d})"
                )));
            }
            let family = match kind {
                DesignKind::Tetrahedron => design_bases(&tetrahedron_directions())?,
                DesignKind::Icosahedron => design_bases(&icosahedron_directions())?,
            };
            family_strategy(state, &family, true, *symmetrized)
        }
        ProtocolSpec::Hps => {
            let mut tests = Vec::new();
            for k in 0..n {
                tests.extend(hps_tests(state, k)?);
            }
            Ok(Strategy::uniform(dims, tests))
        }
    }
}

fn family_strategy(
    state: &PureState,
    family: &[LocalBasis],
    correlated: bool,
    symmetrized: bool,
) -> Result<Strategy> {
    let n = state.num_parties();
    let mut tests = Vec::new();
    if symmetrized {
        for k in 0..n {
            tests.extend(mub_family_tests(state, family, correlated, k)?);
        }
    } else {
        tests = mub_family_tests(state, family, correlated, n - 1)?;
    }
    Ok(Strategy::uniform(state.dims().to_vec(), tests))
}

fn uniform_local_dim(state: &PureState) -> Result<usize> {
    let d = state.dims()[0];
    if state.dims().iter().any(|&x| x != d) {
        return Err(QsvError::DimensionMismatch(format!(
            "MUB-family protocols need equal local dimensions (got {:?})",
            state.dims()
        )));
    }
    Ok(d)
}
