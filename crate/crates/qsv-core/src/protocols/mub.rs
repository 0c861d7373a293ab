//! MUB-family test projectors `Q_m` and the HPS-style computational-basis
//! variant.
//!
//! A test is labeled by a settings string over the basis family: each
//! measuring party projects in the basis picked by its settings entry, and
//! the last party projects onto the conditional reduced state of the target.
//! The correlated variant restricts to constant settings strings, cutting
//! the test count from `b^{n-1}` to `b`.

use std::sync::Arc;

use crate::bases::LocalBasis;
use crate::linalg::project_party;
use crate::states::PureState;
use crate::{QsvError, Result};

use super::{Branch, BranchStep, TestBranches, TestLabel, BRANCH_WEIGHT_CUTOFF};

/// Build the tests of a basis-family protocol for a fixed last party.
pub fn mub_family_tests(
    state: &PureState,
    family: &[LocalBasis],
    correlated: bool,
    last_party: usize,
) -> Result<Vec<TestBranches>> {
    let n = state.num_parties();
    if n < 2 {
        return Err(QsvError::InvalidArgument("MUB protocols need n >= 2".into()));
    }
    if last_party >= n {
        return Err(QsvError::InvalidArgument(format!(
            "last party {last_party} out of range for {n} parties"
        )));
    }
    if family.is_empty() {
        return Err(QsvError::InvalidArgument("empty basis family".into()));
    }
    for (p, &d) in state.dims().iter().enumerate() {
        if p != last_party && family.iter().any(|b| b.dim() != d) {
            return Err(QsvError::DimensionMismatch(format!(
                "family dimension {} does not match party {p} (d = {d})",
                family[0].dim()
            )));
        }
    }
    let family: Vec<Arc<LocalBasis>> = family.iter().cloned().map(Arc::new).collect();
    let measuring: Vec<usize> = (0..n).filter(|&p| p != last_party).collect();
    let b = family.len();

    let mut tests = Vec::new();
    if correlated {
        for s in 0..b {
            tests.push(settings_test(state, &measuring, last_party, &family, &vec![s; n - 1])?);
        }
    } else {
        let count = b.pow((n - 1) as u32);
        for code in 0..count {
            // First measuring party owns the most significant digit.
            let mut settings = vec![0usize; n - 1];
            let mut rem = code;
            for k in (0..n - 1).rev() {
                settings[k] = rem % b;
                rem /= b;
            }
            tests.push(settings_test(state, &measuring, last_party, &family, &settings)?);
        }
    }
    Ok(tests)
}

/// HPS-style test: every party except `last_party` measures in its
/// computational basis; `last_party` projects onto the conditional state.
pub fn hps_tests(state: &PureState, last_party: usize) -> Result<Vec<TestBranches>> {
    let n = state.num_parties();
    if last_party >= n {
        return Err(QsvError::InvalidArgument(format!(
            "last party {last_party} out of range for {n} parties"
        )));
    }
    let measuring: Vec<usize> = (0..n).filter(|&p| p != last_party).collect();
    // Per-party computational bases; dimensions may differ across parties.
    let bases: Vec<Arc<LocalBasis>> = measuring
        .iter()
        .map(|&p| Arc::new(LocalBasis::computational(state.dims()[p])))
        .collect();
    let label = TestLabel { last_party, settings: vec![0; n - 1] };
    Ok(vec![branch_test(state, &measuring, last_party, &bases, label)?])
}

fn settings_test(
    state: &PureState,
    measuring: &[usize],
    last_party: usize,
    family: &[Arc<LocalBasis>],
    settings: &[usize],
) -> Result<TestBranches> {
    let bases: Vec<Arc<LocalBasis>> =
        settings.iter().map(|&s| Arc::clone(&family[s])).collect();
    let label = TestLabel { last_party, settings: settings.to_vec() };
    branch_test(state, measuring, last_party, &bases, label)
}

/// Enumerate the accepting branches for fixed per-party bases.
fn branch_test(
    state: &PureState,
    measuring: &[usize],
    last_party: usize,
    bases: &[Arc<LocalBasis>],
    label: TestLabel,
) -> Result<TestBranches> {
    let mut branches = Vec::new();
    let mut steps = Vec::new();
    let remaining: Vec<usize> = (0..state.num_parties()).collect();
    descend(
        state,
        &remaining,
        measuring,
        bases,
        last_party,
        0,
        1.0,
        &mut steps,
        &mut branches,
    )?;
    Ok(TestBranches { label, dims: state.dims().to_vec(), branches })
}

#[allow(clippy::too_many_arguments)]
fn descend(
    residual: &PureState,
    remaining: &[usize],
    measuring: &[usize],
    bases: &[Arc<LocalBasis>],
    last_party: usize,
    pos: usize,
    weight: f64,
    steps: &mut Vec<BranchStep>,
    branches: &mut Vec<Branch>,
) -> Result<()> {
    if pos == measuring.len() {
        branches.push(Branch {
            steps: steps.clone(),
            final_party: last_party,
            final_state: residual.amplitudes().to_vec(),
            weight,
        });
        return Ok(());
    }
    let party = measuring[pos];
    let local = remaining.iter().position(|&p| p == party).expect("party still present");
    let basis = &bases[pos];
    let next_remaining: Vec<usize> =
        remaining.iter().copied().filter(|&p| p != party).collect();
    for outcome in 0..basis.dim() {
        let (w, rest) = project_party(residual, local, &basis.vector(outcome))?;
        let total = weight * w;
        if total <= BRANCH_WEIGHT_CUTOFF {
            continue;
        }
        let rest = rest.expect("nonzero-weight branch has a residual");
        steps.push(BranchStep { party, basis: Arc::clone(basis), outcome });
        descend(
            &rest,
            &next_remaining,
            measuring,
            bases,
            last_party,
            pos + 1,
            total,
            steps,
            branches,
        )?;
        steps.pop();
    }
    Ok(())
}
