//! Monte-Carlo simulation of verification experiments.
//!
//! Each run draws a prepared state, draws a test, and walks the test's
//! adaptive measurement trajectory: every measuring party samples an
//! outcome from the Born distribution of the current conditional state, and
//! the last party performs the binary measurement onto the test's
//! conditional target state. Landing on an outcome path that is not an
//! accepting branch fails the run outright — those paths lie outside the
//! test projector's support by construction.
//!
//! Run `r` uses the ChaCha12 stream `(seed, r)`, so runs are reproducible
//! individually and can execute in any order or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::linalg::project_party;
use crate::protocols::{Strategy, TestBranches};
use crate::states::PureState;
use crate::{QsvError, Result};

/// How a [`PreparedSource`] picks the state for run `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawMode {
    /// Sample a component by its weight, i.i.d. across runs.
    Mixture,
    /// Use component `r mod len` — an explicitly supplied adversarial
    /// sequence.
    Sequence,
}

/// A source producing the states under test: `rho = sum_i w_i |phi_i><phi_i|`.
#[derive(Debug, Clone)]
pub struct PreparedSource {
    components: Vec<(f64, PureState)>,
    mode: DrawMode,
}

impl PreparedSource {
    pub fn new(components: Vec<(f64, PureState)>, mode: DrawMode) -> Result<Self> {
        if components.is_empty() {
            return Err(QsvError::InvalidArgument("source needs at least one component".into()));
        }
        let sum: f64 = components.iter().map(|(w, _)| w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(QsvError::SimplexViolation(format!("source weights sum to {sum}")));
        }
        let dims = components[0].1.dims().to_vec();
        if components.iter().any(|(_, s)| s.dims() != dims) {
            return Err(QsvError::DimensionMismatch("source components differ in dims".into()));
        }
        Ok(Self { components, mode })
    }

    /// A source that always emits `state`.
    pub fn pure(state: PureState) -> Self {
        Self { components: vec![(1.0, state)], mode: DrawMode::Mixture }
    }

    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    fn draw<'a>(&'a self, run: u64, rng: &mut ChaCha12Rng) -> &'a PureState {
        match self.mode {
            DrawMode::Sequence => &self.components[run as usize % self.components.len()].1,
            DrawMode::Mixture => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (w, s) in &self.components {
                    acc += w;
                    if u < acc {
                        return s;
                    }
                }
                &self.components.last().unwrap().1
            }
        }
    }
}

/// Outcome of a single verification run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: u64,
    /// Label of the drawn test, or `"always-pass"` for the hedging draw.
    pub test_label: String,
    /// Measured outcomes in measurement order; the trailing entry is the
    /// final party's binary outcome (1 = pass projector fired).
    pub outcomes: Vec<usize>,
    pub passed: bool,
    /// Infidelity of the drawn component with respect to the target.
    pub epsilon_r: f64,
}

/// Exact average pass probability `sum_i w_i <phi_i|Omega|phi_i>`, computed
/// on the branch representation.
pub fn pass_probability(strategy: &Strategy, source: &PreparedSource) -> Result<f64> {
    if source.components[0].1.dims() != strategy.dims {
        return Err(QsvError::DimensionMismatch(format!(
            "source dims {:?} vs strategy dims {:?}",
            source.components[0].1.dims(),
            strategy.dims
        )));
    }
    let mut total = 0.0;
    for (w, phi) in &source.components {
        let mut q = 0.0;
        for (test, &p) in strategy.tests.iter().zip(&strategy.probabilities) {
            q += p * test.pass_probability(phi.amplitudes());
        }
        total += w * (strategy.pass_weight + (1.0 - strategy.pass_weight) * q);
    }
    Ok(total)
}

/// Simulate `runs` verification rounds. Returns the overall verdict (all
/// runs passed) together with the per-run records, ordered by run index.
pub fn run_verification(
    strategy: &Strategy,
    source: &PreparedSource,
    target: &PureState,
    runs: u64,
    seed: u64,
) -> Result<(bool, Vec<RunRecord>)> {
    if runs == 0 {
        return Err(QsvError::InvalidArgument("need at least one run".into()));
    }
    if source.components[0].1.dims() != strategy.dims {
        return Err(QsvError::DimensionMismatch("source dims do not match strategy".into()));
    }
    let indices: Vec<u64> = (0..runs).collect();
    let records = crate::parallel::try_map_batch(&indices, |&run| {
        single_run(strategy, source, target, run, seed)
    })?;
    let all_passed = records.iter().all(|r| r.passed);
    Ok((all_passed, records))
}

/// Execute run `run` on its own RNG stream `(seed, run)`.
fn single_run(
    strategy: &Strategy,
    source: &PreparedSource,
    target: &PureState,
    run: u64,
    seed: u64,
) -> Result<RunRecord> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(run);
    let phi = source.draw(run, &mut rng);
    let epsilon_r = 1.0 - target.fidelity(phi);

    // Hedging: an always-pass test with weight pass_weight.
    if strategy.pass_weight > 0.0 && rng.gen::<f64>() < strategy.pass_weight {
        return Ok(RunRecord {
            run,
            test_label: "always-pass".into(),
            outcomes: Vec::new(),
            passed: true,
            epsilon_r,
        });
    }
    let test = &strategy.tests[sample_index(&strategy.probabilities, &mut rng)];
    let (passed, outcomes) = simulate_test(test, phi, &mut rng)?;
    Ok(RunRecord { run, test_label: test.label.to_string(), outcomes, passed, epsilon_r })
}

fn sample_index(probabilities: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probabilities.len() - 1
}

/// Walk one adaptive trajectory of a test on `phi`.
fn simulate_test(
    test: &TestBranches,
    phi: &PureState,
    rng: &mut ChaCha12Rng,
) -> Result<(bool, Vec<usize>)> {
    let mut candidates: Vec<usize> = (0..test.branches.len()).collect();
    let mut outcomes = Vec::new();
    if candidates.is_empty() {
        return Ok((false, outcomes));
    }
    let mut current = phi.clone();
    let mut remaining: Vec<usize> = (0..phi.num_parties()).collect();
    let steps = test.branches[0].steps.len();
    for depth in 0..steps {
        // All candidate branches share the same basis at this depth.
        let step = &test.branches[candidates[0]].steps[depth];
        let local = remaining
            .iter()
            .position(|&p| p == step.party)
            .expect("measured party still present");
        // Born sampling over the full basis.
        let mut probs = Vec::with_capacity(step.basis.dim());
        let mut residuals = Vec::with_capacity(step.basis.dim());
        for outcome in 0..step.basis.dim() {
            let (w, rest) = project_party(&current, local, &step.basis.vector(outcome))?;
            probs.push(w);
            residuals.push(rest);
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = step.basis.dim() - 1;
        for (i, &w) in probs.iter().enumerate() {
            acc += w;
            if u < acc {
                outcome = i;
                break;
            }
        }
        outcomes.push(outcome);
        candidates.retain(|&b| test.branches[b].steps[depth].outcome == outcome);
        if candidates.is_empty() {
            // Off-branch path: outside the test's support, so the run fails.
            return Ok((false, outcomes));
        }
        match residuals.into_iter().nth(outcome).flatten() {
            Some(rest) => current = rest,
            // Sampled an outcome with (numerically) zero probability.
            None => return Ok((false, outcomes)),
        }
        remaining.remove(local);
    }
    debug_assert_eq!(candidates.len(), 1);
    let branch = &test.branches[candidates[0]];
    let pass_prob: f64 = branch
        .final_state
        .iter()
        .zip(current.amplitudes())
        .map(|(f, a)| f.conj() * a)
        .sum::<crate::C64>()
        .norm_sqr();
    let passed = rng.gen::<f64>() < pass_prob;
    outcomes.push(passed as usize);
    Ok((passed, outcomes))
}

/// Cross-module oracle: `|sum_b |<u_b|probe>|^2 - <probe|densify(test)|probe>|`.
pub fn trajectory_vs_dense_check(test: &TestBranches, probe: &PureState) -> f64 {
    let via_branches = test.pass_probability(probe.amplitudes());
    let dense = test.densify();
    let applied = dense.apply(probe.amplitudes());
    let via_dense: f64 = probe
        .amplitudes()
        .iter()
        .zip(&applied)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    (via_branches - via_dense).abs()
}

/// Serialize run records as CSV with the columns
/// `run,test_label,passed,epsilon_r`.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("run,test_label,passed,epsilon_r\n");
    for r in records {
        out.push_str(&format!(
            "{},\"{}\",{},{}\n",
            r.run, r.test_label, r.passed, r.epsilon_r
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::spectral_gap;
    use crate::protocols::{build_strategy, ProtocolSpec};
    use crate::states::{ghz, haar_random};
    use approx::assert_abs_diff_eq;

    #[test]
    fn target_always_passes() {
        let state = haar_random(&[2, 2, 2], 1).unwrap();
        let s = build_strategy(&ProtocolSpec::Sd { order: None }, &state).unwrap();
        let source = PreparedSource::pure(state.clone());
        assert_abs_diff_eq!(pass_probability(&s, &source).unwrap(), 1.0, epsilon = 1e-10);
        let (accepted, records) = run_verification(&s, &source, &state, 2000, 7).unwrap();
        assert!(accepted);
        assert_eq!(records.len(), 2000);
        assert!(records.iter().all(|r| r.passed && r.epsilon_r.abs() < 1e-12));
    }

    #[test]
    fn witness_pass_probability_is_beta() {
        let state = haar_random(&[3, 2], 4).unwrap();
        let s = build_strategy(&ProtocolSpec::Sd { order: None }, &state).unwrap();
        let gap = spectral_gap(&s, &state).unwrap();
        let witness = crate::states::PureState::new(vec![3, 2], gap.witness.clone()).unwrap();
        let source = PreparedSource::pure(witness);
        let q = pass_probability(&s, &source).unwrap();
        assert_abs_diff_eq!(q, 1.0 - gap.nu, epsilon = 1e-9);
    }

    #[test]
    fn empirical_frequency_matches_exact_probability() {
        let target = ghz(2, 3).unwrap();
        let s = build_strategy(&ProtocolSpec::parse("mub").unwrap(), &target).unwrap();
        let noisy = {
            // Mix the target with a Haar state to get a nontrivial source.
            let other = haar_random(&[2, 2, 2], 5).unwrap();
            PreparedSource::new(
                vec![(0.8, target.clone()), (0.2, other)],
                DrawMode::Mixture,
            )
            .unwrap()
        };
        let q = pass_probability(&s, &noisy).unwrap();
        let n = 40_000u64;
        let (_, records) = run_verification(&s, &noisy, &target, n, 11).unwrap();
        let freq = records.iter().filter(|r| r.passed).count() as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((freq - q).abs() <= 3.0 * se, "freq {freq}, q {q}, se {se}");
    }

    #[test]
    fn hedged_runs_emit_always_pass() {
        let target = ghz(2, 2).unwrap();
        let s = build_strategy(&ProtocolSpec::Sd { order: None }, &target)
            .unwrap()
            .with_pass_weight(0.5)
            .unwrap();
        let source = PreparedSource::pure(target.clone());
        let (_, records) = run_verification(&s, &source, &target, 4000, 3).unwrap();
        let hedged = records.iter().filter(|r| r.test_label == "always-pass").count();
        // Binomial(4000, 0.5): stay within 5 sigma of the mean.
        assert!((hedged as f64 - 2000.0).abs() < 5.0 * (1000.0f64).sqrt());
    }

    #[test]
    fn sequence_mode_cycles_components() {
        let target = ghz(2, 2).unwrap();
        let orth = {
            use crate::C64;
            // |01>, orthogonal to the Bell state and rejected by P0 always.
            let mut amps = vec![C64::new(0.0, 0.0); 4];
            amps[1] = C64::new(1.0, 0.0);
            crate::states::PureState::new(vec![2, 2], amps).unwrap()
        };
        let s = build_strategy(&ProtocolSpec::Sd { order: None }, &target).unwrap();
        let source = PreparedSource::new(
            vec![(0.5, target.clone()), (0.5, orth)],
            DrawMode::Sequence,
        )
        .unwrap();
        let (_, records) = run_verification(&s, &source, &target, 100, 9).unwrap();
        for r in &records {
            let expect = if r.run % 2 == 0 { 0.0 } else { 1.0 };
            assert_abs_diff_eq!(r.epsilon_r, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn runs_are_reproducible_per_stream() {
        let target = haar_random(&[2, 2], 2).unwrap();
        let s = build_strategy(&ProtocolSpec::Sd { order: None }, &target).unwrap();
        let source = PreparedSource::pure(target.clone());
        let (_, a) = run_verification(&s, &source, &target, 50, 42).unwrap();
        let (_, b) = run_verification(&s, &source, &target, 50, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.test_label, y.test_label);
            assert_eq!(x.outcomes, y.outcomes);
            assert_eq!(x.passed, y.passed);
        }
    }

    #[test]
    fn trajectory_oracle_residual_is_tiny() {
        for seed in 0..5 {
            let state = haar_random(&[2, 3, 2], 30 + seed).unwrap();
            let probe = haar_random(&[2, 3, 2], 90 + seed).unwrap();
            let s = build_strategy(&ProtocolSpec::Sd { order: None }, &state).unwrap();
            for test in &s.tests {
                assert!(trajectory_vs_dense_check(test, &probe) <= 1e-9);
                assert!(trajectory_vs_dense_check(test, &state) <= 1e-10);
            }
        }
    }

    #[test]
    fn csv_round_trip_shape() {
        let rec = RunRecord {
            run: 3,
            test_label: "m=01;k=3".into(),
            outcomes: vec![0, 1, 1],
            passed: true,
            epsilon_r: 0.25,
        };
        let csv = records_to_csv(&[rec]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "run,test_label,passed,epsilon_r");
        assert_eq!(lines.next().unwrap(), "3,\"m=01;k=3\",true,0.25");
    }

    #[test]
    fn source_validation() {
        let g = ghz(2, 2).unwrap();
        assert!(PreparedSource::new(vec![], DrawMode::Mixture).is_err());
        assert!(PreparedSource::new(vec![(0.7, g.clone())], DrawMode::Mixture).is_err());
        let other = ghz(2, 3).unwrap();
        assert!(
            PreparedSource::new(vec![(0.5, g), (0.5, other)], DrawMode::Mixture).is_err()
        );
    }
}
