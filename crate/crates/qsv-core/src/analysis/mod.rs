//! Spectral analysis of verification strategies: verification operators,
//! spectral gaps, sample-complexity and adversarial bounds, probability
//! optimization, and the closed-form benchmark gaps.

mod game;
mod optimize;

pub use game::{solve_matrix_game, GameSolution};
pub use optimize::{
    grouped_dicke_optimize, optimize_grouped, optimize_probabilities, zeta_settings,
    OptimizationReport,
};

use serde::Serialize;

use crate::linalg::{hermitian_eigensystem, lanczos_max, ComplexMatrix, DENSE_EIG_CAP};
use crate::protocols::{Strategy, TestBranches};
use crate::states::PureState;
use crate::{C64, QsvError, Result};

/// Above this dimension the spectral gap is computed matrix-free (Lanczos on
/// the branch representation) instead of by dense eigendecomposition.
pub const GAP_DENSE_CAP: usize = 512;

/// Spectral-gap report for a strategy and target.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    /// Spectral gap `nu = 1 - beta`.
    pub nu: f64,
    /// Second largest eigenvalue `beta = ||Omega - |Psi><Psi|||`.
    pub beta: f64,
    /// Unit eigenvector attaining `beta`.
    pub witness: Vec<C64>,
    /// `||Omega |Psi> - |Psi>||`.
    pub target_residual: f64,
}

/// Dense verification operator `Omega = p 1 + (1 - p) sum_m p_m E_m`,
/// accumulated test by test without retaining the densified tests.
pub fn verification_operator(strategy: &Strategy) -> Result<ComplexMatrix> {
    if strategy.probabilities.len() != strategy.tests.len() {
        return Err(QsvError::SimplexViolation(format!(
            "{} probabilities for {} tests",
            strategy.probabilities.len(),
            strategy.tests.len()
        )));
    }
    let dim = strategy.total_dim();
    if dim > DENSE_EIG_CAP {
        return Err(QsvError::DimensionCap(dim, DENSE_EIG_CAP));
    }
    let scale = 1.0 - strategy.pass_weight;
    let mut omega = ComplexMatrix::zeros(dim, dim);
    for (test, &p) in strategy.tests.iter().zip(&strategy.probabilities) {
        for b in &test.branches {
            omega.add_outer(scale * p, &test.branch_vector(b));
        }
    }
    if strategy.pass_weight > 0.0 {
        for i in 0..dim {
            omega[(i, i)] += strategy.pass_weight;
        }
    }
    Ok(omega)
}

/// Spectral gap of a strategy with respect to its target.
///
/// Fails with [`QsvError::TargetNotFixed`] when `||Omega|Psi> - |Psi>||`
/// exceeds `1e-9` — that always signals a broken protocol construction, not
/// a property of the state.
pub fn spectral_gap(strategy: &Strategy, target: &PureState) -> Result<GapReport> {
    let dim = strategy.total_dim();
    if target.total_dim() != dim || target.dims() != strategy.dims {
        return Err(QsvError::DimensionMismatch(format!(
            "target dims {:?} vs strategy dims {:?}",
            target.dims(),
            strategy.dims
        )));
    }
    let psi = target.amplitudes();
    let mut omega_psi = vec![C64::new(0.0, 0.0); dim];
    strategy.apply(psi, &mut omega_psi);
    let target_residual: f64 = omega_psi
        .iter()
        .zip(psi)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if target_residual > 1e-9 {
        return Err(QsvError::TargetNotFixed(target_residual));
    }

    let (beta, witness) = if dim <= GAP_DENSE_CAP {
        let mut bar = verification_operator(strategy)?;
        let mut neg = vec![C64::new(0.0, 0.0); dim];
        for (n, &p) in neg.iter_mut().zip(psi) {
            *n = p;
        }
        bar.add_outer(-1.0, &neg);
        let eig = hermitian_eigensystem(&bar)?;
        (eig.eigenvalues[0], eig.eigenvectors.column(0))
    } else {
        // Matrix-free: v -> Omega v - <psi|v> psi on the branch structure.
        let matvec = |v: &[C64], out: &mut [C64]| {
            strategy.apply(v, out);
            let overlap: C64 = psi.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            for (o, &p) in out.iter_mut().zip(psi) {
                *o -= overlap * p;
            }
        };
        lanczos_max(dim, matvec, 1e-10, 60_000)
    };
    // Omega-bar is PSD on the target's orthocomplement, but rounding can
    // leave a tiny negative top eigenvalue on rank-deficient strategies.
    let beta = beta.max(0.0);
    Ok(GapReport { nu: 1.0 - beta, beta, witness, target_residual })
}

/// Build a strategy from explicit probabilities and report its gap.
pub fn evaluate_at_probabilities(
    tests: &[TestBranches],
    target: &PureState,
    probabilities: &[f64],
) -> Result<GapReport> {
    let strategy = Strategy::uniform(target.dims().to_vec(), tests.to_vec())
        .with_probabilities(probabilities.to_vec())?;
    spectral_gap(&strategy, target)
}

/// Number of tests needed to certify infidelity `eps` at significance
/// `delta` with a strategy of gap `nu`: the exact count
/// `ceil(ln delta / ln(1 - nu eps))` and its convenient upper bound
/// `ceil(ln(1/delta) / (nu eps))`.
pub fn sample_complexity(nu: f64, eps: f64, delta: f64) -> Result<(u64, u64)> {
    check_domain(nu, eps, delta)?;
    let exact = (delta.ln() / (1.0 - nu * eps).ln()).ceil() as u64;
    let upper = ((1.0 / delta).ln() / (nu * eps)).ceil() as u64;
    Ok((exact, upper))
}

/// Adversarial-scenario bound: the hedging weight `p = nu / e` and the
/// sample count `ln((1-eps)^{-1} delta^{-1}) / ((1 - nu + nu^2/e) nu eps)`.
pub fn adversarial_bound(nu: f64, eps: f64, delta: f64) -> Result<(f64, f64)> {
    check_domain(nu, eps, delta)?;
    let e = std::f64::consts::E;
    let p = nu / e;
    let bound =
        (1.0 / ((1.0 - eps) * delta)).ln() / ((1.0 - nu + nu * nu / e) * nu * eps);
    Ok((p, bound))
}

fn check_domain(nu: f64, eps: f64, delta: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0)
    {
        return Err(QsvError::InvalidArgument(format!(
            "need 0 < nu <= 1, 0 < eps < 1, 0 < delta < 1 (got {nu}, {eps}, {delta})"
        )));
    }
    Ok(())
}

/// Hedged strategy `Omega_p = p 1 + (1 - p) Omega` (mixing in an
/// always-pass test with weight `p`).
pub fn hedge(strategy: Strategy, p: f64) -> Result<Strategy> {
    strategy.with_pass_weight(p)
}

/// `h(n) = 2^{-n} sum_k C(n, k) / (1 + (n - 2k)^2)`.
pub fn h_sequence(n: u32) -> f64 {
    let mut binom = 1.0f64;
    let mut total = 0.0;
    for k in 0..=n {
        let spread = n as f64 - 2.0 * k as f64;
        total += binom / (1.0 + spread * spread);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    total / 2.0f64.powi(n as i32)
}

/// Benchmark gap of the specialized Dicke protocol: 1/2 for (1,1,1), 1/3
/// for (2,1), and 1/(n-1) for any partition of n >= 4.
pub fn dicke_benchmark(partition: &[usize]) -> Result<f64> {
    let n: usize = partition.iter().sum();
    if partition.len() < 2
        || partition.iter().any(|&p| p == 0)
        || partition.windows(2).any(|w| w[0] < w[1])
    {
        return Err(QsvError::InvalidArgument(format!(
            "partition {partition:?} must be nonincreasing and positive with >= 2 parts"
        )));
    }
    match n {
        0..=2 => Err(QsvError::InvalidArgument(format!(
            "benchmark formula needs n >= 3 (got partition {partition:?})"
        ))),
        3 => Ok(if partition == [1, 1, 1] { 0.5 } else { 1.0 / 3.0 }),
        _ => Ok(1.0 / (n as f64 - 1.0)),
    }
}

/// Benchmark gap of the first specialized W-state protocol.
pub fn w_protocol_a(n: usize) -> Result<f64> {
    match n {
        0..=2 => Err(QsvError::InvalidArgument(format!("W benchmark needs n >= 3 (got {n})"))),
        3 => Ok(0.5 - 1.0 / 10.0f64.sqrt()),
        _ => Ok((1.0 - (1.0 - h_sequence(n as u32 - 3)).sqrt()) / 2.0),
    }
}

/// Benchmark gap of the second specialized W-state protocol.
pub fn w_protocol_g(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(QsvError::InvalidArgument(format!("W benchmark needs n >= 2 (got {n})")));
    }
    let t = (n as f64 - 2.0) * h_sequence(n as u32 - 1);
    Ok((1.0 + t) / (n as f64 + t))
}

/// Relative saving `(n_base - n_other) / n_base` in test count.
pub fn reduction_rate(n_base: f64, n_other: f64) -> f64 {
    (n_base - n_other) / n_base
}
