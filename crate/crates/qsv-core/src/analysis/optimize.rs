//! Probability optimization: minimize `lambda_max(sum_m p_m E-bar_m)` over
//! the probability simplex, where `E-bar_m = E_m - |Psi><Psi|`.
//!
//! The solver is first-order and only ever touches `lambda_max` oracles —
//! no interior-point machinery. It runs column generation: each outer
//! iteration computes the top eigenvectors of the current
//! `Omega-bar(p)` (all vectors within `1e-9` of the top eigenvalue, so
//! subgradients stay correct at kinks), adds them to a witness pool, and
//! solves the restricted matrix game `min_p max_j v_j^dag Omega-bar(p) v_j`
//! exactly with the simplex solver in [`super::game`]. Any row mixture `mu`
//! yields the density `sigma = sum_j mu_j v_j v_j^dag` and hence the
//! certified lower bound `min_m tr(sigma E-bar_m)` on the optimal `beta`;
//! the loop stops when the best primal value meets the best dual bound
//! within `tol`.

use serde::Serialize;

use crate::linalg::{hermitian_eigensystem, lanczos_max, ComplexMatrix};
use crate::protocols::TestBranches;
use crate::states::PureState;
use crate::{C64, QsvError, Result};

use super::game::solve_matrix_game;
use super::GAP_DENSE_CAP;

/// Outer-iteration cap; each iteration adds at least one witness vector.
const OUTER_ITER_CAP: usize = 400;
/// Eigenvalues within this window of the top one contribute witnesses.
const DEGENERACY_WINDOW: f64 = 1e-9;

/// Result of probability optimization.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    /// Optimized weights (per test, or per group for grouped optimization).
    pub probabilities: Vec<f64>,
    /// Spectral gap achieved by the returned probabilities.
    pub nu: f64,
    /// Certified lower bound on the optimal `beta` (so the optimal gap is
    /// at most `1 - dual_lower_bound`).
    pub dual_lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the optimization ran on an input outside its guarantees
    /// (for example grouped Dicke optimization on a non-Dicke state).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Optimize the test probabilities of a strategy.
pub fn optimize_probabilities(
    tests: &[TestBranches],
    target: &PureState,
    tol: f64,
) -> Result<OptimizationReport> {
    let groups: Vec<Vec<usize>> = (0..tests.len()).map(|t| vec![t]).collect();
    optimize_grouped(tests, &groups, target, tol)
}

/// Optimize weights over groups of tests; group `g` with weight `p_g`
/// contributes each member test with probability `p_g / |g|` (effective
/// test `T_g = mean of the group`). Tests outside every group get zero
/// probability.
pub fn optimize_grouped(
    tests: &[TestBranches],
    groups: &[Vec<usize>],
    target: &PureState,
    tol: f64,
) -> Result<OptimizationReport> {
    if tests.is_empty() || groups.is_empty() {
        return Err(QsvError::InvalidArgument("no tests to optimize".into()));
    }
    for g in groups {
        if g.is_empty() || g.iter().any(|&t| t >= tests.len()) {
            return Err(QsvError::InvalidArgument("invalid test group".into()));
        }
    }
    let dim = target.total_dim();
    let psi = target.amplitudes();
    // Every test must fix the target.
    for t in tests {
        let drop = 1.0 - t.pass_probability(psi);
        if drop.abs() > 1e-9 {
            return Err(QsvError::TargetNotFixed(drop.abs()));
        }
    }

    let m = groups.len();
    let mut p = vec![1.0 / m as f64; m];
    let mut witnesses: Vec<Vec<C64>> = Vec::new();
    let mut q_rows: Vec<Vec<f64>> = Vec::new();
    let mut primal_best = f64::INFINITY;
    let mut p_best = p.clone();
    let mut dual_best = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < OUTER_ITER_CAP {
        iterations += 1;
        let per_test = spread(groups, &p, tests.len());
        let (lambda, vecs) = top_eigenvectors(tests, &per_test, psi, dim)?;
        if lambda < primal_best {
            primal_best = lambda;
            p_best = p.clone();
        }
        for v in vecs {
            if q_rows.len() >= 4 * dim {
                break;
            }
            // Skip witnesses already (numerically) present in the pool.
            let dup = witnesses.iter().any(|u| {
                let ip: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                ip.norm() > 1.0 - 1e-10
            });
            if dup {
                continue;
            }
            let row = q_row(tests, groups, psi, &v);
            witnesses.push(v);
            q_rows.push(row);
        }
        if q_rows.is_empty() {
            // Omega-bar is (numerically) zero: perfect strategy.
            primal_best = primal_best.max(0.0);
            dual_best = 0.0;
            converged = true;
            break;
        }
        let sol = solve_matrix_game(&q_rows)?;
        dual_best = dual_best.max(sol.value);
        if primal_best - dual_best <= tol {
            converged = true;
            break;
        }
        p = sol.p;
    }

    Ok(OptimizationReport {
        probabilities: p_best,
        nu: 1.0 - primal_best,
        dual_lower_bound: dual_best,
        iterations,
        converged,
        note: None,
    })
}

/// Expand group weights into per-test probabilities.
fn spread(groups: &[Vec<usize>], p: &[f64], num_tests: usize) -> Vec<f64> {
    let mut per_test = vec![0.0; num_tests];
    for (g, &w) in groups.iter().zip(p) {
        let share = w / g.len() as f64;
        for &t in g {
            per_test[t] += share;
        }
    }
    per_test
}

/// `v^dag (T_g - |Psi><Psi|) v` for every group.
fn q_row(tests: &[TestBranches], groups: &[Vec<usize>], psi: &[C64], v: &[C64]) -> Vec<f64> {
    let target_overlap: f64 =
        psi.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr();
    groups
        .iter()
        .map(|g| {
            let mean: f64 =
                g.iter().map(|&t| tests[t].pass_probability(v)).sum::<f64>() / g.len() as f64;
            mean - target_overlap
        })
        .collect()
}

/// Top eigenvalue of `Omega-bar(p)` with all eigenvectors inside the
/// degeneracy window. Dense path below the gap cap; deflated Lanczos above.
fn top_eigenvectors(
    tests: &[TestBranches],
    per_test: &[f64],
    psi: &[C64],
    dim: usize,
) -> Result<(f64, Vec<Vec<C64>>)> {
    if dim <= GAP_DENSE_CAP {
        let mut bar = ComplexMatrix::zeros(dim, dim);
        for (test, &p) in tests.iter().zip(per_test) {
            if p == 0.0 {
                continue;
            }
            for b in &test.branches {
                bar.add_outer(p, &test.branch_vector(b));
            }
        }
        bar.add_outer(-1.0, psi);
        let eig = hermitian_eigensystem(&bar)?;
        let top = eig.eigenvalues[0];
        let vecs = (0..dim)
            .take_while(|&i| eig.eigenvalues[i] >= top - DEGENERACY_WINDOW)
            .map(|i| eig.eigenvectors.column(i))
            .collect();
        return Ok((top, vecs));
    }

    // Deflated Lanczos: pull out up to a few degenerate top vectors.
    let base = |v: &[C64], out: &mut [C64]| {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (test, &p) in tests.iter().zip(per_test) {
            if p != 0.0 {
                test.accumulate_apply(p, v, out);
            }
        }
        let overlap: C64 = psi.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
        for (o, &s) in out.iter_mut().zip(psi) {
            *o -= overlap * s;
        }
    };
    let mut found: Vec<(f64, Vec<C64>)> = Vec::new();
    for _ in 0..6 {
        let matvec = |v: &[C64], out: &mut [C64]| {
            base(v, out);
            // Push already-found eigenpairs far below the spectrum.
            for (lam, u) in &found {
                let ip: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let shift = (lam + 2.0) * ip;
                for (o, &ui) in out.iter_mut().zip(u) {
                    *o -= shift * ui;
                }
            }
        };
        let (lam, v) = lanczos_max(dim, matvec, 1e-10, 60_000);
        if let Some((top, _)) = found.first() {
            if lam < top - DEGENERACY_WINDOW {
                break;
            }
        }
        found.push((lam, v));
    }
    let top = found[0].0;
    let vecs = found.into_iter().map(|(_, v)| v).collect();
    Ok((top, vecs))
}

/// Settings strings of length `len` over `{0, 1, 2}` with exactly `n_z`
/// zeros and the remaining entries all 1 or all 2.
pub fn zeta_settings(len: usize, n_z: usize) -> Vec<Vec<usize>> {
    assert!(n_z <= len);
    if n_z == len {
        return vec![vec![0; len]];
    }
    let mut out = Vec::new();
    for fill in [1usize, 2] {
        for mask in 0..(1u32 << len) {
            if mask.count_ones() as usize != n_z {
                continue;
            }
            out.push(
                (0..len)
                    .map(|i| if mask >> i & 1 == 1 { 0 } else { fill })
                    .collect(),
            );
        }
    }
    out
}

/// Grouped Dicke optimization: average the 3SMUB tests over the settings
/// classes `Z_{n-1}(n_z)` (strings with `n_z` computational entries, the
/// rest all-1 or all-2) and optimize the `n` group weights.
pub fn grouped_dicke_optimize(state: &PureState, tol: f64) -> Result<OptimizationReport> {
    let n = state.num_parties();
    if n < 2 || state.dims().iter().any(|&d| d != 2) {
        return Err(QsvError::InvalidArgument(
            "grouped Dicke optimization is defined for n >= 2 qubits".into(),
        ));
    }
    let family = crate::bases::pauli_eigenbases(2, 3)?;
    let per_party = 3usize.pow((n - 1) as u32);
    let mut tests = Vec::with_capacity(per_party * n);
    for k in 0..n {
        tests.extend(crate::protocols::mub_family_tests(state, &family, false, k)?);
    }
    // Group (k, settings) pairs by the zero count of the settings string.
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(n);
    for n_z in 0..n {
        let mut g = Vec::new();
        for settings in zeta_settings(n - 1, n_z) {
            let code: usize = settings.iter().fold(0, |acc, &s| acc * 3 + s);
            for k in 0..n {
                g.push(k * per_party + code);
            }
        }
        groups.push(g);
    }
    let mut report = optimize_grouped(&tests, &groups, state, tol)?;
    if !is_qubit_dicke(state) {
        report.note =
            Some("input is not a Dicke state; grouping loses optimality guarantees".into());
    }
    Ok(report)
}

/// True when the state is a qubit Dicke state: uniform positive amplitudes
/// over a single Hamming-weight class.
fn is_qubit_dicke(state: &PureState) -> bool {
    let support: Vec<usize> = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 1e-12)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return false;
    }
    let weight = support[0].count_ones();
    let amp = state.amplitudes()[support[0]];
    support.iter().all(|&i| {
        i.count_ones() == weight && (state.amplitudes()[i] - amp).norm() < 1e-12
    })
}
