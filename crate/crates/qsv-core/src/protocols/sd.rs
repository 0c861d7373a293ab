//! The Schmidt-decomposition (SD) protocol.
//!
//! For a measurement order `(k_1, ..., k_n)`, party `k_1` Schmidt-decomposes
//! the target against the rest and measures either the (completed) Schmidt
//! basis or its Fourier partner; the conditional residual state is then
//! decomposed against the remaining parties, and so on, until only the last
//! party is left holding a conditional pure state. A test is labeled by the
//! binary string `m` selecting Schmidt (0) or Fourier partner (1) at each
//! step.
//!
//! In the Schmidt branch only outcomes with nonvanishing Schmidt coefficient
//! accept; in the Fourier branch every outcome accepts (each carries equal
//! conditional probability 1/d).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bases::LocalBasis;
use crate::linalg::{complete_basis, project_party, schmidt_decompose, ComplexMatrix};
use crate::states::PureState;
use crate::{C64, QsvError, Result};

use super::{Branch, BranchStep, TestBranches, TestLabel, BRANCH_WEIGHT_CUTOFF};

/// Build the `2^{n-1}` SD tests for the given measurement order (a
/// permutation of the parties; the last entry holds the final projective
/// measurement).
pub fn sd_tests(state: &PureState, order: &[usize]) -> Result<Vec<TestBranches>> {
    let n = state.num_parties();
    if n < 2 {
        return Err(QsvError::InvalidArgument("SD protocol needs n >= 2".into()));
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(QsvError::InvalidArgument(format!(
            "order {order:?} is not a permutation of 0..{n}"
        )));
    }
    let frame = state.permute_parties(order);
    let mut tests = Vec::with_capacity(1 << (n - 1));
    for code in 0..(1usize << (n - 1)) {
        // settings[k] is the bit for step k, most significant first.
        let settings: Vec<usize> =
            (0..n - 1).map(|k| (code >> (n - 2 - k)) & 1).collect();
        let mut branches = Vec::new();
        let mut steps = Vec::new();
        extend(&frame, order, &settings, 0, 1.0, &mut steps, &mut branches)?;
        tests.push(TestBranches {
            label: TestLabel { last_party: order[n - 1], settings },
            dims: state.dims().to_vec(),
            branches,
        });
    }
    Ok(tests)
}

/// Recursive branch construction: `residual` lives on parties
/// `order[step..]` in measurement-frame order.
fn extend(
    residual: &PureState,
    order: &[usize],
    settings: &[usize],
    step: usize,
    weight: f64,
    steps: &mut Vec<BranchStep>,
    branches: &mut Vec<Branch>,
) -> Result<()> {
    if residual.num_parties() == 1 {
        branches.push(Branch {
            steps: steps.clone(),
            final_party: *order.last().unwrap(),
            final_state: residual.amplitudes().to_vec(),
            weight,
        });
        return Ok(());
    }
    let d = residual.dims()[0];
    let schmidt = schmidt_decompose(residual, 1)?;
    let left: Vec<Vec<C64>> = (0..schmidt.rank()).map(|i| schmidt.left_vectors.column(i)).collect();
    let completed = complete_basis(&left, d)?;
    let (basis, accepted): (LocalBasis, Vec<usize>) = if settings[step] == 0 {
        (LocalBasis::new(completed)?, (0..schmidt.rank()).collect())
    } else {
        (fourier_partner(&completed), (0..d).collect())
    };
    let basis = Arc::new(basis);
    for outcome in accepted {
        let (w, rest) = project_party(residual, 0, &basis.vector(outcome))?;
        let total = weight * w;
        if total <= BRANCH_WEIGHT_CUTOFF {
            continue;
        }
        let rest = rest.expect("nonzero-weight branch has a residual");
        steps.push(BranchStep { party: order[step], basis: Arc::clone(&basis), outcome });
        extend(&rest, order, settings, step + 1, total, steps, branches)?;
        steps.pop();
    }
    Ok(())
}

/// Fourier partner of a basis `{b_j}`: `b~_i = sum_j w^{ij} b_j / sqrt d`.
fn fourier_partner(basis: &ComplexMatrix) -> LocalBasis {
    let d = basis.rows();
    let s = 1.0 / (d as f64).sqrt();
    let f = ComplexMatrix::from_fn(d, d, |j, i| {
        let th = 2.0 * PI * (i * j) as f64 / d as f64;
        C64::new(s * th.cos(), s * th.sin())
    });
    LocalBasis::new(basis.matmul(&f)).expect("unitary times unitary is unitary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::states::{ghz, haar_random};
    use approx::assert_abs_diff_eq;

    /// Eq.-style bipartite oracle: P0 = sum_{s_i > 0} |a_i b_i><a_i b_i|,
    /// P1 = sum_i |a~_i b~_i><a~_i b~_i| with a~ the Fourier partner of the
    /// completed Schmidt basis and b~_i the matching conditional vectors.
    fn bipartite_oracle(state: &PureState) -> (ComplexMatrix, ComplexMatrix) {
        let f = schmidt_decompose(state, 1).unwrap();
        let (da, db) = (state.dims()[0], state.dims()[1]);
        let dim = da * db;
        let mut p0 = ComplexMatrix::zeros(dim, dim);
        for i in 0..f.rank() {
            let v = crate::linalg::matrix::kron_vec(
                &f.left_vectors.column(i),
                &f.right_vectors.column(i),
            );
            p0.add_outer(1.0, &v);
        }
        let left: Vec<Vec<C64>> = (0..f.rank()).map(|i| f.left_vectors.column(i)).collect();
        let a = complete_basis(&left, da).unwrap();
        let mut p1 = ComplexMatrix::zeros(dim, dim);
        let omega = |num: f64| {
            C64::new((2.0 * PI * num).cos(), (2.0 * PI * num).sin())
        };
        for i in 0..da {
            let mut av = vec![C64::new(0.0, 0.0); da];
            for j in 0..da {
                let w = omega((i * j) as f64 / da as f64) / (da as f64).sqrt();
                for r in 0..da {
                    av[r] += w * a[(r, j)];
                }
            }
            // b~_i ~ sum_j w^{-ij} s_j b_j (unnormalized; zero outside rank).
            let mut bv = vec![C64::new(0.0, 0.0); db];
            for j in 0..f.rank() {
                let w = omega(-((i * j) as f64) / da as f64) * f.coefficients[j];
                for r in 0..db {
                    bv[r] += w * f.right_vectors[(r, j)];
                }
            }
            let norm: f64 = bv.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            bv.iter_mut().for_each(|x| *x /= norm);
            p1.add_outer(1.0, &crate::linalg::matrix::kron_vec(&av, &bv));
        }
        (p0, p1)
    }

    #[test]
    fn bipartite_tests_match_oracle() {
        for (dims, seed) in [([2, 2], 1u64), ([3, 2], 2), ([4, 4], 3)] {
            let state = haar_random(&dims, seed).unwrap();
            let tests = sd_tests(&state, &[0, 1]).unwrap();
            assert_eq!(tests.len(), 2);
            let (p0, p1) = bipartite_oracle(&state);
            assert!(tests[0].densify().max_abs_diff(&p0) <= 1e-9);
            assert!(tests[1].densify().max_abs_diff(&p1) <= 1e-9);
        }
    }

    #[test]
    fn bipartite_p1_rank_and_overlap() {
        // tr(P1) = d and tr(P0 P1) = 1 for a full-rank bipartite target.
        let state = haar_random(&[3, 3], 7).unwrap();
        let tests = sd_tests(&state, &[0, 1]).unwrap();
        let p0 = tests[0].densify();
        let p1 = tests[1].densify();
        assert_abs_diff_eq!(p1.trace().re, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p0.matmul(&p1).trace().re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ghz_extreme_tests() {
        // m = 0^{n-1} densifies to sum_i (|i><i|)^(x)n (rank d); m = 1^{n-1}
        // to (1/d) sum_i (X^(x)n)^i (rank d^{n-1}).
        let (d, n) = (3, 3);
        let state = ghz(d, n).unwrap();
        let tests = sd_tests(&state, &[0, 1, 2]).unwrap();
        assert_eq!(tests.len(), 4);

        let dim = d.pow(n as u32);
        let mut diag = ComplexMatrix::zeros(dim, dim);
        for i in 0..d {
            let idx = i * (dim - 1) / (d - 1);
            diag[(idx, idx)] = C64::new(1.0, 0.0);
        }
        let p00 = tests[0].densify();
        assert!(p00.max_abs_diff(&diag) <= 1e-9);
        assert_abs_diff_eq!(p00.trace().re, d as f64, epsilon = 1e-9);

        let x = ComplexMatrix::from_fn(d, d, |r, c| {
            if r == (c + 1) % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let xn = kron(&kron(&x, &x), &x);
        let mut expect = ComplexMatrix::identity(dim);
        let mut power = ComplexMatrix::identity(dim);
        for _ in 1..d {
            power = power.matmul(&xn);
            expect.add_scaled(1.0, &power);
        }
        expect.scale(1.0 / d as f64);
        let p11 = tests[3].densify();
        assert!(p11.max_abs_diff(&expect) <= 1e-9, "diff {}", p11.max_abs_diff(&expect));
        assert_abs_diff_eq!(p11.trace().re, (d * d) as f64, epsilon = 1e-9);
        assert_abs_diff_eq!(p00.matmul(&p11).trace().re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn three_party_branch_counts() {
        let state = haar_random(&[2, 2, 2], 5).unwrap();
        let tests = sd_tests(&state, &[0, 1, 2]).unwrap();
        // Fourier steps always branch d ways; Schmidt steps branch rank ways.
        for t in &tests {
            assert!(t.branches.len() <= 4);
            assert!(!t.branches.is_empty());
            assert_abs_diff_eq!(t.target_pass_weight(), 1.0, epsilon = 1e-10);
        }
        // All-Fourier test on a generic state has the full d^{n-1} branches.
        assert_eq!(tests[3].branches.len(), 4);
    }

    #[test]
    fn rejects_bad_order() {
        let state = ghz(2, 3).unwrap();
        assert!(sd_tests(&state, &[0, 1]).is_err());
        assert!(sd_tests(&state, &[0, 1, 1]).is_err());
    }
}
