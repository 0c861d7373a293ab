use crate::{C64, QsvError, Result};

use super::ComplexMatrix;

/// Dense Hermitian eigensolves are capped at this dimension.
pub const DENSE_EIG_CAP: usize = 8192;

/// Eigenvalues (descending) with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian within `1e-12`; eigenvalues come back sorted
/// in descending order.
pub fn hermitian_eigensystem(h: &ComplexMatrix) -> Result<Eigensystem> {
    if h.rows() != h.cols() {
        return Err(QsvError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            h.rows(),
            h.cols()
        )));
    }
    if h.rows() > DENSE_EIG_CAP {
        return Err(QsvError::DimensionCap(h.rows(), DENSE_EIG_CAP));
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-12 {
        return Err(QsvError::NotHermitian(defect));
    }

    // Symmetrize to scrub rounding noise before handing off to the solver.
    let dim = h.rows();
    let sym = ComplexMatrix::from_fn(dim, dim, |r, c| 0.5 * (h[(r, c)] + h[(c, r)].conj()));
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors =
        ComplexMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigensystem { eigenvalues, eigenvectors })
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest (algebraic) eigenvalue of a Hermitian operator given only its
/// matrix-vector product, via Lanczos iteration with full
/// reorthogonalization and restarts.
///
/// Returns the eigenvalue and a unit Ritz vector with residual
/// `|A v - lambda v| <= tol`.
pub fn lanczos_max(
    dim: usize,
    mut matvec: impl FnMut(&[C64], &mut [C64]),
    tol: f64,
    max_matvecs: usize,
) -> (f64, Vec<C64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x6c616e637a6f73);

    // Deterministic dense start vector.
    let mut start: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let s = norm(&start);
    start.iter_mut().for_each(|x| *x /= s);

    let krylov_cap = dim.min(96);
    let mut used = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_vec = start.clone();

    while used < max_matvecs {
        // One (possibly restarted) Lanczos pass.
        let mut basis: Vec<Vec<C64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![C64::new(0.0, 0.0); dim];

        for j in 0..krylov_cap {
            if used >= max_matvecs {
                break;
            }
            matvec(&basis[j], &mut w);
            used += 1;
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            // Full reorthogonalization, twice for stability.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let beta = norm(&w);
            // Ritz extraction on the tridiagonal matrix.
            let (theta, ritz_small, resid_small) = top_ritz(&alphas, &betas, beta);
            if beta <= 1e-14 || resid_small <= tol || j + 1 == krylov_cap {
                let mut ritz = vec![C64::new(0.0, 0.0); dim];
                for (coef, q) in ritz_small.iter().zip(&basis) {
                    for (ri, qi) in ritz.iter_mut().zip(q) {
                        *ri += coef * qi;
                    }
                }
                let n = norm(&ritz);
                ritz.iter_mut().for_each(|x| *x /= n);
                if theta > best_val {
                    best_val = theta;
                    best_vec = ritz.clone();
                }
                if beta <= 1e-14 || resid_small <= tol {
                    return (best_val, best_vec);
                }
                start = ritz; // restart from the best Ritz vector
                break;
            }
            betas.push(beta);
            let mut next = w.clone();
            next.iter_mut().for_each(|x| *x /= beta);
            basis.push(next);
        }
    }
    (best_val, best_vec)
}

/// Largest Ritz pair of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`; `beta_next` yields the residual bound
/// `beta_next * |last component|`.
fn top_ritz(alphas: &[f64], betas: &[f64], beta_next: f64) -> (f64, Vec<f64>, f64) {
    let k = alphas.len();
    let mut t = ComplexMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = C64::new(alphas[i], 0.0);
        if i + 1 < k {
            t[(i, i + 1)] = C64::new(betas[i], 0.0);
            t[(i + 1, i)] = C64::new(betas[i], 0.0);
        }
    }
    let eig = hermitian_eigensystem(&t).expect("tridiagonal matrix is Hermitian");
    let theta = eig.eigenvalues[0];
    let vec: Vec<f64> = (0..k).map(|i| eig.eigenvectors[(i, 0)].re).collect();
    let resid = beta_next * vec[k - 1].abs();
    (theta, vec, resid)
}
