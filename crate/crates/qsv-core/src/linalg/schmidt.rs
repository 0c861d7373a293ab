//! Schmidt decomposition across a bipartite cut, with a deterministic
//! convention for degenerate Schmidt coefficients.
//!
//! SVD backends are free to rotate singular vectors inside a degenerate
//! cluster, which would make downstream test constructions depend on solver
//! internals. To pin the output down, clusters of (numerically) equal
//! coefficients are re-based by Gram-Schmidt over the columns of the cluster
//! projector `P = U U^dag`, which prefers computational-basis directions
//! whenever the cluster subspace contains them. Each left vector then gets
//! its largest-magnitude component rotated to the positive real axis, with
//! the conjugate phase absorbed into the matching right vector.

use crate::states::PureState;
use crate::{C64, QsvError, Result};

use super::matrix::ComplexMatrix;

/// Schmidt coefficients at or below this cutoff are treated as exact zeros
/// and dropped.
pub const SCHMIDT_ZERO_CUTOFF: f64 = 1e-12;

/// Schmidt form of a state across a fixed cut: `psi = sum_i s_i a_i (x) b_i`
/// with `s_i` positive and descending.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    /// Positive coefficients, descending, zeros removed.
    pub coefficients: Vec<f64>,
    /// Left Schmidt vectors as columns (first-subsystem dimension x rank).
    pub left_vectors: ComplexMatrix,
    /// Right Schmidt vectors as columns (second-subsystem dimension x rank).
    pub right_vectors: ComplexMatrix,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }
}

/// Schmidt decomposition with the first `cut` parties as the left subsystem.
pub fn schmidt_decompose(state: &PureState, cut: usize) -> Result<SchmidtForm> {
    let n = state.num_parties();
    if cut == 0 || cut >= n {
        return Err(QsvError::InvalidArgument(format!(
            "cut {cut} must satisfy 1 <= cut < {n}"
        )));
    }
    let d_left: usize = state.dims()[..cut].iter().product();
    let d_right: usize = state.dims()[cut..].iter().product();

    // Party-major flat indexing means the amplitude vector is already the
    // row-major d_left x d_right matrix.
    let m = ComplexMatrix::from_entries(d_left, d_right, state.amplitudes().to_vec())?;
    let svd = m.to_nalgebra().svd(true, true);
    let u = svd.u.as_ref().expect("SVD with vectors requested");
    let vt = svd.v_t.as_ref().expect("SVD with vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap()
    });
    let mut coefficients = Vec::new();
    let mut left = Vec::new(); // columns
    let mut right = Vec::new();
    for &i in &order {
        let s = svd.singular_values[i];
        if s <= SCHMIDT_ZERO_CUTOFF {
            break;
        }
        coefficients.push(s);
        left.push((0..d_left).map(|r| u[(r, i)]).collect::<Vec<C64>>());
        // psi = sum_i s_i u_i (x) w_i with w_i[y] = Vt[i, y].
        right.push((0..d_right).map(|y| vt[(i, y)]).collect::<Vec<C64>>());
    }

    canonicalize_degenerate_clusters(&m, &coefficients, &mut left, &mut right);
    fix_phases(&mut left, &mut right);

    let rank = coefficients.len();
    let left_vectors = ComplexMatrix::from_fn(d_left, rank, |r, c| left[c][r]);
    let right_vectors = ComplexMatrix::from_fn(d_right, rank, |r, c| right[c][r]);
    Ok(SchmidtForm { coefficients, left_vectors, right_vectors })
}

/// Re-base every cluster of numerically equal coefficients so the left
/// vectors come from Gram-Schmidt on the columns of the cluster projector.
fn canonicalize_degenerate_clusters(
    m: &ComplexMatrix,
    coefficients: &[f64],
    left: &mut [Vec<C64>],
    right: &mut [Vec<C64>],
) {
    let rank = coefficients.len();
    let d_left = m.rows();
    let mut start = 0;
    while start < rank {
        let mut end = start + 1;
        while end < rank
            && coefficients[end - 1] - coefficients[end]
                <= 1e-12 * coefficients[start].max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            // Projector onto the cluster's left subspace.
            let mut proj = ComplexMatrix::zeros(d_left, d_left);
            for v in &left[start..end] {
                proj.add_outer(1.0, v);
            }
            let mut basis: Vec<Vec<C64>> = Vec::with_capacity(end - start);
            for c in 0..d_left {
                if basis.len() == end - start {
                    break;
                }
                let mut v = proj.column(c);
                for q in &basis {
                    let ip: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= ip * qi;
                    }
                }
                let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    v.iter_mut().for_each(|x| *x /= norm);
                    basis.push(v);
                }
            }
            debug_assert_eq!(basis.len(), end - start);
            let madj = m.adjoint();
            for (slot, v) in basis.into_iter().enumerate() {
                let i = start + slot;
                // Right partner of a left vector u at coefficient s is
                // M^dag u / s.
                let mut w = madj.apply(&v);
                w.iter_mut().for_each(|x| *x /= coefficients[i]);
                left[i] = v;
                right[i] = w;
            }
        }
        start = end;
    }
}

/// Rotate each pair so the left vector's largest-magnitude component is real
/// and positive.
fn fix_phases(left: &mut [Vec<C64>], right: &mut [Vec<C64>]) {
    for (lv, rv) in left.iter_mut().zip(right.iter_mut()) {
        let pivot = lv
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let z = lv[pivot];
        if z.norm() == 0.0 {
            continue;
        }
        let phase = z / z.norm();
        let inv = phase.conj();
        lv.iter_mut().for_each(|x| *x *= inv);
        rv.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Extend orthonormal `vectors` (columns of length `dim`) to a full
/// orthonormal basis, preferring computational-basis directions for the
/// completion. Returns a `dim x dim` unitary whose first columns are the
/// inputs.
pub fn complete_basis(vectors: &[Vec<C64>], dim: usize) -> Result<ComplexMatrix> {
    if vectors.len() > dim || vectors.iter().any(|v| v.len() != dim) {
        return Err(QsvError::DimensionMismatch(format!(
            "{} vectors of mismatched length for dimension {dim}",
            vectors.len()
        )));
    }
    let mut basis: Vec<Vec<C64>> = vectors.to_vec();
    for c in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[c] = C64::new(1.0, 0.0);
        for q in &basis {
            let ip: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= ip * qi;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    if basis.len() != dim {
        return Err(QsvError::InvalidArgument(
            "could not complete basis; input vectors may not be orthonormal".into(),
        ));
    }
    let out = ComplexMatrix::from_fn(dim, dim, |r, c| basis[c][r]);
    debug_assert!(out.has_orthonormal_columns(1e-10));
    Ok(out)
}
