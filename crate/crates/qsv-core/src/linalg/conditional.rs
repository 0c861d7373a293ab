//! Conditional (post-measurement) states of a multipartite register after
//! projecting a subset of parties onto local basis vectors.

use crate::states::PureState;
use crate::{C64, QsvError, Result};

/// Project `party` onto the local unit vector `vector` and remove it from
/// the register.
///
/// Returns the Born probability and, when it is nonzero, the normalized
/// residual state of the remaining parties (original order preserved).
pub fn project_party(
    state: &PureState,
    party: usize,
    vector: &[C64],
) -> Result<(f64, Option<PureState>)> {
    conditional_state(state, &[party], &[vector])
}

/// Project each party in `parties` (original indexing, no duplicates) onto
/// the matching vector in `vectors`, all at once.
///
/// Returns the joint Born probability and the normalized residual state of
/// the unprojected parties. At least one party must remain unprojected.
pub fn conditional_state(
    state: &PureState,
    parties: &[usize],
    vectors: &[&[C64]],
) -> Result<(f64, Option<PureState>)> {
    let n = state.num_parties();
    if parties.len() != vectors.len() {
        return Err(QsvError::DimensionMismatch(format!(
            "{} parties but {} vectors",
            parties.len(),
            vectors.len()
        )));
    }
    if parties.len() >= n {
        return Err(QsvError::InvalidArgument(
            "at least one party must remain unprojected".into(),
        ));
    }
    let mut slot = vec![usize::MAX; n]; // position of each party in `parties`
    for (k, &p) in parties.iter().enumerate() {
        if p >= n {
            return Err(QsvError::InvalidArgument(format!("party {p} out of range for {n}")));
        }
        if slot[p] != usize::MAX {
            return Err(QsvError::InvalidArgument(format!("party {p} projected twice")));
        }
        if vectors[k].len() != state.dims()[p] {
            return Err(QsvError::DimensionMismatch(format!(
                "vector of length {} for party {p} of dimension {}",
                vectors[k].len(),
                state.dims()[p]
            )));
        }
        slot[p] = k;
    }

    let kept: Vec<usize> = (0..n).filter(|&p| slot[p] == usize::MAX).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&p| state.dims()[p]).collect();
    let residual_dim: usize = kept_dims.iter().product();
    let mut residual = vec![C64::new(0.0, 0.0); residual_dim];

    let mut digits = vec![0usize; n];
    for (idx, &amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut rem = idx;
        for p in (0..n).rev() {
            digits[p] = rem % state.dims()[p];
            rem /= state.dims()[p];
        }
        let mut coef = amp;
        for (k, &p) in parties.iter().enumerate() {
            coef *= vectors[k][digits[p]].conj();
        }
        if coef.norm_sqr() == 0.0 {
            continue;
        }
        let out_idx = kept.iter().fold(0, |acc, &p| acc * state.dims()[p] + digits[p]);
        residual[out_idx] += coef;
    }

    let weight: f64 = residual.iter().map(|x| x.norm_sqr()).sum();
    if weight <= f64::EPSILON * f64::EPSILON {
        return Ok((weight, None));
    }
    Ok((weight, Some(PureState::normalized(kept_dims, residual))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{ghz, haar_random, w_state};
    use approx::assert_abs_diff_eq;

    fn basis_vec(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    fn fourier_vec(dim: usize, i: usize) -> Vec<C64> {
        let s = 1.0 / (dim as f64).sqrt();
        (0..dim)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * (i * j) as f64 / dim as f64;
                C64::new(s * th.cos(), s * th.sin())
            })
            .collect()
    }

    #[test]
    fn ghz_computational_branch() {
        let g = ghz(3, 3).unwrap();
        let (w, rest) = project_party(&g, 0, &basis_vec(3, 1)).unwrap();
        assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-12);
        let rest = rest.unwrap();
        // Residual is |11> of the remaining two qutrits.
        assert_abs_diff_eq!(rest.amplitudes()[4].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn forbidden_branch_has_zero_weight() {
        // GHZ has no amplitude on |01...>.
        let g = ghz(2, 3).unwrap();
        let (w0, rest) = conditional_state(&g, &[0, 1], &[&basis_vec(2, 0), &basis_vec(2, 1)])
            .unwrap();
        assert_eq!(w0, 0.0);
        assert!(rest.is_none());
    }

    #[test]
    fn ghz_fourier_outcome_oracle() {
        // Projecting party 0 of GHZ(d, n) onto the Fourier vector f_i leaves
        // (1/sqrt d) sum_j w^{-ij} |j...j> with probability 1/d.
        let d = 3;
        let g = ghz(d, 3).unwrap();
        for i in 0..d {
            let (w, rest) = project_party(&g, 0, &fourier_vec(d, i)).unwrap();
            assert_abs_diff_eq!(w, 1.0 / d as f64, epsilon = 1e-12);
            let rest = rest.unwrap();
            for j in 0..d {
                let th = -2.0 * std::f64::consts::PI * (i * j) as f64 / d as f64;
                let expect = C64::new(th.cos(), th.sin()) / (d as f64).sqrt();
                let got = rest.amplitudes()[j * d + j];
                assert!((got - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_sum_to_one_over_any_basis() {
        let state = haar_random(&[3, 2, 2], 13).unwrap();
        // Computational basis on party 0 and Fourier basis on party 1.
        let mut total = 0.0;
        for i in 0..3 {
            for j in 0..2 {
                let (w, _) =
                    conditional_state(&state, &[0, 1], &[&basis_vec(3, i), &fourier_vec(2, j)])
                        .unwrap();
                total += w;
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn w_state_branches() {
        let w = w_state(3).unwrap();
        // Party 0 in |1>: residual must be |00> with probability 1/3.
        let (p1, rest) = project_party(&w, 0, &basis_vec(2, 1)).unwrap();
        assert_abs_diff_eq!(p1, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rest.unwrap().amplitudes()[0].re, 1.0, epsilon = 1e-12);
        // Party 0 in |0>: residual is the 2-qubit W state.
        let (p0, rest) = project_party(&w, 0, &basis_vec(2, 0)).unwrap();
        assert_abs_diff_eq!(p0, 2.0 / 3.0, epsilon = 1e-12);
        let rest = rest.unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(rest.amplitudes()[1].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(rest.amplitudes()[2].re, s, epsilon = 1e-12);
    }

    #[test]
    fn projecting_middle_party_keeps_order() {
        let state = haar_random(&[2, 3, 2], 4).unwrap();
        let (_, rest) = project_party(&state, 1, &basis_vec(3, 2)).unwrap();
        assert_eq!(rest.unwrap().dims(), &[2, 2]);
    }

    #[test]
    fn rejects_projecting_everything() {
        let g = ghz(2, 2).unwrap();
        let r = conditional_state(&g, &[0, 1], &[&basis_vec(2, 0), &basis_vec(2, 0)]);
        assert!(r.is_err());
    }
}
