//! Local measurement bases: generalized Pauli eigenbases (including the
//! standard mutually unbiased sets) and qubit Bloch-vector designs.
//!
//! The generalized Pauli operators on a qudit are `Z = sum_i w^i |i><i|` and
//! `X = sum_i |i+1><i|` with `w = exp(2 pi i / d)`. Eigenbases of `X Z^k`
//! are built from the spectral projector applied to `|0>`,
//! `v_j ~ sum_t lambda_j^{-t} (X Z^k)^t |0>`, with
//! `lambda_j = exp(i pi k (d-1)/d) w^{-j}`; this enumeration makes the `X`
//! eigenbasis (`k = 0`) exactly the Fourier matrix with entries
//! `w^{ij}/sqrt d`. Each vector's first nonzero component is rotated to the
//! positive real axis, so every basis is byte-deterministic.

use std::f64::consts::PI;

use crate::linalg::ComplexMatrix;
use crate::{C64, QsvError, Result};

/// An orthonormal basis of a single qudit; column `i` is the vector attached
/// to measurement outcome `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    vectors: ComplexMatrix,
}

impl LocalBasis {
    /// Wrap a square matrix whose columns are orthonormal within `1e-10`.
    pub fn new(vectors: ComplexMatrix) -> Result<Self> {
        if vectors.rows() != vectors.cols() {
            return Err(QsvError::DimensionMismatch(format!(
                "{}x{} basis matrix is not square",
                vectors.rows(),
                vectors.cols()
            )));
        }
        if !vectors.has_orthonormal_columns(1e-10) {
            return Err(QsvError::InvalidArgument(
                "basis columns are not orthonormal".into(),
            ));
        }
        Ok(Self { vectors })
    }

    pub fn computational(dim: usize) -> Self {
        Self { vectors: ComplexMatrix::identity(dim) }
    }

    /// Fourier basis, `v_j[i] = w^{ij}/sqrt d`.
    pub fn fourier(dim: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let vectors = ComplexMatrix::from_fn(dim, dim, |i, j| {
            let th = 2.0 * PI * (i * j) as f64 / dim as f64;
            C64::new(s * th.cos(), s * th.sin())
        });
        Self { vectors }
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    /// The vector attached to outcome `i`.
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.vectors
    }
}

/// Eigenbasis of `X Z^k`, outcome `j` holding eigenvalue
/// `exp(i pi k (d-1)/d) w^{-j}`.
pub fn xz_eigenbasis(d: usize, k: usize) -> LocalBasis {
    let omega = |num: f64| C64::new((2.0 * PI * num).cos(), (2.0 * PI * num).sin());
    // U = X Z^k as its action on basis vectors: U e_i = w^{ik} e_{i+1}.
    // Iterate U^t e_0 = w^{k t(t-1)/2} e_t.
    let mut columns = Vec::with_capacity(d);
    for j in 0..d {
        let lam_phase = 0.5 * k as f64 * (d - 1) as f64 / d as f64 - j as f64 / d as f64;
        let mut v = vec![C64::new(0.0, 0.0); d];
        for t in 0..d {
            let u_phase = k as f64 * (t * (t.max(1) - 1) / 2) as f64 / d as f64;
            v[t] = omega(u_phase - lam_phase * t as f64);
        }
        // Normalize and rotate the first nonzero component to be positive.
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let pivot = v.iter().find(|x| x.norm() > 1e-12).copied().unwrap();
        let phase = (pivot / pivot.norm()).conj();
        v.iter_mut().for_each(|x| *x *= phase / norm);
        columns.push(v);
    }
    LocalBasis { vectors: ComplexMatrix::from_fn(d, d, |r, c| columns[c][r]) }
}

/// A set of generalized Pauli eigenbases.
///
/// * `count = 2` gives `[Z, X]` (computational and Fourier).
/// * `count = 3` gives `[Z, X, XZ]`.
/// * `count = d + 1` gives the complete set `[X, XZ, ..., XZ^{d-1}, Z]`,
///   which requires `d` prime.
pub fn pauli_eigenbases(d: usize, count: usize) -> Result<Vec<LocalBasis>> {
    if d < 2 {
        return Err(QsvError::InvalidArgument(format!("qudit dimension {d} < 2")));
    }
    match count {
        2 => Ok(vec![LocalBasis::computational(d), LocalBasis::fourier(d)]),
        3 => Ok(vec![
            LocalBasis::computational(d),
            LocalBasis::fourier(d),
            xz_eigenbasis(d, 1),
        ]),
        c if c == d + 1 => {
            if !is_prime(d) {
                return Err(QsvError::InvalidArgument(format!(
                    "complete MUB construction needs prime d (got {d})"
                )));
            }
            let mut out: Vec<LocalBasis> = (0..d).map(|k| xz_eigenbasis(d, k)).collect();
            out.push(LocalBasis::computational(d));
            Ok(out)
        }
        c => Err(QsvError::InvalidArgument(format!(
            "unsupported basis count {c} for d = {d} (want 2, 3, or d + 1)"
        ))),
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| n % k != 0)
}

/// Check that every pair of vectors from different bases has overlap
/// `|<e|f>|^2 = 1/d` within `tol`.
pub fn is_mutually_unbiased(bases: &[LocalBasis], tol: f64) -> bool {
    let d = match bases.first() {
        Some(b) => b.dim(),
        None => return true,
    };
    let target = 1.0 / d as f64;
    for (a, ba) in bases.iter().enumerate() {
        if ba.dim() != d {
            return false;
        }
        for bb in &bases[a + 1..] {
            for i in 0..d {
                let vi = ba.vector(i);
                for j in 0..d {
                    let ip: C64 =
                        vi.iter().zip(bb.vector(j)).map(|(x, y)| x.conj() * y).sum();
                    if (ip.norm_sqr() - target).abs() > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Qubit basis of the `+/-` eigenvectors of `u . sigma` for a unit Bloch
/// vector `u = (x, y, z)`; outcome 0 carries the `+1` eigenvector.
pub fn bloch_basis(u: [f64; 3]) -> Result<LocalBasis> {
    let [x, y, z] = u;
    let norm = (x * x + y * y + z * z).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QsvError::InvalidArgument(format!("Bloch vector norm {norm} != 1")));
    }
    // +1 eigenvector: (cos(theta/2), e^{i phi} sin(theta/2)).
    let theta = z.acos();
    let phi = y.atan2(x);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = C64::new(phi.cos(), phi.sin());
    let plus = [C64::new(c, 0.0), e * s];
    // -1 eigenvector, phase fixed so its first nonzero entry is positive.
    let minus = if s > 1e-12 {
        [C64::new(s, 0.0), -e * c]
    } else {
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    };
    LocalBasis::new(ComplexMatrix::from_fn(2, 2, |r, col| {
        if col == 0 { plus[r] } else { minus[r] }
    }))
}

/// The four tetrahedron Bloch directions `(+-1, +-1, +-1)/sqrt 3` with an
/// even number of minus signs.
pub fn tetrahedron_directions() -> [[f64; 3]; 4] {
    let s = 1.0 / 3.0f64.sqrt();
    [
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ]
}

/// Six icosahedron axis directions built from the golden ratio
/// `g = (1 + sqrt 5)/2`, normalized; any two satisfy `|u . v| = 1/sqrt 5`.
pub fn icosahedron_directions() -> [[f64; 3]; 6] {
    let g = (1.0 + 5.0f64.sqrt()) / 2.0;
    let s = 1.0 / (1.0 + g * g).sqrt();
    [
        [s, g * s, 0.0],
        [-s, g * s, 0.0],
        [0.0, s, g * s],
        [0.0, -s, g * s],
        [g * s, 0.0, s],
        [g * s, 0.0, -s],
    ]
}

/// Measurement bases of a qubit Bloch design.
pub fn design_bases(directions: &[[f64; 3]]) -> Result<Vec<LocalBasis>> {
    directions.iter().map(|&u| bloch_basis(u)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fourier_entries_d5() {
        let f = LocalBasis::fourier(5);
        let s = 1.0 / 5.0f64.sqrt();
        for i in 0..5 {
            for j in 0..5 {
                let th = 2.0 * PI * (i * j) as f64 / 5.0;
                let expect = C64::new(s * th.cos(), s * th.sin());
                assert!((f.matrix()[(i, j)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn x_eigenbasis_is_fourier() {
        for d in 2..=5 {
            let x = xz_eigenbasis(d, 0);
            let f = LocalBasis::fourier(d);
            assert!(x.matrix().max_abs_diff(f.matrix()) < 1e-12);
        }
    }

    #[test]
    fn xz_bases_are_eigenbases() {
        for d in 2..=5 {
            for k in 0..d {
                let b = xz_eigenbasis(d, k);
                assert!(b.matrix().has_orthonormal_columns(1e-12));
                // Check U v_j = lambda_j v_j with U = X Z^k.
                let omega =
                    |num: f64| C64::new((2.0 * PI * num).cos(), (2.0 * PI * num).sin());
                let u = ComplexMatrix::from_fn(d, d, |r, c| {
                    if r == (c + 1) % d {
                        omega(k as f64 * c as f64 / d as f64)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                for j in 0..d {
                    let v = b.vector(j);
                    let uv = u.apply(&v);
                    let lam = omega(0.5 * k as f64 * (d - 1) as f64 / d as f64
                        - j as f64 / d as f64);
                    let resid: f64 = uv
                        .iter()
                        .zip(&v)
                        .map(|(a, x)| (a - lam * x).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    assert!(resid < 1e-12, "d={d} k={k} j={j} resid {resid}");
                }
            }
        }
    }

    #[test]
    fn qubit_three_mub() {
        let bases = pauli_eigenbases(2, 3).unwrap();
        assert_eq!(bases.len(), 3);
        assert!(is_mutually_unbiased(&bases, 1e-12));
        // Z, X, Y bases up to phases: check |<v|sigma axis>| structure via
        // Bloch vectors. XZ = -iY, whose eigenbasis is the Y basis.
        let y0 = bases[2].vector(0);
        let bloch_y = 2.0 * (y0[0].conj() * y0[1]).im;
        assert_abs_diff_eq!(bloch_y.abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn complete_set_d3() {
        let bases = pauli_eigenbases(3, 4).unwrap();
        assert_eq!(bases.len(), 4);
        assert!(is_mutually_unbiased(&bases, 1e-12));
        // All overlaps across bases are exactly 1/sqrt 3 in magnitude.
        for a in 0..4 {
            for b in a + 1..4 {
                for i in 0..3 {
                    for j in 0..3 {
                        let ip: C64 = bases[a]
                            .vector(i)
                            .iter()
                            .zip(bases[b].vector(j))
                            .map(|(x, y)| x.conj() * y)
                            .sum();
                        assert_abs_diff_eq!(ip.norm(), 1.0 / 3.0f64.sqrt(), epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn complete_set_rejects_composite_dimension() {
        assert!(pauli_eigenbases(4, 5).is_err());
        assert!(pauli_eigenbases(5, 6).is_ok());
    }

    #[test]
    fn two_bases_always_unbiased() {
        for d in 2..=6 {
            let bases = pauli_eigenbases(d, 2).unwrap();
            assert!(is_mutually_unbiased(&bases, 1e-12));
        }
    }

    #[test]
    fn bloch_basis_eigenvectors() {
        let dirs = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]];
        for u in dirs {
            let b = bloch_basis(u).unwrap();
            assert!(b.matrix().has_orthonormal_columns(1e-12));
            // u . sigma applied to outcome 0 gives +1.
            let v = b.vector(0);
            let sx = 2.0 * (v[0].conj() * v[1]).re;
            let sy = 2.0 * (v[0].conj() * v[1]).im;
            let sz = v[0].norm_sqr() - v[1].norm_sqr();
            assert_abs_diff_eq!(sx, u[0], epsilon = 1e-12);
            assert_abs_diff_eq!(sy, u[1], epsilon = 1e-12);
            assert_abs_diff_eq!(sz, u[2], epsilon = 1e-12);
        }
    }

    #[test]
    fn tetrahedron_geometry() {
        let dirs = tetrahedron_directions();
        for (i, a) in dirs.iter().enumerate() {
            let n: f64 = a.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
            for b in &dirs[i + 1..] {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert_abs_diff_eq!(dot, -1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn icosahedron_geometry() {
        let dirs = icosahedron_directions();
        for (i, a) in dirs.iter().enumerate() {
            let n: f64 = a.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
            for b in &dirs[i + 1..] {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert_abs_diff_eq!(dot.abs(), 1.0 / 5.0f64.sqrt(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bases_are_deterministic() {
        assert_eq!(pauli_eigenbases(3, 4).unwrap(), pauli_eigenbases(3, 4).unwrap());
        assert_eq!(xz_eigenbasis(5, 2), xz_eigenbasis(5, 2));
    }
}
