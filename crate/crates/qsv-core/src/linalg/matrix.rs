use nalgebra::DMatrix;

use crate::{C64, QsvError, Result};

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Build from row-major entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(QsvError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// `self += alpha * v v^dag` for a column vector `v`.
    pub fn add_outer(&mut self, alpha: f64, v: &[C64]) {
        assert_eq!(self.rows, v.len());
        assert_eq!(self.cols, v.len());
        for r in 0..self.rows {
            let vr = v[r] * alpha;
            let row = &mut self.entries[r * self.cols..(r + 1) * self.cols];
            for (c, out) in row.iter_mut().enumerate() {
                *out += vr * v[c].conj();
            }
        }
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.entries {
            *a *= alpha;
        }
    }

    /// Matrix-vector product `self * v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Largest entrywise deviation `max |self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from Hermiticity, `max |H - H^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.hermiticity_defect() <= tol
    }

    /// Columns orthonormal within `tol`.
    pub fn has_orthonormal_columns(&self, tol: f64) -> bool {
        for a in 0..self.cols {
            for b in a..self.cols {
                let dot: C64 = (0..self.rows).map(|r| self[(r, a)].conj() * self[(r, b)]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                if (dot - expect).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)])
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.entries[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.entries[r * self.cols + c]
    }
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let f = a[(ar, ac)];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = f * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Kronecker product of column vectors.
pub(crate) fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag(vals: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(vals.len(), vals.len());
        for (i, &v) in vals.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    #[test]
    fn kron_of_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_projectors() {
        let p = kron(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]));
        assert_eq!(p, diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_matches_four_index_definition() {
        // X and Z on qubits against the elementwise oracle
        // (A (x) B)[i*p+k, j*q+l] = A[i,j] B[k,l].
        let x = ComplexMatrix::from_entries(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
            .unwrap();
        let z = ComplexMatrix::from_entries(2, 2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
            .unwrap();
        let k = kron(&x, &z);
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    for m in 0..2 {
                        assert_eq!(k[(i * 2 + l, j * 2 + m)], x[(i, j)] * z[(l, m)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_associative_on_integer_matrices() {
        let a = ComplexMatrix::from_entries(2, 2, vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)])
            .unwrap();
        let b = ComplexMatrix::from_entries(2, 2, vec![c(0., 1.), c(1., 0.), c(0., 0.), c(2., 0.)])
            .unwrap();
        let d = diag(&[1.0, -1.0]);
        assert_eq!(kron(&kron(&a, &b), &d), kron(&a, &kron(&b, &d)));
    }

    #[test]
    fn outer_product_accumulation() {
        let v = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let mut m = ComplexMatrix::zeros(2, 2);
        m.add_outer(2.0, &v);
        assert_eq!(m[(0, 0)], c(2.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, -2.0));
        assert_eq!(m[(1, 0)], c(0.0, 2.0));
        assert_eq!(m[(1, 1)], c(2.0, 0.0));
    }
}
