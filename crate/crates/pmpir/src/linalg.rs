//! Dense matrices over a prime field.
//!
//! [`Mat`] is the carrier for everything matrix-shaped in the system: the
//! encoding matrix, message matrices, code matrices, query matrices and
//! answers. Elimination over F_q is exact, so pivoting only has to dodge
//! zeros — the first nonzero entry in column order is always taken, which
//! keeps every routine deterministic.

use crate::field::{FieldElement, PrimeField};
use crate::{Error, Result};

/// A row-major dense matrix with entries in a single prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    field: PrimeField,
    data: Vec<u64>,
}

impl Mat {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            field,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Mat {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Build from raw residues, reducing each mod q.
    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged rows in matrix literal"
        );
        let q = field.modulus();
        Mat {
            rows: r,
            cols: c,
            field,
            data: rows.iter().flatten().map(|&v| v % q).collect(),
        }
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElement,
    ) -> Mat {
        let mut m = Mat::zeros(field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Row i = (1, x_i, x_i^2, ..., x_i^{cols-1}). The points must be
    /// pairwise distinct so that every maximal square submatrix is
    /// invertible.
    pub fn vandermonde(points: &[FieldElement], cols: usize) -> Result<Mat> {
        assert!(cols >= 1, "vandermonde needs at least one column");
        let field = points
            .first()
            .map(|p| p.field())
            .expect("vandermonde needs at least one point");
        let mut seen = std::collections::HashSet::new();
        for p in points {
            if !seen.insert(p.value()) {
                return Err(Error::DuplicatePoints { value: p.value() });
            }
        }
        Ok(Mat::from_fn(field, points.len(), cols, |i, j| {
            points[i].pow(j as u64)
        }))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.field.element(self.data[i * self.cols + j])
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        assert_eq!(
            v.field().modulus(),
            self.field.modulus(),
            "element modulus does not match matrix modulus"
        );
        self.data[i * self.cols + j] = v.value();
    }

    pub fn row(&self, i: usize) -> Vec<FieldElement> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn col(&self, j: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.field, idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            assert!(i < self.rows, "row index out of bounds");
            out.data[r * self.cols..(r + 1) * self.cols]
                .copy_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i))
    }

    fn assert_compatible(&self, other: &Mat) {
        assert_eq!(
            self.field.modulus(),
            other.field.modulus(),
            "matrices have different moduli"
        );
    }

    /// Standard matrix product over F_q.
    pub fn mat_mul(&self, other: &Mat) -> Mat {
        self.assert_compatible(other);
        assert_eq!(
            self.cols, other.rows,
            "shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let q = self.field.modulus();
        let mut out = Mat::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let cell = &mut out.data[i * other.cols + j];
                    *cell = (*cell + a * other.data[k * other.cols + j]) % q;
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * v`.
    pub fn mul_vec(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(self.cols, v.len(), "vector length does not match columns");
        let q = self.field.modulus();
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u64;
                for j in 0..self.cols {
                    acc = (acc + self.data[i * self.cols + j] * v[j].value()) % q;
                }
                self.field.element(acc)
            })
            .collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.assert_compatible(other);
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let q = self.field.modulus();
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = (*a + b) % q;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.assert_compatible(other);
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let q = self.field.modulus();
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a = (*a + q - b) % q;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Reduced row echelon form. Returns the reduced matrix and the pivot
    /// column of each pivot row.
    fn rref(&self) -> (Mat, Vec<usize>) {
        let q = self.field.modulus();
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.data[i * m.cols + c] != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(r * m.cols + j, pr * m.cols + j);
                }
            }
            let inv = self.field.element(m.data[r * m.cols + c]).inv().unwrap().value();
            for j in c..m.cols {
                m.data[r * m.cols + j] = m.data[r * m.cols + j] * inv % q;
            }
            for i in 0..m.rows {
                if i != r && m.data[i * m.cols + c] != 0 {
                    let f = m.data[i * m.cols + c];
                    for j in c..m.cols {
                        let sub = f * m.data[r * m.cols + j] % q;
                        m.data[i * m.cols + j] = (m.data[i * m.cols + j] + q - sub) % q;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    /// Row rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Gauss-Jordan inverse of a square matrix.
    pub fn inverse(&self) -> Result<Mat> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        // Eliminate [self | I].
        let mut aug = Mat::zeros(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.data[i * 2 * n + j] = self.data[i * n + j];
            }
            aug.data[i * 2 * n + n + i] = 1;
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
            return Err(Error::SingularMatrix);
        }
        let mut out = Mat::zeros(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = red.data[i * 2 * n + n + j];
            }
        }
        Ok(out)
    }

    /// Solve `self * x = y` for the unique `x`.
    ///
    /// Over-determined systems are fine as long as they are consistent;
    /// consistency is checked exactly, and a solution space of positive
    /// dimension is rejected rather than picking a representative.
    pub fn solve(&self, y: &[FieldElement]) -> Result<Vec<FieldElement>> {
        assert_eq!(self.rows, y.len(), "rhs length does not match rows");
        let n = self.cols;
        let mut aug = Mat::zeros(self.field, self.rows, n + 1);
        for i in 0..self.rows {
            for j in 0..n {
                aug.data[i * (n + 1) + j] = self.data[i * n + j];
            }
            aug.data[i * (n + 1) + n] = y[i].value();
        }
        let (red, pivots) = aug.rref();
        if pivots.iter().any(|&c| c == n) {
            return Err(Error::InconsistentSystem);
        }
        if pivots.len() < n {
            return Err(Error::RankDeficientSystem {
                rank: pivots.len(),
                unknowns: n,
            });
        }
        let mut x = vec![self.field.zero(); n];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = self.field.element(red.data[i * (n + 1) + n]);
        }
        Ok(x)
    }

    /// A basis of the left null space `{ y : y^T * self = 0 }`, as rows.
    /// For a rank-r encoding matrix this is the paper's parity-check
    /// matrix of rank n-r.
    pub fn left_null_space(&self) -> Mat {
        let q = self.field.modulus();
        let t = self.transpose();
        let (red, pivots) = t.rref();
        let free: Vec<usize> = (0..t.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Mat::zeros(self.field, free.len(), self.rows);
        for (row, &fc) in free.iter().enumerate() {
            out.data[row * self.rows + fc] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                out.data[row * self.rows + pc] = (q - red.data[i * t.cols + fc]) % q;
            }
        }
        out
    }
}
