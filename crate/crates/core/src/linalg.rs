//! Dense matrices and LU factorization with partial pivoting.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from row vectors. Returns `None` for ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return None;
        }
        Some(Self {
            nrows: rows.len(),
            ncols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.ncols..(r + 1) * self.ncols]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.nrows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.nrows).map(|r| self[(r, c)]).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "vector length must equal column count");
        (0..self.nrows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|c| {
                (0..self.nrows)
                    .map(|r| self[(r, c)].abs().to_f64_lossy())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).iter().map(|v| v.abs().to_f64_lossy()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        assert!(r < self.nrows && c < self.ncols, "index ({r}, {c}) out of bounds");
        &self.data[r * self.ncols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        assert!(r < self.nrows && c < self.ncols, "index ({r}, {c}) out of bounds");
        &mut self.data[r * self.ncols + c]
    }
}

/// A pivot fell below the singularity threshold during elimination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPivot {
    /// Elimination step (column) at which no usable pivot was found.
    pub index: usize,
    /// Absolute value of the best available pivot.
    pub magnitude: f64,
}

/// `PA = LU` with unit-diagonal `L` stored below the diagonal of `lu`.
#[derive(Clone, Debug)]
pub struct LuFactorization<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactorization<T> {
    /// Factorizes a square matrix. A pivot is rejected when its magnitude is
    /// at most `n · u · ‖A‖_∞` (`u` the unit roundoff), which for exact scalar
    /// types means exactly zero.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self, SingularPivot> {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.nrows();
        let threshold = n as f64 * T::unit_roundoff() * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|r| (r, lu[(r, k)].abs()))
                .fold((k, T::zero()), |best, cand| if cand.1 > best.1 { cand } else { best });
            let magnitude = pivot_abs.to_f64_lossy();
            if pivot_abs.is_zero() || magnitude <= threshold {
                return Err(SingularPivot { index: k, magnitude });
            }
            if pivot_row != k {
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(pivot_row, c)];
                    lu[(pivot_row, c)] = tmp;
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[(k, k)];
            for r in k + 1..n {
                let factor = lu[(r, k)] / pivot;
                if factor.is_zero() {
                    continue;
                }
                lu[(r, k)] = factor;
                for c in k + 1..n {
                    let updated = lu[(r, c)] - factor * lu[(k, c)];
                    lu[(r, c)] = updated;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length must equal matrix order");
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc = acc - self.lu[(r, c)] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n {
                acc = acc - self.lu[(r, c)] * x[c];
            }
            x[r] = acc / self.lu[(r, r)];
        }
        x
    }

    /// `‖A‖_1 · ‖A⁻¹‖_1`, with the inverse formed column by column.
    pub fn condition_one(&self, a: &DenseMatrix<T>) -> f64 {
        let n = self.dim();
        let mut inv_norm = 0.0f64;
        let mut e = vec![T::zero(); n];
        for c in 0..n {
            e[c] = T::one();
            let col = self.solve(&e);
            e[c] = T::zero();
            let sum: f64 = col.iter().map(|v| v.abs().to_f64_lossy()).sum();
            inv_norm = inv_norm.max(sum);
        }
        a.norm_one() * inv_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn solves_pivoted_system() {
        let a = DenseMatrix::from_rows(&[vec![0.0_f64, 2.0], vec![3.0, 1.0]]).unwrap();
        let lu = LuFactorization::new(&a).unwrap();
        let x = lu.solve(&[4.0, 5.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let err = LuFactorization::new(&a).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn exact_rational_solve() {
        let r = |n, d| Rational64::new(n, d);
        let a = DenseMatrix::from_rows(&[vec![r(1, 3), r(1, 1)], vec![r(2, 1), r(0, 1)]]).unwrap();
        let lu = LuFactorization::new(&a).unwrap();
        let x = lu.solve(&[r(1, 1), r(1, 1)]);
        assert_eq!(a.mul_vec(&x), vec![r(1, 1), r(1, 1)]);
    }

    #[test]
    fn identity_condition_is_one() {
        let a = DenseMatrix::<f64>::identity(4);
        let lu = LuFactorization::new(&a).unwrap();
        assert_eq!(lu.condition_one(&a), 1.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_none());
    }
}
