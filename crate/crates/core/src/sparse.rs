//! Compressed-sparse-column storage for incidence and technology matrices.

use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Column-compressed sparse matrix. Row indices within a column are strictly
/// increasing and no explicit zeros are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicate coordinates are
    /// summed; entries that end up zero are dropped.
    ///
    /// Panics if a coordinate is out of bounds.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(
                r < nrows && c < ncols,
                "triplet ({r}, {c}) outside {nrows}x{ncols}"
            );
        }
        // stable sort keeps insertion order among duplicates so summation is
        // reproducible
        entries.sort_by_key(|&(r, c, _)| (c, r));

        let mut col_ptr = vec![0; ncols + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        let mut counts = vec![0usize; ncols];
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                let slot = values.last_mut().expect("duplicate follows an entry");
                *slot = *slot + v;
            } else {
                row_idx.push(r);
                values.push(v);
                counts[c] += 1;
                last = Some((r, c));
            }
        }
        // drop cancelled entries
        let mut kept_rows = Vec::with_capacity(row_idx.len());
        let mut kept_vals = Vec::with_capacity(values.len());
        let mut cursor = 0;
        for c in 0..ncols {
            let mut kept = 0;
            for _ in 0..counts[c] {
                if !values[cursor].is_zero() {
                    kept_rows.push(row_idx[cursor]);
                    kept_vals.push(values[cursor]);
                    kept += 1;
                }
                cursor += 1;
            }
            col_ptr[c + 1] = col_ptr[c] + kept;
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx: kept_rows,
            values: kept_vals,
        }
    }

    pub fn from_dense(dense: &DenseMatrix<T>) -> Self {
        let triplets = (0..dense.nrows()).flat_map(|r| {
            (0..dense.ncols()).map(move |c| (r, c, dense[(r, c)]))
        });
        Self::from_triplets(dense.nrows(), dense.ncols(), triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let (rows, vals) = self.column(col);
        match rows.binary_search(&row) {
            Ok(pos) => vals[pos],
            Err(_) => T::zero(),
        }
    }

    /// Row indices and values of one column.
    pub fn column(&self, col: usize) -> (&[usize], &[T]) {
        let span = self.col_ptr[col]..self.col_ptr[col + 1];
        (&self.row_idx[span.clone()], &self.values[span])
    }

    /// Nonzero entries in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.ncols).flat_map(move |c| {
            let (rows, vals) = self.column(c);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, c, v))
        })
    }

    /// `self · x`. Each output row accumulates its terms in increasing column
    /// order, starting from zero.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols, "vector length must equal column count");
        let mut out = vec![T::zero(); self.nrows];
        for (c, &xc) in x.iter().enumerate() {
            let (rows, vals) = self.column(c);
            for (&r, &v) in rows.iter().zip(vals) {
                out[r] = out[r] + v * xc;
            }
        }
        out
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let triplets = self
            .triplets()
            .chain(other.triplets().map(|(r, c, v)| (r, c, -v)));
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    /// Rows with at least one stored entry, ascending.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        let mut seen = vec![false; self.nrows];
        for &r in &self.row_idx {
            seen[r] = true;
        }
        seen.iter()
            .enumerate()
            .filter_map(|(r, &s)| s.then_some(r))
            .collect()
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut position = vec![None; self.nrows];
        for (new, &old) in rows.iter().enumerate() {
            position[old] = Some(new);
        }
        let triplets = self
            .triplets()
            .filter_map(|(r, c, v)| position[r].map(|nr| (nr, c, v)));
        Self::from_triplets(rows.len(), self.ncols, triplets)
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let triplets: Vec<_> = cols
            .iter()
            .enumerate()
            .flat_map(|(nc, &oc)| {
                let (rows, vals) = self.column(oc);
                rows.iter().zip(vals).map(move |(&r, &v)| (r, nc, v))
            })
            .collect();
        Self::from_triplets(self.nrows, cols.len(), triplets)
    }

    /// Copy with the entry at `(row, col)` replaced; zero removes it.
    pub fn with_entry(&self, row: usize, col: usize, value: T) -> Self {
        let triplets = self
            .triplets()
            .filter(|&(r, c, _)| (r, c) != (row, col))
            .chain(std::iter::once((row, col, value)));
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut dense = DenseMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            dense[(r, c)] = v;
        }
        dense
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        SparseMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().map(|(r, c, v)| (r, c, f(v))),
        )
    }
}
