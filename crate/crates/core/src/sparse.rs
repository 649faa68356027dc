//! Compressed sparse row storage for preference vectors.
//!
//! Coordinates that are absent are zero. Indices within a row are strictly
//! increasing.

/// Borrowed view of one sparse row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseVec<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> SparseVec<'a> {
    pub fn new(indices: &'a [u32], values: &'a [f64]) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        SparseVec { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_owned(&self) -> SparseVector {
        SparseVector {
            indices: self.indices.to_vec(),
            values: self.values.to_vec(),
        }
    }

    /// Expands to a dense vector of length `dim`.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

/// Owned sparse vector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    /// Keeps the nonzero entries of a dense slice.
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut out = SparseVector::default();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                out.indices.push(i as u32);
                out.values.push(v);
            }
        }
        out
    }

    pub fn view(&self) -> SparseVec<'_> {
        SparseVec::new(&self.indices, &self.values)
    }
}

/// Row-major sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    n_cols: usize,
    row_ptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseRows {
    pub fn new(n_cols: usize) -> Self {
        SparseRows {
            n_cols,
            row_ptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Dense rows stored with every coordinate, zeros included.
    ///
    /// Used for ambient-space points, where a literal zero coordinate is
    /// ordinary data.
    pub fn from_dense_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut out = SparseRows::new(n_cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), n_cols, "ragged dense rows");
            out.indices.extend(0..n_cols as u32);
            out.values.extend_from_slice(r);
            out.row_ptr.push(out.indices.len());
        }
        out
    }

    /// Appends a row given as `(column, value)` pairs sorted by column.
    pub fn push_row<I: IntoIterator<Item = (u32, f64)>>(&mut self, entries: I) {
        for (c, v) in entries {
            debug_assert!((c as usize) < self.n_cols);
            self.indices.push(c);
            self.values.push(v);
        }
        self.row_ptr.push(self.indices.len());
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> SparseVec<'_> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        SparseVec::new(&self.indices[a..b], &self.values[a..b])
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = SparseVec<'_>> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
