use crate::error::{Error, Result};
use crate::ordering::Permutation;

/// Symmetric sparse matrix holding only its lower triangle in compressed
/// column form.
///
/// Row indices inside a column are strictly increasing and every column
/// starts with its (strictly positive) diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCsc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricCsc {
    /// Builds a matrix from raw compressed-column arrays, checking every
    /// structural invariant.
    pub fn new(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let m = Self { n, col_ptr, row_idx, values };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from `(row, col, value)` entries with zero-based
    /// indices. Upper-triangle entries are mirrored into the lower triangle and
    /// duplicates are summed.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut lower: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::Structure(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            lower.push((c, r, v));
        }
        lower.sort_by_key(|a| (a.0, a.1));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(lower.len());
        let mut values: Vec<f64> = Vec::with_capacity(lower.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in lower {
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((c, r));
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            values.push(v);
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::new(n, col_ptr, row_idx, values)
    }

    /// Skips validation; callers guarantee canonical form.
    pub(crate) fn from_parts_unchecked(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(col_ptr.len(), n + 1);
        Self { n, col_ptr, row_idx, values }
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.col_ptr.len() != n + 1 {
            return Err(Error::Structure(format!("col_ptr has length {}, expected {}", self.col_ptr.len(), n + 1)));
        }
        if self.col_ptr[0] != 0 || self.col_ptr[n] != self.row_idx.len() || self.row_idx.len() != self.values.len() {
            return Err(Error::Structure("col_ptr does not match the entry arrays".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
            if lo > hi {
                return Err(Error::Structure(format!("col_ptr decreases at column {j}")));
            }
            if lo == hi || self.row_idx[lo] != j {
                return Err(Error::Structure(format!("missing diagonal entry ({j}, {j})")));
            }
            let d = self.values[lo];
            if !(d > 0.0) {
                return Err(Error::Structure(format!("non-positive diagonal entry {d} at ({j}, {j})")));
            }
            for p in lo + 1..hi {
                if self.row_idx[p] <= self.row_idx[p - 1] {
                    return Err(Error::Structure(format!("row indices not strictly increasing in column {j}")));
                }
                if self.row_idx[p] >= n {
                    return Err(Error::Structure(format!("row index {} out of range", self.row_idx[p])));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored (lower-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Nonzeros of the full symmetric pattern.
    pub fn full_nnz(&self) -> usize {
        2 * self.nnz() - self.n
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j` (rows `>= j`).
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Stored entries as `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            let (rows, vals) = self.column(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    /// Value at `(i, j)` of the symmetric matrix (zero if not stored).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let (rows, vals) = self.column(c);
        rows.binary_search(&r).map(|p| vals[p]).unwrap_or(0.0)
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.iter().map(|(i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum::<f64>().sqrt()
    }

    /// `y = A x` using both triangles.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (i, j, v) in self.iter() {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// Full symmetric dense copy, column-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for (i, j, v) in self.iter() {
            d[i + j * n] = v;
            d[j + i * n] = v;
        }
        d
    }

    pub fn permute(&self, p: &Permutation) -> Result<SymmetricCsc> {
        permute_symmetric(self, p)
    }
}

/// Symmetric permutation `B[p(i), p(j)] = A[i, j]`, re-canonicalised to the
/// lower triangle.
pub fn permute_symmetric(m: &SymmetricCsc, p: &Permutation) -> Result<SymmetricCsc> {
    let n = m.n();
    if p.len() != n {
        return Err(Error::InvalidArgument(format!("permutation of length {} for a matrix of order {n}", p.len())));
    }
    let fwd = p.forward();
    let mut counts = vec![0usize; n + 1];
    for (i, j, _) in m.iter() {
        counts[fwd[i].min(fwd[j]) + 1] += 1;
    }
    for c in 0..n {
        counts[c + 1] += counts[c];
    }
    let col_ptr = counts.clone();
    let mut next = counts;
    let mut row_idx = vec![0usize; m.nnz()];
    let mut values = vec![0.0; m.nnz()];
    for (i, j, v) in m.iter() {
        let (a, b) = (fwd[i], fwd[j]);
        let (r, c) = if a >= b { (a, b) } else { (b, a) };
        row_idx[next[c]] = r;
        values[next[c]] = v;
        next[c] += 1;
    }
    for c in 0..n {
        let range = col_ptr[c]..col_ptr[c + 1];
        let mut col: Vec<(usize, f64)> =
            row_idx[range.clone()].iter().copied().zip(values[range.clone()].iter().copied()).collect();
        col.sort_unstable_by_key(|e| e.0);
        for (k, (r, v)) in col.into_iter().enumerate() {
            row_idx[range.start + k] = r;
            values[range.start + k] = v;
        }
    }
    Ok(SymmetricCsc::from_parts_unchecked(n, col_ptr, row_idx, values))
}
