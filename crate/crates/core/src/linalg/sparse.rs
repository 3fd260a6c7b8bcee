//! Triplet assembly, CSR storage and the sparse direct solver.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Relative residual accepted from the direct solver.
pub const SOLVE_RTOL: f64 = 1e-10;

/// Unordered `(row, col, value)` entries; duplicates are summed by
/// [`to_csr`].
#[derive(Debug, Clone, Default)]
pub struct TripletBuffer {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuffer {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuffer {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, capacity: usize) -> Self {
        TripletBuffer {
            nrows,
            ncols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    /// Adds `values[i][j]` at `(rows[i], cols[j])`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], values: &[f64]) {
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                self.entries.push((r, c, values[i * cols.len() + j]));
            }
        }
    }

    /// Appends `other` shifted by `(row_offset, col_offset)`.
    pub fn extend_shifted(&mut self, other: &CsrMatrix, row_offset: usize, col_offset: usize) {
        for (r, c, v) in other.iter() {
            self.entries.push((r + row_offset, c + col_offset, v));
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

pub fn to_csr(t: &TripletBuffer) -> Result<CsrMatrix> {
    for &(row, col, _) in &t.entries {
        if row >= t.nrows || col >= t.ncols {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                nrows: t.nrows,
                ncols: t.ncols,
            });
        }
    }
    // counting sort by row, then sort columns within each row
    let mut row_ptr = vec![0usize; t.nrows + 1];
    for &(r, _, _) in &t.entries {
        row_ptr[r + 1] += 1;
    }
    for r in 0..t.nrows {
        row_ptr[r + 1] += row_ptr[r];
    }
    let mut next = row_ptr.clone();
    let mut by_row = vec![(0usize, 0.0f64); t.entries.len()];
    for &(r, c, v) in &t.entries {
        by_row[next[r]] = (c, v);
        next[r] += 1;
    }
    let mut out_ptr = Vec::with_capacity(t.nrows + 1);
    let mut col_idx = Vec::with_capacity(t.entries.len());
    let mut values = Vec::with_capacity(t.entries.len());
    out_ptr.push(0);
    for r in 0..t.nrows {
        let row = &mut by_row[row_ptr[r]..row_ptr[r + 1]];
        // stable sort keeps the summation order of duplicates deterministic
        row.sort_by_key(|&(c, _)| c);
        let mut i = 0;
        while i < row.len() {
            let c = row[i].0;
            let mut s = 0.0;
            while i < row.len() && row[i].0 == c {
                s += row[i].1;
                i += 1;
            }
            col_idx.push(c);
            values.push(s);
        }
        out_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix {
        nrows: t.nrows,
        ncols: t.ncols,
        row_ptr: out_ptr,
        col_idx,
        values,
    })
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in mul_vec");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `Aᵀ x`
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "dimension mismatch in mul_transpose_vec");
        let mut out = vec![0.0; self.ncols];
        for (r, c, v) in self.iter() {
            out[c] += v * x[r];
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = TripletBuffer::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.iter() {
            t.push(c, r, v);
        }
        to_csr(&t).expect("transposed indices are in range")
    }

    /// Largest `|A[i][j] - A[j][i]|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// Submatrix on the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (j, &c) in cols.iter().enumerate() {
            col_map[c] = j;
        }
        let mut t = TripletBuffer::new(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_map[c] != usize::MAX {
                    t.push(i, col_map[c], v);
                }
            }
        }
        to_csr(&t).expect("selected indices are in range")
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::InvalidArgument(format!("sparse conversion failed: {e:?}")))
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sparse LU factorization with partial pivoting and a fill-reducing column
/// ordering, reusable across right-hand sides.
pub struct SparseLu {
    matrix: CsrMatrix,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu")
            .field("n", &self.matrix.nrows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows, a.ncols
            )));
        }
        let lu = a
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::InvalidArgument(format!("sparse LU failed: {e:?}")))?;
        Ok(SparseLu {
            matrix: a.clone(),
            lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Solves `A x = b` with one step of iterative refinement. A relative
    /// residual above [`SOLVE_RTOL`] (or a non-finite solution) is reported
    /// as a singular matrix at the row with the largest residual.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = self.raw_solve(b);
        let mut r = self.residual(&x, b);
        if norm2(&r) > 0.1 * SOLVE_RTOL * bnorm {
            let dx = self.raw_solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            r = self.residual(&x, b);
        }
        let rel = norm2(&r) / bnorm;
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular {
                position: bad,
                residual: f64::INFINITY,
            });
        }
        if rel > SOLVE_RTOL {
            let position = (0..n)
                .max_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs()))
                .unwrap_or(0);
            return Err(Error::Singular {
                position,
                residual: rel,
            });
        }
        Ok(x)
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let ax = self.matrix.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    }
}

pub fn solve_sparse(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SparseLu::factor(a)?.solve(b)
}

/// A square system with some unknowns fixed by Dirichlet conditions,
/// eliminated symmetrically: constrained rows and columns are replaced by
/// identity entries and the removed column couplings are kept in `lift` to
/// move prescribed values to the right-hand side.
#[derive(Debug)]
pub struct ConstrainedSystem {
    constrained: Vec<bool>,
    lift: CsrMatrix,
    solver: SparseLu,
}

impl ConstrainedSystem {
    pub fn new(full: &CsrMatrix, constrained: Vec<bool>) -> Result<Self> {
        let n = full.nrows();
        if constrained.len() != n || full.ncols() != n {
            return Err(Error::InvalidArgument("constraint mask does not match matrix".into()));
        }
        let mut reduced = TripletBuffer::with_capacity(n, n, full.nnz());
        let mut lift = TripletBuffer::new(n, n);
        for (r, c, v) in full.iter() {
            match (constrained[r], constrained[c]) {
                (false, false) => reduced.push(r, c, v),
                (false, true) => lift.push(r, c, v),
                _ => {}
            }
        }
        for (i, _) in constrained.iter().enumerate().filter(|(_, &c)| c) {
            reduced.push(i, i, 1.0);
        }
        Ok(ConstrainedSystem {
            solver: SparseLu::factor(&to_csr(&reduced)?)?,
            lift: to_csr(&lift)?,
            constrained,
        })
    }

    pub fn dim(&self) -> usize {
        self.constrained.len()
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    /// The eliminated matrix.
    pub fn matrix(&self) -> &CsrMatrix {
        self.solver.matrix()
    }

    /// Solves with load `rhs`; `values` supplies the prescribed value of
    /// every constrained unknown (other entries are ignored).
    pub fn solve(&self, rhs: &[f64], values: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n || values.len() != n {
            return Err(Error::InvalidArgument("vector lengths do not match system".into()));
        }
        let fixed: Vec<f64> = (0..n)
            .map(|i| if self.constrained[i] { values[i] } else { 0.0 })
            .collect();
        let shift = self.lift.mul_vec(&fixed);
        let b: Vec<f64> = (0..n)
            .map(|i| {
                if self.constrained[i] {
                    fixed[i]
                } else {
                    rhs[i] - shift[i]
                }
            })
            .collect();
        let mut x = self.solver.solve(&b)?;
        for i in 0..n {
            if self.constrained[i] {
                x[i] = fixed[i];
            }
        }
        Ok(x)
    }
}
