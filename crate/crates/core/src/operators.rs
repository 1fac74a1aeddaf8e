//! Periodic centred finite-difference operators on uniform 1D and 2D grids.
//!
//! All operators are stored in compressed sparse row form. The 1D operators are
//! built from circulant stencils; the 2D operators are Kronecker products of the
//! 1D ones with the state ordered x-major, i.e. `u[i][j]` lives at `i * ny + j`.

use faer::Mat;

use crate::error::{check_dim, Error, Result};

/// Uniform periodic partition of `[a, b)` into `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("bad interval [{a}, {b}]")));
        }
        Ok(Self { a, b, n })
    }

    /// Grid with spacing `h`; the interval length must be an integer multiple of `h`.
    pub fn with_spacing(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let cells = (b - a) / h;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "length {} is not a multiple of spacing {h}",
                b - a
            )));
        }
        Self::new(a, b, n as usize)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Uniform periodic rectangular grid on `[a, b) x [c, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    x: Grid1D,
    y: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, y: Grid1D) -> Self {
        Self { x, y }
    }

    pub fn x(&self) -> &Grid1D {
        &self.x
    }

    pub fn y(&self) -> &Grid1D {
        &self.y
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index of node `(i, j)`; x-major blocks of length `ny`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx() && j < self.ny());
        i * self.ny() + j
    }

    /// Inverse of [`Grid2D::index`].
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.ny(), k % self.ny())
    }

    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.y.spacing()
    }
}

/// Symmetry class recorded at construction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Skew,
    Symmetric,
    General,
}

/// Sparse matrix in compressed sparse row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetry: Symmetry,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
        symmetry: Symmetry,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            // stable sort keeps the summation order of duplicates deterministic
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                match col_idx.last() {
                    Some(&last) if last == j && col_idx.len() > *row_ptr.last().unwrap() => {
                        *values.last_mut().unwrap() += v;
                    }
                    _ => {
                        col_idx.push(j);
                        values.push(v);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetry,
        }
    }

    /// Circulant matrix with `stencil` entries `(offset, value)`: `A[i][(i + offset) mod n] = value`.
    pub fn circulant(n: usize, stencil: &[(isize, f64)], symmetry: Symmetry) -> Self {
        let mut triplets = Vec::with_capacity(n * stencil.len());
        for i in 0..n {
            for &(off, v) in stencil {
                let j = (i as isize + off).rem_euclid(n as isize) as usize;
                triplets.push((i, j, v));
            }
        }
        Self::from_triplets(n, n, &triplets, symmetry)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![c; n],
            symmetry: Symmetry::Symmetric,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        let symmetry = if nrows == ncols {
            Symmetry::Symmetric
        } else {
            Symmetry::General
        };
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetry,
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

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub(crate) fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    /// Iterates `(col, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Iterates all stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// `y += A x`.
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi += acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("operator application", self.ncols, x.len())?;
        let mut y = vec![0.0; self.nrows];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = self.entries().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets, self.symmetry)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        check_dim("operator sum (rows)", self.nrows, other.nrows)?;
        check_dim("operator sum (cols)", self.ncols, other.ncols)?;
        let symmetry = if self.symmetry == other.symmetry {
            self.symmetry
        } else {
            Symmetry::General
        };
        let mut triplets: Vec<_> = self.entries().collect();
        triplets.extend(other.entries().map(|(i, j, v)| (i, j, c * v)));
        Ok(Self::from_triplets(self.nrows, self.ncols, &triplets, symmetry))
    }

    /// Sparse product `self * rhs`; each output entry is accumulated in ascending inner index.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        check_dim("operator product", self.ncols, rhs.nrows)?;
        let mut acc = vec![0.0; rhs.ncols];
        let mut marker = vec![usize::MAX; rhs.ncols];
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: rhs.ncols,
            row_ptr,
            col_idx,
            values,
            symmetry: Symmetry::General,
        })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz() * rhs.nnz());
        for (i, j, a) in self.entries() {
            for (k, l, b) in rhs.entries() {
                triplets.push((i * rhs.nrows + k, j * rhs.ncols + l, a * b));
            }
        }
        let symmetry = match (self.symmetry, rhs.symmetry) {
            (Symmetry::Symmetric, s) | (s, Symmetry::Symmetric) => s,
            (Symmetry::Skew, Symmetry::Skew) => Symmetry::Symmetric,
            _ => Symmetry::General,
        };
        Self::from_triplets(
            self.nrows * rhs.nrows,
            self.ncols * rhs.ncols,
            &triplets,
            symmetry,
        )
    }

    /// Places `self` at row offset `row_offset` inside a `nrows x ncols` zero matrix.
    pub fn embed(&self, nrows: usize, ncols: usize, row_offset: usize, col_offset: usize) -> Self {
        assert!(row_offset + self.nrows <= nrows && col_offset + self.ncols <= ncols);
        let triplets: Vec<_> = self
            .entries()
            .map(|(i, j, v)| (i + row_offset, j + col_offset, v))
            .collect();
        Self::from_triplets(nrows, ncols, &triplets, Symmetry::General)
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[&Self]) -> Self {
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut triplets = Vec::new();
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            triplets.extend(b.entries().map(|(i, j, v)| (i + r0, j + c0, v)));
            r0 += b.nrows;
            c0 += b.ncols;
        }
        let symmetry = if blocks.iter().all(|b| b.symmetry == blocks[0].symmetry) {
            blocks.first().map_or(Symmetry::General, |b| b.symmetry)
        } else {
            Symmetry::General
        };
        Self::from_triplets(nrows, ncols, &triplets, symmetry)
    }

    /// Dense materialization.
    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }

    /// `A * X` for a dense `X`.
    pub fn mul_dense(&self, x: faer::MatRef<'_, f64>) -> Result<Mat<f64>> {
        check_dim("sparse-dense product", self.ncols, x.nrows())?;
        let mut out = Mat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.col(c);
            let mut oc = out.col_mut(c);
            for i in 0..self.nrows {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * xc[self.col_idx[k]];
                }
                oc[i] = acc;
            }
        }
        Ok(out)
    }

    /// Largest entry of `|A + s Aᵀ|`, with `s = 1` for the skew residual and `s = -1` for the symmetric one.
    fn symmetry_residual(&self, s: f64) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.entries()
            .map(|(i, j, v)| (v + s * self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `max |A + Aᵀ|`.
    pub fn skew_residual(&self) -> f64 {
        self.symmetry_residual(1.0)
    }

    /// `max |A - Aᵀ|`.
    pub fn symmetric_residual(&self) -> f64 {
        self.symmetry_residual(-1.0)
    }

    /// Checks the recorded symmetry flag against the stored entries (exactly).
    pub fn symmetry_is_consistent(&self) -> bool {
        match self.symmetry {
            Symmetry::Skew => self.skew_residual() == 0.0,
            Symmetry::Symmetric => self.symmetric_residual() == 0.0,
            Symmetry::General => true,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for (_, j, v) in self.entries() {
            s[j] += v;
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Centred first derivative: `(u[i+1] - u[i-1]) / (2h)` with periodic wrap.
pub fn periodic_d1(grid: &Grid1D) -> SparseOperator {
    let c = 1.0 / (2.0 * grid.spacing());
    SparseOperator::circulant(grid.len(), &[(-1, -c), (1, c)], Symmetry::Skew)
}

/// Centred second derivative: `(u[i+1] - 2u[i] + u[i-1]) / h²` with periodic wrap.
pub fn periodic_d2(grid: &Grid1D) -> SparseOperator {
    let h2 = grid.spacing() * grid.spacing();
    SparseOperator::circulant(
        grid.len(),
        &[(-1, 1.0 / h2), (0, -2.0 / h2), (1, 1.0 / h2)],
        Symmetry::Symmetric,
    )
}

/// Third-derivative approximation `D₃ = D₁ D₂` by explicit sparse product.
pub fn d3_product(d1: &SparseOperator, d2: &SparseOperator) -> Result<SparseOperator> {
    check_dim("d3 product", d1.ncols(), d2.nrows())?;
    check_dim("d3 product (square)", d1.nrows(), d2.ncols())?;
    Ok(d1.matmul(d2)?.with_symmetry(Symmetry::Skew))
}

/// The five 2D operators used by the Zakharov-Kuznetsov model.
#[derive(Debug, Clone)]
pub struct Operators2D {
    pub dx: SparseOperator,
    pub dxx: SparseOperator,
    pub dyy: SparseOperator,
    pub dxxx: SparseOperator,
    pub dxyy: SparseOperator,
}

/// `Dx = D₁⊗I_y`, `Dxx = D₂⊗I_y`, `Dyy = I_x⊗D₂`, `Dxxx = Dx Dxx`, `Dxyy = Dx Dyy`.
pub fn kron_2d(grid: &Grid2D) -> Result<Operators2D> {
    let iy = SparseOperator::identity(grid.ny());
    let ix = SparseOperator::identity(grid.nx());
    let dx = periodic_d1(grid.x()).kron(&iy);
    let dxx = periodic_d2(grid.x()).kron(&iy);
    let dyy = ix.kron(&periodic_d2(grid.y()));
    let dxxx = dx.matmul(&dxx)?.with_symmetry(Symmetry::Skew);
    let dxyy = dx.matmul(&dyy)?.with_symmetry(Symmetry::Skew);
    Ok(Operators2D {
        dx,
        dxx,
        dyy,
        dxxx,
        dxyy,
    })
}
