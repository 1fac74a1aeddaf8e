//! Linear solves behind the time stepper: a sparse LU that reuses one symbolic
//! analysis across steps, a dense LU for reduced systems, and a 1-norm
//! condition estimator shared by both.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, MatMut, MatRef};

use crate::error::{Error, Result};

/// Condition numbers above this make a step fail.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Factorization of `I - (dt/2) f'(q)` for one step.
pub trait Resolvent {
    fn dim(&self) -> usize;
    fn solve_in_place(&self, b: &mut [f64]);
    fn solve_transpose_in_place(&self, b: &mut [f64]);
    /// 1-norm of the factorized matrix.
    fn norm1(&self) -> f64;

    /// Hager–Higham estimate of the 1-norm condition number.
    fn condition_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 1.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            if !est.is_finite() {
                return f64::INFINITY;
            }
            let mut z: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.solve_transpose_in_place(&mut z);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bj, bv), (j, &v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        est * self.norm1()
    }
}

/// Column-compressed pattern with a reusable symbolic LU analysis.
#[derive(Debug, Clone)]
pub struct SparsePattern {
    symbolic: SymbolicSparseColMat<usize>,
    lu: SymbolicLu<usize>,
}

impl SparsePattern {
    /// `col_ptr`/`row_idx` in CSC layout with sorted rows per column.
    pub fn new(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>) -> Result<Self> {
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| Error::Decomposition(format!("symbolic LU: {e:?}")))?;
        Ok(Self { symbolic, lu })
    }

    pub fn nnz(&self) -> usize {
        self.symbolic.row_idx().len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        self.symbolic.col_ptr()
    }

    pub fn row_idx(&self) -> &[usize] {
        self.symbolic.row_idx()
    }

    pub fn dim(&self) -> usize {
        self.symbolic.nrows()
    }

    /// Numeric factorization for the values laid out on this pattern.
    pub fn factorize(&self, values: &[f64]) -> Result<SparseResolvent> {
        let mat = SparseColMatRef::new(self.symbolic.as_ref(), values);
        let lu = Lu::try_new_with_symbolic(self.lu.clone(), mat)
            .map_err(|e| Error::Decomposition(format!("sparse LU: {e:?}")))?;
        let col_ptr = self.symbolic.col_ptr();
        let norm1 = (0..self.dim())
            .map(|j| values[col_ptr[j]..col_ptr[j + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(SparseResolvent {
            lu,
            n: self.dim(),
            norm1,
        })
    }
}

pub struct SparseResolvent {
    lu: Lu<usize, f64>,
    n: usize,
    norm1: f64,
}

impl Resolvent for SparseResolvent {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        self.lu
            .solve_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
    }

    fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        self.lu
            .solve_transpose_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
    }

    fn norm1(&self) -> f64 {
        self.norm1
    }
}

/// Dense LU with partial pivoting.
pub struct DenseResolvent {
    lu: PartialPivLu<f64>,
    n: usize,
    norm1: f64,
}

impl DenseResolvent {
    pub fn new(a: MatRef<'_, f64>) -> Self {
        let norm1 = (0..a.ncols())
            .map(|j| (0..a.nrows()).map(|i| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            lu: a.partial_piv_lu(),
            n: a.nrows(),
            norm1,
        }
    }
}

impl Resolvent for DenseResolvent {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        self.lu
            .solve_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
    }

    fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        self.lu
            .solve_transpose_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
    }

    fn norm1(&self) -> f64 {
        self.norm1
    }
}

/// `y = A x` for a dense matrix.
pub fn dense_matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// `y = Aᵀ x` for a dense matrix.
pub fn dense_matvec_t(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            (0..a.nrows()).map(|i| col[i] * x[i]).sum()
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Frobenius norm of a dense matrix.
pub fn frobenius(a: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        let c = a.col(j);
        for i in 0..a.nrows() {
            s += c[i] * c[i];
        }
    }
    s.sqrt()
}

/// `max |A + Aᵀ|` over a square dense matrix.
pub fn dense_skew_residual(a: MatRef<'_, f64>) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            r = r.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    r
}

/// `max |A|` over a dense matrix.
pub fn dense_max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut r: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            r = r.max(a[(i, j)].abs());
        }
    }
    r
}

/// `Mat` from a column-major buffer.
pub fn mat_from_columns(data: &[f64], nrows: usize, ncols: usize) -> Mat<f64> {
    MatRef::from_column_major_slice(data, nrows, ncols).to_owned()
}

/// Worker count for dense kernels; `1` runs them on the calling thread.
pub fn set_dense_threads(threads: usize) {
    let par = match std::num::NonZeroUsize::new(threads) {
        Some(n) if n.get() > 1 => faer::Par::Rayon(n),
        _ => faer::Par::Seq,
    };
    faer::set_global_parallelism(par);
}
