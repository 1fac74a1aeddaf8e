use crate::error::Result;
use crate::linalg::{SparsePattern, SparseResolvent};
use crate::operators::{SparseOperator, Symmetry};

use super::SkewGradientModel;

/// Fixed sparsity pattern of `I - c f'(q)`.
///
/// `f'(q) = S L + Σₜ S E_out Kₜ (diag(q_b) P_a + diag(q_a) P_b)`; the `S L` part is
/// constant and the remaining entries are state-scaled copies of `S E_out Kₜ`.
/// Only the scaled entries change between steps.
#[derive(Debug, Clone)]
pub struct JacobianPattern {
    pattern: SparsePattern,
    /// `S L` value per stored entry.
    base: Vec<f64>,
    /// Stored-entry index of each diagonal element.
    diag: Vec<usize>,
    /// `(entry, coefficient, state index)`: entry += coefficient · q[state index].
    scaled: Vec<(usize, f64, usize)>,
}

enum Contribution {
    Const(f64),
    Scaled(f64, usize),
    Diagonal,
}

impl JacobianPattern {
    pub fn new(model: &SkewGradientModel) -> Result<Self> {
        let n = model.dim();
        let layout = model.layout();
        // (col, row, contribution)
        let mut items: Vec<(usize, usize, Contribution)> = Vec::new();
        for (i, j, v) in model.linear_rhs().entries() {
            items.push((j, i, Contribution::Const(v)));
        }
        for i in 0..n {
            items.push((i, i, Contribution::Diagonal));
        }
        for (t, b) in model.gradient_form().terms.iter().zip(model.term_rhs()) {
            let (oa, ob) = (layout.offset(t.a), layout.offset(t.b));
            for (i, k, v) in b.entries() {
                items.push((oa + k, i, Contribution::Scaled(v, ob + k)));
                items.push((ob + k, i, Contribution::Scaled(v, oa + k)));
            }
        }
        items.sort_by_key(|&(c, r, _)| (c, r));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut base = Vec::new();
        let mut diag = vec![usize::MAX; n];
        let mut scaled = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (c, r, contrib) in items {
            if last != Some((c, r)) {
                row_idx.push(r);
                base.push(0.0);
                col_ptr[c + 1] = row_idx.len();
                last = Some((c, r));
            }
            let k = row_idx.len() - 1;
            match contrib {
                Contribution::Const(v) => base[k] += v,
                Contribution::Scaled(v, s) => scaled.push((k, v, s)),
                Contribution::Diagonal => diag[r] = k,
            }
        }
        // columns without entries inherit the previous pointer
        for c in 1..=n {
            col_ptr[c] = col_ptr[c].max(col_ptr[c - 1]);
        }
        Ok(Self {
            pattern: SparsePattern::new(n, col_ptr, row_idx)?,
            base,
            diag,
            scaled,
        })
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    /// Stored values of `f'(q)` on the pattern.
    fn jacobian_values(&self, q: &[f64]) -> Vec<f64> {
        let mut vals = self.base.clone();
        for &(k, v, s) in &self.scaled {
            vals[k] += v * q[s];
        }
        vals
    }

    /// `f'(q)` as a row-compressed operator.
    pub fn jacobian(&self, q: &[f64]) -> SparseOperator {
        let vals = self.jacobian_values(q);
        let (col_ptr, row_idx) = (self.pattern.col_ptr(), self.pattern.row_idx());
        let n = self.pattern.dim();
        let mut triplets = Vec::with_capacity(vals.len());
        for c in 0..n {
            for k in col_ptr[c]..col_ptr[c + 1] {
                triplets.push((row_idx[k], c, vals[k]));
            }
        }
        SparseOperator::from_triplets(n, n, &triplets, Symmetry::General)
    }

    /// Factorizes `I - c f'(q)`.
    pub fn factorize_shifted(&self, q: &[f64], c: f64) -> Result<SparseResolvent> {
        let mut vals = self.jacobian_values(q);
        vals.iter_mut().for_each(|v| *v *= -c);
        for &k in &self.diag {
            vals[k] += 1.0;
        }
        self.pattern.factorize(&vals)
    }
}
