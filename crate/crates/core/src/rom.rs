//! Galerkin reduction of a skew-gradient model onto a POD basis.
//!
//! The reduced system is `q_r' = Ŝ (L̂ q_r + Σₜ E_out Ŵₜ (q_a ⊗ q_b))` with
//! `Ŝ = VᵀSV`, `L̂ = VᵀLV` and `Ŵₜ = V_outᵀ Kₜ Cₜ`, where row `i` of `Cₜ` is the
//! Kronecker product of row `i` of `V_a` with row `i` of `V_b`.

use std::ops::Range;

use faer::{Mat, MatRef};

use crate::error::{check_dim, Error, Result};
use crate::integrator::{HamiltonianSystem, QuadraticSystem};
use crate::linalg::{dense_matvec, dense_matvec_t, dense_max_abs, dense_skew_residual, dot, DenseResolvent};
use crate::models::SkewGradientModel;
use crate::pod::Basis;

/// `C` with `C (x ⊗ y) = (V_a x) ⊙ (V_b y)`, shape `N × (n_a n_b)`.
///
/// Column `p n_b + q` is `V_a[:, p] ⊙ V_b[:, q]`.
pub fn reduced_quadratic_tensor(va: MatRef<'_, f64>, vb: MatRef<'_, f64>) -> Result<Mat<f64>> {
    check_dim("quadratic tensor rows", va.nrows(), vb.nrows())?;
    let (na, nb) = (va.ncols(), vb.ncols());
    let mut c = Mat::<f64>::zeros(va.nrows(), na * nb);
    for p in 0..na {
        let a = va.col(p);
        for q in 0..nb {
            let b = vb.col(q);
            let mut col = c.col_mut(p * nb + q);
            for i in 0..va.nrows() {
                col[i] = a[i] * b[i];
            }
        }
    }
    Ok(c)
}

/// One reduced quadratic gradient term.
#[derive(Debug, Clone)]
pub struct ReducedTerm {
    /// `n_out × (n_a n_b)`.
    pub tensor: Mat<f64>,
    pub a: Range<usize>,
    pub b: Range<usize>,
    pub out: Range<usize>,
}

impl ReducedTerm {
    /// `out += Ŵ (x ⊗ y)`, contracted one block at a time without forming `x ⊗ y`.
    fn apply_add(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let nb = y.len();
        for (p, &xp) in x.iter().enumerate() {
            if xp == 0.0 {
                continue;
            }
            for (q, &yq) in y.iter().enumerate() {
                let c = xp * yq;
                let col = self.tensor.col(p * nb + q);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += col[i] * c;
                }
            }
        }
    }

    /// `∂/∂x` and `∂/∂y` of `Ŵ (x ⊗ y)`.
    fn partials(&self, x: &[f64], y: &[f64]) -> (Mat<f64>, Mat<f64>) {
        let (na, nb, no) = (x.len(), y.len(), self.tensor.nrows());
        let mut dx = Mat::<f64>::zeros(no, na);
        let mut dy = Mat::<f64>::zeros(no, nb);
        for p in 0..na {
            for q in 0..nb {
                let col = self.tensor.col(p * nb + q);
                for i in 0..no {
                    dx[(i, p)] += col[i] * y[q];
                    dy[(i, q)] += col[i] * x[p];
                }
            }
        }
        (dx, dy)
    }
}

/// Reduced skew-gradient model evaluated entirely in reduced coordinates.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    s_hat: Mat<f64>,
    l_hat: Mat<f64>,
    terms: Vec<ReducedTerm>,
    weight: f64,
}

/// Projects `model` onto `basis`.
pub fn reduce(model: &SkewGradientModel, basis: &Basis) -> Result<ReducedModel> {
    if basis.layout() != model.layout() {
        return Err(Error::LayoutMismatch(format!(
            "basis fields {:?} × {} do not match model fields {:?} × {}",
            basis.layout().names(),
            basis.layout().field_len(),
            model.layout().names(),
            model.layout().field_len()
        )));
    }
    let v = basis.matrix();
    let s_hat = v.transpose() * model.skew().mul_dense(v.as_ref())?;
    let l_hat = v.transpose() * model.gradient_form().linear.mul_dense(v.as_ref())?;
    let terms = model
        .gradient_form()
        .terms
        .iter()
        .map(|t| {
            let (va, ra) = basis.field_view(t.a);
            let (vb, rb) = basis.field_view(t.b);
            let (vo, ro) = basis.field_view(t.out);
            let c = reduced_quadratic_tensor(va, vb)?;
            let kc = t.coeff.mul_dense(c.as_ref())?;
            Ok(ReducedTerm {
                tensor: vo.transpose() * kc,
                a: ra,
                b: rb,
                out: ro,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReducedModel {
        s_hat,
        l_hat,
        terms,
        weight: model.weight(),
    })
}

impl ReducedModel {
    pub fn dim(&self) -> usize {
        self.s_hat.nrows()
    }

    pub fn s_hat(&self) -> MatRef<'_, f64> {
        self.s_hat.as_ref()
    }

    pub fn l_hat(&self) -> MatRef<'_, f64> {
        self.l_hat.as_ref()
    }

    pub fn terms(&self) -> &[ReducedTerm] {
        &self.terms
    }

    /// `‖Ŝ + Ŝᵀ‖_max / ‖Ŝ‖_max`.
    pub fn skew_defect(&self) -> f64 {
        let m = dense_max_abs(self.s_hat.as_ref());
        if m == 0.0 {
            0.0
        } else {
            dense_skew_residual(self.s_hat.as_ref()) / m
        }
    }

    /// Reduced weighted gradient `L̂ q_r + Σₜ E_out Ŵₜ (q_a ⊗ q_b)`.
    pub fn gradient(&self, q_r: &[f64]) -> Vec<f64> {
        let mut g = dense_matvec(self.l_hat.as_ref(), q_r);
        for t in &self.terms {
            t.apply_add(&q_r[t.a.clone()], &q_r[t.b.clone()], &mut g[t.out.clone()]);
        }
        g
    }

    /// Tensorial reduced right-hand side; cost independent of the full dimension.
    pub fn rhs_tensorial(&self, q_r: &[f64]) -> Result<Vec<f64>> {
        check_dim("reduced rhs", self.dim(), q_r.len())?;
        Ok(dense_matvec(self.s_hat.as_ref(), &self.gradient(q_r)))
    }

    /// Reduced Jacobian `Ŝ (L̂ + Σₜ E_out ∂Ŵₜ(q_a ⊗ q_b))`.
    pub fn jacobian(&self, q_r: &[f64]) -> Mat<f64> {
        let mut h = self.l_hat.clone();
        for t in &self.terms {
            let (dx, dy) = t.partials(&q_r[t.a.clone()], &q_r[t.b.clone()]);
            for (d, cols) in [(dx, t.a.clone()), (dy, t.b.clone())] {
                for (j, c) in cols.enumerate() {
                    for (i, r) in t.out.clone().enumerate() {
                        h[(r, c)] += d[(i, j)];
                    }
                }
            }
        }
        &self.s_hat * h
    }

    /// `Ĥ(q_r) = H(V q_r)`, using that `H` is quadratic plus cubic.
    pub fn hamiltonian(&self, q_r: &[f64]) -> f64 {
        let quad = 0.5 * dot(q_r, &dense_matvec(self.l_hat.as_ref(), q_r));
        let mut cubic = 0.0;
        for t in &self.terms {
            let mut w = vec![0.0; t.out.len()];
            t.apply_add(&q_r[t.a.clone()], &q_r[t.b.clone()], &mut w);
            cubic += dot(&q_r[t.out.clone()], &w);
        }
        self.weight * (quad + cubic / 3.0)
    }
}

fn shifted_dense(j: Mat<f64>, c: f64) -> DenseResolvent {
    let n = j.nrows();
    let m = Mat::from_fn(n, n, |r, k| if r == k { 1.0 } else { 0.0 } - c * j[(r, k)]);
    DenseResolvent::new(m.as_ref())
}

impl QuadraticSystem for ReducedModel {
    type Resolvent = DenseResolvent;

    fn dim(&self) -> usize {
        ReducedModel::dim(self)
    }

    fn rhs_into(&self, q: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&dense_matvec(self.s_hat.as_ref(), &self.gradient(q)));
    }

    fn shifted_resolvent(&self, q: &[f64], c: f64) -> Result<DenseResolvent> {
        Ok(shifted_dense(self.jacobian(q), c))
    }
}

impl HamiltonianSystem for ReducedModel {
    fn hamiltonian(&self, q: &[f64]) -> f64 {
        ReducedModel::hamiltonian(self, q)
    }

    fn hamiltonian_gradient(&self, q: &[f64]) -> Vec<f64> {
        self.gradient(q).into_iter().map(|g| g * self.weight).collect()
    }
}

/// Reduced model that lifts to the full space for every nonlinear evaluation.
///
/// Mathematically identical to [`ReducedModel`]; its per-step cost grows with `N`.
pub struct LiftedRom<'a> {
    model: &'a SkewGradientModel,
    basis: &'a Basis,
    v: Mat<f64>,
    s_hat: Mat<f64>,
    l_hat: Mat<f64>,
}

impl<'a> LiftedRom<'a> {
    pub fn new(model: &'a SkewGradientModel, basis: &'a Basis) -> Result<Self> {
        if basis.layout() != model.layout() {
            return Err(Error::LayoutMismatch("basis does not match model".into()));
        }
        let v = basis.matrix();
        let s_hat = v.transpose() * model.skew().mul_dense(v.as_ref())?;
        let l_hat = v.transpose() * model.gradient_form().linear.mul_dense(v.as_ref())?;
        Ok(Self {
            model,
            basis,
            v,
            s_hat,
            l_hat,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `Ŝ Vᵀ ∇H(V q_r)`.
    pub fn rhs_lifted(&self, q_r: &[f64]) -> Result<Vec<f64>> {
        let q = self.basis.lift(q_r)?;
        let g = self.model.gradient(&q)?;
        Ok(dense_matvec(self.s_hat.as_ref(), &dense_matvec_t(self.v.as_ref(), &g)))
    }

    /// `Ŝ (L̂ + Vᵀ ∇²H_cubic(V q_r) V)`, assembled in the full space.
    pub fn jacobian(&self, q_r: &[f64]) -> Result<Mat<f64>> {
        let q = self.basis.lift(q_r)?;
        let layout = self.model.layout();
        let n = self.dim();
        let mut h = self.l_hat.clone();
        for t in &self.model.gradient_form().terms {
            let (qa, qb) = (&q[layout.range(t.a)], &q[layout.range(t.b)]);
            let vout = self.v.as_ref().subrows(layout.offset(t.out), layout.field_len());
            for (field, scale) in [(t.a, qb), (t.b, qa)] {
                let vf = self.v.as_ref().subrows(layout.offset(field), layout.field_len());
                let scaled = Mat::from_fn(vf.nrows(), n, |i, j| scale[i] * vf[(i, j)]);
                let k = t.coeff.mul_dense(scaled.as_ref())?;
                h += vout.transpose() * k;
            }
        }
        Ok(&self.s_hat * h)
    }
}

impl QuadraticSystem for LiftedRom<'_> {
    type Resolvent = DenseResolvent;

    fn dim(&self) -> usize {
        LiftedRom::dim(self)
    }

    fn rhs_into(&self, q: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.rhs_lifted(q).expect("reduced state dimension"));
    }

    fn shifted_resolvent(&self, q: &[f64], c: f64) -> Result<DenseResolvent> {
        Ok(shifted_dense(self.jacobian(q)?, c))
    }
}

impl HamiltonianSystem for LiftedRom<'_> {
    fn hamiltonian(&self, q: &[f64]) -> f64 {
        let full = self.basis.lift(q).expect("reduced state dimension");
        self.model.hamiltonian(&full).expect("full state dimension")
    }

    fn hamiltonian_gradient(&self, q: &[f64]) -> Vec<f64> {
        let full = self.basis.lift(q).expect("reduced state dimension");
        let g = self.model.hamiltonian_gradient(&full).expect("full state dimension");
        dense_matvec_t(self.v.as_ref(), &g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_basis_tensor() {
        let id = Mat::<f64>::identity(2, 2);
        let c = reduced_quadratic_tensor(id.as_ref(), id.as_ref()).unwrap();
        let expected = [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        for i in 0..2 {
            for j in 0..4 {
                assert_eq!(c[(i, j)], expected[i][j]);
            }
        }
    }

    #[test]
    fn tensor_row_mismatch() {
        let a = Mat::<f64>::zeros(3, 2);
        let b = Mat::<f64>::zeros(4, 2);
        assert!(reduced_quadratic_tensor(a.as_ref(), b.as_ref()).is_err());
    }
}
