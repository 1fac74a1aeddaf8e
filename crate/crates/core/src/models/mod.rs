//! KdV-type PDEs assembled as skew-gradient, linear-quadratic ODE systems
//! `q' = S ∇H(q)` with `∇H(q) = L q + Σₜ Kₜ (q_a ⊙ q_b)`.
//!
//! The gradient is taken in the mesh-weighted inner product (weight `Δx` in 1D,
//! `ΔxΔy` in 2D), so the Euclidean gradient of the discrete Hamiltonian is
//! `weight · ∇H`.

mod initial;
mod jacobian;

use serde::{Deserialize, Serialize};

pub use initial::{initial_condition, InitialCondition, TwoSoliton, ZkPulse};
pub use jacobian::JacobianPattern;

use crate::error::{check_dim, Error, Result};
use crate::operators::{
    kron_2d, periodic_d1, periodic_d2, Grid1D, Grid2D, SparseOperator, Symmetry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleKdv,
    CoupledKdv,
    ZakharovKuznetsov,
}

/// Nonlinearity and dispersion coefficients; the coupled model ignores them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub mu: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { alpha: 6.0, mu: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Line(Grid1D),
    Plane(Grid2D),
}

impl Domain {
    /// Quadrature weight of one node.
    pub fn weight(&self) -> f64 {
        match self {
            Domain::Line(g) => g.spacing(),
            Domain::Plane(g) => g.cell_area(),
        }
    }

    /// Nodes per field.
    pub fn len(&self) -> usize {
        match self {
            Domain::Line(g) => g.len(),
            Domain::Plane(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Equal-length field blocks stacked in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLayout {
    names: Vec<String>,
    field_len: usize,
}

impl FieldLayout {
    pub fn new(names: &[&str], field_len: usize) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            field_len,
        }
    }

    pub fn num_fields(&self) -> usize {
        self.names.len()
    }

    pub fn field_len(&self) -> usize {
        self.field_len
    }

    pub fn total_len(&self) -> usize {
        self.field_len * self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn offset(&self, field: usize) -> usize {
        field * self.field_len
    }

    pub fn range(&self, field: usize) -> std::ops::Range<usize> {
        self.offset(field)..self.offset(field) + self.field_len
    }
}

/// One quadratic gradient contribution `E_out K (q_a ⊙ q_b)`.
#[derive(Debug, Clone)]
pub struct QuadGradTerm {
    pub coeff: SparseOperator,
    pub a: usize,
    pub b: usize,
    pub out: usize,
}

/// `∇H(q) = L q + Σₜ E_outₜ Kₜ (q_aₜ ⊙ q_bₜ)`.
#[derive(Debug, Clone)]
pub struct GradientForm {
    pub linear: SparseOperator,
    pub terms: Vec<QuadGradTerm>,
}

impl GradientForm {
    pub fn eval(&self, layout: &FieldLayout, q: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; q.len()];
        self.linear.apply_into(q, &mut g);
        let mut prod = vec![0.0; layout.field_len()];
        for t in &self.terms {
            let (qa, qb) = (&q[layout.range(t.a)], &q[layout.range(t.b)]);
            prod.iter_mut()
                .zip(qa.iter().zip(qb))
                .for_each(|(p, (x, y))| *p = x * y);
            t.coeff.apply_add(&prod, &mut g[layout.range(t.out)]);
        }
        g
    }
}

/// Discrete invariants; `i3` only exists for the coupled model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub h: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: Option<f64>,
}

impl InvariantSet {
    pub fn get(&self, name: &str) -> Result<f64> {
        match name {
            "H" => Ok(self.h),
            "I1" => Ok(self.i1),
            "I2" => Ok(self.i2),
            "I3" => self.i3.ok_or_else(|| Error::UnknownInvariant(name.into())),
            _ => Err(Error::UnknownInvariant(name.into())),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = vec!["H", "I1", "I2"];
        if self.i3.is_some() {
            v.push("I3");
        }
        v
    }
}

/// `q' = S ∇H(q)` with constant skew `S`.
#[derive(Debug)]
pub struct SkewGradientModel {
    kind: ModelKind,
    params: ModelParams,
    domain: Domain,
    layout: FieldLayout,
    skew: SparseOperator,
    grad: GradientForm,
    /// `S L`
    linear_rhs: SparseOperator,
    /// `S E_out Kₜ`, one per quadratic term
    term_rhs: Vec<SparseOperator>,
    jacobian: std::sync::OnceLock<Result<JacobianPattern, String>>,
}

/// Builds the semi-discrete model of `kind` on `domain`.
pub fn assemble(kind: ModelKind, params: ModelParams, domain: Domain) -> Result<SkewGradientModel> {
    if !(params.alpha.is_finite() && params.mu.is_finite()) {
        return Err(Error::Config("alpha and mu must be finite".into()));
    }
    let (layout, skew, grad) = match (kind, domain) {
        (ModelKind::SingleKdv, Domain::Line(g)) => {
            let n = g.len();
            let layout = FieldLayout::new(&["u"], n);
            let grad = GradientForm {
                linear: periodic_d2(&g).scale(-params.mu),
                terms: vec![QuadGradTerm {
                    coeff: SparseOperator::scaled_identity(n, -params.alpha / 2.0),
                    a: 0,
                    b: 0,
                    out: 0,
                }],
            };
            (layout, periodic_d1(&g), grad)
        }
        (ModelKind::CoupledKdv, Domain::Line(g)) => {
            let n = g.len();
            let layout = FieldLayout::new(&["u", "v"], n);
            // −(I + D₂/6) couples u and v
            let coupling = SparseOperator::identity(n)
                .add_scaled(&periodic_d2(&g), 1.0 / 6.0)?
                .scale(-1.0);
            let mut triplets: Vec<_> = coupling.entries().map(|(i, j, v)| (i, j + n, v)).collect();
            triplets.extend(coupling.entries().map(|(i, j, v)| (i + n, j, v)));
            let linear = SparseOperator::from_triplets(2 * n, 2 * n, &triplets, Symmetry::Symmetric);
            let grad = GradientForm {
                linear,
                terms: vec![
                    QuadGradTerm {
                        coeff: SparseOperator::scaled_identity(n, -0.75),
                        a: 0,
                        b: 0,
                        out: 0,
                    },
                    QuadGradTerm {
                        coeff: SparseOperator::scaled_identity(n, -0.25),
                        a: 1,
                        b: 1,
                        out: 0,
                    },
                    QuadGradTerm {
                        coeff: SparseOperator::scaled_identity(n, -0.5),
                        a: 0,
                        b: 1,
                        out: 1,
                    },
                ],
            };
            let d1 = periodic_d1(&g);
            (layout, SparseOperator::block_diag(&[&d1, &d1]), grad)
        }
        (ModelKind::ZakharovKuznetsov, Domain::Plane(g)) => {
            let n = g.len();
            let ops = kron_2d(&g)?;
            let layout = FieldLayout::new(&["u"], n);
            let lap = ops.dxx.add_scaled(&ops.dyy, 1.0)?;
            let grad = GradientForm {
                linear: lap.scale(-params.mu),
                terms: vec![QuadGradTerm {
                    coeff: SparseOperator::scaled_identity(n, -params.alpha / 2.0),
                    a: 0,
                    b: 0,
                    out: 0,
                }],
            };
            (layout, ops.dx, grad)
        }
        (kind, _) => {
            return Err(Error::Config(format!(
                "model {kind:?} is not defined on this domain"
            )))
        }
    };
    let n = layout.total_len();
    let linear_rhs = skew.matmul(&grad.linear)?;
    let term_rhs = grad
        .terms
        .iter()
        .map(|t| {
            let embedded = t.coeff.embed(n, layout.field_len(), layout.offset(t.out), 0);
            skew.matmul(&embedded)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SkewGradientModel {
        kind,
        params,
        domain,
        layout,
        skew,
        grad,
        linear_rhs,
        term_rhs,
        jacobian: std::sync::OnceLock::new(),
    })
}

impl SkewGradientModel {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_len()
    }

    /// Quadrature weight used by invariants, norms and the gradient convention.
    pub fn weight(&self) -> f64 {
        self.domain.weight()
    }

    pub fn skew(&self) -> &SparseOperator {
        &self.skew
    }

    pub fn gradient_form(&self) -> &GradientForm {
        &self.grad
    }

    /// `B_l = S L`.
    pub fn linear_rhs(&self) -> &SparseOperator {
        &self.linear_rhs
    }

    /// `S E_out Kₜ` for each quadratic term.
    pub fn term_rhs(&self) -> &[SparseOperator] {
        &self.term_rhs
    }

    /// Weighted gradient `∇H(q)`.
    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim("gradient", self.dim(), q.len())?;
        Ok(self.grad.eval(&self.layout, q))
    }

    pub(crate) fn rhs_into(&self, q: &[f64], out: &mut [f64]) {
        self.linear_rhs.apply_into(q, out);
        let mut prod = vec![0.0; self.layout.field_len()];
        for (t, b) in self.grad.terms.iter().zip(&self.term_rhs) {
            let (qa, qb) = (&q[self.layout.range(t.a)], &q[self.layout.range(t.b)]);
            prod.iter_mut()
                .zip(qa.iter().zip(qb))
                .for_each(|(p, (x, y))| *p = x * y);
            b.apply_add(&prod, out);
        }
    }

    /// `f(q) = S (L q + Σₜ Kₜ (q_a ⊙ q_b))`.
    pub fn rhs(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim("rhs", self.dim(), q.len())?;
        let mut out = vec![0.0; self.dim()];
        self.rhs_into(q, &mut out);
        Ok(out)
    }

    pub fn jacobian_pattern(&self) -> Result<&JacobianPattern> {
        self.jacobian
            .get_or_init(|| JacobianPattern::new(self).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Decomposition(e.clone()))
    }

    /// Analytic Jacobian `f'(q)`.
    pub fn jacobian(&self, q: &[f64]) -> Result<SparseOperator> {
        check_dim("jacobian", self.dim(), q.len())?;
        Ok(self.jacobian_pattern()?.jacobian(q))
    }

    /// Discrete Hamiltonian from its defining lattice sums.
    pub fn hamiltonian(&self, q: &[f64]) -> Result<f64> {
        check_dim("hamiltonian", self.dim(), q.len())?;
        let ModelParams { alpha, mu } = self.params;
        let w = self.weight();
        let h = match self.domain {
            Domain::Line(g) => {
                let n = g.len();
                let dx = g.spacing();
                match self.kind {
                    ModelKind::SingleKdv => {
                        let mut s = 0.0;
                        for i in 0..n {
                            let u = q[i];
                            let du = (q[(i + 1) % n] - u) / dx;
                            s += -alpha / 6.0 * u * u * u + 0.5 * mu * du * du;
                        }
                        s
                    }
                    _ => {
                        let (u, v) = q.split_at(n);
                        let mut s = 0.0;
                        for i in 0..n {
                            let lap = (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (dx * dx);
                            s += -u[i] * v[i] - 0.25 * u[i] * v[i] * v[i] - 0.25 * u[i] * u[i] * u[i]
                                - u[i] * lap / 6.0;
                        }
                        s
                    }
                }
            }
            Domain::Plane(g) => {
                let (nx, ny) = (g.nx(), g.ny());
                let (dx, dy) = (g.x().spacing(), g.y().spacing());
                let mut s = 0.0;
                for i in 0..nx {
                    for j in 0..ny {
                        let u = q[g.index(i, j)];
                        let ux = (q[g.index((i + 1) % nx, j)] - u) / dx;
                        let uy = (q[g.index(i, (j + 1) % ny)] - u) / dy;
                        s += -alpha / 6.0 * u * u * u + 0.5 * mu * (ux * ux + uy * uy);
                    }
                }
                s
            }
        };
        Ok(h * w)
    }

    /// Euclidean gradient of [`hamiltonian`](Self::hamiltonian), i.e. `weight · ∇H`.
    pub fn hamiltonian_gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        let w = self.weight();
        Ok(self.gradient(q)?.into_iter().map(|g| g * w).collect())
    }

    pub fn invariants(&self, q: &[f64]) -> Result<InvariantSet> {
        let h = self.hamiltonian(q)?;
        let w = self.weight();
        let n = self.layout.field_len();
        let sum_sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() * w;
        let sum = |x: &[f64]| x.iter().sum::<f64>() * w;
        Ok(match self.kind {
            ModelKind::SingleKdv => InvariantSet {
                h,
                i1: sum_sq(q),
                i2: sum(q),
                i3: None,
            },
            ModelKind::CoupledKdv => {
                let (u, v) = q.split_at(n);
                InvariantSet {
                    h,
                    i1: sum_sq(u) + sum_sq(v),
                    i2: sum(u),
                    i3: Some(sum(v)),
                }
            }
            ModelKind::ZakharovKuznetsov => InvariantSet {
                h,
                i1: 0.5 * sum_sq(q),
                i2: sum(q),
                i3: None,
            },
        })
    }

    /// Per-field mass `Σ q_f · weight`.
    pub fn masses(&self, q: &[f64]) -> Vec<f64> {
        let w = self.weight();
        (0..self.layout.num_fields())
            .map(|f| q[self.layout.range(f)].iter().sum::<f64>() * w)
            .collect()
    }
}
