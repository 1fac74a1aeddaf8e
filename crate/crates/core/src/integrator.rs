//! Kahan's linearly implicit method for quadratic vector fields.
//!
//! For `f(q) = B_l q + Q(q)` with `Q` quadratic, one step solves
//! `(I - dt/2 f'(qᵏ)) ũ = dt f(qᵏ)` and sets `qᵏ⁺¹ = qᵏ + ũ`. This is the
//! polarized scheme `(q⁺ - q)/dt = ½ B_l (q + q⁺) + Q̃(q, q⁺)` written as a single
//! linear solve.

use faer::Mat;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, DenseResolvent, Resolvent, SparseResolvent, CONDITION_LIMIT};
use crate::models::SkewGradientModel;

/// Uniform mesh of `[0, T]` with `Nt` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMesh {
    t_final: f64,
    steps: usize,
}

impl TimeMesh {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Config(format!(
                "time mesh needs T > 0 and Nt >= 1, got T = {t_final}, Nt = {steps}"
            )));
        }
        Ok(Self { t_final, steps })
    }

    /// Mesh with step `dt`; `T/dt` must be an integer up to rounding.
    pub fn with_step(t_final: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let steps = (t_final / dt).round();
        if ((steps * dt - t_final) / t_final).abs() > 1e-9 {
            return Err(Error::Config(format!("T = {t_final} is not a multiple of dt = {dt}")));
        }
        Self::new(t_final, steps as usize)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_final * k as f64 / self.steps as f64
    }
}

/// A linear-quadratic ODE `q' = f(q)` that can factor `I - c f'(q)`.
pub trait QuadraticSystem {
    type Resolvent: Resolvent;

    fn dim(&self) -> usize;

    /// `out = f(q)`.
    fn rhs_into(&self, q: &[f64], out: &mut [f64]);

    /// Factorization of `I - c f'(q)`.
    fn shifted_resolvent(&self, q: &[f64], c: f64) -> Result<Self::Resolvent>;

    fn rhs(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.rhs_into(q, &mut out);
        out
    }
}

/// A [`QuadraticSystem`] with a cubic Hamiltonian.
pub trait HamiltonianSystem: QuadraticSystem {
    fn hamiltonian(&self, q: &[f64]) -> f64;

    /// Euclidean gradient of [`hamiltonian`](Self::hamiltonian).
    fn hamiltonian_gradient(&self, q: &[f64]) -> Vec<f64>;
}

impl QuadraticSystem for SkewGradientModel {
    type Resolvent = SparseResolvent;

    fn dim(&self) -> usize {
        SkewGradientModel::dim(self)
    }

    fn rhs_into(&self, q: &[f64], out: &mut [f64]) {
        SkewGradientModel::rhs_into(self, q, out)
    }

    fn shifted_resolvent(&self, q: &[f64], c: f64) -> Result<SparseResolvent> {
        self.jacobian_pattern()?.factorize_shifted(q, c)
    }
}

impl HamiltonianSystem for SkewGradientModel {
    fn hamiltonian(&self, q: &[f64]) -> f64 {
        SkewGradientModel::hamiltonian(self, q).expect("state dimension checked by caller")
    }

    fn hamiltonian_gradient(&self, q: &[f64]) -> Vec<f64> {
        SkewGradientModel::hamiltonian_gradient(self, q).expect("state dimension checked by caller")
    }
}

/// `ũ` such that `q⁺ = q + ũ`, or a step failure (reported as step 0).
pub fn kahan_update<S: QuadraticSystem + ?Sized>(sys: &S, q: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_dim("kahan step", sys.dim(), q.len())?;
    let fail = |reason: String| Error::StepFailure { step: 0, reason };
    let res = sys.shifted_resolvent(q, 0.5 * dt).map_err(|e| fail(e.to_string()))?;
    let cond = res.condition_estimate();
    if !(cond <= CONDITION_LIMIT) {
        return Err(fail(format!("condition estimate {cond:e} exceeds {CONDITION_LIMIT:e}")));
    }
    let mut u = vec![0.0; q.len()];
    sys.rhs_into(q, &mut u);
    u.iter_mut().for_each(|v| *v *= dt);
    res.solve_in_place(&mut u);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite update".into()));
    }
    Ok(u)
}

/// One Kahan step.
pub fn kahan_step<S: QuadraticSystem + ?Sized>(sys: &S, q: &[f64], dt: f64) -> Result<Vec<f64>> {
    let u = kahan_update(sys, q, dt)?;
    Ok(q.iter().zip(&u).map(|(a, b)| a + b).collect())
}

/// Polarized vector field `F̃(x, y) = ½ B_l (x + y) + Q̃(x, y)`, from evaluations of `f` only.
fn polarized<S: QuadraticSystem + ?Sized>(sys: &S, x: &[f64], y: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let neg: Vec<f64> = s.iter().map(|v| -v).collect();
    let (fs, fx, fy, fn_) = (sys.rhs(&s), sys.rhs(x), sys.rhs(y), sys.rhs(&neg));
    (0..s.len())
        .map(|i| 0.5 * (fs[i] - fx[i] - fy[i]) + 0.25 * (fs[i] - fn_[i]))
        .collect()
}

/// Solves `(q⁺ - q)/dt = F̃(q, q⁺)` by Newton iteration on a probed dense Jacobian.
///
/// Independent of [`kahan_step`]: it never touches the analytic Jacobian.
pub fn kahan_step_polarized<S: QuadraticSystem + ?Sized>(
    sys: &S,
    q: &[f64],
    dt: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    check_dim("polarized kahan step", sys.dim(), q.len())?;
    const MAX_ITER: usize = 20;
    let n = q.len();
    let residual = |y: &[f64]| -> Vec<f64> {
        let f = polarized(sys, q, y);
        (0..n).map(|i| y[i] - q[i] - dt * f[i]).collect()
    };
    let scale = q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut y = q.to_vec();
    let mut r = residual(&y);
    let mut rnorm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..MAX_ITER {
        if rnorm <= tol * scale {
            return Ok(y);
        }
        // the residual is affine in y, so unit probes give its Jacobian
        let mut jac = Mat::<f64>::zeros(n, n);
        let mut probe = y.clone();
        for j in 0..n {
            probe[j] += 1.0;
            let rj = residual(&probe);
            probe[j] = y[j];
            for i in 0..n {
                jac[(i, j)] = rj[i] - r[i];
            }
        }
        let lu = DenseResolvent::new(jac.as_ref());
        lu.solve_in_place(&mut r);
        y.iter_mut().zip(&r).for_each(|(a, d)| *a -= d);
        r = residual(&y);
        rnorm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    if rnorm <= tol * scale {
        Ok(y)
    } else {
        Err(Error::NoConvergence {
            iterations: MAX_ITER,
            residual: rnorm,
        })
    }
}

/// Residual of the Runge-Kutta form
/// `(q⁺ - q)/dt = -½ f(q) + 2 f((q + q⁺)/2) - ½ f(q⁺)`.
pub fn rk_form_residual<S: QuadraticSystem + ?Sized>(sys: &S, q: &[f64], q_next: &[f64], dt: f64) -> Vec<f64> {
    let mid: Vec<f64> = q.iter().zip(q_next).map(|(a, b)| 0.5 * (a + b)).collect();
    let (f0, fm, f1) = (sys.rhs(q), sys.rhs(&mid), sys.rhs(q_next));
    (0..q.len())
        .map(|i| (q_next[i] - q[i]) / dt - (-0.5 * f0[i] + 2.0 * fm[i] - 0.5 * f1[i]))
        .collect()
}

/// Kahan's modified Hamiltonian
/// `H̃(q) = H(q) + (dt/3) ∇H(q)ᵀ (I - dt/2 f'(q))⁻¹ f(q)`, conserved exactly by the
/// method for cubic `H` and constant skew `S`.
pub fn modified_hamiltonian<S: HamiltonianSystem + ?Sized>(sys: &S, q: &[f64], dt: f64) -> Result<f64> {
    let u = kahan_update(sys, q, dt)?;
    Ok(modified_hamiltonian_from_update(sys, q, &u))
}

/// [`modified_hamiltonian`] given the step update `ũ = dt (I - dt/2 f')⁻¹ f`.
pub fn modified_hamiltonian_from_update<S: HamiltonianSystem + ?Sized>(sys: &S, q: &[f64], update: &[f64]) -> f64 {
    sys.hamiltonian(q) + dot(&sys.hamiltonian_gradient(q), update) / 3.0
}

/// Sampled states `q⁰, q^s, q^{2s}, …` stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    data: Vec<f64>,
    steps: Vec<usize>,
    dt: f64,
    stride: usize,
}

impl Trajectory {
    pub fn new(dim: usize, dt: f64, stride: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
            steps: Vec::new(),
            dt,
            stride,
        }
    }

    /// Rebuilds a trajectory from stored columns sampled every `stride` steps from step 0.
    pub fn from_columns(dim: usize, data: Vec<f64>, dt: f64, stride: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::Format(format!(
                "payload of {} values is not a whole number of columns of length {dim}",
                data.len()
            )));
        }
        let count = data.len() / dim;
        Ok(Self {
            dim,
            data,
            steps: (0..count).map(|k| k * stride).collect(),
            dt,
            stride,
        })
    }

    pub(crate) fn push(&mut self, step: usize, q: &[f64]) {
        debug_assert_eq!(q.len(), self.dim);
        self.data.extend_from_slice(q);
        self.steps.push(step);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Step index of each sample.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&k| k as f64 * self.dt).collect()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Column-major `dim × len` buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Integrates `Nt` Kahan steps, keeping every `stride`-th state.
pub fn integrate<S: QuadraticSystem + ?Sized>(
    sys: &S,
    q0: &[f64],
    mesh: TimeMesh,
    stride: usize,
) -> Result<Trajectory> {
    integrate_with(sys, q0, mesh, stride, |_, _, _| {})
}

/// As [`integrate`], calling `monitor(k, qᵏ, ũᵏ)` before each step is applied.
pub fn integrate_with<S, F>(
    sys: &S,
    q0: &[f64],
    mesh: TimeMesh,
    stride: usize,
    mut monitor: F,
) -> Result<Trajectory>
where
    S: QuadraticSystem + ?Sized,
    F: FnMut(usize, &[f64], &[f64]),
{
    check_dim("initial state", sys.dim(), q0.len())?;
    if stride == 0 {
        return Err(Error::Config("sample stride must be at least 1".into()));
    }
    let dt = mesh.dt();
    let mut traj = Trajectory::new(q0.len(), dt, stride);
    traj.push(0, q0);
    let mut q = q0.to_vec();
    for k in 0..mesh.steps() {
        let u = kahan_update(sys, &q, dt).map_err(|e| match e {
            Error::StepFailure { reason, .. } => Error::StepFailure { step: k, reason },
            other => other,
        })?;
        monitor(k, &q, &u);
        q.iter_mut().zip(&u).for_each(|(a, b)| *a += b);
        if (k + 1) % stride == 0 {
            traj.push(k + 1, &q);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `q' = a q + b q²` on one unknown.
    struct Scalar {
        a: f64,
        b: f64,
    }

    impl QuadraticSystem for Scalar {
        type Resolvent = DenseResolvent;

        fn dim(&self) -> usize {
            1
        }

        fn rhs_into(&self, q: &[f64], out: &mut [f64]) {
            out[0] = self.a * q[0] + self.b * q[0] * q[0];
        }

        fn shifted_resolvent(&self, q: &[f64], c: f64) -> Result<DenseResolvent> {
            let m = Mat::from_fn(1, 1, |_, _| 1.0 - c * (self.a + 2.0 * self.b * q[0]));
            Ok(DenseResolvent::new(m.as_ref()))
        }
    }

    #[test]
    fn linear_scalar_gives_midpoint_map() {
        let q = kahan_step(&Scalar { a: -1.0, b: 0.0 }, &[1.0], 0.1).unwrap();
        assert!((q[0] - 0.95 / 1.05).abs() < 1e-15);
    }

    #[test]
    fn quadratic_scalar_hand_solve() {
        let q = kahan_step(&Scalar { a: 0.0, b: 1.0 }, &[1.0], 0.1).unwrap();
        assert!((q[0] - (1.0 + 1.0 / 9.0)).abs() < 1e-15);
        let p = kahan_step_polarized(&Scalar { a: 0.0, b: 1.0 }, &[1.0], 0.1, 1e-14).unwrap();
        assert!((p[0] - q[0]).abs() < 1e-14);
    }

    #[test]
    fn zero_field_is_identity() {
        let q = kahan_step(&Scalar { a: 0.0, b: 0.0 }, &[0.7], 0.3).unwrap();
        assert_eq!(q, vec![0.7]);
    }

    #[test]
    fn singular_resolvent_fails_with_step_index() {
        // 1 - dt/2 · a = 0
        let sys = Scalar { a: 2.0, b: 0.0 };
        let err = integrate(&sys, &[1.0], TimeMesh::new(1.0, 1).unwrap(), 1).unwrap_err();
        assert!(matches!(err, Error::StepFailure { step: 0, .. }), "{err}");
    }

    #[test]
    fn time_mesh_checks() {
        assert!(TimeMesh::new(1.0, 0).is_err());
        assert!(TimeMesh::with_step(1.0, 0.3).is_err());
        let m = TimeMesh::with_step(120.0, 0.015625).unwrap();
        assert_eq!(m.steps(), 7680);
        assert_eq!(m.dt(), 0.015625);
    }

    #[test]
    fn stride_sampling() {
        let sys = Scalar { a: -1.0, b: 0.0 };
        let t = integrate(&sys, &[1.0], TimeMesh::new(1.0, 10).unwrap(), 3).unwrap();
        assert_eq!(t.steps(), &[0, 3, 6, 9]);
        let r: f64 = 0.95 / 1.05;
        assert!((t.state(3)[0] - r.powi(9)).abs() < 1e-14);
    }
}
