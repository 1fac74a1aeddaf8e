use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Domain, ModelKind, ModelParams};

/// Hirota-form two-soliton solution of `u_t + α u u_x + μ u_xxx = 0`.
///
/// With `f = 1 + e^ξ₁ + e^ξ₂ + ρ² e^(ξ₁+ξ₂)` and `ξᵢ = kᵢ x − μ kᵢ³ t + φᵢ`, the solution
/// is `u = (12 μ / α) (log f)_xx`, expanded as
/// `[k₁² e^ξ₁ + k₂² e^ξ₂ + 2(k₂−k₁)² e^(ξ₁+ξ₂) + ρ² (k₂² e^ξ₁ + k₁² e^ξ₂) e^(ξ₁+ξ₂)] / f²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoSoliton {
    pub k1: f64,
    pub k2: f64,
    /// Interaction coefficient, `(k₁ − k₂)/(k₁ + k₂)` for the integrable case.
    pub rho: f64,
    pub phase1: f64,
    pub phase2: f64,
}

impl Default for TwoSoliton {
    fn default() -> Self {
        let (k1, k2) = (0.4, 0.6);
        Self {
            k1,
            k2,
            rho: (k1 - k2) / (k1 + k2),
            phase1: 4.0,
            phase2: 15.0,
        }
    }
}

impl TwoSoliton {
    pub fn validate(&self) -> Result<()> {
        if self.k1 == -self.k2 {
            return Err(Error::Config("two-soliton wavenumbers must satisfy k1 != -k2".into()));
        }
        Ok(())
    }

    /// Exact value at `(x, t)`.
    pub fn eval(&self, params: ModelParams, x: f64, t: f64) -> f64 {
        let ModelParams { alpha, mu } = params;
        let (k1, k2, rho2) = (self.k1, self.k2, self.rho * self.rho);
        let xi1 = k1 * x - mu * k1.powi(3) * t + self.phase1;
        let xi2 = k2 * x - mu * k2.powi(3) * t + self.phase2;
        // every exponential is scaled by e^(-s) (numerator by e^(-2s)) so nothing overflows
        let s = 0.0f64.max(xi1).max(xi2).max(xi1 + xi2);
        let e = |z: f64| (z - s).exp();
        let e2 = |z: f64| (z - 2.0 * s).exp();
        let f = e(0.0) + e(xi1) + e(xi2) + rho2 * e(xi1 + xi2);
        let num = k1 * k1 * e2(xi1)
            + k2 * k2 * e2(xi2)
            + 2.0 * (k2 - k1).powi(2) * e2(xi1 + xi2)
            + rho2 * (k2 * k2 * e2(2.0 * xi1 + xi2) + k1 * k1 * e2(xi1 + 2.0 * xi2));
        12.0 * mu / alpha * num / (f * f)
    }
}

/// Pulse centre and velocity for the Zakharov-Kuznetsov initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZkPulse {
    pub c: f64,
    pub x: f64,
    pub y: f64,
}

/// Initial states of the supported experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `β sech²(√β (x − x₀)/2)`.
    OneSoliton {
        beta: f64,
        #[serde(default)]
        center: f64,
    },
    /// Exact two-soliton profile at `t = 0`.
    TwoSoliton {
        #[serde(default)]
        soliton: TwoSoliton,
    },
    /// `u = 0`, `v = A exp(−(x − x₀)² / w)`.
    CoupledGaussian {
        #[serde(default = "default_gauss_amplitude")]
        amplitude: f64,
        #[serde(default = "default_gauss_center")]
        center: f64,
        #[serde(default = "default_gauss_width")]
        width: f64,
    },
    /// `Σⱼ (cⱼ/3) Σₘ a₂ₘ (cos(2m arccot(√cⱼ rⱼ / 2)) − 1)`.
    ZkPulses {
        pulses: Vec<ZkPulse>,
        /// `a₂, a₄, …`; required, there is no built-in table.
        #[serde(default)]
        coefficients: Option<Vec<f64>>,
    },
}

fn default_gauss_amplitude() -> f64 {
    0.3
}

fn default_gauss_center() -> f64 {
    -100.0
}

fn default_gauss_width() -> f64 {
    25.0
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

/// Samples `ic` at the grid nodes of `domain`.
pub fn initial_condition(
    kind: ModelKind,
    params: ModelParams,
    ic: &InitialCondition,
    domain: &Domain,
) -> Result<Vec<f64>> {
    match (kind, ic, domain) {
        (ModelKind::SingleKdv, InitialCondition::OneSoliton { beta, center }, Domain::Line(g)) => {
            if !(*beta > 0.0) {
                return Err(Error::Config(format!("soliton amplitude must be positive, got {beta}")));
            }
            Ok(g.nodes()
                .iter()
                .map(|x| beta * sech2(beta.sqrt() * (x - center) / 2.0))
                .collect())
        }
        (ModelKind::SingleKdv, InitialCondition::TwoSoliton { soliton: p }, Domain::Line(g)) => {
            p.validate()?;
            Ok(g.nodes().iter().map(|&x| p.eval(params, x, 0.0)).collect())
        }
        (
            ModelKind::CoupledKdv,
            InitialCondition::CoupledGaussian {
                amplitude,
                center,
                width,
            },
            Domain::Line(g),
        ) => {
            let mut q = vec![0.0; 2 * g.len()];
            for (i, x) in g.nodes().into_iter().enumerate() {
                q[g.len() + i] = amplitude * (-(x - center).powi(2) / width).exp();
            }
            Ok(q)
        }
        (
            ModelKind::ZakharovKuznetsov,
            InitialCondition::ZkPulses {
                pulses,
                coefficients,
            },
            Domain::Plane(g),
        ) => {
            let coeffs = coefficients.as_ref().filter(|c| !c.is_empty()).ok_or_else(|| {
                Error::Config("zk_pulses requires the a_2m coefficient list".into())
            })?;
            if pulses.iter().any(|p| !(p.c > 0.0)) {
                return Err(Error::Config("pulse velocities must be positive".into()));
            }
            let mut q = vec![0.0; g.len()];
            for i in 0..g.nx() {
                for j in 0..g.ny() {
                    let (x, y) = (g.x().node(i), g.y().node(j));
                    q[g.index(i, j)] = pulses
                        .iter()
                        .map(|p| {
                            let r = ((x - p.x).powi(2) + (y - p.y).powi(2)).sqrt();
                            // arccot(s) = π/2 − atan(s) for s ≥ 0
                            let theta = FRAC_PI_2 - (p.c.sqrt() * r / 2.0).atan();
                            p.c / 3.0
                                * coeffs
                                    .iter()
                                    .enumerate()
                                    .map(|(m, a)| a * ((2.0 * (m + 1) as f64 * theta).cos() - 1.0))
                                    .sum::<f64>()
                        })
                        .sum();
                }
            }
            Ok(q)
        }
        _ => Err(Error::Config(format!(
            "initial condition {ic:?} does not apply to model {kind:?} on this domain"
        ))),
    }
}
