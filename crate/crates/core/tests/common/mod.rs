#![allow(dead_code)]

use faer::Mat;
use hrom::models::{initial_condition, InitialCondition, ZkPulse};
use hrom::pod::{Basis, BasisMode};
use hrom::{assemble, Domain, Grid1D, Grid2D, ModelKind, ModelParams, SkewGradientModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn line(a: f64, b: f64, n: usize) -> Domain {
    Domain::Line(Grid1D::new(a, b, n).unwrap())
}

pub fn square(len: f64, n: usize) -> Domain {
    Domain::Plane(Grid2D::new(
        Grid1D::new(0.0, len, n).unwrap(),
        Grid1D::new(0.0, len, n).unwrap(),
    ))
}

pub fn random_state(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

pub fn random_orthonormal(n: usize, k: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Mat::from_fn(n, k, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    g.qr().compute_thin_Q()
}

/// Random orthonormal basis matching the model layout; per-field for multi-field models.
pub fn random_basis(model: &SkewGradientModel, n: usize, seed: u64) -> Basis {
    let layout = model.layout().clone();
    if layout.num_fields() == 1 {
        Basis::new(layout.clone(), BasisMode::Monolithic, vec![random_orthonormal(layout.total_len(), n, seed)]).unwrap()
    } else {
        let blocks = (0..layout.num_fields())
            .map(|f| random_orthonormal(layout.field_len(), n - f, seed + f as u64))
            .collect();
        Basis::new(layout, BasisMode::PerField, blocks).unwrap()
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Single KdV with a β = 1.5 soliton on [-10, 10].
pub fn soliton_model(n: usize) -> (SkewGradientModel, Vec<f64>) {
    let model = assemble(ModelKind::SingleKdv, ModelParams::default(), line(-10.0, 10.0, n)).unwrap();
    let q0 = initial_condition(
        model.kind(),
        model.params(),
        &InitialCondition::OneSoliton { beta: 1.5, center: 0.0 },
        model.domain(),
    )
    .unwrap();
    (model, q0)
}

/// Coupled system with the Gaussian initial state on [-150, 150].
pub fn coupled_model(n: usize) -> (SkewGradientModel, Vec<f64>) {
    let model = assemble(ModelKind::CoupledKdv, ModelParams::default(), line(-150.0, 150.0, n)).unwrap();
    let q0 = initial_condition(
        model.kind(),
        model.params(),
        &InitialCondition::CoupledGaussian { amplitude: 0.3, center: -100.0, width: 25.0 },
        model.domain(),
    )
    .unwrap();
    (model, q0)
}

/// `a₂ … a₂₀` fitted to the radial solitary wave of `Δψ − ψ + ψ² = 0`.
pub const ZK_COEFFICIENTS: [f64; 10] = [
    -1.2553512439e+00,
    2.1754015360e-01,
    6.4328870387e-02,
    5.5321101434e-03,
    -3.3798168248e-03,
    -2.7011197298e-03,
    -1.3843716482e-03,
    -5.9109193999e-04,
    -2.0667795282e-04,
    -1.3865488370e-05,
];

/// Zakharov-Kuznetsov two-pulse state on [0, 32]².
pub fn zk_model(n: usize) -> (SkewGradientModel, Vec<f64>) {
    let model = assemble(ModelKind::ZakharovKuznetsov, ModelParams::default(), square(32.0, n)).unwrap();
    let q0 = initial_condition(
        model.kind(),
        model.params(),
        &InitialCondition::ZkPulses {
            pulses: vec![ZkPulse { c: 1.0, x: 8.0, y: 16.0 }, ZkPulse { c: 0.5, x: 16.0, y: 16.0 }],
            coefficients: Some(ZK_COEFFICIENTS.to_vec()),
        },
        model.domain(),
    )
    .unwrap();
    (model, q0)
}
