//! Error metrics, invariant errors, convergence orders and timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::integrator::{integrate, TimeMesh};
use crate::models::{assemble, initial_condition, Domain, InitialCondition, ModelKind, ModelParams, SkewGradientModel, TwoSoliton};
use crate::operators::Grid1D;

/// A nonnegative series with its mean and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub series: Vec<f64>,
    pub average: f64,
    pub max: f64,
    /// Sample index of the maximum.
    pub argmax: usize,
}

impl ErrorReport {
    pub fn from_series(series: Vec<f64>) -> Self {
        let average = if series.is_empty() {
            0.0
        } else {
            series.iter().sum::<f64>() / series.len() as f64
        };
        let (argmax, max) = series
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        Self {
            series,
            average,
            max,
            argmax,
        }
    }
}

/// Weighted `L²` norm `(weight Σ qᵢ²)^½`.
pub fn weighted_norm(q: &[f64], weight: f64) -> f64 {
    (weight * q.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `‖qᵏ − q̂ᵏ‖ / ‖qᵏ‖` per sample, in the weighted norm.
pub fn relative_l2<'a, I>(pairs: I, weight: f64) -> Result<ErrorReport>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut series = Vec::new();
    for (q, q_hat) in pairs {
        check_dim("relative error", q.len(), q_hat.len())?;
        let denom = weighted_norm(q, weight);
        if !(denom > 0.0) {
            return Err(Error::NonPositive {
                context: "reference snapshot norm",
                value: denom,
            });
        }
        let diff: Vec<f64> = q.iter().zip(q_hat).map(|(a, b)| a - b).collect();
        series.push(weighted_norm(&diff, weight) / denom);
    }
    Ok(ErrorReport::from_series(series))
}

/// `|E(qᵏ) − E(q̂ᵏ)|` per sample for the invariant named `invariant` (`H`, `I1`, `I2`, `I3`).
pub fn conservation_error<'a, I>(model: &SkewGradientModel, pairs: I, invariant: &str) -> Result<ErrorReport>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut series = Vec::new();
    for (q, q_hat) in pairs {
        let a = model.invariants(q)?.get(invariant)?;
        let b = model.invariants(q_hat)?.get(invariant)?;
        series.push((a - b).abs());
    }
    Ok(ErrorReport::from_series(series))
}

/// Orders `log(eₖ/eₖ₊₁) / log(hₖ/hₖ₊₁)` between consecutive levels.
pub fn eoc(levels: &[(f64, f64)]) -> Result<Vec<f64>> {
    if levels.len() < 2 {
        return Err(Error::Config("convergence order needs at least two levels".into()));
    }
    for &(h, e) in levels {
        if !(h > 0.0) {
            return Err(Error::NonPositive {
                context: "mesh size",
                value: h,
            });
        }
        if !(e > 0.0) {
            return Err(Error::NonPositive {
                context: "convergence error",
                value: e,
            });
        }
    }
    Ok(levels
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect())
}

/// Relative `L²` error at `t_final` of the single-KdV solution started from the exact two-soliton state.
pub fn two_soliton_error(
    soliton: TwoSoliton,
    params: ModelParams,
    interval: (f64, f64),
    dx: f64,
    dt: f64,
    t_final: f64,
) -> Result<f64> {
    let grid = Grid1D::with_spacing(interval.0, interval.1, dx)?;
    let model = assemble(ModelKind::SingleKdv, params, Domain::Line(grid))?;
    let q0 = initial_condition(model.kind(), params, &InitialCondition::TwoSoliton { soliton }, model.domain())?;
    let mesh = TimeMesh::with_step(t_final, dt)?;
    let traj = integrate(&model, &q0, mesh, mesh.steps())?;
    let exact: Vec<f64> = grid.nodes().iter().map(|&x| soliton.eval(params, x, t_final)).collect();
    Ok(relative_l2([(&exact[..], traj.last())], model.weight())?.average)
}

/// Wall-clock phases of one reduction pipeline, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub fom: f64,
    pub offline: f64,
    pub online_tensorial: f64,
    pub online_lifted: f64,
}

impl TimingReport {
    pub fn speedup_tensorial(&self) -> f64 {
        self.fom / self.online_tensorial
    }

    pub fn speedup_lifted(&self) -> f64 {
        self.fom / self.online_lifted
    }
}

/// Median wall time of `reps` runs of `f` (at least three), measured on a monotonic clock.
pub fn median_time<T, F: FnMut() -> Result<T>>(reps: usize, mut f: F) -> Result<(f64, T)> {
    let mut times = Vec::with_capacity(reps.max(3));
    let mut last = None;
    for _ in 0..reps.max(3) {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed().as_secs_f64());
        last = Some(out);
    }
    times.sort_by(f64::total_cmp);
    Ok((times[times.len() / 2], last.expect("at least one run")))
}
