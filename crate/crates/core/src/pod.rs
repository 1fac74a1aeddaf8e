//! Snapshot matrices, SVD (full or randomized), RIC mode selection and POD bases.

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::integrator::Trajectory;
use crate::models::FieldLayout;

/// Snapshot matrix with one state per column.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    data: Mat<f64>,
    layout: FieldLayout,
    times: Vec<f64>,
}

impl SnapshotSet {
    pub fn new(data: Mat<f64>, layout: FieldLayout, times: Vec<f64>) -> Result<Self> {
        check_dim("snapshot rows", layout.total_len(), data.nrows())?;
        check_dim("snapshot times", data.ncols(), times.len())?;
        if data.ncols() == 0 {
            return Err(Error::Config("snapshot set is empty".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("snapshot times must increase strictly".into()));
        }
        Ok(Self { data, layout, times })
    }

    /// Columns of `traj`, optionally dropping the initial state.
    pub fn from_trajectory(traj: &Trajectory, layout: FieldLayout, include_initial: bool) -> Result<Self> {
        let skip = usize::from(!include_initial);
        if traj.len() <= skip {
            return Err(Error::Config("trajectory has no snapshots to collect".into()));
        }
        let n = traj.dim();
        let count = traj.len() - skip;
        let data = MatRef::from_column_major_slice(&traj.data()[skip * n..], n, count).to_owned();
        let times = traj.times()[skip..].to_vec();
        Self::new(data, layout, times)
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// Rows belonging to `field`.
    pub fn field(&self, field: usize) -> MatRef<'_, f64> {
        let r = self.layout.range(field);
        self.data.as_ref().subrows(r.start, r.len())
    }
}

/// Singular values together with the total squared mass `‖Q‖_F²`.
///
/// Keeping the exact total makes the RIC of a truncated (randomized) spectrum exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub singular_values: Vec<f64>,
    pub total_energy: f64,
}

impl SpectrumReport {
    /// RIC of the first `n` modes, in percent.
    pub fn ric(&self, n: usize) -> f64 {
        let captured: f64 = self.singular_values.iter().take(n).map(|s| s * s).sum();
        100.0 * captured / self.total_energy
    }

    pub fn ric_curve(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.singular_values
            .iter()
            .map(|s| {
                acc += s * s;
                100.0 * acc / self.total_energy
            })
            .collect()
    }

    /// Smallest `n` with RIC(n) ≥ `threshold`.
    pub fn select(&self, threshold: f64) -> Result<usize> {
        if self.singular_values.is_empty() || !(self.total_energy > 0.0) {
            return Err(Error::EmptySpectrum);
        }
        self.ric_curve()
            .iter()
            // guard the full-rank case against rounding in the running sum
            .position(|&r| r >= threshold || r >= 100.0 * (1.0 - 1e-14))
            .map(|k| k + 1)
            .ok_or(Error::RankTooSmall {
                requested: self.singular_values.len() + 1,
                available: self.singular_values.len(),
            })
    }
}

/// Smallest `n` with `100 Σ_{k≤n} σ_k² / Σ_k σ_k² ≥ threshold`.
pub fn ric_select(sigma: &[f64], threshold: f64) -> Result<usize> {
    SpectrumReport {
        singular_values: sigma.to_vec(),
        total_energy: sigma.iter().map(|s| s * s).sum(),
    }
    .select(threshold)
}

/// Truncated SVD `M ≈ U diag(σ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub left: Mat<f64>,
    pub sigma: Vec<f64>,
    pub right: Mat<f64>,
}

fn decomposition_error(e: impl std::fmt::Debug) -> Error {
    Error::Decomposition(format!("{e:?}"))
}

/// Thin SVD of `m` keeping `k` triplets.
pub fn full_svd(m: MatRef<'_, f64>, k: usize) -> Result<TruncatedSvd> {
    let r = m.nrows().min(m.ncols());
    if k > r {
        return Err(Error::RankTooSmall {
            requested: k,
            available: r,
        });
    }
    let svd = m.thin_svd().map_err(decomposition_error)?;
    let s = svd.S().column_vector();
    Ok(TruncatedSvd {
        left: svd.U().subcols(0, k).to_owned(),
        sigma: (0..k).map(|i| s[i]).collect(),
        right: svd.V().subcols(0, k).to_owned(),
    })
}

/// Randomized range finder with power iterations followed by a small SVD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsvdParams {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for RsvdParams {
    fn default() -> Self {
        Self {
            oversample: 10,
            power_iters: 2,
            seed: 0x5eed,
        }
    }
}

fn orthonormal_range(y: Mat<f64>) -> Mat<f64> {
    y.qr().compute_thin_Q()
}

pub fn randomized_svd(m: MatRef<'_, f64>, k: usize, params: RsvdParams) -> Result<TruncatedSvd> {
    let l = k + params.oversample;
    let r = m.nrows().min(m.ncols());
    if k == 0 || l > r {
        return Err(Error::RankTooSmall {
            requested: l,
            available: r,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega = Mat::from_fn(m.ncols(), l, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let mut q = orthonormal_range(m * &omega);
    for _ in 0..params.power_iters {
        let z = orthonormal_range(m.transpose() * &q);
        q = orthonormal_range(m * &z);
    }
    let b = q.transpose() * m;
    let svd = b.thin_svd().map_err(decomposition_error)?;
    let s = svd.S().column_vector();
    Ok(TruncatedSvd {
        left: &q * svd.U().subcols(0, k),
        sigma: (0..k).map(|i| s[i]).collect(),
        right: svd.V().subcols(0, k).to_owned(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    /// One SVD of the stacked snapshot matrix.
    Monolithic,
    /// One SVD per field, assembled block-diagonally.
    PerField,
}

/// How many modes to keep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCount {
    /// The same `n` for every block.
    Fixed(usize),
    /// One `n` per block.
    PerBlock(Vec<usize>),
    /// Smallest `n` reaching the RIC threshold (percent).
    Ric(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum SvdMethod {
    Full,
    /// Randomized SVD computing `rank` triplets.
    Randomized {
        rank: usize,
        #[serde(flatten)]
        params: RsvdParams,
    },
}

/// Orthonormal reduction basis; per-field bases form a block-diagonal `V`.
#[derive(Debug, Clone)]
pub struct Basis {
    layout: FieldLayout,
    mode: BasisMode,
    blocks: Vec<Mat<f64>>,
}

impl Basis {
    pub fn new(layout: FieldLayout, mode: BasisMode, blocks: Vec<Mat<f64>>) -> Result<Self> {
        let expected = match mode {
            BasisMode::Monolithic => 1,
            BasisMode::PerField => layout.num_fields(),
        };
        if blocks.len() != expected {
            return Err(Error::LayoutMismatch(format!(
                "{mode:?} basis needs {expected} blocks, got {}",
                blocks.len()
            )));
        }
        for b in &blocks {
            let rows = match mode {
                BasisMode::Monolithic => layout.total_len(),
                BasisMode::PerField => layout.field_len(),
            };
            check_dim("basis rows", rows, b.nrows())?;
            if b.ncols() == 0 || b.ncols() > b.nrows() {
                return Err(Error::RankTooSmall {
                    requested: b.ncols(),
                    available: b.nrows(),
                });
            }
        }
        Ok(Self { layout, mode, blocks })
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn blocks(&self) -> &[Mat<f64>] {
        &self.blocks
    }

    /// Total reduced dimension.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }

    pub fn full_dim(&self) -> usize {
        self.layout.total_len()
    }

    /// Rows of `V` for `field` and the reduced coordinates they act on.
    pub fn field_view(&self, field: usize) -> (MatRef<'_, f64>, std::ops::Range<usize>) {
        match self.mode {
            BasisMode::Monolithic => {
                let r = self.layout.range(field);
                (self.blocks[0].as_ref().subrows(r.start, r.len()), 0..self.dim())
            }
            BasisMode::PerField => {
                let off: usize = self.blocks[..field].iter().map(|b| b.ncols()).sum();
                (self.blocks[field].as_ref(), off..off + self.blocks[field].ncols())
            }
        }
    }

    /// Dense `N × n` matrix `V`.
    pub fn matrix(&self) -> Mat<f64> {
        match self.mode {
            BasisMode::Monolithic => self.blocks[0].clone(),
            BasisMode::PerField => {
                let mut v = Mat::zeros(self.full_dim(), self.dim());
                for f in 0..self.layout.num_fields() {
                    let (blk, cols) = self.field_view(f);
                    let rows = self.layout.range(f);
                    v.as_mut()
                        .submatrix_mut(rows.start, cols.start, rows.len(), cols.len())
                        .copy_from(blk);
                }
                v
            }
        }
    }

    /// `V q_r`, block by block.
    pub fn lift(&self, q_r: &[f64]) -> Result<Vec<f64>> {
        check_dim("lift", self.dim(), q_r.len())?;
        let mut q = vec![0.0; self.full_dim()];
        for f in 0..self.layout.num_fields() {
            let (v, cols) = self.field_view(f);
            let rows = self.layout.range(f);
            let out = &mut q[rows];
            for (j, &c) in q_r[cols].iter().enumerate() {
                let col = v.col(j);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += col[i] * c;
                }
            }
        }
        Ok(q)
    }

    /// `Vᵀ q`.
    pub fn project(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim("project", self.full_dim(), q.len())?;
        let mut q_r = vec![0.0; self.dim()];
        for f in 0..self.layout.num_fields() {
            let (v, cols) = self.field_view(f);
            let x = &q[self.layout.range(f)];
            for (j, o) in q_r[cols].iter_mut().enumerate() {
                let col = v.col(j);
                *o += (0..x.len()).map(|i| col[i] * x[i]).sum::<f64>();
            }
        }
        Ok(q_r)
    }

    /// `max |VᵀV - I|` over all blocks.
    pub fn orthonormality_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let g = b.transpose() * b;
                let mut e: f64 = 0.0;
                for j in 0..g.ncols() {
                    for i in 0..g.nrows() {
                        let id = if i == j { 1.0 } else { 0.0 };
                        e = e.max((g[(i, j)] - id).abs());
                    }
                }
                e
            })
            .fold(0.0, f64::max)
    }
}

fn frobenius_sq(m: MatRef<'_, f64>) -> f64 {
    let f = crate::linalg::frobenius(m);
    f * f
}

fn decompose(m: MatRef<'_, f64>, method: SvdMethod) -> Result<(TruncatedSvd, SpectrumReport)> {
    let svd = match method {
        SvdMethod::Full => full_svd(m, m.nrows().min(m.ncols()))?,
        SvdMethod::Randomized { rank, params } => randomized_svd(m, rank, params)?,
    };
    let report = SpectrumReport {
        singular_values: svd.sigma.clone(),
        total_energy: frobenius_sq(m),
    };
    Ok((svd, report))
}

/// POD basis of `snapshots`; returns one spectrum per SVD performed.
pub fn build_basis(
    snapshots: &SnapshotSet,
    mode: BasisMode,
    count: &ModeCount,
    method: SvdMethod,
) -> Result<(Basis, Vec<SpectrumReport>)> {
    let mats: Vec<MatRef<'_, f64>> = match mode {
        BasisMode::Monolithic => vec![snapshots.matrix()],
        BasisMode::PerField => (0..snapshots.layout().num_fields())
            .map(|f| snapshots.field(f))
            .collect(),
    };
    if let ModeCount::PerBlock(ns) = count {
        check_dim("modes per block", mats.len(), ns.len())?;
    }
    let mut blocks = Vec::with_capacity(mats.len());
    let mut spectra = Vec::with_capacity(mats.len());
    for (b, m) in mats.into_iter().enumerate() {
        let (svd, report) = decompose(m, method)?;
        let n = match count {
            ModeCount::Fixed(n) => *n,
            ModeCount::PerBlock(ns) => ns[b],
            ModeCount::Ric(threshold) => report.select(*threshold)?,
        };
        // modes with vanishing singular value carry no snapshot information
        let tiny = svd.sigma.first().copied().unwrap_or(0.0) * 1e-13;
        let available = svd.sigma.iter().filter(|&&s| s > tiny).count();
        if n == 0 || n > available {
            return Err(Error::RankTooSmall {
                requested: n,
                available,
            });
        }
        blocks.push(svd.left.subcols(0, n).to_owned());
        spectra.push(report);
    }
    Ok((Basis::new(snapshots.layout().clone(), mode, blocks)?, spectra))
}
