//! Experiment configuration and its content hash.

use std::path::Path;

use hrom::models::TwoSoliton;
use hrom::pod::{ModeCount, SvdMethod};
use hrom::{BasisMode, Domain, Grid1D, Grid2D, InitialCondition, ModelKind, ModelParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub initial: InitialCondition,
    pub time: TimeSpec,
    #[serde(default)]
    pub snapshots: SnapshotSpec,
    #[serde(default)]
    pub basis: Option<BasisSpec>,
    #[serde(default)]
    pub rom: RomSpec,
    #[serde(default)]
    pub eoc: Option<EocSpec>,
    #[serde(default)]
    pub bench: BenchSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub params: ModelParams,
    pub x: AxisSpec,
    /// Second axis; only the Zakharov-Kuznetsov model uses it.
    #[serde(default)]
    pub y: Option<AxisSpec>,
}

/// Periodic axis `[start, end)` given by either a node count or a spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub spacing: Option<f64>,
}

impl AxisSpec {
    pub fn grid(&self) -> Result<Grid1D, CliError> {
        match (self.nodes, self.spacing) {
            (Some(n), None) => Ok(Grid1D::new(self.start, self.end, n)?),
            (None, Some(h)) => Ok(Grid1D::with_spacing(self.start, self.end, h)?),
            _ => Err(CliError::Config("axis needs exactly one of `nodes` or `spacing`".into())),
        }
    }
}

impl ModelSpec {
    pub fn domain(&self) -> Result<Domain, CliError> {
        let x = self.x.grid()?;
        match (self.kind, &self.y) {
            (ModelKind::ZakharovKuznetsov, Some(y)) => Ok(Domain::Plane(Grid2D::new(x, y.grid()?))),
            (ModelKind::ZakharovKuznetsov, None) => {
                Err(CliError::Config("model.y is required for the zakharov_kuznetsov model".into()))
            }
            (_, None) => Ok(Domain::Line(x)),
            (_, Some(_)) => Err(CliError::Config("model.y is only valid for the zakharov_kuznetsov model".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotSpec {
    pub stride: usize,
    pub include_initial: bool,
}

impl Default for SnapshotSpec {
    fn default() -> Self {
        Self {
            stride: 1,
            include_initial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub mode: BasisMode,
    pub modes: ModeCount,
    #[serde(default = "default_svd")]
    pub svd: SvdMethod,
}

fn default_svd() -> SvdMethod {
    SvdMethod::Full
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RomPath {
    Tensorial,
    Lifted,
    Both,
}

impl RomPath {
    pub fn tensorial(self) -> bool {
        matches!(self, RomPath::Tensorial | RomPath::Both)
    }

    pub fn lifted(self) -> bool {
        matches!(self, RomPath::Lifted | RomPath::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RomSpec {
    pub path: RomPath,
}

impl Default for RomSpec {
    fn default() -> Self {
        Self { path: RomPath::Tensorial }
    }
}

/// Mesh ladder against the exact two-soliton solution; level `k` uses `(dx₀, dt₀)·2⁻ᵏ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EocSpec {
    pub start: f64,
    pub end: f64,
    pub t_final: f64,
    pub dx0: f64,
    pub dt0: f64,
    pub levels: usize,
    #[serde(default)]
    pub soliton: TwoSoliton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSpec {
    pub repetitions: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self { repetitions: 3 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.model.domain()?;
        if !(self.time.t_final > 0.0 && self.time.dt > 0.0) {
            return Err(CliError::Config("time.t_final and time.dt must be positive".into()));
        }
        if self.snapshots.stride == 0 {
            return Err(CliError::Config("snapshots.stride must be at least 1".into()));
        }
        if self.bench.repetitions == 0 {
            return Err(CliError::Config("bench.repetitions must be at least 1".into()));
        }
        if let Some(e) = &self.eoc {
            if e.levels < 2 {
                return Err(CliError::Config("eoc.levels must be at least 2".into()));
            }
        }
        Ok(())
    }

    /// Replaces the randomized-SVD seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(BasisSpec {
            svd: SvdMethod::Randomized { params, .. },
            ..
        }) = &mut self.basis
        {
            params.seed = seed;
        }
        self
    }

    pub fn params(&self) -> ModelParams {
        self.model.params
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}
