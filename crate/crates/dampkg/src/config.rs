//! Run configuration, read from TOML.
//!
//! ```toml
//! s = 2.0
//! seed = 7
//!
//! [grid]
//! d = 1
//! n = 512
//! box_len = 32.0
//!
//! [damping]
//! family = "stripes"
//! period = 2.0
//! duty = 0.5
//! height = 1.0
//!
//! [experiment.simulate]
//! t_end = 40.0
//! dt_out = 0.1
//! data = { kind = "broadband" }
//! ```

use std::path::{Path, PathBuf};

use dampkg_core::damping::{DampingProfile, DampingSpec};
use dampkg_core::eigen::EigenOptions;
use dampkg_core::evolution::DataSpec;
use dampkg_core::TorusGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    pub box_len: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<TorusGrid, CliError> {
        Ok(TorusGrid::new(self.d, self.n, self.box_len)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    #[serde(default)]
    pub seed: u64,
    /// Default output directory when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Required by every experiment except `fit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<DampingSpec>,
    pub experiment: Experiment,
    /// Directory of the config file; relative input paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Simulate(SimulateConfig),
    ResolventSweep(ResolventSweepConfig),
    SpectralConstant(SpectralConstantConfig),
    UncertaintySweep(UncertaintySweepConfig),
    Thickness(ThicknessConfig),
    Fit(FitConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate(_) => "simulate",
            Experiment::ResolventSweep(_) => "resolvent-sweep",
            Experiment::SpectralConstant(_) => "spectral-constant",
            Experiment::UncertaintySweep(_) => "uncertainty-sweep",
            Experiment::Thickness(_) => "thickness",
            Experiment::Fit(_) => "fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// Seeded from the run seed.
    Broadband,
    WavePacket { center: f64, wavenumber: f64, width: f64 },
}

impl InitialData {
    pub fn spec(&self, seed: u64) -> DataSpec {
        match *self {
            InitialData::Broadband => DataSpec::Broadband { seed },
            InitialData::WavePacket { center, wavenumber, width } => {
                DataSpec::WavePacket { center, wavenumber, width }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_end: f64,
    pub dt_out: f64,
    /// Defaults to `0.2 / max Λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub data: InitialData,
    /// Order `k` of `(I − 𝒜₀)^{−k}` applied to the data; 0 for none.
    #[serde(default)]
    pub smoothing: u32,
    /// Defaults to `[0.2 T, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    4000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: default_max_iter() }
    }
}

impl SolverConfig {
    pub fn options(&self, seed: u64) -> EigenOptions {
        EigenOptions { tol: self.tol, max_iter: self.max_iter, seed, ..EigenOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSweepConfig {
    /// Sweep `λ` over `[−half_width, half_width]`.
    pub half_width: f64,
    pub points: usize,
    #[serde(default)]
    pub refine_levels: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Cross-check against the absorbed free estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorb: Option<AbsorbConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorbConfig {
    /// Level `ε` of `Ω = {γ ≥ ε}`.
    pub eps: f64,
    /// Cube side for the thickness certificate.
    pub cube_len: f64,
    /// Number of `λ ∈ [0, half_width]` samples for the annulus envelope.
    #[serde(default = "default_absorb_points")]
    pub points: usize,
}

fn default_absorb_points() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConstantConfig {
    pub radii: Vec<f64>,
    /// `Ω = {γ ≥ eps}`.
    pub eps: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySweepConfig {
    /// `λ` from 0 to `lambda_max`.
    pub lambda_max: f64,
    pub points: usize,
    pub eps: f64,
    /// Order of the symbol; defaults to the run's `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessConfig {
    pub eps: f64,
    pub cube_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// A `t, energy` CSV, relative paths resolved against the config file.
    pub trace: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| CliError::Validation { path: None, message: e.to_string() })?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Validation { path: Some(path), message: e.into_inner().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_relative() { self.base_dir.join(p) } else { p.to_path_buf() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn grid(&self) -> Result<TorusGrid, CliError> {
        match &self.grid {
            Some(g) => g.build().map_err(|e| e.at("grid")),
            None => Err(CliError::Validation { path: Some("grid".into()), message: "missing [grid] table".into() }),
        }
    }

    pub fn damping_profile(&self, grid: &TorusGrid) -> Result<Option<DampingProfile>, CliError> {
        self.damping.as_ref().map(|d| DampingProfile::make(grid, d).map_err(CliError::from)).transpose()
    }

    pub fn require_damping(&self, grid: &TorusGrid) -> Result<DampingProfile, CliError> {
        self.damping_profile(grid)?.ok_or_else(|| CliError::Validation {
            path: Some("damping".into()),
            message: format!("experiment {} needs a damping profile", self.experiment.name()),
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |path: &str, message: String| Err(CliError::Validation { path: Some(path.into()), message });
        if !(self.s >= 1.0) || !self.s.is_finite() {
            return bad("s", format!("s must be a finite number >= 1, got {}", self.s));
        }
        if !matches!(self.experiment, Experiment::Fit(_)) || self.grid.is_some() {
            self.grid()?;
        }
        if let Some(d) = &self.damping {
            if let Some(g) = &self.grid {
                DampingProfile::make(&g.build()?, d).map_err(|e| CliError::from(e).at("damping"))?;
            }
        }
        match &self.experiment {
            Experiment::Simulate(c) => {
                if !(c.t_end > 0.0) || !(c.dt_out > 0.0) {
                    return bad("experiment.simulate", "t_end and dt_out must be positive".into());
                }
                if let Some(dt) = c.dt {
                    if !(dt > 0.0 && dt <= c.dt_out) {
                        return bad("experiment.simulate.dt", format!("need 0 < dt <= dt_out, got {dt}"));
                    }
                }
            }
            Experiment::ResolventSweep(c) => {
                if !(c.half_width > 0.0) || c.points < 8 {
                    return bad("experiment.resolvent-sweep", "need half_width > 0 and points >= 8".into());
                }
                if self.damping.is_none() {
                    return bad("damping", "resolvent-sweep needs a damping profile".into());
                }
            }
            Experiment::SpectralConstant(c) => {
                if c.radii.is_empty() || c.radii.iter().any(|r| !(*r >= 0.0)) {
                    return bad("experiment.spectral-constant.radii", "radii must be nonnegative".into());
                }
            }
            Experiment::UncertaintySweep(c) => {
                if !(c.lambda_max > 0.0) || c.points < 8 {
                    return bad("experiment.uncertainty-sweep", "need lambda_max > 0 and points >= 8".into());
                }
                if let Some(o) = c.order {
                    if !(o >= 1.0) {
                        return bad("experiment.uncertainty-sweep.order", format!("order must be >= 1, got {o}"));
                    }
                }
            }
            Experiment::Thickness(_) | Experiment::Fit(_) => {}
        }
        Ok(())
    }
}
