use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mblw_core::dtwa::Tolerances;
use mblw_core::ed::{DEFAULT_KRYLOV_TOL, MAX_ED_SITES};
use mblw_core::{
    make_time_grid, CvrmsdConvention, Method, PairFilter, Spacing, TimeGrid, DEFAULT_DISORDER_SWEEP,
};
use serde::{Deserialize, Serialize};

/// Exact backend refuses larger chains even though the basis could hold them.
pub const ED_SITE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_max: 120.0,
            points: 201,
            spacing: Spacing::LogPlusZero,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        Ok(make_time_grid(self.t_max, self.points, self.spacing)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTolerances {
    #[serde(default)]
    pub dtwa: Tolerances,
    #[serde(default = "default_krylov")]
    pub krylov: f64,
}

fn default_krylov() -> f64 {
    DEFAULT_KRYLOV_TOL
}

impl Default for RunTolerances {
    fn default() -> Self {
        RunTolerances {
            dtwa: Tolerances::default(),
            krylov: DEFAULT_KRYLOV_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_sites: usize,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default = "default_sweep")]
    pub disorder_strengths: Vec<f64>,
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default = "default_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_backends")]
    pub backends: Vec<Method>,
    #[serde(default)]
    pub master_seed: u64,
    /// `None` defers to `MBLW_WORKERS`, then to all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub tolerances: RunTolerances,
    #[serde(default)]
    pub pair_filter: PairFilter,
    #[serde(default)]
    pub cvrmsd_convention: CvrmsdConvention,
    /// Also write every realization's series, not just the averages.
    #[serde(default)]
    pub keep_realizations: bool,
}

fn default_coupling() -> f64 {
    1.0
}
fn default_sweep() -> Vec<f64> {
    DEFAULT_DISORDER_SWEEP.to_vec()
}
fn default_realizations() -> usize {
    100
}
fn default_traj() -> usize {
    2000
}
fn default_backends() -> Vec<Method> {
    vec![Method::Dtwa, Method::Ed]
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl RunConfig {
    pub fn new(n_sites: usize) -> Self {
        RunConfig {
            n_sites,
            coupling: default_coupling(),
            disorder_strengths: default_sweep(),
            n_realizations: default_realizations(),
            n_traj: default_traj(),
            grid: GridSpec::default(),
            backends: default_backends(),
            master_seed: 0,
            workers: None,
            output_dir: default_output(),
            tolerances: RunTolerances::default(),
            pair_filter: PairFilter::default(),
            cvrmsd_convention: CvrmsdConvention::default(),
            keep_realizations: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.n_sites >= 2,
            "n_sites must be at least 2, got {}",
            self.n_sites
        );
        ensure!(
            self.coupling.is_finite() && self.coupling != 0.0,
            "coupling must be finite and nonzero"
        );
        ensure!(
            !self.disorder_strengths.is_empty(),
            "disorder_strengths is empty"
        );
        let mut seen = Vec::new();
        for &h in &self.disorder_strengths {
            ensure!(
                h.is_finite() && h >= 0.0,
                "disorder strength {h} must be finite and >= 0"
            );
            ensure!(!seen.contains(&h), "disorder strength {h} listed twice");
            seen.push(h);
        }
        ensure!(self.n_realizations > 0, "n_realizations must be positive");
        ensure!(
            self.n_realizations <= u32::MAX as usize,
            "n_realizations exceeds the stream index range"
        );
        ensure!(!self.backends.is_empty(), "no backends selected");
        let unique: HashSet<_> = self.backends.iter().collect();
        ensure!(unique.len() == self.backends.len(), "backend listed twice");
        if self.backends.contains(&Method::Dtwa) {
            ensure!(
                self.n_traj >= 2,
                "n_traj must be at least 2, got {}",
                self.n_traj
            );
        }
        if self.backends.contains(&Method::Ed) {
            ensure!(
                self.n_sites <= ED_SITE_LIMIT.min(MAX_ED_SITES),
                "ed backend limited to {ED_SITE_LIMIT} sites, got {}",
                self.n_sites
            );
        }
        if let Some(w) = self.workers {
            ensure!(w > 0, "workers must be positive");
        }
        self.tolerances.dtwa.validate()?;
        if self.tolerances.krylov.is_nan() || self.tolerances.krylov <= 0.0 {
            bail!("krylov tolerance must be positive");
        }
        self.grid.build()?;
        Ok(())
    }
}
