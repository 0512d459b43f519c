//! Run configuration: defaults, optional JSON config file, command-line overrides.

use std::path::{Path, PathBuf};

use cam::CamConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files::read_json;

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "CAM_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sectors: usize,
    pub restarts: usize,
    pub tau: f64,
    pub remove_fraction: f64,
    /// Fixed source count; when absent K is chosen by stability analysis.
    pub k: Option<usize>,
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub bb_threshold: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = CamConfig::default();
        RunConfig {
            sectors: c.sectors,
            restarts: c.restarts,
            tau: c.tau,
            remove_fraction: c.remove_fraction,
            k: None,
            k_max: 8,
            trials: 30,
            seed: 0,
            bb_threshold: c.bb_threshold,
        }
    }
}

/// Flags shared by the commands that run the pipeline.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// JSON config file (default: the file named by CAM_CONFIG, if set)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of sectors J
    #[arg(long)]
    pub sectors: Option<usize>,
    /// Clustering restarts
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Edge-detection angle threshold in radians
    #[arg(long)]
    pub tau: Option<f64>,
    /// Fraction of smallest-norm points discarded before clustering
    #[arg(long)]
    pub remove_fraction: Option<f64>,
    /// Largest source count tried by stability analysis
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Cross-validation trials for stability analysis
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Subset count above which the edge search uses branch and bound
    #[arg(long)]
    pub bb_threshold: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self, k: Option<usize>) -> CliResult<RunConfig> {
        let path = self.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let mut c = match path {
            Some(p) => load(&p)?,
            None => RunConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        apply!(sectors, restarts, tau, remove_fraction, k_max, trials, seed, bb_threshold);
        if k.is_some() {
            c.k = k;
        }
        c.validate()?;
        Ok(c)
    }
}

fn load(path: &Path) -> CliResult<RunConfig> {
    read_json(path)
}

impl RunConfig {
    pub fn cam(&self) -> CamConfig {
        CamConfig {
            sectors: self.sectors,
            restarts: self.restarts,
            tau: self.tau,
            remove_fraction: self.remove_fraction,
            bb_threshold: self.bb_threshold,
            ..CamConfig::default()
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.cam().validate()?;
        if self.k == Some(0) {
            return Err(CliError::Validation("--k must be positive".into()));
        }
        if self.k.is_none() {
            if self.k_max < 2 {
                return Err(CliError::Validation("--k-max must be at least 2".into()));
            }
            if self.trials == 0 {
                return Err(CliError::Validation("--trials must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn source_count(&self) -> cam::SourceCount {
        match self.k {
            Some(k) => cam::SourceCount::Fixed(k),
            None => cam::SourceCount::Select { k_max: self.k_max, trials: self.trials },
        }
    }
}
