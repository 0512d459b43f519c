//! `cam generate`: synthetic datasets with a manifest that reproduces them.

use std::path::{Path, PathBuf};

use cam::datagen::{
    calibrate_noise_for_snr, gen_random_mixing_with, gen_toy, mix, snr_db, MixingOptions, NoiseSpec, Scenario,
    ToySpec, DEFAULT_REJECTION_BUDGET,
};
use cam::Matrix64;
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files::{read_json, read_matrix, Outputs};

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// Correlated toy dataset (3 sources, 3 mixtures)
    Toy(ToyArgs),
    /// Mix given sources with a given mixing matrix plus Gaussian noise
    Mix(MixArgs),
    /// Random unit-row-sum mixing matrix meeting a scenario constraint
    RandomMixing(RandomMixingArgs),
    /// Regenerate the files described by a manifest
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 1600)]
    pub n: usize,
    /// Isotropic noise variance
    #[arg(long, default_value_t = 0.07)]
    pub noise_variance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub sources: PathBuf,
    #[arg(long)]
    pub mixing: PathBuf,
    /// Target SNR in dB; isotropic noise is calibrated to reach it
    #[arg(long, conflicts_with = "noise_variance")]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub noise_variance: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RandomMixingArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub k: usize,
    /// exact, over or under
    #[arg(long)]
    pub scenario: Scenario,
    /// Allow negative entries (exact and over only)
    #[arg(long)]
    pub mixed_sign: bool,
    #[arg(long, default_value_t = DEFAULT_REJECTION_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Manifest {
    Toy {
        seed: u64,
        n_points: usize,
        mixing: Vec<Vec<f64>>,
        mu_exp: Vec<f64>,
        mu_gauss: Vec<f64>,
        sigma_gauss: Vec<Vec<f64>>,
        noise_covariance: Vec<Vec<f64>>,
    },
    Mix {
        seed: u64,
        sources: PathBuf,
        mixing: PathBuf,
        snr_db: Option<f64>,
        noise_variance: Option<f64>,
    },
    RandomMixing {
        seed: u64,
        m: usize,
        k: usize,
        scenario: String,
        mixed_sign: bool,
        budget: usize,
    },
}

fn rows(m: &Matrix64) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i)).collect()
}

fn from_rows(r: &[Vec<f64>], what: &str) -> CliResult<Matrix64> {
    Matrix64::from_rows(r).map_err(|e| CliError::Validation(format!("manifest {what}: {e}")))
}

pub fn run(cmd: GenerateCommand) -> CliResult<()> {
    let (manifest, out) = match cmd {
        GenerateCommand::Toy(a) => {
            let spec = ToySpec { n_points: a.n, noise: NoiseSpec::isotropic(3, a.noise_variance), ..Default::default() };
            (
                Manifest::Toy {
                    seed: a.seed,
                    n_points: spec.n_points,
                    mixing: rows(&spec.mixing),
                    mu_exp: spec.mu_exp.clone(),
                    mu_gauss: spec.mu_gauss.clone(),
                    sigma_gauss: rows(&spec.sigma_gauss),
                    noise_covariance: rows(&spec.noise.covariance),
                },
                a.out,
            )
        }
        GenerateCommand::Mix(a) => (
            Manifest::Mix {
                seed: a.seed,
                sources: a.sources,
                mixing: a.mixing,
                snr_db: a.snr_db,
                noise_variance: a.noise_variance,
            },
            a.out,
        ),
        GenerateCommand::RandomMixing(a) => (
            Manifest::RandomMixing {
                seed: a.seed,
                m: a.m,
                k: a.k,
                scenario: a.scenario.to_string(),
                mixed_sign: a.mixed_sign,
                budget: a.budget,
            },
            a.out,
        ),
        GenerateCommand::Replay(a) => (read_json(&a.manifest)?, a.out),
    };
    let outputs = build(&manifest, &out)?;
    for p in outputs.write()? {
        say!("wrote {}", p.display());
    }
    Ok(())
}

/// Renders every output of `manifest` into `out` without touching the disk.
pub fn build(manifest: &Manifest, out: &Path) -> CliResult<Outputs> {
    let mut o = Outputs::default();
    match manifest {
        Manifest::Toy { seed, n_points, mixing, mu_exp, mu_gauss, sigma_gauss, noise_covariance } => {
            let spec = ToySpec {
                n_points: *n_points,
                mixing: from_rows(mixing, "mixing")?,
                mu_exp: mu_exp.clone(),
                mu_gauss: mu_gauss.clone(),
                sigma_gauss: from_rows(sigma_gauss, "sigma_gauss")?,
                noise: NoiseSpec { covariance: from_rows(noise_covariance, "noise_covariance")? },
            };
            let d = gen_toy(&spec, *seed)?;
            if let Ok(db) = snr_db(&d.a.matmul(&d.s)?, &spec.noise) {
                say!("SNR {db:.2} dB");
            }
            o.matrix(out.join("X.txt"), &d.x);
            o.matrix(out.join("A_true.txt"), &d.a);
            o.matrix(out.join("S_true.txt"), &d.s);
        }
        Manifest::Mix { seed, sources, mixing, snr_db: target, noise_variance } => {
            let s = read_matrix(sources)?;
            let a = read_matrix(mixing)?;
            if a.cols() != s.rows() {
                return Err(CliError::Validation(format!(
                    "mixing has {} columns but there are {} sources",
                    a.cols(),
                    s.rows()
                )));
            }
            if s.min_entry() < 0.0 {
                return Err(CliError::Validation("sources must be non-negative".into()));
            }
            let clean = a.matmul(&s)?;
            let noise = match (target, noise_variance) {
                (Some(db), _) => calibrate_noise_for_snr(&clean, *db)?,
                (None, Some(v)) if *v >= 0.0 => NoiseSpec::isotropic(a.rows(), *v),
                (None, Some(v)) => return Err(CliError::Validation(format!("noise variance {v} is negative"))),
                (None, None) => NoiseSpec::zero(a.rows()),
            };
            let x = mix(&s, &a, &noise, *seed)?;
            o.matrix(out.join("X.txt"), &x);
            o.matrix(out.join("A_true.txt"), &a);
            o.matrix(out.join("S_true.txt"), &s);
        }
        Manifest::RandomMixing { seed, m, k, scenario, mixed_sign, budget } => {
            let scenario: Scenario = scenario.parse()?;
            let opts = MixingOptions { mixed_sign: *mixed_sign, budget: *budget };
            let a = gen_random_mixing_with(*m, *k, scenario, *seed, opts)?;
            o.matrix(out.join("A.txt"), &a);
        }
    }
    o.json(out.join("manifest.json"), manifest);
    Ok(o)
}
