//! `cam decompose` and `cam select-k`.

use std::path::PathBuf;
use std::time::Instant;

use cam::preprocess::preprocess;
use cam::rng::derive_seed;
use cam::{decompose, stability_select, Decomposition64, StabilityProfile64};
use clap::Args;
use serde::Serialize;

use crate::config::{ConfigArgs, RunConfig};
use crate::error::CliResult;
use crate::files::{read_matrix, Outputs};

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Data matrix, one row per mixture, one column per point
    #[arg(long)]
    pub x: PathBuf,
    /// Fixed source count; when omitted it is chosen by stability analysis
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output JSON file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmiProfile {
    pub k_range: Vec<usize>,
    pub nmi: Vec<f64>,
    pub trials: usize,
    pub recommended_k: usize,
}

impl From<&StabilityProfile64> for NmiProfile {
    fn from(p: &StabilityProfile64) -> Self {
        NmiProfile { k_range: p.k_range.clone(), nmi: p.nmi.clone(), trials: p.trials, recommended_k: p.recommended_k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub points: usize,
    pub points_kept: usize,
    pub distortion: f64,
    pub clustering_iterations: usize,
    pub hit_iteration_cap: bool,
    /// Number of detected edges J*.
    pub edges_found: usize,
    pub edges: Vec<usize>,
    pub selected_edges: Vec<usize>,
}

/// Machine-facing summary of a decomposition. Timing lives in a separate file
/// so this one is byte-identical across repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultBundle {
    pub chosen_k: usize,
    pub fit_error: f64,
    pub sources_recovered: bool,
    pub nmi_profile: Option<NmiProfile>,
    pub diagnostics: Diagnostics,
    pub config: RunConfig,
}

impl ResultBundle {
    pub fn new(d: &Decomposition64, n_points: usize, config: &RunConfig) -> Self {
        ResultBundle {
            chosen_k: d.k,
            fit_error: d.fit_error,
            sources_recovered: d.s_hat.is_some(),
            nmi_profile: d.profile.as_ref().map(NmiProfile::from),
            diagnostics: Diagnostics {
                points: n_points,
                points_kept: d.preprocess.kept_indices.len(),
                distortion: d.model.distortion,
                clustering_iterations: d.model.iterations,
                hit_iteration_cap: d.model.hit_iteration_cap,
                edges_found: d.edges.len(),
                edges: d.edges.clone(),
                selected_edges: d.selected_edges.clone(),
            },
            config: config.clone(),
        }
    }
}

#[derive(Serialize)]
struct Timing {
    seconds: f64,
}

pub fn run_decompose(args: DecomposeArgs) -> CliResult<()> {
    let config = args.config.resolve(args.k)?;
    let x = read_matrix(&args.x)?;
    let start = Instant::now();
    let d = decompose(&x, config.source_count(), &config.cam(), config.seed)?;
    let seconds = start.elapsed().as_secs_f64();

    let bundle = ResultBundle::new(&d, x.cols(), &config);
    let mut out = Outputs::default();
    out.matrix(args.out.join("A_hat.txt"), &d.a_hat);
    match &d.s_hat {
        Some(s) => out.matrix(args.out.join("S_hat.txt"), s),
        None => log::warn!("{} sources from {} mixtures: S_hat is not identifiable and was not written", d.k, x.rows()),
    }
    out.json(args.out.join("result.json"), &bundle);
    out.json(args.out.join("timing.json"), &Timing { seconds });
    out.write()?;

    if let Some(p) = &d.profile {
        print_profile(&NmiProfile::from(p));
    }
    say!(
        "K = {}, J* = {}, fit error {:.6}, {:.2} s, results in {}",
        d.k,
        d.edges.len(),
        d.fit_error,
        seconds,
        args.out.display()
    );
    Ok(())
}

/// The profile `decompose` computes when K is not given.
pub fn profile_for(x: &cam::Matrix64, config: &RunConfig) -> CliResult<StabilityProfile64> {
    let cam_config = config.cam();
    let (xp, _) = preprocess(x, cam_config.remove_fraction)?;
    Ok(stability_select(&xp, config.k_max, config.trials, &cam_config, derive_seed(config.seed, "stability", &[]))?)
}

pub fn run_select_k(args: SelectKArgs) -> CliResult<()> {
    let mut config = args.config.resolve(None)?;
    config.k = None;
    config.validate()?;
    let x = read_matrix(&args.x)?;
    let profile = NmiProfile::from(&profile_for(&x, &config)?);
    let mut out = Outputs::default();
    out.json(args.out.clone(), &profile);
    out.write()?;
    print_profile(&profile);
    Ok(())
}

fn print_profile(p: &NmiProfile) {
    for (k, v) in p.k_range.iter().zip(&p.nmi) {
        let mark = if *k == p.recommended_k { "  <-" } else { "" };
        say!("K = {k}: NMI {v:.4}{mark}");
    }
}
