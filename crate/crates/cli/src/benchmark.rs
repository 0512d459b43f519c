//! `cam benchmark`: Monte Carlo sweep over SNR levels for one mixing scenario.

use std::fmt::Write as _;
use std::path::PathBuf;

use cam::datagen::{calibrate_noise_for_snr, gen_benchmark_sources, gen_random_mixing, mix, Scenario};
use cam::rng::derive_seed;
use cam::{decompose, SourceCount};
use clap::Args;
use rayon::prelude::*;

use crate::config::{ConfigArgs, RunConfig};
use crate::decompose::profile_for;
use crate::error::{CliError, CliResult};
use crate::evaluate::metrics;
use crate::files::Outputs;

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// exact, over or under
    #[arg(long)]
    pub scenario: Scenario,
    /// Comma-separated SNR levels in dB
    #[arg(long, value_delimiter = ',', required = true)]
    pub snr_db: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    /// Points per replicate
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// True source count
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Mixture count (default: K for exact, K + 2 for over, K − 1 for under)
    #[arg(long)]
    pub m: Option<usize>,
    /// Skip stability-based source-count selection
    #[arg(long)]
    pub no_model_order: bool,
    /// Marker points per source for the marker-pattern correlation
    #[arg(long)]
    pub markers: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of one replicate; metric fields are `None` when unavailable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Replicate {
    pub snr_db: f64,
    pub replicate: usize,
    pub seed: u64,
    pub e_a: Option<f64>,
    pub e_s: Option<f64>,
    pub e_s_markers: Option<f64>,
    pub chosen_k: Option<usize>,
    pub error: Option<String>,
}

struct Plan {
    scenario: Scenario,
    m: usize,
    k: usize,
    n: usize,
    markers: Option<usize>,
    model_order: bool,
    config: RunConfig,
}

fn default_m(scenario: Scenario, k: usize) -> usize {
    match scenario {
        Scenario::Exact => k,
        Scenario::Over => k + 2,
        Scenario::Under => k.saturating_sub(1),
    }
}

pub fn run(args: BenchmarkArgs) -> CliResult<()> {
    let config = args.config.resolve(None)?;
    let m = args.m.unwrap_or_else(|| default_m(args.scenario, args.k));
    if args.k < 2 || m < 2 {
        return Err(CliError::Validation(format!("need K >= 2 and M >= 2, got K = {} and M = {m}", args.k)));
    }
    if Scenario::of_shape(m, args.k) != args.scenario {
        return Err(CliError::Validation(format!("M = {m}, K = {} is not a {} scenario", args.k, args.scenario)));
    }
    if args.replicates == 0 {
        return Err(CliError::Validation("--replicates must be positive".into()));
    }
    if args.snr_db.iter().any(|s| !s.is_finite()) {
        return Err(CliError::Validation("SNR levels must be finite".into()));
    }
    if !args.no_model_order && config.k_max < args.k {
        return Err(CliError::Validation(format!("--k-max {} is below the true K = {}", config.k_max, args.k)));
    }
    if args.markers == Some(0) {
        return Err(CliError::Validation("--markers must be positive".into()));
    }
    if args.n < config.sectors {
        return Err(CliError::Validation(format!("--n {} is below the sector count {}", args.n, config.sectors)));
    }
    let plan = Plan {
        scenario: args.scenario,
        m,
        k: args.k,
        n: args.n,
        markers: args.markers,
        model_order: !args.no_model_order,
        config,
    };

    let tasks: Vec<(usize, usize)> =
        (0..args.snr_db.len()).flat_map(|c| (0..args.replicates).map(move |r| (c, r))).collect();
    let rows: Vec<Replicate> = tasks.par_iter().map(|&(c, r)| run_replicate(&plan, args.snr_db[c], c, r)).collect();
    for row in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("replicate {} at {} dB failed: {}", row.replicate, row.snr_db, row.error.as_deref().unwrap_or(""));
    }

    let summary: Vec<Cell> = args
        .snr_db
        .iter()
        .enumerate()
        .map(|(c, &snr)| Cell::aggregate(snr, &rows[c * args.replicates..(c + 1) * args.replicates], plan.k))
        .collect();

    let mut out = Outputs::default();
    out.text(args.out.join("replicates.tsv"), replicates_tsv(&rows));
    out.text(args.out.join("summary.tsv"), summary_tsv(&plan, &summary));
    out.write()?;
    for cell in &summary {
        say!(
            "{} dB: E_A {} E_S {} accuracy {} ({} of {} replicates ok)",
            cell.snr_db,
            fmt_opt(cell.mean_e_a),
            fmt_opt(cell.mean_e_s),
            fmt_opt(cell.accuracy),
            cell.succeeded,
            cell.replicates
        );
    }
    Ok(())
}

fn run_replicate(plan: &Plan, snr_db: f64, cell: usize, replicate: usize) -> Replicate {
    // One mixing matrix and source draw per replicate index, shared across SNR levels.
    let seed = derive_seed(plan.config.seed, "benchmark-instance", &[replicate as u64]);
    let mut row = Replicate { snr_db, replicate, seed, ..Default::default() };
    if let Err(e) = fill_replicate(plan, cell, &mut row) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_replicate(plan: &Plan, cell: usize, row: &mut Replicate) -> CliResult<()> {
    let idx = [cell as u64, row.replicate as u64];
    let a = gen_random_mixing(plan.m, plan.k, plan.scenario, derive_seed(row.seed, "mixing", &[]))?;
    let s = gen_benchmark_sources(plan.k, plan.n, derive_seed(row.seed, "sources", &[]))?;
    let clean = a.matmul(&s)?;
    let noise = calibrate_noise_for_snr(&clean, row.snr_db)?;
    let x = mix(&s, &a, &noise, derive_seed(plan.config.seed, "benchmark-noise", &idx))?;

    let pipeline_seed = derive_seed(plan.config.seed, "benchmark-pipeline", &idx);
    if plan.model_order {
        let config = RunConfig { seed: pipeline_seed, ..plan.config.clone() };
        row.chosen_k = Some(profile_for(&x, &config)?.recommended_k);
    }
    let d = decompose(&x, SourceCount::Fixed(plan.k), &plan.config.cam(), pipeline_seed)?;
    let m = metrics(&a, &d.a_hat, d.s_hat.as_ref().map(|h| (&s, h)), plan.markers)?;
    row.e_a = Some(m.e_a);
    row.e_s = m.e_s;
    row.e_s_markers = m.e_s_markers;
    Ok(())
}

/// Per-SNR aggregate. Means run over replicates where the metric exists;
/// accuracy counts failed replicates as misses.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub snr_db: f64,
    pub replicates: usize,
    pub succeeded: usize,
    pub mean_e_a: Option<f64>,
    pub mean_e_s: Option<f64>,
    pub mean_e_s_markers: Option<f64>,
    pub accuracy: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Cell {
    pub fn aggregate(snr_db: f64, rows: &[Replicate], k: usize) -> Cell {
        let model_order = rows.iter().any(|r| r.chosen_k.is_some());
        Cell {
            snr_db,
            replicates: rows.len(),
            succeeded: rows.iter().filter(|r| r.error.is_none()).count(),
            mean_e_a: mean(rows.iter().filter_map(|r| r.e_a)),
            mean_e_s: mean(rows.iter().filter_map(|r| r.e_s)),
            mean_e_s_markers: mean(rows.iter().filter_map(|r| r.e_s_markers)),
            accuracy: model_order
                .then(|| rows.iter().filter(|r| r.chosen_k == Some(k)).count() as f64 / rows.len() as f64),
        }
    }
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn replicates_tsv(rows: &[Replicate]) -> String {
    let mut s = String::from("snr_db\treplicate\tseed\tstatus\te_a\te_s\te_s_markers\tchosen_k\tmessage\n");
    for r in rows {
        let (status, message) = match &r.error {
            Some(e) => ("error", e.replace(['\t', '\n'], " ")),
            None => ("ok", String::new()),
        };
        writeln!(
            s,
            "{}\t{}\t{}\t{status}\t{}\t{}\t{}\t{}\t{message}",
            r.snr_db,
            r.replicate,
            r.seed,
            fmt_opt(r.e_a),
            fmt_opt(r.e_s),
            fmt_opt(r.e_s_markers),
            fmt_opt(r.chosen_k)
        )
        .unwrap();
    }
    s
}

fn summary_tsv(plan: &Plan, cells: &[Cell]) -> String {
    let mut s = String::from(
        "scenario\tm\tk\tsnr_db\treplicates\tsucceeded\tmean_e_a\tmean_e_s\tmean_e_s_markers\tmodel_order_accuracy\n",
    );
    for c in cells {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            plan.scenario,
            plan.m,
            plan.k,
            c.snr_db,
            c.replicates,
            c.succeeded,
            fmt_opt(c.mean_e_a),
            fmt_opt(c.mean_e_s),
            fmt_opt(c.mean_e_s_markers),
            fmt_opt(c.accuracy)
        )
        .unwrap();
    }
    s
}
