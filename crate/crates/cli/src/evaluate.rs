//! `cam evaluate`: compare an estimate with ground truth.

use std::path::PathBuf;

use cam::{evaluate, min_avg_angle, Matrix64};
use clap::Args;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{read_matrix, Outputs};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub a_true: PathBuf,
    #[arg(long)]
    pub a_hat: PathBuf,
    #[arg(long, requires = "s_hat")]
    pub s_true: Option<PathBuf>,
    #[arg(long, requires = "s_true")]
    pub s_hat: Option<PathBuf>,
    /// Marker points per source for the marker-pattern correlation
    #[arg(long, requires = "s_true")]
    pub markers: Option<usize>,
    /// Output JSON file; printed to stdout only when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub e_a: f64,
    /// Mean angle between paired columns, in radians.
    pub mean_angle: f64,
    pub e_s: Option<f64>,
    pub e_s_markers: Option<f64>,
    /// `pairing[k]` is the estimated column matched to true column `k`.
    pub pairing: Vec<usize>,
}

pub fn metrics(
    a_true: &Matrix64,
    a_hat: &Matrix64,
    sources: Option<(&Matrix64, &Matrix64)>,
    markers: Option<usize>,
) -> CliResult<Metrics> {
    if a_true.rows() != a_hat.rows() || a_true.cols() != a_hat.cols() {
        return Err(CliError::Validation(format!(
            "A_true is {}x{} but A_hat is {}x{}",
            a_true.rows(),
            a_true.cols(),
            a_hat.rows(),
            a_hat.cols()
        )));
    }
    if let Some((s, h)) = sources {
        if s.rows() != a_true.cols() || h.rows() != a_true.cols() || s.cols() != h.cols() {
            return Err(CliError::Validation(format!(
                "S_true is {}x{} and S_hat is {}x{}; both must be {}xN",
                s.rows(),
                s.cols(),
                h.rows(),
                h.cols(),
                a_true.cols()
            )));
        }
    }
    if markers == Some(0) {
        return Err(CliError::Validation("--markers must be positive".into()));
    }
    let r = evaluate(a_true, a_hat, sources, markers)?;
    let (mean_angle, _) = min_avg_angle(a_true, a_hat)?;
    Ok(Metrics { e_a: r.e_a, mean_angle, e_s: r.e_s, e_s_markers: r.e_s_markers, pairing: r.pairing })
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let a_true = read_matrix(&args.a_true)?;
    let a_hat = read_matrix(&args.a_hat)?;
    let sources = match (&args.s_true, &args.s_hat) {
        (Some(t), Some(h)) => Some((read_matrix(t)?, read_matrix(h)?)),
        _ => None,
    };
    let m = metrics(&a_true, &a_hat, sources.as_ref().map(|(t, h)| (t, h)), args.markers)?;
    if let Some(path) = args.out {
        let mut out = Outputs::default();
        out.json(path, &m);
        out.write()?;
    }
    say!("E_A = {:.4} (mean angle {:.3} deg)", m.e_a, m.mean_angle.to_degrees());
    if let Some(e) = m.e_s {
        say!("E_S = {e:.4}");
    }
    if let Some(e) = m.e_s_markers {
        say!("E_S (markers) = {e:.4}");
    }
    say!("pairing {:?}", m.pairing);
    Ok(())
}
