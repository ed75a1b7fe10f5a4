use std::path::PathBuf;

use clap::Args;
use hisparse::measure::{gaussian_operator, subsampled_dft, RowSelection};
use hisparse::model::FlatSparsity;
use hisparse::ripcalc::{
    exhaustive_rip_capped, gaussian_sample_bound, monte_carlo_rip, tree_sample_bound, RipEstimate,
    DEFAULT_RIP_CAP,
};

use crate::CliError;

#[derive(Args)]
pub struct RipBoundArgs {
    /// Target restricted isometry constant, in (0, 1).
    #[arg(long)]
    pub delta: f64,
    /// Failure probability, in (0, 1).
    #[arg(long)]
    pub epsilon: f64,
    /// Number of blocks N (two-level form).
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Block size n (two-level form).
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Active block budget s (two-level form).
    #[arg(long)]
    pub block_sparsity: Option<usize>,
    /// In-block budget sigma (two-level form).
    #[arg(long)]
    pub inner_sparsity: Option<usize>,
    /// General level list "n0:s0,n1:s1,..." (root first) instead of the
    /// two-level flags.
    #[arg(long)]
    pub levels: Option<String>,
}

fn parse_levels(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    text.split(',')
        .map(|pair| {
            let (n, s) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::invalid(format!("levels: {pair:?} is not n:s")))?;
            let n = n
                .parse()
                .map_err(|_| CliError::invalid(format!("levels: bad n in {pair:?}")))?;
            let s = s
                .parse()
                .map_err(|_| CliError::invalid(format!("levels: bad s in {pair:?}")))?;
            Ok((n, s))
        })
        .collect()
}

pub fn run_bound(args: RipBoundArgs) -> Result<(), CliError> {
    let levels: Vec<(usize, usize)> = match (&args.levels, args.blocks) {
        (Some(text), _) => parse_levels(text)?,
        (None, Some(blocks)) => {
            let block_size = args
                .block_size
                .ok_or_else(|| CliError::invalid("block_size: required with --blocks"))?;
            let s = args
                .block_sparsity
                .ok_or_else(|| CliError::invalid("block_sparsity: required with --blocks"))?;
            let sigma = args
                .inner_sparsity
                .ok_or_else(|| CliError::invalid("inner_sparsity: required with --blocks"))?;
            vec![(blocks, s), (block_size, sigma)]
        }
        _ => {
            return Err(CliError::invalid(
                "either --levels or the two-level flags (--blocks --block-size --block-sparsity --inner-sparsity) are required",
            ))
        }
    };
    let hierarchical = tree_sample_bound(&levels, args.delta, args.epsilon)?;
    let ambient: usize = levels.iter().map(|&(n, _)| n).product();
    let total_sparsity: usize = levels.iter().map(|&(_, s)| s).product();
    let unstructured = tree_sample_bound(&[(ambient, total_sparsity)], args.delta, args.epsilon)?;

    println!(
        "sample bounds at delta = {}, epsilon = {} (levels {:?}, d = {ambient}):",
        args.delta, args.epsilon, levels
    );
    println!("  hierarchical sparsity: m >= {hierarchical}");
    println!("  unstructured {total_sparsity}-sparsity: m >= {unstructured}");
    if unstructured >= hierarchical {
        println!(
            "  structure saves {} measurements",
            unstructured - hierarchical
        );
    } else {
        println!(
            "  structure costs {} extra measurements at these dimensions",
            hierarchical - unstructured
        );
    }
    Ok(())
}

#[derive(Args)]
pub struct RipEstimateArgs {
    /// exhaustive | monte-carlo
    #[arg(long, default_value = "exhaustive")]
    pub method: String,
    #[arg(long)]
    pub blocks: usize,
    #[arg(long)]
    pub block_size: usize,
    #[arg(long)]
    pub block_sparsity: usize,
    #[arg(long)]
    pub inner_sparsity: usize,
    /// Measurement rows of the generated operator.
    #[arg(long)]
    pub m: usize,
    /// gaussian | fourier-uniform | fourier-lowest
    #[arg(long, default_value = "gaussian")]
    pub ensemble: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo support draws.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Exhaustive enumeration cap.
    #[arg(long, default_value_t = DEFAULT_RIP_CAP)]
    pub cap: u64,
    /// Target delta for the bound columns.
    #[arg(long, default_value_t = 0.577)]
    pub delta: f64,
    /// Failure probability for the bound columns.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Write a CSV table here in addition to the stdout summary.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run_estimate(args: RipEstimateArgs) -> Result<(), CliError> {
    let fp = FlatSparsity::new(
        args.blocks,
        args.block_size,
        args.block_sparsity,
        args.inner_sparsity,
    )?;
    let d = fp.dim();
    if args.m == 0 || args.m > d {
        return Err(CliError::invalid(format!("m: must satisfy 1 <= m <= {d}")));
    }

    let estimate: RipEstimate = match (args.ensemble.as_str(), args.method.as_str()) {
        ("gaussian", method) => {
            // the bound statements concern A / sqrt(m)
            let op = gaussian_operator(args.m, d, args.seed)?.scaled(1.0 / (args.m as f64).sqrt());
            match method {
                "exhaustive" => exhaustive_rip_capped(&op, &fp, args.cap)?,
                "monte-carlo" => monte_carlo_rip(&op, &fp, args.trials, args.seed)?,
                other => return Err(CliError::invalid(format!("method: unknown {other:?}"))),
            }
        }
        (fourier, method) => {
            let selection = match fourier {
                "fourier-uniform" => RowSelection::UniformRandom { seed: args.seed },
                "fourier-lowest" => RowSelection::Lowest,
                other => return Err(CliError::invalid(format!("ensemble: unknown {other:?}"))),
            };
            let op = subsampled_dft(d, args.m, selection)?;
            match method {
                "exhaustive" => exhaustive_rip_capped(&op, &fp, args.cap)?,
                "monte-carlo" => monte_carlo_rip(&op, &fp, args.trials, args.seed)?,
                other => return Err(CliError::invalid(format!("method: unknown {other:?}"))),
            }
        }
    };

    let bound_hier = gaussian_sample_bound(&fp, args.delta, args.epsilon)?;
    let bound_unstructured =
        tree_sample_bound(&[(d, fp.saturated_size())], args.delta, args.epsilon)?;

    println!(
        "{} {} operator, m = {}, d = {d}, sparsity ({}, {}) over {} blocks of {}:",
        args.ensemble,
        args.method,
        args.m,
        args.block_sparsity,
        args.inner_sparsity,
        args.blocks,
        args.block_size
    );
    println!(
        "  delta {}= {:.6} over {} supports",
        if estimate.supports_checked > 0 && args.method == "monte-carlo" {
            ">"
        } else {
            ""
        },
        estimate.delta_lower,
        estimate.supports_checked
    );
    println!(
        "  sample bound at delta = {}, epsilon = {}: hierarchical m >= {bound_hier}, unstructured m >= {bound_unstructured}",
        args.delta, args.epsilon
    );

    if let Some(path) = &args.output {
        let mut file = std::fs::File::create(path)
            .map_err(|e| CliError::invalid(format!("cannot create {}: {e}", path.display())))?;
        use std::io::Write;
        writeln!(
            file,
            "ensemble,method,m,d,blocks,block_size,block_sparsity,inner_sparsity,supports_checked,delta,m_bound_hierarchical,m_bound_unstructured"
        )
        .and_then(|_| {
            writeln!(
                file,
                "{},{},{},{d},{},{},{},{},{},{},{bound_hier},{bound_unstructured}",
                args.ensemble,
                args.method,
                args.m,
                args.blocks,
                args.block_size,
                args.block_sparsity,
                args.inner_sparsity,
                estimate.supports_checked,
                estimate.delta_lower
            )
        })
        .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
