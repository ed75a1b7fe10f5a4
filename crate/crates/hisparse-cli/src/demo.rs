use clap::Args;
use num_complex::Complex64;

use hisparse::bench::{add_noise, gen_signal};
use hisparse::measure::{
    gaussian_operator, normalize_columns, subsampled_dft, unnormalize_solution, ColumnScaling,
    MeasurementOperator, RowSelection,
};
use hisparse::model::{FlatSparsity, SignalVector};
use hisparse::scalar::Scalar;
use hisparse::solve::{hihtp, htp, SolveResult, SolverOptions};

use crate::CliError;

#[derive(Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 10)]
    pub blocks: usize,
    #[arg(long, default_value_t = 20)]
    pub block_size: usize,
    #[arg(long, default_value_t = 2)]
    pub block_sparsity: usize,
    #[arg(long, default_value_t = 4)]
    pub inner_sparsity: usize,
    /// Measurement count.
    #[arg(long, default_value_t = 60)]
    pub m: usize,
    /// gaussian | fourier-uniform | fourier-lowest
    #[arg(long, default_value = "gaussian")]
    pub ensemble: String,
    /// Add noise at this signal-to-noise power ratio.
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

struct Report {
    name: &'static str,
    iterations: usize,
    stop: String,
    relative_error: f64,
    wall: f64,
}

fn reconstruct<T: Scalar, Op: MeasurementOperator<T> + ?Sized>(
    name: &'static str,
    op: &Op,
    y: &SignalVector<T>,
    fp: &FlatSparsity,
    scaling: &ColumnScaling,
    truth: &SignalVector<T>,
    hierarchical: bool,
) -> Result<Report, CliError> {
    let opts = SolverOptions::default();
    let start = std::time::Instant::now();
    let result: SolveResult<T> = if hierarchical {
        hihtp(op, y, fp, &opts)?
    } else {
        htp(op, y, fp.saturated_size(), &opts)?
    };
    let wall = start.elapsed().as_secs_f64();
    let estimate = unnormalize_solution(&result.estimate, scaling)?;
    let relative_error = estimate.sub(truth).norm() / truth.norm();
    Ok(Report {
        name,
        iterations: result.iterations,
        stop: format!("{:?}", result.stop_reason),
        relative_error,
        wall,
    })
}

pub fn run(args: DemoArgs) -> Result<(), CliError> {
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
    println!(
        "instance: {} blocks of {}, budgets ({}, {}), d = {d}, m = {}, ensemble {}, seed {}",
        args.blocks,
        args.block_size,
        args.block_sparsity,
        args.inner_sparsity,
        args.m,
        args.ensemble,
        args.seed
    );

    let reports: Vec<Report> = match args.ensemble.as_str() {
        "gaussian" => {
            let raw = gaussian_operator(args.m, d, args.seed)?;
            let (op, scaling) = normalize_columns(&raw)?;
            let (x, _) = gen_signal::<f64, _>(&fp, args.seed ^ 0x5157)?;
            let x_scaled = SignalVector::from(
                x.iter()
                    .zip(scaling.scales.iter())
                    .map(|(e, &s)| e * s)
                    .collect::<Vec<f64>>(),
            );
            let mut y = op.apply(&x_scaled)?;
            if let Some(snr) = args.snr {
                y = add_noise(&y, snr, args.seed ^ 0xA0A0)?;
            }
            vec![
                reconstruct("hihtp", &op, &y, &fp, &scaling, &x, true)?,
                reconstruct("htp", &op, &y, &fp, &scaling, &x, false)?,
            ]
        }
        fourier => {
            let selection = match fourier {
                "fourier-uniform" => RowSelection::UniformRandom { seed: args.seed },
                "fourier-lowest" => RowSelection::Lowest,
                other => return Err(CliError::invalid(format!("ensemble: unknown {other:?}"))),
            };
            let op = subsampled_dft(d, args.m, selection)?;
            let scaling = ColumnScaling::identity(d);
            let (x, _) = gen_signal::<Complex64, _>(&fp, args.seed ^ 0x5157)?;
            let mut y = op.apply(&x)?;
            if let Some(snr) = args.snr {
                y = add_noise(&y, snr, args.seed ^ 0xA0A0)?;
            }
            vec![
                reconstruct("hihtp", &op, &y, &fp, &scaling, &x, true)?,
                reconstruct("htp", &op, &y, &fp, &scaling, &x, false)?,
            ]
        }
    };

    println!("algorithm  iterations  stop             rel-error     time");
    for r in &reports {
        println!(
            "{:<10} {:>10}  {:<16} {:>9.3e}  {:>7.4}s",
            r.name, r.iterations, r.stop, r.relative_error, r.wall
        );
    }
    Ok(())
}
