use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lp_bootstrap::metrics::read_cells_csv;
use lp_bootstrap::{Error, PathMethod, SchemeKind};
use lp_bootstrap_cli::experiment::{default_workers, run_experiment, RunOptions};
use lp_bootstrap_cli::infer::{infer_file, render, InferReport, InferRequest, LagChoice};
use lp_bootstrap_cli::plot::{coverage_bars, write_coverage_bars, write_irf_band, PlotKind};
use lp_bootstrap_cli::exit;

#[derive(Parser)]
#[command(name = "lpboot", version, about = "Local projection bootstrap confidence intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment described by a TOML spec.
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: LPBOOT_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Raise the bootstrap replicate count to 999.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Bootstrap intervals for one column of a CSV file.
    Infer {
        csv: PathBuf,
        #[arg(long)]
        column: String,
        /// `sbic` or a fixed lag order.
        #[arg(long, default_value = "sbic")]
        p: String,
        #[arg(long = "H")]
        h: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        method: u8,
        #[arg(long, default_value = "bwb")]
        scheme: String,
        #[arg(long)]
        block_length: Option<usize>,
        #[arg(long = "B", default_value_t = 199)]
        b: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include a constant in the regressions.
        #[arg(long)]
        intercept: bool,
        /// Directory for inference.json and irf_band.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an inference report or metrics table into plot data.
    PlotData {
        result: PathBuf,
        #[arg(long)]
        kind: String,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Nominal coverage drawn as the reference line.
        #[arg(long, default_value_t = 0.9)]
        nominal: f64,
    },
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit::INPUT as u8)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn plot_data(result: &Path, kind: &str, out: &Option<PathBuf>, nominal: f64) -> Result<(), Error> {
    match kind.parse::<PlotKind>()? {
        PlotKind::IrfBand => {
            let report: InferReport = serde_json::from_str(&fs::read_to_string(result)?)?;
            write_irf_band(&report.intervals, sink(out)?)
        }
        PlotKind::CoverageBars => {
            let cells = read_cells_csv(fs::File::open(result)?)?;
            write_coverage_bars(&coverage_bars(&cells, nominal), sink(out)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, out, workers, paper_scale } => {
            let opts = RunOptions { workers: workers.unwrap_or_else(default_workers), paper_scale };
            match run_experiment(&spec, &out, opts) {
                Ok(summary) if summary.failures.is_empty() => {
                    println!(
                        "{} tasks in {:.1} s; metrics written to {}",
                        summary.manifest.n_tasks,
                        summary.manifest.wall_clock_seconds,
                        summary.metrics_csv.display()
                    );
                    ExitCode::SUCCESS
                }
                Ok(summary) => {
                    eprintln!("{} failures (see failures.json):", summary.failures.len());
                    for f in summary.failures.iter().take(20) {
                        let rep = f.rep.map_or("cell".to_string(), |r| format!("rep {r}"));
                        eprintln!("  {} T={} {} {} h={} {rep}: {}", f.design, f.t, f.lag_rule, f.method, f.h, f.error);
                    }
                    ExitCode::from(exit::PARTIAL as u8)
                }
                Err(e) => fail(e),
            }
        }
        Command::Infer { csv, column, p, h, method, scheme, block_length, b, alpha, seed, intercept, out } => {
            let req = (|| {
                Ok::<_, Error>(InferRequest {
                    column,
                    lag: p.parse::<LagChoice>()?,
                    max_horizon: h,
                    method: if method == 2 { PathMethod::Method2 } else { PathMethod::Method1 },
                    scheme: scheme.parse::<SchemeKind>()?,
                    block_length,
                    replicates: b,
                    alpha,
                    seed,
                    intercept,
                })
            })();
            match req.and_then(|r| infer_file(&csv, &r, out.as_deref())) {
                Ok(report) => {
                    print!("{}", render(&report));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::PlotData { result, kind, out, nominal } => match plot_data(&result, &kind, &out, nominal) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e),
        },
    }
}
