use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catpose::aggregation::SweepAxis;
use catpose::cli::{
    cmd_annotate, cmd_convergence, cmd_evaluate, cmd_sweep, convergence_counts, parse_grid, CliOverrides, FileConfig,
    RunConfig,
};
use catpose::shape_metrics::{Frame, DEFAULT_FSCORE_DELTA};
use catpose::Error;

/// Evaluation toolkit for categorical 6D pose and shape estimation.
#[derive(Parser)]
#[command(name = "catpose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score prediction sets and write precision tables and a report.
    Evaluate(RunArgs),
    /// Precision as a function of one threshold.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// translation, rotation or fscore
        #[arg(long)]
        axis: String,
        /// start:stop:step (inclusive) or a comma list
        #[arg(long)]
        grid: String,
    },
    /// Produce a ground-truth mesh and tight box from a depth sequence.
    Annotate {
        /// Sequence manifest (JSON)
        sequence: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file whose `categories` override the symmetry table
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Chamfer distance and F-score versus number of surface samples.
    Convergence {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Comma-separated sample counts; overrides the log range
        #[arg(long)]
        counts: Option<String>,
        #[arg(long, default_value_t = 100)]
        min_samples: usize,
        #[arg(long, default_value_t = 100_000)]
        max_samples: usize,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_FSCORE_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Ground-truth root or manifest
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Predictions root or manifest (repeatable)
    #[arg(long)]
    pred: Vec<PathBuf>,
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Threshold preset (real275-suite, real275-category)
    #[arg(long)]
    preset: Option<String>,
    /// world or object
    #[arg(long)]
    frame: Option<String>,
    /// Surface samples per shape
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(self) -> catpose::Result<RunConfig> {
        let frame = self.frame.map(|f| f.parse::<Frame>()).transpose()?;
        RunConfig::resolve(CliOverrides {
            gt: self.gt,
            pred: self.pred,
            config: self.config,
            preset: self.preset,
            frame,
            samples: self.samples,
            seed: self.seed,
            out: self.out,
        })
    }
}

fn run(cli: Cli) -> catpose::Result<()> {
    match cli.command {
        Command::Evaluate(args) => {
            let cfg = args.resolve()?;
            let (reports, outputs) = cmd_evaluate(&cfg)?;
            for r in &reports {
                for p in &r.precision {
                    println!("{}\t{}\t{}", r.method, p.spec.label(), p.overall);
                }
            }
            log::info!("wrote {} files to {}", outputs.files.len(), cfg.out.display());
        }
        Command::Sweep { run, axis, grid } => {
            let axis: SweepAxis = axis.parse()?;
            let grid = parse_grid(&grid)?;
            let cfg = run.resolve()?;
            let (_, outputs) = cmd_sweep(&cfg, axis, &grid)?;
            for f in &outputs.files {
                println!("{}", f.display());
            }
        }
        Command::Annotate { sequence, out, config } => {
            let categories = match config {
                Some(p) => FileConfig::read(&p)?.categories,
                None => Vec::new(),
            };
            let (annotation, _) = cmd_annotate(&sequence, &out, &categories)?;
            let b = annotation.tight_box;
            println!(
                "tight box center {:?} half extents {:?}",
                b.center().coords.as_slice(),
                b.half_extents().as_slice()
            );
        }
        Command::Convergence {
            gt,
            pred,
            counts,
            min_samples,
            max_samples,
            steps,
            delta,
            seed,
            out,
        } => {
            let counts = convergence_counts(counts.as_deref(), min_samples, max_samples, steps)?;
            let (rows, _) = cmd_convergence(&gt, &pred, &counts, delta, seed, &out)?;
            for r in rows {
                println!("{}\t{}\t{}", r.n_samples, r.chamfer_m, r.fscore);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        1
    } else {
        2
    }
}
