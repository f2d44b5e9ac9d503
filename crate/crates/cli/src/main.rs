use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kerr_metrology::config::{load_config, Product, ScenarioConfig};
use kerr_metrology::figures::{preset, reproduce_with, Figure};
use kerr_metrology::output::{emit_csv, write_csv};
use kerr_metrology::parallel::{with_jobs, Execution};
use kerr_metrology::runner::run_detailed;
use kerr_metrology::Error;

#[cfg(feature = "plots")]
mod plot;
mod selftest;

/// Quantum Fisher information of a driven, lossy Kerr resonator.
#[derive(Debug, Parser)]
#[command(name = "kerr-qfi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
        #[command(flatten)]
        out: OutDir,
    },
    /// Regenerate the data (and plots) of one figure.
    Reproduce {
        figure: Figure,
        #[command(flatten)]
        opts: Overrides,
        #[command(flatten)]
        out: OutDir,
        /// Skip SVG output.
        #[arg(long)]
        no_plots: bool,
    },
    /// Check the solver against analytic and finite-difference references.
    Selftest {
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "KERR_QFI_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Fock truncation for every scenario.
    #[arg(long)]
    dim: Option<usize>,
    /// Final time; keeps the number of output times.
    #[arg(long)]
    tmax: Option<f64>,
    /// Relative integrator tolerance.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Local-oscillator phase; repeat for several.
    #[arg(long)]
    theta: Vec<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), Error> {
        if let Some(dim) = self.dim {
            cfg.set_dim(dim);
        }
        if let Some(t) = self.tmax {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config("--tmax must be > 0".into()));
            }
            let n = cfg.propagation.t_grid.len();
            cfg.set_time_grid(t, n);
        }
        if let Some(r) = self.rel_tol {
            cfg.propagation.rel_tol = r;
        }
        if !self.theta.is_empty() {
            cfg.thetas = self.theta.clone();
        }
        cfg.validate()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::InvalidDimension(_)
        | Error::DimensionMismatch { .. } => 2,
        Error::TruncationOverflow { .. } => 3,
        Error::Io(_) => 1,
        _ => 4,
    }
}

fn run(config: &Path, opts: &Overrides, out: &Path) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    opts.apply(&mut cfg)?;
    let result = with_jobs(opts.jobs, || run_detailed(&cfg, Execution::Parallel))??;
    let stem = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let path = out.join(format!("{stem}.csv"));
    emit_csv(&result.rows, &path)?;
    println!("{}", path.display());
    if cfg.wants(Product::Bounds) {
        let path = out.join(format!("{stem}_bounds.csv"));
        write_csv(&result.bounds, &path)?;
        println!("{}", path.display());
    }
    if cfg.wants(Product::Distributions) {
        let path = out.join(format!("{stem}_distributions.csv"));
        write_csv(&result.distributions, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn reproduce(fig: Figure, opts: &Overrides, out: &Path, plots: bool) -> Result<(), Error> {
    let mut configs = preset(fig);
    for c in &mut configs {
        opts.apply(c)?;
    }
    let result = with_jobs(opts.jobs, || {
        reproduce_with(fig, &configs, out, Execution::Parallel)
    })??;
    println!("{}", result.csv_path.display());
    if plots {
        #[cfg(feature = "plots")]
        for path in plot::render(&result, out)? {
            println!("{}", path.display());
        }
        #[cfg(not(feature = "plots"))]
        eprintln!("built without the `plots` feature; only CSV written");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, opts, out } => run(config, opts, &out.out),
        Command::Reproduce {
            figure,
            opts,
            out,
            no_plots,
        } => reproduce(*figure, opts, &out.out, !no_plots),
        Command::Selftest { jobs } => with_jobs(*jobs, selftest::run).and_then(|ok| {
            if ok {
                Ok(())
            } else {
                Err(Error::Numerical("selftest failed".into()))
            }
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
