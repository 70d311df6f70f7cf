use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bltc::harness::{
    default_sample_size, generate_particles, read_particles_csv, run_benchmark, write_records, BenchConfig,
    OutputFormat, Sweep,
};
use bltc::{EvalConfig, KernelSpec, Result};

#[derive(Parser)]
#[command(
    name = "bltc",
    version,
    about = "Barycentric Lagrange treecode benchmark and validation driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single treecode run.
    Run(Common),
    /// One run per (theta, degree) pair.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.7, 0.9])]
        thetas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 3, 5, 7, 9, 11, 13])]
        degrees: Vec<usize>,
    },
    /// Single run checked against the direct sum (sampled by default).
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Coulomb,
    Yukawa,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 100_000)]
    n_particles: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "coulomb")]
    kernel: KernelArg,
    /// Inverse screening length for the Yukawa kernel.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    #[arg(long, default_value_t = 8)]
    degree: usize,
    #[arg(long, default_value_t = 2000)]
    leaf_size: usize,
    #[arg(long, default_value_t = 2000)]
    batch_size: usize,
    /// Simulated ranks.
    #[arg(long, default_value_t = 1)]
    ranks: usize,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Oracle sample size; without a value, min(N, 10000).
    #[arg(long, num_args = 0..=1, value_name = "M")]
    verify: Option<Option<usize>>,
    /// Allow the unsampled oracle above one million particles.
    #[arg(long)]
    full_oracle: bool,
    /// Read particles from an x,y,z,q CSV instead of generating them.
    #[arg(long)]
    particles: Option<PathBuf>,
    /// Write records here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (common, sweep, always_verify) = match cli.command {
        Command::Run(c) => (c, None, false),
        Command::Sweep {
            common,
            thetas,
            degrees,
        } => (common, Some(Sweep { thetas, degrees }), false),
        Command::Verify(c) => (c, None, true),
    };
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| bltc::BltcError::InvalidConfig(e.to_string()))?;
    }
    let particles = match &common.particles {
        Some(path) => read_particles_csv(BufReader::new(File::open(path)?))?,
        None => generate_particles(common.n_particles, common.seed),
    };
    let kernel = match common.kernel {
        KernelArg::Coulomb => KernelSpec::coulomb(),
        KernelArg::Yukawa => KernelSpec::yukawa(common.kappa),
    };
    let verify = match common.verify {
        Some(Some(m)) => Some(m),
        Some(None) => Some(default_sample_size(particles.len())),
        None => always_verify.then(|| default_sample_size(particles.len())),
    };
    let bench = BenchConfig {
        eval: EvalConfig {
            theta: common.theta,
            degree: common.degree,
            leaf_size: common.leaf_size,
            batch_size: common.batch_size,
            kernel,
        },
        ranks: common.ranks,
        seed: common.seed,
        verify,
        allow_full_oracle: common.full_oracle,
    };
    let records = run_benchmark(&particles, &bench, sweep.as_ref())?;
    let format = match common.format {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Csv => OutputFormat::Csv,
    };
    match &common.output {
        Some(path) => write_records(&records, format, BufWriter::new(File::create(path)?)),
        None => write_records(&records, format, std::io::stdout().lock()),
    }
}
