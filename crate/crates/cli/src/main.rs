use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qt_bench::experiments::{self, BenchMethod, HankelRow, MertonRow, QbdRow, SqrtRow};
use qt_bench::parse_sizes;
use qtoeplitz::hankel::{set_default_compression, set_default_seed};
use qtoeplitz::matfunc::ExpmMethod;
use qtoeplitz::CompressionMethod;

#[derive(Parser)]
#[command(
    name = "qt-bench",
    about = "Quasi-Toeplitz experiments, written as CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compressor used for large Hankel products inside the arithmetic.
    #[arg(long, value_enum, default_value = "lanczos")]
    compression: Compression,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Compression {
    Lanczos,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpMethod {
    Taylor,
    Pade,
}

#[derive(Subcommand)]
enum Command {
    /// Compress products of two random Hankel operators.
    HankelBench {
        #[arg(long)]
        sizes: String,
        /// Comma-separated subset of lanczos, random, svd.
        #[arg(long, default_value = "lanczos,random")]
        method: String,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exponential of the Merton model generator.
    MertonExpm {
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 1e-15)]
        tol: f64,
        #[arg(long, value_enum, default_value = "taylor")]
        method: ExpMethod,
        #[command(flatten)]
        common: Common,
    },
    /// Square root of a banded Toeplitz operator with a random rank-3 corner.
    SqrtmDemo {
        /// Corner supports.
        #[arg(long)]
        sizes: String,
        /// Added to the constant coefficient. The unshifted symbol vanishes
        /// at z = -1, where the square root is not available.
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal solution of the quadratic equation of a QBD chain.
    Qbd {
        /// Block sizes.
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 1e-15)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::HankelBench { common, .. }
            | Command::MertonExpm { common, .. }
            | Command::SqrtmDemo { common, .. }
            | Command::Qbd { common, .. } => common,
        }
    }

    fn sizes(&self) -> &str {
        match self {
            Command::HankelBench { sizes, .. }
            | Command::MertonExpm { sizes, .. }
            | Command::SqrtmDemo { sizes, .. }
            | Command::Qbd { sizes, .. } => sizes,
        }
    }
}

fn run(cmd: &Command, sizes: &[usize], out: &mut dyn Write) -> Result<(), String> {
    let seed = cmd.common().seed;
    let fail = |e: qtoeplitz::QtError| e.to_string();
    let io = |e: io::Error| e.to_string();
    match cmd {
        Command::HankelBench { method, tol, .. } => {
            let methods = method
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<BenchMethod>, String>>()?;
            writeln!(out, "{}", HankelRow::HEADER).map_err(io)?;
            for &n in sizes {
                for &m in &methods {
                    let row = experiments::hankel_bench(n, m, *tol, seed).map_err(fail)?;
                    writeln!(out, "{}", row.csv()).map_err(io)?;
                }
            }
        }
        Command::MertonExpm { tol, method, .. } => {
            let method = match method {
                ExpMethod::Taylor => ExpmMethod::Taylor,
                ExpMethod::Pade => ExpmMethod::Pade,
            };
            writeln!(out, "{}", MertonRow::HEADER).map_err(io)?;
            for &n in sizes {
                let row = experiments::merton_expm(n, *tol, method, experiments::DENSE_ORACLE_CAP)
                    .map_err(fail)?;
                writeln!(out, "{}", row.csv()).map_err(io)?;
            }
        }
        Command::SqrtmDemo { shift, .. } => {
            writeln!(out, "{}", SqrtRow::HEADER).map_err(io)?;
            for &s in sizes {
                let row = experiments::sqrtm_demo(s, seed, *shift).map_err(fail)?;
                writeln!(out, "{}", row.csv()).map_err(io)?;
            }
        }
        Command::Qbd { tol, .. } => {
            writeln!(out, "{}", QbdRow::HEADER).map_err(io)?;
            for &m in sizes {
                let row = experiments::qbd(m, *tol).map_err(fail)?;
                writeln!(out, "{}", row.csv()).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

fn minimum_size(cmd: &Command) -> usize {
    match cmd {
        Command::HankelBench { .. } => 2,
        Command::MertonExpm { .. } => 4,
        Command::SqrtmDemo { .. } | Command::Qbd { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = &cli.command;
    let sizes = match parse_sizes(cmd.sizes()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: --sizes: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(&bad) = sizes.iter().find(|&&s| s < minimum_size(cmd)) {
        eprintln!(
            "error: --sizes: {bad} is below the minimum {}",
            minimum_size(cmd)
        );
        return ExitCode::from(2);
    }
    let common = cmd.common();
    set_default_seed(common.seed);
    set_default_compression(match common.compression {
        Compression::Lanczos => CompressionMethod::Lanczos,
        Compression::Random => CompressionMethod::Random,
    });
    let mut out: Box<dyn Write> = match &common.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match run(cmd, &sizes, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
