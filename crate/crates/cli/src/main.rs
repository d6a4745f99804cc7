//! `nilcomm`: factor nilpotent matrices as commutators, verify factors,
//! generate test inputs and run the exponent scan.
//!
//! Exit codes: 0 success, 1 I/O, parse or configuration error,
//! 2 input not nilpotent, 3 residual or construction failure,
//! 4 dimension mismatch.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nilcomm::canonicalize::{Canonicalizer, DEFAULT_RANK_TOL};
use nilcomm::construct::{verify_matrices, Mode, TOL_COMM};
use nilcomm::mtx::{read_matrix_market, write_matrix_market};
use nilcomm::pipeline::factor_within;
use nilcomm::report::RunReport;
use nilcomm::scan::{run_scan, write_csv, ScanConfig};
use nilcomm::testgen::{gen_nilpotent, Decay, GenSpec};
use nilcomm::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_NOT_NILPOTENT: u8 = 2;
const EXIT_FAILED: u8 = 3;
const EXIT_DIMENSION: u8 = 4;

#[derive(Parser)]
#[command(name = "nilcomm", version, about = "Nilpotent matrices as single commutators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor A = BC − CB and write B.mtx, C.mtx and report.json.
    Factor {
        #[arg(long)]
        input: PathBuf,
        /// `theorem` (decay-preserving) or `proposition` (B a block shift).
        #[arg(long, default_value = "theorem")]
        mode: Mode,
        #[arg(long)]
        out_dir: PathBuf,
        /// Bound on the relative residual.
        #[arg(long, default_value_t = TOL_COMM)]
        tol: f64,
        /// Relative singular-value threshold for the kernel flag.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
    },
    /// Check A ⊕ 0 = BC − CB and print the relative residual.
    Verify {
        a: PathBuf,
        b: PathBuf,
        c: PathBuf,
        #[arg(long, default_value_t = TOL_COMM)]
        tol: f64,
    },
    /// Write the nilpotent matrix described by a JSON spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Factor generated inputs over a grid and write one CSV row per trial.
    Scan {
        /// Inclusive range of Jordan block sizes, e.g. `4..6`.
        #[arg(long, value_parser = parse_range)]
        n_range: RangeInclusive<usize>,
        /// `none`, `geometric:RHO` or `polynomial:ALPHA`.
        #[arg(long)]
        decay: Decay,
        /// Comma-separated matrix sizes.
        #[arg(long)]
        dims: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = TOL_COMM)]
        tol: f64,
    },
}

/// Message and exit code of a failed command.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::NotNilpotent { .. } => EXIT_NOT_NILPOTENT,
            Error::DimensionMismatch(_) => EXIT_DIMENSION,
            Error::ResidualTooLarge { .. }
            | Error::MajorizationViolated { .. }
            | Error::NotHermitian { .. }
            | Error::NotPsd { .. }
            | Error::InsufficientData { .. } => EXIT_FAILED,
            Error::ShapeMismatch(_)
            | Error::PartitionMismatch { .. }
            | Error::InvalidSpec(_)
            | Error::Parse(_)
            | Error::Io(_) => EXIT_INPUT,
        };
        Failure { code, message: err.to_string() }
    }
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let bound = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad bound {v:?}: {e}"));
    Ok(bound(lo)?..=bound(hi)?)
}

fn parse_dims(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(|part| part.parse().map_err(|_| Failure::input(format!("bad dimension {part:?}"))))
        .collect()
}

fn read(path: &Path) -> Result<nilcomm::Matrix, Failure> {
    read_matrix_market(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, m: &nilcomm::Matrix) -> Result<(), Failure> {
    write_matrix_market(path, m).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn factor(input: &Path, mode: Mode, out_dir: &Path, tol: f64, rank_tol: f64) -> Result<(), Failure> {
    let a = read(input)?;
    if !a.is_square() {
        return Err(Failure::input(format!("{}: matrix is {}x{}, not square", input.display(), a.nrows(), a.ncols())));
    }
    let start = Instant::now();
    let fact = factor_within(&a, mode, &Canonicalizer::new(rank_tol), tol)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    fs::create_dir_all(out_dir).map_err(|e| Failure::input(format!("{}: {e}", out_dir.display())))?;
    write(&out_dir.join("B.mtx"), &fact.pair.b)?;
    write(&out_dir.join("C.mtx"), &fact.pair.c)?;
    let report = RunReport::new(&input.display().to_string(), &a, &fact, elapsed);
    let json = serde_json::to_string_pretty(&report).expect("report fields are finite");
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, json).map_err(|e| Failure::input(format!("{}: {e}", report_path.display())))?;

    println!(
        "residual_rel {:e} n {} exponent_t {} max_witness_norm {}",
        report.residual_rel, report.n, report.exponent_t, report.max_witness_norm
    );
    if fact.passes(tol) {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_FAILED,
            message: format!(
                "factorization failed verification: residual {:e}, witness norm {} (tolerance {tol:e})",
                report.residual_rel, report.max_witness_norm
            ),
        })
    }
}

fn verify(a: &Path, b: &Path, c: &Path, tol: f64) -> Result<(), Failure> {
    let (a, b, c) = (read(a)?, read(b)?, read(c)?);
    let report = verify_matrices(&a, &b, &c)?;
    println!("residual_rel {:e}", report.residual_rel);
    if report.residual_rel <= tol {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_FAILED,
            message: format!("residual {:e} exceeds tolerance {tol:e}", report.residual_rel),
        })
    }
}

fn gen(spec: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(spec).map_err(|e| Failure::input(format!("{}: {e}", spec.display())))?;
    let spec = GenSpec::from_json(&text)?;
    write(out, &gen_nilpotent(&spec)?)
}

fn scan(cfg: ScanConfig, out: &Path) -> Result<(), Failure> {
    let rows = run_scan(&cfg)?;
    let file = fs::File::create(out).map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    write_csv(&rows, std::io::BufWriter::new(file))
        .map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    println!("{} trials, {failed} failed", rows.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure { code: EXIT_FAILED, message: format!("{failed} of {} trials failed", rows.len()) })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Factor { input, mode, out_dir, tol, rank_tol } => factor(&input, mode, &out_dir, tol, rank_tol),
        Command::Verify { a, b, c, tol } => verify(&a, &b, &c, tol),
        Command::Gen { spec, out } => gen(&spec, &out),
        Command::Scan { n_range, decay, dims, trials, seed, out, tol } => {
            let cfg = ScanConfig { n_range, decay, dims: parse_dims(&dims)?, trials, seed, tol };
            scan(cfg, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's own exit code 2 would read as "not nilpotent"
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
