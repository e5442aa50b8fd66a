mod apps;
mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use report::Report;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Exact verification of higher-order FKG inequalities on finite
/// distributive lattices.
#[derive(Debug, Parser)]
#[command(name = "fkg", version)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include wall-clock time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Expand Φ(u+v;v) and check that every monomial coefficient is nonnegative.
    Certify(CertifyArgs),
    /// Evaluate a spec on random MTP2 instances and report the first negative value.
    Sweep(SweepArgs),
    /// Reproduce the worked examples and identities.
    Paper {
        #[command(subcommand)]
        which: PaperCommand,
    },
    /// Run one of the application inequalities on a JSON input.
    Apps(AppsArgs),
    /// Search coefficient vectors or probe the c1 family on indicators.
    Feasibility(FeasibilityArgs),
    /// Re-evaluate a stored witness.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Conjugate,
    Cumulant,
    Custom,
}

#[derive(Debug, Args, Serialize)]
struct CertifyArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Conjugate)]
    kind: KindArg,
    /// JSON spec `{"m":3,"kind":"custom","coeffs":[{"lambda":[3],"c":2},...]}`.
    #[arg(long)]
    coeffs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FunctionsArg {
    IncrementSum,
    IndicatorMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MeasureArg {
    Pairwise,
    Exchangeable,
    Uniform,
    Product,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    m: usize,
    /// Chain lengths, comma separated.
    #[arg(long, default_value = "2,2,2", value_parser = parse_shape)]
    shape: ::std::vec::Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = KindArg::Conjugate)]
    kind: KindArg,
    /// Spec file for `--kind custom`.
    #[arg(long)]
    coeffs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FunctionsArg::IncrementSum)]
    functions: FunctionsArg,
    #[arg(long, value_enum, default_value_t = MeasureArg::Pairwise)]
    measure: MeasureArg,
    /// Subtracted from every function value, as a rational `p/q`.
    #[arg(long, default_value = "0")]
    shift: String,
    /// Write the first witness here when one is found.
    #[arg(long)]
    witness_out: Option<PathBuf>,
}

fn parse_shape(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad chain length {p:?}: {e}")))
        .collect()
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "which")]
enum PaperCommand {
    /// The two-parameter-set example where the inductive gap fails to be monotone.
    #[command(name = "remark2.3")]
    #[serde(rename = "remark2.3")]
    TwoPointGap,
    /// Negative controls: plain cumulant, sign-changing functions, the c1 = 1 variant.
    #[command(name = "remark2.1")]
    #[serde(rename = "remark2.1")]
    NegativeControls {
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Closed forms for northeast indicators on a two-dimensional grid.
    Cases {
        #[arg(long, default_value = "3,3", value_parser = parse_shape)]
        grid: ::std::vec::Vec<usize>,
        #[arg(long, default_value_t = 5)]
        measures: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The duplicated-variables certificate.
    Duplicate,
    /// Zero sums and the reduction identity.
    Identities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AppKind {
    Bernstein,
    Logconvex,
    Kleitman,
    Matrix,
    Psd,
    Ranking,
    Exchangeable,
}

#[derive(Debug, Args, Serialize)]
struct AppsArgs {
    #[arg(value_enum)]
    which: AppKind,
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FeasibilityModeArg {
    Certificate,
    Indicator,
}

#[derive(Debug, Args, Serialize)]
struct FeasibilityArgs {
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, value_enum, default_value_t = FeasibilityModeArg::Certificate)]
    mode: FeasibilityModeArg,
    /// Coefficient box half-width for the certificate search.
    #[arg(long, default_value_t = 3)]
    bound: i64,
    #[arg(long, default_value_t = 1)]
    c1: i64,
    #[arg(long, default_value = "3,3", value_parser = parse_shape)]
    grid: ::std::vec::Vec<usize>,
    #[arg(long, default_value_t = 10)]
    measures: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct ReplayArgs {
    #[arg(long)]
    witness: PathBuf,
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("FKG_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("FKG_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err("FKG_THREADS must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let command = argv.join(" ");
    let config = serde_json::to_value(&cli.command).expect("arguments serialize");
    let start = Instant::now();
    let result = configure_threads().and_then(|()| commands::run(&cli.command));
    let mut report = match result {
        Ok(r) => Report::new(command, config, r),
        Err(msg) => {
            eprintln!("error: {msg}");
            Report::error(command, config, msg)
        }
    };
    if cli.timing {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    match cli.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.outcome.exit_code() as u8)
}
