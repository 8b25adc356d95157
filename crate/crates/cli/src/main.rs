mod commands;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "kundt",
    version,
    about = "Curvature, invariants and Killing checks for CCNV Kundt metrics"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

/// Sampling and tolerance flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Options {
    /// Number of sample points.
    #[arg(long, global = true, default_value_t = 100)]
    pub points: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Range of u as `a,b`.
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    pub u_range: Option<(f64, f64)>,
    /// Range of every transverse coordinate as `a,b`.
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    pub x_range: Option<(f64, f64)>,
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    pub v_range: Option<(f64, f64)>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Leave the timestamp out so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(format!("empty or infinite range `{s}`"));
    }
    Ok((lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Check the metric file: shape, gauge, positive definiteness, CCNV property.
    Validate { file: PathBuf },
    /// Frame commutators, connection and curvature identities, sample values.
    Curvature { file: PathBuf },
    /// Frame curvature against the coordinate Christoffel path.
    OracleCompare { file: PathBuf },
    /// Scalar invariants and the CSI/VSI verdict.
    Invariants { file: PathBuf },
    /// Killing residuals, type, causal character and brackets of a candidate.
    KillingCheck {
        file: PathBuf,
        /// Candidate file; optional when FILE is a case instance.
        #[arg(long)]
        candidate: Option<PathBuf>,
    },
    /// Catalog of additional isometries.
    #[command(subcommand)]
    Case(CaseCommand),
    /// Null isometry with flat transverse space and its spacelike companion.
    #[command(name = "example-7-3")]
    Example73 {
        #[arg(long, default_value_t = 5)]
        dimension: usize,
        /// H(u, x4..xN).
        #[arg(long = "h", default_value = "x4")]
        h: String,
        /// Particular solutions w4..wN of w_r,3 + w_r,u = H,r, in order.
        #[arg(long = "w")]
        w: Vec<String>,
        /// g(x3), the arbitrary function added to every W_r as g(x3 - u).
        #[arg(long = "g", default_value = "0")]
        g: String,
    },
}

#[derive(Subcommand)]
enum CaseCommand {
    /// Build one row of the catalog and verify it.
    Build {
        id: String,
        #[arg(long, default_value_t = 5)]
        dimension: usize,
        /// Free function as `name=expr`; repeatable.
        #[arg(long = "bind")]
        binds: Vec<String>,
        /// Draw every free function from this seed instead.
        #[arg(long, conflicts_with = "binds")]
        random: Option<u64>,
        /// Write the instance (metric and candidate files embedded) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Case ids and the free functions each accepts.
    List {
        #[arg(long, default_value_t = 5)]
        dimension: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => commands::validate(&file, &cli.opts),
        Command::Curvature { file } => commands::curvature(&file, &cli.opts),
        Command::OracleCompare { file } => commands::oracle_compare(&file, &cli.opts),
        Command::Invariants { file } => commands::invariants(&file, &cli.opts),
        Command::KillingCheck { file, candidate } => commands::killing_check(&file, candidate.as_deref(), &cli.opts),
        Command::Case(CaseCommand::Build {
            id,
            dimension,
            binds,
            random,
            out,
        }) => commands::case_build(&id, dimension, &binds, random, out.as_deref(), &cli.opts),
        Command::Case(CaseCommand::List { dimension }) => commands::case_list(dimension, &cli.opts),
        Command::Example73 { dimension, h, w, g } => commands::example_7_3(dimension, &h, &w, &g, &cli.opts),
    };
    match result {
        Ok(report) => {
            report.print_summary();
            match serde_json::to_string_pretty(&report) {
                // A closed pipe downstream is not our failure.
                Ok(json) => {
                    let _ = writeln!(std::io::stdout().lock(), "{json}");
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
