//! mtorus: rank computations and certificates for mapping tori of torus automorphisms.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mtorus::frame::{DEFAULT_GRID, DEFAULT_TOL};
use mtorus::{IntMatrix, DEFAULT_ORDER_CAP};

mod commands;

use commands::Outcome;

#[derive(Parser)]
#[command(
    name = "mtorus",
    version,
    about = "Mapping tori of torus automorphisms: orders, H_1, rank, product decompositions and frames",
    after_help = "Matrices are given as JSON rows (\"[[0,1],[-1,-1]]\") or as text rows (\"0 1; -1 -1\").\n\n\
                  EXIT STATUS:\n  0  success\n  1  a verification failed\n  2  invalid input\n\n\
                  EXAMPLES:\n\
                  \n  mtorus rank-gap \"[[-1,0],[0,-1]]\" \"[[0,1],[-1,-1]]\"\
                  \n  mtorus frame-verify \"0 1; 1 0\" --grid 4096 --tol 1e-8\
                  \n  mtorus search --bound 2 --orientable --limit 5\
                  \n  mtorus certify \"[[-1]]\" \"[[0,1],[-1,-1]]\" --format text"
)]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Largest power tried when computing matrix orders
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER_CAP)]
    order_cap: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Multiplicative order of a unimodular matrix
    Order { matrix: IntMatrix },
    /// Fundamental group data and H_1 of the mapping torus
    Pi1 { matrix: IntMatrix },
    /// Rank of the mapping torus, with its justification
    Rank { matrix: IntMatrix },
    /// Write M(A) x M(B) as a single mapping torus M(H)
    Decompose { a: IntMatrix, b: IntMatrix },
    /// Ranks of M(H), M(A), M(B) and the gap
    RankGap { a: IntMatrix, b: IntMatrix },
    /// Build and check the commuting frame glued by A (exit 1 on failure)
    FrameVerify {
        matrix: IntMatrix,
        /// Number of sample times in [0, 1]
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Tolerance for brackets, seams and flatness
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Perturb the second field by this amplitude (negative control)
        #[arg(long, hide = true)]
        perturb: Option<f64>,
    },
    /// Enumerate finite-order matrices and emit counterexample certificates
    Search {
        /// Entry bound B: scan entries in [-B, B]
        #[arg(long, default_value_t = 3)]
        bound: i64,
        /// Keep only orientation-preserving matrices
        #[arg(long)]
        orientable: bool,
        /// Maximum number of certificates
        #[arg(long, default_value_t = 10)]
        limit: usize,
        /// Fiber dimension of the first factor
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Fiber dimension of the second factor (defaults to --dim)
        #[arg(long)]
        partner_dim: Option<usize>,
        /// Only pairs with these periods, e.g. 4,3
        #[arg(long, value_parser = parse_periods)]
        periods: Option<(u64, u64)>,
    },
    /// Decomposition, rank gap and frame checks for A, B and H in one certificate
    Certify {
        a: IntMatrix,
        b: IntMatrix,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

fn parse_periods(s: &str) -> Result<(u64, u64), String> {
    let (m, n) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two periods like 4,3, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(m)?, parse(n)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cap = cli.order_cap;
    let result = match cli.command {
        Command::Order { matrix } => commands::order(&matrix, cap),
        Command::Pi1 { matrix } => commands::pi1(matrix, cap),
        Command::Rank { matrix } => commands::rank(matrix, cap),
        Command::Decompose { a, b } => commands::decompose(a, b, cap),
        Command::RankGap { a, b } => commands::rank_gap(a, b, cap),
        Command::FrameVerify {
            matrix,
            grid,
            tol,
            perturb,
        } => commands::frame_verify(&matrix, grid, tol, perturb),
        Command::Search {
            bound,
            orientable,
            limit,
            dim,
            partner_dim,
            periods,
        } => commands::search(
            mtorus::SearchConfig {
                dim,
                partner_dim,
                entry_bound: bound,
                order_cap: cap,
                require_orientable: orientable,
                periods,
            },
            limit,
        ),
        Command::Certify { a, b, grid, tol } => commands::certify(a, b, cap, grid, tol),
    };
    match result {
        Ok(outcome) => emit(outcome, cli.format),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(2)
        }
    }
}

fn emit(outcome: Outcome, format: Format) -> ExitCode {
    match format {
        Format::Json => println!("{}", outcome.json),
        Format::Text => print!("{}", outcome.text),
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::from(1)
    }
}
