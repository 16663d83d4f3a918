//! `paramode`: file-driven front end for the parameter-dependent ODE toolkit.
//!
//! Subcommands analyze regions, build fundamental sets and matrices, solve
//! homogeneous and inhomogeneous problems, generate and verify pathological
//! instances, and re-run the named end-to-end checks.  All JSON files carry a
//! `"schema": "paramode/1"` field; CSV tables use 17 significant digits, '.'
//! decimals, and '\n' line endings, so numbers round-trip exactly.  For a
//! fixed configuration and seed every output is byte-identical across runs.
//!
//! Exit codes: 0 success; 1 bad input or internal failure (diagnostics on
//! stderr, including line/column for malformed files); 2 a verification ran
//! to completion but some asserted tolerance failed (`pathology`,
//! `reproduce`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(
    name = "paramode",
    version,
    about = "Solve and analyze parameter-dependent linear ODEs on planar regions"
)]
pub struct Cli {
    #[command(flatten)]
    pub run: RunFlags,

    #[command(subcommand)]
    pub cmd: Cmd,
}

/// Numeric knobs shared by every subcommand.  Unset flags keep the library
/// defaults; `reproduce` starts from per-check pinned configurations and
/// applies explicit flags on top.
#[derive(Args)]
pub struct RunFlags {
    /// Raster resolution for region analysis [library default: 1e-3 of the bbox diagonal]
    #[arg(long, global = true)]
    pub h: Option<f64>,

    /// Relative tolerance of the adaptive integrator [library default: 1e-9]
    #[arg(long, global = true)]
    pub rtol: Option<f64>,

    /// Absolute tolerance of the adaptive integrator [library default: 1e-12]
    #[arg(long, global = true)]
    pub atol: Option<f64>,

    /// State norm at which a slice integration is declared blown up [library default: 1e12]
    #[arg(long, global = true)]
    pub blowup: Option<f64>,

    /// Number of parameter samples [default: 100]
    #[arg(long, global = true)]
    pub nt: Option<usize>,

    /// Number of x samples per slice [default: 100]
    #[arg(long, global = true)]
    pub nx: Option<usize>,

    /// Seed for the randomized expansion round-trip of wronskian-check
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Classify a region file: x-simplicity, components, pieces, witness
    Analyze {
        /// Region JSON file
        region: PathBuf,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional CSV dump of the slice decomposition (t, interval, lo, hi)
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Build a fundamental set for P u = 0 from a problem file
    Fundamental {
        /// Problem JSON file (region + operator)
        problem: PathBuf,
        /// JSON report (Wronskian check summary + verdict); stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV table: t, x, phi0..phi{p-1}, wronskian
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Work on this x-simple piece when the region itself is not x-simple
        #[arg(long)]
        piece: Option<usize>,
    },

    /// Check the Wronskian anchor/identity and a seeded expansion round-trip
    WronskianCheck {
        /// Problem JSON file (region + operator)
        problem: PathBuf,
        /// JSON report; stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of random initial-data draws for the round-trip
        #[arg(long, default_value_t = 20)]
        draws: usize,
        /// Work on this x-simple piece when the region itself is not x-simple
        #[arg(long)]
        piece: Option<usize>,
    },

    /// Solve P u = 0 from initial data on the section
    Solve {
        /// Problem JSON file (region + operator)
        problem: PathBuf,
        /// Comma-separated initial-state expressions in t ("x" reads as the
        /// section point); default is the first unit vector
        #[arg(long)]
        init: Option<String>,
        /// JSON report; stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV table: t, x, u0..u{p-1}
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Work on this x-simple piece when the region itself is not x-simple
        #[arg(long)]
        piece: Option<usize>,
    },

    /// Solve P u = f from zero data; cross-check against quadrature
    SolveInhom {
        /// Problem JSON file (region + operator + rhs)
        problem: PathBuf,
        /// JSON report (cross-check, residual, solvability); stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV table: t, x, psi0..psi{p-1}
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Work on this x-simple piece when the region itself is not x-simple
        #[arg(long)]
        piece: Option<usize>,
    },

    /// Build a fundamental matrix for a first-order system file
    System {
        /// System JSON file (region + matrix + forcing)
        system: PathBuf,
        /// JSON report (determinant check + verdict); stdout if omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV table: t, x, det, m00..m{n-1}{n-1} (+ z0..z{n-1} when forced)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Work on this x-simple piece when the region itself is not x-simple
        #[arg(long)]
        piece: Option<usize>,
    },

    /// Generate a pathological problem on a region and verify its signature
    Pathology {
        /// Region JSON file; must fail to be x-simple (except punctured-square,
        /// which replaces it with the canonical truncated square)
        region: PathBuf,
        /// Which construction to run
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Write the generated problem file here
        #[arg(long)]
        out: PathBuf,
        /// Write the verification report here
        #[arg(long)]
        report: PathBuf,
        /// Operator order for --kind hom
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Kernel strength c (hom decay rate / punctured-square weight scale)
        #[arg(long, default_value_t = 1.0)]
        strength: f64,
        /// Truncation level for --kind punctured-square and bump count for --kind rhs
        #[arg(long, default_value_t = 3)]
        levels: u32,
    },

    /// Run a named end-to-end check; exit 0 iff all its tolerances pass
    Reproduce {
        /// One of: ex3.1, ex3.9, ex4.1, ex4.2, thm3.3-counter, thm4.3-rhs
        id: String,
        /// Write the JSON verdict report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Pathological construction selector.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    /// Homogeneous operator whose Wronskian is forced to vanish in the limit
    Hom,
    /// Transport equation with no globally continuous solution
    Inhom,
    /// Truncated punctured square admitting only the zero solution
    PuncturedSquare,
    /// Right-hand side making a fixed first-order equation nonsolvable
    Rhs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
