use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use dilates_core::gap::Gap;
use dilates_core::inequalities::suites::Suite;
use dilates_core::rational::{parse_rational, Rational};
use dilates_core::search::{Mode, DEFAULT_EXACT_CAP};
use dilates_core::zp_core::ResidueSet;

use crate::cache::CACHE_DIR_ENV;

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "dilates", version, about = "Sums of dilates: constructions, checks and extremal searches")]
pub struct Cli {
    /// Result cache directory.
    #[arg(long, env = CACHE_DIR_ENV, default_value = ".dilates-cache", global = true)]
    pub cache_dir: PathBuf,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a torus construction and check its chain of measures.
    Construct {
        #[command(subcommand)]
        shape: Shape,
    },
    /// Run a randomized inequality suite.
    Verify(VerifyArgs),
    /// Minimize |A + λ·A| over m-subsets of Z/pZ.
    Search(SearchArgs),
    /// Run searches over a grid of (p, λ, m) and emit CSV.
    Sweep(SweepArgs),
    /// Generalized arithmetic progression tools.
    Gap {
        #[command(subcommand)]
        action: GapAction,
    },
    /// Render all cached search results into CSV and plot data.
    Report(OutArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Shape {
    /// Box with cube sides γ^{1/d}, or the optimized d = 3 shape.
    Box(BoxArgs),
    /// Simplex set {x_i > 0, Σ x_i < n/2 − 1}.
    Simplex(SimplexArgs),
}

#[derive(Debug, Args)]
pub struct BoxArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub lambda: u64,
    /// Target density as "num/den".
    #[arg(long, value_parser = rational)]
    pub gamma: Rational,
    #[arg(long)]
    pub p: u64,
    /// Sides γ^{1/3}/2^{1/3}, (2γ)^{1/3}, γ^{1/3} (d = 3 only).
    #[arg(long)]
    pub optimized: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SimplexArgs {
    #[arg(long)]
    pub n: u64,
    /// Grid resolution for the discretized chain (needs --p).
    #[arg(long, requires = "p")]
    pub lambda: Option<u64>,
    #[arg(long, requires = "lambda")]
    pub p: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// cd, ruzsa, plunnecke, dilate-chain, kfold or affine.
    pub suite: Suite,
    #[arg(long, default_value_t = 101)]
    pub p: usize,
    #[arg(long, default_value_t = 1000)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<i64>,
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SearchParams {
    #[arg(long, default_value = "exact")]
    pub mode: Mode,
    /// Heuristic seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Heuristic iterations.
    #[arg(long, default_value_t = 100_000)]
    pub budget: u64,
    /// Largest number of candidate subsets an exact search may visit.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    pub exact_cap: u128,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: i64,
    #[arg(long)]
    pub m: u64,
    #[command(flatten)]
    pub params: SearchParams,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("m_rule").required(true).args(["m_range", "alpha", "m", "half"])))]
pub struct SweepArgs {
    /// Comma-separated primes.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Vec<u64>,
    /// Comma-separated dilation factors.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub lambda: Vec<i64>,
    /// Inclusive range "lo..hi", clipped to 1..=p.
    #[arg(long)]
    pub m_range: Option<String>,
    /// m = ⌈α p⌉, α as "num/den".
    #[arg(long, value_parser = rational)]
    pub alpha: Option<Rational>,
    #[arg(long)]
    pub m: Option<u64>,
    /// m = 1..=(p−1)/2.
    #[arg(long)]
    pub half: bool,
    #[command(flatten)]
    pub params: SearchParams,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum GapAction {
    /// Largest proper GAP of dimension ≤ d-max inside a set (p ≤ 101).
    Find {
        /// "p=<p>;{a1,...}"
        #[arg(long)]
        set: ResidueSet,
        #[arg(long, default_value_t = 2)]
        d_max: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// List the elements of a GAP and test properness.
    Expand {
        /// "p=<p>;a=<a>;v=[..];k=[..]"
        #[arg(long)]
        gap: Gap,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Keep the generators whose lengths reach λ.
    Truncate {
        #[arg(long)]
        gap: Gap,
        #[arg(long)]
        lambda: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check P' + λ·P' + ... + λ^d·P' ⊇ λ^d P'.
    Span {
        #[arg(long)]
        gap: Gap,
        #[arg(long)]
        lambda: u64,
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        out: OutArgs,
    },
}
