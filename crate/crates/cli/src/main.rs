//! Batch experiment runner for diffusion codes.

mod commands;
mod config;
mod output;
mod selftest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

const SUBCOMMANDS: &[&str] = &["generate", "expansion-audit", "sep-lab", "hgp", "decode-bench", "thermal", "selftest"];

#[derive(Parser, Debug)]
#[command(name = "diffcodes", version = env!("DIFFCODES_GIT_DESCRIBE"), about = "Diffusion-code experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Key-value config file; command-line flags take precedence.
    #[arg(long, global = false)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 uses every core).
    #[arg(long, env = "DIFFCODES_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a Tanner graph and save it.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Exact or sampled expansion audit of a saved graph.
    #[command(args_override_self = true)]
    ExpansionAudit(AuditArgs),
    /// Exclusion-process and gap-chain experiments.
    #[command(args_override_self = true)]
    SepLab(SepArgs),
    /// Hypergraph product of saved graphs.
    #[command(args_override_self = true)]
    Hgp(HgpArgs),
    /// Failure rates under i.i.d. bit flips.
    #[command(args_override_self = true)]
    DecodeBench(BenchArgs),
    /// Heating, cooling and memory-time runs.
    #[command(args_override_self = true)]
    Thermal(ThermalArgs),
    /// Fast oracle checks.
    #[command(args_override_self = true)]
    Selftest(SelftestArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum Kind {
    Diffusion,
    Gallager,
    Geometric,
    Cycle,
    Matching,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum TimeModeArg {
    Discrete,
    Continuous,
}

/// Diffusion time; at most one of the two may be given, default `T = N`.
#[derive(Args, Debug, Clone)]
pub struct TimeArgs {
    /// `T = N^alpha` sweeps.
    #[arg(long = "T-exponent", conflicts_with = "t_absolute")]
    pub t_exponent: Option<f64>,
    /// `T` in sweeps.
    #[arg(long = "T-absolute")]
    pub t_absolute: Option<f64>,
    #[arg(long, value_enum, default_value_t = TimeModeArg::Discrete)]
    pub time_mode: TimeModeArg,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = Kind::Diffusion)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 9)]
    pub wbit: usize,
    #[arg(long, default_value_t = 11)]
    pub wcheck: usize,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Read the swap network with vertices as bits.
    #[arg(long)]
    pub reversed: bool,
    /// Geometric generator: dimension of the periodic cube.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Matching generator: edge multiplicity.
    #[arg(long, default_value_t = 1)]
    pub multiplicity: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "code")]
    pub stem: String,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum MeasureArg {
    Neighbors,
    UniqueNeighbors,
    Confinement,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum ModeArg {
    Exhaustive,
    Connected,
    Sampled,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Graph metadata file written by `generate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub delta: usize,
    #[arg(long)]
    pub gamma_num: u64,
    #[arg(long, default_value_t = 1)]
    pub gamma_den: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = MeasureArg::Neighbors)]
    pub measure: MeasureArg,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Largest number of sets to enumerate before giving up.
    #[arg(long)]
    pub cap: Option<u128>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum SepMode {
    Monotonicity,
    InducedChain,
    TailBound,
    Mixing,
}

#[derive(Args, Debug)]
pub struct SepArgs {
    #[arg(long, value_enum)]
    pub mode: SepMode,
    /// Cycle length.
    #[arg(long = "N", default_value_t = 12)]
    pub big_n: usize,
    /// Smaller cycle for the coupling.
    #[arg(long = "N-prime")]
    pub big_n_prime: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HgpArgs {
    /// First factor (graph metadata file).
    #[arg(long)]
    pub input: PathBuf,
    /// Second factor; the first is used twice when absent.
    #[arg(long)]
    pub input2: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "product")]
    pub stem: String,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum DecoderArg {
    Flip,
    Bp,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum FlipScan {
    RandomSweep,
    Greedy,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = DecoderArg::Flip)]
    pub decoder: DecoderArg,
    #[arg(long, value_delimiter = ',', required = true)]
    pub p_grid: Vec<f64>,
    /// Sizes as `n` or `n:m`; a bare `n` uses m = n·wbit/wcheck rounded.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_grid: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub codes_per_size: usize,
    #[arg(long, default_value_t = 9)]
    pub wbit: usize,
    #[arg(long, default_value_t = 11)]
    pub wcheck: usize,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Use random biregular graphs instead of diffusion codes.
    #[arg(long)]
    pub gallager: bool,
    #[arg(long, value_enum, default_value_t = FlipScan::RandomSweep)]
    pub flip_scan: FlipScan,
    #[arg(long, default_value_t = 60)]
    pub bp_iters: usize,
    /// Normalized min-sum with this factor instead of sum-product.
    #[arg(long)]
    pub min_sum_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum Protocol {
    Heat,
    Cool,
    Memory,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
pub enum SectorArg {
    X,
    Z,
}

#[derive(Args, Debug)]
pub struct ThermalArgs {
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    /// Saved graph; otherwise a diffusion code is generated from --n/--m.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 352)]
    pub n: usize,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 9)]
    pub wbit: usize,
    #[arg(long, default_value_t = 11)]
    pub wcheck: usize,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Run on one sector of the hypergraph product of the code with itself.
    #[arg(long)]
    pub quantum: bool,
    #[arg(long, value_enum, default_value_t = SectorArg::Z)]
    pub sector: SectorArg,
    #[arg(long, default_value_t = 0.0)]
    pub tau_start: f64,
    #[arg(long, default_value_t = 4.0)]
    pub tau_end: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta_tau: f64,
    /// Equilibration sweeps per temperature.
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 10)]
    pub sample_every: usize,
    /// Sampling sweeps per temperature after equilibration.
    #[arg(long, default_value_t = 0)]
    pub t_eq: usize,
    /// Memory protocol temperature.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 10)]
    pub check_every: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Sweeps of the empirical equilibrium reference for dependent checks (0 disables).
    #[arg(long, default_value_t = 0)]
    pub reference_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let args = match config::merge_config(args, SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    };
    let cli = Cli::parse_from(&args);
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: worker pool: {e}");
            std::process::exit(2);
        }
    }
    match commands::run(&cli, &args) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
