use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ige_cli::commands::{self, Options, Outcome, TangentMode, DEFAULT_PROBE_DIRS};
use ige_cli::problem::load_path;
use ige_core::sampling::DEFAULT_SEED;

/// Analyze set-inclusive generalized equations `find x ∈ S with F(x) ⊆ C`.
///
/// Exit codes: 0 claims verified (or analysis written), 2 claim falsified, 3 hypotheses not
/// met, 1 usage or input error.
#[derive(Parser)]
#[command(name = "ige", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Problem file (JSON).
    file: PathBuf,
    /// Increase constant α > 1 (overrides `checks.alphas`).
    #[arg(long)]
    alpha: Option<f64>,
    /// Radius δ > 0 of the neighborhood of x̄ (overrides `checks.delta`).
    #[arg(long)]
    delta: Option<f64>,
    /// Samples per error bound scale.
    #[arg(long)]
    samples: Option<usize>,
    /// Probe directions for the tangent cone cross-check.
    #[arg(long, default_value_t = DEFAULT_PROBE_DIRS)]
    probe_dirs: usize,
    /// Seed for every sampler.
    #[arg(long, env = "IGE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the report to this path.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Write `delta,max_ratio,bound` rows here (`check-errorbound` only).
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Membership, excess, increase evidence, error bound, tangent cones and optimality.
    Analyze(Common),
    /// Certificate and definitional check of metric C-increase.
    CertifyIncrease(Common),
    /// Sampled check of dist(x, Solv) ≤ exc(F(x), C)/(α − 1).
    CheckErrorbound(Common),
    /// Inner, outer or exact tangent cone of the solution set with probe cross-validation.
    Tangent {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
    },
    /// Necessary optimality conditions and the multiplier rule.
    CheckKkt(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Inner,
    Outer,
    Exact,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut mode = TangentMode::Exact;
    let (common, run): (Common, fn(&_, &Options) -> ige_core::Result<Outcome>) = match cli.command {
        Command::Analyze(c) => (c, commands::analyze),
        Command::CertifyIncrease(c) => (c, commands::certify_increase),
        Command::CheckErrorbound(c) => (c, commands::check_errorbound),
        Command::Tangent { common, mode: m } => {
            mode = match m {
                Mode::Inner => TangentMode::Inner,
                Mode::Outer => TangentMode::Outer,
                Mode::Exact => TangentMode::Exact,
            };
            (common, commands::tangent)
        }
        Command::CheckKkt(c) => (c, commands::check_kkt),
    };
    let opts = Options {
        alpha: common.alpha,
        delta: common.delta,
        samples: common.samples,
        probe_dirs: common.probe_dirs,
        seed: common.seed,
        mode,
    };
    for (msg, v) in [("--alpha must exceed 1", opts.alpha.map(|a| a - 1.0)), ("--delta must be positive", opts.delta)] {
        if v.is_some_and(|x| !(x.is_finite() && x > 0.0)) {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    }

    let loaded = match load_path(&common.file) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match run(&loaded, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let json = outcome.report.to_json();
    print!("{json}");
    if let Some(path) = &common.json_out {
        if let Err(e) = std::fs::write(path, &json) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if let (Some(path), Some(csv)) = (&common.csv_out, &outcome.csv) {
        if let Err(e) = std::fs::write(path, csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(outcome.report.verdict.exit_code() as u8)
}
