use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rankq::config::RunConfig;
use rankq::dataset::SplitMode;
use rankq::estimation::{EstimatorMode, EstimatorPolicy, ScoreMerge};
use rankq::qcompute::{DEFAULT_BIN_WIDTH, DEFAULT_ENUMERATION_CAP};
use rankq_cli::commands;
use rankq_cli::report;

#[derive(Parser)]
#[command(name = "rankq", version, about = "Test whether pairwise rankings are distinguishable from human ones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-pair theta from an annotations file and write a targets file.
    Estimate {
        annotations: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Undecided-vote filtering rule.
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
        /// Override the undecided-vote limit of the split.
        #[arg(long)]
        max_undecided: Option<u32>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Compute Q of a predictions file against a targets file.
    Evaluate {
        model: PathBuf,
        predictions: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Tabulate Q over attributes and methods listed in a manifest CSV
    /// (`attribute,method,model,predictions`).
    Report {
        manifest: PathBuf,
        /// Also write an HTML table with flagged cells in bold.
        #[arg(long)]
        html: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Generate a synthetic annotation corpus and machine predictions.
    Simulate {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Auto,
    RatioOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Merge {
    ScoredOnly,
    IncludeUnscored,
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Theta rounding step before grouping (0 = exact grouping).
    #[arg(long, default_value_t = 0.01)]
    quantize: f64,
    /// Largest block count evaluated by exact enumeration.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    /// Log-probability bin width of the dp method.
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    #[arg(long, value_enum, default_value_t = Policy::Auto)]
    policy: Policy,
    #[arg(long, value_enum, default_value_t = Merge::ScoredOnly)]
    merge: Merge,
    /// Q method: auto, exact, dp, bruteforce or montecarlo.
    #[arg(long, default_value = "auto")]
    method: String,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lower theta = 1 to this value before computing Q.
    #[arg(long)]
    theta_ceiling: Option<f64>,
    #[arg(long)]
    json: bool,
}

impl Opts {
    fn config(&self) -> RunConfig {
        RunConfig {
            epsilon: self.epsilon,
            quantization_step: self.quantize,
            enumeration_cap: self.cap,
            dp_bin_width: self.bin_width,
            policy: EstimatorPolicy {
                mode: match self.policy {
                    Policy::Auto => EstimatorMode::Auto,
                    Policy::RatioOnly => EstimatorMode::RatioOnly,
                },
                merge: match self.merge {
                    Merge::ScoredOnly => ScoreMerge::ScoredOnly,
                    Merge::IncludeUnscored => ScoreMerge::IncludeUnscored,
                },
                ..Default::default()
            },
            method: self.method.clone(),
            mc_samples: self.samples,
            seed: self.seed,
            theta_ceiling: self.theta_ceiling,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Estimate { annotations, out: target, split, max_undecided, opts } => {
            let mode = match split {
                Split::Train => SplitMode::Train,
                Split::Test => SplitMode::Test,
            };
            commands::cmd_estimate(&annotations, &target, mode, max_undecided, &opts.config(), opts.json, &mut out)
        }
        Command::Evaluate { model, predictions, opts } => {
            commands::cmd_evaluate(&model, &predictions, &opts.config(), opts.json, &mut out)
        }
        Command::Report { manifest, html, opts } => {
            let cfg = opts.config();
            let rows = report::read_manifest(&manifest)?;
            let rep = report::build_report(&rows, &cfg)?;
            for (a, m) in &rep.missing {
                eprintln!("warning: no entry for attribute `{a}`, method `{m}`");
            }
            if let Some(path) = html {
                std::fs::write(&path, report::render_html(&rep))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            if opts.json {
                serde_json::to_writer_pretty(&mut out, &rep)?;
                writeln!(out)?;
            } else {
                write!(out, "{}", report::render_text(&rep))?;
            }
            Ok(())
        }
        Command::Simulate { spec, out_dir, seed } => commands::cmd_simulate(&spec, &out_dir, seed, &mut out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
