use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ris_e2e::baseline::{compare_curves, BerCurve, CurveMeta};
use ris_e2e::experiment::{run_command, Command, ExperimentConfig};
use ris_e2e::Error;

/// Learned transceivers and phase control for RIS-assisted links.
#[derive(Parser)]
#[command(name = "ris-e2e", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pre-train the RIS phase network.
    PretrainRis(RunArgs),
    /// Train an autoencoder and evaluate its BER.
    Train(RunArgs),
    /// Evaluate a saved autoencoder checkpoint.
    Eval(RunArgs),
    /// Monte-Carlo BER of an uncoded modulation.
    Baseline(RunArgs),
    /// Compare BER curve CSVs against the first one.
    Compare {
        #[arg(required = true, num_args = 2..)]
        curves: Vec<PathBuf>,
        #[arg(long, default_value = "runs/compare")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: runs/<subcommand>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fall back on the desk-scale preset instead of full scale.
    #[arg(long)]
    desk_scale: bool,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::GridMismatch | Error::SearchBudget { .. } | Error::BitLength { .. } => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(command: Command, args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path, command.default_kind(), args.desk_scale).map_err(|e| match e {
            Error::Io { .. } => Failure::Validation(e.to_string()),
            e => e.into(),
        })?,
        None if args.desk_scale => ExperimentConfig::desk(command.default_kind()),
        None => ExperimentConfig::full(command.default_kind()),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(command: Command, default_out: &str, args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(command, args)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(default_out));
    let manifest = run_command(command, &cfg, &out)?;
    for a in &manifest.artifacts {
        println!("{}", out.join(a).display());
    }
    if let Some(eff) = manifest.ris_efficiency {
        println!("phase-network efficiency: {eff:.4}");
    }
    if let Some(best) = manifest.best_epoch {
        println!("best epoch: {best}");
    }
    println!("finished in {:.1} s", manifest.wall_time_s);
    Ok(())
}

fn compare(paths: &[PathBuf], out: &Path) -> Result<(), Failure> {
    let curves = paths
        .iter()
        .map(|p| {
            let meta = CurveMeta {
                label: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                ..CurveMeta::default()
            };
            BerCurve::read_csv(p, meta).map_err(|e| match e {
                Error::Io { .. } | Error::Csv(_) => Failure::Validation(e.to_string()),
                e => e.into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = compare_curves(&curves)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    report.write_csv(&out.join("comparison.csv"))?;
    print!("{}", report.summary());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Cmd::PretrainRis(a) => run(Command::PretrainRis, "runs/pretrain-ris", a),
        Cmd::Train(a) => run(Command::Train, "runs/train", a),
        Cmd::Eval(a) => run(Command::Eval, "runs/eval", a),
        Cmd::Baseline(a) => run(Command::Baseline, "runs/baseline", a),
        Cmd::Compare { curves, out } => compare(curves, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
