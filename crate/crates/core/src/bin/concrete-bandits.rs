use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use concrete_bandits::agents::RetrainMode;
use concrete_bandits::data;
use concrete_bandits::experiment::{self, ExperimentSpec, Overrides};
use concrete_bandits::harness::RegretMode;

#[derive(Parser)]
#[command(version, about = "Deep contextual bandits with Thompson sampling through dropout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every agent and seed of an experiment spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        regret_mode: Option<RegretArg>,
        #[arg(long, value_enum)]
        retrain_mode: Option<RetrainArg>,
    },
    /// Install the mushroom dataset into the cache directory and verify it.
    FetchData {
        /// Defaults to $BANDIT_DATA_DIR.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Verify and install this copy instead of the bundled one.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Re-render the regret plot from a traces.csv.
    Replay {
        traces: PathBuf,
        /// Defaults to regret.svg next to the traces.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "cumulative regret")]
        title: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegretArg {
    Expected,
    Realized,
}

#[derive(Clone, Copy, ValueEnum)]
enum RetrainArg {
    Warm,
    Scratch,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            spec,
            horizon,
            seeds,
            out,
            regret_mode,
            retrain_mode,
        } => run(
            spec,
            Overrides {
                horizon,
                seeds,
                out,
                regret_mode: regret_mode.map(|m| match m {
                    RegretArg::Expected => RegretMode::Expected,
                    RegretArg::Realized => RegretMode::Realized,
                }),
                retrain_mode: retrain_mode.map(|m| match m {
                    RetrainArg::Warm => RetrainMode::Warm,
                    RetrainArg::Scratch => RetrainMode::Scratch,
                }),
            },
        ),
        Command::FetchData { dir, from } => fetch_data(dir, from),
        Command::Replay { traces, out, title } => {
            let out = out.unwrap_or_else(|| traces.with_file_name(experiment::PLOT_FILE));
            experiment::replay(&traces, &out, &title).map_err(|e| (e.exit_code(), e.to_string()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}

fn run(spec_path: PathBuf, overrides: Overrides) -> Result<(), (i32, String)> {
    let fail = |e: experiment::ExperimentError| (e.exit_code(), e.to_string());
    let mut spec = ExperimentSpec::load(&spec_path).map_err(fail)?;
    spec.apply(&overrides).map_err(fail)?;
    let output = experiment::run_experiment(&spec).map_err(fail)?;
    experiment::write_outputs(&spec.out, &spec.name, &output).map_err(fail)?;
    for c in &output.curves {
        println!("{:<24} FCR {:>10.1}  [{:.1}, {:.1}]", c.agent, c.fcr.mean, c.fcr.min, c.fcr.max);
    }
    println!("wrote {}", spec.out.display());
    Ok(())
}

fn fetch_data(dir: Option<PathBuf>, from: Option<PathBuf>) -> Result<(), (i32, String)> {
    let dir = dir
        .or_else(|| std::env::var_os(data::DATA_DIR_VAR).map(PathBuf::from))
        .ok_or((2, format!("pass --dir or set {}", data::DATA_DIR_VAR)))?;
    let bytes = match &from {
        Some(path) => std::fs::read(path).map_err(|e| (3, format!("{}: {e}", path.display())))?,
        None => data::MUSHROOM_DATA.to_vec(),
    };
    let ds = data::verify_mushroom_file(&bytes).map_err(|e| (3, format!("verification failed: {e}")))?;
    let target = dir.join(data::MUSHROOM_FILE_NAME);
    if std::fs::read(&target).is_ok_and(|existing| existing == bytes) {
        println!("{} already verified ({} rows)", target.display(), ds.rows());
        return Ok(());
    }
    std::fs::create_dir_all(&dir).map_err(|e| (1, format!("{}: {e}", dir.display())))?;
    std::fs::write(&target, &bytes).map_err(|e| (1, format!("{}: {e}", target.display())))?;
    println!("wrote {} ({} bytes, {} rows)", target.display(), bytes.len(), ds.rows());
    Ok(())
}
