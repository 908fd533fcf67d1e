//! Command-line scenario runner.
//!
//! Loads a JSON scenario config, executes the named verification scenario,
//! and emits a deterministic report as JSON (machine-readable, stable key
//! order, 17-significant-digit floats) or fixed-width text.
//!
//! Exit status: 0 when every check passes, 1 when the report contains a
//! failing check, 2 on config or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasemap::scenario::{self, ScenarioConfig};

/// Environment variable naming the directory that relative output paths
/// (`--output` and the `trajectory_csv` parameter) resolve against.
const OUTPUT_DIR_VAR: &str = "PHASEMAP_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "phasemap",
    version,
    about = "Phase-space map verification scenarios: transport, Riccati families, embeddings, Hessian metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification scenario described by a JSON config file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON scenario config.
    #[arg(long, value_name = "path")]
    config: PathBuf,

    /// Override the scenario named in the config
    /// (flat-map-verify, riccati-family, embed-check, calabi-curvature, reduction-check).
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,

    /// Write the report to this file instead of stdout. A relative path
    /// resolves against $PHASEMAP_OUTPUT_DIR when that variable is set.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Override the random seed from the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Override the integration step count from the config.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: RunArgs) -> phasemap::Result<bool> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(name) = args.scenario {
        config.scenario = name;
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(steps) = args.steps {
        config.steps = Some(steps);
    }
    if let Some(params) = config.parameters.as_mut() {
        if let Some(csv) = params.trajectory_csv.as_mut() {
            let resolved = resolve_output_path(Path::new(csv.as_str()))?;
            *csv = resolved
                .into_os_string()
                .into_string()
                .map_err(|p| phasemap::Error::Config(format!("non-UTF-8 output path {p:?}")))?;
        }
    }

    let report = scenario::run(&config)?;
    let mut rendered = match args.format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    if !rendered.ends_with('\n') {
        rendered.push('\n');
    }

    match args.output {
        Some(path) => {
            let path = resolve_output_path(&path)?;
            fs::write(&path, rendered.as_bytes())?;
            eprintln!("report written to {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(report.overall_pass)
}

/// Resolves a relative output path against `$PHASEMAP_OUTPUT_DIR` (when set),
/// then makes sure the parent directory exists. Absolute paths pass through.
fn resolve_output_path(path: &Path) -> phasemap::Result<PathBuf> {
    let resolved = match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    };
    if let Some(parent) = resolved.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(resolved)
}
