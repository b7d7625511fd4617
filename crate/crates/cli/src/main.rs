use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use cashcast::pipeline::{run, validate_config, Command, OutputFormat};

/// Cash-flow forecast evaluation and cash-management policy cost analysis.
///
/// Reads a TOML run description (see the repository README for the key
/// reference) and writes seed-stamped CSV artifacts. Set RUST_LOG=info for
/// progress output.
#[derive(Parser)]
#[command(name = "cashcast", version)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Artifact formats to emit.
    #[arg(long, global = true, value_enum, default_value_t)]
    format: FormatArg,
    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Subcommand, Clone, Copy)]
enum CommandArg {
    /// Describe the loaded series: length, mean, dispersion, tail weight.
    Summarize,
    /// Write the configured dataset variant as a series CSV.
    Derive,
    /// Backtest the configured forecaster and report error ratios.
    Cv,
    /// Compare policy costs under the forecaster vs. the mean benchmark.
    Compare,
    /// Trade forecast accuracy against savings over a noise grid.
    Sweep,
}

impl From<CommandArg> for Command {
    fn from(arg: CommandArg) -> Self {
        match arg {
            CommandArg::Summarize => Command::Summarize,
            CommandArg::Derive => Command::Derive,
            CommandArg::Cv => Command::Cv,
            CommandArg::Compare => Command::Compare,
            CommandArg::Sweep => Command::Sweep,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Default)]
enum FormatArg {
    #[default]
    Csv,
    #[value(name = "csv+plot")]
    CsvPlot,
}

impl From<FormatArg> for OutputFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::CsvPlot => OutputFormat::CsvPlot,
        }
    }
}

fn main() {
    env_logger::init();
    if let Err(err) = real_main() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let Some(path) = cli.config else {
        bail!("--config PATH is required");
    };
    let raw = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut config = validate_config(&raw)?;
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let output = run(cli.command.into(), &config, cli.format.into())?;
    for file in &output.files {
        println!("wrote {}", file.display());
    }
    for note in &output.notes {
        println!("{note}");
    }
    Ok(())
}
