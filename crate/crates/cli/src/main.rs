use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use irsim_core::error::{Error, ErrorClass};
use irsim_core::experiments::runner::write_oracle_csv;
use irsim_core::experiments::{preset_names, preset_scaled, run_experiment, run_oracle, ExperimentConfig, RunOptions, Scale};

const EXIT_CONFIG: u8 = 3;
const EXIT_MEMORY: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser)]
#[command(name = "irsim", version, about = "Wideband IRS-aided link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named preset.
    Preset {
        name: String,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        /// Print the resolved config as JSON instead of running it.
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        common: Common,
    },
    /// List preset names.
    ListPresets,
    /// Compare solvers against the exhaustive quantized-phase search (small L only).
    Oracle {
        config: PathBuf,
        /// Phase quantization levels.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Memory cap for coupling matrices, in GiB.
    #[arg(long)]
    mem_cap_gb: Option<f64>,
    /// Fill the wall_clock_s column.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

impl Common {
    fn setup(&self) -> anyhow::Result<RunOptions> {
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(Error::Config("--threads must be positive".into()).into());
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let mut opts = RunOptions {
            timing: self.timing,
            ..RunOptions::default()
        };
        if let Some(gb) = self.mem_cap_gb {
            if !(gb.is_finite() && gb > 0.0) {
                return Err(Error::Config("--mem-cap-gb must be positive".into()).into());
            }
            opts.mem_cap_bytes = (gb * (1u64 << 30) as f64) as u64;
        }
        Ok(opts)
    }

    fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config
    }

    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(io::BufWriter::new(
                fs::File::create(p)
                    .map_err(Error::Io)
                    .with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::ListPresets => {
            let mut out = io::stdout().lock();
            for name in preset_names() {
                writeln!(out, "{name}")?;
            }
        }
        Command::Run { config, common } => {
            let opts = common.setup()?;
            let config = common.apply(load(&config)?);
            let table = run_experiment(&config, opts)?;
            table.write_csv(common.writer()?)?;
        }
        Command::Preset {
            name,
            scale,
            dump,
            common,
        } => {
            let config = common.apply(preset_scaled(&name, scale.into())?);
            if dump {
                writeln!(common.writer()?, "{}", config.to_json())?;
                return Ok(());
            }
            let opts = common.setup()?;
            let table = run_experiment(&config, opts)?;
            table.write_csv(common.writer()?)?;
        }
        Command::Oracle { config, levels, common } => {
            let opts = common.setup()?;
            let config = common.apply(load(&config)?);
            let rows = run_oracle(&config, levels, opts)?;
            write_oracle_csv(&rows, common.writer()?)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(e) => match e.class() {
            ErrorClass::Config => EXIT_CONFIG,
            ErrorClass::Memory => EXIT_MEMORY,
            ErrorClass::Runtime => EXIT_RUNTIME,
        },
        None => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irsim: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
