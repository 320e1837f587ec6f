use std::path::{Path, PathBuf};

use clap::Parser;

use crate::commands::{cmd_eval, cmd_fig1, cmd_fig2, cmd_fig3, cmd_optimize};
use crate::config::{
    Command, ConfigFile, ExperimentConfig, Overrides, Profile, Units, OUTPUT_DIR_ENV,
};
use crate::error::CliError;
use crate::output::{write_fig3, write_sweep, write_trace};
use crate::precoder_io::format_precoder;

/// Sensing mutual information experiments.
#[derive(Debug, Clone, Parser)]
#[command(name = "smi", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = Profile::Desk)]
    pub profile: Profile,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the environment and the config file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub units: Option<Units>,
    /// Append a wall_time_ms column (the output is then not reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl Cli {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let file = ConfigFile::load(&self.config)?;
        let overrides = Overrides {
            seed: self.seed,
            output: self.out.clone(),
            units: self.units,
        };
        let env = std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        file.resolve(self.command, self.profile, &overrides, env)
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs one command and returns the files it wrote.
pub fn execute(cfg: &ExperimentConfig, timing: bool) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let name = cfg.command.name();
    let csv = dir.join(format!("{name}.csv"));
    let mut written = Vec::new();
    match cfg.command {
        Command::Eval => {
            let row = cmd_eval(cfg, timing)?;
            write_sweep(&csv, "n_frames", &[row], cfg.units)?;
            written.push(csv);
        }
        Command::Fig1 => {
            write_sweep(&csv, "n_frames", &cmd_fig1(cfg, timing)?, cfg.units)?;
            written.push(csv);
        }
        Command::Fig2 => {
            write_sweep(&csv, "n_targets", &cmd_fig2(cfg, timing)?, cfg.units)?;
            written.push(csv);
        }
        Command::Fig3 => {
            write_fig3(&csv, &cmd_fig3(cfg, timing)?, cfg.units)?;
            written.push(csv);
        }
        Command::Optimize => {
            let trace = cmd_optimize(cfg)?;
            let t = dir.join("optimize_trace.csv");
            write_trace(&t, &trace.records, cfg.units)?;
            let p = dir.join("optimize_precoder.txt");
            write_text(&p, &format_precoder(&trace.precoder))?;
            written.extend([t, p]);
        }
    }
    let resolved = dir.join(format!("{name}_config.toml"));
    write_text(&resolved, &cfg.to_toml())?;
    written.push(resolved);
    Ok(written)
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    execute(&cli.resolve()?, cli.timing)
}
