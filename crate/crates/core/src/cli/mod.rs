//! Command-line front end: `run`, `compare` and `transparency`.
//!
//! Settings come from built-in defaults, then an optional `--config` file of
//! `key = value` lines, then command-line flags. Flag names and config keys
//! coincide.

mod commands;
mod config;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_compare, cmd_run, cmd_transparency, write_plot, COMPARE_HEADER, TRANSPARENCY_HEADER};
pub use config::{ModelKind, Precision, RunConfig};
pub use settings::{render, List, Resolver, Settings, KNOWN_KEYS};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "sohot", version, about = "Soft Hoeffding trees on drifting data streams")]
pub struct Cli {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prequential run of one model.
    Run {
        /// sohot | ht | ht-limit | st | pool | pool-ht | pool-st
        #[arg(long)]
        model: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Several models on identical streams.
    Compare {
        /// Comma-separated model names (default: sohot,ht).
        #[arg(long)]
        models: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Transparency ratio and AUROC across alpha values.
    Transparency {
        /// sohot or st
        #[arg(long)]
        model: Option<String>,
        /// Comma-separated alpha values.
        #[arg(long)]
        alphas: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// sea | agrawal | hyperplane | rbf | csv
    #[arg(long)]
    pub stream: Option<String>,
    /// CSV file to stream from.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<String>,
    /// Label column name or index (default: last column).
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub instances: Option<String>,
    /// Instances per report row.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    /// Base seed; repetition r uses seed + r.
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub max_depth: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub epsilon_s: Option<String>,
    /// Grace period between split attempts.
    #[arg(long)]
    pub grace: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    /// mc | nba
    #[arg(long)]
    pub leaf_prediction: Option<String>,
    /// Internal node cap for Hoeffding trees.
    #[arg(long)]
    pub node_limit: Option<String>,
    /// none | abrupt | gradual | perturbation | oversample
    #[arg(long)]
    pub drift_kind: Option<String>,
    /// Comma-separated drift positions.
    #[arg(long)]
    pub drift_at: Option<String>,
    #[arg(long)]
    pub drift_width: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub dump_tree: Option<String>,
    /// Gnuplot script path; data goes next to it.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<String>,
    /// Stream CSV rows in file order.
    #[arg(long)]
    pub no_shuffle: bool,
}

impl CommonArgs {
    fn into_settings(self) -> Settings {
        let mut s = Settings::default();
        let pairs = [
            ("stream", self.stream),
            ("csv", self.csv),
            ("label-column", self.label_column),
            ("instances", self.instances),
            ("window", self.window),
            ("reps", self.reps),
            ("seed", self.seed),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("max-depth", self.max_depth),
            ("delta", self.delta),
            ("tau", self.tau),
            ("epsilon-s", self.epsilon_s),
            ("grace", self.grace),
            ("learning-rate", self.learning_rate),
            ("leaf-prediction", self.leaf_prediction),
            ("node-limit", self.node_limit),
            ("drift-kind", self.drift_kind),
            ("drift-at", self.drift_at),
            ("drift-width", self.drift_width),
            ("out", self.out),
            ("dump-tree", self.dump_tree),
            ("plot", self.plot),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                s.set(key, v);
            }
        }
        if self.no_shuffle {
            s.set("no-shuffle", "true");
        }
        s
    }
}

fn merged(config: Option<&PathBuf>, flags: Settings) -> Result<Settings> {
    let base = match config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    Ok(base.overlay(flags))
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { model, common } => {
            let mut flags = common.into_settings();
            if let Some(m) = model {
                flags.set("model", m);
            }
            let settings = merged(cli.config.as_ref(), flags)?;
            cmd_run(&RunConfig::resolve(&settings)?)?;
        }
        Command::Compare { models, common } => {
            let mut flags = common.into_settings();
            if let Some(m) = models {
                flags.set("models", m);
            }
            let mut settings = merged(cli.config.as_ref(), flags)?;
            let mut r = Resolver::new(&settings);
            let list: List<ModelKind> = r.get("models", List(vec![ModelKind::SoHoT, ModelKind::Ht]))?;
            if settings.raw("out").is_none() {
                settings.set("out", "compare.csv");
            }
            cmd_compare(&list.0, &settings)?;
        }
        Command::Transparency { model, alphas, common } => {
            let mut flags = common.into_settings();
            if let Some(m) = model {
                flags.set("model", m);
            }
            if let Some(a) = alphas {
                flags.set("alphas", a);
            }
            let mut settings = merged(cli.config.as_ref(), flags)?;
            if settings.raw("out").is_none() {
                settings.set("out", "transparency.csv");
            }
            cmd_transparency(&settings)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs; prints errors to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_flag_is_a_known_key() {
        let cmd = Cli::command();
        let run = cmd.find_subcommand("run").unwrap();
        for arg in run.get_arguments() {
            let long = arg.get_long().unwrap();
            assert!(KNOWN_KEYS.contains(&long) || long == "config", "{long}");
        }
    }
}
