use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::EXPERIMENTS;
use crate::error::CliError;
use crate::runner::{self, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "pilotwave", version, about = "Pilot-wave and min-plus Hamilton-Jacobi numerical lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file or a shipped config name.
    Run {
        config: String,
        /// Output directory; replaces a previous run there.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Suppress the summary table.
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and check a config without running it.
    Validate { config: String },
    /// List the experiments and their shipped configs.
    List,
}

pub fn execute(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out: dir, threads, quiet } => {
            let resolved = runner::resolve(&config)?;
            for w in runner::validate(&resolved)? {
                let _ = writeln!(err, "warning: {w}");
            }
            let report = runner::run(&resolved, &RunOptions { out: dir, threads })?;
            if !quiet {
                let width = report.outcome.table.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                let _ = writeln!(out, "{} -> {}", report.kind.name(), report.dir.display());
                for (k, v) in &report.outcome.table {
                    let _ = writeln!(out, "  {k:<width$}  {v}");
                }
                let _ = writeln!(out, "  {:<width$}  {:.2} s", "wall time", report.manifest.wall_time_s);
            }
        }
        Command::Validate { config } => {
            let resolved = runner::resolve(&config)?;
            for w in runner::validate(&resolved)? {
                let _ = writeln!(out, "warning: {w}");
            }
            let _ = writeln!(out, "ok");
        }
        Command::List => {
            let rows: Vec<[String; 4]> = EXPERIMENTS
                .iter()
                .map(|k| {
                    let sub = if k.required_blocks().is_empty() { "-".to_string() } else { k.required_blocks().join(", ") };
                    [k.name().to_string(), format!("[{}]", k.block()), sub, format!("configs/{}.toml", k.name())]
                })
                .collect();
            let head = ["experiment", "block", "required sub-blocks", "default config"];
            let w: Vec<usize> = (0..4).map(|c| rows.iter().map(|r| r[c].len()).chain([head[c].len()]).max().unwrap()).collect();
            let _ = writeln!(out, "{:<w0$}  {:<w1$}  {:<w2$}  {}", head[0], head[1], head[2], head[3], w0 = w[0], w1 = w[1], w2 = w[2]);
            for r in rows {
                let _ = writeln!(out, "{:<w0$}  {:<w1$}  {:<w2$}  {}", r[0], r[1], r[2], r[3], w0 = w[0], w1 = w[1], w2 = w[2]);
            }
        }
    }
    Ok(())
}
