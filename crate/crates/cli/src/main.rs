//! `hubbard-witness`: scan the entanglement witness, locate T_c, extrapolate
//! to the thermodynamic limit and cross-check with DQMC.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use config::{apply_override, Command, ConfigErrors, RunConfig};

/// Environment variable consulted when neither `--threads` nor `run.threads` is set.
const THREADS_ENV: &str = "HUBBARD_WITNESS_THREADS";

#[derive(Parser)]
#[command(name = "hubbard-witness", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Witness E and its ingredients on a temperature grid.
    WitnessScan(RunArgs),
    /// Witness temperature T_c across a grid of U.
    TcVsU(RunArgs),
    /// Finite-size extrapolation of T_c(U) and the strong-coupling eta.
    Extrapolate(RunArgs),
    /// DQMC estimates on a temperature grid with jackknife errors.
    QmcRun(RunArgs),
    /// Emit a matplotlib script for CSV files written by the other commands.
    Plot {
        #[arg(long, value_enum)]
        figure: plot::Figure,
        /// Where to write the Python script.
        #[arg(long)]
        output: PathBuf,
        /// Input CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file. A CSV written by this program also works.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set model.u=8`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path (`output.path`); stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (`run.threads`).
    #[arg(long)]
    threads: Option<usize>,
}

fn load_table(path: &PathBuf) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    // A CSV output carries its configuration as a commented preamble.
    let looks_like_csv = text.lines().next().is_some_and(|l| l.starts_with('#'));
    let toml_text = if looks_like_csv {
        text.lines()
            .map_while(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        text
    };
    toml::from_str(&toml_text).with_context(|| format!("parsing {}", path.display()))
}

fn resolve(args: &RunArgs, command: Command) -> Result<RunConfig> {
    let mut table = match &args.config {
        Some(p) => load_table(p)?,
        None => Table::new(),
    };
    let mut errors = Vec::new();
    for spec in &args.set {
        if let Err(e) = apply_override(&mut table, spec) {
            errors.push(e);
        }
    }
    if let Some(out) = &args.output {
        set(&mut table, "output", "path", Value::String(out.display().to_string()));
    }
    if let Some(n) = args.threads {
        set(&mut table, "run", "threads", Value::Integer(n as i64));
    }
    match RunConfig::load(&table, command) {
        Ok(cfg) if errors.is_empty() => Ok(cfg),
        Ok(_) => Err(ConfigErrors(errors).into()),
        Err(ConfigErrors(more)) => {
            errors.extend(more);
            Err(ConfigErrors(errors).into())
        }
    }
}

fn set(table: &mut Table, section: &str, key: &str, value: Value) {
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    if !entry.is_table() {
        *entry = Value::Table(Table::new());
    }
    entry.as_table_mut().unwrap().insert(key.to_string(), value);
}

fn thread_count(cfg: &RunConfig) -> Result<Option<usize>> {
    if cfg.threads.is_some() {
        return Ok(cfg.threads);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("{THREADS_ENV}=`{s}` is not a thread count"))?;
            anyhow::ensure!(n >= 1, "{THREADS_ENV} must be at least 1");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the worker pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(n: Option<usize>) -> Result<()> {
    if n.is_some_and(|n| n > 1) {
        log::warn!("built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let (command, args) = match cli.command {
        Cmd::Plot { figure, output, inputs } => {
            plot::write(figure, &inputs, &output)?;
            eprintln!("wrote {}", output.display());
            return Ok(true);
        }
        Cmd::WitnessScan(a) => (Command::WitnessScan, a),
        Cmd::TcVsU(a) => (Command::TcVsU, a),
        Cmd::Extrapolate(a) => (Command::Extrapolate, a),
        Cmd::QmcRun(a) => (Command::QmcRun, a),
    };
    let cfg = resolve(&args, command)?;
    configure_threads(thread_count(&cfg)?)?;
    let outcome = match command {
        Command::WitnessScan => commands::witness_scan(&cfg)?,
        Command::TcVsU => commands::tc_vs_u(&cfg)?,
        Command::Extrapolate => commands::extrapolate(&cfg)?,
        Command::QmcRun => commands::qmc_run(&cfg)?,
    };
    Ok(outcome.complete)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some points could not be computed; see the status column");
            ExitCode::from(2)
        }
        Err(e) => {
            match e.downcast_ref::<ConfigErrors>() {
                Some(ce) => eprint!("error: {ce}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}
