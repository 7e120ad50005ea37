//! Command line definitions and their one-shot implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use portalis_core::dsl;
use portalis_core::engine::Engine;
use portalis_core::events::UpdatePolicy;
use portalis_core::profile::{Chain, Dim};
use serde_json::json;
use thiserror::Error;

use crate::service::{arg_value, Gateway, GatewayError};

pub const DEFAULT_SCHEMA: &str = "schemas/demo.pds";

#[derive(Debug, Parser)]
#[command(name = "portalis", version, about = "Profile-driven portal over a simulated data warehouse")]
pub struct Cli {
    /// Schema to load before running the command.
    #[arg(long, global = true, default_value = DEFAULT_SCHEMA)]
    pub schema: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Event,
    Periodic,
    Manual,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a schema and print a summary of the resulting state.
    Load { file: PathBuf },
    /// Check schemas without serving them; defaults to `--schema`.
    Check { files: Vec<PathBuf> },
    /// Print a schema in canonical form.
    Fmt { file: PathBuf },
    /// Serve the HTTP gateway.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, value_enum, default_value_t = Mode::Event)]
        policy: Mode,
        #[arg(long)]
        period: Option<u64>,
    },
    /// Comprehend a predicate over the objects of one tower level.
    Eval {
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long)]
        predicate: String,
        /// Lift `LEVEL:PREDICATE` before evaluating; repeatable.
        #[arg(long = "lift", value_name = "LEVEL:PREDICATE")]
        lifts: Vec<String>,
    },
    /// Apply a metric to an assignment chain such as `s=higraph,p=registered`.
    Metric {
        name: String,
        #[arg(long, default_value = "")]
        chain: String,
    },
    /// Dispatch one client event in a fresh session of `profile`.
    Event {
        name: String,
        #[arg(long)]
        profile: String,
        /// Event argument `KEY=VALUE`; VALUE is read as JSON when it parses.
        #[arg(long = "arg", value_name = "KEY=VALUE")]
        args: Vec<String>,
    },
    /// Render a page as seen by `profile`.
    Render {
        page: String,
        #[arg(long)]
        profile: String,
    },
    /// Run the update agent for a number of ticks.
    Agent {
        #[arg(long, value_enum, default_value_t = Mode::Event)]
        mode: Mode,
        #[arg(long)]
        period: Option<u64>,
        #[arg(long, default_value_t = 1)]
        ticks: u64,
        /// Source marked content-critical before the first tick, such as
        /// `repo:hr`; repeatable.
        #[arg(long = "touch", value_name = "SOURCE")]
        touched: Vec<String>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Problems with the input: schema diagnostics, unknown names.
    #[error("{}", .0.join("\n"))]
    Diagnostics(Vec<String>),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Diagnostics(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    fn one(message: impl Into<String>) -> Self {
        CliError::Diagnostics(vec![message.into()])
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        CliError::one(e.to_string())
    }
}

pub fn policy(mode: Mode, period: Option<u64>) -> Result<UpdatePolicy, CliError> {
    match (mode, period) {
        (Mode::Event, _) => Ok(UpdatePolicy::EventDriven),
        (Mode::Manual, _) => Ok(UpdatePolicy::Manual),
        (Mode::Periodic, p) => UpdatePolicy::periodic(p.unwrap_or(1)).map_err(|e| CliError::one(e.to_string())),
    }
}

/// Parses and loads `path` into a fresh engine.
pub fn load_schema(path: &Path) -> Result<Engine, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
    let shown = path.display().to_string();
    let render = |d: Vec<dsl::Diagnostic>| CliError::Diagnostics(d.iter().map(|x| x.render(&shown)).collect());
    let schema = dsl::parse_bytes(&bytes).map_err(render)?;
    dsl::load(&Engine::new(), &schema).map_err(render)
}

fn summary(engine: &Engine) -> serde_json::Value {
    json!({
        "concepts": engine.store().concepts().count(),
        "individuals": engine.store().len(),
        "repositories": engine.warehouse().repositories().map(|r| r.name().to_string()).collect::<Vec<_>>(),
        "profiles": engine.profiles().keys().collect::<Vec<_>>(),
        "metrics": engine.metrics().keys().collect::<Vec<_>>(),
        "pages": engine.pages().iter().map(|p| p.id.clone()).collect::<Vec<_>>(),
        "scripts": engine.scripts().iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "frames": engine.frames().len(),
        "hashes": engine.hashes(),
    })
}

fn parse_chain(text: &str) -> Result<Chain, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (d, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::one(format!("chain entry `{pair}` is not `dim=value`")))?;
            let dim: Dim = d.trim().parse().map_err(|e: portalis_core::profile::ProfileError| CliError::one(e.to_string()))?;
            Ok((dim, v.trim().to_string()))
        })
        .collect()
}

fn parse_args(args: &[String]) -> Result<BTreeMap<String, serde_json::Value>, CliError> {
    args.iter()
        .map(|a| {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| CliError::one(format!("argument `{a}` is not `key=value`")))?;
            let json = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
            arg_value(&json)?;
            Ok((k.to_string(), json))
        })
        .collect()
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json values serialize")
}

/// Runs every command except `serve`, returning what goes to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Load { file } => Ok(pretty(&summary(&load_schema(file)?))),
        Command::Check { files } => {
            let files = if files.is_empty() { std::slice::from_ref(&cli.schema) } else { files.as_slice() };
            let mut problems = Vec::new();
            for f in files {
                match load_schema(f) {
                    Ok(_) => {}
                    Err(CliError::Diagnostics(d)) => problems.extend(d),
                    Err(e) => return Err(e),
                }
            }
            if problems.is_empty() {
                Ok(format!("{} schema(s) ok", files.len()))
            } else {
                Err(CliError::Diagnostics(problems))
            }
        }
        Command::Fmt { file } => {
            let text = std::fs::read(file).map_err(|e| CliError::Internal(format!("{}: {e}", file.display())))?;
            let shown = file.display().to_string();
            let schema = dsl::parse_bytes(&text)
                .map_err(|d| CliError::Diagnostics(d.iter().map(|x| x.render(&shown)).collect()))?;
            Ok(dsl::print(&schema).trim_end().to_string())
        }
        Command::Serve { .. } => Err(CliError::Internal("`serve` runs inside the async runtime".into())),
        Command::Eval { level, predicate, lifts } => {
            let mut engine = load_schema(&cli.schema)?;
            for lift in lifts {
                let (l, text) = lift
                    .split_once(':')
                    .ok_or_else(|| CliError::one(format!("lift `{lift}` is not `LEVEL:PREDICATE`")))?;
                let l: usize = l.trim().parse().map_err(|_| CliError::one(format!("bad lift level `{l}`")))?;
                let phi = dsl::parse_predicate(text).map_err(|d| CliError::one(format!("--lift: {d}")))?;
                engine.lift(l, phi).map_err(|e| CliError::one(e.to_string()))?;
            }
            let phi = dsl::parse_predicate(predicate).map_err(|d| CliError::one(format!("--predicate: {d}")))?;
            let ids = engine.eval_at_level(*level, &phi).map_err(|e| CliError::one(e.to_string()))?;
            Ok(pretty(&json!(ids)))
        }
        Command::Metric { name, chain } => {
            let engine = load_schema(&cli.schema)?;
            let chain = parse_chain(chain)?;
            let metric = engine.metric(name).map_err(|e| CliError::one(e.to_string()))?;
            let values = engine
                .apply_metric(name, &chain)
                .map_err(|e| CliError::one(e.to_string()))?;
            let saturation = metric
                .saturation_level(engine.dims())
                .map_err(|e| CliError::one(e.to_string()))?;
            Ok(pretty(&json!({
                "metric": name,
                "chain": portalis_core::profile::format_chain(&chain),
                "values": values,
                "saturation": saturation,
            })))
        }
        Command::Event { name, profile, args } => {
            let gateway = Gateway::new(load_schema(&cli.schema)?);
            let args = parse_args(args)?;
            let session = gateway.open_session(profile)?;
            let receipt = gateway.submit_event(&session.token, name, &args, None)?;
            Ok(pretty(&json!({
                "event": name,
                "profile": profile,
                "timestamp": receipt.timestamp,
                "effects": receipt.effects,
            })))
        }
        Command::Render { page, profile } => {
            let gateway = Gateway::new(load_schema(&cli.schema)?);
            let session = gateway.open_session(profile)?;
            let rendered = gateway.get_page(&session.token, page)?;
            Ok(pretty(&serde_json::to_value(rendered).expect("pages serialize")))
        }
        Command::Agent {
            mode,
            period,
            ticks,
            touched,
        } => {
            let mut engine = load_schema(&cli.schema)?;
            engine.set_policy(policy(*mode, *period)?);
            let sources = touched.iter().cloned().collect();
            let marks = engine
                .mark_content_critical(&sources)
                .map_err(|e| CliError::one(e.to_string()))?;
            let mut runs = Vec::new();
            for tick in 1..=*ticks {
                let refreshed = engine.run_agent(tick);
                runs.push(json!({ "tick": tick, "refreshed": refreshed, "pending": engine.pending() }));
            }
            Ok(pretty(&json!({
                "policy": engine.policy().to_string(),
                "marked": marks.marked,
                "refreshedOnMark": marks.refreshed,
                "ticks": runs,
            })))
        }
    }
}
