use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use corebody::body_model::TestBodyParams;
use corebody::evaluation::GuidanceMode;
use corebody::session::{SessionConfig, SessionStore, Speed};

use crate::offline::{self, DEFAULT_N_RING, DEFAULT_SEED};
use crate::server::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "corebody", version, about = "Pose guidance engine: live service and offline tools")]
pub struct Cli {
    /// Body model asset file (binary or JSON); defaults to the built-in test body.
    #[arg(long, global = true, value_name = "PATH")]
    pub assets: Option<PathBuf>,
    /// Session configuration JSON.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Address for `serve`.
    #[arg(long, global = true, value_name = "ADDR:PORT", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Guidance mode; overrides the config file.
    #[arg(long, global = true, value_name = "skeleton|markers")]
    pub mode: Option<GuidanceMode>,
    /// Replay pacing.
    #[arg(long, global = true, value_name = "realtime|max", default_value = "max")]
    pub speed: Speed,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the live guidance service.
    Serve,
    /// Score a recorded session against a target and print the report.
    Eval {
        target: PathBuf,
        session: PathBuf,
        /// Record of the target file to use.
        #[arg(long, default_value_t = 0)]
        target_index: usize,
        /// Also write the report here.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Stream a .poselog through the pipeline and record a session.
    Replay {
        frames: PathBuf,
        /// Target .poselog; defaults to the target in the config.
        #[arg(long, value_name = "PATH")]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        target_index: usize,
        /// Sessions directory; overrides COREBODY_SESSIONS_DIR.
        #[arg(long, value_name = "DIR")]
        sessions_dir: Option<PathBuf>,
    },
    /// Write the procedural test body.
    GenAssets {
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Vertices per cross-section ring.
        #[arg(long, default_value_t = DEFAULT_N_RING)]
        n_ring: usize,
        /// 6,890 vertices with pose blendshapes.
        #[arg(long, conflicts_with = "n_ring")]
        full_size: bool,
        /// Write the JSON form instead of the binary one.
        #[arg(long)]
        json: bool,
    },
    /// Convert a JSON report to a CSV RMSE series.
    ConvertReport {
        report: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

impl Cli {
    fn session_config(&self) -> Result<SessionConfig> {
        let mut config = offline::load_config(self.config.as_deref())?;
        if let Some(mode) = self.mode {
            config.mode = mode;
        }
        if self.assets.is_some() {
            config.assets = self.assets.clone();
        }
        Ok(config)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.session_config()?;
    match &cli.command {
        Command::Serve => {
            let assets = offline::load_assets(config.assets.as_deref())?;
            let state = AppState::new(assets, config, SessionStore::from_env())?;
            let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
            runtime.block_on(server::serve(state, &cli.bind))
        }
        Command::Eval { target, session, target_index, report } => {
            let assets = Arc::new(offline::load_assets(config.assets.as_deref())?);
            let target = offline::read_target(target, *target_index)?;
            let outcome = offline::evaluate(assets, &config, &target, session)?;
            let json = outcome.report.to_json();
            if let Some(path) = report {
                std::fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
            }
            std::io::stdout().write_all(json.as_bytes())?;
            Ok(())
        }
        Command::Replay { frames, target, target_index, sessions_dir } => {
            let assets = Arc::new(offline::load_assets(config.assets.as_deref())?);
            let target = offline::resolve_target(target.as_deref(), *target_index, &config)?;
            let store = sessions_dir.clone().map(SessionStore::new).unwrap_or_else(SessionStore::from_env);
            let result = offline::replay(assets, &config, &target, frames, cli.speed, &store)?;
            eprintln!("session recorded in {}", result.session_dir.display());
            std::io::stdout().write_all(result.outcome.report.to_json().as_bytes())?;
            Ok(())
        }
        Command::GenAssets { out, seed, n_ring, full_size, json } => {
            let params = if *full_size { TestBodyParams::smpl_sized(*seed) } else { TestBodyParams::new(*n_ring, *seed) };
            anyhow::ensure!(params.n_ring >= 3, "--n-ring must be at least 3");
            offline::gen_assets(out, &params, *json)
        }
        Command::ConvertReport { report, out } => {
            let text = std::fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
            let csv = offline::convert_report(&text)?;
            match out {
                Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
            Ok(())
        }
    }
}
