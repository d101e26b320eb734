//! Batch commands: evaluation, replay, asset generation, report conversion.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use corebody::body_model::{generate_test_body, load_assets_path, write_assets, write_assets_json, TestBodyParams};
use corebody::evaluation::SessionReport;
use corebody::gateway::{open_replay, read_poselog};
use corebody::session::{paced, run_session, set_target, SessionConfig, SessionOutcome, SessionStore, Speed};
use corebody::{BodyModelAssets, EstimatedFrame};
use log::info;

pub const DEFAULT_N_RING: usize = 8;
pub const DEFAULT_SEED: u64 = 1;

/// Assets from `path`, or the built-in test body.
pub fn load_assets(path: Option<&Path>) -> Result<BodyModelAssets> {
    match path {
        Some(p) => load_assets_path(p).with_context(|| format!("loading assets from {}", p.display())),
        None => {
            info!("no asset file given, using the generated test body");
            Ok(generate_test_body(&TestBodyParams::new(DEFAULT_N_RING, DEFAULT_SEED)))
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<SessionConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            SessionConfig::from_json(&text).with_context(|| format!("parsing config {}", p.display()))
        }
        None => Ok(SessionConfig::default()),
    }
}

/// Record `index` of a `.poselog`.
pub fn read_target(path: &Path, index: usize) -> Result<EstimatedFrame> {
    let file = File::open(path).with_context(|| format!("opening target {}", path.display()))?;
    let frames = read_poselog(BufReader::new(file)).with_context(|| format!("reading target {}", path.display()))?;
    let count = frames.len();
    frames
        .into_iter()
        .nth(index)
        .with_context(|| format!("target {} has {count} frames, index {index} requested", path.display()))
}

/// The target named on the command line, else the one in the config.
pub fn resolve_target(explicit: Option<&Path>, index: usize, config: &SessionConfig) -> Result<EstimatedFrame> {
    match (explicit, &config.target) {
        (Some(p), _) => read_target(p, index),
        (None, Some(src)) => Ok(src.resolve()?),
        (None, None) => bail!("no target: pass --target or set \"target\" in the config"),
    }
}

/// Runs a recorded frame stream against a target without touching disk.
pub fn evaluate(
    assets: Arc<BodyModelAssets>,
    config: &SessionConfig,
    target: &EstimatedFrame,
    frames: &Path,
) -> Result<SessionOutcome> {
    let target = Arc::new(set_target(&assets, config, target)?);
    let file = File::open(frames).with_context(|| format!("opening {}", frames.display()))?;
    Ok(run_session(assets, config, target, open_replay(BufReader::new(file)), |_| {})?)
}

#[derive(Debug)]
pub struct ReplayResult {
    pub session_dir: PathBuf,
    pub outcome: SessionOutcome,
}

/// Streams a recorded session through the pipeline and records it as a
/// new session under `store`.
pub fn replay(
    assets: Arc<BodyModelAssets>,
    config: &SessionConfig,
    target: &EstimatedFrame,
    frames: &Path,
    speed: Speed,
    store: &SessionStore,
) -> Result<ReplayResult> {
    let target = Arc::new(set_target(&assets, config, target)?);
    let file = File::open(frames).with_context(|| format!("opening {}", frames.display()))?;
    let session = store.create_session()?;
    info!("recording to {}", session.path().display());
    session.write_config(config)?;
    session.write_target(&target.frame)?;
    let mut log = session.open_log()?;
    let mut log_error = None;
    let outcome = run_session(assets, config, target, paced(open_replay(BufReader::new(file)), speed), |out| {
        if log_error.is_none() {
            log_error = log.append(&out.log_record()).err();
        }
    })?;
    if let Some(e) = log_error {
        return Err(e).context("writing session log");
    }
    session.write_report(&outcome.report)?;
    Ok(ReplayResult { session_dir: session.path().to_path_buf(), outcome })
}

pub fn gen_assets(out: &Path, params: &TestBodyParams, json: bool) -> Result<()> {
    let assets = generate_test_body(params);
    let file = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    if json {
        write_assets_json(&assets, file)?;
    } else {
        write_assets(&assets, file)?;
    }
    info!("wrote {} vertices, {} faces to {}", assets.vertex_count(), assets.face_count(), out.display());
    Ok(())
}

/// RMSE series of a JSON report as CSV.
pub fn convert_report(json: &str) -> Result<String> {
    Ok(SessionReport::from_json(json)?.to_csv())
}
