use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const META_FILE: &str = "run.meta";

/// Record of the configuration each stage of a run directory was produced
/// with. Contains no timestamps, so identical runs yield identical files.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub config: String,
    pub seed: u64,
    #[serde(default)]
    pub stages: BTreeMap<String, StageMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StageMeta {
    pub config_hash: String,
    pub seed: u64,
    pub args: Vec<String>,
}

pub fn config_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    format!("{:x}", h.finalize())
}

/// Adds or replaces the record of `stage` in `<out>/run.meta`.
pub fn record_stage(
    out: &Path,
    config: &str,
    seed: u64,
    stage: &str,
    manifest_toml: &str,
    args: Vec<String>,
) -> Result<()> {
    let path = out.join(META_FILE);
    let mut meta: RunMeta = match fs::read_to_string(&path) {
        Ok(text) => toml::from_str(&text).with_context(|| format!("reading {}", path.display()))?,
        Err(_) => RunMeta::default(),
    };
    meta.version = env!("CARGO_PKG_VERSION").to_string();
    meta.config = config.to_string();
    meta.seed = seed;
    let seed_text = seed.to_string();
    let mut parts = vec![stage, manifest_toml, seed_text.as_str()];
    parts.extend(args.iter().map(String::as_str));
    meta.stages.insert(
        stage.to_string(),
        StageMeta {
            config_hash: config_hash(&parts),
            seed,
            args,
        },
    );
    fs::create_dir_all(out)?;
    fs::write(&path, toml::to_string_pretty(&meta)?)?;
    Ok(())
}
