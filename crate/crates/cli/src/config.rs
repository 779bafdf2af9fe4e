use std::path::Path;

use anyhow::Context;
use scidoc_core::cluster::KMeansConfig;
use scidoc_core::corpus::SynthConfig;
use scidoc_core::{FilterConfig, ProbeConfig, TrainConfig};
use serde::{Deserialize, Serialize};

/// Optional TOML config. Each table holds the matching library config;
/// missing keys take library defaults.
///
/// ```toml
/// [train]
/// hidden_dim = 32
///
/// [probe]
/// runs = 5
/// ```
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthConfig,
    pub filter: FilterConfig,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub kmeans: KMeansConfig,
    pub cluster: ClusterSection,
    pub retrieve: RetrieveSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub ks: Vec<usize>,
    pub restarts: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection { ks: scidoc_core::cluster::PURITY_KS.to_vec(), restarts: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrieveSection {
    pub max_pairs: usize,
}

impl Default for RetrieveSection {
    fn default() -> Self {
        RetrieveSection { max_pairs: scidoc_core::retrieval::DEFAULT_MAX_PAIRS }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // Library configs accept unknown keys; reject them here so typos surface.
        let given: toml::Value = toml::from_str(&text)?;
        let known = toml::Value::try_from(&cfg)?;
        if let Some(key) = unknown_key(&given, &known, "") {
            anyhow::bail!("config {}: unknown key {key:?}", path.display());
        }
        Ok(cfg)
    }
}

fn unknown_key(given: &toml::Value, known: &toml::Value, prefix: &str) -> Option<String> {
    let (toml::Value::Table(g), toml::Value::Table(k)) = (given, known) else {
        return None;
    };
    for (name, v) in g {
        let path = if prefix.is_empty() { name.clone() } else { format!("{prefix}.{name}") };
        match k.get(name) {
            None => return Some(path),
            Some(kv) => {
                if let Some(bad) = unknown_key(v, kv, &path) {
                    return Some(bad);
                }
            }
        }
    }
    None
}

/// Overwrites `slot` when the flag was given.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
