use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation, written next to its primary output. Holds no
/// timestamps, so identical runs give identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `out.json` → `out.manifest.json`; a directory gets `manifest.json` inside.
pub fn manifest_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join("manifest.json")
    } else {
        output.with_extension("manifest.json")
    }
}

pub struct ManifestBuilder {
    m: RunManifest,
}

impl ManifestBuilder {
    pub fn new(ctx: &crate::Ctx, subcommand: &str) -> Self {
        ManifestBuilder {
            m: RunManifest {
                subcommand: subcommand.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: None,
                deterministic: ctx.deterministic,
                inputs: Vec::new(),
                outputs: Vec::new(),
                config: serde_json::Value::Null,
            },
        }
        .with_config_file(ctx.config_path.as_deref())
    }

    fn with_config_file(mut self, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            // Hashing cannot fail here: the file was already read.
            if let Ok(h) = sha256_file(p) {
                self.m.inputs.push(InputDigest { path: p.display().to_string(), sha256: h });
            }
        }
        self
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<&mut Self> {
        self.m.inputs.push(InputDigest { path: path.display().to_string(), sha256: sha256_file(path)? });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.m.outputs.push(path.display().to_string());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.m.seed = Some(seed);
        self
    }

    pub fn config<T: Serialize>(&mut self, cfg: &T) -> anyhow::Result<&mut Self> {
        self.m.config = serde_json::to_value(cfg)?;
        Ok(self)
    }

    /// Writes the manifest beside `primary`.
    pub fn write(&self, primary: &Path) -> anyhow::Result<()> {
        let path = manifest_path(primary);
        let text = serde_json::to_string_pretty(&self.m)? + "\n";
        scidoc_core::binfmt::write_atomic(&path, text.as_bytes())?;
        Ok(())
    }
}

/// Refuses to overwrite any of the inputs.
pub fn guard_output(output: &Path, inputs: &[&Path]) -> anyhow::Result<()> {
    for i in inputs {
        let same = match (std::fs::canonicalize(i), std::fs::canonicalize(output)) {
            (Ok(a), Ok(b)) => a == b,
            _ => *i == output,
        };
        if same {
            anyhow::bail!("output {} would overwrite an input", output.display());
        }
    }
    Ok(())
}
