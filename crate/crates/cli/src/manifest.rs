//! Run manifests: enough to rerun a command and get byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Digests of a file, or of every file below a directory in sorted order.
pub fn digests(path: &Path) -> Result<Vec<FileDigest>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for f in files {
            out.extend(digests(&f)?);
        }
        Ok(out)
    } else {
        Ok(vec![FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        }])
    }
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(&config).expect("json value serializes");
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config_hash: hex(&Sha256::digest(&canonical)),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.extend(digests(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        let files = digests(path)?;
        self.outputs
            .extend(files.into_iter().filter(|f| !f.path.ends_with("manifest.json")));
        Ok(())
    }

    /// `<dir>/manifest.json` for directory outputs, `<file>.manifest.json`
    /// otherwise.
    pub fn write_next_to(&self, out: &Path) -> Result<PathBuf> {
        let target = if out.is_dir() {
            out.join("manifest.json")
        } else {
            let mut name = out.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            out.with_file_name(name)
        };
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&target, text).with_context(|| format!("writing {}", target.display()))?;
        Ok(target)
    }
}
