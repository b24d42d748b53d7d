use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{io_err, write_text, ReportError};

/// Record of one output directory. `outputs` paths are relative to the
/// directory holding `manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub spec_label: String,
    pub input_hashes: BTreeMap<String, String>,
    pub commands_run: Vec<String>,
    pub outputs: BTreeMap<String, String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub generated_at: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, ReportError> {
    let mut f = fs::File::open(path).map_err(io_err(path))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn now() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return epoch;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(spec_label: impl Into<String>) -> Self {
        RunManifest {
            spec_label: spec_label.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    /// Existing manifest in `dir`, if any and readable.
    pub fn load(dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(dir.join("manifest.json")).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<(), ReportError> {
        self.input_hashes.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_output(&mut self, artifact: &str, relative: &str) {
        self.outputs.insert(artifact.to_string(), relative.to_string());
    }

    /// Checks every output exists, stamps the time and writes `manifest.json`.
    pub fn write(&mut self, dir: &Path) -> Result<(), ReportError> {
        for (name, rel) in &self.outputs {
            if !dir.join(rel).exists() {
                return Err(ReportError::Manifest(format!(
                    "output '{name}' at {} does not exist",
                    dir.join(rel).display()
                )));
            }
        }
        self.generated_at = now();
        self.tool_version = env!("CARGO_PKG_VERSION").to_string();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| ReportError::Manifest(e.to_string()))?;
        text.push('\n');
        write_text(&dir.join("manifest.json"), &text)
    }
}
