use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one invocation. Replaying `argv` reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub seed: u64,
    pub config_dir: Option<PathBuf>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

/// Output directory plus the files written into it during a run.
pub struct Run {
    pub out_dir: PathBuf,
    pub seed: u64,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(out_dir: &Path, seed: u64) -> Result<Run> {
        std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            seed,
            outputs: Vec::new(),
        })
    }

    /// Path for an output file, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.out_dir.join(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.output(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn finish(self, manifest: RunManifest) -> Result<()> {
        let manifest = RunManifest {
            outputs: self.outputs,
            ..manifest
        };
        let path = self.out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
