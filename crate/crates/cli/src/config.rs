//! Optional configuration directory.
//!
//! Recognized files, all optional:
//! - `dualpol.toml`: `[scenario]`, `[model]` and `[adapt]` tables plus a
//!   top-level `center_snr_db`; unspecified keys keep their defaults.
//! - `bearers.csv`: bearer table replacing the built-in one.
//! - `miesm_d<d>.csv`: MIESM tables replacing the bundled ones.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dualpol::channel::{LmsModelParams, ScenarioParams, DEFAULT_CENTER_SNR_DB};
use dualpol::linkadapt::{default_bearers, load_bearers, AdaptConfig, Bearer};
use dualpol::pla::{import_lut, LutSet, SUPPORTED_BITS};
use serde::{Deserialize, Serialize};

pub const SETTINGS_FILE: &str = "dualpol.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub center_snr_db: f64,
    pub scenario: ScenarioParams,
    pub model: LmsModelParams,
    pub adapt: AdaptConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            center_snr_db: DEFAULT_CENTER_SNR_DB,
            scenario: ScenarioParams::default(),
            model: LmsModelParams::maritime(),
            adapt: AdaptConfig::default(),
        }
    }
}

/// Everything read from the configuration directory.
#[derive(Debug, Clone)]
pub struct Config {
    pub dir: Option<PathBuf>,
    pub settings: Settings,
    pub bearers: Vec<Bearer>,
    pub luts: LutSet,
}

impl Config {
    pub fn load(dir: Option<&Path>) -> Result<Config> {
        let Some(dir) = dir else {
            return Ok(Config {
                dir: None,
                settings: Settings::default(),
                bearers: default_bearers(),
                luts: LutSet::bundled(),
            });
        };
        if !dir.is_dir() {
            anyhow::bail!("config directory {} does not exist", dir.display());
        }
        let settings_path = dir.join(SETTINGS_FILE);
        let settings = if settings_path.exists() {
            let text = std::fs::read_to_string(&settings_path)
                .with_context(|| format!("reading {}", settings_path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", settings_path.display()))?
        } else {
            Settings::default()
        };
        let bearer_path = dir.join("bearers.csv");
        let bearers = if bearer_path.exists() {
            load_bearers(&bearer_path).with_context(|| format!("loading {}", bearer_path.display()))?
        } else {
            default_bearers()
        };
        let bundled = LutSet::bundled();
        let mut luts = Vec::new();
        for d in SUPPORTED_BITS {
            let p = dir.join(format!("miesm_d{d}.csv"));
            if p.exists() {
                let lut = import_lut(&p).with_context(|| format!("loading {}", p.display()))?;
                anyhow::ensure!(lut.bits() == d, "{} holds a table for d = {}", p.display(), lut.bits());
                luts.push(lut);
            } else {
                luts.push(bundled.get(d)?.clone());
            }
        }
        Ok(Config {
            dir: Some(dir.to_path_buf()),
            settings,
            bearers,
            luts: LutSet::from_luts(luts),
        })
    }
}
