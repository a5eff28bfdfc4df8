//! Run configuration: one TOML file with `[data]`, `[params]`, `[client]`
//! and `[[fires]]`. Relative paths resolve against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::LiveSettings;
use crate::analogs::{hex, DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// One `<fire_id>.csv` per fire.
    pub hotspots_dir: PathBuf,
    pub stations: PathBuf,
    pub counties: PathBuf,
    pub nlcd: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlcd_classes: Option<PathBuf>,
    /// `<date>/{bi,tmax,tmin,wind,fm1}.asc`.
    pub weather_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    pub corpus_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub eps_m: f64,
    pub min_pts: usize,
    pub top_k_clusters: usize,
    pub analog_k: usize,
    pub delta_threshold: f64,
    pub min_slack: f64,
    pub max_slack: f64,
    pub weights: Vec<f64>,
    pub county_buffer_m: f64,
    pub max_attempts: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            eps_m: crate::footprint::DEFAULT_EPS_M,
            min_pts: crate::footprint::DEFAULT_MIN_PTS,
            top_k_clusters: crate::perception::DEFAULT_TOP_K,
            analog_k: crate::analogs::DEFAULT_ANALOG_K,
            delta_threshold: crate::consolidation::DEFAULT_DELTA_THRESHOLD,
            min_slack: crate::analogs::DEFAULT_MIN_SLACK,
            max_slack: crate::analogs::DEFAULT_MAX_SLACK,
            weights: crate::analogs::uniform_weights(),
            county_buffer_m: crate::enrichment::DEFAULT_COUNTY_BUFFER_M,
            max_attempts: crate::agent::DEFAULT_MAX_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    Mock,
    Replay,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    pub kind: ClientKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay_file: Option<PathBuf>,
    pub live: LiveSettings,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig { kind: ClientKind::Mock, replay_file: None, live: LiveSettings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Historical corpus and baseline training.
    Train,
    /// Held out for evaluation.
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FireSpec {
    pub id: String,
    pub role: Role,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl FireSpec {
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.start.iter_days().take_while(|d| *d <= self.end).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub client: ClientConfig,
    #[serde(default)]
    pub fires: Vec<FireSpec>,
}

impl RunConfig {
    pub fn from_toml_str(s: &str, base: &Path) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.resolve(base);
        c.check_params()?;
        Ok(c)
    }

    /// Parse, resolve paths and require every input path to exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let c = Self::from_toml_str(&text, base)?;
        c.check_paths()?;
        Ok(c)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let d = &mut self.data;
        for p in [&mut d.hotspots_dir, &mut d.stations, &mut d.counties, &mut d.nlcd, &mut d.weather_dir, &mut d.corpus_dir] {
            fix(p);
        }
        for p in [&mut d.population, &mut d.nlcd_classes, &mut d.ground_truth, &mut self.client.replay_file]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn check_params(&self) -> Result<()> {
        let p = &self.params;
        let bad = |m: String| Err(Error::Config(m));
        if !(p.eps_m > 0.0) {
            return bad(format!("params.eps_m must be > 0, got {}", p.eps_m));
        }
        if p.min_pts < 1 {
            return bad("params.min_pts must be >= 1".into());
        }
        if p.analog_k < 1 || p.top_k_clusters < 1 {
            return bad("params.analog_k and params.top_k_clusters must be >= 1".into());
        }
        if !(p.delta_threshold >= 0.0) {
            return bad("params.delta_threshold must be >= 0".into());
        }
        if !(p.min_slack > 0.0 && p.min_slack <= 1.0 && p.max_slack >= 1.0) {
            return bad("params.min_slack must be in (0, 1] and params.max_slack >= 1".into());
        }
        if p.weights.len() != DIM || p.weights.iter().any(|w| !(*w >= 0.0)) || p.weights.iter().all(|w| *w == 0.0) {
            return bad(format!("params.weights must be {DIM} non-negative values, not all zero"));
        }
        if !(p.county_buffer_m >= 0.0) {
            return bad("params.county_buffer_m must be >= 0".into());
        }
        if p.max_attempts < 1 {
            return bad("params.max_attempts must be >= 1".into());
        }
        let mut ids: Vec<&str> = self.fires.iter().map(|f| f.id.as_str()).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("fire {} is listed twice", w[0]));
        }
        if let Some(f) = self.fires.iter().find(|f| f.end < f.start) {
            return bad(format!("fire {} ends before it starts", f.id));
        }
        Ok(())
    }

    pub fn check_paths(&self) -> Result<()> {
        let d = &self.data;
        let required = [&d.hotspots_dir, &d.stations, &d.counties, &d.nlcd, &d.weather_dir];
        let optional = [&d.population, &d.nlcd_classes, &d.ground_truth];
        let missing: Vec<String> = required
            .into_iter()
            .chain(optional.into_iter().flatten())
            .filter(|p| !p.exists())
            .map(|p| p.display().to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("missing input paths: {}", missing.join(", "))))
        }
    }

    pub fn fire(&self, id: &str) -> Result<&FireSpec> {
        self.fires
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::Config(format!("fire {id} is not listed in the config")))
    }

    pub fn fires_with_role(&self, role: Role) -> Vec<&FireSpec> {
        self.fires.iter().filter(|f| f.role == role).collect()
    }

    /// Effective configuration with absolute paths.
    pub fn dump(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the effective parameters, client choice and fire
    /// list. Paths are left out so a moved dataset keeps its hash.
    pub fn hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Hashed<'a> {
            params: &'a Params,
            client: ClientKind,
            model: &'a str,
            fires: &'a [FireSpec],
        }
        let h = Hashed {
            params: &self.params,
            client: self.client.kind,
            model: &self.client.live.model,
            fires: &self.fires,
        };
        let text = crate::canonical::to_canonical_string_exact(&h)?;
        Ok(hex(&Sha256::digest(text.as_bytes())))
    }
}
