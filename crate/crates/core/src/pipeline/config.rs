//! The declarative run configuration. Relative paths are resolved against
//! the directory holding the config file; credentials come only from
//! environment variables named here.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusFormat, DEFAULT_MIN_CHARS};
use crate::dedup::DedupConfig;
use crate::error::{Error, Result};
use crate::extraction::{ChatTransport, FixtureTransport, HttpTransport, PromptTemplate, TransportPolicy};
use crate::geocode::{Gazetteer, GeocodePolicy, Geocoder, HttpGeocoder};
use crate::linkage::MatchCriteria;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub path: PathBuf,
    pub format: CorpusFormat,
    #[serde(default = "default_min_chars")]
    pub min_chars: usize,
}

fn default_min_chars() -> usize {
    DEFAULT_MIN_CHARS
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransportConfig {
    /// Canned answers under `dir/extract/<id>.txt` and `dir/scope/<id>.txt`.
    Fixture { dir: PathBuf },
    /// OpenAI-compatible endpoint; the key is read from `api_key_env`.
    Http {
        endpoint: String,
        #[serde(default = "default_chat_key_env")]
        api_key_env: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_chat_key_env() -> String {
    "OPENAI_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeocoderConfig {
    Gazetteer { path: PathBuf },
    Http {
        endpoint: String,
        #[serde(default = "default_geo_key_env")]
        api_key_env: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_geo_key_env() -> String {
    "GEOCODER_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupStageConfig {
    #[serde(flatten)]
    pub params: DedupConfig,
    /// Pair labels to train from when no model is given.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Previously trained model; takes precedence over `labels`.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Calibrate the cutoff to this duplicate rate instead of using `cutoff`.
    #[serde(default)]
    pub target_rate: Option<f64>,
}

impl Default for DedupStageConfig {
    fn default() -> Self {
        DedupStageConfig {
            params: DedupConfig::default(),
            labels: None,
            model: None,
            target_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageConfig {
    pub reference_dir: PathBuf,
    #[serde(default = "MatchCriteria::lower")]
    pub lower: MatchCriteria,
    #[serde(default = "MatchCriteria::upper")]
    pub upper: MatchCriteria,
    #[serde(default)]
    pub party_canon: Option<PathBuf>,
    #[serde(default)]
    pub crosswalk: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressConfig {
    pub eradication: PathBuf,
    /// Model specs; the default lag grid (1..5) when absent.
    #[serde(default)]
    pub specs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSource,
    #[serde(default)]
    pub template: Option<PathBuf>,
    pub transport: TransportConfig,
    #[serde(default)]
    pub transport_policy: TransportPolicy,
    pub geocoder: GeocoderConfig,
    #[serde(default)]
    pub geocode_policy: GeocodePolicy,
    /// Persistent geocode cache (JSONL). Must lie outside `output_dir`.
    #[serde(default)]
    pub geocache: Option<PathBuf>,
    #[serde(default)]
    pub dedup: DedupStageConfig,
    #[serde(default)]
    pub linkage: Option<LinkageConfig>,
    #[serde(default)]
    pub regress: Option<RegressConfig>,
    /// Gold labels for `evaluate`.
    #[serde(default)]
    pub gold: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn require(path: &Path, what: &str, problems: &mut Vec<String>) {
    if !path.exists() {
        problems.push(format!("{what} not found: {}", path.display()));
    }
}

impl RunConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.resolve_paths(&base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.corpus.path);
        if let Some(t) = &mut self.template {
            resolve(base, t);
        }
        if let TransportConfig::Fixture { dir } = &mut self.transport {
            resolve(base, dir);
        }
        if let GeocoderConfig::Gazetteer { path } = &mut self.geocoder {
            resolve(base, path);
        }
        if let Some(c) = &mut self.geocache {
            resolve(base, c);
        }
        for p in [&mut self.dedup.labels, &mut self.dedup.model, &mut self.gold].into_iter().flatten() {
            resolve(base, p);
        }
        if let Some(l) = &mut self.linkage {
            resolve(base, &mut l.reference_dir);
            for p in [&mut l.party_canon, &mut l.crosswalk].into_iter().flatten() {
                resolve(base, p);
            }
        }
        if let Some(r) = &mut self.regress {
            resolve(base, &mut r.eradication);
            if let Some(s) = &mut r.specs {
                resolve(base, s);
            }
        }
        resolve(base, &mut self.output_dir);
        // one seed for every seeded component
        self.dedup.params.seed = self.seed;
    }

    /// Checks every referenced path and every parameter; all problems are
    /// reported together.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        require(&self.corpus.path, "corpus", &mut problems);
        if let Some(t) = &self.template {
            require(t, "template", &mut problems);
        }
        if let TransportConfig::Fixture { dir } = &self.transport {
            require(dir, "fixture directory", &mut problems);
        }
        if let GeocoderConfig::Gazetteer { path } = &self.geocoder {
            require(path, "gazetteer", &mut problems);
        }
        if let Some(p) = &self.dedup.labels {
            require(p, "dedup labels", &mut problems);
        }
        if let Some(p) = &self.dedup.model {
            require(p, "dedup model", &mut problems);
        }
        if let Some(p) = &self.gold {
            require(p, "gold labels", &mut problems);
        }
        if let Some(l) = &self.linkage {
            require(&l.reference_dir.join("mapping.json"), "reference mapping", &mut problems);
            for p in [&l.party_canon, &l.crosswalk].into_iter().flatten() {
                require(p, "linkage table", &mut problems);
            }
            for c in [&l.lower, &l.upper] {
                if let Err(e) = c.validate() {
                    problems.push(e.to_string());
                }
            }
        }
        if let Some(r) = &self.regress {
            require(&r.eradication, "eradication data", &mut problems);
            if let Some(s) = &r.specs {
                require(s, "model specs", &mut problems);
            }
        }
        if let Some(cache) = &self.geocache {
            if cache.starts_with(&self.output_dir) {
                problems.push(format!(
                    "geocache {} must not live inside the output directory",
                    cache.display()
                ));
            }
        }
        for check in [self.transport_policy.validate(), self.dedup.params.validate()] {
            if let Err(e) = check {
                problems.push(e.to_string());
            }
        }
        if let Some(t) = self.dedup.target_rate {
            if !(0.0..1.0).contains(&t) {
                problems.push(format!("dedup.target_rate {t} outside [0, 1)"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn template(&self) -> Result<PromptTemplate> {
        match &self.template {
            Some(p) => PromptTemplate::load(p),
            None => Ok(PromptTemplate::canonical()),
        }
    }

    pub fn chat_transport(&self) -> Result<Box<dyn ChatTransport>> {
        Ok(match &self.transport {
            TransportConfig::Fixture { dir } => Box::new(FixtureTransport::new(dir)),
            TransportConfig::Http {
                endpoint,
                api_key_env,
                timeout_secs,
            } => Box::new(HttpTransport::from_env(
                endpoint,
                api_key_env,
                Duration::from_secs(*timeout_secs),
            )?),
        })
    }

    pub fn geocoder(&self) -> Result<Box<dyn Geocoder>> {
        Ok(match &self.geocoder {
            GeocoderConfig::Gazetteer { path } => Box::new(Gazetteer::load(path)?),
            GeocoderConfig::Http {
                endpoint,
                api_key_env,
                timeout_secs,
            } => Box::new(HttpGeocoder::from_env(
                endpoint,
                api_key_env,
                Duration::from_secs(*timeout_secs),
            )?),
        })
    }

    /// The gazetteer, when the geocoder is one; used to place reference
    /// events that lack coordinates.
    pub fn gazetteer(&self) -> Result<Option<Gazetteer>> {
        match &self.geocoder {
            GeocoderConfig::Gazetteer { path } => Gazetteer::load(path).map(Some),
            GeocoderConfig::Http { .. } => Ok(None),
        }
    }
}
