//! Location strings to coordinates, with a persistent cache, and
//! great-circle distance.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::TransportError;
use crate::num::Scalar;
use crate::text::{fold, fold_key};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance between two (lat, lon) pairs in degrees.
pub fn haversine_km<T: Scalar>(lat_a: T, lon_a: T, lat_b: T, lon_b: T) -> T {
    let two = T::lit(2.0);
    let phi_a = lat_a.to_radians();
    let phi_b = lat_b.to_radians();
    let d_phi = (lat_b - lat_a).to_radians();
    let d_lambda = (lon_b - lon_a).to_radians();
    let h = (d_phi / two).sin().powi(2) + phi_a.cos() * phi_b.cos() * (d_lambda / two).sin().powi(2);
    // rounding can push h a hair past 1 for antipodes
    let h = h.min(T::one()).max(T::zero());
    two * T::lit(EARTH_RADIUS_KM) * h.sqrt().asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    pub resolved_name: String,
    #[serde(default)]
    pub department: Option<String>,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64, resolved_name: impl Into<String>) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::Validation(format!(
                "coordinates out of range: ({latitude}, {longitude})"
            )));
        }
        Ok(GeoPoint {
            latitude,
            longitude,
            resolved_name: resolved_name.into(),
            department: None,
        })
    }

    pub fn distance_km(&self, other: &GeoPoint) -> f64 {
        haversine_km(self.latitude, self.longitude, other.latitude, other.longitude)
    }
}

/// Query sent to the geocoder: folded location plus the country.
pub fn geocode_query(raw_location: &str) -> String {
    let folded = fold(raw_location);
    let words: Vec<&str> = folded.split_whitespace().collect();
    format!("{}, colombia", words.join(" "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoHit {
    pub latitude: f64,
    pub longitude: f64,
    pub name: String,
    pub admin_area: Option<String>,
}

pub trait Geocoder: Send + Sync {
    fn lookup(&self, query: &str) -> std::result::Result<Option<GeoHit>, TransportError>;
}

/// Offline geocoder backed by a CSV gazetteer with columns
/// `query,lat,lon,name,department`.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<String, GeoHit>,
}

#[derive(Debug, Deserialize)]
struct GazetteerRow {
    query: String,
    lat: f64,
    lon: f64,
    name: String,
    #[serde(default)]
    department: Option<String>,
}

impl Gazetteer {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for row in reader.deserialize::<GazetteerRow>() {
            let row = row?;
            let key = normalize_gazetteer_key(&row.query);
            entries.entry(key).or_insert(GeoHit {
                latitude: row.lat,
                longitude: row.lon,
                name: row.name,
                admin_area: row.department.filter(|d| !d.trim().is_empty()),
            });
        }
        Ok(Gazetteer { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Direct lookup by place name, without the country suffix.
    pub fn find(&self, place: &str) -> Option<&GeoHit> {
        self.entries.get(&geocode_query(place))
    }
}

fn normalize_gazetteer_key(q: &str) -> String {
    let base = geocode_query(q);
    match base.strip_suffix(", colombia, colombia") {
        Some(stripped) => format!("{stripped}, colombia"),
        None => base,
    }
}

impl Geocoder for Gazetteer {
    fn lookup(&self, query: &str) -> std::result::Result<Option<GeoHit>, TransportError> {
        Ok(self.entries.get(query).cloned())
    }
}

/// Google-style geocoding endpoint (`?address=...&key=...`).
pub struct HttpGeocoder {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpGeocoder {
    pub fn from_env(endpoint: &str, api_key_env: &str, timeout: Duration) -> Result<Self> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| Error::Config(format!("environment variable {api_key_env} not set")))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(HttpGeocoder {
            endpoint: endpoint.to_owned(),
            api_key,
            client,
        })
    }
}

impl Geocoder for HttpGeocoder {
    fn lookup(&self, query: &str) -> std::result::Result<Option<GeoHit>, TransportError> {
        let resp = self
            .client
            .get(&self.endpoint)
            .query(&[("address", query), ("key", self.api_key.as_str())])
            .send()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("http {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Fatal(format!("http {status}")));
        }
        let body: serde_json::Value = resp
            .json()
            .map_err(|e| TransportError::Transient(format!("bad body: {e}")))?;
        match body["status"].as_str() {
            Some("ZERO_RESULTS") => return Ok(None),
            Some("OVER_QUERY_LIMIT") => return Err(TransportError::Transient("over quota".into())),
            Some("OK") => {}
            other => return Err(TransportError::Fatal(format!("geocoder status {other:?}"))),
        }
        let top = &body["results"][0];
        let loc = &top["geometry"]["location"];
        let (Some(lat), Some(lon)) = (loc["lat"].as_f64(), loc["lng"].as_f64()) else {
            return Ok(None);
        };
        let admin_area = top["address_components"]
            .as_array()
            .into_iter()
            .flatten()
            .find(|c| {
                c["types"]
                    .as_array()
                    .is_some_and(|t| t.iter().any(|t| t == "administrative_area_level_1"))
            })
            .and_then(|c| c["long_name"].as_str())
            .map(str::to_owned);
        Ok(Some(GeoHit {
            latitude: lat,
            longitude: lon,
            name: top["formatted_address"].as_str().unwrap_or(query).to_owned(),
            admin_area,
        }))
    }
}

/// Bundled department centroids for attributing coordinates to a
/// department when the geocoder gives no administrative area.
#[derive(Debug, Clone)]
pub struct DepartmentTable {
    rows: Vec<(String, f64, f64)>,
}

const DEPARTMENT_CENTROIDS: &str = include_str!("../data/department_centroids.csv");

impl DepartmentTable {
    pub fn bundled() -> Self {
        Self::from_csv(DEPARTMENT_CENTROIDS).expect("bundled centroid table is valid")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            department: String,
            lat: f64,
            lon: f64,
        }
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows = reader
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.department, r.lat, r.lon)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(DepartmentTable { rows })
    }

    /// `(department, lat, lon)` rows in table order.
    pub fn centroids(&self) -> impl Iterator<Item = (&str, f64, f64)> {
        self.rows.iter().map(|(n, lat, lon)| (n.as_str(), *lat, *lon))
    }

    pub fn nearest(&self, latitude: f64, longitude: f64) -> Option<&str> {
        self.rows
            .iter()
            .map(|(name, lat, lon)| (name, haversine_km(latitude, longitude, *lat, *lon)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(name, _)| name.as_str())
    }

    /// Canonical spelling of a department name, matched after folding.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        let key = fold_key(name);
        self.rows
            .iter()
            .find(|(n, _, _)| fold_key(n) == key)
            .map(|(n, _, _)| n.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub query: String,
    /// `None` records a negative answer.
    pub result: Option<GeoPoint>,
    /// Unix seconds.
    pub cached_at: u64,
}

/// Query-keyed cache of geocoder answers, negative answers included.
/// Reads are concurrent; misses are serialized so each distinct query
/// reaches the client at most once.
#[derive(Debug, Default)]
pub struct GeoCache {
    entries: RwLock<BTreeMap<String, CacheEntry>>,
    miss_lock: Mutex<()>,
    client_calls: AtomicUsize,
}

impl GeoCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a JSONL cache; a missing file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::new());
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let entry: CacheEntry = serde_json::from_str(line)?;
            entries.insert(entry.query.clone(), entry);
        }
        Ok(GeoCache {
            entries: RwLock::new(entries),
            ..Default::default()
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = PathBuf::from(format!("{}.tmp", path.display()));
        let mut out = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        for entry in self.entries.read().unwrap().values() {
            writeln!(out, "{}", serde_json::to_string(entry)?).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, query: &str) -> Option<CacheEntry> {
        self.entries.read().unwrap().get(query).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of client lookups issued through this cache.
    pub fn client_calls(&self) -> usize {
        self.client_calls.load(Ordering::SeqCst)
    }

    fn insert(&self, query: &str, result: Option<GeoPoint>) {
        let cached_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or_default();
        self.entries.write().unwrap().insert(
            query.to_owned(),
            CacheEntry {
                query: query.to_owned(),
                result,
                cached_at,
            },
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeocodePolicy {
    pub max_attempts: u32,
    pub backoff_ms: Vec<u64>,
}

impl Default for GeocodePolicy {
    fn default() -> Self {
        GeocodePolicy {
            max_attempts: 3,
            backoff_ms: vec![250, 1_000],
        }
    }
}

/// Resolves a location string. Unresolvable places and exhausted retries
/// both yield `Ok(None)`; only exhausted retries leave the cache untouched.
pub fn geocode_location(
    raw_location: &str,
    client: &dyn Geocoder,
    cache: &GeoCache,
    policy: &GeocodePolicy,
    departments: &DepartmentTable,
) -> Result<Option<GeoPoint>> {
    if raw_location.trim().is_empty() {
        return Err(Error::Validation("empty location string".into()));
    }
    let query = geocode_query(raw_location);
    if let Some(hit) = cache.get(&query) {
        return Ok(hit.result);
    }
    let _guard = cache.miss_lock.lock().unwrap();
    if let Some(hit) = cache.get(&query) {
        return Ok(hit.result);
    }
    let attempts = policy.max_attempts.max(1);
    for attempt in 1..=attempts {
        cache.client_calls.fetch_add(1, Ordering::SeqCst);
        match client.lookup(&query) {
            Ok(hit) => {
                let point = hit.map(|h| to_point(h, departments)).transpose()?;
                cache.insert(&query, point.clone());
                return Ok(point);
            }
            Err(TransportError::Transient(msg)) if attempt < attempts => {
                log::info!("geocode {query:?}: attempt {attempt} failed: {msg}");
                let wait = policy
                    .backoff_ms
                    .get((attempt as usize - 1).min(policy.backoff_ms.len().saturating_sub(1)))
                    .copied()
                    .unwrap_or(0);
                thread::sleep(Duration::from_millis(wait));
            }
            Err(e) => {
                log::warn!("geocode {query:?}: giving up: {e}");
                return Ok(None);
            }
        }
    }
    Ok(None)
}

fn to_point(hit: GeoHit, departments: &DepartmentTable) -> Result<GeoPoint> {
    let mut point = GeoPoint::new(hit.latitude, hit.longitude, hit.name)?;
    point.department = match hit.admin_area {
        Some(area) => Some(departments.canonical(&area).map(str::to_owned).unwrap_or(area)),
        None => departments.nearest(hit.latitude, hit.longitude).map(str::to_owned),
    };
    Ok(point)
}
