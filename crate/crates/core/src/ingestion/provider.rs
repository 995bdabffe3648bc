//! Travel-time providers: haversine fallback, pre-computed matrix files, and
//! an HTTP distance-matrix client backed by a persistent JSON-lines cache.

use crate::geo::{haversine_minutes, GeoPoint};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// API key for the HTTP distance-matrix endpoint.
pub const MATRIX_KEY_ENV: &str = "PARADARP_MATRIX_KEY";
/// Optional override of the HTTP endpoint URL.
pub const MATRIX_URL_ENV: &str = "PARADARP_MATRIX_URL";
pub const DEFAULT_ENDPOINT: &str = "https://maps.googleapis.com/maps/api/distancematrix/json";
/// Destinations per request.
const MAX_DESTINATIONS: usize = 25;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("travel-time provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("negative travel time {minutes} min from {origin} to {destination}")]
    NegativeTime { origin: GeoPoint, destination: GeoPoint, minutes: f64 },
    #[error("travel-time cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait TravelTimeProvider {
    /// Travel minutes for each `(origin, destination)` pair, in order.
    fn fetch(&mut self, pairs: &[(GeoPoint, GeoPoint)]) -> Result<Vec<f64>, ProviderError>;
}

/// Full travel matrix over `locations`. The diagonal and any pair of identical
/// coordinates are zero; every other distinct pair is queried once.
pub fn resolve_travel_times<P: TravelTimeProvider + ?Sized>(
    locations: &[GeoPoint],
    provider: &mut P,
) -> Result<Vec<Vec<f64>>, ProviderError> {
    let k = locations.len();
    let mut wanted: BTreeMap<(String, String), (GeoPoint, GeoPoint)> = BTreeMap::new();
    for a in locations {
        for b in locations {
            if a.key() != b.key() {
                wanted.entry((a.key(), b.key())).or_insert((*a, *b));
            }
        }
    }
    let pairs: Vec<_> = wanted.values().copied().collect();
    let times = if pairs.is_empty() { Vec::new() } else { provider.fetch(&pairs)? };
    let mut lookup = HashMap::with_capacity(pairs.len());
    for ((o, d), t) in pairs.iter().zip(times) {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(ProviderError::NegativeTime { origin: *o, destination: *d, minutes: t });
        }
        lookup.insert((o.key(), d.key()), t);
    }
    let mut m = vec![vec![0.0; k]; k];
    for (i, a) in locations.iter().enumerate() {
        for (j, b) in locations.iter().enumerate() {
            if i != j && a.key() != b.key() {
                m[i][j] = lookup[&(a.key(), b.key())];
            }
        }
    }
    Ok(m)
}

/// Great-circle distance at a constant speed.
#[derive(Debug, Clone, Copy)]
pub struct HaversineProvider {
    pub speed_kmh: f64,
}

impl TravelTimeProvider for HaversineProvider {
    fn fetch(&mut self, pairs: &[(GeoPoint, GeoPoint)]) -> Result<Vec<f64>, ProviderError> {
        Ok(pairs.iter().map(|&(a, b)| haversine_minutes(a, b, self.speed_kmh)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    origin: String,
    destination: String,
    minutes: f64,
}

/// Persistent `(origin, destination) → minutes` map stored as JSON lines, one
/// entry per pair, keyed by coordinates rounded to 6 decimals. New entries are
/// appended.
#[derive(Debug, Default)]
pub struct TravelCache {
    path: Option<PathBuf>,
    entries: HashMap<(String, String), f64>,
}

impl TravelCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or lazily creates) a cache file.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, ProviderError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = std::fs::File::open(&path)?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let e: CacheEntry = serde_json::from_str(&line).map_err(|err| ProviderError::Cache {
                    path: path.clone(),
                    reason: format!("line {}: {err}", lineno + 1),
                })?;
                entries.insert((e.origin, e.destination), e.minutes);
            }
        }
        Ok(TravelCache { path: Some(path), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, origin: GeoPoint, destination: GeoPoint) -> Option<f64> {
        self.entries.get(&(origin.key(), destination.key())).copied()
    }

    /// Records new entries, appending them to the backing file first.
    pub fn insert_all(&mut self, items: &[(GeoPoint, GeoPoint, f64)]) -> Result<(), ProviderError> {
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut buf = String::new();
            for &(o, d, minutes) in items {
                let line = serde_json::to_string(&CacheEntry { origin: o.key(), destination: d.key(), minutes })
                    .expect("cache entry serializes");
                buf.push_str(&line);
                buf.push('\n');
            }
            file.write_all(buf.as_bytes())?;
            file.sync_data()?;
        }
        for &(o, d, minutes) in items {
            self.entries.insert((o.key(), d.key()), minutes);
        }
        Ok(())
    }
}

/// A fixed matrix read from a JSON-lines file in the cache format. Unknown pairs
/// are an error.
#[derive(Debug)]
pub struct MatrixFileProvider {
    cache: TravelCache,
}

impl MatrixFileProvider {
    pub fn open(path: &Path) -> Result<Self, ProviderError> {
        if !path.exists() {
            return Err(ProviderError::ProviderUnavailable(format!("matrix file {} not found", path.display())));
        }
        Ok(MatrixFileProvider { cache: TravelCache::open(path)? })
    }
}

impl TravelTimeProvider for MatrixFileProvider {
    fn fetch(&mut self, pairs: &[(GeoPoint, GeoPoint)]) -> Result<Vec<f64>, ProviderError> {
        pairs
            .iter()
            .map(|&(o, d)| {
                self.cache
                    .get(o, d)
                    .ok_or_else(|| ProviderError::ProviderUnavailable(format!("no matrix entry for {o} -> {d}")))
            })
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct MatrixResponse {
    status: String,
    #[serde(default)]
    error_message: Option<String>,
    #[serde(default)]
    rows: Vec<MatrixRow>,
}

#[derive(Debug, Deserialize)]
struct MatrixRow {
    elements: Vec<MatrixElement>,
}

#[derive(Debug, Deserialize)]
struct MatrixElement {
    status: String,
    duration: Option<Duration>,
}

#[derive(Debug, Deserialize)]
struct Duration {
    /// Seconds.
    value: f64,
}

/// Distance-matrix web API client (Google response layout). Every answer is
/// persisted to the cache before being returned, so a pair is fetched at most
/// once across runs.
pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    cache: TravelCache,
    client: reqwest::blocking::Client,
    requests_sent: usize,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, cache: TravelCache) -> Self {
        HttpProvider {
            endpoint: endpoint.into(),
            api_key,
            cache,
            client: reqwest::blocking::Client::builder()
                .timeout(std::time::Duration::from_secs(30))
                .build()
                .expect("HTTP client builds"),
            requests_sent: 0,
        }
    }

    /// Endpoint from `PARADARP_MATRIX_URL` (default: Google) and key from
    /// `PARADARP_MATRIX_KEY`.
    pub fn from_env(cache: TravelCache) -> Self {
        let endpoint = std::env::var(MATRIX_URL_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string());
        Self::new(endpoint, std::env::var(MATRIX_KEY_ENV).ok(), cache)
    }

    pub fn requests_sent(&self) -> usize {
        self.requests_sent
    }

    pub fn cache(&self) -> &TravelCache {
        &self.cache
    }

    fn request(&mut self, origin: GeoPoint, destinations: &[GeoPoint]) -> Result<Vec<f64>, ProviderError> {
        let unavailable = |m: String| ProviderError::ProviderUnavailable(m);
        let dests = destinations.iter().map(|d| format!("{:.6},{:.6}", d.lat, d.lon)).collect::<Vec<_>>().join("|");
        let mut query = vec![("origins", format!("{:.6},{:.6}", origin.lat, origin.lon)), ("destinations", dests)];
        if let Some(key) = &self.api_key {
            query.push(("key", key.clone()));
        }
        self.requests_sent += 1;
        let resp = self.client.get(&self.endpoint).query(&query).send().map_err(|e| unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let body: MatrixResponse = resp.json().map_err(|e| unavailable(e.to_string()))?;
        if body.status != "OK" {
            return Err(unavailable(format!(
                "API status {}{}",
                body.status,
                body.error_message.map(|m| format!(": {m}")).unwrap_or_default()
            )));
        }
        let row = body.rows.into_iter().next().ok_or_else(|| unavailable("response has no rows".into()))?;
        if row.elements.len() != destinations.len() {
            return Err(unavailable(format!("expected {} elements, got {}", destinations.len(), row.elements.len())));
        }
        row.elements
            .into_iter()
            .zip(destinations)
            .map(|(el, d)| match (el.status.as_str(), el.duration) {
                ("OK", Some(dur)) => Ok(dur.value / 60.0),
                (status, _) => Err(unavailable(format!("element {origin} -> {d}: {status}"))),
            })
            .collect()
    }
}

impl TravelTimeProvider for HttpProvider {
    fn fetch(&mut self, pairs: &[(GeoPoint, GeoPoint)]) -> Result<Vec<f64>, ProviderError> {
        // Missing pairs grouped by origin; each pair is requested exactly once.
        let mut missing: BTreeMap<String, (GeoPoint, Vec<GeoPoint>)> = BTreeMap::new();
        for &(o, d) in pairs {
            if self.cache.get(o, d).is_none() {
                let entry = missing.entry(o.key()).or_insert_with(|| (o, Vec::new()));
                if !entry.1.iter().any(|x| x.key() == d.key()) {
                    entry.1.push(d);
                }
            }
        }
        for (_, (origin, dests)) in missing {
            for chunk in dests.chunks(MAX_DESTINATIONS) {
                let times = self.request(origin, chunk)?;
                for (d, &t) in chunk.iter().zip(&times) {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(ProviderError::NegativeTime { origin, destination: *d, minutes: t });
                    }
                }
                let items: Vec<_> = chunk.iter().zip(times).map(|(d, t)| (origin, *d, t)).collect();
                self.cache.insert_all(&items)?;
            }
        }
        Ok(pairs.iter().map(|&(o, d)| self.cache.get(o, d).expect("fetched above")).collect())
    }
}

/// Provider selection as exposed on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderKind {
    Matrix(PathBuf),
    Http { endpoint: Option<String>, cache_path: PathBuf },
    Haversine { speed_kmh: f64 },
}

impl ProviderKind {
    pub fn open(&self) -> Result<Box<dyn TravelTimeProvider>, ProviderError> {
        Ok(match self {
            ProviderKind::Matrix(path) => Box::new(MatrixFileProvider::open(path)?),
            ProviderKind::Http { endpoint, cache_path } => {
                let cache = TravelCache::open(cache_path.clone())?;
                let mut p = HttpProvider::from_env(cache);
                if let Some(e) = endpoint {
                    p.endpoint = e.clone();
                }
                Box::new(p)
            }
            ProviderKind::Haversine { speed_kmh } => Box::new(HaversineProvider { speed_kmh: *speed_kmh }),
        })
    }
}
