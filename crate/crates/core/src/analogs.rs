//! Historical analog retrieval: z-scored event-day vectors, weighted cosine
//! ranking with one day per fire, and soft bounds from the retrieved days.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::consolidation::EventDayContext;
use crate::error::{Error, Result};
use crate::ingest::{parse_ground_truth, write_ground_truth, GroundTruthDay};

pub const FEATURE_NAMES: [&str; 10] = [
    "total_points",
    "total_frp",
    "total_area",
    "n_clusters",
    "total_population",
    "spread_potential",
    "bi",
    "tmax",
    "wind",
    "fm1",
];
pub const FLAG_NAMES: [&str; 2] = ["no_hotspot_day", "multi_county"];
pub const N_FEATURES: usize = FEATURE_NAMES.len();
pub const DIM: usize = N_FEATURES + FLAG_NAMES.len();
/// Leading features that describe fire activity.
const N_ACTIVITY: usize = 4;

pub const DEFAULT_ANALOG_K: usize = 5;
pub const DEFAULT_MIN_SLACK: f64 = 0.25;
pub const DEFAULT_MAX_SLACK: f64 = 4.0;

/// Raw, unstandardized features. `None` marks a missing average (weather,
/// terrain); it standardizes to the corpus mean.
pub type RawFeatures = [Option<f64>; N_FEATURES];

pub fn raw_features(ctx: &EventDayContext) -> RawFeatures {
    let s = &ctx.snapshot;
    [
        Some(s.total_points as f64),
        Some(s.total_frp),
        Some(s.total_area_acres),
        Some(s.n_clusters as f64),
        Some(s.total_population.unwrap_or(0.0)),
        s.mean_spread_potential,
        s.weather.bi,
        s.weather.tmax,
        s.weather.wind,
        s.weather.fm1,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub flags: Vec<bool>,
}

impl FeatureVector {
    /// Values followed by flags as 0/1.
    pub fn components(&self) -> Vec<f64> {
        self.values
            .iter()
            .copied()
            .chain(self.flags.iter().map(|&f| if f { 1.0 } else { 0.0 }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl CorpusStats {
    pub fn z(&self, i: usize, x: Option<f64>) -> f64 {
        match x {
            Some(x) if !self.constant[i] => (x - self.mean[i]) / self.std[i],
            _ => 0.0,
        }
    }

    pub fn unz(&self, i: usize, z: f64) -> f64 {
        z * self.std[i] + self.mean[i]
    }
}

/// Per-feature mean and population std over the present values. A feature
/// with no present values, or one value repeated, is flagged constant.
pub fn corpus_stats(corpus: &[RawFeatures]) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::Precondition("corpus is empty".into()));
    }
    let mut mean = vec![0.0; N_FEATURES];
    let mut std = vec![0.0; N_FEATURES];
    let mut constant = vec![true; N_FEATURES];
    for i in 0..N_FEATURES {
        let xs: Vec<f64> = corpus.iter().filter_map(|r| r[i]).collect();
        if xs.is_empty() {
            continue;
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        mean[i] = m;
        std[i] = var.sqrt();
        constant[i] = xs.iter().all(|&x| x == xs[0]);
    }
    Ok(CorpusStats { mean, std, constant })
}

fn standardize(raw: &RawFeatures, stats: &CorpusStats) -> Vec<f64> {
    (0..N_FEATURES).map(|i| stats.z(i, raw[i])).collect()
}

pub fn vectorize_day(ctx: &EventDayContext, stats: &CorpusStats) -> FeatureVector {
    FeatureVector {
        values: standardize(&raw_features(ctx), stats),
        flags: vec![ctx.is_quiet(), ctx.snapshot.counties.len() > 1],
    }
}

fn window_mean(days: &[RawFeatures], i: usize, n: usize) -> Option<f64> {
    let tail = &days[days.len().saturating_sub(n)..];
    let xs: Vec<f64> = tail.iter().filter_map(|r| r[i]).collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Raw trajectory features for a no-hotspot day: activity slots take the
/// 3-day mean of the prior days, the rest take the 7-day mean.
pub fn quiet_day_raw(history: &[EventDayContext]) -> Result<RawFeatures> {
    if history.is_empty() {
        return Err(Error::Precondition("quiet-day vector needs at least one prior day".into()));
    }
    let raws: Vec<RawFeatures> = history.iter().map(raw_features).collect();
    let mut out = [None; N_FEATURES];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = window_mean(&raws, i, if i < N_ACTIVITY { 3 } else { 7 });
    }
    Ok(out)
}

/// `history` holds the days before the quiet day, oldest first.
pub fn vectorize_quiet_day(history: &[EventDayContext], stats: &CorpusStats) -> Result<FeatureVector> {
    let raw = quiet_day_raw(history)?;
    let last = history.last().expect("checked non-empty");
    Ok(FeatureVector {
        values: standardize(&raw, stats),
        flags: vec![true, last.snapshot.counties.len() > 1],
    })
}

/// Active days use their own signals; quiet days with prior history use the
/// trajectory vector.
pub fn vectorize_context(
    ctx: &EventDayContext,
    history: &[EventDayContext],
    stats: &CorpusStats,
) -> Result<FeatureVector> {
    if ctx.is_quiet() && !history.is_empty() {
        let start = history.len().saturating_sub(7);
        vectorize_quiet_day(&history[start..], stats)
    } else {
        Ok(vectorize_day(ctx, stats))
    }
}

pub fn weighted_cosine(a: &FeatureVector, b: &FeatureVector, weights: &[f64]) -> Result<f64> {
    let (a, b) = (a.components(), b.components());
    if a.len() != b.len() {
        return Err(Error::Dimension { expected: a.len(), found: b.len() });
    }
    if weights.len() != a.len() {
        return Err(Error::Dimension { expected: a.len(), found: weights.len() });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        dot += weights[i] * a[i] * b[i];
        na += weights[i] * a[i] * a[i];
        nb += weights[i] * b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn uniform_weights() -> Vec<f64> {
    vec![1.0; DIM]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogRecord {
    pub fire_id: String,
    pub date: NaiveDate,
    pub similarity: f64,
    pub personnel: f64,
    pub daily_cost_musd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub fire_id: String,
    pub date: NaiveDate,
    pub vector: FeatureVector,
    pub personnel: f64,
    pub daily_cost_musd: f64,
}

/// Rank by similarity (ties: earlier date, then fire id), keep each fire's
/// best day, return the first `k`.
pub fn retrieve_analogs(
    query: &FeatureVector,
    corpus: &[CorpusEntry],
    k: usize,
    weights: &[f64],
) -> Result<Vec<AnalogRecord>> {
    let mut scored = Vec::with_capacity(corpus.len());
    for e in corpus {
        scored.push((weighted_cosine(query, &e.vector, weights)?, e));
    }
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.total_cmp(sa)
            .then(a.date.cmp(&b.date))
            .then(a.fire_id.cmp(&b.fire_id))
    });
    let mut seen = HashSet::new();
    Ok(scored
        .into_iter()
        .filter(|(_, e)| seen.insert(e.fire_id.as_str()))
        .take(k)
        .map(|(s, e)| AnalogRecord {
            fire_id: e.fire_id.clone(),
            date: e.date,
            similarity: s,
            personnel: e.personnel,
            daily_cost_musd: e.daily_cost_musd,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub min_factor: f64,
    pub max_factor: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Slack { min_factor: DEFAULT_MIN_SLACK, max_factor: DEFAULT_MAX_SLACK }
    }
}

/// `None` ranges mean unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub personnel: Option<(f64, f64)>,
    pub cost_musd: Option<(f64, f64)>,
}

impl Bounds {
    pub fn unbounded() -> Self {
        Bounds::default()
    }
}

pub fn analog_bounds(analogs: &[AnalogRecord], slack: Slack) -> Bounds {
    let range = |f: fn(&AnalogRecord) -> f64| {
        let lo = analogs.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = analogs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (!analogs.is_empty()).then(|| (lo * slack.min_factor, hi * slack.max_factor))
    };
    Bounds {
        personnel: range(|a| a.personnel),
        cost_musd: range(|a| a.daily_cost_musd),
    }
}

/// One stored corpus day with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDay {
    pub context: EventDayContext,
    pub personnel: f64,
    pub daily_cost_musd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StatsSidecar {
    content_hash: String,
    stats: CorpusStats,
}

/// In-memory corpus: days sorted by (fire, date), stats, and the vectors
/// used for retrieval.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub days: Vec<CorpusDay>,
    pub stats: CorpusStats,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn from_days(mut days: Vec<CorpusDay>) -> Result<Self> {
        days.sort_by(|a, b| {
            (a.context.fire_id.as_str(), a.context.date).cmp(&(b.context.fire_id.as_str(), b.context.date))
        });
        let raws = corpus_raws(&days)?;
        let stats = corpus_stats(&raws)?;
        Self::with_stats(days, stats)
    }

    fn with_stats(days: Vec<CorpusDay>, stats: CorpusStats) -> Result<Self> {
        let mut entries = Vec::with_capacity(days.len());
        let mut start = 0;
        for (i, d) in days.iter().enumerate() {
            if i > 0 && days[i - 1].context.fire_id != d.context.fire_id {
                start = i;
            }
            let history: Vec<EventDayContext> = days[start..i].iter().map(|d| d.context.clone()).collect();
            entries.push(CorpusEntry {
                fire_id: d.context.fire_id.clone(),
                date: d.context.date,
                vector: vectorize_context(&d.context, &history, &stats)?,
                personnel: d.personnel,
                daily_cost_musd: d.daily_cost_musd,
            });
        }
        Ok(Corpus { days, stats, entries })
    }

    pub fn retrieve(&self, query: &FeatureVector, k: usize, weights: &[f64]) -> Result<Vec<AnalogRecord>> {
        retrieve_analogs(query, &self.entries, k, weights)
    }

    /// Write `contexts/<fire>/<date>.json`, `ground_truth.csv` and the
    /// `stats.json` sidecar.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let contexts = dir.join("contexts");
        if contexts.exists() {
            fs::remove_dir_all(&contexts).map_err(|e| Error::io(&contexts, e))?;
        }
        let mut truth: BTreeMap<String, Vec<GroundTruthDay>> = BTreeMap::new();
        for d in &self.days {
            let fire_dir = dir.join("contexts").join(&d.context.fire_id);
            fs::create_dir_all(&fire_dir).map_err(|e| Error::io(&fire_dir, e))?;
            let path = fire_dir.join(format!("{}.json", d.context.date));
            fs::write(&path, d.context.to_canonical_json()? + "\n").map_err(|e| Error::io(&path, e))?;
            truth.entry(d.context.fire_id.clone()).or_default().push(GroundTruthDay {
                fire_id: d.context.fire_id.clone(),
                date: d.context.date,
                personnel: d.personnel.round() as u32,
                daily_cost: d.daily_cost_musd,
            });
        }
        let gt_path = dir.join("ground_truth.csv");
        let f = fs::File::create(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
        write_ground_truth(f, &truth)?;
        // Stats describe the corpus exactly as it reads back from disk.
        let reloaded = read_days(dir)?;
        let stats = corpus_stats(&corpus_raws(&reloaded)?)?;
        let sidecar = StatsSidecar { content_hash: content_hash(dir)?, stats };
        let path = dir.join("stats.json");
        fs::write(&path, crate::canonical::to_canonical_string_exact(&sidecar)? + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Load a corpus directory. The stats sidecar is reused when its hash
    /// matches the current content and recomputed otherwise.
    pub fn load(dir: &Path) -> Result<Self> {
        let days = read_days(dir)?;
        if days.is_empty() {
            return Err(Error::Precondition(format!("corpus {} has no context files", dir.display())));
        }
        let hash = content_hash(dir)?;
        let sidecar = fs::read_to_string(dir.join("stats.json"))
            .ok()
            .and_then(|s| serde_json::from_str::<StatsSidecar>(&s).ok())
            .filter(|s| s.content_hash == hash);
        match sidecar {
            Some(s) => Self::with_stats(days, s.stats),
            None => Self::from_days(days),
        }
    }
}

fn corpus_raws(days: &[CorpusDay]) -> Result<Vec<RawFeatures>> {
    let mut raws = Vec::with_capacity(days.len());
    let mut start = 0;
    for (i, d) in days.iter().enumerate() {
        if i > 0 && days[i - 1].context.fire_id != d.context.fire_id {
            start = i;
        }
        raws.push(if d.context.is_quiet() && i > start {
            let h: Vec<EventDayContext> =
                days[i.saturating_sub(7).max(start)..i].iter().map(|d| d.context.clone()).collect();
            quiet_day_raw(&h)?
        } else {
            raw_features(&d.context)
        });
    }
    Ok(raws)
}

fn context_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let root = dir.join("contexts");
    let mut files = Vec::new();
    let fires = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
    for fire in fires {
        let fire = fire.map_err(|e| Error::io(&root, e))?.path();
        if !fire.is_dir() {
            continue;
        }
        for f in fs::read_dir(&fire).map_err(|e| Error::io(&fire, e))? {
            let f = f.map_err(|e| Error::io(&fire, e))?.path();
            if f.extension().is_some_and(|x| x == "json") {
                files.push(f);
            }
        }
    }
    files.sort();
    Ok(files)
}

fn read_days(dir: &Path) -> Result<Vec<CorpusDay>> {
    let gt_path = dir.join("ground_truth.csv");
    let truth = parse_ground_truth(fs::File::open(&gt_path).map_err(|e| Error::io(&gt_path, e))?)?;
    let mut days = Vec::new();
    let mut missing = Vec::new();
    for f in context_files(dir)? {
        let ctx = EventDayContext::from_json(&fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?)?;
        let gt = truth
            .get(&ctx.fire_id)
            .and_then(|ds| ds.iter().find(|d| d.date == ctx.date));
        match gt {
            Some(gt) => days.push(CorpusDay {
                personnel: gt.personnel as f64,
                daily_cost_musd: gt.daily_cost,
                context: ctx,
            }),
            None => missing.push(format!("{} {}", ctx.fire_id, ctx.date)),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Format(format!(
            "corpus days without ground truth: {}",
            missing.join(", ")
        )));
    }
    days.sort_by(|a, b| {
        (a.context.fire_id.as_str(), a.context.date).cmp(&(b.context.fire_id.as_str(), b.context.date))
    });
    Ok(days)
}

/// SHA-256 over the relative path and bytes of every context file plus the
/// ground truth.
pub fn content_hash(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut files = context_files(dir)?;
    files.push(dir.join("ground_truth.csv"));
    for f in files {
        let rel = f.strip_prefix(dir).unwrap_or(&f);
        h.update(rel.to_string_lossy().replace('\\', "/").as_bytes());
        h.update([0]);
        h.update(fs::read(&f).map_err(|e| Error::io(&f, e))?);
        h.update([0]);
    }
    Ok(hex(&h.finalize()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
