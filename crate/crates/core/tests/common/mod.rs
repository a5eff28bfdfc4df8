#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use gal::agent::{FailureCategory, Indicators, Level, Rationales, Recommendation};
use gal::analogs::{AnalogRecord, Bounds, CorpusEntry, FeatureVector, DIM, N_FEATURES};
use gal::config::RunConfig;
use gal::footprint::Partition;
use gal::geometry::{haversine_m, GeoPoint, Polygon};
use gal::ingest::{Hotspot, RasterGrid};

pub const NODATA: f64 = -9999.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn synthetic_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic")
}

/// Bundled config with the corpus redirected into `scratch`.
pub fn synthetic_config(scratch: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&synthetic_dir().join("config.toml")).expect("bundled config loads");
    cfg.data.corpus_dir = scratch.join("corpus");
    cfg
}

pub fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dest = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &dest);
        } else {
            fs::copy(e.path(), dest).unwrap();
        }
    }
}

// ---------------------------------------------------------------- hotspots

pub fn hotspot(lat: f64, lon: f64, frp: f64, d: NaiveDate) -> Hotspot {
    Hotspot { lat, lon, frp, brightness: 330.0 + frp / 10.0, acq_date: d, acq_time: 1030, satellite: "N".into() }
}

/// A few dense blobs a couple of km wide plus scattered points.
pub fn random_hotspots(r: &mut ChaCha8Rng, n: usize, d: NaiveDate) -> Vec<Hotspot> {
    let blobs: Vec<(f64, f64)> = (0..r.gen_range(1..=5))
        .map(|_| (r.gen_range(37.0..37.6), r.gen_range(-122.4..-121.6)))
        .collect();
    (0..n)
        .map(|_| {
            let (lat, lon) = if r.gen_bool(0.8) {
                let (la, lo) = blobs[r.gen_range(0..blobs.len())];
                (la + r.gen_range(-0.03..0.03), lo + r.gen_range(-0.03..0.03))
            } else {
                (r.gen_range(37.0..37.6), r.gen_range(-122.4..-121.6))
            };
            let frp = (r.gen_range(0.0..60.0f64) * 100.0).round() / 100.0;
            hotspot(lat, lon, frp, d)
        })
        .collect()
}

// ---------------------------------------------------------------- DBSCAN oracle

/// Quadratic DBSCAN: neighbors by pairwise distance, cores grown by seed
/// expansion, each border point attached to its nearest core.
pub fn naive_dbscan(points: &[GeoPoint], eps_m: f64, min_pts: usize) -> (BTreeSet<BTreeSet<usize>>, BTreeSet<usize>) {
    let n = points.len();
    let dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| haversine_m(points[i], points[j])).collect()).collect();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| dist[i][j] <= eps_m).collect()).collect();
    let core: Vec<bool> = nbrs.iter().map(|v| v.len() >= min_pts).collect();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if !core[i] || label[i] != usize::MAX {
            continue;
        }
        let mut seeds = vec![i];
        label[i] = next;
        while let Some(p) = seeds.pop() {
            for &q in &nbrs[p] {
                if core[q] && label[q] == usize::MAX {
                    label[q] = next;
                    seeds.push(q);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let mut best: Option<usize> = None;
        for &q in &nbrs[i] {
            if core[q] && best.map_or(true, |b| dist[i][q] < dist[i][b]) {
                best = Some(q);
            }
        }
        if let Some(b) = best {
            label[i] = label[b];
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut noise = BTreeSet::new();
    for (i, l) in label.into_iter().enumerate() {
        if l == usize::MAX {
            noise.insert(i);
        } else {
            groups.entry(l).or_default().insert(i);
        }
    }
    (groups.into_values().collect(), noise)
}

pub fn partition_sets(p: &Partition) -> (BTreeSet<BTreeSet<usize>>, BTreeSet<usize>) {
    (
        p.clusters.iter().map(|c| c.iter().copied().collect()).collect(),
        p.noise.iter().copied().collect(),
    )
}

// ---------------------------------------------------------------- rasters and polygons

/// Star-shaped (hence simple) polygon around `c` with radii in degrees.
pub fn star_polygon(r: &mut ChaCha8Rng, c: GeoPoint, r_min: f64, r_max: f64) -> Polygon {
    let n = r.gen_range(3..12);
    let mut angles: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    loop {
        let verts: Vec<GeoPoint> = angles
            .iter()
            .map(|a| {
                let rad = r.gen_range(r_min..r_max);
                GeoPoint { lat: c.lat + rad * a.sin(), lon: c.lon + rad * a.cos() }
            })
            .collect();
        if let Ok(p) = Polygon::new(verts) {
            return p;
        }
        angles = (0..4).map(|k| k as f64 * std::f64::consts::FRAC_PI_2 + 0.3).collect();
    }
}

pub fn rect(lat0: f64, lon0: f64, lat1: f64, lon1: f64) -> Polygon {
    Polygon::new(vec![
        GeoPoint { lat: lat0, lon: lon0 },
        GeoPoint { lat: lat0, lon: lon1 },
        GeoPoint { lat: lat1, lon: lon1 },
        GeoPoint { lat: lat1, lon: lon0 },
    ])
    .unwrap()
}

pub const CLASSES: [f64; 10] = [11.0, 21.0, 23.0, 41.0, 42.0, 52.0, 71.0, 82.0, 90.0, 95.0];

/// Land-cover grid; some cells nodata.
pub fn random_class_raster(r: &mut ChaCha8Rng, rows: usize, cols: usize, classes: &[f64]) -> RasterGrid {
    let values = (0..rows * cols)
        .map(|_| if r.gen_bool(0.05) { NODATA } else { *classes.choose(r).unwrap() })
        .collect();
    RasterGrid::new(-122.2, 37.1, 0.005, rows, cols, values, NODATA).unwrap()
}

/// Integer-valued counts so sums are exact in any order.
pub fn random_count_raster(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> RasterGrid {
    let values = (0..rows * cols)
        .map(|_| if r.gen_bool(0.05) { NODATA } else { r.gen_range(0..500) as f64 })
        .collect();
    RasterGrid::new(-122.2, 37.1, 0.005, rows, cols, values, NODATA).unwrap()
}

pub fn raster_center(g: &RasterGrid) -> GeoPoint {
    GeoPoint {
        lat: g.yll + g.n_rows as f64 * g.cell_size_deg / 2.0,
        lon: g.xll + g.n_cols as f64 * g.cell_size_deg / 2.0,
    }
}

/// Every cell of the grid, tested one by one.
pub fn brute_cells(g: &RasterGrid, poly: &Polygon) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for row in 0..g.n_rows {
        for col in 0..g.n_cols {
            let v = g.values[row * g.n_cols + col];
            if v != g.nodata && poly.contains(g.cell_center(row, col)) {
                out.push((row, col, v));
            }
        }
    }
    out
}

/// Patch count by depth-first flood fill over 4-neighbors.
pub fn flood_fill_patches(cells: &HashMap<(usize, usize), i64>) -> usize {
    let mut visited: HashSet<(usize, usize)> = HashSet::new();
    let mut patches = 0;
    for (&start, &class) in cells {
        if !visited.insert(start) {
            continue;
        }
        patches += 1;
        let mut stack = vec![start];
        while let Some((r, c)) = stack.pop() {
            let cand = [
                r.checked_sub(1).map(|r| (r, c)),
                Some((r + 1, c)),
                c.checked_sub(1).map(|c| (r, c)),
                Some((r, c + 1)),
            ];
            for q in cand.into_iter().flatten() {
                if cells.get(&q) == Some(&class) && visited.insert(q) {
                    stack.push(q);
                }
            }
        }
    }
    patches
}

// ---------------------------------------------------------------- analogs

pub fn random_vector(r: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector {
        values: (0..N_FEATURES).map(|_| r.gen_range(-3.0..3.0)).collect(),
        flags: (0..DIM - N_FEATURES).map(|_| r.gen_bool(0.2)).collect(),
    }
}

pub fn random_weights(r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| if r.gen_bool(0.1) { 0.0 } else { r.gen_range(0.1..2.0) }).collect()
}

/// Corpus with unique (fire, date) pairs.
pub fn random_corpus(r: &mut ChaCha8Rng, n_days: usize) -> Vec<CorpusEntry> {
    let n_fires = r.gen_range(1..=40usize);
    let mut per_fire = vec![0i64; n_fires];
    (0..n_days)
        .map(|_| {
            let f = r.gen_range(0..n_fires);
            let d = date(2015, 6, 1) + chrono::Duration::days(per_fire[f] + f as i64 % 30);
            per_fire[f] += 1;
            CorpusEntry {
                fire_id: format!("F{f:02}"),
                date: d,
                vector: random_vector(r),
                personnel: r.gen_range(10.0..3000.0),
                daily_cost_musd: r.gen_range(0.01..8.0),
            }
        })
        .collect()
}

pub fn plain_cosine(a: &FeatureVector, b: &FeatureVector, w: &[f64]) -> f64 {
    let a = a.components();
    let b = b.components();
    let dot: f64 = (0..a.len()).map(|i| w[i] * a[i] * b[i]).sum();
    let na: f64 = (0..a.len()).map(|i| w[i] * a[i] * a[i]).sum::<f64>().sqrt();
    let nb: f64 = (0..a.len()).map(|i| w[i] * b[i] * b[i]).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// Score everything, sort, walk down keeping the first day seen per fire.
pub fn brute_retrieve(q: &FeatureVector, corpus: &[CorpusEntry], k: usize, w: &[f64]) -> Vec<(String, NaiveDate, f64)> {
    let mut all: Vec<(f64, &CorpusEntry)> = corpus.iter().map(|e| (plain_cosine(q, &e.vector, w), e)).collect();
    all.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.date.cmp(&b.1.date))
            .then_with(|| a.1.fire_id.cmp(&b.1.fire_id))
    });
    let mut out: Vec<(String, NaiveDate, f64)> = Vec::new();
    for (s, e) in all {
        if out.len() == k {
            break;
        }
        if out.iter().all(|(f, _, _)| *f != e.fire_id) {
            out.push((e.fire_id.clone(), e.date, s));
        }
    }
    out
}

// ---------------------------------------------------------------- validator corpus

pub fn random_analogs(r: &mut ChaCha8Rng) -> Vec<AnalogRecord> {
    (0..r.gen_range(1..=5))
        .map(|i| AnalogRecord {
            fire_id: format!("A{i}"),
            date: date(2019, 8, 1),
            similarity: r.gen_range(-1.0..1.0),
            personnel: r.gen_range(50.0..2000.0),
            daily_cost_musd: r.gen_range(0.1..5.0),
        })
        .collect()
}

/// A recommendation strictly inside `b`.
pub fn conformant(r: &mut ChaCha8Rng, b: &Bounds) -> Recommendation {
    let (plo, phi) = b.personnel.unwrap_or((0.0, 5000.0));
    let (clo, chi) = b.cost_musd.unwrap_or((0.0, 10.0));
    let level = |r: &mut ChaCha8Rng| *Level::ALL.choose(r).unwrap();
    let words = ["Analog days agree.", "Spread slowed overnight.", "Wind is rising; \"quoted\" text.", "Ünïcode ok."];
    let w = |r: &mut ChaCha8Rng| words.choose(r).unwrap().to_string();
    Recommendation {
        personnel: r.gen_range(plo.ceil()..=phi.floor()) as u64,
        daily_budget_usd: r.gen_range((clo * 1e6).ceil() + 1.0..=(chi * 1e6).floor() - 1.0) as u64,
        confidence: r.gen_range(1..=5),
        indicators: Indicators {
            spread_containment_difficulty: level(r),
            resource_access_deployment: level(r),
            weather_escalation_risk: level(r),
            terrain_operational_complexity: level(r),
            population_exposure_density: level(r),
            fire_station_coverage: level(r),
        },
        rationales: Rationales {
            situation_comparison: w(r),
            personnel_reasoning: w(r),
            budget_reasoning: w(r),
            overall_reasoning: w(r),
        },
    }
}

fn edit(doc: &Value, f: impl FnOnce(&mut Value)) -> String {
    let mut d = doc.clone();
    f(&mut d);
    d.to_string()
}

fn at<'a>(v: &'a mut Value, path: &[&str]) -> &'a mut Value {
    path.iter().fold(v, |v, k| &mut v[*k])
}

fn remove(v: &mut Value, path: &[&str]) {
    let (last, parent) = path.split_last().unwrap();
    at(v, parent).as_object_mut().unwrap().remove(*last);
}

/// Documents that break exactly one rule, each with the category it must
/// be rejected under.
pub fn mutants(rec: &Recommendation, b: &Bounds) -> Vec<(String, FailureCategory)> {
    use FailureCategory::*;
    let doc = rec.to_wire();
    let text = doc.to_string();
    let mut out = vec![
        (text[..text.len() / 2].to_string(), NotJson),
        (format!("[{text}]"), NotJson),
        (format!("Sure! Here is the estimate: {text}"), NotJson),
        ("\"just a string\"".to_string(), NotJson),
        (text.replacen(':', "=", 1), NotJson),
    ];
    let pers = ["resource_requirements", "daily_personnel"];
    let budget = ["resource_requirements", "daily_budget"];
    for k in ["analysis_reasoning", "resource_requirements", "confidence", "intermediate_indicators"] {
        out.push((edit(&doc, |d| remove(d, &[k])), SchemaViolation));
    }
    for k in gal::agent::validate::REASONING_KEYS {
        out.push((edit(&doc, |d| remove(d, &["analysis_reasoning", k])), SchemaViolation));
        out.push((edit(&doc, |d| d["analysis_reasoning"][k] = Value::from(42)), SchemaViolation));
    }
    for k in gal::agent::validate::INDICATOR_KEYS {
        out.push((edit(&doc, |d| d["intermediate_indicators"][k] = Value::from("extreme")), SchemaViolation));
    }
    out.push((edit(&doc, |d| remove(d, &["intermediate_indicators", "fire_station_coverage"])), SchemaViolation));
    out.push((edit(&doc, |d| d["notes"] = Value::from("extra")), SchemaViolation));
    out.push((edit(&doc, |d| d["confidence"]["why"] = Value::from("extra")), SchemaViolation));
    out.push((edit(&doc, |d| remove(d, &["confidence", "score"])), SchemaViolation));
    out.push((edit(&doc, |d| d["confidence"]["score"] = Value::from("3")), SchemaViolation));
    out.push((edit(&doc, |d| d["confidence"]["score"] = Value::from(3.5)), SchemaViolation));
    out.push((edit(&doc, |d| remove(d, &["resource_requirements", "daily_budget"])), SchemaViolation));
    out.push((edit(&doc, |d| remove(d, &["resource_requirements", "daily_personnel", "unit"])), SchemaViolation));
    out.push((edit(&doc, |d| at(d, &pers)["value"] = Value::from(rec.personnel.to_string())), SchemaViolation));
    out.push((edit(&doc, |d| at(d, &pers)["value"] = Value::from(rec.personnel as f64 + 0.5)), SchemaViolation));
    out.push((edit(&doc, |d| at(d, &budget)["value"] = Value::Null), SchemaViolation));
    out.push((edit(&doc, |d| d["intermediate_indicators"] = Value::from("high")), SchemaViolation));
    for unit in ["persons", "People", "crew", ""] {
        out.push((edit(&doc, |d| at(d, &pers)["unit"] = Value::from(unit)), UnitViolation));
    }
    for unit in ["usd", "dollars", "$", "MUSD"] {
        out.push((edit(&doc, |d| at(d, &budget)["unit"] = Value::from(unit)), UnitViolation));
    }
    out.push((edit(&doc, |d| at(d, &budget)["unit"] = Value::from(1)), UnitViolation));
    out.push((edit(&doc, |d| at(d, &pers)["value"] = Value::from(-1)), RangeViolation));
    out.push((edit(&doc, |d| at(d, &budget)["value"] = Value::from(-5)), RangeViolation));
    out.push((edit(&doc, |d| at(d, &pers)["value"] = Value::from(u64::MAX)), RangeViolation));
    out.push((edit(&doc, |d| d["confidence"]["score"] = Value::from(0)), RangeViolation));
    out.push((edit(&doc, |d| d["confidence"]["score"] = Value::from(6)), RangeViolation));
    if let Some((lo, hi)) = b.personnel {
        out.push((edit(&doc, |d| at(d, &pers)["value"] = Value::from(hi.floor() as i64 + 1)), RangeViolation));
        if lo >= 1.0 {
            out.push((edit(&doc, |d| at(d, &pers)["value"] = Value::from(lo.ceil() as i64 - 1)), RangeViolation));
        }
    }
    if let Some((lo, hi)) = b.cost_musd {
        out.push((edit(&doc, |d| at(d, &budget)["value"] = Value::from((hi * 1e6).floor() as i64 + 1)), RangeViolation));
        out.push((edit(&doc, |d| at(d, &budget)["value"] = Value::from((lo * 1e6).ceil() as i64 - 1)), RangeViolation));
    }
    out
}
