//! Seeded generator for a small, self-consistent dataset: four fires of ten
//! days each (two for the corpus, two held out), stations, counties, land
//! cover, population, daily weather grids and ground truth.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::{Error, Result};
use crate::geometry::{destination, GeoPoint, Polygon};
use crate::ingest::{stations_to_geojson, write_ground_truth, write_hotspots, FireStation, GroundTruthDay, Hotspot, RasterGrid};
use crate::spatial::{counties_to_geojson, CountyFeature};

pub const DEFAULT_SEED: u64 = 20_200_816;
pub const DAYS_PER_FIRE: i64 = 10;

const LAT0: f64 = 37.0;
const LON0: f64 = -122.4;
const LAT1: f64 = 37.6;
const LON1: f64 = -121.6;
const NLCD_CELL: f64 = 0.005;
const WEATHER_CELL: f64 = 0.04;
const NLCD_CODES: [f64; 12] = [11.0, 21.0, 22.0, 23.0, 31.0, 41.0, 42.0, 43.0, 52.0, 71.0, 81.0, 82.0];

pub struct SynthFire {
    pub id: &'static str,
    pub train: bool,
    pub start: NaiveDate,
    pub center: (f64, f64),
    /// Peak hotspot count.
    pub peak: f64,
    /// Day index with no detections, if any.
    pub quiet_day: Option<i64>,
}

pub fn fires() -> Vec<SynthFire> {
    let d = |m, day| NaiveDate::from_ymd_opt(2020, m, day).unwrap();
    vec![
        SynthFire { id: "SYN-NORTH", train: true, start: d(8, 16), center: (37.45, -122.15), peak: 90.0, quiet_day: None },
        SynthFire { id: "SYN-RIDGE", train: true, start: d(9, 1), center: (37.15, -121.85), peak: 40.0, quiet_day: Some(8) },
        SynthFire { id: "SYN-COAST", train: false, start: d(8, 16), center: (37.2, -122.25), peak: 70.0, quiet_day: None },
        SynthFire { id: "SYN-VALLEY", train: false, start: d(9, 5), center: (37.4, -121.8), peak: 55.0, quiet_day: Some(7) },
    ]
}

fn round(x: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (x * f).round() / f
}

fn grid_dims(cell: f64) -> (usize, usize) {
    (((LAT1 - LAT0) / cell).round() as usize, ((LON1 - LON0) / cell).round() as usize)
}

fn nlcd_grid(rng: &mut ChaCha8Rng) -> Result<RasterGrid> {
    let (rows, cols) = grid_dims(NLCD_CELL);
    let seeds: Vec<(f64, f64, f64)> = (0..60)
        .map(|_| {
            (
                rng.gen_range(LAT0..LAT1),
                rng.gen_range(LON0..LON1),
                NLCD_CODES[rng.gen_range(0..NLCD_CODES.len())],
            )
        })
        .collect();
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let lat = LAT1 - (r as f64 + 0.5) * NLCD_CELL;
        for c in 0..cols {
            let lon = LON0 + (c as f64 + 0.5) * NLCD_CELL;
            let nearest = seeds
                .iter()
                .min_by(|a, b| {
                    let da = (a.0 - lat).powi(2) + (a.1 - lon).powi(2);
                    let db = (b.0 - lat).powi(2) + (b.1 - lon).powi(2);
                    da.total_cmp(&db)
                })
                .unwrap();
            values.push(nearest.2);
        }
    }
    RasterGrid::new(LON0, LAT0, NLCD_CELL, rows, cols, values, -9999.0)
}

fn population_grid(rng: &mut ChaCha8Rng) -> Result<RasterGrid> {
    let (rows, cols) = grid_dims(NLCD_CELL);
    let dist: LogNormal<f64> = LogNormal::new(2.5, 1.2).expect("valid lognormal");
    let values = (0..rows * cols).map(|_| round(dist.sample(rng).min(5000.0), 1)).collect();
    RasterGrid::new(LON0, LAT0, NLCD_CELL, rows, cols, values, -9999.0)
}

fn counties() -> Result<Vec<CountyFeature>> {
    let mid_lat = 37.3;
    let mid_lon = -122.0;
    let boxes = [
        ("06081", "San Mateo", (mid_lat, LAT1), (LON0, mid_lon), 760_000),
        ("06085", "Santa Clara", (mid_lat, LAT1), (mid_lon, LON1), 1_930_000),
        ("06087", "Santa Cruz", (LAT0, mid_lat), (LON0, mid_lon), 270_000),
        ("06069", "San Benito", (LAT0, mid_lat), (mid_lon, LON1), 62_000),
    ];
    boxes
        .iter()
        .map(|(id, name, (s, n), (w, e), pop)| {
            let p = |lat, lon| GeoPoint { lat, lon };
            Ok(CountyFeature {
                county_id: id.to_string(),
                name: name.to_string(),
                boundary: Polygon::new(vec![p(*s, *w), p(*s, *e), p(*n, *e), p(*n, *w)])?,
                population: *pop,
            })
        })
        .collect()
}

fn stations(rng: &mut ChaCha8Rng) -> Vec<FireStation> {
    (1..=30)
        .map(|i| FireStation {
            id: format!("ST{i:02}"),
            lat: round(rng.gen_range(LAT0 + 0.02..LAT1 - 0.02), 5),
            lon: round(rng.gen_range(LON0 + 0.02..LON1 - 0.02), 5),
            name: format!("Station {i}"),
        })
        .collect()
}

/// Smooth daily weather field with one gradient and a little noise.
fn weather_grid(rng: &mut ChaCha8Rng, base: f64, amp: f64, noise: f64, lo: f64, hi: f64) -> Result<RasterGrid> {
    let (rows, cols) = grid_dims(WEATHER_CELL);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let n = Normal::new(0.0, noise).expect("valid normal");
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let t = (r as f64 / rows as f64 + c as f64 / cols as f64) * PI + phase;
            values.push(round((base + amp * t.sin() + n.sample(rng)).clamp(lo, hi), 2));
        }
    }
    RasterGrid::new(LON0, LAT0, WEATHER_CELL, rows, cols, values, -9999.0)
}

/// Activity profile: rises, peaks around day 3-4, then decays.
fn activity(day: i64, peak: f64) -> f64 {
    let t = day as f64;
    peak * (t + 1.0) / 4.0 * (-(t - 3.0) / 4.0).exp()
}

fn fire_day_hotspots(rng: &mut ChaCha8Rng, f: &SynthFire, day: i64) -> Vec<Hotspot> {
    if f.quiet_day == Some(day) {
        return Vec::new();
    }
    let date = f.start + Duration::days(day);
    let n = activity(day, f.peak).round().max(3.0) as usize;
    let n_clusters = 1 + (n / 25).min(3);
    let frp = LogNormal::new(1.8, 0.8).expect("valid lognormal");
    let spread = Normal::new(0.0, 500.0).expect("valid normal");
    let center = GeoPoint { lat: f.center.0, lon: f.center.1 };
    // Sub-fire centers drift outward as the event grows.
    let subs: Vec<GeoPoint> = (0..n_clusters)
        .map(|k| {
            let bearing = 2.0 * PI * k as f64 / n_clusters as f64 + 0.3 * day as f64;
            destination(center, bearing, if k == 0 { 300.0 * day as f64 } else { 9000.0 + 400.0 * day as f64 })
        })
        .collect();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let c = subs[i % n_clusters];
        let (dx, dy): (f64, f64) = (spread.sample(rng), spread.sample(rng));
        let p = destination(c, dy.atan2(dx), (dx * dx + dy * dy).sqrt());
        let power = round(frp.sample(rng), 2);
        out.push(hotspot(rng, p, power, date));
    }
    // A couple of isolated detections far from any cluster.
    for _ in 0..2 {
        let p = destination(center, rng.gen_range(0.0..2.0 * PI), rng.gen_range(20_000.0..25_000.0));
        let power = round(frp.sample(rng), 2);
        out.push(hotspot(rng, p, power, date));
    }
    out
}

fn hotspot(rng: &mut ChaCha8Rng, p: GeoPoint, frp: f64, date: NaiveDate) -> Hotspot {
    Hotspot {
        lat: round(p.lat, 5),
        lon: round(p.lon, 5),
        frp,
        brightness: round(rng.gen_range(300.0..367.0), 2),
        acq_date: date,
        acq_time: [9 * 60 + 12, 10 * 60 + 54, 20 * 60 + 36, 21 * 60 + 18][rng.gen_range(0..4)],
        satellite: ["N", "J1"][rng.gen_range(0..2)].to_string(),
    }
}

/// Personnel lag the fire and decay slowly; cost follows personnel.
fn ground_truth(rng: &mut ChaCha8Rng, f: &SynthFire, days: &[Vec<Hotspot>]) -> Vec<GroundTruthDay> {
    let noise = Normal::new(0.0, 0.04).expect("valid normal");
    let mut staff = 0.0f64;
    days.iter()
        .enumerate()
        .map(|(i, hs)| {
            let load = 60.0 + 9.0 * hs.len() as f64 + 0.8 * hs.iter().map(|h| h.frp).sum::<f64>();
            staff = if i == 0 { load } else { 0.6 * staff + 0.4 * load.max(0.7 * staff) };
            let personnel = (staff * (1.0 + noise.sample(rng))).round().max(10.0);
            let cost = round(personnel * 0.0022 * (1.0 + noise.sample(rng)), 4);
            GroundTruthDay {
                fire_id: f.id.to_string(),
                date: f.start + Duration::days(i as i64),
                personnel: personnel as u32,
                daily_cost: cost,
            }
        })
        .collect()
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn ascii(g: &RasterGrid) -> Vec<u8> {
    let mut buf = Vec::new();
    g.write_ascii(&mut buf).expect("writing to memory");
    buf
}

fn config_text(fires: &[SynthFire]) -> String {
    let mut s = String::from(
        "[data]\n\
         hotspots_dir = \"hotspots\"\n\
         stations = \"stations.geojson\"\n\
         counties = \"counties.geojson\"\n\
         nlcd = \"nlcd.asc\"\n\
         population = \"population.asc\"\n\
         weather_dir = \"weather\"\n\
         ground_truth = \"ground_truth.csv\"\n\
         corpus_dir = \"corpus\"\n\n\
         [params]\n\
         eps_m = 3000.0\n\
         min_pts = 3\n\
         top_k_clusters = 5\n\
         analog_k = 5\n\
         delta_threshold = 0.1\n\
         min_slack = 0.25\n\
         max_slack = 4.0\n\
         county_buffer_m = 10000.0\n\
         max_attempts = 3\n\n\
         [client]\n\
         kind = \"mock\"\n",
    );
    for f in fires {
        let end = f.start + Duration::days(DAYS_PER_FIRE - 1);
        s.push_str(&format!(
            "\n[[fires]]\nid = \"{}\"\nrole = \"{}\"\nstart = \"{}\"\nend = \"{end}\"\n",
            f.id,
            if f.train { "train" } else { "eval" },
            f.start
        ));
    }
    s
}

/// Write the full dataset under `dir`. Same seed, same bytes.
pub fn generate(dir: &Path, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fires = fires();
    write_file(&dir.join("nlcd.asc"), ascii(&nlcd_grid(&mut rng)?))?;
    write_file(&dir.join("population.asc"), ascii(&population_grid(&mut rng)?))?;
    let st = stations(&mut rng);
    write_file(&dir.join("stations.geojson"), serde_json::to_string_pretty(&stations_to_geojson(&st))? + "\n")?;
    let cs = counties()?;
    write_file(&dir.join("counties.geojson"), serde_json::to_string_pretty(&counties_to_geojson(&cs))? + "\n")?;

    let mut dates: Vec<NaiveDate> = fires
        .iter()
        .flat_map(|f| (0..DAYS_PER_FIRE).map(move |d| f.start + Duration::days(d)))
        .collect();
    dates.sort();
    dates.dedup();
    for (i, date) in dates.iter().enumerate() {
        let wdir = dir.join("weather").join(date.to_string());
        let heat = 4.0 * ((i as f64) / 3.0).sin();
        write_file(&wdir.join("bi.asc"), ascii(&weather_grid(&mut rng, 45.0 + 3.0 * heat, 10.0, 2.0, 0.0, 200.0)?))?;
        write_file(&wdir.join("tmax.asc"), ascii(&weather_grid(&mut rng, 303.0 + heat, 4.0, 0.5, 280.0, 330.0)?))?;
        write_file(&wdir.join("tmin.asc"), ascii(&weather_grid(&mut rng, 288.0 + heat, 3.0, 0.5, 270.0, 305.0)?))?;
        write_file(&wdir.join("wind.asc"), ascii(&weather_grid(&mut rng, 4.0, 2.0, 0.5, 0.0, 25.0)?))?;
        // Every fifth day lacks fuel moisture, exercising the NA path.
        if i % 5 != 4 {
            write_file(&wdir.join("fm1.asc"), ascii(&weather_grid(&mut rng, 7.0 - 0.5 * heat, 2.0, 0.4, 1.0, 40.0)?))?;
        }
    }

    let mut truth: BTreeMap<String, Vec<GroundTruthDay>> = BTreeMap::new();
    for f in &fires {
        let days: Vec<Vec<Hotspot>> = (0..DAYS_PER_FIRE).map(|d| fire_day_hotspots(&mut rng, f, d)).collect();
        let all: Vec<Hotspot> = days.iter().flatten().cloned().collect();
        let mut buf = Vec::new();
        write_hotspots(&mut buf, &all)?;
        write_file(&dir.join("hotspots").join(format!("{}.csv", f.id)), buf)?;
        truth.insert(f.id.to_string(), ground_truth(&mut rng, f, &days));
    }
    let mut buf = Vec::new();
    write_ground_truth(&mut buf, &truth)?;
    write_file(&dir.join("ground_truth.csv"), buf)?;
    write_file(&dir.join("config.toml"), config_text(&fires))
}
