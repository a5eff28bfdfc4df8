//! Feature consolidation: cluster-level features, the event-day snapshot and
//! the temporal anchors that let incremental days reason about change.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::footprint::{canonical_sorted, Cluster};
use crate::enrichment::{weighted_mean, ExposureProfile, FusedWeather, StationCoverage, TerrainProfile};
use crate::geometry::GeoPoint;
use crate::units::meters_to_miles;

pub const DEFAULT_DELTA_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeatures {
    pub cluster_id: usize,
    pub point_count: usize,
    /// MW.
    pub sum_frp: f64,
    /// Largest single-detection FRP, MW.
    pub max_frp: f64,
    /// K.
    pub max_brightness: f64,
    pub centroid: GeoPoint,
    pub weather: FusedWeather,
    /// `None` when the footprint covers no land-cover cell.
    pub terrain: Option<TerrainProfile>,
    pub exposure: ExposureProfile,
    pub access: StationCoverage,
    pub area_acres: f64,
    pub perimeter_m: f64,
}

pub fn consolidate_cluster(
    cluster: &Cluster,
    weather: FusedWeather,
    terrain: Option<TerrainProfile>,
    exposure: ExposureProfile,
    access: StationCoverage,
) -> ClusterFeatures {
    let members = canonical_sorted(&cluster.members);
    ClusterFeatures {
        cluster_id: cluster.cluster_id,
        point_count: members.len(),
        sum_frp: members.iter().map(|h| h.frp).sum(),
        max_frp: members.iter().map(|h| h.frp).fold(0.0, f64::max),
        max_brightness: members.iter().map(|h| h.brightness).fold(0.0, f64::max),
        centroid: cluster.centroid,
        weather,
        terrain,
        exposure,
        access,
        area_acres: cluster.area_acres,
        perimeter_m: cluster.perimeter_m(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSnapshot {
    pub date: NaiveDate,
    pub total_points: usize,
    /// MW.
    pub total_frp: f64,
    pub total_area_acres: f64,
    pub total_perimeter_m: f64,
    /// Largest per-cluster FRP, MW.
    pub max_frp: f64,
    /// K.
    pub max_brightness: f64,
    pub median_frp_per_cluster: f64,
    pub p95_frp_per_cluster: f64,
    pub n_clusters: usize,
    pub counties: BTreeSet<String>,
    /// Persons, `None` when no cluster had population data.
    pub total_population: Option<f64>,
    /// Sum over clusters of stations within 10 km.
    pub station_count: usize,
    pub nearest_station_mi: Option<f64>,
    /// FRP-weighted across clusters.
    pub weather: FusedWeather,
    /// FRP-weighted across clusters with terrain coverage.
    pub mean_spread_potential: Option<f64>,
}

/// Median with midpoint averaging for even counts.
pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Nearest-rank percentile: the value at 1-based rank ⌈q·n⌉.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn sorted_by_id(clusters: &[ClusterFeatures]) -> Vec<&ClusterFeatures> {
    let mut v: Vec<&ClusterFeatures> = clusters.iter().collect();
    v.sort_by_key(|c| c.cluster_id);
    v
}

pub fn global_snapshot(date: NaiveDate, clusters: &[ClusterFeatures]) -> GlobalSnapshot {
    let cs = sorted_by_id(clusters);
    let mut frps: Vec<f64> = cs.iter().map(|c| c.sum_frp).collect();
    frps.sort_by(f64::total_cmp);
    let fuse = |field: fn(&FusedWeather) -> Option<f64>| {
        let samples: Vec<(f64, f64)> = cs
            .iter()
            .filter_map(|c| field(&c.weather).map(|v| (c.sum_frp, v)))
            .collect();
        weighted_mean(&samples)
    };
    let spread_samples: Vec<(f64, f64)> = cs
        .iter()
        .filter_map(|c| c.terrain.as_ref().map(|t| (c.sum_frp, t.spread_potential)))
        .collect();
    let any_pop = cs.iter().any(|c| c.exposure.population.is_some());
    GlobalSnapshot {
        date,
        total_points: cs.iter().map(|c| c.point_count).sum(),
        total_frp: cs.iter().map(|c| c.sum_frp).fold(0.0, |a, b| a + b),
        total_area_acres: cs.iter().map(|c| c.area_acres).fold(0.0, |a, b| a + b),
        total_perimeter_m: cs.iter().map(|c| c.perimeter_m).fold(0.0, |a, b| a + b),
        max_frp: frps.last().copied().unwrap_or(0.0),
        max_brightness: cs.iter().map(|c| c.max_brightness).fold(0.0, f64::max),
        median_frp_per_cluster: median(&frps),
        p95_frp_per_cluster: nearest_rank(&frps, 0.95),
        n_clusters: cs.len(),
        counties: cs.iter().flat_map(|c| c.exposure.counties.iter().cloned()).collect(),
        total_population: any_pop
            .then(|| cs.iter().map(|c| c.exposure.population.unwrap_or(0.0)).fold(0.0, |a, b| a + b)),
        station_count: cs.iter().map(|c| c.access.density_10km).sum(),
        nearest_station_mi: cs
            .iter()
            .filter_map(|c| c.access.nearest.first().map(|s| s.distance_m))
            .reduce(f64::min)
            .map(meters_to_miles),
        weather: FusedWeather {
            bi: fuse(|w| w.bi),
            tmax: fuse(|w| w.tmax),
            tmin: fuse(|w| w.tmin),
            wind: fuse(|w| w.wind),
            fm1: fuse(|w| w.fm1),
        },
        mean_spread_potential: weighted_mean(&spread_samples),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    #[serde(rename = "up")]
    Up,
    #[serde(rename = "flat")]
    Flat,
    #[serde(rename = "down")]
    Down,
}

impl Trend {
    pub fn symbol(self) -> &'static str {
        match self {
            Trend::Up => "↑",
            Trend::Flat => "≈",
            Trend::Down => "↓",
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Trend::Up => "increasing",
            Trend::Flat => "stable",
            Trend::Down => "decreasing",
        }
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// ↑ when `cur` exceeds `prev` by more than the relative threshold, ↓ when it
/// falls short by more than it, ≈ otherwise.
pub fn qualitative_delta(prev: f64, cur: f64, rel_threshold: f64) -> Result<Trend> {
    if !(rel_threshold > 0.0) {
        return Err(Error::Precondition(format!("delta threshold must be > 0, got {rel_threshold}")));
    }
    if prev < 0.0 || cur < 0.0 {
        return Err(Error::Precondition(format!(
            "qualitative delta expects non-negative values, got {prev} -> {cur}"
        )));
    }
    Ok(if cur > prev * (1.0 + rel_threshold) {
        Trend::Up
    } else if cur < prev * (1.0 - rel_threshold) {
        Trend::Down
    } else {
        Trend::Flat
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingStats {
    pub avg3: f64,
    pub max3: f64,
    pub avg7: f64,
    pub max7: f64,
}

impl RollingStats {
    /// Trailing 3- and 7-value windows over a chronological series. Shorter
    /// series shrink the windows. `None` for an empty series.
    pub fn of(series: &[f64]) -> Option<Self> {
        if series.is_empty() {
            return None;
        }
        let tail = |w: usize| &series[series.len().saturating_sub(w)..];
        let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(RollingStats {
            avg3: avg(tail(3)),
            max3: max(tail(3)),
            avg7: avg(tail(7)),
            max7: max(tail(7)),
        })
    }
}

/// What earlier days contribute to today's anchors: the observed snapshot
/// plus the resource levels in force that day (previous recommendations at
/// inference time, ground truth in the historical corpus).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub snapshot: GlobalSnapshot,
    pub personnel: Option<f64>,
    /// Million USD.
    pub cost_musd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalAnchors {
    pub points: RollingStats,
    pub frp: RollingStats,
    pub area: RollingStats,
    /// Million USD; prior days only.
    pub cost: Option<RollingStats>,
    /// Prior days only.
    pub personnel: Option<RollingStats>,
    pub global_max_points: f64,
    pub days_since_global_max_points: i64,
    pub global_max_area: f64,
    pub days_since_global_max_area: i64,
    pub pct_of_hist_max_points: f64,
    pub pct_of_hist_max_area: f64,
    pub days_since_start: i64,
    pub trends: BTreeMap<String, Trend>,
    pub yesterday: GlobalSnapshot,
}

fn pct_of(v: f64, max: f64) -> f64 {
    if max > 0.0 {
        (100.0 * v / max).clamp(0.0, 100.0)
    } else {
        0.0
    }
}

/// First (earliest) maximum of a dated series.
fn first_max(series: &[(NaiveDate, f64)]) -> (NaiveDate, f64) {
    let mut best = series[0];
    for &(d, v) in &series[1..] {
        if v > best.1 {
            best = (d, v);
        }
    }
    best
}

/// Rolling windows for fire fields include today; resource windows cover the
/// prior days only, since today's resources are what is being estimated.
pub fn temporal_anchors(
    history: &[DayRecord],
    today: &GlobalSnapshot,
    rel_threshold: f64,
) -> Result<TemporalAnchors> {
    let Some(yesterday) = history.last() else {
        return Err(Error::Precondition(
            "temporal anchors need at least one prior day; use the day-1 path".into(),
        ));
    };
    if let Some(bad) = history.iter().find(|d| d.snapshot.date >= today.date) {
        return Err(Error::Precondition(format!(
            "history day {} is not before {}",
            bad.snapshot.date, today.date
        )));
    }
    let fire = |f: fn(&GlobalSnapshot) -> f64| -> Vec<(NaiveDate, f64)> {
        history
            .iter()
            .map(|d| (d.snapshot.date, f(&d.snapshot)))
            .chain(std::iter::once((today.date, f(today))))
            .collect()
    };
    let values = |s: &[(NaiveDate, f64)]| s.iter().map(|(_, v)| *v).collect::<Vec<_>>();
    let points = fire(|s| s.total_points as f64);
    let frp = fire(|s| s.total_frp);
    let area = fire(|s| s.total_area_acres);
    let cost: Vec<f64> = history.iter().filter_map(|d| d.cost_musd).collect();
    let personnel: Vec<f64> = history.iter().filter_map(|d| d.personnel).collect();

    let (max_points_day, max_points) = first_max(&points);
    let (max_area_day, max_area) = first_max(&area);

    let y = &yesterday.snapshot;
    let mut trends = BTreeMap::new();
    let mut put = |name: &str, prev: Option<f64>, cur: Option<f64>| -> Result<()> {
        if let (Some(p), Some(c)) = (prev, cur) {
            trends.insert(name.to_string(), qualitative_delta(p, c, rel_threshold)?);
        }
        Ok(())
    };
    put("points", Some(y.total_points as f64), Some(today.total_points as f64))?;
    put("clusters", Some(y.n_clusters as f64), Some(today.n_clusters as f64))?;
    put("frp", Some(y.total_frp), Some(today.total_frp))?;
    put("area", Some(y.total_area_acres), Some(today.total_area_acres))?;
    put("bi", y.weather.bi, today.weather.bi)?;
    put("tmax", y.weather.tmax, today.weather.tmax)?;
    put("wind", y.weather.wind, today.weather.wind)?;
    put("fm1", y.weather.fm1, today.weather.fm1)?;
    let last_two = |s: &[f64]| (s.len() >= 2).then(|| (s[s.len() - 2], s[s.len() - 1]));
    if let Some((p, c)) = last_two(&cost) {
        put("cost", Some(p), Some(c))?;
    }
    if let Some((p, c)) = last_two(&personnel) {
        put("personnel", Some(p), Some(c))?;
    }

    Ok(TemporalAnchors {
        points: RollingStats::of(&values(&points)).expect("non-empty"),
        frp: RollingStats::of(&values(&frp)).expect("non-empty"),
        area: RollingStats::of(&values(&area)).expect("non-empty"),
        cost: RollingStats::of(&cost),
        personnel: RollingStats::of(&personnel),
        global_max_points: max_points,
        days_since_global_max_points: (today.date - max_points_day).num_days(),
        global_max_area: max_area,
        days_since_global_max_area: (today.date - max_area_day).num_days(),
        pct_of_hist_max_points: pct_of(today.total_points as f64, max_points),
        pct_of_hist_max_area: pct_of(today.total_area_acres, max_area),
        days_since_start: (today.date - history[0].snapshot.date).num_days(),
        trends,
        yesterday: y.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDayContext {
    pub fire_id: String,
    pub date: NaiveDate,
    pub snapshot: GlobalSnapshot,
    pub clusters: Vec<ClusterFeatures>,
    /// Absent on the first analyzed day.
    pub anchors: Option<TemporalAnchors>,
}

impl EventDayContext {
    pub fn is_quiet(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        crate::canonical::to_canonical_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrichment::StationDistance;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 8, d).unwrap()
    }

    fn features(id: usize, sum_frp: f64) -> ClusterFeatures {
        ClusterFeatures {
            cluster_id: id,
            point_count: 2,
            sum_frp,
            max_frp: sum_frp / 2.0,
            max_brightness: 330.0 + id as f64,
            centroid: GeoPoint { lat: 37.0, lon: -122.0 },
            weather: FusedWeather::default(),
            terrain: None,
            exposure: ExposureProfile {
                population: Some(10.0),
                density: Some(1.0),
                counties: vec![format!("C{}", id % 2)],
                nearby_counties: vec![],
            },
            access: StationCoverage {
                nearest: vec![StationDistance { station_id: "s".into(), distance_m: 1609.344 * (id + 1) as f64 }],
                density_10km: 1,
            },
            area_acres: 100.0,
            perimeter_m: 1000.0,
        }
    }

    #[test]
    fn consolidates_members() {
        use crate::footprint::{normalize_event_day, FootprintParams};
        use crate::ingest::Hotspot;
        let mk = |lat: f64, frp: f64, b: f64| Hotspot {
            lat,
            lon: -122.0,
            frp,
            brightness: b,
            acq_date: day(17),
            acq_time: 0,
            satellite: String::new(),
        };
        let g = normalize_event_day(
            day(17),
            &[mk(37.0, 1.0, 330.0), mk(37.001, 2.0, 340.0), mk(37.002, 3.0, 335.0)],
            FootprintParams::default(),
        )
        .unwrap();
        let cov = StationCoverage { nearest: vec![], density_10km: 0 };
        let exp = ExposureProfile { population: None, density: None, counties: vec![], nearby_counties: vec![] };
        let f = consolidate_cluster(&g.clusters[0], FusedWeather::default(), None, exp.clone(), cov.clone());
        assert_eq!(f.sum_frp, 6.0);
        assert_eq!(f.max_brightness, 340.0);
        assert_eq!(f.point_count, 3);

        let single = normalize_event_day(day(17), &[mk(37.0, 4.5, 333.0)], FootprintParams { eps_m: 3000.0, min_pts: 1 }).unwrap();
        let f = consolidate_cluster(&single.clusters[0], FusedWeather::default(), None, exp, cov);
        assert_eq!((f.sum_frp, f.max_brightness, f.point_count), (4.5, 333.0, 1));
    }

    #[test]
    fn snapshot_statistics() {
        let cs: Vec<_> = [10.0, 40.0, 20.0, 30.0].iter().enumerate().map(|(i, f)| features(i, *f)).collect();
        let s = global_snapshot(day(17), &cs);
        assert_eq!(s.median_frp_per_cluster, 25.0);
        assert_eq!(s.p95_frp_per_cluster, 40.0);
        assert_eq!(s.max_frp, 40.0);
        assert_eq!(s.total_frp, 100.0);
        assert_eq!(s.total_points, 8);
        assert_eq!(s.n_clusters, 4);
        assert_eq!(s.counties.len(), 2);
        assert_eq!(s.total_population, Some(40.0));
        assert!((s.nearest_station_mi.unwrap() - 1.0).abs() < 1e-12);

        let one = global_snapshot(day(17), &[features(0, 7.0)]);
        assert_eq!((one.median_frp_per_cluster, one.p95_frp_per_cluster), (7.0, 7.0));

        let none = global_snapshot(day(17), &[]);
        assert_eq!((none.n_clusters, none.total_points, none.total_frp), (0, 0, 0.0));
        assert_eq!(none.total_population, None);
    }

    #[test]
    fn delta_rules() {
        assert_eq!(qualitative_delta(100.0, 112.0, 0.1).unwrap(), Trend::Up);
        assert_eq!(qualitative_delta(100.0, 95.0, 0.1).unwrap(), Trend::Flat);
        assert_eq!(qualitative_delta(100.0, 85.0, 0.1).unwrap(), Trend::Down);
        assert_eq!(qualitative_delta(0.0, 0.0, 0.1).unwrap(), Trend::Flat);
        assert_eq!(qualitative_delta(0.0, 1.0, 0.1).unwrap(), Trend::Up);
        assert!(qualitative_delta(-1.0, 1.0, 0.1).is_err());
        assert!(qualitative_delta(1.0, 1.0, 0.0).is_err());
    }

    fn record(d: u32, points: usize) -> DayRecord {
        let mut s = global_snapshot(day(d), &[]);
        s.total_points = points;
        DayRecord { snapshot: s, personnel: Some(100.0 * d as f64), cost_musd: Some(0.1 * d as f64) }
    }

    #[test]
    fn anchor_windows() {
        let hist = vec![record(17, 10), record(18, 20)];
        let mut today = global_snapshot(day(19), &[]);
        today.total_points = 30;
        let a = temporal_anchors(&hist, &today, 0.1).unwrap();
        assert_eq!((a.points.avg3, a.points.max3), (20.0, 30.0));
        assert_eq!(a.days_since_start, 2);
        // resource windows exclude today: personnel 1700, 1800
        assert_eq!(a.personnel.unwrap().avg3, 1750.0);
        assert_eq!(a.trends["points"], Trend::Up);

        let short = temporal_anchors(&hist[1..], &today, 0.1).unwrap();
        assert_eq!(short.points.avg3, 25.0);
        assert!(temporal_anchors(&[], &today, 0.1).is_err());
    }

    #[test]
    fn percent_of_historical_max() {
        let hist = vec![record(17, 5), record(18, 50)];
        let mut today = global_snapshot(day(19), &[]);
        today.total_points = 10;
        let a = temporal_anchors(&hist, &today, 0.1).unwrap();
        assert_eq!(a.pct_of_hist_max_points, 20.0);
        assert_eq!(a.global_max_points, 50.0);
        assert_eq!(a.days_since_global_max_points, 1);
    }

    #[test]
    fn context_canonical_round_trip_is_stable() {
        let cs = vec![features(0, 12.345678)];
        let ctx = EventDayContext {
            fire_id: "F".into(),
            date: day(17),
            snapshot: global_snapshot(day(17), &cs),
            clusters: cs,
            anchors: None,
        };
        let a = ctx.to_canonical_json().unwrap();
        let back = EventDayContext::from_json(&a).unwrap();
        assert_eq!(back.to_canonical_json().unwrap(), a);
        assert!(a.contains("\"sum_frp\":12.3457"));
    }
}
