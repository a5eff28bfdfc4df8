//! Per-cluster retrieval: terrain complexity from land cover, FRP-weighted
//! weather, demographic exposure and fire-station access.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::footprint::canonical_sorted;
use crate::geometry::{GeoPoint, Polygon};
use crate::ingest::{Hotspot, RasterGrid, WeatherDayGrids};
use crate::spatial::{covered_cells, zonal_composition, zonal_sum, CountyIndex, StationIndex};

pub const STATION_RADIUS_M: f64 = 10_000.0;
pub const NEAREST_STATIONS: usize = 3;
/// Counties this close to a footprint are listed as nearby.
pub const DEFAULT_COUNTY_BUFFER_M: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskTier {
    High,
    Medium,
    Low,
    Barrier,
}

impl RiskTier {
    pub fn risk_value(self) -> f64 {
        match self {
            RiskTier::High => 1.0,
            RiskTier::Medium => 0.6,
            RiskTier::Low => 0.3,
            RiskTier::Barrier => 0.0,
        }
    }
}

/// Land-cover class code to spread-risk tier. Codes missing from the table
/// are unclassified and contribute nothing to the spread score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlcdTable {
    pub high: Vec<i64>,
    pub medium: Vec<i64>,
    pub low: Vec<i64>,
    pub barrier: Vec<i64>,
}

impl Default for NlcdTable {
    fn default() -> Self {
        NlcdTable {
            // forest and shrub
            high: vec![41, 42, 43, 52],
            // grassland, pasture, crops
            medium: vec![71, 81, 82],
            // open space and low-intensity developed
            low: vec![21, 22],
            // water, ice, high-intensity developed, barren
            barrier: vec![11, 12, 23, 24, 31],
        }
    }
}

impl NlcdTable {
    pub fn tier(&self, code: i64) -> Option<RiskTier> {
        if self.high.contains(&code) {
            Some(RiskTier::High)
        } else if self.medium.contains(&code) {
            Some(RiskTier::Medium)
        } else if self.low.contains(&code) {
            Some(RiskTier::Low)
        } else if self.barrier.contains(&code) {
            Some(RiskTier::Barrier)
        } else {
            None
        }
    }

    /// Load a table from TOML with `high`, `medium`, `low`, `barrier` arrays.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let t: NlcdTable = toml::from_str(s).map_err(|e| Error::Config(format!("nlcd table: {e}")))?;
        let mut seen = HashMap::new();
        for (tier, codes) in [("high", &t.high), ("medium", &t.medium), ("low", &t.low), ("barrier", &t.barrier)] {
            for c in codes {
                if let Some(prev) = seen.insert(*c, tier) {
                    return Err(Error::Config(format!("nlcd class {c} listed under both {prev} and {tier}")));
                }
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskFractions {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainProfile {
    pub composition: BTreeMap<i64, f64>,
    /// Nats.
    pub shannon_diversity: f64,
    /// 4-connected same-class patches per covered cell.
    pub fragmentation: f64,
    pub risk_fractions: RiskFractions,
    pub continuous_fuels: f64,
    pub barriers: f64,
    pub spread_potential: f64,
    pub covered_cells: usize,
}

/// H = -Σ p ln p over positive shares.
pub fn shannon_diversity(composition: &BTreeMap<i64, f64>) -> f64 {
    let h: f64 = composition
        .values()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// Number of 4-connected groups of equal-class cells.
pub fn count_patches(cells: &HashMap<(usize, usize), i64>) -> usize {
    let mut seen: HashMap<(usize, usize), bool> = HashMap::with_capacity(cells.len());
    let mut keys: Vec<&(usize, usize)> = cells.keys().collect();
    keys.sort();
    let mut patches = 0;
    for &start in keys {
        if seen.contains_key(&start) {
            continue;
        }
        patches += 1;
        let class = cells[&start];
        seen.insert(start, true);
        let mut queue = VecDeque::from([start]);
        while let Some((r, c)) = queue.pop_front() {
            let mut nbrs = vec![(r + 1, c), (r, c + 1)];
            if r > 0 {
                nbrs.push((r - 1, c));
            }
            if c > 0 {
                nbrs.push((r, c - 1));
            }
            for n in nbrs {
                if !seen.contains_key(&n) && cells.get(&n) == Some(&class) {
                    seen.insert(n, true);
                    queue.push_back(n);
                }
            }
        }
    }
    patches
}

/// Land-cover profile of the footprint, or `None` when no valid cell center
/// falls inside it.
pub fn terrain_profile(r: &RasterGrid, poly: &Polygon, table: &NlcdTable) -> Option<TerrainProfile> {
    let comp = zonal_composition(r, poly);
    if comp.cells == 0 {
        return None;
    }
    let cells: HashMap<(usize, usize), i64> = covered_cells(r, poly)
        .into_iter()
        .filter_map(|(row, col)| r.get(row, col).map(|v| ((row, col), v.round() as i64)))
        .collect();
    let mut fr = RiskFractions {
        high: 0.0,
        medium: 0.0,
        low: 0.0,
    };
    let mut barriers = 0.0;
    let mut spread = 0.0;
    for (&code, &p) in &comp.proportions {
        match table.tier(code) {
            Some(RiskTier::High) => fr.high += p,
            Some(RiskTier::Medium) => fr.medium += p,
            Some(RiskTier::Low) => fr.low += p,
            Some(RiskTier::Barrier) => barriers += p,
            None => {}
        }
        if let Some(t) = table.tier(code) {
            spread += p * t.risk_value();
        }
    }
    Some(TerrainProfile {
        shannon_diversity: shannon_diversity(&comp.proportions),
        fragmentation: count_patches(&cells) as f64 / comp.cells as f64,
        continuous_fuels: fr.high + fr.medium,
        risk_fractions: fr,
        barriers,
        spread_potential: spread.clamp(0.0, 1.0),
        covered_cells: comp.cells,
        composition: comp.proportions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FusedWeather {
    pub bi: Option<f64>,
    /// K.
    pub tmax: Option<f64>,
    /// K.
    pub tmin: Option<f64>,
    /// m/s.
    pub wind: Option<f64>,
    /// Percent.
    pub fm1: Option<f64>,
}

/// FRP-weighted mean of `samples`, uniform when the weights sum to zero.
/// Empty input gives `None`.
pub(crate) fn weighted_mean(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let wsum: f64 = samples.iter().map(|(w, _)| w).sum();
    if wsum > 0.0 {
        Some(samples.iter().map(|(w, v)| w * v).sum::<f64>() / wsum)
    } else {
        Some(samples.iter().map(|(_, v)| v).sum::<f64>() / samples.len() as f64)
    }
}

/// Sample each layer at every member's cell and take the FRP-weighted mean,
/// skipping members that fall on nodata (or off the grid) for that layer.
pub fn weather_fusion(members: &[Hotspot], w: &WeatherDayGrids) -> FusedWeather {
    let sorted = canonical_sorted(members);
    let fuse = |grid: Option<&RasterGrid>| -> Option<f64> {
        let g = grid?;
        let samples: Vec<(f64, f64)> = sorted
            .iter()
            .filter_map(|h| g.sample(h.position()).map(|v| (h.frp, v)))
            .collect();
        weighted_mean(&samples)
    };
    FusedWeather {
        bi: fuse(w.bi.as_ref()),
        tmax: fuse(w.tmax.as_ref()),
        tmin: fuse(w.tmin.as_ref()),
        wind: fuse(w.wind.as_ref()),
        fm1: fuse(w.fm1.as_ref()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    /// Persons; `None` when no population layer is loaded.
    pub population: Option<f64>,
    /// Persons per km².
    pub density: Option<f64>,
    pub counties: Vec<String>,
    /// Counties within the configured buffer of the footprint.
    pub nearby_counties: Vec<String>,
}

pub fn exposure(
    poly: &Polygon,
    pop: Option<&RasterGrid>,
    counties: &CountyIndex,
    county_buffer_m: f64,
) -> ExposureProfile {
    let population = pop.map(|g| zonal_sum(g, poly).sum);
    let area_km2 = poly.geodesic_area_m2() / 1e6;
    ExposureProfile {
        population,
        density: population.map(|p| p / area_km2),
        counties: counties
            .intersecting(poly)
            .iter()
            .map(|c| c.county_id.clone())
            .collect(),
        nearby_counties: counties
            .near(poly, county_buffer_m)
            .iter()
            .map(|c| c.county_id.clone())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDistance {
    pub station_id: String,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationCoverage {
    /// Up to three nearest stations, ascending by distance.
    pub nearest: Vec<StationDistance>,
    /// Stations within 10 km of the centroid, inclusive.
    pub density_10km: usize,
}

pub fn station_coverage(centroid: GeoPoint, stations: &StationIndex) -> StationCoverage {
    StationCoverage {
        nearest: stations
            .nearest(centroid, NEAREST_STATIONS)
            .into_iter()
            .map(|(s, d)| StationDistance {
                station_id: s.id.clone(),
                distance_m: d,
            })
            .collect(),
        density_10km: stations.within(centroid, STATION_RADIUS_M).len(),
    }
}
