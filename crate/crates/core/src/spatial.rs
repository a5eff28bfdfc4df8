//! In-process spatial query engine: geodesic nearest-k over stations, radius
//! counts, county joins and zonal raster statistics.
//!
//! The R-trees only prune candidates. Every answer is defined by, and tested
//! against, the equivalent linear scan.

use std::collections::BTreeMap;
use std::io::Read;

use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{
    chord2_for_distance, haversine_m, polygon_distance_m, polygons_intersect, to_unit_vector,
    GeoPoint, Polygon,
};
use crate::ingest::{property_id, FireStation, RasterGrid};
use crate::units::EARTH_RADIUS_M;

pub use crate::geometry::point_in_polygon;

/// Great-circle distance in meters.
pub fn geodesic_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_m(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyFeature {
    pub county_id: String,
    pub name: String,
    pub boundary: Polygon,
    pub population: u64,
}

type StationEntry = GeomWithData<[f64; 3], usize>;
type CountyEntry = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// Stations indexed by their position on the unit sphere.
#[derive(Debug, Clone)]
pub struct StationIndex {
    stations: Vec<FireStation>,
    tree: RTree<StationEntry>,
}

impl StationIndex {
    pub fn new(stations: Vec<FireStation>) -> Self {
        let entries = stations
            .iter()
            .enumerate()
            .map(|(i, s)| GeomWithData::new(to_unit_vector(s.position()), i))
            .collect();
        StationIndex {
            stations,
            tree: RTree::bulk_load(entries),
        }
    }

    pub fn stations(&self) -> &[FireStation] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// The `k` closest stations by geodesic distance, ascending, ties broken
    /// by station id.
    pub fn nearest(&self, p: GeoPoint, k: usize) -> Vec<(&FireStation, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let q = to_unit_vector(p);
        let mut candidates: Vec<usize> = Vec::new();
        let mut cutoff: Option<f64> = None;
        for (entry, d2) in self.tree.nearest_neighbor_iter_with_distance_2(&q) {
            if let Some(c) = cutoff {
                // keep pulling near-ties so the id tie-break sees all of them
                if d2 > c * (1.0 + 1e-9) + 1e-24 {
                    break;
                }
            }
            candidates.push(entry.data);
            if candidates.len() == k && cutoff.is_none() {
                cutoff = Some(d2);
            }
        }
        let mut out: Vec<(&FireStation, f64)> = candidates
            .into_iter()
            .map(|i| {
                let s = &self.stations[i];
                (s, haversine_m(p, s.position()))
            })
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.id.cmp(&b.0.id)));
        out.truncate(k);
        out
    }

    /// Stations within `radius_m` of `p`, boundary inclusive.
    pub fn within(&self, p: GeoPoint, radius_m: f64) -> Vec<&FireStation> {
        let q = to_unit_vector(p);
        let r2 = chord2_for_distance(radius_m) * (1.0 + 1e-9) + 1e-24;
        let mut hits: Vec<&FireStation> = self
            .tree
            .locate_within_distance(q, r2)
            .map(|e| &self.stations[e.data])
            .filter(|s| haversine_m(p, s.position()) <= radius_m)
            .collect();
        hits.sort_by(|a, b| a.id.cmp(&b.id));
        hits
    }
}

pub fn nearest_stations(p: GeoPoint, index: &StationIndex, k: usize) -> Vec<(FireStation, f64)> {
    index
        .nearest(p, k)
        .into_iter()
        .map(|(s, d)| (s.clone(), d))
        .collect()
}

pub fn stations_within(p: GeoPoint, index: &StationIndex, radius_m: f64) -> usize {
    index.within(p, radius_m).len()
}

/// Counties indexed by bounding box in degrees.
#[derive(Debug, Clone)]
pub struct CountyIndex {
    counties: Vec<CountyFeature>,
    tree: RTree<CountyEntry>,
}

impl CountyIndex {
    pub fn new(counties: Vec<CountyFeature>) -> Self {
        let entries = counties
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let b = c.boundary.bbox();
                GeomWithData::new(
                    Rectangle::from_corners([b.min_lon, b.min_lat], [b.max_lon, b.max_lat]),
                    i,
                )
            })
            .collect();
        CountyIndex {
            counties,
            tree: RTree::bulk_load(entries),
        }
    }

    pub fn counties(&self) -> &[CountyFeature] {
        &self.counties
    }

    fn candidates(&self, env: AABB<[f64; 2]>) -> impl Iterator<Item = &CountyFeature> {
        self.tree
            .locate_in_envelope_intersecting(&env)
            .map(|e| &self.counties[e.data])
    }

    /// Counties whose boundary intersects `poly`, ordered by county id.
    pub fn intersecting(&self, poly: &Polygon) -> Vec<&CountyFeature> {
        let b = poly.bbox();
        let env = AABB::from_corners([b.min_lon, b.min_lat], [b.max_lon, b.max_lat]);
        let mut out: Vec<&CountyFeature> = self
            .candidates(env)
            .filter(|c| polygons_intersect(&c.boundary, poly))
            .collect();
        out.sort_by(|a, b| a.county_id.cmp(&b.county_id));
        out
    }

    /// Counties within `buffer_m` of `poly` (intersecting ones included),
    /// ordered by county id.
    pub fn near(&self, poly: &Polygon, buffer_m: f64) -> Vec<&CountyFeature> {
        let b = poly.bbox();
        let dlat = (buffer_m / EARTH_RADIUS_M).to_degrees();
        let max_abs_lat = b.min_lat.abs().max(b.max_lat.abs()).min(89.0);
        let dlon = dlat / max_abs_lat.to_radians().cos();
        let env = AABB::from_corners(
            [b.min_lon - dlon, b.min_lat - dlat],
            [b.max_lon + dlon, b.max_lat + dlat],
        );
        let mut out: Vec<&CountyFeature> = self
            .candidates(env)
            .filter(|c| polygon_distance_m(&c.boundary, poly) <= buffer_m)
            .collect();
        out.sort_by(|a, b| a.county_id.cmp(&b.county_id));
        out
    }
}

pub fn counties_intersecting(poly: &Polygon, index: &CountyIndex) -> Vec<CountyFeature> {
    index.intersecting(poly).into_iter().cloned().collect()
}

/// Immutable bundle of the vector layers queried per cluster.
#[derive(Debug, Clone)]
pub struct SpatialStore {
    pub stations: StationIndex,
    pub counties: CountyIndex,
}

impl SpatialStore {
    pub fn new(stations: Vec<FireStation>, counties: Vec<CountyFeature>) -> Self {
        SpatialStore {
            stations: StationIndex::new(stations),
            counties: CountyIndex::new(counties),
        }
    }
}

/// Cells whose center lies inside `poly`, in row-major order.
pub fn covered_cells(r: &RasterGrid, poly: &Polygon) -> Vec<(usize, usize)> {
    if r.n_rows == 0 || r.n_cols == 0 {
        return Vec::new();
    }
    let b = poly.bbox();
    let cs = r.cell_size_deg;
    // one cell of slack either side; point_in_polygon has the final say
    let clamp_idx = |x: f64, n: usize| -> usize { x.max(0.0).min((n - 1) as f64) as usize };
    let col_lo = ((b.min_lon - r.xll) / cs - 1.5).floor();
    let col_hi = ((b.max_lon - r.xll) / cs + 0.5).ceil();
    let row_lo = ((r.origin_lat() - b.max_lat) / cs - 1.5).floor();
    let row_hi = ((r.origin_lat() - b.min_lat) / cs + 0.5).ceil();
    if col_hi < 0.0 || row_hi < 0.0 || col_lo > (r.n_cols - 1) as f64 || row_lo > (r.n_rows - 1) as f64 {
        return Vec::new();
    }
    let (c0, c1) = (clamp_idx(col_lo, r.n_cols), clamp_idx(col_hi, r.n_cols));
    let (r0, r1) = (clamp_idx(row_lo, r.n_rows), clamp_idx(row_hi, r.n_rows));
    let mut out = Vec::new();
    for row in r0..=r1 {
        for col in c0..=c1 {
            if point_in_polygon(r.cell_center(row, col), poly) {
                out.push((row, col));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalSum {
    pub sum: f64,
    /// Non-nodata cells contributing to `sum`.
    pub cells: usize,
    /// Set when no valid cell center falls inside the polygon.
    pub coverage_warning: bool,
}

/// Sum of valid cell values whose centers lie inside `poly`.
pub fn zonal_sum(r: &RasterGrid, poly: &Polygon) -> ZonalSum {
    let mut sum = 0.0;
    let mut cells = 0;
    for (row, col) in covered_cells(r, poly) {
        if let Some(v) = r.get(row, col) {
            sum += v;
            cells += 1;
        }
    }
    ZonalSum {
        sum,
        cells,
        coverage_warning: cells == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    /// Class code to share of covered cells.
    pub proportions: BTreeMap<i64, f64>,
    pub cells: usize,
    pub coverage_warning: bool,
}

/// Class shares over the valid cells whose centers lie inside `poly`.
pub fn zonal_composition(r: &RasterGrid, poly: &Polygon) -> Composition {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let mut cells = 0;
    for (row, col) in covered_cells(r, poly) {
        if let Some(v) = r.get(row, col) {
            *counts.entry(v.round() as i64).or_default() += 1;
            cells += 1;
        }
    }
    let proportions = counts
        .into_iter()
        .map(|(k, n)| (k, n as f64 / cells as f64))
        .collect();
    Composition {
        proportions,
        cells,
        coverage_warning: cells == 0,
    }
}

/// Parse counties from a GeoJSON FeatureCollection of Polygon features with
/// `county_id`, `name` and `population` properties. Only the exterior ring is
/// used.
pub fn parse_counties<R: Read>(r: R) -> Result<Vec<CountyFeature>> {
    let doc: Value = serde_json::from_reader(r)
        .map_err(|e| Error::Format(format!("counties: malformed GeoJSON: {e}")))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Format("counties: expected a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("counties: `features` must be an array".into()))?;
    let mut out: Vec<CountyFeature> = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let ferr = |m: &str| Error::Format(format!("county feature {i}: {m}"));
        let geom = f.get("geometry").ok_or_else(|| ferr("missing geometry"))?;
        let gtype = geom.get("type").and_then(Value::as_str).unwrap_or("<none>");
        if gtype != "Polygon" {
            return Err(ferr(&format!("expected Polygon geometry, found {gtype}")));
        }
        let ring = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .and_then(|rings| rings.first())
            .and_then(Value::as_array)
            .ok_or_else(|| ferr("bad coordinates"))?;
        let vertices = ring
            .iter()
            .map(|c| {
                let lon = c.get(0).and_then(Value::as_f64);
                let lat = c.get(1).and_then(Value::as_f64);
                match (lat, lon) {
                    (Some(lat), Some(lon)) => GeoPoint::new(lat, lon),
                    _ => Err(ferr("non-numeric coordinate")),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let boundary = Polygon::new(vertices).map_err(|e| ferr(&e.to_string()))?;
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let county_id = property_id(&props, "county_id").ok_or_else(|| ferr("missing `county_id`"))?;
        if out.iter().any(|c| c.county_id == county_id) {
            return Err(Error::Conflict(format!("duplicate county id `{county_id}`")));
        }
        let population = props
            .get("population")
            .and_then(Value::as_f64)
            .filter(|p| *p >= 0.0)
            .ok_or_else(|| ferr("`population` must be a number >= 0"))?;
        out.push(CountyFeature {
            county_id,
            name: props
                .get("name")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
            boundary,
            population: population.round() as u64,
        });
    }
    Ok(out)
}

pub fn counties_to_geojson(counties: &[CountyFeature]) -> Value {
    let features: Vec<Value> = counties
        .iter()
        .map(|c| {
            let ring: Vec<Value> = c
                .boundary
                .ring()
                .iter()
                .map(|p| serde_json::json!([p.lon, p.lat]))
                .collect();
            serde_json::json!({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"county_id": c.county_id, "name": c.name, "population": c.population},
            })
        })
        .collect();
    serde_json::json!({"type": "FeatureCollection", "features": features})
}
