//! Event detection and normalization: DBSCAN over a day's hotspots, then an
//! FRP-weighted centroid and a polygonal footprint per cluster.

use std::cmp::Ordering;
use std::collections::VecDeque;

use chrono::NaiveDate;
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{
    chord2_for_distance, convex_hull, destination, haversine_m, to_unit_vector, GeoPoint,
    LocalFrame, Polygon,
};
use crate::ingest::Hotspot;
use crate::units::{m2_to_acres, VIIRS_PIXEL_M};

pub const DEFAULT_EPS_M: f64 = 3000.0;
pub const DEFAULT_MIN_PTS: usize = 3;
const CIRCLE_SEGMENTS: usize = 16;
/// Hulls smaller than this are treated as collinear.
const MIN_HULL_AREA_M2: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootprintParams {
    pub eps_m: f64,
    pub min_pts: usize,
}

impl Default for FootprintParams {
    fn default() -> Self {
        FootprintParams {
            eps_m: DEFAULT_EPS_M,
            min_pts: DEFAULT_MIN_PTS,
        }
    }
}

/// DBSCAN result expressed as indices into the input slice.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    /// Member indices per cluster, ascending; clusters ordered by their
    /// lowest member index.
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

/// DBSCAN with geodesic neighborhoods.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps_m`. Clusters are the connected components of core points.
/// A non-core point within `eps_m` of some core joins the cluster of its
/// nearest core (lowest index on exact ties), which makes the partition
/// independent of input order. Everything else is noise.
pub fn dbscan(points: &[GeoPoint], eps_m: f64, min_pts: usize) -> Result<Partition> {
    if !(eps_m > 0.0) {
        return Err(Error::Precondition(format!("eps_m must be > 0, got {eps_m}")));
    }
    if min_pts < 1 {
        return Err(Error::Precondition("min_pts must be >= 1".into()));
    }
    let n = points.len();
    if n == 0 {
        return Ok(Partition::default());
    }
    let tree: RTree<GeomWithData<[f64; 3], usize>> = RTree::bulk_load(
        points
            .iter()
            .enumerate()
            .map(|(i, p)| GeomWithData::new(to_unit_vector(*p), i))
            .collect(),
    );
    let r2 = chord2_for_distance(eps_m) * (1.0 + 1e-9) + 1e-24;
    let neighbors: Vec<Vec<(usize, f64)>> = points
        .iter()
        .map(|p| {
            let mut v: Vec<(usize, f64)> = tree
                .locate_within_distance(to_unit_vector(*p), r2)
                .map(|e| (e.data, haversine_m(*p, points[e.data])))
                .filter(|(_, d)| *d <= eps_m)
                .collect();
            v.sort_by_key(|(j, _)| *j);
            v
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut components = 0;
    for start in 0..n {
        if !is_core[start] || label[start].is_some() {
            continue;
        }
        let id = components;
        components += 1;
        label[start] = Some(id);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &neighbors[i] {
                if is_core[j] && label[j].is_none() {
                    label[j] = Some(id);
                    queue.push_back(j);
                }
            }
        }
    }
    for i in 0..n {
        if is_core[i] {
            continue;
        }
        let nearest_core = neighbors[i]
            .iter()
            .filter(|(j, _)| is_core[*j])
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if let Some(&(j, _)) = nearest_core {
            label[i] = label[j];
        }
    }

    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); components];
    let mut noise = Vec::new();
    for (i, l) in label.iter().enumerate() {
        match l {
            Some(c) => clusters[*c].push(i),
            None => noise.push(i),
        }
    }
    clusters.sort_by_key(|c| c[0]);
    Ok(Partition { clusters, noise })
}

/// DBSCAN over hotspots, returning member records instead of indices.
pub fn cluster_hotspots(
    hotspots: &[Hotspot],
    eps_m: f64,
    min_pts: usize,
) -> Result<(Vec<Vec<Hotspot>>, Vec<Hotspot>)> {
    let pts: Vec<GeoPoint> = hotspots.iter().map(Hotspot::position).collect();
    let part = dbscan(&pts, eps_m, min_pts)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| hotspots[i].clone()).collect::<Vec<_>>();
    Ok((
        part.clusters.iter().map(|c| pick(c)).collect(),
        pick(&part.noise),
    ))
}

/// Total order on hotspots used wherever floating-point accumulation must not
/// depend on input order.
pub(crate) fn canonical_cmp(a: &Hotspot, b: &Hotspot) -> Ordering {
    a.acq_date
        .cmp(&b.acq_date)
        .then(a.acq_time.cmp(&b.acq_time))
        .then(a.lat.total_cmp(&b.lat))
        .then(a.lon.total_cmp(&b.lon))
        .then(a.frp.total_cmp(&b.frp))
        .then(a.brightness.total_cmp(&b.brightness))
        .then(a.satellite.cmp(&b.satellite))
}

pub(crate) fn canonical_sorted(members: &[Hotspot]) -> Vec<&Hotspot> {
    let mut v: Vec<&Hotspot> = members.iter().collect();
    v.sort_by(|a, b| canonical_cmp(a, b));
    v
}

/// FRP-weighted mean of member coordinates (planar in degrees). Falls back to
/// the plain mean when every member has zero FRP.
pub fn frp_weighted_centroid(members: &[Hotspot]) -> Result<GeoPoint> {
    if members.is_empty() {
        return Err(Error::Precondition("centroid of an empty cluster".into()));
    }
    let sorted = canonical_sorted(members);
    let total: f64 = sorted.iter().map(|h| h.frp).sum();
    let weight = |h: &Hotspot| if total > 0.0 { h.frp } else { 1.0 };
    let wsum: f64 = sorted.iter().map(|h| weight(h)).sum();
    let lat = sorted.iter().map(|h| weight(h) * h.lat).sum::<f64>() / wsum;
    let lon = sorted.iter().map(|h| weight(h) * h.lon).sum::<f64>() / wsum;
    Ok(GeoPoint { lat, lon })
}

/// Regular polygon approximating a circle of `radius_m` around `center`.
pub fn circle_polygon(center: GeoPoint, radius_m: f64, segments: usize) -> Result<Polygon> {
    let verts = (0..segments)
        .map(|k| destination(center, 2.0 * std::f64::consts::PI * k as f64 / segments as f64, radius_m))
        .collect();
    Polygon::new(verts)
}

/// Rectangle around segment `a`–`b`, `half_width_m` on each side and extended
/// by the same amount past both ends.
pub fn segment_buffer(a: GeoPoint, b: GeoPoint, half_width_m: f64) -> Result<Polygon> {
    let mid = GeoPoint {
        lat: (a.lat + b.lat) / 2.0,
        lon: (a.lon + b.lon) / 2.0,
    };
    let frame = LocalFrame::new(mid);
    let (ax, ay) = frame.project(a);
    let (bx, by) = frame.project(b);
    let len = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    if len == 0.0 {
        return circle_polygon(a, half_width_m, CIRCLE_SEGMENTS);
    }
    let (ux, uy) = ((bx - ax) / len, (by - ay) / len);
    let (nx, ny) = (-uy * half_width_m, ux * half_width_m);
    let (ex, ey) = (ux * half_width_m, uy * half_width_m);
    let corners = [
        (ax - ex + nx, ay - ey + ny),
        (ax - ex - nx, ay - ey - ny),
        (bx + ex - nx, by + ey - ny),
        (bx + ex + nx, by + ey + ny),
    ];
    Polygon::new(corners.iter().map(|&(x, y)| frame.unproject(x, y)).collect())
}

/// Convex hull for three or more non-collinear members; otherwise a 375 m
/// buffer: a capped rectangle along the longest span when the members are
/// distinct but collinear, a 16-gon around the centroid when they coincide.
pub fn footprint_polygon(members: &[Hotspot]) -> Result<Polygon> {
    let centroid = frp_weighted_centroid(members)?;
    let xy: Vec<(f64, f64)> = members.iter().map(|h| (h.lon, h.lat)).collect();
    let hull = convex_hull(&xy);
    if hull.len() >= 3 {
        let poly = Polygon::new(hull.iter().map(|&(lon, lat)| GeoPoint { lat, lon }).collect());
        if let Ok(poly) = poly {
            if poly.geodesic_area_m2() >= MIN_HULL_AREA_M2 {
                return Ok(poly);
            }
        }
    }
    if hull.len() <= 1 {
        return circle_polygon(centroid, VIIRS_PIXEL_M, CIRCLE_SEGMENTS);
    }
    let pts: Vec<GeoPoint> = hull.iter().map(|&(lon, lat)| GeoPoint { lat, lon }).collect();
    let mut best = (0, 1, -1.0);
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = haversine_m(pts[i], pts[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    segment_buffer(pts[best.0], pts[best.1], VIIRS_PIXEL_M)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: usize,
    pub members: Vec<Hotspot>,
    pub centroid: GeoPoint,
    pub footprint: Polygon,
    pub area_acres: f64,
}

impl Cluster {
    pub fn sum_frp(&self) -> f64 {
        canonical_sorted(&self.members).iter().map(|h| h.frp).sum()
    }

    pub fn perimeter_m(&self) -> f64 {
        self.footprint.geodesic_perimeter_m()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDayGeometry {
    pub date: NaiveDate,
    pub clusters: Vec<Cluster>,
    pub noise_points: Vec<Hotspot>,
}

/// Cluster one day's hotspots and build a footprint per cluster.
///
/// Hotspots are put in canonical order first, so cluster ids (assigned by
/// lowest index) are stable under any shuffling of the input file.
pub fn normalize_event_day(
    date: NaiveDate,
    hotspots: &[Hotspot],
    params: FootprintParams,
) -> Result<EventDayGeometry> {
    if let Some(h) = hotspots.iter().find(|h| h.acq_date != date) {
        return Err(Error::Precondition(format!(
            "hotspot dated {} passed to normalization of {date}",
            h.acq_date
        )));
    }
    let mut sorted = hotspots.to_vec();
    sorted.sort_by(canonical_cmp);
    let (groups, noise_points) = cluster_hotspots(&sorted, params.eps_m, params.min_pts)?;
    let clusters = groups
        .into_iter()
        .enumerate()
        .map(|(cluster_id, members)| {
            let centroid = frp_weighted_centroid(&members)?;
            let footprint = footprint_polygon(&members)?;
            let area_acres = m2_to_acres(footprint.geodesic_area_m2());
            Ok(Cluster {
                cluster_id,
                members,
                centroid,
                footprint,
                area_acres,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EventDayGeometry {
        date,
        clusters,
        noise_points,
    })
}

/// GeoJSON FeatureCollection with one Polygon feature per cluster.
pub fn geometry_to_geojson(day: &EventDayGeometry) -> Value {
    let features: Vec<Value> = day
        .clusters
        .iter()
        .map(|c| {
            let ring: Vec<Value> = c.footprint.ring().iter().map(|p| json!([p.lon, p.lat])).collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {
                    "cluster_id": c.cluster_id,
                    "member_count": c.members.len(),
                    "sum_frp": c.sum_frp(),
                    "area_acres": c.area_acres,
                    "centroid": [c.centroid.lon, c.centroid.lat],
                },
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "date": day.date.to_string(),
        "noise_points": day.noise_points.len(),
        "features": features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(lat: f64, lon: f64, frp: f64) -> Hotspot {
        Hotspot {
            lat,
            lon,
            frp,
            brightness: 330.0,
            acq_date: NaiveDate::from_ymd_opt(2020, 8, 17).unwrap(),
            acq_time: 600,
            satellite: "N".into(),
        }
    }

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 8, 17).unwrap()
    }

    #[test]
    fn tight_triplet_is_one_cluster() {
        let pts = [hs(37.0, -122.0, 1.0), hs(37.005, -122.0, 1.0), hs(37.0, -122.005, 1.0)];
        let (c, n) = cluster_hotspots(&pts, 3000.0, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 3);
        assert!(n.is_empty());
    }

    #[test]
    fn isolated_point_is_noise() {
        let (c, n) = cluster_hotspots(&[hs(37.0, -122.0, 1.0)], 3000.0, 3).unwrap();
        assert!(c.is_empty());
        assert_eq!(n.len(), 1);
        assert_eq!(cluster_hotspots(&[], 3000.0, 3).unwrap(), (vec![], vec![]));
    }

    #[test]
    fn bad_parameters() {
        assert!(cluster_hotspots(&[], 0.0, 3).is_err());
        assert!(cluster_hotspots(&[], 10.0, 0).is_err());
    }

    #[test]
    fn weighted_centroid_rules() {
        let c = frp_weighted_centroid(&[hs(0.0, 0.0, 1.0), hs(2.0, 0.0, 3.0)]).unwrap();
        assert_eq!((c.lat, c.lon), (1.5, 0.0));
        let c = frp_weighted_centroid(&[hs(0.0, 0.0, 2.0), hs(2.0, 4.0, 2.0)]).unwrap();
        assert_eq!((c.lat, c.lon), (1.0, 2.0));
        let c = frp_weighted_centroid(&[hs(0.0, 0.0, 0.0), hs(4.0, 0.0, 0.0)]).unwrap();
        assert_eq!((c.lat, c.lon), (2.0, 0.0));
        assert!(frp_weighted_centroid(&[]).is_err());
    }

    #[test]
    fn square_hull() {
        let m = [hs(0.0, 0.0, 1.0), hs(0.0, 0.01, 1.0), hs(0.01, 0.01, 1.0), hs(0.01, 0.0, 1.0)];
        let p = footprint_polygon(&m).unwrap();
        assert_eq!(p.vertices().len(), 4);
        for h in &m {
            assert!(p.vertices().contains(&h.position()));
        }
    }

    #[test]
    fn single_point_sixteen_gon() {
        let p = footprint_polygon(&[hs(37.0, -122.0, 5.0)]).unwrap();
        assert_eq!(p.vertices().len(), 16);
        let n = 16.0_f64;
        let expected = 0.5 * n * 375.0_f64.powi(2) * (2.0 * std::f64::consts::PI / n).sin();
        let rel = (p.geodesic_area_m2() - expected).abs() / expected;
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn two_point_buffer_contains_endpoints() {
        let a = hs(37.0, -122.0, 1.0);
        let b_pt = destination(a.position(), 1.0, 1000.0);
        let b = hs(b_pt.lat, b_pt.lon, 1.0);
        let p = footprint_polygon(&[a.clone(), b.clone()]).unwrap();
        assert!(p.contains(a.position()));
        assert!(p.contains(b.position()));
        // rectangle 1750 m x 750 m
        let rel = (p.geodesic_area_m2() - 1750.0 * 750.0).abs() / (1750.0 * 750.0);
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn collinear_members_use_extended_buffer() {
        let m = [hs(37.0, -122.0, 1.0), hs(37.0, -121.995, 1.0), hs(37.0, -121.99, 1.0)];
        let p = footprint_polygon(&m).unwrap();
        assert_eq!(p.vertices().len(), 4);
        for h in &m {
            assert!(p.contains(h.position()));
        }
        let coincident = [hs(37.0, -122.0, 1.0), hs(37.0, -122.0, 2.0)];
        assert_eq!(footprint_polygon(&coincident).unwrap().vertices().len(), 16);
    }

    #[test]
    fn empty_day_and_mixed_dates() {
        let g = normalize_event_day(date(), &[], FootprintParams::default()).unwrap();
        assert!(g.clusters.is_empty() && g.noise_points.is_empty());
        let mut other = hs(37.0, -122.0, 1.0);
        other.acq_date = NaiveDate::from_ymd_opt(2020, 8, 18).unwrap();
        assert!(normalize_event_day(date(), &[other], FootprintParams::default()).is_err());
    }

    #[test]
    fn two_groups_get_ids_in_index_order() {
        let far = 0.45; // ~50 km of latitude
        let pts = vec![
            hs(37.0, -122.0, 1.0),
            hs(37.0 + far, -122.0, 1.0),
            hs(37.005, -122.0, 1.0),
            hs(37.0 + far + 0.005, -122.0, 1.0),
            hs(37.0, -122.005, 1.0),
            hs(37.0 + far, -122.005, 1.0),
        ];
        let g = normalize_event_day(date(), &pts, FootprintParams::default()).unwrap();
        assert_eq!(g.clusters.len(), 2);
        assert_eq!(g.clusters[0].cluster_id, 0);
        assert!(g.clusters[0].members.iter().all(|h| h.lat < 37.1));
        for c in &g.clusters {
            assert!(c.area_acres > 0.0);
            assert!(c.footprint.contains(c.centroid));
        }
        let gj = geometry_to_geojson(&g);
        assert_eq!(gj["features"].as_array().unwrap().len(), 2);
    }
}
