//! Geographic primitives: points, simple polygons, great-circle distance and
//! spherical polygon area.
//!
//! Planar predicates (point-in-polygon, segment intersection, convex hull)
//! operate directly on `(lon, lat)` degrees. That is exact for convex
//! combinations of degree coordinates, which is what the footprint centroid
//! is, and adequate for the sub-degree extents handled here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::EARTH_RADIUS_M;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Geometry(format!(
                "coordinate out of range: lat={lat}, lon={lon}"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }

    fn xy(&self) -> (f64, f64) {
        (self.lon, self.lat)
    }
}

/// Great-circle (haversine) distance in meters on the mean-radius sphere.
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Point reached by travelling `dist_m` from `p` along the great circle with
/// initial bearing `bearing_rad` (clockwise from north).
pub fn destination(p: GeoPoint, bearing_rad: f64, dist_m: f64) -> GeoPoint {
    let delta = dist_m / EARTH_RADIUS_M;
    let phi1 = p.lat.to_radians();
    let lambda1 = p.lon.to_radians();
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing_rad.cos()).asin();
    let lambda2 = lambda1
        + (bearing_rad.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    let lon = (lambda2.to_degrees() + 540.0).rem_euclid(360.0) - 180.0;
    GeoPoint {
        lat: phi2.to_degrees(),
        lon,
    }
}

/// Unit vector on the sphere. Euclidean chord distance between two of these
/// is a strictly increasing function of great-circle distance, which lets a
/// planar R-tree answer geodesic nearest-neighbor queries exactly.
pub fn to_unit_vector(p: GeoPoint) -> [f64; 3] {
    let (phi, lambda) = (p.lat.to_radians(), p.lon.to_radians());
    [phi.cos() * lambda.cos(), phi.cos() * lambda.sin(), phi.sin()]
}

/// Squared chord length on the unit sphere that corresponds to a great-circle
/// distance of `dist_m`.
pub fn chord2_for_distance(dist_m: f64) -> f64 {
    let half = (dist_m / EARTH_RADIUS_M / 2.0).min(std::f64::consts::FRAC_PI_2);
    let chord = 2.0 * half.sin();
    chord * chord
}

/// Local equirectangular frame in meters, accurate for the few-kilometre
/// extents of a single footprint.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    origin: GeoPoint,
    m_per_deg_lat: f64,
    m_per_deg_lon: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        let m_per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        LocalFrame {
            origin,
            m_per_deg_lat,
            m_per_deg_lon: m_per_deg_lat * origin.lat.to_radians().cos(),
        }
    }

    pub fn project(&self, p: GeoPoint) -> (f64, f64) {
        (
            (p.lon - self.origin.lon) * self.m_per_deg_lon,
            (p.lat - self.origin.lat) * self.m_per_deg_lat,
        )
    }

    pub fn unproject(&self, x: f64, y: f64) -> GeoPoint {
        GeoPoint {
            lat: self.origin.lat + y / self.m_per_deg_lat,
            lon: self.origin.lon + x / self.m_per_deg_lon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }
}

/// A simple polygon given by a closed exterior ring (first vertex repeated at
/// the end). Construction rejects rings that self-intersect or enclose no
/// area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GeoPoint>", into = "Vec<GeoPoint>")]
pub struct Polygon {
    ring: Vec<GeoPoint>,
}

impl TryFrom<Vec<GeoPoint>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<GeoPoint>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<GeoPoint> {
    fn from(p: Polygon) -> Self {
        p.ring
    }
}

impl Polygon {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<Self> {
        let mut ring: Vec<GeoPoint> = Vec::with_capacity(vertices.len() + 1);
        for v in vertices {
            GeoPoint::new(v.lat, v.lon)?;
            if ring.last() != Some(&v) {
                ring.push(v);
            }
        }
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(Error::Geometry(format!(
                "polygon needs at least 3 distinct vertices, got {}",
                ring.len()
            )));
        }
        let n = ring.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a1, a2) = (ring[i].xy(), ring[(i + 1) % n].xy());
                let (b1, b2) = (ring[j].xy(), ring[(j + 1) % n].xy());
                if adjacent {
                    // Adjacent edges may only share their common vertex.
                    let shared = if j == i + 1 { a2 } else { a1 };
                    let (other_a, other_b) = if j == i + 1 { (a1, b2) } else { (a2, b1) };
                    if cross(shared, other_a, other_b) == 0.0
                        && dot(sub(other_a, shared), sub(other_b, shared)) > 0.0
                    {
                        return Err(Error::Geometry(format!(
                            "ring folds back on itself at vertex {}",
                            (i + 1) % n
                        )));
                    }
                } else if segments_intersect(a1, a2, b1, b2) {
                    return Err(Error::Geometry(format!(
                        "ring self-intersects between edges {i} and {j}"
                    )));
                }
            }
        }
        ring.push(ring[0]);
        let poly = Polygon { ring };
        if poly.planar_area_deg2() <= 0.0 {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        Ok(poly)
    }

    /// Closed ring, first vertex repeated at the end.
    pub fn ring(&self) -> &[GeoPoint] {
        &self.ring
    }

    /// Distinct vertices (ring without the closing duplicate).
    pub fn vertices(&self) -> &[GeoPoint] {
        &self.ring[..self.ring.len() - 1]
    }

    pub fn edges(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        self.ring.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        };
        for p in self.vertices() {
            b.min_lon = b.min_lon.min(p.lon);
            b.max_lon = b.max_lon.max(p.lon);
            b.min_lat = b.min_lat.min(p.lat);
            b.max_lat = b.max_lat.max(p.lat);
        }
        b
    }

    fn planar_area_deg2(&self) -> f64 {
        let s: f64 = self
            .edges()
            .map(|(a, b)| a.lon * b.lat - b.lon * a.lat)
            .sum();
        (s / 2.0).abs()
    }

    /// Area of the spherical polygon with great-circle edges, in m². Each edge
    /// contributes the signed spherical excess of the quadrilateral it forms
    /// with the equator.
    pub fn geodesic_area_m2(&self) -> f64 {
        let excess: f64 = self
            .edges()
            .map(|(a, b)| {
                let mut dl = (b.lon - a.lon).to_radians();
                if dl > std::f64::consts::PI {
                    dl -= 2.0 * std::f64::consts::PI;
                } else if dl < -std::f64::consts::PI {
                    dl += 2.0 * std::f64::consts::PI;
                }
                let t1 = (a.lat.to_radians() / 2.0).tan();
                let t2 = (b.lat.to_radians() / 2.0).tan();
                2.0 * ((dl / 2.0).tan() * (t1 + t2)).atan2(1.0 + t1 * t2)
            })
            .sum();
        excess.abs() * EARTH_RADIUS_M * EARTH_RADIUS_M
    }

    pub fn geodesic_perimeter_m(&self) -> f64 {
        self.edges().map(|(a, b)| haversine_m(a, b)).sum()
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        point_in_polygon(p, self)
    }
}

fn sub(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 - b.0, a.1 - b.1)
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

/// z-component of (b - o) × (c - o).
fn cross(o: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - o.0) * (c.1 - o.1) - (b.1 - o.1) * (c.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    cross(a, b, p) == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection test; touching endpoints count.
pub(crate) fn segments_intersect(
    p1: (f64, f64),
    p2: (f64, f64),
    q1: (f64, f64),
    q2: (f64, f64),
) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

/// Even-odd ray casting; points on an edge or vertex count as inside.
pub fn point_in_polygon(p: GeoPoint, poly: &Polygon) -> bool {
    let pt = p.xy();
    let mut inside = false;
    for (a, b) in poly.edges() {
        let (a, b) = (a.xy(), b.xy());
        if on_segment(pt, a, b) {
            return true;
        }
        if (a.1 > pt.1) != (b.1 > pt.1) {
            let x_cross = a.0 + (pt.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if pt.0 < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Whether two polygons share at least one point (boundary contact counts).
pub fn polygons_intersect(a: &Polygon, b: &Polygon) -> bool {
    if !a.bbox().intersects(&b.bbox()) {
        return false;
    }
    for (a1, a2) in a.edges() {
        for (b1, b2) in b.edges() {
            if segments_intersect(a1.xy(), a2.xy(), b1.xy(), b2.xy()) {
                return true;
            }
        }
    }
    point_in_polygon(a.ring[0], b) || point_in_polygon(b.ring[0], a)
}

/// Convex hull by Andrew's monotone chain over `(x, y)` pairs. Returns the hull
/// counter-clockwise without collinear vertices; fewer than three points
/// means the input is degenerate (coincident or collinear).
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum geodesic distance between two polygons, zero when they intersect.
/// Vertex-to-edge distances are measured in a local frame, so this is meant
/// for buffers of tens of kilometres, not continental spans.
pub fn polygon_distance_m(a: &Polygon, b: &Polygon) -> f64 {
    if polygons_intersect(a, b) {
        return 0.0;
    }
    let frame = LocalFrame::new(a.ring[0]);
    let pa: Vec<(f64, f64)> = a.ring.iter().map(|p| frame.project(*p)).collect();
    let pb: Vec<(f64, f64)> = b.ring.iter().map(|p| frame.project(*p)).collect();
    let mut best = f64::INFINITY;
    for (pts, ring) in [(&pa, &pb), (&pb, &pa)] {
        for &p in pts.iter() {
            for w in ring.windows(2) {
                best = best.min(point_segment_distance(p, w[0], w[1]));
            }
        }
    }
    best
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    };
    let proj = (a.0 + t * ab.0, a.1 + t * ab.1);
    dot(sub(p, proj), sub(p, proj)).sqrt()
}
