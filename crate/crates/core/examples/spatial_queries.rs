//! Station and county lookups plus zonal statistics.

use std::path::PathBuf;

use gal::config::RunConfig;
use gal::footprint::circle_polygon;
use gal::geometry::GeoPoint;
use gal::pipeline::Layers;
use gal::spatial::{geodesic_distance, zonal_composition, zonal_sum};
use gal::units::meters_to_miles;

fn main() -> gal::Result<()> {
    let cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let layers = Layers::load(&cfg)?;
    let p = GeoPoint::new(37.3, -122.0)?;

    println!("{} stations indexed", layers.stations.len());
    for (s, d) in layers.stations.nearest(p, 3) {
        println!("  {} at {:.2} mi", s.id, meters_to_miles(d));
    }
    println!("stations within 10 km: {}", layers.stations.within(p, 10_000.0).len());

    let zone = circle_polygon(p, 5_000.0, 64)?;
    let ids: Vec<&str> = layers.counties.intersecting(&zone).iter().map(|c| c.county_id.as_str()).collect();
    println!("counties touching a 5 km circle: {ids:?}");
    println!("circle area {:.2} km2", zone.geodesic_area_m2() / 1e6);

    if let Some(pop) = &layers.population {
        let z = zonal_sum(pop, &zone);
        println!("population inside: {:.0} over {} cells", z.sum, z.cells);
    }
    let comp = zonal_composition(&layers.nlcd, &zone);
    for (code, share) in &comp.proportions {
        println!("  land cover {code}: {:.1}%", 100.0 * share);
    }

    let sf = GeoPoint::new(37.7749, -122.4194)?;
    let la = GeoPoint::new(34.0522, -118.2437)?;
    println!("SF to LA: {:.1} km", geodesic_distance(sf, la) / 1000.0);
    Ok(())
}
