//! Cluster one day of detections into fire footprints.

use std::path::PathBuf;

use chrono::NaiveDate;
use gal::config::RunConfig;
use gal::footprint::{geometry_to_geojson, FootprintParams};
use gal::pipeline::{day_geometry, load_fire_hotspots};

fn main() -> gal::Result<()> {
    let cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let hotspots = load_fire_hotspots(&cfg, "SYN-NORTH")?;
    let date = NaiveDate::from_ymd_opt(2020, 8, 19).unwrap();

    let day = day_geometry(date, &hotspots, &cfg.params)?;
    println!("{date}: {} clusters, {} noise points", day.clusters.len(), day.noise_points.len());
    for c in &day.clusters {
        println!(
            "  cluster {}: {} detections, {:.1} MW, centroid ({:.4}, {:.4}), {:.1} acres, perimeter {:.0} m",
            c.cluster_id,
            c.members.len(),
            c.sum_frp(),
            c.centroid.lat,
            c.centroid.lon,
            c.area_acres,
            c.perimeter_m()
        );
    }

    // A tighter radius splits the same detections further.
    let tight = FootprintParams { eps_m: 400.0, min_pts: 3 };
    let today: Vec<_> = hotspots.iter().filter(|h| h.acq_date == date).cloned().collect();
    let split = gal::footprint::normalize_event_day(date, &today, tight)?;
    println!("with eps = 400 m: {} clusters, {} noise", split.clusters.len(), split.noise_points.len());

    let gj = geometry_to_geojson(&day);
    println!("GeoJSON features: {}", gj["features"].as_array().map_or(0, |a| a.len()));
    Ok(())
}
