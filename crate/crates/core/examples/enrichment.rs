//! Attach weather, terrain, exposure and access features to each cluster.

use std::path::PathBuf;

use chrono::NaiveDate;
use gal::config::RunConfig;
use gal::enrichment::{exposure, station_coverage, terrain_profile, weather_fusion};
use gal::ingest::load_weather_dir;
use gal::pipeline::{day_geometry, load_fire_hotspots, Layers};
use gal::units::meters_to_miles;

fn main() -> gal::Result<()> {
    let cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let layers = Layers::load(&cfg)?;
    let date = NaiveDate::from_ymd_opt(2020, 8, 20).unwrap();
    let day = day_geometry(date, &load_fire_hotspots(&cfg, "SYN-COAST")?, &cfg.params)?;
    let weather = load_weather_dir(&cfg.data.weather_dir.join(date.to_string()), date)?;

    for c in &day.clusters {
        println!("cluster {} ({} detections)", c.cluster_id, c.members.len());
        let w = weather_fusion(&c.members, &weather);
        let show = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.1}"));
        println!(
            "  weather: BI {}, tmax {} K, wind {} m/s, FM1 {}%",
            show(w.bi),
            show(w.tmax),
            show(w.wind),
            show(w.fm1)
        );
        match terrain_profile(&layers.nlcd, &c.footprint, &layers.nlcd_table) {
            Some(t) => println!(
                "  terrain: spread {:.2}, shannon {:.3}, fragmentation {:.2}, classes {:?}",
                t.spread_potential, t.shannon_diversity, t.fragmentation, t.composition
            ),
            None => println!("  terrain: footprint covers no land-cover cell"),
        }
        let e = exposure(&c.footprint, layers.population.as_ref(), &layers.counties, cfg.params.county_buffer_m);
        println!("  exposure: pop {:?}, counties {:?}, nearby {:?}", e.population.map(f64::round), e.counties, e.nearby_counties);
        let a = station_coverage(c.centroid, &layers.stations);
        let near: Vec<String> = a.nearest.iter().map(|s| format!("{} {:.1} mi", s.station_id, meters_to_miles(s.distance_m))).collect();
        println!("  access: {} within 10 km; nearest {}", a.density_10km, near.join(", "));
    }
    Ok(())
}
