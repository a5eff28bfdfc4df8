mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;
use gal::agent::{reprompt_loop, MockClient, ScriptedClient, CompletionClient};
use gal::agent::prompt::PromptPair;
use gal::analogs::{corpus_stats, weighted_cosine, Bounds, FeatureVector, RawFeatures, DIM, N_FEATURES};
use gal::baselines::{flame_length, nwcg_class, workload_score, Linear, PhysicalModel, PhysicalParams};
use gal::consolidation::{global_snapshot, qualitative_delta, ClusterFeatures, RollingStats, Trend};
use gal::enrichment::{
    station_coverage, terrain_profile, weather_fusion, ExposureProfile, FusedWeather, NlcdTable, RiskTier,
    StationCoverage,
};
use gal::evaluation::{emit_report, evaluate_event, mae, parse_report_json, rmse, DayPrediction, ReportFormat};
use gal::footprint::{dbscan, normalize_event_day, FootprintParams};
use gal::geometry::{destination, haversine_m, polygons_intersect, GeoPoint, Polygon};
use gal::ingest::{parse_hotspots, write_hotspots, FireStation, GroundTruthDay, Hotspot, RasterGrid, WeatherDayGrids};
use gal::spatial::{covered_cells, CountyFeature, CountyIndex, StationIndex};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}

// ---------------------------------------------------------------- ingest

fn arb_hotspot() -> impl Strategy<Value = Hotspot> {
    (
        -90.0..=90.0f64,
        -180.0..=180.0f64,
        0.0..5000.0f64,
        200.0..500.0f64,
        0i64..3000,
        0u16..1440,
        "[A-Z0-9]{0,3}",
    )
        .prop_map(|(lat, lon, frp, brightness, d, acq_time, satellite)| Hotspot {
            lat,
            lon,
            frp,
            brightness,
            acq_date: date(2015, 1, 1) + chrono::Duration::days(d),
            acq_time,
            satellite,
        })
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn hotspot_csv_round_trips(hs in prop::collection::vec(arb_hotspot(), 0..30)) {
        let mut buf = Vec::new();
        write_hotspots(&mut buf, &hs).unwrap();
        prop_assert_eq!(parse_hotspots(buf.as_slice()).unwrap(), hs);
    }

    #[test]
    fn raster_ascii_round_trips(seed in any::<u64>(), rows in 1usize..12, cols in 1usize..12) {
        let g = random_count_raster(&mut rng(seed), rows, cols);
        let mut buf = Vec::new();
        g.write_ascii(&mut buf).unwrap();
        prop_assert_eq!(gal::ingest::load_raster(buf.as_slice()).unwrap(), g);
    }
}

// ---------------------------------------------------------------- footprint

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn dbscan_partitions_every_point_once(seed in any::<u64>(), n in 0usize..120, eps in 300.0..6000.0f64, min_pts in 1usize..6) {
        let hs = random_hotspots(&mut rng(seed), n, date(2020, 8, 20));
        let pts: Vec<GeoPoint> = hs.iter().map(Hotspot::position).collect();
        let p = dbscan(&pts, eps, min_pts).unwrap();
        let mut seen = BTreeSet::new();
        for i in p.clusters.iter().flatten().chain(&p.noise) {
            prop_assert!(seen.insert(*i), "index {} appears twice", i);
        }
        prop_assert_eq!(seen, (0..n).collect::<BTreeSet<_>>());
        for c in &p.clusters {
            prop_assert!(c.len() >= min_pts.min(c.len()));
            prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert!(p.clusters.windows(2).all(|w| w[0][0] < w[1][0]));
        if min_pts == 1 {
            prop_assert!(p.noise.is_empty());
        }
    }

    #[test]
    fn dbscan_matches_quadratic_oracle(seed in any::<u64>(), n in 0usize..80, eps in 300.0..6000.0f64, min_pts in 1usize..6) {
        let hs = random_hotspots(&mut rng(seed), n, date(2020, 8, 20));
        let pts: Vec<GeoPoint> = hs.iter().map(Hotspot::position).collect();
        let got = partition_sets(&dbscan(&pts, eps, min_pts).unwrap());
        prop_assert_eq!(got, naive_dbscan(&pts, eps, min_pts));
    }

    #[test]
    fn event_day_is_invariant_to_input_order(seed in any::<u64>(), n in 0usize..100) {
        let mut r = rng(seed);
        let d = date(2020, 8, 20);
        let hs = random_hotspots(&mut r, n, d);
        let mut shuffled = hs.clone();
        shuffled.shuffle(&mut r);
        let a = normalize_event_day(d, &hs, FootprintParams::default()).unwrap();
        let b = normalize_event_day(d, &shuffled, FootprintParams::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn footprints_contain_members_and_centroid(seed in any::<u64>(), n in 1usize..100) {
        let d = date(2020, 8, 20);
        let hs = random_hotspots(&mut rng(seed), n, d);
        let day = normalize_event_day(d, &hs, FootprintParams::default()).unwrap();
        for c in &day.clusters {
            prop_assert!(c.area_acres > 0.0);
            prop_assert!(c.footprint.contains(c.centroid), "centroid {:?} outside footprint", c.centroid);
            for m in &c.members {
                prop_assert!(c.footprint.contains(m.position()));
            }
        }
    }
}

// ---------------------------------------------------------------- spatial

fn random_stations(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<FireStation> {
    (0..n)
        .map(|i| FireStation {
            id: format!("S{i:03}"),
            lat: r.gen_range(36.5..38.0),
            lon: r.gen_range(-123.0..-121.0),
            name: String::new(),
        })
        .collect()
}

fn random_counties(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<CountyFeature> {
    (0..n)
        .map(|i| {
            let c = GeoPoint { lat: r.gen_range(36.8..37.8), lon: r.gen_range(-122.6..-121.4) };
            CountyFeature {
                county_id: format!("{:05}", 6000 + i),
                name: format!("County {i}"),
                boundary: star_polygon(r, c, 0.02, 0.25),
                population: r.gen_range(0..1_000_000),
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn nearest_matches_linear_scan(seed in any::<u64>(), n in 0usize..60, k in 0usize..8) {
        let mut r = rng(seed);
        let stations = random_stations(&mut r, n);
        let idx = StationIndex::new(stations.clone());
        let q = GeoPoint { lat: r.gen_range(36.5..38.0), lon: r.gen_range(-123.0..-121.0) };
        let got = idx.nearest(q, k);
        let mut all: Vec<f64> = stations.iter().map(|s| haversine_m(q, s.position())).collect();
        all.sort_by(f64::total_cmp);
        prop_assert_eq!(got.len(), k.min(n));
        for (i, (s, d)) in got.iter().enumerate() {
            prop_assert!((d - haversine_m(q, s.position())).abs() < 1e-6);
            prop_assert!((d - all[i]).abs() < 1e-6, "rank {} distance {} vs oracle {}", i, d, all[i]);
        }
        prop_assert!(got.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn within_matches_linear_scan(seed in any::<u64>(), n in 0usize..60, radius in 0.0..40_000.0f64) {
        let mut r = rng(seed);
        let stations = random_stations(&mut r, n);
        let idx = StationIndex::new(stations.clone());
        let q = GeoPoint { lat: r.gen_range(36.5..38.0), lon: r.gen_range(-123.0..-121.0) };
        let got: BTreeSet<String> = idx.within(q, radius).iter().map(|s| s.id.clone()).collect();
        let want: BTreeSet<String> = stations
            .iter()
            .filter(|s| haversine_m(q, s.position()) <= radius)
            .map(|s| s.id.clone())
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn county_intersection_matches_brute_force(seed in any::<u64>(), n in 0usize..25) {
        let mut r = rng(seed);
        let counties = random_counties(&mut r, n);
        let idx = CountyIndex::new(counties.clone());
        let c = GeoPoint { lat: r.gen_range(36.8..37.8), lon: r.gen_range(-122.6..-121.4) };
        let poly = star_polygon(&mut r, c, 0.005, 0.08);
        let got: Vec<String> = idx.intersecting(&poly).iter().map(|c| c.county_id.clone()).collect();
        let want: Vec<String> = counties
            .iter()
            .filter(|c| polygons_intersect(&c.boundary, &poly))
            .map(|c| c.county_id.clone())
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn covered_cells_match_every_cell_test(seed in any::<u64>(), rows in 1usize..40, cols in 1usize..40) {
        let mut r = rng(seed);
        let g = random_class_raster(&mut r, rows, cols, &CLASSES);
        let c = raster_center(&g);
        let span = g.cell_size_deg * rows.max(cols) as f64;
        let poly = star_polygon(&mut r, c, span * 0.05, span * 0.8);
        let got: BTreeSet<(usize, usize)> = covered_cells(&g, &poly).into_iter().collect();
        let want: BTreeSet<(usize, usize)> = (0..rows)
            .flat_map(|row| (0..cols).map(move |col| (row, col)))
            .filter(|&(row, col)| poly.contains(g.cell_center(row, col)))
            .collect();
        prop_assert_eq!(got, want);
    }
}

// ---------------------------------------------------------------- enrichment

fn weather_grid(r: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> RasterGrid {
    let values = (0..20 * 20).map(|_| if r.gen_bool(0.1) { NODATA } else { r.gen_range(lo..hi) }).collect();
    RasterGrid::new(-122.2, 37.1, 0.005, 20, 20, values, NODATA).unwrap()
}

fn members_on_grid(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<Hotspot> {
    (0..n)
        .map(|_| {
            let frp = r.gen_range(0.0..80.0f64).round();
            hotspot(r.gen_range(37.08..37.22), r.gen_range(-122.22..-122.08), frp, date(2020, 8, 20))
        })
        .collect()
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn risk_fractions_partition_the_footprint(seed in any::<u64>(), rows in 2usize..30, cols in 2usize..30) {
        let mut r = rng(seed);
        let g = random_class_raster(&mut r, rows, cols, &CLASSES);
        let span = g.cell_size_deg * rows.max(cols) as f64;
        let poly = star_polygon(&mut r, raster_center(&g), span * 0.1, span * 0.7);
        let table = NlcdTable::default();
        if let Some(t) = terrain_profile(&g, &poly, &table) {
            let unclassified: f64 = t.composition.iter().filter(|(c, _)| table.tier(**c).is_none()).map(|(_, p)| p).sum();
            let total = t.risk_fractions.high + t.risk_fractions.medium + t.risk_fractions.low + t.barriers + unclassified;
            prop_assert!((total - 1.0).abs() < 1e-9, "fractions sum to {}", total);
            prop_assert!((0.0..=1.0).contains(&t.spread_potential));
            prop_assert!(t.shannon_diversity >= 0.0);
            prop_assert!(t.fragmentation > 0.0 && t.fragmentation <= 1.0);
            let expected: f64 = t
                .composition
                .iter()
                .filter_map(|(c, p)| table.tier(*c).map(|tier| p * tier.risk_value()))
                .sum();
            prop_assert!((t.spread_potential - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn patch_count_matches_flood_fill(seed in any::<u64>(), rows in 1usize..15, cols in 1usize..15, k in 1usize..4) {
        let mut r = rng(seed);
        let cells: HashMap<(usize, usize), i64> = (0..rows)
            .flat_map(|row| (0..cols).map(move |col| (row, col)))
            .filter(|_| r.gen_bool(0.8))
            .map(|rc| (rc, 0))
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(rc, _)| (rc, r.gen_range(0..k as i64)))
            .collect();
        prop_assert_eq!(gal::enrichment::count_patches(&cells), flood_fill_patches(&cells));
    }

    #[test]
    fn weather_fusion_ignores_member_order(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let mut w = WeatherDayGrids::empty(date(2020, 8, 20));
        w.bi = Some(weather_grid(&mut r, 0.0, 200.0));
        w.tmax = Some(weather_grid(&mut r, 280.0, 320.0));
        w.wind = Some(weather_grid(&mut r, 0.0, 20.0));
        let ms = members_on_grid(&mut r, n);
        let mut shuffled = ms.clone();
        shuffled.shuffle(&mut r);
        prop_assert_eq!(weather_fusion(&ms, &w), weather_fusion(&shuffled, &w));
    }

    #[test]
    fn weather_fusion_ignores_power_of_two_weight_scaling(seed in any::<u64>(), n in 1usize..30, e in -8i32..8) {
        let mut r = rng(seed);
        let mut w = WeatherDayGrids::empty(date(2020, 8, 20));
        w.bi = Some(weather_grid(&mut r, 0.0, 200.0));
        w.fm1 = Some(weather_grid(&mut r, 2.0, 30.0));
        let ms = members_on_grid(&mut r, n);
        let scaled: Vec<Hotspot> = ms.iter().map(|h| Hotspot { frp: h.frp * 2f64.powi(e), ..h.clone() }).collect();
        prop_assert_eq!(weather_fusion(&ms, &w), weather_fusion(&scaled, &w));
    }

    #[test]
    fn fused_value_lies_between_sampled_extremes(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let mut w = WeatherDayGrids::empty(date(2020, 8, 20));
        let g = weather_grid(&mut r, 0.0, 200.0);
        w.bi = Some(g.clone());
        let ms = members_on_grid(&mut r, n);
        let samples: Vec<f64> = ms.iter().filter_map(|h| g.sample(h.position())).collect();
        match weather_fusion(&ms, &w).bi {
            None => prop_assert!(samples.is_empty()),
            Some(v) => {
                let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn station_coverage_is_sorted_and_bounded(seed in any::<u64>(), n in 0usize..40) {
        let mut r = rng(seed);
        let idx = StationIndex::new(random_stations(&mut r, n));
        let q = GeoPoint { lat: r.gen_range(36.5..38.0), lon: r.gen_range(-123.0..-121.0) };
        let cov: StationCoverage = station_coverage(q, &idx);
        prop_assert_eq!(cov.nearest.len(), n.min(3));
        prop_assert!(cov.nearest.windows(2).all(|w| w[0].distance_m <= w[1].distance_m));
        prop_assert!(cov.density_10km <= n);
    }
}

#[test]
fn risk_tier_values_are_ordered() {
    assert!(RiskTier::High.risk_value() > RiskTier::Medium.risk_value());
    assert!(RiskTier::Medium.risk_value() > RiskTier::Low.risk_value());
    assert!(RiskTier::Low.risk_value() > RiskTier::Barrier.risk_value());
}

// ---------------------------------------------------------------- consolidation

fn random_features(r: &mut rand_chacha::ChaCha8Rng, id: usize) -> ClusterFeatures {
    let n = r.gen_range(1..50);
    let sum_frp = r.gen_range(0.0..500.0f64).round();
    let opt = |r: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| r.gen_bool(0.8).then(|| r.gen_range(lo..hi));
    ClusterFeatures {
        cluster_id: id,
        point_count: n,
        sum_frp,
        max_frp: sum_frp / n as f64,
        max_brightness: r.gen_range(300.0..400.0),
        centroid: GeoPoint { lat: r.gen_range(36.0..38.0), lon: r.gen_range(-123.0..-121.0) },
        weather: FusedWeather {
            bi: opt(r, 0.0, 150.0),
            tmax: opt(r, 285.0, 315.0),
            tmin: opt(r, 275.0, 295.0),
            wind: opt(r, 0.0, 15.0),
            fm1: opt(r, 2.0, 20.0),
        },
        terrain: None,
        exposure: ExposureProfile {
            population: opt(r, 0.0, 5000.0).map(f64::round),
            density: None,
            counties: vec![format!("0600{}", r.gen_range(0..4))],
            nearby_counties: vec![],
        },
        access: StationCoverage { nearest: vec![], density_10km: r.gen_range(0..5) },
        area_acres: r.gen_range(1.0..5000.0f64).round(),
        perimeter_m: r.gen_range(100.0..30_000.0f64).round(),
    }
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn snapshot_totals_are_cluster_sums(seed in any::<u64>(), n in 0usize..12) {
        let mut r = rng(seed);
        let cs: Vec<ClusterFeatures> = (0..n).map(|i| random_features(&mut r, i)).collect();
        let s = global_snapshot(date(2020, 8, 20), &cs);
        prop_assert_eq!(s.n_clusters, n);
        prop_assert_eq!(s.total_points, cs.iter().map(|c| c.point_count).sum::<usize>());
        prop_assert_eq!(s.station_count, cs.iter().map(|c| c.access.density_10km).sum::<usize>());
        // integer-valued inputs make these sums exact in any order
        prop_assert_eq!(s.total_frp, cs.iter().map(|c| c.sum_frp).fold(0.0, |a, b| a + b));
        prop_assert_eq!(s.total_area_acres, cs.iter().map(|c| c.area_acres).fold(0.0, |a, b| a + b));
        prop_assert_eq!(s.total_perimeter_m, cs.iter().map(|c| c.perimeter_m).fold(0.0, |a, b| a + b));
        let max = cs.iter().map(|c| c.sum_frp).fold(0.0, f64::max);
        prop_assert_eq!(s.max_frp, max);
        prop_assert!(s.median_frp_per_cluster <= s.p95_frp_per_cluster);
        prop_assert!(s.p95_frp_per_cluster <= s.max_frp);
    }

    #[test]
    fn snapshot_ignores_cluster_order(seed in any::<u64>(), n in 0usize..12) {
        let mut r = rng(seed);
        let cs: Vec<ClusterFeatures> = (0..n).map(|i| random_features(&mut r, i)).collect();
        let mut shuffled = cs.clone();
        shuffled.shuffle(&mut r);
        prop_assert_eq!(global_snapshot(date(2020, 8, 20), &cs), global_snapshot(date(2020, 8, 20), &shuffled));
    }

    #[test]
    fn rolling_average_never_exceeds_max(series in prop::collection::vec(-1e6..1e6f64, 1..20)) {
        let s = RollingStats::of(&series).unwrap();
        prop_assert!(s.avg3 <= s.max3 + 1e-9 * s.max3.abs().max(1.0));
        prop_assert!(s.avg7 <= s.max7 + 1e-9 * s.max7.abs().max(1.0));
        prop_assert!(s.max3 <= s.max7);
        let tail = &series[series.len().saturating_sub(3)..];
        prop_assert_eq!(s.max3, tail.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn trend_is_antisymmetric_for_symmetric_change(base in 0.0..1e6f64, rel in 0.0..1.0f64, th in 0.01..0.5f64) {
        let up = qualitative_delta(base, base * (1.0 + rel), th).unwrap();
        let down = qualitative_delta(base, base * (1.0 - rel), th).unwrap();
        let flip = |t: Trend| match t { Trend::Up => Trend::Down, Trend::Down => Trend::Up, Trend::Flat => Trend::Flat };
        prop_assert_eq!(flip(up), down);
        prop_assert_ne!(up, Trend::Down);
        prop_assert_eq!(qualitative_delta(base, base, th).unwrap(), Trend::Flat);
    }
}

// ---------------------------------------------------------------- analogs

proptest! {
    #![proptest_config(cases(256))]

    #[test]
    fn cosine_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, w) = (random_vector(&mut r), random_vector(&mut r), random_weights(&mut r));
        let ab = weighted_cosine(&a, &b, &w).unwrap();
        prop_assert!((ab - weighted_cosine(&b, &a, &w).unwrap()).abs() < 1e-15);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - plain_cosine(&a, &b, &w)).abs() < 1e-12);
    }

    #[test]
    fn cosine_ignores_positive_scaling(seed in any::<u64>(), k in 0.01..100.0f64) {
        let mut r = rng(seed);
        let mut a = random_vector(&mut r);
        a.flags = vec![false; DIM - N_FEATURES];
        let b = random_vector(&mut r);
        let w = random_weights(&mut r);
        let scaled = FeatureVector { values: a.values.iter().map(|v| v * k).collect(), flags: a.flags.clone() };
        let d = weighted_cosine(&a, &b, &w).unwrap() - weighted_cosine(&scaled, &b, &w).unwrap();
        prop_assert!(d.abs() < 1e-12, "difference {}", d);
    }

    #[test]
    fn standardization_round_trips(seed in any::<u64>(), n in 2usize..40) {
        let mut r = rng(seed);
        let raws: Vec<RawFeatures> = (0..n)
            .map(|_| std::array::from_fn(|_| r.gen_bool(0.9).then(|| r.gen_range(-1e3..1e3))))
            .collect();
        let stats = corpus_stats(&raws).unwrap();
        for raw in &raws {
            for (i, x) in raw.iter().enumerate() {
                if let (Some(x), false) = (x, stats.constant[i]) {
                    let back = stats.unz(i, stats.z(i, Some(*x)));
                    prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0), "feature {} {} -> {}", i, x, back);
                }
            }
        }
    }

    #[test]
    fn retrieval_matches_brute_force(seed in any::<u64>(), n in 0usize..200, k in 1usize..8) {
        let mut r = rng(seed);
        let corpus = random_corpus(&mut r, n);
        let q = random_vector(&mut r);
        let w = random_weights(&mut r);
        let got: Vec<(String, chrono::NaiveDate, f64)> = gal::analogs::retrieve_analogs(&q, &corpus, k, &w)
            .unwrap()
            .into_iter()
            .map(|a| (a.fire_id, a.date, a.similarity))
            .collect();
        let want = brute_retrieve(&q, &corpus, k, &w);
        prop_assert_eq!(got.len(), want.len());
        for (g, o) in got.iter().zip(&want) {
            prop_assert_eq!(&g.0, &o.0);
            prop_assert_eq!(g.1, o.1);
            prop_assert!((g.2 - o.2).abs() < 1e-12);
        }
    }
}

// ---------------------------------------------------------------- agent

fn prompt() -> PromptPair {
    PromptPair { system_text: "system".into(), user_text: "user".into() }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn reprompt_loop_never_exceeds_attempt_budget(seed in any::<u64>(), max_attempts in 1usize..6, good_at in 0usize..8) {
        let mut r = rng(seed);
        let analogs = random_analogs(&mut r);
        let bounds = Bounds::unbounded();
        let good = conformant(&mut r, &bounds).to_wire().to_string();
        let responses: Vec<String> = (0..8).map(|i| if i == good_at { good.clone() } else { format!("not json {i}") }).collect();
        let client = ScriptedClient::new(responses);
        let out = reprompt_loop(&prompt(), &client, &bounds, max_attempts, &analogs).unwrap();
        prop_assert!(client.calls() <= max_attempts);
        prop_assert_eq!(out.responses.len(), client.calls());
        prop_assert_eq!(out.fallback, good_at >= max_attempts);
        prop_assert_eq!(out.failures.len(), client.calls() - usize::from(!out.fallback));
    }

    #[test]
    fn validator_accepts_conformant_and_rejects_mutants(seed in any::<u64>()) {
        let mut r = rng(seed);
        let analogs = random_analogs(&mut r);
        let bounds = gal::analogs::analog_bounds(&analogs, Default::default());
        let rec = conformant(&mut r, &bounds);
        prop_assert_eq!(gal::agent::validate_output(&rec.to_wire().to_string(), &bounds).unwrap(), rec.clone());
        for (doc, cat) in mutants(&rec, &bounds) {
            let err = gal::agent::validate_output(&doc, &bounds).unwrap_err();
            prop_assert_eq!(err.category, cat, "document {}", doc);
        }
    }

    #[test]
    fn mock_client_is_pure(seed in any::<u64>()) {
        let mut r = rng(seed);
        let user = format!("Personnel median {} and cost {}", r.gen_range(1..5000), r.gen_range(0.0..9.0f64));
        let a = MockClient.complete("s", &user).unwrap();
        prop_assert_eq!(a, MockClient.complete("s", &user).unwrap());
    }
}

// ---------------------------------------------------------------- baselines

fn square(center: GeoPoint, side_m: f64) -> Polygon {
    let h = side_m / 2.0;
    let north = destination(center, 0.0, h);
    let south = destination(center, std::f64::consts::PI, h);
    let corner = |p: GeoPoint, east: bool| destination(p, if east { std::f64::consts::FRAC_PI_2 } else { -std::f64::consts::FRAC_PI_2 }, h);
    Polygon::new(vec![corner(south, false), corner(south, true), corner(north, true), corner(north, false)]).unwrap()
}

proptest! {
    #![proptest_config(cases(256))]

    #[test]
    fn flame_length_and_class_are_monotone(a in 0.0..1e5f64, b in 0.0..1e5f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(flame_length(lo) <= flame_length(hi));
        prop_assert!(nwcg_class(flame_length(lo)) <= nwcg_class(flame_length(hi)));
        prop_assert!((1..=4).contains(&nwcg_class(flame_length(a))));
    }

    #[test]
    fn workload_grows_with_each_input(p in 0.0..1e5f64, class in 1u8..4, n in 1usize..10) {
        let s = workload_score(p, class, n);
        prop_assert!(s >= 0.0);
        prop_assert!(workload_score(p, class + 1, n) >= s);
        prop_assert!(workload_score(p, class, n + 1) >= s);
        prop_assert!(workload_score(p + 1.0, class, n) >= s);
    }

    #[test]
    fn predictions_are_never_negative(a in -1e4..1e4f64, b in -1e3..1e3f64, c in -10.0..10.0f64, d in -1.0..1.0f64, x in -1e4..1e4f64) {
        let m = PhysicalModel {
            params: PhysicalParams::default(),
            calib_personnel: Linear { intercept: a, slope: b },
            calib_cost: Linear { intercept: c, slope: d },
        };
        let (p, cost) = m.predict_score(x);
        prop_assert!(p >= 0.0 && cost >= 0.0);
    }

    #[test]
    fn square_perimeter_is_four_sides(lat in -60.0..60.0f64, lon in -179.0..179.0f64, side in 100.0..20_000.0f64) {
        let sq = square(GeoPoint { lat, lon }, side);
        let rel = (sq.geodesic_perimeter_m() - 4.0 * side).abs() / (4.0 * side);
        prop_assert!(rel < 1e-3, "relative error {}", rel);
    }
}

// ---------------------------------------------------------------- evaluation

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn rmse_bounds_mae(pairs in prop::collection::vec((0.0..1e4f64, 0.0..1e4f64), 1..40)) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (m, r) = (mae(&p, &t).unwrap(), rmse(&p, &t).unwrap());
        prop_assert!(m >= 0.0);
        prop_assert!(r + 1e-9 * r.max(1.0) >= m);
        let max = p.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(r <= max + 1e-9 * max.max(1.0));
    }

    #[test]
    fn report_ignores_row_order_and_round_trips(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let d0 = date(2020, 8, 1);
        let truth: Vec<GroundTruthDay> = (0..n)
            .map(|i| GroundTruthDay {
                fire_id: "F".into(),
                date: d0 + chrono::Duration::days(i as i64),
                personnel: r.gen_range(0..4000),
                daily_cost: r.gen_range(0.0..8.0),
            })
            .collect();
        let preds: Vec<DayPrediction> = truth
            .iter()
            .map(|t| DayPrediction { date: t.date, personnel: r.gen_range(0..4000) as f64, cost_musd: r.gen_range(0.0..8.0) })
            .collect();
        let a = evaluate_event("F", &preds, &truth).unwrap();
        let (mut p2, mut t2) = (preds.clone(), truth.clone());
        p2.shuffle(&mut r);
        t2.shuffle(&mut r);
        let b = evaluate_event("F", &p2, &t2).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.n_days, n);
        let json = emit_report(&[a.clone()], ReportFormat::Json).unwrap();
        prop_assert_eq!(parse_report_json(&json).unwrap(), vec![a]);
    }
}
