//! End-to-end orchestration: event-day contexts from raw layers, corpus
//! building, and the sequential per-event recommendation loop.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::agent::{recommend_day, AgentParams, CompletionClient, Cumulative, DayOutcome, Mode, SYSTEM_PROMPT};
use crate::analogs::{Corpus, CorpusDay, Slack};
use crate::config::{FireSpec, Params, Role, RunConfig};
use crate::consolidation::{consolidate_cluster, global_snapshot, temporal_anchors, DayRecord, EventDayContext};
use crate::enrichment::{exposure, station_coverage, terrain_profile, weather_fusion, NlcdTable};
use crate::error::{Error, Result};
use crate::evaluation::{emit_report, evaluate_event, write_predictions, DayPrediction, EventReport, ReportFormat};
use crate::footprint::{normalize_event_day, EventDayGeometry, FootprintParams};
use crate::ingest::{load_raster_file, load_weather_dir, parse_ground_truth, parse_hotspots, parse_stations, GroundTruthDay, Hotspot, RasterGrid};
use crate::spatial::{parse_counties, CountyIndex, StationIndex};

/// Static layers shared by every fire and day.
pub struct Layers {
    pub stations: StationIndex,
    pub counties: CountyIndex,
    pub nlcd: RasterGrid,
    pub population: Option<RasterGrid>,
    pub nlcd_table: NlcdTable,
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

impl Layers {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let d = &cfg.data;
        Ok(Layers {
            stations: StationIndex::new(parse_stations(open(&d.stations)?)?),
            counties: CountyIndex::new(parse_counties(open(&d.counties)?)?),
            nlcd: load_raster_file(&d.nlcd)?,
            population: d.population.as_deref().map(load_raster_file).transpose()?,
            nlcd_table: match &d.nlcd_classes {
                Some(p) => NlcdTable::load(p)?,
                None => NlcdTable::default(),
            },
        })
    }
}

pub fn hotspot_path(cfg: &RunConfig, fire_id: &str) -> PathBuf {
    cfg.data.hotspots_dir.join(format!("{fire_id}.csv"))
}

pub fn load_fire_hotspots(cfg: &RunConfig, fire_id: &str) -> Result<Vec<Hotspot>> {
    parse_hotspots(open(&hotspot_path(cfg, fire_id))?)
}

pub fn load_ground_truth(cfg: &RunConfig) -> Result<Option<BTreeMap<String, Vec<GroundTruthDay>>>> {
    cfg.data
        .ground_truth
        .as_deref()
        .map(|p| parse_ground_truth(open(p)?))
        .transpose()
}

pub fn footprint_params(p: &Params) -> FootprintParams {
    FootprintParams { eps_m: p.eps_m, min_pts: p.min_pts }
}

pub fn agent_params(p: &Params) -> AgentParams {
    AgentParams {
        top_k: p.top_k_clusters,
        analog_k: p.analog_k,
        weights: p.weights.clone(),
        slack: Slack { min_factor: p.min_slack, max_factor: p.max_slack },
        max_attempts: p.max_attempts,
    }
}

pub fn day_geometry(date: NaiveDate, all: &[Hotspot], params: &Params) -> Result<EventDayGeometry> {
    let today: Vec<Hotspot> = all.iter().filter(|h| h.acq_date == date).cloned().collect();
    normalize_event_day(date, &today, footprint_params(params))
}

/// Context for one day. `history` holds earlier snapshots of the same
/// event, oldest first; anchors are attached when it is non-empty.
pub fn build_context(
    fire_id: &str,
    geometry: &EventDayGeometry,
    weather_dir: &Path,
    layers: &Layers,
    params: &Params,
    history: &[DayRecord],
) -> Result<EventDayContext> {
    let date = geometry.date;
    let weather = load_weather_dir(&weather_dir.join(date.to_string()), date)?;
    let clusters = geometry
        .clusters
        .iter()
        .map(|c| {
            consolidate_cluster(
                c,
                weather_fusion(&c.members, &weather),
                terrain_profile(&layers.nlcd, &c.footprint, &layers.nlcd_table),
                exposure(&c.footprint, layers.population.as_ref(), &layers.counties, params.county_buffer_m),
                station_coverage(c.centroid, &layers.stations),
            )
        })
        .collect::<Vec<_>>();
    let snapshot = global_snapshot(date, &clusters);
    let anchors = if history.is_empty() {
        None
    } else {
        Some(temporal_anchors(history, &snapshot, params.delta_threshold)?)
    };
    Ok(EventDayContext { fire_id: fire_id.to_string(), date, snapshot, clusters, anchors })
}

/// Contexts for every day of a fire, in date order.
pub fn build_event_contexts(cfg: &RunConfig, layers: &Layers, fire: &FireSpec) -> Result<Vec<EventDayContext>> {
    let hotspots = load_fire_hotspots(cfg, &fire.id)?;
    let mut history: Vec<DayRecord> = Vec::new();
    let mut out = Vec::new();
    for date in fire.dates() {
        let geom = day_geometry(date, &hotspots, &cfg.params)?;
        let ctx = build_context(&fire.id, &geom, &cfg.data.weather_dir, layers, &cfg.params, &history)?;
        history.push(DayRecord { snapshot: ctx.snapshot.clone(), personnel: None, cost_musd: None });
        out.push(ctx);
    }
    Ok(out)
}

/// Build and write the historical corpus from the training fires.
pub fn corpus_build(cfg: &RunConfig, layers: &Layers) -> Result<Corpus> {
    let train = cfg.fires_with_role(Role::Train);
    if train.is_empty() {
        return Err(Error::Config("no fires with role = \"train\"".into()));
    }
    let truth = load_ground_truth(cfg)?;
    let mut missing = Vec::new();
    if truth.is_none() {
        missing.push("data.ground_truth".to_string());
    }
    for f in &train {
        let p = hotspot_path(cfg, &f.id);
        if !p.exists() {
            missing.push(p.display().to_string());
        }
        if let Some(t) = &truth {
            let have: Vec<NaiveDate> = t.get(&f.id).map(|d| d.iter().map(|d| d.date).collect()).unwrap_or_default();
            for d in f.dates().into_iter().filter(|d| !have.contains(d)) {
                missing.push(format!("ground truth for {} {d}", f.id));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Precondition(format!("corpus inputs missing: {}", missing.join(", "))));
    }
    let truth = truth.expect("checked above");
    let mut days = Vec::new();
    for f in train {
        let gt = &truth[&f.id];
        for ctx in build_event_contexts(cfg, layers, f)? {
            let t = gt.iter().find(|d| d.date == ctx.date).expect("checked above");
            days.push(CorpusDay { personnel: t.personnel as f64, daily_cost_musd: t.daily_cost, context: ctx });
        }
    }
    let corpus = Corpus::from_days(days)?;
    corpus.write(&cfg.data.corpus_dir)?;
    Corpus::load(&cfg.data.corpus_dir)
}

/// Day-1 then incremental days, strictly in order.
pub fn run_event(
    contexts: &[EventDayContext],
    corpus: &Corpus,
    client: &dyn CompletionClient,
    params: &Params,
) -> Result<Vec<DayOutcome>> {
    let ap = agent_params(params);
    let mut outcomes: Vec<DayOutcome> = Vec::with_capacity(contexts.len());
    let mut recs = Vec::with_capacity(contexts.len());
    for (i, ctx) in contexts.iter().enumerate() {
        let history = &contexts[..i];
        let out = match outcomes.last() {
            None => recommend_day(ctx, history, corpus, client, Mode::Day1, &ap)?,
            Some(prev) => {
                let since = ctx.anchors.as_ref().map(|a| a.days_since_start).unwrap_or(i as i64);
                let cumulative = Cumulative::from_previous(&recs, since, params.delta_threshold)?;
                let mode = Mode::Incremental { prev: prev.recommendation(), cumulative: &cumulative };
                recommend_day(ctx, history, corpus, client, mode, &ap)?
            }
        };
        recs.push(out.recommendation().clone());
        outcomes.push(out);
    }
    Ok(outcomes)
}

pub struct EventRun {
    pub fire_id: String,
    pub outcomes: Vec<DayOutcome>,
    pub report: Option<EventReport>,
    pub dir: PathBuf,
}

/// Per-run directory `<fire>-<timestamp>-<hash8>`, suffixed if taken.
pub fn run_dir(out: &Path, fire_id: &str, timestamp: &str, hash: &str) -> PathBuf {
    let base = format!("{fire_id}-{timestamp}-{}", &hash[..8]);
    let mut dir = out.join(&base);
    let mut n = 2;
    while dir.exists() {
        dir = out.join(format!("{base}-{n}"));
        n += 1;
    }
    dir
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write recommendations, audit log, prompts, report and effective config.
pub fn write_event_outputs(
    dir: &Path,
    cfg: &RunConfig,
    fire_id: &str,
    outcomes: &[DayOutcome],
    report: Option<&EventReport>,
) -> Result<()> {
    let prompts = dir.join("prompts");
    fs::create_dir_all(&prompts).map_err(|e| Error::io(&prompts, e))?;
    let recs: Vec<(NaiveDate, crate::agent::Recommendation)> =
        outcomes.iter().map(|o| (o.audit.date, o.recommendation().clone())).collect();
    let rec_path = dir.join("recommendations.csv");
    write_predictions(fs::File::create(&rec_path).map_err(|e| Error::io(&rec_path, e))?, fire_id, &recs)?;
    let mut audit = String::new();
    for o in outcomes {
        audit.push_str(&crate::canonical::to_canonical_string(&o.audit)?);
        audit.push('\n');
        write(&prompts.join(format!("{}.txt", o.audit.date)), &o.prompt.user_text)?;
    }
    write(&dir.join("audit.jsonl"), &audit)?;
    write(&prompts.join("system.txt"), SYSTEM_PROMPT)?;
    if let Some(r) = report {
        let rs = std::slice::from_ref(r);
        write(&dir.join("report.csv"), &emit_report(rs, ReportFormat::Csv)?)?;
        write(&dir.join("report.json"), &emit_report(rs, ReportFormat::Json)?)?;
    }
    write(&dir.join("config.toml"), &cfg.dump()?)
}

/// Run every listed fire concurrently, each internally sequential.
pub fn run_fires(
    cfg: &RunConfig,
    layers: &Layers,
    corpus: &Corpus,
    client: &dyn CompletionClient,
    fire_ids: &[String],
    out_dir: &Path,
    timestamp: &str,
) -> Result<Vec<EventRun>> {
    let truth = load_ground_truth(cfg)?;
    let hash = cfg.hash()?;
    let fires = fire_ids.iter().map(|id| cfg.fire(id)).collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<(Vec<DayOutcome>, Option<EventReport>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = fires
            .iter()
            .map(|f| {
                let truth = &truth;
                s.spawn(move || {
                    let contexts = build_event_contexts(cfg, layers, f)?;
                    let outcomes = run_event(&contexts, corpus, client, &cfg.params)?;
                    let report = match truth.as_ref().and_then(|t| t.get(&f.id)) {
                        Some(t) => {
                            let preds: Vec<DayPrediction> = outcomes
                                .iter()
                                .map(|o| DayPrediction::from_recommendation(o.audit.date, o.recommendation()))
                                .collect();
                            Some(evaluate_event(&f.id, &preds, t)?)
                        }
                        None => None,
                    };
                    Ok((outcomes, report))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("event worker panicked")).collect()
    });
    let mut runs = Vec::new();
    for (f, r) in fires.iter().zip(results) {
        let (outcomes, report) = r?;
        let dir = run_dir(out_dir, &f.id, timestamp, &hash);
        write_event_outputs(&dir, cfg, &f.id, &outcomes, report.as_ref())?;
        runs.push(EventRun { fire_id: f.id.clone(), outcomes, report, dir });
    }
    Ok(runs)
}
