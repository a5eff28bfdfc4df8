//! Command-line front end. Exit status: 0 success, 1 runtime failure,
//! 2 input or validation failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use crate::agent::{CompletionClient, LiveClient, MockClient, ReplayClient};
use crate::analogs::Corpus;
use crate::config::{ClientKind, Role, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::{emit_report, evaluate_event, parse_predictions, ReportFormat};
use crate::footprint::{geometry_to_geojson, normalize_event_day};
use crate::ingest::parse_hotspots;
use crate::perception::render_script;
use crate::pipeline::{build_event_contexts, corpus_build, footprint_params, run_fires, Layers};

#[derive(Debug, Parser)]
#[command(name = "gal", version, about = "Wildfire geospatial awareness pipeline")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Completion client; overrides `[client] kind`.
    #[arg(long, global = true, value_enum)]
    pub client: Option<ClientKind>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one day's hotspots and write footprint GeoJSON.
    Footprint {
        #[arg(long)]
        date: NaiveDate,
        /// Fire listed in the config.
        #[arg(long, conflicts_with = "hotspots")]
        fire: Option<String>,
        /// Hotspot CSV to use instead of a configured fire.
        #[arg(long)]
        hotspots: Option<PathBuf>,
    },
    /// Print the perception script for one event day.
    Perceive {
        #[arg(long)]
        fire: String,
        #[arg(long)]
        date: NaiveDate,
        /// Dump the event-day context as JSON instead.
        #[arg(long)]
        json: bool,
    },
    /// Build the analog corpus from the training fires.
    CorpusBuild,
    /// Produce daily recommendations for one or more fires.
    Run {
        /// Fires to run; defaults to every evaluation fire.
        #[arg(long)]
        fire: Vec<String>,
    },
    /// Score a predictions CSV against ground truth.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        /// Ground truth CSV; defaults to the configured one.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(kind) = cli.client {
        cfg.client.kind = kind;
    }
    Ok(cfg)
}

pub fn make_client(cfg: &RunConfig) -> Result<Box<dyn CompletionClient>> {
    Ok(match cfg.client.kind {
        ClientKind::Mock => Box::new(MockClient),
        ClientKind::Replay => {
            let p = cfg
                .client
                .replay_file
                .as_deref()
                .ok_or_else(|| Error::Config("client.replay_file is required for the replay client".into()))?;
            Box::new(ReplayClient::load(p)?)
        }
        ClientKind::Live => Box::new(LiveClient::new(cfg.client.live.clone())?),
    })
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })
}

fn write_file(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })
}

fn open(p: &Path) -> Result<fs::File> {
    fs::File::open(p).map_err(|e| Error::Io { path: p.to_path_buf(), source: e })
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: PathBuf::from("<stdout>"), source: e };
    match &cli.command {
        Command::Footprint { date, fire, hotspots } => {
            let (label, path, params) = match (fire, hotspots) {
                (_, Some(p)) => {
                    let params = match &cli.config {
                        Some(_) => footprint_params(&load_config(cli)?.params),
                        None => Default::default(),
                    };
                    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    (stem, p.clone(), params)
                }
                (Some(f), None) => {
                    let cfg = load_config(cli)?;
                    cfg.fire(f)?;
                    (f.clone(), crate::pipeline::hotspot_path(&cfg, f), footprint_params(&cfg.params))
                }
                (None, None) => return Err(Error::Config("footprint needs --fire or --hotspots".into())),
            };
            let all = parse_hotspots(open(&path)?)?;
            let today: Vec<_> = all.into_iter().filter(|h| h.acq_date == *date).collect();
            let geom = normalize_event_day(*date, &today, params)?;
            create_dir(&cli.out_dir)?;
            let dest = cli.out_dir.join(format!("footprint-{label}-{date}.geojson"));
            write_file(&dest, &(serde_json::to_string_pretty(&geometry_to_geojson(&geom))? + "\n"))?;
            writeln!(
                out,
                "{date}: {} clusters, {} noise points -> {}",
                geom.clusters.len(),
                geom.noise_points.len(),
                dest.display()
            )
            .map_err(io)?;
        }
        Command::Perceive { fire, date, json } => {
            let cfg = load_config(cli)?;
            let fire_spec = cfg.fire(fire)?.clone();
            if *date < fire_spec.start || *date > fire_spec.end {
                return Err(Error::Config(format!("{date} is outside {fire}'s dates {}..{}", fire_spec.start, fire_spec.end)));
            }
            let layers = Layers::load(&cfg)?;
            let fire_spec = crate::config::FireSpec { end: *date, ..fire_spec };
            let ctx = build_event_contexts(&cfg, &layers, &fire_spec)?.pop().expect("date within range");
            if *json {
                writeln!(out, "{}", ctx.to_canonical_json()?).map_err(io)?;
            } else {
                write!(out, "{}", render_script(&ctx, cfg.params.top_k_clusters)?.text).map_err(io)?;
            }
        }
        Command::CorpusBuild => {
            let cfg = load_config(cli)?;
            let layers = Layers::load(&cfg)?;
            let corpus = corpus_build(&cfg, &layers)?;
            writeln!(
                out,
                "wrote {} context files for {} fires to {}",
                corpus.days.len(),
                cfg.fires_with_role(Role::Train).len(),
                cfg.data.corpus_dir.display()
            )
            .map_err(io)?;
        }
        Command::Run { fire } => {
            let cfg = load_config(cli)?;
            let ids: Vec<String> = if fire.is_empty() {
                cfg.fires_with_role(Role::Eval).iter().map(|f| f.id.clone()).collect()
            } else {
                fire.clone()
            };
            if ids.is_empty() {
                return Err(Error::Config("no fires to run".into()));
            }
            if !cfg.data.corpus_dir.join("stats.json").exists() {
                return Err(Error::Config(format!(
                    "no corpus at {}; run corpus-build first",
                    cfg.data.corpus_dir.display()
                )));
            }
            let layers = Layers::load(&cfg)?;
            let corpus = Corpus::load(&cfg.data.corpus_dir)?;
            let client = make_client(&cfg)?;
            create_dir(&cli.out_dir)?;
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
            for r in run_fires(&cfg, &layers, &corpus, client.as_ref(), &ids, &cli.out_dir, &stamp)? {
                let fallbacks = r.outcomes.iter().filter(|o| o.audit.fallback).count();
                write!(out, "{}: {} days ({} fallback) -> {}", r.fire_id, r.outcomes.len(), fallbacks, r.dir.display())
                    .map_err(io)?;
                if let Some(rep) = &r.report {
                    write!(
                        out,
                        " | personnel MAE {:.4} RMSE {:.4} | cost MAE {:.4} RMSE {:.4}",
                        rep.mae_personnel, rep.rmse_personnel, rep.mae_cost, rep.rmse_cost
                    )
                    .map_err(io)?;
                }
                writeln!(out).map_err(io)?;
            }
        }
        Command::Evaluate { predictions, truth, format } => {
            let truth_path = match truth {
                Some(p) => p.clone(),
                None => load_config(cli)?
                    .data
                    .ground_truth
                    .ok_or_else(|| Error::Config("no ground truth configured; pass --truth".into()))?,
            };
            let truth = crate::ingest::parse_ground_truth(open(&truth_path)?)?;
            let preds = parse_predictions(open(predictions)?)?;
            let mut reports = Vec::new();
            for (fire, days) in &preds {
                let t = truth
                    .get(fire)
                    .ok_or_else(|| Error::Alignment(format!("no ground truth for fire {fire}")))?;
                reports.push(evaluate_event(fire, days, t)?);
            }
            if reports.is_empty() {
                return Err(Error::Precondition("predictions file has no rows".into()));
            }
            create_dir(&cli.out_dir)?;
            let csv = emit_report(&reports, ReportFormat::Csv)?;
            let json = emit_report(&reports, ReportFormat::Json)?;
            write_file(&cli.out_dir.join("report.csv"), &csv)?;
            write_file(&cli.out_dir.join("report.json"), &json)?;
            write!(out, "{}", if *format == Format::Csv { csv } else { json }).map_err(io)?;
        }
    }
    Ok(())
}

/// Parse arguments, run, and map the outcome to an exit status.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
