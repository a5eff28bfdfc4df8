mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use gal::consolidation::EventDayContext;

fn gal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gal")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Copy of the bundled data in a scratch directory.
fn workspace() -> (tempfile::TempDir, PathBuf) {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("data");
    copy_dir(&synthetic_dir(), &data);
    let cfg = data.join("config.toml");
    (t, cfg)
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    v.sort();
    v
}

fn build_corpus(cfg: &Path) {
    let o = gal(&["--config", s(cfg), "corpus-build"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("wrote 20 context files for 2 fires"));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&gal(&["--help"])), 0);
    assert_eq!(code(&gal(&["--version"])), 0);
    let help = stdout(&gal(&["--help"]));
    for sub in ["footprint", "perceive", "corpus-build", "run", "evaluate"] {
        assert!(help.contains(sub), "help lists {sub}");
    }
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(code(&gal(&[])), 2);
    assert_eq!(code(&gal(&["explode"])), 2);
    assert_eq!(code(&gal(&["--client", "psychic", "run"])), 2);
    assert_eq!(code(&gal(&["footprint", "--date", "2020-13-40", "--hotspots", "x.csv"])), 2);
    assert_eq!(code(&gal(&["run"])), 2, "missing --config");
    assert_eq!(code(&gal(&["--config", "/nonexistent/config.toml", "run"])), 2);
}

#[test]
fn invalid_config_exits_two() {
    let (t, cfg) = workspace();
    let text = fs::read_to_string(&cfg).unwrap().replace("eps_m = 3000.0", "eps_m = -5.0");
    fs::write(&cfg, text).unwrap();
    let o = gal(&["--config", s(&cfg), "corpus-build"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps"));
    drop(t);
}

#[test]
fn run_without_corpus_exits_two() {
    let (t, cfg) = workspace();
    let o = gal(&["--config", s(&cfg), "--out-dir", s(&t.path().join("out")), "run"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("corpus-build"));
}

#[test]
fn client_failure_exits_one() {
    let (t, cfg) = workspace();
    build_corpus(&cfg);
    let empty = t.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("kind = \"mock\"", &format!("kind = \"mock\"\nreplay_file = {:?}", s(&empty)));
    fs::write(&cfg, text).unwrap();
    let o = gal(&["--config", s(&cfg), "--client", "replay", "--out-dir", s(&t.path().join("out")), "run"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no replay transcript"));
}

#[test]
fn footprint_from_a_bare_hotspot_file() {
    let t = tempfile::tempdir().unwrap();
    let csv = synthetic_dir().join("hotspots/SYN-NORTH.csv");
    let mut outputs = Vec::new();
    for n in 0..2 {
        let out = t.path().join(format!("o{n}"));
        let o = gal(&["--out-dir", s(&out), "footprint", "--date", "2020-08-19", "--hotspots", s(&csv)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("2020-08-19: 4 clusters"));
        let file = out.join("footprint-SYN-NORTH-2020-08-19.geojson");
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        outputs.push(fs::read(&file).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn footprint_for_a_configured_fire_matches_the_bare_file() {
    let t = tempfile::tempdir().unwrap();
    let cfg = synthetic_dir().join("config.toml");
    let a = t.path().join("a");
    let b = t.path().join("b");
    assert_eq!(code(&gal(&["--config", s(&cfg), "--out-dir", s(&a), "footprint", "--fire", "SYN-NORTH", "--date", "2020-08-19"])), 0);
    let csv = synthetic_dir().join("hotspots/SYN-NORTH.csv");
    assert_eq!(code(&gal(&["--out-dir", s(&b), "footprint", "--date", "2020-08-19", "--hotspots", s(&csv)])), 0);
    let name = "footprint-SYN-NORTH-2020-08-19.geojson";
    assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    assert_eq!(code(&gal(&["--config", s(&cfg), "footprint", "--fire", "NOPE", "--date", "2020-08-19"])), 2);
}

#[test]
fn perceive_prints_a_stable_script_and_context() {
    let cfg = synthetic_dir().join("config.toml");
    let args = ["--config", s(&cfg), "perceive", "--fire", "SYN-COAST", "--date", "2020-08-18"];
    let a = gal(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, gal(&args).stdout);
    let text = stdout(&a);
    assert!(text.contains("Max FRP"));
    let mut json_args = args.to_vec();
    json_args.push("--json");
    let ctx = EventDayContext::from_json(stdout(&gal(&json_args)).trim()).unwrap();
    assert_eq!(ctx.fire_id, "SYN-COAST");
    assert_eq!(ctx.date, date(2020, 8, 18));
    assert!(ctx.anchors.is_some());
    let outside = gal(&["--config", s(&cfg), "perceive", "--fire", "SYN-COAST", "--date", "2021-01-01"]);
    assert_eq!(code(&outside), 2);
}

#[test]
fn run_is_deterministic_and_evaluate_reproduces_its_report() {
    let (t, cfg) = workspace();
    build_corpus(&cfg);
    let out_a = t.path().join("a");
    let out_b = t.path().join("b");
    for out in [&out_a, &out_b] {
        let o = gal(&["--config", s(&cfg), "--out-dir", s(out), "run", "--fire", "SYN-COAST"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("SYN-COAST: 10 days"));
    }
    let (a, b) = (run_dirs(&out_a), run_dirs(&out_b));
    assert_eq!((a.len(), b.len()), (1, 1));
    for f in ["recommendations.csv", "audit.jsonl", "report.csv", "report.json", "config.toml", "prompts/system.txt"] {
        assert_eq!(fs::read(a[0].join(f)).unwrap(), fs::read(b[0].join(f)).unwrap(), "{f} differs");
    }

    let eval_out = t.path().join("eval");
    let preds = a[0].join("recommendations.csv");
    let o = gal(&["--config", s(&cfg), "--out-dir", s(&eval_out), "evaluate", "--predictions", s(&preds)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run_report = fs::read_to_string(a[0].join("report.csv")).unwrap();
    assert_eq!(stdout(&o), run_report);
    assert_eq!(fs::read_to_string(eval_out.join("report.csv")).unwrap(), run_report);
    assert_eq!(
        fs::read_to_string(eval_out.join("report.json")).unwrap(),
        fs::read_to_string(a[0].join("report.json")).unwrap()
    );

    let truth = cfg.parent().unwrap().join("ground_truth.csv");
    let o = gal(&["--out-dir", s(&eval_out), "evaluate", "--predictions", s(&preds), "--truth", s(&truth), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let reports = gal::evaluation::parse_report_json(&stdout(&o)).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].n_days, 10);
}

#[test]
fn dumped_config_reproduces_the_run() {
    let (t, cfg) = workspace();
    build_corpus(&cfg);
    let first = t.path().join("first");
    assert_eq!(code(&gal(&["--config", s(&cfg), "--out-dir", s(&first), "run", "--fire", "SYN-VALLEY"])), 0);
    let dir = run_dirs(&first).pop().unwrap();
    let dumped = dir.join("config.toml");
    let again = t.path().join("again");
    let o = gal(&["--config", s(&dumped), "--out-dir", s(&again), "run", "--fire", "SYN-VALLEY"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir2 = run_dirs(&again).pop().unwrap();
    for f in ["recommendations.csv", "audit.jsonl", "report.csv", "config.toml"] {
        assert_eq!(fs::read(dir.join(f)).unwrap(), fs::read(dir2.join(f)).unwrap(), "{f} differs");
    }
    // same configuration hash in the directory name
    let tail = |p: &Path| p.file_name().unwrap().to_str().unwrap().rsplit('-').next().unwrap().to_string();
    assert_eq!(tail(&dir), tail(&dir2));
}

#[test]
fn evaluate_rejects_predictions_for_unknown_fires() {
    let t = tempfile::tempdir().unwrap();
    let preds = t.path().join("p.csv");
    fs::write(&preds, "fire_id,date,personnel,daily_budget_usd\nGHOST,2020-08-16,10,100000\n").unwrap();
    let truth = synthetic_dir().join("ground_truth.csv");
    let o = gal(&["--out-dir", s(&t.path().join("o")), "evaluate", "--predictions", s(&preds), "--truth", s(&truth)]);
    assert_eq!(code(&o), 2);
}
