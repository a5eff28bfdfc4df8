//! Corpus build, mock-client run over the evaluation fires, and the files a
//! run leaves behind.

use std::path::PathBuf;

use gal::agent::MockClient;
use gal::analogs::Corpus;
use gal::config::{Role, RunConfig};
use gal::pipeline::{corpus_build, run_fires, Layers};

fn main() -> gal::Result<()> {
    let mut cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let scratch = tempfile::tempdir().expect("temp dir");
    cfg.data.corpus_dir = scratch.path().join("corpus");
    let layers = Layers::load(&cfg)?;

    corpus_build(&cfg, &layers)?;
    let corpus = Corpus::load(&cfg.data.corpus_dir)?;
    let ids: Vec<String> = cfg.fires_with_role(Role::Eval).iter().map(|f| f.id.clone()).collect();
    let out = scratch.path().join("runs");
    let runs = run_fires(&cfg, &layers, &corpus, &MockClient, &ids, &out, "example")?;

    for r in &runs {
        println!("{} -> {}", r.fire_id, r.dir.display());
        for o in &r.outcomes {
            let rec = o.recommendation();
            println!(
                "  {} {:<11} {:>5} people  ${:>9}  confidence {}{}",
                o.audit.date,
                o.audit.mode,
                rec.personnel,
                rec.daily_budget_usd,
                rec.confidence,
                if o.audit.fallback { "  (fallback)" } else { "" }
            );
        }
        if let Some(rep) = &r.report {
            println!("  MAE {:.1} people, {:.3} M USD", rep.mae_personnel, rep.mae_cost);
        }
        let mut files: Vec<String> = std::fs::read_dir(&r.dir)
            .expect("run dir")
            .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
            .collect();
        files.sort();
        println!("  files: {}", files.join(", "));
    }
    Ok(())
}
