//! Build the historical corpus and retrieve analog days for a query.

use std::path::PathBuf;

use gal::analogs::{analog_bounds, vectorize_context, Slack};
use gal::config::RunConfig;
use gal::pipeline::{build_event_contexts, corpus_build, Layers};

fn main() -> gal::Result<()> {
    let mut cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let scratch = tempfile::tempdir().expect("temp dir");
    cfg.data.corpus_dir = scratch.path().join("corpus");
    let layers = Layers::load(&cfg)?;

    let corpus = corpus_build(&cfg, &layers)?;
    println!("corpus: {} days, hash {}", corpus.days.len(), gal::analogs::content_hash(&cfg.data.corpus_dir)?);

    let contexts = build_event_contexts(&cfg, &layers, cfg.fire("SYN-COAST")?)?;
    for i in [0, 4, 9] {
        let ctx = &contexts[i];
        let q = vectorize_context(ctx, &contexts[..i], &corpus.stats)?;
        let analogs = corpus.retrieve(&q, cfg.params.analog_k, &cfg.params.weights)?;
        println!("{} {}:", ctx.fire_id, ctx.date);
        for a in &analogs {
            println!("  {} {} sim {:.4} personnel {} cost ${:.2}M", a.fire_id, a.date, a.similarity, a.personnel, a.daily_cost_musd);
        }
        let b = analog_bounds(&analogs, Slack::default());
        println!("  bounds: personnel {:?}, cost {:?}", b.personnel, b.cost_musd);
    }
    Ok(())
}
