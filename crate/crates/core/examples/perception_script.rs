//! Render the text an agent sees for a day-1 and a later day.

use std::path::PathBuf;

use gal::config::RunConfig;
use gal::perception::render_script;
use gal::pipeline::{build_event_contexts, Layers};

fn main() -> gal::Result<()> {
    let cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let layers = Layers::load(&cfg)?;
    let contexts = build_event_contexts(&cfg, &layers, cfg.fire("SYN-VALLEY")?)?;

    let first = render_script(&contexts[0], cfg.params.top_k_clusters)?;
    println!("{}", first.text);

    // Day 8 of this fire has no detections; the script still renders.
    let quiet = contexts.iter().find(|c| c.is_quiet()).expect("synthetic fire has a quiet day");
    let later = render_script(quiet, cfg.params.top_k_clusters)?;
    println!("{}", later.text);
    println!("clusters shown: {}, fields rendered as NA: {:?}", later.k_used, later.na_fields);
    Ok(())
}
