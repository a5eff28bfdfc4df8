//! Regenerate the bundled synthetic dataset.
//!
//! cargo run --example generate_synthetic -- [DIR] [SEED]

use std::path::PathBuf;

use gal::synthetic::{generate, DEFAULT_SEED};

fn main() -> gal::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    let seed = args.next().map(|s| s.parse().expect("seed must be an integer")).unwrap_or(DEFAULT_SEED);
    generate(&dir, seed)?;
    println!("synthetic dataset (seed {seed}) written to {}", dir.display());
    Ok(())
}
