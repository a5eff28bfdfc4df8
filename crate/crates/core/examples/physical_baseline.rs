//! Fit the fireline-intensity baseline on the training fires and compare it
//! with persistence on the evaluation fires.

use std::path::PathBuf;

use gal::baselines::{flame_length, fireline_intensity, nwcg_class, persistence_predict, PhysicalModel, PhysicalParams};
use gal::config::{Role, RunConfig};
use gal::evaluation::{evaluate_event, DayPrediction};
use gal::pipeline::{build_event_contexts, load_ground_truth, Layers};

fn main() -> gal::Result<()> {
    let cfg = RunConfig::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/config.toml"))?;
    let layers = Layers::load(&cfg)?;
    let truth = load_ground_truth(&cfg)?.expect("bundled data has ground truth");

    let i = fireline_intensity(400.0, 6000.0, PhysicalParams::default().kappa)?;
    let fl = flame_length(i);
    println!("400 MW over 6 km of perimeter: {i:.0} kW/m, flame {fl:.2} m, class {}", nwcg_class(fl));

    let mut train = Vec::new();
    for f in cfg.fires_with_role(Role::Train) {
        for ctx in build_event_contexts(&cfg, &layers, f)? {
            let t = truth[&f.id].iter().find(|t| t.date == ctx.date).expect("truth for every day").clone();
            train.push((ctx.snapshot, t));
        }
    }
    let model = PhysicalModel::fit(&train, PhysicalParams::default())?;
    println!(
        "personnel = {:.3} * score + {:.1}; cost = {:.6} * score + {:.3} M USD",
        model.calib_personnel.slope, model.calib_personnel.intercept, model.calib_cost.slope, model.calib_cost.intercept
    );

    for f in cfg.fires_with_role(Role::Eval) {
        let gt = &truth[&f.id];
        let contexts = build_event_contexts(&cfg, &layers, f)?;
        let physical: Vec<DayPrediction> = contexts
            .iter()
            .map(|c| {
                let (personnel, cost_musd) = model.predict(&c.snapshot);
                DayPrediction { date: c.date, personnel, cost_musd }
            })
            .collect();
        // Persistence has nothing to repeat on the first day, so both are
        // scored from day 2 on.
        let mut persistence = Vec::new();
        for k in 1..gt.len() {
            let (personnel, cost_musd) = persistence_predict(&gt[..k])?;
            persistence.push(DayPrediction { date: gt[k].date, personnel, cost_musd });
        }
        let later = &gt[1..];
        let p = evaluate_event(&f.id, &physical, later)?;
        let q = evaluate_event(&f.id, &persistence, later)?;
        println!(
            "{}: physical MAE {:.1} people / {:.3} M USD; persistence MAE {:.1} people / {:.3} M USD",
            f.id, p.mae_personnel, p.mae_cost, q.mae_personnel, q.mae_cost
        );
    }
    Ok(())
}
