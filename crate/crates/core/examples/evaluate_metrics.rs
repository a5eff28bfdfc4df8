//! Score predictions against ground truth and emit reports.

use chrono::NaiveDate;
use gal::evaluation::{emit_report, evaluate_event, mae, rmse, DayPrediction, ReportFormat};
use gal::ingest::GroundTruthDay;

fn main() -> gal::Result<()> {
    println!("MAE {:.3}, RMSE {:.3}", mae(&[1.0, 2.0, 6.0], &[1.0, 3.0, 3.0])?, rmse(&[1.0, 2.0, 6.0], &[1.0, 3.0, 3.0])?);

    let day = |d| NaiveDate::from_ymd_opt(2020, 8, d).unwrap();
    let truth: Vec<GroundTruthDay> = [(16, 100, 0.50), (17, 140, 0.70), (18, 180, 0.95)]
        .into_iter()
        .map(|(d, personnel, daily_cost)| GroundTruthDay { fire_id: "DEMO".into(), date: day(d), personnel, daily_cost })
        .collect();
    let preds: Vec<DayPrediction> = [(16, 110.0, 0.45), (17, 130.0, 0.80), (18, 200.0, 0.90)]
        .into_iter()
        .map(|(d, personnel, cost_musd)| DayPrediction { date: day(d), personnel, cost_musd })
        .collect();

    let report = evaluate_event("DEMO", &preds, &truth)?;
    for e in &report.per_day {
        println!("{}: personnel off by {}, cost off by {:.2} M USD", e.date, e.abs_err_personnel, e.abs_err_cost_musd);
    }
    print!("{}", emit_report(&[report.clone()], ReportFormat::Csv)?);
    println!("{}", emit_report(&[report], ReportFormat::Json)?);

    // A truth day with no prediction is reported, not skipped.
    match evaluate_event("DEMO", &preds[..2], &truth) {
        Err(e) => println!("misaligned: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
