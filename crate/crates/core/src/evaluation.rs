//! Per-event MAE/RMSE scoring and report emission.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::agent::Recommendation;
use crate::error::{Error, Result};
use crate::ingest::GroundTruthDay;
use crate::units::usd_to_musd;

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension { expected: truth.len(), found: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::Precondition("metrics need at least one day".into()));
    }
    Ok(())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    Ok(mse.sqrt())
}

/// One day's prediction with cost already in million USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayPrediction {
    pub date: NaiveDate,
    pub personnel: f64,
    pub cost_musd: f64,
}

impl DayPrediction {
    pub fn from_recommendation(date: NaiveDate, r: &Recommendation) -> Self {
        DayPrediction {
            date,
            personnel: r.personnel as f64,
            cost_musd: usd_to_musd(r.daily_budget_usd as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayError {
    pub date: NaiveDate,
    pub pred_personnel: f64,
    pub true_personnel: f64,
    pub abs_err_personnel: f64,
    pub pred_cost_musd: f64,
    pub true_cost_musd: f64,
    pub abs_err_cost_musd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub fire_id: String,
    pub n_days: usize,
    pub mae_personnel: f64,
    pub rmse_personnel: f64,
    /// Million USD.
    pub mae_cost: f64,
    pub rmse_cost: f64,
    pub per_day: Vec<DayError>,
}

/// Score every truth day. A truth day without a prediction is an error;
/// predictions for other dates are ignored.
pub fn evaluate_event(fire_id: &str, predictions: &[DayPrediction], truth: &[GroundTruthDay]) -> Result<EventReport> {
    let by_date: BTreeMap<NaiveDate, &DayPrediction> = predictions.iter().map(|p| (p.date, p)).collect();
    let mut days: Vec<&GroundTruthDay> = truth.iter().collect();
    days.sort_by_key(|d| d.date);
    let mut per_day = Vec::with_capacity(days.len());
    for t in days {
        let p = by_date
            .get(&t.date)
            .ok_or_else(|| Error::Alignment(format!("{fire_id}: no prediction for {}", t.date)))?;
        let tp = t.personnel as f64;
        per_day.push(DayError {
            date: t.date,
            pred_personnel: p.personnel,
            true_personnel: tp,
            abs_err_personnel: (p.personnel - tp).abs(),
            pred_cost_musd: p.cost_musd,
            true_cost_musd: t.daily_cost,
            abs_err_cost_musd: (p.cost_musd - t.daily_cost).abs(),
        });
    }
    let col = |f: fn(&DayError) -> f64| per_day.iter().map(f).collect::<Vec<f64>>();
    let (pp, tp) = (col(|d| d.pred_personnel), col(|d| d.true_personnel));
    let (pc, tc) = (col(|d| d.pred_cost_musd), col(|d| d.true_cost_musd));
    Ok(EventReport {
        fire_id: fire_id.to_string(),
        n_days: per_day.len(),
        mae_personnel: mae(&pp, &tp)?,
        rmse_personnel: rmse(&pp, &tp)?,
        mae_cost: mae(&pc, &tc)?,
        rmse_cost: rmse(&pc, &tc)?,
        per_day,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn sorted(reports: &[EventReport]) -> Vec<&EventReport> {
    let mut v: Vec<&EventReport> = reports.iter().collect();
    v.sort_by(|a, b| a.fire_id.cmp(&b.fire_id));
    v
}

/// CSV rows `fire_id,target,n_days,mae,rmse` (targets `personnel` and
/// `cost_musd`), or a JSON array with exact numbers; both sorted by fire.
pub fn emit_report(reports: &[EventReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(crate::canonical::to_canonical_string_exact(&sorted(reports))? + "\n"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Format(e.to_string());
            w.write_record(["fire_id", "target", "n_days", "mae", "rmse"]).map_err(csv_err)?;
            for r in sorted(reports) {
                for (target, m, s) in [
                    ("personnel", r.mae_personnel, r.rmse_personnel),
                    ("cost_musd", r.mae_cost, r.rmse_cost),
                ] {
                    w.write_record([
                        r.fire_id.clone(),
                        target.to_string(),
                        r.n_days.to_string(),
                        format!("{m:.4}"),
                        format!("{s:.4}"),
                    ])
                    .map_err(csv_err)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

pub fn parse_report_json(s: &str) -> Result<Vec<EventReport>> {
    Ok(serde_json::from_str(s)?)
}

/// Prediction CSV: `fire_id,date,personnel,daily_budget_usd`.
pub fn parse_predictions<R: Read>(r: R) -> Result<BTreeMap<String, Vec<DayPrediction>>> {
    #[derive(Deserialize)]
    struct Row {
        fire_id: String,
        date: NaiveDate,
        personnel: f64,
        daily_budget_usd: f64,
    }
    let mut out: BTreeMap<String, Vec<DayPrediction>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(r);
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Row { row: i + 1, message: e.to_string() })?;
        let days = out.entry(row.fire_id).or_default();
        if days.iter().any(|d| d.date == row.date) {
            return Err(Error::Conflict(format!("duplicate prediction for {} on row {}", row.date, i + 1)));
        }
        days.push(DayPrediction {
            date: row.date,
            personnel: row.personnel,
            cost_musd: usd_to_musd(row.daily_budget_usd),
        });
    }
    for days in out.values_mut() {
        days.sort_by_key(|d| d.date);
    }
    Ok(out)
}

pub fn write_predictions<W: Write>(w: W, fire_id: &str, recs: &[(NaiveDate, Recommendation)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    wr.write_record(["fire_id", "date", "personnel", "daily_budget_usd"]).map_err(csv_err)?;
    for (d, r) in recs {
        wr.write_record([
            fire_id.to_string(),
            d.to_string(),
            r.personnel.to_string(),
            r.daily_budget_usd.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(|e| Error::Format(e.to_string()))
}
