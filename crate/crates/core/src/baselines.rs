//! Reference baselines: a physical pathway from FRP to a calibrated workload
//! score, and day-over-day persistence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consolidation::GlobalSnapshot;
use crate::error::{Error, Result};
use crate::ingest::GroundTruthDay;

/// FRP observes roughly a tenth of total fire power.
pub const DEFAULT_KAPPA: f64 = 10.0;
pub const BYRAM_COEF: f64 = 0.0775;
pub const BYRAM_EXP: f64 = 0.46;
pub const CLUSTER_ADJUSTMENT: f64 = 0.1;
/// NWCG flame-length class boundaries: 4, 8 and 11 ft.
pub const NWCG_THRESHOLDS_M: [f64; 3] = [1.2192, 2.4384, 3.3528];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    pub kappa: f64,
    pub byram_coef: f64,
    pub byram_exp: f64,
    pub cluster_adjustment: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            kappa: DEFAULT_KAPPA,
            byram_coef: BYRAM_COEF,
            byram_exp: BYRAM_EXP,
            cluster_adjustment: CLUSTER_ADJUSTMENT,
        }
    }
}

/// kW/m from total FRP (MW) spread over the perimeter.
pub fn fireline_intensity(total_frp_mw: f64, perimeter_m: f64, kappa: f64) -> Result<f64> {
    if !(perimeter_m > 0.0) {
        return Err(Error::Precondition(format!("perimeter must be positive, got {perimeter_m} m")));
    }
    Ok(total_frp_mw * 1000.0 * kappa / perimeter_m)
}

/// Byram: L = 0.0775 * I^0.46, meters.
pub fn flame_length(intensity_kw_m: f64) -> f64 {
    flame_length_with(intensity_kw_m, BYRAM_COEF, BYRAM_EXP)
}

pub fn flame_length_with(intensity_kw_m: f64, coef: f64, exp: f64) -> f64 {
    if intensity_kw_m <= 0.0 {
        return 0.0;
    }
    coef * intensity_kw_m.powf(exp)
}

/// Class 1-4; a length on a boundary takes the higher class.
pub fn nwcg_class(flame_length_m: f64) -> u8 {
    1 + NWCG_THRESHOLDS_M.iter().filter(|&&t| flame_length_m >= t).count() as u8
}

pub fn workload_score(perimeter_m: f64, class: u8, n_clusters: usize) -> f64 {
    workload_score_with(perimeter_m, class, n_clusters, CLUSTER_ADJUSTMENT)
}

pub fn workload_score_with(perimeter_m: f64, class: u8, n_clusters: usize, adjustment: f64) -> f64 {
    if n_clusters == 0 {
        return 0.0;
    }
    perimeter_m / 1000.0 * class as f64 * (1.0 + adjustment * (n_clusters as f64 - 1.0))
}

/// Workload score for one day's snapshot; quiet days score 0.
pub fn snapshot_score(s: &GlobalSnapshot, p: &PhysicalParams) -> f64 {
    if s.n_clusters == 0 || s.total_perimeter_m <= 0.0 {
        return 0.0;
    }
    let i = fireline_intensity(s.total_frp, s.total_perimeter_m, p.kappa).expect("perimeter checked");
    let class = nwcg_class(flame_length_with(i, p.byram_coef, p.byram_exp));
    workload_score_with(s.total_perimeter_m, class, s.n_clusters, p.cluster_adjustment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub slope: f64,
    pub intercept: f64,
}

impl Linear {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares, centered for stability.
pub fn calibrate_linear(scores: &[f64], targets: &[f64]) -> Result<Linear> {
    if scores.len() != targets.len() {
        return Err(Error::Dimension { expected: scores.len(), found: targets.len() });
    }
    if scores.len() < 2 {
        return Err(Error::Precondition("calibration needs at least two days".into()));
    }
    let n = scores.len() as f64;
    let mx = scores.iter().sum::<f64>() / n;
    let my = targets.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in scores.iter().zip(targets) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("workload scores are constant; slope is undefined".into()));
    }
    let slope = sxy / sxx;
    Ok(Linear { slope, intercept: my - slope * mx })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalModel {
    pub params: PhysicalParams,
    pub calib_personnel: Linear,
    /// Million USD per day.
    pub calib_cost: Linear,
}

impl PhysicalModel {
    /// Fit on (snapshot, truth) training days.
    pub fn fit(days: &[(GlobalSnapshot, GroundTruthDay)], params: PhysicalParams) -> Result<Self> {
        let scores: Vec<f64> = days.iter().map(|(s, _)| snapshot_score(s, &params)).collect();
        Self::fit_scores(&scores, days.iter().map(|(_, t)| t), params)
    }

    pub fn fit_scores<'a>(
        scores: &[f64],
        truth: impl Iterator<Item = &'a GroundTruthDay>,
        params: PhysicalParams,
    ) -> Result<Self> {
        let (pers, cost): (Vec<f64>, Vec<f64>) = truth.map(|t| (t.personnel as f64, t.daily_cost)).unzip();
        Ok(PhysicalModel {
            params,
            calib_personnel: calibrate_linear(scores, &pers)?,
            calib_cost: calibrate_linear(scores, &cost)?,
        })
    }

    /// (personnel, cost in million USD), each clamped at 0.
    pub fn predict_score(&self, score: f64) -> (f64, f64) {
        (
            self.calib_personnel.eval(score).max(0.0),
            self.calib_cost.eval(score).max(0.0),
        )
    }

    pub fn predict(&self, s: &GlobalSnapshot) -> (f64, f64) {
        self.predict_score(snapshot_score(s, &self.params))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = crate::canonical::to_canonical_string_exact(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Yesterday's (personnel, cost in million USD).
pub fn persistence_predict(history: &[GroundTruthDay]) -> Result<(f64, f64)> {
    history
        .last()
        .map(|d| (d.personnel as f64, d.daily_cost))
        .ok_or_else(|| Error::Precondition("persistence needs at least one prior day".into()))
}
