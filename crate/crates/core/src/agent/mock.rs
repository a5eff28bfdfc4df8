//! Deterministic rule-based client. It reads numbers back out of the prompt
//! and answers with a schema-valid document.
//!
//! Formula, with `P` fire points, `f = 0.8 + 0.4 * P / (P + 25)`:
//! - base personnel and budget are the analog medians, or `40 + 2P` people
//!   and `25000 * (1 + clusters)` USD when no analogs are listed;
//! - the estimate is `base * f`, averaged 50/50 with yesterday's value in
//!   incremental prompts;
//! - the result is clamped to the analog min/max and rounded.
//!
//! Indicators come from fixed thresholds on points, wind, spread potential,
//! population, nearest station distance and cluster count.

use serde_json::json;

use super::client::CompletionClient;
use super::Level;
use crate::consolidation::median;
use crate::error::Result;

#[derive(Debug, Clone, Copy, Default)]
pub struct MockClient;

/// First number after `key` in `text`.
pub fn number_after(text: &str, key: &str) -> Option<f64> {
    let i = text.find(key)? + key.len();
    let rest = text[i..].trim_start_matches([' ', '$']);
    let end = rest
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
        .unwrap_or(rest.len());
    rest[..end].parse().ok()
}

fn rag_values(user: &str) -> (Vec<f64>, Vec<f64>) {
    let mut pers = Vec::new();
    let mut cost = Vec::new();
    for line in user.lines().filter(|l| l.starts_with("- [") && l.contains("sim=")) {
        if let (Some(p), Some(c)) = (number_after(line, "Personnel="), number_after(line, "Daily_Budget=")) {
            pers.push(p);
            cost.push(c);
        }
    }
    (pers, cost)
}

fn level(x: Option<f64>, cuts: [f64; 4]) -> Level {
    let Some(x) = x else { return Level::Moderate };
    let i = cuts.iter().take_while(|&&c| x >= c).count();
    Level::ALL[i]
}

fn sorted_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    median(&v)
}

fn clamp_to(x: f64, vals: &[f64]) -> f64 {
    if vals.is_empty() {
        return x.max(0.0);
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    x.clamp(lo, hi)
}

impl CompletionClient for MockClient {
    fn complete(&self, _system: &str, user: &str) -> Result<String> {
        let points = number_after(user, "Total Fire Points:").unwrap_or(0.0);
        let clusters = number_after(user, "Num Clusters:").unwrap_or(0.0);
        let (ap, ac) = rag_values(user);
        let f = 0.8 + 0.4 * points / (points + 25.0);
        let (base_p, base_c) = if ap.is_empty() {
            (40.0 + 2.0 * points, 25_000.0 * (1.0 + clusters))
        } else {
            (sorted_median(ap.clone()), sorted_median(ac.clone()))
        };
        let mut p = base_p * f;
        let mut c = base_c * f;
        if let Some(pp) = number_after(user, "Previous personnel:") {
            p = 0.5 * pp + 0.5 * p;
        }
        if let Some(pc) = number_after(user, "Previous daily budget:") {
            c = 0.5 * pc + 0.5 * c;
        }
        let p = clamp_to(p, &ap).round() as i64;
        let c = clamp_to(c, &ac).round() as i64;
        let confidence = match ap.len() {
            0 => 2,
            1 | 2 => 3,
            _ => 4,
        };
        let wind = number_after(user, "Wind=");
        let spread = number_after(user, "spread_potential=");
        let pop = number_after(user, "Total Population Affected:");
        let nearest = number_after(user, "Nearest station:");
        let doc = json!({
            "analysis_reasoning": {
                "situation_comparison": format!("{points:.0} fire points in {clusters:.0} clusters today."),
                "personnel_reasoning": format!("Activity factor {f:.3} applied to a base of {base_p:.0} people."),
                "budget_reasoning": format!("Activity factor {f:.3} applied to a base of ${base_c:.0}."),
                "overall_reasoning": format!("Rule-based estimate from {} analog days.", ap.len()),
            },
            "resource_requirements": {
                "daily_personnel": {"value": p, "unit": "people"},
                "daily_budget": {"value": c, "unit": "USD"},
            },
            "confidence": {"score": confidence},
            "intermediate_indicators": {
                "spread_containment_difficulty": level(Some(points), [1.0, 10.0, 50.0, 150.0]).as_str(),
                "resource_access_deployment": level(Some(clusters), [1.0, 2.0, 4.0, 7.0]).as_str(),
                "weather_escalation_risk": level(wind, [2.0, 4.0, 6.0, 9.0]).as_str(),
                "terrain_operational_complexity": level(spread, [0.2, 0.4, 0.6, 0.8]).as_str(),
                "population_exposure_density": level(pop, [1.0, 1000.0, 10000.0, 100000.0]).as_str(),
                "fire_station_coverage": level(nearest, [1.0, 3.0, 6.0, 10.0]).as_str(),
            },
        });
        Ok(doc.to_string())
    }

    fn name(&self) -> String {
        "mock".into()
    }
}
