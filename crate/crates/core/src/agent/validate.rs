//! Strict output validation. Checks run in a fixed order (key sets, then
//! units, then value types and enums, then ranges) and stop at the first
//! violation.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Indicators, Level, Rationales, Recommendation};
use crate::analogs::Bounds;
use crate::units::usd_to_musd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    NotJson,
    SchemaViolation,
    UnitViolation,
    RangeViolation,
}

impl FailureCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::NotJson => "not_json",
            FailureCategory::SchemaViolation => "schema_violation",
            FailureCategory::UnitViolation => "unit_violation",
            FailureCategory::RangeViolation => "range_violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub category: FailureCategory,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.category.as_str(), self.path, self.message)
    }
}

const TOP_KEYS: [&str; 4] = [
    "analysis_reasoning",
    "resource_requirements",
    "confidence",
    "intermediate_indicators",
];
pub const REASONING_KEYS: [&str; 4] = [
    "situation_comparison",
    "personnel_reasoning",
    "budget_reasoning",
    "overall_reasoning",
];
const RESOURCE_KEYS: [&str; 2] = ["daily_personnel", "daily_budget"];
const QUANTITY_KEYS: [&str; 2] = ["value", "unit"];
const CONFIDENCE_KEYS: [&str; 1] = ["score"];
pub const INDICATOR_KEYS: [&str; 6] = [
    "spread_containment_difficulty",
    "resource_access_deployment",
    "weather_escalation_risk",
    "terrain_operational_complexity",
    "population_exposure_density",
    "fire_station_coverage",
];

fn fail(category: FailureCategory, path: impl Into<String>, message: impl Into<String>) -> ValidationFailure {
    ValidationFailure { category, path: path.into(), message: message.into() }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ValidationFailure {
    fail(FailureCategory::SchemaViolation, path, message)
}

fn object<'a>(v: &'a Value, path: &str, keys: &[&str]) -> Result<&'a Map<String, Value>, ValidationFailure> {
    let Value::Object(m) = v else {
        return Err(schema(path, "expected an object"));
    };
    let join = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    for k in keys {
        if !m.contains_key(*k) {
            return Err(schema(join(k), "missing key"));
        }
    }
    let mut extra: Vec<&String> = m.keys().filter(|k| !keys.contains(&k.as_str())).collect();
    extra.sort();
    if let Some(k) = extra.first() {
        return Err(schema(join(k), "unexpected key"));
    }
    Ok(m)
}

/// Strip surrounding whitespace and a single markdown code fence.
fn unfence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        if let Some(body) = rest.trim_end().strip_suffix("```") {
            return body.trim();
        }
    }
    t
}

fn integer(v: &Value, path: &str) -> Result<i64, ValidationFailure> {
    match v {
        Value::Number(n) if n.is_i64() => Ok(n.as_i64().unwrap()),
        Value::Number(n) if n.is_u64() => Err(fail(FailureCategory::RangeViolation, path, "integer too large")),
        _ => Err(schema(path, format!("expected an integer, found {v}"))),
    }
}

fn level(v: &Value, path: &str) -> Result<Level, ValidationFailure> {
    v.as_str()
        .and_then(Level::parse)
        .ok_or_else(|| schema(path, format!("expected one of minimal|low|moderate|high|critical, found {v}")))
}

fn text(v: &Value, path: &str) -> Result<String, ValidationFailure> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, "expected a string"))
}

fn within(path: &str, x: f64, range: Option<(f64, f64)>, what: &str) -> Result<(), ValidationFailure> {
    if let Some((lo, hi)) = range {
        if x < lo || x > hi {
            return Err(fail(
                FailureCategory::RangeViolation,
                path,
                format!("{what} {x} outside soft bounds [{lo}, {hi}]"),
            ));
        }
    }
    Ok(())
}

pub fn validate_output(raw: &str, bounds: &Bounds) -> Result<Recommendation, ValidationFailure> {
    let v: Value = serde_json::from_str(unfence(raw))
        .map_err(|e| fail(FailureCategory::NotJson, "$", e.to_string()))?;
    if !v.is_object() {
        return Err(fail(FailureCategory::NotJson, "$", "expected a single JSON object"));
    }

    // Key sets.
    let top = object(&v, "", &TOP_KEYS)?;
    let reasoning = object(&top["analysis_reasoning"], "analysis_reasoning", &REASONING_KEYS)?;
    let res = object(&top["resource_requirements"], "resource_requirements", &RESOURCE_KEYS)?;
    let pers = object(&res["daily_personnel"], "resource_requirements.daily_personnel", &QUANTITY_KEYS)?;
    let budget = object(&res["daily_budget"], "resource_requirements.daily_budget", &QUANTITY_KEYS)?;
    let conf = object(&top["confidence"], "confidence", &CONFIDENCE_KEYS)?;
    let ind = object(&top["intermediate_indicators"], "intermediate_indicators", &INDICATOR_KEYS)?;

    // Units.
    for (q, unit, path) in [
        (pers, "people", "resource_requirements.daily_personnel.unit"),
        (budget, "USD", "resource_requirements.daily_budget.unit"),
    ] {
        if q["unit"].as_str() != Some(unit) {
            return Err(fail(
                FailureCategory::UnitViolation,
                path,
                format!("expected \"{unit}\", found {}", q["unit"]),
            ));
        }
    }

    // Types and enums.
    let mut rationale = REASONING_KEYS
        .iter()
        .map(|k| text(&reasoning[*k], &format!("analysis_reasoning.{k}")));
    let rationales = Rationales {
        situation_comparison: rationale.next().unwrap()?,
        personnel_reasoning: rationale.next().unwrap()?,
        budget_reasoning: rationale.next().unwrap()?,
        overall_reasoning: rationale.next().unwrap()?,
    };
    let p_path = "resource_requirements.daily_personnel.value";
    let b_path = "resource_requirements.daily_budget.value";
    let c_path = "confidence.score";
    let personnel = integer(&pers["value"], p_path)?;
    let budget_usd = integer(&budget["value"], b_path)?;
    let confidence = integer(&conf["score"], c_path)?;
    let mut levels = INDICATOR_KEYS
        .iter()
        .map(|k| level(&ind[*k], &format!("intermediate_indicators.{k}")));
    let indicators = Indicators {
        spread_containment_difficulty: levels.next().unwrap()?,
        resource_access_deployment: levels.next().unwrap()?,
        weather_escalation_risk: levels.next().unwrap()?,
        terrain_operational_complexity: levels.next().unwrap()?,
        population_exposure_density: levels.next().unwrap()?,
        fire_station_coverage: levels.next().unwrap()?,
    };

    // Ranges.
    if personnel < 0 {
        return Err(fail(FailureCategory::RangeViolation, p_path, "must be non-negative"));
    }
    if budget_usd < 0 {
        return Err(fail(FailureCategory::RangeViolation, b_path, "must be non-negative"));
    }
    if !(1..=5).contains(&confidence) {
        return Err(fail(FailureCategory::RangeViolation, c_path, format!("{confidence} outside 1-5")));
    }
    within(p_path, personnel as f64, bounds.personnel, "personnel")?;
    within(b_path, usd_to_musd(budget_usd as f64), bounds.cost_musd, "budget (million USD)")?;

    Ok(Recommendation {
        personnel: personnel as u64,
        daily_budget_usd: budget_usd as u64,
        confidence: confidence as u8,
        indicators,
        rationales,
    })
}
