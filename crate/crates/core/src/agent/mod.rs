//! Prompted reasoning: prompt assembly, a pluggable completion client,
//! strict output validation and a bounded re-prompt loop.

pub mod client;
pub mod mock;
pub mod prompt;
pub mod validate;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use client::{CompletionClient, LiveClient, LiveSettings, RecordingClient, ReplayClient, ScriptedClient, Transcript};
pub use mock::MockClient;
pub use prompt::{build_day1_prompt, build_incremental_prompt, Cumulative, PromptPair, SYSTEM_PROMPT};
pub use validate::{validate_output, FailureCategory, ValidationFailure};

use crate::analogs::{analog_bounds, vectorize_context, AnalogRecord, Bounds, Corpus, Slack};
use crate::consolidation::{median, EventDayContext};
use crate::error::{Error, Result};
use crate::perception::render_script;
use crate::units::musd_to_usd;

pub const DEFAULT_MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Minimal,
    Low,
    Moderate,
    High,
    Critical,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::Minimal, Level::Low, Level::Moderate, Level::High, Level::Critical];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Minimal => "minimal",
            Level::Low => "low",
            Level::Moderate => "moderate",
            Level::High => "high",
            Level::Critical => "critical",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        Level::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicators {
    pub spread_containment_difficulty: Level,
    pub resource_access_deployment: Level,
    pub weather_escalation_risk: Level,
    pub terrain_operational_complexity: Level,
    pub population_exposure_density: Level,
    pub fire_station_coverage: Level,
}

impl Indicators {
    pub fn uniform(l: Level) -> Self {
        Indicators {
            spread_containment_difficulty: l,
            resource_access_deployment: l,
            weather_escalation_risk: l,
            terrain_operational_complexity: l,
            population_exposure_density: l,
            fire_station_coverage: l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationales {
    pub situation_comparison: String,
    pub personnel_reasoning: String,
    pub budget_reasoning: String,
    pub overall_reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub personnel: u64,
    pub daily_budget_usd: u64,
    pub confidence: u8,
    pub indicators: Indicators,
    pub rationales: Rationales,
}

impl Recommendation {
    /// The document in the wire schema.
    pub fn to_wire(&self) -> Value {
        let i = &self.indicators;
        let r = &self.rationales;
        json!({
            "analysis_reasoning": {
                "situation_comparison": r.situation_comparison,
                "personnel_reasoning": r.personnel_reasoning,
                "budget_reasoning": r.budget_reasoning,
                "overall_reasoning": r.overall_reasoning,
            },
            "resource_requirements": {
                "daily_personnel": {"value": self.personnel, "unit": "people"},
                "daily_budget": {"value": self.daily_budget_usd, "unit": "USD"},
            },
            "confidence": {"score": self.confidence},
            "intermediate_indicators": {
                "spread_containment_difficulty": i.spread_containment_difficulty.as_str(),
                "resource_access_deployment": i.resource_access_deployment.as_str(),
                "weather_escalation_risk": i.weather_escalation_risk.as_str(),
                "terrain_operational_complexity": i.terrain_operational_complexity.as_str(),
                "population_exposure_density": i.population_exposure_density.as_str(),
                "fire_station_coverage": i.fire_station_coverage.as_str(),
            },
        })
    }
}

const FALLBACK_TEXT: &str = "Validated model output unavailable; analog median used.";

/// Median analog personnel and cost, confidence 1, every indicator moderate.
pub fn fallback_recommendation(analogs: &[AnalogRecord]) -> Result<Recommendation> {
    if analogs.is_empty() {
        return Err(Error::NoFallback { attempts: 0 });
    }
    let med = |f: fn(&AnalogRecord) -> f64| {
        let mut v: Vec<f64> = analogs.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        median(&v)
    };
    Ok(Recommendation {
        personnel: med(|a| a.personnel).round().max(0.0) as u64,
        daily_budget_usd: musd_to_usd(med(|a| a.daily_cost_musd)).round().max(0.0) as u64,
        confidence: 1,
        indicators: Indicators::uniform(Level::Moderate),
        rationales: Rationales {
            situation_comparison: FALLBACK_TEXT.into(),
            personnel_reasoning: FALLBACK_TEXT.into(),
            budget_reasoning: FALLBACK_TEXT.into(),
            overall_reasoning: FALLBACK_TEXT.into(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopOutcome {
    pub recommendation: Recommendation,
    pub responses: Vec<String>,
    pub failures: Vec<ValidationFailure>,
    pub fallback: bool,
}

/// Call the client up to `max_attempts` times, appending a correction block
/// after each rejected answer, then fall back to the analog median.
pub fn reprompt_loop(
    prompt: &PromptPair,
    client: &dyn CompletionClient,
    bounds: &Bounds,
    max_attempts: usize,
    analogs: &[AnalogRecord],
) -> Result<LoopOutcome> {
    if max_attempts == 0 {
        return Err(Error::Precondition("max_attempts must be at least 1".into()));
    }
    let mut responses = Vec::new();
    let mut failures = Vec::new();
    let mut current = prompt.clone();
    for attempt in 1..=max_attempts {
        let raw = client.complete(&current.system_text, &current.user_text)?;
        let verdict = validate_output(&raw, bounds);
        responses.push(raw);
        match verdict {
            Ok(recommendation) => {
                return Ok(LoopOutcome { recommendation, responses, failures, fallback: false });
            }
            Err(f) => {
                current = prompt::with_correction(prompt, &f, attempt + 1);
                failures.push(f);
            }
        }
    }
    let recommendation = fallback_recommendation(analogs).map_err(|_| Error::NoFallback { attempts: max_attempts })?;
    Ok(LoopOutcome { recommendation, responses, failures, fallback: true })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub top_k: usize,
    pub analog_k: usize,
    pub weights: Vec<f64>,
    pub slack: Slack,
    pub max_attempts: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            top_k: crate::perception::DEFAULT_TOP_K,
            analog_k: crate::analogs::DEFAULT_ANALOG_K,
            weights: crate::analogs::uniform_weights(),
            slack: Slack::default(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

pub enum Mode<'a> {
    Day1,
    Incremental { prev: &'a Recommendation, cumulative: &'a Cumulative },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub fire_id: String,
    pub date: NaiveDate,
    pub mode: String,
    pub client: String,
    pub prompt_hash: String,
    pub analogs: Vec<AnalogRecord>,
    pub bounds: Bounds,
    pub responses: Vec<String>,
    pub failures: Vec<ValidationFailure>,
    pub recommendation: Recommendation,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayOutcome {
    pub prompt: PromptPair,
    pub audit: AuditRecord,
}

impl DayOutcome {
    pub fn recommendation(&self) -> &Recommendation {
        &self.audit.recommendation
    }
}

/// Script, analogs, prompt, then the validated loop. `history` holds this
/// event's earlier contexts, oldest first.
pub fn recommend_day(
    ctx: &EventDayContext,
    history: &[EventDayContext],
    corpus: &Corpus,
    client: &dyn CompletionClient,
    mode: Mode<'_>,
    params: &AgentParams,
) -> Result<DayOutcome> {
    let script = render_script(ctx, params.top_k)?;
    let query = vectorize_context(ctx, history, &corpus.stats)?;
    let analogs = corpus.retrieve(&query, params.analog_k, &params.weights)?;
    let bounds = analog_bounds(&analogs, params.slack);
    let (prompt, mode_name) = match mode {
        Mode::Day1 => (build_day1_prompt(&script, &analogs), "day1"),
        Mode::Incremental { prev, cumulative } => {
            let anchors = ctx.anchors.as_ref().ok_or_else(|| {
                Error::Precondition(format!("incremental mode on {} needs temporal anchors", ctx.date))
            })?;
            (build_incremental_prompt(&script, &analogs, prev, anchors, cumulative), "incremental")
        }
    };
    let out = reprompt_loop(&prompt, client, &bounds, params.max_attempts, &analogs)?;
    Ok(DayOutcome {
        audit: AuditRecord {
            fire_id: ctx.fire_id.clone(),
            date: ctx.date,
            mode: mode_name.into(),
            client: client.name(),
            prompt_hash: prompt.hash(),
            analogs,
            bounds,
            responses: out.responses,
            failures: out.failures,
            recommendation: out.recommendation,
            fallback: out.fallback,
        },
        prompt,
    })
}
