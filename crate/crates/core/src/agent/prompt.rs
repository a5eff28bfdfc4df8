//! Prompt assembly for the two reasoning modes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Recommendation;
use crate::analogs::{hex, AnalogRecord};
use crate::consolidation::{RollingStats, TemporalAnchors, Trend};
use crate::error::Result;
use crate::perception::{
    render_section, PerceptionScript, AFFECTED_AREAS, AFFECTED_AREAS_VS_YESTERDAY, CLUSTER_DETAILS,
    FIRE_OVERVIEW, FIRE_OVERVIEW_VS_YESTERDAY, ROLLING_METRICS,
};
use crate::units::musd_to_usd;

pub const PREVIOUS_ANALYSIS: &str = "Previous Analysis Context";
pub const CUMULATIVE_CONTEXT: &str = "Cumulative Context";
pub const HISTORICAL_CONTEXT: &str = "Historical Context (RAG)";

pub const SYSTEM_PROMPT: &str = r#"You are a wildfire analysis and resource management expert. You must return ONLY a valid JSON object following the exact schema provided below.

### Global Guidelines
- The task is to estimate TODAY's required daily_personnel and daily_budget.
- reasoning must explain how terrain, weather, fire intensity, population exposure, and resource accessibility shape your judgment, considering both current conditions and previous analysis context.
- daily_personnel is the total integer headcount assigned today (all crews/engines/aviation modules plus command/overhead/support).
- daily_budget is the **new cost incurred today only**, in USD.

### Resource Estimation Principles
- If the fire surges, remember resources are finite-do not assume cost and personnel can scale proportionally.
- When the fire eases, non-suppression needs persist (patrol, mop-up, rehab, logistics); budget and staffing may still be required.
- In "stable" periods, account for cumulative costs and crew fatigue-budgets and crews are not unlimited.
- No detected hotspots ≠ full extinguishment; avoid indiscriminate cuts and maintain a prudent baseline.
- Weigh these trade-offs and produce a balanced, defensible recommendation for today's personnel and today's spend. Include any key assumptions and risks.
- **Common pitfall**: after you've committed resources and the fire is "under control" but not yet stable, that actually signals under-resourcing-maintain or increase resources until true stability is confirmed.

### Analysis Approach
- Analyze the fire situation holistically, considering today's conditions and changes from the previous analysis.
- Provide updated estimates for required daily_personnel and daily_budget based on your professional judgment.

### Output Schema (STRICT JSON; no extra keys; no comments)
{
  "analysis_reasoning": {
    "situation_comparison": "<2-3 sentences comparing today vs yesterday>",
    "personnel_reasoning": "<2-3 sentences explaining daily_personnel changes>",
    "budget_reasoning": "<2-3 sentences explaining daily_budget changes>",
    "overall_reasoning": "<2-3 sentences with overall change assessment>"
  },
  "resource_requirements": {
    "daily_personnel": {
      "value": "<integer>",
      "unit": "people"
    },
    "daily_budget": {
      "value": "<integer>",
      "unit": "USD"
    }
  },
  "confidence": {
    "score": "<1-5 integer>"
  },
  "intermediate_indicators": {
    "spread_containment_difficulty": "<minimal|low|moderate|high|critical>",
    "resource_access_deployment": "<minimal|low|moderate|high|critical>",
    "weather_escalation_risk": "<minimal|low|moderate|high|critical>",
    "terrain_operational_complexity": "<minimal|low|moderate|high|critical>",
    "population_exposure_density": "<minimal|low|moderate|high|critical>",
    "fire_station_coverage": "<minimal|low|moderate|high|critical>"
  }
}"#;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub system_text: String,
    pub user_text: String,
}

impl PromptPair {
    /// Hex SHA-256 of the system and user text; keys replay fixtures.
    pub fn hash(&self) -> String {
        prompt_hash(&self.system_text, &self.user_text)
    }
}

pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0]);
    h.update(user.as_bytes());
    hex(&h.finalize())
}

/// Running totals of this event's own earlier recommendations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cumulative {
    pub total_cost_usd: f64,
    pub total_personnel_days: f64,
    pub days_since_start: i64,
    pub cost: Option<RollingStats>,
    pub personnel: Option<RollingStats>,
    pub cost_trend: Option<Trend>,
    pub personnel_trend: Option<Trend>,
}

impl Cumulative {
    /// Totals and rolling windows over `prev` (oldest first). Trends compare
    /// the last two entries. Cost windows are in USD.
    pub fn from_previous(prev: &[Recommendation], days_since_start: i64, rel_threshold: f64) -> Result<Self> {
        let cost: Vec<f64> = prev.iter().map(|r| r.daily_budget_usd as f64).collect();
        let pers: Vec<f64> = prev.iter().map(|r| r.personnel as f64).collect();
        let trend = |s: &[f64]| -> Result<Option<Trend>> {
            if s.len() < 2 {
                return Ok(None);
            }
            crate::consolidation::qualitative_delta(s[s.len() - 2], s[s.len() - 1], rel_threshold).map(Some)
        };
        Ok(Cumulative {
            total_cost_usd: cost.iter().sum(),
            total_personnel_days: pers.iter().sum(),
            days_since_start,
            cost: RollingStats::of(&cost),
            personnel: RollingStats::of(&pers),
            cost_trend: trend(&cost)?,
            personnel_trend: trend(&pers)?,
        })
    }
}

fn section(title: &str, body: String) -> String {
    format!("## {title}\n{body}")
}

fn script_section(script: &PerceptionScript, title: &str) -> Option<String> {
    script.section(title).map(render_section)
}

pub fn rag_block(analogs: &[AnalogRecord]) -> String {
    let mut b = String::new();
    if analogs.is_empty() {
        b.push_str("- no analogs available\n");
    }
    for a in analogs {
        b.push_str(&format!(
            "- [{} {}] sim={:.4} | Personnel={:.1}, Daily_Budget=${:.1}\n",
            a.fire_id,
            a.date,
            a.similarity,
            a.personnel,
            musd_to_usd(a.daily_cost_musd)
        ));
    }
    section(HISTORICAL_CONTEXT, b)
}

fn join(blocks: Vec<Option<String>>) -> String {
    blocks.into_iter().flatten().collect::<Vec<_>>().join("\n")
}

/// Script sections plus the analog block, in the reference field order.
pub fn build_day1_prompt(script: &PerceptionScript, analogs: &[AnalogRecord]) -> PromptPair {
    let user_text = join(vec![
        script_section(script, FIRE_OVERVIEW),
        script_section(script, AFFECTED_AREAS),
        Some(rag_block(analogs)),
        script_section(script, CLUSTER_DETAILS),
    ]);
    PromptPair { system_text: SYSTEM_PROMPT.to_string(), user_text }
}

fn or_na(s: &str) -> String {
    if s.trim().is_empty() {
        "NA".to_string()
    } else {
        s.trim().to_string()
    }
}

fn usd(v: Option<f64>) -> String {
    v.map(|v| format!("${v:.0}")).unwrap_or_else(|| "NA".into())
}

fn count(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.0}")).unwrap_or_else(|| "NA".into())
}

fn trend_word(t: Option<Trend>) -> &'static str {
    t.map(Trend::word).unwrap_or("NA")
}

/// Day-1 blocks preceded by yesterday's output, cumulative resource context
/// and the rolling intensity metrics; overview blocks carry deltas.
pub fn build_incremental_prompt(
    script: &PerceptionScript,
    analogs: &[AnalogRecord],
    prev: &Recommendation,
    anchors: &TemporalAnchors,
    cumulative: &Cumulative,
) -> PromptPair {
    let previous = format!(
        "- Previous personnel: {} people\n- Previous daily budget: {}\n- Total cumulative cost: ${:.0}\n- Previous reasoning: {}\n",
        prev.personnel,
        prev.daily_budget_usd,
        cumulative.total_cost_usd,
        or_na(&prev.rationales.overall_reasoning)
    );
    let c = cumulative;
    let cum = format!(
        "- Total cumulative cost: ${:.0}\n- Total cumulative personnel-days: {:.0}\n- Days since fire start: {}\n\
         - 3-day rolling avg daily cost: {}\n- 3-day rolling avg daily personnel: {}\n\
         - 7-day rolling avg daily cost: {}\n- 7-day rolling avg daily personnel: {}\n\
         - Recent cost trend: {}\n- Recent personnel trend: {}\n",
        c.total_cost_usd,
        c.total_personnel_days,
        anchors.days_since_start,
        usd(c.cost.map(|s| s.avg3)),
        count(c.personnel.map(|s| s.avg3)),
        usd(c.cost.map(|s| s.avg7)),
        count(c.personnel.map(|s| s.avg7)),
        trend_word(c.cost_trend),
        trend_word(c.personnel_trend),
    );
    let user_text = join(vec![
        Some(section(PREVIOUS_ANALYSIS, previous)),
        Some(section(CUMULATIVE_CONTEXT, cum)),
        script_section(script, ROLLING_METRICS),
        script_section(script, FIRE_OVERVIEW_VS_YESTERDAY),
        script_section(script, AFFECTED_AREAS_VS_YESTERDAY),
        Some(rag_block(analogs)),
        script_section(script, CLUSTER_DETAILS),
    ]);
    PromptPair { system_text: SYSTEM_PROMPT.to_string(), user_text }
}

/// Retry prompt: the original user text plus a correction naming the failure.
pub fn with_correction(prompt: &PromptPair, failure: &super::ValidationFailure, attempt: usize) -> PromptPair {
    PromptPair {
        system_text: prompt.system_text.clone(),
        user_text: format!(
            "{}\n## Correction Required (attempt {attempt})\n\
             - Your previous response was rejected: {} at {}: {}\n\
             - Return ONLY the JSON object in the exact schema, with no extra keys and no comments.\n",
            prompt.user_text,
            failure.category.as_str(),
            failure.path,
            failure.message
        ),
    }
}
