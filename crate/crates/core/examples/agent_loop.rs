//! The validated recommendation loop with a scripted client.

use chrono::NaiveDate;
use gal::agent::{
    reprompt_loop, validate_output, Indicators, Level, PromptPair, Rationales, Recommendation, ScriptedClient,
    SYSTEM_PROMPT,
};
use gal::analogs::{analog_bounds, AnalogRecord, Slack};

fn analog(fire: &str, personnel: f64, cost_musd: f64) -> AnalogRecord {
    AnalogRecord {
        fire_id: fire.into(),
        date: NaiveDate::from_ymd_opt(2020, 8, 20).unwrap(),
        similarity: 0.9,
        personnel,
        daily_cost_musd: cost_musd,
    }
}

fn main() -> gal::Result<()> {
    let analogs = vec![analog("A", 400.0, 1.0), analog("B", 520.0, 1.4), analog("C", 300.0, 0.8)];
    let bounds = analog_bounds(&analogs, Slack::default());
    println!("bounds: personnel {:?}, cost (M USD) {:?}", bounds.personnel, bounds.cost_musd);

    let rec = Recommendation {
        personnel: 450,
        daily_budget_usd: 1_200_000,
        confidence: 3,
        indicators: Indicators { weather_escalation_risk: Level::High, ..Indicators::uniform(Level::Moderate) },
        rationales: Rationales {
            situation_comparison: "Close to analog B.".into(),
            personnel_reasoning: "Between the analog median and maximum.".into(),
            budget_reasoning: "Scaled with personnel.".into(),
            overall_reasoning: "Growth is slowing.".into(),
        },
    };
    let good = serde_json::to_string_pretty(&rec.to_wire())?;
    let bad_unit = good.replace("\"people\"", "\"crews\"");
    let too_big = good.replace("1200000", "90000000");
    for doc in [&bad_unit, &too_big] {
        if let Err(f) = validate_output(doc, &bounds) {
            println!("rejected: {f}");
        }
    }

    let prompt = PromptPair { system_text: SYSTEM_PROMPT.to_string(), user_text: "## Fire Overview\n- ...".into() };
    let client = ScriptedClient::new(vec!["not json at all".to_string(), bad_unit, good]);
    let out = reprompt_loop(&prompt, &client, &bounds, 3, &analogs)?;
    let cats: Vec<&str> = out.failures.iter().map(|f| f.category.as_str()).collect();
    println!("attempts: {}, failures: {cats:?}", client.calls());
    println!("accepted: {} people, ${} per day", out.recommendation.personnel, out.recommendation.daily_budget_usd);

    // A client that never complies ends in the analog-median fallback.
    let stubborn = ScriptedClient::new(vec!["{}".to_string(); 3]);
    let out = reprompt_loop(&prompt, &stubborn, &bounds, 3, &analogs)?;
    println!(
        "fallback: {} -> {} people, ${} per day",
        out.fallback, out.recommendation.personnel, out.recommendation.daily_budget_usd
    );
    Ok(())
}
