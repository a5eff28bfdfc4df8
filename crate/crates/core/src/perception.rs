//! Perception script: a fixed-slot, unit-annotated text rendering of one
//! event day. The same context always renders to the same bytes, whatever
//! order its clusters arrive in.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::consolidation::{ClusterFeatures, EventDayContext, GlobalSnapshot, TemporalAnchors};
use crate::enrichment::FusedWeather;
use crate::error::{Error, Result};
use crate::units::{meters_to_miles, KELVIN_FLOOR};

pub const DEFAULT_TOP_K: usize = 5;

pub const FIRE_OVERVIEW: &str = "Fire Overview";
pub const FIRE_OVERVIEW_VS_YESTERDAY: &str = "Fire Overview vs Yesterday";
pub const AFFECTED_AREAS: &str = "Affected Areas";
pub const AFFECTED_AREAS_VS_YESTERDAY: &str = "Affected Areas vs Yesterday";
pub const ROLLING_METRICS: &str = "Fire Intensity Rolling Metrics";
pub const CLUSTER_DETAILS: &str = "Cluster Details";

/// How a missing value is treated by downstream arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Summed quantities; NA counts as 0.
    Additive,
    /// Weighted averages; NA samples are left out of the average.
    Averaged,
    /// Labels and lists; no numeric default.
    Text,
}

/// Every slot the renderer may emit.
pub const SLOTS: &[(&str, SlotKind)] = &[
    ("Total Fire Points", SlotKind::Additive),
    ("Num Clusters", SlotKind::Additive),
    ("Total FRP", SlotKind::Additive),
    ("Total area", SlotKind::Additive),
    ("Max FRP", SlotKind::Averaged),
    ("Max Brightness", SlotKind::Averaged),
    ("FRP median", SlotKind::Averaged),
    ("FRP p95", SlotKind::Averaged),
    ("BI", SlotKind::Averaged),
    ("Tmax", SlotKind::Averaged),
    ("Tmin", SlotKind::Averaged),
    ("Wind", SlotKind::Averaged),
    ("FM1", SlotKind::Averaged),
    ("Counties", SlotKind::Text),
    ("Total Population Affected", SlotKind::Additive),
    ("Fire stations in area", SlotKind::Additive),
    ("Nearest station", SlotKind::Averaged),
    ("points", SlotKind::Additive),
    ("frp", SlotKind::Additive),
    ("brightness", SlotKind::Averaged),
    ("area", SlotKind::Additive),
    ("tmax", SlotKind::Averaged),
    ("tmin", SlotKind::Averaged),
    ("wind", SlotKind::Averaged),
    ("counties", SlotKind::Text),
    ("pop", SlotKind::Additive),
    ("density", SlotKind::Averaged),
    ("station_1/2/3", SlotKind::Averaged),
    ("stations_10km", SlotKind::Additive),
    ("spread_potential", SlotKind::Averaged),
    ("shannon", SlotKind::Averaged),
    ("fragmentation", SlotKind::Averaged),
    ("high/medium/low", SlotKind::Averaged),
    ("continuous_fuels", SlotKind::Averaged),
    ("barriers", SlotKind::Averaged),
    ("land_cover", SlotKind::Text),
    ("3-day avg fire points", SlotKind::Averaged),
    ("3-day max fire points", SlotKind::Averaged),
    ("7-day avg fire points", SlotKind::Averaged),
    ("7-day max fire points", SlotKind::Averaged),
    ("Current fire points vs historical max", SlotKind::Averaged),
    ("Global max fire points", SlotKind::Averaged),
    ("3-day avg total FRP", SlotKind::Averaged),
    ("7-day avg total FRP", SlotKind::Averaged),
    ("3-day avg total area", SlotKind::Averaged),
    ("7-day avg total area", SlotKind::Averaged),
    ("Current area vs historical max", SlotKind::Averaged),
    ("Global max area", SlotKind::Averaged),
    ("Qualitative deltas", SlotKind::Text),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedSlot {
    pub slot: &'static str,
    pub token: String,
    /// Value downstream arithmetic substitutes for NA, if any.
    pub default: Option<i64>,
    pub is_na: bool,
}

impl RenderedSlot {
    pub fn kv(&self) -> String {
        format!("{}={}", self.slot, self.token)
    }
}

/// Token for a slot: the formatted value, or `NA` when absent. Unknown slot
/// names are a schema error.
pub fn na_policy(slot: &str, value: Option<String>) -> Result<RenderedSlot> {
    let (name, kind) = SLOTS
        .iter()
        .find(|(n, _)| *n == slot)
        .copied()
        .ok_or_else(|| Error::Schema(format!("unknown perception slot `{slot}`")))?;
    let is_na = value.is_none();
    Ok(RenderedSlot {
        slot: name,
        token: value.unwrap_or_else(|| "NA".to_string()),
        default: (is_na && kind == SlotKind::Additive).then_some(0),
        is_na,
    })
}

fn check_weather(prefix: &str, w: &FusedWeather) -> Result<()> {
    let fail = |slot: &str, message: String| {
        Err(Error::Unit {
            slot: format!("{prefix}.{slot}"),
            message,
        })
    };
    for (slot, v) in [("tmax", w.tmax), ("tmin", w.tmin)] {
        if let Some(v) = v {
            if !(v >= KELVIN_FLOOR) {
                return fail(slot, format!("{v} is below {KELVIN_FLOOR} K; expected kelvin"));
            }
        }
    }
    if let Some(v) = w.wind {
        if !(v >= 0.0) {
            return fail("wind", format!("{v} m/s is negative"));
        }
    }
    if let Some(v) = w.fm1 {
        if !(0.0..=100.0).contains(&v) {
            return fail("fm1", format!("{v} is outside 0-100 percent"));
        }
    }
    if let Some(v) = w.bi {
        if !(v >= 0.0) {
            return fail("bi", format!("{v} is negative"));
        }
    }
    Ok(())
}

/// Confirm every field is in canonical units (K, m/s, %, MW, acres, meters)
/// before rendering.
pub fn unit_lock(ctx: &EventDayContext) -> Result<EventDayContext> {
    check_weather("snapshot.weather", &ctx.snapshot.weather)?;
    for c in &ctx.clusters {
        let prefix = format!("cluster[{}]", c.cluster_id);
        check_weather(&format!("{prefix}.weather"), &c.weather)?;
        for (slot, v) in [
            ("sum_frp", c.sum_frp),
            ("area_acres", c.area_acres),
            ("perimeter_m", c.perimeter_m),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Unit {
                    slot: format!("{prefix}.{slot}"),
                    message: format!("{v} must be a finite value >= 0"),
                });
            }
        }
        if c.max_brightness > 0.0 && c.max_brightness < KELVIN_FLOOR {
            return Err(Error::Unit {
                slot: format!("{prefix}.max_brightness"),
                message: format!("{} is below {KELVIN_FLOOR} K", c.max_brightness),
            });
        }
    }
    if let Some(a) = &ctx.anchors {
        check_weather("anchors.yesterday.weather", &a.yesterday.weather)?;
    }
    Ok(ctx.clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptSection {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerceptionScript {
    pub text: String,
    pub k_used: usize,
    pub na_fields: Vec<String>,
    pub sections: Vec<ScriptSection>,
}

impl PerceptionScript {
    pub fn section(&self, title: &str) -> Option<&ScriptSection> {
        self.sections.iter().find(|s| s.title == title)
    }
}

pub fn render_section(s: &ScriptSection) -> String {
    format!("## {}\n{}", s.title, s.body)
}

fn f1(v: f64) -> String {
    format!("{:.1}", v + 0.0)
}

fn f2(v: f64) -> String {
    format!("{:.2}", v + 0.0)
}

fn int(v: f64) -> String {
    format!("{:.0}", v + 0.0)
}

/// `(up d)`, `(down d)` or `(no change)`.
fn delta(cur: f64, prev: f64, fmt: fn(f64) -> String) -> String {
    let d = cur - prev;
    if fmt(d.abs()) == fmt(0.0) {
        "(no change)".to_string()
    } else if d > 0.0 {
        format!("(up {})", fmt(d))
    } else {
        format!("(down {})", fmt(-d))
    }
}

fn delta_pct(cur: f64, prev: f64, fmt: fn(f64) -> String) -> String {
    let base = delta(cur, prev, fmt);
    if base == "(no change)" {
        return base;
    }
    let pct = if prev > 0.0 {
        format!("{:.1}%", 100.0 * (cur - prev).abs() / prev)
    } else {
        "NA%".to_string()
    };
    format!("{}, {pct})", &base[..base.len() - 1])
}

struct Renderer {
    na_fields: Vec<String>,
}

impl Renderer {
    fn slot(&mut self, scope: &str, slot: &str, value: Option<String>) -> RenderedSlot {
        let r = na_policy(slot, value).expect("renderer only uses schema slots");
        if r.is_na {
            self.na_fields.push(if scope.is_empty() {
                slot.to_string()
            } else {
                format!("{scope}.{slot}")
            });
        }
        r
    }

    fn weather_line(&mut self, scope: &str, w: &FusedWeather, cluster: bool) -> String {
        let names = if cluster {
            ["BI", "tmax", "tmin", "wind", "FM1"]
        } else {
            ["BI", "Tmax", "Tmin", "Wind", "FM1"]
        };
        let parts = [
            self.slot(scope, names[0], w.bi.map(f1)).kv(),
            self.slot(scope, names[1], w.tmax.map(|v| format!("{} K", f1(v)))).kv(),
            self.slot(scope, names[2], w.tmin.map(|v| format!("{} K", f1(v)))).kv(),
            self.slot(scope, names[3], w.wind.map(|v| format!("{} m/s", f1(v)))).kv(),
            self.slot(scope, names[4], w.fm1.map(|v| format!("{}%", f1(v)))).kv(),
        ];
        parts.join(", ")
    }

    fn overview(&mut self, s: &GlobalSnapshot, y: Option<&GlobalSnapshot>) -> ScriptSection {
        let mut b = String::new();
        b.push_str(&format!("- Current date: {}\n", s.date.format("%m-%d")));
        let pts = self.slot("", "Total Fire Points", Some(s.total_points.to_string())).token;
        let ncl = self.slot("", "Num Clusters", Some(s.n_clusters.to_string())).token;
        let frp = self.slot("", "Total FRP", Some(format!("{} MW", f1(s.total_frp)))).token;
        let area = self.slot("", "Total area", Some(format!("{} acres", f1(s.total_area_acres)))).token;
        let has = s.n_clusters > 0;
        let maxf = self.slot("", "Max FRP", has.then(|| format!("{} MW", f1(s.max_frp)))).token;
        let maxb = self.slot("", "Max Brightness", has.then(|| format!("{} K", f1(s.max_brightness)))).token;
        let med = self.slot("", "FRP median", has.then(|| format!("{} MW", f1(s.median_frp_per_cluster)))).kv();
        let p95 = self.slot("", "FRP p95", has.then(|| format!("{} MW", f1(s.p95_frp_per_cluster)))).kv();
        match y {
            None => {
                b.push_str(&format!("- Total Fire Points: {pts}\n"));
                b.push_str(&format!("- Num Clusters: {ncl}\n"));
                b.push_str(&format!("- Total FRP: {frp}\n"));
                b.push_str(&format!("- Total area: {area}\n"));
                b.push_str(&format!("- Max FRP/Brightness: {maxf}/{maxb}\n"));
            }
            Some(y) => {
                let dint = |c: usize, p: usize| delta(c as f64, p as f64, int);
                b.push_str(&format!("- Total Fire Points: {pts} {}\n", dint(s.total_points, y.total_points)));
                b.push_str(&format!("- Num Clusters: {ncl} {}\n", dint(s.n_clusters, y.n_clusters)));
                b.push_str(&format!("- Total FRP: {frp} {}\n", delta_pct(s.total_frp, y.total_frp, f1)));
                b.push_str(&format!(
                    "- Total area: {area} {}\n",
                    delta_pct(s.total_area_acres, y.total_area_acres, f1)
                ));
                if has && y.n_clusters > 0 {
                    b.push_str(&format!(
                        "- Max FRP/Brightness: {maxf}/{maxb} {}\n",
                        delta(s.max_frp, y.max_frp, f1)
                    ));
                } else {
                    b.push_str(&format!("- Max FRP/Brightness: {maxf}/{maxb}\n"));
                }
            }
        }
        b.push_str(&format!("- FRP per cluster: {med}, {p95}\n"));
        b.push_str(&format!("- Weather conditions: {}\n", self.weather_line("", &s.weather, false)));
        ScriptSection {
            title: if y.is_some() { FIRE_OVERVIEW_VS_YESTERDAY } else { FIRE_OVERVIEW }.to_string(),
            body: b,
        }
    }

    fn affected(&mut self, s: &GlobalSnapshot, y: Option<&GlobalSnapshot>) -> ScriptSection {
        let mut b = String::new();
        let list = |set: &BTreeSet<String>| {
            format!("{{{}}}", set.iter().cloned().collect::<Vec<_>>().join(", "))
        };
        let counties = match y {
            None => format!("{}; now {}", list(&s.counties), s.counties.len()),
            Some(y) => {
                let added: BTreeSet<String> = s.counties.difference(&y.counties).cloned().collect();
                let removed: BTreeSet<String> = y.counties.difference(&s.counties).cloned().collect();
                format!("added {}; removed {}; now {}", list(&added), list(&removed), s.counties.len())
            }
        };
        let c = self.slot("", "Counties", Some(counties)).token;
        b.push_str(&format!("- Counties: {c}\n"));

        let pop = self.slot("", "Total Population Affected", s.total_population.map(int)).token;
        let pop_delta = match (y, s.total_population) {
            (Some(y), Some(p)) => format!(" {}", delta(p, y.total_population.unwrap_or(0.0), int)),
            _ => String::new(),
        };
        b.push_str(&format!("- Total Population Affected: {pop}{pop_delta}\n"));

        let st = self.slot("", "Fire stations in area", Some(s.station_count.to_string())).token;
        let st_delta = y
            .map(|y| format!(" {}", delta(s.station_count as f64, y.station_count as f64, int)))
            .unwrap_or_default();
        b.push_str(&format!("- Fire stations in area: {st}{st_delta}\n"));

        let near = self
            .slot("", "Nearest station", s.nearest_station_mi.map(|v| format!("{} mile", f1(v))))
            .token;
        let near_delta = match (y.and_then(|y| y.nearest_station_mi), s.nearest_station_mi) {
            (Some(p), Some(c)) => format!(" {}", delta(c, p, f1)),
            _ => String::new(),
        };
        b.push_str(&format!("- Nearest station: {near}{near_delta}\n"));
        ScriptSection {
            title: if y.is_some() { AFFECTED_AREAS_VS_YESTERDAY } else { AFFECTED_AREAS }.to_string(),
            body: b,
        }
    }

    fn anchors(&mut self, a: &TemporalAnchors) -> ScriptSection {
        let mut b = String::new();
        let mut line = |label: &'static str, value: String| {
            let t = self.slot("", label, Some(value)).token;
            b.push_str(&format!("- {label}: {t}\n"));
        };
        line("3-day avg fire points", f1(a.points.avg3));
        line("3-day max fire points", f1(a.points.max3));
        line("7-day avg fire points", f1(a.points.avg7));
        line("7-day max fire points", f1(a.points.max7));
        line("Current fire points vs historical max", format!("{}%", f1(a.pct_of_hist_max_points)));
        line(
            "Global max fire points",
            format!("{} ({} days ago)", f1(a.global_max_points), a.days_since_global_max_points),
        );
        line("3-day avg total FRP", format!("{} MW", f1(a.frp.avg3)));
        line("7-day avg total FRP", format!("{} MW", f1(a.frp.avg7)));
        line("3-day avg total area", format!("{} acres", f1(a.area.avg3)));
        line("7-day avg total area", format!("{} acres", f1(a.area.avg7)));
        line("Current area vs historical max", format!("{}%", f1(a.pct_of_hist_max_area)));
        line(
            "Global max area",
            format!("{} acres ({} days ago)", f1(a.global_max_area), a.days_since_global_max_area),
        );
        let trends: Vec<String> = a
            .trends
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "cost" | "personnel"))
            .map(|(k, t)| format!("{k}{}", t.symbol()))
            .collect();
        let t = self
            .slot("", "Qualitative deltas", (!trends.is_empty()).then(|| trends.join(", ")))
            .token;
        b.push_str(&format!("- Qualitative deltas: {t}\n"));
        ScriptSection {
            title: ROLLING_METRICS.to_string(),
            body: b,
        }
    }

    fn cluster(&mut self, c: &ClusterFeatures) -> String {
        let scope = format!("cluster[{}]", c.cluster_id);
        let sc = scope.as_str();
        let fire = [
            self.slot(sc, "points", Some(c.point_count.to_string())).kv(),
            self.slot(sc, "frp", Some(format!("{} MW", f1(c.sum_frp)))).kv(),
            self.slot(sc, "brightness", Some(format!("{} K", f1(c.max_brightness)))).kv(),
            self.slot(sc, "area", Some(format!("{} acres", f1(c.area_acres)))).kv(),
        ]
        .join(", ");
        let weather = self.weather_line(sc, &c.weather, true);
        let e = &c.exposure;
        let stations = (!c.access.nearest.is_empty()).then(|| {
            let ds: Vec<String> = (0..3)
                .map(|i| {
                    c.access
                        .nearest
                        .get(i)
                        .map(|s| f1(meters_to_miles(s.distance_m)))
                        .unwrap_or_else(|| "NA".into())
                })
                .collect();
            format!("{} mile", ds.join("/"))
        });
        let location = [
            self.slot(sc, "counties", (!e.counties.is_empty()).then(|| e.counties.join(";"))).kv(),
            self.slot(sc, "pop", e.population.map(int)).kv(),
            self.slot(sc, "density", e.density.map(|d| format!("{}/km2", f1(d)))).kv(),
            self.slot(sc, "station_1/2/3", stations).kv(),
            self.slot(sc, "stations_10km", Some(c.access.density_10km.to_string())).kv(),
        ]
        .join(", ");
        let t = c.terrain.as_ref();
        let terrain = [
            self.slot(sc, "spread_potential", t.map(|t| f2(t.spread_potential))).kv(),
            self.slot(sc, "shannon", t.map(|t| format!("{:.3} nats", t.shannon_diversity))).kv(),
            self.slot(sc, "fragmentation", t.map(|t| f2(t.fragmentation))).kv(),
            self.slot(
                sc,
                "high/medium/low",
                t.map(|t| {
                    let r = t.risk_fractions;
                    format!("{}/{}/{}", f2(r.high), f2(r.medium), f2(r.low))
                }),
            )
            .kv(),
            self.slot(sc, "continuous_fuels", t.map(|t| f2(t.continuous_fuels))).kv(),
            self.slot(sc, "barriers", t.map(|t| f2(t.barriers))).kv(),
            self.slot(
                sc,
                "land_cover",
                t.map(|t| {
                    t.composition
                        .iter()
                        .map(|(k, p)| format!("{k}:{}", f2(*p)))
                        .collect::<Vec<_>>()
                        .join(";")
                }),
            )
            .kv(),
        ]
        .join(", ");
        format!(
            "- Cluster {}:\n  fire[{fire}]\n  weather[{weather}]\n  location[{location}]\n  terrain[{terrain}]\n",
            c.cluster_id
        )
    }
}

/// Clusters in consequence order: descending FRP, then ascending id.
pub fn consequence_order(clusters: &[ClusterFeatures]) -> Vec<&ClusterFeatures> {
    let mut v: Vec<&ClusterFeatures> = clusters.iter().collect();
    v.sort_by(|a, b| b.sum_frp.total_cmp(&a.sum_frp).then(a.cluster_id.cmp(&b.cluster_id)));
    v
}

/// Render the unit-locked script: overview, affected areas, rolling metrics
/// (incremental days only), then the top-`top_k` cluster summaries.
pub fn render_script(ctx: &EventDayContext, top_k: usize) -> Result<PerceptionScript> {
    let ctx = unit_lock(ctx)?;
    let mut r = Renderer { na_fields: Vec::new() };
    let y = ctx.anchors.as_ref().map(|a| &a.yesterday);
    let mut sections = vec![r.overview(&ctx.snapshot, y), r.affected(&ctx.snapshot, y)];
    if let Some(a) = &ctx.anchors {
        sections.push(r.anchors(a));
    }
    let top: Vec<&ClusterFeatures> = consequence_order(&ctx.clusters).into_iter().take(top_k).collect();
    let body = if top.is_empty() {
        "- none (no active hotspot clusters today)\n".to_string()
    } else {
        top.iter().map(|c| r.cluster(c)).collect::<String>()
    };
    sections.push(ScriptSection {
        title: CLUSTER_DETAILS.to_string(),
        body,
    });
    let text = sections.iter().map(render_section).collect::<Vec<_>>().join("\n");
    Ok(PerceptionScript {
        text,
        k_used: top.len(),
        na_fields: r.na_fields,
        sections,
    })
}
