//! File parsers for hotspot detections, fire stations, ASCII grids, ground
//! truth and daily weather. Units are normalized here; nothing downstream
//! re-checks them except the perception unit lock.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::GeoPoint;
use crate::units::KELVIN_FLOOR;

/// One satellite fire detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub lat: f64,
    pub lon: f64,
    /// Fire radiative power, MW.
    pub frp: f64,
    /// Brightness temperature, K.
    pub brightness: f64,
    pub acq_date: NaiveDate,
    /// Minutes after midnight UTC.
    pub acq_time: u16,
    pub satellite: String,
}

impl Hotspot {
    pub fn position(&self) -> GeoPoint {
        GeoPoint {
            lat: self.lat,
            lon: self.lon,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(format!("latitude {} out of [-90, 90]", self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("longitude {} out of [-180, 180]", self.lon));
        }
        if !(self.frp >= 0.0) || !self.frp.is_finite() {
            return Err(format!("frp {} must be a finite value >= 0", self.frp));
        }
        if !(self.brightness > 0.0) || !self.brightness.is_finite() {
            return Err(format!("brightness {} must be > 0", self.brightness));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireStation {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub name: String,
}

impl FireStation {
    pub fn position(&self) -> GeoPoint {
        GeoPoint {
            lat: self.lat,
            lon: self.lon,
        }
    }
}

/// Georeferenced grid of cells stored row-major from the northernmost row.
///
/// The lower-left corner is kept as read from the file so that writing the
/// grid back reproduces the header exactly; the upper-left origin is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub xll: f64,
    pub yll: f64,
    pub cell_size_deg: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<f64>,
    pub nodata: f64,
}

impl RasterGrid {
    pub fn new(
        xll: f64,
        yll: f64,
        cell_size_deg: f64,
        n_rows: usize,
        n_cols: usize,
        values: Vec<f64>,
        nodata: f64,
    ) -> Result<Self> {
        if !(cell_size_deg > 0.0) {
            return Err(Error::Format(format!("cellsize must be > 0, got {cell_size_deg}")));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::Format(format!(
                "grid declares {n_rows}x{n_cols} = {} cells but {} values are present",
                n_rows * n_cols,
                values.len()
            )));
        }
        Ok(RasterGrid {
            xll,
            yll,
            cell_size_deg,
            n_rows,
            n_cols,
            values,
            nodata,
        })
    }

    pub fn origin_lat(&self) -> f64 {
        self.yll + self.n_rows as f64 * self.cell_size_deg
    }

    pub fn origin_lon(&self) -> f64 {
        self.xll
    }

    pub fn cell_center(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint {
            lat: self.origin_lat() - (row as f64 + 0.5) * self.cell_size_deg,
            lon: self.xll + (col as f64 + 0.5) * self.cell_size_deg,
        }
    }

    /// Raw cell value including the nodata sentinel.
    pub fn raw(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    /// Cell value, or `None` for nodata.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.raw(row, col);
        (v != self.nodata && !v.is_nan()).then_some(v)
    }

    /// The cell whose footprint contains `p`, if any.
    pub fn cell_at(&self, p: GeoPoint) -> Option<(usize, usize)> {
        let col = ((p.lon - self.xll) / self.cell_size_deg).floor();
        let row = ((self.origin_lat() - p.lat) / self.cell_size_deg).floor();
        if col < 0.0 || row < 0.0 {
            return None;
        }
        let (row, col) = (row as usize, col as usize);
        (row < self.n_rows && col < self.n_cols).then_some((row, col))
    }

    pub fn sample(&self, p: GeoPoint) -> Option<f64> {
        self.cell_at(p).and_then(|(r, c)| self.get(r, c))
    }

    pub fn same_georef(&self, other: &RasterGrid) -> bool {
        self.xll == other.xll
            && self.yll == other.yll
            && self.cell_size_deg == other.cell_size_deg
            && self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
    }

    pub fn write_ascii<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ncols {}", self.n_cols)?;
        writeln!(w, "nrows {}", self.n_rows)?;
        writeln!(w, "xllcorner {}", self.xll)?;
        writeln!(w, "yllcorner {}", self.yll)?;
        writeln!(w, "cellsize {}", self.cell_size_deg)?;
        writeln!(w, "NODATA_value {}", self.nodata)?;
        for row in self.values.chunks(self.n_cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthDay {
    pub fire_id: String,
    pub date: NaiveDate,
    pub personnel: u32,
    /// Million USD.
    pub daily_cost: f64,
}

/// One day of gridded weather. A layer is `None` when its file was not
/// supplied; every present layer shares the same georeferencing.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherDayGrids {
    pub date: NaiveDate,
    /// Burning Index, dimensionless.
    pub bi: Option<RasterGrid>,
    /// Daily max air temperature, K.
    pub tmax: Option<RasterGrid>,
    /// Daily min air temperature, K.
    pub tmin: Option<RasterGrid>,
    /// Wind speed, m/s.
    pub wind: Option<RasterGrid>,
    /// 1-hour fuel moisture, percent.
    pub fm1: Option<RasterGrid>,
}

impl WeatherDayGrids {
    pub fn empty(date: NaiveDate) -> Self {
        WeatherDayGrids {
            date,
            bi: None,
            tmax: None,
            tmin: None,
            wind: None,
            fm1: None,
        }
    }

    pub fn layers(&self) -> [(&'static str, Option<&RasterGrid>); 5] {
        [
            ("bi", self.bi.as_ref()),
            ("tmax", self.tmax.as_ref()),
            ("tmin", self.tmin.as_ref()),
            ("wind", self.wind.as_ref()),
            ("fm1", self.fm1.as_ref()),
        ]
    }

    /// Cross-layer georeferencing and per-layer unit plausibility.
    pub fn validate(&self) -> Result<()> {
        let present: Vec<(&str, &RasterGrid)> = self
            .layers()
            .into_iter()
            .filter_map(|(n, g)| g.map(|g| (n, g)))
            .collect();
        if let Some((first_name, first)) = present.first() {
            for (name, g) in &present[1..] {
                if !first.same_georef(g) {
                    return Err(Error::Alignment(format!(
                        "{name} grid georeferencing differs from {first_name} on {}",
                        self.date
                    )));
                }
            }
        }
        for (name, g) in present {
            let bad = |pred: &dyn Fn(f64) -> bool| {
                g.values
                    .iter()
                    .copied()
                    .filter(|v| *v != g.nodata && !v.is_nan())
                    .find(|v| pred(*v))
            };
            let offending = match name {
                "tmax" | "tmin" => bad(&|v| v < KELVIN_FLOOR).map(|v| {
                    format!("value {v} is below {KELVIN_FLOOR} K; temperatures must be kelvin")
                }),
                "wind" => bad(&|v| v < 0.0).map(|v| format!("negative wind speed {v} m/s")),
                "fm1" => bad(&|v| !(0.0..=100.0).contains(&v))
                    .map(|v| format!("fuel moisture {v} is outside [0, 100] percent")),
                _ => None,
            };
            if let Some(message) = offending {
                return Err(Error::Unit {
                    slot: name.to_string(),
                    message,
                });
            }
        }
        Ok(())
    }
}

/// Readers for the five weather layers of one day.
pub struct WeatherStreams<R> {
    pub bi: R,
    pub tmax: R,
    pub tmin: R,
    pub wind: R,
    pub fm1: R,
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(r)
}

fn column_index(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
}

fn parse_acq_time(s: &str) -> std::result::Result<u16, String> {
    let hhmm: u16 = s
        .parse()
        .map_err(|_| format!("acq_time `{s}` is not an HHMM integer"))?;
    let (h, m) = (hhmm / 100, hhmm % 100);
    if h >= 24 || m >= 60 {
        return Err(format!("acq_time `{s}` is not a valid HHMM time"));
    }
    Ok(h * 60 + m)
}

/// Parse a FIRMS-style hotspot CSV. Column order is free; `brightness` or
/// `bright_ti4` supplies brightness; `satellite` is optional.
pub fn parse_hotspots<R: Read>(r: R) -> Result<Vec<Hotspot>> {
    let mut rdr = csv_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("hotspot header: {e}")))?
        .clone();
    let col = |names: &[&str]| {
        column_index(&headers, names)
            .ok_or_else(|| Error::Format(format!("hotspot CSV is missing column `{}`", names[0])))
    };
    let lat_i = col(&["latitude", "lat"])?;
    let lon_i = col(&["longitude", "lon"])?;
    let frp_i = col(&["frp"])?;
    let br_i = col(&["brightness", "bright_ti4"])?;
    let date_i = col(&["acq_date"])?;
    let time_i = col(&["acq_time"])?;
    let sat_i = column_index(&headers, &["satellite"]);

    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let row_err = |message: String| Error::Row { row, message };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, name: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| row_err(format!("{name} `{}` is not a number", field(i))))
        };
        let h = Hotspot {
            lat: num(lat_i, "latitude")?,
            lon: num(lon_i, "longitude")?,
            frp: num(frp_i, "frp")?,
            brightness: num(br_i, "brightness")?,
            acq_date: NaiveDate::parse_from_str(field(date_i), "%Y-%m-%d")
                .map_err(|_| row_err(format!("acq_date `{}` is not YYYY-MM-DD", field(date_i))))?,
            acq_time: parse_acq_time(field(time_i)).map_err(&row_err)?,
            satellite: sat_i.map(|i| field(i).to_string()).unwrap_or_default(),
        };
        h.check().map_err(&row_err)?;
        out.push(h);
    }
    Ok(out)
}

pub fn write_hotspots<W: Write>(w: W, hotspots: &[Hotspot]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let map = |e: csv::Error| Error::Format(e.to_string());
    wtr.write_record([
        "latitude",
        "longitude",
        "bright_ti4",
        "frp",
        "acq_date",
        "acq_time",
        "satellite",
    ])
    .map_err(map)?;
    for h in hotspots {
        wtr.write_record([
            h.lat.to_string(),
            h.lon.to_string(),
            h.brightness.to_string(),
            h.frp.to_string(),
            h.acq_date.format("%Y-%m-%d").to_string(),
            format!("{:02}{:02}", h.acq_time / 60, h.acq_time % 60),
            h.satellite.clone(),
        ])
        .map_err(map)?;
    }
    wtr.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

fn feature_collection(doc: &Value, what: &str) -> Result<Vec<Value>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Format(format!("{what}: expected a GeoJSON FeatureCollection")));
    }
    doc.get("features")
        .and_then(Value::as_array)
        .cloned()
        .ok_or_else(|| Error::Format(format!("{what}: `features` must be an array")))
}

/// Property rendered as a string id; numbers are accepted too.
pub(crate) fn property_id(props: &Value, key: &str) -> Option<String> {
    match props.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub fn parse_stations<R: Read>(r: R) -> Result<Vec<FireStation>> {
    let doc: Value = serde_json::from_reader(r)
        .map_err(|e| Error::Format(format!("stations: malformed GeoJSON: {e}")))?;
    let features = feature_collection(&doc, "stations")?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let geom = f
            .get("geometry")
            .ok_or_else(|| Error::Format(format!("station feature {i}: missing geometry")))?;
        let gtype = geom.get("type").and_then(Value::as_str).unwrap_or("<none>");
        if gtype != "Point" {
            return Err(Error::Format(format!(
                "station feature {i}: expected Point geometry, found {gtype}"
            )));
        }
        let coords = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .filter(|c| c.len() >= 2)
            .ok_or_else(|| Error::Format(format!("station feature {i}: bad coordinates")))?;
        let lon = coords[0].as_f64();
        let lat = coords[1].as_f64();
        let (Some(lon), Some(lat)) = (lon, lat) else {
            return Err(Error::Format(format!("station feature {i}: non-numeric coordinates")));
        };
        GeoPoint::new(lat, lon).map_err(|e| Error::Format(format!("station feature {i}: {e}")))?;
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let id = property_id(&props, "id")
            .ok_or_else(|| Error::Format(format!("station feature {i}: missing `id` property")))?;
        if !seen.insert(id.clone()) {
            return Err(Error::Conflict(format!("duplicate station id `{id}` at feature {i}")));
        }
        let name = props
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        out.push(FireStation { id, lat, lon, name });
    }
    Ok(out)
}

pub fn stations_to_geojson(stations: &[FireStation]) -> Value {
    let features: Vec<Value> = stations
        .iter()
        .map(|s| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [s.lon, s.lat]},
                "properties": {"id": s.id, "name": s.name},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// Parse an ESRI-style ASCII grid. `NODATA_value` defaults to -9999 when the
/// header omits it.
pub fn load_raster<R: Read>(mut r: R) -> Result<RasterGrid> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|e| Error::Format(format!("raster: {e}")))?;
    let mut tokens = text.split_whitespace().peekable();
    let mut header: HashMap<String, String> = HashMap::new();
    while let Some(tok) = tokens.peek() {
        if tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            let key = tokens.next().unwrap().to_ascii_lowercase();
            let val = tokens
                .next()
                .ok_or_else(|| Error::Format(format!("raster header `{key}` has no value")))?;
            header.insert(key, val.to_string());
        } else {
            break;
        }
    }
    let get = |k: &str| -> Result<&String> {
        header
            .get(k)
            .ok_or_else(|| Error::Format(format!("raster header is missing `{k}`")))
    };
    let parse_usize = |k: &str| -> Result<usize> {
        get(k)?
            .parse()
            .map_err(|_| Error::Format(format!("raster header `{k}` is not a count")))
    };
    let parse_f64 = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Format(format!("raster header `{k}` is not a number")))
    };
    let n_cols = parse_usize("ncols")?;
    let n_rows = parse_usize("nrows")?;
    let xll = parse_f64("xllcorner")?;
    let yll = parse_f64("yllcorner")?;
    let cell = parse_f64("cellsize")?;
    let nodata = if header.contains_key("nodata_value") {
        parse_f64("nodata_value")?
    } else {
        -9999.0
    };
    let values = tokens
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("raster value {i} `{t}` is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    RasterGrid::new(xll, yll, cell, n_rows, n_cols, values, nodata)
}

pub fn load_raster_file(path: &Path) -> Result<RasterGrid> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    load_raster(BufReader::new(f))
}

/// Parse `fire_id,date,personnel,daily_cost_musd` rows into per-fire series
/// sorted by date.
pub fn parse_ground_truth<R: Read>(r: R) -> Result<BTreeMap<String, Vec<GroundTruthDay>>> {
    let mut rdr = csv_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("ground truth header: {e}")))?
        .clone();
    let col = |n: &str| {
        column_index(&headers, &[n])
            .ok_or_else(|| Error::Format(format!("ground truth CSV is missing column `{n}`")))
    };
    let (fid_i, date_i, pers_i, cost_i) = (
        col("fire_id")?,
        col("date")?,
        col("personnel")?,
        col("daily_cost_musd")?,
    );
    let mut out: BTreeMap<String, Vec<GroundTruthDay>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let row_err = |message: String| Error::Row { row, message };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let fire_id = field(fid_i).to_string();
        if fire_id.is_empty() {
            return Err(row_err("empty fire_id".into()));
        }
        let date = NaiveDate::parse_from_str(field(date_i), "%Y-%m-%d")
            .map_err(|_| row_err(format!("date `{}` is not YYYY-MM-DD", field(date_i))))?;
        let personnel: i64 = field(pers_i)
            .parse()
            .map_err(|_| row_err(format!("personnel `{}` is not an integer", field(pers_i))))?;
        if personnel < 0 || personnel > u32::MAX as i64 {
            return Err(row_err(format!("personnel {personnel} must be >= 0")));
        }
        let daily_cost: f64 = field(cost_i)
            .parse()
            .map_err(|_| row_err(format!("daily_cost_musd `{}` is not a number", field(cost_i))))?;
        if !(daily_cost >= 0.0) || !daily_cost.is_finite() {
            return Err(row_err(format!("daily_cost_musd {daily_cost} must be >= 0")));
        }
        if !seen.insert((fire_id.clone(), date)) {
            return Err(Error::Conflict(format!(
                "duplicate ground truth day {fire_id} {date} at row {row}"
            )));
        }
        out.entry(fire_id.clone()).or_default().push(GroundTruthDay {
            fire_id,
            date,
            personnel: personnel as u32,
            daily_cost,
        });
    }
    for series in out.values_mut() {
        series.sort_by_key(|d| d.date);
    }
    Ok(out)
}

pub fn write_ground_truth<W: Write>(w: W, truth: &BTreeMap<String, Vec<GroundTruthDay>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let map = |e: csv::Error| Error::Format(e.to_string());
    wtr.write_record(["fire_id", "date", "personnel", "daily_cost_musd"])
        .map_err(map)?;
    for d in truth.values().flatten() {
        wtr.write_record([
            d.fire_id.clone(),
            d.date.format("%Y-%m-%d").to_string(),
            d.personnel.to_string(),
            d.daily_cost.to_string(),
        ])
        .map_err(map)?;
    }
    wtr.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

/// Parse all five weather layers for `date`, checking alignment and units.
pub fn parse_weather_day<R: Read>(streams: WeatherStreams<R>, date: NaiveDate) -> Result<WeatherDayGrids> {
    let day = WeatherDayGrids {
        date,
        bi: Some(load_raster(streams.bi)?),
        tmax: Some(load_raster(streams.tmax)?),
        tmin: Some(load_raster(streams.tmin)?),
        wind: Some(load_raster(streams.wind)?),
        fm1: Some(load_raster(streams.fm1)?),
    };
    day.validate()?;
    Ok(day)
}

/// Load whichever of `bi.asc`, `tmax.asc`, `tmin.asc`, `wind.asc`, `fm1.asc`
/// exist in `dir`. Missing layers stay `None` and render as NA downstream.
pub fn load_weather_dir(dir: &Path, date: NaiveDate) -> Result<WeatherDayGrids> {
    let mut day = WeatherDayGrids::empty(date);
    let load = |name: &str| -> Result<Option<RasterGrid>> {
        let p = dir.join(format!("{name}.asc"));
        if p.exists() {
            load_raster_file(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    if dir.is_dir() {
        day.bi = load("bi")?;
        day.tmax = load("tmax")?;
        day.tmin = load("tmin")?;
        day.wind = load("wind")?;
        day.fm1 = load("fm1")?;
    }
    day.validate()?;
    Ok(day)
}
