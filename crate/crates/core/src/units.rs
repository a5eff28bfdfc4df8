//! Canonical physical constants and unit conversions.

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

pub const SQ_METERS_PER_ACRE: f64 = 4046.856_422_4;

pub const METERS_PER_MILE: f64 = 1609.344;

pub const METERS_PER_FOOT: f64 = 0.3048;

pub const USD_PER_MILLION: f64 = 1_000_000.0;

/// Lowest temperature accepted as kelvin. Anything below is assumed to be
/// Celsius or Fahrenheit leaking through.
pub const KELVIN_FLOOR: f64 = 200.0;

/// VIIRS I-band pixel size, used as the buffer for degenerate footprints.
pub const VIIRS_PIXEL_M: f64 = 375.0;

pub fn m2_to_acres(m2: f64) -> f64 {
    m2 / SQ_METERS_PER_ACRE
}

pub fn meters_to_miles(m: f64) -> f64 {
    m / METERS_PER_MILE
}

pub fn usd_to_musd(usd: f64) -> f64 {
    usd / USD_PER_MILLION
}

pub fn musd_to_usd(musd: f64) -> f64 {
    musd * USD_PER_MILLION
}

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + 273.15
}
