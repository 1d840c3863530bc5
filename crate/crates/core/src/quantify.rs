//! Pixel-count to physical-area conversion and change-area reports.

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::change::{ChangeMap, ClassCounts};
use crate::raster::GeoMeta;
use crate::{Error, Result};

pub const M2_PER_HA: f64 = 1e4;
pub const M2_PER_KM2: f64 = 1e6;
pub const DAYS_PER_YEAR: f64 = 365.25;

/// Relative area uncertainty. Stated for 0.5–1.0 m imagery (±10–15 %), the
/// upper bound is used; coarser resolutions reuse it and are flagged.
pub const UNCERTAINTY_FRACTION: f64 = 0.15;

/// Finest resolution (m) for which the uncertainty bound is not extrapolated.
pub const UNCERTAINTY_MAX_RESOLUTION_M: f64 = 1.0;

pub const CSV_HEADER: &str = "category,pixels,area_km2,area_ha,uncertainty_km2";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaUnit {
    M2,
    Ha,
    Km2,
}

impl AreaUnit {
    fn m2_per_unit(self) -> f64 {
        match self {
            AreaUnit::M2 => 1.0,
            AreaUnit::Ha => M2_PER_HA,
            AreaUnit::Km2 => M2_PER_KM2,
        }
    }
}

impl FromStr for AreaUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m2" => Ok(AreaUnit::M2),
            "ha" => Ok(AreaUnit::Ha),
            "km2" => Ok(AreaUnit::Km2),
            other => Err(Error::InvalidParameter(format!(
                "unknown area unit {other}"
            ))),
        }
    }
}

fn check_resolution(resolution_m: f64) -> Result<()> {
    if resolution_m > 0.0 && resolution_m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveResolution(resolution_m))
    }
}

/// Ground area of one pixel, `resolution_m²`.
pub fn pixel_area_m2(resolution_m: f64) -> Result<f64> {
    check_resolution(resolution_m)?;
    Ok(resolution_m * resolution_m)
}

/// `n × resolution_m²` expressed in `unit`.
///
/// The product and the unit division are carried in double-double form so
/// the result is within one ulp of the exact rational value.
pub fn area_from_pixels(n: u64, resolution_m: f64, unit: AreaUnit) -> Result<f64> {
    check_resolution(resolution_m)?;
    let r = resolution_m;
    let nf = n as f64;
    // r² = sq_hi + sq_lo exactly
    let sq_hi = r * r;
    let sq_lo = r.mul_add(r, -sq_hi);
    // n·r² ≈ p_hi + p_lo
    let p_hi = nf * sq_hi;
    let p_lo = nf.mul_add(sq_hi, -p_hi) + nf * sq_lo;
    let s = p_hi + p_lo;
    let e = p_lo - (s - p_hi);
    let d = unit.m2_per_unit();
    if d == 1.0 {
        return Ok(s);
    }
    let q = s / d;
    let rem = (-q).mul_add(d, s);
    Ok(q + (rem + e) / d)
}

/// Erosion, accretion and stable areas of one change map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeAreas {
    pub erosion_px: u64,
    pub accretion_px: u64,
    pub stable_land_px: u64,
    pub stable_water_px: u64,
    /// `stable_land_px + stable_water_px`.
    pub stable_px: u64,
    pub erosion_km2: f64,
    pub accretion_km2: f64,
    pub stable_land_km2: f64,
    pub stable_water_km2: f64,
    pub stable_km2: f64,
    /// `accretion_km2 - erosion_km2`; gain is positive.
    pub net_change_km2: f64,
    pub resolution_m: f64,
    pub uncertainty_fraction: f64,
    /// The uncertainty bound is applied outside the resolution band it was stated for.
    pub uncertainty_extrapolated: bool,
}

impl ChangeAreas {
    pub fn from_counts(counts: &ClassCounts, resolution_m: f64) -> Result<Self> {
        let km2 = |n| area_from_pixels(n, resolution_m, AreaUnit::Km2);
        let stable_px = counts.stable_land + counts.stable_water;
        let erosion_km2 = km2(counts.erosion)?;
        let accretion_km2 = km2(counts.accretion)?;
        Ok(Self {
            erosion_px: counts.erosion,
            accretion_px: counts.accretion,
            stable_land_px: counts.stable_land,
            stable_water_px: counts.stable_water,
            stable_px,
            erosion_km2,
            accretion_km2,
            stable_land_km2: km2(counts.stable_land)?,
            stable_water_km2: km2(counts.stable_water)?,
            stable_km2: km2(stable_px)?,
            net_change_km2: accretion_km2 - erosion_km2,
            resolution_m,
            uncertainty_fraction: UNCERTAINTY_FRACTION,
            uncertainty_extrapolated: resolution_m > UNCERTAINTY_MAX_RESOLUTION_M,
        })
    }

    pub fn total_px(&self) -> u64 {
        self.erosion_px + self.accretion_px + self.stable_px
    }

    /// Net uncertainty is the sum of the erosion and accretion bounds.
    pub fn net_uncertainty_km2(&self) -> f64 {
        (self.erosion_km2 + self.accretion_km2) * self.uncertainty_fraction
    }

    /// Report rows in CSV order.
    pub fn rows(&self) -> Vec<StatsRow> {
        let row = |category: &str, pixels: i64, km2: f64, unc: f64| StatsRow {
            category: category.to_string(),
            pixels,
            area_km2: km2,
            area_ha: km2 * (M2_PER_KM2 / M2_PER_HA),
            uncertainty_km2: unc,
        };
        let f = self.uncertainty_fraction;
        vec![
            row(
                "erosion",
                self.erosion_px as i64,
                self.erosion_km2,
                self.erosion_km2 * f,
            ),
            row(
                "accretion",
                self.accretion_px as i64,
                self.accretion_km2,
                self.accretion_km2 * f,
            ),
            row(
                "stable_land",
                self.stable_land_px as i64,
                self.stable_land_km2,
                self.stable_land_km2 * f,
            ),
            row(
                "stable_water",
                self.stable_water_px as i64,
                self.stable_water_km2,
                self.stable_water_km2 * f,
            ),
            row(
                "net",
                self.accretion_px as i64 - self.erosion_px as i64,
                self.net_change_km2,
                self.net_uncertainty_km2(),
            ),
        ]
    }

    /// CSV report; areas rounded to three decimals only here.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in self.rows() {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.category,
                r.pixels,
                fmt3(r.area_km2),
                fmt3(r.area_ha),
                fmt3(r.uncertainty_km2)
            )
            .unwrap();
        }
        out
    }
}

/// Three-decimal formatting without a negative zero.
pub fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// One row of the change-area CSV report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub category: String,
    pub pixels: i64,
    pub area_km2: f64,
    pub area_ha: f64,
    pub uncertainty_km2: f64,
}

const CATEGORIES: [&str; 5] = ["erosion", "accretion", "stable_land", "stable_water", "net"];

/// Parses a change-area CSV report, checking header and row order.
pub fn parse_stats_csv(text: &str) -> Result<Vec<StatsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        Some(h) => {
            return Err(Error::SchemaMismatch(format!(
                "expected header `{CSV_HEADER}`, found `{h}`"
            )))
        }
        None => return Err(Error::SchemaMismatch("empty CSV".into())),
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let rows: Vec<StatsRow> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::SchemaMismatch(e.to_string()))?;
    let cats: Vec<&str> = rows.iter().map(|r| r.category.as_str()).collect();
    if cats != CATEGORIES {
        return Err(Error::SchemaMismatch(format!(
            "expected rows {CATEGORIES:?}, found {cats:?}"
        )));
    }
    Ok(rows)
}

/// Counts pixels per class and converts them to areas with `geo.resolution_m`.
pub fn quantify(cm: &ChangeMap, geo: &GeoMeta) -> Result<ChangeAreas> {
    ChangeAreas::from_counts(&cm.counts(), geo.resolution_m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnualRate {
    pub years: f64,
    pub erosion_km2_per_year: f64,
    pub accretion_km2_per_year: f64,
    pub net_km2_per_year: f64,
}

/// Areas divided by the elapsed time in 365.25-day years.
pub fn annual_rate(areas: &ChangeAreas, t1: NaiveDate, t2: NaiveDate) -> Result<AnnualRate> {
    let days = (t2 - t1).num_days();
    if days < 1 {
        return Err(Error::NonPositiveInterval);
    }
    let years = days as f64 / DAYS_PER_YEAR;
    Ok(AnnualRate {
        years,
        erosion_km2_per_year: areas.erosion_km2 / years,
        accretion_km2_per_year: areas.accretion_km2 / years,
        net_km2_per_year: areas.net_change_km2 / years,
    })
}
