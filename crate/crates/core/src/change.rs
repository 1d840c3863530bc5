//! Temporal change detection between two co-registered land/water masks.
//!
//! For masks at `t1 < t2`:
//! erosion = land(t1) ∩ water(t2), accretion = water(t1) ∩ land(t2).

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::raster::components::label_where;
use crate::raster::{BinaryMask, Connectivity, GeoMeta, Scene};
use crate::{Error, Result};

/// Mean Earth radius (IUGG), meters.
const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum ChangeClass {
    /// Land at t1, water at t2.
    Erosion,
    /// Water at t1, land at t2.
    Accretion,
    StableLand,
    StableWater,
}

impl ChangeClass {
    pub const ALL: [ChangeClass; 4] = [
        ChangeClass::Erosion,
        ChangeClass::Accretion,
        ChangeClass::StableLand,
        ChangeClass::StableWater,
    ];

    pub fn from_pair(t1: u8, t2: u8) -> Self {
        match (t1, t2) {
            (1, 0) => ChangeClass::Erosion,
            (0, 1) => ChangeClass::Accretion,
            (1, 1) => ChangeClass::StableLand,
            _ => ChangeClass::StableWater,
        }
    }

    /// Render colour.
    pub fn color(self) -> [u8; 3] {
        match self {
            ChangeClass::Erosion => [220, 50, 47],
            ChangeClass::Accretion => [64, 160, 43],
            ChangeClass::StableLand => [200, 200, 200],
            ChangeClass::StableWater => [38, 80, 140],
        }
    }

    pub fn from_color(rgb: [u8; 3]) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.color() == rgb)
    }

    pub fn land_at_t1(self) -> bool {
        matches!(self, ChangeClass::Erosion | ChangeClass::StableLand)
    }

    pub fn land_at_t2(self) -> bool {
        matches!(self, ChangeClass::Accretion | ChangeClass::StableLand)
    }

    pub fn name(self) -> &'static str {
        match self {
            ChangeClass::Erosion => "erosion",
            ChangeClass::Accretion => "accretion",
            ChangeClass::StableLand => "stable_land",
            ChangeClass::StableWater => "stable_water",
        }
    }
}

/// Per-pixel change classification of a mask pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeMap {
    width: usize,
    height: usize,
    data: Vec<ChangeClass>,
}

/// Pixel counts per class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub erosion: u64,
    pub accretion: u64,
    pub stable_land: u64,
    pub stable_water: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.erosion + self.accretion + self.stable_land + self.stable_water
    }

    pub fn get(&self, class: ChangeClass) -> u64 {
        match class {
            ChangeClass::Erosion => self.erosion,
            ChangeClass::Accretion => self.accretion,
            ChangeClass::StableLand => self.stable_land,
            ChangeClass::StableWater => self.stable_water,
        }
    }
}

impl ChangeMap {
    pub fn new(width: usize, height: usize, data: Vec<ChangeClass>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "change map {width}x{height} with {} labels",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, class: ChangeClass) -> Self {
        Self::new(width, height, vec![class; width * height]).expect("positive dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[ChangeClass] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> ChangeClass {
        self.data[y * self.width + x]
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for class in &self.data {
            match class {
                ChangeClass::Erosion => c.erosion += 1,
                ChangeClass::Accretion => c.accretion += 1,
                ChangeClass::StableLand => c.stable_land += 1,
                ChangeClass::StableWater => c.stable_water += 1,
            }
        }
        c
    }

    /// Indicator mask of one class.
    pub fn class_mask(&self, class: ChangeClass) -> BinaryMask {
        BinaryMask::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&c| u8::from(c == class)).collect(),
        )
    }

    /// Recovers `(m1, m2)`: m1 = erosion ∪ stable land, m2 = accretion ∪ stable land.
    pub fn reconstruct(&self) -> (BinaryMask, BinaryMask) {
        let m1 = self.data.iter().map(|c| u8::from(c.land_at_t1())).collect();
        let m2 = self.data.iter().map(|c| u8::from(c.land_at_t2())).collect();
        (
            BinaryMask::from_raw(self.width, self.height, m1),
            BinaryMask::from_raw(self.width, self.height, m2),
        )
    }

    /// Decodes a rendered change map; every pixel must carry a palette colour.
    pub fn from_rgb(image: &RgbImage) -> Result<Self> {
        let mut data = Vec::with_capacity((image.width() * image.height()) as usize);
        for (x, y, Rgb(rgb)) in image.enumerate_pixels() {
            let class = ChangeClass::from_color(*rgb).ok_or(Error::UnknownChangeColor {
                r: rgb[0],
                g: rgb[1],
                b: rgb[2],
                x,
                y,
            })?;
            data.push(class);
        }
        Self::new(image.width() as usize, image.height() as usize, data)
    }
}

/// Classifies every pixel of a `(t1, t2)` mask pair.
pub fn classify_change(m1: &BinaryMask, m2: &BinaryMask) -> Result<ChangeMap> {
    m1.ensure_same_dims(m2)?;
    let data = m1
        .as_slice()
        .iter()
        .zip(m2.as_slice())
        .map(|(&a, &b)| ChangeClass::from_pair(a, b))
        .collect();
    Ok(ChangeMap {
        width: m1.width(),
        height: m1.height(),
        data,
    })
}

/// Drops erosion and accretion components smaller than `min_px`.
///
/// Removed erosion reverts to stable land and removed accretion to stable
/// water, i.e. the pixel keeps its t1 state. Components of exactly `min_px`
/// pixels survive.
pub fn filter_change(cm: &ChangeMap, min_px: usize, connectivity: Connectivity) -> ChangeMap {
    let mut out = cm.clone();
    if min_px <= 1 {
        return out;
    }
    for (class, revert) in [
        (ChangeClass::Erosion, ChangeClass::StableLand),
        (ChangeClass::Accretion, ChangeClass::StableWater),
    ] {
        let (components, grid) =
            label_where(cm.width, cm.height, connectivity, |i| cm.data[i] == class);
        let small: Vec<bool> = std::iter::once(false)
            .chain(components.iter().map(|c| c.pixel_count < min_px))
            .collect();
        for (px, &label) in out.data.iter_mut().zip(&grid.labels) {
            if small[label as usize] {
                *px = revert;
            }
        }
    }
    out
}

/// Colour-codes a change map with the fixed palette.
pub fn render_change_map(cm: &ChangeMap) -> RgbImage {
    RgbImage::from_fn(cm.width as u32, cm.height as u32, |x, y| {
        Rgb(cm.get(x as usize, y as usize).color())
    })
}

/// Diagnostic comparison of two captures before differencing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoregistrationReport {
    pub dims_match: bool,
    pub resolution_match: bool,
    /// Great-circle distance between the two scene origins.
    pub geo_offset_m: f64,
    pub dims_t1: (usize, usize),
    pub dims_t2: (usize, usize),
    pub resolution_t1_m: f64,
    pub resolution_t2_m: f64,
}

impl CoregistrationReport {
    /// Dimensions and resolution agree and the origins lie within `max_offset_m`.
    pub fn passes(&self, max_offset_m: f64) -> bool {
        self.dims_match && self.resolution_match && self.geo_offset_m <= max_offset_m
    }
}

/// Haversine distance in meters.
pub fn great_circle_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Compares dimensions, resolution (relative `tolerance`) and origin offset.
pub fn check_coregistration(
    a: ((usize, usize), &GeoMeta),
    b: ((usize, usize), &GeoMeta),
    tolerance: f64,
) -> CoregistrationReport {
    let (ra, rb) = (a.1.resolution_m, b.1.resolution_m);
    let rel = (ra - rb).abs() / ra.max(rb);
    CoregistrationReport {
        dims_match: a.0 == b.0,
        resolution_match: rel <= tolerance,
        geo_offset_m: great_circle_m(a.1.latitude, a.1.longitude, b.1.latitude, b.1.longitude),
        dims_t1: a.0,
        dims_t2: b.0,
        resolution_t1_m: ra,
        resolution_t2_m: rb,
    }
}

impl Scene {
    pub fn coregistration(&self, later: &Scene, tolerance: f64) -> CoregistrationReport {
        check_coregistration(
            (self.dims(), &self.geo),
            (later.dims(), &later.geo),
            tolerance,
        )
    }
}
