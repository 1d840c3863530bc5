use chrono::NaiveDate;
use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::{Error, Result};

/// Ground resolution and georeferencing for one capture.
///
/// Serialized as the sidecar JSON document next to each mask or image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoMeta {
    /// Meters per pixel.
    pub resolution_m: f64,
    pub latitude: f64,
    pub longitude: f64,
    pub elevation_m: f64,
    pub capture_date: NaiveDate,
}

impl GeoMeta {
    pub fn new(
        resolution_m: f64,
        latitude: f64,
        longitude: f64,
        elevation_m: f64,
        capture_date: NaiveDate,
    ) -> Result<Self> {
        let geo = Self {
            resolution_m,
            latitude,
            longitude,
            elevation_m,
            capture_date,
        };
        geo.validate()?;
        Ok(geo)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_m > 0.0) || !self.resolution_m.is_finite() {
            return Err(Error::NonPositiveResolution(self.resolution_m));
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::InvalidParameter(format!(
                "latitude {} outside [-90, 90]",
                self.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::InvalidParameter(format!(
                "longitude {} outside [-180, 180]",
                self.longitude
            )));
        }
        if !self.elevation_m.is_finite() {
            return Err(Error::InvalidParameter("elevation must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let geo: Self = serde_json::from_str(text)?;
        geo.validate()?;
        Ok(geo)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("GeoMeta serializes")
    }
}

/// One dated satellite capture.
#[derive(Clone, Debug)]
pub struct Scene {
    pub image: RgbImage,
    pub mask: Option<BinaryMask>,
    pub geo: GeoMeta,
}

impl Scene {
    pub fn new(image: RgbImage, mask: Option<BinaryMask>, geo: GeoMeta) -> Result<Self> {
        let dims = (image.width() as usize, image.height() as usize);
        if dims.0 == 0 || dims.1 == 0 {
            return Err(Error::InvalidRaster("scene image is empty".into()));
        }
        if let Some(m) = &mask {
            if m.dims() != dims {
                return Err(Error::dims(dims, m.dims()));
            }
        }
        geo.validate()?;
        Ok(Self { image, mask, geo })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.image.width() as usize, self.image.height() as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 15).unwrap()
    }

    #[test]
    fn json_round_trip_uses_iso_dates() {
        let g = GeoMeta::new(10.0, 23.5, 90.25, 7.0, date()).unwrap();
        let text = g.to_json();
        assert!(text.contains("\"capture_date\": \"2020-01-15\""));
        assert_eq!(GeoMeta::from_json(&text).unwrap(), g);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            GeoMeta::new(0.0, 0.0, 0.0, 0.0, date()),
            Err(Error::NonPositiveResolution(_))
        ));
        assert!(GeoMeta::new(1.0, 91.0, 0.0, 0.0, date()).is_err());
        assert!(GeoMeta::new(1.0, 0.0, -180.5, 0.0, date()).is_err());
    }

    #[test]
    fn scene_mask_dims_checked() {
        let g = GeoMeta::new(10.0, 0.0, 0.0, 0.0, date()).unwrap();
        let img = RgbImage::new(4, 3);
        assert!(Scene::new(img.clone(), Some(BinaryMask::zeros(4, 3)), g.clone()).is_ok());
        assert!(Scene::new(img, Some(BinaryMask::zeros(3, 4)), g).is_err());
    }
}
