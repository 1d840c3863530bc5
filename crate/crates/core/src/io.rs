//! File formats.
//!
//! - Masks: single-channel 8-bit PNG or PGM. `0` is water, `>= 128` is land,
//!   `1..=127` is rejected as ambiguous. Written as 0/255.
//! - Geo sidecar: JSON with `resolution_m`, `latitude`, `longitude`,
//!   `elevation_m`, `capture_date` (ISO-8601 date), stored next to the raster
//!   with a `.json` extension.
//! - Change maps: RGB PNG/PPM in the fixed palette of [`ChangeClass`].
//! - Probability maps: 32-bit float grayscale TIFF, or the flat `RBPM` format:
//!   4-byte magic `RBPM`, width and height as little-endian `u32`, then
//!   `width * height` little-endian `f32` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, RgbImage};
use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};

use crate::change::ChangeMap;
use crate::loss::ProbMap;
use crate::raster::{BinaryMask, GeoMeta};
use crate::{Error, Result};

pub const PROB_MAGIC: &[u8; 4] = b"RBPM";

/// Decodes a grayscale raster into a mask, rejecting values in `1..=127`.
pub fn mask_from_gray(gray: &GrayImage, origin: &Path) -> Result<BinaryMask> {
    let (w, h) = gray.dimensions();
    let mut data = Vec::with_capacity((w * h) as usize);
    for (x, y, Luma([v])) in gray.enumerate_pixels() {
        match *v {
            0 => data.push(0),
            128..=255 => data.push(1),
            value => {
                return Err(Error::AmbiguousMaskValue {
                    path: origin.to_path_buf(),
                    value,
                    x,
                    y,
                })
            }
        }
    }
    BinaryMask::new(w as usize, h as usize, data)
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    let (w, h) = mask.dims();
    GrayImage::from_raw(
        w as u32,
        h as u32,
        mask.as_slice().iter().map(|&v| v * 255).collect(),
    )
    .expect("buffer length matches dimensions")
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = image::open(path)?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::InvalidRaster(format!(
                "{}: mask must be single-channel 8-bit, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    mask_from_gray(&gray, path)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    mask_to_gray(mask).save(path.as_ref())?;
    Ok(())
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    Ok(image::open(path.as_ref())?.to_rgb8())
}

pub fn write_rgb(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    img.save(path.as_ref())?;
    Ok(())
}

/// `scene.png` -> `scene.json`.
pub fn sidecar_path(raster: impl AsRef<Path>) -> PathBuf {
    raster.as_ref().with_extension("json")
}

pub fn read_geo(path: impl AsRef<Path>) -> Result<GeoMeta> {
    let text = std::fs::read_to_string(path.as_ref())?;
    GeoMeta::from_json(&text)
}

pub fn write_geo(path: impl AsRef<Path>, geo: &GeoMeta) -> Result<()> {
    std::fs::write(path.as_ref(), geo.to_json() + "\n")?;
    Ok(())
}

pub fn read_change_map(path: impl AsRef<Path>) -> Result<ChangeMap> {
    ChangeMap::from_rgb(&read_rgb(path)?)
}

fn is_tiff(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("tif" | "tiff")
    )
}

/// Reads a probability map from TIFF (`.tif`/`.tiff`) or the flat `RBPM` format.
pub fn read_prob_map(path: impl AsRef<Path>) -> Result<ProbMap> {
    let path = path.as_ref();
    let (w, h, values) = if is_tiff(path) {
        let mut dec = Decoder::new(BufReader::new(File::open(path)?))?;
        let (w, h) = dec.dimensions()?;
        let values = match dec.read_image()? {
            DecodingResult::F32(v) => v,
            _ => {
                return Err(Error::InvalidRaster(format!(
                    "{}: expected 32-bit float grayscale TIFF",
                    path.display()
                )))
            }
        };
        (w as usize, h as usize, values)
    } else {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        decode_flat(&bytes).map_err(|e| match e {
            Error::InvalidRaster(msg) => Error::InvalidRaster(format!("{}: {msg}", path.display())),
            other => other,
        })?
    };
    ProbMap::new(w, h, values.into_iter().map(f64::from).collect())
}

fn decode_flat(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < 12 || &bytes[..4] != PROB_MAGIC {
        return Err(Error::InvalidRaster("missing RBPM header".into()));
    }
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if body.len() != w * h * 4 {
        return Err(Error::InvalidRaster(format!(
            "RBPM body has {} bytes, expected {}",
            body.len(),
            w * h * 4
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((w, h, values))
}

/// Writes a probability map as TIFF or `RBPM`, chosen by extension.
pub fn write_prob_map(path: impl AsRef<Path>, map: &ProbMap) -> Result<()> {
    let path = path.as_ref();
    let values: Vec<f32> = map.as_slice().iter().map(|&v| v as f32).collect();
    let mut out = BufWriter::new(File::create(path)?);
    if is_tiff(path) {
        let mut enc = TiffEncoder::new(&mut out)?;
        enc.write_image::<colortype::Gray32Float>(
            map.width() as u32,
            map.height() as u32,
            &values,
        )?;
    } else {
        out.write_all(PROB_MAGIC)?;
        out.write_all(&(map.width() as u32).to_le_bytes())?;
        out.write_all(&(map.height() as u32).to_le_bytes())?;
        for v in values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Grayscale float image helper used by tests and the CLI to preview maps.
pub fn prob_map_to_gray(map: &ProbMap) -> GrayImage {
    ImageBuffer::from_fn(map.width() as u32, map.height() as u32, |x, y| {
        Luma([(map.get(x as usize, y as usize) * 255.0).round() as u8])
    })
}
