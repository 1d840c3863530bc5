use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::raster::BinaryMask;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    Bilinear,
}

/// Per-pixel sampling offsets: output `(x, y)` reads input `(x + dx, y + dy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with clamped edges.
fn blur(data: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * data[y * w + clamp(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[clamp(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Uniform `[-1, 1]` noise per axis, Gaussian-smoothed with std `sigma` and
/// scaled by `alpha` pixels. Deterministic in `seed`.
pub fn elastic_field(
    seed: u64,
    alpha: f64,
    sigma: f64,
    dims: (usize, usize),
) -> Result<DisplacementField> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "elastic sigma {sigma} must be > 0"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "elastic alpha {alpha} must be >= 0"
        )));
    }
    let (w, h) = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = || -> Vec<f64> { (0..w * h).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let (nx, ny) = (noise(), noise());
    let kernel = gaussian_kernel(sigma);
    let scale = |v: Vec<f64>| v.into_iter().map(|d| d * alpha).collect();
    Ok(DisplacementField {
        width: w,
        height: h,
        dx: scale(blur(&nx, w, h, &kernel)),
        dy: scale(blur(&ny, w, h, &kernel)),
    })
}

/// Warps interleaved 8-bit channels through the field with edge clamping.
fn warp_channels(
    field: &DisplacementField,
    src: &[u8],
    channels: usize,
    interp: Interpolation,
) -> Vec<u8> {
    let (w, h) = (field.width, field.height);
    let at = |x: usize, y: usize, c: usize| src[(y * w + x) * channels + c];
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let sx = (x as f64 + field.dx[i]).clamp(0.0, (w - 1) as f64);
            let sy = (y as f64 + field.dy[i]).clamp(0.0, (h - 1) as f64);
            match interp {
                Interpolation::Nearest => {
                    let (nx, ny) = (sx.round() as usize, sy.round() as usize);
                    out.extend((0..channels).map(|c| at(nx, ny, c)));
                }
                Interpolation::Bilinear => {
                    let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
                    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                    let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
                    for c in 0..channels {
                        let top = at(x0, y0, c) as f64 * (1.0 - fx) + at(x1, y0, c) as f64 * fx;
                        let bot = at(x0, y1, c) as f64 * (1.0 - fx) + at(x1, y1, c) as f64 * fx;
                        out.push((top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8);
                    }
                }
            }
        }
    }
    out
}

fn check_field_dims(field: &DisplacementField, dims: (usize, usize)) -> Result<()> {
    if (field.width, field.height) != dims {
        return Err(Error::dims((field.width, field.height), dims));
    }
    Ok(())
}

pub fn apply_field(
    field: &DisplacementField,
    image: &RgbImage,
    interp: Interpolation,
) -> Result<RgbImage> {
    check_field_dims(field, (image.width() as usize, image.height() as usize))?;
    let data = warp_channels(field, image.as_raw(), 3, interp);
    Ok(RgbImage::from_raw(image.width(), image.height(), data).expect("same size"))
}

/// Nearest-neighbour warp of a mask; output stays strictly binary.
pub fn apply_field_mask(field: &DisplacementField, mask: &BinaryMask) -> Result<BinaryMask> {
    check_field_dims(field, mask.dims())?;
    let data = warp_channels(field, mask.as_slice(), 1, Interpolation::Nearest);
    Ok(BinaryMask::from_raw(mask.width(), mask.height(), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn zero_alpha_is_identity() {
        let img = RgbImage::from_fn(13, 9, |x, y| Rgb([x as u8 * 10, y as u8 * 20, 7]));
        let mask = BinaryMask::from_fn(13, 9, |x, y| x > y);
        let f = elastic_field(1, 0.0, 4.0, (13, 9)).unwrap();
        for interp in [Interpolation::Nearest, Interpolation::Bilinear] {
            assert_eq!(apply_field(&f, &img, interp).unwrap(), img);
        }
        assert_eq!(apply_field_mask(&f, &mask).unwrap(), mask);
    }

    #[test]
    fn mask_stays_binary_and_constant_stays_constant() {
        let f = elastic_field(9, 34.0, 4.0, (32, 24)).unwrap();
        assert!(f.dx.iter().any(|d| d.abs() > 0.1));
        let mask = BinaryMask::from_fn(32, 24, |x, y| (x / 5 + y / 3) % 2 == 0);
        let warped = apply_field_mask(&f, &mask).unwrap();
        assert!(warped.as_slice().iter().all(|&v| v <= 1));
        let flat = RgbImage::from_pixel(32, 24, Rgb([91, 12, 200]));
        assert_eq!(
            apply_field(&f, &flat, Interpolation::Bilinear).unwrap(),
            flat
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let a = elastic_field(5, 10.0, 3.0, (16, 16)).unwrap();
        let b = elastic_field(5, 10.0, 3.0, (16, 16)).unwrap();
        let c = elastic_field(6, 10.0, 3.0, (16, 16)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(elastic_field(5, 1.0, 0.0, (4, 4)).is_err());
    }

    #[test]
    fn kernel_normalised() {
        let k = gaussian_kernel(2.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(k.len() % 2, 1);
    }
}
