use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::elastic::{apply_field, apply_field_mask, elastic_field, Interpolation};
use crate::raster::BinaryMask;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlipSpec {
    pub horizontal: bool,
    pub vertical: bool,
}

impl Default for FlipSpec {
    fn default() -> Self {
        Self {
            horizontal: true,
            vertical: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticSpec {
    pub enabled: bool,
    /// Displacement scale in pixels.
    pub alpha: f64,
    /// Smoothing std in pixels.
    pub sigma: f64,
}

impl Default for ElasticSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha: 34.0,
            sigma: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhotometricSpec {
    pub enabled: bool,
    /// Largest additive brightness shift as a fraction of full scale.
    pub max_brightness_delta: f64,
    /// Contrast factor range `[min, max]` around mid-grey.
    pub contrast_range: (f64, f64),
}

impl Default for PhotometricSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            max_brightness_delta: 0.2,
            contrast_range: (0.8, 1.25),
        }
    }
}

/// Augmentation settings, loadable from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationSpec {
    pub flips: FlipSpec,
    /// Clockwise rotations in degrees, any of 90, 180, 270.
    pub rotations: Vec<u16>,
    pub elastic: ElasticSpec,
    pub brightness_contrast: PhotometricSpec,
    pub seed: u64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        Self {
            flips: FlipSpec::default(),
            rotations: vec![90, 180, 270],
            elastic: ElasticSpec::default(),
            brightness_contrast: PhotometricSpec::default(),
            seed: 0,
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.rotations.iter().find(|r| ![90, 180, 270].contains(*r)) {
            return Err(Error::InvalidParameter(format!(
                "rotation {r} not in 90/180/270"
            )));
        }
        let e = &self.elastic;
        if e.enabled && (!(e.alpha >= 0.0) || !(e.sigma > 0.0)) {
            return Err(Error::InvalidParameter(
                "elastic needs alpha >= 0, sigma > 0".into(),
            ));
        }
        let p = &self.brightness_contrast;
        if p.enabled {
            if !(0.0..=1.0).contains(&p.max_brightness_delta) {
                return Err(Error::InvalidParameter(
                    "brightness delta outside [0, 1]".into(),
                ));
            }
            let (lo, hi) = p.contrast_range;
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::InvalidParameter(
                    "contrast range must be 0 < min <= max".into(),
                ));
            }
        }
        Ok(())
    }

    /// Geometric transforms the sampler chooses from.
    pub fn candidates(&self) -> Vec<GeometricKind> {
        let mut out = Vec::new();
        if self.flips.horizontal {
            out.push(GeometricKind::FlipHorizontal);
        }
        if self.flips.vertical {
            out.push(GeometricKind::FlipVertical);
        }
        for r in &self.rotations {
            out.push(match r {
                90 => GeometricKind::Rotate90,
                180 => GeometricKind::Rotate180,
                _ => GeometricKind::Rotate270,
            });
        }
        if self.elastic.enabled {
            out.push(GeometricKind::Elastic);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometricKind {
    FlipHorizontal,
    FlipVertical,
    Rotate90,
    Rotate180,
    Rotate270,
    Elastic,
}

/// A fully specified geometric transform, replayable on any raster.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometricTransform {
    Identity,
    FlipHorizontal,
    FlipVertical,
    /// Clockwise.
    Rotate90,
    Rotate180,
    Rotate270,
    Elastic {
        seed: u64,
        alpha: f64,
        sigma: f64,
    },
}

/// Output of [`augment_pair`].
#[derive(Clone, Debug)]
pub struct Augmented {
    pub image: RgbImage,
    pub mask: BinaryMask,
    pub transform: GeometricTransform,
    /// `(brightness_delta, contrast_factor)` applied to the image, if any.
    pub photometric: Option<(f64, f64)>,
}

/// Random state for augmentation `index` of one scene, independent of
/// processing order.
pub fn entry_rng(seed: u64, scene_id: &str, index: u64) -> ChaCha8Rng {
    // FNV-1a, stable across platforms and releases
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in scene_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&h.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Source coordinate for output pixel `(x, y)` of a rigid transform, plus
/// output dimensions.
fn rigid_map(
    t: GeometricTransform,
    w: usize,
    h: usize,
) -> (usize, usize, impl Fn(usize, usize) -> (usize, usize)) {
    let (ow, oh) = match t {
        GeometricTransform::Rotate90 | GeometricTransform::Rotate270 => (h, w),
        _ => (w, h),
    };
    let f = move |x: usize, y: usize| match t {
        GeometricTransform::FlipHorizontal => (w - 1 - x, y),
        GeometricTransform::FlipVertical => (x, h - 1 - y),
        // clockwise: source (sx, sy) lands at (h - 1 - sy, sx)
        GeometricTransform::Rotate90 => (y, h - 1 - x),
        GeometricTransform::Rotate180 => (w - 1 - x, h - 1 - y),
        GeometricTransform::Rotate270 => (w - 1 - y, x),
        _ => (x, y),
    };
    (ow, oh, f)
}

fn remap<T: Copy>(src: &[T], w: usize, h: usize, t: GeometricTransform) -> (Vec<T>, usize, usize) {
    let (ow, oh, f) = rigid_map(t, w, h);
    let mut out = Vec::with_capacity(src.len());
    for y in 0..oh {
        for x in 0..ow {
            let (sx, sy) = f(x, y);
            out.push(src[sy * w + sx]);
        }
    }
    (out, ow, oh)
}

/// Applies `t` to a mask (nearest-neighbour for elastic).
pub fn apply_geometric_mask(t: GeometricTransform, mask: &BinaryMask) -> Result<BinaryMask> {
    if let GeometricTransform::Elastic { seed, alpha, sigma } = t {
        let field = elastic_field(seed, alpha, sigma, mask.dims())?;
        return apply_field_mask(&field, mask);
    }
    let (data, w, h) = remap(mask.as_slice(), mask.width(), mask.height(), t);
    Ok(BinaryMask::from_raw(w, h, data))
}

/// Applies `t` to an image (bilinear for elastic).
pub fn apply_geometric_image(t: GeometricTransform, image: &RgbImage) -> Result<RgbImage> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    if let GeometricTransform::Elastic { seed, alpha, sigma } = t {
        let field = elastic_field(seed, alpha, sigma, (w, h))?;
        return apply_field(&field, image, Interpolation::Bilinear);
    }
    let pixels: Vec<[u8; 3]> = image.pixels().map(|p| p.0).collect();
    let (data, ow, oh) = remap(&pixels, w, h, t);
    Ok(RgbImage::from_raw(ow as u32, oh as u32, data.concat()).expect("same pixel count"))
}

/// `v' = (v - 127.5)·contrast + 127.5 + brightness·255`, clamped.
pub fn photometric(image: &RgbImage, brightness: f64, contrast: f64) -> RgbImage {
    let mut out = image.clone();
    for v in out.iter_mut() {
        let x = (f64::from(*v) - 127.5) * contrast + 127.5 + brightness * 255.0;
        *v = x.round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Samples one geometric transform from the enabled set, applies it
/// identically to image and mask, then jitters the image photometrically.
pub fn augment_pair<R: Rng + ?Sized>(
    image: &RgbImage,
    mask: &BinaryMask,
    spec: &AugmentationSpec,
    rng: &mut R,
) -> Result<Augmented> {
    spec.validate()?;
    let dims = (image.width() as usize, image.height() as usize);
    if dims != mask.dims() {
        return Err(Error::dims(dims, mask.dims()));
    }
    let candidates = spec.candidates();
    let transform = if candidates.is_empty() {
        GeometricTransform::Identity
    } else {
        match candidates[rng.random_range(0..candidates.len())] {
            GeometricKind::FlipHorizontal => GeometricTransform::FlipHorizontal,
            GeometricKind::FlipVertical => GeometricTransform::FlipVertical,
            GeometricKind::Rotate90 => GeometricTransform::Rotate90,
            GeometricKind::Rotate180 => GeometricTransform::Rotate180,
            GeometricKind::Rotate270 => GeometricTransform::Rotate270,
            GeometricKind::Elastic => GeometricTransform::Elastic {
                seed: rng.random(),
                alpha: spec.elastic.alpha,
                sigma: spec.elastic.sigma,
            },
        }
    };
    let mut out_image = apply_geometric_image(transform, image)?;
    let out_mask = apply_geometric_mask(transform, mask)?;

    let p = &spec.brightness_contrast;
    let jitter = if p.enabled {
        let b = if p.max_brightness_delta > 0.0 {
            rng.random_range(-p.max_brightness_delta..=p.max_brightness_delta)
        } else {
            0.0
        };
        let (lo, hi) = p.contrast_range;
        let c = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        out_image = photometric(&out_image, b, c);
        Some((b, c))
    } else {
        None
    };
    Ok(Augmented {
        image: out_image,
        mask: out_mask,
        transform,
        photometric: jitter,
    })
}
