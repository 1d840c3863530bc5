//! Hybrid segmentation loss: weighted focal, soft Dice and soft IoU terms,
//! each with an analytic gradient with respect to the per-pixel probability.
//!
//! Focal is averaged over pixels. Dice and IoU use the sum-of-products
//! relaxation of set overlap, so they are already size-normalised.

use serde::{Deserialize, Serialize};

use crate::raster::BinaryMask;
use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logarithms.
pub const PROB_CLAMP: f64 = 1e-7;

/// Added to soft Dice/IoU denominators.
pub const OVERLAP_SMOOTH: f64 = 1e-6;

/// Per-pixel probability of the positive (land = 1) class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ProbMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "probability map {width}x{height} with {} values",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidRaster(format!(
                "probability {} at index {i} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Hard mask as probabilities 0.0 / 1.0.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            data: mask.as_slice().iter().map(|&v| f64::from(v)).collect(),
        }
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixels with `p >= 0.5` become land.
    pub fn threshold(&self) -> BinaryMask {
        BinaryMask::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&p| u8::from(p >= 0.5)).collect(),
        )
    }

    fn with_value(&self, i: usize, v: f64) -> Self {
        let mut out = self.clone();
        out.data[i] = v;
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub lambda_focal: f64,
    pub lambda_dice: f64,
    pub lambda_iou: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Use `alpha` for positives and `1 - alpha` for negatives instead of
    /// `alpha` on both classes.
    #[serde(default)]
    pub alpha_balanced: bool,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            lambda_focal: 20.0,
            lambda_dice: 1.0,
            lambda_iou: 1.0,
            alpha: 0.25,
            gamma: 2.0,
            alpha_balanced: false,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.lambda_focal, self.lambda_dice, self.lambda_iou];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("loss weights must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma {} must be >= 0",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Scalar loss plus its gradient with respect to every probability.
#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Pixels whose probability hit the log clamp (gradient zero there).
    pub clamped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Focal,
    Dice,
    Iou,
    Total,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Focal,
        LossKind::Dice,
        LossKind::Iou,
        LossKind::Total,
    ];

    pub fn eval(self, p: &ProbMap, y: &BinaryMask, params: &LossParams) -> Result<LossOutput> {
        match self {
            LossKind::Focal => focal_loss(p, y, params),
            LossKind::Dice => dice_loss(p, y),
            LossKind::Iou => iou_loss(p, y),
            LossKind::Total => total_loss(p, y, params),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Focal => "focal",
            LossKind::Dice => "dice",
            LossKind::Iou => "iou",
            LossKind::Total => "total",
        }
    }
}

fn check_dims(p: &ProbMap, y: &BinaryMask) -> Result<()> {
    if p.dims() != y.dims() {
        return Err(Error::dims(p.dims(), y.dims()));
    }
    Ok(())
}

/// Mean of `-a_t (1 - p_t)^gamma ln(p_t)` where `p_t` is `p` on land and
/// `1 - p` on water.
pub fn focal_loss(p: &ProbMap, y: &BinaryMask, params: &LossParams) -> Result<LossOutput> {
    check_dims(p, y)?;
    params.validate()?;
    let n = p.data.len() as f64;
    let (alpha, gamma) = (params.alpha, params.gamma);
    let mut total = 0.0;
    let mut clamped = 0;
    let mut grad = Vec::with_capacity(p.data.len());
    for (&raw, &label) in p.data.iter().zip(y.as_slice()) {
        let prob = raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let hit_clamp = prob != raw;
        clamped += usize::from(hit_clamp);
        let positive = label == 1;
        let pt = if positive { prob } else { 1.0 - prob };
        let a_t = if params.alpha_balanced && !positive {
            1.0 - alpha
        } else {
            alpha
        };
        let q = 1.0 - pt;
        let ln_pt = pt.ln();
        total += -a_t * q.powf(gamma) * ln_pt;

        if hit_clamp {
            grad.push(0.0);
            continue;
        }
        // d/dpt of -a_t q^γ ln pt
        let modulating = if gamma == 0.0 {
            0.0
        } else {
            gamma * q.powf(gamma - 1.0) * ln_pt
        };
        let d_pt = a_t * (modulating - q.powf(gamma) / pt);
        let d_p = if positive { d_pt } else { -d_pt };
        grad.push(d_p / n);
    }
    Ok(LossOutput {
        value: total / n,
        grad,
        clamped,
    })
}

fn overlap_sums(p: &ProbMap, y: &BinaryMask) -> (f64, f64, f64) {
    let (mut inter, mut sum_p, mut sum_y) = (0.0, 0.0, 0.0);
    for (&pi, &yi) in p.data.iter().zip(y.as_slice()) {
        let yi = f64::from(yi);
        inter += pi * yi;
        sum_p += pi;
        sum_y += yi;
    }
    (inter, sum_p, sum_y)
}

/// `1 - 2 Σpy / (Σp + Σy + smooth)`.
pub fn dice_loss(p: &ProbMap, y: &BinaryMask) -> Result<LossOutput> {
    check_dims(p, y)?;
    let (inter, sum_p, sum_y) = overlap_sums(p, y);
    let den = sum_p + sum_y + OVERLAP_SMOOTH;
    let grad = y
        .as_slice()
        .iter()
        .map(|&yi| -(2.0 * f64::from(yi) * den - 2.0 * inter) / (den * den))
        .collect();
    Ok(LossOutput {
        value: 1.0 - 2.0 * inter / den,
        grad,
        clamped: 0,
    })
}

/// `1 - Σpy / (Σp + Σy - Σpy + smooth)`.
pub fn iou_loss(p: &ProbMap, y: &BinaryMask) -> Result<LossOutput> {
    check_dims(p, y)?;
    let (inter, sum_p, sum_y) = overlap_sums(p, y);
    let den = sum_p + sum_y - inter + OVERLAP_SMOOTH;
    let grad = y
        .as_slice()
        .iter()
        .map(|&yi| {
            let yi = f64::from(yi);
            -(yi * den - inter * (1.0 - yi)) / (den * den)
        })
        .collect();
    Ok(LossOutput {
        value: 1.0 - inter / den,
        grad,
        clamped: 0,
    })
}

/// `λ_focal·focal + λ_dice·dice + λ_iou·iou`, gradients combined the same way.
pub fn total_loss(p: &ProbMap, y: &BinaryMask, params: &LossParams) -> Result<LossOutput> {
    let focal = focal_loss(p, y, params)?;
    let dice = dice_loss(p, y)?;
    let iou = iou_loss(p, y)?;
    let (wf, wd, wi) = (params.lambda_focal, params.lambda_dice, params.lambda_iou);
    let grad = focal
        .grad
        .iter()
        .zip(&dice.grad)
        .zip(&iou.grad)
        .map(|((f, d), i)| wf * f + wd * d + wi * i)
        .collect();
    Ok(LossOutput {
        value: wf * focal.value + wd * dice.value + wi * iou.value,
        grad,
        clamped: focal.clamped,
    })
}

/// Dice and IoU losses of the thresholded prediction (`p >= 0.5`), i.e. the
/// set form with no relaxation. Value only; not differentiable.
pub fn hard_overlap_losses(p: &ProbMap, y: &BinaryMask) -> Result<(f64, f64)> {
    check_dims(p, y)?;
    let hard = ProbMap::from_mask(&p.threshold());
    let (inter, sum_p, sum_y) = overlap_sums(&hard, y);
    let union = sum_p + sum_y - inter;
    if union == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((1.0 - 2.0 * inter / (sum_p + sum_y), 1.0 - inter / union))
}

/// Largest relative error between the analytic gradient and central
/// differences `(L(p + h e_i) - L(p - h e_i)) / 2h` over all pixels.
pub fn check_gradient(
    kind: LossKind,
    p: &ProbMap,
    y: &BinaryMask,
    params: &LossParams,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step {h} must be positive"
        )));
    }
    if let Some((index, &value)) = p
        .data
        .iter()
        .enumerate()
        .find(|(_, &v)| v - h < 0.0 || v + h > 1.0)
    {
        return Err(Error::StepTooLarge {
            step: h,
            index,
            value,
        });
    }
    let analytic = kind.eval(p, y, params)?.grad;
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let v = p.data[i];
        let up = kind.eval(&p.with_value(i, v + h), y, params)?.value;
        let down = kind.eval(&p.with_value(i, v - h), y, params)?.value;
        let numeric = (up - down) / (2.0 * h);
        let scale = a.abs().max(numeric.abs());
        let err = if scale < 1e-12 {
            (a - numeric).abs()
        } else {
            (a - numeric).abs() / scale
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn four() -> (ProbMap, BinaryMask) {
        (
            ProbMap::new(4, 1, vec![0.8, 0.6, 0.4, 0.2]).unwrap(),
            BinaryMask::new(4, 1, vec![1, 1, 0, 0]).unwrap(),
        )
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (ProbMap, BinaryMask) {
        let p = (0..64).map(|_| rng.random_range(0.05..0.95)).collect();
        let y = (0..64).map(|_| u8::from(rng.random_bool(0.5))).collect();
        (
            ProbMap::new(8, 8, p).unwrap(),
            BinaryMask::new(8, 8, y).unwrap(),
        )
    }

    #[test]
    fn defaults() {
        let d = LossParams::default();
        assert_eq!(
            (
                d.lambda_focal,
                d.lambda_dice,
                d.lambda_iou,
                d.alpha,
                d.gamma
            ),
            (20.0, 1.0, 1.0, 0.25, 2.0)
        );
        assert!(!d.alpha_balanced);
    }

    #[test]
    fn focal_single_pixel() {
        let p = ProbMap::new(1, 1, vec![0.5]).unwrap();
        let y = BinaryMask::ones(1, 1);
        let out = focal_loss(&p, &y, &LossParams::default()).unwrap();
        let expect = 0.25 * 0.25 * std::f64::consts::LN_2;
        assert!((out.value - expect).abs() < 1e-15);
        assert!((out.value - 0.043321).abs() < 1e-6);
    }

    #[test]
    fn focal_perfect_confidence() {
        let y = BinaryMask::from_fn(4, 4, |x, _| x % 2 == 0);
        let p = ProbMap::from_mask(&y);
        let out = focal_loss(&p, &y, &LossParams::default()).unwrap();
        assert!(out.value < 1e-5);
        assert_eq!(out.clamped, 16);
    }

    #[test]
    fn focal_reduces_to_bce() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = LossParams {
            alpha: 1.0,
            gamma: 0.0,
            ..Default::default()
        };
        for _ in 0..10 {
            let (p, y) = random_instance(&mut rng);
            let bce: f64 = p
                .as_slice()
                .iter()
                .zip(y.as_slice())
                .map(|(&pi, &yi)| if yi == 1 { -pi.ln() } else { -(1.0 - pi).ln() })
                .sum::<f64>()
                / 64.0;
            let out = focal_loss(&p, &y, &params).unwrap();
            assert!((out.value - bce).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_balanced_weights_negatives() {
        let p = ProbMap::new(1, 1, vec![0.5]).unwrap();
        let y = BinaryMask::zeros(1, 1);
        let sym = focal_loss(&p, &y, &LossParams::default()).unwrap().value;
        let bal = focal_loss(
            &p,
            &y,
            &LossParams {
                alpha_balanced: true,
                ..Default::default()
            },
        )
        .unwrap()
        .value;
        assert!((bal / sym - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dice_cases() {
        let (p, y) = four();
        let out = dice_loss(&p, &y).unwrap();
        assert!((out.value - 0.3).abs() < 1e-6);
        let y = BinaryMask::from_fn(5, 5, |x, y| x > y);
        assert!(dice_loss(&ProbMap::from_mask(&y), &y).unwrap().value < 1e-5);
        let disjoint = dice_loss(&ProbMap::from_mask(&y.invert()), &y)
            .unwrap()
            .value;
        assert!((disjoint - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iou_cases() {
        let (p, y) = four();
        let out = iou_loss(&p, &y).unwrap();
        assert!((out.value - (1.0 - 1.4 / 2.6)).abs() < 1e-6);
        assert!((out.value - 0.46154).abs() < 1e-5);
        let y = BinaryMask::from_fn(5, 5, |x, y| x > y);
        assert!(iou_loss(&ProbMap::from_mask(&y), &y).unwrap().value < 1e-5);
        assert!(
            (iou_loss(&ProbMap::from_mask(&y.invert()), &y)
                .unwrap()
                .value
                - 1.0)
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn total_projections() {
        let (p, y) = four();
        let zero = LossParams {
            lambda_focal: 0.0,
            lambda_dice: 0.0,
            lambda_iou: 0.0,
            ..Default::default()
        };
        let out = total_loss(&p, &y, &zero).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.grad.iter().all(|&g| g == 0.0));

        let focal_only = LossParams {
            lambda_focal: 1.0,
            lambda_dice: 0.0,
            lambda_iou: 0.0,
            ..Default::default()
        };
        assert_eq!(
            total_loss(&p, &y, &focal_only).unwrap().value,
            focal_loss(&p, &y, &focal_only).unwrap().value
        );

        let d = LossParams::default();
        let want = 20.0 * focal_loss(&p, &y, &d).unwrap().value
            + dice_loss(&p, &y).unwrap().value
            + iou_loss(&p, &y).unwrap().value;
        assert!((total_loss(&p, &y, &d).unwrap().value - want).abs() < 1e-15);
    }

    #[test]
    fn linear_in_weights() {
        let (p, y) = four();
        let at = |lf: f64| {
            total_loss(
                &p,
                &y,
                &LossParams {
                    lambda_focal: lf,
                    ..Default::default()
                },
            )
            .unwrap()
            .value
        };
        let (a, b, c) = (at(0.0), at(10.0), at(20.0));
        assert!(((c - b) - (b - a)).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let p = ProbMap::new(2, 2, vec![0.5; 4]).unwrap();
        let y = BinaryMask::zeros(4, 1);
        for kind in LossKind::ALL {
            assert!(matches!(
                kind.eval(&p, &y, &LossParams::default()),
                Err(Error::DimensionMismatch { .. })
            ));
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(ProbMap::new(1, 2, vec![0.5, 1.2]).is_err());
        assert!(ProbMap::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn gradient_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = LossParams::default();
        for _ in 0..5 {
            let (p, y) = random_instance(&mut rng);
            for kind in LossKind::ALL {
                let err = check_gradient(kind, &p, &y, &d, 1e-5).unwrap();
                assert!(err < 1e-4, "{kind:?}: {err}");
            }
        }
        let p = ProbMap::new(8, 8, vec![0.5; 64]).unwrap();
        let y = BinaryMask::from_fn(8, 8, |x, _| x < 3);
        assert!(check_gradient(LossKind::Dice, &p, &y, &d, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn focal_gradient_near_certainty() {
        let d = LossParams::default();
        let y = BinaryMask::ones(1, 1);
        for pt in [0.5, 0.8, 0.9, 0.95, 0.98, 0.99] {
            let p = ProbMap::new(1, 1, vec![pt]).unwrap();
            let err = check_gradient(LossKind::Focal, &p, &y, &d, 1e-5).unwrap();
            assert!(err < 1e-3, "p_t = {pt}: {err}");
        }
    }

    #[test]
    fn step_too_large() {
        let p = ProbMap::new(2, 1, vec![0.5, 0.99]).unwrap();
        let y = BinaryMask::ones(2, 1);
        assert!(matches!(
            check_gradient(LossKind::Total, &p, &y, &LossParams::default(), 0.05),
            Err(Error::StepTooLarge { index: 1, .. })
        ));
    }

    #[test]
    fn monotone_in_positive_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = LossParams::default();
        for _ in 0..20 {
            let (p, y) = random_instance(&mut rng);
            for kind in [LossKind::Focal, LossKind::Dice, LossKind::Iou] {
                let g = kind.eval(&p, &y, &d).unwrap().grad;
                for (gi, &yi) in g.iter().zip(y.as_slice()) {
                    if yi == 1 {
                        assert!(*gi <= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn hard_mask_dice_jaccard_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let y = BinaryMask::from_fn(8, 8, |_, _| rng.random_bool(0.4));
            let pred = BinaryMask::from_fn(8, 8, |_, _| rng.random_bool(0.5));
            let p = ProbMap::from_mask(&pred);
            let dice = 1.0 - dice_loss(&p, &y).unwrap().value;
            let jac = 1.0 - iou_loss(&p, &y).unwrap().value;
            assert!((dice - 2.0 * jac / (1.0 + jac)).abs() < 1e-6);
            let (hd, hi) = hard_overlap_losses(&p, &y).unwrap();
            assert!((hd - (1.0 - dice)).abs() < 1e-6 && (hi - (1.0 - jac)).abs() < 1e-6);
        }
    }
}
