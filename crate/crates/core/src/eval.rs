//! Segmentation metrics: confusion-based scores, boundary IoU, Cohen's kappa.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::change::{ChangeClass, ChangeMap};
use crate::raster::{erode, BinaryMask};
use crate::{Error, Result};

/// Which mask value counts as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveClass {
    Land,
    #[default]
    Water,
}

impl PositiveClass {
    pub fn value(self) -> u8 {
        match self {
            PositiveClass::Land => BinaryMask::LAND,
            PositiveClass::Water => BinaryMask::WATER,
        }
    }

    /// Mask whose foreground is this class.
    pub fn foreground(self, mask: &BinaryMask) -> BinaryMask {
        match self {
            PositiveClass::Land => mask.clone(),
            PositiveClass::Water => mask.invert(),
        }
    }
}

impl FromStr for PositiveClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "land" => Ok(PositiveClass::Land),
            "water" => Ok(PositiveClass::Water),
            other => Err(Error::InvalidParameter(format!(
                "positive class must be land or water, got {other}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Prediction and ground truth agree on every pixel.
    pub fn is_perfect(&self) -> bool {
        self.fp == 0 && self.fn_ == 0
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub pixel_accuracy: f64,
    pub boundary_iou: Option<f64>,
}

pub fn confusion(
    pred: &BinaryMask,
    gt: &BinaryMask,
    positive: PositiveClass,
) -> Result<ConfusionCounts> {
    pred.ensure_same_dims(gt)?;
    let pos = positive.value();
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        match (p == pos, g == pos) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Zero denominators score 1 for a pixel-perfect prediction and 0 otherwise.
fn ratio(num: u64, den: u64, perfect: bool) -> f64 {
    if den == 0 {
        if perfect {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

/// IoU, F1 (= Dice on hard masks), precision, recall and pixel accuracy.
pub fn metrics(c: &ConfusionCounts) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::EmptyInput("confusion counts sum to zero"));
    }
    let perfect = c.is_perfect();
    Ok(MetricsReport {
        iou: ratio(c.tp, c.tp + c.fp + c.fn_, perfect),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_, perfect),
        precision: ratio(c.tp, c.tp + c.fp, perfect),
        recall: ratio(c.tp, c.tp + c.fn_, perfect),
        pixel_accuracy: ratio(c.tp + c.tn, c.total(), perfect),
        boundary_iou: None,
    })
}

/// Foreground pixels within Chebyshev distance `band_px` of a background
/// pixel. Pixels beyond the raster edge count as background.
pub fn boundary_band(mask: &BinaryMask, band_px: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    let interior = erode(mask, band_px);
    BinaryMask::from_fn(w, h, |x, y| {
        let near_edge = x < band_px || y < band_px || x + band_px >= w || y + band_px >= h;
        mask.is_set(x, y) && (near_edge || !interior.is_set(x, y))
    })
}

/// `(|A ∩ B|, |A ∪ B|)` of the two boundary bands.
pub fn boundary_overlap(pred: &BinaryMask, gt: &BinaryMask, band_px: usize) -> Result<(u64, u64)> {
    pred.ensure_same_dims(gt)?;
    if band_px == 0 {
        return Err(Error::InvalidParameter(
            "boundary band must be >= 1 px".into(),
        ));
    }
    let a = boundary_band(pred, band_px);
    let b = boundary_band(gt, band_px);
    let (mut inter, mut union) = (0u64, 0u64);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += u64::from(x & y);
        union += u64::from(x | y);
    }
    Ok((inter, union))
}

/// IoU of the foreground boundary bands; 1.0 when both bands are empty.
pub fn boundary_iou(pred: &BinaryMask, gt: &BinaryMask, band_px: usize) -> Result<f64> {
    let (inter, union) = boundary_overlap(pred, gt, band_px)?;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Full metric set for one pair, boundary IoU taken on the positive class.
pub fn evaluate_pair(
    pred: &BinaryMask,
    gt: &BinaryMask,
    positive: PositiveClass,
    band_px: usize,
) -> Result<(ConfusionCounts, MetricsReport)> {
    let c = confusion(pred, gt, positive)?;
    let mut m = metrics(&c)?;
    m.boundary_iou = Some(boundary_iou(
        &positive.foreground(pred),
        &positive.foreground(gt),
        band_px,
    )?);
    Ok((c, m))
}

/// Chance-corrected agreement `(p_o - p_e) / (1 - p_e)`.
pub fn cohens_kappa(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let n = a.len() as f64;
    let c = confusion(a, b, PositiveClass::Land)?;
    let p_o = (c.tp + c.tn) as f64 / n;
    let a1 = (c.tp + c.fp) as f64 / n;
    let b1 = (c.tp + c.fn_) as f64 / n;
    let p_e = a1 * b1 + (1.0 - a1) * (1.0 - b1);
    if p_e == 1.0 {
        // Both masks are the same single class.
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Rasters whose pixels can be counted by class.
pub trait ClassCount {
    type Class: Copy;
    fn class_pixels(&self, class: Self::Class) -> usize;
    fn pixels(&self) -> usize;
}

impl ClassCount for BinaryMask {
    type Class = PositiveClass;

    fn class_pixels(&self, class: PositiveClass) -> usize {
        match class {
            PositiveClass::Land => self.count_ones(),
            PositiveClass::Water => self.count_zeros(),
        }
    }

    fn pixels(&self) -> usize {
        self.len()
    }
}

impl ClassCount for ChangeMap {
    type Class = ChangeClass;

    fn class_pixels(&self, class: ChangeClass) -> usize {
        self.counts().get(class) as usize
    }

    fn pixels(&self) -> usize {
        self.as_slice().len()
    }
}

/// Fraction of all pixels across `items` that belong to `class`.
pub fn class_fraction<T: ClassCount>(items: &[T], class: T::Class) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::EmptyInput("no rasters given"));
    }
    let hits: usize = items.iter().map(|m| m.class_pixels(class)).sum();
    let total: usize = items.iter().map(ClassCount::pixels).sum();
    Ok(hits as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 10x10 layout: first 30 tp, then 10 fp, 20 fn, 40 tn (positive = land).
    fn layout() -> (BinaryMask, BinaryMask) {
        let pred = BinaryMask::from_fn(10, 10, |x, y| y * 10 + x < 40);
        let gt = BinaryMask::from_fn(10, 10, |x, y| {
            let i = y * 10 + x;
            i < 30 || (40..60).contains(&i)
        });
        (pred, gt)
    }

    #[test]
    fn perfect_prediction() {
        let gt = BinaryMask::zeros(6, 6);
        let c = confusion(&gt, &gt, PositiveClass::Water).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 36,
                ..Default::default()
            }
        );
        let m = metrics(&c).unwrap();
        assert_eq!(
            [m.iou, m.f1, m.precision, m.recall, m.pixel_accuracy],
            [1.0; 5]
        );
    }

    #[test]
    fn total_disagreement() {
        let gt = BinaryMask::from_fn(5, 4, |x, _| x < 2);
        let c = confusion(&gt.invert(), &gt, PositiveClass::Land).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        let m = metrics(&c).unwrap();
        assert_eq!((m.iou, m.f1), (0.0, 0.0));
    }

    #[test]
    fn constructed_30_10_20_40() {
        let (pred, gt) = layout();
        let c = confusion(&pred, &gt, PositiveClass::Land).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 30,
                fp: 10,
                fn_: 20,
                tn: 40
            }
        );
        let m = metrics(&c).unwrap();
        assert_eq!(m.iou, 0.5);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.6);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.pixel_accuracy, 0.7);
    }

    #[test]
    fn zero_denominator_conventions() {
        // Prediction all negative, ground truth has positives.
        let c = ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 5,
            tn: 5,
        };
        let m = metrics(&c).unwrap();
        assert_eq!((m.precision, m.iou, m.recall), (0.0, 0.0, 0.0));
        // Both all negative: perfect match.
        let c = ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 9,
        };
        let m = metrics(&c).unwrap();
        assert_eq!((m.precision, m.iou, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert!(matches!(
            metrics(&ConfusionCounts::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn boundary_iou_simple_cases() {
        let sq = BinaryMask::from_fn(20, 20, |x, y| (3..13).contains(&x) && (3..13).contains(&y));
        assert_eq!(boundary_iou(&sq, &sq, 2).unwrap(), 1.0);
        let far = BinaryMask::from_fn(20, 20, |x, y| x >= 16 && y >= 16);
        assert_eq!(boundary_iou(&sq, &far, 1).unwrap(), 0.0);
        let empty = BinaryMask::zeros(20, 20);
        assert_eq!(boundary_iou(&empty, &empty, 1).unwrap(), 1.0);
        assert!(boundary_iou(&sq, &sq, 0).is_err());
    }

    #[test]
    fn boundary_iou_shifted_square() {
        // Hand oracle: the band of a 10x10 square at width 1 is its outer ring.
        let ring = |x0: usize, y0: usize| -> std::collections::HashSet<(usize, usize)> {
            let mut s = std::collections::HashSet::new();
            for y in y0..y0 + 10 {
                for x in x0..x0 + 10 {
                    if x == x0 || x == x0 + 9 || y == y0 || y == y0 + 9 {
                        s.insert((x, y));
                    }
                }
            }
            s
        };
        let a = ring(5, 5);
        let b = ring(6, 5);
        let expect = a.intersection(&b).count() as f64 / a.union(&b).count() as f64;
        // 36-px rings sharing 9 px on each horizontal edge.
        assert_eq!(a.intersection(&b).count(), 18);
        assert_eq!(a.union(&b).count(), 54);

        let gt = BinaryMask::from_fn(24, 24, |x, y| (5..15).contains(&x) && (5..15).contains(&y));
        let pred = BinaryMask::from_fn(24, 24, |x, y| (6..16).contains(&x) && (5..15).contains(&y));
        assert_eq!(boundary_iou(&pred, &gt, 1).unwrap(), expect);
    }

    #[test]
    fn image_edge_is_boundary() {
        let full = BinaryMask::ones(6, 5);
        let band = boundary_band(&full, 1);
        assert_eq!(band.count_ones(), 6 * 5 - 4 * 3);
    }

    #[test]
    fn kappa_examples() {
        let a = BinaryMask::from_fn(8, 8, |x, y| (x + 2 * y) % 3 == 0);
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
        assert_eq!(
            cohens_kappa(&BinaryMask::ones(3, 3), &BinaryMask::ones(3, 3)).unwrap(),
            1.0
        );

        let a = BinaryMask::new(4, 1, vec![1, 1, 0, 0]).unwrap();
        let b = BinaryMask::new(4, 1, vec![1, 0, 1, 0]).unwrap();
        assert_eq!(cohens_kappa(&a, &b).unwrap(), 0.0);

        // 2000 px, both 50 % land, 65 disagreements each way: p_o = 0.935, p_e = 0.5.
        let a = BinaryMask::from_fn(2000, 1, |x, _| x < 1000);
        let b = BinaryMask::from_fn(2000, 1, |x, _| (65..1065).contains(&x));
        let k = cohens_kappa(&a, &b).unwrap();
        assert!((k - 0.87).abs() < 1e-12, "{k}");
    }

    #[test]
    fn class_fraction_cases() {
        assert_eq!(
            class_fraction(&[BinaryMask::ones(4, 4)], PositiveClass::Land).unwrap(),
            1.0
        );
        let pair = [BinaryMask::ones(4, 4), BinaryMask::zeros(4, 4)];
        assert_eq!(class_fraction(&pair, PositiveClass::Land).unwrap(), 0.5);
        let data = (0..1000)
            .map(|i| {
                if i < 92 {
                    ChangeClass::Erosion
                } else {
                    ChangeClass::StableWater
                }
            })
            .collect();
        let cm = ChangeMap::new(100, 10, data).unwrap();
        assert_eq!(class_fraction(&[cm], ChangeClass::Erosion).unwrap(), 0.092);
        assert!(class_fraction::<BinaryMask>(&[], PositiveClass::Land).is_err());
    }

    fn pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        let v = || proptest::collection::vec(0u8..=1, 12 * 9);
        (v(), v()).prop_map(|(a, b)| {
            (
                BinaryMask::new(12, 9, a).unwrap(),
                BinaryMask::new(12, 9, b).unwrap(),
            )
        })
    }

    proptest! {
        #[test]
        fn symmetry_and_identities((p, g) in pair(), land in any::<bool>()) {
            let pos = if land { PositiveClass::Land } else { PositiveClass::Water };
            let m = metrics(&confusion(&p, &g, pos).unwrap()).unwrap();
            let r = metrics(&confusion(&g, &p, pos).unwrap()).unwrap();
            prop_assert_eq!(m.iou, r.iou);
            prop_assert_eq!(m.f1, r.f1);
            prop_assert_eq!(m.pixel_accuracy, r.pixel_accuracy);
            prop_assert_eq!(m.precision, r.recall);
            prop_assert!(m.iou <= m.f1);
            prop_assert!((m.f1 - 2.0 * m.iou / (1.0 + m.iou)).abs() < 1e-12);
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - h).abs() < 1e-12);
            }
            prop_assert_eq!(boundary_iou(&p, &g, 2).unwrap(), boundary_iou(&g, &p, 2).unwrap());
            let k = cohens_kappa(&p, &g).unwrap();
            prop_assert!((k - cohens_kappa(&g, &p).unwrap()).abs() < 1e-15);
            prop_assert!(k <= 1.0 + 1e-15);
            if p != g { prop_assert!(k < 1.0); }
        }
    }
}
