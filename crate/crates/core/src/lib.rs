//! Riverbank change analysis on land/water raster masks.
//!
//! Masks use a fixed polarity throughout: land is `1`, water is `0`. A pair of
//! co-registered masks from two dates is classified pixel by pixel into
//! erosion (land to water), accretion (water to land) and the two stable
//! classes, filtered by minimum component area, and converted to physical
//! areas from the ground resolution.
//!
//! Modules:
//!
//! - [`raster`]: mask type, boolean algebra, connected components, morphology
//! - [`segment`]: colour-channel land/water segmenter and histogram equalization
//! - [`change`]: temporal change classification, filtering, rendering
//! - [`quantify`]: pixel-to-area conversion and change-area reports
//! - [`eval`]: segmentation metrics, boundary IoU, Cohen's kappa
//! - [`loss`]: focal/Dice/IoU hybrid loss with analytic gradients
//! - [`dataset`]: manifests, stratified splits, paired augmentation
//! - [`io`]: mask, image, probability-map and sidecar file formats

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod change;
pub mod dataset;
mod error;
pub mod eval;
pub mod io;
pub mod loss;
pub mod quantify;
pub mod raster;
pub mod segment;

pub use change::{
    check_coregistration, classify_change, filter_change, render_change_map, ChangeClass,
    ChangeMap, CoregistrationReport,
};
pub use error::{Error, Result};
pub use eval::{
    boundary_iou, class_fraction, cohens_kappa, confusion, metrics, ConfusionCounts, MetricsReport,
    PositiveClass,
};
pub use loss::{
    check_gradient, dice_loss, focal_loss, iou_loss, total_loss, LossKind, LossOutput, LossParams,
    ProbMap,
};
pub use quantify::{
    annual_rate, area_from_pixels, pixel_area_m2, quantify, AnnualRate, AreaUnit, ChangeAreas,
};
pub use raster::{
    connected_components, filter_min_area, mask_logic, morphological, BinaryMask, Component,
    Connectivity, GeoMeta, LabelGrid, MaskOp, MorphOp, Scene,
};
pub use segment::{
    color_channel_segment, histogram_equalize, refine_mask, ChannelMode, SegmenterParams,
    ThresholdMode,
};

/// Raster type accepted by the segmenter and renderers.
pub use image::RgbImage;
