//! Grid types and binary-mask algebra shared by every other module.

pub(crate) mod components;
mod geo;
mod mask;
mod morphology;

pub use components::{connected_components, filter_min_area, Component, Connectivity, LabelGrid};
pub use geo::{GeoMeta, Scene};
pub use mask::{mask_logic, BinaryMask, MaskOp};
pub use morphology::{dilate, erode, morphological, MorphOp};
