//! Dataset manifests, stratified splits and paired image/mask augmentation.

mod augment;
mod elastic;
mod manifest;
mod split;

pub use augment::{
    apply_geometric_image, apply_geometric_mask, augment_pair, entry_rng, photometric,
    AugmentationSpec, Augmented, ElasticSpec, FlipSpec, GeometricTransform, PhotometricSpec,
};
pub use elastic::{apply_field, apply_field_mask, elastic_field, DisplacementField, Interpolation};
pub use manifest::{read_manifest, write_manifest, ManifestEntry, Severity, Split};
pub use split::{split_manifest, SplitCounts, SplitOptions, Stratum};
