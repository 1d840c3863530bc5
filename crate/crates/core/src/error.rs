use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("ambiguous mask value {value} at ({x}, {y}) in {path}: expected 0 or >= 128")]
    AmbiguousMaskValue {
        path: PathBuf,
        value: u8,
        x: u32,
        y: u32,
    },

    #[error("colour ({r}, {g}, {b}) at ({x}, {y}) is not in the change-map palette")]
    UnknownChangeColor { r: u8, g: u8, b: u8, x: u32, y: u32 },

    #[error("resolution must be positive, got {0}")]
    NonPositiveResolution(f64),

    #[error("t2 must be at least one day after t1")]
    NonPositiveInterval,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("finite-difference step {step} leaves [0, 1] at pixel {index} (p = {value})")]
    StepTooLarge { step: f64, index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} entries but manifest has {available}")]
    InsufficientEntries { requested: usize, available: usize },

    #[error("entry {scene_id} is missing stratum field `{field}`")]
    MissingStratumField {
        scene_id: String,
        field: &'static str,
    },

    #[error("duplicate scene_id {0}")]
    DuplicateSceneId(String),

    #[error("site {site} year {year} appears in more than one split")]
    TemporalLeak { site: String, year: i32 },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Tiff(#[from] tiff::TiffError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_w: left.0,
            left_h: left.1,
            right_w: right.0,
            right_h: right.1,
        }
    }
}
