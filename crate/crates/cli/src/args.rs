use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use riverbank_core::dataset::Stratum;
use riverbank_core::{ChannelMode, Connectivity, PositiveClass, SegmenterParams, ThresholdMode};

#[derive(Parser, Debug)]
#[command(
    name = "riverbank",
    version,
    about = "Map riverbank erosion and accretion from paired satellite scenes"
)]
pub struct Cli {
    /// Worker threads; outputs do not depend on it
    #[arg(long, global = true, env = "RIVERBANK_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    /// Seed for dataset splitting and augmentation
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Log progress to stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,

    /// TOML (or .json) file whose keys are flag names; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Threshold RGB scenes into land/water masks
    Segment(SegmentArgs),
    /// Classify change between two masks
    Diff(DiffArgs),
    /// Convert a change map into areas
    Quantify(QuantifyArgs),
    /// Segment, difference, filter, quantify and render a scene pair
    Pipeline(PipelineArgs),
    /// Score predicted masks against ground truth
    Evaluate(EvaluateArgs),
    /// Evaluate the segmentation loss on a probability map
    Loss(LossArgs),
    /// Assign train/val/test splits in a manifest
    Split(SplitArgs),
    /// Write augmented copies of training scenes
    Augment(AugmentArgs),
    /// Aggregate change reports over several epochs
    Report(ReportArgs),
    /// Print the manual page (roff)
    Man(ManArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SegmenterFlags {
    /// Water score: blue_dominance, ndwi_proxy or single_channel:<r|g|b>
    #[arg(long, default_value = "blue_dominance")]
    pub channel_mode: ChannelMode,

    /// Fixed score threshold in [0, 1]; scores above it are water
    #[arg(long, overrides_with = "otsu")]
    pub threshold: Option<f64>,

    /// Choose the threshold with Otsu's method (the default)
    #[arg(long, overrides_with = "threshold")]
    pub otsu: bool,

    /// Radius of the close-then-open cleanup, in pixels
    #[arg(long, default_value_t = 1)]
    pub refine_radius: usize,

    /// Skip histogram equalization before scoring
    #[arg(long)]
    pub no_equalize: bool,
}

impl SegmenterFlags {
    pub fn params(&self, min_area: usize) -> anyhow::Result<SegmenterParams> {
        let params = SegmenterParams {
            channel_mode: self.channel_mode,
            threshold_mode: match self.threshold {
                Some(t) => ThresholdMode::Fixed(t),
                None => ThresholdMode::Otsu,
            },
            refine_radius: self.refine_radius,
            refine_min_area: min_area,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    /// Image files or directories of images
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,

    /// Directory for `<stem>_mask.png` files and `summary.json`
    #[arg(long)]
    pub out_dir: PathBuf,

    #[command(flatten)]
    pub segmenter: SegmenterFlags,

    /// Smallest water or land component kept, in pixels
    #[arg(long, default_value_t = 500)]
    pub min_area: usize,

    /// Connectivity used when counting components in the summary
    /// Pixel adjacency for components: 4 or 8
    #[arg(long, default_value = "8")]
    pub connectivity: Connectivity,
}

#[derive(Args, Debug, Clone)]
pub struct CoregFlags {
    /// Run despite resolution or origin mismatches (never despite size mismatches)
    #[arg(long)]
    pub force: bool,

    /// Allowed relative difference between the two resolutions
    #[arg(long, default_value_t = 0.01)]
    pub resolution_tolerance: f64,

    /// Allowed distance between scene origins in meters (default: one pixel)
    #[arg(long)]
    pub max_offset_m: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DiffArgs {
    /// Earlier land/water mask
    #[arg(long)]
    pub t1: PathBuf,

    /// Later land/water mask
    #[arg(long)]
    pub t2: PathBuf,

    /// Change components smaller than this revert to stable
    #[arg(long, default_value_t = 500)]
    pub min_area: usize,

    /// Pixel adjacency for components: 4 or 8
    #[arg(long, default_value = "8")]
    pub connectivity: Connectivity,

    /// Change map image (PNG or PPM)
    #[arg(long)]
    pub out_map: PathBuf,

    /// Area CSV; needs a resolution from --geo or the t1 sidecar
    #[arg(long)]
    pub out_stats: Option<PathBuf>,

    /// Geo metadata; defaults to the sidecar JSON next to --t1
    #[arg(long)]
    pub geo: Option<PathBuf>,

    #[command(flatten)]
    pub coreg: CoregFlags,
}

#[derive(Args, Debug)]
pub struct QuantifyArgs {
    /// Change map image in the fixed palette
    #[arg(long)]
    pub map: PathBuf,

    /// Geo metadata JSON supplying the pixel resolution
    #[arg(long)]
    pub geo: PathBuf,

    /// Also report annual rates between --t1 and --t2
    #[arg(long, requires_all = ["t1", "t2"])]
    pub rate: bool,

    #[arg(long)]
    pub t1: Option<NaiveDate>,

    #[arg(long)]
    pub t2: Option<NaiveDate>,

    #[arg(long)]
    pub out: PathBuf,

    /// JSON report with pixel counts, areas and rates
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Earlier scene image
    #[arg(long, required_unless_present = "t1_mask")]
    pub t1: Option<PathBuf>,

    /// Later scene image
    #[arg(long, required_unless_present = "t2_mask")]
    pub t2: Option<PathBuf>,

    /// Use this mask instead of segmenting the t1 image
    #[arg(long)]
    pub t1_mask: Option<PathBuf>,

    /// Use this mask instead of segmenting the t2 image
    #[arg(long)]
    pub t2_mask: Option<PathBuf>,

    /// Geo metadata of t1; defaults to the sidecar of the t1 input
    #[arg(long)]
    pub geo_t1: Option<PathBuf>,

    /// Geo metadata of t2; defaults to the sidecar of the t2 input
    #[arg(long)]
    pub geo_t2: Option<PathBuf>,

    /// Directory for masks, change map, CSV and report.json
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Change components smaller than this revert to stable
    #[arg(long, default_value_t = 500)]
    pub min_area: usize,

    /// Segmenter component floor (default: --min-area)
    #[arg(long)]
    pub refine_min_area: Option<usize>,

    /// Pixel adjacency for components: 4 or 8
    #[arg(long, default_value = "8")]
    pub connectivity: Connectivity,

    /// Refine provided masks too, not only segmented ones
    #[arg(long)]
    pub prefilter_masks: bool,

    #[command(flatten)]
    pub segmenter: SegmenterFlags,

    #[command(flatten)]
    pub coreg: CoregFlags,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred_dir: PathBuf,

    /// Ground-truth masks, matched to predictions by file stem
    #[arg(long)]
    pub gt_dir: PathBuf,

    #[arg(long, default_value = "water")]
    pub positive: PositiveClass,

    /// Boundary band width for boundary IoU, in pixels
    #[arg(long, default_value_t = 2)]
    pub boundary_band: usize,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LossArgs {
    /// Probability map: 32-bit float TIFF or RBPM
    #[arg(long)]
    pub prob: PathBuf,

    #[arg(long)]
    pub gt: PathBuf,

    #[arg(long, default_value_t = 20.0)]
    pub lambda_focal: f64,

    #[arg(long, default_value_t = 1.0)]
    pub lambda_dice: f64,

    #[arg(long, default_value_t = 1.0)]
    pub lambda_iou: f64,

    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,

    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,

    /// Weight positives by alpha and negatives by 1 - alpha
    #[arg(long)]
    pub focal_alpha_balanced: bool,

    /// Compare analytic gradients with central differences
    #[arg(long)]
    pub check_grad: bool,

    /// Finite-difference step for --check-grad
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,

    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// JSON-lines manifest
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long)]
    pub train: usize,

    #[arg(long)]
    pub val: usize,

    #[arg(long)]
    pub test: usize,

    /// Fields to stratify on
    #[arg(long, value_delimiter = ',', value_parser = parse_stratum)]
    pub strata: Vec<Stratum>,

    /// Let one site-year appear in several splits
    #[arg(long)]
    pub allow_temporal_overlap: bool,

    /// Output manifest (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_stratum(s: &str) -> Result<Stratum, String> {
    match s {
        "site" => Ok(Stratum::Site),
        "year" => Ok(Stratum::Year),
        "severity" => Ok(Stratum::Severity),
        _ => Err(format!("unknown stratum `{s}` (site, year, severity)")),
    }
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Augmentation settings (TOML); built-in defaults if omitted
    #[arg(long)]
    pub spec: Option<PathBuf>,

    #[arg(long)]
    pub out_dir: PathBuf,

    /// Augmented copies per training scene
    #[arg(long, default_value_t = 1)]
    pub per_image: u32,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Change CSVs in chronological order
    #[arg(required = true)]
    pub csvs: Vec<PathBuf>,

    /// Epoch labels, one per CSV (default: file stems)
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,

    #[arg(long)]
    pub out: PathBuf,

    /// Cumulative area plot (PNG)
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ManArgs {
    /// Write to a file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}
