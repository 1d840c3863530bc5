use std::borrow::Cow;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use image::RgbImage;
use log::debug;
use rayon::prelude::*;
use riverbank_core::{
    color_channel_segment, connected_components, histogram_equalize, refine_mask, BinaryMask,
    Connectivity, SegmenterParams,
};
use serde::Serialize;

use super::{image_files, read_rgb, stem, write_mask};
use crate::args::SegmentArgs;
use crate::output::{create_dir, shown, write_json};

/// Equalize (optionally), threshold and refine one scene.
pub fn segment_image(
    image: &RgbImage,
    params: &SegmenterParams,
    equalize: bool,
) -> Result<BinaryMask> {
    let image = if equalize {
        Cow::Owned(histogram_equalize(image))
    } else {
        Cow::Borrowed(image)
    };
    let raw = color_channel_segment(&image, params)?;
    Ok(refine_mask(&raw, params))
}

#[derive(Serialize)]
struct Row {
    input: String,
    mask: String,
    width: usize,
    height: usize,
    land_fraction: f64,
    water_fraction: f64,
    land_components: usize,
    water_components: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    channel_mode: String,
    threshold: Option<f64>,
    refine_radius: usize,
    min_area: usize,
    equalize: bool,
    connectivity: Connectivity,
    images: &'a [Row],
}

fn summarize(input: &Path, out: &Path, mask: &BinaryMask, conn: Connectivity) -> Row {
    let n = mask.len() as f64;
    Row {
        input: shown(input),
        mask: shown(out),
        width: mask.width(),
        height: mask.height(),
        land_fraction: mask.count_ones() as f64 / n,
        water_fraction: mask.count_zeros() as f64 / n,
        land_components: connected_components(mask, conn).0.len(),
        water_components: connected_components(&mask.invert(), conn).0.len(),
    }
}

pub fn run(args: SegmentArgs) -> Result<()> {
    let params = args.segmenter.params(args.min_area)?;
    let inputs = image_files(&args.inputs)?;
    if inputs.is_empty() {
        bail!("no images found in the given inputs");
    }
    let mut seen = BTreeSet::new();
    let outputs: Vec<PathBuf> = inputs
        .iter()
        .map(|p| {
            let s = stem(p);
            if !seen.insert(s.clone()) {
                bail!("two inputs share the file stem `{s}`");
            }
            Ok(args.out_dir.join(format!("{s}_mask.png")))
        })
        .collect::<Result<_>>()?;
    create_dir(&args.out_dir)?;

    let equalize = !args.segmenter.no_equalize;
    let rows = inputs
        .par_iter()
        .zip(&outputs)
        .map(|(input, out)| {
            let image = read_rgb(input)?;
            let mask = segment_image(&image, &params, equalize)?;
            write_mask(out, &mask)?;
            debug!("{} -> {}", input.display(), out.display());
            Ok(summarize(input, out, &mask, args.connectivity))
        })
        .collect::<Result<Vec<_>>>()?;

    for r in &rows {
        println!(
            "{}\tland {:.4}\twater components {}",
            r.input, r.land_fraction, r.water_components
        );
    }
    let summary = Summary {
        channel_mode: params.channel_mode.to_string(),
        threshold: args.segmenter.threshold,
        refine_radius: params.refine_radius,
        min_area: params.refine_min_area,
        equalize,
        connectivity: args.connectivity,
        images: &rows,
    };
    write_json(&args.out_dir.join("summary.json"), &summary)
}
