use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::NaiveDate;
use log::{debug, warn};
use riverbank_core::change::ClassCounts;
use riverbank_core::{
    annual_rate, check_coregistration, classify_change, filter_change, io, quantify, refine_mask,
    render_change_map, AnnualRate, BinaryMask, ChangeAreas, ChangeMap, Connectivity,
    CoregistrationReport, GeoMeta,
};
use serde::Serialize;

use super::segment::segment_image;
use super::{geo_for, read_geo, read_mask, read_rgb, write_mask};
use crate::args::{CoregFlags, DiffArgs, PipelineArgs, QuantifyArgs};
use crate::output::{
    create_dir, shown, write_json, write_text, CoregistrationFailure, InternalError,
};

/// Fails unless the two rasters can be differenced pixel for pixel.
///
/// Size mismatches always fail; resolution and origin mismatches fail
/// unless `--force` is given.
fn coregister(
    a: ((usize, usize), Option<&GeoMeta>),
    b: ((usize, usize), Option<&GeoMeta>),
    flags: &CoregFlags,
) -> Result<Option<CoregistrationReport>> {
    let report = match (a.1, b.1) {
        (Some(ga), Some(gb)) => Some(check_coregistration(
            (a.0, ga),
            (b.0, gb),
            flags.resolution_tolerance,
        )),
        _ => None,
    };
    if a.0 != b.0 {
        return Err(CoregistrationFailure {
            report,
            reason: format!(
                "raster sizes differ: {}x{} vs {}x{}",
                a.0 .0, a.0 .1, b.0 .0, b.0 .1
            ),
        }
        .into());
    }
    if let Some(r) = &report {
        let max_offset = flags.max_offset_m.unwrap_or(r.resolution_t1_m);
        if !r.passes(max_offset) {
            let reason = if r.resolution_match {
                format!(
                    "scene origins {:.3} m apart (limit {max_offset} m)",
                    r.geo_offset_m
                )
            } else {
                format!(
                    "resolutions differ: {} m vs {} m",
                    r.resolution_t1_m, r.resolution_t2_m
                )
            };
            if !flags.force {
                return Err(CoregistrationFailure {
                    report: Some(r.clone()),
                    reason,
                }
                .into());
            }
            warn!("continuing despite co-registration failure (--force): {reason}");
        }
    }
    Ok(report)
}

fn check_counts(cm: &ChangeMap) -> Result<ClassCounts> {
    let counts = cm.counts();
    let n = (cm.width() * cm.height()) as u64;
    if counts.total() != n {
        return Err(InternalError(format!(
            "class counts sum to {} for {n} pixels",
            counts.total()
        ))
        .into());
    }
    Ok(counts)
}

fn write_change_map(path: &Path, cm: &ChangeMap) -> Result<()> {
    io::write_rgb(path, &render_change_map(cm))
        .with_context(|| format!("cannot write change map {}", path.display()))
}

fn sidecar_geo(raster: &Path) -> Result<Option<GeoMeta>> {
    let p = io::sidecar_path(raster);
    if p.exists() {
        read_geo(&p).map(Some)
    } else {
        Ok(None)
    }
}

pub fn diff(args: DiffArgs) -> Result<()> {
    let (m1, m2) = rayon::join(|| read_mask(&args.t1), || read_mask(&args.t2));
    let (m1, m2) = (m1?, m2?);
    let g1 = match &args.geo {
        Some(p) => Some(read_geo(p)?),
        None => sidecar_geo(&args.t1)?,
    };
    let g2 = sidecar_geo(&args.t2)?;
    coregister(
        (m1.dims(), g1.as_ref()),
        (m2.dims(), g2.as_ref()),
        &args.coreg,
    )?;

    let raw = classify_change(&m1, &m2)?;
    let cm = filter_change(&raw, args.min_area, args.connectivity);
    let counts = check_counts(&cm)?;
    write_change_map(&args.out_map, &cm)?;
    println!(
        "erosion {} px, accretion {} px, stable land {} px, stable water {} px",
        counts.erosion, counts.accretion, counts.stable_land, counts.stable_water
    );

    if let Some(out) = &args.out_stats {
        let geo = g1.with_context(|| {
            format!(
                "--out-stats needs a resolution: pass --geo or provide {}",
                io::sidecar_path(&args.t1).display()
            )
        })?;
        let areas = ChangeAreas::from_counts(&counts, geo.resolution_m)?;
        write_text(out, &areas.to_csv())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct QuantifyReport<'a> {
    map: String,
    geo: &'a GeoMeta,
    areas: &'a ChangeAreas,
    rate: Option<&'a AnnualRate>,
}

pub fn quantify_cmd(args: QuantifyArgs) -> Result<()> {
    let cm = io::read_change_map(&args.map)
        .with_context(|| format!("cannot read change map {}", args.map.display()))?;
    let geo = read_geo(&args.geo)?;
    let areas = quantify(&cm, &geo)?;
    if areas.uncertainty_extrapolated {
        warn!(
            "±{:.0}% uncertainty is extrapolated to {} m pixels",
            areas.uncertainty_fraction * 100.0,
            areas.resolution_m
        );
    }
    let csv = areas.to_csv();
    write_text(&args.out, &csv)?;
    let rate = match (args.rate, args.t1, args.t2) {
        (true, Some(t1), Some(t2)) => Some(annual_rate(&areas, t1, t2)?),
        _ => None,
    };
    match &rate {
        Some(r) => print!("{}", crate::output::to_json(r)?),
        None => print!("{csv}"),
    }
    if let Some(p) = &args.json {
        write_json(
            p,
            &QuantifyReport {
                map: shown(&args.map),
                geo: &geo,
                areas: &areas,
                rate: rate.as_ref(),
            },
        )?;
    }
    Ok(())
}

enum Source {
    Image(PathBuf),
    Mask(PathBuf),
}

impl Source {
    fn pick(image: &Option<PathBuf>, mask: &Option<PathBuf>) -> Self {
        match (mask, image) {
            (Some(m), _) => Source::Mask(m.clone()),
            (None, Some(i)) => Source::Image(i.clone()),
            (None, None) => unreachable!("clap requires one of them"),
        }
    }

    fn path(&self) -> &Path {
        match self {
            Source::Image(p) | Source::Mask(p) => p,
        }
    }
}

enum Loaded {
    Image(image::RgbImage),
    Mask(BinaryMask),
}

impl Loaded {
    fn read(src: &Source) -> Result<Self> {
        Ok(match src {
            Source::Image(p) => Loaded::Image(read_rgb(p)?),
            Source::Mask(p) => Loaded::Mask(read_mask(p)?),
        })
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Loaded::Image(i) => (i.width() as usize, i.height() as usize),
            Loaded::Mask(m) => m.dims(),
        }
    }
}

#[derive(Serialize)]
struct Inputs {
    t1: String,
    t2: String,
    t1_is_mask: bool,
    t2_is_mask: bool,
}

#[derive(Serialize)]
struct Parameters {
    channel_mode: String,
    threshold: Option<f64>,
    refine_radius: usize,
    refine_min_area: usize,
    equalize: bool,
    min_area: usize,
    connectivity: Connectivity,
    prefilter_masks: bool,
    forced: bool,
}

#[derive(Serialize)]
struct PipelineReport<'a> {
    inputs: Inputs,
    parameters: Parameters,
    coregistration: Option<&'a CoregistrationReport>,
    t1_date: NaiveDate,
    t2_date: NaiveDate,
    counts_unfiltered: ClassCounts,
    counts: ClassCounts,
    areas: &'a ChangeAreas,
    rate: Option<AnnualRate>,
    outputs: Vec<String>,
}

pub fn pipeline(args: PipelineArgs) -> Result<()> {
    let src1 = Source::pick(&args.t1, &args.t1_mask);
    let src2 = Source::pick(&args.t2, &args.t2_mask);
    let geo1 = geo_for(args.geo_t1.as_deref(), src1.path(), "--geo-t1")?;
    let geo2 = geo_for(args.geo_t2.as_deref(), src2.path(), "--geo-t2")?;

    let (l1, l2) = rayon::join(|| Loaded::read(&src1), || Loaded::read(&src2));
    let (l1, l2) = (l1?, l2?);
    let report = coregister(
        (l1.dims(), Some(&geo1)),
        (l2.dims(), Some(&geo2)),
        &args.coreg,
    )?;

    let params = args
        .segmenter
        .params(args.refine_min_area.unwrap_or(args.min_area))?;
    let equalize = !args.segmenter.no_equalize;
    let to_mask = |l: Loaded| -> Result<BinaryMask> {
        match l {
            Loaded::Image(img) => segment_image(&img, &params, equalize),
            Loaded::Mask(m) if args.prefilter_masks => Ok(refine_mask(&m, &params)),
            Loaded::Mask(m) => Ok(m),
        }
    };
    let (m1, m2) = rayon::join(|| to_mask(l1), || to_mask(l2));
    let (m1, m2) = (m1?, m2?);

    let raw = classify_change(&m1, &m2)?;
    let cm = filter_change(&raw, args.min_area, args.connectivity);
    let counts_unfiltered = check_counts(&raw)?;
    let counts = check_counts(&cm)?;
    debug!(
        "filtering reverted {} erosion and {} accretion px",
        counts_unfiltered.erosion - counts.erosion,
        counts_unfiltered.accretion - counts.accretion
    );
    let areas = quantify(&cm, &geo1)?;
    let rate = if geo2.capture_date > geo1.capture_date {
        Some(annual_rate(&areas, geo1.capture_date, geo2.capture_date)?)
    } else {
        None
    };

    create_dir(&args.out_dir)?;
    let names = [
        "t1_mask.png",
        "t2_mask.png",
        "change_map.png",
        "change_stats.csv",
        "report.json",
    ];
    let path = |i: usize| args.out_dir.join(names[i]);
    write_mask(&path(0), &m1)?;
    write_mask(&path(1), &m2)?;
    write_change_map(&path(2), &cm)?;
    let csv = areas.to_csv();
    write_text(&path(3), &csv)?;
    let body = PipelineReport {
        inputs: Inputs {
            t1: shown(src1.path()),
            t2: shown(src2.path()),
            t1_is_mask: matches!(src1, Source::Mask(_)),
            t2_is_mask: matches!(src2, Source::Mask(_)),
        },
        parameters: Parameters {
            channel_mode: params.channel_mode.to_string(),
            threshold: args.segmenter.threshold,
            refine_radius: params.refine_radius,
            refine_min_area: params.refine_min_area,
            equalize,
            min_area: args.min_area,
            connectivity: args.connectivity,
            prefilter_masks: args.prefilter_masks,
            forced: args.coreg.force,
        },
        coregistration: report.as_ref(),
        t1_date: geo1.capture_date,
        t2_date: geo2.capture_date,
        counts_unfiltered,
        counts,
        areas: &areas,
        rate,
        outputs: names.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&path(4), &body)?;
    print!("{csv}");
    Ok(())
}
