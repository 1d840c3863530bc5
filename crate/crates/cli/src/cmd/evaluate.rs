use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::warn;
use rayon::prelude::*;
use riverbank_core::eval::boundary_overlap;
use riverbank_core::{confusion, metrics, ConfusionCounts, MetricsReport};

use super::{image_files, read_mask, stem};
use crate::args::EvaluateArgs;

struct Scored {
    name: String,
    counts: ConfusionCounts,
    report: MetricsReport,
    band: (u64, u64),
}

fn by_stem(dir: &PathBuf) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        bail!("not a directory: {}", dir.display());
    }
    let mut out = BTreeMap::new();
    for p in image_files(std::slice::from_ref(dir))? {
        if let Some(prev) = out.insert(stem(&p), p.clone()) {
            bail!("{} and {} share a file stem", prev.display(), p.display());
        }
    }
    Ok(out)
}

fn row(
    w: &mut csv::Writer<Vec<u8>>,
    name: &str,
    c: &ConfusionCounts,
    m: &MetricsReport,
) -> Result<()> {
    let f = |v: f64| format!("{v:.6}");
    w.write_record([
        name.to_string(),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
        f(m.iou),
        f(m.f1),
        f(m.precision),
        f(m.recall),
        f(m.pixel_accuracy),
        m.boundary_iou.map(f).unwrap_or_default(),
    ])?;
    Ok(())
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let preds = by_stem(&args.pred_dir)?;
    let gts = by_stem(&args.gt_dir)?;
    if preds.is_empty() {
        bail!("no prediction masks in {}", args.pred_dir.display());
    }
    for name in gts.keys().filter(|k| !preds.contains_key(*k)) {
        warn!("ground truth `{name}` has no prediction");
    }
    let pairs: Vec<(String, PathBuf, PathBuf)> = preds
        .into_iter()
        .map(|(name, p)| {
            let g = gts.get(&name).with_context(|| {
                format!(
                    "no ground truth for {} in {}",
                    p.display(),
                    args.gt_dir.display()
                )
            })?;
            Ok((name, p, g.clone()))
        })
        .collect::<Result<_>>()?;

    let scored: Vec<Result<Scored>> = pairs
        .par_iter()
        .map(|(name, p, g)| {
            let (pred, gt) = (read_mask(p)?, read_mask(g)?);
            let counts = confusion(&pred, &gt, args.positive)
                .with_context(|| format!("{} vs {}", p.display(), g.display()))?;
            let band = boundary_overlap(
                &args.positive.foreground(&pred),
                &args.positive.foreground(&gt),
                args.boundary_band,
            )?;
            let mut report = metrics(&counts)?;
            report.boundary_iou = Some(band_iou(band));
            Ok(Scored {
                name: name.clone(),
                counts,
                report,
                band,
            })
        })
        .collect();
    let scored = scored.into_iter().collect::<Result<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "image",
        "tp",
        "fp",
        "fn",
        "tn",
        "iou",
        "f1",
        "precision",
        "recall",
        "pixel_accuracy",
        "boundary_iou",
    ])?;
    for s in &scored {
        row(&mut w, &s.name, &s.counts, &s.report)?;
    }
    let n = scored.len() as f64;
    let pooled_counts = scored
        .iter()
        .fold(ConfusionCounts::default(), |acc, s| acc + s.counts);
    let mean_of =
        |f: fn(&MetricsReport) -> f64| scored.iter().map(|s| f(&s.report)).sum::<f64>() / n;
    let mean = MetricsReport {
        iou: mean_of(|m| m.iou),
        f1: mean_of(|m| m.f1),
        precision: mean_of(|m| m.precision),
        recall: mean_of(|m| m.recall),
        pixel_accuracy: mean_of(|m| m.pixel_accuracy),
        boundary_iou: Some(mean_of(|m| m.boundary_iou.unwrap_or(0.0))),
    };
    row(&mut w, "mean", &pooled_counts, &mean)?;
    let band = scored
        .iter()
        .fold((0, 0), |acc, s| (acc.0 + s.band.0, acc.1 + s.band.1));
    let mut pooled = metrics(&pooled_counts)?;
    pooled.boundary_iou = Some(band_iou(band));
    row(&mut w, "pooled", &pooled_counts, &pooled)?;

    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    std::fs::write(&args.out, &bytes)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "{} images: mean IoU {:.4}, mean F1 {:.4}, pooled IoU {:.4}",
        scored.len(),
        mean.iou,
        mean.f1,
        pooled.iou
    );
    Ok(())
}

fn band_iou((inter, union): (u64, u64)) -> f64 {
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
