use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::debug;
use rayon::prelude::*;
use riverbank_core::dataset::{
    augment_pair, entry_rng, read_manifest, split_manifest, write_manifest, AugmentationSpec,
    GeometricTransform, ManifestEntry, Split, SplitCounts, SplitOptions,
};
use riverbank_core::io;
use serde::Serialize;

use super::{read_mask, read_rgb, write_mask};
use crate::args::{AugmentArgs, SplitArgs};
use crate::output::{create_dir, write_json};

fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file =
        File::open(path).with_context(|| format!("cannot open manifest {}", path.display()))?;
    read_manifest(BufReader::new(file))
        .with_context(|| format!("invalid manifest {}", path.display()))
}

pub fn split(args: SplitArgs, seed: Option<u64>) -> Result<()> {
    let entries = load_manifest(&args.manifest)?;
    let counts = SplitCounts {
        train: args.train,
        val: args.val,
        test: args.test,
    };
    let options = SplitOptions {
        allow_temporal_overlap: args.allow_temporal_overlap,
    };
    let out = split_manifest(&entries, counts, &args.strata, seed.unwrap_or(0), options)?;
    match &args.out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_manifest(&mut w, &out)?;
            w.flush()?;
        }
        None => write_manifest(std::io::stdout().lock(), &out)?,
    }
    for s in [Split::Train, Split::Val, Split::Test] {
        debug!("{s:?}: {}", out.iter().filter(|e| e.split == s).count());
    }
    Ok(())
}

/// Manifest paths are relative to the manifest's directory.
fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Serialize)]
struct Record {
    source: String,
    scene_id: String,
    index: u32,
    transform: GeometricTransform,
    brightness: Option<f64>,
    contrast: Option<f64>,
}

#[derive(Serialize)]
struct AugmentReport<'a> {
    seed: u64,
    per_image: u32,
    spec: &'a AugmentationSpec,
    outputs: Vec<Record>,
}

/// Training (or unassigned) entries only; val and test are never augmented.
pub fn augment(args: AugmentArgs, seed: Option<u64>) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            toml::from_str::<AugmentationSpec>(&text)
                .with_context(|| format!("invalid augmentation spec {}", p.display()))?
        }
        None => AugmentationSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    let entries = load_manifest(&args.manifest)?;
    let base = args
        .manifest
        .parent()
        .unwrap_or(Path::new(""))
        .to_path_buf();
    create_dir(&args.out_dir)?;

    let jobs: Vec<(&ManifestEntry, u32)> = entries
        .iter()
        .filter(|e| matches!(e.split, Split::Train | Split::Unassigned))
        .flat_map(|e| (0..args.per_image).map(move |k| (e, k)))
        .collect();

    let results: Vec<Result<(ManifestEntry, Record)>> = jobs
        .par_iter()
        .map(|&(e, k)| {
            let image = read_rgb(&resolve(&base, &e.image_path))?;
            let mask = read_mask(&resolve(&base, &e.mask_path))?;
            let mut rng = entry_rng(spec.seed, &e.scene_id, u64::from(k));
            let aug = augment_pair(&image, &mask, &spec, &mut rng)
                .with_context(|| format!("augmenting {}", e.scene_id))?;
            let id = format!("{}_aug{k}", e.scene_id);
            let image_name = PathBuf::from(format!("{id}.png"));
            let mask_name = PathBuf::from(format!("{id}_mask.png"));
            io::write_rgb(args.out_dir.join(&image_name), &aug.image)
                .with_context(|| format!("cannot write {}", image_name.display()))?;
            write_mask(&args.out_dir.join(&mask_name), &aug.mask)?;
            let entry = ManifestEntry {
                scene_id: id.clone(),
                image_path: image_name,
                mask_path: mask_name,
                split: Split::Train,
                ..e.clone()
            };
            let record = Record {
                source: e.scene_id.clone(),
                scene_id: id,
                index: k,
                transform: aug.transform,
                brightness: aug.photometric.map(|p| p.0),
                contrast: aug.photometric.map(|p| p.1),
            };
            Ok((entry, record))
        })
        .collect();
    let (entries, outputs): (Vec<_>, Vec<_>) = results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();

    let manifest_path = args.out_dir.join("manifest.jsonl");
    let f = File::create(&manifest_path)
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;
    let mut w = BufWriter::new(f);
    write_manifest(&mut w, &entries)?;
    w.flush()?;
    println!(
        "{} augmented scenes written to {}",
        entries.len(),
        args.out_dir.display()
    );
    write_json(
        &args.out_dir.join("augment_report.json"),
        &AugmentReport {
            seed: spec.seed,
            per_image: args.per_image,
            spec: &spec,
            outputs,
        },
    )
}
