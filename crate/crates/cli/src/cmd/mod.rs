pub mod change;
pub mod dataset;
pub mod evaluate;
pub mod loss;
pub mod report;
pub mod segment;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Command;
use image::RgbImage;
use riverbank_core::{io, BinaryMask, GeoMeta};

use crate::args::ManArgs;
use crate::output::write_text;

const IMAGE_EXTENSIONS: [&str; 8] = ["png", "jpg", "jpeg", "tif", "tiff", "ppm", "pgm", "bmp"];

pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    io::read_rgb(path).with_context(|| format!("cannot read image {}", path.display()))
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    io::read_mask(path).with_context(|| format!("cannot read mask {}", path.display()))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    io::write_mask(path, mask).with_context(|| format!("cannot write mask {}", path.display()))
}

pub fn read_geo(path: &Path) -> Result<GeoMeta> {
    io::read_geo(path).with_context(|| format!("cannot read geo metadata {}", path.display()))
}

/// `explicit` if given, otherwise the sidecar JSON next to `raster`.
pub fn geo_for(explicit: Option<&Path>, raster: &Path, flag: &str) -> Result<GeoMeta> {
    if let Some(p) = explicit {
        return read_geo(p);
    }
    let sidecar = io::sidecar_path(raster);
    if !sidecar.exists() {
        bail!(
            "no geo metadata for {}: pass {flag} or provide {}",
            raster.display(),
            sidecar.display()
        );
    }
    read_geo(&sidecar)
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Expands directories into their image files, sorted by name.
pub fn image_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("cannot list {}", input.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()
                .with_context(|| format!("cannot list {}", input.display()))?;
            found.retain(|p| p.is_file() && is_image(p));
            found.sort();
            out.extend(found);
        } else if input.exists() {
            out.push(input.clone());
        } else {
            bail!("no such file: {}", input.display());
        }
    }
    Ok(out)
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn man(args: ManArgs, cmd: Command) -> Result<()> {
    let mut buf = Vec::new();
    clap_mangen::Man::new(cmd.clone()).render(&mut buf)?;
    for sub in cmd.get_subcommands() {
        clap_mangen::Man::new(sub.clone())
            .title(format!("riverbank-{}", sub.get_name()))
            .render(&mut buf)?;
    }
    let text = String::from_utf8(buf)?;
    match args.out {
        Some(p) => write_text(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
