#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use image::{Rgb, RgbImage};
use riverbank_core::{io, BinaryMask, GeoMeta};

pub const BIN: &str = env!("CARGO_BIN_EXE_riverbank");

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("RIVERBANK_THREADS")
        .output()
        .expect("spawn riverbank")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn geo(resolution_m: f64, date: (i32, u32, u32)) -> GeoMeta {
    GeoMeta::new(
        resolution_m,
        23.8,
        90.3,
        5.0,
        NaiveDate::from_ymd_opt(date.0, date.1, date.2).unwrap(),
    )
    .unwrap()
}

/// Writes a mask with a geo sidecar next to it.
pub fn mask_file(dir: &Path, name: &str, mask: &BinaryMask, g: &GeoMeta) -> PathBuf {
    let p = dir.join(name);
    io::write_mask(&p, mask).unwrap();
    io::write_geo(io::sidecar_path(&p), g).unwrap();
    p
}

pub const BLUE: Rgb<u8> = Rgb([20, 40, 200]);
pub const GREEN: Rgb<u8> = Rgb([60, 170, 40]);

/// RGB scene where land (mask 1) is green and water is blue, with a sidecar.
pub fn scene_file(dir: &Path, name: &str, mask: &BinaryMask, g: &GeoMeta) -> PathBuf {
    let img = RgbImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        if mask.is_set(x as usize, y as usize) {
            GREEN
        } else {
            BLUE
        }
    });
    let p = dir.join(name);
    io::write_rgb(&p, &img).unwrap();
    io::write_geo(io::sidecar_path(&p), g).unwrap();
    p
}

/// Left half land, right half water, with a river bank at column `bank`.
pub fn bank(w: usize, h: usize, bank: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, _| x < bank)
}

/// Bank mask with a rectangular block of land removed (erosion of `bw*bh` px).
pub fn bank_with_bite(w: usize, h: usize, b: usize, bw: usize, bh: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| x < b && !(x >= b - bw && y < bh))
}
