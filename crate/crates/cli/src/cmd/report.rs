use std::path::Path;

use anyhow::{bail, Context, Result};
use image::{Rgb, RgbImage};
use imageproc::drawing::{draw_filled_circle_mut, draw_line_segment_mut};
use riverbank_core::quantify::{fmt3, parse_stats_csv};
use riverbank_core::ChangeClass;

use super::stem;
use crate::args::ReportArgs;
use crate::output::write_text;

pub const REPORT_HEADER: &str = "epoch,erosion_km2,accretion_km2,net_km2,cumulative_erosion_km2,cumulative_accretion_km2,cumulative_net_km2";

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRow {
    pub epoch: String,
    pub erosion: f64,
    pub accretion: f64,
    pub net: f64,
    pub cum_erosion: f64,
    pub cum_accretion: f64,
    pub cum_net: f64,
}

fn read_epoch(path: &Path) -> Result<(f64, f64, f64)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let rows = parse_stats_csv(&text).with_context(|| format!("in {}", path.display()))?;
    Ok((rows[0].area_km2, rows[1].area_km2, rows[4].area_km2))
}

pub fn aggregate(epochs: &[(String, (f64, f64, f64))]) -> Vec<EpochRow> {
    let (mut ce, mut ca, mut cn) = (0.0, 0.0, 0.0);
    epochs
        .iter()
        .map(|(label, (e, a, n))| {
            ce += e;
            ca += a;
            cn += n;
            EpochRow {
                epoch: label.clone(),
                erosion: *e,
                accretion: *a,
                net: *n,
                cum_erosion: ce,
                cum_accretion: ca,
                cum_net: cn,
            }
        })
        .collect()
}

pub fn to_csv(rows: &[EpochRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let vals = [
            r.erosion,
            r.accretion,
            r.net,
            r.cum_erosion,
            r.cum_accretion,
            r.cum_net,
        ];
        let vals: Vec<String> = vals.into_iter().map(fmt3).collect();
        out.push_str(&format!("{},{}\n", r.epoch, vals.join(",")));
    }
    out
}

const PLOT_W: u32 = 800;
const PLOT_H: u32 = 480;
const MARGIN: f32 = 48.0;

/// Cumulative erosion, accretion and net change against epoch index.
pub fn plot(rows: &[EpochRow]) -> RgbImage {
    let mut img = RgbImage::from_pixel(PLOT_W, PLOT_H, Rgb([255, 255, 255]));
    let series: [(Vec<f64>, Rgb<u8>); 3] = [
        (
            rows.iter().map(|r| r.cum_erosion).collect(),
            Rgb(ChangeClass::Erosion.color()),
        ),
        (
            rows.iter().map(|r| r.cum_accretion).collect(),
            Rgb(ChangeClass::Accretion.color()),
        ),
        (
            rows.iter().map(|r| r.cum_net).collect(),
            Rgb(ChangeClass::StableWater.color()),
        ),
    ];
    let all = series.iter().flat_map(|s| s.0.iter().copied());
    let (lo, hi) = all.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (x0, x1) = (MARGIN, PLOT_W as f32 - MARGIN / 2.0);
    let (y0, y1) = (PLOT_H as f32 - MARGIN, MARGIN / 2.0);
    let sx = |i: usize| {
        if rows.len() < 2 {
            (x0 + x1) / 2.0
        } else {
            x0 + (x1 - x0) * i as f32 / (rows.len() - 1) as f32
        }
    };
    let sy = |v: f64| y0 + (y1 - y0) * ((v - lo) / span) as f32;

    let grid = Rgb([225, 225, 225]);
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f32 / 4.0;
        draw_line_segment_mut(&mut img, (x0, y), (x1, y), grid);
    }
    for i in 0..rows.len() {
        draw_line_segment_mut(&mut img, (sx(i), y0), (sx(i), y0 + 6.0), Rgb([0, 0, 0]));
    }
    draw_line_segment_mut(&mut img, (x0, sy(0.0)), (x1, sy(0.0)), Rgb([120, 120, 120]));
    draw_line_segment_mut(&mut img, (x0, y0), (x1, y0), Rgb([0, 0, 0]));
    draw_line_segment_mut(&mut img, (x0, y0), (x0, y1), Rgb([0, 0, 0]));

    for (values, color) in &series {
        for i in 1..values.len() {
            let (a, b) = ((sx(i - 1), sy(values[i - 1])), (sx(i), sy(values[i])));
            for d in [-1.0, 0.0, 1.0] {
                draw_line_segment_mut(&mut img, (a.0, a.1 + d), (b.0, b.1 + d), *color);
            }
        }
        for (i, v) in values.iter().enumerate() {
            draw_filled_circle_mut(&mut img, (sx(i) as i32, sy(*v) as i32), 4, *color);
        }
    }
    img
}

pub fn run(args: ReportArgs) -> Result<()> {
    if !args.labels.is_empty() && args.labels.len() != args.csvs.len() {
        bail!(
            "{} labels for {} CSV files",
            args.labels.len(),
            args.csvs.len()
        );
    }
    let epochs = args
        .csvs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let label = args.labels.get(i).cloned().unwrap_or_else(|| stem(p));
            Ok((label, read_epoch(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = aggregate(&epochs);
    let csv = to_csv(&rows);
    write_text(&args.out, &csv)?;
    print!("{csv}");
    if let Some(p) = &args.plot {
        plot(&rows)
            .save(p)
            .with_context(|| format!("cannot write plot {}", p.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_epoch_cumulative_is_itself() {
        let rows = aggregate(&[("a".into(), (1.25, 0.5, -0.75))]);
        assert_eq!(
            (rows[0].cum_erosion, rows[0].cum_accretion, rows[0].cum_net),
            (1.25, 0.5, -0.75)
        );
    }

    #[test]
    fn cumulative_sums() {
        let rows = aggregate(&[
            ("a".into(), (1.0, 0.0, -1.0)),
            ("b".into(), (2.0, 0.5, -1.5)),
        ]);
        assert_eq!(rows[1].cum_erosion, 3.0);
        assert_eq!(rows[1].cum_net, -2.5);
        let csv = to_csv(&rows);
        assert_eq!(
            csv.lines().nth(2).unwrap(),
            "b,2.000,0.500,-1.500,3.000,0.500,-2.500"
        );
    }

    #[test]
    fn plot_has_fixed_size() {
        let rows = aggregate(&[("a".into(), (1.0, 2.0, 1.0))]);
        assert_eq!(plot(&rows).dimensions(), (PLOT_W, PLOT_H));
    }
}
