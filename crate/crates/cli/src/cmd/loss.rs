use anyhow::{Context, Result};
use riverbank_core::loss::hard_overlap_losses;
use riverbank_core::{check_gradient, io, LossKind, LossParams};
use serde::Serialize;

use super::read_mask;
use crate::args::LossArgs;
use crate::output::to_json;

#[derive(Serialize)]
struct LossReport {
    params: LossParams,
    focal: f64,
    dice_soft: f64,
    iou_soft: f64,
    total: f64,
    dice_hard: f64,
    iou_hard: f64,
    clamped_pixels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient_check: Option<GradientCheck>,
}

#[derive(Serialize)]
struct GradientCheck {
    step: f64,
    focal: f64,
    dice: f64,
    iou: f64,
    total: f64,
}

pub fn run(args: LossArgs) -> Result<()> {
    let p = io::read_prob_map(&args.prob)
        .with_context(|| format!("cannot read probability map {}", args.prob.display()))?;
    let y = read_mask(&args.gt)?;
    let params = LossParams {
        lambda_focal: args.lambda_focal,
        lambda_dice: args.lambda_dice,
        lambda_iou: args.lambda_iou,
        alpha: args.alpha,
        gamma: args.gamma,
        alpha_balanced: args.focal_alpha_balanced,
    };
    let [focal, dice, iou, total] = LossKind::ALL.map(|k| k.eval(&p, &y, &params));
    let (focal, dice, iou, total) = (focal?, dice?, iou?, total?);
    let (dice_hard, iou_hard) = hard_overlap_losses(&p, &y)?;
    let gradient_check = if args.check_grad {
        let [f, d, i, t] = LossKind::ALL.map(|k| check_gradient(k, &p, &y, &params, args.step));
        Some(GradientCheck {
            step: args.step,
            focal: f?,
            dice: d?,
            iou: i?,
            total: t?,
        })
    } else {
        None
    };
    let report = LossReport {
        params,
        focal: focal.value,
        dice_soft: dice.value,
        iou_soft: iou.value,
        total: total.value,
        dice_hard,
        iou_hard,
        clamped_pixels: focal.clamped,
        gradient_check,
    };

    if args.json {
        print!("{}", to_json(&report)?);
        return Ok(());
    }
    println!("focal      {:.6}", report.focal);
    println!("dice_soft  {:.6}", report.dice_soft);
    println!("iou_soft   {:.6}", report.iou_soft);
    println!("total      {:.6}", report.total);
    println!("dice_hard  {:.6}", report.dice_hard);
    println!("iou_hard   {:.6}", report.iou_hard);
    if report.clamped_pixels > 0 {
        println!("clamped    {} px", report.clamped_pixels);
    }
    if let Some(g) = &report.gradient_check {
        println!("max relative gradient error (h = {:e}):", g.step);
        for (name, v) in [
            ("focal", g.focal),
            ("dice", g.dice),
            ("iou", g.iou),
            ("total", g.total),
        ] {
            println!("  {name:<6} {v:.3e}");
        }
    }
    Ok(())
}
