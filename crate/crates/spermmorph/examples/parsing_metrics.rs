//! Parsing-quality metrics (mIoU, AP^p, AP^p_vol, PCP) on a tiny
//! hand-made prediction/ground-truth pair, showing how instance matching
//! and per-part IoU enter each score.
//!
//! Run with: cargo run --example parsing_metrics

use spermmorph::metrics::{metric_report, Confidences};
use spermmorph::raster::{InstancePartMask, PartLabel};

/// Build a 12x1 strip mask from (part code, instance id) pairs.
fn strip(cells: &[(u8, u16)]) -> InstancePartMask {
    InstancePartMask::new(
        cells.len() as u32,
        1,
        cells
            .iter()
            .map(|&(c, _)| PartLabel::from_code(c).expect("valid part code"))
            .collect(),
        cells.iter().map(|&(_, i)| i).collect(),
    )
    .expect("consistent labels")
}

fn main() {
    const A: u8 = 1; // acrosome
    const N: u8 = 3; // nucleus
    const T: u8 = 5; // tail
    // ground truth: instance 1 = acrosome+nucleus head, instance 2 = tail
    let gt = strip(&[
        (A, 1), (A, 1), (N, 1), (N, 1), (0, 0), (0, 0),
        (T, 2), (T, 2), (T, 2), (T, 2), (T, 2), (0, 0),
    ]);
    // prediction: head shifted by one pixel, tail one pixel short
    let pred = strip(&[
        (0, 0), (A, 1), (A, 1), (N, 1), (N, 1), (0, 0),
        (T, 2), (T, 2), (T, 2), (T, 2), (0, 0), (0, 0),
    ]);

    let report = metric_report(&pred, &gt, &Confidences::new()).expect("same dimensions");
    println!("mIoU      {:.4}", report.miou);
    println!("AP^p@0.5  {:.4}", report.ap_p_50);
    println!("AP^p_vol  {:.4}", report.ap_p_vol);
    println!("PCP@0.5   {:.4}", report.pcp_50);
    println!("per-part IoU:");
    for (part, iou) in &report.per_part_iou {
        println!("  {:<10} {:.4}", part.name(), iou);
    }

    // identical masks score 1.0 everywhere
    let perfect = metric_report(&gt, &gt, &Confidences::new()).unwrap();
    println!(
        "identity check: miou {} ap {} pcp {}",
        perfect.miou, perfect.ap_p_50, perfect.pcp_50
    );
}
