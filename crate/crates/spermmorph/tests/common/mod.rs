//! Shared test helpers: random small instance/part masks and an
//! independent brute-force implementation of the parsing metrics, used to
//! cross-check the production metric code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use spermmorph::metrics::Confidences;
use spermmorph::raster::{InstancePartMask, PartLabel};

/// Part palette for random masks: three foreground classes.
pub const PARTS: [PartLabel; 3] = [PartLabel::Acrosome, PartLabel::Nucleus, PartLabel::Tail];

/// Random mask up to 8x8 with at most 2 instances and 3 part classes.
pub fn random_mask<R: Rng>(rng: &mut R, width: u32, height: u32) -> InstancePartMask {
    let n = (width as usize) * (height as usize);
    let mut part = Vec::with_capacity(n);
    let mut instance = Vec::with_capacity(n);
    for _ in 0..n {
        let inst: u16 = rng.gen_range(0..=2);
        if inst == 0 {
            part.push(PartLabel::Background);
            instance.push(0);
        } else {
            part.push(PARTS[rng.gen_range(0..PARTS.len())]);
            instance.push(inst);
        }
    }
    InstancePartMask::new(width, height, part, instance).expect("invariant-correct mask")
}

fn ids(mask: &InstancePartMask) -> Vec<u16> {
    mask.instances()
}

/// First row-major pixel index of an instance (relabel-invariant anchor).
fn anchor(mask: &InstancePartMask, id: u16) -> usize {
    mask.instance.iter().position(|&i| i == id).expect("instance present")
}

/// Semantic mean IoU by full per-class pixel scans.
pub fn bf_miou(pred: &InstancePartMask, gt: &InstancePartMask) -> f64 {
    let mut sum = 0.0;
    let mut k = 0usize;
    for class in PartLabel::FOREGROUND {
        let mut inter = 0usize;
        let mut union = 0usize;
        for i in 0..gt.part.len() {
            let g = gt.part[i] == class;
            let p = pred.part[i] == class;
            if g && p {
                inter += 1;
            }
            if g || p {
                union += 1;
            }
        }
        if union > 0 {
            sum += inter as f64 / union as f64;
            k += 1;
        }
    }
    if k == 0 {
        1.0
    } else {
        sum / k as f64
    }
}

/// Mean part-IoU between one gt and one pred instance, by pixel scans.
fn bf_instance_score(pred: &InstancePartMask, gt: &InstancePartMask, gid: u16, pid: u16) -> f64 {
    let mut sum = 0.0;
    let mut k = 0usize;
    for class in PartLabel::FOREGROUND {
        if let Some(iou) = bf_part_iou(pred, gt, gid, pid, class) {
            sum += iou;
            k += 1;
        }
    }
    if k == 0 {
        0.0
    } else {
        sum / k as f64
    }
}

/// Part IoU between instance masks; None when neither side has the class.
fn bf_part_iou(
    pred: &InstancePartMask,
    gt: &InstancePartMask,
    gid: u16,
    pid: u16,
    class: PartLabel,
) -> Option<f64> {
    let mut g_n = 0usize;
    let mut p_n = 0usize;
    let mut inter = 0usize;
    for i in 0..gt.part.len() {
        let g = gt.instance[i] == gid && gt.part[i] == class;
        let p = pred.instance[i] == pid && pred.part[i] == class;
        if g {
            g_n += 1;
        }
        if p {
            p_n += 1;
        }
        if g && p {
            inter += 1;
        }
    }
    if g_n + p_n == 0 {
        None
    } else {
        Some(inter as f64 / (g_n + p_n - inter) as f64)
    }
}

/// Greedy matching in descending confidence (ties: earlier anchor first);
/// each prediction takes the best unmatched gt if its score exceeds the
/// threshold strictly (gt ties: earlier anchor).
fn bf_greedy(
    pred: &InstancePartMask,
    gt: &InstancePartMask,
    conf: &Confidences,
    threshold: f64,
) -> Vec<(u16, Option<u16>)> {
    let mut preds: Vec<(u16, f64)> = ids(pred)
        .into_iter()
        .map(|id| (id, conf.get(&id).copied().unwrap_or(1.0)))
        .collect();
    preds.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then(anchor(pred, a.0).cmp(&anchor(pred, b.0)))
    });
    let gt_ids = ids(gt);
    let mut taken: Vec<u16> = Vec::new();
    let mut out = Vec::new();
    for (pid, _) in preds {
        let mut best: Option<(u16, f64)> = None;
        for &g in &gt_ids {
            if taken.contains(&g) {
                continue;
            }
            let s = bf_instance_score(pred, gt, g, pid);
            let replace = match best {
                None => true,
                Some((bg, bs)) => {
                    s > bs || (s == bs && anchor(gt, g) < anchor(gt, bg))
                }
            };
            if replace {
                best = Some((g, s));
            }
        }
        match best {
            Some((g, s)) if s > threshold => {
                taken.push(g);
                out.push((pid, Some(g)));
            }
            _ => out.push((pid, None)),
        }
    }
    out
}

/// AP^p by the "max precision at recall >= k/n_gt" summation.
pub fn bf_ap_p(
    pred: &InstancePartMask,
    gt: &InstancePartMask,
    conf: &Confidences,
    threshold: f64,
) -> f64 {
    let n_gt = ids(gt).len();
    if n_gt == 0 {
        return if ids(pred).is_empty() { 1.0 } else { 0.0 };
    }
    let matches = bf_greedy(pred, gt, conf, threshold);
    let mut tp_at = Vec::new();
    let mut tp = 0usize;
    for (i, (_, m)) in matches.iter().enumerate() {
        if m.is_some() {
            tp += 1;
        }
        tp_at.push((tp, tp as f64 / (i + 1) as f64));
    }
    let mut ap = 0.0;
    for k in 1..=n_gt {
        let best = tp_at
            .iter()
            .filter(|&&(t, _)| t >= k)
            .map(|&(_, p)| p)
            .fold(f64::NAN, f64::max);
        if best.is_finite() {
            ap += best / n_gt as f64;
        }
    }
    ap
}

pub fn bf_ap_p_vol(pred: &InstancePartMask, gt: &InstancePartMask, conf: &Confidences) -> f64 {
    (1..=9)
        .map(|k| bf_ap_p(pred, gt, conf, k as f64 / 10.0))
        .sum::<f64>()
        / 9.0
}

/// PCP with unmatched ground truth counted as zero.
pub fn bf_pcp_zero(
    pred: &InstancePartMask,
    gt: &InstancePartMask,
    conf: &Confidences,
    threshold: f64,
) -> f64 {
    let gt_ids = ids(gt);
    if gt_ids.is_empty() {
        return 1.0;
    }
    let matched: BTreeMap<u16, u16> = bf_greedy(pred, gt, conf, threshold)
        .into_iter()
        .filter_map(|(pid, m)| m.map(|g| (g, pid)))
        .collect();
    let mut sum = 0.0;
    let mut n = 0usize;
    for &g in &gt_ids {
        let classes: Vec<PartLabel> = PartLabel::FOREGROUND
            .into_iter()
            .filter(|&c| {
                gt.part
                    .iter()
                    .zip(gt.instance.iter())
                    .any(|(&p, &i)| i == g && p == c)
            })
            .collect();
        if classes.is_empty() {
            continue;
        }
        n += 1;
        if let Some(&pid) = matched.get(&g) {
            let correct = classes
                .iter()
                .filter(|&&c| bf_part_iou(pred, gt, g, pid, c).unwrap_or(0.0) > threshold)
                .count();
            sum += correct as f64 / classes.len() as f64;
        }
    }
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}
