//! Sub-pixel centerline detection: Hessian eigen-analysis per pixel,
//! sub-pixel ridge localization, greedy linking into centerlines, and
//! edge localization along the normal.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::MeasurementConfig;
use crate::derivatives::DerivativeFields;
use crate::error::{MorphError, Result};
use crate::raster::BinaryMask;

/// Provenance of a centerline point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointSource {
    Detected,
    Reconstructed,
}

/// A sub-pixel centerline point with its local geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterPoint {
    /// Sub-pixel position (x, y) in pixel coordinates.
    pub position: (f64, f64),
    /// Unit normal (perpendicular to the local line direction).
    pub normal: (f64, f64),
    /// Image gradient (r_x, r_y) at the point.
    pub gradient: (f64, f64),
    /// Hessian eigenvalue along the normal (< 0 on bright lines).
    pub second_dir_deriv: f64,
    /// Local line width in pixels, set once edges are paired.
    pub width: Option<f64>,
    pub source: PointSource,
}

/// Ordered chain of centerline points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centerline {
    pub points: Vec<CenterPoint>,
    pub instance: u16,
    pub closed: bool,
}

impl Centerline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The two gradient-magnitude maxima on either side of a center point
/// along its normal.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePair {
    pub e1: (f64, f64),
    pub e2: (f64, f64),
    pub g1: (f64, f64),
    pub g2: (f64, f64),
    /// Positive offsets of e1/e2 from the center along ±normal.
    pub s1: f64,
    pub s2: f64,
}

impl EdgePair {
    /// Line width implied by the pair, corrected for the blur introduced
    /// by localization: the Gaussian smoothing of the derivative fields
    /// plus the bilinear interpolation used to sample them along the
    /// normal (triangle kernel, variance 1/6 px²).
    pub fn width_corrected(&self, edge_sigma: f64) -> f64 {
        let var = edge_sigma * edge_sigma + 1.0 / 6.0;
        let fix = |s: f64| (s * s - var).max(0.0).sqrt();
        fix(self.s1) + fix(self.s2)
    }
}

/// Undirected angle between two unit normals, in radians, in [0, π/2].
pub fn normal_angle(n1: (f64, f64), n2: (f64, f64)) -> f64 {
    let dot = (n1.0 * n2.0 + n1.1 * n2.1).abs().min(1.0);
    dot.acos()
}

/// Normal direction and leading eigenvalue of the Hessian at a pixel.
///
/// The normal is the eigenvector whose eigenvalue has the largest absolute
/// value, sign-canonicalized to n_y > 0 (or n_x > 0 when n_y = 0).
pub fn hessian_normal(fields: &DerivativeFields, x: u32, y: u32) -> Result<((f64, f64), f64)> {
    let (rxx, rxy, ryy) = fields.hessian(x, y);
    hessian_normal_raw(rxx, rxy, ryy, 1e-12)
}

/// Eigen-decomposition of the symmetric 2x2 Hessian [[rxx, rxy], [rxy, ryy]].
pub fn hessian_normal_raw(
    rxx: f64,
    rxy: f64,
    ryy: f64,
    tolerance: f64,
) -> Result<((f64, f64), f64)> {
    let trace = rxx + ryy;
    let diff = rxx - ryy;
    let disc = (diff * diff + 4.0 * rxy * rxy).sqrt();
    let l1 = 0.5 * (trace + disc);
    let l2 = 0.5 * (trace - disc);
    let lead = if l1.abs() >= l2.abs() { l1 } else { l2 };
    if l1.abs() < tolerance && l2.abs() < tolerance {
        return Err(MorphError::DegenerateFit("no ridge direction".into()));
    }
    // eigenvector of [[rxx, rxy], [rxy, ryy]] for eigenvalue `lead`
    let (mut nx, mut ny) = if rxy.abs() > 1e-300 {
        (lead - ryy, rxy)
    } else if rxx.abs() >= ryy.abs() {
        // diagonal: leading axis is x if |rxx| >= |ryy|
        if (lead - rxx).abs() <= (lead - ryy).abs() {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else if (lead - ryy).abs() <= (lead - rxx).abs() {
        (0.0, 1.0)
    } else {
        (1.0, 0.0)
    };
    let norm = (nx * nx + ny * ny).sqrt();
    if norm < 1e-300 {
        return Err(MorphError::DegenerateFit("no ridge direction".into()));
    }
    nx /= norm;
    ny /= norm;
    if ny < 0.0 || (ny == 0.0 && nx < 0.0) {
        nx = -nx;
        ny = -ny;
    }
    Ok(((nx, ny), lead))
}

/// Sub-pixel center point at a pixel, if the pixel carries one.
///
/// The ridge condition: the first directional derivative along the normal
/// vanishes within the pixel (offset |t·n| ≤ 0.5 in both coordinates) and
/// the second directional derivative is strongly negative (bright line).
pub fn subpixel_center(
    fields: &DerivativeFields,
    x: u32,
    y: u32,
    strength_threshold: f64,
) -> Option<CenterPoint> {
    let ((nx, ny), eigenvalue) = hessian_normal(fields, x, y).ok()?;
    if eigenvalue >= -strength_threshold {
        return None;
    }
    let (rx, ry) = fields.gradient(x, y);
    let (rxx, rxy, ryy) = fields.hessian(x, y);
    let denom = rxx * nx * nx + 2.0 * rxy * nx * ny + ryy * ny * ny;
    if denom.abs() < 1e-300 {
        return None;
    }
    let t = -(rx * nx + ry * ny) / denom;
    if (t * nx).abs() > 0.5 || (t * ny).abs() > 0.5 {
        return None;
    }
    Some(CenterPoint {
        position: (x as f64 + t * nx, y as f64 + t * ny),
        normal: (nx, ny),
        gradient: (rx, ry),
        second_dir_deriv: eigenvalue,
        width: None,
        source: PointSource::Detected,
    })
}

/// `subpixel_center` with a relaxed offset bound, used for neighbor claims.
pub(crate) fn subpixel_center_relaxed(
    fields: &DerivativeFields,
    x: u32,
    y: u32,
    strength_threshold: f64,
    max_offset: f64,
) -> Option<CenterPoint> {
    let ((nx, ny), eigenvalue) = hessian_normal(fields, x, y).ok()?;
    if eigenvalue >= -strength_threshold {
        return None;
    }
    let (rx, ry) = fields.gradient(x, y);
    let (rxx, rxy, ryy) = fields.hessian(x, y);
    let denom = rxx * nx * nx + 2.0 * rxy * nx * ny + ryy * ny * ny;
    if denom.abs() < 1e-300 {
        return None;
    }
    let t = -(rx * nx + ry * ny) / denom;
    if (t * nx).abs() > max_offset || (t * ny).abs() > max_offset {
        return None;
    }
    Some(CenterPoint {
        position: (x as f64 + t * nx, y as f64 + t * ny),
        normal: (nx, ny),
        gradient: (rx, ry),
        second_dir_deriv: eigenvalue,
        width: None,
        source: PointSource::Detected,
    })
}

/// Scan the image interior for center point candidates, optionally gated
/// by a binary mask (candidates only where the mask is set).
///
/// A ridge point is kept by the pixel *containing* its sub-pixel position.
/// Usually that is the pixel whose own Taylor expansion produced it
/// (|t·n| ≤ 0.5); when noise pushes a pixel's offset just past the bound,
/// the zero crossing localized by a neighboring pixel's expansion claims
/// the pixel instead, so near-boundary ridges do not drop out of rows.
/// Nearby duplicates (several pixels converging to the same sub-pixel
/// ridge position) are suppressed in favor of the stronger response.
pub fn detect_candidates(
    fields: &DerivativeFields,
    gate: Option<&BinaryMask>,
    cfg: &MeasurementConfig,
) -> Vec<CenterPoint> {
    let margin = cfg.gaussian.radius as u32;
    let (w, h) = (fields.width, fields.height);
    if h <= 2 * margin || w <= 2 * margin {
        return Vec::new();
    }
    let gated = |x: u32, y: u32| gate.map_or(true, |m| m.get(x, y));
    let mut best: HashMap<(u32, u32), CenterPoint> = HashMap::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            if !gated(x, y) {
                continue;
            }
            let Some(cp) = subpixel_center_relaxed(fields, x, y, cfg.strength_threshold, 1.5)
            else {
                continue;
            };
            // the pixel containing the localized position claims the point
            let (cx, cy) = (cp.position.0.round(), cp.position.1.round());
            if cx < margin as f64
                || cy < margin as f64
                || cx > (w - 1 - margin) as f64
                || cy > (h - 1 - margin) as f64
            {
                continue;
            }
            let (cx, cy) = (cx as u32, cy as u32);
            // only same-pixel or 8-neighbor claims, inside the gate
            if cx.abs_diff(x) > 1 || cy.abs_diff(y) > 1 || !gated(cx, cy) {
                continue;
            }
            match best.entry((cx, cy)) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(cp);
                }
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    let old = e.get();
                    let better = cp.second_dir_deriv < old.second_dir_deriv
                        || (cp.second_dir_deriv == old.second_dir_deriv
                            && cmp_pos(cp.position, old.position).is_lt());
                    if better {
                        e.insert(cp);
                    }
                }
            }
        }
    }
    let mut keys: Vec<(u32, u32)> = best.keys().copied().collect();
    keys.sort_unstable_by_key(|&(x, y)| (y, x));
    let found = keys.into_iter().map(|k| best.remove(&k).unwrap()).collect();
    suppress_duplicates(found, 0.5)
}

/// Drop candidates within `radius` of a stronger accepted candidate.
fn suppress_duplicates(mut candidates: Vec<CenterPoint>, radius: f64) -> Vec<CenterPoint> {
    candidates.sort_by(|a, b| {
        a.second_dir_deriv
            .partial_cmp(&b.second_dir_deriv)
            .unwrap()
            .then(cmp_pos(a.position, b.position))
    });
    let r2 = radius * radius;
    let cell = radius.max(1e-9);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept: Vec<CenterPoint> = Vec::with_capacity(candidates.len());
    'outer: for cp in candidates {
        let (cx, cy) = (
            (cp.position.0 / cell).floor() as i64,
            (cp.position.1 / cell).floor() as i64,
        );
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(cellv) = grid.get(&(cx + dx, cy + dy)) {
                    for &k in cellv {
                        let p = kept[k].position;
                        let (ddx, ddy) = (p.0 - cp.position.0, p.1 - cp.position.1);
                        if ddx * ddx + ddy * ddy < r2 {
                            continue 'outer;
                        }
                    }
                }
            }
        }
        grid.entry((cx, cy)).or_default().push(kept.len());
        kept.push(cp);
    }
    kept
}

fn cmp_pos(a: (f64, f64), b: (f64, f64)) -> std::cmp::Ordering {
    (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap()
}

/// Link candidates into centerlines by greedy chain growth.
///
/// Chains start at the strongest unlinked response; each end is extended
/// to the unlinked candidate minimizing `dist + gamma * Δθ_normal`, subject
/// to `dist <= r_link` and `Δθ <= theta_max`. Chains shorter than
/// `min_points` are discarded. Fully deterministic: ties break by response
/// strength, then position.
pub fn link_centerlines(candidates: &[CenterPoint], cfg: &MeasurementConfig) -> Vec<Centerline> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| {
        candidates[i]
            .second_dir_deriv
            .partial_cmp(&candidates[j].second_dir_deriv)
            .unwrap()
            .then(cmp_pos(candidates[i].position, candidates[j].position))
    });

    let cell = cfg.r_link.max(1e-9);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, cp) in candidates.iter().enumerate() {
        let key = (
            (cp.position.0 / cell).floor() as i64,
            (cp.position.1 / cell).floor() as i64,
        );
        grid.entry(key).or_default().push(i);
    }

    let theta_max = cfg.theta_max_deg.to_radians();
    let mut used = vec![false; candidates.len()];
    let mut lines = Vec::new();

    let next_of = |end: &CenterPoint, used: &[bool]| -> Option<usize> {
        let (ex, ey) = end.position;
        let (cx, cy) = ((ex / cell).floor() as i64, (ey / cell).floor() as i64);
        let mut best: Option<(f64, usize)> = None;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(cellv) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &k in cellv {
                    if used[k] {
                        continue;
                    }
                    let p = &candidates[k];
                    let (ddx, ddy) = (p.position.0 - ex, p.position.1 - ey);
                    let dist = (ddx * ddx + ddy * ddy).sqrt();
                    if dist > cfg.r_link || dist == 0.0 {
                        continue;
                    }
                    let dtheta = normal_angle(end.normal, p.normal);
                    if dtheta > theta_max {
                        continue;
                    }
                    let cost = dist + cfg.gamma * dtheta;
                    let better = match best {
                        None => true,
                        Some((bc, bk)) => {
                            cost < bc
                                || (cost == bc
                                    && cmp_pos(p.position, candidates[bk].position)
                                        == std::cmp::Ordering::Less)
                        }
                    };
                    if better {
                        best = Some((cost, k));
                    }
                }
            }
        }
        best.map(|(_, k)| k)
    };

    for &seed in &order {
        if used[seed] {
            continue;
        }
        used[seed] = true;
        let mut chain = std::collections::VecDeque::new();
        chain.push_back(seed);
        // grow forward then backward
        loop {
            let end = &candidates[*chain.back().unwrap()];
            match next_of(end, &used) {
                Some(k) => {
                    used[k] = true;
                    chain.push_back(k);
                }
                None => break,
            }
        }
        loop {
            let end = &candidates[*chain.front().unwrap()];
            match next_of(end, &used) {
                Some(k) => {
                    used[k] = true;
                    chain.push_front(k);
                }
                None => break,
            }
        }
        if chain.len() >= cfg.min_points {
            lines.push(Centerline {
                points: chain.iter().map(|&k| candidates[k].clone()).collect(),
                instance: 0,
                closed: false,
            });
        }
    }

    lines.sort_by(|a, b| {
        b.len().cmp(&a.len()).then_with(|| {
            cmp_pos(a.points[0].position, b.points[0].position)
        })
    });
    lines
}

/// Edge-response floor below which a gradient maximum is treated as noise.
const EDGE_NOISE_THRESHOLD: f64 = 1e-3;

/// Locate the edge on either side of a center point along its normal: the
/// inflection of the smoothed profile, found as the first zero crossing of
/// the second directional derivative n^T H n walking outward. The crossing
/// is refined by linear interpolation between the bracketing samples; a
/// zero crossing of the bilinearly interpolated field stays sub-pixel
/// accurate where a sampled gradient-magnitude maximum would snap to the
/// interpolation grid.
pub fn edge_pair(
    fields: &DerivativeFields,
    cp: &CenterPoint,
    max_halfwidth: f64,
) -> Option<EdgePair> {
    let side = |dir: f64| -> Option<(f64, (f64, f64), (f64, f64))> {
        let step = 0.25;
        let n = (max_halfwidth / step).floor() as usize;
        if n < 3 {
            return None;
        }
        let q_at = |s: f64| -> Option<f64> {
            let x = cp.position.0 + dir * s * cp.normal.0;
            let y = cp.position.1 + dir * s * cp.normal.1;
            if !fields.in_interior(x, y, 1.0) {
                return None;
            }
            let (hxx, hxy, hyy) = fields.hessian_at(x, y);
            Some(
                hxx * cp.normal.0 * cp.normal.0
                    + 2.0 * hxy * cp.normal.0 * cp.normal.1
                    + hyy * cp.normal.1 * cp.normal.1,
            )
        };
        let mut prev = q_at(0.0)?;
        let mut root = None;
        for i in 1..=n {
            let si = i as f64 * step;
            let q = match q_at(si) {
                Some(q) => q,
                None => break,
            };
            if prev < 0.0 && q >= 0.0 {
                // linear root between the bracketing samples
                let t = prev / (prev - q);
                root = Some(si - step + t * step);
                break;
            }
            prev = q;
        }
        let s = root?;
        let ex = cp.position.0 + dir * s * cp.normal.0;
        let ey = cp.position.1 + dir * s * cp.normal.1;
        let g = fields.gradient_at(ex, ey);
        if (g.0 * g.0 + g.1 * g.1).sqrt() < EDGE_NOISE_THRESHOLD {
            return None;
        }
        Some((s, (ex, ey), g))
    };

    let (s1, e1, g1) = side(1.0)?;
    let (s2, e2, g2) = side(-1.0)?;
    Some(EdgePair {
        e1,
        e2,
        g1,
        g2,
        s1,
        s2,
    })
}
