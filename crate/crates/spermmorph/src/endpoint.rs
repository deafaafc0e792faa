//! Endpoint handling for tail centerlines: outlier filtering of mislocated
//! endpoints via the edge-gradient parallelism constraint, and endpoint
//! reconstruction by a momentum-guided gradient-following walk.

use serde::{Deserialize, Serialize};

use crate::config::MeasurementConfig;
use crate::derivatives::DerivativeFields;
use crate::error::{MorphError, Result};
use crate::raster::BinaryMask;
use crate::steger::{edge_pair, CenterPoint, Centerline, PointSource};

/// Outcome of the parallelism test for one examined centerline point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointVerdict {
    pub point: CenterPoint,
    /// cos of the angle between the two edge gradients; NaN when no valid
    /// edge pair exists at the point.
    pub cos_alpha: f64,
    pub kept: bool,
}

/// Which end of a centerline to operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineEnd {
    /// First point of the chain.
    Front,
    /// Last point of the chain.
    Back,
}

/// One step of the reconstruction walk, for tracing/debugging.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkTrace {
    pub step: usize,
    pub current: (i64, i64),
    pub momentum_gradient: (f64, f64),
    pub candidate_scores: [((i64, i64), f64); 2],
    pub chosen: (i64, i64),
}

/// Normalized dot product of two gradients, in [-1, 1].
pub fn cos_alpha(g1: (f64, f64), g2: (f64, f64)) -> Result<f64> {
    let n1 = (g1.0 * g1.0 + g1.1 * g1.1).sqrt();
    let n2 = (g2.0 * g2.0 + g2.1 * g2.1).sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(MorphError::ZeroGradient);
    }
    Ok(((g1.0 * g2.0 + g1.1 * g2.1) / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Trim mislocated endpoints from both ends of a centerline.
///
/// Walking inward from each end, a point is kept once it has a valid edge
/// pair whose gradients are close to (anti)parallel: |cos α| ≥ threshold.
/// Everything outside the first kept point is removed; interior points are
/// never touched. Verdicts record every examined point.
pub fn filter_endpoints(
    line: &Centerline,
    edge_fields: &DerivativeFields,
    cfg: &MeasurementConfig,
) -> Result<(Centerline, Vec<EndpointVerdict>)> {
    if line.len() < cfg.min_points {
        return Err(MorphError::TooFewPoints {
            needed: cfg.min_points,
            got: line.len(),
        });
    }
    let n = line.len();
    let mut verdicts = Vec::new();

    let test = |cp: &CenterPoint| -> (f64, bool) {
        match edge_pair(edge_fields, cp, cfg.max_halfwidth) {
            Some(pair) => match cos_alpha(pair.g1, pair.g2) {
                Ok(c) => (c, c.abs() >= cfg.cos_threshold),
                Err(_) => (f64::NAN, false),
            },
            None => (f64::NAN, false),
        }
    };

    let mut start = 0usize;
    while start < n {
        let (c, kept) = test(&line.points[start]);
        verdicts.push(EndpointVerdict {
            point: line.points[start].clone(),
            cos_alpha: c,
            kept,
        });
        if kept {
            break;
        }
        start += 1;
    }
    if start == n {
        return Err(MorphError::NoValidCenterPoints);
    }
    let mut stop = n - 1;
    while stop > start {
        let (c, kept) = test(&line.points[stop]);
        verdicts.push(EndpointVerdict {
            point: line.points[stop].clone(),
            cos_alpha: c,
            kept,
        });
        if kept {
            break;
        }
        stop -= 1;
    }

    let filtered = Centerline {
        points: line.points[start..=stop].to_vec(),
        instance: line.instance,
        closed: line.closed,
    };
    Ok((filtered, verdicts))
}

/// The two candidate pixels bracketing a gradient direction.
///
/// For a gradient angle in [0°, 45°) at (c_x, c_y) the candidates are the
/// diagonal neighbor (c_x+1, c_y+1) and the axis neighbor (c_x+1, c_y);
/// the remaining octants follow by symmetry. An exact diagonal angle
/// (odd multiple of 45°) pairs with the axis neighbor below it.
pub fn candidate_pixels(
    current: (i64, i64),
    gradient: (f64, f64),
) -> Result<[(i64, i64); 2]> {
    if gradient.0 == 0.0 && gradient.1 == 0.0 {
        return Err(MorphError::ZeroGradient);
    }
    let mut deg = gradient.1.atan2(gradient.0).to_degrees();
    if deg < 0.0 {
        deg += 360.0;
    }
    // neighbor offset for a direction that is a multiple of 45 degrees
    let offset = |a: f64| -> (i64, i64) {
        let rad = a.to_radians();
        (rad.cos().round() as i64, rad.sin().round() as i64)
    };
    let (lo, hi) = if (deg % 90.0 - 45.0).abs() < 1e-9 {
        // exact diagonal: pair with the axis neighbor below
        (deg - 45.0, deg)
    } else {
        let k = (deg / 45.0).floor();
        (k * 45.0, (k + 1.0) * 45.0)
    };
    let (a, b) = (offset(lo), offset(hi));
    // diagonal first, axis second
    let diag_first = |p: (i64, i64)| p.0 != 0 && p.1 != 0;
    let pair = if diag_first(a) { [a, b] } else { [b, a] };
    Ok([
        (current.0 + pair[0].0, current.1 + pair[0].1),
        (current.0 + pair[1].0, current.1 + pair[1].1),
    ])
}

/// Exponential-smoothing momentum update of the walk gradient.
pub fn momentum_update(alpha: f64, g_prev: (f64, f64), g_next: (f64, f64)) -> (f64, f64) {
    (
        alpha * g_prev.0 + (1.0 - alpha) * g_next.0,
        alpha * g_prev.1 + (1.0 - alpha) * g_next.1,
    )
}

/// Result of a reconstruction walk.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub points: Vec<CenterPoint>,
    pub trace: Vec<WalkTrace>,
    /// Set when the walk hit the step budget before leaving the tail area.
    pub nonterminating: bool,
}

fn unit(v: (f64, f64)) -> (f64, f64) {
    let n = (v.0 * v.0 + v.1 * v.1).sqrt();
    if n == 0.0 {
        (0.0, 0.0)
    } else {
        (v.0 / n, v.1 / n)
    }
}

/// Perpendicular distance from a point to the ray `origin + t*dir`, t ≥ 0.
/// Points behind the origin are charged their full distance to the origin,
/// so the walk cannot double back.
fn ray_distance(point: (f64, f64), origin: (f64, f64), dir: (f64, f64)) -> f64 {
    let d = unit(dir);
    let (vx, vy) = (point.0 - origin.0, point.1 - origin.1);
    let t = vx * d.0 + vy * d.1;
    if t <= 0.0 {
        (vx * vx + vy * vy).sqrt()
    } else {
        (vx * d.1 - vy * d.0).abs()
    }
}

/// Angle in [0, π/2] between a candidate gradient and the momentum
/// gradient, with the candidate sign-aligned to the momentum first.
fn folded_angle(g: (f64, f64), reference: (f64, f64)) -> f64 {
    let gn = unit(g);
    let rn = unit(reference);
    let dot = (gn.0 * rn.0 + gn.1 * rn.1).abs().min(1.0);
    dot.acos()
}

/// Reconstruct the missing tip of a filtered centerline at one end.
///
/// Starting at the surviving end point, the walk repeatedly selects the
/// neighbor pixel minimizing `w1*d + w2*β` along the momentum-smoothed
/// gradient, appending a reconstructed point per step, until the next
/// candidate leaves the tail mask or the step budget is exhausted. The
/// normal of each reconstructed point is the unit vector perpendicular to
/// the momentum gradient.
pub fn reconstruct_endpoint(
    line: &Centerline,
    end: LineEnd,
    fields: &DerivativeFields,
    tail_mask: &BinaryMask,
    cfg: &MeasurementConfig,
) -> Result<Reconstruction> {
    if line.len() < 2 {
        return Err(MorphError::TooFewPoints {
            needed: 2,
            got: line.len(),
        });
    }
    // chain direction over a several-point chord; two adjacent sub-pixel
    // points are too close for a stable direction estimate
    let back = line.len().saturating_sub(1).min(5);
    let (end_point, inner) = match end {
        LineEnd::Front => (&line.points[0], &line.points[back]),
        LineEnd::Back => (
            &line.points[line.len() - 1],
            &line.points[line.len() - 1 - back],
        ),
    };
    // outward direction: from the interior toward the end
    let outward = unit((
        end_point.position.0 - inner.position.0,
        end_point.position.1 - inner.position.1,
    ));

    // initial gradient: the image gradient at the end point, sign-oriented
    // outward. At a true center point the gradient lies along the line
    // (its cross-line component vanishes), so a gradient that is absent or
    // dominated by its perpendicular component is measurement noise and
    // falls back to the chain direction.
    let g0 = fields.gradient_at(end_point.position.0, end_point.position.1);
    let g0_mag = (g0.0 * g0.0 + g0.1 * g0.1).sqrt();
    let proj = g0.0 * outward.0 + g0.1 * outward.1;
    let mut momentum = if g0_mag < 1e-2 || proj.abs() < 0.5 * g0_mag {
        // a unit chain-direction vector also outweighs the per-step noise
        // gradients in the momentum blend, keeping the walk on course
        outward
    } else if proj < 0.0 {
        (-g0.0, -g0.1)
    } else {
        g0
    };

    let mut current = (
        end_point.position.0.round() as i64,
        end_point.position.1.round() as i64,
    );
    let mut points = Vec::new();
    let mut trace = Vec::new();
    let mut nonterminating = false;

    for step in 0..cfg.max_steps {
        let cands = candidate_pixels(current, momentum)?;
        let mut scored = [(cands[0], 0.0f64), (cands[1], 0.0f64)];
        for (c, s) in scored.iter_mut() {
            let center = (c.0 as f64, c.1 as f64);
            let d = ray_distance(center, (current.0 as f64, current.1 as f64), momentum);
            let beta = if !fields.in_interior(center.0, center.1, 0.0) {
                std::f64::consts::FRAC_PI_2
            } else {
                let g = fields.gradient_at(center.0, center.1);
                let mag = (g.0 * g.0 + g.1 * g.1).sqrt();
                if mag < 1e-3 {
                    // on the ridge interior the gradient is expected to
                    // vanish; an angle against noise would be arbitrary
                    0.0
                } else {
                    folded_angle(g, momentum)
                }
            };
            *s = cfg.w1 * d + cfg.w2 * beta;
        }
        let chosen = if scored[0].1 <= scored[1].1 {
            scored[0].0
        } else {
            scored[1].0
        };
        trace.push(WalkTrace {
            step,
            current,
            momentum_gradient: momentum,
            candidate_scores: scored,
            chosen,
        });
        if !tail_mask.get_signed(chosen.0, chosen.1) {
            return Ok(Reconstruction {
                points,
                trace,
                nonterminating: false,
            });
        }
        // momentum update with the chosen candidate's gradient,
        // sign-aligned to the current momentum
        let g_next_raw = fields.gradient_at(chosen.0 as f64, chosen.1 as f64);
        let g_next = if g_next_raw.0 == 0.0 && g_next_raw.1 == 0.0 {
            momentum
        } else if g_next_raw.0 * momentum.0 + g_next_raw.1 * momentum.1 < 0.0 {
            (-g_next_raw.0, -g_next_raw.1)
        } else {
            g_next_raw
        };
        momentum = momentum_update(cfg.momentum_alpha, momentum, g_next);
        let m_unit = unit(momentum);
        // snap to the nearby sub-pixel ridge center when the local Taylor
        // expansion finds one, keeping the walk on the line instead of the
        // integer grid (and pulling it back when it drifts a pixel off)
        let mut position = (chosen.0 as f64, chosen.1 as f64);
        if chosen.0 >= 0 && chosen.1 >= 0 {
            if let Some(cp2) = crate::steger::subpixel_center_relaxed(
                fields,
                chosen.0 as u32,
                chosen.1 as u32,
                cfg.strength_threshold,
                1.5,
            ) {
                let (dx, dy) = (
                    cp2.position.0 - position.0,
                    cp2.position.1 - position.1,
                );
                if dx.abs() <= 1.25 && dy.abs() <= 1.25 {
                    position = cp2.position;
                }
            }
        }
        points.push(CenterPoint {
            position,
            // corrected normal: perpendicular to the momentum gradient
            normal: {
                let (nx, ny) = (-m_unit.1, m_unit.0);
                if ny < 0.0 || (ny == 0.0 && nx < 0.0) {
                    (-nx, -ny)
                } else {
                    (nx, ny)
                }
            },
            gradient: g_next_raw,
            second_dir_deriv: 0.0,
            width: None,
            source: PointSource::Reconstructed,
        });
        let next = (position.0.round() as i64, position.1.round() as i64);
        if next == current || points.len() >= 2 && {
            let prev = points[points.len() - 2].position;
            (prev.0.round() as i64, prev.1.round() as i64) == next
        } {
            // the snap pulled the walk back onto a pixel it already
            // visited; it cannot advance any further
            break;
        }
        current = next;
        if step + 1 == cfg.max_steps {
            nonterminating = true;
        }
    }

    Ok(Reconstruction {
        points,
        trace,
        nonterminating,
    })
}

/// Append a reconstruction to the proper end of a line, keeping point order.
pub fn extend_line(line: &mut Centerline, end: LineEnd, recon: &Reconstruction) {
    match end {
        LineEnd::Back => line.points.extend(recon.points.iter().cloned()),
        LineEnd::Front => {
            let mut pts: Vec<CenterPoint> = recon.points.iter().rev().cloned().collect();
            pts.extend(line.points.drain(..));
            line.points = pts;
        }
    }
}
