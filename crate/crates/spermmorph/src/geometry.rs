//! Geometric fitting primitives: direct least-squares ellipse fit with the
//! conic ellipse constraint, convex hull, and minimum-area rotated
//! bounding rectangle.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::raster::BinaryMask;

/// Geometric ellipse parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    /// Semi-major axis.
    pub a: f64,
    /// Semi-minor axis.
    pub b: f64,
    /// Major-axis orientation from +x, degrees in [0, 180).
    pub angle_deg: f64,
}

/// Rotated rectangle parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub cx: f64,
    pub cy: f64,
    /// Longer side.
    pub length: f64,
    /// Shorter side.
    pub width: f64,
    /// Orientation of the longer side from +x, degrees in [0, 180).
    pub angle_deg: f64,
}

/// Sub-pixel boundary points of a mask: midpoints of all 4-adjacent
/// (inside, outside) pixel pairs, including the raster border.
pub fn boundary_points(mask: &BinaryMask) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let (w, h) = (mask.width as i64, mask.height as i64);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as u32, y as u32) {
                continue;
            }
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x + dx, y + dy);
                if !mask.get_signed(nx, ny) {
                    pts.push((x as f64 + dx as f64 * 0.5, y as f64 + dy as f64 * 0.5));
                }
            }
        }
    }
    pts
}

fn fold_angle_deg(mut deg: f64) -> f64 {
    while deg < 0.0 {
        deg += 180.0;
    }
    while deg >= 180.0 {
        deg -= 180.0;
    }
    deg
}

/// Direct least-squares ellipse fit (conic constrained to an ellipse)
/// over a set of boundary points.
pub fn fit_ellipse_points(points: &[(f64, f64)]) -> Result<Ellipse> {
    let n = points.len();
    if n < 6 {
        return Err(MorphError::DegenerateFit(format!(
            "need at least 6 boundary points, got {n}"
        )));
    }

    // normalize for conditioning: center at centroid, scale to unit RMS
    let (mut mx, mut my) = (0.0, 0.0);
    for &(x, y) in points {
        mx += x;
        my += y;
    }
    mx /= n as f64;
    my /= n as f64;
    let mut rms = 0.0;
    for &(x, y) in points {
        rms += (x - mx).powi(2) + (y - my).powi(2);
    }
    rms = (rms / n as f64).sqrt();
    if rms < 1e-12 {
        return Err(MorphError::DegenerateFit("coincident boundary points".into()));
    }
    let s = 1.0 / rms;

    let mut d1 = DMatrix::<f64>::zeros(n, 3);
    let mut d2 = DMatrix::<f64>::zeros(n, 3);
    for (i, &(px, py)) in points.iter().enumerate() {
        let x = (px - mx) * s;
        let y = (py - my) * s;
        d1[(i, 0)] = x * x;
        d1[(i, 1)] = x * y;
        d1[(i, 2)] = y * y;
        d2[(i, 0)] = x;
        d2[(i, 1)] = y;
        d2[(i, 2)] = 1.0;
    }
    let s1 = (d1.transpose() * &d1).fixed_view::<3, 3>(0, 0).into_owned();
    let s2 = (d1.transpose() * &d2).fixed_view::<3, 3>(0, 0).into_owned();
    let s3 = (d2.transpose() * &d2).fixed_view::<3, 3>(0, 0).into_owned();

    let s3_inv = s3
        .try_inverse()
        .ok_or_else(|| MorphError::DegenerateFit("singular scatter matrix".into()))?;
    let m = s1 - s2 * s3_inv * s2.transpose();

    // constraint matrix C for 4AC - B^2 = 1
    let c1 = Matrix3::new(0.0, 0.0, 2.0, 0.0, -1.0, 0.0, 2.0, 0.0, 0.0);
    let c1_inv = c1.try_inverse().unwrap();
    let system = c1_inv * m;

    let a1 = solve_constrained_eigen(&system)?;
    let a2 = -s3_inv * s2.transpose() * a1;

    // denormalize: conic in (x', y') with x' = (x - mx) s
    let (qa, qb, qc) = (a1[0], a1[1], a1[2]);
    let (qd, qe, qf) = (a2[0], a2[1], a2[2]);
    let a = qa * s * s;
    let b = qb * s * s;
    let c = qc * s * s;
    let d = -2.0 * qa * s * s * mx - qb * s * s * my + qd * s;
    let e = -qb * s * s * mx - 2.0 * qc * s * s * my + qe * s;
    let f = qa * s * s * mx * mx + qb * s * s * mx * my + qc * s * s * my * my
        - qd * s * mx
        - qe * s * my
        + qf;

    conic_to_ellipse(a, b, c, d, e, f)
}

/// Eigenvector of a general 3x3 matrix satisfying the ellipse constraint,
/// via the characteristic cubic and adjugate null vectors.
fn solve_constrained_eigen(system: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let tr = system[(0, 0)] + system[(1, 1)] + system[(2, 2)];
    let minor_sum = system[(0, 0)] * system[(1, 1)] - system[(0, 1)] * system[(1, 0)]
        + system[(0, 0)] * system[(2, 2)]
        - system[(0, 2)] * system[(2, 0)]
        + system[(1, 1)] * system[(2, 2)]
        - system[(1, 2)] * system[(2, 1)];
    let det = system.determinant();

    let mut best: Option<Vector3<f64>> = None;
    for ev in cubic_roots(-tr, minor_sum, -det) {
        let shifted = system - Matrix3::identity() * ev;
        let Some(v) = null_vector(&shifted) else {
            continue;
        };
        // ellipse constraint 4AC - B^2 > 0
        if 4.0 * v[0] * v[2] - v[1] * v[1] > 0.0 {
            best = Some(v);
        }
    }
    best.ok_or_else(|| MorphError::DegenerateFit("no ellipse solution".into()))
}

/// Null vector of a near-singular 3x3 matrix via the largest adjugate row.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [
        Vector3::new(
            m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)],
            -(m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)]),
            m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)],
        ),
        Vector3::new(
            -(m[(0, 1)] * m[(2, 2)] - m[(0, 2)] * m[(2, 1)]),
            m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)],
            -(m[(0, 0)] * m[(2, 1)] - m[(0, 1)] * m[(2, 0)]),
        ),
        Vector3::new(
            m[(0, 1)] * m[(1, 2)] - m[(0, 2)] * m[(1, 1)],
            -(m[(0, 0)] * m[(1, 2)] - m[(0, 2)] * m[(1, 0)]),
            m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        ),
    ];
    let best = rows
        .iter()
        .max_by(|a, b| a.norm_squared().partial_cmp(&b.norm_squared()).unwrap())?;
    let n = best.norm();
    if n < 1e-30 {
        return None;
    }
    Some(best / n)
}

/// Real roots of x³ + px² + qx + r = 0.
fn cubic_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    // depressed cubic t^3 + at + b, x = t - p/3
    let a = q - p * p / 3.0;
    let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let shift = -p / 3.0;
    let disc = -4.0 * a * a * a - 27.0 * b * b;
    if disc >= 0.0 {
        // three real roots (trigonometric form)
        let m = (-a / 3.0).max(0.0).sqrt();
        if m < 1e-300 {
            return vec![shift];
        }
        let arg = (3.0 * b / (2.0 * a * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                2.0 * m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift
            })
            .collect()
    } else {
        // one real root (Cardano)
        let sq = (b * b / 4.0 + a * a * a / 27.0).sqrt();
        let u = (-b / 2.0 + sq).cbrt();
        let v = (-b / 2.0 - sq).cbrt();
        vec![u + v + shift]
    }
}

/// Convert general conic coefficients to ellipse parameters.
fn conic_to_ellipse(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Ellipse> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        return Err(MorphError::DegenerateFit("conic is not an ellipse".into()));
    }
    let cx = (2.0 * c * d - b * e) / disc;
    let cy = (2.0 * a * e - b * d) / disc;

    // evaluate at the center to get the constant of the centered conic
    let fc = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f;
    if fc.abs() < 1e-300 {
        return Err(MorphError::DegenerateFit("point conic".into()));
    }
    // centered: A x'^2 + B x'y' + C y'^2 = -fc
    let (an, bn, cn) = (a / -fc, b / -fc, c / -fc);
    // eigenvalues of [[an, bn/2], [bn/2, cn]]
    let tr = an + cn;
    let dd = ((an - cn).powi(2) + bn * bn).sqrt();
    let l1 = 0.5 * (tr + dd); // larger eigenvalue -> minor axis
    let l2 = 0.5 * (tr - dd);
    if l1 <= 0.0 || l2 <= 0.0 {
        return Err(MorphError::DegenerateFit("conic is not an ellipse".into()));
    }
    let semi_major = 1.0 / l2.sqrt();
    let semi_minor = 1.0 / l1.sqrt();
    // major axis direction: eigenvector of the smaller eigenvalue
    let angle = if bn.abs() < 1e-15 {
        if an <= cn {
            0.0
        } else {
            90.0
        }
    } else {
        let vy = l2 - an;
        let vx = bn / 2.0;
        vy.atan2(vx).to_degrees()
    };
    Ok(Ellipse {
        cx,
        cy,
        a: semi_major,
        b: semi_minor,
        angle_deg: fold_angle_deg(angle),
    })
}

/// Direct ellipse fit to the sub-pixel boundary of a mask. A mask whose
/// pixel centers are (near-)collinear has no area to fit and is rejected.
pub fn fit_ellipse_mask(mask: &BinaryMask) -> Result<Ellipse> {
    let mut centers = Vec::new();
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                centers.push((x as f64, y as f64));
            }
        }
    }
    if collinear(&centers) {
        return Err(MorphError::DegenerateFit(
            "mask pixels are collinear".into(),
        ));
    }
    fit_ellipse_points(&boundary_points(mask))
}

/// True when the points have no extent transverse to their principal axis.
fn collinear(points: &[(f64, f64)]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // smaller eigenvalue of the scatter matrix
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let lam_min = tr / 2.0 - (tr * tr / 4.0 - det).max(0.0).sqrt();
    lam_min / n < 1e-9
}

/// Andrew's monotone-chain convex hull. Returns the hull in counter-
/// clockwise order without the repeated first point.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Minimum-area rotated bounding rectangle of a point set (rotating
/// calipers over convex hull edges).
pub fn min_area_rect(points: &[(f64, f64)]) -> Result<RotatedRect> {
    if points.is_empty() {
        return Err(MorphError::DegenerateFit("empty point set".into()));
    }
    let hull = convex_hull(points);
    if hull.len() == 1 {
        return Ok(RotatedRect {
            cx: hull[0].0,
            cy: hull[0].1,
            length: 0.0,
            width: 0.0,
            angle_deg: 0.0,
        });
    }
    if hull.len() == 2 {
        let (p, q) = (hull[0], hull[1]);
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        return Ok(RotatedRect {
            cx: (p.0 + q.0) / 2.0,
            cy: (p.1 + q.1) / 2.0,
            length: (dx * dx + dy * dy).sqrt(),
            width: 0.0,
            angle_deg: fold_angle_deg(dy.atan2(dx).to_degrees()),
        });
    }

    let mut best: Option<(f64, RotatedRect)> = None;
    for i in 0..hull.len() {
        let p = hull[i];
        let q = hull[(i + 1) % hull.len()];
        let (ex, ey) = (q.0 - p.0, q.1 - p.1);
        let elen = (ex * ex + ey * ey).sqrt();
        if elen < 1e-12 {
            continue;
        }
        let (ux, uy) = (ex / elen, ey / elen);
        // project hull onto the edge direction and its perpendicular
        let (mut min_u, mut max_u) = (f64::MAX, f64::MIN);
        let (mut min_v, mut max_v) = (f64::MAX, f64::MIN);
        for &(hx, hy) in &hull {
            let u = hx * ux + hy * uy;
            let v = -hx * uy + hy * ux;
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
        let du = max_u - min_u;
        let dv = max_v - min_v;
        let area = du * dv;
        let better = match &best {
            None => true,
            Some((ba, _)) => area < *ba - 1e-12,
        };
        if better {
            let (cu, cv) = ((min_u + max_u) / 2.0, (min_v + max_v) / 2.0);
            let (cx, cy) = (cu * ux - cv * uy, cu * uy + cv * ux);
            let (length, width, mut angle) = if du >= dv {
                (du, dv, uy.atan2(ux).to_degrees())
            } else {
                (dv, du, (uy.atan2(ux) + std::f64::consts::FRAC_PI_2).to_degrees())
            };
            angle = fold_angle_deg(angle);
            best = Some((
                area,
                RotatedRect {
                    cx,
                    cy,
                    length,
                    width,
                    angle_deg: angle,
                },
            ));
        }
    }
    best.map(|(_, r)| r)
        .ok_or_else(|| MorphError::DegenerateFit("degenerate hull".into()))
}

/// Minimum-area rotated rectangle of a mask: fitted over pixel centers,
/// then grown by one pixel of footprint per axis so that a w×h block of
/// pixels yields exactly a w×h rectangle. (Fitting pixel *corners* instead
/// would overestimate rotated blocks by up to ~1.4 px.)
pub fn min_area_rect_mask(mask: &BinaryMask) -> Result<RotatedRect> {
    let mut centers = Vec::new();
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                centers.push((x as f64, y as f64));
            }
        }
    }
    let mut rect = min_area_rect(&centers)?;
    rect.length += 1.0;
    rect.width += 1.0;
    Ok(rect)
}

/// Acute angle between two undirected axes given in degrees.
pub fn axis_angle_between(a_deg: f64, b_deg: f64) -> f64 {
    let diff = (fold_angle_deg(a_deg) - fold_angle_deg(b_deg)).abs();
    diff.min(180.0 - diff)
}
