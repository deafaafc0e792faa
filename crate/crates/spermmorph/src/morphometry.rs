//! Per-sperm morphology parameters: tail length/width/curvature from the
//! centerline, head ellipse, midpiece rectangle, part areas and angles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::MeasurementConfig;
use crate::derivatives::{derivative_fields, DerivativeFields, GaussianSpec};
use crate::endpoint::{filter_endpoints, reconstruct_endpoint, extend_line, LineEnd};
use crate::error::{MorphError, Result};
use crate::geometry::{axis_angle_between, fit_ellipse_mask, min_area_rect_mask};
use crate::raster::{
    connected_components, instance_part_mask, BinaryMask, InstancePartMask, PartLabel,
    PixelScale, ScalarImage,
};
use crate::steger::{
    detect_candidates, edge_pair, link_centerlines, CenterPoint, Centerline, PointSource,
};

/// Quality degradations encountered while measuring one sperm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    MissingPart,
    FragmentedTail,
    NonterminatingWalk,
    FitDegenerate,
}

impl QualityFlag {
    pub fn name(self) -> &'static str {
        match self {
            QualityFlag::MissingPart => "missing_part",
            QualityFlag::FragmentedTail => "fragmented_tail",
            QualityFlag::NonterminatingWalk => "nonterminating_walk",
            QualityFlag::FitDegenerate => "fit_degenerate",
        }
    }
}

/// Head ellipse parameters in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub length_um: f64,
    pub width_um: f64,
    pub ellipticity: f64,
    pub major_axis_angle_deg: f64,
}

/// Elongated-part parameters (midpiece, tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElongatedParams {
    pub length_um: f64,
    pub width_um: f64,
    pub angle_max_deg: f64,
}

/// Full parameter record of one sperm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphReport {
    pub instance: u16,
    pub head: Option<HeadParams>,
    pub acrosome_area_um2: Option<f64>,
    pub nucleus_area_um2: Option<f64>,
    pub vacuole_count: u32,
    pub vacuole_area_um2: Option<f64>,
    pub head_midpiece_angle_deg: Option<f64>,
    pub midpiece: Option<ElongatedParams>,
    pub tail: Option<ElongatedParams>,
    pub quality_flags: BTreeSet<QualityFlag>,
}

/// Polyline length of a centerline, in microns.
pub fn tail_length(line: &Centerline, scale: PixelScale) -> Result<f64> {
    if line.len() < 2 {
        return Err(MorphError::TooFewPoints {
            needed: 2,
            got: line.len(),
        });
    }
    let px: f64 = line
        .points
        .windows(2)
        .map(|w| {
            let (dx, dy) = (
                w[1].position.0 - w[0].position.0,
                w[1].position.1 - w[0].position.1,
            );
            (dx * dx + dy * dy).sqrt()
        })
        .sum();
    Ok(scale.length_um(px))
}

/// Attach per-point widths from edge pairing along the normals.
/// Returns the number of points with a valid pair.
pub fn attach_widths(
    line: &mut Centerline,
    edge_fields: &DerivativeFields,
    cfg: &MeasurementConfig,
) -> usize {
    let mut valid = 0;
    for cp in &mut line.points {
        if let Some(pair) = edge_pair(edge_fields, cp, cfg.max_halfwidth) {
            cp.width = Some(pair.width_corrected(edge_fields.sigma));
            valid += 1;
        } else {
            cp.width = None;
        }
    }
    valid
}

/// Mean width over detected points with a valid edge pair, in pixels.
///
/// Reconstructed points are skipped: their positions are integer pixels
/// guided by the walk, not edge-localized ridge centers, so a width read
/// there would measure the rounded part tip rather than the line body.
pub fn tail_width(line: &Centerline) -> Result<f64> {
    let widths: Vec<f64> = line
        .points
        .iter()
        .filter(|p| p.source == PointSource::Detected)
        .filter_map(|p| p.width)
        .collect();
    if widths.is_empty() {
        return Err(MorphError::Other("no point has a valid edge pair".into()));
    }
    Ok(widths.iter().sum::<f64>() / widths.len() as f64)
}

/// Orientation of each normal as an unwrapped mod-π angle sequence.
fn unwrapped_normal_angles(line: &Centerline) -> Vec<f64> {
    let mut angles = Vec::with_capacity(line.len());
    let mut prev: Option<f64> = None;
    for p in &line.points {
        let mut a = p.normal.1.atan2(p.normal.0);
        if let Some(pv) = prev {
            // normals are undirected: unwrap modulo pi
            let mut d = a - pv;
            while d > std::f64::consts::FRAC_PI_2 {
                d -= std::f64::consts::PI;
            }
            while d < -std::f64::consts::FRAC_PI_2 {
                d += std::f64::consts::PI;
            }
            a = pv + d;
        }
        angles.push(a);
        prev = Some(a);
    }
    angles
}

/// Per-point curvature (rad/px) over a centered arc-length window, and the
/// maximum normal orientation change across the window in degrees.
pub fn tail_curvature(line: &Centerline, window: f64) -> Result<(Vec<f64>, f64)> {
    if line.len() < 3 {
        return Err(MorphError::TooFewPoints {
            needed: 3,
            got: line.len(),
        });
    }
    let n = line.len();
    let mut arclen = vec![0.0; n];
    for i in 1..n {
        let (dx, dy) = (
            line.points[i].position.0 - line.points[i - 1].position.0,
            line.points[i].position.1 - line.points[i - 1].position.1,
        );
        arclen[i] = arclen[i - 1] + (dx * dx + dy * dy).sqrt();
    }
    if arclen[n - 1] < 1e-9 {
        return Err(MorphError::DegenerateFit("all points coincident".into()));
    }
    let angles = unwrapped_normal_angles(line);
    let half = window / 2.0;

    let mut curvatures = Vec::with_capacity(n);
    let mut angle_max: f64 = 0.0;
    for i in 0..n {
        // window endpoints by arc length, clamped to the line
        let lo_s = (arclen[i] - half).max(0.0);
        let hi_s = (arclen[i] + half).min(arclen[n - 1]);
        let lo = arclen.partition_point(|&s| s < lo_s).min(n - 1);
        let hi = arclen.partition_point(|&s| s <= hi_s).saturating_sub(1);
        let (lo, hi) = if lo >= hi { (i.saturating_sub(1), (i + 1).min(n - 1)) } else { (lo, hi) };
        let ds = arclen[hi] - arclen[lo];
        let dtheta = angles[hi] - angles[lo];
        curvatures.push(if ds > 1e-12 { dtheta / ds } else { 0.0 });
        angle_max = angle_max.max(dtheta.abs().to_degrees());
    }
    Ok((curvatures, angle_max))
}

/// Whole-line curvature magnitude (rad/px): least-squares slope of the
/// unwrapped normal orientation against arc length.
///
/// The windowed per-point estimate is dominated by angle noise at the two
/// line ends when the true curvature is small; regressing over every
/// detected point averages that noise out. Reconstructed points are
/// excluded because their normals come from the walk momentum, not from
/// the measured ridge.
pub fn mean_curvature(line: &Centerline) -> Result<f64> {
    let detected: Vec<&CenterPoint> = line
        .points
        .iter()
        .filter(|p| p.source == PointSource::Detected)
        .collect();
    let pts: Vec<&CenterPoint> = if detected.len() >= 3 {
        detected
    } else {
        line.points.iter().collect()
    };
    if pts.len() < 3 {
        return Err(MorphError::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    let sub = Centerline {
        points: pts.iter().map(|p| (*p).clone()).collect(),
        instance: line.instance,
        closed: line.closed,
    };
    let angles = unwrapped_normal_angles(&sub);
    let mut arclen = vec![0.0; sub.len()];
    for i in 1..sub.len() {
        let (dx, dy) = (
            sub.points[i].position.0 - sub.points[i - 1].position.0,
            sub.points[i].position.1 - sub.points[i - 1].position.1,
        );
        arclen[i] = arclen[i - 1] + (dx * dx + dy * dy).sqrt();
    }
    let n = sub.len() as f64;
    let sx: f64 = arclen.iter().sum();
    let sy: f64 = angles.iter().sum();
    let sxx: f64 = arclen.iter().map(|v| v * v).sum();
    let sxy: f64 = arclen.iter().zip(&angles).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(MorphError::DegenerateFit("zero arc length".into()));
    }
    Ok(((n * sxy - sx * sy) / denom).abs())
}

/// Head ellipse fit over a binary mask, scaled.
pub fn fit_ellipse(mask: &BinaryMask, scale: PixelScale) -> Result<HeadParams> {
    let e = fit_ellipse_mask(mask)?;
    let length = scale.length_um(2.0 * e.a);
    let width = scale.length_um(2.0 * e.b);
    Ok(HeadParams {
        length_um: length,
        width_um: width,
        ellipticity: length / width,
        major_axis_angle_deg: e.angle_deg,
    })
}

/// Midpiece rectangle fit over a binary mask, scaled.
pub fn fit_rectangle(mask: &BinaryMask, scale: PixelScale) -> Result<(f64, f64, f64)> {
    if mask.is_empty() {
        return Err(MorphError::DegenerateFit("empty mask".into()));
    }
    let r = min_area_rect_mask(mask)?;
    Ok((
        scale.length_um(r.length),
        scale.length_um(r.width),
        r.angle_deg,
    ))
}

/// Acute angle between head and midpiece major axes, degrees in [0, 90].
pub fn head_midpiece_angle(head_major_deg: f64, midpiece_major_deg: f64) -> f64 {
    axis_angle_between(head_major_deg, midpiece_major_deg)
}

/// Areas per part of one instance, in µm²; vacuole also reports its
/// connected-component count.
pub fn part_areas(
    mask: &InstancePartMask,
    instance: u16,
    scale: PixelScale,
) -> Result<(f64, f64, u32, Option<f64>, f64, f64)> {
    let area_of = |part: PartLabel| -> Result<f64> {
        Ok(scale.area_um2(instance_part_mask(mask, instance, part)?.count() as f64))
    };
    let acrosome = area_of(PartLabel::Acrosome)?;
    let nucleus = area_of(PartLabel::Nucleus)?;
    let midpiece = area_of(PartLabel::Midpiece)?;
    let tail = area_of(PartLabel::Tail)?;
    let vac_mask = instance_part_mask(mask, instance, PartLabel::Vacuole)?;
    let vac_count = connected_components(&vac_mask).len() as u32;
    let vac_area = if vac_count == 0 {
        None
    } else {
        Some(scale.area_um2(vac_mask.count() as f64))
    };
    Ok((acrosome, nucleus, vac_count, vac_area, midpiece, tail))
}

/// Centerline measurement of an elongated part. Returns the measured line
/// (after optional endpoint filtering/reconstruction) plus flags.
pub struct TailMeasurement {
    pub line: Centerline,
    pub length_um: f64,
    pub width_um: f64,
    pub curvature: Vec<f64>,
    /// Whole-line curvature magnitude, rad/px (see [`mean_curvature`]).
    pub mean_curvature: f64,
    pub angle_max_deg: f64,
    pub fragmented: bool,
    pub nonterminating: bool,
}

/// Run the centerline pipeline over one part mask.
pub fn measure_centerline_part(
    fields: &DerivativeFields,
    edge_fields: &DerivativeFields,
    part_mask: &BinaryMask,
    cfg: &MeasurementConfig,
) -> Result<Option<TailMeasurement>> {
    if part_mask.is_empty() {
        return Ok(None);
    }
    let gate = part_mask.dilated(cfg.mask_dilation);
    let candidates = detect_candidates(fields, Some(&gate), cfg);
    let lines = link_centerlines(&candidates, cfg);
    if lines.is_empty() {
        return Ok(None);
    }
    let fragmented = lines.len() > 1;
    let mut line = lines.into_iter().next().unwrap();
    let mut nonterminating = false;

    if !cfg.steger_baseline {
        // the detection gate is dilated, so the linked line can run a few
        // pixels past the part ends; clip it back to the part itself
        let inside = |p: &CenterPoint| {
            part_mask.get_signed(
                p.position.0.round() as i64,
                p.position.1.round() as i64,
            )
        };
        while line.points.len() > cfg.min_points && !inside(line.points.last().unwrap()) {
            line.points.pop();
        }
        while line.points.len() > cfg.min_points && !inside(&line.points[0]) {
            line.points.remove(0);
        }
        // detected ridge points can hook around the rounded intensity cap at
        // a part tip; drop a short arc-length margin at each end so the
        // reconstruction walk starts from clean interior points
        let margin = cfg.endpoint_trim;
        let arc = |a: &CenterPoint, b: &CenterPoint| {
            let (dx, dy) = (a.position.0 - b.position.0, a.position.1 - b.position.1);
            (dx * dx + dy * dy).sqrt()
        };
        let mut trimmed = 0.0;
        while line.points.len() > cfg.min_points && trimmed < margin {
            let n = line.points.len();
            trimmed += arc(&line.points[n - 1], &line.points[n - 2]);
            line.points.pop();
        }
        trimmed = 0.0;
        while line.points.len() > cfg.min_points && trimmed < margin {
            trimmed += arc(&line.points[0], &line.points[1]);
            line.points.remove(0);
        }
        let (filtered, _verdicts) = filter_endpoints(&line, edge_fields, cfg)?;
        line = filtered;
        for end in [LineEnd::Front, LineEnd::Back] {
            let recon = reconstruct_endpoint(&line, end, fields, part_mask, cfg)?;
            nonterminating |= recon.nonterminating;
            extend_line(&mut line, end, &recon);
        }
    }

    attach_widths(&mut line, edge_fields, cfg);
    let length_um = tail_length(&line, cfg.scale)?;
    let width_px = tail_width(&line).unwrap_or(f64::NAN);
    let (curvature, angle_max_deg) = tail_curvature(&line, cfg.curvature_window)?;
    let mean_curv = mean_curvature(&line)?;
    Ok(Some(TailMeasurement {
        line,
        length_um,
        width_um: cfg.scale.length_um(width_px),
        curvature,
        mean_curvature: mean_curv,
        angle_max_deg,
        fragmented,
        nonterminating,
    }))
}

/// Measure every Table-style parameter of one sperm instance.
pub fn measure_sperm(
    img: &ScalarImage,
    mask: &InstancePartMask,
    instance: u16,
    cfg: &MeasurementConfig,
) -> Result<MorphReport> {
    if (img.width, img.height) != (mask.width, mask.height) {
        return Err(MorphError::DimensionMismatch(
            img.width, img.height, mask.width, mask.height,
        ));
    }
    if !mask.contains_instance(instance) {
        return Err(MorphError::UnknownInstance(instance));
    }
    cfg.validate()?;

    let mut flags = BTreeSet::new();

    let acrosome_mask = instance_part_mask(mask, instance, PartLabel::Acrosome)?;
    let vacuole_mask = instance_part_mask(mask, instance, PartLabel::Vacuole)?;
    let nucleus_mask = instance_part_mask(mask, instance, PartLabel::Nucleus)?;
    let midpiece_mask = instance_part_mask(mask, instance, PartLabel::Midpiece)?;
    let tail_mask = instance_part_mask(mask, instance, PartLabel::Tail)?;

    // head = acrosome ∪ vacuole ∪ nucleus
    let head_mask = acrosome_mask.union(&vacuole_mask).union(&nucleus_mask);

    let head = if head_mask.is_empty() {
        flags.insert(QualityFlag::MissingPart);
        None
    } else {
        match fit_ellipse(&head_mask, cfg.scale) {
            Ok(h) => Some(h),
            Err(_) => {
                flags.insert(QualityFlag::FitDegenerate);
                None
            }
        }
    };

    let midpiece_rect = if midpiece_mask.is_empty() {
        flags.insert(QualityFlag::MissingPart);
        None
    } else if midpiece_mask.count() == 1 {
        flags.insert(QualityFlag::FitDegenerate);
        None
    } else {
        match fit_rectangle(&midpiece_mask, cfg.scale) {
            Ok(r) => Some(r),
            Err(_) => {
                flags.insert(QualityFlag::FitDegenerate);
                None
            }
        }
    };

    let (acrosome_area, nucleus_area, vac_count, vac_area, _mp_area, _tail_area) =
        part_areas(mask, instance, cfg.scale)?;

    let head_midpiece = match (&head, &midpiece_rect) {
        (Some(h), Some((_, _, mp_angle))) => {
            Some(head_midpiece_angle(h.major_axis_angle_deg, *mp_angle))
        }
        _ => None,
    };

    // derivative fields are computed once per call over the full image
    let working = if cfg.dark_lines { img.inverted() } else { img.clone() };
    let fields = derivative_fields(&working, cfg.gaussian)?;
    let edge_fields = derivative_fields(&working, GaussianSpec::new(cfg.edge_sigma)?)?;

    let tail = if tail_mask.is_empty() {
        flags.insert(QualityFlag::MissingPart);
        None
    } else {
        match measure_centerline_part(&fields, &edge_fields, &tail_mask, cfg) {
            Ok(Some(t)) => {
                if t.fragmented {
                    flags.insert(QualityFlag::FragmentedTail);
                }
                if t.nonterminating {
                    flags.insert(QualityFlag::NonterminatingWalk);
                }
                Some(ElongatedParams {
                    length_um: t.length_um,
                    width_um: t.width_um,
                    angle_max_deg: t.angle_max_deg,
                })
            }
            Ok(None) | Err(_) => {
                flags.insert(QualityFlag::MissingPart);
                None
            }
        }
    };

    // midpiece length/width from the rectangle; angle(max) from its own
    // centerline when one exists, otherwise from the rectangle orientation
    // relative to the head axis
    let midpiece = midpiece_rect.map(|(len, wid, mp_angle)| {
        let angle_max = match measure_centerline_part(&fields, &edge_fields, &midpiece_mask, cfg)
        {
            Ok(Some(m)) => m.angle_max_deg,
            _ => match &head {
                Some(h) => {
                    flags.insert(QualityFlag::FitDegenerate);
                    axis_angle_between(mp_angle, h.major_axis_angle_deg)
                }
                None => {
                    flags.insert(QualityFlag::FitDegenerate);
                    0.0
                }
            },
        };
        ElongatedParams {
            length_um: len,
            width_um: wid,
            angle_max_deg: angle_max,
        }
    });

    Ok(MorphReport {
        instance,
        head,
        acrosome_area_um2: if acrosome_mask.is_empty() {
            None
        } else {
            Some(acrosome_area)
        },
        nucleus_area_um2: if nucleus_mask.is_empty() {
            None
        } else {
            Some(nucleus_area)
        },
        vacuole_count: vac_count,
        vacuole_area_um2: vac_area,
        head_midpiece_angle_deg: head_midpiece,
        midpiece,
        tail,
        quality_flags: flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steger::{CenterPoint, PointSource};
    use approx::assert_abs_diff_eq;

    fn line_from(points: Vec<(f64, f64, f64, f64)>) -> Centerline {
        Centerline {
            points: points
                .into_iter()
                .map(|(x, y, nx, ny)| CenterPoint {
                    position: (x, y),
                    normal: (nx, ny),
                    gradient: (0.0, 0.0),
                    second_dir_deriv: -1.0,
                    width: None,
                    source: PointSource::Detected,
                })
                .collect(),
            instance: 0,
            closed: false,
        }
    }

    fn arc_line(radius: f64, sweep_deg: f64, n: usize) -> Centerline {
        line_from(
            (0..n)
                .map(|i| {
                    let t = sweep_deg.to_radians() * i as f64 / (n - 1) as f64;
                    let (nx, ny) = {
                        let (x, y) = (t.cos(), t.sin());
                        if y < 0.0 {
                            (-x, -y)
                        } else {
                            (x, y)
                        }
                    };
                    (radius * t.cos(), radius * t.sin(), nx, ny)
                })
                .collect(),
        )
    }

    #[test]
    fn tail_length_straight() {
        let line = line_from((0..201).map(|i| (i as f64, 0.0, 0.0, 1.0)).collect());
        let um = tail_length(&line, PixelScale::new(0.1).unwrap()).unwrap();
        assert_abs_diff_eq!(um, 20.0, epsilon = 1e-9);
    }

    #[test]
    fn tail_length_quarter_circle() {
        let line = arc_line(100.0, 90.0, 400);
        let um = tail_length(&line, PixelScale::default()).unwrap();
        let expected = 100.0 * std::f64::consts::FRAC_PI_2;
        assert!((um - expected).abs() / expected < 0.005, "{um}");
    }

    #[test]
    fn tail_length_two_points() {
        let line = line_from(vec![(0.0, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0, 1.0)]);
        let um = tail_length(&line, PixelScale::new(0.05).unwrap()).unwrap();
        assert_abs_diff_eq!(um, 0.05, epsilon = 1e-12);
        assert!(tail_length(
            &line_from(vec![(0.0, 0.0, 0.0, 1.0)]),
            PixelScale::default()
        )
        .is_err());
    }

    #[test]
    fn tail_length_at_least_chord() {
        let line = arc_line(60.0, 120.0, 100);
        let len = tail_length(&line, PixelScale::default()).unwrap();
        let a = line.points[0].position;
        let b = line.points[line.len() - 1].position;
        let chord = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        assert!(len >= chord);
    }

    #[test]
    fn tail_width_mean_and_single() {
        let mut line = line_from(vec![
            (0.0, 0.0, 0.0, 1.0),
            (1.0, 0.0, 0.0, 1.0),
            (2.0, 0.0, 0.0, 1.0),
        ]);
        line.points[1].width = Some(3.2);
        assert_abs_diff_eq!(tail_width(&line).unwrap(), 3.2, epsilon = 1e-12);
        line.points[0].width = Some(6.0);
        line.points[2].width = Some(2.0);
        assert_abs_diff_eq!(
            tail_width(&line).unwrap(),
            (6.0 + 3.2 + 2.0) / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn tail_width_requires_some_pair() {
        let line = line_from(vec![(0.0, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0, 1.0)]);
        assert!(tail_width(&line).is_err());
    }

    #[test]
    fn curvature_straight_line() {
        let line = line_from((0..50).map(|i| (i as f64, 0.0, 0.0, 1.0)).collect());
        let (curv, angle_max) = tail_curvature(&line, 10.0).unwrap();
        for c in curv {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(angle_max, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn curvature_circle_arc() {
        let line = arc_line(50.0, 90.0, 160);
        let (curv, _) = tail_curvature(&line, 10.0).unwrap();
        let interior = &curv[20..curv.len() - 20];
        for &c in interior {
            assert!((c - 0.02).abs() / 0.02 < 0.05, "curvature {c}");
        }
    }

    #[test]
    fn angle_max_full_window_equals_sweep() {
        let line = arc_line(50.0, 90.0, 160);
        let total = 50.0 * std::f64::consts::FRAC_PI_2;
        let (_, angle_max) = tail_curvature(&line, 2.0 * total).unwrap();
        assert!((angle_max - 90.0).abs() < 2.0, "angle_max {angle_max}");
    }

    #[test]
    fn head_midpiece_angle_cases() {
        assert_abs_diff_eq!(head_midpiece_angle(10.0, 10.0), 0.0);
        assert_abs_diff_eq!(head_midpiece_angle(0.0, 90.0), 90.0);
        assert_abs_diff_eq!(head_midpiece_angle(170.0, 10.0), 20.0);
    }

    #[test]
    fn part_areas_scaling_and_vacuole_count() {
        let mut mask = InstancePartMask::empty(20, 20);
        // 100 tail pixels
        for i in 0..100 {
            mask.part[i] = PartLabel::Tail;
            mask.instance[i] = 1;
        }
        // two vacuole blobs, 20 px total
        for i in 200..212 {
            mask.part[i] = PartLabel::Vacuole;
            mask.instance[i] = 1;
        }
        for i in 260..268 {
            mask.part[i] = PartLabel::Vacuole;
            mask.instance[i] = 1;
        }
        let scale = PixelScale::new(0.1).unwrap();
        let (acro, nuc, vcount, varea, _mp, tail) = part_areas(&mask, 1, scale).unwrap();
        assert_abs_diff_eq!(tail, 1.0, epsilon = 1e-12);
        assert_eq!(vcount, 2);
        assert_abs_diff_eq!(varea.unwrap(), 0.2, epsilon = 1e-12);
        assert_eq!(acro, 0.0);
        assert_eq!(nuc, 0.0);
    }

    #[test]
    fn vacuole_absent_is_count_zero_area_na() {
        let mut mask = InstancePartMask::empty(10, 10);
        mask.part[5] = PartLabel::Tail;
        mask.instance[5] = 1;
        let (_, _, vcount, varea, _, _) = part_areas(&mask, 1, PixelScale::default()).unwrap();
        assert_eq!(vcount, 0);
        assert!(varea.is_none());
    }

    #[test]
    fn ellipticity_ratio_convention() {
        // sanity on the ratio convention: ellipticity = length/width
        assert_abs_diff_eq!(4.67f64 / 2.69, 1.736, epsilon = 1e-3);
        assert_abs_diff_eq!(5.05f64 / 2.57, 1.965, epsilon = 1e-3);
    }
}
