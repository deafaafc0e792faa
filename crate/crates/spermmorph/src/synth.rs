//! Synthetic phantom generator: curvilinear structures and whole-sperm
//! phantoms with analytic ground truth, used as the measurement oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::raster::{BinaryMask, InstancePartMask, PartLabel, ScalarImage};

/// Dense sample spacing along curves, in pixels.
const SAMPLE_SPACING: f64 = 0.1;

/// Centerline geometry of a synthetic curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveKind {
    Straight {
        from: (f64, f64),
        to: (f64, f64),
    },
    Arc {
        center: (f64, f64),
        radius: f64,
        start_deg: f64,
        sweep_deg: f64,
    },
    /// Catmull-Rom spline through the control points.
    Spline { control: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WidthProfile {
    Constant(f64),
    /// Linear taper from the first endpoint to the second.
    Taper { start: f64, end: f64 },
}

impl WidthProfile {
    /// Width at normalized arc-length position t in [0, 1].
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            WidthProfile::Constant(w) => w,
            WidthProfile::Taper { start, end } => start + (end - start) * t,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WidthProfile::Constant(w) => w,
            WidthProfile::Taper { start, end } => 0.5 * (start + end),
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            WidthProfile::Constant(w) => w,
            WidthProfile::Taper { start, end } => start.max(end),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntensityProfile {
    /// amplitude * exp(-d^2 / (2 sigma_line^2))
    Gaussian { sigma_line: f64, amplitude: f64 },
    /// Logistic plateau: amplitude / (1 + exp((d - width/2) / softness))
    SmoothedStep { softness: f64, amplitude: f64 },
}

/// Bright bar crossing a curve endpoint, rendered into the image but not
/// the mask; exercises the endpoint outlier filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    /// Decorate the first endpoint (true) or the last (false).
    pub at_start: bool,
    /// Bar orientation in degrees.
    pub angle_deg: f64,
    /// Total bar length, centered on the endpoint.
    pub length: f64,
    pub sigma_line: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub kind: CurveKind,
    pub width: WidthProfile,
    pub intensity: IntensityProfile,
    pub junction: Option<JunctionSpec>,
}

/// Analytic truth of one rendered curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub length: f64,
    pub mean_width: f64,
    /// Constant curvature in rad/px (mean |curvature| for splines).
    pub curvature: f64,
    pub endpoints: [(f64, f64); 2],
    pub centerline: Vec<(f64, f64)>,
}

/// Dense equidistant samples with unit tangents, plus exact length.
fn sample_kind(kind: &CurveKind) -> Result<(Vec<((f64, f64), (f64, f64))>, f64, f64)> {
    match kind {
        CurveKind::Straight { from, to } => {
            let (dx, dy) = (to.0 - from.0, to.1 - from.1);
            let len = (dx * dx + dy * dy).sqrt();
            if !len.is_finite() || len < SAMPLE_SPACING {
                return Err(MorphError::DegenerateFit("degenerate straight curve".into()));
            }
            let t = (dx / len, dy / len);
            let n = (len / SAMPLE_SPACING).ceil() as usize;
            let pts = (0..=n)
                .map(|i| {
                    let s = len * i as f64 / n as f64;
                    ((from.0 + t.0 * s, from.1 + t.1 * s), t)
                })
                .collect();
            Ok((pts, len, 0.0))
        }
        CurveKind::Arc {
            center,
            radius,
            start_deg,
            sweep_deg,
        } => {
            let len = radius * sweep_deg.to_radians().abs();
            if !(radius.is_finite() && *radius > 0.0) || len < SAMPLE_SPACING {
                return Err(MorphError::DegenerateFit("degenerate arc".into()));
            }
            let n = (len / SAMPLE_SPACING).ceil() as usize;
            let sgn = sweep_deg.signum();
            let pts = (0..=n)
                .map(|i| {
                    let a = (start_deg + sweep_deg * i as f64 / n as f64).to_radians();
                    let p = (center.0 + radius * a.cos(), center.1 + radius * a.sin());
                    let t = (-a.sin() * sgn, a.cos() * sgn);
                    (p, t)
                })
                .collect();
            Ok((pts, len, 1.0 / radius))
        }
        CurveKind::Spline { control } => {
            if control.len() < 2 {
                return Err(MorphError::DegenerateFit("spline needs >= 2 points".into()));
            }
            // Catmull-Rom with clamped ends, oversampled then resampled
            let mut fine: Vec<(f64, f64)> = Vec::new();
            let n = control.len();
            let get = |i: i64| control[i.clamp(0, n as i64 - 1) as usize];
            for seg in 0..n - 1 {
                let (p0, p1, p2, p3) = (
                    get(seg as i64 - 1),
                    get(seg as i64),
                    get(seg as i64 + 1),
                    get(seg as i64 + 2),
                );
                let steps = 200;
                for k in 0..steps {
                    let t = k as f64 / steps as f64;
                    let (t2, t3) = (t * t, t * t * t);
                    let h = |a: f64, b: f64, c: f64, d: f64| {
                        0.5 * ((2.0 * b)
                            + (-a + c) * t
                            + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2
                            + (-a + 3.0 * b - 3.0 * c + d) * t3)
                    };
                    fine.push((h(p0.0, p1.0, p2.0, p3.0), h(p0.1, p1.1, p2.1, p3.1)));
                }
            }
            fine.push(control[n - 1]);
            // resample equidistantly
            let mut arclen = vec![0.0];
            for w in fine.windows(2) {
                let d = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
                arclen.push(arclen.last().unwrap() + d);
            }
            let total = *arclen.last().unwrap();
            if total < SAMPLE_SPACING {
                return Err(MorphError::DegenerateFit("degenerate spline".into()));
            }
            let m = (total / SAMPLE_SPACING).ceil() as usize;
            let mut pts: Vec<((f64, f64), (f64, f64))> = Vec::with_capacity(m + 1);
            let mut j = 0;
            for i in 0..=m {
                let s = total * i as f64 / m as f64;
                while j + 1 < arclen.len() - 1 && arclen[j + 1] < s {
                    j += 1;
                }
                let seg = (arclen[j + 1] - arclen[j]).max(1e-12);
                let u = (s - arclen[j]) / seg;
                let p = (
                    fine[j].0 + (fine[j + 1].0 - fine[j].0) * u,
                    fine[j].1 + (fine[j + 1].1 - fine[j].1) * u,
                );
                let t = (
                    (fine[j + 1].0 - fine[j].0) / seg,
                    (fine[j + 1].1 - fine[j].1) / seg,
                );
                let tn = (t.0 * t.0 + t.1 * t.1).sqrt().max(1e-12);
                pts.push((p, (t.0 / tn, t.1 / tn)));
            }
            // mean absolute curvature from tangent turning
            let mut turn = 0.0;
            for w in pts.windows(2) {
                let (t1, t2) = (w[0].1, w[1].1);
                let dot = (t1.0 * t2.0 + t1.1 * t2.1).clamp(-1.0, 1.0);
                turn += dot.acos();
            }
            Ok((pts, total, turn / total))
        }
    }
}

fn profile_value(profile: IntensityProfile, width: f64, d: f64) -> f64 {
    match profile {
        IntensityProfile::Gaussian {
            sigma_line,
            amplitude,
        } => amplitude * (-d * d / (2.0 * sigma_line * sigma_line)).exp(),
        IntensityProfile::SmoothedStep {
            softness,
            amplitude,
        } => amplitude / (1.0 + ((d - width / 2.0) / softness).exp()),
    }
}

fn profile_radius(profile: IntensityProfile, width: f64) -> f64 {
    match profile {
        IntensityProfile::Gaussian { sigma_line, .. } => 3.5 * sigma_line,
        IntensityProfile::SmoothedStep { softness, .. } => width / 2.0 + 6.0 * softness,
    }
}

/// Max-splat a profiled ridge along the samples into `img`.
fn splat_ridge(
    img: &mut ScalarImage,
    samples: &[((f64, f64), (f64, f64))],
    widths: &[f64],
    profile: IntensityProfile,
) {
    for (i, &((sx, sy), _)) in samples.iter().enumerate() {
        let w = widths[i];
        let r = profile_radius(profile, w);
        let (x0, x1) = (
            ((sx - r).floor() as i64).max(0),
            ((sx + r).ceil() as i64).min(img.width as i64 - 1),
        );
        let (y0, y1) = (
            ((sy - r).floor() as i64).max(0),
            ((sy + r).ceil() as i64).min(img.height as i64 - 1),
        );
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 - sx).powi(2) + (y as f64 - sy).powi(2)).sqrt();
                let v = profile_value(profile, w, d);
                let cur = img.get(x as u32, y as u32);
                if v > cur {
                    img.set(x as u32, y as u32, v);
                }
            }
        }
    }
}

/// Mask of pixels within half the local width of the curve, cut
/// perpendicular to the tangent at both endpoints (no round caps).
fn splat_mask(
    width: u32,
    height: u32,
    samples: &[((f64, f64), (f64, f64))],
    widths: &[f64],
) -> BinaryMask {
    let mut mask = BinaryMask::empty(width, height);
    for (i, &((sx, sy), _)) in samples.iter().enumerate() {
        let r = widths[i] / 2.0;
        let (x0, x1) = (
            ((sx - r).floor() as i64).max(0),
            ((sx + r).ceil() as i64).min(width as i64 - 1),
        );
        let (y0, y1) = (
            ((sy - r).floor() as i64).max(0),
            ((sy + r).ceil() as i64).min(height as i64 - 1),
        );
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d2 = (x as f64 - sx).powi(2) + (y as f64 - sy).powi(2);
                if d2 <= r * r {
                    mask.set(x as u32, y as u32, true);
                }
            }
        }
    }
    // perpendicular end cuts; keep up to half a pixel past the endpoint so
    // the endpoint's own pixel stays inside the mask
    let w_max = widths.iter().cloned().fold(0.0, f64::max);
    let ends = [
        (samples[0].0, (-samples[0].1 .0, -samples[0].1 .1)),
        (
            samples[samples.len() - 1].0,
            samples[samples.len() - 1].1,
        ),
    ];
    for ((ex, ey), (tx, ty)) in ends {
        let r = w_max / 2.0 + 2.0;
        let (x0, x1) = (
            ((ex - r).floor() as i64).max(0),
            ((ex + r).ceil() as i64).min(width as i64 - 1),
        );
        let (y0, y1) = (
            ((ey - r).floor() as i64).max(0),
            ((ey + r).ceil() as i64).min(height as i64 - 1),
        );
        for y in y0..=y1 {
            for x in x0..=x1 {
                let proj = (x as f64 - ex) * tx + (y as f64 - ey) * ty;
                if proj > 0.5 {
                    mask.set(x as u32, y as u32, false);
                }
            }
        }
    }
    mask
}

fn add_noise(img: &mut ScalarImage, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma <= 0.0 {
        for v in &mut img.values {
            *v = v.clamp(0.0, 1.0);
        }
        return;
    }
    let mut spare: Option<f64> = None;
    for v in &mut img.values {
        let z = match spare.take() {
            Some(z) => z,
            None => {
                // Box-Muller
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen::<f64>();
                let r = (-2.0 * u1.ln()).sqrt();
                let a = 2.0 * std::f64::consts::PI * u2;
                spare = Some(r * a.sin());
                r * a.cos()
            }
        };
        *v = (*v + sigma * z).clamp(0.0, 1.0);
    }
}

fn check_in_canvas(
    samples: &[((f64, f64), (f64, f64))],
    widths: &[f64],
    width: u32,
    height: u32,
    margin: f64,
) -> Result<()> {
    for (i, &((x, y), _)) in samples.iter().enumerate() {
        let m = margin + widths[i] / 2.0;
        if x < m || y < m || x > width as f64 - 1.0 - m || y > height as f64 - 1.0 - m {
            return Err(MorphError::CurveExitsCanvas { x, y });
        }
    }
    Ok(())
}

/// Render one curve into a fresh canvas.
pub fn render_curve(
    spec: &CurveSpec,
    width: u32,
    height: u32,
    noise_sigma: f64,
    seed: u64,
) -> Result<(ScalarImage, BinaryMask, GroundTruth)> {
    let (samples, length, curvature) = sample_kind(&spec.kind)?;
    let n = samples.len();
    let widths: Vec<f64> = (0..n)
        .map(|i| spec.width.at(i as f64 / (n - 1) as f64))
        .collect();
    if widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(MorphError::DegenerateFit("non-positive curve width".into()));
    }
    check_in_canvas(&samples, &widths, width, height, 8.0)?;

    let mut img = ScalarImage::zeros(width, height);
    splat_ridge(&mut img, &samples, &widths, spec.intensity);

    if let Some(j) = spec.junction {
        let e = if j.at_start {
            samples[0].0
        } else {
            samples[n - 1].0
        };
        let u = (j.angle_deg.to_radians().cos(), j.angle_deg.to_radians().sin());
        let steps = (j.length / SAMPLE_SPACING).ceil() as usize;
        let bar: Vec<((f64, f64), (f64, f64))> = (0..=steps)
            .map(|i| {
                let s = j.length * (i as f64 / steps as f64 - 0.5);
                ((e.0 + u.0 * s, e.1 + u.1 * s), u)
            })
            .collect();
        let bar_widths = vec![2.0 * j.sigma_line; bar.len()];
        splat_ridge(
            &mut img,
            &bar,
            &bar_widths,
            IntensityProfile::Gaussian {
                sigma_line: j.sigma_line,
                amplitude: j.amplitude,
            },
        );
    }

    let mask = splat_mask(width, height, &samples, &widths);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise(&mut img, noise_sigma, &mut rng);

    let truth = GroundTruth {
        length,
        mean_width: spec.width.mean(),
        curvature,
        endpoints: [samples[0].0, samples[n - 1].0],
        centerline: samples.iter().map(|&(p, _)| p).collect(),
    };
    Ok((img, mask, truth))
}

/// Head ellipse of a sperm phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub center: (f64, f64),
    /// Semi-major axis, px.
    pub a: f64,
    /// Semi-minor axis, px.
    pub b: f64,
    pub angle_deg: f64,
    /// Fraction of the head (along +major axis) labeled acrosome.
    pub acrosome_fraction: f64,
    /// Vacuole discs: (center, radius), inside the head.
    pub vacuoles: Vec<((f64, f64), f64)>,
    pub intensity: f64,
}

/// Midpiece rectangle of a sperm phantom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidpieceSpec {
    pub center: (f64, f64),
    pub length: f64,
    pub width: f64,
    pub angle_deg: f64,
    pub intensity: f64,
}

/// Complete sperm phantom specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpermSpec {
    pub head: HeadSpec,
    pub midpiece: MidpieceSpec,
    pub tail: CurveSpec,
    pub instance: u16,
    pub noise_sigma: f64,
}

/// Analytic truth of a whole sperm phantom (pixel units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpermTruth {
    pub head_length: f64,
    pub head_width: f64,
    pub ellipticity: f64,
    pub head_angle_deg: f64,
    pub vacuole_count: u32,
    pub midpiece_length: f64,
    pub midpiece_width: f64,
    pub midpiece_angle_deg: f64,
    pub tail: GroundTruth,
}

fn rotate(p: (f64, f64), deg: f64) -> (f64, f64) {
    let (s, c) = deg.to_radians().sin_cos();
    (p.0 * c - p.1 * s, p.0 * s + p.1 * c)
}

/// Render one sperm phantom into an existing canvas (so several phantoms
/// can share an image). Labels `mask` with the spec's instance ID.
pub fn render_sperm_into(
    spec: &SpermSpec,
    img: &mut ScalarImage,
    mask: &mut InstancePartMask,
) -> Result<SpermTruth> {
    let (w, h) = (img.width, img.height);
    let head = &spec.head;
    if !(head.a > 0.0 && head.b > 0.0 && head.a >= head.b) {
        return Err(MorphError::DegenerateFit("head needs a >= b > 0".into()));
    }

    // junction contact zones where overlap between parts is by design
    let (tail_samples, _, _) = sample_kind(&spec.tail.kind)?;
    let tail_start = tail_samples[0].0;
    let mp = &spec.midpiece;
    let mp_axis = (mp.angle_deg.to_radians().cos(), mp.angle_deg.to_radians().sin());
    let mp_end_a = (
        mp.center.0 - mp_axis.0 * mp.length / 2.0,
        mp.center.1 - mp_axis.1 * mp.length / 2.0,
    );
    let mp_end_b = (
        mp.center.0 + mp_axis.0 * mp.length / 2.0,
        mp.center.1 + mp_axis.1 * mp.length / 2.0,
    );
    let junctions = [tail_start, mp_end_a, mp_end_b];
    let near_junction = |x: f64, y: f64| {
        junctions
            .iter()
            .any(|j| (x - j.0).powi(2) + (y - j.1).powi(2) <= 8.0 * 8.0)
    };

    let label = |x: u32, y: u32, part: PartLabel, mask: &mut InstancePartMask| -> Result<()> {
        let i = y as usize * w as usize + x as usize;
        let existing = mask.part[i];
        if existing != PartLabel::Background
            && (mask.instance[i] != spec.instance || existing != part)
            && !near_junction(x as f64, y as f64)
        {
            return Err(MorphError::PartCollision {
                x,
                y,
                a: existing.name(),
                b: part.name(),
            });
        }
        if existing == PartLabel::Background {
            mask.part[i] = part;
            mask.instance[i] = spec.instance;
        }
        Ok(())
    };

    // --- head: ellipse interior split into acrosome / nucleus + vacuoles ---
    let bound = head.a + 2.0;
    let (x0, x1) = (
        ((head.center.0 - bound).floor() as i64).max(0),
        ((head.center.0 + bound).ceil() as i64).min(w as i64 - 1),
    );
    let (y0, y1) = (
        ((head.center.1 - bound).floor() as i64).max(0),
        ((head.center.1 + bound).ceil() as i64).min(h as i64 - 1),
    );
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = (x as f64 - head.center.0, y as f64 - head.center.1);
            let local = rotate(d, -head.angle_deg);
            let q = (local.0 / head.a).powi(2) + (local.1 / head.b).powi(2);
            if q > 1.0 {
                continue;
            }
            let mut part = if local.0 > head.a * (1.0 - 2.0 * head.acrosome_fraction) {
                PartLabel::Acrosome
            } else {
                PartLabel::Nucleus
            };
            for &((vx, vy), vr) in &head.vacuoles {
                if (x as f64 - vx).powi(2) + (y as f64 - vy).powi(2) <= vr * vr {
                    part = PartLabel::Vacuole;
                }
            }
            label(x as u32, y as u32, part, mask)?;
            // smooth-edged fill so the head does not add spurious ridges
            let edge = 1.0 - q.sqrt();
            let v = head.intensity * (edge * head.b).clamp(0.0, 1.0);
            if v > img.get(x as u32, y as u32) {
                img.set(x as u32, y as u32, v);
            }
        }
    }

    // --- midpiece: ridge-profiled bar so a centerline is measurable ---
    let mp_curve = CurveKind::Straight {
        from: mp_end_a,
        to: mp_end_b,
    };
    let (mp_samples, _, _) = sample_kind(&mp_curve)?;
    let mp_widths = vec![mp.width; mp_samples.len()];
    check_in_canvas(&mp_samples, &mp_widths, w, h, 8.0)?;
    splat_ridge(
        img,
        &mp_samples,
        &mp_widths,
        IntensityProfile::SmoothedStep {
            softness: 0.5,
            amplitude: mp.intensity,
        },
    );
    let mp_mask = splat_mask(w, h, &mp_samples, &mp_widths);
    for y in 0..h {
        for x in 0..w {
            if mp_mask.get(x, y) {
                label(x, y, PartLabel::Midpiece, mask)?;
            }
        }
    }

    // --- tail ---
    let n = tail_samples.len();
    let tail_widths: Vec<f64> = (0..n)
        .map(|i| spec.tail.width.at(i as f64 / (n - 1) as f64))
        .collect();
    check_in_canvas(&tail_samples, &tail_widths, w, h, 8.0)?;
    splat_ridge(img, &tail_samples, &tail_widths, spec.tail.intensity);
    if let Some(j) = spec.tail.junction {
        let e = if j.at_start {
            tail_samples[0].0
        } else {
            tail_samples[n - 1].0
        };
        let u = (j.angle_deg.to_radians().cos(), j.angle_deg.to_radians().sin());
        let steps = (j.length / SAMPLE_SPACING).ceil() as usize;
        let bar: Vec<((f64, f64), (f64, f64))> = (0..=steps)
            .map(|i| {
                let s = j.length * (i as f64 / steps as f64 - 0.5);
                ((e.0 + u.0 * s, e.1 + u.1 * s), u)
            })
            .collect();
        splat_ridge(
            img,
            &bar,
            &vec![2.0 * j.sigma_line; bar.len()],
            IntensityProfile::Gaussian {
                sigma_line: j.sigma_line,
                amplitude: j.amplitude,
            },
        );
    }
    let tail_mask = splat_mask(w, h, &tail_samples, &tail_widths);
    for y in 0..h {
        for x in 0..w {
            if tail_mask.get(x, y) {
                label(x, y, PartLabel::Tail, mask)?;
            }
        }
    }

    let (_, tail_len, tail_curv) = sample_kind(&spec.tail.kind)?;
    Ok(SpermTruth {
        head_length: 2.0 * head.a,
        head_width: 2.0 * head.b,
        ellipticity: head.a / head.b,
        head_angle_deg: head.angle_deg.rem_euclid(180.0),
        vacuole_count: head.vacuoles.len() as u32,
        midpiece_length: mp.length,
        midpiece_width: mp.width,
        midpiece_angle_deg: mp.angle_deg.rem_euclid(180.0),
        tail: GroundTruth {
            length: tail_len,
            mean_width: spec.tail.width.mean(),
            curvature: tail_curv,
            endpoints: [tail_samples[0].0, tail_samples[n - 1].0],
            centerline: tail_samples.iter().map(|&(p, _)| p).collect(),
        },
    })
}

/// Render a whole-sperm phantom on a fresh canvas.
pub fn render_sperm_phantom(
    spec: &SpermSpec,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<(ScalarImage, InstancePartMask, SpermTruth)> {
    let mut img = ScalarImage::zeros(width, height);
    let mut mask = InstancePartMask::empty(width, height);
    let truth = render_sperm_into(spec, &mut img, &mut mask)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise(&mut img, spec.noise_sigma, &mut rng);
    Ok((img, mask, truth))
}

/// Randomized but seeded sperm phantom that fits the given canvas:
/// arc tail tangent-continuous with the midpiece, head on the far end.
pub fn random_sperm_spec(seed: u64, width: u32, height: u32) -> SpermSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 30.0;
    'retry: loop {
        let radius = rng.gen_range(150.0..600.0);
        let tail_len = rng.gen_range(200.0..400.0_f64).min(radius * 2.4);
        let sweep_deg = (tail_len / radius).to_degrees() * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let start_deg = rng.gen_range(0.0..360.0_f64);
        let tail_width = rng.gen_range(3.0..7.0);

        // tail start point and tangent pointing away from the tail
        let a0 = start_deg.to_radians();
        let sgn = sweep_deg.signum();
        let p0 = (radius * a0.cos(), radius * a0.sin());
        let t_in = (-a0.sin() * sgn, a0.cos() * sgn); // along tail
        let t_out = (-t_in.0, -t_in.1);

        let mp_len = rng.gen_range(25.0..40.0);
        let mp_width = rng.gen_range(4.0..8.0);
        let mp_center = (
            p0.0 + t_out.0 * (mp_len / 2.0 + 1.0),
            p0.1 + t_out.1 * (mp_len / 2.0 + 1.0),
        );
        let head_a = rng.gen_range(20.0..30.0);
        let head_b = rng.gen_range(10.0..16.0);
        let head_center = (
            p0.0 + t_out.0 * (mp_len + 2.0 + head_a * 0.9),
            p0.1 + t_out.1 * (mp_len + 2.0 + head_a * 0.9),
        );
        let angle_deg = t_out.1.atan2(t_out.0).to_degrees();

        // bounding box of everything, in arc-centered coordinates
        let mut xs = vec![head_center.0 - head_a, head_center.0 + head_a];
        let mut ys = vec![head_center.1 - head_a, head_center.1 + head_a];
        let steps = 64;
        for i in 0..=steps {
            let a = (start_deg + sweep_deg * i as f64 / steps as f64).to_radians();
            xs.push(radius * a.cos());
            ys.push(radius * a.sin());
        }
        let (min_x, max_x) = (
            xs.iter().cloned().fold(f64::INFINITY, f64::min) - margin,
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + margin,
        );
        let (min_y, max_y) = (
            ys.iter().cloned().fold(f64::INFINITY, f64::min) - margin,
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + margin,
        );
        if max_x - min_x > width as f64 || max_y - min_y > height as f64 {
            continue 'retry;
        }
        let shift = (-min_x, -min_y);

        let n_vac = rng.gen_range(0..3u32);
        let hc = (head_center.0 + shift.0, head_center.1 + shift.1);
        // vacuole discs strictly inside the head and pairwise disjoint, so
        // the disc count is the ground-truth component count
        let mut vacuoles: Vec<((f64, f64), f64)> = Vec::new();
        let mut attempts = 0;
        while vacuoles.len() < n_vac as usize && attempts < 200 {
            attempts += 1;
            let r = rng.gen_range(1.5..3.0);
            let u = rng.gen_range(-0.4..0.1_f64);
            let v = rng.gen_range(-0.3..0.3_f64);
            let inside = (u.abs() + (r + 1.0) / head_a).powi(2)
                + (v.abs() + (r + 1.0) / head_b).powi(2)
                <= 1.0;
            let off = rotate((u * head_a, v * head_b), angle_deg);
            let c = (hc.0 + off.0, hc.1 + off.1);
            let disjoint = vacuoles.iter().all(|&((ox, oy), orad)| {
                ((c.0 - ox).powi(2) + (c.1 - oy).powi(2)).sqrt() > r + orad + 2.5
            });
            if inside && disjoint {
                vacuoles.push((c, r));
            }
        }

        return SpermSpec {
            head: HeadSpec {
                center: hc,
                a: head_a,
                b: head_b,
                angle_deg,
                acrosome_fraction: rng.gen_range(0.3..0.5),
                vacuoles,
                intensity: 0.55,
            },
            midpiece: MidpieceSpec {
                center: (mp_center.0 + shift.0, mp_center.1 + shift.1),
                length: mp_len,
                width: mp_width,
                angle_deg,
                intensity: 0.75,
            },
            tail: CurveSpec {
                kind: CurveKind::Arc {
                    center: shift,
                    radius,
                    start_deg,
                    sweep_deg,
                },
                width: WidthProfile::Constant(tail_width),
                intensity: IntensityProfile::Gaussian {
                    sigma_line: tail_width / 4.0,
                    amplitude: 0.9,
                },
                junction: None,
            },
            instance: 1,
            noise_sigma: 0.02,
        };
    }
}
