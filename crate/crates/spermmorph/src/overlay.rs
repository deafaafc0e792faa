//! SVG overlay rendering: the input image (embedded as base64 PNG) with
//! centerlines, normal ticks, and endpoint markers drawn on top.
//! Detected and reconstructed points use distinct styles.

use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;

use crate::error::{MorphError, Result};
use crate::raster::ScalarImage;
use crate::steger::{Centerline, PointSource};

const DETECTED_COLOR: &str = "#00c853";
const RECONSTRUCTED_COLOR: &str = "#ff6d00";
const NORMAL_COLOR: &str = "#2962ff";

fn png_base64(img: &ScalarImage) -> Result<String> {
    let mut buf: Vec<u8> = Vec::new();
    let gray = image::GrayImage::from_fn(img.width, img.height, |x, y| {
        image::Luma([(img.get(x, y).clamp(0.0, 1.0) * 255.0).round() as u8])
    });
    image::DynamicImage::ImageLuma8(gray)
        .write_to(
            &mut std::io::Cursor::new(&mut buf),
            image::ImageFormat::Png,
        )
        .map_err(|e| MorphError::Other(format!("PNG encode failed: {e}")))?;
    Ok(BASE64.encode(&buf))
}

/// How often to draw a normal tick, in points.
const NORMAL_STRIDE: usize = 5;
/// Normal tick half-length in pixels.
const NORMAL_HALF: f64 = 3.0;

/// Render centerlines over the image as a standalone SVG document.
pub fn render_overlay(img: &ScalarImage, lines: &[Centerline]) -> Result<String> {
    let (w, h) = (img.width, img.height);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"  <image href="data:image/png;base64,{}" width="{w}" height="{h}"/>"#,
        png_base64(img)?
    )
    .unwrap();

    for line in lines {
        // normals as ticks, sparse
        for (i, p) in line.points.iter().enumerate() {
            if i % NORMAL_STRIDE != 0 {
                continue;
            }
            let (x, y) = p.position;
            let (nx, ny) = p.normal;
            writeln!(
                svg,
                r#"  <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{NORMAL_COLOR}" stroke-width="0.4" opacity="0.7"/>"#,
                x - nx * NORMAL_HALF,
                y - ny * NORMAL_HALF,
                x + nx * NORMAL_HALF,
                y + ny * NORMAL_HALF,
            )
            .unwrap();
        }
        // centerline as polylines, one per run of same-provenance segments
        // (a segment is reconstructed-colored if either endpoint is)
        let seg_color = |a: &PointSource, b: &PointSource| {
            if *a == PointSource::Reconstructed || *b == PointSource::Reconstructed {
                RECONSTRUCTED_COLOR
            } else {
                DETECTED_COLOR
            }
        };
        let mut i = 0;
        while i + 1 < line.points.len() {
            let color = seg_color(&line.points[i].source, &line.points[i + 1].source);
            let mut j = i + 1;
            while j + 1 < line.points.len()
                && seg_color(&line.points[j].source, &line.points[j + 1].source) == color
            {
                j += 1;
            }
            let mut pts = String::new();
            for p in &line.points[i..=j] {
                write!(pts, "{:.2},{:.2} ", p.position.0, p.position.1).unwrap();
            }
            writeln!(
                svg,
                r#"  <polyline points="{}" fill="none" stroke="{color}" stroke-width="0.8"/>"#,
                pts.trim_end()
            )
            .unwrap();
            i = j;
        }
        // point markers: detected = dot, reconstructed = open circle
        for p in &line.points {
            let (x, y) = p.position;
            match p.source {
                PointSource::Detected => writeln!(
                    svg,
                    r#"  <circle cx="{x:.2}" cy="{y:.2}" r="0.5" fill="{DETECTED_COLOR}"/>"#
                )
                .unwrap(),
                PointSource::Reconstructed => writeln!(
                    svg,
                    r#"  <circle cx="{x:.2}" cy="{y:.2}" r="0.9" fill="none" stroke="{RECONSTRUCTED_COLOR}" stroke-width="0.4"/>"#
                )
                .unwrap(),
            }
        }
        // endpoint markers
        if let (Some(a), Some(b)) = (line.points.first(), line.points.last()) {
            for p in [a, b] {
                writeln!(
                    svg,
                    r##"  <circle cx="{:.2}" cy="{:.2}" r="1.6" fill="none" stroke="#d500f9" stroke-width="0.5"/>"##,
                    p.position.0, p.position.1
                )
                .unwrap();
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
