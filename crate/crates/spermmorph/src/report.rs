//! Report emission: CSV rows in the standard parameter-table layout
//! (2-decimal half-up rounding, NA for absent values) and a JSON mirror
//! with explicit nulls.

use serde_json::json;

use crate::morphometry::MorphReport;

/// Round half-up to two decimals (values are non-negative in reports).
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5).floor() / 100.0
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.2}", round2(x)),
        None => "NA".to_string(),
    }
}

/// CSV header of the parameter columns (after the image column).
pub const CSV_COLUMNS: &str = "instance,head_length_um,head_width_um,head_ellipticity,\
acrosome_area_um2,nucleus_area_um2,vacuole_count,vacuole_area_um2,\
head_midpiece_angle_deg,midpiece_length_um,midpiece_width_um,midpiece_angle_max_deg,\
tail_length_um,tail_width_um,tail_angle_max_deg";

/// Full CSV header including provenance and quality columns.
pub fn csv_header() -> String {
    format!("image,{CSV_COLUMNS},flags")
}

/// The 15 parameter cells of one report row, starting with the instance ID.
pub fn table_row(r: &MorphReport) -> String {
    let head = r.head.as_ref();
    let mp = r.midpiece.as_ref();
    let tail = r.tail.as_ref();
    [
        r.instance.to_string(),
        cell(head.map(|h| h.length_um)),
        cell(head.map(|h| h.width_um)),
        cell(head.map(|h| h.ellipticity)),
        cell(r.acrosome_area_um2),
        cell(r.nucleus_area_um2),
        r.vacuole_count.to_string(),
        cell(r.vacuole_area_um2),
        cell(r.head_midpiece_angle_deg),
        cell(mp.map(|m| m.length_um)),
        cell(mp.map(|m| m.width_um)),
        cell(mp.map(|m| m.angle_max_deg)),
        cell(tail.map(|t| t.length_um)),
        cell(tail.map(|t| t.width_um)),
        cell(tail.map(|t| t.angle_max_deg)),
    ]
    .join(",")
}

/// One full CSV row: image, parameters, semicolon-joined quality flags.
pub fn csv_row(image: &str, r: &MorphReport) -> String {
    let flags = r
        .quality_flags
        .iter()
        .map(|f| f.name())
        .collect::<Vec<_>>()
        .join(";");
    format!("{image},{},{flags}", table_row(r))
}

fn jnum(v: Option<f64>) -> serde_json::Value {
    match v {
        Some(x) => json!(round2(x)),
        None => serde_json::Value::Null,
    }
}

/// JSON mirror of one CSV row, nulls where the CSV says NA.
pub fn json_report(image: &str, r: &MorphReport) -> serde_json::Value {
    let head = r.head.as_ref();
    let mp = r.midpiece.as_ref();
    let tail = r.tail.as_ref();
    json!({
        "image": image,
        "instance": r.instance,
        "head": {
            "length_um": jnum(head.map(|h| h.length_um)),
            "width_um": jnum(head.map(|h| h.width_um)),
            "ellipticity": jnum(head.map(|h| h.ellipticity)),
        },
        "acrosome_area_um2": jnum(r.acrosome_area_um2),
        "nucleus_area_um2": jnum(r.nucleus_area_um2),
        "vacuole": {
            "count": r.vacuole_count,
            "area_um2": jnum(r.vacuole_area_um2),
        },
        "head_midpiece_angle_deg": jnum(r.head_midpiece_angle_deg),
        "midpiece": {
            "length_um": jnum(mp.map(|m| m.length_um)),
            "width_um": jnum(mp.map(|m| m.width_um)),
            "angle_max_deg": jnum(mp.map(|m| m.angle_max_deg)),
        },
        "tail": {
            "length_um": jnum(tail.map(|t| t.length_um)),
            "width_um": jnum(tail.map(|t| t.width_um)),
            "angle_max_deg": jnum(tail.map(|t| t.angle_max_deg)),
        },
        "flags": r.quality_flags.iter().map(|f| f.name()).collect::<Vec<_>>(),
    })
}
