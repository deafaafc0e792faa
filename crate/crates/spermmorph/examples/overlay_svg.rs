//! SVG overlay rendering: runs the centerline pipeline on a phantom and
//! writes an SVG with the image, the measured centerline (detected points
//! in green, reconstructed extensions in orange), normal ticks, and
//! endpoint markers.
//!
//! Run with: cargo run --release --example overlay_svg [out.svg]

use spermmorph::derivatives::{derivative_fields, GaussianSpec};
use spermmorph::morphometry::measure_centerline_part;
use spermmorph::overlay::render_overlay;
use spermmorph::raster::{instance_part_mask, PartLabel};
use spermmorph::synth::{random_sperm_spec, render_sperm_phantom};
use spermmorph::MeasurementConfig;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "overlay.svg".into());
    let (w, h) = (768, 768);
    let seed = 42;
    let spec = random_sperm_spec(seed, w, h);
    let (img, mask, _) = render_sperm_phantom(&spec, w, h, seed).expect("render phantom");

    let cfg = MeasurementConfig::default();
    let fields = derivative_fields(&img, cfg.gaussian).expect("derivative fields");
    let edge_fields =
        derivative_fields(&img, GaussianSpec::new(cfg.edge_sigma).unwrap()).expect("edge fields");

    let mut lines = Vec::new();
    for id in mask.instances() {
        let tail = instance_part_mask(&mask, id, PartLabel::Tail).expect("tail mask");
        if let Some(m) = measure_centerline_part(&fields, &edge_fields, &tail, &cfg).expect("measure") {
            let mut line = m.line;
            line.instance = id;
            println!(
                "instance {id}: {} centerline points, tail length {:.2} px",
                line.len(),
                m.length_um
            );
            lines.push(line);
        }
    }

    let svg = render_overlay(&img, &lines).expect("render SVG");
    std::fs::write(&out, svg).expect("write SVG");
    println!("wrote {out}");
}
