//! Full measurement pipeline on a synthetic sperm phantom: generates a
//! phantom with known parameters, measures it, and prints measured vs
//! ground-truth values side by side.
//!
//! Run with: cargo run --release --example measure_phantom [seed]

use spermmorph::morphometry::measure_sperm;
use spermmorph::synth::{random_sperm_spec, render_sperm_phantom};
use spermmorph::MeasurementConfig;

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let (w, h) = (768, 768);
    let spec = random_sperm_spec(seed, w, h);
    let (img, mask, truth) = render_sperm_phantom(&spec, w, h, seed).expect("render phantom");

    let cfg = MeasurementConfig::default(); // 1 µm/px so values are in pixels
    let report = measure_sperm(&img, &mask, 1, &cfg).expect("measure");

    let row = |name: &str, measured: Option<f64>, gt: f64| {
        match measured {
            Some(m) => println!(
                "{name:<22} {m:>10.2} {gt:>10.2} {:>8.2}%",
                100.0 * (m - gt).abs() / gt.max(1e-9)
            ),
            None => println!("{name:<22} {:>10} {gt:>10.2}", "absent"),
        }
    };

    println!("phantom seed {seed}");
    println!("{:<22} {:>10} {:>10} {:>8}", "parameter", "measured", "truth", "error");
    let head = report.head.expect("head fit");
    row("head length", Some(head.length_um), truth.head_length);
    row("head width", Some(head.width_um), truth.head_width);
    row("head ellipticity", Some(head.ellipticity), truth.ellipticity);
    let mp = report.midpiece.expect("midpiece fit");
    row("midpiece length", Some(mp.length_um), truth.midpiece_length);
    row("midpiece width", Some(mp.width_um), truth.midpiece_width);
    let tail = report.tail.expect("tail measurement");
    row("tail length", Some(tail.length_um), truth.tail.length);
    // ground-truth tail width: inflection-to-inflection = 2 sigma_line,
    // where the phantom uses sigma_line = width/4
    row("tail width", Some(tail.width_um), truth.tail.mean_width / 2.0);
    println!(
        "{:<22} {:>10} {:>10}",
        "vacuole count", report.vacuole_count, truth.vacuole_count
    );
    println!(
        "quality flags: {:?}",
        report.quality_flags.iter().map(|f| f.name()).collect::<Vec<_>>()
    );
}
