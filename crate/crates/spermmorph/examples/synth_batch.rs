//! Seeded phantom batch generation: renders randomized whole-sperm
//! phantoms with analytic ground truth and writes image + masks + truth
//! JSON per phantom, mirroring the `synth` CLI subcommand.
//!
//! Run with: cargo run --release --example synth_batch [out_dir] [count]

use spermmorph::raster::{save_image, save_mask};
use spermmorph::synth::{random_sperm_spec, render_sperm_phantom};

fn main() {
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "phantoms".into()));
    let count: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    std::fs::create_dir_all(&out).expect("create output directory");

    let (w, h) = (768, 768);
    for seed in 0..count {
        let spec = random_sperm_spec(seed, w, h);
        let (img, mask, truth) = render_sperm_phantom(&spec, w, h, seed).expect("render phantom");
        let stem = format!("phantom_{seed:03}");
        save_image(&img, out.join(format!("{stem}.png"))).expect("write image");
        save_mask(
            &mask,
            out.join(format!("{stem}_parts.png")),
            out.join(format!("{stem}_instances.png")),
        )
        .expect("write masks");
        std::fs::write(
            out.join(format!("{stem}_truth.json")),
            serde_json::to_string_pretty(&truth).unwrap(),
        )
        .expect("write truth");
        println!(
            "{stem}: tail {:.1} px (curvature {:.5} rad/px), head {:.1}x{:.1} px, {} vacuole(s)",
            truth.tail.length,
            truth.tail.curvature,
            truth.head_length,
            truth.head_width,
            truth.vacuole_count
        );
    }
    println!("wrote {count} phantom(s) to {}", out.display());
}
