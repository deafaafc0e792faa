//! Command-line driver: `measure`, `centerline`, `eval-parsing`, `synth`,
//! and `overlay` subcommands over PNG images and instance/part masks.
//!
//! Mask naming convention: an image `NAME.png` pairs with `NAME_parts.png`
//! (8-bit part codes) and `NAME_instances.png` (16-bit instance IDs).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::MeasurementConfig;
use crate::derivatives::{derivative_fields, DerivativeFields, GaussianSpec};
use crate::endpoint::{filter_endpoints, reconstruct_endpoint, extend_line, LineEnd, WalkTrace};
use crate::error::{MorphError, Result};
use crate::metrics::{metric_report, Confidences, MetricReport};
use crate::morphometry::{measure_centerline_part, measure_sperm, MorphReport};
use crate::overlay::render_overlay;
use crate::raster::{
    instance_part_mask, load_image, load_mask, save_image, save_mask, InstancePartMask,
    PartLabel, ScalarImage,
};
use crate::report::{csv_header, csv_row, json_report};
use crate::steger::{detect_candidates, link_centerlines, Centerline, PointSource};
use crate::synth::{random_sperm_spec, render_sperm_phantom, SpermSpec};

#[derive(Parser)]
#[command(
    name = "spermmorph",
    version,
    about = "Quantitative sperm morphometry from micrographs and part segmentation masks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure morphology parameters for every instance in a batch.
    Measure(MeasureArgs),
    /// Extract centerlines and emit per-point records as CSV.
    Centerline(CenterlineArgs),
    /// Score predicted masks against ground truth (mIoU, AP^p, PCP).
    EvalParsing(EvalArgs),
    /// Generate synthetic phantoms with ground truth.
    Synth(SynthArgs),
    /// Render an SVG overlay of centerlines over an image.
    Overlay(OverlayArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat key=value config file (dotted keys, e.g. steger.sigma=1.8).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Physical pixel pitch override.
    #[arg(long)]
    scale_um_per_px: Option<f64>,
    /// Skip endpoint filtering and reconstruction (comparison baseline).
    #[arg(long)]
    steger_baseline: bool,
    /// Treat lines as dark on a bright background.
    #[arg(long)]
    dark_lines: bool,
}

impl ConfigArgs {
    fn build(&self) -> Result<MeasurementConfig> {
        let mut cfg = MeasurementConfig::default();
        if let Some(path) = &self.config {
            cfg.merge_file(path)?;
        }
        if let Some(scale) = self.scale_um_per_px {
            cfg.set_key("scale.um_per_px", &scale.to_string())
                .map_err(|msg| MorphError::ConfigParse { line: 0, msg })?;
        }
        cfg.steger_baseline |= self.steger_baseline;
        cfg.dark_lines |= self.dark_lines;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct MeasureArgs {
    /// Images or directories; directories are scanned for `*_parts.png`.
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for measurements.csv / measurements.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write one centerline overlay SVG per image.
    #[arg(long)]
    overlay: bool,
}

#[derive(Args)]
struct CenterlineArgs {
    /// Input grayscale PNG.
    #[arg(long)]
    image: PathBuf,
    /// Part-label mask; enables gating and endpoint reconstruction.
    #[arg(long, requires = "instances")]
    parts: Option<PathBuf>,
    /// Instance-ID mask.
    #[arg(long, requires = "parts")]
    instances: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Per-point CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render an SVG overlay to this path.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Dump the five derivative rasters as raw f64 + JSON header,
    /// using this path prefix.
    #[arg(long)]
    dump_fields: Option<PathBuf>,
    /// Emit per-step endpoint-walk records next to the point CSV.
    #[arg(long)]
    trace_walk: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of predicted masks (`*_parts.png` + `*_instances.png`).
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth masks with matching stems.
    #[arg(long)]
    gt: PathBuf,
    /// Output directory for metrics.csv / metrics.json (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of randomized phantoms (ignored when --spec is given).
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Base RNG seed; phantom i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file holding one SpermSpec or an array of them.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 768)]
    width: u32,
    #[arg(long, default_value_t = 768)]
    height: u32,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OverlayArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    parts: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

/// Parse arguments and run; returns the process exit code (0 ok, 2 error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    let result = match cli.command {
        Command::Measure(a) => cmd_measure(a),
        Command::Centerline(a) => cmd_centerline(a),
        Command::EvalParsing(a) => cmd_eval_parsing(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Overlay(a) => cmd_overlay(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Cap rayon parallelism with the MORPH_THREADS environment variable.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("MORPH_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                // fails harmlessly if a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

/// (image, parts mask, instances mask) paths of one batch element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct BatchItem {
    image: PathBuf,
    parts: PathBuf,
    instances: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}.png"))
}

fn item_for_image(image: &Path) -> Result<BatchItem> {
    let item = BatchItem {
        image: image.to_path_buf(),
        parts: sibling(image, "_parts"),
        instances: sibling(image, "_instances"),
    };
    for p in [&item.image, &item.parts, &item.instances] {
        if !p.is_file() {
            return Err(MorphError::Other(format!("missing input file {}", p.display())));
        }
    }
    Ok(item)
}

fn resolve_inputs(inputs: &[PathBuf]) -> Result<Vec<BatchItem>> {
    let mut items = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| MorphError::from(e).with_path(input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .collect();
            entries.sort();
            for path in entries {
                let name = path.file_name().unwrap_or_default().to_string_lossy();
                if let Some(stem) = name.strip_suffix("_parts.png") {
                    items.push(item_for_image(&path.with_file_name(format!("{stem}.png")))?);
                }
            }
        } else {
            items.push(item_for_image(input)?);
        }
    }
    items.sort();
    items.dedup();
    Ok(items)
}

/// Centerlines of every instance's tail in one image, for overlays.
fn image_centerlines(
    img: &ScalarImage,
    mask: &InstancePartMask,
    cfg: &MeasurementConfig,
) -> Result<Vec<Centerline>> {
    let working = if cfg.dark_lines { img.inverted() } else { img.clone() };
    let fields = derivative_fields(&working, cfg.gaussian)?;
    let edge_fields = derivative_fields(&working, GaussianSpec::new(cfg.edge_sigma)?)?;
    let mut lines = Vec::new();
    for id in mask.instances() {
        let tail = instance_part_mask(mask, id, PartLabel::Tail)?;
        if let Some(m) = measure_centerline_part(&fields, &edge_fields, &tail, cfg)? {
            let mut line = m.line;
            line.instance = id;
            lines.push(line);
        }
    }
    Ok(lines)
}

fn cmd_measure(args: MeasureArgs) -> Result<()> {
    if args.inputs.is_empty() {
        return Err(MorphError::Other("no inputs given".into()));
    }
    let cfg = args.config.build()?;
    let items = resolve_inputs(&args.inputs)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| MorphError::from(e).with_path(args.out.display()))?;

    // per-image work in parallel; collect preserves input order
    let per_image: Vec<Result<(BatchItem, Vec<MorphReport>, Option<String>)>> = items
        .par_iter()
        .map(|item| {
            let img = load_image(&item.image)?;
            let mask = load_mask(&item.parts, &item.instances)?;
            let mut reports = Vec::new();
            for id in mask.instances() {
                reports.push(measure_sperm(&img, &mask, id, &cfg)?);
            }
            let overlay_svg = if args.overlay {
                Some(render_overlay(&img, &image_centerlines(&img, &mask, &cfg)?)?)
            } else {
                None
            };
            Ok((item.clone(), reports, overlay_svg))
        })
        .collect();

    let mut csv = csv_header();
    csv.push('\n');
    let mut json_rows = Vec::new();
    for result in per_image {
        let (item, reports, overlay_svg) = result?;
        let image_name = item.image.display().to_string();
        if reports.is_empty() {
            eprintln!("warning: {image_name}: mask contains no instances");
        }
        for r in &reports {
            csv.push_str(&csv_row(&image_name, r));
            csv.push('\n');
            json_rows.push(json_report(&image_name, r));
        }
        if let Some(svg) = overlay_svg {
            let stem = item.image.file_stem().unwrap_or_default().to_string_lossy();
            std::fs::write(args.out.join(format!("{stem}_overlay.svg")), svg)?;
        }
    }
    std::fs::write(args.out.join("measurements.csv"), csv)?;
    std::fs::write(
        args.out.join("measurements.json"),
        serde_json::to_string_pretty(&json_rows).expect("report serialization"),
    )?;
    Ok(())
}

fn points_csv(lines: &[Centerline]) -> String {
    let mut out = String::from("line,point,x,y,n_x,n_y,width,source\n");
    for (li, line) in lines.iter().enumerate() {
        for (pi, p) in line.points.iter().enumerate() {
            let width = p
                .width
                .map(|w| format!("{w:.4}"))
                .unwrap_or_else(|| "NA".into());
            let source = match p.source {
                PointSource::Detected => "detected",
                PointSource::Reconstructed => "reconstructed",
            };
            writeln!(
                out,
                "{li},{pi},{:.4},{:.4},{:.6},{:.6},{width},{source}",
                p.position.0, p.position.1, p.normal.0, p.normal.1
            )
            .unwrap();
        }
    }
    out
}

fn walk_csv(traces: &[(usize, &str, Vec<WalkTrace>)]) -> String {
    let mut out = String::from(
        "line,end,step,c_x,c_y,g_x,g_y,cand1_x,cand1_y,score1,cand2_x,cand2_y,score2,chosen_x,chosen_y\n",
    );
    for (li, end, steps) in traces {
        for t in steps {
            let [(c1, s1), (c2, s2)] = t.candidate_scores;
            writeln!(
                out,
                "{li},{end},{},{},{},{:.6},{:.6},{},{},{:.6},{},{},{:.6},{},{}",
                t.step,
                t.current.0,
                t.current.1,
                t.momentum_gradient.0,
                t.momentum_gradient.1,
                c1.0,
                c1.1,
                s1,
                c2.0,
                c2.1,
                s2,
                t.chosen.0,
                t.chosen.1
            )
            .unwrap();
        }
    }
    out
}

fn dump_fields(prefix: &Path, fields: &DerivativeFields) -> Result<()> {
    let names = ["rx", "ry", "rxx", "rxy", "ryy"];
    let rasters = [&fields.rx, &fields.ry, &fields.rxx, &fields.rxy, &fields.ryy];
    for (name, raster) in names.iter().zip(rasters) {
        let mut bytes = Vec::with_capacity(raster.len() * 8);
        for v in raster.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(with_suffix(prefix, &format!("_{name}.f64")), bytes)?;
    }
    let header = serde_json::json!({
        "width": fields.width,
        "height": fields.height,
        "sigma": fields.sigma,
        "dtype": "f64le",
        "order": "row-major",
        "fields": names,
    });
    std::fs::write(
        with_suffix(prefix, "_header.json"),
        serde_json::to_string_pretty(&header).expect("header serialization"),
    )?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_centerline(args: CenterlineArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let img = load_image(&args.image)?;
    let working = if cfg.dark_lines { img.inverted() } else { img.clone() };
    let fields = derivative_fields(&working, cfg.gaussian)?;
    let edge_fields = derivative_fields(&working, GaussianSpec::new(cfg.edge_sigma)?)?;
    if let Some(prefix) = &args.dump_fields {
        dump_fields(prefix, &fields)?;
    }

    let mask = match (&args.parts, &args.instances) {
        (Some(p), Some(i)) => Some(load_mask(p, i)?),
        _ => None,
    };

    let mut lines = Vec::new();
    let mut traces: Vec<(usize, &str, Vec<WalkTrace>)> = Vec::new();
    match &mask {
        Some(mask) => {
            for id in mask.instances() {
                let tail = instance_part_mask(mask, id, PartLabel::Tail)?;
                if tail.is_empty() {
                    continue;
                }
                let gate = tail.dilated(cfg.mask_dilation);
                let candidates = detect_candidates(&fields, Some(&gate), &cfg);
                let found = link_centerlines(&candidates, &cfg);
                let Some(mut line) = found.into_iter().next() else {
                    continue;
                };
                line.instance = id;
                if !cfg.steger_baseline {
                    let (filtered, _) = filter_endpoints(&line, &edge_fields, &cfg)?;
                    line = filtered;
                    for (end, name) in [(LineEnd::Front, "front"), (LineEnd::Back, "back")] {
                        let recon = reconstruct_endpoint(&line, end, &fields, &tail, &cfg)?;
                        if args.trace_walk {
                            traces.push((lines.len(), name, recon.trace.clone()));
                        }
                        extend_line(&mut line, end, &recon);
                    }
                }
                crate::morphometry::attach_widths(&mut line, &edge_fields, &cfg);
                lines.push(line);
            }
        }
        None => {
            // ungated detection; endpoint reconstruction needs a mask
            let candidates = detect_candidates(&fields, None, &cfg);
            for mut line in link_centerlines(&candidates, &cfg) {
                if !cfg.steger_baseline {
                    if let Ok((filtered, _)) = filter_endpoints(&line, &edge_fields, &cfg) {
                        line = filtered;
                    }
                }
                crate::morphometry::attach_widths(&mut line, &edge_fields, &cfg);
                lines.push(line);
            }
        }
    }

    let csv = points_csv(&lines);
    match &args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if args.trace_walk {
        let walk = walk_csv(&traces);
        match &args.out {
            Some(path) => std::fs::write(with_suffix(path, ".walk.csv"), walk)?,
            None => print!("{walk}"),
        }
    }
    if let Some(path) = &args.overlay {
        std::fs::write(path, render_overlay(&img, &lines)?)?;
    }
    Ok(())
}

fn mask_stems(dir: &Path) -> Result<Vec<String>> {
    let mut stems: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| MorphError::from(e).with_path(dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            e.file_name()
                .to_string_lossy()
                .strip_suffix("_parts.png")
                .map(str::to_string)
        })
        .collect();
    stems.sort();
    Ok(stems)
}

fn cmd_eval_parsing(args: EvalArgs) -> Result<()> {
    let stems = mask_stems(&args.gt)?;
    if stems.is_empty() {
        return Err(MorphError::Other(format!(
            "no *_parts.png masks in {}",
            args.gt.display()
        )));
    }
    let per_image: Vec<Result<(String, MetricReport)>> = stems
        .par_iter()
        .map(|stem| {
            let gt = load_mask(
                args.gt.join(format!("{stem}_parts.png")),
                args.gt.join(format!("{stem}_instances.png")),
            )?;
            let pred = load_mask(
                args.pred.join(format!("{stem}_parts.png")),
                args.pred.join(format!("{stem}_instances.png")),
            )?;
            let report = metric_report(&pred, &gt, &Confidences::new())?;
            Ok((stem.clone(), report))
        })
        .collect();

    let mut rows = BTreeMap::new();
    for r in per_image {
        let (stem, report) = r?;
        rows.insert(stem, report);
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| rows.values().map(f).sum::<f64>() / n;
    let aggregate = serde_json::json!({
        "miou": mean(|r| r.miou),
        "ap_p_50": mean(|r| r.ap_p_50),
        "ap_p_vol": mean(|r| r.ap_p_vol),
        "pcp_50": mean(|r| r.pcp_50),
        "images": rows.len(),
    });
    let json = serde_json::json!({ "per_image": rows, "aggregate": aggregate });

    let mut csv = String::from("image,miou,ap_p_50,ap_p_vol,pcp_50\n");
    for (stem, r) in &rows {
        writeln!(
            csv,
            "{stem},{:.4},{:.4},{:.4},{:.4}",
            r.miou, r.ap_p_50, r.ap_p_vol, r.pcp_50
        )
        .unwrap();
    }

    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| MorphError::from(e).with_path(dir.display()))?;
            std::fs::write(dir.join("metrics.csv"), csv)?;
            std::fs::write(
                dir.join("metrics.json"),
                serde_json::to_string_pretty(&json).expect("metric serialization"),
            )?;
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&json).expect("metric serialization")
        ),
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .map_err(|e| MorphError::from(e).with_path(args.out.display()))?;
    let specs: Vec<SpermSpec> = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| MorphError::from(e).with_path(path.display()))?;
            // accept a single spec or an array
            serde_json::from_str::<Vec<SpermSpec>>(&text)
                .or_else(|_| serde_json::from_str::<SpermSpec>(&text).map(|s| vec![s]))
                .map_err(|e| MorphError::Other(format!("bad spec {}: {e}", path.display())))?
        }
        None => (0..args.count)
            .map(|i| random_sperm_spec(args.seed + i as u64, args.width, args.height))
            .collect(),
    };
    for (i, spec) in specs.iter().enumerate() {
        let seed = args.seed + i as u64;
        let (img, mask, truth) = render_sperm_phantom(spec, args.width, args.height, seed)?;
        let stem = format!("phantom_{i:03}");
        save_image(&img, args.out.join(format!("{stem}.png")))?;
        save_mask(
            &mask,
            args.out.join(format!("{stem}_parts.png")),
            args.out.join(format!("{stem}_instances.png")),
        )?;
        let truth_json = serde_json::json!({
            "spec": spec,
            "seed": seed,
            "truth": truth,
        });
        std::fs::write(
            args.out.join(format!("{stem}_truth.json")),
            serde_json::to_string_pretty(&truth_json).expect("truth serialization"),
        )?;
    }
    Ok(())
}

fn cmd_overlay(args: OverlayArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let img = load_image(&args.image)?;
    let mask = load_mask(&args.parts, &args.instances)?;
    let lines = image_centerlines(&img, &mask, &cfg)?;
    std::fs::write(&args.out, render_overlay(&img, &lines)?)?;
    Ok(())
}
