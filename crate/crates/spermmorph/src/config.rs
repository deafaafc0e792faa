//! Measurement configuration: every tunable of the pipeline, with
//! documented defaults, plus a flat dotted-key config-file parser
//! (`steger.sigma=1.8`, one key per line, `#` comments).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::derivatives::GaussianSpec;
use crate::error::{MorphError, Result};
use crate::raster::PixelScale;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Gaussian scale for the derivative fields.
    pub gaussian: GaussianSpec,
    /// Smaller Gaussian scale used only for edge localization along the
    /// normal; edge offsets are bias-corrected for this smoothing.
    pub edge_sigma: f64,
    /// Physical pixel pitch.
    pub scale: PixelScale,
    /// Endpoint-walk distance weight (per pixel).
    pub w1: f64,
    /// Endpoint-walk angle weight (per radian).
    pub w2: f64,
    /// Momentum coefficient for the walk gradient update, in [0, 1).
    pub momentum_alpha: f64,
    /// Edge-gradient parallelism threshold for endpoint filtering.
    pub cos_threshold: f64,
    /// Maximum linking distance between consecutive center points (px).
    pub r_link: f64,
    /// Maximum normal orientation change between linked points (degrees).
    pub theta_max_deg: f64,
    /// Linking cost weight for orientation change (px per radian).
    pub gamma: f64,
    /// Minimum points for a centerline to be kept.
    pub min_points: usize,
    /// Minimum |Hessian eigenvalue| for a center point candidate.
    pub strength_threshold: f64,
    /// Maximum half-width searched for edge points along the normal (px).
    pub max_halfwidth: f64,
    /// Step budget for the endpoint reconstruction walk.
    pub max_steps: usize,
    /// Arc length (px) trimmed from each detected line end before endpoint
    /// filtering; removes hook artifacts around rounded part tips.
    pub endpoint_trim: f64,
    /// Arc-length window for curvature / angle(max) estimation (px).
    pub curvature_window: f64,
    /// Dilation margin (px) applied to the tail mask when gating candidates.
    pub mask_dilation: u32,
    /// Treat lines as dark on bright background (negates the image).
    pub dark_lines: bool,
    /// Skip endpoint filtering and reconstruction (comparison baseline).
    pub steger_baseline: bool,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            gaussian: GaussianSpec::new(1.8).unwrap(),
            edge_sigma: 0.8,
            scale: PixelScale::default(),
            w1: 0.5,
            w2: 0.5,
            momentum_alpha: 0.9,
            cos_threshold: 0.9,
            r_link: 2.0,
            theta_max_deg: 45.0,
            gamma: 1.0,
            min_points: 10,
            strength_threshold: 0.01,
            max_halfwidth: 8.0,
            max_steps: 200,
            endpoint_trim: 6.0,
            curvature_window: 10.0,
            mask_dilation: 2,
            dark_lines: false,
            steger_baseline: false,
        }
    }
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gaussian.sigma > 0.0
            && self.edge_sigma > 0.0
            && self.scale.microns_per_pixel > 0.0
            && self.w1 >= 0.0
            && self.w2 >= 0.0
            && (0.0..1.0).contains(&self.momentum_alpha)
            && self.cos_threshold > 0.0
            && self.cos_threshold <= 1.0
            && self.r_link > 0.0
            && self.theta_max_deg > 0.0
            && self.gamma >= 0.0
            && self.min_points >= 2
            && self.strength_threshold > 0.0
            && self.max_halfwidth > 0.0
            && self.endpoint_trim >= 0.0
            && self.curvature_window > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MorphError::Other("invalid configuration value".into()))
        }
    }

    /// Apply one dotted-key assignment.
    pub fn set_key(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let parse_f64 = |v: &str| v.parse::<f64>().map_err(|e| format!("bad number: {e}"));
        let parse_usize = |v: &str| v.parse::<usize>().map_err(|e| format!("bad integer: {e}"));
        let parse_bool = |v: &str| v.parse::<bool>().map_err(|e| format!("bad bool: {e}"));
        match key {
            "steger.sigma" => {
                self.gaussian =
                    GaussianSpec::new(parse_f64(value)?).map_err(|e| e.to_string())?;
            }
            "steger.edge_sigma" => self.edge_sigma = parse_f64(value)?,
            "steger.strength_threshold" => self.strength_threshold = parse_f64(value)?,
            "steger.max_halfwidth" => self.max_halfwidth = parse_f64(value)?,
            "steger.dark_lines" => self.dark_lines = parse_bool(value)?,
            "steger.baseline" => self.steger_baseline = parse_bool(value)?,
            "link.r_link" => self.r_link = parse_f64(value)?,
            "link.theta_max_deg" => self.theta_max_deg = parse_f64(value)?,
            "link.gamma" => self.gamma = parse_f64(value)?,
            "link.min_points" => self.min_points = parse_usize(value)?,
            "link.mask_dilation" => self.mask_dilation = parse_usize(value)? as u32,
            "endpoint.w1" => self.w1 = parse_f64(value)?,
            "endpoint.w2" => self.w2 = parse_f64(value)?,
            "endpoint.momentum_alpha" => self.momentum_alpha = parse_f64(value)?,
            "endpoint.cos_threshold" => self.cos_threshold = parse_f64(value)?,
            "endpoint.max_steps" => self.max_steps = parse_usize(value)?,
            "endpoint.trim" => self.endpoint_trim = parse_f64(value)?,
            "morph.curvature_window" => self.curvature_window = parse_f64(value)?,
            "scale.um_per_px" => {
                self.scale = PixelScale::new(parse_f64(value)?).map_err(|e| e.to_string())?;
            }
            other => return Err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// Parse a flat key=value config file on top of the current values.
    pub fn merge_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| MorphError::from(e).with_path(path.as_ref().display()))?;
        self.merge_str(&text)
    }

    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(MorphError::ConfigParse {
                line: lineno + 1,
                msg: "expected key=value".into(),
            })?;
            self.set_key(key.trim(), value.trim())
                .map_err(|msg| MorphError::ConfigParse {
                    line: lineno + 1,
                    msg,
                })?;
        }
        self.validate()
    }
}
