//! Quantitative sperm morphometry from grayscale micrographs and
//! instance-aware part segmentation masks.
//!
//! The pipeline stages are:
//!
//! 1. **Raster** – image/mask decoding, per-instance part extraction,
//!    connected components.
//! 2. **Derivatives** – Gaussian partial-derivative fields
//!    (r_x, r_y, r_xx, r_xy, r_yy) via separable convolution.
//! 3. **Steger** – sub-pixel centerline detection from Hessian
//!    eigen-analysis, point linking, edge localization along the normal.
//! 4. **Endpoint** – outlier filtering of mislocated centerline endpoints
//!    (edge-gradient parallelism test) and momentum-guided endpoint
//!    reconstruction.
//! 5. **Morphometry** – per-sperm parameter record: head ellipse,
//!    midpiece rectangle, tail length/width/curvature, areas, angles.
//! 6. **Metrics** – parsing-quality scores (mIoU, AP^p, PCP) for external
//!    segmentation outputs.
//! 7. **Synth** – analytic phantom generator used as measurement oracle.
//!
//! See the crate `examples/` directory for one runnable example per stage.

pub mod cli;
pub mod config;
pub mod derivatives;
pub mod endpoint;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod morphometry;
pub mod overlay;
pub mod raster;
pub mod report;
pub mod steger;
pub mod synth;

pub use config::MeasurementConfig;
pub use error::MorphError;
pub use morphometry::{measure_sperm, MorphReport};
pub use raster::{BinaryMask, InstancePartMask, PartLabel, PixelScale, ScalarImage};
