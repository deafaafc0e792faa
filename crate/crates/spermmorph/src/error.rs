use thiserror::Error;

/// Errors produced by the measurement pipeline.
#[derive(Debug, Error)]
pub enum MorphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image decode error: {0}")]
    ImageDecode(#[from] image::ImageError),

    #[error("expected single-channel {expected}-bit grayscale, got {got}")]
    BadPixelFormat { expected: u8, got: String },

    #[error("zero-sized image")]
    EmptyImage,

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("invalid part code {code} at pixel ({x}, {y})")]
    InvalidPartCode { code: u8, x: u32, y: u32 },

    #[error("background with nonzero instance {instance} at pixel ({x}, {y})")]
    BackgroundInstance { instance: u16, x: u32, y: u32 },

    #[error("part label with zero instance at pixel ({x}, {y})")]
    LabeledWithoutInstance { x: u32, y: u32 },

    #[error("unknown instance id {0}")]
    UnknownInstance(u16),

    #[error("invalid derivative order {0} (expected 0, 1 or 2)")]
    InvalidOrder(u8),

    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("image {0}x{1} smaller than kernel of radius {2}")]
    ImageTooSmall(u32, u32, usize),

    #[error("undefined angle: zero-magnitude gradient")]
    ZeroGradient,

    #[error("centerline has {got} points, need at least {needed}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("no valid center points after endpoint filtering")]
    NoValidCenterPoints,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("curve exits canvas at ({x:.1}, {y:.1})")]
    CurveExitsCanvas { x: f64, y: f64 },

    #[error("phantom parts '{a}' and '{b}' collide at ({x}, {y}) outside designed junctions")]
    PartCollision {
        x: u32,
        y: u32,
        a: &'static str,
        b: &'static str,
    },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("{context}: {source}")]
    WithPath {
        context: String,
        #[source]
        source: Box<MorphError>,
    },

    #[error("{0}")]
    Other(String),
}

impl MorphError {
    /// Attach file-path context to an error.
    pub fn with_path(self, path: impl std::fmt::Display) -> Self {
        MorphError::WithPath {
            context: path.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, MorphError>;
