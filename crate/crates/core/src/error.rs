use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFiniteVertex(usize),
    #[error("invalid box ({x1}, {y1}, {x2}, {y2})")]
    InvalidBox { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("degenerate box: width and height must be positive")]
    DegenerateBox,
    #[error("polygon has zero perimeter")]
    ZeroPerimeter,
    #[error("vertex count must be at least 3, got {0}")]
    BadVertexCount(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("image patch data length {len} does not match {width}x{height}")]
    PatchShape {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("box does not intersect the image")]
    BoxOutOfImage,
    #[error("grid mismatch: field is {field_w}x{field_h}, image is {img_w}x{img_h}")]
    GridMismatch {
        field_w: usize,
        field_h: usize,
        img_w: usize,
        img_h: usize,
    },
}

impl Error {
    /// Short machine-readable tag used in result files.
    pub fn code(&self) -> &'static str {
        match self {
            Error::TooFewVertices(_) | Error::BadVertexCount(_) => "bad_vertex_count",
            Error::NonFiniteVertex(_) => "non_finite_vertex",
            Error::InvalidBox { .. } => "invalid_box",
            Error::DegenerateBox => "degenerate_box",
            Error::ZeroPerimeter => "zero_perimeter",
            Error::Config(_) => "config",
            Error::PatchShape { .. } => "patch_shape",
            Error::BoxOutOfImage => "box_out_of_image",
            Error::GridMismatch { .. } => "grid_mismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
