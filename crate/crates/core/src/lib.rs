//! Fits a polygon to an object's boundary from an image and the object's
//! bounding box alone.
//!
//! The polygon is scored by a box-consistency term on its min/max box plus
//! two pairwise terms evaluated on a relaxed (sigmoid of distance)
//! inside/outside field: a windowed color-affinity term and a region
//! homogeneity term. The vertices are then moved by gradient descent with
//! backtracking line search.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the scalar type.

pub mod energy;
pub mod error;
pub mod formats;
pub mod gradcheck;
pub mod image;
pub mod pipeline;
pub mod polygeom;
pub mod raster;
pub mod roi;
pub mod scalar;
pub mod snake;
pub mod synthetic;

pub use energy::{EnergyConfig, EnergyModel, LossValue, Reduction, TotalLoss, UnaryKind};
pub use error::{Error, Result};
pub use formats::{AnnotationFile, EvalReport, ResultFile};
pub use gradcheck::{run_gradcheck, GradcheckOptions, GradcheckReport};
pub use image::ImagePatch;
pub use pipeline::{fit_annotations, FitSettings};
pub use polygeom::{BBox, Point, Polygon};
pub use raster::{rasterize_polygon, Mask};
pub use roi::{ClipConfig, ClipFrame};
pub use scalar::Scalar;
pub use snake::{evolve, evolve_batch, InitKind, SnakeConfig, SnakeTrace, Termination};

pub type Point64 = Point<f64>;
pub type Polygon64 = Polygon<f64>;
pub type BBox64 = BBox<f64>;
pub type ImagePatch64 = ImagePatch<f64>;
pub type SnakeTrace64 = SnakeTrace<f64>;

pub type Point32 = Point<f32>;
pub type Polygon32 = Polygon<f32>;
pub type BBox32 = BBox<f32>;
pub type ImagePatch32 = ImagePatch<f32>;
pub type SnakeTrace32 = SnakeTrace<f32>;
