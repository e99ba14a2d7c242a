#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod error;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod polygon;
pub mod raster;
pub mod shapes;
pub mod solver;

pub use error::{Error, Result};
pub use gauge::{Exponent, Gauge, GaugeSpec, WulffShape};
pub use grid::{DualField, GridImage, GridMeta, LevelSet, Stencil, VectorField};
pub use polygon::{ConvexPolygon, Point};
