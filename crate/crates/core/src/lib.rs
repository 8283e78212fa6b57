//! Districting-and-routing toolkit.
//!
//! Learns district-level expected routing costs from sampled demand
//! scenarios and searches for low-cost partitions of a region into
//! connected, size-bounded districts.

pub mod bench;
pub mod cost;
pub mod error;
pub mod exact;
pub mod geom;
pub mod ils;
pub mod learn;
pub mod oracles;
pub mod partition;
pub mod real;
pub mod rng;
pub mod saa;
pub mod scenario;
pub mod solution;
pub mod tsp;

pub use error::{Error, Result};
pub use real::Real;

/// Double-precision planar point.
pub type Point = geom::Point2<f64>;
/// Double-precision polygon.
pub type Polygon = geom::Polygon<f64>;
