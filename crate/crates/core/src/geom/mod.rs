//! Planar geometry and the region model built on it.

pub mod circle;
pub mod gen;
pub mod hull;
pub mod point;
pub mod polygon;
pub mod region;

pub use circle::{min_enclosing_circle, Circle};
pub use hull::{convex_hull, min_area_rectangle};
pub use point::{BBox, Point2};
pub use polygon::{monte_carlo_area, Polygon};
pub use region::{BasicUnit, District, RegionFile, RegionModel, UnitRecord};

use crate::error::{Error, Result};
use crate::real::Real;

/// Reock compactness: total polygon area over the area of the minimum
/// enclosing circle of all their vertices. Lies in `(0, 1]`.
pub fn reock_compactness<'a, F: Real>(polygons: impl IntoIterator<Item = &'a Polygon<F>>) -> Result<F> {
    let mut area = F::zero();
    let mut vertices = Vec::new();
    for poly in polygons {
        area += poly.area();
        vertices.extend_from_slice(poly.vertices());
    }
    let circle = min_enclosing_circle(&vertices).ok_or(Error::Empty("polygon set"))?;
    let disc = circle.area();
    if disc <= F::zero() || area <= F::zero() {
        return Err(Error::Degenerate("zero-area compactness input".into()));
    }
    // rounding can push a near-circle a hair above one
    Ok((area / disc).min(F::one()))
}
