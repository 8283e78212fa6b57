use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::point::{orient, segment_distance, BBox, Point2};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng;

/// A simple polygon stored as an open ring (the closing vertex is implicit).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
#[serde(bound(serialize = "F: Real + Serialize"))]
pub struct Polygon<F> {
    vertices: Vec<Point2<F>>,
}

impl<'de, F: Real + Deserialize<'de>> Deserialize<'de> for Polygon<F> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let vertices = Vec::<Point2<F>>::deserialize(d)?;
        Polygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

impl<F: Real> Polygon<F> {
    /// Build a polygon, rejecting rings with fewer than three distinct
    /// vertices, zero area or self-intersections.
    pub fn new(mut vertices: Vec<Point2<F>>) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        vertices.dedup();
        if vertices.len() < 3 {
            return Err(Error::Degenerate(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let poly = Self { vertices };
        if poly.area() <= F::zero() {
            return Err(Error::Degenerate("polygon has zero area".into()));
        }
        if let Some((i, j)) = poly.self_intersection() {
            return Err(Error::Degenerate(format!("polygon edges {i} and {j} intersect")));
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: F, y0: F, x1: F, y1: F) -> Result<Self> {
        Self::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point2<F>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2<F>, Point2<F>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> F {
        let half = F::lit(0.5);
        self.edges().map(|(a, b)| a.cross(b)).sum::<F>() * half
    }

    /// Shoelace area.
    pub fn area(&self) -> F {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> F {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn bbox(&self) -> BBox<F> {
        BBox::of(&self.vertices).expect("polygon has vertices")
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2<F> {
        let (mut cx, mut cy) = (F::zero(), F::zero());
        for (a, b) in self.edges() {
            let w = a.cross(b);
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        let six_a = F::lit(6.0) * self.signed_area();
        Point2::new(cx / six_a, cy / six_a)
    }

    /// Strict interior test by crossing number; boundary points may go either way.
    pub fn contains_interior(&self, p: Point2<F>) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether `p` lies exactly on an edge.
    pub fn on_boundary(&self, p: Point2<F>) -> bool {
        self.edges().any(|(a, b)| {
            orient(a, b, p) == F::zero() && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
        })
    }

    /// Closed containment: interior or boundary.
    pub fn contains(&self, p: Point2<F>) -> bool {
        self.on_boundary(p) || self.contains_interior(p)
    }

    /// Euclidean distance from `p` to the nearest point of the polygon (0 inside).
    pub fn distance_to(&self, p: Point2<F>) -> F {
        if self.contains(p) {
            return F::zero();
        }
        self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(F::infinity(), F::min)
    }

    fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        let v = &self.vertices;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            for j in (i + 1)..n {
                // adjacent edges share an endpoint by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (v[j], v[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Uniform point inside the polygon by rejection in the bounding box.
    pub fn sample_point<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point2<F> {
        let bb = self.bbox();
        loop {
            let x = bb.min.x + bb.width() * F::lit(rng.random::<f64>());
            let y = bb.min.y + bb.height() * F::lit(rng.random::<f64>());
            let p = Point2::new(x, y);
            if self.contains_interior(p) {
                return p;
            }
        }
    }

    pub fn translate(&self, by: Point2<F>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| p + by).collect(),
        }
    }

    pub fn rotate(&self, angle: F) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| p.rotate(angle)).collect(),
        }
    }
}

fn on_segment<F: Real>(a: Point2<F>, b: Point2<F>, p: Point2<F>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test.
pub fn segments_intersect<F: Real>(a: Point2<F>, b: Point2<F>, c: Point2<F>, d: Point2<F>) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let z = F::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    (o1 == z && on_segment(a, b, c))
        || (o2 == z && on_segment(a, b, d))
        || (o3 == z && on_segment(c, d, a))
        || (o4 == z && on_segment(c, d, b))
}

/// Monte-Carlo area estimate: the fraction of uniform samples in the bounding
/// box that land inside, times the box area.
pub fn monte_carlo_area<F: Real>(poly: &Polygon<F>, samples: usize, seed: u64) -> Result<F> {
    if samples == 0 {
        return Err(Error::validation("sample count", "must be at least 1"));
    }
    let bb = poly.bbox();
    if bb.area() <= F::zero() {
        return Err(Error::Degenerate("zero-area bounding box".into()));
    }
    let mut rng = rng::rng_from(seed, &[rng::tag::AREA]);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = bb.min.x + bb.width() * F::lit(rng.random::<f64>());
        let y = bb.min.y + bb.height() * F::lit(rng.random::<f64>());
        if poly.contains_interior(Point2::new(x, y)) {
            hits += 1;
        }
    }
    Ok(bb.area() * F::of_usize(hits) / F::of_usize(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn unit_square() -> Polygon<f64> {
        Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_rings() {
        assert!(Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).is_err());
        assert!(Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]).is_err());
        // bow tie
        let bow = vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(matches!(Polygon::new(bow), Err(Error::Degenerate(_))));
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let poly = Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(0.0, 0.0)]).unwrap();
        assert_eq!(poly.len(), 3);
        assert!((poly.area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn square_measures() {
        let sq = unit_square();
        assert_eq!(sq.area(), 1.0);
        assert_eq!(sq.perimeter(), 4.0);
        assert_eq!(sq.centroid(), p(0.5, 0.5));
    }

    #[test]
    fn depot_distance_examples() {
        let sq = unit_square();
        assert_eq!(sq.distance_to(p(0.3, 0.7)), 0.0);
        assert_eq!(sq.distance_to(p(1.0, 0.5)), 0.0);
        assert_eq!(sq.distance_to(p(2.0, 0.5)), 1.0);
        assert!((sq.distance_to(p(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_matches_known_areas() {
        let sq = unit_square();
        let a = monte_carlo_area(&sq, 50_000, 1).unwrap();
        assert!((a - 1.0).abs() <= 0.02);
        let tri = Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)]).unwrap();
        let a = monte_carlo_area(&tri, 50_000, 1).unwrap();
        assert!((a - 0.5).abs() <= 0.02, "{a}");
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let tri = Polygon::new(vec![p(0.0, 0.0), p(3.0, 0.5), p(1.0, 2.0)]).unwrap();
        let a = monte_carlo_area(&tri, 1000, 42).unwrap();
        let b = monte_carlo_area(&tri, 1000, 42).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(monte_carlo_area(&tri, 0, 42).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let sq = Polygon::<f32>::rect(0.0, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(sq.area(), 2.0f32);
        assert!(sq.contains(Point2::new(1.0f32, 0.5)));
    }
}
