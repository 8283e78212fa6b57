//! Convex hull and minimum-area enclosing rectangle.

use super::point::{orient, Point2};
use crate::real::Real;

/// Width of a degenerate rectangle around collinear input.
pub const DEGENERATE_HEIGHT: f64 = 1e-9;

/// Counter-clockwise convex hull (Andrew's monotone chain), without collinear points.
pub fn convex_hull<F: Real>(points: &[Point2<F>]) -> Vec<Point2<F>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2<F>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2<F>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= F::zero() {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Side lengths `(length, height)` of the minimum-area rectangle covering the
/// points, with `length >= height`.
///
/// Some side of an optimal rectangle is collinear with a hull edge, so every
/// hull edge direction is tried (rotating calipers). Collinear or tiny inputs
/// yield `(diameter, 1e-9)`.
pub fn min_area_rectangle<F: Real>(points: &[Point2<F>]) -> (F, F) {
    let hull = convex_hull(points);
    let eps = F::lit(DEGENERATE_HEIGHT);
    if hull.len() < 3 {
        let diameter = match hull.as_slice() {
            [a, b] => a.distance(*b),
            _ => F::zero(),
        };
        return (diameter, eps);
    }
    let mut best: Option<(F, F, F)> = None;
    let n = hull.len();
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = a.distance(b);
        if len == F::zero() {
            continue;
        }
        let u = (b - a) * (F::one() / len);
        let v = Point2::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (F::infinity(), F::neg_infinity(), F::infinity(), F::neg_infinity());
        for &p in &hull {
            let d = p - a;
            let pu = d.dot(u);
            let pv = d.dot(v);
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let w = umax - umin;
        let h = vmax - vmin;
        let area = w * h;
        if best.is_none_or(|(ba, _, _)| area < ba) {
            best = Some((area, w, h));
        }
    }
    let (_, w, h) = best.expect("hull has edges");
    let (l, s) = if w >= h { (w, h) } else { (h, w) };
    (l, s.max(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rect_corners(angle: f64) -> Vec<Point2<f64>> {
        [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]
            .iter()
            .map(|&(x, y)| Point2::new(x, y).rotate(angle))
            .collect()
    }

    #[test]
    fn rectangle_is_its_own_cover() {
        let (l, h) = min_area_rectangle(&rect_corners(0.0));
        assert!((l - 2.0).abs() < 1e-12 && (h - 1.0).abs() < 1e-12);
        let (l, h) = min_area_rectangle(&rect_corners(30f64.to_radians()));
        assert!((l - 2.0).abs() < 1e-6 && (h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<_> = (0..4).map(|i| Point2::new(i as f64, i as f64)).collect();
        let (l, h) = min_area_rectangle(&pts);
        assert!((l - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(h, DEGENERATE_HEIGHT);
    }

    #[test]
    fn never_worse_than_rotation_sweep() {
        let mut rng = crate::rng::rng(5);
        for _ in 0..20 {
            let pts: Vec<Point2<f64>> = (0..100)
                .map(|_| Point2::new(rng.random::<f64>() * 3.0, rng.random::<f64>()))
                .collect();
            let (l, h) = min_area_rectangle(&pts);
            assert!(l >= h);
            for deg in 0..180 {
                let a = (deg as f64).to_radians();
                let rot: Vec<_> = pts.iter().map(|p| p.rotate(a)).collect();
                let bb = super::super::point::BBox::of(&rot).unwrap();
                assert!(l * h <= bb.area() + 1e-12);
            }
        }
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let mut pts = rect_corners(0.0);
        pts.push(Point2::new(1.0, 0.5));
        pts.push(Point2::new(1.0, 0.0));
        assert_eq!(convex_hull(&pts).len(), 4);
    }
}
