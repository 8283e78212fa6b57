//! Minimum enclosing circle by Welzl's randomized incremental algorithm.

use rand::seq::SliceRandom;

use super::point::Point2;
use crate::real::Real;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle<F> {
    pub center: Point2<F>,
    pub radius: F,
}

impl<F: Real> Circle<F> {
    pub fn area(&self) -> F {
        F::PI() * self.radius * self.radius
    }

    fn contains(&self, p: Point2<F>) -> bool {
        let slack = F::lit(1e-12) * (F::one() + self.radius);
        self.center.distance(p) <= self.radius + slack
    }

    fn from_two(a: Point2<F>, b: Point2<F>) -> Self {
        let center = a.midpoint(b);
        Self {
            center,
            radius: center.distance(a),
        }
    }

    fn from_three(a: Point2<F>, b: Point2<F>, c: Point2<F>) -> Self {
        let two = F::lit(2.0);
        let bx = b.x - a.x;
        let by = b.y - a.y;
        let cx = c.x - a.x;
        let cy = c.y - a.y;
        let d = two * (bx * cy - by * cx);
        if d == F::zero() {
            // collinear: the widest pair spans the others
            let cands = [Self::from_two(a, b), Self::from_two(a, c), Self::from_two(b, c)];
            return cands.into_iter().fold(cands[0], |m, x| if x.radius > m.radius { x } else { m });
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = Point2::new(a.x + ux, a.y + uy);
        Self {
            center,
            radius: ux.hypot(uy),
        }
    }
}

/// Smallest circle containing every point. Returns `None` for an empty set.
///
/// The input order is shuffled with a fixed seed, so the result is
/// deterministic while keeping the expected linear running time.
pub fn min_enclosing_circle<F: Real>(points: &[Point2<F>]) -> Option<Circle<F>> {
    let mut pts = points.to_vec();
    if pts.is_empty() {
        return None;
    }
    pts.shuffle(&mut rng::rng(0x5EED));
    let mut c = Circle {
        center: pts[0],
        radius: F::zero(),
    };
    for i in 1..pts.len() {
        if c.contains(pts[i]) {
            continue;
        }
        c = Circle {
            center: pts[i],
            radius: F::zero(),
        };
        for j in 0..i {
            if c.contains(pts[j]) {
                continue;
            }
            c = Circle::from_two(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(pts[k]) {
                    c = Circle::from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    Some(c)
}
