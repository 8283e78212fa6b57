use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// A point in the plane, coordinates in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[F; 2]", into = "[F; 2]")]
#[serde(bound(serialize = "F: Real + Serialize", deserialize = "F: Real + Deserialize<'de>"))]
pub struct Point2<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> From<[F; 2]> for Point2<F> {
    fn from([x, y]: [F; 2]) -> Self {
        Self { x, y }
    }
}

impl<F: Real> From<Point2<F>> for [F; 2] {
    fn from(p: Point2<F>) -> Self {
        [p.x, p.y]
    }
}

impl<F: Real> Point2<F> {
    #[inline]
    pub const fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Self) -> F {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> F {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> F {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Self) -> F {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_sq(self, o: Self) -> F {
        let d = self - o;
        d.dot(d)
    }

    #[inline]
    pub fn midpoint(self, o: Self) -> Self {
        let half = F::lit(0.5);
        Self::new((self.x + o.x) * half, (self.y + o.y) * half)
    }

    /// Rotate about the origin by `angle` radians.
    pub fn rotate(self, angle: F) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn cast<G: Real>(self) -> Point2<G> {
        Point2::new(G::lit(self.x.as_f64()), G::lit(self.y.as_f64()))
    }
}

impl<F: Real> Add for Point2<F> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<F: Real> Sub for Point2<F> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<F: Real> Mul<F> for Point2<F> {
    type Output = Self;
    #[inline]
    fn mul(self, s: F) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Orientation of the triple: positive when `a, b, c` turn counter-clockwise.
#[inline]
pub fn orient<F: Real>(a: Point2<F>, b: Point2<F>, c: Point2<F>) -> F {
    (b - a).cross(c - a)
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn segment_distance<F: Real>(p: Point2<F>, a: Point2<F>, b: Point2<F>) -> F {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= F::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).max(F::zero()).min(F::one());
    p.distance(a + ab * t)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox<F> {
    pub min: Point2<F>,
    pub max: Point2<F>,
}

impl<F: Real> BBox<F> {
    pub fn of(points: &[Point2<F>]) -> Option<Self> {
        let first = *points.first()?;
        let mut b = BBox { min: first, max: first };
        for p in &points[1..] {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    pub fn width(&self) -> F {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> F {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> F {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2<F> {
        self.min.midpoint(self.max)
    }

    pub fn union(&self, o: &Self) -> Self {
        BBox {
            min: Point2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }
}
