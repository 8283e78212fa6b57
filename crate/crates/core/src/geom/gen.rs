//! Synthetic region generators.

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal};

use super::region::{RegionModel, UnitRecord};
use crate::error::{Error, Result};
use crate::rng;
use crate::{Point, Polygon};

/// Median and spread of the unit population draw.
const POP_MEDIAN: f64 = 7_800.0;
const POP_SIGMA: f64 = 0.25;
const POP_RANGE: (f64, f64) = (5_000.0, 18_000.0);

fn population(rng: &mut rng::Rng) -> f64 {
    let ln = LogNormal::new(POP_MEDIAN.ln(), POP_SIGMA).expect("valid lognormal");
    ln.sample(rng).clamp(POP_RANGE.0, POP_RANGE.1).round()
}

/// `width x height` grid of square cells with side `cell` km. The depot sits
/// at the grid centre.
pub fn grid(width: usize, height: usize, cell: f64, seed: u64) -> Result<RegionModel> {
    if width == 0 || height == 0 || !(cell > 0.0) {
        return Err(Error::validation("grid", format!("{width}x{height} cells of size {cell}")));
    }
    let mut rng = rng::rng_from(seed, &[rng::tag::GENERATOR, 0]);
    let mut units = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let (x0, y0) = (c as f64 * cell, r as f64 * cell);
            units.push(UnitRecord {
                id: r * width + c,
                polygon: Polygon::rect(x0, y0, x0 + cell, y0 + cell)?,
                population: population(&mut rng),
            });
        }
    }
    let depot = Point::new(width as f64 * cell / 2.0, height as f64 * cell / 2.0);
    RegionModel::new(units, None, depot)
}

/// Unit squares laid out in a row with an explicit contiguity graph.
pub fn from_graph(n: usize, edges: &[[usize; 2]], seed: u64) -> Result<RegionModel> {
    let mut rng = rng::rng_from(seed, &[rng::tag::GENERATOR, 1]);
    let units = (0..n)
        .map(|i| {
            let x0 = 2.0 * i as f64;
            Ok(UnitRecord {
                id: i,
                polygon: Polygon::rect(x0, 0.0, x0 + 1.0, 1.0)?,
                population: population(&mut rng),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RegionModel::new(units, Some(edges.to_vec()), Point::new(n as f64, 0.5))
}

/// Parameters of the Voronoi city generator.
#[derive(Debug, Clone, Copy)]
pub struct CityParams {
    pub units: usize,
    /// Mean unit area in km².
    pub mean_area: f64,
    /// Site intensity far from the centre relative to the centre.
    pub edge_intensity: f64,
}

impl Default for CityParams {
    fn default() -> Self {
        Self {
            units: 50,
            mean_area: 2.0,
            edge_intensity: 0.12,
        }
    }
}

/// Voronoi-cell city clipped to a square. Sites are denser near the centre,
/// so central units are smaller and, with similar populations, denser.
pub fn synthetic_city(params: CityParams, seed: u64) -> Result<RegionModel> {
    let n = params.units;
    if n < 2 {
        return Err(Error::validation("synthetic city", "needs at least 2 units"));
    }
    if !(params.mean_area > 0.0) || !(params.edge_intensity > 0.0 && params.edge_intensity <= 1.0) {
        return Err(Error::validation("synthetic city", format!("{params:?}")));
    }
    let side = (params.mean_area * n as f64).sqrt();
    let half = side / 2.0;
    let sigma = side / 4.0;
    let intensity = |p: Point| {
        let r2 = p.x * p.x + p.y * p.y;
        params.edge_intensity + (-(r2 / (sigma * sigma))).exp()
    };
    let mut rng = rng::rng_from(seed, &[rng::tag::GENERATOR, 1]);
    // dart throwing with spacing that scales with the local cell size
    let base_spacing = 0.45 * (params.mean_area * params.edge_intensity).sqrt();
    let mut sites: Vec<Point> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let mut spacing_scale = 1.0;
    while sites.len() < n {
        attempts += 1;
        if attempts % 20_000 == 0 {
            spacing_scale *= 0.9;
        }
        let p = Point::new(rng.random_range(-half..half), rng.random_range(-half..half));
        let w = intensity(p);
        if rng.random::<f64>() * (1.0 + params.edge_intensity) > w {
            continue;
        }
        let min_d = spacing_scale * base_spacing / w.sqrt();
        if sites.iter().all(|s| s.distance(p) >= min_d) {
            sites.push(p);
        }
    }
    let square = vec![
        Point::new(-half, -half),
        Point::new(half, -half),
        Point::new(half, half),
        Point::new(-half, half),
    ];
    let mut units = Vec::with_capacity(n);
    for (i, &s) in sites.iter().enumerate() {
        let mut cell = square.clone();
        for (j, &o) in sites.iter().enumerate() {
            if i != j {
                cell = clip_half_plane(&cell, s.midpoint(o), o - s);
            }
        }
        units.push(UnitRecord {
            id: i,
            polygon: Polygon::new(cell)?,
            population: population(&mut rng),
        });
    }
    RegionModel::new(units, None, Point::new(0.0, 0.0))
}

/// Keep the part of a convex ring where `(p - origin) . normal <= 0`.
fn clip_half_plane(ring: &[Point], origin: Point, normal: Point) -> Vec<Point> {
    let side = |p: Point| (p - origin).dot(normal);
    let mut out = Vec::with_capacity(ring.len() + 1);
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push(a + (b - a) * t);
        }
    }
    out.dedup_by(|a, b| a.distance(*b) < 1e-12);
    if out.len() > 1 && out[0].distance(out[out.len() - 1]) < 1e-12 {
        out.pop();
    }
    out
}
