//! Basic units, their contiguity graph and the depot.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::point::{orient, BBox};
use super::polygon::monte_carlo_area;
use crate::error::{Error, Result};
use crate::{Point, Polygon};

/// Samples used for the Monte-Carlo area of each unit.
pub const MC_AREA_SAMPLES: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BasicUnit {
    pub id: usize,
    pub boundary: Polygon,
    pub population: f64,
    /// Shoelace area, km².
    pub area: f64,
    /// Monte-Carlo area estimate kept alongside the exact value.
    pub mc_area: f64,
    pub perimeter: f64,
    pub density: f64,
    pub depot_distance: f64,
}

impl BasicUnit {
    fn new(id: usize, boundary: Polygon, population: f64, depot: Point) -> Result<Self> {
        if !(population.is_finite() && population > 0.0) {
            return Err(Error::validation(
                "population",
                format!("unit {id} has non-positive population {population}"),
            ));
        }
        let area = boundary.area();
        let mc_area = monte_carlo_area(&boundary, MC_AREA_SAMPLES, id as u64)?;
        Ok(Self {
            id,
            perimeter: boundary.perimeter(),
            density: population / area,
            depot_distance: boundary.distance_to(depot),
            area,
            mc_area,
            population,
            boundary,
        })
    }
}

/// One unit as written in a region file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitRecord {
    pub id: usize,
    pub polygon: Polygon,
    pub population: f64,
}

/// On-disk region document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionFile {
    pub units: Vec<UnitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<[usize; 2]>>,
    pub depot: Point,
}

#[derive(Debug, Clone)]
pub struct RegionModel {
    units: Vec<BasicUnit>,
    adjacency: Vec<Vec<usize>>,
    depot: Point,
}

impl RegionModel {
    /// Build and validate a region. Ids must be exactly `0..n` in some order.
    /// Adjacency is derived from shared borders when `None`.
    pub fn new(mut records: Vec<UnitRecord>, adjacency: Option<Vec<[usize; 2]>>, depot: Point) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("region", "no units"));
        }
        records.sort_by_key(|r| r.id);
        for (i, r) in records.iter().enumerate() {
            if r.id != i {
                return Err(Error::validation(
                    "region",
                    format!("unit ids must be 0..{}; found id {} at position {i}", records.len(), r.id),
                ));
            }
        }
        let units = records
            .into_iter()
            .map(|r| BasicUnit::new(r.id, r.polygon, r.population, depot))
            .collect::<Result<Vec<_>>>()?;
        let n = units.len();
        let edges = match adjacency {
            Some(e) => e,
            None => derive_rook_adjacency(units.iter().map(|u| &u.boundary).collect::<Vec<_>>().as_slice()),
        };
        let mut adj = vec![Vec::new(); n];
        for [u, v] in edges {
            if u >= n || v >= n {
                return Err(Error::UnknownUnit(u.max(v)));
            }
            if u == v {
                return Err(Error::validation("adjacency", format!("self-loop on unit {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let region = Self {
            units,
            adjacency: adj,
            depot,
        };
        let all: Vec<usize> = (0..n).collect();
        if !region.is_connected(&all) {
            return Err(Error::validation("region", "contiguity graph is disconnected"));
        }
        Ok(region)
    }

    pub fn from_file_doc(doc: RegionFile) -> Result<Self> {
        Self::new(doc.units, doc.adjacency, doc.depot)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let doc: RegionFile = serde_json::from_str(text).map_err(|e| Error::parse(source_name, &e))?;
        Self::from_file_doc(doc)
    }

    /// Region document with explicit adjacency.
    pub fn to_file_doc(&self) -> RegionFile {
        RegionFile {
            units: self
                .units
                .iter()
                .map(|u| UnitRecord {
                    id: u.id,
                    polygon: u.boundary.clone(),
                    population: u.population,
                })
                .collect(),
            adjacency: Some(self.edges()),
            depot: self.depot,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string(&self.to_file_doc())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Same units with the depot moved; depot distances are recomputed.
    pub fn with_depot(&self, depot: Point) -> Self {
        let mut r = self.clone();
        r.depot = depot;
        for u in &mut r.units {
            u.depot_distance = u.boundary.distance_to(depot);
        }
        r
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[BasicUnit] {
        &self.units
    }

    pub fn unit(&self, id: usize) -> &BasicUnit {
        &self.units[id]
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Undirected edges with `u < v`, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if u < v {
                    e.push([u, v]);
                }
            }
        }
        e
    }

    pub fn bbox(&self) -> BBox<f64> {
        self.units
            .iter()
            .map(|u| u.boundary.bbox())
            .reduce(|a, b| a.union(&b))
            .expect("region has units")
    }

    /// Area-weighted centroid of all units.
    pub fn centroid(&self) -> Point {
        let total: f64 = self.units.iter().map(|u| u.area).sum();
        let (mut x, mut y) = (0.0, 0.0);
        for u in &self.units {
            let c = u.boundary.centroid();
            x += c.x * u.area;
            y += c.y * u.area;
        }
        Point::new(x / total, y / total)
    }

    pub fn total_population(&self) -> f64 {
        self.units.iter().map(|u| u.population).sum()
    }

    /// Whether `members` induce a connected subgraph (false when empty).
    pub fn is_connected(&self, members: &[usize]) -> bool {
        match members.first() {
            None => false,
            Some(_) => self.components(members).len() == 1,
        }
    }

    /// Connected components of the subgraph induced by `members`, each sorted.
    pub fn components(&self, members: &[usize]) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut inside = vec![false; n];
        for &m in members {
            inside[m] = true;
        }
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        let mut queue = VecDeque::new();
        for &start in members {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adjacency[u] {
                    if inside[v] && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// All boundary vertices of the given units.
    pub fn vertices_of(&self, members: &[usize]) -> Vec<Point> {
        members
            .iter()
            .flat_map(|&m| self.units[m].boundary.vertices().iter().copied())
            .collect()
    }
}

/// A nonempty connected set of unit ids, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct District {
    members: Vec<usize>,
}

impl District {
    pub fn new(region: &RegionModel, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&m| m >= region.len()) {
            return Err(Error::UnknownUnit(bad));
        }
        if members.is_empty() {
            return Err(Error::validation("district", "empty"));
        }
        if !region.is_connected(&members) {
            return Err(Error::validation("district", format!("{members:?} is not connected")));
        }
        Ok(Self { members })
    }

    /// Caller guarantees sorted, deduplicated, connected members.
    pub fn from_sorted_unchecked(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, u: usize) -> bool {
        self.members.binary_search(&u).is_ok()
    }
}

/// Rook adjacency: two polygons are adjacent when some pair of their edges is
/// collinear and overlaps along a stretch of positive length.
pub fn derive_rook_adjacency(polys: &[&Polygon]) -> Vec<[usize; 2]> {
    let scale = polys
        .iter()
        .map(|p| p.bbox())
        .reduce(|a, b| a.union(&b))
        .map(|b| b.width().max(b.height()))
        .unwrap_or(1.0)
        .max(1e-300);
    let tol = 1e-7 * scale;
    let boxes: Vec<_> = polys.iter().map(|p| p.bbox()).collect();
    let mut edges = Vec::new();
    for i in 0..polys.len() {
        for j in (i + 1)..polys.len() {
            let (a, b) = (&boxes[i], &boxes[j]);
            if a.min.x > b.max.x + tol || b.min.x > a.max.x + tol || a.min.y > b.max.y + tol || b.min.y > a.max.y + tol {
                continue;
            }
            if share_segment(polys[i], polys[j], tol) {
                edges.push([i, j]);
            }
        }
    }
    edges
}

fn share_segment(p: &Polygon, q: &Polygon, tol: f64) -> bool {
    for (a, b) in p.edges() {
        let len = a.distance(b);
        if len <= tol {
            continue;
        }
        let dir = (b - a) * (1.0 / len);
        for (c, d) in q.edges() {
            if orient(a, b, c).abs() > tol * len || orient(a, b, d).abs() > tol * len {
                continue;
            }
            let (mut s0, mut s1) = ((c - a).dot(dir), (d - a).dot(dir));
            if s0 > s1 {
                std::mem::swap(&mut s0, &mut s1);
            }
            let overlap = s1.min(len) - s0.max(0.0);
            if overlap > tol {
                return true;
            }
        }
    }
    false
}
