//! Per-unit and per-district features shared by every estimator.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::{min_area_rectangle, RegionModel};
use crate::scenario::{ScenarioSet, Split};
use crate::Point;

/// Static per-unit features: population, √population, perimeter, area, √area, density, depot distance.
pub const STATIC_FEATURES: usize = 7;
/// Static features plus the membership flag.
pub const NODE_FEATURES: usize = 8;

/// District-level aggregates used by the formula estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    /// Total area `A_d`.
    pub area: f64,
    /// Expected requests `R_d = κ Σ ξ_v`.
    pub requests: f64,
    /// Mean depot-to-request distance `Δ_d`.
    pub delta: f64,
}

impl Aggregates {
    /// `√(A_d R_d)`.
    pub fn bhh(&self) -> f64 {
        (self.area * self.requests).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistrictFeatures {
    /// One row per region unit; the last entry is the membership flag.
    pub per_unit: Vec<[f64; NODE_FEATURES]>,
    pub aggregates: Aggregates,
    /// Length over height of the minimum-area enclosing rectangle, ≥ 1.
    pub rect_ratio: f64,
}

/// Cached region data plus Train-scenario distance sums.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    kappa: f64,
    depot: Point,
    static_features: Vec<[f64; STATIC_FEATURES]>,
    area: Vec<f64>,
    population: Vec<f64>,
    centroid_distance: Vec<f64>,
    vertices: Vec<Vec<Point>>,
    adjacency: Arc<Vec<Vec<usize>>>,
    scenarios: usize,
    /// `dist_sum[u * scenarios + t]`: summed depot distance of unit `u`'s requests in scenario `t`.
    dist_sum: Vec<f64>,
    count: Vec<u32>,
}

impl FeatureContext {
    /// Only Train scenarios may feed features.
    pub fn new(region: &RegionModel, train: &ScenarioSet) -> Result<Self> {
        if train.split != Split::Train {
            return Err(Error::validation("feature scenarios", "features must come from the train split"));
        }
        if train.count() == 0 {
            return Err(Error::Missing("train scenarios".into()));
        }
        if train.units() != region.len() {
            return Err(Error::validation(
                "feature scenarios",
                format!("{} units but region has {}", train.units(), region.len()),
            ));
        }
        let depot = region.depot();
        let s = train.count();
        let n = region.len();
        let mut dist_sum = vec![0.0; n * s];
        let mut count = vec![0u32; n * s];
        for u in 0..n {
            for (t, pts) in train.unit_scenarios(u).iter().enumerate() {
                dist_sum[u * s + t] = pts.iter().map(|p| p.distance(depot)).sum();
                count[u * s + t] = pts.len() as u32;
            }
        }
        let units = region.units();
        Ok(Self {
            kappa: train.kappa,
            depot,
            static_features: units
                .iter()
                .map(|u| {
                    [
                        u.population,
                        u.population.sqrt(),
                        u.perimeter,
                        u.area,
                        u.area.sqrt(),
                        u.density,
                        u.depot_distance,
                    ]
                })
                .collect(),
            area: units.iter().map(|u| u.area).collect(),
            population: units.iter().map(|u| u.population).collect(),
            centroid_distance: units.iter().map(|u| u.boundary.centroid().distance(depot)).collect(),
            vertices: units.iter().map(|u| u.boundary.vertices().to_vec()).collect(),
            adjacency: Arc::new(region.adjacency().to_vec()),
            scenarios: s,
            dist_sum,
            count,
        })
    }

    pub fn len(&self) -> usize {
        self.area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.area.is_empty()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    pub fn adjacency(&self) -> &Arc<Vec<Vec<usize>>> {
        &self.adjacency
    }

    pub fn static_features(&self) -> &[[f64; STATIC_FEATURES]] {
        &self.static_features
    }

    fn check(&self, members: &[usize]) -> Result<()> {
        if members.is_empty() {
            return Err(Error::Empty("district"));
        }
        if let Some(&bad) = members.iter().find(|&&m| m >= self.len()) {
            return Err(Error::UnknownUnit(bad));
        }
        Ok(())
    }

    /// Mean over nonempty Train scenarios of the mean depot distance of the
    /// district's requests. Falls back to the population-weighted centroid
    /// distance when no scenario has a request.
    pub fn delta(&self, members: &[usize]) -> Result<f64> {
        self.check(members)?;
        let s = self.scenarios;
        let mut acc = 0.0;
        let mut nonempty = 0usize;
        for t in 0..s {
            let mut sum = 0.0;
            let mut cnt = 0u32;
            for &m in members {
                sum += self.dist_sum[m * s + t];
                cnt += self.count[m * s + t];
            }
            if cnt > 0 {
                acc += sum / f64::from(cnt);
                nonempty += 1;
            }
        }
        if nonempty > 0 {
            return Ok(acc / nonempty as f64);
        }
        let pop: f64 = members.iter().map(|&m| self.population[m]).sum();
        Ok(members.iter().map(|&m| self.population[m] * self.centroid_distance[m]).sum::<f64>() / pop)
    }

    pub fn aggregates(&self, members: &[usize]) -> Result<Aggregates> {
        self.check(members)?;
        Ok(Aggregates {
            area: members.iter().map(|&m| self.area[m]).sum(),
            requests: self.kappa * members.iter().map(|&m| self.population[m]).sum::<f64>(),
            delta: self.delta(members)?,
        })
    }

    pub fn rect_ratio(&self, members: &[usize]) -> Result<f64> {
        self.check(members)?;
        let pts: Vec<Point> = members.iter().flat_map(|&m| self.vertices[m].iter().copied()).collect();
        let (len, height) = min_area_rectangle(&pts);
        Ok(len / height)
    }

    /// Shallow-network inputs: `R_d`, rectangle ratio, `Δ_d`, ratio over `R_d`, `√(A_d R_d)`.
    pub fn snn_inputs(&self, members: &[usize]) -> Result<[f64; 5]> {
        let a = self.aggregates(members)?;
        let ratio = self.rect_ratio(members)?;
        Ok([a.requests, ratio, a.delta, ratio / a.requests, a.bhh()])
    }

    /// Membership flags over all units.
    pub fn membership(&self, members: &[usize]) -> Result<Vec<f64>> {
        self.check(members)?;
        let mut e = vec![0.0; self.len()];
        for &m in members {
            e[m] = 1.0;
        }
        Ok(e)
    }

    pub fn compute_features(&self, members: &[usize]) -> Result<DistrictFeatures> {
        let e = self.membership(members)?;
        let per_unit = self
            .static_features
            .iter()
            .zip(&e)
            .map(|(s, &ev)| {
                let mut row = [0.0; NODE_FEATURES];
                row[..STATIC_FEATURES].copy_from_slice(s);
                row[STATIC_FEATURES] = ev;
                row
            })
            .collect();
        Ok(DistrictFeatures {
            per_unit,
            aggregates: self.aggregates(members)?,
            rect_ratio: self.rect_ratio(members)?,
        })
    }
}
