//! Instance parameters, feasible initial partitions and solution validation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::RegionModel;
use crate::rng::{self, Rng};
use crate::solution::Solution;
use crate::Point;

/// Requests per district targeted by the request probability.
pub const TARGET_REQUESTS: f64 = 96.0;
/// Population scale in the request probability.
pub const POPULATION_SCALE: f64 = 8000.0;
/// Quadrant depot offset as a share of the region half-extent.
pub const DEPOT_OFFSET: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DepotTag {
    C,
    NE,
    NW,
    SE,
    SW,
    /// Explicit coordinates.
    At(Point),
}

impl std::str::FromStr for DepotTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C" => Ok(DepotTag::C),
            "NE" => Ok(DepotTag::NE),
            "NW" => Ok(DepotTag::NW),
            "SE" => Ok(DepotTag::SE),
            "SW" => Ok(DepotTag::SW),
            _ => {
                let parts: Vec<&str> = s.split(',').collect();
                if let [x, y] = parts[..] {
                    if let (Ok(x), Ok(y)) = (x.trim().parse(), y.trim().parse()) {
                        return Ok(DepotTag::At(Point::new(x, y)));
                    }
                }
                Err(Error::validation("depot", format!("expected C|NE|NW|SE|SW|x,y, got {s:?}")))
            }
        }
    }
}

impl fmt::Display for DepotTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepotTag::C => f.write_str("C"),
            DepotTag::NE => f.write_str("NE"),
            DepotTag::NW => f.write_str("NW"),
            DepotTag::SE => f.write_str("SE"),
            DepotTag::SW => f.write_str("SW"),
            DepotTag::At(p) => write!(f, "{},{}", p.x, p.y),
        }
    }
}

/// Depot location for a tag: the region centroid, shifted toward a quadrant.
pub fn place_depot(region: &RegionModel, tag: DepotTag) -> Point {
    let c = region.centroid();
    let bb = region.bbox();
    let (hx, hy) = (DEPOT_OFFSET * bb.width() / 2.0, DEPOT_OFFSET * bb.height() / 2.0);
    match tag {
        DepotTag::C => c,
        DepotTag::NE => Point::new(c.x + hx, c.y + hy),
        DepotTag::NW => Point::new(c.x - hx, c.y + hy),
        DepotTag::SE => Point::new(c.x + hx, c.y - hy),
        DepotTag::SW => Point::new(c.x - hx, c.y - hy),
        DepotTag::At(p) => p,
    }
}

/// Districting instance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub units: usize,
    /// Target district size.
    pub t: usize,
    pub n_l: usize,
    pub n_u: usize,
    pub k: usize,
    /// Request probability per inhabitant.
    pub kappa: f64,
    pub depot_tag: DepotTag,
    pub depot: Point,
    pub budget_seconds: f64,
    pub seed: u64,
}

/// `⌊0.8 t⌋` and `⌈1.2 t⌉` in exact integer arithmetic.
pub fn size_bounds(t: usize) -> (usize, usize) {
    (8 * t / 10, (12 * t).div_ceil(10))
}

/// District count closest to `round(n / t)` with `k n_L ≤ n ≤ k n_U`; ties go to the smaller count.
pub fn district_count(n: usize, t: usize, n_l: usize, n_u: usize) -> Result<usize> {
    if n_l == 0 || n_l > n_u {
        return Err(Error::Infeasible(format!("bad size bounds [{n_l}, {n_u}]")));
    }
    let lo = n.div_ceil(n_u).max(1);
    let hi = n / n_l;
    if lo > hi {
        return Err(Error::Infeasible(format!(
            "no district count k satisfies k*{n_l} <= {n} <= k*{n_u}; relax the size bounds"
        )));
    }
    let k0 = ((n + t / 2) / t).max(1);
    Ok(k0.clamp(lo, hi))
}

/// Parameterize an instance; the returned region carries the placed depot.
pub fn make_instance(region: &RegionModel, t: usize, depot_tag: DepotTag, seed: u64) -> Result<(InstanceConfig, RegionModel)> {
    if t < 2 {
        return Err(Error::validation("target size", format!("t must be at least 2, got {t}")));
    }
    let n = region.len();
    let (n_l, n_u) = size_bounds(t);
    let k = district_count(n, t, n_l, n_u)?;
    let depot = place_depot(region, depot_tag);
    Ok((
        InstanceConfig {
            units: n,
            t,
            n_l,
            n_u,
            k,
            kappa: TARGET_REQUESTS / (POPULATION_SCALE * t as f64),
            depot_tag,
            depot,
            budget_seconds: 60.0,
            seed,
        },
        region.with_depot(depot),
    ))
}

impl InstanceConfig {
    /// Explicit bounds and count, bypassing the size rule.
    pub fn custom(region: &RegionModel, n_l: usize, n_u: usize, k: usize) -> Result<Self> {
        let n = region.len();
        if n_l == 0 || n_l > n_u || k == 0 || k * n_l > n || n > k * n_u {
            return Err(Error::Infeasible(format!("k={k}, bounds [{n_l}, {n_u}] cannot cover {n} units")));
        }
        Ok(Self {
            units: n,
            t: n.div_ceil(k),
            n_l,
            n_u,
            k,
            kappa: TARGET_REQUESTS / (POPULATION_SCALE * n.div_ceil(k) as f64),
            depot_tag: DepotTag::At(region.depot()),
            depot: region.depot(),
            budget_seconds: 60.0,
            seed: 0,
        })
    }

    pub fn validate(&self, region: &RegionModel) -> Result<()> {
        if self.units != region.len() {
            return Err(Error::validation(
                "instance",
                format!("configured for {} units, region has {}", self.units, region.len()),
            ));
        }
        if self.n_l == 0 || self.n_l > self.n_u || self.k * self.n_l > self.units || self.units > self.k * self.n_u {
            return Err(Error::validation(
                "instance",
                format!(
                    "k={} with bounds [{}, {}] is infeasible for {} units",
                    self.k, self.n_l, self.n_u, self.units
                ),
            ));
        }
        Ok(())
    }
}

/// Search limits of [`initial_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitBudget {
    pub nodes_per_attempt: u64,
    pub restarts: usize,
    /// Node cap of the final uncapped-per-attempt run.
    pub total_nodes: u64,
}

impl Default for InitBudget {
    fn default() -> Self {
        Self {
            nodes_per_attempt: 20_000,
            restarts: 20,
            total_nodes: 20_000_000,
        }
    }
}

struct Search<'a> {
    region: &'a RegionModel,
    n_l: usize,
    n_u: usize,
    k: usize,
    /// District index per unit, `usize::MAX` while free.
    owner: Vec<usize>,
    districts: Vec<Vec<usize>>,
    in_set: Vec<bool>,
    excluded: Vec<bool>,
    in_cand: Vec<bool>,
    nodes: u64,
    limit: u64,
    rng: Rng,
    scratch_seen: Vec<bool>,
}

enum Outcome {
    Found,
    Exhausted,
    Limit,
}

impl Search<'_> {
    fn free_count(&self) -> usize {
        self.owner.iter().filter(|&&o| o == usize::MAX).count()
    }

    /// Can the free units outside the current set be split into `k_rem` districts?
    fn remainder_feasible(&mut self, k_rem: usize) -> bool {
        let n = self.owner.len();
        self.scratch_seen.iter_mut().for_each(|s| *s = false);
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut stack = Vec::new();
        for start in 0..n {
            if self.owner[start] != usize::MAX || self.in_set[start] || self.scratch_seen[start] {
                continue;
            }
            self.scratch_seen[start] = true;
            stack.push(start);
            let mut size = 0usize;
            while let Some(u) = stack.pop() {
                size += 1;
                for &v in self.region.neighbors(u) {
                    if self.owner[v] == usize::MAX && !self.in_set[v] && !self.scratch_seen[v] {
                        self.scratch_seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            let (c_lo, c_hi) = (size.div_ceil(self.n_u), size / self.n_l);
            if c_lo > c_hi {
                return false;
            }
            lo += c_lo;
            hi += c_hi;
        }
        lo <= k_rem && k_rem <= hi
    }

    fn next_district(&mut self) -> Outcome {
        if self.districts.len() == self.k {
            return if self.free_count() == 0 {
                Outcome::Found
            } else {
                Outcome::Exhausted
            };
        }
        // anchor: free unit with fewest free neighbours, random tie-break
        let mut best = Vec::new();
        let mut best_deg = usize::MAX;
        for u in 0..self.owner.len() {
            if self.owner[u] != usize::MAX {
                continue;
            }
            let deg = self.region.neighbors(u).iter().filter(|&&v| self.owner[v] == usize::MAX).count();
            if deg < best_deg {
                best_deg = deg;
                best.clear();
            }
            if deg == best_deg {
                best.push(u);
            }
        }
        let Some(&anchor) = best.get(self.rng.random_range(0..best.len().max(1))) else {
            return Outcome::Exhausted;
        };
        let target = self.rng.random_range(self.n_l..=self.n_u);
        let mut set = vec![anchor];
        self.in_set[anchor] = true;
        self.excluded[anchor] = true;
        let mut cand = self.fresh_neighbors(anchor);
        let out = self.grow(&mut set, cand.clone(), target);
        for &c in &cand {
            self.in_cand[c] = false;
        }
        cand.clear();
        self.in_set[anchor] = false;
        self.excluded[anchor] = false;
        out
    }

    fn fresh_neighbors(&mut self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .region
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| self.owner[u] == usize::MAX && !self.in_set[u] && !self.excluded[u] && !self.in_cand[u])
            .collect();
        out.shuffle(&mut self.rng);
        for &u in &out {
            self.in_cand[u] = true;
        }
        out
    }

    fn try_close(&mut self, set: &[usize]) -> Outcome {
        let k_rem = self.k - self.districts.len() - 1;
        if !self.remainder_feasible(k_rem) {
            return Outcome::Exhausted;
        }
        let d = self.districts.len();
        for &u in set {
            self.owner[u] = d;
            self.in_set[u] = false;
        }
        self.districts.push(set.to_vec());
        let saved_excluded: Vec<usize> = (0..self.excluded.len()).filter(|&u| self.excluded[u]).collect();
        let saved_cand: Vec<usize> = (0..self.in_cand.len()).filter(|&u| self.in_cand[u]).collect();
        for &u in &saved_excluded {
            self.excluded[u] = false;
        }
        for &u in &saved_cand {
            self.in_cand[u] = false;
        }
        let out = self.next_district();
        if matches!(out, Outcome::Found) {
            return out;
        }
        for &u in &saved_excluded {
            self.excluded[u] = true;
        }
        for &u in &saved_cand {
            self.in_cand[u] = true;
        }
        self.districts.pop();
        for &u in set {
            self.owner[u] = usize::MAX;
            self.in_set[u] = true;
        }
        out
    }

    /// Enumerate connected extensions of `set` (each subset once), closing a
    /// district whenever its size is admissible.
    fn grow(&mut self, set: &mut Vec<usize>, cand: Vec<usize>, target: usize) -> Outcome {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Outcome::Limit;
        }
        let admissible = set.len() >= self.n_l;
        let close_first = admissible && set.len() >= target;
        if close_first {
            match self.try_close(set) {
                Outcome::Exhausted => {}
                other => return other,
            }
        }
        if set.len() < self.n_u {
            for i in 0..cand.len() {
                let v = cand[i];
                self.in_cand[v] = false;
                set.push(v);
                self.in_set[v] = true;
                let added = self.fresh_neighbors(v);
                let mut next: Vec<usize> = cand[i + 1..].to_vec();
                next.extend_from_slice(&added);
                let out = self.grow(set, next, target);
                for &u in &added {
                    self.in_cand[u] = false;
                }
                set.pop();
                self.in_set[v] = false;
                if !matches!(out, Outcome::Exhausted) {
                    for &u in &cand[..i] {
                        self.excluded[u] = false;
                        self.in_cand[u] = true;
                    }
                    // leave v marked as a candidate of the caller
                    self.in_cand[v] = true;
                    return out;
                }
                self.excluded[v] = true;
            }
            for &u in &cand {
                self.excluded[u] = false;
                self.in_cand[u] = true;
            }
        }
        if admissible && !close_first {
            return self.try_close(set);
        }
        Outcome::Exhausted
    }
}

/// Feasible partition by seeded backtracking: districts are built one at a
/// time around an anchor unit by enumerating connected unit sets within the
/// size bounds, and a district is only closed when the free units left over
/// can still form the remaining districts. Attempts are node-limited with
/// random restarts, then one long run capped by `budget.total_nodes`.
/// Districts are numbered by nondecreasing size.
pub fn initial_solution(region: &RegionModel, config: &InstanceConfig, seed: u64, budget: InitBudget) -> Result<Solution> {
    config.validate(region)?;
    let n = region.len();
    let attempt = |limit: u64, tag: u64| {
        let mut s = Search {
            region,
            n_l: config.n_l,
            n_u: config.n_u,
            k: config.k,
            owner: vec![usize::MAX; n],
            districts: Vec::with_capacity(config.k),
            in_set: vec![false; n],
            excluded: vec![false; n],
            in_cand: vec![false; n],
            nodes: 0,
            limit,
            rng: rng::rng_from(seed, &[rng::tag::INIT, tag]),
            scratch_seen: vec![false; n],
        };
        let out = s.next_district();
        (out, s.districts, s.nodes)
    };
    for r in 0..budget.restarts {
        if let (Outcome::Found, districts, _) = attempt(budget.nodes_per_attempt, r as u64) {
            return finish(n, districts);
        }
    }
    match attempt(budget.total_nodes, budget.restarts as u64) {
        (Outcome::Found, districts, _) => finish(n, districts),
        (Outcome::Exhausted, _, _) => Err(Error::Infeasible(format!(
            "no partition into {} connected districts of size [{}, {}] exists",
            config.k, config.n_l, config.n_u
        ))),
        (Outcome::Limit, _, nodes) => Err(Error::BudgetExhausted {
            nodes,
            message: "initial partition search gave up; relax the size bounds or raise the node budget".into(),
        }),
    }
}

fn finish(n: usize, mut districts: Vec<Vec<usize>>) -> Result<Solution> {
    for d in &mut districts {
        d.sort_unstable();
    }
    districts.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Solution::from_districts(n, &districts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnitCount {
        expected: usize,
        found: usize,
    },
    DistrictCount {
        expected: usize,
        found: usize,
    },
    EmptyDistrict {
        district: usize,
    },
    Size {
        district: usize,
        size: usize,
        n_l: usize,
        n_u: usize,
    },
    Disconnected {
        district: usize,
        components: Vec<Vec<usize>>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnitCount { expected, found } => write!(f, "{found} units assigned, expected {expected}"),
            Violation::DistrictCount { expected, found } => write!(f, "{found} districts, expected {expected}"),
            Violation::EmptyDistrict { district } => write!(f, "district {district} is empty"),
            Violation::Size { district, size, n_l, n_u } => {
                write!(f, "district {district} has {size} units, outside [{n_l}, {n_u}]")
            }
            Violation::Disconnected { district, components } => {
                write!(f, "district {district} is disconnected into {components:?}")
            }
        }
    }
}

/// Every violated partition condition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msg: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(Error::validation("solution", msg.join("; ")))
        }
    }
}

pub fn validate_solution(solution: &Solution, region: &RegionModel, n_l: usize, n_u: usize, k: usize) -> ValidationReport {
    let mut violations = Vec::new();
    if solution.len() != region.len() {
        violations.push(Violation::UnitCount {
            expected: region.len(),
            found: solution.len(),
        });
        return ValidationReport { violations };
    }
    let districts = solution.districts();
    let nonempty = districts.iter().filter(|d| !d.is_empty()).count();
    if solution.k() != k || nonempty != k {
        violations.push(Violation::DistrictCount {
            expected: k,
            found: nonempty,
        });
    }
    for (d, members) in districts.iter().enumerate() {
        if members.is_empty() {
            violations.push(Violation::EmptyDistrict { district: d });
            continue;
        }
        if members.len() < n_l || members.len() > n_u {
            violations.push(Violation::Size {
                district: d,
                size: members.len(),
                n_l,
                n_u,
            });
        }
        let comps = region.components(members);
        if comps.len() > 1 {
            violations.push(Violation::Disconnected {
                district: d,
                components: comps,
            });
        }
    }
    ValidationReport { violations }
}

/// Validate against an instance's bounds and count.
pub fn validate_for(solution: &Solution, region: &RegionModel, config: &InstanceConfig) -> ValidationReport {
    validate_solution(solution, region, config.n_l, config.n_u, config.k)
}

/// Every partition of a small region into `k` connected districts with sizes
/// in `[n_l, n_u]`, as sorted member lists; exhaustive over set partitions.
pub fn enumerate_partitions(region: &RegionModel, n_l: usize, n_u: usize, k: usize) -> Vec<Vec<Vec<usize>>> {
    let n = region.len();
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(
        i: usize,
        used: usize,
        labels: &mut [usize],
        region: &RegionModel,
        bounds: (usize, usize, usize),
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        let (n_l, n_u, k) = bounds;
        let n = labels.len();
        if used + (n - i) < k {
            return;
        }
        if i == n {
            if used != k {
                return;
            }
            let mut parts = vec![Vec::new(); k];
            for (u, &l) in labels.iter().enumerate() {
                parts[l].push(u);
            }
            if parts.iter().all(|p| p.len() >= n_l && p.len() <= n_u && region.is_connected(p)) {
                out.push(parts);
            }
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), labels, region, bounds, out);
        }
    }
    if k > 0 {
        rec(0, 0, &mut labels, region, (n_l, n_u, k), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::gen;

    #[test]
    fn instance_parameters() {
        let r = gen::grid(6, 10, 1.0, 0).unwrap();
        let (c, _) = make_instance(&r, 6, DepotTag::C, 0).unwrap();
        assert_eq!((c.n_l, c.n_u, c.k), (4, 8, 10));
        let (c, _) = make_instance(&r, 3, DepotTag::C, 0).unwrap();
        assert!((c.kappa - 0.004).abs() < 1e-15);
        let r7 = gen::grid(7, 1, 1.0, 0).unwrap();
        let (c, _) = make_instance(&r7, 3, DepotTag::C, 0).unwrap();
        assert_eq!((c.n_l, c.n_u, c.k), (2, 4, 2));
        assert!(make_instance(&r7, 1, DepotTag::C, 0).is_err());
        assert_eq!(size_bounds(20), (16, 24));
        assert_eq!(size_bounds(12), (9, 15));
    }

    #[test]
    fn depot_quadrants() {
        let r = gen::grid(4, 4, 1.0, 0).unwrap();
        let c = r.centroid();
        let ne = place_depot(&r, DepotTag::NE);
        assert!((ne.x - c.x - 0.7).abs() < 1e-12 && (ne.y - c.y - 0.7).abs() < 1e-12);
        let sw = place_depot(&r, DepotTag::SW);
        assert!((sw.x - c.x + 0.7).abs() < 1e-12);
        assert_eq!("se".parse::<DepotTag>().unwrap(), DepotTag::SE);
        assert_eq!("1.5,2".parse::<DepotTag>().unwrap(), DepotTag::At(Point::new(1.5, 2.0)));
        assert!("north".parse::<DepotTag>().is_err());
    }

    #[test]
    fn path_splits_uniquely() {
        let r = gen::grid(6, 1, 1.0, 0).unwrap();
        let cfg = InstanceConfig::custom(&r, 3, 3, 2).unwrap();
        for seed in 0..20 {
            let s = initial_solution(&r, &cfg, seed, InitBudget::default()).unwrap();
            assert_eq!(s.districts(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        }
    }

    #[test]
    fn whole_region_when_k_is_one() {
        let r = gen::grid(3, 3, 1.0, 0).unwrap();
        let cfg = InstanceConfig::custom(&r, 9, 9, 1).unwrap();
        let s = initial_solution(&r, &cfg, 0, InitBudget::default()).unwrap();
        assert_eq!(s.districts(), vec![(0..9).collect::<Vec<_>>()]);
    }

    #[test]
    fn grid_runs_always_valid() {
        let r = gen::grid(6, 10, 1.0, 0).unwrap();
        let (cfg, r) = make_instance(&r, 6, DepotTag::C, 0).unwrap();
        for seed in 0..100 {
            let s = initial_solution(&r, &cfg, seed, InitBudget::default()).unwrap();
            let rep = validate_for(&s, &r, &cfg);
            assert!(rep.is_ok(), "{rep:?}");
            let sizes: Vec<usize> = s.districts().iter().map(Vec::len).collect();
            assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn infeasible_topology_is_proven() {
        // star with three leaves cannot form two connected pairs
        let star = gen::from_graph(4, &[[0, 1], [0, 2], [0, 3]], 0).unwrap();
        let cfg = InstanceConfig::custom(&star, 2, 2, 2).unwrap();
        assert!(enumerate_partitions(&star, 2, 2, 2).is_empty());
        assert!(matches!(
            initial_solution(&star, &cfg, 0, InitBudget::default()),
            Err(Error::Infeasible(_))
        ));
        let cfg = InstanceConfig::custom(&star, 1, 3, 2).unwrap();
        assert!(initial_solution(&star, &cfg, 0, InitBudget::default()).is_ok());
    }

    #[test]
    fn validation_reports_each_violation() {
        let r = gen::grid(4, 1, 1.0, 0).unwrap();
        let ok = Solution::from_districts(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert!(validate_solution(&ok, &r, 2, 2, 2).is_ok());
        let broken = Solution::from_districts(4, &[vec![0, 2], vec![1, 3]]).unwrap();
        let rep = validate_solution(&broken, &r, 2, 2, 2);
        assert!(rep.violations.contains(&Violation::Disconnected {
            district: 0,
            components: vec![vec![0], vec![2]]
        }));
        assert!(rep.violations.iter().any(|v| v.to_string().contains("district 1 is disconnected")));
        let big = Solution::from_districts(4, &[vec![0, 1, 2], vec![3]]).unwrap();
        let rep = validate_solution(&big, &r, 1, 2, 2);
        assert_eq!(
            rep.violations,
            vec![Violation::Size {
                district: 0,
                size: 3,
                n_l: 1,
                n_u: 2
            }]
        );
        let one = Solution::new(2, vec![0, 0, 0, 0]).unwrap();
        let rep = validate_solution(&one, &r, 1, 4, 2);
        assert!(rep.violations.contains(&Violation::EmptyDistrict { district: 1 }));
        assert!(rep.into_result().is_err());
    }

    #[test]
    fn succeeds_exactly_when_partitions_exist() {
        let regions = [
            gen::grid(3, 3, 1.0, 0).unwrap(),
            gen::grid(4, 3, 1.0, 0).unwrap(),
            gen::grid(5, 2, 1.0, 0).unwrap(),
            gen::from_graph(7, &[[0, 1], [0, 2], [0, 3], [3, 4], [3, 5], [5, 6]], 0).unwrap(),
            gen::from_graph(8, &[[0, 1], [1, 2], [2, 3], [3, 0], [0, 4], [4, 5], [1, 6], [6, 7]], 0).unwrap(),
        ];
        for r in &regions {
            let n = r.len();
            for k in 1..=4 {
                for n_l in 1..=n {
                    for n_u in n_l..=n {
                        if k * n_l > n || n > k * n_u {
                            continue;
                        }
                        let exists = !enumerate_partitions(r, n_l, n_u, k).is_empty();
                        let cfg = InstanceConfig::custom(r, n_l, n_u, k).unwrap();
                        let got = initial_solution(r, &cfg, 3, InitBudget::default());
                        assert_eq!(got.is_ok(), exists, "n={n} k={k} [{n_l},{n_u}] {got:?}");
                        if let Ok(s) = got {
                            assert!(validate_for(&s, r, &cfg).is_ok());
                        } else {
                            assert!(matches!(got, Err(Error::Infeasible(_))));
                        }
                    }
                }
            }
        }
    }
}
