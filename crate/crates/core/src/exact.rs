//! Full-knowledge baseline: every feasible district, priced, and an exact
//! set-partitioning solve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::DistrictCost;
use crate::error::{Error, Result};
use crate::geom::RegionModel;
use crate::solution::Solution;

/// Largest region handled by the bitmask enumeration.
pub const MAX_UNITS: usize = 128;
/// The pre-check refuses only when the estimate exceeds the cap by this factor.
pub const PRECHECK_SLACK: f64 = 1e4;

type Mask = u128;

fn bit(u: usize) -> Mask {
    1 << u
}

fn members_of(mut m: Mask) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictCatalog {
    pub units: usize,
    pub n_l: usize,
    pub n_u: usize,
    /// Sorted member lists, each connected and within bounds.
    pub districts: Vec<Vec<usize>>,
    /// Per-district cost, empty until priced.
    pub costs: Vec<f64>,
    pub source: String,
}

/// Upper estimate of the connected sets with sizes in `[n_l, n_u]`.
pub fn estimate_districts(region: &RegionModel, n_l: usize, n_u: usize) -> f64 {
    let n = region.len();
    let max_deg = region.adjacency().iter().map(Vec::len).max().unwrap_or(0) as f64;
    let branch = std::f64::consts::E * (max_deg - 1.0).max(1.0);
    (n_l..=n_u.min(n))
        .map(|s| {
            let binom = (0..s).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
            binom.min(n as f64 * branch.powi(s as i32 - 1))
        })
        .sum()
}

/// Every connected unit set with size in `[n_l, n_u]`, each emitted once with
/// its lowest unit as the root.
pub fn enumerate_districts(region: &RegionModel, n_l: usize, n_u: usize, cap: usize) -> Result<DistrictCatalog> {
    let n = region.len();
    if n > MAX_UNITS {
        return Err(Error::TooLarge(n, MAX_UNITS));
    }
    if n_l == 0 || n_l > n_u {
        return Err(Error::validation("bounds", format!("[{n_l}, {n_u}]")));
    }
    let est = estimate_districts(region, n_l, n_u);
    if est > cap as f64 * PRECHECK_SLACK {
        return Err(Error::CapEstimate { cap, estimate: est });
    }
    let adj: Vec<Mask> = (0..n).map(|u| region.neighbors(u).iter().fold(0, |m, &v| m | bit(v))).collect();
    let mut out = Vec::new();
    struct Ctx<'a> {
        adj: &'a [Mask],
        n_l: u32,
        n_u: u32,
        cap: usize,
        out: &'a mut Vec<Mask>,
    }
    fn rec(c: &mut Ctx<'_>, set: Mask, mut cand: Mask, mut forbidden: Mask) -> Result<()> {
        let size = set.count_ones();
        if size >= c.n_l {
            if c.out.len() >= c.cap {
                return Err(Error::CapExceeded {
                    cap: c.cap,
                    reached: c.out.len() + 1,
                });
            }
            c.out.push(set);
        }
        if size == c.n_u {
            return Ok(());
        }
        while cand != 0 {
            let w = cand.trailing_zeros() as usize;
            cand &= !bit(w);
            let f = forbidden | bit(w);
            let next = cand | (c.adj[w] & !f & !set);
            rec(c, set | bit(w), next, f)?;
            forbidden |= bit(w);
        }
        Ok(())
    }
    let mut ctx = Ctx {
        adj: &adj,
        n_l: n_l as u32,
        n_u: n_u as u32,
        cap,
        out: &mut out,
    };
    for v in 0..n {
        let below = if v + 1 == MAX_UNITS { Mask::MAX } else { bit(v + 1) - 1 };
        rec(&mut ctx, bit(v), adj[v] & !below, below)?;
    }
    let mut districts: Vec<Vec<usize>> = out.into_iter().map(members_of).collect();
    districts.sort_unstable();
    Ok(DistrictCatalog {
        units: n,
        n_l,
        n_u,
        districts,
        costs: Vec::new(),
        source: String::new(),
    })
}

impl DistrictCatalog {
    pub fn len(&self) -> usize {
        self.districts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.districts.is_empty()
    }

    /// Price every district in parallel; order is preserved.
    pub fn price<C: DistrictCost>(&mut self, cost: &C, source: &str) -> Result<()> {
        self.costs = self.districts.par_iter().map(|d| cost.cost(d)).collect::<Result<Vec<_>>>()?;
        if let Some(i) = self.costs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("cost of district {:?}", self.districts[i])));
        }
        self.source = source.to_string();
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub solution: Solution,
    pub cost: f64,
    pub nodes: u64,
}

/// Minimum-cost selection of `k` disjoint catalog districts covering every
/// unit, by depth-first branch and bound on the lowest uncovered unit.
pub fn solve_set_partitioning(catalog: &DistrictCatalog, k: usize) -> Result<ExactSolution> {
    let n = catalog.units;
    if n > MAX_UNITS {
        return Err(Error::TooLarge(n, MAX_UNITS));
    }
    if catalog.costs.len() != catalog.districts.len() {
        return Err(Error::Missing("catalog is not priced".into()));
    }
    let masks: Vec<Mask> = catalog.districts.iter().map(|d| d.iter().fold(0, |m, &u| m | bit(u))).collect();
    // amortized per-unit lower bound
    let mut amort = vec![f64::INFINITY; n];
    for (d, members) in catalog.districts.iter().enumerate() {
        let a = catalog.costs[d] / members.len() as f64;
        for &u in members {
            amort[u] = amort[u].min(a);
        }
    }
    if let Some(u) = amort.iter().position(|a| a.is_infinite()) {
        return Err(Error::Infeasible(format!("no catalog district contains unit {u}")));
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (d, members) in catalog.districts.iter().enumerate() {
        by_root[members[0]].push(d);
    }
    for list in &mut by_root {
        list.sort_by(|&a, &b| {
            let (ca, cb) = (
                catalog.costs[a] / catalog.districts[a].len() as f64,
                catalog.costs[b] / catalog.districts[b].len() as f64,
            );
            ca.total_cmp(&cb).then(a.cmp(&b))
        });
    }
    let member_amort: Vec<f64> = catalog.districts.iter().map(|d| d.iter().map(|&u| amort[u]).sum()).collect();
    let min_size = catalog.districts.iter().map(Vec::len).min().unwrap_or(1).max(1);
    let max_size = catalog.districts.iter().map(Vec::len).max().unwrap_or(1);

    struct Bb<'a> {
        k: usize,
        masks: &'a [Mask],
        costs: &'a [f64],
        by_root: &'a [Vec<usize>],
        member_amort: &'a [f64],
        min_size: usize,
        max_size: usize,
        best: f64,
        best_sel: Option<Vec<usize>>,
        sel: Vec<usize>,
        nodes: u64,
    }
    fn rec(b: &mut Bb<'_>, covered: Mask, cost: f64, lb_rest: f64) {
        b.nodes += 1;
        let left = (!covered).count_ones() as usize;
        if left == 0 {
            if b.sel.len() == b.k && cost < b.best {
                b.best = cost;
                b.best_sel = Some(b.sel.clone());
            }
            return;
        }
        let slots = b.k - b.sel.len();
        if slots == 0 || left > slots * b.max_size || left < slots * b.min_size || cost + lb_rest >= b.best {
            return;
        }
        let u = (!covered).trailing_zeros() as usize;
        for &d in &b.by_root[u] {
            if b.masks[d] & covered != 0 {
                continue;
            }
            let c = cost + b.costs[d];
            let lb = lb_rest - b.member_amort[d];
            if c + lb >= b.best {
                continue;
            }
            b.sel.push(d);
            rec(b, covered | b.masks[d], c, lb);
            b.sel.pop();
        }
    }
    let full: Mask = if n == MAX_UNITS { Mask::MAX } else { bit(n) - 1 };
    let mut bb = Bb {
        k,
        masks: &masks,
        costs: &catalog.costs,
        by_root: &by_root,
        member_amort: &member_amort,
        min_size,
        max_size,
        best: f64::INFINITY,
        best_sel: None,
        sel: Vec::new(),
        nodes: 0,
    };
    if k == 0 {
        return Err(Error::validation("k", "must be positive"));
    }
    let lb0: f64 = amort.iter().sum();
    rec(&mut bb, !full, 0.0, lb0);
    let Some(sel) = bb.best_sel else {
        return Err(Error::Infeasible(format!("no cover of {n} units by exactly {k} catalog districts")));
    };
    let mut districts: Vec<Vec<usize>> = sel.iter().map(|&d| catalog.districts[d].clone()).collect();
    districts.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(ExactSolution {
        solution: Solution::from_districts(n, &districts)?,
        cost: bb.best,
        nodes: bb.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::TableCost;
    use crate::geom::gen;
    use crate::partition::{enumerate_partitions, validate_solution};
    use crate::rng;
    use rand::Rng as _;

    fn brute_count(region: &RegionModel, n_l: usize, n_u: usize) -> usize {
        let n = region.len();
        (1u32..1 << n)
            .filter(|m| {
                let members: Vec<usize> = (0..n).filter(|&u| m >> u & 1 == 1).collect();
                (n_l..=n_u).contains(&members.len()) && region.is_connected(&members)
            })
            .count()
    }

    #[test]
    fn enumeration_examples() {
        let path = gen::grid(4, 1, 1.0, 0).unwrap();
        assert_eq!(
            enumerate_districts(&path, 2, 2, 100).unwrap().districts,
            vec![vec![0, 1], vec![1, 2], vec![2, 3]]
        );
        let g = gen::grid(3, 3, 1.0, 0).unwrap();
        let cat = enumerate_districts(&g, 1, 9, 10_000).unwrap();
        assert_eq!(cat.len(), brute_count(&g, 1, 9));
        let mut d = cat.districts.clone();
        d.dedup();
        assert_eq!(d.len(), cat.len());
        assert_eq!(enumerate_districts(&g, 9, 9, 10).unwrap().len(), 1);
        for (w, h, lo, hi) in [(4, 3, 2, 5), (3, 4, 1, 3), (5, 2, 3, 6)] {
            let r = gen::grid(w, h, 1.0, 0).unwrap();
            assert_eq!(enumerate_districts(&r, lo, hi, 100_000).unwrap().len(), brute_count(&r, lo, hi));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = gen::grid(3, 3, 1.0, 0).unwrap();
        let total = brute_count(&g, 1, 9);
        match enumerate_districts(&g, 1, 9, 50) {
            Err(Error::CapExceeded { cap: 50, reached }) => assert!(reached > 50 && reached <= total),
            other => panic!("{other:?}"),
        }
        let big = gen::grid(10, 10, 1.0, 0).unwrap();
        assert!(matches!(enumerate_districts(&big, 20, 30, 1000), Err(Error::CapEstimate { .. })));
    }

    fn priced(region: &RegionModel, n_l: usize, n_u: usize, f: impl Fn(&[usize]) -> f64) -> DistrictCatalog {
        let mut cat = enumerate_districts(region, n_l, n_u, 1_000_000).unwrap();
        let table = TableCost::new(cat.districts.iter().map(|d| (d.clone(), f(d))));
        cat.price(&table, "table").unwrap();
        cat
    }

    #[test]
    fn unique_and_degenerate_covers() {
        let path = gen::grid(6, 1, 1.0, 0).unwrap();
        let cat = priced(&path, 3, 3, |d| d.len() as f64);
        let s = solve_set_partitioning(&cat, 2).unwrap();
        assert_eq!(s.solution.districts(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let g = gen::grid(4, 3, 1.0, 0).unwrap();
        let cat = priced(&g, 3, 5, |_| 2.5);
        let s = solve_set_partitioning(&cat, 3).unwrap();
        assert_eq!(s.cost, 7.5);
        assert!(validate_solution(&s.solution, &g, 3, 5, 3).is_ok());
        assert!(matches!(solve_set_partitioning(&cat, 5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn matches_exhaustive_covers() {
        let mut r = rng::rng(77);
        let g = gen::grid(4, 3, 1.0, 0).unwrap();
        for _ in 0..20 {
            let seed: u64 = r.random();
            let cat = priced(&g, 3, 5, |d| {
                let mut h = rng::rng_from(seed, &[d.iter().fold(0u64, |m, &u| m | 1 << u)]);
                h.random_range(1.0..10.0)
            });
            let table: std::collections::HashMap<&Vec<usize>, f64> = cat.districts.iter().zip(cat.costs.iter().copied()).collect();
            let best = enumerate_partitions(&g, 3, 5, 3)
                .iter()
                .map(|p| p.iter().map(|d| table[d]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let s = solve_set_partitioning(&cat, 3).unwrap();
            assert!((s.cost - best).abs() < 1e-9, "{} vs {best}", s.cost);
            let recomputed: f64 = s.solution.districts().iter().map(|d| table[d]).sum();
            assert!((recomputed - s.cost).abs() < 1e-9);
            assert!(validate_solution(&s.solution, &g, 3, 5, 3).is_ok());
        }
    }
}
