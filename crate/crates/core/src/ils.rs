//! Iterated local search over district partitions.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cost::{DistrictCost, Memo};
use crate::error::{Error, Result};
use crate::geom::RegionModel;
use crate::partition::validate_solution;
use crate::rng::{self, Rng};
use crate::solution::Solution;

/// Default perturbation probability.
pub const P_RM: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    /// Reassign `unit` to district `to`.
    Relocate { unit: usize, to: usize },
    /// Exchange the districts of two units.
    Swap { u: usize, v: usize },
}

/// Members of `d_i` with a neighbour in `d_j`.
pub fn border(region: &RegionModel, solution: &Solution, d_i: usize, d_j: usize) -> Vec<usize> {
    let a = solution.assignment();
    (0..a.len())
        .filter(|&u| a[u] == d_i && region.neighbors(u).iter().any(|&v| a[v] == d_j))
        .collect()
}

fn replaced(members: &[usize], out: usize, inn: Option<usize>) -> Vec<usize> {
    let mut m: Vec<usize> = members.iter().copied().filter(|&x| x != out).collect();
    if let Some(x) = inn {
        let pos = m.partition_point(|&y| y < x);
        m.insert(pos, x);
    }
    m
}

fn connected(region: &RegionModel, members: &[usize]) -> bool {
    region.is_connected(members)
}

/// Size- and connectivity-preserving relocations and swaps between two districts.
pub fn feasible_moves(region: &RegionModel, solution: &Solution, d_i: usize, d_j: usize, n_l: usize, n_u: usize) -> Vec<Move> {
    let districts = solution.districts();
    moves_between(region, &districts, solution, d_i, d_j, n_l, n_u)
}

fn moves_between(
    region: &RegionModel,
    districts: &[Vec<usize>],
    solution: &Solution,
    d_i: usize,
    d_j: usize,
    n_l: usize,
    n_u: usize,
) -> Vec<Move> {
    let b_ij = border(region, solution, d_i, d_j);
    let b_ji = border(region, solution, d_j, d_i);
    let (mi, mj) = (&districts[d_i], &districts[d_j]);
    let mut out = Vec::new();
    // units whose removal keeps the source district connected
    let removable = |m: &[usize], u: usize| m.len() > 1 && connected(region, &replaced(m, u, None));
    if mi.len() > n_l && mj.len() < n_u {
        for &u in &b_ij {
            if removable(mi, u) {
                out.push(Move::Relocate { unit: u, to: d_j });
            }
        }
    }
    if mj.len() > n_l && mi.len() < n_u {
        for &v in &b_ji {
            if removable(mj, v) {
                out.push(Move::Relocate { unit: v, to: d_i });
            }
        }
    }
    for &u in &b_ij {
        for &v in &b_ji {
            if connected(region, &replaced(mi, u, Some(v))) && connected(region, &replaced(mj, v, Some(u))) {
                out.push(Move::Swap { u, v });
            }
        }
    }
    out
}

/// Record needed to undo an applied move.
#[derive(Debug, Clone)]
pub struct Undo {
    changed: [(usize, Vec<usize>, f64); 2],
    units: [(usize, usize); 2],
}

/// Current partition with per-district members and cached costs.
pub struct SearchState<'a, C: DistrictCost> {
    region: &'a RegionModel,
    cost: Memo<&'a C>,
    n_l: usize,
    n_u: usize,
    solution: Solution,
    members: Vec<Vec<usize>>,
    costs: Vec<f64>,
}

impl<'a, C: DistrictCost> SearchState<'a, C> {
    pub fn new(region: &'a RegionModel, cost: &'a C, solution: Solution, n_l: usize, n_u: usize) -> Result<Self> {
        validate_solution(&solution, region, n_l, n_u, solution.k()).into_result()?;
        let cost = Memo::new(cost);
        let members = solution.districts();
        let costs = members.iter().map(|m| cost.cost(m)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            region,
            cost,
            n_l,
            n_u,
            solution,
            members,
            costs,
        })
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn district_costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    /// Unordered pairs of districts sharing an edge, `i < j`.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let a = self.solution.assignment();
        let mut pairs: Vec<(usize, usize)> = self
            .region
            .edges()
            .into_iter()
            .filter(|[u, v]| a[*u] != a[*v])
            .map(|[u, v]| (a[u].min(a[v]), a[u].max(a[v])))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    fn pair_adjacent(&self, i: usize, j: usize) -> bool {
        let a = self.solution.assignment();
        self.members[i].iter().any(|&u| self.region.neighbors(u).iter().any(|&v| a[v] == j))
    }

    pub fn feasible_moves(&self, i: usize, j: usize) -> Vec<Move> {
        moves_between(self.region, &self.members, &self.solution, i, j, self.n_l, self.n_u)
    }

    /// Districts touched by a move and their members afterwards.
    fn after(&self, mv: Move) -> [(usize, Vec<usize>); 2] {
        let a = self.solution.assignment();
        match mv {
            Move::Relocate { unit, to } => {
                let from = a[unit];
                [
                    (from, replaced(&self.members[from], unit, None)),
                    (to, replaced(&self.members[to], usize::MAX, Some(unit))),
                ]
            }
            Move::Swap { u, v } => {
                let (du, dv) = (a[u], a[v]);
                [
                    (du, replaced(&self.members[du], u, Some(v))),
                    (dv, replaced(&self.members[dv], v, Some(u))),
                ]
            }
        }
    }

    /// Whether a move is still admissible in the current state.
    pub fn is_feasible(&self, mv: Move) -> bool {
        let a = self.solution.assignment();
        let ok_units = match mv {
            Move::Relocate { unit, to } => {
                unit < a.len() && to < self.members.len() && a[unit] != to && self.region.neighbors(unit).iter().any(|&v| a[v] == to)
            }
            Move::Swap { u, v } => {
                u < a.len()
                    && v < a.len()
                    && a[u] != a[v]
                    && self.region.neighbors(u).iter().any(|&w| a[w] == a[v])
                    && self.region.neighbors(v).iter().any(|&w| a[w] == a[u])
            }
        };
        ok_units
            && self
                .after(mv)
                .iter()
                .all(|(_, m)| m.len() >= self.n_l && m.len() <= self.n_u && connected(self.region, m))
    }

    /// Cost change of a move: touched districts after minus before.
    pub fn delta(&self, mv: Move) -> Result<f64> {
        let [(d1, m1), (d2, m2)] = self.after(mv);
        Ok(self.cost.cost(&m1)? + self.cost.cost(&m2)? - (self.costs[d1] + self.costs[d2]))
    }

    pub fn apply(&mut self, mv: Move) -> Result<Undo> {
        let [(d1, m1), (d2, m2)] = self.after(mv);
        let (c1, c2) = (self.cost.cost(&m1)?, self.cost.cost(&m2)?);
        let a = self.solution.assignment();
        let units = match mv {
            Move::Relocate { unit, .. } => [(unit, a[unit]), (unit, a[unit])],
            Move::Swap { u, v } => [(u, a[u]), (v, a[v])],
        };
        match mv {
            Move::Relocate { unit, to } => self.solution.set(unit, to),
            Move::Swap { u, v } => {
                let (du, dv) = (a[u], a[v]);
                self.solution.set(u, dv);
                self.solution.set(v, du);
            }
        }
        let old1 = (
            d1,
            std::mem::replace(&mut self.members[d1], m1),
            std::mem::replace(&mut self.costs[d1], c1),
        );
        let old2 = (
            d2,
            std::mem::replace(&mut self.members[d2], m2),
            std::mem::replace(&mut self.costs[d2], c2),
        );
        Ok(Undo {
            changed: [old1, old2],
            units,
        })
    }

    pub fn revert(&mut self, undo: Undo) {
        for (u, d) in undo.units.into_iter().rev() {
            self.solution.set(u, d);
        }
        for (d, m, c) in undo.changed {
            self.members[d] = m;
            self.costs[d] = c;
        }
    }

    /// Best-improvement per district pair, pairs swept in random order until
    /// a full sweep finds nothing; returns the number of applied moves.
    pub fn local_search(&mut self, rng: &mut Rng) -> Result<usize> {
        let mut applied = 0;
        loop {
            let mut improved = false;
            let mut pairs = self.adjacent_pairs();
            pairs.shuffle(rng);
            for (i, j) in pairs {
                if !self.pair_adjacent(i, j) {
                    continue;
                }
                let before = self.costs[i] + self.costs[j];
                let tol = 1e-12 * before.abs().max(1.0);
                let mut best: Option<(Move, f64)> = None;
                for mv in self.feasible_moves(i, j) {
                    let d = self.delta(mv)?;
                    if d < -tol && best.is_none_or(|(_, b)| d < b) {
                        best = Some((mv, d));
                    }
                }
                if let Some((mv, _)) = best {
                    self.apply(mv)?;
                    applied += 1;
                    improved = true;
                }
            }
            if !improved {
                return Ok(applied);
            }
        }
    }

    /// Apply each feasible move with probability `p_rm`, pairs in random
    /// order, re-checking feasibility before every application. Returns
    /// `(applied, available)`.
    pub fn perturb(&mut self, p_rm: f64, rng: &mut Rng) -> Result<(usize, usize)> {
        if !(0.0..1.0).contains(&p_rm) {
            return Err(Error::validation("p_rm", format!("must lie in [0, 1), got {p_rm}")));
        }
        let mut pairs = self.adjacent_pairs();
        pairs.shuffle(rng);
        let (mut applied, mut available) = (0, 0);
        for (i, j) in pairs {
            let moves = self.feasible_moves(i, j);
            available += moves.len();
            let mut touched = false;
            for mv in moves {
                if rng.random_bool(p_rm) && (!touched || self.is_feasible(mv)) {
                    self.apply(mv)?;
                    applied += 1;
                    touched = true;
                }
            }
        }
        Ok((applied, available))
    }
}

/// Outer-loop limits; whichever is reached first stops the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlsBudget {
    pub iterations: Option<usize>,
    pub seconds: Option<f64>,
}

impl IlsBudget {
    pub fn iterations(n: usize) -> Self {
        Self {
            iterations: Some(n),
            seconds: None,
        }
    }

    pub fn seconds(s: f64) -> Self {
        Self {
            iterations: None,
            seconds: Some(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    /// Best cost found so far.
    pub oracle_cost: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchLog {
    pub entries: Vec<LogEntry>,
}

impl SearchLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,oracle_cost,seconds\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{:.6}", e.iter, e.oracle_cost, e.seconds);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct IlsOutcome {
    pub solution: Solution,
    pub cost: f64,
    pub iterations: usize,
    pub log: SearchLog,
}

/// Local search from `initial`, then perturb / local search rounds from the
/// current solution, keeping the best.
pub fn solve_ils<C: DistrictCost>(
    region: &RegionModel,
    cost: &C,
    initial: Solution,
    n_l: usize,
    n_u: usize,
    p_rm: f64,
    seed: u64,
    budget: IlsBudget,
) -> Result<IlsOutcome> {
    if budget.iterations.is_none() && budget.seconds.is_none() {
        return Err(Error::validation("budget", "set an iteration or time budget"));
    }
    let start = Instant::now();
    let mut rng = rng::rng_from(seed, &[rng::tag::ILS]);
    let mut state = SearchState::new(region, cost, initial, n_l, n_u)?;
    state.local_search(&mut rng)?;
    let mut best = state.solution().clone();
    let mut best_cost = state.total_cost();
    let mut log = SearchLog::default();
    log.entries.push(LogEntry {
        iter: 0,
        oracle_cost: best_cost,
        seconds: start.elapsed().as_secs_f64(),
    });
    let mut iter = 0;
    loop {
        if budget.iterations.is_some_and(|n| iter >= n) || budget.seconds.is_some_and(|s| start.elapsed().as_secs_f64() >= s) {
            break;
        }
        iter += 1;
        state.perturb(p_rm, &mut rng)?;
        state.local_search(&mut rng)?;
        let c = state.total_cost();
        if c < best_cost {
            best_cost = c;
            best = state.solution().clone();
        }
        log.entries.push(LogEntry {
            iter,
            oracle_cost: best_cost,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(IlsOutcome {
        solution: best,
        cost: best_cost,
        iterations: iter,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::FnCost;
    use crate::geom::gen;
    use crate::partition::{enumerate_partitions, initial_solution, InitBudget, InstanceConfig};

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    const E: usize = 4;
    const F: usize = 5;

    fn six_units() -> (RegionModel, Solution) {
        let r = gen::from_graph(
            6,
            &[[A, B], [B, C], [A, C], [A, D], [B, D], [B, E], [C, E], [F, E], [F, C], [D, E]],
            0,
        )
        .unwrap();
        let s = Solution::new(3, vec![0, 0, 0, 1, 1, 2]).unwrap();
        (r, s)
    }

    #[test]
    fn six_unit_borders_and_moves() {
        let (r, s) = six_units();
        assert_eq!(border(&r, &s, 0, 1), vec![A, B, C]);
        assert_eq!(border(&r, &s, 1, 0), vec![D, E]);
        let moves = feasible_moves(&r, &s, 0, 1, 1, 5);
        let mut reloc: Vec<(usize, usize)> = moves
            .iter()
            .filter_map(|m| match *m {
                Move::Relocate { unit, to } => Some((unit, to)),
                _ => None,
            })
            .collect();
        reloc.sort_unstable();
        assert_eq!(reloc, vec![(A, 1), (B, 1), (C, 1), (D, 0), (E, 0)]);
        assert!(moves.contains(&Move::Swap { u: C, v: D }));
    }

    #[test]
    fn no_border_without_shared_edge() {
        let r = gen::grid(3, 1, 1.0, 0).unwrap();
        let s = Solution::new(3, vec![0, 1, 2]).unwrap();
        assert!(border(&r, &s, 0, 2).is_empty());
        assert!(feasible_moves(&r, &s, 0, 2, 1, 3).is_empty());
    }

    #[test]
    fn bounds_and_articulation_exclude_moves() {
        let r = gen::grid(4, 1, 1.0, 0).unwrap();
        let s = Solution::new(2, vec![0, 0, 1, 1]).unwrap();
        // both at the lower bound: only swaps, and none keep the districts connected
        assert!(feasible_moves(&r, &s, 0, 1, 2, 3).is_empty());
        let s = Solution::new(2, vec![0, 0, 0, 1]).unwrap();
        let m = feasible_moves(&r, &s, 0, 1, 1, 3);
        assert_eq!(m, vec![Move::Relocate { unit: 2, to: 1 }]);
        // unit 1 holds 0 and 2 together
        let r = gen::from_graph(4, &[[0, 1], [1, 2], [1, 3], [0, 3]], 0).unwrap();
        let s = Solution::new(2, vec![0, 0, 0, 1]).unwrap();
        let m = feasible_moves(&r, &s, 0, 1, 1, 3);
        assert_eq!(m, vec![Move::Relocate { unit: 0, to: 1 }, Move::Swap { u: 0, v: 3 }]);
    }

    fn grid_state_cost(m: &[usize]) -> Result<f64> {
        // convex in size, favouring low unit ids
        Ok(m.iter().map(|&u| 1.0 + 0.01 * u as f64).sum::<f64>() + (m.len() as f64 - 3.0).powi(2))
    }

    #[test]
    fn apply_revert_and_delta_are_exact() {
        let r = gen::grid(4, 3, 1.0, 0).unwrap();
        let cfg = InstanceConfig::custom(&r, 2, 5, 4).unwrap();
        let cost = FnCost(grid_state_cost);
        let mut rng = rng::rng(5);
        for seed in 0..10 {
            let s = initial_solution(&r, &cfg, seed, InitBudget::default()).unwrap();
            let mut st = SearchState::new(&r, &cost, s, 2, 5).unwrap();
            for (i, j) in st.adjacent_pairs() {
                for mv in st.feasible_moves(i, j) {
                    let before_sol = st.solution().clone();
                    let before_costs = st.district_costs().to_vec();
                    let before_members = st.members.clone();
                    let d = st.delta(mv).unwrap();
                    let total = st.total_cost();
                    let undo = st.apply(mv).unwrap();
                    assert!(validate_solution(st.solution(), &r, 2, 5, 4).is_ok());
                    let fresh: Vec<f64> = st.solution().districts().iter().map(|m| grid_state_cost(m).unwrap()).collect();
                    assert_eq!(fresh, st.district_costs());
                    assert_eq!(st.solution().districts(), st.members);
                    assert!((st.total_cost() - total - d).abs() < 1e-12);
                    st.revert(undo);
                    assert_eq!(st.solution(), &before_sol);
                    assert_eq!(st.district_costs(), &before_costs[..]);
                    assert_eq!(st.members, before_members);
                }
            }
            st.local_search(&mut rng).unwrap();
        }
    }

    #[test]
    fn local_search_fixed_point_and_monotone() {
        let r = gen::grid(4, 3, 1.0, 0).unwrap();
        let cfg = InstanceConfig::custom(&r, 2, 5, 4).unwrap();
        let cost = FnCost(grid_state_cost);
        let mut rng = rng::rng(1);
        let s = initial_solution(&r, &cfg, 0, InitBudget::default()).unwrap();
        let mut st = SearchState::new(&r, &cost, s, 2, 5).unwrap();
        let c0 = st.total_cost();
        st.local_search(&mut rng).unwrap();
        assert!(st.total_cost() <= c0);
        let opt = st.solution().clone();
        assert_eq!(st.local_search(&mut rng).unwrap(), 0);
        assert_eq!(st.solution(), &opt);
    }

    #[test]
    fn planted_swap_is_found() {
        // two columns; cost rewards keeping even ids on the left
        let r = gen::grid(2, 3, 1.0, 0).unwrap();
        let cost = FnCost(|m: &[usize]| Ok(m.iter().map(|&u| if (u % 2 == 0) == m.contains(&0) { 0.0 } else { 1.0 }).sum()));
        let s = Solution::new(2, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let mut st = SearchState::new(&r, &cost, s, 3, 3).unwrap();
        assert_eq!(st.total_cost(), 2.0);
        st.local_search(&mut rng::rng(0)).unwrap();
        assert_eq!(st.total_cost(), 0.0);
    }

    #[test]
    fn perturbation_rate_and_feasibility() {
        let r = gen::grid(6, 10, 1.0, 0).unwrap();
        let (cfg, r) = crate::partition::make_instance(&r, 6, crate::partition::DepotTag::C, 0).unwrap();
        let cost = FnCost(|m: &[usize]| Ok(m.len() as f64));
        let s = initial_solution(&r, &cfg, 0, InitBudget::default()).unwrap();
        let mut rng = rng::rng(9);
        let (mut applied, mut available) = (0usize, 0usize);
        for _ in 0..2000 {
            let mut st = SearchState::new(&r, &cost, s.clone(), cfg.n_l, cfg.n_u).unwrap();
            let (a, n) = st.perturb(P_RM, &mut rng).unwrap();
            applied += a;
            available += n;
            assert!(validate_solution(st.solution(), &r, cfg.n_l, cfg.n_u, cfg.k).is_ok());
        }
        let rate = applied as f64 / available as f64;
        assert!((0.010..=0.020).contains(&rate), "{rate}");
        let mut st = SearchState::new(&r, &cost, s.clone(), cfg.n_l, cfg.n_u).unwrap();
        assert_eq!(st.perturb(0.0, &mut rng).unwrap().0, 0);
        assert_eq!(st.solution(), &s);
    }

    #[test]
    fn ils_log_and_zero_budget() {
        let r = gen::grid(4, 3, 1.0, 0).unwrap();
        let cfg = InstanceConfig::custom(&r, 2, 5, 4).unwrap();
        let cost = FnCost(grid_state_cost);
        let s = initial_solution(&r, &cfg, 0, InitBudget::default()).unwrap();
        let zero = solve_ils(&r, &cost, s.clone(), 2, 5, P_RM, 3, IlsBudget::iterations(0)).unwrap();
        let mut st = SearchState::new(&r, &cost, s.clone(), 2, 5).unwrap();
        st.local_search(&mut rng::rng_from(3, &[rng::tag::ILS])).unwrap();
        assert_eq!(&zero.solution, st.solution());
        assert_eq!(zero.log.entries.len(), 1);
        let run = solve_ils(&r, &cost, s.clone(), 2, 5, 0.2, 3, IlsBudget::iterations(30)).unwrap();
        assert!(run.log.entries.windows(2).all(|w| w[1].oracle_cost <= w[0].oracle_cost));
        assert!(run.log.to_csv().starts_with("iter,oracle_cost,seconds\n0,"));
        let again = solve_ils(&r, &cost, s, 2, 5, 0.2, 3, IlsBudget::iterations(30)).unwrap();
        assert_eq!(again.solution, run.solution);
    }

    #[test]
    fn ils_reaches_enumerated_optimum() {
        let r = gen::grid(4, 3, 1.0, 0).unwrap();
        let cost = FnCost(grid_state_cost);
        let opt = enumerate_partitions(&r, 2, 5, 4)
            .iter()
            .map(|p| p.iter().map(|m| grid_state_cost(m).unwrap()).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let cfg = InstanceConfig::custom(&r, 2, 5, 4).unwrap();
        let mut hits = 0;
        for seed in 0..20 {
            let s = initial_solution(&r, &cfg, seed, InitBudget::default()).unwrap();
            let out = solve_ils(&r, &cost, s, 2, 5, P_RM, seed, IlsBudget::iterations(100)).unwrap();
            assert!(out.cost >= opt - 1e-9);
            if out.cost <= opt + 1e-9 {
                hits += 1;
            }
        }
        assert!(hits >= 19, "{hits}/20");
    }
}
