//! Depot-anchored tour lengths: a nearest-neighbour + 2-opt + Or-opt
//! heuristic, and an exhaustive oracle for small customer sets.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::real::Real;
use crate::rng;

/// Largest customer count accepted by [`tsp_exact`].
pub const EXACT_LIMIT: usize = 10;
/// Above this many customers, 2-opt and Or-opt only try neighbour-list candidates.
pub const FULL_SCAN_LIMIT: usize = 40;
/// Neighbour list length for large instances.
pub const NEIGHBORS: usize = 16;

/// A closed tour from the depot through every customer and back.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour<F> {
    /// Customer indices in visiting order; the depot is implicit at both ends.
    pub order: Vec<usize>,
    pub length: F,
}

impl<F: Real> Tour<F> {
    /// Depot to first customer plus last customer to depot.
    pub fn line_haul(&self, depot: Point2<F>, customers: &[Point2<F>]) -> F {
        match (self.order.first(), self.order.last()) {
            (Some(&f), Some(&l)) => depot.distance(customers[f]) + customers[l].distance(depot),
            _ => F::zero(),
        }
    }
}

/// Length of the closed tour visiting `customers` in `order`.
pub fn tour_length<F: Real>(depot: Point2<F>, customers: &[Point2<F>], order: &[usize]) -> F {
    let mut prev = depot;
    let mut len = F::zero();
    for &i in order {
        len += prev.distance(customers[i]);
        prev = customers[i];
    }
    len + prev.distance(depot)
}

struct Dist<F> {
    n: usize,
    d: Vec<F>,
}

impl<F: Real> Dist<F> {
    fn new(nodes: &[Point2<F>]) -> Self {
        let n = nodes.len();
        let mut d = vec![F::zero(); n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = nodes[i].distance(nodes[j]);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    #[inline(always)]
    fn get(&self, i: usize, j: usize) -> F {
        self.d[i * self.n + j]
    }
}

/// Heuristic tour: nearest-neighbour construction from the depot, then
/// first-improvement 2-opt and Or-opt (segments of 1 to 3 customers) until
/// neither finds an improving move. `seed` only breaks construction ties.
pub fn tsp_cost<F: Real>(depot: Point2<F>, customers: &[Point2<F>], seed: u64) -> Tour<F> {
    let m = customers.len();
    if m <= 3 {
        // every order of at most three customers is optimal up to direction
        let order: Vec<usize> = if m == 3 {
            best_of_three(depot, customers)
        } else {
            (0..m).collect()
        };
        let length = tour_length(depot, customers, &order);
        return Tour { order, length };
    }
    let mut nodes = Vec::with_capacity(m + 1);
    nodes.push(depot);
    nodes.extend_from_slice(customers);
    let dist = Dist::new(&nodes);
    let n = m + 1;

    let scale = nodes.iter().map(|p| p.x.abs().max(p.y.abs())).fold(F::one(), F::max);
    let eps = F::lit(1e-10).max(F::epsilon() * scale * F::lit(64.0));

    let mut tour = nearest_neighbor(&dist, seed);
    let neigh = if m > FULL_SCAN_LIMIT {
        Some(neighbor_lists(&dist, NEIGHBORS))
    } else {
        None
    };
    let mut pos = vec![0usize; n];
    loop {
        for (i, &v) in tour.iter().enumerate() {
            pos[v] = i;
        }
        let a = match &neigh {
            None => two_opt_full(&dist, &mut tour, eps),
            Some(nl) => two_opt_neighbors(&dist, &mut tour, &mut pos, nl, eps),
        };
        let b = or_opt(&dist, &mut tour, neigh.as_deref(), eps);
        if !a && !b {
            break;
        }
    }
    let order: Vec<usize> = tour[1..].iter().map(|&v| v - 1).collect();
    let length = tour_length(depot, customers, &order);
    Tour { order, length }
}

fn best_of_three<F: Real>(depot: Point2<F>, c: &[Point2<F>]) -> Vec<usize> {
    [[0, 1, 2], [0, 2, 1], [1, 0, 2]]
        .into_iter()
        .map(|o| (tour_length(depot, c, &o), o))
        .fold(None, |best: Option<(F, [usize; 3])>, (l, o)| match best {
            Some((bl, _)) if bl <= l => best,
            _ => Some((l, o)),
        })
        .map(|(_, o)| o.to_vec())
        .expect("three candidates")
}

fn nearest_neighbor<F: Real>(dist: &Dist<F>, seed: u64) -> Vec<usize> {
    let n = dist.n;
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(&mut rng::rng(seed));
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    tour.push(0);
    visited[0] = true;
    let mut cur = 0;
    for _ in 1..n {
        let mut best = usize::MAX;
        for v in 1..n {
            if visited[v] {
                continue;
            }
            if best == usize::MAX {
                best = v;
                continue;
            }
            let (dv, db) = (dist.get(cur, v), dist.get(cur, best));
            if dv < db || (dv == db && rank[v] < rank[best]) {
                best = v;
            }
        }
        visited[best] = true;
        tour.push(best);
        cur = best;
    }
    tour
}

fn neighbor_lists<F: Real>(dist: &Dist<F>, k: usize) -> Vec<Vec<usize>> {
    let n = dist.n;
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| dist.get(i, a).partial_cmp(&dist.get(i, b)).unwrap().then(a.cmp(&b)));
            others.truncate(k);
            others
        })
        .collect()
}

/// Exhaustive first-improvement 2-opt sweep; returns whether anything changed.
fn two_opt_full<F: Real>(dist: &Dist<F>, tour: &mut [usize], eps: F) -> bool {
    let n = tour.len();
    let mut any = false;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, e) = (tour[j], tour[(j + 1) % n]);
                let delta = dist.get(a, c) + dist.get(b, e) - dist.get(a, b) - dist.get(c, e);
                if delta < -eps {
                    tour[i + 1..=j].reverse();
                    improved = true;
                    any = true;
                }
            }
        }
    }
    any
}

fn reverse_between(tour: &mut [usize], pos: &mut [usize], p: usize, q: usize) {
    tour[p + 1..=q].reverse();
    for k in p + 1..=q {
        pos[tour[k]] = k;
    }
}

/// 2-opt restricted to neighbour-list candidates (successor and predecessor variants).
fn two_opt_neighbors<F: Real>(dist: &Dist<F>, tour: &mut [usize], pos: &mut [usize], neigh: &[Vec<usize>], eps: F) -> bool {
    let n = tour.len();
    let succ = |t: &[usize], i: usize| t[(i + 1) % n];
    let mut any = false;
    let mut improved = true;
    while improved {
        improved = false;
        for a in 0..n {
            for &c in &neigh[a] {
                let i = pos[a];
                let j = pos[c];
                // successor variant: edges (a, a+) and (c, c+)
                let b = succ(tour, i);
                let e = succ(tour, j);
                let g1 = dist.get(a, b) - dist.get(a, c);
                if g1 > F::zero() && b != c && e != a {
                    let delta = dist.get(b, e) - dist.get(c, e) - g1;
                    if delta < -eps {
                        let (p, q) = if i < j { (i, j) } else { (j, i) };
                        reverse_between(tour, pos, p, q);
                        improved = true;
                        any = true;
                        continue;
                    }
                }
                // predecessor variant: edges (a-, a) and (c-, c)
                let ip = (i + n - 1) % n;
                let jp = (j + n - 1) % n;
                let ap = tour[ip];
                let cp = tour[jp];
                let g2 = dist.get(ap, a) - dist.get(a, c);
                if g2 > F::zero() && ap != c && cp != a {
                    let delta = dist.get(ap, cp) - dist.get(cp, c) - g2;
                    if delta < -eps {
                        let (p, q) = if ip < jp { (ip, jp) } else { (jp, ip) };
                        reverse_between(tour, pos, p, q);
                        improved = true;
                        any = true;
                    }
                }
            }
        }
    }
    any
}

/// First-improvement Or-opt: move a run of 1 to 3 customers elsewhere, in
/// either orientation.
fn or_opt<F: Real>(dist: &Dist<F>, tour: &mut Vec<usize>, neigh: Option<&[Vec<usize>]>, eps: F) -> bool {
    let n = tour.len();
    let mut any = false;
    let mut improved = true;
    let mut pos = vec![0usize; n];
    while improved {
        improved = false;
        'outer: for len in 1..=3usize {
            if len + 1 >= n {
                break;
            }
            for s in 1..=(n - len) {
                let e = s + len - 1;
                let prev = tour[s - 1];
                let next = tour[(e + 1) % n];
                let (h, t) = (tour[s], tour[e]);
                let removal = dist.get(prev, h) + dist.get(t, next) - dist.get(prev, next);
                if removal <= eps {
                    continue;
                }
                let mut best: Option<(F, usize, bool)> = None;
                let mut try_edge = |k: usize, tour: &[usize]| {
                    // edge (tour[k], tour[k+1]) outside the segment and not its neighbours
                    if k + 1 >= s && k <= e {
                        return;
                    }
                    if k == s - 1 {
                        return;
                    }
                    let u = tour[k];
                    let v = tour[(k + 1) % n];
                    let base = dist.get(u, v);
                    let fwd = dist.get(u, h) + dist.get(t, v) - base;
                    let rev = dist.get(u, t) + dist.get(h, v) - base;
                    let (ins, reversed) = if rev < fwd { (rev, true) } else { (fwd, false) };
                    let delta = ins - removal;
                    if delta < -eps && best.is_none_or(|(bd, _, _)| delta < bd) {
                        best = Some((delta, k, reversed));
                    }
                };
                match neigh {
                    None => {
                        for k in 0..n {
                            try_edge(k, tour);
                        }
                    }
                    Some(nl) => {
                        for (i, &v) in tour.iter().enumerate() {
                            pos[v] = i;
                        }
                        for &end in &[h, t] {
                            for &w in &nl[end] {
                                let k = pos[w];
                                try_edge(k, tour);
                                try_edge((k + n - 1) % n, tour);
                            }
                        }
                    }
                }
                if let Some((_, k, reversed)) = best {
                    let mut seg: Vec<usize> = tour[s..=e].to_vec();
                    if reversed {
                        seg.reverse();
                    }
                    let u = tour[k];
                    let mut rest: Vec<usize> = Vec::with_capacity(n);
                    rest.extend(tour[..s].iter().copied());
                    rest.extend(tour[e + 1..].iter().copied());
                    let at = rest.iter().position(|&x| x == u).expect("anchor stays in tour") + 1;
                    rest.splice(at..at, seg);
                    *tour = rest;
                    improved = true;
                    any = true;
                    break 'outer;
                }
            }
        }
    }
    any
}

/// Optimal tour by exhaustive enumeration of customer orders, counting each
/// undirected tour once (first visited index below last visited index).
/// Partial orders already no shorter than the incumbent are cut.
pub fn tsp_exact<F: Real>(depot: Point2<F>, customers: &[Point2<F>]) -> Result<Tour<F>> {
    let m = customers.len();
    if m > EXACT_LIMIT {
        return Err(Error::TooLarge(m, EXACT_LIMIT));
    }
    if m == 0 {
        return Ok(Tour {
            order: Vec::new(),
            length: F::zero(),
        });
    }
    let mut nodes = Vec::with_capacity(m + 1);
    nodes.push(depot);
    nodes.extend_from_slice(customers);
    let dist = Dist::new(&nodes);

    struct Search<'a, F> {
        dist: &'a Dist<F>,
        m: usize,
        used: Vec<bool>,
        path: Vec<usize>,
        best: F,
        best_path: Vec<usize>,
    }
    impl<F: Real> Search<'_, F> {
        fn go(&mut self, last: usize, len: F) {
            if self.path.len() == self.m {
                if self.m > 1 && self.path[0] > self.path[self.m - 1] {
                    return;
                }
                let total = len + self.dist.get(last, 0);
                if total < self.best {
                    self.best = total;
                    self.best_path.clone_from(&self.path);
                }
                return;
            }
            for v in 1..=self.m {
                if self.used[v] {
                    continue;
                }
                let l = len + self.dist.get(last, v);
                if l + self.dist.get(v, 0) >= self.best {
                    continue;
                }
                self.used[v] = true;
                self.path.push(v);
                self.go(v, l);
                self.path.pop();
                self.used[v] = false;
            }
        }
    }
    let mut s = Search {
        dist: &dist,
        m,
        used: vec![false; m + 1],
        path: Vec::with_capacity(m),
        best: F::infinity(),
        best_path: Vec::new(),
    };
    s.go(0, F::zero());
    let order: Vec<usize> = s.best_path.iter().map(|&v| v - 1).collect();
    let length = tour_length(depot, customers, &order);
    Ok(Tour { order, length })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    type P = Point2<f64>;

    fn random_points(rng: &mut crate::rng::Rng, m: usize) -> Vec<P> {
        (0..m)
            .map(|_| P::new(rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0))
            .collect()
    }

    #[test]
    fn trivial_tours() {
        let depot = P::new(0.0, 0.0);
        assert_eq!(tsp_cost(depot, &[], 0).length, 0.0);
        let t = tsp_cost(depot, &[P::new(3.0, 4.0)], 0);
        assert_eq!(t.length, 10.0);
        assert_eq!(tsp_exact(depot, &[P::new(3.0, 4.0)]).unwrap().length, 10.0);
    }

    #[test]
    fn exact_three_customers_is_min_of_three_orders() {
        let mut rng = crate::rng::rng(3);
        let depot = P::new(5.0, 5.0);
        for _ in 0..20 {
            let c = random_points(&mut rng, 3);
            let want = [[0, 1, 2], [0, 2, 1], [1, 0, 2]]
                .iter()
                .map(|o| tour_length(depot, &c, o))
                .fold(f64::INFINITY, f64::min);
            assert!((tsp_exact(depot, &c).unwrap().length - want).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_ray() {
        let depot = P::new(1.0, 1.0);
        let c: Vec<P> = [3.0, 1.5, 7.0, 2.0].iter().map(|&s| P::new(1.0 + s, 1.0 + s)).collect();
        let want = 2.0 * 7.0 * 2f64.sqrt();
        assert!((tsp_exact(depot, &c).unwrap().length - want).abs() < 1e-9);
        assert!((tsp_cost(depot, &c, 1).length - want).abs() < 1e-9);
    }

    #[test]
    fn exact_refuses_large_inputs() {
        let c = vec![P::new(1.0, 1.0); 11];
        assert!(matches!(tsp_exact(P::new(0.0, 0.0), &c), Err(Error::TooLarge(11, 10))));
    }

    #[test]
    fn heuristic_never_beats_exact_and_is_close() {
        let mut rng = crate::rng::rng(17);
        let mut within = 0;
        for _ in 0..200 {
            let m = rng.random_range(0..=9);
            let c = random_points(&mut rng, m);
            let depot = P::new(rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0);
            let h = tsp_cost(depot, &c, 0);
            let e = tsp_exact(depot, &c).unwrap();
            assert!(e.length <= h.length + 1e-9);
            if h.length <= e.length * 1.02 + 1e-12 {
                within += 1;
            }
        }
        assert!(within >= 190, "{within}");
    }

    #[test]
    fn tour_is_a_permutation_with_consistent_length() {
        let mut rng = crate::rng::rng(23);
        for m in [5, 20, 41, 80, 150] {
            let c = random_points(&mut rng, m);
            let depot = P::new(5.0, 5.0);
            let t = tsp_cost(depot, &c, 4);
            let mut seen = t.order.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..m).collect::<Vec<_>>());
            assert!((t.length - tour_length(depot, &c, &t.order)).abs() < 1e-9);
        }
    }

    #[test]
    fn result_is_two_opt_optimal() {
        let mut rng = crate::rng::rng(31);
        for m in [6, 15, 30, 40] {
            let c = random_points(&mut rng, m);
            let depot = P::new(0.0, 0.0);
            let t = tsp_cost(depot, &c, 0);
            let mut nodes = vec![depot];
            nodes.extend(t.order.iter().map(|&i| c[i]));
            let n = nodes.len();
            for i in 0..n - 1 {
                for j in i + 2..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    let d = |a: usize, b: usize| nodes[a].distance(nodes[b % n]);
                    let delta = d(i, j) + d(i + 1, j + 1) - d(i, i + 1) - d(j, j + 1);
                    assert!(delta >= -1e-9, "improving 2-opt move ({i},{j}) of {delta}");
                }
            }
        }
    }

    #[test]
    fn invariant_under_rigid_motion() {
        let mut rng = crate::rng::rng(8);
        let c = random_points(&mut rng, 9);
        let depot = P::new(2.0, 3.0);
        let base = tsp_exact(depot, &c).unwrap().length;
        let moved: Vec<P> = c.iter().map(|p| p.rotate(0.7) + P::new(-4.0, 11.0)).collect();
        let d2 = depot.rotate(0.7) + P::new(-4.0, 11.0);
        assert!((tsp_exact(d2, &moved).unwrap().length - base).abs() < 1e-6);
    }

    #[test]
    fn duplicates_are_allowed() {
        let c = vec![P::new(1.0, 0.0); 6];
        let t = tsp_cost(P::new(0.0, 0.0), &c, 0);
        assert!((t.length - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision_tours() {
        let c: Vec<Point2<f32>> = (0..12)
            .map(|i| Point2::new((i as f32).cos() * 3.0, (i as f32).sin() * 3.0))
            .collect();
        let t = tsp_cost(Point2::new(0.0f32, 0.0), &c, 0);
        assert!(t.length > 0.0 && t.length.is_finite());
    }
}
