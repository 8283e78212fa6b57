//! Sample-average routing costs and the labeled district corpus.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{District, RegionModel};
use crate::rng;
use crate::scenario::{ScenarioSet, Split};
use crate::solution::Solution;
use crate::tsp;
use crate::Point;

/// Mean tour length over all scenarios of `scenarios`, using `tour` for each
/// scenario `(depot, customers, scenario index)`.
pub fn saa_district_cost_with<T>(region: &RegionModel, members: &[usize], scenarios: &ScenarioSet, tour: T) -> Result<f64>
where
    T: Fn(Point, &[Point], usize) -> Result<f64>,
{
    let count = scenarios.count();
    if count == 0 {
        return Err(Error::Empty("scenario set"));
    }
    let depot = region.depot();
    let mut total = 0.0;
    for t in 0..count {
        let pts = scenarios.district_scenario(members, t)?;
        total += tour(depot, &pts, t)?;
    }
    Ok(total / count as f64)
}

/// SAA cost with the heuristic TSP, seeded by scenario index.
pub fn saa_district_cost(region: &RegionModel, members: &[usize], scenarios: &ScenarioSet) -> Result<f64> {
    saa_district_cost_with(region, members, scenarios, |d, pts, t| Ok(tsp::tsp_cost(d, pts, t as u64).length))
}

/// SAA cost with the exhaustive TSP; fails when a scenario has more than ten customers.
pub fn saa_district_cost_exact(region: &RegionModel, members: &[usize], scenarios: &ScenarioSet) -> Result<f64> {
    saa_district_cost_with(region, members, scenarios, |d, pts, _| Ok(tsp::tsp_exact(d, pts)?.length))
}

/// Sum of district costs of a valid partition.
pub fn saa_solution_cost(region: &RegionModel, solution: &Solution, scenarios: &ScenarioSet) -> Result<f64> {
    solution.check_partition(region)?;
    let costs = solution
        .districts()
        .par_iter()
        .map(|m| saa_district_cost(region, m, scenarios))
        .collect::<Result<Vec<_>>>()?;
    Ok(costs.iter().sum())
}

/// Retries without a new district before sampling gives up.
const MAX_STALE_DRAWS: usize = 5_000;

/// Distinct connected districts with size uniform in `[n_l, n_u]`, each grown
/// from a uniform seed unit by adding uniformly chosen frontier units.
pub fn sample_random_districts(region: &RegionModel, n_l: usize, n_u: usize, count: usize, seed: u64) -> Result<Vec<District>> {
    let n = region.len();
    if n_l == 0 || n_l > n_u || n_u > n {
        return Err(Error::validation(
            "size bounds",
            format!("need 1 <= n_L <= n_U <= {n}, got [{n_l}, {n_u}]"),
        ));
    }
    let mut rng = rng::rng_from(seed, &[rng::tag::DISTRICTS]);
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let mut in_set = vec![false; n];
    let mut in_frontier = vec![false; n];
    let mut stale = 0;
    while out.len() < count {
        if stale >= MAX_STALE_DRAWS {
            return Err(Error::InsufficientDistricts {
                achieved: out.len(),
                requested: count,
            });
        }
        let size = rng.random_range(n_l..=n_u);
        let start = rng.random_range(0..n);
        let mut members = vec![start];
        let mut frontier: Vec<usize> = Vec::new();
        in_set[start] = true;
        for &v in region.neighbors(start) {
            if !in_frontier[v] {
                in_frontier[v] = true;
                frontier.push(v);
            }
        }
        while members.len() < size && !frontier.is_empty() {
            let i = rng.random_range(0..frontier.len());
            let u = frontier.swap_remove(i);
            in_frontier[u] = false;
            in_set[u] = true;
            members.push(u);
            for &v in region.neighbors(u) {
                if !in_set[v] && !in_frontier[v] {
                    in_frontier[v] = true;
                    frontier.push(v);
                }
            }
        }
        for &u in members.iter().chain(frontier.iter()) {
            in_set[u] = false;
            in_frontier[u] = false;
        }
        if members.len() < size {
            stale += 1;
            continue;
        }
        members.sort_unstable();
        if seen.insert(members.clone()) {
            out.push(District::from_sorted_unchecked(members));
            stale = 0;
        } else {
            stale += 1;
        }
    }
    Ok(out)
}

/// A district with its SAA cost estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDistrict {
    pub district: District,
    pub cost: f64,
    pub scenario_count: usize,
    pub split: Split,
}

/// Label every district with its SAA cost; work is spread over the current
/// rayon pool and collected in input order.
pub fn label_districts(region: &RegionModel, districts: &[District], scenarios: &ScenarioSet) -> Result<Vec<LabeledDistrict>> {
    districts
        .par_iter()
        .map(|d| {
            Ok(LabeledDistrict {
                district: d.clone(),
                cost: saa_district_cost(region, d.members(), scenarios)?,
                scenario_count: scenarios.count(),
                split: scenarios.split,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Val,
}

/// Provenance of a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub units: usize,
    pub depot: Point,
    pub seed: u64,
    pub scenario_seed: u64,
    pub scenario_split: Split,
    pub scenario_count: usize,
    pub kappa: f64,
    pub n_l: usize,
    pub n_u: usize,
    /// Train and validation shares, e.g. `[8, 1]`.
    pub ratio: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub header: DatasetHeader,
    pub records: Vec<LabeledDistrict>,
    pub roles: Vec<Role>,
}

/// Role of position `i` under a `[train, val]` ratio: within each block of
/// `train + val` records the last `val` are validation.
pub fn role_at(i: usize, ratio: [usize; 2]) -> Role {
    if i % (ratio[0] + ratio[1]) < ratio[0] {
        Role::Train
    } else {
        Role::Val
    }
}

/// Sample, label and split a training corpus.
pub fn build_labeled_dataset(
    region: &RegionModel,
    scenarios: &ScenarioSet,
    n_l: usize,
    n_u: usize,
    count: usize,
    seed: u64,
    ratio: [usize; 2],
) -> Result<LabeledDataset> {
    if ratio[0] == 0 || ratio[0].checked_add(ratio[1]).is_none() {
        return Err(Error::validation("split ratio", format!("{}:{}", ratio[0], ratio[1])));
    }
    scenarios.validate_against(region)?;
    let districts = sample_random_districts(region, n_l, n_u, count, seed)?;
    let records = label_districts(region, &districts, scenarios)?;
    let roles = (0..records.len()).map(|i| role_at(i, ratio)).collect();
    Ok(LabeledDataset {
        header: DatasetHeader {
            units: region.len(),
            depot: region.depot(),
            seed,
            scenario_seed: scenarios.seed,
            scenario_split: scenarios.split,
            scenario_count: scenarios.count(),
            kappa: scenarios.kappa,
            n_l,
            n_u,
            ratio,
        },
        records,
        roles,
    })
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: DatasetHeader,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    members: Vec<usize>,
    cost: f64,
    role: Role,
}

impl LabeledDataset {
    pub fn train(&self) -> impl Iterator<Item = &LabeledDistrict> {
        self.with_role(Role::Train)
    }

    pub fn val(&self) -> impl Iterator<Item = &LabeledDistrict> {
        self.with_role(Role::Val)
    }

    fn with_role(&self, role: Role) -> impl Iterator<Item = &LabeledDistrict> {
        self.records
            .iter()
            .zip(&self.roles)
            .filter(move |(_, r)| **r == role)
            .map(|(d, _)| d)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(
            &mut w,
            &HeaderLine {
                header: self.header.clone(),
            },
        )?;
        w.write_all(b"\n")?;
        for (rec, &role) in self.records.iter().zip(&self.roles) {
            let line = RecordLine {
                members: rec.district.members().to_vec(),
                cost: rec.cost,
                role,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parse; with a region, every record is checked for connectivity and bounds.
    pub fn read<R: BufRead>(r: R, source_name: &str, region: Option<&RegionModel>) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines.next().ok_or(Error::Empty("dataset file"))?;
        let header: HeaderLine = serde_json::from_str(&first?).map_err(|e| Error::parse(source_name, &e))?;
        let header = header.header;
        let mut records = Vec::new();
        let mut roles = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine = serde_json::from_str(&line).map_err(|e| {
                let mut err = Error::parse(source_name, &e);
                if let Error::Parse { line, .. } = &mut err {
                    *line = idx + 1;
                }
                err
            })?;
            if !(rec.cost.is_finite() && rec.cost >= 0.0) {
                return Err(Error::validation("dataset record", format!("line {}: cost {}", idx + 1, rec.cost)));
            }
            let district = match region {
                Some(region) => District::new(region, rec.members)?,
                None => {
                    let mut m = rec.members;
                    m.sort_unstable();
                    m.dedup();
                    District::from_sorted_unchecked(m)
                }
            };
            if district.len() < header.n_l || district.len() > header.n_u {
                return Err(Error::validation(
                    "dataset record",
                    format!("line {}: size {} outside [{}, {}]", idx + 1, district.len(), header.n_l, header.n_u),
                ));
            }
            if !seen.insert(district.members().to_vec()) {
                return Err(Error::validation("dataset record", format!("line {}: duplicate district", idx + 1)));
            }
            records.push(LabeledDistrict {
                district,
                cost: rec.cost,
                scenario_count: header.scenario_count,
                split: header.scenario_split,
            });
            roles.push(rec.role);
        }
        Ok(Self { header, records, roles })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, region: Option<&RegionModel>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(f, &path.display().to_string(), region)
    }
}

/// Pick `count` members of `items` without replacement (helper for evaluation subsets).
pub fn choose_subset<T: Clone>(items: &[T], count: usize, seed: u64) -> Vec<T> {
    let mut rng = rng::rng(seed);
    items.choose_multiple(&mut rng, count.min(items.len())).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::gen;
    use crate::scenario::sample_scenarios;

    fn path_region(n: usize) -> RegionModel {
        gen::grid(n, 1, 1.0, 0).unwrap()
    }

    #[test]
    fn empty_scenarios_cost_zero() {
        let r = path_region(3);
        let s = sample_scenarios(&r, 1e-12, 4, 0, Split::Train).unwrap();
        assert_eq!(saa_district_cost(&r, &[0, 1], &s).unwrap(), 0.0);
    }

    #[test]
    fn single_customer_out_and_back() {
        let r = path_region(3);
        let s = sample_scenarios(&r, 1e-12, 1, 0, Split::Train).unwrap();
        let depot = r.depot();
        let c = Point::new(depot.x + 2.0, depot.y);
        let cost = saa_district_cost_with(&r, &[0], &s, |d, _, _| Ok(tsp::tsp_cost(d, &[c], 0).length)).unwrap();
        assert!((cost - 4.0).abs() < 1e-12);
    }

    #[test]
    fn heuristic_and_exact_saa_agree() {
        let r = gen::grid(3, 3, 1.0, 5).unwrap();
        // about 2.5 requests per unit
        let kappa = 2.5 / 7800.0;
        let s = sample_scenarios(&r, kappa, 20, 9, Split::Train).unwrap();
        let members = [0, 1, 2];
        let exact = saa_district_cost_with(&r, &members, &s, |d, pts, _| {
            // keep scenarios within the exact limit
            let pts = &pts[..pts.len().min(9)];
            Ok(tsp::tsp_exact(d, pts)?.length)
        })
        .unwrap();
        let heur = saa_district_cost_with(&r, &members, &s, |d, pts, t| {
            let pts = &pts[..pts.len().min(9)];
            Ok(tsp::tsp_cost(d, pts, t as u64).length)
        })
        .unwrap();
        assert!(exact <= heur + 1e-9);
        assert!(heur <= exact * 1.02, "{heur} vs {exact}");
    }

    #[test]
    fn solution_cost_is_additive() {
        let r = gen::grid(4, 2, 1.0, 1).unwrap();
        let s = sample_scenarios(&r, 1.0 / 7800.0, 6, 3, Split::Test).unwrap();
        let whole = Solution::new(1, vec![0; 8]).unwrap();
        let full = saa_district_cost(&r, &(0..8).collect::<Vec<_>>(), &s).unwrap();
        assert_eq!(saa_solution_cost(&r, &whole, &s).unwrap(), full);

        let a = Solution::from_districts(8, &[vec![0, 1, 4, 5], vec![2, 3, 6, 7]]).unwrap();
        let b = Solution::from_districts(8, &[vec![0, 1, 4], vec![5, 2, 3, 6, 7]]).unwrap();
        let ca = saa_solution_cost(&r, &a, &s).unwrap();
        let cb = saa_solution_cost(&r, &b, &s).unwrap();
        let da = saa_district_cost(&r, &[0, 1, 4, 5], &s).unwrap() + saa_district_cost(&r, &[2, 3, 6, 7], &s).unwrap();
        let db = saa_district_cost(&r, &[0, 1, 4], &s).unwrap() + saa_district_cost(&r, &[2, 3, 5, 6, 7], &s).unwrap();
        assert!(((ca - cb) - (da - db)).abs() < 1e-9);
        for m in a.districts() {
            assert!(ca >= saa_district_cost(&r, &m, &s).unwrap());
        }
        let broken = Solution::new(2, vec![0, 1, 0, 1, 1, 0, 1, 0]).unwrap();
        assert!(saa_solution_cost(&r, &broken, &s).is_err());
    }

    #[test]
    fn path_pairs_are_the_edges() {
        let r = path_region(5);
        let mut ds = sample_random_districts(&r, 2, 2, 4, 11).unwrap();
        ds.sort();
        let got: Vec<Vec<usize>> = ds.iter().map(|d| d.members().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]);
        match sample_random_districts(&r, 2, 2, 5, 11) {
            Err(Error::InsufficientDistricts { achieved: 4, requested: 5 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singletons_and_connectivity() {
        let r = gen::grid(4, 4, 1.0, 2).unwrap();
        let ds = sample_random_districts(&r, 1, 1, 16, 0).unwrap();
        assert!(ds.iter().all(|d| d.len() == 1));
        let ds = sample_random_districts(&r, 3, 6, 200, 1).unwrap();
        for d in &ds {
            assert!((3..=6).contains(&d.len()));
            assert!(r.is_connected(d.members()));
        }
        let set: HashSet<_> = ds.iter().collect();
        assert_eq!(set.len(), ds.len());
    }

    #[test]
    fn dataset_split_and_determinism() {
        let r = gen::grid(4, 3, 1.0, 2).unwrap();
        let s = sample_scenarios(&r, 1.0 / 7800.0, 3, 4, Split::Train).unwrap();
        let ds = build_labeled_dataset(&r, &s, 2, 4, 9, 7, [8, 1]).unwrap();
        assert_eq!(ds.train().count(), 8);
        assert_eq!(ds.val().count(), 1);
        assert!(ds.records.iter().all(|d| d.cost.is_finite() && d.cost >= 0.0));
        let mut a = Vec::new();
        ds.write(&mut a).unwrap();
        let again = build_labeled_dataset(&r, &s, 2, 4, 9, 7, [8, 1]).unwrap();
        let mut b = Vec::new();
        again.write(&mut b).unwrap();
        assert_eq!(a, b);
        let back = LabeledDataset::read(&a[..], "mem", Some(&r)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn labeling_is_independent_of_thread_count() {
        let r = gen::grid(4, 3, 1.0, 2).unwrap();
        let s = sample_scenarios(&r, 2.0 / 7800.0, 5, 4, Split::Train).unwrap();
        let ds = sample_random_districts(&r, 2, 5, 30, 3).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| label_districts(&r, &ds, &s)).unwrap();
        let b = three.install(|| label_districts(&r, &ds, &s)).unwrap();
        assert_eq!(a, b);
    }
}
