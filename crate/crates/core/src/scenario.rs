//! Spatial Poisson demand scenarios per basic unit.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::RegionModel;
use crate::rng::{self, Rng};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn tag(self) -> u64 {
        match self {
            Split::Train => 0x7472,
            Split::Test => 0x7465,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::validation("split", format!("expected train|test, got {other:?}"))),
        }
    }
}

/// Seed of the stream that generates scenario `t` of `unit`.
pub fn sub_seed(master: u64, split: Split, unit: usize, t: usize) -> u64 {
    rng::derive_seed(master, &[rng::tag::SCENARIO, split.tag(), unit as u64, t as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub split: Split,
    pub seed: u64,
    pub kappa: f64,
    count: usize,
    /// `per_unit[unit][t]` is the customer list of scenario `t`.
    per_unit: Vec<Vec<Vec<Point>>>,
}

impl ScenarioSet {
    /// Build from explicit points, `per_unit[unit][t]`.
    pub fn from_points(split: Split, seed: u64, kappa: f64, per_unit: Vec<Vec<Vec<Point>>>) -> Result<Self> {
        let count = per_unit.first().map_or(0, Vec::len);
        if let Some(u) = per_unit.iter().position(|s| s.len() != count) {
            return Err(Error::validation(
                "scenarios",
                format!("unit {u} has {} scenarios, expected {count}", per_unit[u].len()),
            ));
        }
        Ok(Self {
            split,
            seed,
            kappa,
            count,
            per_unit,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn units(&self) -> usize {
        self.per_unit.len()
    }

    pub fn unit_scenario(&self, unit: usize, t: usize) -> &[Point] {
        &self.per_unit[unit][t]
    }

    pub fn unit_scenarios(&self, unit: usize) -> &[Vec<Point>] {
        &self.per_unit[unit]
    }

    /// Customers of a district in scenario `t`: member lists concatenated in member order.
    pub fn district_scenario(&self, members: &[usize], t: usize) -> Result<Vec<Point>> {
        if t >= self.count {
            return Err(Error::validation(
                "scenario index",
                format!("{t} out of range for {} scenarios", self.count),
            ));
        }
        let mut out = Vec::new();
        for &m in members {
            let unit = self.per_unit.get(m).ok_or(Error::UnknownUnit(m))?;
            out.extend_from_slice(&unit[t]);
        }
        Ok(out)
    }

    /// Check that the set fits `region` and every point lies in its unit.
    pub fn validate_against(&self, region: &RegionModel) -> Result<()> {
        if self.per_unit.len() != region.len() {
            return Err(Error::validation(
                "scenario set",
                format!("{} units but region has {}", self.per_unit.len(), region.len()),
            ));
        }
        for (u, scen) in self.per_unit.iter().enumerate() {
            if scen.len() != self.count {
                return Err(Error::validation("scenario set", format!("unit {u} has {} scenarios", scen.len())));
            }
            let poly = &region.unit(u).boundary;
            for pts in scen {
                if let Some(p) = pts.iter().find(|p| !poly.contains(**p)) {
                    return Err(Error::validation(
                        "scenario set",
                        format!("point ({}, {}) outside unit {u}", p.x, p.y),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sample `count` scenarios per unit: Poisson(kappa * population) requests,
/// each uniform inside the unit polygon.
pub fn sample_scenarios(region: &RegionModel, kappa: f64, count: usize, seed: u64, split: Split) -> Result<ScenarioSet> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::validation("kappa", format!("must be positive, got {kappa}")));
    }
    if count == 0 {
        return Err(Error::validation("scenario count", "must be at least 1"));
    }
    let per_unit = region
        .units()
        .iter()
        .map(|unit| {
            let poisson = Poisson::new(kappa * unit.population).map_err(|e| Error::validation("poisson mean", e.to_string()))?;
            Ok((0..count)
                .map(|t| {
                    let mut rng = Rng::seed_from_u64(sub_seed(seed, split, unit.id, t));
                    let n = poisson.sample(&mut rng) as usize;
                    (0..n).map(|_| unit.boundary.sample_point(&mut rng)).collect()
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioSet {
        split,
        seed,
        kappa,
        count,
        per_unit,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    split: Split,
    seed: u64,
    kappa: f64,
    count: usize,
    units: usize,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

#[derive(Serialize, Deserialize)]
struct Record {
    split: Split,
    unit: usize,
    t: usize,
    points: Vec<Point>,
}

impl ScenarioSet {
    /// JSON lines: a header line, then one record per `(unit, t)`.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = HeaderLine {
            header: Header {
                split: self.split,
                seed: self.seed,
                kappa: self.kappa,
                count: self.count,
                units: self.per_unit.len(),
            },
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (unit, scen) in self.per_unit.iter().enumerate() {
            for (t, pts) in scen.iter().enumerate() {
                let rec = Record {
                    split: self.split,
                    unit,
                    t,
                    points: pts.clone(),
                };
                serde_json::to_writer(&mut w, &rec)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R, source_name: &str) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines.next().ok_or(Error::Empty("scenario file"))?;
        let first = first?;
        let header: HeaderLine = serde_json::from_str(&first).map_err(|e| Error::parse(source_name, &e))?;
        let h = header.header;
        let mut per_unit = vec![vec![None::<Vec<Point>>; h.count]; h.units];
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| {
                let mut err = Error::parse(source_name, &e);
                if let Error::Parse { line, .. } = &mut err {
                    *line = idx + 1;
                }
                err
            })?;
            if rec.split != h.split || rec.unit >= h.units || rec.t >= h.count {
                return Err(Error::validation(
                    "scenario record",
                    format!("line {}: inconsistent with header", idx + 1),
                ));
            }
            per_unit[rec.unit][rec.t] = Some(rec.points);
        }
        let per_unit = per_unit
            .into_iter()
            .enumerate()
            .map(|(u, scen)| {
                scen.into_iter()
                    .enumerate()
                    .map(|(t, s)| s.ok_or_else(|| Error::Missing(format!("scenario record unit {u} t {t}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioSet {
            split: h.split,
            seed: h.seed,
            kappa: h.kappa,
            count: h.count,
            per_unit,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(f, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::gen;

    #[test]
    fn mean_request_count_matches_kappa_population() {
        let region = gen::grid(1, 1, 1.0, 0).unwrap();
        let pop = region.unit(0).population;
        // four requests per average unit at t = 3
        let kappa = 4.0 / pop;
        let set = sample_scenarios(&region, kappa, 10_000, 5, Split::Train).unwrap();
        let mean = (0..10_000).map(|t| set.unit_scenario(0, t).len()).sum::<usize>() as f64 / 10_000.0;
        assert!((mean - 4.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn kappa_targets_96_requests_per_district() {
        // t = 3: an average unit of 8000 inhabitants gets 32 requests, a
        // district of t such units gets 96
        let t = 3.0;
        let kappa: f64 = 96.0 / (8000.0 * t);
        assert!((kappa * 8000.0 - 32.0).abs() < 1e-12);
        assert!((kappa * 8000.0 * t - 96.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_split_dependent() {
        let region = gen::grid(3, 2, 1.0, 0).unwrap();
        let a = sample_scenarios(&region, 0.001, 1, 9, Split::Train).unwrap();
        let b = sample_scenarios(&region, 0.001, 1, 9, Split::Train).unwrap();
        assert_eq!(a, b);
        let c = sample_scenarios(&region, 0.001, 1, 9, Split::Test).unwrap();
        assert_ne!(a.per_unit, c.per_unit);
    }

    #[test]
    fn quadrants_receive_equal_shares() {
        let region = gen::grid(1, 1, 1.0, 0).unwrap();
        let kappa = 1000.0 / region.unit(0).population;
        let set = sample_scenarios(&region, kappa, 100, 3, Split::Train).unwrap();
        let mut quad = [0usize; 4];
        let mut total = 0usize;
        for t in 0..100 {
            for p in set.unit_scenario(0, t) {
                quad[(p.x >= 0.5) as usize + 2 * (p.y >= 0.5) as usize] += 1;
                total += 1;
            }
        }
        assert!(total > 90_000);
        for q in quad {
            let share = q as f64 / total as f64;
            assert!((share - 0.25).abs() < 0.01, "{share}");
        }
    }

    #[test]
    fn district_scenario_concatenates() {
        let region = gen::grid(3, 1, 1.0, 0).unwrap();
        let set = sample_scenarios(&region, 0.001, 4, 1, Split::Test).unwrap();
        let single = set.district_scenario(&[1], 2).unwrap();
        assert_eq!(single, set.unit_scenario(1, 2));
        let all = set.district_scenario(&[0, 1, 2], 2).unwrap();
        let total: usize = (0..3).map(|u| set.unit_scenario(u, 2).len()).sum();
        assert_eq!(all.len(), total);
        assert!(set.district_scenario(&[5], 0).is_err());
        assert!(set.district_scenario(&[0], 4).is_err());
    }

    #[test]
    fn points_lie_in_their_units_and_file_round_trips() {
        let region = gen::grid(3, 3, 1.5, 2).unwrap();
        let set = sample_scenarios(&region, 0.002, 5, 77, Split::Train).unwrap();
        set.validate_against(&region).unwrap();
        let mut buf = Vec::new();
        set.write(&mut buf).unwrap();
        let back = ScenarioSet::read(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn train_and_test_seeds_are_disjoint() {
        use std::collections::HashSet;
        let train: HashSet<u64> = (0..60)
            .flat_map(|u| (0..50).map(move |t| sub_seed(1, Split::Train, u, t)))
            .collect();
        let test: HashSet<u64> = (0..60).flat_map(|u| (0..50).map(move |t| sub_seed(1, Split::Test, u, t))).collect();
        assert_eq!(train.len(), 3000);
        assert!(train.is_disjoint(&test));
    }

    #[test]
    fn rejects_bad_parameters() {
        let region = gen::grid(1, 1, 1.0, 0).unwrap();
        assert!(sample_scenarios(&region, 0.0, 1, 0, Split::Train).is_err());
        assert!(sample_scenarios(&region, 0.1, 0, 0, Split::Train).is_err());
    }
}
