//! Evaluation metrics, experiment manifests and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{reock_compactness, District, RegionModel};
use crate::rng;
use crate::saa::{label_districts, sample_random_districts, LabeledDistrict};
use crate::scenario::{ScenarioSet, Split};
use crate::solution::Solution;
use crate::tsp;

/// `100 (z - z_ref) / z_ref`.
pub fn gap_percent(z: f64, z_ref: f64) -> Result<f64> {
    if !(z_ref > 0.0) || !z.is_finite() {
        return Err(Error::validation(
            "gap reference",
            format!("z={z}, z_ref={z_ref}; the reference must be positive"),
        ));
    }
    Ok(100.0 * (z - z_ref) / z_ref)
}

/// `count` random districts not in `exclude`, labeled on test scenarios.
pub fn test_labeled_districts(
    region: &RegionModel,
    test: &ScenarioSet,
    n_l: usize,
    n_u: usize,
    count: usize,
    seed: u64,
    exclude: &[District],
) -> Result<Vec<LabeledDistrict>> {
    if test.split != Split::Test {
        return Err(Error::validation("scenarios", "evaluation labels need the test split"));
    }
    let seen: std::collections::HashSet<&District> = exclude.iter().collect();
    let pool = sample_random_districts(
        region,
        n_l,
        n_u,
        count + exclude.len(),
        rng::derive_seed(seed, &[rng::tag::EVAL_DISTRICTS]),
    )?;
    let fresh: Vec<District> = pool.into_iter().filter(|d| !seen.contains(d)).take(count).collect();
    if fresh.len() < count {
        return Err(Error::InsufficientDistricts {
            achieved: fresh.len(),
            requested: count,
        });
    }
    label_districts(region, &fresh, test)
}

/// Mean over tours of the depot legs' share of the tour length, in percent.
/// Every district in every scenario contributes one tour; empty tours are skipped.
pub fn back_and_forth_share(region: &RegionModel, solution: &Solution, scenarios: &ScenarioSet) -> Result<f64> {
    if scenarios.split != Split::Test {
        return Err(Error::validation(
            "scenarios",
            format!(
                "back-and-forth share is measured on the test split, got {}",
                scenarios.split.as_str()
            ),
        ));
    }
    solution.check_partition(region)?;
    let depot = region.depot();
    let (mut sum, mut tours) = (0.0, 0usize);
    for members in solution.districts() {
        for t in 0..scenarios.count() {
            let pts = scenarios.district_scenario(&members, t)?;
            if pts.is_empty() {
                continue;
            }
            let tour = tsp::tsp_cost(depot, &pts, t as u64);
            if !(tour.length > 0.0) {
                continue;
            }
            let first = depot.distance(pts[tour.order[0]]);
            let last = depot.distance(pts[tour.order[tour.order.len() - 1]]);
            sum += ((first + last) / tour.length).min(1.0);
            tours += 1;
        }
    }
    if tours == 0 {
        return Err(Error::Empty("tours"));
    }
    Ok(100.0 * sum / tours as f64)
}

/// Mean Reock score over districts.
pub fn solution_compactness(region: &RegionModel, solution: &Solution) -> Result<f64> {
    let districts = solution.districts();
    if solution.len() != region.len() || districts.iter().any(Vec::is_empty) {
        return Err(Error::validation(
            "solution",
            "every district must be nonempty and cover the region",
        ));
    }
    let mut total = 0.0;
    for d in &districts {
        total += reock_compactness(d.iter().map(|&u| &region.unit(u).boundary))?;
    }
    Ok(total / districts.len() as f64)
}

/// One experiment: which instance, methods, seeds and artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub instance_id: String,
    pub seeds: Vec<u64>,
    pub oracles: Vec<String>,
    pub budget_iterations: Option<usize>,
    pub budget_seconds: Option<f64>,
    pub train_scenarios: usize,
    pub test_scenarios: usize,
    /// Seed of the test scenarios every compared method is evaluated on.
    pub test_scenario_seed: u64,
    /// Named input artifacts that must exist.
    #[serde(default)]
    pub inputs: BTreeMap<String, PathBuf>,
    /// Named artifacts produced by the run.
    #[serde(default)]
    pub outputs: BTreeMap<String, PathBuf>,
}

impl ExperimentManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path.display().to_string(), &e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Inputs must exist, relative paths resolved against `base`, or be
    /// produced by the same manifest.
    pub fn validate_files(&self, base: &Path) -> Result<()> {
        for (name, path) in &self.inputs {
            if !base.join(path).exists() && !self.outputs.values().any(|p| p == path) {
                return Err(Error::Missing(format!("input {name} at {}", base.join(path).display())));
            }
        }
        Ok(())
    }

    /// Every gap row must use the manifest's test scenario seed.
    pub fn validate_results(&self, results: Option<&BenchResults>) -> Result<()> {
        if let Some(r) = results {
            if let Some(row) = r.gaps.iter().find(|g| g.test_scenario_seed != self.test_scenario_seed) {
                return Err(Error::validation(
                    "results",
                    format!(
                        "{} seed {} was evaluated on test scenarios {} instead of {}",
                        row.method, row.seed, row.test_scenario_seed, self.test_scenario_seed
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub instance: String,
    pub oracle: String,
    pub seed: u64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub instance: String,
    pub method: String,
    pub seed: u64,
    pub test_scenario_seed: u64,
    pub cost: f64,
    pub reference: f64,
    pub gap_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub instance: String,
    pub method: String,
    pub seed: u64,
    pub value: f64,
}

/// Everything a report is rendered from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    #[serde(default)]
    pub rmse: Vec<RmseRow>,
    #[serde(default)]
    pub gaps: Vec<GapRow>,
    #[serde(default)]
    pub compactness: Vec<MetricRow>,
    #[serde(default)]
    pub back_and_forth: Vec<MetricRow>,
}

impl BenchResults {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Missing(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path.display().to_string(), &e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Append rows of another result set.
    pub fn extend(&mut self, other: BenchResults) {
        self.rmse.extend(other.rmse);
        self.gaps.extend(other.gaps);
        self.compactness.extend(other.compactness);
        self.back_and_forth.extend(other.back_and_forth);
    }
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn mean_by<'a>(rows: impl Iterator<Item = (&'a str, f64)>) -> BTreeMap<&'a str, (f64, f64, usize)> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (k, v) in rows {
        groups.entry(k).or_default().push(v);
    }
    groups
        .into_iter()
        .map(|(k, vs)| {
            let n = vs.len();
            let m = vs.iter().sum::<f64>() / n as f64;
            let sd = (vs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            (k, (m, sd, n))
        })
        .collect()
}

fn md_table(out: &mut String, title: &str, label: &str, stats: &BTreeMap<&str, (f64, f64, usize)>) {
    let _ = writeln!(out, "## {title}\n\n| {label} | mean | std | n |\n|---|---|---|---|");
    for (k, (m, sd, n)) in stats {
        let _ = writeln!(out, "| {k} | {m:.4} | {sd:.4} | {n} |");
    }
    out.push('\n');
}

/// Write `rmse.csv`, `gaps.csv`, `compactness.csv`, `back_and_forth.csv` and
/// `summary.md` under `dir`; returns the written paths.
pub fn emit_report(manifest: Option<&ExperimentManifest>, results: &BenchResults, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if let Some(m) = manifest {
        m.validate_results(Some(results))?;
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = dir.join(name);
        f(&p)?;
        written.push(p);
        Ok(())
    };
    emit("rmse.csv", &|p| {
        write_csv(p, &["instance", "oracle", "seed", "rmse"], &results.rmse)
    })?;
    emit("gaps.csv", &|p| {
        write_csv(
            p,
            &[
                "instance",
                "method",
                "seed",
                "test_scenario_seed",
                "cost",
                "reference",
                "gap_percent",
            ],
            &results.gaps,
        )
    })?;
    emit("compactness.csv", &|p| {
        write_csv(p, &["instance", "method", "seed", "compactness"], &results.compactness)
    })?;
    emit("back_and_forth.csv", &|p| {
        write_csv(p, &["instance", "method", "seed", "share_percent"], &results.back_and_forth)
    })?;
    emit("summary.md", &|p| {
        let mut s = String::from("# Results\n\n");
        if let Some(m) = manifest {
            let _ = writeln!(
                s,
                "Instance `{}`, seeds {:?}, test scenario seed {}.\n",
                m.instance_id, m.seeds, m.test_scenario_seed
            );
        }
        md_table(
            &mut s,
            "Estimation RMSE",
            "oracle",
            &mean_by(results.rmse.iter().map(|r| (r.oracle.as_str(), r.rmse))),
        );
        md_table(
            &mut s,
            "Gap to reference (%)",
            "method",
            &mean_by(results.gaps.iter().map(|r| (r.method.as_str(), r.gap_percent))),
        );
        md_table(
            &mut s,
            "Compactness (Reock)",
            "method",
            &mean_by(results.compactness.iter().map(|r| (r.method.as_str(), r.value))),
        );
        md_table(
            &mut s,
            "Back-and-forth share (%)",
            "method",
            &mean_by(results.back_and_forth.iter().map(|r| (r.method.as_str(), r.value))),
        );
        s.push_str("Back-and-forth share is the unweighted mean over tours of (first leg + last leg) / tour length.\n");
        std::fs::write(p, s)?;
        Ok(())
    })?;
    Ok(written)
}

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

/// Static SVG map with one polygon per unit, filled by district.
pub fn svg_choropleth(region: &RegionModel, solution: &Solution) -> Result<String> {
    if solution.len() != region.len() {
        return Err(Error::validation(
            "solution",
            format!("{} units for a region of {}", solution.len(), region.len()),
        ));
    }
    let bb = region.bbox();
    let (w, h) = (bb.width().max(1e-9), bb.height().max(1e-9));
    let scale = 800.0 / w.max(h);
    let (pw, ph) = (w * scale + 20.0, h * scale + 20.0);
    let tx = |x: f64| (x - bb.min.x) * scale + 10.0;
    let ty = |y: f64| (bb.max.y - y) * scale + 10.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pw:.1}" height="{ph:.1}" viewBox="0 0 {pw:.1} {ph:.1}">"#
    );
    for (u, unit) in region.units().iter().enumerate() {
        let d = solution.district_of(u);
        let pts: Vec<String> = unit
            .boundary
            .vertices()
            .iter()
            .map(|p| format!("{:.2},{:.2}", tx(p.x), ty(p.y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="{}" stroke="#333" stroke-width="0.5"><title>unit {u} district {d}</title></polygon>"##,
            pts.join(" "),
            PALETTE[d % PALETTE.len()]
        );
    }
    let dp = region.depot();
    let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="#000"/>"##, tx(dp.x), ty(dp.y));
    s.push_str("</svg>\n");
    Ok(s)
}
