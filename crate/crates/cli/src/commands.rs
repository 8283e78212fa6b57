//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use routedist::bench::{self, BenchResults, ExperimentManifest, GapRow, MetricRow, RmseRow};
use routedist::cost::{Memo, OracleCost, SaaCost};
use routedist::exact::{enumerate_districts, solve_set_partitioning};
use routedist::geom::gen::{self, CityParams};
use routedist::ils::{solve_ils, IlsBudget, P_RM};
use routedist::oracles::{evaluate_rmse, train_oracle, CostOracle, FeatureContext, OracleKind, TrainOptions};
use routedist::partition::{initial_solution, make_instance, validate_for, DepotTag, InitBudget};
use routedist::saa::{build_labeled_dataset, saa_solution_cost, LabeledDataset};
use routedist::scenario::{sample_scenarios, Split};
use routedist::solution::Solution;

use crate::files::{self, load_instance, load_scenarios, provenance, stem, write_json, InstanceFile};
use crate::UsageError;

#[derive(Debug, Parser)]
#[command(name = "routedist", version, about = "Learned routing-cost estimation and districting")]
pub struct Cli {
    /// Worker threads for labeling and evaluation; 1 keeps runs serial.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a region file: a rectangular grid or a synthetic city.
    GenRegion(GenRegion),
    /// Parameterize an instance for a region and target district size.
    Instance(InstanceCmd),
    /// Sample demand scenarios for one split.
    Sample(Sample),
    /// Sample random districts and label them with SAA costs.
    Label(Label),
    /// Calibrate or train a cost oracle.
    Train(Train),
    /// Iterated local search with a cost oracle.
    Solve(Solve),
    /// Exact set-partitioning optimum for small instances.
    Exact(Exact),
    /// Oracle RMSE and solution metrics on test scenarios.
    Eval(Eval),
    /// CSV, Markdown and SVG reports from result files.
    Report(Report),
    /// Whole pipeline into one directory.
    Run(Run),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenRegion(a) => gen_region(&a),
        Command::Instance(a) => instance(&a),
        Command::Sample(a) => sample(&a),
        Command::Label(a) => label(&a),
        Command::Train(a) => train(&a),
        Command::Solve(a) => solve(&a),
        Command::Exact(a) => exact(&a),
        Command::Eval(a) => eval(&a),
        Command::Report(a) => report(&a),
        Command::Run(a) => pipeline(&a),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || UsageError(format!("--grid expects WxH, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

#[derive(Debug, Args, Clone)]
pub struct GenRegion {
    /// Grid of unit squares, e.g. 6x10.
    #[arg(long, conflicts_with = "synthetic_city")]
    pub grid: Option<String>,
    /// Voronoi city with a density gradient.
    #[arg(long)]
    pub synthetic_city: bool,
    /// Unit count of the synthetic city.
    #[arg(long, default_value_t = 50)]
    pub units: usize,
    /// Mean unit area of the synthetic city, km².
    #[arg(long, default_value_t = 2.0)]
    pub mean_area: f64,
    /// Site intensity at the edge relative to the centre.
    #[arg(long, default_value_t = 0.12)]
    pub edge_intensity: f64,
    /// Grid cell side, km.
    #[arg(long, default_value_t = 1.0)]
    pub cell: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn gen_region(a: &GenRegion) -> Result<()> {
    let region = match (&a.grid, a.synthetic_city) {
        (Some(g), false) => {
            let (w, h) = parse_grid(g)?;
            gen::grid(w, h, a.cell, a.seed)?
        }
        (None, true) => gen::synthetic_city(
            CityParams {
                units: a.units,
                mean_area: a.mean_area,
                edge_intensity: a.edge_intensity,
            },
            a.seed,
        )?,
        _ => bail!(UsageError("pass exactly one of --grid WxH or --synthetic-city".into())),
    };
    region.save(&a.out)?;
    println!(
        "wrote {} units, {} edges to {}",
        region.len(),
        region.edges().len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct InstanceCmd {
    #[arg(long)]
    pub region: PathBuf,
    /// Target district size.
    #[arg(long)]
    pub t: usize,
    /// C, NE, NW, SE, SW or x,y.
    #[arg(long, default_value = "C")]
    pub depot: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60.0)]
    pub budget_seconds: f64,
    /// Instance id; defaults to the output file stem.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

fn instance(a: &InstanceCmd) -> Result<()> {
    let region = files::load_region(&a.region)?;
    let tag: DepotTag = a.depot.parse()?;
    let (mut config, _) = make_instance(&region, a.t, tag, a.seed)?;
    config.budget_seconds = a.budget_seconds;
    let doc = InstanceFile {
        id: a.id.clone().unwrap_or_else(|| stem(&a.out)),
        region: files::relative_region(&a.region, &a.out),
        config,
    };
    write_json(&a.out, &doc)?;
    let c = &doc.config;
    println!(
        "instance {}: n={} t={} k={} bounds [{}, {}] kappa={}",
        doc.id, c.units, c.t, c.k, c.n_l, c.n_u, c.kappa
    );
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Sample {
    #[arg(long)]
    pub instance: PathBuf,
    /// train or test.
    #[arg(long)]
    pub split: String,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn sample(a: &Sample) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let split: Split = a.split.parse()?;
    let s = sample_scenarios(&inst.region, inst.config.kappa, a.count, a.seed, split)?;
    s.save(&a.out)?;
    println!("wrote {} {} scenarios to {}", s.count(), split.as_str(), a.out.display());
    Ok(())
}

fn parse_ratio(s: &str) -> Result<[usize; 2]> {
    let bad = || UsageError(format!("--split expects TRAIN:VAL, got {s:?}"));
    let (t, v) = s.split_once(':').ok_or_else(bad)?;
    Ok([t.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?])
}

#[derive(Debug, Args, Clone)]
pub struct Label {
    #[arg(long)]
    pub instance: PathBuf,
    /// Train-split scenario file.
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Number of districts to sample.
    #[arg(long)]
    pub districts: usize,
    /// Train and validation shares.
    #[arg(long, default_value = "8:1")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn label(a: &Label) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let scen = load_scenarios(&a.scenarios, &inst.region, Some(Split::Train))?;
    let ratio = parse_ratio(&a.split)?;
    let c = &inst.config;
    let ds = build_labeled_dataset(&inst.region, &scen, c.n_l, c.n_u, a.districts, a.seed, ratio)?;
    ds.save(&a.out)?;
    println!(
        "wrote {} districts ({} train, {} val) to {}",
        ds.records.len(),
        ds.train().count(),
        ds.val().count(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Train {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Train-split scenarios the dataset was labeled with.
    #[arg(long)]
    pub scenarios: PathBuf,
    /// bhhd, fig, snn or gnn.
    #[arg(long)]
    pub oracle: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training epochs of the snn or gnn.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate of the snn or gnn.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Use the full-size gnn widths, epoch count and learning rate.
    #[arg(long)]
    pub full_size: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_dataset(path: &Path, inst: &files::Instance, scen_seed: Option<u64>) -> Result<LabeledDataset> {
    let ds = LabeledDataset::load(path, Some(&inst.region)).with_context(|| format!("loading dataset {}", path.display()))?;
    let h = &ds.header;
    if h.n_l != inst.config.n_l || h.n_u != inst.config.n_u {
        bail!(UsageError(format!(
            "dataset bounds [{}, {}] differ from instance bounds [{}, {}]",
            h.n_l, h.n_u, inst.config.n_l, inst.config.n_u
        )));
    }
    if let Some(s) = scen_seed {
        if s != h.scenario_seed {
            bail!(UsageError(format!(
                "dataset was labeled with scenario seed {}, scenarios file has {s}",
                h.scenario_seed
            )));
        }
    }
    Ok(ds)
}

fn train(a: &Train) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let scen = load_scenarios(&a.scenarios, &inst.region, Some(Split::Train))?;
    let ds = load_dataset(&a.dataset, &inst, Some(scen.seed))?;
    let kind: OracleKind = a.oracle.parse()?;
    let mut opts = TrainOptions::default();
    if a.full_size {
        opts.gnn = routedist::oracles::GnnConfig::full_size();
    }
    if let Some(e) = a.epochs {
        opts.snn.epochs = e;
        opts.gnn.epochs = e;
    }
    if let Some(lr) = a.lr {
        opts.snn.lr = lr;
        opts.gnn.lr = lr;
    }
    let ctx = FeatureContext::new(&inst.region, &scen)?;
    let mut oracle = train_oracle(kind, &ctx, &ds, a.seed, &opts)?;
    if let Value::Object(obj) = &mut oracle.training {
        obj.insert(
            "provenance".into(),
            provenance(
                "train",
                a.seed,
                json!({ "instance": inst.id, "dataset_seed": ds.header.seed, "scenario_seed": scen.seed }),
            ),
        );
    }
    oracle.save(&a.out)?;
    println!("trained {kind} oracle to {}", a.out.display());
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Solve {
    #[arg(long)]
    pub instance: PathBuf,
    /// Trained oracle; omit to search on SAA costs of --scenarios.
    #[arg(long)]
    pub oracle_model: Option<PathBuf>,
    /// Train-split scenarios (oracle features or SAA costs).
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, conflicts_with = "budget_iters")]
    pub budget_seconds: Option<f64>,
    #[arg(long)]
    pub budget_iters: Option<usize>,
    /// Perturbation move probability.
    #[arg(long, default_value_t = P_RM)]
    pub p_rm: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// CSV search log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn solve(a: &Solve) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let scen = load_scenarios(&a.scenarios, &inst.region, Some(Split::Train))?;
    let c = &inst.config;
    let budget = match (a.budget_iters, a.budget_seconds) {
        (Some(n), _) => IlsBudget::iterations(n),
        (None, Some(s)) => IlsBudget::seconds(s),
        (None, None) => IlsBudget::seconds(c.budget_seconds),
    };
    let init = initial_solution(&inst.region, c, a.seed, InitBudget::default())?;
    let (method, out) = match &a.oracle_model {
        Some(p) => {
            let oracle = CostOracle::load(p).with_context(|| format!("loading oracle {}", p.display()))?;
            let ctx = FeatureContext::new(&inst.region, &scen)?;
            let cost = OracleCost {
                oracle: &oracle,
                ctx: &ctx,
            };
            (
                oracle.kind().to_string(),
                solve_ils(&inst.region, &cost, init, c.n_l, c.n_u, a.p_rm, a.seed, budget)?,
            )
        }
        None => {
            let cost = SaaCost {
                region: &inst.region,
                scenarios: &scen,
                exact: false,
            };
            (
                "saa-train".to_string(),
                solve_ils(&inst.region, &cost, init, c.n_l, c.n_u, a.p_rm, a.seed, budget)?,
            )
        }
    };
    let meta = provenance(
        "solve",
        a.seed,
        json!({
            "instance": inst.id,
            "method": method,
            "oracle_cost": out.cost,
            "iterations": out.iterations,
            "p_rm": a.p_rm,
            "k": c.k,
            "n_l": c.n_l,
            "n_u": c.n_u,
        }),
    );
    out.solution.save(&a.out, meta)?;
    if let Some(log) = &a.log {
        std::fs::write(log, out.log.to_csv())?;
    }
    println!(
        "{method}: oracle cost {:.4} after {} iterations, wrote {}",
        out.cost,
        out.iterations,
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Exact {
    #[arg(long)]
    pub instance: PathBuf,
    /// saa-test, saa-train or oracle:<model file>.
    #[arg(long, default_value = "saa-test")]
    pub cost: String,
    /// Scenario file: the priced split for saa costs, train scenarios for an oracle.
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Maximum number of enumerated districts.
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn exact(a: &Exact) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let c = &inst.config;
    let mut catalog = enumerate_districts(&inst.region, c.n_l, c.n_u, a.cap)?;
    match a.cost.as_str() {
        "saa-test" | "saa-train" => {
            let split = if a.cost == "saa-test" { Split::Test } else { Split::Train };
            let scen = load_scenarios(&a.scenarios, &inst.region, Some(split))?;
            let cost = SaaCost {
                region: &inst.region,
                scenarios: &scen,
                exact: false,
            };
            catalog.price(&cost, &a.cost)?;
        }
        other => {
            let Some(model) = other.strip_prefix("oracle:") else {
                bail!(UsageError(format!(
                    "--cost expects saa-test, saa-train or oracle:<file>, got {other:?}"
                )));
            };
            let scen = load_scenarios(&a.scenarios, &inst.region, Some(Split::Train))?;
            let oracle = CostOracle::load(model).with_context(|| format!("loading oracle {model}"))?;
            let ctx = FeatureContext::new(&inst.region, &scen)?;
            catalog.price(
                &Memo::new(OracleCost {
                    oracle: &oracle,
                    ctx: &ctx,
                }),
                &format!("oracle:{}", oracle.kind()),
            )?;
        }
    }
    let sol = solve_set_partitioning(&catalog, c.k)?;
    let meta = provenance(
        "exact",
        c.seed,
        json!({
            "instance": inst.id,
            "method": "exact",
            "cost_source": catalog.source,
            "optimal_cost": sol.cost,
            "catalog_size": catalog.len(),
            "nodes": sol.nodes,
        }),
    );
    sol.solution.save(&a.out, meta)?;
    println!(
        "optimal cost {:.4} over {} districts ({} nodes), wrote {}",
        sol.cost,
        catalog.len(),
        sol.nodes,
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Eval {
    #[arg(long)]
    pub instance: PathBuf,
    /// Test-split scenarios.
    #[arg(long)]
    pub test_scenarios: PathBuf,
    /// Train-split scenarios for oracle features.
    #[arg(long)]
    pub train_scenarios: Option<PathBuf>,
    /// Oracle model files to score.
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Training dataset whose districts are kept out of the evaluation set.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Number of held-out districts for RMSE.
    #[arg(long, default_value_t = 200)]
    pub districts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solution files to score.
    #[arg(long = "solution")]
    pub solutions: Vec<PathBuf>,
    /// Reference solution for gaps.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Results file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

fn method_of(meta: &Value, path: &Path) -> (String, u64) {
    let method = meta
        .get("method")
        .and_then(Value::as_str)
        .map_or_else(|| stem(path), str::to_string);
    (method, meta.get("seed").and_then(Value::as_u64).unwrap_or(0))
}

fn eval(a: &Eval) -> Result<()> {
    let inst = load_instance(&a.instance)?;
    let test = load_scenarios(&a.test_scenarios, &inst.region, Some(Split::Test))?;
    let c = &inst.config;
    let mut res = BenchResults::default();
    if !a.models.is_empty() {
        let Some(train_path) = &a.train_scenarios else {
            bail!(UsageError("--model needs --train-scenarios for oracle features".into()));
        };
        let train = load_scenarios(train_path, &inst.region, Some(Split::Train))?;
        let exclude = match &a.dataset {
            Some(p) => load_dataset(p, &inst, Some(train.seed))?
                .records
                .into_iter()
                .map(|r| r.district)
                .collect(),
            None => Vec::new(),
        };
        let held_out = bench::test_labeled_districts(&inst.region, &test, c.n_l, c.n_u, a.districts, a.seed, &exclude)?;
        let ctx = FeatureContext::new(&inst.region, &train)?;
        for p in &a.models {
            let oracle = CostOracle::load(p).with_context(|| format!("loading oracle {}", p.display()))?;
            let rmse = evaluate_rmse(&oracle, &ctx, &held_out)?;
            println!("rmse {} {rmse:.6}", oracle.kind());
            res.rmse.push(RmseRow {
                instance: inst.id.clone(),
                oracle: oracle.kind().to_string(),
                seed: oracle.seed,
                rmse,
            });
        }
    }
    let reference = match &a.reference {
        Some(p) => {
            let (s, _) = Solution::load(p).with_context(|| format!("loading reference {}", p.display()))?;
            Some(saa_solution_cost(&inst.region, &s, &test)?)
        }
        None => None,
    };
    for p in &a.solutions {
        let (s, meta) = Solution::load(p).with_context(|| format!("loading solution {}", p.display()))?;
        validate_for(&s, &inst.region, c).into_result()?;
        let (method, seed) = method_of(&meta, p);
        let cost = saa_solution_cost(&inst.region, &s, &test)?;
        if let Some(r) = reference {
            res.gaps.push(GapRow {
                instance: inst.id.clone(),
                method: method.clone(),
                seed,
                test_scenario_seed: test.seed,
                cost,
                reference: r,
                gap_percent: bench::gap_percent(cost, r)?,
            });
        }
        let row = |value| MetricRow {
            instance: inst.id.clone(),
            method: method.clone(),
            seed,
            value,
        };
        res.compactness.push(row(bench::solution_compactness(&inst.region, &s)?));
        res.back_and_forth.push(row(bench::back_and_forth_share(&inst.region, &s, &test)?));
        println!("solution {method} seed {seed}: test cost {cost:.4}");
    }
    res.save(&a.out)?;
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Report {
    /// Results files to merge.
    #[arg(long = "results", required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Solutions to draw as SVG maps (needs --instance).
    #[arg(long = "svg")]
    pub svg: Vec<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn report(a: &Report) -> Result<()> {
    let mut all = BenchResults::default();
    for p in &a.results {
        all.extend(BenchResults::load(p)?);
    }
    let manifest = match &a.manifest {
        Some(p) => {
            let m = ExperimentManifest::load(p)?;
            m.validate_files(p.parent().unwrap_or_else(|| Path::new(".")))?;
            Some(m)
        }
        None => None,
    };
    let written = bench::emit_report(manifest.as_ref(), &all, &a.out_dir)?;
    if !a.svg.is_empty() {
        let Some(ip) = &a.instance else {
            bail!(UsageError("--svg needs --instance".into()));
        };
        let inst = load_instance(ip)?;
        for p in &a.svg {
            let (s, meta) = Solution::load(p).with_context(|| format!("loading solution {}", p.display()))?;
            let (method, seed) = method_of(&meta, p);
            let out = a.out_dir.join(format!("{}_{method}_{seed}.svg", inst.id));
            std::fs::write(&out, bench::svg_choropleth(&inst.region, &s)?)?;
        }
    }
    println!("wrote {} report files to {}", written.len() + a.svg.len(), a.out_dir.display());
    Ok(())
}

#[derive(Debug, Args, Clone)]
pub struct Run {
    /// Grid region, e.g. 4x5.
    #[arg(long, conflicts_with = "synthetic_city")]
    pub grid: Option<String>,
    #[arg(long)]
    pub synthetic_city: bool,
    #[arg(long, default_value_t = 50)]
    pub units: usize,
    #[arg(long, default_value_t = 3)]
    pub t: usize,
    #[arg(long, default_value = "C")]
    pub depot: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub train_scenarios: usize,
    #[arg(long, default_value_t = 16)]
    pub test_scenarios: usize,
    /// Training districts.
    #[arg(long, default_value_t = 90)]
    pub districts: usize,
    /// Held-out districts for RMSE.
    #[arg(long, default_value_t = 30)]
    pub eval_districts: usize,
    /// Comma-separated oracle kinds.
    #[arg(long, default_value = "bhhd,fig,snn,gnn")]
    pub oracles: String,
    #[arg(long, default_value_t = 10)]
    pub budget_iters: usize,
    /// Training epochs of the snn and gnn.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Also solve the exact full-knowledge reference.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn pipeline(a: &Run) -> Result<()> {
    let d = &a.out_dir;
    std::fs::create_dir_all(d)?;
    let p = |name: &str| d.join(name);
    gen_region(&GenRegion {
        grid: a.grid.clone(),
        synthetic_city: a.synthetic_city,
        units: a.units,
        mean_area: 2.0,
        edge_intensity: 0.12,
        cell: 1.0,
        seed: a.seed,
        out: p("region.json"),
    })?;
    instance(&InstanceCmd {
        region: p("region.json"),
        t: a.t,
        depot: a.depot.clone(),
        seed: a.seed,
        budget_seconds: 60.0,
        id: Some("instance".into()),
        out: p("instance.json"),
    })?;
    for (split, count) in [("train", a.train_scenarios), ("test", a.test_scenarios)] {
        sample(&Sample {
            instance: p("instance.json"),
            split: split.into(),
            count,
            seed: a.seed,
            out: p(&format!("{split}.jsonl")),
        })?;
    }
    label(&Label {
        instance: p("instance.json"),
        scenarios: p("train.jsonl"),
        districts: a.districts,
        split: "8:1".into(),
        seed: a.seed,
        out: p("dataset.jsonl"),
    })?;
    let kinds: Vec<OracleKind> = a.oracles.split(',').map(|s| s.trim().parse()).collect::<routedist::Result<_>>()?;
    let mut models = Vec::new();
    let mut solutions = Vec::new();
    for kind in &kinds {
        let model = p(&format!("model_{kind}.json"));
        train(&Train {
            instance: p("instance.json"),
            dataset: p("dataset.jsonl"),
            scenarios: p("train.jsonl"),
            oracle: kind.to_string(),
            seed: a.seed,
            epochs: a.epochs,
            lr: None,
            full_size: false,
            out: model.clone(),
        })?;
        let sol = p(&format!("solution_{kind}.json"));
        solve(&Solve {
            instance: p("instance.json"),
            oracle_model: Some(model.clone()),
            scenarios: p("train.jsonl"),
            seed: a.seed,
            budget_seconds: None,
            budget_iters: Some(a.budget_iters),
            p_rm: P_RM,
            out: sol.clone(),
            log: None,
        })?;
        models.push(model);
        solutions.push(sol);
    }
    let reference = if a.exact {
        exact(&Exact {
            instance: p("instance.json"),
            cost: "saa-test".into(),
            scenarios: p("test.jsonl"),
            cap: 1_000_000,
            out: p("solution_exact.json"),
        })?;
        Some(p("solution_exact.json"))
    } else {
        None
    };
    eval(&Eval {
        instance: p("instance.json"),
        test_scenarios: p("test.jsonl"),
        train_scenarios: Some(p("train.jsonl")),
        models,
        dataset: Some(p("dataset.jsonl")),
        districts: a.eval_districts,
        seed: a.seed,
        solutions: solutions.clone(),
        reference,
        out: p("results.json"),
    })?;
    let manifest = ExperimentManifest {
        instance_id: "instance".into(),
        seeds: vec![a.seed],
        oracles: kinds.iter().map(ToString::to_string).collect(),
        budget_iterations: Some(a.budget_iters),
        budget_seconds: None,
        train_scenarios: a.train_scenarios,
        test_scenarios: a.test_scenarios,
        test_scenario_seed: a.seed,
        inputs: [("region", "region.json"), ("instance", "instance.json")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), PathBuf::from(v)))
            .collect(),
        outputs: [("results", "results.json"), ("report", "report")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), PathBuf::from(v)))
            .collect(),
    };
    manifest.save(p("manifest.json"))?;
    report(&Report {
        results: vec![p("results.json")],
        manifest: Some(p("manifest.json")),
        svg: solutions,
        instance: Some(p("instance.json")),
        out_dir: p("report"),
    })?;
    Ok(())
}
