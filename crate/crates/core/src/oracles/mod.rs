//! District cost estimators: BHHD, FIG, SNN and GNN.

mod features;
mod gnn;
mod linear;
mod scale;
mod snn;

pub use features::{Aggregates, DistrictFeatures, FeatureContext, NODE_FEATURES, STATIC_FEATURES};
pub use gnn::{train_gnn, Gnn, GnnConfig, GNN_PARAMS};
pub use linear::{fit_bhhd, fit_fig, mse, Bhhd, Fig, RIDGE};
pub use scale::{Standardizer, STD_GUARD};
pub use snn::{train_snn, Snn, SnnConfig, SNN_HIDDEN, SNN_INPUTS};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saa::{LabeledDataset, LabeledDistrict, Role};
use crate::scenario::Split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Bhhd,
    Fig,
    Snn,
    Gnn,
}

impl OracleKind {
    pub const ALL: [OracleKind; 4] = [OracleKind::Bhhd, OracleKind::Fig, OracleKind::Snn, OracleKind::Gnn];

    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::Bhhd => "bhhd",
            OracleKind::Fig => "fig",
            OracleKind::Snn => "snn",
            OracleKind::Gnn => "gnn",
        }
    }
}

impl std::fmt::Display for OracleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OracleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bhhd" => Ok(OracleKind::Bhhd),
            "fig" => Ok(OracleKind::Fig),
            "snn" => Ok(OracleKind::Snn),
            "gnn" => Ok(OracleKind::Gnn),
            other => Err(Error::validation(
                "oracle kind",
                format!("expected bhhd|fig|snn|gnn, got {other:?}"),
            )),
        }
    }
}

/// Best-so-far bookkeeping of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Lowest validation loss, in standardized units.
    pub best_loss: f64,
    pub final_train_loss: f64,
    /// `(epoch, loss)` at every improvement.
    pub checkpoints: Vec<(usize, f64)>,
}

impl TrainReport {
    /// Record `loss`; true when it improves on the best so far.
    pub fn offer(&mut self, epoch: usize, loss: f64) -> bool {
        if self.checkpoints.is_empty() || loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = epoch;
            self.checkpoints.push((epoch, loss));
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum CostModel {
    Bhhd(Bhhd),
    Fig(Fig),
    Snn(Snn),
    Gnn(Gnn),
}

/// A calibrated or trained estimator with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostOracle {
    #[serde(flatten)]
    pub model: CostModel,
    pub units: usize,
    pub seed: u64,
    #[serde(default)]
    pub training: serde_json::Value,
}

/// Training knobs for the learned estimators.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub snn: SnnConfig,
    pub gnn: GnnConfig,
}

impl CostOracle {
    pub fn kind(&self) -> OracleKind {
        match self.model {
            CostModel::Bhhd(_) => OracleKind::Bhhd,
            CostModel::Fig(_) => OracleKind::Fig,
            CostModel::Snn(_) => OracleKind::Snn,
            CostModel::Gnn(_) => OracleKind::Gnn,
        }
    }

    /// Predicted expected routing cost of `members` (sorted unit ids).
    pub fn predict(&self, ctx: &FeatureContext, members: &[usize]) -> Result<f64> {
        if ctx.len() != self.units {
            return Err(Error::validation(
                "oracle",
                format!("model built for {} units, region has {}", self.units, ctx.len()),
            ));
        }
        match &self.model {
            CostModel::Bhhd(m) => Ok(m.predict(&ctx.aggregates(members)?)),
            CostModel::Fig(m) => Ok(m.predict(&ctx.aggregates(members)?)),
            CostModel::Snn(m) => m.predict(&ctx.snn_inputs(members)?),
            CostModel::Gnn(m) => m.predict(ctx, members),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let oracle: Self = serde_json::from_str(&text).map_err(|e| Error::parse(&path.display().to_string(), &e))?;
        let finite = match &oracle.model {
            CostModel::Bhhd(m) => m.beta.is_finite(),
            CostModel::Fig(m) => m.beta.iter().all(|b| b.is_finite()),
            CostModel::Snn(m) => m.params().iter().all(|t| t.is_finite()),
            CostModel::Gnn(m) => m.params().iter().all(|t| t.is_finite()),
        };
        if !finite {
            return Err(Error::NonFinite(format!("parameters in {}", path.display())));
        }
        Ok(oracle)
    }
}

/// Calibrate or train one estimator. BHHD and FIG use every record; SNN and
/// GNN train on the train role and stop on the validation role.
pub fn train_oracle(
    kind: OracleKind,
    ctx: &FeatureContext,
    dataset: &LabeledDataset,
    seed: u64,
    options: &TrainOptions,
) -> Result<CostOracle> {
    let by_role = |role: Role| {
        dataset
            .records
            .iter()
            .zip(&dataset.roles)
            .filter(move |(_, r)| **r == role)
            .map(|(d, _)| d)
    };
    let (model, training) = match kind {
        OracleKind::Bhhd | OracleKind::Fig => {
            let samples = dataset
                .records
                .iter()
                .map(|d| Ok((ctx.aggregates(d.district.members())?, d.cost)))
                .collect::<Result<Vec<_>>>()?;
            if kind == OracleKind::Bhhd {
                let m = fit_bhhd(&samples)?;
                let loss = mse(&samples, |a| m.predict(a));
                (CostModel::Bhhd(m), serde_json::json!({ "records": samples.len(), "mse": loss }))
            } else {
                let m = fit_fig(&samples)?;
                let loss = mse(&samples, |a| m.predict(a));
                (CostModel::Fig(m), serde_json::json!({ "records": samples.len(), "mse": loss }))
            }
        }
        OracleKind::Snn => {
            let rows = |role| {
                by_role(role)
                    .map(|d: &LabeledDistrict| Ok((ctx.snn_inputs(d.district.members())?, d.cost)))
                    .collect::<Result<Vec<_>>>()
            };
            let (train, val) = (rows(Role::Train)?, rows(Role::Val)?);
            let (m, report) = train_snn(&train, &val, seed, &options.snn)?;
            (CostModel::Snn(m), serde_json::json!({ "config": options.snn, "report": report }))
        }
        OracleKind::Gnn => {
            let rows = |role| {
                by_role(role)
                    .map(|d: &LabeledDistrict| (d.district.members(), d.cost))
                    .collect::<Vec<_>>()
            };
            let (train, val) = (rows(Role::Train), rows(Role::Val));
            let (m, report) = train_gnn(ctx, &train, &val, seed, &options.gnn)?;
            (CostModel::Gnn(m), serde_json::json!({ "report": report }))
        }
    };
    Ok(CostOracle {
        model,
        units: ctx.len(),
        seed,
        training,
    })
}

/// `√(mean (predicted − label)²)`.
pub fn rmse(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, y) in pairs {
        sum += (p - y).powi(2);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    Ok((sum / n as f64).sqrt())
}

/// RMSE of `oracle` against Test-split labels.
pub fn evaluate_rmse(oracle: &CostOracle, ctx: &FeatureContext, eval: &[LabeledDistrict]) -> Result<f64> {
    if let Some(d) = eval.iter().find(|d| d.split != Split::Test) {
        return Err(Error::validation(
            "evaluation set",
            format!("district {:?} was labeled on the {} split", d.district.members(), d.split.as_str()),
        ));
    }
    let preds = match &oracle.model {
        CostModel::Gnn(m) => {
            let ds: Vec<&[usize]> = eval.iter().map(|d| d.district.members()).collect();
            m.predict_many(ctx, &ds)?
        }
        _ => eval
            .iter()
            .map(|d| oracle.predict(ctx, d.district.members()))
            .collect::<Result<Vec<_>>>()?,
    };
    rmse(preds.into_iter().zip(eval.iter().map(|d| d.cost)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::gen;
    use crate::saa::{build_labeled_dataset, label_districts, sample_random_districts};
    use crate::scenario::sample_scenarios;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse([(1.0, 1.0), (2.0, 2.0)]).unwrap(), 0.0);
        assert!((rmse([(3.5, 1.0), (4.5, 2.0), (2.5, 0.0)]).unwrap() - 2.5).abs() < 1e-12);
        assert!(rmse(std::iter::empty()).is_err());
    }

    #[test]
    fn every_kind_trains_predicts_and_roundtrips() {
        let r = gen::grid(4, 3, 1.0, 1).unwrap();
        let train = sample_scenarios(&r, 1.5 / 7800.0, 4, 2, Split::Train).unwrap();
        let test = sample_scenarios(&r, 1.5 / 7800.0, 4, 3, Split::Test).unwrap();
        let ctx = FeatureContext::new(&r, &train).unwrap();
        let ds = build_labeled_dataset(&r, &train, 2, 4, 27, 5, [8, 1]).unwrap();
        let eval_d = sample_random_districts(&r, 2, 4, 10, 77).unwrap();
        let eval = label_districts(&r, &eval_d, &test).unwrap();
        let opts = TrainOptions {
            snn: SnnConfig { epochs: 30, lr: 1e-3 },
            gnn: GnnConfig {
                hidden: 4,
                readout: 8,
                head: 4,
                epochs: 5,
                batch: 8,
                ..GnnConfig::default()
            },
        };
        let dir = tempfile::tempdir().unwrap();
        for kind in OracleKind::ALL {
            let o = train_oracle(kind, &ctx, &ds, 9, &opts).unwrap();
            assert_eq!(o.kind(), kind);
            let p = dir.path().join(format!("{kind}.json"));
            o.save(&p).unwrap();
            let back = CostOracle::load(&p).unwrap();
            assert_eq!(back, o);
            for d in &eval_d {
                assert_eq!(back.predict(&ctx, d.members()).unwrap(), o.predict(&ctx, d.members()).unwrap());
            }
            let e = evaluate_rmse(&o, &ctx, &eval).unwrap();
            assert!(e.is_finite() && e >= 0.0);
        }
        let train_labeled = label_districts(&r, &eval_d, &train).unwrap();
        let o = train_oracle(OracleKind::Bhhd, &ctx, &ds, 0, &opts).unwrap();
        assert!(evaluate_rmse(&o, &ctx, &train_labeled).is_err());
    }

    #[test]
    fn constant_offset_gives_that_rmse() {
        let r = gen::grid(3, 3, 1.0, 1).unwrap();
        let train = sample_scenarios(&r, 1.0 / 7800.0, 3, 2, Split::Train).unwrap();
        let ctx = FeatureContext::new(&r, &train).unwrap();
        let o = CostOracle {
            model: CostModel::Bhhd(Bhhd { beta: 0.8 }),
            units: 9,
            seed: 0,
            training: serde_json::Value::Null,
        };
        let ds = sample_random_districts(&r, 1, 3, 8, 1).unwrap();
        let eval: Vec<LabeledDistrict> = ds
            .iter()
            .map(|d| LabeledDistrict {
                district: d.clone(),
                cost: o.predict(&ctx, d.members()).unwrap() - 1.25,
                scenario_count: 1,
                split: Split::Test,
            })
            .collect();
        assert!((evaluate_rmse(&o, &ctx, &eval).unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn wrong_region_is_refused() {
        let r = gen::grid(3, 3, 1.0, 1).unwrap();
        let train = sample_scenarios(&r, 1.0 / 7800.0, 3, 2, Split::Train).unwrap();
        let ctx = FeatureContext::new(&r, &train).unwrap();
        let o = CostOracle {
            model: CostModel::Bhhd(Bhhd { beta: 0.8 }),
            units: 10,
            seed: 0,
            training: serde_json::Value::Null,
        };
        assert!(o.predict(&ctx, &[0]).is_err());
    }
}
