//! structure2vec-style graph network over the full region graph.

use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{glorot, AdamState, Tape, Tensor, Var};
use crate::oracles::{FeatureContext, Standardizer, TrainReport, NODE_FEATURES, STATIC_FEATURES};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    /// Node embedding width `p`.
    pub hidden: usize,
    /// Readout and graph embedding width `k`.
    pub readout: usize,
    /// Hidden width of the prediction head.
    pub head: usize,
    /// Aggregation rounds `T`.
    pub rounds: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            readout: 64,
            head: 32,
            rounds: 4,
            epochs: 200,
            lr: 3e-3,
            batch: 64,
            patience: 1000,
        }
    }
}

impl GnnConfig {
    /// Full-size widths, epoch count and learning rate.
    pub fn full_size() -> Self {
        Self {
            hidden: 64,
            readout: 1024,
            head: 100,
            epochs: 10_000,
            lr: 1e-4,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gnn {
    pub config: GnnConfig,
    pub theta1: Tensor<f64>,
    pub theta2: Tensor<f64>,
    pub theta3: Tensor<f64>,
    pub theta4: Tensor<f64>,
    pub theta5: Tensor<f64>,
    pub theta6: Tensor<f64>,
    pub b6: Tensor<f64>,
    pub theta7: Tensor<f64>,
    pub b7: Tensor<f64>,
    /// Statistics of the static unit features over the region.
    pub feature_scale: Standardizer,
    pub y_scale: Standardizer,
}

pub const GNN_PARAMS: usize = 9;

/// Constant factors applied to neighbour sums (inverse mean degree) and to
/// the sum over all units (inverse unit count).
fn sum_scales(adjacency: &[Vec<usize>]) -> (f64, f64) {
    let n = adjacency.len().max(1) as f64;
    let degree = adjacency.iter().map(Vec::len).sum::<usize>() as f64 / n;
    (1.0 / degree.max(1.0), 1.0 / n)
}

impl Gnn {
    pub fn init(config: GnnConfig, seed: u64) -> Self {
        let mut r = rng::rng_from(seed, &[rng::tag::MODEL_INIT]);
        let (p, k, h) = (config.hidden, config.readout, config.head);
        Self {
            theta1: glorot(NODE_FEATURES, p, &mut r),
            theta2: glorot(p, p, &mut r),
            theta3: glorot(p, k, &mut r),
            theta4: glorot(k, k, &mut r),
            theta5: glorot(k, k, &mut r),
            theta6: glorot(k, h, &mut r),
            b6: Tensor::zeros(1, h),
            theta7: glorot(h, 1, &mut r),
            b7: Tensor::zeros(1, 1),
            feature_scale: Standardizer::identity(STATIC_FEATURES),
            y_scale: Standardizer::identity(1),
            config,
        }
    }

    pub fn params(&self) -> [&Tensor<f64>; GNN_PARAMS] {
        [
            &self.theta1,
            &self.theta2,
            &self.theta3,
            &self.theta4,
            &self.theta5,
            &self.theta6,
            &self.b6,
            &self.theta7,
            &self.b7,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor<f64>; GNN_PARAMS] {
        [
            &mut self.theta1,
            &mut self.theta2,
            &mut self.theta3,
            &mut self.theta4,
            &mut self.theta5,
            &mut self.theta6,
            &mut self.b6,
            &mut self.theta7,
            &mut self.b7,
        ]
    }

    /// Node inputs for a batch of districts: one block of `n` rows per district,
    /// followed by a block for the empty district.
    pub fn node_inputs(&self, ctx: &FeatureContext, districts: &[&[usize]]) -> Result<Tensor<f64>> {
        let n = ctx.len();
        let scaled: Vec<[f64; STATIC_FEATURES]> = ctx
            .static_features()
            .iter()
            .map(|row| {
                let mut r = *row;
                self.feature_scale.apply(&mut r);
                r
            })
            .collect();
        let mut data = Vec::with_capacity((districts.len() + 1) * n * NODE_FEATURES);
        for members in districts {
            let e = ctx.membership(members)?;
            for v in 0..n {
                data.extend_from_slice(&scaled[v]);
                data.push(e[v]);
            }
        }
        for row in &scaled {
            data.extend_from_slice(row);
            data.push(0.0);
        }
        Tensor::new((districts.len() + 1) * n, NODE_FEATURES, data)
    }

    /// Standardized predictions from node inputs, one row per district block.
    /// The readout of the trailing empty-district block is subtracted from
    /// every district readout.
    pub fn forward_nodes(&self, x: &Tensor<f64>, adjacency: &[Vec<usize>]) -> Result<Tensor<f64>> {
        let n = adjacency.len();
        let (nb, pool) = sum_scales(adjacency);
        let fw = x.matmul(&self.theta1)?;
        let mut mu = fw.relu();
        for _ in 1..self.config.rounds {
            mu = fw.add(&mu.neighbor_sum(adjacency)?.scale(nb).matmul(&self.theta2)?)?.relu();
        }
        let out = mu.neighbor_sum(adjacency)?.scale(nb).matmul(&self.theta3)?.relu();
        let pooled = out.block_sum(n)?;
        let b = pooled.rows() - 1;
        let base = pooled.gather_rows(&[b])?.scale(-pool);
        let pooled = pooled.gather_rows(&(0..b).collect::<Vec<_>>())?.scale(pool).add_row(&base)?;
        let z = pooled.matmul(&self.theta5)?.relu().matmul(&self.theta4)?;
        z.matmul(&self.theta6)?
            .add_row(&self.b6)?
            .relu()
            .matmul(&self.theta7)?
            .add_row(&self.b7)
    }

    fn record(
        &self,
        tape: &mut Tape<f64>,
        x: Tensor<f64>,
        y: Tensor<f64>,
        adjacency: &Arc<Vec<Vec<usize>>>,
    ) -> Result<(Var, [Var; GNN_PARAMS])> {
        let n = adjacency.len();
        let (nb, pool) = sum_scales(adjacency);
        let p: [Var; GNN_PARAMS] = std::array::from_fn(|i| tape.leaf(self.params()[i].clone()));
        let [t1, t2, t3, t4, t5, t6, b6, t7, b7] = p;
        let xv = tape.leaf(x);
        let yv = tape.leaf(y);
        let fw = tape.matmul(xv, t1)?;
        let mut mu = tape.relu(fw);
        for _ in 1..self.config.rounds {
            let s = tape.neighbor_sum(mu, adjacency.clone())?;
            let s = tape.scale(s, nb);
            let s = tape.matmul(s, t2)?;
            let pre = tape.add(fw, s)?;
            mu = tape.relu(pre);
        }
        let s = tape.neighbor_sum(mu, adjacency.clone())?;
        let s = tape.scale(s, nb);
        let s = tape.matmul(s, t3)?;
        let out = tape.relu(s);
        let pooled = tape.block_sum(out, n)?;
        let b = tape.value(pooled).rows() - 1;
        let base = tape.gather_rows(pooled, Arc::new(vec![b]))?;
        let base = tape.scale(base, -pool);
        let pooled = tape.gather_rows(pooled, Arc::new((0..b).collect()))?;
        let pooled = tape.scale(pooled, pool);
        let pooled = tape.add_bias(pooled, base)?;
        let g = tape.matmul(pooled, t5)?;
        let g = tape.relu(g);
        let z = tape.matmul(g, t4)?;
        let h = tape.matmul(z, t6)?;
        let h = tape.add_bias(h, b6)?;
        let h = tape.relu(h);
        let o = tape.matmul(h, t7)?;
        let o = tape.add_bias(o, b7)?;
        let d = tape.sub(o, yv)?;
        let a = tape.abs(d);
        Ok((tape.mean(a)?, p))
    }

    fn scaled_targets(&self, ys: &[f64]) -> Tensor<f64> {
        Tensor::from_fn(ys.len(), 1, |r, _| self.y_scale.forward(0, ys[r]))
    }

    /// Mean absolute error in standardized units and its gradients with respect to [`Gnn::params`].
    pub fn loss_gradients(&self, ctx: &FeatureContext, districts: &[&[usize]], ys: &[f64]) -> Result<(f64, Vec<Tensor<f64>>)> {
        let x = self.node_inputs(ctx, districts)?;
        let mut tape = Tape::new();
        let (loss, p) = self.record(&mut tape, x, self.scaled_targets(ys), ctx.adjacency())?;
        let grads = tape.backward(loss)?;
        Ok((tape.value(loss).get(0, 0), p.iter().map(|&v| grads.get(&tape, v)).collect()))
    }

    /// Loss only, in standardized units.
    pub fn loss(&self, ctx: &FeatureContext, districts: &[&[usize]], ys: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (chunk, yc) in districts.chunks(256).zip(ys.chunks(256)) {
            let out = self.forward_nodes(&self.node_inputs(ctx, chunk)?, ctx.adjacency())?;
            total += out.sub(&self.scaled_targets(yc))?.data().iter().map(|d| d.abs()).sum::<f64>();
        }
        Ok(total / ys.len() as f64)
    }

    pub fn predict(&self, ctx: &FeatureContext, members: &[usize]) -> Result<f64> {
        let out = self.forward_nodes(&self.node_inputs(ctx, &[members])?, ctx.adjacency())?;
        Ok(self.y_scale.inverse(0, out.get(0, 0)))
    }

    pub fn predict_many(&self, ctx: &FeatureContext, districts: &[&[usize]]) -> Result<Vec<f64>> {
        let mut res = Vec::with_capacity(districts.len());
        for chunk in districts.chunks(256) {
            let out = self.forward_nodes(&self.node_inputs(ctx, chunk)?, ctx.adjacency())?;
            res.extend(out.data().iter().map(|&v| self.y_scale.inverse(0, v)));
        }
        Ok(res)
    }
}

/// Minibatch Adam on mean absolute error with early stopping on the
/// validation loss; returns the best checkpoint.
pub fn train_gnn(
    ctx: &FeatureContext,
    train: &[(&[usize], f64)],
    val: &[(&[usize], f64)],
    seed: u64,
    config: &GnnConfig,
) -> Result<(Gnn, TrainReport)> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if config.batch == 0 || config.rounds == 0 {
        return Err(Error::validation("GNN config", "batch and rounds must be positive"));
    }
    let mut model = Gnn::init(config.clone(), seed);
    model.feature_scale = Standardizer::fit(ctx.static_features().iter().map(|r| &r[..]), STATIC_FEATURES);
    model.y_scale = Standardizer::fit(train.iter().map(|(_, y)| std::slice::from_ref(y)), 1);
    let (vd, vy): (Vec<&[usize]>, Vec<f64>) = val.iter().copied().unzip();
    let (td, ty): (Vec<&[usize]>, Vec<f64>) = train.iter().copied().unzip();
    let mut adam = AdamState::new(config.lr, model.params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle = rng::rng_from(seed, &[rng::tag::BATCH]);
    let mut report = TrainReport::default();
    let mut best = model.clone();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch) {
            let ds: Vec<&[usize]> = chunk.iter().map(|&i| train[i].0).collect();
            let ys: Vec<f64> = chunk.iter().map(|&i| train[i].1).collect();
            let (loss, grads) = model.loss_gradients(ctx, &ds, &ys)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("GNN training loss at epoch {epoch}")));
            }
            epoch_loss += loss * chunk.len() as f64;
            adam.step(&mut model.params_mut(), &grads)?;
        }
        let score = if vy.is_empty() {
            model.loss(ctx, &td, &ty)?
        } else {
            model.loss(ctx, &vd, &vy)?
        };
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("GNN validation loss at epoch {epoch}")));
        }
        report.epochs_run = epoch;
        report.final_train_loss = epoch_loss / train.len() as f64;
        if report.offer(epoch, score) {
            best = model.clone();
        } else if epoch - report.best_epoch >= config.patience {
            break;
        }
    }
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::gen;
    use crate::scenario::{sample_scenarios, Split};
    use rand::Rng;

    fn small() -> (crate::geom::RegionModel, FeatureContext) {
        let r = gen::grid(3, 2, 1.0, 3).unwrap();
        let s = sample_scenarios(&r, 0.001, 4, 1, Split::Train).unwrap();
        let ctx = FeatureContext::new(&r, &s).unwrap();
        (r, ctx)
    }

    fn tiny() -> GnnConfig {
        GnnConfig {
            hidden: 4,
            readout: 8,
            head: 4,
            ..GnnConfig::default()
        }
    }

    #[test]
    fn first_round_is_a_pure_feature_transform() {
        let (_, ctx) = small();
        let m = Gnn::init(GnnConfig { rounds: 1, ..tiny() }, 1);
        let x = m.node_inputs(&ctx, &[&[0, 1]]).unwrap();
        let mu1 = x.matmul(&m.theta1).unwrap().relu();
        let nb = 6.0 / 14.0;
        let out = mu1
            .neighbor_sum(ctx.adjacency())
            .unwrap()
            .scale(nb)
            .matmul(&m.theta3)
            .unwrap()
            .relu();
        let pooled = out.block_sum(6).unwrap().scale(1.0 / 6.0);
        let rel = pooled.gather_rows(&[0]).unwrap().sub(&pooled.gather_rows(&[1]).unwrap()).unwrap();
        let z = rel.matmul(&m.theta5).unwrap().relu().matmul(&m.theta4).unwrap();
        let y = z
            .matmul(&m.theta6)
            .unwrap()
            .add_row(&m.b6)
            .unwrap()
            .relu()
            .matmul(&m.theta7)
            .unwrap()
            .add_row(&m.b7)
            .unwrap();
        assert_eq!(m.forward_nodes(&x, ctx.adjacency()).unwrap(), y);
    }

    #[test]
    fn invariant_under_unit_relabeling() {
        let (_, ctx) = small();
        let m = Gnn::init(tiny(), 2);
        let x = m.node_inputs(&ctx, &[&[1, 2, 4]]).unwrap();
        let adj = ctx.adjacency();
        let perm = [3usize, 5, 0, 1, 4, 2];
        let mut inv = [0usize; 6];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let idx: Vec<usize> = inv.iter().chain(inv.iter()).enumerate().map(|(i, &o)| o + 6 * (i / 6)).collect();
        let px = x.gather_rows(&idx).unwrap();
        let padj: Vec<Vec<usize>> = (0..6).map(|new| adj[inv[new]].iter().map(|&u| perm[u]).collect()).collect();
        let a = m.forward_nodes(&x, adj).unwrap().get(0, 0);
        let b = m.forward_nodes(&px, &padj).unwrap().get(0, 0);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn full_stack_gradients_match_finite_differences() {
        let (_, ctx) = small();
        let mut r = rng::rng(11);
        for cfg_seed in 0..3u64 {
            let mut m = Gnn::init(tiny(), cfg_seed);
            m.feature_scale = Standardizer::fit(ctx.static_features().iter().map(|r| &r[..]), STATIC_FEATURES);
            // nonzero biases keep every unit away from the ReLU kink
            m.b6 = Tensor::from_fn(1, 4, |_, _| r.random_range(-0.5..0.5));
            m.b7 = Tensor::scalar(0.1);
            m.y_scale = Standardizer {
                mean: vec![1.0],
                std: vec![2.0],
            };
            let ds: Vec<Vec<usize>> = vec![vec![0, 1], vec![2, 3, 5], vec![4]];
            let dr: Vec<&[usize]> = ds.iter().map(Vec::as_slice).collect();
            let ys: Vec<f64> = (0..3).map(|_| r.random_range(0.0..5.0)).collect();
            let (_, grads) = m.loss_gradients(&ctx, &dr, &ys).unwrap();
            let h = 1e-6;
            for k in 0..GNN_PARAMS {
                for i in 0..m.params()[k].len() {
                    let mut p = m.clone();
                    p.params_mut()[k].data_mut()[i] += h;
                    let mut q = m.clone();
                    q.params_mut()[k].data_mut()[i] -= h;
                    let fd = (p.loss(&ctx, &dr, &ys).unwrap() - q.loss(&ctx, &dr, &ys).unwrap()) / (2.0 * h);
                    let g = grads[k].data()[i];
                    assert!(
                        (fd - g).abs() / fd.abs().max(g.abs()).max(1.0) < 1e-5,
                        "param {k}[{i}]: {fd} vs {g}"
                    );
                }
            }
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let (_, ctx) = small();
        let ds: Vec<Vec<usize>> = vec![vec![0], vec![0, 1], vec![1, 2], vec![3, 4, 5], vec![2, 5], vec![0, 3], vec![4]];
        let ys = [3.0, 5.0, 5.5, 8.0, 5.2, 4.9, 2.5];
        let train: Vec<(&[usize], f64)> = ds.iter().map(Vec::as_slice).zip(ys).collect();
        let cfg = GnnConfig {
            epochs: 300,
            lr: 1e-2,
            batch: 3,
            ..tiny()
        };
        let (m, rep) = train_gnn(&ctx, &train, &[], 4, &cfg).unwrap();
        let (m2, _) = train_gnn(&ctx, &train, &[], 4, &cfg).unwrap();
        assert_eq!(m, m2);
        assert!(rep.best_loss < rep.checkpoints[0].1 * 0.5, "{rep:?}");
        assert!(rep.checkpoints.windows(2).all(|w| w[1].1 <= w[0].1));
        let dr: Vec<&[usize]> = ds.iter().map(Vec::as_slice).collect();
        let many = m.predict_many(&ctx, &dr).unwrap();
        for (d, p) in dr.iter().zip(&many) {
            assert_eq!(m.predict(&ctx, d).unwrap(), *p);
        }
    }
}
