//! Shallow 5→3→1 ReLU network over district aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{glorot, AdamState, Tape, Tensor, Var};
use crate::oracles::{Standardizer, TrainReport};
use crate::rng;

pub const SNN_INPUTS: usize = 5;
pub const SNN_HIDDEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnnConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for SnnConfig {
    fn default() -> Self {
        Self { epochs: 2000, lr: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snn {
    pub w1: Tensor<f64>,
    pub b1: Tensor<f64>,
    pub w2: Tensor<f64>,
    pub b2: Tensor<f64>,
    pub x_scale: Standardizer,
    pub y_scale: Standardizer,
}

impl Snn {
    /// Glorot weights, zero biases, identity scaling.
    pub fn init(seed: u64) -> Self {
        let mut r = rng::rng_from(seed, &[rng::tag::MODEL_INIT]);
        Self {
            w1: glorot(SNN_INPUTS, SNN_HIDDEN, &mut r),
            b1: Tensor::zeros(1, SNN_HIDDEN),
            w2: glorot(SNN_HIDDEN, 1, &mut r),
            b2: Tensor::zeros(1, 1),
            x_scale: Standardizer::identity(SNN_INPUTS),
            y_scale: Standardizer::identity(1),
        }
    }

    pub fn params(&self) -> [&Tensor<f64>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn scaled_inputs(&self, xs: &[[f64; SNN_INPUTS]]) -> Tensor<f64> {
        let mut data = Vec::with_capacity(xs.len() * SNN_INPUTS);
        for x in xs {
            let mut row = *x;
            self.x_scale.apply(&mut row);
            data.extend_from_slice(&row);
        }
        Tensor::new(xs.len(), SNN_INPUTS, data).expect("row-major inputs")
    }

    /// Standardized outputs for standardized inputs.
    fn forward_scaled(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        x.matmul(&self.w1)?.add_row(&self.b1)?.relu().matmul(&self.w2)?.add_row(&self.b2)
    }

    pub fn predict(&self, x: &[f64; SNN_INPUTS]) -> Result<f64> {
        let out = self.forward_scaled(&self.scaled_inputs(std::slice::from_ref(x)))?;
        Ok(self.y_scale.inverse(0, out.get(0, 0)))
    }

    fn record(&self, tape: &mut Tape<f64>, x: &Tensor<f64>, y: &Tensor<f64>) -> Result<(Var, [Var; 4])> {
        let p = [
            tape.leaf(self.w1.clone()),
            tape.leaf(self.b1.clone()),
            tape.leaf(self.w2.clone()),
            tape.leaf(self.b2.clone()),
        ];
        let xv = tape.leaf(x.clone());
        let yv = tape.leaf(y.clone());
        let h = tape.matmul(xv, p[0])?;
        let h = tape.add_bias(h, p[1])?;
        let h = tape.relu(h);
        let o = tape.matmul(h, p[2])?;
        let o = tape.add_bias(o, p[3])?;
        let d = tape.sub(o, yv)?;
        let sq = tape.square(d);
        Ok((tape.mean(sq)?, p))
    }

    fn scaled_targets(&self, ys: &[f64]) -> Tensor<f64> {
        Tensor::from_fn(ys.len(), 1, |r, _| self.y_scale.forward(0, ys[r]))
    }

    /// Mean squared error in standardized units and its gradients with respect to [`Snn::params`].
    pub fn loss_gradients(&self, xs: &[[f64; SNN_INPUTS]], ys: &[f64]) -> Result<(f64, Vec<Tensor<f64>>)> {
        let x = self.scaled_inputs(xs);
        let y = self.scaled_targets(ys);
        let mut tape = Tape::new();
        let (loss, p) = self.record(&mut tape, &x, &y)?;
        let grads = tape.backward(loss)?;
        Ok((tape.value(loss).get(0, 0), p.iter().map(|&v| grads.get(&tape, v)).collect()))
    }

    /// Loss only, in standardized units.
    pub fn loss(&self, xs: &[[f64; SNN_INPUTS]], ys: &[f64]) -> Result<f64> {
        let out = self.forward_scaled(&self.scaled_inputs(xs))?;
        let y = self.scaled_targets(ys);
        Ok(out.sub(&y)?.data().iter().map(|d| d * d).sum::<f64>() / ys.len() as f64)
    }
}

/// Full-batch Adam on mean squared error; returns the parameters with the
/// lowest validation loss (training loss when no validation rows are given).
pub fn train_snn(
    train: &[([f64; SNN_INPUTS], f64)],
    val: &[([f64; SNN_INPUTS], f64)],
    seed: u64,
    config: &SnnConfig,
) -> Result<(Snn, TrainReport)> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut model = Snn::init(seed);
    model.x_scale = Standardizer::fit(train.iter().map(|(x, _)| &x[..]), SNN_INPUTS);
    model.y_scale = Standardizer::fit(train.iter().map(|(_, y)| std::slice::from_ref(y)), 1);
    let xs: Vec<[f64; SNN_INPUTS]> = train.iter().map(|(x, _)| *x).collect();
    let ys: Vec<f64> = train.iter().map(|(_, y)| *y).collect();
    let vx: Vec<[f64; SNN_INPUTS]> = val.iter().map(|(x, _)| *x).collect();
    let vy: Vec<f64> = val.iter().map(|(_, y)| *y).collect();
    let x = model.scaled_inputs(&xs);
    let y = model.scaled_targets(&ys);
    let mut adam = AdamState::new(config.lr, model.params());
    let mut report = TrainReport::default();
    let mut best = model.clone();
    for epoch in 1..=config.epochs {
        let mut tape = Tape::new();
        let (loss, p) = model.record(&mut tape, &x, &y)?;
        let train_loss = tape.value(loss).get(0, 0);
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("SNN training loss at epoch {epoch}")));
        }
        let grads = tape.backward(loss)?;
        let g: Vec<Tensor<f64>> = p.iter().map(|&v| grads.get(&tape, v)).collect();
        adam.step(&mut model.params_mut(), &g)?;
        let score = if vy.is_empty() {
            model.loss(&xs, &ys)?
        } else {
            model.loss(&vx, &vy)?
        };
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("SNN validation loss at epoch {epoch}")));
        }
        report.epochs_run = epoch;
        report.final_train_loss = train_loss;
        if report.offer(epoch, score) {
            best = model.clone();
        }
    }
    if report.checkpoints.is_empty() {
        report.best_loss = model.loss(&xs, &ys)?;
    }
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn teacher_data(n: usize, seed: u64) -> Vec<([f64; 5], f64)> {
        let teacher = Snn {
            w1: Tensor::new(
                5,
                3,
                vec![0.9, -0.4, 0.3, -0.5, 0.8, 0.2, 0.4, 0.1, -0.7, 0.3, -0.6, 0.5, -0.2, 0.3, 0.6],
            )
            .unwrap(),
            b1: Tensor::new(1, 3, vec![0.1, 0.2, -0.1]).unwrap(),
            w2: Tensor::new(3, 1, vec![1.2, -0.8, 0.9]).unwrap(),
            b2: Tensor::scalar(0.3),
            x_scale: Standardizer::identity(5),
            y_scale: Standardizer::identity(1),
        };
        let mut r = rng::rng(seed);
        let nd = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|_| {
                let x: [f64; 5] = std::array::from_fn(|_| nd.sample(&mut r));
                (x, teacher.predict(&x).unwrap())
            })
            .collect()
    }

    #[test]
    fn has_twenty_two_parameters() {
        let m = Snn::init(0);
        assert_eq!(m.params().iter().map(|t| t.len()).sum::<usize>(), 22);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let data = teacher_data(12, 1);
        let xs: Vec<_> = data.iter().map(|d| d.0).collect();
        let ys: Vec<_> = data.iter().map(|d| d.1).collect();
        let m = Snn::init(9);
        let (_, grads) = m.loss_gradients(&xs, &ys).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            for i in 0..m.params()[k].len() {
                let mut p = m.clone();
                p.params_mut()[k].data_mut()[i] += h;
                let mut q = m.clone();
                q.params_mut()[k].data_mut()[i] -= h;
                let fd = (p.loss(&xs, &ys).unwrap() - q.loss(&xs, &ys).unwrap()) / (2.0 * h);
                let g = grads[k].data()[i];
                assert!((fd - g).abs() / fd.abs().max(g.abs()).max(1.0) < 1e-5);
            }
        }
    }

    #[test]
    fn learns_a_planted_network() {
        let data = teacher_data(450, 2);
        let (train, val) = data.split_at(400);
        let (m, report) = train_snn(train, val, 1, &SnnConfig { epochs: 8000, lr: 1e-3 }).unwrap();
        let ys: Vec<f64> = val.iter().map(|d| d.1).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
        let rmse = (val.iter().map(|(x, y)| (m.predict(x).unwrap() - y).powi(2)).sum::<f64>() / val.len() as f64).sqrt();
        assert!(rmse < 0.05 * sd, "rmse {rmse} sd {sd} report {report:?}");
        assert!(report.checkpoints.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn training_is_deterministic() {
        let data = teacher_data(40, 4);
        let cfg = SnnConfig { epochs: 50, lr: 1e-3 };
        let a = train_snn(&data[..32], &data[32..], 5, &cfg).unwrap().0;
        let b = train_snn(&data[..32], &data[32..], 5, &cfg).unwrap().0;
        assert_eq!(a, b);
    }
}
