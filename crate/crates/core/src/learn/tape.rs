//! Reverse-mode differentiation over [`Tensor`] primitives.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::learn::Tensor;
use crate::real::Real;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<F> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddBias(Var, Var),
    Relu(Var),
    Abs(Var),
    Square(Var),
    Scale(Var, F),
    Mean(Var),
    SumAxis(Var, usize),
    GatherRows(Var, Arc<Vec<usize>>),
    BlockSum(Var, usize),
    NeighborSum(Var, Arc<Vec<Vec<usize>>>),
}

#[derive(Debug)]
struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
}

/// Records a computation for one backward pass.
#[derive(Debug, Default)]
pub struct Tape<F> {
    nodes: Vec<Node<F>>,
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// `a + bias` with a `1 x cols` bias broadcast over rows.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let v = self.value(a).add_row(self.value(bias))?;
        Ok(self.push(v, Op::AddBias(a, bias)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).relu();
        self.push(v, Op::Relu(a))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).map(F::abs);
        self.push(v, Op::Abs(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(v, Op::Square(a))
    }

    pub fn scale(&mut self, a: Var, s: F) -> Var {
        let v = self.value(a).scale(s);
        self.push(v, Op::Scale(a, s))
    }

    /// Mean of all entries, as `1 x 1`.
    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.is_empty() {
            return Err(Error::Empty("mean of empty tensor"));
        }
        let v = Tensor::scalar(t.sum() / F::of_usize(t.len()));
        Ok(self.push(v, Op::Mean(a)))
    }

    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let v = self.value(a).sum_axis(axis)?;
        Ok(self.push(v, Op::SumAxis(a, axis)))
    }

    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let v = self.value(a).gather_rows(&idx)?;
        Ok(self.push(v, Op::GatherRows(a, idx)))
    }

    pub fn block_sum(&mut self, a: Var, block: usize) -> Result<Var> {
        let v = self.value(a).block_sum(block)?;
        Ok(self.push(v, Op::BlockSum(a, block)))
    }

    /// Neighbour sums over a symmetric adjacency replicated per row block.
    pub fn neighbor_sum(&mut self, a: Var, adjacency: Arc<Vec<Vec<usize>>>) -> Result<Var> {
        let v = self.value(a).neighbor_sum(&adjacency)?;
        Ok(self.push(v, Op::NeighborSum(a, adjacency)))
    }

    /// Gradients of the `1 x 1` value `out` with respect to every recorded node.
    pub fn backward(&self, out: Var) -> Result<Grads<F>> {
        let o = self.value(out);
        if o.shape() != [1, 1] {
            return Err(Error::Shape {
                op: "backward",
                left: o.shape().to_vec(),
                right: vec![1, 1],
            });
        }
        let mut grads: Vec<Option<Tensor<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Tensor::scalar(F::one()));
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let mut acc = |v: Var, t: Tensor<F>| -> Result<()> {
                match &mut grads[v.0] {
                    Some(existing) => existing.add_assign(&t),
                    slot @ None => {
                        *slot = Some(t);
                        Ok(())
                    }
                }
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.matmul_nt(self.value(*b))?;
                    let gb = self.value(*a).matmul_tn(&g)?;
                    acc(*a, ga)?;
                    acc(*b, gb)?;
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone())?;
                    acc(*b, g.clone())?;
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone())?;
                    acc(*b, g.scale(-F::one()))?;
                }
                Op::AddBias(a, b) => {
                    acc(*b, g.sum_axis(0)?)?;
                    acc(*a, g.clone())?;
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    acc(*a, g.zip_with(x, "relu", |gv, xv| if xv > F::zero() { gv } else { F::zero() })?)?;
                }
                Op::Abs(a) => {
                    let x = self.value(*a);
                    let sign = |xv: F| {
                        if xv > F::zero() {
                            F::one()
                        } else if xv < F::zero() {
                            -F::one()
                        } else {
                            F::zero()
                        }
                    };
                    acc(*a, g.zip_with(x, "abs", |gv, xv| gv * sign(xv))?)?;
                }
                Op::Square(a) => {
                    let x = self.value(*a);
                    acc(*a, g.zip_with(x, "square", |gv, xv| gv * (xv + xv))?)?;
                }
                Op::Scale(a, s) => acc(*a, g.scale(*s))?,
                Op::Mean(a) => {
                    let x = self.value(*a);
                    let v = g.get(0, 0) / F::of_usize(x.len());
                    acc(*a, Tensor::full(x.rows(), x.cols(), v))?;
                }
                Op::SumAxis(a, axis) => {
                    let x = self.value(*a);
                    let t = if *axis == 0 {
                        Tensor::from_fn(x.rows(), x.cols(), |_, c| g.get(0, c))
                    } else {
                        Tensor::from_fn(x.rows(), x.cols(), |r, _| g.get(r, 0))
                    };
                    acc(*a, t)?;
                }
                Op::GatherRows(a, idx) => {
                    let x = self.value(*a);
                    let mut t = Tensor::zeros(x.rows(), x.cols());
                    let c = x.cols();
                    for (k, &r) in idx.iter().enumerate() {
                        for j in 0..c {
                            let v = t.get(r, j) + g.get(k, j);
                            t.set(r, j, v);
                        }
                    }
                    acc(*a, t)?;
                }
                Op::BlockSum(a, block) => acc(*a, g.block_repeat(*block))?,
                Op::NeighborSum(a, adj) => acc(*a, g.neighbor_sum(adj)?)?,
            }
            grads[i] = Some(g);
        }
        Ok(Grads { grads })
    }
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Grads<F> {
    grads: Vec<Option<Tensor<F>>>,
}

impl<F: Real> Grads<F> {
    /// Gradient of `v`, zeros of its shape when `v` did not influence the output.
    pub fn get(&self, tape: &Tape<F>, v: Var) -> Tensor<F> {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let s = tape.value(v).shape();
                Tensor::zeros(s[0], s[1])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rand_tensor(rng: &mut crate::rng::Rng, r: usize, c: usize) -> Tensor<f64> {
        Tensor::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn sum_relu_wx_matches_finite_differences() {
        let mut rng = crate::rng::rng(42);
        let w = rand_tensor(&mut rng, 5, 8);
        let x = rand_tensor(&mut rng, 8, 3);
        let f = |w: &Tensor<f64>| w.matmul(&x).unwrap().relu().sum();
        let mut tape = Tape::new();
        let wv = tape.leaf(w.clone());
        let xv = tape.leaf(x.clone());
        let h = tape.matmul(wv, xv).unwrap();
        let r = tape.relu(h);
        let s0 = tape.sum_axis(r, 0).unwrap();
        let s = tape.sum_axis(s0, 1).unwrap();
        let g = tape.backward(s).unwrap().get(&tape, wv);
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..w.len() {
            let mut p = w.clone();
            p.data_mut()[i] += eps;
            let mut m = w.clone();
            m.data_mut()[i] -= eps;
            let fd = (f(&p) - f(&m)) / (2.0 * eps);
            worst = worst.max((fd - g.data()[i]).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn every_primitive_matches_finite_differences() {
        let mut rng = crate::rng::rng(7);
        let adj = Arc::new(vec![vec![1, 2], vec![0], vec![0, 3], vec![2]]);
        let idx = Arc::new(vec![3, 0, 0, 7, 5]);
        let a0 = rand_tensor(&mut rng, 8, 3);
        let w0 = rand_tensor(&mut rng, 3, 3);
        let b0 = rand_tensor(&mut rng, 1, 3);
        let y0 = rand_tensor(&mut rng, 2, 3);
        let build = |tape: &mut Tape<f64>, a: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            let av = tape.leaf(a.clone());
            let wv = tape.leaf(w.clone());
            let bv = tape.leaf(b.clone());
            let yv = tape.leaf(y0.clone());
            let h = tape.matmul(av, wv).unwrap();
            let h = tape.add_bias(h, bv).unwrap();
            let n = tape.neighbor_sum(h, adj.clone()).unwrap();
            let h = tape.add(h, n).unwrap();
            let h = tape.relu(h);
            let gth = tape.gather_rows(h, idx.clone()).unwrap();
            let gs = tape.sum_axis(gth, 0).unwrap();
            let p = tape.block_sum(h, 4).unwrap();
            let d = tape.sub(p, yv).unwrap();
            let l1 = tape.abs(d);
            let l2 = tape.square(d);
            let l = tape.add(l1, l2).unwrap();
            let l = tape.scale(l, 0.5);
            let m1 = tape.mean(l).unwrap();
            let m2 = tape.mean(gs).unwrap();
            let out = tape.add(m1, m2).unwrap();
            (out, [av, wv, bv])
        };
        let mut tape = Tape::new();
        let (out, vars) = build(&mut tape, &a0, &w0, &b0);
        let grads = tape.backward(out).unwrap();
        let eval = |a: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            let mut t = Tape::new();
            let (o, _) = build(&mut t, a, w, b);
            t.value(o).get(0, 0)
        };
        let eps = 1e-6;
        let inputs = [a0.clone(), w0.clone(), b0.clone()];
        for (k, v) in vars.iter().enumerate() {
            let g = grads.get(&tape, *v);
            for i in 0..inputs[k].len() {
                let mut p = inputs.clone();
                p[k].data_mut()[i] += eps;
                let mut m = inputs.clone();
                m[k].data_mut()[i] -= eps;
                let fd = (eval(&p[0], &p[1], &p[2]) - eval(&m[0], &m[1], &m[2])) / (2.0 * eps);
                assert!(rel_err(fd, g.data()[i]) < 1e-6, "input {k} entry {i}: {fd} vs {}", g.data()[i]);
            }
        }
    }

    #[test]
    fn relu_gradient_is_zero_at_zero() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(1, 3, vec![-1.0, 0.0, 2.0]).unwrap());
        let r = tape.relu(x);
        let s = tape.sum_axis(r, 1).unwrap();
        let g = tape.backward(s).unwrap().get(&tape, x);
        assert_eq!(g.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn backward_needs_scalar_output() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(2, 2));
        assert!(tape.backward(x).is_err());
    }
}
