//! Dense row-major 2-D tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor<F>", into = "RawTensor<F>")]
#[serde(bound(serialize = "F: Real + Serialize", deserialize = "F: Real + Deserialize<'de>"))]
pub struct Tensor<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor<F> {
    shape: [usize; 2],
    values: Vec<F>,
}

impl<F: Real> TryFrom<RawTensor<F>> for Tensor<F> {
    type Error = Error;
    fn try_from(raw: RawTensor<F>) -> Result<Self> {
        Tensor::new(raw.shape[0], raw.shape[1], raw.values)
    }
}

impl<F> From<Tensor<F>> for RawTensor<F> {
    fn from(t: Tensor<F>) -> Self {
        RawTensor {
            shape: [t.rows, t.cols],
            values: t.data,
        }
    }
}

impl<F: Real> Tensor<F> {
    pub fn new(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape {
                op: "tensor",
                left: vec![rows, cols],
                right: vec![data.len()],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::full(rows, cols, F::zero())
    }

    pub fn full(rows: usize, cols: usize, v: F) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn scalar(v: F) -> Self {
        Self::full(1, 1, v)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = F::one();
        }
        t
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Rows given as slices of equal length.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Shape {
                op: "from_rows",
                left: vec![cols],
                right: vec![bad.len()],
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                op,
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(F, F) -> F) -> Result<Self> {
        self.same_shape(other, op)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.same_shape(other, "add_assign")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: F) -> Self {
        self.map(|v| v * s)
    }

    pub fn relu(&self) -> Self {
        self.map(|v| if v > F::zero() { v } else { F::zero() })
    }

    /// Add a `1 x cols` row to every row.
    pub fn add_row(&self, bias: &Self) -> Result<Self> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(Error::Shape {
                op: "add_bias",
                left: self.shape().to_vec(),
                right: bias.shape().to_vec(),
            });
        }
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols.max(1)) {
            for (v, &b) in row.iter_mut().zip(&bias.data) {
                *v += b;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![F::zero(); n * m];
        for i in 0..n {
            let orow = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == F::zero() {
                    continue;
                }
                let brow = &other.data[p * m..(p + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    /// `selfᵀ · other`.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Shape {
                op: "matmul_tn",
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        let (k, n, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![F::zero(); n * m];
        for p in 0..k {
            let arow = &self.data[p * n..(p + 1) * n];
            let brow = &other.data[p * m..(p + 1) * m];
            for (i, &a) in arow.iter().enumerate() {
                if a == F::zero() {
                    continue;
                }
                let orow = &mut out[i * m..(i + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    /// `self · otherᵀ`.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Shape {
                op: "matmul_nt",
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.rows);
        let mut out = vec![F::zero(); n * m];
        for i in 0..n {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..m {
                let brow = &other.data[j * k..(j + 1) * k];
                out[i * m + j] = arow.iter().zip(brow).fold(F::zero(), |s, (&a, &b)| s + a * b);
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Sum over rows (`axis = 0`, giving `1 x cols`) or columns (`axis = 1`, giving `rows x 1`).
    pub fn sum_axis(&self, axis: usize) -> Result<Self> {
        match axis {
            0 => {
                let mut out = Self::zeros(1, self.cols);
                for row in self.data.chunks(self.cols.max(1)) {
                    for (o, &v) in out.data.iter_mut().zip(row) {
                        *o += v;
                    }
                }
                Ok(out)
            }
            1 => Ok(Self::from_fn(self.rows, 1, |r, _| self.row(r).iter().copied().sum())),
            _ => Err(Error::Shape {
                op: "sum_axis",
                left: self.shape().to_vec(),
                right: vec![axis],
            }),
        }
    }

    pub fn sum(&self) -> F {
        self.data.iter().copied().sum()
    }

    pub fn gather_rows(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.rows) {
            return Err(Error::Shape {
                op: "gather_rows",
                left: self.shape().to_vec(),
                right: vec![bad],
            });
        }
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        })
    }

    /// Sum consecutive blocks of `block` rows: `(b * block) x c` to `b x c`.
    pub fn block_sum(&self, block: usize) -> Result<Self> {
        if block == 0 || self.rows % block != 0 {
            return Err(Error::Shape {
                op: "block_sum",
                left: self.shape().to_vec(),
                right: vec![block],
            });
        }
        let b = self.rows / block;
        let mut out = Self::zeros(b, self.cols);
        for r in 0..self.rows {
            let o = r / block;
            for c in 0..self.cols {
                out.data[o * self.cols + c] += self.data[r * self.cols + c];
            }
        }
        Ok(out)
    }

    /// Repeat every row `block` times: inverse shape of [`Tensor::block_sum`].
    pub fn block_repeat(&self, block: usize) -> Self {
        let mut data = Vec::with_capacity(self.data.len() * block);
        for r in 0..self.rows {
            for _ in 0..block {
                data.extend_from_slice(self.row(r));
            }
        }
        Self {
            rows: self.rows * block,
            cols: self.cols,
            data,
        }
    }

    /// Neighbour sums over a graph replicated on consecutive blocks of rows:
    /// row `b * n + v` becomes the sum of rows `b * n + u` for `u` adjacent to `v`.
    pub fn neighbor_sum(&self, adjacency: &[Vec<usize>]) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 || self.rows % n != 0 {
            return Err(Error::Shape {
                op: "neighbor_sum",
                left: self.shape().to_vec(),
                right: vec![n],
            });
        }
        let c = self.cols;
        let mut out = Self::zeros(self.rows, c);
        for b in 0..self.rows / n {
            let base = b * n;
            for (v, nb) in adjacency.iter().enumerate() {
                let o = (base + v) * c;
                for &u in nb {
                    let s = (base + u) * c;
                    for j in 0..c {
                        out.data[o + j] += self.data[s + j];
                    }
                }
            }
        }
        Ok(out)
    }
}
