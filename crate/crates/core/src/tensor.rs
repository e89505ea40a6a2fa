//! Dense real tensors of order `m` and dimension `n`.
//!
//! Entries are stored row-major: the first index varies slowest. For a tensor
//! `B` and a vector `v` the two basic contractions are
//!
//! ```text
//! (B v^{m-1})_i = sum_{i2..im} b[i, i2, .., im] v[i2] .. v[im]
//! B v^m         = sum_{i1..im} b[i1, .., im] v[i1] .. v[im]
//! ```
//!
//! Order-1 tensors are allowed so that row subtensors of matrices and the
//! vector operand of the general product are representable.

use crate::error::{check_finite, check_len, Error, Result};

/// Largest supported dimension `n`.
pub const MAX_DIM: usize = 8;
/// Largest order accepted by the public constructors.
pub const MAX_ORDER: usize = 5;
/// Default entry budget for [`DenseTensor::shao_product`].
pub const DEFAULT_PRODUCT_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

fn entry_count(order: usize, dim: usize) -> Option<usize> {
    dim.checked_pow(u32::try_from(order).ok()?)
}

impl DenseTensor {
    fn check_shape(order: usize, dim: usize) -> Result<usize> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::OrderOutOfRange(order));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimOutOfRange(dim));
        }
        Ok(entry_count(order, dim).expect("capped shape fits in usize"))
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = Self::check_shape(order, dim)?;
        Ok(Self {
            order,
            dim,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor from row-major entries.
    pub fn from_vec(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        let len = Self::check_shape(order, dim)?;
        if data.len() != len {
            return Err(Error::EntryCount {
                expected: len,
                found: data.len(),
            });
        }
        check_finite(&data, "tensor entries")?;
        Ok(Self { order, dim, data })
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(order: usize, dim: usize, mut f: F) -> Result<Self> {
        let len = Self::check_shape(order, dim)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; order];
        for _ in 0..len {
            data.push(f(&idx));
            advance(&mut idx, dim);
        }
        check_finite(&data, "tensor entries")?;
        Ok(Self { order, dim, data })
    }

    /// Diagonal tensor with `b[i, .., i] = diag[i]`.
    pub fn make_diagonal(order: usize, dim: usize, diag: &[f64]) -> Result<Self> {
        check_len(diag, dim)?;
        check_finite(diag, "diagonal")?;
        let mut t = Self::zeros(order, dim)?;
        for (i, &d) in diag.iter().enumerate() {
            let off = t.diagonal_offset(i);
            t.data[off] = d;
        }
        Ok(t)
    }

    /// The unit tensor: ones on the diagonal.
    pub fn unit(order: usize, dim: usize) -> Result<Self> {
        Self::make_diagonal(order, dim, &vec![1.0; dim])
    }

    pub fn identity_matrix(dim: usize) -> Result<Self> {
        Self::unit(2, dim)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    fn diagonal_offset(&self, i: usize) -> usize {
        (0..self.order).fold(0, |acc, _| acc * self.dim + i)
    }

    fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order || index.iter().any(|&i| i >= self.dim) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                order: self.order,
                dim: self.dim,
            });
        }
        Ok(index.iter().fold(0, |acc, &i| acc * self.dim + i))
    }

    /// Entry at a 0-based multi-index.
    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    /// Iterates over `(multi-index, value)` pairs with nonzero value, in
    /// row-major order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let mut idx = vec![0usize; self.order];
        self.data.iter().filter_map(move |&x| {
            let current = idx.clone();
            advance(&mut idx, self.dim);
            (x != 0.0).then_some((current, x))
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        let diag: Vec<usize> = (0..self.dim).map(|i| self.diagonal_offset(i)).collect();
        self.data
            .iter()
            .enumerate()
            .all(|(k, &x)| x == 0.0 || diag.contains(&k))
    }

    /// Diagonal entries `b[i, .., i]`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[self.diagonal_offset(i)]).collect()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().map(|x| t * x).collect(),
        }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, other: &Self, t: f64) -> Result<Self> {
        if other.order != self.order {
            return Err(Error::InvalidArgument(format!(
                "order mismatch: {} vs {}",
                self.order, other.order
            )));
        }
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + t * b)
            .collect();
        Ok(Self {
            order: self.order,
            dim: self.dim,
            data,
        })
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        check_len(v, self.dim)?;
        check_finite(v, "vector")
    }

    /// `B v^{m-1}`.
    pub fn contract_to_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(v)?;
        Ok(self.contract_vector_unchecked(v))
    }

    /// Contraction without shape checks; `v.len()` must equal the dimension.
    pub(crate) fn contract_vector_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let row_len = self.data.len() / n;
        let mut buf = vec![0.0; row_len];
        (0..n)
            .map(|i| {
                buf.copy_from_slice(&self.data[i * row_len..(i + 1) * row_len]);
                fold_trailing(&mut buf, v, self.order - 1)
            })
            .collect()
    }

    /// `B v^m`, contracting every index (independent of
    /// [`contract_to_vector`](Self::contract_to_vector)).
    pub fn contract_to_scalar(&self, v: &[f64]) -> Result<f64> {
        self.check_vector(v)?;
        let mut buf = self.data.clone();
        Ok(fold_trailing(&mut buf, v, self.order))
    }

    /// Jacobian of `v -> B v^{m-1}`, row-major `n x n`.
    pub fn jacobian(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(v)?;
        Ok(self.jacobian_unchecked(v))
    }

    pub(crate) fn jacobian_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let tail = self.order - 1;
        let mut jac = vec![0.0; n * n];
        if tail == 0 {
            return jac;
        }
        let row_len = self.data.len() / n;
        let mut idx = vec![0usize; tail];
        for i in 0..n {
            idx.iter_mut().for_each(|x| *x = 0);
            for &b in &self.data[i * row_len..(i + 1) * row_len] {
                if b != 0.0 {
                    for p in 0..tail {
                        let others: f64 = idx
                            .iter()
                            .enumerate()
                            .filter(|&(q, _)| q != p)
                            .map(|(_, &j)| v[j])
                            .product();
                        jac[i * n + idx[p]] += b * others;
                    }
                }
                advance(&mut idx, n);
            }
        }
        jac
    }

    /// Row subtensor `R_i(B)`: the order-`(m-1)` slice with the first index
    /// fixed at `i` (0-based).
    pub fn row_subtensor(&self, i: usize) -> Result<Self> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: vec![i],
                order: self.order,
                dim: self.dim,
            });
        }
        if self.order < 2 {
            return Err(Error::OrderOutOfRange(self.order - 1));
        }
        let row_len = self.data.len() / self.dim;
        Ok(Self {
            order: self.order - 1,
            dim: self.dim,
            data: self.data[i * row_len..(i + 1) * row_len].to_vec(),
        })
    }

    /// General tensor product of `self` (order `q >= 2`) with `rhs` (order
    /// `k >= 1`):
    ///
    /// ```text
    /// c[j, a1, .., a_{q-1}] = sum_{j2..jq} a[j, j2, .., jq] b[j2, a1] .. b[jq, a_{q-1}]
    /// ```
    ///
    /// where each `a_t` is a multi-index of length `k - 1`. The result has
    /// order `(q-1)(k-1) + 1` and may exceed [`MAX_ORDER`]; its size is
    /// bounded by `budget` entries instead.
    pub fn shao_product(&self, rhs: &Self, budget: usize) -> Result<Self> {
        if self.order < 2 {
            return Err(Error::OrderOutOfRange(self.order));
        }
        if rhs.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let n = self.dim;
        let q = self.order;
        let k = rhs.order;
        let out_order = (q - 1) * (k - 1) + 1;
        let needed = entry_count(out_order, n).unwrap_or(usize::MAX);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        // rhs viewed as an n x w matrix, w = n^{k-1}
        let w = rhs.data.len() / n;
        let mut cur = self.data.clone();
        // Replace trailing index t (1-based position) by a block of k-1 indices.
        for t in 1..q {
            let left = n * w.pow((t - 1) as u32);
            let right = n.pow((q - 1 - t) as u32);
            let mut next = vec![0.0; left * w * right];
            for l in 0..left {
                for j in 0..n {
                    let src = &cur[(l * n + j) * right..(l * n + j + 1) * right];
                    for (a, &b) in rhs.data[j * w..(j + 1) * w].iter().enumerate() {
                        if b == 0.0 {
                            continue;
                        }
                        let dst = &mut next[(l * w + a) * right..(l * w + a + 1) * right];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += b * s;
                        }
                    }
                }
            }
            cur = next;
        }
        check_finite(&cur, "product entries")?;
        Ok(Self {
            order: out_order,
            dim: n,
            data: cur,
        })
    }
}

/// Contracts every index of a row-major block of `n^r` entries with `v`,
/// innermost index first. Overwrites `buf`.
fn fold_trailing(buf: &mut [f64], v: &[f64], indices: usize) -> f64 {
    let n = v.len();
    let mut len = buf.len();
    for _ in 0..indices {
        let next = len / n;
        for r in 0..next {
            let s: f64 = buf[r * n..(r + 1) * n]
                .iter()
                .zip(v)
                .map(|(b, x)| b * x)
                .sum();
            buf[r] = s;
        }
        len = next;
    }
    buf[0]
}

/// Row-major odometer increment.
pub(crate) fn advance(idx: &mut [usize], dim: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return;
        }
        *slot = 0;
    }
}
