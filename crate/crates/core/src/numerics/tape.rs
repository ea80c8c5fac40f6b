//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every value lives in a [`Tape`] node and is addressed by a [`Var`]. Kernels
//! append a node recording their inputs whenever any input requires a
//! gradient; otherwise the result is stored as an untracked constant.
//! [`Tape::backward`] walks the nodes in reverse, which is a valid topological
//! order because a node can only reference nodes created before it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gemm::{mm_acc, mm_at_acc, mm_bt_acc};
use super::{NumericsError, Tensor};

/// Tanh-approximation GELU constant, sqrt(2 / pi).
const GELU_SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044_715;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var },
    Add { a: Var, b: Var },
    Scale { a: Var, factor: f64 },
    Relu { a: Var },
    Gelu { a: Var },
    Softmax { a: Var },
    LayerNorm { a: Var, gain: Var, bias: Var, normalized: Vec<f64>, inv_std: Vec<f64> },
    Embedding { table: Var, ids: Vec<usize> },
    Dropout { a: Var, mask: Vec<f64> },
    CrossEntropy { logits: Var, targets: Vec<usize>, probs: Vec<f64> },
    Sum { a: Var },
    Mean { a: Var },
    Reshape { a: Var },
    Permute { a: Var, axes: Vec<usize> },
    SelectLast { a: Var, index: usize },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    requires_grad: bool,
    op: Op,
    grad: Option<Vec<f64>>,
}

/// Record of executed differentiable operations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    /// Operations recorded since the last backward pass.
    pending: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input tensor. Gradients are only reported for leaves created
    /// with `requires_grad`.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op: Op::Leaf,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient accumulated into a leaf by the last backward pass.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Vec<f64>> {
        self.nodes[v.0].grad.take()
    }

    fn push(&mut self, value: Tensor, inputs: &[Var], op: Op) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let op = if requires_grad {
            self.pending += 1;
            op
        } else {
            Op::Leaf
        };
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// `a[.., m, k] · b[k, n]` (b shared across the batch) or
    /// `a[.., m, k] · b[.., k, n]` with identical leading axes.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        let dims = matmul_dims(sa, sb).ok_or_else(|| NumericsError::ShapeMismatch {
            op: "matmul",
            left: sa.to_vec(),
            right: sb.to_vec(),
        })?;
        let mut out_shape = sa[..sa.len() - 1].to_vec();
        out_shape.push(dims.n);
        let mut out = vec![0.0; dims.batch * dims.m * dims.n];
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        for i in 0..dims.batch {
            let b_off = if dims.shared_b { 0 } else { i * dims.k * dims.n };
            mm_acc(
                dims.m,
                dims.k,
                dims.n,
                &av[i * dims.m * dims.k..],
                &bv[b_off..b_off + dims.k * dims.n],
                &mut out[i * dims.m * dims.n..],
            );
        }
        Ok(self.push(Tensor::new(out_shape, out)?, &[a, b], Op::MatMul { a, b }))
    }

    /// Elementwise sum. The smaller operand's shape must equal a suffix of the
    /// larger one's and is broadcast over the remaining leading axes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (va, vb) = (self.value(a), self.value(b));
        let (big, small) = if (va.len(), va.rank()) >= (vb.len(), vb.rank()) {
            (a, b)
        } else {
            (b, a)
        };
        let (sb, ss) = (self.value(big).shape(), self.value(small).shape());
        if !is_suffix(ss, sb) {
            return Err(NumericsError::ShapeMismatch {
                op: "add",
                left: self.value(a).shape().to_vec(),
                right: self.value(b).shape().to_vec(),
            });
        }
        let small_data = self.value(small).data();
        let n = small_data.len().max(1);
        let mut out = self.value(big).data().to_vec();
        for chunk in out.chunks_mut(n) {
            for (o, &s) in chunk.iter_mut().zip(small_data) {
                *o += s;
            }
        }
        let shape = sb.to_vec();
        Ok(self.push(
            Tensor::new(shape, out)?,
            &[a, b],
            Op::Add { a: big, b: small },
        ))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let x = self.value(a);
        let data = x.data().iter().map(|v| v * factor).collect();
        let value = Tensor::new(x.shape().to_vec(), data).expect("same shape");
        self.push(value, &[a], Op::Scale { a, factor })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let data = x.data().iter().map(|&v| v.max(0.0)).collect();
        let value = Tensor::new(x.shape().to_vec(), data).expect("same shape");
        self.push(value, &[a], Op::Relu { a })
    }

    /// GELU, tanh approximation:
    /// `0.5·x·(1 + tanh(sqrt(2/pi)·(x + 0.044715·x³)))`.
    pub fn gelu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let data = x
            .data()
            .iter()
            .map(|&v| {
                let t = (GELU_SQRT_2_OVER_PI * (v + GELU_CUBIC * v * v * v)).tanh();
                0.5 * v * (1.0 + t)
            })
            .collect();
        let value = Tensor::new(x.shape().to_vec(), data).expect("same shape");
        self.push(value, &[a], Op::Gelu { a })
    }

    /// Softmax over the last axis, with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Result<Var, NumericsError> {
        let x = self.value(a);
        if !x.all_finite() {
            return Err(NumericsError::NonFinite { op: "softmax" });
        }
        let mut data = x.data().to_vec();
        for row in data.chunks_mut(x.last_dim().max(1)) {
            softmax_in_place(row);
        }
        let value = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(value, &[a], Op::Softmax { a }))
    }

    /// Layer normalization over the last axis: `gain · (x − μ)/sqrt(σ² + ε) + bias`.
    pub fn layer_norm(
        &mut self,
        a: Var,
        gain: Var,
        bias: Var,
        epsilon: f64,
    ) -> Result<Var, NumericsError> {
        let x = self.value(a);
        let h = x.last_dim();
        for p in [gain, bias] {
            if self.value(p).shape() != [h] {
                return Err(NumericsError::ShapeMismatch {
                    op: "layer_norm",
                    left: x.shape().to_vec(),
                    right: self.value(p).shape().to_vec(),
                });
            }
        }
        let (g, b) = (self.value(gain).data(), self.value(bias).data());
        let rows = x.len() / h.max(1);
        let mut normalized = vec![0.0; x.len()];
        let mut inv_std = vec![0.0; rows];
        let mut out = vec![0.0; x.len()];
        for r in 0..rows {
            let row = &x.data()[r * h..(r + 1) * h];
            let mean = row.iter().sum::<f64>() / h as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
            let s = 1.0 / (var + epsilon).sqrt();
            inv_std[r] = s;
            for j in 0..h {
                let n = (row[j] - mean) * s;
                normalized[r * h + j] = n;
                out[r * h + j] = g[j] * n + b[j];
            }
        }
        let value = Tensor::new(x.shape().to_vec(), out)?;
        Ok(self.push(
            value,
            &[a, gain, bias],
            Op::LayerNorm {
                a,
                gain,
                bias,
                normalized,
                inv_std,
            },
        ))
    }

    /// Gathers rows of `table[V, H]`; the result has shape `ids_shape + [H]`.
    pub fn embedding(
        &mut self,
        table: Var,
        ids: &[usize],
        ids_shape: &[usize],
    ) -> Result<Var, NumericsError> {
        let t = self.value(table);
        if t.rank() != 2 || ids_shape.iter().product::<usize>() != ids.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "embedding",
                left: t.shape().to_vec(),
                right: ids_shape.to_vec(),
            });
        }
        let (vocab, h) = (t.shape()[0], t.shape()[1]);
        let mut out = Vec::with_capacity(ids.len() * h);
        for &id in ids {
            if id >= vocab {
                return Err(NumericsError::IndexOutOfRange {
                    op: "embedding",
                    index: id,
                    bound: vocab,
                });
            }
            out.extend_from_slice(&t.data()[id * h..(id + 1) * h]);
        }
        let mut shape = ids_shape.to_vec();
        shape.push(h);
        let value = Tensor::new(shape, out)?;
        Ok(self.push(
            value,
            &[table],
            Op::Embedding {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    /// Inverted dropout. Identity when `rate` is 0 or `training` is false;
    /// otherwise the keep mask is drawn from a ChaCha stream seeded by `seed`.
    pub fn dropout(&mut self, a: Var, rate: f64, training: bool, seed: u64) -> Result<Var, NumericsError> {
        if !training || rate == 0.0 {
            return Ok(a);
        }
        if !(0.0..1.0).contains(&rate) {
            return Err(NumericsError::InvalidArgument {
                op: "dropout",
                detail: format!("rate {rate} outside [0, 1)"),
            });
        }
        let keep_scale = 1.0 / (1.0 - rate);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self.value(a);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep_scale })
            .collect();
        let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        Ok(self.push(value, &[a], Op::Dropout { a, mask }))
    }

    /// Mean over rows of `−log softmax(logits_row)[target]`; one target per row
    /// of the last axis. Returns a scalar.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var, NumericsError> {
        let x = self.value(logits);
        let c = x.last_dim();
        let rows = x.len() / c.max(1);
        if rows != targets.len() || c == 0 {
            return Err(NumericsError::ShapeMismatch {
                op: "cross_entropy",
                left: x.shape().to_vec(),
                right: vec![targets.len()],
            });
        }
        if !x.all_finite() {
            return Err(NumericsError::NonFinite { op: "cross_entropy" });
        }
        let mut probs = x.data().to_vec();
        let mut total = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            if t >= c {
                return Err(NumericsError::IndexOutOfRange {
                    op: "cross_entropy",
                    index: t,
                    bound: c,
                });
            }
            let row = &mut probs[r * c..(r + 1) * c];
            let raw = &x.data()[r * c..(r + 1) * c];
            let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = raw.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
            total += log_z - raw[t];
            softmax_in_place(row);
        }
        let value = Tensor::scalar(total / rows as f64);
        Ok(self.push(
            value,
            &[logits],
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(value, &[a], Op::Sum { a })
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let value = Tensor::scalar(x.data().iter().sum::<f64>() / x.len().max(1) as f64);
        self.push(value, &[a], Op::Mean { a })
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, NumericsError> {
        let value = self.value(a).reshaped(shape)?;
        Ok(self.push(value, &[a], Op::Reshape { a }))
    }

    /// Reorders axes: output axis `i` is input axis `axes[i]`.
    pub fn permute(&mut self, a: Var, axes: &[usize]) -> Result<Var, NumericsError> {
        let x = self.value(a);
        let rank = x.rank();
        let mut seen = vec![false; rank];
        if axes.len() != rank || axes.iter().any(|&ax| ax >= rank || std::mem::replace(&mut seen[ax], true)) {
            return Err(NumericsError::InvalidArgument {
                op: "permute",
                detail: format!("axes {axes:?} do not permute rank {rank}"),
            });
        }
        let out_shape: Vec<usize> = axes.iter().map(|&ax| x.shape()[ax]).collect();
        let data = permute_data(x.data(), x.shape(), axes);
        let value = Tensor::new(out_shape, data)?;
        Ok(self.push(
            value,
            &[a],
            Op::Permute {
                a,
                axes: axes.to_vec(),
            },
        ))
    }

    /// Picks entry `index` of the last axis, dropping that axis.
    pub fn select_last(&mut self, a: Var, index: usize) -> Result<Var, NumericsError> {
        let x = self.value(a);
        let c = x.last_dim();
        if x.rank() == 0 || index >= c {
            return Err(NumericsError::IndexOutOfRange {
                op: "select_last",
                index,
                bound: c,
            });
        }
        let data = x.data().chunks(c).map(|row| row[index]).collect();
        let shape = x.shape()[..x.rank() - 1].to_vec();
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, &[a], Op::SelectLast { a, index }))
    }

    /// Propagates gradients from a scalar `loss` into every tracked leaf.
    ///
    /// Afterwards the recorded operations are discarded: intermediate nodes
    /// become constants, so a second call without new forward operations is
    /// an error.
    pub fn backward(&mut self, loss: Var) -> Result<(), NumericsError> {
        if self.pending == 0 {
            return Err(NumericsError::EmptyTape);
        }
        if !self.value(loss).is_scalar() {
            return Err(NumericsError::NotScalar {
                shape: self.value(loss).shape().to_vec(),
            });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        if self.nodes[loss.0].requires_grad {
            self.nodes[loss.0].grad = Some(vec![1.0]);
        }
        for i in (0..=loss.0).rev() {
            if matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            self.propagate(i, &g)?;
        }
        for node in &mut self.nodes {
            if !matches!(node.op, Op::Leaf) {
                node.op = Op::Leaf;
                node.requires_grad = false;
                node.grad = None;
            }
        }
        self.pending = 0;
        Ok(())
    }

    fn accumulate(&mut self, v: Var, delta: Vec<f64>) {
        let node = &mut self.nodes[v.0];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(g) => g.iter_mut().zip(&delta).for_each(|(a, b)| *a += b),
            None => node.grad = Some(delta),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&mut self, i: usize, g: &[f64]) -> Result<(), NumericsError> {
        let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::MatMul { a, b } => {
                let dims = matmul_dims(self.value(*a).shape(), self.value(*b).shape())
                    .expect("validated in forward");
                if self.wants(*a) {
                    let bv = self.value(*b).data();
                    let mut da = vec![0.0; self.value(*a).len()];
                    for t in 0..dims.batch {
                        let b_off = if dims.shared_b { 0 } else { t * dims.k * dims.n };
                        mm_bt_acc(
                            dims.m,
                            dims.n,
                            dims.k,
                            &g[t * dims.m * dims.n..],
                            &bv[b_off..b_off + dims.k * dims.n],
                            &mut da[t * dims.m * dims.k..],
                        );
                    }
                    self.accumulate(*a, da);
                }
                if self.wants(*b) {
                    let av = self.value(*a).data();
                    let mut db = vec![0.0; self.value(*b).len()];
                    for t in 0..dims.batch {
                        let b_off = if dims.shared_b { 0 } else { t * dims.k * dims.n };
                        mm_at_acc(
                            dims.m,
                            dims.k,
                            dims.n,
                            &av[t * dims.m * dims.k..],
                            &g[t * dims.m * dims.n..],
                            &mut db[b_off..b_off + dims.k * dims.n],
                        );
                    }
                    self.accumulate(*b, db);
                }
            }
            Op::Add { a, b } => {
                if self.wants(*b) {
                    let n = self.value(*b).len().max(1);
                    let mut db = vec![0.0; n];
                    for chunk in g.chunks(n) {
                        db.iter_mut().zip(chunk).for_each(|(d, x)| *d += x);
                    }
                    self.accumulate(*b, db);
                }
                self.accumulate(*a, g.to_vec());
            }
            Op::Scale { a, factor } => {
                self.accumulate(*a, g.iter().map(|v| v * factor).collect());
            }
            Op::Relu { a } => {
                let x = self.value(*a).data();
                let d = g
                    .iter()
                    .zip(x)
                    .map(|(gv, &xv)| if xv > 0.0 { *gv } else { 0.0 })
                    .collect();
                self.accumulate(*a, d);
            }
            Op::Gelu { a } => {
                let x = self.value(*a).data();
                let d = g
                    .iter()
                    .zip(x)
                    .map(|(gv, &v)| {
                        let inner = GELU_SQRT_2_OVER_PI * (v + GELU_CUBIC * v * v * v);
                        let t = inner.tanh();
                        let dinner = GELU_SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * v * v);
                        gv * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner)
                    })
                    .collect();
                self.accumulate(*a, d);
            }
            Op::Softmax { a } => {
                let y = self.nodes[i].value.data();
                let c = self.nodes[i].value.last_dim().max(1);
                let mut d = vec![0.0; y.len()];
                for ((dr, yr), gr) in d.chunks_mut(c).zip(y.chunks(c)).zip(g.chunks(c)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                    for j in 0..c {
                        dr[j] = yr[j] * (gr[j] - dot);
                    }
                }
                self.accumulate(*a, d);
            }
            Op::LayerNorm {
                a,
                gain,
                bias,
                normalized,
                inv_std,
            } => {
                let h = self.value(*gain).len();
                let gv = self.value(*gain).data().to_vec();
                let mut dgain = vec![0.0; h];
                let mut dbias = vec![0.0; h];
                let mut dx = vec![0.0; g.len()];
                for (r, s) in inv_std.iter().enumerate() {
                    let gr = &g[r * h..(r + 1) * h];
                    let nr = &normalized[r * h..(r + 1) * h];
                    let mut sum_d = 0.0;
                    let mut sum_dn = 0.0;
                    for j in 0..h {
                        dgain[j] += gr[j] * nr[j];
                        dbias[j] += gr[j];
                        let dn = gr[j] * gv[j];
                        sum_d += dn;
                        sum_dn += dn * nr[j];
                    }
                    for j in 0..h {
                        let dn = gr[j] * gv[j];
                        dx[r * h + j] = s / h as f64 * (h as f64 * dn - sum_d - nr[j] * sum_dn);
                    }
                }
                self.accumulate(*a, dx);
                self.accumulate(*gain, dgain);
                self.accumulate(*bias, dbias);
            }
            Op::Embedding { table, ids } => {
                if self.wants(*table) {
                    let h = self.value(*table).shape()[1];
                    let mut dt = vec![0.0; self.value(*table).len()];
                    for (k, &id) in ids.iter().enumerate() {
                        for j in 0..h {
                            dt[id * h + j] += g[k * h + j];
                        }
                    }
                    self.accumulate(*table, dt);
                }
            }
            Op::Dropout { a, mask } => {
                self.accumulate(*a, g.iter().zip(mask).map(|(x, m)| x * m).collect());
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            } => {
                let c = self.value(*logits).last_dim();
                let rows = targets.len() as f64;
                let mut d: Vec<f64> = probs.iter().map(|p| p * g[0] / rows).collect();
                for (r, &t) in targets.iter().enumerate() {
                    d[r * c + t] -= g[0] / rows;
                }
                self.accumulate(*logits, d);
            }
            Op::Sum { a } => {
                let n = self.value(*a).len();
                self.accumulate(*a, vec![g[0]; n]);
            }
            Op::Mean { a } => {
                let n = self.value(*a).len();
                self.accumulate(*a, vec![g[0] / n.max(1) as f64; n]);
            }
            Op::Reshape { a } => self.accumulate(*a, g.to_vec()),
            Op::Permute { a, axes } => {
                let mut inverse = vec![0; axes.len()];
                for (i, &ax) in axes.iter().enumerate() {
                    inverse[ax] = i;
                }
                let out_shape = self.nodes[i].value.shape().to_vec();
                let d = permute_data(g, &out_shape, &inverse);
                self.accumulate(*a, d);
            }
            Op::SelectLast { a, index } => {
                let c = self.value(*a).last_dim();
                let mut d = vec![0.0; self.value(*a).len()];
                for (r, gv) in g.iter().enumerate() {
                    d[r * c + index] = *gv;
                }
                self.accumulate(*a, d);
            }
        }
        self.nodes[i].op = op;
        Ok(())
    }
}

struct MatMulDims {
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
    shared_b: bool,
}

fn matmul_dims(sa: &[usize], sb: &[usize]) -> Option<MatMulDims> {
    if sa.len() < 2 || sb.len() < 2 {
        return None;
    }
    let (m, k) = (sa[sa.len() - 2], sa[sa.len() - 1]);
    let (kb, n) = (sb[sb.len() - 2], sb[sb.len() - 1]);
    if k != kb {
        return None;
    }
    let lead_a = &sa[..sa.len() - 2];
    let batch = lead_a.iter().product();
    let shared_b = sb.len() == 2;
    if !shared_b && lead_a != &sb[..sb.len() - 2] {
        return None;
    }
    Some(MatMulDims {
        batch,
        m,
        k,
        n,
        shared_b,
    })
}

fn is_suffix(small: &[usize], big: &[usize]) -> bool {
    small.len() <= big.len() && big[big.len() - small.len()..] == *small
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        z += *v;
    }
    for v in row.iter_mut() {
        *v /= z;
    }
}

fn permute_data(data: &[f64], shape: &[usize], axes: &[usize]) -> Vec<f64> {
    let rank = shape.len();
    let mut strides = vec![1usize; rank];
    for d in (0..rank.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    let out_shape: Vec<usize> = axes.iter().map(|&ax| shape[ax]).collect();
    let out_strides: Vec<usize> = axes.iter().map(|&ax| strides[ax]).collect();
    let mut out = Vec::with_capacity(data.len());
    let mut idx = vec![0usize; rank];
    for _ in 0..data.len() {
        let src: usize = idx.iter().zip(&out_strides).map(|(i, s)| i * s).sum();
        out.push(data[src]);
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < out_shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}
