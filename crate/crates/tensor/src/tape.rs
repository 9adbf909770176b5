use crate::error::{Result, TensorError};
use crate::scalar::Scalar;
use crate::tensor::{matmul_nn, matmul_nt, matmul_tn, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    Transpose(Var),
    RowMean(Var),
    Sum(Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    NormalizeSum(Var, Vec<T>),
    GatherRows(Var, Vec<usize>),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    BceWithLogits(Var, T),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records differentiable operations in execution order.
///
/// A tape is single-threaded and single-use: build the forward graph, call
/// [`Tape::backward`] once on a scalar, then read gradients with
/// [`Tape::grad`].
#[derive(Debug)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last `backward` output with respect to `v`, if any
    /// flowed into it.
    pub fn grad(&self, v: Var) -> Option<Tensor<T>> {
        let g = self.grads.get(v.0)?.as_ref()?;
        Some(Tensor::new(self.nodes[v.0].value.shape().to_vec(), g.clone()).expect("grad shape"))
    }

    fn push(&mut self, name: &'static str, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn dims(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        self.nodes[v.0].value.ensure_matrix(op)
    }

    fn mismatch(&self, op: &'static str, a: Var, b: Var) -> TensorError {
        TensorError::ShapeMismatch {
            op,
            left: self.nodes[a.0].value.shape().to_vec(),
            right: self.nodes[b.0].value.shape().to_vec(),
        }
    }

    fn unary(&mut self, name: &'static str, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Result<Var> {
        let (r, c) = self.dims(x, name)?;
        let data = self.nodes[x.0].value.data().iter().map(|&v| f(v)).collect();
        let value = Tensor::new(vec![r, c], data)?;
        self.push(name, value, op, &[x])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a, "matmul")?;
        let (k2, n) = self.dims(b, "matmul")?;
        if k != k2 {
            return Err(self.mismatch("matmul", a, b));
        }
        let data = matmul_nn(self.value(a).data(), self.value(b).data(), m, k, n);
        let value = Tensor::new(vec![m, n], data)?;
        self.push("matmul", value, Op::MatMul(a, b), &[a, b])
    }

    /// Elementwise sum of equally shaped operands, or a `[m, n]` matrix plus
    /// a length-`n` row broadcast over every row.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, n) = self.dims(a, "add")?;
        let (bm, bn) = self.dims(b, "add")?;
        if (m, n) == (bm, bn) {
            let data = self
                .value(a)
                .data()
                .iter()
                .zip(self.value(b).data())
                .map(|(&x, &y)| x + y)
                .collect();
            let value = Tensor::new(vec![m, n], data)?;
            return self.push("add", value, Op::Add(a, b), &[a, b]);
        }
        if bm == 1 && bn == n {
            let bias = self.value(b).data().to_vec();
            let mut data = self.value(a).data().to_vec();
            for row in data.chunks_mut(n) {
                for (x, &y) in row.iter_mut().zip(&bias) {
                    *x += y;
                }
            }
            let value = Tensor::new(vec![m, n], data)?;
            return self.push("add", value, Op::AddRow(a, b), &[a, b]);
        }
        Err(self.mismatch("add", a, b))
    }

    /// Elementwise product of equally shaped operands.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, n) = self.dims(a, "mul")?;
        if (m, n) != self.dims(b, "mul")? {
            return Err(self.mismatch("mul", a, b));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let value = Tensor::new(vec![m, n], data)?;
        self.push("mul", value, Op::Mul(a, b), &[a, b])
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Result<Var> {
        self.unary("scale", x, |v| v * factor, Op::Scale(x, factor))
    }

    /// Concatenates along the last axis; all parts need the same row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(TensorError::BadShape {
                shape: vec![],
                len: 0,
            });
        };
        let (m, _) = self.dims(first, "concat")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pm, pn) = self.dims(p, "concat")?;
            if pm != m {
                return Err(self.mismatch("concat", first, p));
            }
            widths.push(pn);
        }
        let n: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let value = Tensor::new(vec![m, n], data)?;
        self.push("concat", value, Op::Concat(parts.to_vec()), parts)
    }

    /// Columns `start..end` of every row.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.dims(x, "slice_cols")?;
        if start >= end || end > n {
            return Err(TensorError::OutOfRange {
                op: "slice_cols",
                index: end,
                limit: n,
            });
        }
        let src = self.value(x);
        let mut data = Vec::with_capacity(m * (end - start));
        for r in 0..m {
            data.extend_from_slice(&src.row_slice(r)[start..end]);
        }
        let value = Tensor::new(vec![m, end - start], data)?;
        self.push("slice_cols", value, Op::SliceCols(x, start), &[x])
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let (m, n) = self.dims(x, "transpose")?;
        let src = self.value(x).data();
        let mut data = vec![T::zero(); m * n];
        for r in 0..m {
            for c in 0..n {
                data[c * m + r] = src[r * n + c];
            }
        }
        let value = Tensor::new(vec![n, m], data)?;
        self.push("transpose", value, Op::Transpose(x), &[x])
    }

    /// Mean over rows: `[m, n] -> [1, n]`.
    pub fn row_mean(&mut self, x: Var) -> Result<Var> {
        let (m, n) = self.dims(x, "row_mean")?;
        if m == 0 {
            return Err(TensorError::OutOfRange {
                op: "row_mean",
                index: 0,
                limit: 0,
            });
        }
        let src = self.value(x);
        let mut data = vec![T::zero(); n];
        for r in 0..m {
            for (acc, &v) in data.iter_mut().zip(src.row_slice(r)) {
                *acc += v;
            }
        }
        let inv = T::one() / T::of(m as f64);
        data.iter_mut().for_each(|v| *v *= inv);
        let value = Tensor::new(vec![1, n], data)?;
        self.push("row_mean", value, Op::RowMean(x), &[x])
    }

    /// Sum of all elements as a `[1, 1]` scalar.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let total = self.value(x).data().iter().copied().sum();
        self.push("sum", Tensor::scalar(total), Op::Sum(x), &[x])
    }

    /// ReLU; the derivative at exactly zero is taken to be zero.
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary("relu", x, |v| if v > T::zero() { v } else { T::zero() }, Op::Relu(x))
    }

    /// Which ReLU inputs recorded so far are positive, in tape order. Two
    /// evaluations of the same function share a pattern exactly when no
    /// ReLU switched between its linear and flat pieces.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .filter_map(|node| match node.op {
                Op::Relu(x) => Some(x),
                _ => None,
            })
            .flat_map(|x| self.value(x).data().iter().map(|&v| v > T::zero()))
            .collect()
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary("tanh", x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary("sigmoid", x, sigmoid, Op::Sigmoid(x))
    }

    /// Row-wise softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let (m, n) = self.dims(x, "softmax")?;
        let mut data = self.value(x).data().to_vec();
        if n > 0 {
            for row in data.chunks_mut(n) {
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let mut total = T::zero();
                for v in row.iter_mut() {
                    *v = (*v - max).exp();
                    total += *v;
                }
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
        let value = Tensor::new(vec![m, n], data)?;
        self.push("softmax", value, Op::Softmax(x), &[x])
    }

    /// Row-wise `x_i / sum_j x_j`. Fails when a row sum has magnitude below
    /// `min_abs`.
    pub fn normalize_sum(&mut self, x: Var, min_abs: f64) -> Result<Var> {
        let (m, n) = self.dims(x, "normalize_sum")?;
        let mut data = self.value(x).data().to_vec();
        let mut sums = Vec::with_capacity(m);
        if n > 0 {
            for row in data.chunks_mut(n) {
                let total: T = row.iter().copied().sum();
                if total.abs().as_f64() < min_abs {
                    return Err(TensorError::VanishingDenominator {
                        op: "normalize_sum",
                        value: total.as_f64(),
                    });
                }
                row.iter_mut().for_each(|v| *v /= total);
                sums.push(total);
            }
        }
        let value = Tensor::new(vec![m, n], data)?;
        self.push("normalize_sum", value, Op::NormalizeSum(x, sums), &[x])
    }

    /// Selects rows of `table` by index (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (m, n) = self.dims(table, "gather_rows")?;
        let src = self.value(table);
        let mut data = Vec::with_capacity(ids.len() * n);
        for &id in ids {
            if id >= m {
                return Err(TensorError::OutOfRange {
                    op: "gather_rows",
                    index: id,
                    limit: m,
                });
            }
            data.extend_from_slice(src.row_slice(id));
        }
        let value = Tensor::new(vec![ids.len(), n], data)?;
        self.push("gather_rows", value, Op::GatherRows(table, ids.to_vec()), &[table])
    }

    /// Row-wise layer normalization with learned gain and bias, each a
    /// length-`n` row.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.dims(x, "layer_norm")?;
        if self.dims(gain, "layer_norm")? != (1, n) {
            return Err(self.mismatch("layer_norm", x, gain));
        }
        if self.dims(bias, "layer_norm")? != (1, n) {
            return Err(self.mismatch("layer_norm", x, bias));
        }
        let g = self.value(gain).data().to_vec();
        let b = self.value(bias).data().to_vec();
        let src = self.value(x).data();
        let mut xhat = Vec::with_capacity(m * n);
        let mut inv_std = Vec::with_capacity(m);
        let mut out = Vec::with_capacity(m * n);
        let nf = T::of(n as f64);
        for r in 0..m {
            let row = &src[r * n..(r + 1) * n];
            let mean = row.iter().copied().sum::<T>() / nf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
            let inv = T::one() / (var + T::of(LAYER_NORM_EPS)).sqrt();
            inv_std.push(inv);
            for (c, &v) in row.iter().enumerate() {
                let h = (v - mean) * inv;
                xhat.push(h);
                out.push(h * g[c] + b[c]);
            }
        }
        let value = Tensor::new(vec![m, n], out)?;
        self.push(
            "layer_norm",
            value,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            &[x, gain, bias],
        )
    }

    /// Numerically stable binary cross-entropy on a single logit.
    pub fn bce_with_logits(&mut self, logit: Var, target: T) -> Result<Var> {
        if self.value(logit).len() != 1 {
            return Err(TensorError::NotScalar(self.value(logit).shape().to_vec()));
        }
        let z = self.value(logit).data()[0];
        let loss = z.max(T::zero()) - z * target + (-z.abs()).exp().ln_1p();
        self.push("bce_with_logits", Tensor::scalar(loss), Op::BceWithLogits(logit, target), &[logit])
    }

    /// Reverse pass from a single-element output. Gradients from every path
    /// are summed into each node.
    pub fn backward(&mut self, output: Var) -> Result<()> {
        if self.value(output).len() != 1 {
            return Err(TensorError::NotScalar(self.value(output).shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(vec![T::one()]);
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            if self.nodes[idx].requires_grad {
                self.propagate(idx, &g, &mut grads);
            }
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[idx];
        let nodes = &self.nodes;
        let mut acc = |v: Var, contrib: &[T]| {
            if !nodes[v.0].requires_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); nodes[v.0].value.len()]);
            for (s, &c) in slot.iter_mut().zip(contrib) {
                *s += c;
            }
        };
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (self.value(*a).rows(), self.value(*a).cols());
                let n = self.value(*b).cols();
                if nodes[a.0].requires_grad {
                    acc(*a, &matmul_nt(g, self.value(*b).data(), m, n, k));
                }
                if nodes[b.0].requires_grad {
                    acc(*b, &matmul_tn(self.value(*a).data(), g, m, k, n));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g);
                acc(*b, g);
            }
            Op::AddRow(a, b) => {
                acc(*a, g);
                let n = out.cols();
                let mut col_sums = vec![T::zero(); n];
                for row in g.chunks(n) {
                    for (s, &v) in col_sums.iter_mut().zip(row) {
                        *s += v;
                    }
                }
                acc(*b, &col_sums);
            }
            Op::Mul(a, b) => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                let ga: Vec<T> = g.iter().zip(bv).map(|(&g, &y)| g * y).collect();
                let gb: Vec<T> = g.iter().zip(av).map(|(&g, &x)| g * x).collect();
                acc(*a, &ga);
                acc(*b, &gb);
            }
            Op::Scale(x, factor) => {
                let gx: Vec<T> = g.iter().map(|&v| v * *factor).collect();
                acc(*x, &gx);
            }
            Op::Concat(parts) => {
                let n = out.cols();
                let mut offset = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    let mut gp = Vec::with_capacity(out.rows() * w);
                    for row in g.chunks(n) {
                        gp.extend_from_slice(&row[offset..offset + w]);
                    }
                    acc(*p, &gp);
                    offset += w;
                }
            }
            Op::SliceCols(x, start) => {
                let n = self.value(*x).cols();
                let w = out.cols();
                let mut gx = vec![T::zero(); self.value(*x).len()];
                for (r, row) in g.chunks(w).enumerate() {
                    gx[r * n + start..r * n + start + w].copy_from_slice(row);
                }
                acc(*x, &gx);
            }
            Op::Transpose(x) => {
                let (m, n) = (self.value(*x).rows(), self.value(*x).cols());
                let mut gx = vec![T::zero(); m * n];
                for r in 0..m {
                    for c in 0..n {
                        gx[r * n + c] = g[c * m + r];
                    }
                }
                acc(*x, &gx);
            }
            Op::RowMean(x) => {
                let m = self.value(*x).rows();
                let inv = T::one() / T::of(m as f64);
                let row: Vec<T> = g.iter().map(|&v| v * inv).collect();
                let gx: Vec<T> = (0..m).flat_map(|_| row.iter().copied()).collect();
                acc(*x, &gx);
            }
            Op::Sum(x) => {
                let gx = vec![g[0]; self.value(*x).len()];
                acc(*x, &gx);
            }
            Op::Relu(x) => {
                let gx: Vec<T> = g
                    .iter()
                    .zip(self.value(*x).data())
                    .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
                    .collect();
                acc(*x, &gx);
            }
            Op::Tanh(x) => {
                let gx: Vec<T> = g
                    .iter()
                    .zip(out.data())
                    .map(|(&g, &y)| g * (T::one() - y * y))
                    .collect();
                acc(*x, &gx);
            }
            Op::Sigmoid(x) => {
                let gx: Vec<T> = g
                    .iter()
                    .zip(out.data())
                    .map(|(&g, &y)| g * y * (T::one() - y))
                    .collect();
                acc(*x, &gx);
            }
            Op::Softmax(x) => {
                let n = out.cols();
                let mut gx = Vec::with_capacity(out.len());
                if n > 0 {
                    for (grow, yrow) in g.chunks(n).zip(out.data().chunks(n)) {
                        let dot: T = grow.iter().zip(yrow).map(|(&a, &b)| a * b).sum();
                        gx.extend(grow.iter().zip(yrow).map(|(&gi, &yi)| yi * (gi - dot)));
                    }
                }
                acc(*x, &gx);
            }
            Op::NormalizeSum(x, sums) => {
                let n = out.cols();
                let mut gx = Vec::with_capacity(out.len());
                if n > 0 {
                    for ((grow, yrow), &s) in g.chunks(n).zip(out.data().chunks(n)).zip(sums) {
                        let dot: T = grow.iter().zip(yrow).map(|(&a, &b)| a * b).sum();
                        gx.extend(grow.iter().map(|&gi| (gi - dot) / s));
                    }
                }
                acc(*x, &gx);
            }
            Op::GatherRows(table, ids) => {
                let n = out.cols();
                let mut gt = vec![T::zero(); self.value(*table).len()];
                for (row, &id) in g.chunks(n).zip(ids) {
                    for (dst, &v) in gt[id * n..(id + 1) * n].iter_mut().zip(row) {
                        *dst += v;
                    }
                }
                acc(*table, &gt);
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let n = out.cols();
                let gv = self.value(*gain).data();
                let nf = T::of(n as f64);
                let mut dgain = vec![T::zero(); n];
                let mut dbias = vec![T::zero(); n];
                let mut dx = Vec::with_capacity(out.len());
                for ((grow, hrow), &inv) in g.chunks(n).zip(xhat.chunks(n)).zip(inv_std) {
                    let mut sum_dh = T::zero();
                    let mut sum_dh_h = T::zero();
                    for c in 0..n {
                        dgain[c] += grow[c] * hrow[c];
                        dbias[c] += grow[c];
                        let dh = grow[c] * gv[c];
                        sum_dh += dh;
                        sum_dh_h += dh * hrow[c];
                    }
                    for c in 0..n {
                        let dh = grow[c] * gv[c];
                        dx.push(inv / nf * (nf * dh - sum_dh - hrow[c] * sum_dh_h));
                    }
                }
                acc(*x, &dx);
                acc(*gain, &dgain);
                acc(*bias, &dbias);
            }
            Op::BceWithLogits(logit, target) => {
                let z = self.value(*logit).data()[0];
                acc(*logit, &[g[0] * (sigmoid(z) - *target)]);
            }
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}
