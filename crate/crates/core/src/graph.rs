//! Reverse-mode automatic differentiation over 2-D values.
//!
//! A [`Graph`] records every op as it is evaluated. Values are held in `f64`
//! while parameters stay `f32` in [`ModelParams`]; the wider tape keeps
//! finite-difference checks meaningful. Node ids are issued in evaluation
//! order, so walking the tape backwards is a valid topological order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::{gelu, gelu_grad, sigmoid};
use crate::tensor::{ModelParams, Tensor};

/// Probabilities are clamped into `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-7;

const NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param,
    MatMul(NodeId, NodeId),
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    MulRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Gelu(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    SoftmaxRows(NodeId),
    Normalize(NodeId, Vec<f64>),
    GatherRows(NodeId, Vec<usize>),
    GatherElems(NodeId, Vec<usize>),
    ConcatCols(Vec<NodeId>),
    ConcatRows(Vec<NodeId>),
    SliceCols(NodeId, usize),
    RowDot(NodeId, NodeId),
    Bce(NodeId, Vec<f64>),
    Sum(NodeId),
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
}

/// Recorded forward computation borrowing the parameters it reads.
#[derive(Debug)]
pub struct Graph<'p> {
    params: &'p ModelParams,
    nodes: Vec<Node>,
    param_nodes: BTreeMap<String, NodeId>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ModelParams) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            param_nodes: BTreeMap::new(),
        }
    }

    pub fn params(&self) -> &'p ModelParams {
        self.params
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value[0]
    }

    pub fn row(&self, id: NodeId, row: usize) -> &[f64] {
        let n = &self.nodes[id.0];
        &n.value[row * n.cols..(row + 1) * n.cols]
    }

    /// Copies a node out as an `f32` tensor.
    pub fn to_tensor(&self, id: NodeId) -> Tensor {
        let n = &self.nodes[id.0];
        Tensor::matrix(n.rows, n.cols, n.value.iter().map(|&v| v as f32).collect())
            .expect("node shape is consistent")
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Result<NodeId> {
        debug_assert_eq!(rows * cols, value.len());
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{op:?}")));
        }
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Constant input; receives no gradient outside the tape.
    pub fn input(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> Result<NodeId> {
        if rows * cols != value.len() {
            return Err(Error::dim(
                "input",
                format!("{rows}x{cols} needs {} values, got {}", rows * cols, value.len()),
            ));
        }
        self.push(rows, cols, value, Op::Leaf)
    }

    pub fn input_tensor(&mut self, tensor: &Tensor) -> Result<NodeId> {
        let (rows, cols) = tensor.as_matrix_shape();
        let value = tensor.data().iter().map(|&v| f64::from(v)).collect();
        self.input(rows, cols, value)
    }

    /// Parameter leaf; repeated lookups share one node so gradients accumulate.
    pub fn param(&mut self, name: &str) -> Result<NodeId> {
        if let Some(&id) = self.param_nodes.get(name) {
            return Ok(id);
        }
        let tensor = self.params.get(name)?;
        let (rows, cols) = tensor.as_matrix_shape();
        let value = tensor.data().iter().map(|&v| f64::from(v)).collect();
        let id = self.push(rows, cols, value, Op::Param)?;
        self.param_nodes.insert(name.into(), id);
        Ok(id)
    }

    /// `a[m,k] · b[k,n]`
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(Error::dim("matmul", format!("{m}x{k} · {k2}x{n}")));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &y) in orow.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
        self.push(m, n, out, Op::MatMul(a, b))
    }

    /// `a[m,k] · b[n,k]ᵀ`; with `b` a `[d_out, d_in]` weight this is a
    /// bias-free linear layer applied to every row of `a`.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        if k != k2 {
            return Err(Error::dim("matmul_nt", format!("{m}x{k} · ({n}x{k2})ᵀ")));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &av[i * k..(i + 1) * k];
            for j in 0..n {
                let brow = &bv[j * k..(j + 1) * k];
                out[i * n + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
            }
        }
        self.push(m, n, out, Op::MatMulNt(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::dim("add", format!("{sa:?} + {sb:?}")));
        }
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        self.push(sa.0, sa.1, out, Op::Add(a, b))
    }

    /// `x[n,d] + row[1,d]` broadcast over rows.
    pub fn add_row(&mut self, x: NodeId, row: NodeId) -> Result<NodeId> {
        let (n, d) = self.check_row_broadcast("add_row", x, row)?;
        let rv = self.value(row);
        let out = self
            .value(x)
            .iter()
            .enumerate()
            .map(|(i, v)| v + rv[i % d])
            .collect();
        self.push(n, d, out, Op::AddRow(x, row))
    }

    /// `x[n,d] ⊙ row[1,d]` broadcast over rows.
    pub fn mul_row(&mut self, x: NodeId, row: NodeId) -> Result<NodeId> {
        let (n, d) = self.check_row_broadcast("mul_row", x, row)?;
        let rv = self.value(row);
        let out = self
            .value(x)
            .iter()
            .enumerate()
            .map(|(i, v)| v * rv[i % d])
            .collect();
        self.push(n, d, out, Op::MulRow(x, row))
    }

    fn check_row_broadcast(
        &self,
        op: &'static str,
        x: NodeId,
        row: NodeId,
    ) -> Result<(usize, usize)> {
        let (n, d) = self.shape(x);
        let (r, d2) = self.shape(row);
        if r != 1 || d != d2 {
            return Err(Error::dim(op, format!("{n}x{d} with row {r}x{d2}")));
        }
        Ok((n, d))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> Result<NodeId> {
        let (n, d) = self.shape(x);
        let out = self.value(x).iter().map(|v| v * factor).collect();
        self.push(n, d, out, Op::Scale(x, factor))
    }

    fn map(&mut self, x: NodeId, f: impl Fn(f64) -> f64, op: Op) -> Result<NodeId> {
        let (n, d) = self.shape(x);
        let out = self.value(x).iter().map(|&v| f(v)).collect();
        self.push(n, d, out, op)
    }

    pub fn gelu(&mut self, x: NodeId) -> Result<NodeId> {
        self.map(x, gelu, Op::Gelu(x))
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let (n, d) = self.shape(x);
        let xv = self.value(x);
        let mut out = vec![0.0; n * d];
        for r in 0..n {
            let row = &xv[r * d..(r + 1) * d];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (o, &v) in out[r * d..(r + 1) * d].iter_mut().zip(row) {
                *o = libm::exp(v - max);
                total += *o;
            }
            out[r * d..(r + 1) * d].iter_mut().for_each(|o| *o /= total);
        }
        self.push(n, d, out, Op::SoftmaxRows(x))
    }

    /// Per-row standardization `(x - mean) / sqrt(var + 1e-5)`.
    pub fn normalize_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let (n, d) = self.shape(x);
        let xv = self.value(x);
        let mut out = vec![0.0; n * d];
        let mut inv_std = Vec::with_capacity(n);
        for r in 0..n {
            let row = &xv[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / libm::sqrt(var + NORM_EPS);
            for (o, &v) in out[r * d..(r + 1) * d].iter_mut().zip(row) {
                *o = (v - mean) * inv;
            }
            inv_std.push(inv);
        }
        self.push(n, d, out, Op::Normalize(x, inv_std))
    }

    pub fn gather_rows(&mut self, x: NodeId, rows: &[usize]) -> Result<NodeId> {
        let (n, d) = self.shape(x);
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::dim("gather_rows", format!("row {bad} of {n}")));
        }
        let xv = self.value(x);
        let mut out = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            out.extend_from_slice(&xv[r * d..(r + 1) * d]);
        }
        self.push(rows.len(), d, out, Op::GatherRows(x, rows.into()))
    }

    /// Picks flat (row-major) elements into a `[k, 1]` column.
    pub fn gather_elems(&mut self, x: NodeId, flat: &[usize]) -> Result<NodeId> {
        let len = self.value(x).len();
        if let Some(&bad) = flat.iter().find(|&&i| i >= len) {
            return Err(Error::dim("gather_elems", format!("element {bad} of {len}")));
        }
        let xv = self.value(x);
        let out = flat.iter().map(|&i| xv[i]).collect();
        self.push(flat.len(), 1, out, Op::GatherElems(x, flat.into()))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let rows = parts.first().map(|&p| self.shape(p).0).unwrap_or(0);
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(Error::dim("concat_cols", "row counts differ"));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.row(p, r));
            }
        }
        self.push(rows, cols, out, Op::ConcatCols(parts.into()))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let cols = parts.first().map(|&p| self.shape(p).1).unwrap_or(0);
        if parts.iter().any(|&p| self.shape(p).1 != cols) {
            return Err(Error::dim("concat_rows", "column counts differ"));
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let rows = out.len() / cols.max(1);
        self.push(rows, cols, out, Op::ConcatRows(parts.into()))
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, width: usize) -> Result<NodeId> {
        let (n, d) = self.shape(x);
        if start + width > d {
            return Err(Error::dim("slice_cols", format!("{start}+{width} > {d}")));
        }
        let xv = self.value(x);
        let mut out = Vec::with_capacity(n * width);
        for r in 0..n {
            out.extend_from_slice(&xv[r * d + start..r * d + start + width]);
        }
        self.push(n, width, out, Op::SliceCols(x, start))
    }

    /// Row-wise inner products of two equally shaped matrices, `[n, 1]`.
    pub fn row_dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::dim("row_dot", format!("{sa:?} vs {sb:?}")));
        }
        let d = sa.1;
        let (av, bv) = (self.value(a), self.value(b));
        let out = (0..sa.0)
            .map(|r| {
                av[r * d..(r + 1) * d]
                    .iter()
                    .zip(&bv[r * d..(r + 1) * d])
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect();
        self.push(sa.0, 1, out, Op::RowDot(a, b))
    }

    /// Summed binary cross-entropy of probabilities against 0/1 labels.
    pub fn bce_sum(&mut self, probs: NodeId, labels: &[f64]) -> Result<NodeId> {
        let p = self.value(probs);
        if p.len() != labels.len() {
            return Err(Error::LabelLength {
                predictions: p.len(),
                labels: labels.len(),
            });
        }
        let loss = crate::training::loss::bce_sum(p, labels);
        self.push(1, 1, vec![loss], Op::Bce(probs, labels.into()))
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let total = self.value(x).iter().sum();
        self.push(1, 1, vec![total], Op::Sum(x))
    }

    /// Gradients of the scalar `loss` with respect to every parameter in the
    /// borrowed [`ModelParams`]; parameters off the loss path get zeros.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let (rows, cols) = self.shape(loss);
        if rows * cols != 1 {
            return Err(Error::NonScalarLoss { rows, cols });
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &dy, &mut grads);
            grads[idx] = Some(dy);
        }

        let mut out = BTreeMap::new();
        for (name, tensor) in self.params.iter() {
            let data = self
                .param_nodes
                .get(name)
                .and_then(|id| grads[id.0].clone())
                .unwrap_or_else(|| vec![0.0; tensor.len()]);
            out.insert(
                name.clone(),
                GradTensor {
                    dims: tensor.dims().into(),
                    data,
                },
            );
        }
        Ok(Gradients { grads: out })
    }

    fn propagate(&self, node: &Node, dy: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let (rows, cols) = (node.rows, node.cols);
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = grad_slot(grads, *a, m * k);
                for i in 0..m {
                    for p in 0..k {
                        da[i * k + p] += (0..n).map(|j| dy[i * n + j] * bv[p * n + j]).sum::<f64>();
                    }
                }
                let db = grad_slot(grads, *b, k * n);
                for i in 0..m {
                    for p in 0..k {
                        let x = av[i * k + p];
                        for j in 0..n {
                            db[p * n + j] += x * dy[i * n + j];
                        }
                    }
                }
            }
            Op::MatMulNt(a, b) => {
                let (m, k) = self.shape(*a);
                let n = cols;
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = grad_slot(grads, *a, m * k);
                for i in 0..m {
                    for j in 0..n {
                        let g = dy[i * n + j];
                        if g == 0.0 {
                            continue;
                        }
                        for p in 0..k {
                            da[i * k + p] += g * bv[j * k + p];
                        }
                    }
                }
                let db = grad_slot(grads, *b, n * k);
                for i in 0..m {
                    for j in 0..n {
                        let g = dy[i * n + j];
                        if g == 0.0 {
                            continue;
                        }
                        for p in 0..k {
                            db[j * k + p] += g * av[i * k + p];
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                accumulate(grad_slot(grads, *a, dy.len()), dy);
                accumulate(grad_slot(grads, *b, dy.len()), dy);
            }
            Op::AddRow(x, row) => {
                accumulate(grad_slot(grads, *x, dy.len()), dy);
                let dr = grad_slot(grads, *row, cols);
                for (i, g) in dy.iter().enumerate() {
                    dr[i % cols] += g;
                }
            }
            Op::MulRow(x, row) => {
                let (xv, rv) = (self.value(*x), self.value(*row));
                let dx = grad_slot(grads, *x, dy.len());
                for (i, g) in dy.iter().enumerate() {
                    dx[i] += g * rv[i % cols];
                }
                let dr = grad_slot(grads, *row, cols);
                for (i, g) in dy.iter().enumerate() {
                    dr[i % cols] += g * xv[i];
                }
            }
            Op::Scale(x, factor) => {
                let dx = grad_slot(grads, *x, dy.len());
                for (d, g) in dx.iter_mut().zip(dy) {
                    *d += g * factor;
                }
            }
            Op::Gelu(x) => {
                let xv = self.value(*x);
                let dx = grad_slot(grads, *x, dy.len());
                for i in 0..dy.len() {
                    dx[i] += dy[i] * gelu_grad(xv[i]);
                }
            }
            Op::Relu(x) => {
                let xv = self.value(*x);
                let dx = grad_slot(grads, *x, dy.len());
                for i in 0..dy.len() {
                    if xv[i] > 0.0 {
                        dx[i] += dy[i];
                    }
                }
            }
            Op::Sigmoid(x) => {
                let y = &node.value;
                let dx = grad_slot(grads, *x, dy.len());
                for i in 0..dy.len() {
                    dx[i] += dy[i] * y[i] * (1.0 - y[i]);
                }
            }
            Op::SoftmaxRows(x) => {
                let y = &node.value;
                let dx = grad_slot(grads, *x, dy.len());
                for r in 0..rows {
                    let span = r * cols..(r + 1) * cols;
                    let dot: f64 = dy[span.clone()].iter().zip(&y[span.clone()]).map(|(g, v)| g * v).sum();
                    for i in span {
                        dx[i] += y[i] * (dy[i] - dot);
                    }
                }
            }
            Op::Normalize(x, inv_std) => {
                let y = &node.value;
                let dx = grad_slot(grads, *x, dy.len());
                let d = cols as f64;
                for (r, &inv) in inv_std.iter().enumerate().take(rows) {
                    let span = r * cols..(r + 1) * cols;
                    let mean_g = dy[span.clone()].iter().sum::<f64>() / d;
                    let mean_gy = dy[span.clone()].iter().zip(&y[span.clone()]).map(|(g, v)| g * v).sum::<f64>() / d;
                    for i in span {
                        dx[i] += inv * (dy[i] - mean_g - y[i] * mean_gy);
                    }
                }
            }
            Op::GatherRows(x, picked) => {
                let len = self.value(*x).len();
                let dx = grad_slot(grads, *x, len);
                for (out_row, &src) in picked.iter().enumerate() {
                    for c in 0..cols {
                        dx[src * cols + c] += dy[out_row * cols + c];
                    }
                }
            }
            Op::GatherElems(x, flat) => {
                let len = self.value(*x).len();
                let dx = grad_slot(grads, *x, len);
                for (k, &src) in flat.iter().enumerate() {
                    dx[src] += dy[k];
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (pr, pc) = self.shape(p);
                    let dp = grad_slot(grads, p, pr * pc);
                    for r in 0..rows {
                        for c in 0..pc {
                            dp[r * pc + c] += dy[r * cols + offset + c];
                        }
                    }
                    offset += pc;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    accumulate(grad_slot(grads, p, len), &dy[offset..offset + len]);
                    offset += len;
                }
            }
            Op::SliceCols(x, start) => {
                let (_, d) = self.shape(*x);
                let len = self.value(*x).len();
                let dx = grad_slot(grads, *x, len);
                for r in 0..rows {
                    for c in 0..cols {
                        dx[r * d + start + c] += dy[r * cols + c];
                    }
                }
            }
            Op::RowDot(a, b) => {
                let (_, d) = self.shape(*a);
                let (av, bv) = (self.value(*a), self.value(*b));
                let da = grad_slot(grads, *a, av.len());
                for r in 0..rows {
                    for c in 0..d {
                        da[r * d + c] += dy[r] * bv[r * d + c];
                    }
                }
                let db = grad_slot(grads, *b, bv.len());
                for r in 0..rows {
                    for c in 0..d {
                        db[r * d + c] += dy[r] * av[r * d + c];
                    }
                }
            }
            Op::Bce(probs, labels) => {
                let p = self.value(*probs);
                let dp = grad_slot(grads, *probs, p.len());
                for i in 0..p.len() {
                    // Clamped region is flat.
                    if p[i] > PROB_EPS && p[i] < 1.0 - PROB_EPS {
                        let y = labels[i];
                        dp[i] += dy[0] * (-(y / p[i]) + (1.0 - y) / (1.0 - p[i]));
                    }
                }
            }
            Op::Sum(x) => {
                let len = self.value(*x).len();
                let dx = grad_slot(grads, *x, len);
                dx.iter_mut().for_each(|d| *d += dy[0]);
            }
        }
    }
}

fn grad_slot(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

/// One gradient per parameter, same shape as the parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients {
    grads: BTreeMap<String, GradTensor>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&GradTensor> {
        self.grads.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &GradTensor)> {
        self.grads.iter()
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// `f32` copy of one gradient.
    pub fn tensor(&self, name: &str) -> Option<Tensor> {
        self.grads.get(name).map(|g| {
            Tensor::new(g.dims.clone(), g.data.iter().map(|&v| v as f32).collect())
                .expect("gradient shape matches parameter")
        })
    }

    /// Adds `other` into `self`, creating missing entries.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (name, g) in &other.grads {
            match self.grads.get_mut(name) {
                Some(mine) => accumulate(&mut mine.data, &g.data),
                None => {
                    self.grads.insert(name.clone(), g.clone());
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.values_mut() {
            g.data.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn global_norm(&self) -> f64 {
        libm::sqrt(
            self.grads
                .values()
                .flat_map(|g| g.data.iter())
                .map(|v| v * v)
                .sum(),
        )
    }
}
