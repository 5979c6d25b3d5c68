//! Tape of recorded tensor operations with a reverse sweep.
//!
//! A [`Graph`] borrows a [`ParamStore`] immutably for the duration of a
//! forward pass. Parameters enter the tape as leaves without copying;
//! [`Graph::backward`] returns a [`Gradients`] value which the caller folds
//! into the store with [`ParamStore::accumulate`] once the graph is dropped.

use rand::Rng;

use super::params::{ParamId, ParamStore};
use crate::tensor::{Tensor, TensorError};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Whether dropout is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Infer,
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    Lookup { param: ParamId, row: usize },
    MatMul(Var, Var),
    MatVec(Var, Var),
    VecMat(Var, Var),
    Bilinear(Var, Var, Var),
    Contract(Var, Var),
    Add(Var, Var),
    AddN(Vec<Var>),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Concat(Vec<Var>),
    Slice { input: Var, start: usize },
    Mask { input: Var, mask: Vec<f64> },
    CrossEntropy { scores: Var, gold: usize, probs: Vec<f64> },
    Sum(Var),
    Dot(Var, Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor>,
}

/// Reverse-mode tape over a borrowed parameter store.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

/// Result of a backward sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    node_shapes: Vec<Vec<usize>>,
    params: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to a node; zeros when the node
    /// is not reachable from the loss.
    pub fn wrt(&self, var: Var) -> Tensor {
        let shape = &self.node_shapes[var.0];
        match &self.nodes[var.0] {
            Some(g) => Tensor::new(shape.clone(), g.clone()).expect("gradient shape"),
            None => Tensor::zeros(shape),
        }
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(id.0).and_then(Option::as_ref)
    }
}

impl ParamStore {
    /// Adds (`+=`) a backward result into the gradient accumulators.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (p, g) in self.iter_mut().zip(&grads.params) {
            if let Some(g) = g {
                p.grad.add_assign(g);
            }
        }
    }
}

/// Samples an inverted-dropout mask: each entry is `0` or `1 / keep_prob`.
pub fn dropout_mask<R: Rng + ?Sized>(
    len: usize,
    keep_prob: f64,
    rng: &mut R,
) -> Result<Vec<f64>, TensorError> {
    check_keep_prob(keep_prob)?;
    let scale = 1.0 / keep_prob;
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < keep_prob { scale } else { 0.0 })
        .collect())
}

fn check_keep_prob(keep_prob: f64) -> Result<(), TensorError> {
    if keep_prob > 0.0 && keep_prob <= 1.0 {
        Ok(())
    } else {
        Err(TensorError::argument(
            "dropout",
            format!("keep probability {keep_prob} outside (0, 1]"),
        ))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        let node = &self.nodes[var.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(id)) => &self.params.get(*id).value,
            _ => unreachable!("node without value"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Op::Input, value)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// Row `row` of a matrix parameter, as a vector.
    pub fn lookup(&mut self, id: ParamId, row: usize) -> Result<Var, TensorError> {
        let table = &self.params.get(id).value;
        if table.rank() != 2 || row >= table.shape()[0] {
            return Err(TensorError::argument(
                "lookup",
                format!("row {row} out of range for table {:?}", table.shape()),
            ));
        }
        let v = Tensor::vector(table.row(row).to_vec());
        Ok(self.push(Op::Lookup { param: id, row }, v))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rank() != 2 || bv.rank() != 2 || av.shape()[1] != bv.shape()[0] {
            return Err(TensorError::shape("matmul", av.shape(), bv.shape()));
        }
        let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
        let (x, y) = (av.values(), bv.values());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = x[i * k + p];
                let brow = &y[p * n..(p + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                    *o += aip * b;
                }
            }
        }
        let t = Tensor::matrix(m, n, out)?;
        Ok(self.push(Op::MatMul(a, b), t))
    }

    /// Matrix `[m×n]` times vector `[n]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, TensorError> {
        let (wv, xv) = (self.value(w), self.value(x));
        if wv.rank() != 2 || xv.rank() != 1 || wv.shape()[1] != xv.len() {
            return Err(TensorError::shape("matvec", wv.shape(), xv.shape()));
        }
        let n = wv.shape()[1];
        let out: Vec<f64> = wv
            .values()
            .chunks_exact(n)
            .map(|row| row.iter().zip(xv.values()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(Op::MatVec(w, x), Tensor::vector(out)))
    }

    /// Vector `[m]` times matrix `[m×n]`.
    pub fn vecmat(&mut self, x: Var, m: Var) -> Result<Var, TensorError> {
        let (xv, mv) = (self.value(x), self.value(m));
        if mv.rank() != 2 || xv.rank() != 1 || mv.shape()[0] != xv.len() {
            return Err(TensorError::shape("vecmat", xv.shape(), mv.shape()));
        }
        let n = mv.shape()[1];
        let mut out = vec![0.0; n];
        for (xi, row) in xv.values().iter().zip(mv.values().chunks_exact(n)) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += xi * r;
            }
        }
        Ok(self.push(Op::VecMat(x, m), Tensor::vector(out)))
    }

    /// `out[l] = Σ_i Σ_j a[i]·W[i,l,j]·p[j]` for `W: [d1×L×d2]`.
    pub fn bilinear(&mut self, w: Var, a: Var, p: Var) -> Result<Var, TensorError> {
        let (wv, av, pv) = (self.value(w), self.value(a), self.value(p));
        if wv.rank() != 3
            || av.rank() != 1
            || pv.rank() != 1
            || wv.shape()[0] != av.len()
            || wv.shape()[2] != pv.len()
        {
            return Err(TensorError::shape(
                "bilinear",
                wv.shape(),
                (av.shape(), pv.shape()),
            ));
        }
        let (d1, l, d2) = (wv.shape()[0], wv.shape()[1], wv.shape()[2]);
        let (wd, ad, pd) = (wv.values(), av.values(), pv.values());
        let mut out = vec![0.0; l];
        for i in 0..d1 {
            for (k, o) in out.iter_mut().enumerate() {
                let base = (i * l + k) * d2;
                let inner: f64 = wd[base..base + d2].iter().zip(pd).map(|(x, y)| x * y).sum();
                *o += ad[i] * inner;
            }
        }
        Ok(self.push(Op::Bilinear(w, a, p), Tensor::vector(out)))
    }

    /// Contracts the last axis of `W: [d1×L×d2]` with `p: [d2]`, giving `[d1×L]`.
    pub fn contract(&mut self, w: Var, p: Var) -> Result<Var, TensorError> {
        let (wv, pv) = (self.value(w), self.value(p));
        if wv.rank() != 3 || pv.rank() != 1 || wv.shape()[2] != pv.len() {
            return Err(TensorError::shape("contract", wv.shape(), pv.shape()));
        }
        let (d1, l, d2) = (wv.shape()[0], wv.shape()[1], wv.shape()[2]);
        let out: Vec<f64> = wv
            .values()
            .chunks_exact(d2)
            .map(|c| c.iter().zip(pv.values()).map(|(x, y)| x * y).sum())
            .collect();
        let t = Tensor::matrix(d1, l, out)?;
        Ok(self.push(Op::Contract(w, p), t))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(TensorError::shape(op, av.shape(), bv.shape()));
        }
        Ok(())
    }

    fn zip_map(&mut self, op: Op, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        let vals = av.values().iter().zip(bv.values()).map(|(x, y)| f(*x, *y)).collect();
        let t = Tensor::new(av.shape().to_vec(), vals).expect("shape preserved");
        self.push(op, t)
    }

    fn map(&mut self, op: Op, a: Var, f: impl Fn(f64) -> f64) -> Var {
        let av = self.value(a);
        let vals = av.values().iter().map(|x| f(*x)).collect();
        let t = Tensor::new(av.shape().to_vec(), vals).expect("shape preserved");
        self.push(op, t)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("add", a, b)?;
        Ok(self.zip_map(Op::Add(a, b), a, b, |x, y| x + y))
    }

    /// Sum of several same-shaped tensors.
    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts
            .first()
            .ok_or_else(|| TensorError::argument("add_n", "empty list"))?;
        let shape = self.value(first).shape().to_vec();
        let mut acc = vec![0.0; self.value(first).len()];
        for &p in parts {
            let v = self.value(p);
            if v.shape() != shape.as_slice() {
                return Err(TensorError::shape("add_n", &shape, v.shape()));
            }
            for (a, b) in acc.iter_mut().zip(v.values()) {
                *a += b;
            }
        }
        let t = Tensor::new(shape, acc)?;
        Ok(self.push(Op::AddN(parts.to_vec()), t))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip_map(Op::Mul(a, b), a, b, |x, y| x * y))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(Op::Scale(a, c), a, |x| x * c)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(Op::Sigmoid(a), a, sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(Op::Tanh(a), a, f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(Op::Relu(a), a, |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::argument("concat", "empty list"));
        }
        let mut out = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 1 {
                return Err(TensorError::shape("concat", "1-d part", v.shape()));
            }
            out.extend_from_slice(v.values());
        }
        Ok(self.push(Op::Concat(parts.to_vec()), Tensor::vector(out)))
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let v = self.value(a);
        if v.rank() != 1 || len == 0 || start + len > v.len() {
            return Err(TensorError::shape("slice", v.shape(), (start, len)));
        }
        let t = Tensor::vector(v.values()[start..start + len].to_vec());
        Ok(self.push(Op::Slice { input: a, start }, t))
    }

    /// Multiplies by a fixed mask, e.g. one from [`dropout_mask`].
    pub fn apply_mask(&mut self, a: Var, mask: &[f64]) -> Result<Var, TensorError> {
        let v = self.value(a);
        if v.len() != mask.len() {
            return Err(TensorError::shape("mask", v.len(), mask.len()));
        }
        let vals = v.values().iter().zip(mask).map(|(x, m)| x * m).collect();
        let t = Tensor::new(v.shape().to_vec(), vals)?;
        Ok(self.push(
            Op::Mask {
                input: a,
                mask: mask.to_vec(),
            },
            t,
        ))
    }

    /// Inverted dropout. In `Infer` mode or with `keep_prob == 1` this is the
    /// identity and records nothing. A `shared` mask is reused as given.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        keep_prob: f64,
        mode: DropoutMode,
        shared: Option<&[f64]>,
        rng: &mut R,
    ) -> Result<Var, TensorError> {
        check_keep_prob(keep_prob)?;
        if mode == DropoutMode::Infer || keep_prob == 1.0 {
            return Ok(a);
        }
        match shared {
            Some(mask) => self.apply_mask(a, mask),
            None => {
                let mask = dropout_mask(self.value(a).len(), keep_prob, rng)?;
                self.apply_mask(a, &mask)
            }
        }
    }

    /// `-log softmax(scores)[gold]`.
    pub fn cross_entropy(&mut self, scores: Var, gold: usize) -> Result<Var, TensorError> {
        let v = self.value(scores);
        if v.rank() != 1 {
            return Err(TensorError::shape("cross_entropy", "1-d scores", v.shape()));
        }
        if gold >= v.len() {
            return Err(TensorError::argument(
                "cross_entropy",
                format!("gold label {gold} out of range for {} labels", v.len()),
            ));
        }
        let max = v.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = v.values().iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        let loss = z.ln() + max - v.values()[gold];
        let probs = exps.into_iter().map(|e| e / z).collect();
        Ok(self.push(
            Op::CrossEntropy {
                scores,
                gold,
                probs,
            },
            Tensor::scalar(loss),
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).values().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(s))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("dot", a, b)?;
        let s = self
            .value(a)
            .values()
            .iter()
            .zip(self.value(b).values())
            .map(|(x, y)| x * y)
            .sum();
        Ok(self.push(Op::Dot(a, b), Tensor::scalar(s)))
    }

    /// Reverse sweep from a scalar `loss`. Frozen parameters get no gradient.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lv = self.value(loss);
        if lv.len() != 1 || lv.rank() != 0 {
            return Err(TensorError::argument(
                "backward",
                format!("loss must be a scalar, got shape {:?}", lv.shape()),
            ));
        }
        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut pgrads: Vec<Option<Tensor>> = vec![None; self.params.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(up) = grads[idx].take() else { continue };
            self.propagate(idx, &up, &mut grads, &mut pgrads);
            grads[idx] = Some(up);
        }

        let node_shapes = (0..n).map(|i| self.value(Var(i)).shape().to_vec()).collect();
        Ok(Gradients {
            nodes: grads,
            node_shapes,
            params: pgrads,
        })
    }

    fn propagate(
        &self,
        idx: usize,
        up: &[f64],
        grads: &mut [Option<Vec<f64>>],
        pgrads: &mut [Option<Tensor>],
    ) {
        let mut acc = |var: Var, f: &mut dyn FnMut(&mut [f64])| {
            let slot = grads[var.0].get_or_insert_with(|| vec![0.0; self.value(var).len()]);
            f(slot);
        };
        let out = self.value(Var(idx));

        match &self.nodes[idx].op {
            Op::Input => {}
            Op::Param(id) if !self.params.get(*id).trainable => {}
            Op::Lookup { param, .. } if !self.params.get(*param).trainable => {}
            Op::Param(id) => {
                let shape = self.params.get(*id).value.shape();
                let g = pgrads[id.0].get_or_insert_with(|| Tensor::zeros(shape));
                for (a, b) in g.values_mut().iter_mut().zip(up) {
                    *a += b;
                }
            }
            Op::Lookup { param, row } => {
                let shape = self.params.get(*param).value.shape();
                let cols = shape[1];
                let g = pgrads[param.0].get_or_insert_with(|| Tensor::zeros(shape));
                let dst = &mut g.values_mut()[row * cols..(row + 1) * cols];
                for (a, b) in dst.iter_mut().zip(up) {
                    *a += b;
                }
            }
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                let (x, y) = (av.values(), bv.values());
                acc(*a, &mut |ga| {
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += up[i * n + j] * y[p * n + j];
                            }
                            ga[i * k + p] += s;
                        }
                    }
                });
                acc(*b, &mut |gb| {
                    for i in 0..m {
                        for p in 0..k {
                            let aip = x[i * k + p];
                            for j in 0..n {
                                gb[p * n + j] += aip * up[i * n + j];
                            }
                        }
                    }
                });
            }
            Op::MatVec(w, x) => {
                let (wv, xv) = (self.value(*w), self.value(*x));
                let n = wv.shape()[1];
                acc(*w, &mut |gw| {
                    for (grow, u) in gw.chunks_exact_mut(n).zip(up) {
                        if *u != 0.0 {
                            for (g, xj) in grow.iter_mut().zip(xv.values()) {
                                *g += u * xj;
                            }
                        }
                    }
                });
                acc(*x, &mut |gx| {
                    for (row, u) in wv.values().chunks_exact(n).zip(up) {
                        if *u != 0.0 {
                            for (g, wij) in gx.iter_mut().zip(row) {
                                *g += u * wij;
                            }
                        }
                    }
                });
            }
            Op::VecMat(x, m) => {
                let (xv, mv) = (self.value(*x), self.value(*m));
                let n = mv.shape()[1];
                acc(*x, &mut |gx| {
                    for (g, row) in gx.iter_mut().zip(mv.values().chunks_exact(n)) {
                        *g += row.iter().zip(up).map(|(a, b)| a * b).sum::<f64>();
                    }
                });
                acc(*m, &mut |gm| {
                    for (grow, xi) in gm.chunks_exact_mut(n).zip(xv.values()) {
                        for (g, u) in grow.iter_mut().zip(up) {
                            *g += xi * u;
                        }
                    }
                });
            }
            Op::Bilinear(w, a, p) => {
                let (wv, av, pv) = (self.value(*w), self.value(*a), self.value(*p));
                let (d1, l, d2) = (wv.shape()[0], wv.shape()[1], wv.shape()[2]);
                let (wd, ad, pd) = (wv.values(), av.values(), pv.values());
                acc(*w, &mut |gw| {
                    for i in 0..d1 {
                        for k in 0..l {
                            let c = up[k] * ad[i];
                            let base = (i * l + k) * d2;
                            for j in 0..d2 {
                                gw[base + j] += c * pd[j];
                            }
                        }
                    }
                });
                acc(*a, &mut |ga| {
                    for i in 0..d1 {
                        let mut s = 0.0;
                        for k in 0..l {
                            let base = (i * l + k) * d2;
                            let inner: f64 =
                                wd[base..base + d2].iter().zip(pd).map(|(x, y)| x * y).sum();
                            s += up[k] * inner;
                        }
                        ga[i] += s;
                    }
                });
                acc(*p, &mut |gp| {
                    for i in 0..d1 {
                        for k in 0..l {
                            let c = up[k] * ad[i];
                            let base = (i * l + k) * d2;
                            for j in 0..d2 {
                                gp[j] += c * wd[base + j];
                            }
                        }
                    }
                });
            }
            Op::Contract(w, p) => {
                let (wv, pv) = (self.value(*w), self.value(*p));
                let d2 = wv.shape()[2];
                acc(*w, &mut |gw| {
                    for (gc, u) in gw.chunks_exact_mut(d2).zip(up) {
                        for (g, pj) in gc.iter_mut().zip(pv.values()) {
                            *g += u * pj;
                        }
                    }
                });
                acc(*p, &mut |gp| {
                    for (c, u) in wv.values().chunks_exact(d2).zip(up) {
                        for (g, wj) in gp.iter_mut().zip(c) {
                            *g += u * wj;
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    acc(v, &mut |g| g.iter_mut().zip(up).for_each(|(g, u)| *g += u));
                }
            }
            Op::AddN(parts) => {
                for &v in parts {
                    acc(v, &mut |g| g.iter_mut().zip(up).for_each(|(g, u)| *g += u));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                acc(*a, &mut |g| {
                    for ((g, u), y) in g.iter_mut().zip(up).zip(bv.values()) {
                        *g += u * y;
                    }
                });
                acc(*b, &mut |g| {
                    for ((g, u), x) in g.iter_mut().zip(up).zip(av.values()) {
                        *g += u * x;
                    }
                });
            }
            Op::Scale(a, c) => {
                acc(*a, &mut |g| g.iter_mut().zip(up).for_each(|(g, u)| *g += u * c));
            }
            Op::Sigmoid(a) => {
                acc(*a, &mut |g| {
                    for ((g, u), s) in g.iter_mut().zip(up).zip(out.values()) {
                        *g += u * s * (1.0 - s);
                    }
                });
            }
            Op::Tanh(a) => {
                acc(*a, &mut |g| {
                    for ((g, u), t) in g.iter_mut().zip(up).zip(out.values()) {
                        *g += u * (1.0 - t * t);
                    }
                });
            }
            Op::Relu(a) => {
                let av = self.value(*a);
                acc(*a, &mut |g| {
                    for ((g, u), x) in g.iter_mut().zip(up).zip(av.values()) {
                        if *x > 0.0 {
                            *g += u;
                        }
                    }
                });
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &v in parts {
                    let len = self.value(v).len();
                    let seg = &up[offset..offset + len];
                    acc(v, &mut |g| g.iter_mut().zip(seg).for_each(|(g, u)| *g += u));
                    offset += len;
                }
            }
            Op::Slice { input, start } => {
                let start = *start;
                acc(*input, &mut |g| {
                    g[start..start + up.len()]
                        .iter_mut()
                        .zip(up)
                        .for_each(|(g, u)| *g += u)
                });
            }
            Op::Mask { input, mask } => {
                acc(*input, &mut |g| {
                    for ((g, u), m) in g.iter_mut().zip(up).zip(mask) {
                        *g += u * m;
                    }
                });
            }
            Op::CrossEntropy {
                scores,
                gold,
                probs,
            } => {
                let u = up[0];
                acc(*scores, &mut |g| {
                    for (k, (g, p)) in g.iter_mut().zip(probs).enumerate() {
                        let target = if k == *gold { 1.0 } else { 0.0 };
                        *g += u * (p - target);
                    }
                });
            }
            Op::Sum(a) => {
                let u = up[0];
                acc(*a, &mut |g| g.iter_mut().for_each(|g| *g += u));
            }
            Op::Dot(a, b) => {
                let u = up[0];
                let (av, bv) = (self.value(*a), self.value(*b));
                acc(*a, &mut |g| {
                    g.iter_mut().zip(bv.values()).for_each(|(g, y)| *g += u * y)
                });
                acc(*b, &mut |g| {
                    g.iter_mut().zip(av.values()).for_each(|(g, x)| *g += u * x)
                });
            }
        }
    }
}
