//! Reverse-mode automatic differentiation over small dense vectors.
//!
//! A [`Tape`] records every operation of one forward pass as a node holding
//! its value. [`Tape::backward`] walks the nodes in reverse and accumulates
//! parameter gradients into a [`Gradients`] buffer. Every node value is a
//! flat `Vec<f64>`; scalars are length-one vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::params::{Gradients, ParamId, ParamStore};

/// Probability clamp used by [`Tape::bce`] to keep `ln` finite.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Row { param: ParamId, row: usize },
    MatVec { w: ParamId, x: Var },
    Add(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Vec<f64>),
    Scale { scalar: Var, v: Var },
    Sigmoid(Var),
    Tanh(Var),
    Slice { x: Var, start: usize },
    Concat(Vec<Var>),
    Dot(Var, Var),
    Stack(Vec<Var>),
    Softmax { x: Var, mask: Vec<bool> },
    WeightedSum { weights: Var, items: Vec<Var> },
    Sum(Vec<Var>),
    Bce { p: Var, target: f64 },
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_cache: Vec<Option<Var>>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape { params, nodes: Vec::new(), param_cache: vec![None; params.len()] }
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

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Constant)
    }

    /// Whole parameter group as a flat vector. Repeated calls share one node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_cache[id.0] {
            return v;
        }
        let v = self.push(self.params.get(id).data.clone(), Op::Param(id));
        self.param_cache[id.0] = Some(v);
        v
    }

    /// One row of a matrix parameter (embedding lookup).
    pub fn row(&mut self, param: ParamId, row: usize) -> Var {
        let value = self.params.get(param).row(row).to_vec();
        self.push(value, Op::Row { param, row })
    }

    /// `W x` for a parameter matrix `W`.
    pub fn matvec(&mut self, w: ParamId, x: Var) -> Var {
        let m = self.params.get(w);
        let xv = &self.nodes[x.0].value;
        debug_assert_eq!(m.cols, xv.len(), "matvec shape mismatch");
        let value = (0..m.rows)
            .map(|r| m.row(r).iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        self.push(value, Op::MatVec { w, x })
    }

    /// `W x + b`.
    pub fn affine(&mut self, w: ParamId, b: ParamId, x: Var) -> Var {
        let wx = self.matvec(w, x);
        let bv = self.param(b);
        self.add(wx, bv)
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        debug_assert_eq!(av.len(), bv.len(), "elementwise shape mismatch");
        av.iter().zip(bv).map(|(x, y)| f(*x, *y)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip_with(a, b, |x, y| x + y);
        self.push(value, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip_with(a, b, |x, y| x * y);
        self.push(value, Op::Mul(a, b))
    }

    /// Elementwise product with a fixed vector (dropout masks).
    pub fn mul_const(&mut self, a: Var, c: Vec<f64>) -> Var {
        let value = self.nodes[a.0].value.iter().zip(&c).map(|(x, y)| x * y).collect();
        self.push(value, Op::MulConst(a, c))
    }

    /// Scalar node times vector node.
    pub fn scale(&mut self, scalar: Var, v: Var) -> Var {
        let s = self.scalar(scalar);
        let value = self.nodes[v.0].value.iter().map(|x| s * x).collect();
        self.push(value, Op::Scale { scalar, v })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| math::sigmoid(x)).collect();
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| math::tanh(x)).collect();
        self.push(value, Op::Tanh(a))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let value = self.nodes[x.0].value[start..start + len].to_vec();
        self.push(value, Op::Slice { x, start })
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let value = parts.iter().flat_map(|p| self.nodes[p.0].value.iter().copied()).collect();
        self.push(value, Op::Concat(parts.to_vec()))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let value = self.zip_with(a, b, |x, y| x * y).iter().sum();
        self.push(vec![value], Op::Dot(a, b))
    }

    /// Collects scalar nodes into one vector node.
    pub fn stack(&mut self, scalars: &[Var]) -> Var {
        let value = scalars.iter().map(|s| self.scalar(*s)).collect();
        self.push(value, Op::Stack(scalars.to_vec()))
    }

    /// Softmax restricted to unmasked positions; masked entries are exactly 0.
    pub fn softmax(&mut self, x: Var, mask: Vec<bool>) -> Var {
        let value = math::masked_softmax(&self.nodes[x.0].value, &mask);
        self.push(value, Op::Softmax { x, mask })
    }

    /// `Σ_k weights[k] · items[k]`.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Var {
        let w = &self.nodes[weights.0].value;
        debug_assert_eq!(w.len(), items.len());
        let dim = self.nodes[items[0].0].value.len();
        let mut value = vec![0.0; dim];
        for (wk, item) in w.iter().zip(items) {
            for (acc, x) in value.iter_mut().zip(&self.nodes[item.0].value) {
                *acc += wk * x;
            }
        }
        self.push(value, Op::WeightedSum { weights, items: items.to_vec() })
    }

    /// Sum of scalar nodes in the given order. An empty slice yields 0.
    pub fn sum(&mut self, scalars: &[Var]) -> Var {
        let mut total = 0.0;
        for s in scalars {
            total += self.scalar(*s);
        }
        self.push(vec![total], Op::Sum(scalars.to_vec()))
    }

    /// Binary cross-entropy of a probability node against a 0/1 target,
    /// with the probability clamped to `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn bce(&mut self, p: Var, target: f64) -> Var {
        let value = bce_value(self.scalar(p), target);
        self.push(vec![value], Op::Bce { p, target })
    }

    /// Backpropagates from a scalar `root` and returns parameter gradients.
    pub fn backward(&self, root: Var) -> Gradients {
        let mut grads = Gradients::zeros_like(self.params);
        self.backward_into(root, &mut grads);
        grads
    }

    /// Like [`Tape::backward`], accumulating into an existing buffer.
    pub fn backward_into(&self, root: Var, out: &mut Gradients) {
        let mut adj: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        adj[root.0] = Some(vec![1.0; self.nodes[root.0].value.len()]);

        for idx in (0..=root.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    for (s, v) in out.slot(*id).iter_mut().zip(&g) {
                        *s += v;
                    }
                }
                Op::Row { param, row } => {
                    let cols = self.params.get(*param).cols;
                    let slot = &mut out.slot(*param)[row * cols..(row + 1) * cols];
                    for (s, v) in slot.iter_mut().zip(&g) {
                        *s += v;
                    }
                }
                Op::MatVec { w, x } => {
                    let m = self.params.get(*w);
                    let xv = &self.nodes[x.0].value;
                    let slot = out.slot(*w);
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        for (s, xc) in slot[r * m.cols..(r + 1) * m.cols].iter_mut().zip(xv) {
                            *s += gr * xc;
                        }
                    }
                    let gx = accum(&mut adj, *x, m.cols);
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        for (s, wc) in gx.iter_mut().zip(m.row(r)) {
                            *s += gr * wc;
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(accum(&mut adj, *a, g.len()), &g);
                    add_into(accum(&mut adj, *b, g.len()), &g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga = accum(&mut adj, *a, g.len());
                    for ((s, gi), bi) in ga.iter_mut().zip(&g).zip(bv) {
                        *s += gi * bi;
                    }
                    let gb = accum(&mut adj, *b, g.len());
                    for ((s, gi), ai) in gb.iter_mut().zip(&g).zip(av) {
                        *s += gi * ai;
                    }
                }
                Op::MulConst(a, c) => {
                    let ga = accum(&mut adj, *a, g.len());
                    for ((s, gi), ci) in ga.iter_mut().zip(&g).zip(c) {
                        *s += gi * ci;
                    }
                }
                Op::Scale { scalar, v } => {
                    let s = self.scalar(*scalar);
                    let vv = &self.nodes[v.0].value;
                    let gs: f64 = g.iter().zip(vv).map(|(a, b)| a * b).sum();
                    accum(&mut adj, *scalar, 1)[0] += gs;
                    let gv = accum(&mut adj, *v, g.len());
                    for (acc, gi) in gv.iter_mut().zip(&g) {
                        *acc += s * gi;
                    }
                }
                Op::Sigmoid(a) => {
                    let ga = accum(&mut adj, *a, g.len());
                    for ((s, gi), y) in ga.iter_mut().zip(&g).zip(&node.value) {
                        *s += gi * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let ga = accum(&mut adj, *a, g.len());
                    for ((s, gi), y) in ga.iter_mut().zip(&g).zip(&node.value) {
                        *s += gi * (1.0 - y * y);
                    }
                }
                Op::Slice { x, start } => {
                    let n = self.nodes[x.0].value.len();
                    let gx = accum(&mut adj, *x, n);
                    add_into(&mut gx[*start..*start + g.len()], &g);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        add_into(accum(&mut adj, *p, n), &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Dot(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let gi = g[0];
                    let ga = accum(&mut adj, *a, av.len());
                    for (s, bi) in ga.iter_mut().zip(bv) {
                        *s += gi * bi;
                    }
                    let gb = accum(&mut adj, *b, bv.len());
                    for (s, ai) in gb.iter_mut().zip(av) {
                        *s += gi * ai;
                    }
                }
                Op::Stack(scalars) => {
                    for (s, gi) in scalars.iter().zip(&g) {
                        accum(&mut adj, *s, 1)[0] += gi;
                    }
                }
                Op::Softmax { x, mask } => {
                    let y = &node.value;
                    let inner: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    let gx = accum(&mut adj, *x, y.len());
                    for k in 0..y.len() {
                        if mask[k] {
                            gx[k] += y[k] * (g[k] - inner);
                        }
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let w = &self.nodes[weights.0].value;
                    for (k, item) in items.iter().enumerate() {
                        let iv = &self.nodes[item.0].value;
                        let gw: f64 = g.iter().zip(iv).map(|(a, b)| a * b).sum();
                        accum(&mut adj, *weights, w.len())[k] += gw;
                        let wk = w[k];
                        let gi = accum(&mut adj, *item, g.len());
                        for (s, gv) in gi.iter_mut().zip(&g) {
                            *s += wk * gv;
                        }
                    }
                }
                Op::Sum(scalars) => {
                    for s in scalars {
                        accum(&mut adj, *s, 1)[0] += g[0];
                    }
                }
                Op::Bce { p, target } => {
                    let pv = self.scalar(*p);
                    accum(&mut adj, *p, 1)[0] += g[0] * bce_grad(pv, *target);
                }
            }
        }
    }
}

fn accum(adj: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    adj[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Clamped binary cross-entropy `-(y ln p + (1-y) ln(1-p))`.
pub fn bce_value(p: f64, target: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(target * math::ln(p) + (1.0 - target) * math::ln(1.0 - p))
}

fn bce_grad(p: f64, target: f64) -> f64 {
    if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
        return 0.0;
    }
    -(target / p) + (1.0 - target) / (1.0 - p)
}
