//! Tape-based reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A [`Graph`] records every operation as a node. [`Graph::grad`] walks the
//! tape backwards and expresses each vector-Jacobian product with the same
//! graph operations, so with `create_graph` set the returned gradients are
//! ordinary nodes that can be differentiated again. This is what makes exact
//! meta-gradients through an inner gradient step possible.
//!
//! Shapes never broadcast implicitly. Replication is always an explicit node
//! (`replicate_rows`, `replicate_cols`, `expand`).
//!
//! ```
//! use metaprompt::autodiff::Graph;
//! use metaprompt::tensor::Tensor;
//!
//! let mut g = Graph::new();
//! let x = g.param(Tensor::scalar(2.0));
//! let x2 = g.hadamard(x, x).unwrap();
//! let x3 = g.hadamard(x2, x).unwrap();
//! let d1 = g.grad(x3, &[x], true).unwrap()[x];
//! let d2 = g.grad(d1, &[x], false).unwrap()[x];
//! assert!((g.value(d2).item() - 12.0).abs() < 1e-12);
//! ```

use std::ops::Index;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Operation tag of a graph node.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Param,
    Constant,
    MatMul,
    Transpose,
    Add,
    Sub,
    Mul,
    Div,
    Scale(f64),
    AddScalar(f64),
    Neg,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Sum,
    SumRows,
    SumCols,
    ReplicateRows(usize),
    ReplicateCols(usize),
    Expand(Vec<usize>),
    Reshape(Vec<usize>),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    parents: Vec<NodeId>,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients of one scalar output with respect to requested parameters.
#[derive(Clone, Debug, Default)]
pub struct GradientMap {
    entries: Vec<(NodeId, NodeId)>,
}

impl GradientMap {
    pub fn get(&self, param: NodeId) -> Option<NodeId> {
        self.entries.iter().find(|(p, _)| *p == param).map(|(_, g)| *g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Index<NodeId> for GradientMap {
    type Output = NodeId;

    fn index(&self, param: NodeId) -> &NodeId {
        self.entries
            .iter()
            .find(|(p, _)| *p == param)
            .map(|(_, g)| g)
            .expect("parameter not present in gradient map")
    }
}

/// The tape. Nodes are appended in creation order, so parents always have
/// smaller ids than their children.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    no_grad: bool,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn op(&self, id: NodeId) -> &Op {
        &self.nodes[id.0].op
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].parents
    }

    pub fn requires_grad(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    /// Registers a differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.leaf(Op::Param, value, true)
    }

    /// Registers a non-differentiable leaf.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(Op::Constant, value, false)
    }

    /// A constant copy of `id`'s current value, cut from the graph.
    pub fn detach(&mut self, id: NodeId) -> NodeId {
        let v = self.nodes[id.0].value.clone();
        self.constant(v)
    }

    fn leaf(&mut self, op: Op, value: Tensor, requires_grad: bool) -> NodeId {
        assert!(value.is_finite(), "non-finite leaf value");
        self.nodes.push(Node {
            op,
            parents: Vec::new(),
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push(&mut self, op: Op, parents: Vec<NodeId>, value: Tensor, name: &'static str) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NumericOverflow { op: name });
        }
        let requires_grad = !self.no_grad && parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            op,
            parents,
            value,
            requires_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        self.push(Op::MatMul, vec![a, b], v, "matmul")
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).transpose()?;
        self.push(Op::Transpose, vec![a], v, "transpose")
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        self.push(Op::Add, vec![a, b], v, "add")
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        self.push(Op::Sub, vec![a, b], v, "sub")
    }

    /// Elementwise product.
    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).zip_map(self.value(b), "hadamard", |x, y| x * y)?;
        self.push(Op::Mul, vec![a, b], v, "hadamard")
    }

    /// Elementwise quotient.
    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).zip_map(self.value(b), "div", |x, y| x / y)?;
        self.push(Op::Div, vec![a, b], v, "div")
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        if !c.is_finite() {
            return Err(Error::Domain(format!("non-finite scale constant {c}")));
        }
        let v = self.value(a).map(|x| x * c);
        self.push(Op::Scale(c), vec![a], v, "scale")
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        if !c.is_finite() {
            return Err(Error::Domain(format!("non-finite additive constant {c}")));
        }
        let v = self.value(a).map(|x| x + c);
        self.push(Op::AddScalar(c), vec![a], v, "add_scalar")
    }

    pub fn neg(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(|x| -x);
        self.push(Op::Neg, vec![a], v, "neg")
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(f64::tanh);
        self.push(Op::Tanh, vec![a], v, "tanh")
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).map(f64::exp);
        self.push(Op::Exp, vec![a], v, "exp")
    }

    pub fn log(&mut self, a: NodeId) -> Result<NodeId> {
        if self.value(a).data().iter().any(|&x| x <= 0.0) {
            return Err(Error::Domain("log of non-positive value".into()));
        }
        let v = self.value(a).map(f64::ln);
        self.push(Op::Log, vec![a], v, "log")
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        if self.value(a).data().iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("sqrt of negative value".into()));
        }
        let v = self.value(a).map(f64::sqrt);
        self.push(Op::Sqrt, vec![a], v, "sqrt")
    }

    /// Sum of all entries, as a rank-0 node.
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(Op::Sum, vec![a], v, "sum")
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let n = self.value(a).len();
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n as f64)
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let p = self.hadamard(a, b)?;
        self.sum(p)
    }

    /// Euclidean norm of all entries. Its gradient is undefined at zero.
    pub fn l2_norm(&mut self, a: NodeId) -> Result<NodeId> {
        let sq = self.dot(a, a)?;
        self.sqrt(sq)
    }

    /// `r × c` to `r × 1`.
    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).sum_rows()?;
        self.push(Op::SumRows, vec![a], v, "sum_rows")
    }

    /// `r × c` to `1 × c`.
    pub fn sum_cols(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).sum_cols()?;
        self.push(Op::SumCols, vec![a], v, "sum_cols")
    }

    /// `1 × c` to `n × c`.
    pub fn replicate_rows(&mut self, a: NodeId, n: usize) -> Result<NodeId> {
        let v = self.value(a).replicate_rows(n)?;
        self.push(Op::ReplicateRows(n), vec![a], v, "replicate_rows")
    }

    /// `r × 1` to `r × k`.
    pub fn replicate_cols(&mut self, a: NodeId, k: usize) -> Result<NodeId> {
        let v = self.value(a).replicate_cols(k)?;
        self.push(Op::ReplicateCols(k), vec![a], v, "replicate_cols")
    }

    /// Fills `shape` with the value of a one-element node.
    pub fn expand(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let src = self.value(a);
        if src.len() != 1 {
            return Err(Error::Dimension {
                op: "expand",
                left: src.shape().to_vec(),
                right: shape.to_vec(),
            });
        }
        let v = Tensor::filled(shape, src.item());
        self.push(Op::Expand(shape.to_vec()), vec![a], v, "expand")
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let v = self.value(a).reshape(shape)?;
        self.push(Op::Reshape(shape.to_vec()), vec![a], v, "reshape")
    }

    /// Reverse-mode gradient of the one-element node `output` with respect to
    /// each of `params`. Targets may be leaves or intermediate nodes, as long
    /// as they are differentiable.
    ///
    /// With `create_graph` the gradient computation is itself recorded with
    /// differentiable nodes; otherwise the returned nodes carry values only.
    /// Parameters the output does not depend on receive zeros.
    pub fn grad(&mut self, output: NodeId, params: &[NodeId], create_graph: bool) -> Result<GradientMap> {
        if self.value(output).len() != 1 {
            return Err(Error::Contract(format!(
                "grad requires a scalar output, got shape {:?}",
                self.shape(output)
            )));
        }
        for &p in params {
            if !self.nodes[p.0].requires_grad {
                return Err(Error::Contract(format!("node {} is not differentiable", p.0)));
            }
        }

        let saved = self.no_grad;
        self.no_grad = !create_graph;
        let grads = self.backward(output, params);
        self.no_grad = saved;
        let grads = grads?;

        let mut entries = Vec::with_capacity(params.len());
        for &p in params {
            let gid = match grads.get(p.0).copied().flatten() {
                Some(gid) => gid,
                None => {
                    let z = Tensor::zeros(self.shape(p));
                    self.constant(z)
                }
            };
            debug_assert_eq!(self.shape(gid), self.shape(p));
            entries.push((p, gid));
        }
        Ok(GradientMap { entries })
    }

    fn backward(&mut self, output: NodeId, targets: &[NodeId]) -> Result<Vec<Option<NodeId>>> {
        let n = output.0 + 1;
        // Only nodes lying on a path from some target to the output matter.
        let mut reach = vec![false; n];
        for &t in targets {
            if t.0 < n {
                reach[t.0] = true;
            }
        }
        for i in 0..n {
            if !reach[i] && self.nodes[i].requires_grad {
                reach[i] = self.nodes[i].parents.iter().any(|p| reach[p.0]);
            }
        }
        let mut needed = vec![false; n];
        needed[output.0] = reach[output.0];
        for i in (0..n).rev() {
            if !needed[i] {
                continue;
            }
            for k in 0..self.nodes[i].parents.len() {
                let p = self.nodes[i].parents[k];
                if reach[p.0] {
                    needed[p.0] = true;
                }
            }
        }

        let mut grads: Vec<Option<NodeId>> = vec![None; n];
        if needed[output.0] {
            let seed = Tensor::filled(self.shape(output), 1.0);
            grads[output.0] = Some(self.constant(seed));
        }

        for i in (0..n).rev() {
            if !needed[i] {
                continue;
            }
            let Some(upstream) = grads[i] else { continue };
            let parents = self.nodes[i].parents.clone();
            if parents.iter().all(|p| !needed[p.0]) {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let want = |_: &Graph, k: usize| needed[parents[k].0];
            let out = NodeId(i);
            let mut contribs: Vec<(NodeId, NodeId)> = Vec::with_capacity(2);
            match op {
                Op::Param | Op::Constant => {}
                Op::MatMul => {
                    let (a, b) = (parents[0], parents[1]);
                    if want(self, 0) {
                        let bt = self.transpose(b)?;
                        contribs.push((a, self.matmul(upstream, bt)?));
                    }
                    if want(self, 1) {
                        let at = self.transpose(a)?;
                        contribs.push((b, self.matmul(at, upstream)?));
                    }
                }
                Op::Transpose => contribs.push((parents[0], self.transpose(upstream)?)),
                Op::Add => {
                    for k in 0..2 {
                        if want(self, k) {
                            contribs.push((parents[k], upstream));
                        }
                    }
                }
                Op::Sub => {
                    if want(self, 0) {
                        contribs.push((parents[0], upstream));
                    }
                    if want(self, 1) {
                        contribs.push((parents[1], self.neg(upstream)?));
                    }
                }
                Op::Mul => {
                    let (a, b) = (parents[0], parents[1]);
                    if want(self, 0) {
                        contribs.push((a, self.hadamard(upstream, b)?));
                    }
                    if want(self, 1) {
                        contribs.push((b, self.hadamard(upstream, a)?));
                    }
                }
                Op::Div => {
                    let (a, b) = (parents[0], parents[1]);
                    let ga = self.div(upstream, b)?;
                    if want(self, 0) {
                        contribs.push((a, ga));
                    }
                    if want(self, 1) {
                        let t = self.hadamard(ga, out)?;
                        contribs.push((b, self.neg(t)?));
                    }
                }
                Op::Scale(c) => contribs.push((parents[0], self.scale(upstream, c)?)),
                Op::AddScalar(_) => contribs.push((parents[0], upstream)),
                Op::Neg => contribs.push((parents[0], self.neg(upstream)?)),
                Op::Tanh => {
                    let y2 = self.hadamard(out, out)?;
                    let ny2 = self.neg(y2)?;
                    let d = self.add_scalar(ny2, 1.0)?;
                    contribs.push((parents[0], self.hadamard(upstream, d)?));
                }
                Op::Exp => contribs.push((parents[0], self.hadamard(upstream, out)?)),
                Op::Log => contribs.push((parents[0], self.div(upstream, parents[0])?)),
                Op::Sqrt => {
                    let half = self.scale(upstream, 0.5)?;
                    contribs.push((parents[0], self.div(half, out)?));
                }
                Op::Sum => {
                    let shape = self.shape(parents[0]).to_vec();
                    contribs.push((parents[0], self.expand(upstream, &shape)?));
                }
                Op::SumRows => {
                    let k = self.shape(parents[0])[1];
                    contribs.push((parents[0], self.replicate_cols(upstream, k)?));
                }
                Op::SumCols => {
                    let r = self.shape(parents[0])[0];
                    contribs.push((parents[0], self.replicate_rows(upstream, r)?));
                }
                Op::ReplicateRows(_) => contribs.push((parents[0], self.sum_cols(upstream)?)),
                Op::ReplicateCols(_) => contribs.push((parents[0], self.sum_rows(upstream)?)),
                Op::Expand(_) => {
                    let s = self.sum(upstream)?;
                    let shape = self.shape(parents[0]).to_vec();
                    let g = if shape.is_empty() { s } else { self.reshape(s, &shape)? };
                    contribs.push((parents[0], g));
                }
                Op::Reshape(_) => {
                    let shape = self.shape(parents[0]).to_vec();
                    contribs.push((parents[0], self.reshape(upstream, &shape)?));
                }
            }
            for (p, c) in contribs {
                grads[p.0] = Some(match grads[p.0] {
                    Some(prev) => self.add(prev, c)?,
                    None => c,
                });
            }
        }
        Ok(grads)
    }
}
