use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use super::{sigmoid, softmax, Tensor, TensorError};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Const,
    MatVec(usize, usize),
    MatMulT(usize, usize),
    MatTVec(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    AddScalar(usize, usize),
    Mul(usize, usize),
    ScaleBy(usize, usize),
    Affine(usize, f64),
    Sigmoid(usize),
    Tanh(usize),
    Log(usize, f64),
    Softmax(usize),
    Concat(Vec<usize>),
    Slice(usize, usize),
    StackRows(Vec<usize>),
    GatherRows(usize, Vec<usize>),
    MaxPoolRows(usize, Vec<usize>),
    Embed(usize, usize),
    ScatterAdd(usize, Vec<usize>),
    Sum(usize),
    Min(usize, usize),
}

impl Op {
    fn inputs(&self) -> Vec<usize> {
        use Op::*;
        match self {
            Leaf | Const => vec![],
            MatVec(a, b)
            | MatMulT(a, b)
            | MatTVec(a, b)
            | Add(a, b)
            | AddRow(a, b)
            | AddScalar(a, b)
            | Mul(a, b)
            | ScaleBy(a, b)
            | Min(a, b) => vec![*a, *b],
            Affine(a, _)
            | Sigmoid(a)
            | Tanh(a)
            | Log(a, _)
            | Softmax(a)
            | Slice(a, _)
            | GatherRows(a, _)
            | MaxPoolRows(a, _)
            | Embed(a, _)
            | ScatterAdd(a, _)
            | Sum(a) => vec![*a],
            Concat(xs) | StackRows(xs) => xs.clone(),
        }
    }
}

struct Node<'p> {
    value: Cow<'p, Tensor>,
    op: Op,
    needs_grad: bool,
}

/// Records operations in creation order; [`Tape::backward`] replays them in
/// exact reverse order.
///
/// Parameters can be borrowed onto the tape with [`Tape::param`], so loading
/// a model for a forward pass copies nothing.
#[derive(Default)]
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch { op, left: a.shape().to_vec(), right: b.shape().to_vec() }
}

fn shape_err(op: &'static str, a: &[usize], b: &[usize]) -> TensorError {
    TensorError::ShapeMismatch { op, left: a.to_vec(), right: b.to_vec() }
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn val(&self, i: usize) -> &Tensor {
        &self.nodes[i].value
    }

    fn push(&mut self, op: &'static str, value: Tensor, kind: Op) -> Result<Var, TensorError> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op });
        }
        let needs_grad = kind.inputs().iter().any(|&i| self.nodes[i].needs_grad);
        self.nodes.push(Node { value: Cow::Owned(value), op: kind, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A trainable leaf borrowed from the caller.
    pub fn param(&mut self, t: &'p Tensor) -> Var {
        self.nodes.push(Node { value: Cow::Borrowed(t), op: Op::Leaf, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// A trainable leaf owned by the tape.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node { value: Cow::Owned(t), op: Op::Leaf, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// A value that never receives gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node { value: Cow::Owned(t), op: Op::Const, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    /// `w [r,c] · x [c] -> [r]`
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, TensorError> {
        let (wt, xt) = (self.val(w.0), self.val(x.0));
        let (r, c) = wt.dims2().ok_or_else(|| mismatch("matvec", wt, xt))?;
        if xt.len() != c {
            return Err(mismatch("matvec", wt, xt));
        }
        let (wd, xd) = (wt.data(), xt.data());
        let out = (0..r).map(|i| wd[i * c..(i + 1) * c].iter().zip(xd).map(|(a, b)| a * b).sum()).collect();
        self.push("matvec", Tensor::vector(out), Op::MatVec(w.0, x.0))
    }

    /// `a [k,n] · w[r,n]ᵀ -> [k,r]`
    pub fn matmul_t(&mut self, a: Var, w: Var) -> Result<Var, TensorError> {
        let (at, wt) = (self.val(a.0), self.val(w.0));
        let ((k, n), (r, n2)) = match (at.dims2(), wt.dims2()) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(mismatch("matmul_t", at, wt)),
        };
        if n != n2 {
            return Err(mismatch("matmul_t", at, wt));
        }
        let (ad, wd) = (at.data(), wt.data());
        let mut out = vec![0.0; k * r];
        for i in 0..k {
            let arow = &ad[i * n..(i + 1) * n];
            for j in 0..r {
                out[i * r + j] = arow.iter().zip(&wd[j * n..(j + 1) * n]).map(|(x, y)| x * y).sum();
            }
        }
        self.push("matmul_t", Tensor { shape: vec![k, r], data: out }, Op::MatMulT(a.0, w.0))
    }

    /// `m[k,n]ᵀ · v [k] -> [n]`, i.e. the `v`-weighted sum of rows.
    pub fn mat_t_vec(&mut self, m: Var, v: Var) -> Result<Var, TensorError> {
        let (mt, vt) = (self.val(m.0), self.val(v.0));
        let (k, n) = mt.dims2().ok_or_else(|| mismatch("mat_t_vec", mt, vt))?;
        if vt.len() != k {
            return Err(mismatch("mat_t_vec", mt, vt));
        }
        let mut out = vec![0.0; n];
        for (i, &w) in vt.data().iter().enumerate() {
            for (o, x) in out.iter_mut().zip(mt.row(i)) {
                *o += w * x;
            }
        }
        self.push("mat_t_vec", Tensor::vector(out), Op::MatTVec(m.0, v.0))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, kind: Op) -> Result<Var, TensorError> {
        let (at, bt) = (self.val(a.0), self.val(b.0));
        if at.shape() != bt.shape() {
            return Err(mismatch(op, at, bt));
        }
        let data = at.data().iter().zip(bt.data()).map(|(&x, &y)| f(x, y)).collect();
        let shape = at.shape().to_vec();
        self.push(op, Tensor { shape, data }, kind)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.zip_same("add", a, b, |x, y| x + y, Op::Add(a.0, b.0))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.zip_same("mul", a, b, |x, y| x * y, Op::Mul(a.0, b.0))
    }

    /// Elementwise minimum; ties route the gradient to `a`.
    pub fn min(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.zip_same("min", a, b, |x, y| if x <= y { x } else { y }, Op::Min(a.0, b.0))
    }

    /// Adds the vector `v [n]` to every row of `m [k,n]`.
    pub fn add_row(&mut self, m: Var, v: Var) -> Result<Var, TensorError> {
        let (mt, vt) = (self.val(m.0), self.val(v.0));
        let n = *mt.shape().last().unwrap_or(&0);
        if mt.rank() != 2 || vt.len() != n {
            return Err(mismatch("add_row", mt, vt));
        }
        let vd = vt.data();
        let data = mt.data().iter().enumerate().map(|(i, &x)| x + vd[i % n]).collect();
        let shape = mt.shape().to_vec();
        self.push("add_row", Tensor { shape, data }, Op::AddRow(m.0, v.0))
    }

    /// Adds the one-element `s` to every entry of `a`.
    pub fn add_scalar(&mut self, a: Var, s: Var) -> Result<Var, TensorError> {
        let (at, st) = (self.val(a.0), self.val(s.0));
        if st.len() != 1 {
            return Err(mismatch("add_scalar", at, st));
        }
        let c = st.item();
        let data = at.data().iter().map(|x| x + c).collect();
        let shape = at.shape().to_vec();
        self.push("add_scalar", Tensor { shape, data }, Op::AddScalar(a.0, s.0))
    }

    /// Multiplies `a` by the one-element `s`.
    pub fn scale_by(&mut self, s: Var, a: Var) -> Result<Var, TensorError> {
        let (st, at) = (self.val(s.0), self.val(a.0));
        if st.len() != 1 {
            return Err(mismatch("scale_by", st, at));
        }
        let c = st.item();
        let data = at.data().iter().map(|x| x * c).collect();
        let shape = at.shape().to_vec();
        self.push("scale_by", Tensor { shape, data }, Op::ScaleBy(s.0, a.0))
    }

    /// `mul * a + add` with constant coefficients.
    pub fn affine(&mut self, a: Var, mul: f64, add: f64) -> Result<Var, TensorError> {
        let at = self.val(a.0);
        let t = Tensor { shape: at.shape().to_vec(), data: at.data().iter().map(|x| mul * x + add).collect() };
        self.push("affine", t, Op::Affine(a.0, mul))
    }

    fn map(&mut self, op: &'static str, a: Var, f: impl Fn(f64) -> f64, kind: Op) -> Result<Var, TensorError> {
        let at = self.val(a.0);
        let t = Tensor { shape: at.shape().to_vec(), data: at.data().iter().map(|&x| f(x)).collect() };
        self.push(op, t, kind)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, TensorError> {
        self.map("sigmoid", a, sigmoid, Op::Sigmoid(a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, TensorError> {
        self.map("tanh", a, libm::tanh, Op::Tanh(a.0))
    }

    /// `ln(max(a, floor))`; no gradient flows where the floor is active.
    pub fn log_floor(&mut self, a: Var, floor: f64) -> Result<Var, TensorError> {
        self.map("log", a, |x| libm::log(x.max(floor)), Op::Log(a.0, floor))
    }

    /// Softmax over a whole vector.
    pub fn softmax(&mut self, a: Var) -> Result<Var, TensorError> {
        let at = self.val(a.0);
        if at.rank() != 1 || at.is_empty() {
            return Err(TensorError::Empty { op: "softmax" });
        }
        let out = softmax(at.data(), None);
        self.push("softmax", Tensor::vector(out), Op::Softmax(a.0))
    }

    /// Softmax over the positions where `mask` is true; the others get
    /// exactly zero weight and no gradient.
    pub fn masked_softmax(&mut self, a: Var, mask: &[bool]) -> Result<Var, TensorError> {
        let at = self.val(a.0);
        if at.rank() != 1 || at.len() != mask.len() {
            return Err(shape_err("masked_softmax", at.shape(), &[mask.len()]));
        }
        if !mask.iter().any(|&m| m) {
            return Err(TensorError::Empty { op: "masked_softmax" });
        }
        let out = softmax(at.data(), Some(mask));
        // Softmax backward is y ⊙ (g − g·y), which already vanishes where y = 0.
        self.push("softmax", Tensor::vector(out), Op::Softmax(a.0))
    }

    /// Concatenates vectors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let mut data = Vec::new();
        for p in parts {
            let t = self.val(p.0);
            if t.rank() > 1 {
                return Err(shape_err("concat", t.shape(), &[t.len()]));
            }
            data.extend_from_slice(t.data());
        }
        self.push("concat", Tensor::vector(data), Op::Concat(parts.iter().map(|v| v.0).collect()))
    }

    /// `a[start..start + len]` of a vector.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let at = self.val(a.0);
        if start + len > at.len() {
            return Err(TensorError::IndexOutOfRange { op: "slice", index: start + len, len: at.len() });
        }
        let t = Tensor::vector(at.data()[start..start + len].to_vec());
        self.push("slice", t, Op::Slice(a.0, start))
    }

    /// Stacks equal-length vectors into a `[k,n]` matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var, TensorError> {
        let first = rows.first().ok_or(TensorError::Empty { op: "stack_rows" })?;
        let n = self.val(first.0).len();
        let mut data = Vec::with_capacity(n * rows.len());
        for r in rows {
            let t = self.val(r.0);
            if t.len() != n || t.rank() != 1 {
                return Err(shape_err("stack_rows", t.shape(), &[n]));
            }
            data.extend_from_slice(t.data());
        }
        let t = Tensor { shape: vec![rows.len(), n], data };
        self.push("stack_rows", t, Op::StackRows(rows.iter().map(|v| v.0).collect()))
    }

    /// Selects rows of `m [k,n]`.
    pub fn gather_rows(&mut self, m: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let mt = self.val(m.0);
        let (k, n) = mt.dims2().ok_or_else(|| shape_err("gather_rows", mt.shape(), &[0, 0]))?;
        let mut data = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            if i >= k {
                return Err(TensorError::IndexOutOfRange { op: "gather_rows", index: i, len: k });
            }
            data.extend_from_slice(mt.row(i));
        }
        let t = Tensor { shape: vec![idx.len(), n], data };
        self.push("gather_rows", t, Op::GatherRows(m.0, idx.to_vec()))
    }

    /// Columnwise max over the rows of `m [k,n]`; ties go to the lowest row.
    pub fn max_pool_rows(&mut self, m: Var) -> Result<Var, TensorError> {
        let mt = self.val(m.0);
        let (k, n) = mt.dims2().ok_or_else(|| shape_err("max_pool_rows", mt.shape(), &[0, 0]))?;
        if k == 0 {
            return Err(TensorError::Empty { op: "max_pool_rows" });
        }
        let d = mt.data();
        let mut arg = vec![0usize; n];
        let mut out = d[..n].to_vec();
        for r in 1..k {
            for c in 0..n {
                if d[r * n + c] > out[c] {
                    out[c] = d[r * n + c];
                    arg[c] = r;
                }
            }
        }
        self.push("max_pool_rows", Tensor::vector(out), Op::MaxPoolRows(m.0, arg))
    }

    /// Row `idx` of an embedding table `[V,E]`.
    pub fn embed(&mut self, table: Var, idx: usize) -> Result<Var, TensorError> {
        let t = self.val(table.0);
        let (v, _) = t.dims2().ok_or_else(|| shape_err("embed", t.shape(), &[0, 0]))?;
        if idx >= v {
            return Err(TensorError::IndexOutOfRange { op: "embed", index: idx, len: v });
        }
        let row = Tensor::vector(t.row(idx).to_vec());
        self.push("embed", row, Op::Embed(table.0, idx))
    }

    /// `out[idx[i]] += a[i]` into a zero vector of length `n`.
    pub fn scatter_add(&mut self, a: Var, idx: &[usize], n: usize) -> Result<Var, TensorError> {
        let at = self.val(a.0);
        if at.len() != idx.len() {
            return Err(shape_err("scatter_add", at.shape(), &[idx.len()]));
        }
        let mut out = vec![0.0; n];
        for (&i, &x) in idx.iter().zip(at.data()) {
            if i >= n {
                return Err(TensorError::IndexOutOfRange { op: "scatter_add", index: i, len: n });
            }
            out[i] += x;
        }
        self.push("scatter_add", Tensor::vector(out), Op::ScatterAdd(a.0, idx.to_vec()))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, TensorError> {
        let s = self.val(a.0).sum();
        self.push("sum", Tensor::scalar(s), Op::Sum(a.0))
    }

    /// Reverse pass from a scalar `loss`. Gradients are kept for leaves only.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lt = self.val(loss.0);
        if lt.len() != 1 {
            return Err(TensorError::NotScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop(&node.op, &node.value, &g, &mut grads);
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], i: usize) -> Option<&'g mut Vec<f64>> {
        if !self.nodes[i].needs_grad {
            return None;
        }
        let len = self.nodes[i].value.len();
        Some(grads[i].get_or_insert_with(|| vec![0.0; len]))
    }

    fn backprop(&self, op: &Op, out: &Tensor, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match *op {
            Op::Leaf | Op::Const => {}
            Op::MatVec(w, x) => {
                let (wt, xt) = (self.val(w), self.val(x));
                let c = xt.len();
                if let Some(gw) = self.slot(grads, w) {
                    for (r, &gr) in g.iter().enumerate() {
                        for (o, &xv) in gw[r * c..(r + 1) * c].iter_mut().zip(xt.data()) {
                            *o += gr * xv;
                        }
                    }
                }
                if let Some(gx) = self.slot(grads, x) {
                    for (r, &gr) in g.iter().enumerate() {
                        for (o, &wv) in gx.iter_mut().zip(&wt.data()[r * c..(r + 1) * c]) {
                            *o += gr * wv;
                        }
                    }
                }
            }
            Op::MatMulT(a, w) => {
                let (at, wt) = (self.val(a), self.val(w));
                let (k, n) = at.dims2().expect("rank 2");
                let r = wt.shape()[0];
                if let Some(ga) = self.slot(grads, a) {
                    for i in 0..k {
                        for j in 0..r {
                            let gij = g[i * r + j];
                            for (o, &wv) in ga[i * n..(i + 1) * n].iter_mut().zip(wt.row(j)) {
                                *o += gij * wv;
                            }
                        }
                    }
                }
                if let Some(gw) = self.slot(grads, w) {
                    for i in 0..k {
                        for j in 0..r {
                            let gij = g[i * r + j];
                            for (o, &av) in gw[j * n..(j + 1) * n].iter_mut().zip(at.row(i)) {
                                *o += gij * av;
                            }
                        }
                    }
                }
            }
            Op::MatTVec(m, v) => {
                let (mt, vt) = (self.val(m), self.val(v));
                let n = g.len();
                if let Some(gm) = self.slot(grads, m) {
                    for (i, &w) in vt.data().iter().enumerate() {
                        for (o, &gv) in gm[i * n..(i + 1) * n].iter_mut().zip(g) {
                            *o += w * gv;
                        }
                    }
                }
                if let Some(gv) = self.slot(grads, v) {
                    for (i, o) in gv.iter_mut().enumerate() {
                        *o += mt.row(i).iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
            Op::Add(a, b) => {
                for i in [a, b] {
                    if let Some(gi) = self.slot(grads, i) {
                        add_into(gi, g);
                    }
                }
            }
            Op::AddRow(m, v) => {
                if let Some(gm) = self.slot(grads, m) {
                    add_into(gm, g);
                }
                if let Some(gv) = self.slot(grads, v) {
                    let n = gv.len();
                    for (i, &x) in g.iter().enumerate() {
                        gv[i % n] += x;
                    }
                }
            }
            Op::AddScalar(a, s) => {
                if let Some(ga) = self.slot(grads, a) {
                    add_into(ga, g);
                }
                if let Some(gs) = self.slot(grads, s) {
                    gs[0] += g.iter().sum::<f64>();
                }
            }
            Op::Mul(a, b) => {
                let (at, bt) = (self.val(a), self.val(b));
                if let Some(ga) = self.slot(grads, a) {
                    for ((o, &gv), &y) in ga.iter_mut().zip(g).zip(bt.data()) {
                        *o += gv * y;
                    }
                }
                if let Some(gb) = self.slot(grads, b) {
                    for ((o, &gv), &x) in gb.iter_mut().zip(g).zip(at.data()) {
                        *o += gv * x;
                    }
                }
            }
            Op::ScaleBy(s, a) => {
                let (st, at) = (self.val(s), self.val(a));
                if let Some(gs) = self.slot(grads, s) {
                    gs[0] += g.iter().zip(at.data()).map(|(x, y)| x * y).sum::<f64>();
                }
                if let Some(ga) = self.slot(grads, a) {
                    let c = st.item();
                    for (o, &gv) in ga.iter_mut().zip(g) {
                        *o += c * gv;
                    }
                }
            }
            Op::Affine(a, mul) => {
                if let Some(ga) = self.slot(grads, a) {
                    for (o, &gv) in ga.iter_mut().zip(g) {
                        *o += mul * gv;
                    }
                }
            }
            Op::Sigmoid(a) => {
                if let Some(ga) = self.slot(grads, a) {
                    for ((o, &gv), &y) in ga.iter_mut().zip(g).zip(out.data()) {
                        *o += gv * y * (1.0 - y);
                    }
                }
            }
            Op::Tanh(a) => {
                if let Some(ga) = self.slot(grads, a) {
                    for ((o, &gv), &y) in ga.iter_mut().zip(g).zip(out.data()) {
                        *o += gv * (1.0 - y * y);
                    }
                }
            }
            Op::Log(a, floor) => {
                let at = self.val(a);
                if let Some(ga) = self.slot(grads, a) {
                    for ((o, &gv), &x) in ga.iter_mut().zip(g).zip(at.data()) {
                        if x > floor {
                            *o += gv / x;
                        }
                    }
                }
            }
            Op::Softmax(a) => {
                if let Some(ga) = self.slot(grads, a) {
                    let y = out.data();
                    let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    for ((o, &gv), &yv) in ga.iter_mut().zip(g).zip(y) {
                        *o += yv * (gv - dot);
                    }
                }
            }
            Op::Concat(ref parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = self.val(p).len();
                    if let Some(gp) = self.slot(grads, p) {
                        add_into(gp, &g[off..off + len]);
                    }
                    off += len;
                }
            }
            Op::Slice(a, start) => {
                if let Some(ga) = self.slot(grads, a) {
                    add_into(&mut ga[start..start + g.len()], g);
                }
            }
            Op::StackRows(ref rows) => {
                let n = out.shape()[1];
                for (r, &p) in rows.iter().enumerate() {
                    if let Some(gp) = self.slot(grads, p) {
                        add_into(gp, &g[r * n..(r + 1) * n]);
                    }
                }
            }
            Op::GatherRows(m, ref idx) => {
                let n = out.shape()[1];
                if let Some(gm) = self.slot(grads, m) {
                    for (r, &src) in idx.iter().enumerate() {
                        add_into(&mut gm[src * n..(src + 1) * n], &g[r * n..(r + 1) * n]);
                    }
                }
            }
            Op::MaxPoolRows(m, ref arg) => {
                let n = arg.len();
                if let Some(gm) = self.slot(grads, m) {
                    for (c, &r) in arg.iter().enumerate() {
                        gm[r * n + c] += g[c];
                    }
                }
            }
            Op::Embed(table, idx) => {
                let e = g.len();
                if let Some(gt) = self.slot(grads, table) {
                    add_into(&mut gt[idx * e..(idx + 1) * e], g);
                }
            }
            Op::ScatterAdd(a, ref idx) => {
                if let Some(ga) = self.slot(grads, a) {
                    for (o, &i) in ga.iter_mut().zip(idx) {
                        *o += g[i];
                    }
                }
            }
            Op::Sum(a) => {
                if let Some(ga) = self.slot(grads, a) {
                    for o in ga.iter_mut() {
                        *o += g[0];
                    }
                }
            }
            Op::Min(a, b) => {
                let (at, bt) = (self.val(a), self.val(b));
                let pick_a: Vec<bool> = at.data().iter().zip(bt.data()).map(|(x, y)| x <= y).collect();
                if let Some(ga) = self.slot(grads, a) {
                    for ((o, &gv), &p) in ga.iter_mut().zip(g).zip(&pick_a) {
                        if p {
                            *o += gv;
                        }
                    }
                }
                if let Some(gb) = self.slot(grads, b) {
                    for ((o, &gv), &p) in gb.iter_mut().zip(g).zip(&pick_a) {
                        if !p {
                            *o += gv;
                        }
                    }
                }
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Leaf gradients from one [`Tape::backward`] call.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to a leaf; zeros when the loss does not depend on
    /// it.
    pub fn wrt(&self, v: Var) -> Tensor {
        let shape = self.shapes[v.0].clone();
        match &self.grads[v.0] {
            Some(g) => Tensor { shape, data: g.clone() },
            None => Tensor::zeros(&shape),
        }
    }

    /// Like [`Gradients::wrt`] but moves the buffer out.
    pub fn take(&mut self, v: Var) -> Tensor {
        let shape = self.shapes[v.0].clone();
        match self.grads[v.0].take() {
            Some(g) => Tensor { shape, data: g },
            None => Tensor::zeros(&shape),
        }
    }
}
