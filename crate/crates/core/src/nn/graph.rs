//! Tape-based reverse-mode differentiation over [`Tensor`]s.
//!
//! Every op appends a node holding its forward value. [`Graph::backward`]
//! walks the tape in reverse and accumulates gradients into a [`Grads`]
//! shaped like the parameter store. Shape errors are programming errors and
//! panic.

use alloc::vec::Vec;

use super::params::{Grads, ParamId, ParamStore};
use super::tensor::{matmul_acc, matmul_at_acc, matmul_bt_acc, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op<F> {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, F),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    RepeatRows(Var),
    Gather(Var, Vec<usize>),
    Skew(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Tensor<F>, rstd: Vec<F> },
    Dropout(Var, Vec<F>),
    CrossEntropy { logits: Var, targets: Vec<Option<usize>>, probs: Tensor<F> },
    SumAll(Var),
}

struct Node<F> {
    op: Op<F>,
    /// `None` for parameters, which are read from the store.
    value: Option<Tensor<F>>,
}

pub struct Graph<'p, F: Scalar> {
    params: &'p ParamStore<F>,
    param_vars: Vec<Option<Var>>,
    nodes: Vec<Node<F>>,
}

/// Row-wise softmax in place; with `causal`, entries right of the diagonal
/// are zero.
pub(crate) fn softmax_rows<F: Scalar>(t: &mut Tensor<F>, causal: bool) {
    let cols = t.cols;
    for i in 0..t.rows {
        let row = t.row_mut(i);
        let live = if causal { (i + 1).min(cols) } else { cols };
        let max = row[..live].iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for x in &mut row[..live] {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in &mut row[..live] {
            *x = *x / sum;
        }
        for x in &mut row[live..] {
            *x = F::zero();
        }
    }
}

/// Index into the flat input that lands at flat output position `o` under
/// the skew rearrangement, or `None` for the padding column.
///
/// The `L x L` input is padded with a zero column on the left, the
/// `L x (L + 1)` buffer is read as `(L + 1) x L`, and the first row is
/// dropped.
fn skew_source(o: usize, n: usize) -> Option<usize> {
    let flat = o + n;
    let (r, c) = (flat / (n + 1), flat % (n + 1));
    if c == 0 {
        None
    } else {
        Some(r * n + c - 1)
    }
}

impl<'p, F: Scalar> Graph<'p, F> {
    pub fn new(params: &'p ParamStore<F>) -> Self {
        Self { params, param_vars: alloc::vec![None; params.len()], nodes: Vec::new() }
    }

    pub fn params(&self) -> &'p ParamStore<F> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op<F>, value: Tensor<F>) -> Var {
        self.nodes.push(Node { op, value: Some(value) });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        let node = &self.nodes[v.0];
        match (&node.op, &node.value) {
            (Op::Param(id), _) => self.params.get(*id),
            (_, Some(t)) => t,
            _ => unreachable!("non-parameter node without a value"),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    /// The node for a parameter; repeated calls share one node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        self.nodes.push(Node { op: Op::Param(id), value: None });
        let v = Var(self.nodes.len() - 1);
        self.param_vars[id.0] = Some(v);
        v
    }

    /// A constant.
    pub fn input(&mut self, t: Tensor<F>) -> Var {
        self.push(Op::Input, t)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), out)
    }

    /// `a · bᵀ`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul_bt(self.value(b));
        self.push(Op::MatMulBt(a, b), out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "add shape mismatch");
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(Op::Add(a, b), out)
    }

    /// Adds the `1 x n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let bv = self.value(b);
        assert_eq!((1, self.value(a).cols), bv.shape(), "add_row shape mismatch");
        let mut out = self.value(a).clone();
        let cols = out.cols;
        for chunk in out.data.chunks_mut(cols) {
            for (x, &y) in chunk.iter_mut().zip(&bv.data) {
                *x += y;
            }
        }
        self.push(Op::AddRow(a, b), out)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "mul shape mismatch");
        let bv = self.value(b);
        let mut out = self.value(a).clone();
        for (x, &y) in out.data.iter_mut().zip(&bv.data) {
            *x = *x * y;
        }
        self.push(Op::Mul(a, b), out)
    }

    pub fn scale(&mut self, a: Var, s: F) -> Var {
        let out = self.value(a).map(|x| x * s);
        self.push(Op::Scale(a, s), out)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| F::one() / (F::one() + (-x).exp()));
        self.push(Op::Sigmoid(a), out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.tanh());
        self.push(Op::Tanh(a), out)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(F::zero()));
        self.push(Op::Relu(a), out)
    }

    /// Row-wise softmax. With `causal`, row `i` only spans columns `0..=i`.
    pub fn softmax(&mut self, a: Var, causal: bool) -> Var {
        let mut out = self.value(a).clone();
        softmax_rows(&mut out, causal);
        self.push(Op::Softmax(a), out)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.shape(parts[0]).0;
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                let t = self.value(p);
                assert_eq!(t.rows, rows, "concat_cols row mismatch");
                data.extend_from_slice(t.row(r));
            }
        }
        self.push(Op::ConcatCols(parts.to_vec()), Tensor::from_vec(rows, cols, data))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let t = self.value(a);
        assert!(start + len <= t.cols, "slice_cols out of range");
        let mut data = Vec::with_capacity(t.rows * len);
        for r in 0..t.rows {
            data.extend_from_slice(&t.row(r)[start..start + len]);
        }
        let out = Tensor::from_vec(t.rows, len, data);
        self.push(Op::SliceCols(a, start), out)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.shape(parts[0]).1;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols, cols, "concat_rows column mismatch");
            data.extend_from_slice(&t.data);
        }
        let rows = data.len() / cols.max(1);
        self.push(Op::ConcatRows(parts.to_vec()), Tensor::from_vec(rows, cols, data))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let t = self.value(a);
        assert!(start + len <= t.rows, "slice_rows out of range");
        let out = Tensor::from_vec(len, t.cols, t.data[start * t.cols..(start + len) * t.cols].to_vec());
        self.push(Op::SliceRows(a, start), out)
    }

    /// Stacks `n` copies of the `1 x d` row `a`.
    pub fn repeat_rows(&mut self, a: Var, n: usize) -> Var {
        let t = self.value(a);
        assert_eq!(t.rows, 1, "repeat_rows needs a single row");
        let mut data = Vec::with_capacity(n * t.cols);
        for _ in 0..n {
            data.extend_from_slice(&t.data);
        }
        let out = Tensor::from_vec(n, t.cols, data);
        self.push(Op::RepeatRows(a), out)
    }

    /// Rows of `table` picked by `ids`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut data = Vec::with_capacity(ids.len() * t.cols);
        for &i in ids {
            data.extend_from_slice(t.row(i));
        }
        let out = Tensor::from_vec(ids.len(), t.cols, data);
        self.push(Op::Gather(table, ids.to_vec()), out)
    }

    /// Turns `S[i][r] = q_i · e_r` (column `r` holding relative distance
    /// `L - 1 - r`) into `out[i][j] = S[i][L - 1 - i + j]`, the logit for
    /// distance `i - j`. Entries above the diagonal are meaningless and
    /// must be masked.
    pub fn skew(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let n = t.rows;
        assert_eq!(t.cols, n, "skew needs a square matrix");
        let data = (0..n * n).map(|o| skew_source(o, n).map_or(F::zero(), |s| t.data[s])).collect();
        self.push(Op::Skew(a), Tensor::from_vec(n, n, data))
    }

    /// Per-row normalisation to zero mean and unit variance, then `gamma`
    /// and `beta` (both `1 x d`).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: F) -> Var {
        let t = self.value(x);
        let (rows, cols) = t.shape();
        let (g, b) = (self.value(gamma), self.value(beta));
        assert_eq!(g.shape(), (1, cols), "layer_norm gamma shape");
        assert_eq!(b.shape(), (1, cols), "layer_norm beta shape");
        let n = F::of(cols as f64);
        let mut xhat = Tensor::zeros(rows, cols);
        let mut rstd = Vec::with_capacity(rows);
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let row = t.row(r);
            let mean = row.iter().copied().sum::<F>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
            let rs = F::one() / (var + eps).sqrt();
            rstd.push(rs);
            for (c, &v) in row.iter().enumerate() {
                let h = (v - mean) * rs;
                xhat.data[r * cols + c] = h;
                out.data[r * cols + c] = h * g.data[c] + b.data[c];
            }
        }
        self.push(Op::LayerNorm { x, gamma, beta, xhat, rstd }, out)
    }

    /// Multiplies by a fixed mask (already scaled by the keep probability).
    pub fn dropout_mask(&mut self, a: Var, mask: Vec<F>) -> Var {
        let t = self.value(a);
        assert_eq!(mask.len(), t.data.len(), "dropout mask length");
        let data = t.data.iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        let out = Tensor::from_vec(t.rows, t.cols, data);
        self.push(Op::Dropout(a, mask), out)
    }

    /// Summed negative log-likelihood of each row's target class; rows with
    /// target `None` are skipped. Returns a `1 x 1` node.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[Option<usize>]) -> Var {
        let t = self.value(logits);
        assert_eq!(t.rows, targets.len(), "cross_entropy target count");
        let mut probs = t.clone();
        softmax_rows(&mut probs, false);
        let mut loss = F::zero();
        for (r, target) in targets.iter().enumerate() {
            if let Some(k) = *target {
                let row = t.row(r);
                let max = row.iter().copied().fold(F::neg_infinity(), F::max);
                let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<F>().ln();
                loss += lse - row[k];
            }
        }
        self.push(
            Op::CrossEntropy { logits, targets: targets.to_vec(), probs },
            Tensor::from_vec(1, 1, alloc::vec![loss]),
        )
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Op::SumAll(a), Tensor::from_vec(1, 1, alloc::vec![s]))
    }

    /// Gradients of the `1 x 1` node `loss` with respect to every parameter.
    pub fn backward(&self, loss: Var) -> Grads<F> {
        assert_eq!(self.shape(loss), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Tensor<F>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_vec(1, 1, alloc::vec![F::one()]));
        let mut out = Grads::zeros_like(self.params);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.backward_node(i, &g, &mut grads, &mut out);
        }
        out
    }

    fn backward_node(&self, i: usize, g: &Tensor<F>, grads: &mut [Option<Tensor<F>>], out: &mut Grads<F>) {
        let y = || self.nodes[i].value.as_ref().unwrap();
        match &self.nodes[i].op {
            Op::Input => {}
            Op::Param(id) => out.tensors[id.0].add_assign(g),
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                matmul_bt_acc(g, bv, slot(grads, *a, av.shape()));
                matmul_at_acc(av, g, slot(grads, *b, bv.shape()));
            }
            Op::MatMulBt(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                matmul_acc(g, bv, slot(grads, *a, av.shape()));
                matmul_at_acc(g, av, slot(grads, *b, bv.shape()));
            }
            Op::Add(a, b) => {
                slot(grads, *a, g.shape()).add_assign(g);
                slot(grads, *b, g.shape()).add_assign(g);
            }
            Op::AddRow(a, b) => {
                slot(grads, *a, g.shape()).add_assign(g);
                let gb = slot(grads, *b, (1, g.cols));
                for chunk in g.data.chunks(g.cols) {
                    for (x, &y) in gb.data.iter_mut().zip(chunk) {
                        *x += y;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                zip_acc(slot(grads, *a, g.shape()), g, bv, |g, o| g * o);
                zip_acc(slot(grads, *b, g.shape()), g, av, |g, o| g * o);
            }
            Op::Scale(a, s) => {
                let s = *s;
                for (x, &gv) in slot(grads, *a, g.shape()).data.iter_mut().zip(&g.data) {
                    *x += gv * s;
                }
            }
            Op::Sigmoid(a) => zip_acc(slot(grads, *a, g.shape()), g, y(), |g, y| g * y * (F::one() - y)),
            Op::Tanh(a) => zip_acc(slot(grads, *a, g.shape()), g, y(), |g, y| g * (F::one() - y * y)),
            Op::Relu(a) => zip_acc(slot(grads, *a, g.shape()), g, y(), |g, y| if y > F::zero() { g } else { F::zero() }),
            Op::Softmax(x) => {
                let y = y();
                let gx = slot(grads, *x, g.shape());
                for r in 0..g.rows {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let dot: F = gr.iter().zip(yr).map(|(&a, &b)| a * b).sum();
                    for ((o, &gv), &yv) in gx.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *o += yv * (gv - dot);
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for &p in parts {
                    let shape = self.shape(p);
                    let gp = slot(grads, p, shape);
                    for r in 0..g.rows {
                        for (o, &gv) in gp.row_mut(r).iter_mut().zip(&g.row(r)[start..start + shape.1]) {
                            *o += gv;
                        }
                    }
                    start += shape.1;
                }
            }
            Op::SliceCols(a, start) => {
                let gp = slot(grads, *a, self.shape(*a));
                for r in 0..g.rows {
                    for (o, &gv) in gp.row_mut(r)[*start..*start + g.cols].iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let shape = self.shape(p);
                    let n = shape.0 * shape.1;
                    for (o, &gv) in slot(grads, p, shape).data.iter_mut().zip(&g.data[offset..offset + n]) {
                        *o += gv;
                    }
                    offset += n;
                }
            }
            Op::SliceRows(a, start) => {
                let gp = slot(grads, *a, self.shape(*a));
                let off = start * g.cols;
                for (o, &gv) in gp.data[off..off + g.data.len()].iter_mut().zip(&g.data) {
                    *o += gv;
                }
            }
            Op::RepeatRows(a) => {
                let gp = slot(grads, *a, (1, g.cols));
                for chunk in g.data.chunks(g.cols) {
                    for (o, &gv) in gp.data.iter_mut().zip(chunk) {
                        *o += gv;
                    }
                }
            }
            Op::Gather(table, ids) => {
                let gp = slot(grads, *table, self.shape(*table));
                for (r, &id) in ids.iter().enumerate() {
                    for (o, &gv) in gp.row_mut(id).iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::Skew(a) => {
                let n = g.rows;
                let gp = slot(grads, *a, (n, n));
                for (o, &gv) in g.data.iter().enumerate() {
                    if let Some(s) = skew_source(o, n) {
                        gp.data[s] += gv;
                    }
                }
            }
            Op::LayerNorm { x, gamma, beta, xhat, rstd } => {
                let cols = g.cols;
                let n = F::of(cols as f64);
                let gv = self.value(*gamma).data.clone();
                {
                    let gb = slot(grads, *beta, (1, cols));
                    for chunk in g.data.chunks(cols) {
                        for (o, &v) in gb.data.iter_mut().zip(chunk) {
                            *o += v;
                        }
                    }
                }
                {
                    let gg = slot(grads, *gamma, (1, cols));
                    for (gr, hr) in g.data.chunks(cols).zip(xhat.data.chunks(cols)) {
                        for ((o, &v), &h) in gg.data.iter_mut().zip(gr).zip(hr) {
                            *o += v * h;
                        }
                    }
                }
                let gx = slot(grads, *x, g.shape());
                let mut dh = alloc::vec![F::zero(); cols];
                for (r, &rs) in rstd.iter().enumerate() {
                    let (gr, hr) = (g.row(r), xhat.row(r));
                    for ((d, &a), &w) in dh.iter_mut().zip(gr).zip(gv.iter()) {
                        *d = a * w;
                    }
                    let mean_dh = dh.iter().copied().sum::<F>() / n;
                    let mean_dhh = dh.iter().zip(hr).map(|(&a, &b)| a * b).sum::<F>() / n;
                    for (c, o) in gx.row_mut(r).iter_mut().enumerate() {
                        *o += rs * (dh[c] - mean_dh - hr[c] * mean_dhh);
                    }
                }
            }
            Op::Dropout(a, mask) => {
                for ((o, &gv), &m) in slot(grads, *a, g.shape()).data.iter_mut().zip(&g.data).zip(mask) {
                    *o += gv * m;
                }
            }
            Op::CrossEntropy { logits, targets, probs } => {
                let scale = g.data[0];
                let gl = slot(grads, *logits, probs.shape());
                for (r, target) in targets.iter().enumerate() {
                    if let Some(k) = *target {
                        for (o, &p) in gl.row_mut(r).iter_mut().zip(probs.row(r)) {
                            *o += scale * p;
                        }
                        gl.data[r * probs.cols + k] = gl.data[r * probs.cols + k] - scale;
                    }
                }
            }
            Op::SumAll(a) => {
                let s = g.data[0];
                for o in &mut slot(grads, *a, self.shape(*a)).data {
                    *o += s;
                }
            }
        }
    }
}

fn slot<F: Scalar>(grads: &mut [Option<Tensor<F>>], v: Var, shape: (usize, usize)) -> &mut Tensor<F> {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape.0, shape.1))
}

fn zip_acc<F: Scalar>(out: &mut Tensor<F>, g: &Tensor<F>, other: &Tensor<F>, f: impl Fn(F, F) -> F) {
    for ((o, &gv), &ov) in out.data.iter_mut().zip(&g.data).zip(&other.data) {
        *o += f(gv, ov);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::check_gradients;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn store(shapes: &[(usize, usize)], seed: u64) -> ParamStore<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = ParamStore::default();
        for (i, &(r, c)) in shapes.iter().enumerate() {
            s.add_uniform(alloc::format!("p{i}"), r, c, 1.0, &mut rng);
        }
        s
    }

    /// Weighted sum so that every output entry gets a distinct gradient.
    fn weighted_sum(g: &mut Graph<'_, f64>, v: Var) -> Var {
        let (r, c) = g.shape(v);
        let w = g.input(Tensor::from_vec(r, c, (0..r * c).map(|i| 0.3 + 0.17 * i as f64).collect()));
        let m = g.mul(v, w);
        g.sum_all(m)
    }

    fn check(shapes: &[(usize, usize)], f: impl Fn(&mut Graph<'_, f64>, &[Var]) -> Var) {
        let s = store(shapes, 3);
        let report = check_gradients(&s, |g| {
            let vars: Vec<Var> = s.ids().map(|id| g.param(id)).collect();
            let out = f(g, &vars);
            if g.shape(out) == (1, 1) {
                out
            } else {
                weighted_sum(g, out)
            }
        });
        assert!(report.max_rel_error <= 1e-3, "{report:?}");
    }

    #[test]
    fn elementwise_ops() {
        check(&[(3, 4), (3, 4)], |g, v| g.add(v[0], v[1]));
        check(&[(3, 4), (3, 4)], |g, v| g.mul(v[0], v[1]));
        check(&[(3, 4)], |g, v| g.scale(v[0], -1.7));
        check(&[(3, 4)], |g, v| g.sigmoid(v[0]));
        check(&[(3, 4)], |g, v| g.tanh(v[0]));
        check(&[(3, 4)], |g, v| g.relu(v[0]));
        check(&[(3, 4), (1, 4)], |g, v| g.add_row(v[0], v[1]));
    }

    #[test]
    fn products_and_shapes() {
        check(&[(3, 4), (4, 5)], |g, v| g.matmul(v[0], v[1]));
        check(&[(3, 4), (5, 4)], |g, v| g.matmul_bt(v[0], v[1]));
        check(&[(3, 2), (3, 3)], |g, v| g.concat_cols(&[v[0], v[1], v[0]]));
        check(&[(3, 6)], |g, v| g.slice_cols(v[0], 2, 3));
        check(&[(2, 3), (4, 3)], |g, v| g.concat_rows(&[v[1], v[0]]));
        check(&[(5, 3)], |g, v| g.slice_rows(v[0], 1, 3));
        check(&[(1, 4)], |g, v| g.repeat_rows(v[0], 3));
        check(&[(5, 3)], |g, v| g.gather_rows(v[0], &[4, 0, 4, 2]));
        check(&[(6, 6)], |g, v| g.skew(v[0]));
    }

    #[test]
    fn normalisation_and_losses() {
        check(&[(4, 5)], |g, v| g.softmax(v[0], false));
        check(&[(4, 4)], |g, v| g.softmax(v[0], true));
        check(&[(3, 6), (1, 6), (1, 6)], |g, v| g.layer_norm(v[0], v[1], v[2], 1e-5));
        check(&[(4, 5)], |g, v| g.cross_entropy(v[0], &[Some(1), None, Some(4), Some(0)]));
        check(&[(3, 4)], |g, v| {
            let mask = vec![2.0, 0.0, 2.0, 2.0, 0.0, 2.0, 2.0, 2.0, 0.0, 2.0, 2.0, 0.0];
            g.dropout_mask(v[0], mask)
        });
    }

    #[test]
    fn skew_moves_relative_logits() {
        let s = ParamStore::<f64>::default();
        let mut g = Graph::new(&s);
        let n = 4;
        // Column r of the input encodes distance n-1-r.
        let data = (0..n * n).map(|k| (10 * (k / n) + (n - 1 - k % n)) as f64).collect();
        let a = g.input(Tensor::from_vec(n, n, data));
        let out = g.skew(a);
        for i in 0..n {
            for j in 0..=i {
                assert_eq!(g.value(out).get(i, j), (10 * i + (i - j)) as f64);
            }
        }
    }

    #[test]
    fn causal_softmax_rows() {
        let s = ParamStore::<f64>::default();
        let mut g = Graph::new(&s);
        let a = g.input(Tensor::from_vec(2, 2, vec![5.0, 9.0, 1.0, 1.0]));
        let y = g.softmax(a, true);
        assert_eq!(g.value(y).data, vec![1.0, 0.0, 0.5, 0.5]);
    }

    #[test]
    fn cross_entropy_values() {
        let s = ParamStore::<f64>::default();
        let mut g = Graph::new(&s);
        let a = g.input(Tensor::zeros(3, 4));
        let l = g.cross_entropy(a, &[Some(0), Some(3), None]);
        assert!((g.value(l).data[0] - 2.0 * libm::log(4.0)).abs() < 1e-12);
        let b = g.input(Tensor::from_vec(1, 3, vec![0.0, 1e4, 0.0]));
        let l = g.cross_entropy(b, &[Some(1)]);
        assert_eq!(g.value(l).data[0], 0.0);
    }
}
