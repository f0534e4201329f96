use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::graph::{Graph, Var};
use super::params::{ParamId, ParamStore};
use super::tensor::{Scalar, Tensor};
use super::NnError;

/// Dropout state for one forward pass. Without an RNG the pass is in
/// evaluation mode and dropout is the identity.
pub struct Ctx<'r> {
    pub rng: Option<&'r mut ChaCha8Rng>,
    pub dropout: f64,
}

impl Ctx<'_> {
    pub fn eval() -> Self {
        Ctx { rng: None, dropout: 0.0 }
    }

    pub fn is_training(&self) -> bool {
        self.rng.is_some()
    }

    pub fn dropout<F: Scalar>(&mut self, g: &mut Graph<'_, F>, x: Var) -> Var {
        let p = self.dropout;
        let Some(rng) = self.rng.as_deref_mut() else { return x };
        if p <= 0.0 {
            return x;
        }
        let keep = F::of(1.0 / (1.0 - p));
        let n = g.value(x).data.len();
        let mask = (0..n).map(|_| if rng.gen::<f64>() < p { F::zero() } else { keep }).collect();
        g.dropout_mask(x, mask)
    }
}

/// `x · W + b` with `W` stored as `in x out`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new<F: Scalar>(store: &mut ParamStore<F>, name: &str, input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = store.add_glorot(alloc::format!("{name}.w"), input, output, rng);
        let b = store.add_constant(alloc::format!("{name}.b"), 1, output, 0.0);
        Self { w, b }
    }

    pub fn forward<F: Scalar>(&self, g: &mut Graph<'_, F>, x: Var) -> Var {
        let (w, b) = (g.param(self.w), g.param(self.b));
        let y = g.matmul(x, w);
        g.add_row(y, b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Embedding {
    pub table: ParamId,
    pub field: &'static str,
}

impl Embedding {
    pub fn new<F: Scalar>(
        store: &mut ParamStore<F>,
        name: &str,
        field: &'static str,
        vocab: usize,
        dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self { table: store.add_glorot(alloc::format!("{name}.{field}"), vocab, dim, rng), field }
    }

    pub fn forward<F: Scalar>(&self, g: &mut Graph<'_, F>, ids: &[u32]) -> Result<Var, NnError> {
        let size = g.params().get(self.table).rows;
        let mut rows = Vec::with_capacity(ids.len());
        for &id in ids {
            if id as usize >= size {
                return Err(NnError::IdOutOfRange { field: self.field, id, size });
            }
            rows.push(id as usize);
        }
        let t = g.param(self.table);
        Ok(g.gather_rows(t, &rows))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub const EPS: f64 = 1e-5;

    pub fn new<F: Scalar>(store: &mut ParamStore<F>, name: &str, dim: usize) -> Self {
        Self {
            gamma: store.add_constant(alloc::format!("{name}.gamma"), 1, dim, 1.0),
            beta: store.add_constant(alloc::format!("{name}.beta"), 1, dim, 0.0),
        }
    }

    pub fn forward<F: Scalar>(&self, g: &mut Graph<'_, F>, x: Var) -> Var {
        let (gamma, beta) = (g.param(self.gamma), g.param(self.beta));
        g.layer_norm(x, gamma, beta, F::of(Self::EPS))
    }
}

/// One LSTM direction. Gate columns are ordered input, forget, cell, output.
#[derive(Debug, Clone, Copy)]
pub struct Lstm {
    pub input: Linear,
    pub recurrent: ParamId,
    pub hidden: usize,
}

impl Lstm {
    pub fn new<F: Scalar>(store: &mut ParamStore<F>, name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let lin = Linear::new(store, &alloc::format!("{name}.x"), input, 4 * hidden, rng);
        for c in hidden..2 * hidden {
            store.get_mut(lin.b).data[c] = F::one();
        }
        let recurrent = store.add_glorot(alloc::format!("{name}.h"), hidden, 4 * hidden, rng);
        Self { input: lin, recurrent, hidden }
    }

    /// Hidden states for every step of `x` (`T x in`), in input order.
    /// `reverse` runs from the last step to the first.
    pub fn forward<F: Scalar>(&self, g: &mut Graph<'_, F>, x: Var, reverse: bool) -> Var {
        let steps = g.shape(x).0;
        let n = self.hidden;
        let xp = self.input.forward(g, x);
        let u = g.param(self.recurrent);
        let mut h = g.input(Tensor::zeros(1, n));
        let mut c = g.input(Tensor::zeros(1, n));
        let mut outs = alloc::vec![h; steps];
        for k in 0..steps {
            let t = if reverse { steps - 1 - k } else { k };
            let xt = g.slice_rows(xp, t, 1);
            let hu = g.matmul(h, u);
            let pre = g.add(xt, hu);
            let i = g.slice_cols(pre, 0, n);
            let i = g.sigmoid(i);
            let f = g.slice_cols(pre, n, n);
            let f = g.sigmoid(f);
            let cand = g.slice_cols(pre, 2 * n, n);
            let cand = g.tanh(cand);
            let o = g.slice_cols(pre, 3 * n, n);
            let o = g.sigmoid(o);
            let keep = g.mul(f, c);
            let write = g.mul(i, cand);
            c = g.add(keep, write);
            let tc = g.tanh(c);
            h = g.mul(o, tc);
            outs[t] = h;
        }
        g.concat_rows(&outs)
    }
}

/// Multi-head attention. Self-attention layers may carry a learned table of
/// relative-position embeddings for distances `0..=window`; larger
/// distances share the last row.
#[derive(Debug, Clone, Copy)]
pub struct Attention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub rel: Option<ParamId>,
    pub heads: usize,
    pub window: usize,
}

impl Attention {
    pub fn new<F: Scalar>(
        store: &mut ParamStore<F>,
        name: &str,
        d_model: usize,
        kv_dim: usize,
        heads: usize,
        relative_window: Option<usize>,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let q = Linear::new(store, &alloc::format!("{name}.q"), d_model, d_model, rng);
        let k = Linear::new(store, &alloc::format!("{name}.k"), kv_dim, d_model, rng);
        let v = Linear::new(store, &alloc::format!("{name}.v"), kv_dim, d_model, rng);
        let o = Linear::new(store, &alloc::format!("{name}.o"), d_model, d_model, rng);
        let rel = relative_window.map(|w| store.add_glorot(alloc::format!("{name}.rel"), w + 1, d_model, rng));
        Self { q, k, v, o, rel, heads, window: relative_window.unwrap_or(0) }
    }

    /// Causal self-attention when `memory` is `None`, otherwise attention
    /// from `x` over every row of `memory`.
    pub fn forward<F: Scalar>(&self, g: &mut Graph<'_, F>, x: Var, memory: Option<Var>) -> Var {
        let kv_src = memory.unwrap_or(x);
        let q = self.q.forward(g, x);
        let k = self.k.forward(g, kv_src);
        let v = self.v.forward(g, kv_src);
        let rel = match (memory, self.rel) {
            (None, Some(table)) => {
                let t = g.param(table);
                let len = g.shape(x).0;
                Some(g.gather_rows(t, &relative_rows(len, self.window)))
            }
            _ => None,
        };
        let ctx = multi_head(g, q, k, v, rel, self.heads, memory.is_none());
        self.o.forward(g, ctx)
    }
}

/// Table row used by column `r` of the `L x L` relative logits: column `r`
/// holds distance `L - 1 - r`, clipped to `window`.
pub fn relative_rows(len: usize, window: usize) -> Vec<usize> {
    (0..len).map(|r| (len - 1 - r).min(window)).collect()
}

/// Scaled dot-product attention over `heads` column blocks. `rel` holds
/// one relative embedding per column of the skewed logits (see
/// [`relative_rows`]) and requires square, causal attention.
pub fn multi_head<F: Scalar>(
    g: &mut Graph<'_, F>,
    q: Var,
    k: Var,
    v: Var,
    rel: Option<Var>,
    heads: usize,
    causal: bool,
) -> Var {
    let d = g.shape(q).1;
    let dh = d / heads;
    let scale = F::of(1.0 / libm::sqrt(dh as f64));
    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice_cols(q, h * dh, dh);
        let kh = g.slice_cols(k, h * dh, dh);
        let vh = g.slice_cols(v, h * dh, dh);
        let mut logits = g.matmul_bt(qh, kh);
        if let Some(e) = rel {
            let eh = g.slice_cols(e, h * dh, dh);
            let s = g.matmul_bt(qh, eh);
            let s = g.skew(s);
            logits = g.add(logits, s);
        }
        let logits = g.scale(logits, scale);
        let weights = g.softmax(logits, causal);
        outs.push(g.matmul(weights, vh));
    }
    if outs.len() == 1 {
        outs[0]
    } else {
        g.concat_cols(&outs)
    }
}

/// Causal relative attention on plain tensors: `q`, `k`, `v` are `L x d`,
/// `rel` is `(window + 1) x d`.
pub fn relative_global_attention<F: Scalar>(
    q: &Tensor<F>,
    k: &Tensor<F>,
    v: &Tensor<F>,
    rel: &Tensor<F>,
    heads: usize,
) -> Result<Tensor<F>, NnError> {
    let (len, d) = q.shape();
    if k.shape() != (len, d) || v.shape() != (len, d) {
        return Err(NnError::Shape(String::from("q, k and v must share one L x d shape")));
    }
    if heads == 0 || d % heads != 0 {
        return Err(NnError::Shape(alloc::format!("width {d} is not divisible into {heads} heads")));
    }
    if rel.cols != d || rel.rows == 0 {
        return Err(NnError::Shape(alloc::format!("relative table must be (window + 1) x {d}")));
    }
    if len == 0 {
        return Ok(Tensor::zeros(0, d));
    }
    let store = ParamStore::default();
    let mut g = Graph::new(&store);
    let (qv, kv, vv, table) = (g.input(q.clone()), g.input(k.clone()), g.input(v.clone()), g.input(rel.clone()));
    let e = g.gather_rows(table, &relative_rows(len, rel.rows - 1));
    let out = multi_head(&mut g, qv, kv, vv, Some(e), heads, true);
    Ok(g.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::check_gradients;
    use rand::SeedableRng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
        Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    /// Relative attention straight from its definition: for each head,
    /// logits `(q_i·k_j + q_i·e_{min(i-j, w)}) / sqrt(d_h)` over `j <= i`.
    fn naive(q: &Tensor<f64>, k: &Tensor<f64>, v: &Tensor<f64>, rel: &Tensor<f64>, heads: usize) -> Tensor<f64> {
        let (len, d) = q.shape();
        let dh = d / heads;
        let w = rel.rows - 1;
        let mut out = Tensor::zeros(len, d);
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            for i in 0..len {
                let mut logits = Vec::new();
                for j in 0..=i {
                    let mut s = 0.0;
                    for c in cols.clone() {
                        s += q.get(i, c) * (k.get(j, c) + rel.get((i - j).min(w), c));
                    }
                    logits.push(s / libm::sqrt(dh as f64));
                }
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| libm::exp(l - max)).sum();
                for (j, l) in logits.iter().enumerate() {
                    let a = libm::exp(l - max) / z;
                    for c in cols.clone() {
                        out.data[i * d + c] += a * v.get(j, c);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn skewed_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for len in [1usize, 2, 4, 7, 16] {
            for window in [0usize, 1, len / 2, len] {
                let (q, k, v) = (random(&mut rng, len, 8), random(&mut rng, len, 8), random(&mut rng, len, 8));
                let rel = random(&mut rng, window + 1, 8);
                let fast = relative_global_attention(&q, &k, &v, &rel, 2).unwrap();
                let slow = naive(&q, &k, &v, &rel, 2);
                for (a, b) in fast.data.iter().zip(&slow.data) {
                    assert!((a - b).abs() <= 1e-12, "L={len} w={window}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn single_position_returns_value_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (q, k, v) = (random(&mut rng, 1, 4), random(&mut rng, 1, 4), random(&mut rng, 1, 4));
        let out = relative_global_attention(&q, &k, &v, &random(&mut rng, 3, 4), 1).unwrap();
        for (a, b) in out.data.iter().zip(&v.data) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let t = Tensor::<f64>::zeros(3, 4);
        assert!(relative_global_attention(&t, &Tensor::zeros(2, 4), &t, &Tensor::zeros(2, 4), 1).is_err());
        assert!(relative_global_attention(&t, &t, &t, &Tensor::zeros(2, 4), 3).is_err());
        assert!(relative_global_attention(&t, &t, &t, &Tensor::zeros(2, 5), 2).is_err());
    }

    #[test]
    fn lstm_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = ParamStore::<f64>::default();
        let lstm = Lstm::new(&mut s, "l", 3, 4, &mut rng);
        let x = s.add_uniform("x", 5, 3, 1.0, &mut rng);
        for reverse in [false, true] {
            let r = check_gradients(&s, |g| {
                let xv = g.param(x);
                let h = lstm.forward(g, xv, reverse);
                let w = g.input(Tensor::from_vec(5, 4, (0..20).map(|i| 0.1 * i as f64 - 0.7).collect()));
                let m = g.mul(h, w);
                g.sum_all(m)
            });
            assert!(r.max_rel_error <= 1e-3, "{r:?}");
        }
    }

    #[test]
    fn attention_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = ParamStore::<f64>::default();
        let attn = Attention::new(&mut s, "a", 4, 4, 2, Some(2), &mut rng);
        let cross = Attention::new(&mut s, "c", 4, 6, 2, None, &mut rng);
        let x = s.add_uniform("x", 5, 4, 1.0, &mut rng);
        let mem = s.add_uniform("m", 3, 6, 1.0, &mut rng);
        let r = check_gradients(&s, |g| {
            let xv = g.param(x);
            let y = attn.forward(g, xv, None);
            let m = g.param(mem);
            let y = cross.forward(g, y, Some(m));
            let w = g.input(Tensor::from_vec(5, 4, (0..20).map(|i| 0.05 * i as f64 - 0.4).collect()));
            let p = g.mul(y, w);
            g.sum_all(p)
        });
        assert!(r.max_rel_error <= 1e-3, "{r:?}");
    }

    #[test]
    fn zero_relative_table_is_plain_attention() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (q, k, v) = (random(&mut rng, 6, 4), random(&mut rng, 6, 4), random(&mut rng, 6, 4));
        let with = relative_global_attention(&q, &k, &v, &Tensor::zeros(4, 4), 2).unwrap();
        let store = ParamStore::default();
        let mut g = Graph::new(&store);
        let (qv, kv, vv) = (g.input(q), g.input(k), g.input(v));
        let plain = multi_head(&mut g, qv, kv, vv, None, 2, true);
        for (a, b) in with.data.iter().zip(&g.value(plain).data) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
