//! Compact transformer encoder with a corpus-tag slot at position 0.
//!
//! Layers are pre-norm (`x + Attn(LN(x))`, `x + FFN(LN(x))`) followed by a
//! final layer norm. Positions are learned absolute embeddings counted from
//! the tag slot. The backward pass is written by hand against the cached
//! forward activations.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param_tree;
use crate::params::{normal_init, xavier};

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub vocab_size: usize,
}

impl EncoderConfig {
    /// Desk-scale defaults; 8 layers is the "large" model, 4 the "base".
    pub fn desk(vocab_size: usize, num_layers: usize) -> Self {
        EncoderConfig {
            num_layers,
            hidden_dim: 128,
            num_heads: 4,
            ffn_dim: 256,
            max_len: 256,
            vocab_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::BadLayerCount {
                requested: 0,
                available: 0,
            });
        }
        if self.num_heads == 0 || !self.hidden_dim.is_multiple_of(self.num_heads) {
            return Err(Error::Config(format!(
                "hidden_dim {} not divisible by num_heads {}",
                self.hidden_dim, self.num_heads
            )));
        }
        if self.max_len < 2 || self.vocab_size < 3 || self.ffn_dim == 0 {
            return Err(Error::Config("degenerate encoder dimensions".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
}
param_tree!(LayerNorm { gain, bias });

impl LayerNorm {
    fn new(d: usize) -> Self {
        LayerNorm {
            gain: Array1::ones(d),
            bias: Array1::zeros(d),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LnCache) {
        let d = x.ncols() as f64;
        let mut xhat = x.clone();
        let mut inv_std = Array1::zeros(x.nrows());
        for (mut row, is) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
            let mean = row.sum() / d;
            row -= mean;
            let var = row.iter().map(|v| v * v).sum::<f64>() / d;
            *is = 1.0 / (var + LN_EPS).sqrt();
            row *= *is;
        }
        let y = &xhat * &self.gain + &self.bias;
        (y, LnCache { xhat, inv_std })
    }

    fn backward(&self, cache: &LnCache, dy: &Array2<f64>, grad: &mut LayerNorm) -> Array2<f64> {
        grad.gain += &(dy * &cache.xhat).sum_axis(Axis(0));
        grad.bias += &dy.sum_axis(Axis(0));
        let d = dy.ncols() as f64;
        let dxhat = dy * &self.gain;
        let mut dx = Array2::zeros(dy.raw_dim());
        for r in 0..dy.nrows() {
            let dxh = dxhat.row(r);
            let xh = cache.xhat.row(r);
            let mean_d = dxh.sum() / d;
            let mean_dx = dxh.dot(&xh) / d;
            let is = cache.inv_std[r];
            let mut out = dx.row_mut(r);
            for k in 0..dxh.len() {
                out[k] = is * (dxh[k] - mean_d - xh[k] * mean_dx);
            }
        }
        dx
    }
}

#[derive(Clone, Debug)]
struct LnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub ln_attn: LayerNorm,
    pub wq: Array2<f64>,
    pub bq: Array1<f64>,
    pub wk: Array2<f64>,
    pub bk: Array1<f64>,
    pub wv: Array2<f64>,
    pub bv: Array1<f64>,
    pub wo: Array2<f64>,
    pub bo: Array1<f64>,
    pub ln_ffn: LayerNorm,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}
param_tree!(LayerParams { ln_attn, wq, bq, wk, bk, wv, bv, wo, bo, ln_ffn, w1, b1, w2, b2 });

impl LayerParams {
    pub fn init<R: Rng>(rng: &mut R, d: usize, ffn: usize) -> Self {
        LayerParams {
            ln_attn: LayerNorm::new(d),
            wq: xavier(rng, d, d),
            bq: Array1::zeros(d),
            wk: xavier(rng, d, d),
            bk: Array1::zeros(d),
            wv: xavier(rng, d, d),
            bv: Array1::zeros(d),
            wo: xavier(rng, d, d),
            bo: Array1::zeros(d),
            ln_ffn: LayerNorm::new(d),
            w1: xavier(rng, d, ffn),
            b1: Array1::zeros(ffn),
            w2: xavier(rng, ffn, d),
            b2: Array1::zeros(d),
        }
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    ln_attn: LnCache,
    u: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    ln_ffn: LnCache,
    u2: Array2<f64>,
    f1: Array2<f64>,
    g: Array2<f64>,
}

/// Activations retained by a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct EncoderCache {
    ids: Vec<usize>,
    mask: Vec<bool>,
    layers: Vec<LayerCache>,
    final_ln: LnCache,
}

impl EncoderCache {
    /// Attention weights of one layer and head, `(T+1) x (T+1)`.
    pub fn attention(&self, layer: usize, head: usize) -> &Array2<f64> {
        &self.layers[layer].attn[head]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    /// Character rows plus PAD, UNK and one row per corpus tag.
    pub embedding: Array2<f64>,
    pub position: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub final_ln: LayerNorm,
}
param_tree!(EncoderParams { embedding, position, layers, final_ln });

fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let t = (C * (x + 0.044715 * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Softmax over each row, skipping masked columns (weight exactly 0).
fn masked_softmax(scores: &mut Array2<f64>, key_mask: &[bool]) {
    for mut row in scores.rows_mut() {
        let max = row
            .iter()
            .zip(key_mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (v, &m) in row.iter_mut().zip(key_mask) {
            *v = if m { (*v - max).exp() } else { 0.0 };
            sum += *v;
        }
        row /= sum;
    }
}

fn layer_forward(
    p: &LayerParams,
    h: &Array2<f64>,
    key_mask: &[bool],
    heads: usize,
) -> (Array2<f64>, LayerCache) {
    let d = h.ncols();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let (u, ln_attn) = p.ln_attn.forward(h);
    let q = u.dot(&p.wq) + &p.bq;
    let k = u.dot(&p.wk) + &p.bk;
    let v = u.dot(&p.wv) + &p.bv;
    let mut ctx = Array2::zeros(h.raw_dim());
    let mut attn = Vec::with_capacity(heads);
    for hd in 0..heads {
        let cols = s![.., hd * dh..(hd + 1) * dh];
        let mut a = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        masked_softmax(&mut a, key_mask);
        ctx.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
        attn.push(a);
    }
    let mid = h + &(ctx.dot(&p.wo) + &p.bo);
    let (u2, ln_ffn) = p.ln_ffn.forward(&mid);
    let f1 = u2.dot(&p.w1) + &p.b1;
    let g = f1.mapv(gelu);
    let out = &mid + &(g.dot(&p.w2) + &p.b2);
    let cache = LayerCache {
        ln_attn,
        u,
        q,
        k,
        v,
        attn,
        ctx,
        ln_ffn,
        u2,
        f1,
        g,
    };
    (out, cache)
}

/// Backpropagates through one layer; accumulates into `grad`, returns d(input).
fn layer_backward(
    p: &LayerParams,
    c: &LayerCache,
    d_out: &Array2<f64>,
    heads: usize,
    grad: &mut LayerParams,
) -> Array2<f64> {
    let d = d_out.ncols();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    // feed-forward branch
    grad.w2 += &c.g.t().dot(d_out);
    grad.b2 += &d_out.sum_axis(Axis(0));
    let mut d_f1 = d_out.dot(&p.w2.t());
    d_f1.zip_mut_with(&c.f1, |dg, &x| *dg *= gelu_grad(x));
    grad.w1 += &c.u2.t().dot(&d_f1);
    grad.b1 += &d_f1.sum_axis(Axis(0));
    let d_u2 = d_f1.dot(&p.w1.t());
    let d_mid = d_out + &p.ln_ffn.backward(&c.ln_ffn, &d_u2, &mut grad.ln_ffn);

    // attention branch
    grad.wo += &c.ctx.t().dot(&d_mid);
    grad.bo += &d_mid.sum_axis(Axis(0));
    let d_ctx = d_mid.dot(&p.wo.t());
    let mut dq = Array2::zeros(d_out.raw_dim());
    let mut dk = Array2::zeros(d_out.raw_dim());
    let mut dv = Array2::zeros(d_out.raw_dim());
    for hd in 0..heads {
        let cols = s![.., hd * dh..(hd + 1) * dh];
        let a = &c.attn[hd];
        let dc = d_ctx.slice(cols);
        let da = dc.dot(&c.v.slice(cols).t());
        dv.slice_mut(cols).assign(&a.t().dot(&dc));
        let mut ds = a * &da;
        for (mut row, arow) in ds.rows_mut().into_iter().zip(a.rows()) {
            let dot: f64 = row.sum();
            row.zip_mut_with(&arow, |x, &av| *x -= av * dot);
        }
        ds *= scale;
        dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
        dk.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
    }
    grad.wq += &c.u.t().dot(&dq);
    grad.bq += &dq.sum_axis(Axis(0));
    grad.wk += &c.u.t().dot(&dk);
    grad.bk += &dk.sum_axis(Axis(0));
    grad.wv += &c.u.t().dot(&dv);
    grad.bv += &dv.sum_axis(Axis(0));
    let du = dq.dot(&p.wq.t()) + dk.dot(&p.wk.t()) + dv.dot(&p.wv.t());
    d_mid + p.ln_attn.backward(&c.ln_attn, &du, &mut grad.ln_attn)
}

impl EncoderParams {
    pub fn init<R: Rng>(config: EncoderConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = config.hidden_dim;
        let embedding = normal_init(rng, config.vocab_size, d, 0.1);
        let position = normal_init(rng, config.max_len, d, 0.1);
        let layers = (0..config.num_layers)
            .map(|_| LayerParams::init(rng, d, config.ffn_dim))
            .collect();
        Ok(EncoderParams {
            config,
            embedding,
            position,
            layers,
            final_ln: LayerNorm::new(d),
        })
    }

    pub fn dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// Encoder keeping only the first `k` layers.
    pub fn prune_layers(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.layers.len() {
            return Err(Error::BadLayerCount {
                requested: k,
                available: self.layers.len(),
            });
        }
        let mut out = self.clone();
        out.layers.truncate(k);
        out.config.num_layers = k;
        Ok(out)
    }

    /// Features for `[tag] + chars`, `(T+1) x d`. `mask` marks real characters.
    pub fn forward(&self, tag_id: usize, char_ids: &[usize], mask: &[bool]) -> Result<Array2<f64>> {
        let layers: Vec<&LayerParams> = self.layers.iter().collect();
        self.forward_with(&layers, tag_id, char_ids, mask).map(|(h, _)| h)
    }

    pub fn forward_cached(
        &self,
        tag_id: usize,
        char_ids: &[usize],
        mask: &[bool],
    ) -> Result<(Array2<f64>, EncoderCache)> {
        let layers: Vec<&LayerParams> = self.layers.iter().collect();
        self.forward_with(&layers, tag_id, char_ids, mask)
    }

    /// Forward through this encoder's embeddings and final norm, but an
    /// arbitrary stack of layers.
    pub fn forward_with(
        &self,
        layers: &[&LayerParams],
        tag_id: usize,
        char_ids: &[usize],
        mask: &[bool],
    ) -> Result<(Array2<f64>, EncoderCache)> {
        let n = char_ids.len() + 1;
        if n > self.config.max_len {
            return Err(Error::LengthExceeded {
                len: n,
                max: self.config.max_len,
            });
        }
        if mask.len() != char_ids.len() {
            return Err(Error::SpanMismatch {
                expected: char_ids.len(),
                found: mask.len(),
            });
        }
        let vocab = self.embedding.nrows();
        let mut ids = Vec::with_capacity(n);
        ids.push(tag_id);
        ids.extend_from_slice(char_ids);
        if let Some(&bad) = ids.iter().find(|&&i| i >= vocab) {
            return Err(Error::LabelOutOfRange { index: bad, size: vocab });
        }
        let mut key_mask = Vec::with_capacity(n);
        key_mask.push(true);
        key_mask.extend_from_slice(mask);

        let d = self.dim();
        let mut h = Array2::zeros((n, d));
        for (r, &id) in ids.iter().enumerate() {
            let mut row = h.row_mut(r);
            row.assign(&self.embedding.row(id));
            row += &self.position.row(r);
        }
        let mut caches = Vec::with_capacity(layers.len());
        for lp in layers {
            let (next, c) = layer_forward(lp, &h, &key_mask, self.config.num_heads);
            caches.push(c);
            h = next;
        }
        let (out, final_ln) = self.final_ln.forward(&h);
        Ok((
            out,
            EncoderCache {
                ids,
                mask: key_mask,
                layers: caches,
                final_ln,
            },
        ))
    }

    /// Parameter gradients for upstream gradient `d_out` (same shape as the
    /// forward output). Rows at masked positions are ignored.
    pub fn backward(&self, cache: &EncoderCache, d_out: ArrayView2<f64>) -> EncoderParams {
        let layers: Vec<&LayerParams> = self.layers.iter().collect();
        let (mut grad, layer_grads) = self.backward_with(&layers, cache, d_out);
        grad.layers = layer_grads;
        grad
    }

    /// Like [`backward`](Self::backward) for a custom layer stack; layer
    /// gradients are returned separately, in stack order, and the returned
    /// encoder gradient has an empty layer list.
    pub fn backward_with(
        &self,
        layers: &[&LayerParams],
        cache: &EncoderCache,
        d_out: ArrayView2<f64>,
    ) -> (EncoderParams, Vec<LayerParams>) {
        let mut grad = EncoderParams {
            config: self.config.clone(),
            embedding: Array2::zeros(self.embedding.raw_dim()),
            position: Array2::zeros(self.position.raw_dim()),
            layers: Vec::new(),
            final_ln: LayerNorm {
                gain: Array1::zeros(self.dim()),
                bias: Array1::zeros(self.dim()),
            },
        };
        let mut d = d_out.to_owned();
        for (mut row, &m) in d.rows_mut().into_iter().zip(&cache.mask) {
            if !m {
                row.fill(0.0);
            }
        }
        let mut d = self.final_ln.backward(&cache.final_ln, &d, &mut grad.final_ln);
        let mut layer_grads: Vec<LayerParams> = layers
            .iter()
            .map(|lp| {
                let mut g = (*lp).clone();
                for e in crate::params::Params::entries_mut(&mut g) {
                    e.data.fill(0.0);
                }
                g
            })
            .collect();
        for (i, lp) in layers.iter().enumerate().rev() {
            d = layer_backward(lp, &cache.layers[i], &d, self.config.num_heads, &mut layer_grads[i]);
        }
        for (r, &id) in cache.ids.iter().enumerate() {
            let row = d.row(r);
            let mut e = grad.embedding.row_mut(id);
            e += &row;
            let mut p = grad.position.row_mut(r);
            p += &row;
        }
        (grad, layer_grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(layers: usize) -> EncoderParams {
        let cfg = EncoderConfig {
            num_layers: layers,
            hidden_dim: 8,
            num_heads: 2,
            ffn_dim: 12,
            max_len: 10,
            vocab_size: 12,
        };
        EncoderParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap()
    }

    #[test]
    fn empty_sentence_yields_tag_row() {
        let e = small(2);
        let h = e.forward(2, &[], &[]).unwrap();
        assert_eq!(h.dim(), (1, 8));
    }

    #[test]
    fn attention_rows_are_distributions() {
        let e = small(2);
        let (_, c) = e.forward_cached(2, &[5, 6, 0], &[true, true, false]).unwrap();
        for l in 0..2 {
            for hd in 0..2 {
                let a = c.attention(l, hd);
                for row in a.rows() {
                    assert!((row.sum() - 1.0).abs() < 1e-12);
                    assert_eq!(row[3], 0.0);
                }
            }
        }
    }

    #[test]
    fn length_limit() {
        let e = small(1);
        let ids = vec![5; 10];
        assert!(matches!(
            e.forward(2, &ids, &[true; 10]),
            Err(Error::LengthExceeded { len: 11, max: 10 })
        ));
        assert!(e.forward(2, &ids[..9], &[true; 9]).is_ok());
    }

    #[test]
    fn prune_identity_and_errors() {
        let e = small(3);
        assert_eq!(e.prune_layers(3).unwrap(), e);
        assert!(matches!(e.prune_layers(0), Err(Error::BadLayerCount { .. })));
        assert!(matches!(e.prune_layers(4), Err(Error::BadLayerCount { .. })));
        let p = e.prune_layers(1).unwrap();
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0], e.layers[0]);
    }

    #[test]
    fn tag_changes_character_rows() {
        let e = small(2);
        let a = e.forward(2, &[5, 6, 7], &[true; 3]).unwrap();
        let b = e.forward(3, &[5, 6, 7], &[true; 3]).unwrap();
        let diff = (&a.slice(s![1.., ..]) - &b.slice(s![1.., ..]))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff > 0.0);
    }

    #[test]
    fn padding_does_not_change_real_rows() {
        let e = small(2);
        let a = e.forward(2, &[5, 6], &[true, true]).unwrap();
        let b = e.forward(2, &[5, 6, 0, 0], &[true, true, false, false]).unwrap();
        for r in 0..3 {
            for c in 0..8 {
                assert!((a[[r, c]] - b[[r, c]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let e = small(2);
        let (h, c) = e.forward_cached(2, &[5, 6], &[true, true]).unwrap();
        let g = e.backward(&c, Array2::zeros(h.raw_dim()).view());
        assert_eq!(g.sq_norm(), 0.0);
    }

    #[test]
    fn padding_embedding_gets_no_gradient() {
        let e = small(2);
        let (h, c) = e.forward_cached(2, &[5, 6, 0, 0], &[true, true, false, false]).unwrap();
        let g = e.backward(&c, Array2::ones(h.raw_dim()).view());
        assert!(g.embedding.row(0).iter().all(|&v| v == 0.0));
        assert!(g.embedding.row(5).iter().any(|&v| v != 0.0));
    }
}
