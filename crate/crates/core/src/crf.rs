//! Linear-chain CRF: emission head, log-partition, negative log-likelihood
//! with analytic gradients, and constrained Viterbi decoding.
//!
//! A path `y` over `T` positions scores
//! `start[y_0] + sum_t em[t, y_t] + sum_t trans[y_t, y_{t+1}] + end[y_{T-1}]`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::param_tree;
use crate::params::xavier;
use crate::scheme::Constraints;

#[derive(Clone, Debug, PartialEq)]
pub struct Transitions {
    /// `trans[[i, j]]` scores label `i` followed by label `j`.
    pub trans: Array2<f64>,
    pub start: Array1<f64>,
    pub end: Array1<f64>,
}
param_tree!(Transitions { trans, start, end });

impl Transitions {
    pub fn zeros(labels: usize) -> Self {
        Transitions {
            trans: Array2::zeros((labels, labels)),
            start: Array1::zeros(labels),
            end: Array1::zeros(labels),
        }
    }

    pub fn num_labels(&self) -> usize {
        self.start.len()
    }
}

fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_shapes(em: &ArrayView2<f64>, tr: &Transitions, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::EmptySequence);
    }
    if len > em.nrows() {
        return Err(Error::SpanMismatch {
            expected: len,
            found: em.nrows(),
        });
    }
    if em.ncols() != tr.num_labels() {
        return Err(Error::LabelOutOfRange {
            index: em.ncols(),
            size: tr.num_labels(),
        });
    }
    Ok(())
}

/// Unnormalized score of one label path over the first `labels.len()` rows.
pub fn path_score(em: ArrayView2<f64>, tr: &Transitions, labels: &[usize]) -> Result<f64> {
    check_shapes(&em, tr, labels.len())?;
    let size = tr.num_labels();
    if let Some(&bad) = labels.iter().find(|&&l| l >= size) {
        return Err(Error::LabelOutOfRange { index: bad, size });
    }
    let mut s = tr.start[labels[0]] + tr.end[labels[labels.len() - 1]];
    for (t, &y) in labels.iter().enumerate() {
        s += em[[t, y]];
        if t > 0 {
            s += tr.trans[[labels[t - 1], y]];
        }
    }
    Ok(s)
}

/// Forward log-space recursion; `alpha[t, j]` covers paths ending in `j` at `t`.
fn forward_alpha(em: &ArrayView2<f64>, tr: &Transitions, len: usize) -> Array2<f64> {
    let l = tr.num_labels();
    let mut alpha = Array2::zeros((len, l));
    for j in 0..l {
        alpha[[0, j]] = tr.start[j] + em[[0, j]];
    }
    for t in 1..len {
        for j in 0..l {
            let prev = (0..l).map(|i| alpha[[t - 1, i]] + tr.trans[[i, j]]);
            alpha[[t, j]] = logsumexp(prev) + em[[t, j]];
        }
    }
    alpha
}

fn backward_beta(em: &ArrayView2<f64>, tr: &Transitions, len: usize) -> Array2<f64> {
    let l = tr.num_labels();
    let mut beta = Array2::zeros((len, l));
    for i in 0..l {
        beta[[len - 1, i]] = tr.end[i];
    }
    for t in (0..len - 1).rev() {
        for i in 0..l {
            let next = (0..l).map(|j| tr.trans[[i, j]] + em[[t + 1, j]] + beta[[t + 1, j]]);
            beta[[t, i]] = logsumexp(next);
        }
    }
    beta
}

/// `log Z`: log-sum-exp of all path scores over the first `len` positions.
pub fn log_partition(em: ArrayView2<f64>, tr: &Transitions, len: usize) -> Result<f64> {
    check_shapes(&em, tr, len)?;
    let alpha = forward_alpha(&em, tr, len);
    Ok(logsumexp(
        (0..tr.num_labels()).map(|j| alpha[[len - 1, j]] + tr.end[j]),
    ))
}

/// `-log P(gold | em)`.
pub fn nll_loss(em: ArrayView2<f64>, tr: &Transitions, gold: &[usize]) -> Result<f64> {
    let gold_score = path_score(em, tr, gold)?;
    Ok(log_partition(em, tr, gold.len())? - gold_score)
}

/// NLL plus its gradient with respect to emissions (`len x L`, zero-padded
/// to `em`'s row count) and transitions: marginals minus gold counts.
pub fn nll_with_grad(
    em: ArrayView2<f64>,
    tr: &Transitions,
    gold: &[usize],
) -> Result<(f64, Array2<f64>, Transitions)> {
    let len = gold.len();
    let gold_score = path_score(em, tr, gold)?;
    let l = tr.num_labels();
    let alpha = forward_alpha(&em, tr, len);
    let beta = backward_beta(&em, tr, len);
    let log_z = logsumexp((0..l).map(|j| alpha[[len - 1, j]] + tr.end[j]));

    let mut d_em = Array2::zeros(em.raw_dim());
    let mut d_tr = Transitions::zeros(l);
    for t in 0..len {
        for j in 0..l {
            d_em[[t, j]] = (alpha[[t, j]] + beta[[t, j]] - log_z).exp();
        }
    }
    for j in 0..l {
        d_tr.start[j] = d_em[[0, j]];
        d_tr.end[j] = d_em[[len - 1, j]];
    }
    for t in 0..len.saturating_sub(1) {
        for i in 0..l {
            for j in 0..l {
                d_tr.trans[[i, j]] += (alpha[[t, i]] + tr.trans[[i, j]] + em[[t + 1, j]]
                    + beta[[t + 1, j]]
                    - log_z)
                    .exp();
            }
        }
    }
    for (t, &y) in gold.iter().enumerate() {
        d_em[[t, y]] -= 1.0;
        if t > 0 {
            d_tr.trans[[gold[t - 1], y]] -= 1.0;
        }
    }
    d_tr.start[gold[0]] -= 1.0;
    d_tr.end[gold[len - 1]] -= 1.0;
    Ok((log_z - gold_score, d_em, d_tr))
}

/// Highest-scoring path over all rows of `em` (plus `bias`, if given) that
/// respects `constraints`. Ties go to the lowest label index.
pub fn viterbi(
    em: ArrayView2<f64>,
    tr: &Transitions,
    constraints: Option<&Constraints>,
    bias: Option<ArrayView2<f64>>,
) -> Result<(Vec<usize>, f64)> {
    let len = em.nrows();
    check_shapes(&em, tr, len)?;
    let l = tr.num_labels();
    let scores = match bias {
        Some(b) => {
            if b.dim() != em.dim() {
                return Err(Error::SpanMismatch {
                    expected: em.nrows(),
                    found: b.nrows(),
                });
            }
            &em + &b
        }
        None => em.to_owned(),
    };
    let neg = f64::NEG_INFINITY;
    let allowed_start = |j: usize| constraints.is_none_or(|c| c.start[j]);
    let allowed_end = |j: usize| constraints.is_none_or(|c| c.end[j]);
    let allowed = |i: usize, j: usize| constraints.is_none_or(|c| c.transition[i][j]);

    let mut delta = Array2::from_elem((len, l), neg);
    let mut back = Array2::<usize>::zeros((len, l));
    for j in 0..l {
        if allowed_start(j) {
            delta[[0, j]] = tr.start[j] + scores[[0, j]];
        }
    }
    for t in 1..len {
        for j in 0..l {
            let mut best = neg;
            let mut arg = 0;
            for i in 0..l {
                if !allowed(i, j) || delta[[t - 1, i]] == neg {
                    continue;
                }
                let s = delta[[t - 1, i]] + tr.trans[[i, j]];
                if s > best {
                    best = s;
                    arg = i;
                }
            }
            back[[t, j]] = arg;
            if best > neg {
                delta[[t, j]] = best + scores[[t, j]];
            }
        }
    }
    let mut best = neg;
    let mut last = 0;
    for j in 0..l {
        if !allowed_end(j) || delta[[len - 1, j]] == neg {
            continue;
        }
        let s = delta[[len - 1, j]] + tr.end[j];
        if s > best {
            best = s;
            last = j;
        }
    }
    if best == neg {
        return Err(Error::NoLegalPath);
    }
    let mut path = vec![0; len];
    path[len - 1] = last;
    for t in (1..len).rev() {
        path[t - 1] = back[[t, path[t]]];
    }
    Ok((path, best))
}

/// Label scorer on top of encoder features: `tanh(h W1 + b1) W2 + b2`, plus
/// the transition parameters of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct CrfHead {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub transitions: Transitions,
}
param_tree!(CrfHead { w1, b1, w2, b2, transitions });

#[derive(Clone, Debug)]
pub struct HeadCache {
    input: Array2<f64>,
    hidden: Array2<f64>,
}

impl CrfHead {
    pub fn init<R: Rng>(rng: &mut R, dim: usize, labels: usize) -> Self {
        CrfHead {
            w1: xavier(rng, dim, dim),
            b1: Array1::zeros(dim),
            w2: xavier(rng, dim, labels),
            b2: Array1::zeros(labels),
            transitions: Transitions::zeros(labels),
        }
    }

    pub fn num_labels(&self) -> usize {
        self.b2.len()
    }

    pub fn emissions(&self, feats: ArrayView2<f64>) -> Array2<f64> {
        self.emissions_cached(feats).0
    }

    pub fn emissions_cached(&self, feats: ArrayView2<f64>) -> (Array2<f64>, HeadCache) {
        let hidden = (feats.dot(&self.w1) + &self.b1).mapv(f64::tanh);
        let em = hidden.dot(&self.w2) + &self.b2;
        (
            em,
            HeadCache {
                input: feats.to_owned(),
                hidden,
            },
        )
    }

    /// Accumulates parameter gradients for `d_em`; returns d(features).
    pub fn backward(&self, cache: &HeadCache, d_em: ArrayView2<f64>, grad: &mut CrfHead) -> Array2<f64> {
        grad.w2 += &cache.hidden.t().dot(&d_em);
        grad.b2 += &d_em.sum_axis(Axis(0));
        let mut d_hidden = d_em.dot(&self.w2.t());
        d_hidden.zip_mut_with(&cache.hidden, |d, &h| *d *= 1.0 - h * h);
        grad.w1 += &cache.input.t().dot(&d_hidden);
        grad.b1 += &d_hidden.sum_axis(Axis(0));
        d_hidden.dot(&self.w1.t())
    }
}
