//! Reference computations shared by the integration suites. Each one is a
//! direct, exhaustive restatement of a definition, independent of the
//! library's dynamic programs.

#![allow(dead_code)]

use hanforge::crf::Transitions;
use hanforge::params::Params;
use hanforge::scheme::Constraints;
use ndarray::Array2;
use rand::Rng;

/// Every sequence in `0..labels` of length `len`.
pub fn all_paths(labels: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..labels).map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn brute_path_score(em: &Array2<f64>, tr: &Transitions, path: &[usize]) -> f64 {
    let mut s = tr.start[path[0]];
    for t in 0..path.len() {
        s += em[[t, path[t]]];
        if t + 1 < path.len() {
            s += tr.trans[[path[t], path[t + 1]]];
        }
    }
    s + tr.end[*path.last().unwrap()]
}

pub fn brute_log_partition(em: &Array2<f64>, tr: &Transitions, len: usize) -> f64 {
    let scores: Vec<f64> = all_paths(tr.start.len(), len)
        .iter()
        .map(|p| brute_path_score(em, tr, p))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

pub fn path_is_legal(c: &Constraints, path: &[usize]) -> bool {
    c.start[path[0]]
        && c.end[*path.last().unwrap()]
        && path.windows(2).all(|w| c.transition[w[0]][w[1]])
}

/// Best legal path by enumeration; ties resolved toward the lexicographically
/// smallest path.
pub fn brute_viterbi(em: &Array2<f64>, tr: &Transitions, c: Option<&Constraints>) -> Option<(Vec<usize>, f64)> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for p in all_paths(tr.start.len(), em.nrows()) {
        if c.is_some_and(|c| !path_is_legal(c, &p)) {
            continue;
        }
        let s = brute_path_score(em, tr, &p);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((p, s));
        }
    }
    best
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
}

pub fn random_transitions<R: Rng>(rng: &mut R, labels: usize) -> Transitions {
    let mut tr = Transitions::zeros(labels);
    tr.trans = random_matrix(rng, labels, labels, 1.0);
    tr.start.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    tr.end.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    tr
}

/// Every head vector for `n` tokens (heads in `0..=n`) forming a tree with
/// exactly one ROOT child, checked by walking to ROOT.
pub fn all_single_root_trees(n: usize) -> Vec<Vec<usize>> {
    all_paths(n + 1, n)
        .into_iter()
        .filter(|h| {
            if h.iter().filter(|&&x| x == 0).count() != 1 {
                return false;
            }
            (1..=n).all(|start| {
                let mut cur = start;
                for _ in 0..=n {
                    if cur == 0 {
                        return true;
                    }
                    let next = h[cur - 1];
                    if next == cur {
                        return false;
                    }
                    cur = next;
                }
                false
            })
        })
        .collect()
}

pub fn tree_score(arc: &Array2<f64>, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(i, &h)| arc[[i + 1, h]]).sum()
}

/// Outcome of a central-difference check on one tensor.
#[derive(Debug)]
pub struct GradCheck {
    pub name: String,
    /// `|a - fd| / max(|a|, |fd|)` in the L2 norm over the tensor.
    pub relative: f64,
    pub absolute: f64,
    pub scale: f64,
}

impl GradCheck {
    /// Relative error below `tol`; a tensor whose gradient vanishes
    /// (norm < 1e-6, e.g. attention key biases under softmax shift
    /// invariance) must instead agree to 1e-7 absolutely.
    pub fn passes(&self, tol: f64) -> bool {
        if self.scale < 1e-6 {
            self.absolute < 1e-7
        } else {
            self.relative < tol
        }
    }
}

/// Central-difference check of `analytic` against `loss` around `params`,
/// one entry per tensor.
pub fn finite_difference_errors<P: Params>(
    params: &P,
    analytic: &P,
    eps: f64,
    loss: impl Fn(&P) -> f64,
) -> Vec<GradCheck> {
    let names: Vec<(String, usize)> = params
        .entries()
        .into_iter()
        .map(|e| (e.name, e.data.len()))
        .collect();
    let grads: Vec<Vec<f64>> = analytic.entries().into_iter().map(|e| e.data.to_vec()).collect();
    let mut out = Vec::new();
    for (k, (name, len)) in names.iter().enumerate() {
        let mut fd = vec![0.0; *len];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut plus = params.clone();
            plus.entries_mut()[k].data[i] += eps;
            let mut minus = params.clone();
            minus.entries_mut()[k].data[i] -= eps;
            *slot = (loss(&plus) - loss(&minus)) / (2.0 * eps);
        }
        let a = &grads[k];
        let absolute: f64 = a.iter().zip(&fd).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nf: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = na.max(nf);
        out.push(GradCheck {
            name: name.clone(),
            relative: if scale > 0.0 { absolute / scale } else { 0.0 },
            absolute,
            scale,
        });
    }
    out
}

/// Span-F over two sets of (start, end, label) triples, counted exactly.
pub fn naive_span_f(gold: &[(usize, usize, String)], pred: &[(usize, usize, String)]) -> f64 {
    let hits = pred.iter().filter(|p| gold.contains(p)).count() as f64;
    if gold.is_empty() && pred.is_empty() {
        return 1.0;
    }
    if hits == 0.0 {
        return 0.0;
    }
    let p = hits / pred.len() as f64;
    let r = hits / gold.len() as f64;
    2.0 * p * r / (p + r)
}
