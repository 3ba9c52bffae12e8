//! Dependency parsing head.
//!
//! Character features from the encoder are averaged per token (tokens come
//! from the POS pass), a POS-label embedding is added to each token, and a
//! biaffine scorer rates every (dependent, head) pair. Trees are decoded as
//! maximum spanning arborescences with exactly one child of ROOT.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::param_tree;
use crate::params::{normal_init, xavier};
use crate::scheme::Segmentation;

/// Token sequence with one head (0 = ROOT) and relation per token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTree {
    pub tokens: Vec<String>,
    pub heads: Vec<usize>,
    pub rels: Vec<String>,
}

impl DepTree {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.heads.len() != self.tokens.len() || self.rels.len() != self.tokens.len() {
            return Err(Error::InvalidGoldTree("column lengths differ".into()));
        }
        validate_heads(&self.heads).map_err(Error::InvalidGoldTree)
    }
}

/// Checks single-root, in-range, acyclic. `heads[i]` is the head of token
/// `i + 1`.
pub fn validate_heads(heads: &[usize]) -> std::result::Result<(), String> {
    let n = heads.len();
    if n == 0 {
        return Err("empty tree".into());
    }
    if let Some(i) = heads.iter().position(|&h| h > n) {
        return Err(format!("head of token {} out of range", i + 1));
    }
    if let Some(i) = heads.iter().enumerate().position(|(i, &h)| h == i + 1) {
        return Err(format!("token {} heads itself", i + 1));
    }
    let roots = heads.iter().filter(|&&h| h == 0).count();
    if roots != 1 {
        return Err(format!("{roots} tokens attach to ROOT, expected 1"));
    }
    for start in 1..=n {
        let mut cur = start;
        let mut steps = 0;
        while cur != 0 {
            cur = heads[cur - 1];
            steps += 1;
            if steps > n {
                return Err(format!("cycle through token {start}"));
            }
        }
    }
    Ok(())
}

/// Mean of each token's character rows, with `root` prepended.
pub fn pool_tokens(char_feats: ArrayView2<f64>, seg: &Segmentation, root: ArrayView1<f64>) -> Result<Array2<f64>> {
    if seg.chars().len() != char_feats.nrows() {
        return Err(Error::SpanMismatch {
            expected: seg.chars().len(),
            found: char_feats.nrows(),
        });
    }
    let mut out = Array2::zeros((seg.len() + 1, char_feats.ncols()));
    out.row_mut(0).assign(&root);
    for (i, &(a, b)) in seg.spans().iter().enumerate() {
        let mean = char_feats.slice(s![a..b, ..]).mean_axis(Axis(0)).expect("non-empty span");
        out.row_mut(i + 1).assign(&mean);
    }
    Ok(out)
}

/// Adds `table[pos_ids[i]]` to token row `i + 1`; ROOT is left alone.
pub fn add_pos(tokens: &mut Array2<f64>, pos_ids: &[usize], table: ArrayView2<f64>) -> Result<()> {
    if pos_ids.len() + 1 != tokens.nrows() {
        return Err(Error::SpanMismatch {
            expected: tokens.nrows() - 1,
            found: pos_ids.len(),
        });
    }
    for (i, &p) in pos_ids.iter().enumerate() {
        if p >= table.nrows() {
            return Err(Error::UnknownPosLabel(format!("#{p}")));
        }
        let mut row = tokens.row_mut(i + 1);
        row += &table.row(p);
    }
    Ok(())
}

/// Sets entries that can never be arcs to `-inf`: ROOT as dependent (row 0)
/// and self-loops (diagonal).
pub fn mask_arcs(arc: &mut Array2<f64>) {
    let n = arc.nrows();
    arc.row_mut(0).fill(f64::NEG_INFINITY);
    for i in 0..n {
        arc[[i, i]] = f64::NEG_INFINITY;
    }
}

/// Chu-Liu/Edmonds on `score[h][d]` over nodes `0..n` rooted at 0.
/// Returns `head[d]` (entry 0 unused).
fn chu_liu_edmonds(score: &[Vec<f64>]) -> Vec<usize> {
    let n = score.len();
    let mut head = vec![0usize; n];
    for d in 1..n {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let mut found = false;
        for (h, row) in score.iter().enumerate() {
            if h == d {
                continue;
            }
            if !found || row[d] > best {
                best = row[d];
                arg = h;
                found = true;
            }
        }
        head[d] = arg;
    }
    let Some(cycle) = find_cycle(&head) else {
        return head;
    };

    let in_cycle: Vec<bool> = (0..n).map(|v| cycle.contains(&v)).collect();
    // new index for every non-cycle node; the contracted node goes last
    let mut remap = vec![usize::MAX; n];
    let mut back = Vec::new();
    for v in 0..n {
        if !in_cycle[v] {
            remap[v] = back.len();
            back.push(v);
        }
    }
    let c = back.len();
    let m = c + 1;
    let mut sub = vec![vec![f64::NEG_INFINITY; m]; m];
    let mut enter = vec![usize::MAX; m]; // for u outside: cycle node entered from u
    let mut leave = vec![usize::MAX; m]; // for v outside: cycle node heading v
    for &u in &back {
        for &v in &back {
            if u != v {
                sub[remap[u]][remap[v]] = score[u][v];
            }
        }
    }
    for &u in &back {
        let mut best = f64::NEG_INFINITY;
        let mut arg = cycle[0];
        let mut found = false;
        for &v in &cycle {
            let s = score[u][v] - score[head[v]][v];
            if !found || s > best {
                best = s;
                arg = v;
                found = true;
            }
        }
        sub[remap[u]][c] = best;
        enter[remap[u]] = arg;
    }
    for &v in &back {
        let mut best = f64::NEG_INFINITY;
        let mut arg = cycle[0];
        let mut found = false;
        for &u in &cycle {
            if !found || score[u][v] > best {
                best = score[u][v];
                arg = u;
                found = true;
            }
        }
        sub[c][remap[v]] = best;
        leave[remap[v]] = arg;
    }
    let sub_head = chu_liu_edmonds(&sub);
    let mut out = head.clone();
    for &v in &back {
        if v == 0 {
            continue;
        }
        let h = sub_head[remap[v]];
        out[v] = if h == c { leave[remap[v]] } else { back[h] };
    }
    let h = sub_head[c];
    out[enter[h]] = back[h];
    out
}

fn find_cycle(head: &[usize]) -> Option<Vec<usize>> {
    let n = head.len();
    let mut color = vec![0u8; n]; // 0 new, 1 on current walk, 2 done
    color[0] = 2;
    for start in 1..n {
        let mut v = start;
        let mut walk = Vec::new();
        while color[v] == 0 {
            color[v] = 1;
            walk.push(v);
            v = head[v];
        }
        if color[v] == 1 {
            let pos = walk.iter().position(|&w| w == v).expect("on walk");
            return Some(walk[pos..].to_vec());
        }
        for w in walk {
            color[w] = 2;
        }
    }
    None
}

fn tree_score(arc: &ArrayView2<f64>, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(i, &h)| arc[[i + 1, h]]).sum()
}

/// Best single-root tree for masked arc scores `arc[dep][head]`
/// (`(n+1) x (n+1)`). Returns the head of each token `1..=n`.
pub fn decode_heads(arc: ArrayView2<f64>) -> Vec<usize> {
    let n = arc.nrows() - 1;
    if n == 0 {
        return Vec::new();
    }
    let to_matrix = |root_child: Option<usize>| -> Vec<Vec<f64>> {
        (0..=n)
            .map(|h| {
                (0..=n)
                    .map(|d| {
                        let blocked = d == 0 || d == h || (h == 0 && root_child.is_some_and(|c| c != d));
                        if blocked {
                            f64::NEG_INFINITY
                        } else {
                            arc[[d, h]]
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let first = chu_liu_edmonds(&to_matrix(None));
    let heads = first[1..].to_vec();
    if heads.iter().filter(|&&h| h == 0).count() == 1 {
        return heads;
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for child in 1..=n {
        let h = chu_liu_edmonds(&to_matrix(Some(child)))[1..].to_vec();
        if validate_heads(&h).is_err() {
            continue;
        }
        let s = tree_score(&arc, &h);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, h));
        }
    }
    best.map(|(_, h)| h).unwrap_or(heads)
}

fn log_softmax_grad(scores: ArrayView1<f64>, gold: usize, grad: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|&s| (s - max).exp()).sum();
    let lse = max + sum.ln();
    for (g, &s) in grad.iter_mut().zip(scores) {
        *g = (s - lse).exp();
    }
    grad[gold] -= 1.0;
    lse - scores[gold]
}

/// Head cross-entropy over masked `arc` rows plus relation cross-entropy at
/// the gold heads. `labels[i]` are the relation scores of token `i + 1`
/// under its gold head. Returns the loss and the gradients w.r.t. both.
pub fn parse_loss(
    arc: ArrayView2<f64>,
    labels: ArrayView2<f64>,
    gold_heads: &[usize],
    gold_rels: &[usize],
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    validate_heads(gold_heads).map_err(Error::InvalidGoldTree)?;
    let n = gold_heads.len();
    if arc.dim() != (n + 1, n + 1) || labels.nrows() != n || gold_rels.len() != n {
        return Err(Error::InvalidGoldTree("score shapes do not match tree".into()));
    }
    if let Some(&r) = gold_rels.iter().find(|&&r| r >= labels.ncols()) {
        return Err(Error::InvalidGoldTree(format!("relation #{r} out of range")));
    }
    let mut loss = 0.0;
    let mut d_arc = Array2::zeros(arc.raw_dim());
    let mut d_lab = Array2::zeros(labels.raw_dim());
    for i in 0..n {
        let row = arc.row(i + 1);
        let mut g = vec![0.0; n + 1];
        loss += log_softmax_grad(row, gold_heads[i], &mut g);
        d_arc.row_mut(i + 1).assign(&Array1::from(g));
        let mut g = vec![0.0; labels.ncols()];
        loss += log_softmax_grad(labels.row(i), gold_rels[i], &mut g);
        d_lab.row_mut(i).assign(&Array1::from(g));
    }
    Ok((loss, d_arc, d_lab))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}
param_tree!(Mlp { w, b });

impl Mlp {
    fn init<R: Rng>(rng: &mut R, input: usize, output: usize) -> Self {
        Mlp {
            w: xavier(rng, input, output),
            b: Array1::zeros(output),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        (x.dot(&self.w) + &self.b).mapv(f64::tanh)
    }

    fn backward(&self, x: &Array2<f64>, y: &Array2<f64>, dy: &Array2<f64>, grad: &mut Mlp) -> Array2<f64> {
        let mut dpre = dy.clone();
        dpre.zip_mut_with(y, |d, &v| *d *= 1.0 - v * v);
        grad.w += &x.t().dot(&dpre);
        grad.b += &dpre.sum_axis(Axis(0));
        dpre.dot(&self.w.t())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiaffineParser {
    pub root: Array1<f64>,
    pub pos_embedding: Array2<f64>,
    pub arc_dep: Mlp,
    pub arc_head: Mlp,
    pub label_dep: Mlp,
    pub label_head: Mlp,
    /// `(p+1) x p`: `arc[i][j] = [dep_i, 1] . U . head_j`.
    pub arc_weight: Array2<f64>,
    /// Relation `r` occupies rows `r*(q+1) .. (r+1)*(q+1)`, each block `(q+1) x (q+1)`.
    pub label_weight: Array2<f64>,
}
param_tree!(BiaffineParser {
    root,
    pos_embedding,
    arc_dep,
    arc_head,
    label_dep,
    label_head,
    arc_weight,
    label_weight
});

/// Forward activations kept for backpropagation.
pub struct ParseCache {
    spans: Vec<(usize, usize)>,
    pos_ids: Vec<usize>,
    tokens: Array2<f64>,
    arc_dep: Array2<f64>,
    arc_head: Array2<f64>,
    label_dep: Array2<f64>,
    label_head: Array2<f64>,
}

fn with_ones(x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::ones((x.nrows(), x.ncols() + 1));
    out.slice_mut(s![.., ..x.ncols()]).assign(x);
    out
}

impl BiaffineParser {
    pub fn init<R: Rng>(
        rng: &mut R,
        dim: usize,
        num_pos: usize,
        num_rels: usize,
        arc_dim: usize,
        label_dim: usize,
    ) -> Self {
        BiaffineParser {
            root: normal_init(rng, 1, dim, 0.1).row(0).to_owned(),
            pos_embedding: normal_init(rng, num_pos.max(1), dim, 0.1),
            arc_dep: Mlp::init(rng, dim, arc_dim),
            arc_head: Mlp::init(rng, dim, arc_dim),
            label_dep: Mlp::init(rng, dim, label_dim),
            label_head: Mlp::init(rng, dim, label_dim),
            arc_weight: xavier(rng, arc_dim + 1, arc_dim),
            label_weight: xavier(rng, num_rels * (label_dim + 1), label_dim + 1),
        }
    }

    pub fn num_rels(&self) -> usize {
        self.label_weight.nrows() / self.label_weight.ncols()
    }

    fn label_block(&self, r: usize) -> ArrayView2<'_, f64> {
        let q1 = self.label_weight.ncols();
        self.label_weight.slice(s![r * q1..(r + 1) * q1, ..])
    }

    /// Pooled token features with POS embeddings added, `(n+1) x d`.
    pub fn token_features(&self, char_feats: ArrayView2<f64>, seg: &Segmentation, pos_ids: &[usize]) -> Result<Array2<f64>> {
        let mut x = pool_tokens(char_feats, seg, self.root.view())?;
        add_pos(&mut x, pos_ids, self.pos_embedding.view())?;
        Ok(x)
    }

    pub fn forward(&self, char_feats: ArrayView2<f64>, seg: &Segmentation, pos_ids: &[usize]) -> Result<ParseCache> {
        let tokens = self.token_features(char_feats, seg, pos_ids)?;
        Ok(ParseCache {
            spans: seg.spans().to_vec(),
            pos_ids: pos_ids.to_vec(),
            arc_dep: self.arc_dep.forward(&tokens),
            arc_head: self.arc_head.forward(&tokens),
            label_dep: self.label_dep.forward(&tokens),
            label_head: self.label_head.forward(&tokens),
            tokens,
        })
    }

    /// Masked `(n+1) x (n+1)` arc scores, `arc[dep][head]`.
    pub fn score_arcs(&self, cache: &ParseCache) -> Array2<f64> {
        let mut arc = with_ones(&cache.arc_dep).dot(&self.arc_weight).dot(&cache.arc_head.t());
        mask_arcs(&mut arc);
        arc
    }

    /// Relation scores `n x R` for each token under the given heads.
    pub fn score_labels(&self, cache: &ParseCache, heads: &[usize]) -> Array2<f64> {
        let dep = with_ones(&cache.label_dep);
        let head = with_ones(&cache.label_head);
        let r_count = self.num_rels();
        let mut out = Array2::zeros((heads.len(), r_count));
        for (i, &h) in heads.iter().enumerate() {
            let a = dep.row(i + 1);
            let b = head.row(h);
            for r in 0..r_count {
                out[[i, r]] = a.dot(&self.label_block(r).dot(&b));
            }
        }
        out
    }

    /// Heads and relation ids for one sentence.
    pub fn parse(&self, char_feats: ArrayView2<f64>, seg: &Segmentation, pos_ids: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        let cache = self.forward(char_feats, seg, pos_ids)?;
        let heads = decode_heads(self.score_arcs(&cache).view());
        let labels = self.score_labels(&cache, &heads);
        let rels = labels
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (r, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = r;
                    }
                }
                best
            })
            .collect();
        Ok((heads, rels))
    }

    /// Loss on a gold tree, parameter gradients, and d(char features).
    pub fn loss_and_grad(
        &self,
        char_feats: ArrayView2<f64>,
        seg: &Segmentation,
        pos_ids: &[usize],
        gold_heads: &[usize],
        gold_rels: &[usize],
    ) -> Result<(f64, BiaffineParser, Array2<f64>)> {
        if gold_heads.len() != seg.len() {
            return Err(Error::InvalidGoldTree(format!(
                "{} heads for {} tokens",
                gold_heads.len(),
                seg.len()
            )));
        }
        let cache = self.forward(char_feats, seg, pos_ids)?;
        let arc = self.score_arcs(&cache);
        let labels = self.score_labels(&cache, gold_heads);
        let (loss, d_arc, d_lab) = parse_loss(arc.view(), labels.view(), gold_heads, gold_rels)?;

        let mut grad = crate::params::Params::zeros_like(self);
        // arc = [AD,1] U AH^T
        let adx = with_ones(&cache.arc_dep);
        grad.arc_weight += &adx.t().dot(&d_arc).dot(&cache.arc_head);
        let p = cache.arc_dep.ncols();
        let d_adx = d_arc.dot(&cache.arc_head).dot(&self.arc_weight.t());
        let d_ad = d_adx.slice(s![.., ..p]).to_owned();
        let d_ah = d_arc.t().dot(&adx).dot(&self.arc_weight);

        let ldx = with_ones(&cache.label_dep);
        let lhx = with_ones(&cache.label_head);
        let q1 = ldx.ncols();
        let mut d_ldx = Array2::zeros(ldx.raw_dim());
        let mut d_lhx = Array2::zeros(lhx.raw_dim());
        for (i, &h) in gold_heads.iter().enumerate() {
            let a = ldx.row(i + 1);
            let b = lhx.row(h);
            for r in 0..self.num_rels() {
                let ds = d_lab[[i, r]];
                if ds == 0.0 {
                    continue;
                }
                let u = self.label_block(r);
                let mut gu = grad.label_weight.slice_mut(s![r * q1..(r + 1) * q1, ..]);
                for x in 0..q1 {
                    for y in 0..q1 {
                        gu[[x, y]] += ds * a[x] * b[y];
                    }
                }
                let ub = u.dot(&b);
                let uta = u.t().dot(&a);
                let mut da = d_ldx.row_mut(i + 1);
                da.scaled_add(ds, &ub);
                let mut db = d_lhx.row_mut(h);
                db.scaled_add(ds, &uta);
            }
        }
        let q = q1 - 1;
        let d_ld = d_ldx.slice(s![.., ..q]).to_owned();
        let d_lh = d_lhx.slice(s![.., ..q]).to_owned();

        let x = &cache.tokens;
        let mut d_x = self.arc_dep.backward(x, &cache.arc_dep, &d_ad, &mut grad.arc_dep);
        d_x += &self.arc_head.backward(x, &cache.arc_head, &d_ah, &mut grad.arc_head);
        d_x += &self.label_dep.backward(x, &cache.label_dep, &d_ld, &mut grad.label_dep);
        d_x += &self.label_head.backward(x, &cache.label_head, &d_lh, &mut grad.label_head);

        grad.root += &d_x.row(0);
        for (i, &p) in cache.pos_ids.iter().enumerate() {
            let mut row = grad.pos_embedding.row_mut(p);
            row += &d_x.row(i + 1);
        }
        let mut d_chars = Array2::zeros(char_feats.raw_dim());
        for (i, &(a, b)) in cache.spans.iter().enumerate() {
            let share = d_x.row(i + 1).mapv(|v| v / (b - a) as f64);
            for t in a..b {
                d_chars.row_mut(t).assign(&share);
            }
        }
        Ok((loss, grad, d_chars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pooling_means() {
        let feats = array![[1.0, 2.0], [3.0, 4.0]];
        let seg = Segmentation::from_tokens(&["ab"]).unwrap();
        let root = array![9.0, 9.0];
        let t = pool_tokens(feats.view(), &seg, root.view()).unwrap();
        assert_eq!(t, array![[9.0, 9.0], [2.0, 3.0]]);
        let seg = Segmentation::from_tokens(&["a", "b"]).unwrap();
        let t = pool_tokens(feats.view(), &seg, root.view()).unwrap();
        assert_eq!(t.slice(s![1.., ..]), feats);
        let seg = Segmentation::from_tokens(&["abc"]).unwrap();
        assert!(matches!(
            pool_tokens(feats.view(), &seg, root.view()),
            Err(Error::SpanMismatch { .. })
        ));
    }

    #[test]
    fn add_pos_rows() {
        let mut t = array![[1.0, 1.0], [2.0, 3.0]];
        add_pos(&mut t, &[0], Array2::zeros((2, 2)).view()).unwrap();
        assert_eq!(t, array![[1.0, 1.0], [2.0, 3.0]]);
        add_pos(&mut t, &[1], array![[0.0, 0.0], [0.5, -1.0]].view()).unwrap();
        assert_eq!(t, array![[1.0, 1.0], [2.5, 2.0]]);
        assert!(matches!(
            add_pos(&mut t, &[5], Array2::zeros((2, 2)).view()),
            Err(Error::UnknownPosLabel(_))
        ));
    }

    #[test]
    fn single_token_attaches_to_root() {
        let mut arc = array![[0.0, 0.0], [-3.0, 0.0]];
        mask_arcs(&mut arc);
        assert_eq!(decode_heads(arc.view()), vec![0]);
    }

    #[test]
    fn two_cycle_is_broken() {
        // greedy picks 1<-2 and 2<-1
        let mut arc = array![[0.0, 0.0, 0.0], [1.0, 0.0, 5.0], [0.0, 5.0, 0.0]];
        mask_arcs(&mut arc);
        let heads = decode_heads(arc.view());
        assert!(validate_heads(&heads).is_ok());
        assert_eq!(heads, vec![0, 1]);
    }

    #[test]
    fn dominant_tree_returned() {
        let gold = [2usize, 0, 2, 3];
        let mut arc = Array2::zeros((5, 5));
        for (i, &h) in gold.iter().enumerate() {
            arc[[i + 1, h]] = 10.0;
        }
        mask_arcs(&mut arc);
        assert_eq!(decode_heads(arc.view()), gold.to_vec());
    }

    #[test]
    fn multiple_root_children_resolved() {
        let mut arc = Array2::zeros((4, 4));
        for i in 1..4 {
            arc[[i, 0]] = 10.0;
        }
        mask_arcs(&mut arc);
        let heads = decode_heads(arc.view());
        assert_eq!(heads.iter().filter(|&&h| h == 0).count(), 1);
        assert!(validate_heads(&heads).is_ok());
    }

    #[test]
    fn heads_validation() {
        assert!(validate_heads(&[0, 1]).is_ok());
        assert!(validate_heads(&[0, 0]).is_err());
        assert!(validate_heads(&[2, 1]).is_err());
        assert!(validate_heads(&[0, 3, 2]).is_err());
        assert!(validate_heads(&[0, 5]).is_err());
    }

    #[test]
    fn confident_loss_is_zero() {
        let gold = [0usize, 1];
        let mut arc = Array2::zeros((3, 3));
        arc[[1, 0]] = 100.0;
        arc[[2, 1]] = 100.0;
        mask_arcs(&mut arc);
        let mut lab = Array2::zeros((2, 3));
        lab[[0, 1]] = 100.0;
        lab[[1, 2]] = 100.0;
        let (loss, _, _) = parse_loss(arc.view(), lab.view(), &gold, &[1, 2]).unwrap();
        assert!(loss < 1e-40 || loss.abs() < 1e-12);
    }

    #[test]
    fn invalid_gold_rejected() {
        let mut arc = Array2::zeros((3, 3));
        mask_arcs(&mut arc);
        let lab = Array2::zeros((2, 2));
        assert!(matches!(
            parse_loss(arc.view(), lab.view(), &[0, 0], &[0, 0]),
            Err(Error::InvalidGoldTree(_))
        ));
    }
}
