mod common;

use common::*;
use hanforge::biaffine::{decode_heads, mask_arcs, parse_loss, pool_tokens, validate_heads, BiaffineParser};
use hanforge::crf::{log_partition, nll_loss, nll_with_grad, viterbi, Transitions};
use hanforge::encoder::{EncoderConfig, EncoderParams};
use hanforge::param_tree;
use hanforge::params::Params;
use hanforge::scheme::{decode_cross, decode_ner, LabelScheme, Segmentation};
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone)]
struct CrfInputs {
    em: Array2<f64>,
    tr: Transitions,
}
param_tree!(CrfInputs { em, tr });

#[test]
fn crf_nll_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let t = rng.gen_range(1..6);
        let l = rng.gen_range(2..5);
        let x = CrfInputs {
            em: random_matrix(&mut rng, t, l, 2.0),
            tr: random_transitions(&mut rng, l),
        };
        let gold: Vec<usize> = (0..t).map(|_| rng.gen_range(0..l)).collect();
        let (_, d_em, d_tr) = nll_with_grad(x.em.view(), &x.tr, &gold).unwrap();
        let analytic = CrfInputs { em: d_em, tr: d_tr };
        for c in finite_difference_errors(&x, &analytic, 1e-5, |p| nll_loss(p.em.view(), &p.tr, &gold).unwrap()) {
            assert!(c.passes(1e-4), "{c:?}");
        }
    }
}

#[test]
fn crf_probabilities_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let t = rng.gen_range(1..5);
        let l = rng.gen_range(1..4);
        let em = random_matrix(&mut rng, t, l, 3.0);
        let tr = random_transitions(&mut rng, l);
        let total: f64 = all_paths(l, t)
            .iter()
            .map(|p| (-nll_loss(em.view(), &tr, p).unwrap()).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }
}

#[test]
fn crf_marginal_gradient_identity() {
    // d loss / d em = marginals - onehot(gold), marginals by enumeration.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (t, l) = (4, 3);
    let em = random_matrix(&mut rng, t, l, 1.5);
    let tr = random_transitions(&mut rng, l);
    let gold = vec![0, 2, 1, 1];
    let log_z = brute_log_partition(&em, &tr, t);
    let mut marg = Array2::<f64>::zeros((t, l));
    for p in all_paths(l, t) {
        let w = (brute_path_score(&em, &tr, &p) - log_z).exp();
        for (pos, &y) in p.iter().enumerate() {
            marg[[pos, y]] += w;
        }
    }
    for (pos, &y) in gold.iter().enumerate() {
        marg[[pos, y]] -= 1.0;
    }
    let (_, d_em, _) = nll_with_grad(em.view(), &tr, &gold).unwrap();
    for (a, b) in d_em.iter().zip(marg.iter()) {
        assert!((a - b).abs() < 1e-10);
    }
}

fn tiny_encoder(layers: usize) -> EncoderParams {
    let cfg = EncoderConfig {
        num_layers: layers,
        hidden_dim: 8,
        num_heads: 2,
        ffn_dim: 16,
        max_len: 12,
        vocab_size: 14,
    };
    let mut e = EncoderParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    // move layer norms and biases off their trivial initial values
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for entry in e.entries_mut() {
        for v in entry.data.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    e
}

#[test]
fn encoder_gradients_match_central_differences() {
    let enc = tiny_encoder(2);
    let ids = [5, 9, 3, 0];
    let mask = [true, true, true, false];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let weights = random_matrix(&mut rng, 5, 8, 1.0);
    let loss = |p: &EncoderParams| {
        let h = p.forward(2, &ids, &mask).unwrap();
        (&h.slice(s![..4, ..]) * &weights.slice(s![..4, ..])).sum()
    };
    let (h, cache) = enc.forward_cached(2, &ids, &mask).unwrap();
    assert_eq!(h.nrows(), 5);
    let grad = enc.backward(&cache, weights.view());
    let errs = finite_difference_errors(&enc, &grad, 1e-5, loss);
    assert!(errs.iter().filter(|c| c.scale >= 1e-6).count() > 20);
    for c in errs {
        assert!(c.passes(1e-4), "{c:?}");
    }
    assert!(grad.embedding.row(0).iter().all(|&v| v == 0.0));
}

fn tiny_parser(rng: &mut ChaCha8Rng) -> BiaffineParser {
    BiaffineParser::init(rng, 6, 3, 4, 5, 4)
}

#[test]
fn parser_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let parser = tiny_parser(&mut rng);
    let seg = Segmentation::from_tokens(&["ab", "c", "def"]).unwrap();
    let feats = random_matrix(&mut rng, 6, 6, 1.0);
    let pos = [2, 0, 1];
    let heads = [2, 0, 2];
    let rels = [1, 3, 0];
    let (_, grad, d_feats) = parser.loss_and_grad(feats.view(), &seg, &pos, &heads, &rels).unwrap();
    let loss = |p: &BiaffineParser| p.loss_and_grad(feats.view(), &seg, &pos, &heads, &rels).unwrap().0;
    let errs = finite_difference_errors(&parser, &grad, 1e-5, loss);
    assert!(errs.iter().any(|c| c.name == "pos_embedding" && c.scale > 1e-6));
    for c in errs {
        assert!(c.passes(1e-4), "{c:?}");
    }

    #[derive(Clone)]
    struct Feats {
        x: Array2<f64>,
    }
    param_tree!(Feats { x });
    let fx = Feats { x: feats.clone() };
    let gx = Feats { x: d_feats };
    for c in finite_difference_errors(&fx, &gx, 1e-5, |f| {
        parser.loss_and_grad(f.x.view(), &seg, &pos, &heads, &rels).unwrap().0
    }) {
        assert!(c.passes(1e-4), "{c:?}");
    }
}

#[test]
fn pos_embedding_gradient_only_on_used_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let parser = tiny_parser(&mut rng);
    let seg = Segmentation::from_tokens(&["a", "b"]).unwrap();
    let feats = random_matrix(&mut rng, 2, 6, 1.0);
    let (_, grad, _) = parser.loss_and_grad(feats.view(), &seg, &[0, 0], &[0, 1], &[0, 0]).unwrap();
    assert!(grad.pos_embedding.row(0).iter().any(|&v| v != 0.0));
    assert!(grad.pos_embedding.row(1).iter().all(|&v| v == 0.0));
    assert!(grad.pos_embedding.row(2).iter().all(|&v| v == 0.0));
}

#[test]
fn uniform_head_loss() {
    for n in 1..6 {
        let mut arc = Array2::zeros((n + 1, n + 1));
        mask_arcs(&mut arc);
        let labels = Array2::zeros((n, 3));
        let mut heads = vec![0];
        heads.extend(1..n);
        let (loss, _, _) = parse_loss(arc.view(), labels.view(), &heads, &vec![0; n]).unwrap();
        // each dependent chooses among n heads, each relation among 3
        let expect = n as f64 * (n as f64).ln() + n as f64 * 3f64.ln();
        assert!((loss - expect).abs() < 1e-12, "n={n}: {loss} vs {expect}");
    }
}

#[test]
fn decode_matches_exhaustive_search_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for n in 1..=4 {
        let trees = all_single_root_trees(n);
        for _ in 0..200 {
            let mut arc = random_matrix(&mut rng, n + 1, n + 1, 5.0);
            mask_arcs(&mut arc);
            let best = trees
                .iter()
                .map(|h| tree_score(&arc, h))
                .fold(f64::NEG_INFINITY, f64::max);
            let got = decode_heads(arc.view());
            assert!(validate_heads(&got).is_ok());
            assert!((tree_score(&arc, &got) - best).abs() < 1e-9);
        }
    }
}

#[test]
fn single_root_tree_count() {
    // n^(n-1) rooted trees on n labelled nodes, each hung under ROOT by its root
    for n in 1..=4usize {
        assert_eq!(all_single_root_trees(n).len(), n.pow(n as u32 - 1));
    }
}

#[test]
fn biaffine_arc_scores_are_linear_in_the_bilinear_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let parser = tiny_parser(&mut rng);
    let seg = Segmentation::from_tokens(&["ab", "c"]).unwrap();
    let feats = random_matrix(&mut rng, 3, 6, 1.0);
    let p = parser.arc_weight.ncols();
    let arcs = |w: &Array2<f64>| {
        let mut q = parser.clone();
        q.arc_weight = w.clone();
        q.score_arcs(&q.forward(feats.view(), &seg, &[0, 1]).unwrap())
    };
    let full = arcs(&parser.arc_weight);
    let mut bias_only = parser.arc_weight.clone();
    bias_only.slice_mut(s![..p, ..]).fill(0.0);
    let base = arcs(&bias_only);
    let mut doubled = parser.arc_weight.clone();
    doubled.slice_mut(s![..p, ..]).mapv_inplace(|v| 2.0 * v);
    let twice = arcs(&doubled);
    for i in 1..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            let bil = full[[i, j]] - base[[i, j]];
            let bil2 = twice[[i, j]] - base[[i, j]];
            assert!((bil2 - 2.0 * bil).abs() < 1e-12);
            assert!(full[[i, j]].is_finite());
        }
    }
}

fn arb_segmentation() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    // token lengths, tag ids
    prop::collection::vec((1usize..5, 0usize..4), 1..10)
        .prop_map(|v| v.into_iter().unzip())
}

fn build_seg(lengths: &[usize]) -> Segmentation {
    let tokens: Vec<String> = lengths
        .iter()
        .enumerate()
        .map(|(i, &k)| std::iter::repeat_n(char::from_u32(0x4e00 + i as u32).unwrap(), k).collect())
        .collect();
    Segmentation::from_tokens(&tokens).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cross_label_round_trip((lengths, tags) in arb_segmentation()) {
        let cats = ["NN", "VV", "AD", "PN"];
        let seg = build_seg(&lengths);
        let tag_names: Vec<&str> = tags.iter().map(|&t| cats[t]).collect();
        let labels = hanforge::scheme::encode_cross(&seg, &tag_names).unwrap();
        let back = decode_cross(seg.chars(), &labels).unwrap();
        prop_assert_eq!(back.segmentation, seg);
        prop_assert_eq!(back.tags, tag_names.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    }

    #[test]
    fn pooling_matches_naive_means((lengths, _) in arb_segmentation(), seed in 0u64..1000) {
        let seg = build_seg(&lengths);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feats = random_matrix(&mut rng, seg.chars().len(), 3, 1.0);
        let root = ndarray::arr1(&[0.0, 0.0, 0.0]);
        let pooled = pool_tokens(feats.view(), &seg, root.view()).unwrap();
        prop_assert_eq!(pooled.nrows(), seg.len() + 1);
        for (i, &(a, b)) in seg.spans().iter().enumerate() {
            for c in 0..3 {
                let mut sum = 0.0;
                for t in a..b {
                    sum += feats[[t, c]];
                }
                prop_assert!((pooled[[i + 1, c]] - sum / (b - a) as f64).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn viterbi_bounded_by_partition(seed in 0u64..10_000, t in 1usize..7, l in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let em = random_matrix(&mut rng, t, l, 3.0);
        let tr = random_transitions(&mut rng, l);
        let (_, best) = viterbi(em.view(), &tr, None, None).unwrap();
        prop_assert!(best <= log_partition(em.view(), &tr, t).unwrap() + 1e-12);
    }

    #[test]
    fn viterbi_invariant_to_position_shift(seed in 0u64..10_000, t in 1usize..7, shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scheme = LabelScheme::ner(&["PER", "LOC"]).unwrap();
        let l = scheme.len();
        let em = random_matrix(&mut rng, t, l, 3.0);
        let tr = random_transitions(&mut rng, l);
        let c = scheme.constraints();
        let pos = rng.gen_range(0..t);
        let mut shifted = em.clone();
        shifted.row_mut(pos).mapv_inplace(|v| v + shift);
        let (a, sa) = viterbi(em.view(), &tr, Some(&c), None).unwrap();
        let (b, sb) = viterbi(shifted.view(), &tr, Some(&c), None).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!((sb - sa - shift).abs() < 1e-9);
        // constrained output always decodes
        prop_assert!(decode_ner(&scheme.to_strings(&a)).is_ok());
    }

    #[test]
    fn constrained_pos_paths_decode(seed in 0u64..10_000, t in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scheme = LabelScheme::pos(&["NN", "VV"]).unwrap();
        let em = random_matrix(&mut rng, t, scheme.len(), 5.0);
        let tr = random_transitions(&mut rng, scheme.len());
        let (path, _) = viterbi(em.view(), &tr, Some(&scheme.constraints()), None).unwrap();
        let chars: Vec<char> = (0..t).map(|i| char::from_u32(0x4e00 + i as u32).unwrap()).collect();
        prop_assert!(decode_cross(&chars, &scheme.to_strings(&path)).is_ok());
        prop_assert!(scheme.check(&path).is_ok());
    }
}
