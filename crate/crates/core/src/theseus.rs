//! Compression of a deep encoder into one with half the layers by stochastic
//! module replacement.
//!
//! Base layer `i` (0-based) is bound to large layers `2i` and `2i+1`. During
//! the first training phase each base layer is, independently and per step,
//! swapped for its bound pair of large layers with probability `p`, which
//! decays linearly from `p0` to zero. Large layers are frozen. The second
//! phase trains the base model alone.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderCache, EncoderParams, LayerParams};
use crate::error::{Error, Result};
use crate::params::{Adam, AdamConfig, Params};
use crate::pipeline::corpus::Corpus;
use crate::pipeline::train::{batch_grad, make_examples, plan_batches, Example};
use crate::pipeline::Model;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleBinding {
    /// `slots[i]` lists the large-model layers bound to base layer `i`.
    slots: Vec<[usize; 2]>,
}

impl ModuleBinding {
    pub fn halving(base_layers: usize, large_layers: usize) -> Result<Self> {
        if base_layers == 0 || large_layers != 2 * base_layers {
            return Err(Error::BindingMismatch(format!(
                "{base_layers} base layers cannot bind {large_layers} large layers"
            )));
        }
        Ok(ModuleBinding {
            slots: (0..base_layers).map(|i| [2 * i, 2 * i + 1]).collect(),
        })
    }

    pub fn slots(&self) -> &[[usize; 2]] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    fn check(&self, base: &EncoderParams, large: &EncoderParams) -> Result<()> {
        if base.layers.len() != self.slots.len() || large.layers.len() != 2 * self.slots.len() {
            return Err(Error::BindingMismatch(format!(
                "binding has {} slots; base has {} layers, large has {}",
                self.slots.len(),
                base.layers.len(),
                large.layers.len()
            )));
        }
        if base.config.hidden_dim != large.config.hidden_dim || base.config.num_heads != large.config.num_heads {
            return Err(Error::BindingMismatch("encoder widths differ".into()));
        }
        Ok(())
    }

    /// Layer stack for a replacement pattern.
    pub fn stack<'a>(
        &self,
        base: &'a EncoderParams,
        large: &'a EncoderParams,
        replaced: &[bool],
    ) -> Vec<&'a LayerParams> {
        let mut out = Vec::with_capacity(2 * self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            if replaced[i] {
                out.extend(slot.iter().map(|&l| &large.layers[l]));
            } else {
                out.push(&base.layers[i]);
            }
        }
        out
    }

    /// Keeps the gradients of base layers in a stack built by [`stack`](Self::stack);
    /// gradients of large layers are dropped. Returns one entry per base layer.
    pub fn base_gradients(&self, replaced: &[bool], stack_grads: Vec<LayerParams>) -> Vec<Option<LayerParams>> {
        let mut it = stack_grads.into_iter();
        replaced
            .iter()
            .map(|&r| {
                if r {
                    it.next();
                    it.next();
                    None
                } else {
                    it.next()
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheseusSchedule {
    pub initial_probability: f64,
    pub phase1_steps: usize,
    pub phase2_steps: usize,
}

impl TheseusSchedule {
    pub fn new(phase1_steps: usize, phase2_steps: usize) -> Self {
        TheseusSchedule {
            initial_probability: 0.5,
            phase1_steps,
            phase2_steps,
        }
    }

    /// Replacement probability at a phase-1 step; zero from `phase1_steps` on.
    pub fn probability(&self, step: usize) -> f64 {
        if self.phase1_steps == 0 || step >= self.phase1_steps {
            return 0.0;
        }
        let p = self.initial_probability * (1.0 - step as f64 / self.phase1_steps as f64);
        p.clamp(0.0, self.initial_probability)
    }
}

/// Independent Bernoulli(p) draw per slot.
pub fn sample_replacement<R: Rng>(rng: &mut R, slots: usize, p: f64) -> Vec<bool> {
    (0..slots).map(|_| rng.gen_bool(p.clamp(0.0, 1.0))).collect()
}

/// Output of one stochastic forward pass.
pub struct SampledForward {
    pub features: Array2<f64>,
    pub replaced: Vec<bool>,
    pub cache: EncoderCache,
}

/// Forward through the base encoder's embeddings and final norm with each
/// layer slot independently replaced by its large-model pair with
/// probability `p`.
#[allow(clippy::too_many_arguments)]
pub fn sample_forward<R: Rng>(
    base: &EncoderParams,
    large: &EncoderParams,
    binding: &ModuleBinding,
    p: f64,
    rng: &mut R,
    tag_id: usize,
    char_ids: &[usize],
    mask: &[bool],
) -> Result<SampledForward> {
    binding.check(base, large)?;
    let replaced = sample_replacement(rng, binding.len(), p);
    let layers = binding.stack(base, large, &replaced);
    let (features, cache) = base.forward_with(&layers, tag_id, char_ids, mask)?;
    Ok(SampledForward {
        features,
        replaced,
        cache,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressOptions {
    pub schedule: TheseusSchedule,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl CompressOptions {
    pub fn new(phase1_steps: usize, phase2_steps: usize, seed: u64) -> Self {
        CompressOptions {
            schedule: TheseusSchedule::new(phase1_steps, phase2_steps),
            batch_size: 16,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed,
        }
    }
}

pub struct CompressOutcome {
    pub model: Model,
    /// Mean per-sentence loss of every step, both phases.
    pub losses: Vec<f64>,
    /// Number of phase-1 steps in which each base slot was replaced.
    pub replacements: Vec<usize>,
}

/// Trains a model with half of `large`'s encoder layers on `corpora`.
///
/// The base model starts from `large`'s embeddings, heads and first half of
/// layers. Phase 1 replaces base slots by their bound large-layer pairs with
/// the scheduled probability, updating only base parameters; phase 2 trains
/// the base model alone. `large` is only read.
pub fn compress(large: &Model, corpora: &[Corpus], options: &CompressOptions) -> Result<CompressOutcome> {
    let n = large.num_layers();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::BindingMismatch(format!("cannot halve {n} layers")));
    }
    if options.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let k = n / 2;
    let binding = ModuleBinding::halving(k, n)?;
    let mut base = large.prune_layers(k)?;
    let examples: Vec<Vec<Example>> = corpora
        .iter()
        .map(|c| make_examples(&base, c))
        .collect::<Result<_>>()?;
    let sizes: Vec<usize> = examples.iter().map(Vec::len).collect();
    if sizes.iter().all(|&s| s == 0) {
        return Err(Error::EmptyInput);
    }
    let mut batch_rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut swap_rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x7e5e_u64);
    let mut adam = Adam::new(AdamConfig {
        lr: options.learning_rate,
        clip_norm: options.clip_norm,
        ..AdamConfig::default()
    });
    let schedule = &options.schedule;
    let total = schedule.phase1_steps + schedule.phase2_steps;
    let mut losses = Vec::with_capacity(total);
    let mut replacements = vec![0; k];
    let mut queue = Vec::new().into_iter();
    for step in 0..total {
        let (c, idx) = match queue.next() {
            Some(b) => b,
            None => {
                queue = plan_batches(&sizes, options.batch_size, &mut batch_rng).into_iter();
                queue.next().expect("at least one batch")
            }
        };
        let batch: Vec<&Example> = idx.iter().map(|&i| &examples[c][i]).collect();
        let replaced = if step < schedule.phase1_steps {
            sample_replacement(&mut swap_rng, k, schedule.probability(step))
        } else {
            vec![false; k]
        };
        for (count, &r) in replacements.iter_mut().zip(&replaced) {
            *count += r as usize;
        }
        let stack = binding.stack(&base.params.encoder, &large.params.encoder, &replaced);
        let (loss, grads) = batch_grad(&base.params, &stack, &batch)?;
        drop(stack);
        let mut full = grads.model;
        full.encoder.layers = binding
            .base_gradients(&replaced, grads.stack)
            .into_iter()
            .zip(&base.params.encoder.layers)
            .map(|(g, layer)| g.unwrap_or_else(|| layer.zeros_like()))
            .collect();
        full.scale(1.0 / batch.len() as f64);
        adam.update(&mut base.params, &full);
        losses.push(loss / batch.len() as f64);
    }
    Ok(CompressOutcome {
        model: base,
        losses,
        replacements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn large() -> EncoderParams {
        let cfg = EncoderConfig {
            num_layers: 4,
            hidden_dim: 8,
            num_heads: 2,
            ffn_dim: 8,
            max_len: 8,
            vocab_size: 10,
        };
        EncoderParams::init(cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
    }

    #[test]
    fn binding_pairs() {
        let b = ModuleBinding::halving(4, 8).unwrap();
        assert_eq!(b.slots(), &[[0, 1], [2, 3], [4, 5], [6, 7]]);
        assert!(matches!(ModuleBinding::halving(4, 6), Err(Error::BindingMismatch(_))));
    }

    #[test]
    fn schedule_endpoints() {
        let s = TheseusSchedule::new(100, 10);
        assert_eq!(s.probability(0), 0.5);
        assert_eq!(s.probability(50), 0.25);
        assert_eq!(s.probability(100), 0.0);
        assert_eq!(s.probability(1000), 0.0);
    }

    #[test]
    fn extreme_probabilities() {
        let large = large();
        let base = large.prune_layers(2).unwrap();
        let binding = ModuleBinding::halving(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ids = [5, 6, 7];
        let mask = [true; 3];
        let none = sample_forward(&base, &large, &binding, 0.0, &mut rng, 2, &ids, &mask).unwrap();
        assert_eq!(none.features, base.forward(2, &ids, &mask).unwrap());
        let all = sample_forward(&base, &large, &binding, 1.0, &mut rng, 2, &ids, &mask).unwrap();
        assert_eq!(all.features, large.forward(2, &ids, &mask).unwrap());
    }

    #[test]
    fn mismatched_models_rejected() {
        let large = large();
        let base = large.prune_layers(3).unwrap();
        let binding = ModuleBinding::halving(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_forward(&base, &large, &binding, 0.5, &mut rng, 2, &[5], &[true]).is_err());
    }

    #[test]
    fn gradient_routing() {
        let large = large();
        let base = large.prune_layers(2).unwrap();
        let binding = ModuleBinding::halving(2, 4).unwrap();
        let replaced = [true, false];
        let stack = binding.stack(&base, &large, &replaced);
        assert_eq!(stack.len(), 3);
        let grads: Vec<LayerParams> = stack.iter().map(|l| (*l).clone()).collect();
        let routed = binding.base_gradients(&replaced, grads);
        assert!(routed[0].is_none());
        assert_eq!(routed[1].as_ref().unwrap(), &base.layers[1]);
    }

    #[test]
    fn compress_is_deterministic_and_halves() {
        use crate::pipeline::corpus::{in_memory_path, parse_corpus};
        use crate::pipeline::train::{build_model, EncoderSettings, TrainOptions};
        use crate::scheme::Task;
        let corpus = Corpus {
            tag: "cws".into(),
            task: Task::Cws,
            sentences: parse_corpus("我 喜欢 足球\n你 喜欢 踢 球\n", Task::Cws, &in_memory_path()).unwrap(),
        };
        let opts = TrainOptions {
            encoder: EncoderSettings {
                num_layers: 4,
                hidden_dim: 8,
                num_heads: 2,
                ffn_dim: 8,
            },
            ..TrainOptions::default()
        };
        let large = build_model(std::slice::from_ref(&corpus), &opts, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let options = CompressOptions::new(6, 2, 9);
        let a = compress(&large, std::slice::from_ref(&corpus), &options).unwrap();
        let b = compress(&large, std::slice::from_ref(&corpus), &options).unwrap();
        assert_eq!(a.model.num_layers(), 2);
        assert_eq!(a.model, b.model);
        assert_eq!(a.losses.len(), 8);
        let odd = large.prune_layers(3).unwrap();
        assert!(matches!(
            compress(&odd, std::slice::from_ref(&corpus), &options),
            Err(Error::BindingMismatch(_))
        ));
    }
}
