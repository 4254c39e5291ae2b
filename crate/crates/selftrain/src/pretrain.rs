//! In-domain masked-token pretraining.
//!
//! For each document a seeded fraction of positions is replaced by the MASK
//! token; each masked token is then predicted from the mean input embedding
//! of its context window through a sampled-softmax cross-entropy over the
//! true token plus a fixed number of seeded negatives. Only the input
//! embedding table transfers to the classifier; the output table is
//! discarded. Two-stage (general corpus, then in-domain) pretraining chains
//! by passing the first stage's result as `init`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{UnlabeledPool, Vocab, MASK_ID};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::model::{softmax, ClassifierModel, InitProvenance};

const NUM_SPECIALS: u32 = 3;
const INIT_RANGE: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    /// Fraction of each document's tokens that get masked.
    pub mask_rate: f64,
    /// Tokens on each side of a masked position that form its context.
    pub context_window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Sampled negatives per prediction.
    pub negative_samples: usize,
    pub embedding_dim: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            mask_rate: 0.15,
            context_window: 5,
            epochs: 3,
            learning_rate: 0.05,
            seed: 0,
            negative_samples: 10,
            embedding_dim: 64,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(Error::ConfigInvalid {
                field: "pretrain.mask_rate".into(),
                reason: "must be in (0, 1)".into(),
            });
        }
        if self.context_window == 0 {
            return Err(Error::ConfigInvalid {
                field: "pretrain.context_window".into(),
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Embedding table produced by pretraining, plus the ordered hashes of the
/// corpora it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedInit {
    vocab_hash: u64,
    vocab_size: usize,
    embedding_dim: usize,
    embeddings: Vec<f64>,
    provenance: Vec<u64>,
    final_loss: f64,
}

impl PretrainedInit {
    pub(crate) fn from_raw(
        vocab_hash: u64,
        vocab_size: usize,
        embedding_dim: usize,
        embeddings: Vec<f64>,
        provenance: Vec<u64>,
        final_loss: f64,
    ) -> Result<Self> {
        if embeddings.len() != vocab_size * embedding_dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding table has {} values, expected {}",
                embeddings.len(),
                vocab_size * embedding_dim
            )));
        }
        Ok(Self {
            vocab_hash,
            vocab_size,
            embedding_dim,
            embeddings,
            provenance,
            final_loss,
        })
    }

    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.embeddings
    }

    /// Embedding row for one token id.
    pub fn embedding(&self, id: u32) -> &[f64] {
        let d = self.embedding_dim;
        &self.embeddings[id as usize * d..(id as usize + 1) * d]
    }

    /// Ordered hashes of the corpora this initializer was trained on.
    pub fn provenance(&self) -> &[u64] {
        &self.provenance
    }

    pub fn final_loss(&self) -> f64 {
        self.final_loss
    }

    pub fn all_finite(&self) -> bool {
        self.embeddings.iter().all(|v| v.is_finite())
    }
}

/// Loss curve for a pretraining run. `initial_loss` and `final_loss` are
/// full evaluation passes over identical masks before and after training;
/// `epoch_loss` is the running mean seen during each epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epoch_loss: Vec<f64>,
    pub predictions_per_epoch: usize,
}

/// Masked positions per document for one pass, drawn from a seeded
/// generator: `ceil(mask_rate * len)` distinct positions each.
fn draw_masks(pool: &UnlabeledPool, mask_rate: f64, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.examples()
        .iter()
        .map(|ex| {
            let len = ex.tokens.len();
            if len == 0 {
                return Vec::new();
            }
            let k = ((mask_rate * len as f64).ceil() as usize).clamp(1, len);
            let mut positions = rand::seq::index::sample(&mut rng, len, k).into_vec();
            positions.sort_unstable();
            positions
        })
        .collect()
}

struct Objective<'a> {
    vocab_size: u32,
    d: usize,
    window: usize,
    negatives: usize,
    input: &'a mut [f64],
    output: &'a mut [f64],
}

impl Objective<'_> {
    /// Context token ids for position `i` of a masked sequence.
    fn context(&self, masked: &[u32], i: usize) -> Vec<u32> {
        let lo = i.saturating_sub(self.window);
        let hi = (i + self.window).min(masked.len() - 1);
        (lo..=hi).filter(|&j| j != i).map(|j| masked[j]).collect()
    }

    fn mean_input(&self, context: &[u32]) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for &t in context {
            let row = &self.input[t as usize * self.d..(t as usize + 1) * self.d];
            for (ci, r) in c.iter_mut().zip(row) {
                *ci += r;
            }
        }
        let inv = 1.0 / context.len() as f64;
        for ci in &mut c {
            *ci *= inv;
        }
        c
    }

    /// Sampled-softmax cross-entropy for one prediction; `candidates[0]` is
    /// the true token.
    fn prediction_loss(&self, context_mean: &[f64], candidates: &[u32]) -> f64 {
        let scores: Vec<f64> = candidates
            .iter()
            .map(|&v| {
                let row = &self.output[v as usize * self.d..(v as usize + 1) * self.d];
                context_mean.iter().zip(row).map(|(a, b)| a * b).sum()
            })
            .collect();
        -softmax(&scores)[0].ln()
    }

    /// One SGD update; returns the prediction's loss.
    fn train_step(
        &mut self,
        masked: &[u32],
        target: u32,
        i: usize,
        lr: f64,
        rng: &mut ChaCha8Rng,
    ) -> Option<f64> {
        let context = self.context(masked, i);
        if context.is_empty() {
            return None;
        }
        let mut candidates = Vec::with_capacity(self.negatives + 1);
        candidates.push(target);
        for _ in 0..self.negatives {
            candidates.push(rng.random_range(NUM_SPECIALS..self.vocab_size));
        }
        let c = self.mean_input(&context);
        let scores: Vec<f64> = candidates
            .iter()
            .map(|&v| {
                let row = &self.output[v as usize * self.d..(v as usize + 1) * self.d];
                c.iter().zip(row).map(|(a, b)| a * b).sum()
            })
            .collect();
        let probs = softmax(&scores);
        let loss = -probs[0].ln();

        // d loss / d context-mean uses the pre-update output rows
        let mut dc = vec![0.0; self.d];
        for (j, &v) in candidates.iter().enumerate() {
            let g = probs[j] - if j == 0 { 1.0 } else { 0.0 };
            let row = &self.output[v as usize * self.d..(v as usize + 1) * self.d];
            for (dci, r) in dc.iter_mut().zip(row) {
                *dci += g * r;
            }
        }
        for (j, &v) in candidates.iter().enumerate() {
            let g = probs[j] - if j == 0 { 1.0 } else { 0.0 };
            let row =
                &mut self.output[v as usize * self.d..(v as usize + 1) * self.d];
            for (r, &ci) in row.iter_mut().zip(&c) {
                *r -= lr * g * ci;
            }
        }
        let scale = lr / context.len() as f64;
        for &t in &context {
            let row = &mut self.input[t as usize * self.d..(t as usize + 1) * self.d];
            for (r, &dci) in row.iter_mut().zip(&dc) {
                *r -= scale * dci;
            }
        }
        Some(loss)
    }

    /// Mean prediction loss over the whole pool with fixed masks and fixed
    /// negatives; no updates.
    fn evaluate(&self, pool: &UnlabeledPool, masks: &[Vec<usize>], neg_seed: u64) -> (f64, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(neg_seed);
        let mut total = 0.0;
        let mut count = 0usize;
        for (ex, mask) in pool.examples().iter().zip(masks) {
            let masked = apply_mask(&ex.tokens, mask);
            for &i in mask {
                let context = self.context(&masked, i);
                let mut candidates = Vec::with_capacity(self.negatives + 1);
                candidates.push(ex.tokens[i]);
                for _ in 0..self.negatives {
                    candidates.push(rng.random_range(NUM_SPECIALS..self.vocab_size));
                }
                if context.is_empty() {
                    continue;
                }
                total += self.prediction_loss(&self.mean_input(&context), &candidates);
                count += 1;
            }
        }
        (if count == 0 { 0.0 } else { total / count as f64 }, count)
    }
}

fn apply_mask(tokens: &[u32], positions: &[usize]) -> Vec<u32> {
    let mut masked = tokens.to_vec();
    for &i in positions {
        masked[i] = MASK_ID;
    }
    masked
}

/// Pretrains an embedding table on `pool`. Passing `init` continues from a
/// previous stage's embeddings and extends its provenance chain.
pub fn pretrain(
    pool: &UnlabeledPool,
    vocab: &Vocab,
    cfg: &PretrainConfig,
    init: Option<&PretrainedInit>,
) -> Result<(PretrainedInit, PretrainReport)> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if vocab.len() <= NUM_SPECIALS as usize {
        return Err(Error::ConfigInvalid {
            field: "vocab".into(),
            reason: "vocabulary has no non-special tokens to predict".into(),
        });
    }
    for ex in pool.examples() {
        if let Some(&t) = ex.tokens.iter().find(|&&t| t as usize >= vocab.len()) {
            return Err(Error::VocabMismatch {
                id: t,
                vocab_size: vocab.len(),
            });
        }
    }
    let d = cfg.embedding_dim;
    let vocab_hash = vocab.content_hash();

    let mut input = match init {
        Some(prev) => {
            if prev.vocab_hash != vocab_hash {
                return Err(Error::VocabHashMismatch {
                    found: prev.vocab_hash,
                    expected: vocab_hash,
                });
            }
            if prev.embedding_dim != d || prev.vocab_size != vocab.len() {
                return Err(Error::ShapeMismatch(format!(
                    "init is {}x{}, config wants {}x{}",
                    prev.vocab_size, prev.embedding_dim, vocab.len(), d
                )));
            }
            prev.embeddings.clone()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "pretrain-input"));
            (0..vocab.len() * d)
                .map(|_| rng.random_range(-INIT_RANGE..INIT_RANGE))
                .collect()
        }
    };
    let mut output: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "pretrain-output"));
        (0..vocab.len() * d)
            .map(|_| rng.random_range(-INIT_RANGE..INIT_RANGE))
            .collect()
    };

    let eval_masks = draw_masks(pool, cfg.mask_rate, derive_seed(cfg.seed, "eval-mask"));
    let eval_neg_seed = derive_seed(cfg.seed, "eval-negatives");

    let mut obj = Objective {
        vocab_size: vocab.len() as u32,
        d,
        window: cfg.context_window,
        negatives: cfg.negative_samples,
        input: &mut input,
        output: &mut output,
    };

    let (initial_loss, eval_count) = obj.evaluate(pool, &eval_masks, eval_neg_seed);
    if eval_count == 0 {
        return Err(Error::EmptyPool);
    }

    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut doc_order: Vec<usize> = (0..pool.len()).collect();
    for epoch in 0..cfg.epochs {
        let masks = draw_masks(
            pool,
            cfg.mask_rate,
            derive_seed(cfg.seed, &format!("mask-epoch-{epoch}")),
        );
        let mut order_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("order-epoch-{epoch}")));
        let mut neg_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("negatives-epoch-{epoch}")));
        use rand::seq::SliceRandom;
        doc_order.shuffle(&mut order_rng);

        let mut total = 0.0;
        let mut count = 0usize;
        for &doc in &doc_order {
            let ex = &pool.examples()[doc];
            let mask = &masks[doc];
            let masked = apply_mask(&ex.tokens, mask);
            for &i in mask {
                if let Some(loss) =
                    obj.train_step(&masked, ex.tokens[i], i, cfg.learning_rate, &mut neg_rng)
                {
                    total += loss;
                    count += 1;
                }
            }
        }
        epoch_loss.push(if count == 0 { 0.0 } else { total / count as f64 });
    }

    let (final_loss, _) = obj.evaluate(pool, &eval_masks, eval_neg_seed);

    let mut provenance = init.map(|i| i.provenance.clone()).unwrap_or_default();
    provenance.push(pool.content_hash());

    let report = PretrainReport {
        initial_loss,
        final_loss,
        epoch_loss,
        predictions_per_epoch: eval_count,
    };
    let init = PretrainedInit {
        vocab_hash,
        vocab_size: vocab.len(),
        embedding_dim: d,
        embeddings: input,
        provenance,
        final_loss,
    };
    Ok((init, report))
}

/// Replaces a model's embedding table with pretrained embeddings, leaving
/// the classifier head untouched, and records the pretraining provenance.
pub fn apply_init(mut model: ClassifierModel, init: &PretrainedInit) -> Result<ClassifierModel> {
    if model.vocab_hash() != init.vocab_hash {
        return Err(Error::VocabHashMismatch {
            found: init.vocab_hash,
            expected: model.vocab_hash(),
        });
    }
    if model.embedding_dim() != init.embedding_dim || model.vocab_size() != init.vocab_size {
        return Err(Error::ShapeMismatch(format!(
            "init is {}x{}, model is {}x{}",
            init.vocab_size,
            init.embedding_dim,
            model.vocab_size(),
            model.embedding_dim()
        )));
    }
    model.set_embeddings(&init.embeddings)?;
    model.set_provenance(InitProvenance::Pretrained {
        corpora: init.provenance.clone(),
    });
    Ok(model)
}
