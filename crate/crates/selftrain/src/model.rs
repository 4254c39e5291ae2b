//! The trainable text classifier used as teacher and student.
//!
//! Architecture: embedding lookup, mean pooling over token embeddings, one
//! tanh hidden layer, softmax head. Training is mini-batch gradient descent
//! with Adam, a linear warmup plus linear decay schedule, dropout on the
//! pooled representation, early stopping on dev accuracy, and full analytic
//! gradients (checked against finite differences in the test suite).
//!
//! Parameters live in one flat `Vec<f64>` in the fixed order
//! `[embeddings, w1, b1, w2, b2]`; gradients use the same layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, LabeledDataset, Vocab};
use crate::error::{Error, Result};
use crate::hash::derive_seed;

/// Architecture sizes. `embedding_dim` is the paper-scale `d`,
/// `hidden_dim` the hidden layer width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 64,
            hidden_dim: 64,
        }
    }
}

/// How a model's parameters were initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitProvenance {
    Random,
    /// Embeddings seeded from in-domain pretraining; records the pretraining
    /// corpora hashes in order.
    Pretrained { corpora: Vec<u64> },
    /// Cloned from a teacher model.
    Teacher,
}

/// Optimizer and schedule settings for one training phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a dev-accuracy improvement before stopping.
    pub early_stop_patience: usize,
    pub dropout_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Fraction of the planned step budget spent in linear warmup.
    pub warmup_frac: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 16,
            max_epochs: 80,
            early_stop_patience: 5,
            dropout_rate: 0.2,
            weight_decay: 1e-3,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.98,
            adam_epsilon: 1e-6,
            warmup_frac: 0.03,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::ConfigInvalid {
                field: "train.learning_rate".into(),
                reason: "must be > 0".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::ConfigInvalid {
                field: "train.batch_size".into(),
                reason: "must be >= 1".into(),
            });
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::ConfigInvalid {
                field: "train.dropout_rate".into(),
                reason: "must be in [0, 1)".into(),
            });
        }
        Ok(())
    }

    /// Same config with a different seed; used for per-cell and
    /// per-iteration seed derivation.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Per-epoch training curves plus the index of the checkpoint that was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean cross-entropy per epoch, as encountered during the epoch.
    pub train_loss: Vec<f64>,
    /// Dev accuracy measured after each epoch.
    pub dev_accuracy: Vec<f64>,
    /// Dev accuracy of the incoming parameters, measured before training.
    pub baseline_dev_accuracy: f64,
    /// Epoch whose parameters were returned (best dev accuracy, ties to
    /// the earlier epoch); `None` when no epoch beat the incoming
    /// parameters, which then come back unchanged.
    pub best_epoch: Option<usize>,
    /// Number of distinct example ids seen in the training set.
    pub distinct_train_ids: usize,
}

/// Parameter-shaped gradient, same flat layout as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Layout {
    vocab_size: usize,
    d: usize,
    h: usize,
    c: usize,
}

impl Layout {
    fn emb(&self) -> std::ops::Range<usize> {
        0..self.vocab_size * self.d
    }
    fn w1(&self) -> std::ops::Range<usize> {
        let s = self.vocab_size * self.d;
        s..s + self.d * self.h
    }
    fn b1(&self) -> std::ops::Range<usize> {
        let s = self.w1().end;
        s..s + self.h
    }
    fn w2(&self) -> std::ops::Range<usize> {
        let s = self.b1().end;
        s..s + self.h * self.c
    }
    fn b2(&self) -> std::ops::Range<usize> {
        let s = self.w2().end;
        s..s + self.c
    }
    fn total(&self) -> usize {
        self.b2().end
    }
}

/// Embedding -> mean-pool -> tanh hidden layer -> softmax classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    vocab_hash: u64,
    layout: Layout,
    params: Vec<f64>,
    provenance: InitProvenance,
}

impl ClassifierModel {
    /// Fresh model with all parameters drawn i.i.d. uniform in
    /// [-0.08, 0.08] from a generator seeded by `seed`.
    pub fn random(vocab: &Vocab, num_classes: usize, cfg: &ModelConfig, seed: u64) -> Self {
        let layout = Layout {
            vocab_size: vocab.len(),
            d: cfg.embedding_dim,
            h: cfg.hidden_dim,
            c: num_classes,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..layout.total())
            .map(|_| rng.random_range(-0.08..0.08))
            .collect();
        Self {
            vocab_hash: vocab.content_hash(),
            layout,
            params,
            provenance: InitProvenance::Random,
        }
    }

    /// Rebuilds a model from checkpoint fields. Validates the parameter
    /// count against the declared shapes.
    pub(crate) fn from_raw(
        vocab_hash: u64,
        vocab_size: usize,
        embedding_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
        params: Vec<f64>,
        provenance: InitProvenance,
    ) -> Result<Self> {
        let layout = Layout {
            vocab_size,
            d: embedding_dim,
            h: hidden_dim,
            c: num_classes,
        };
        if params.len() != layout.total() {
            return Err(Error::CorruptFile(format!(
                "parameter count {} does not match shapes (expected {})",
                params.len(),
                layout.total()
            )));
        }
        Ok(Self {
            vocab_hash,
            layout,
            params,
            provenance,
        })
    }

    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    pub fn vocab_size(&self) -> usize {
        self.layout.vocab_size
    }

    pub fn embedding_dim(&self) -> usize {
        self.layout.d
    }

    pub fn hidden_dim(&self) -> usize {
        self.layout.h
    }

    pub fn num_classes(&self) -> usize {
        self.layout.c
    }

    pub fn provenance(&self) -> &InitProvenance {
        &self.provenance
    }

    pub(crate) fn set_provenance(&mut self, p: InitProvenance) {
        self.provenance = p;
    }

    /// Raw flat parameter vector `[embeddings, w1, b1, w2, b2]`.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable raw parameter access, for optimizers, deserialization and
    /// gradient checking.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Replaces the embedding table. `embeddings` must be
    /// `vocab_size * embedding_dim` long.
    pub(crate) fn set_embeddings(&mut self, embeddings: &[f64]) -> Result<()> {
        let range = self.layout.emb();
        if embeddings.len() != range.len() {
            return Err(Error::ShapeMismatch(format!(
                "embedding table has {} values, model expects {}",
                embeddings.len(),
                range.len()
            )));
        }
        self.params[range].copy_from_slice(embeddings);
        Ok(())
    }

    pub fn embeddings(&self) -> &[f64] {
        &self.params[self.layout.emb()]
    }

    /// Classifier-head parameters (everything except the embedding table).
    pub fn head_params(&self) -> &[f64] {
        &self.params[self.layout.w1().start..]
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    fn check_tokens(&self, tokens: &[u32], at: &str) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::EmptyText { at: at.to_string() });
        }
        for &t in tokens {
            if t as usize >= self.layout.vocab_size {
                return Err(Error::VocabMismatch {
                    id: t,
                    vocab_size: self.layout.vocab_size,
                });
            }
        }
        Ok(())
    }

    fn mean_embedding(&self, tokens: &[u32]) -> Vec<f64> {
        let d = self.layout.d;
        let emb = self.embeddings();
        let mut pooled = vec![0.0; d];
        for &t in tokens {
            let row = &emb[t as usize * d..(t as usize + 1) * d];
            for (p, e) in pooled.iter_mut().zip(row) {
                *p += e;
            }
        }
        let inv = 1.0 / tokens.len() as f64;
        for p in &mut pooled {
            *p *= inv;
        }
        pooled
    }

    /// Forward pass from an already-pooled (and possibly dropout-scaled)
    /// representation. Returns hidden activations and class probabilities.
    fn forward_from_pooled(&self, pooled: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let Layout { d, h, c, .. } = self.layout;
        let w1 = &self.params[self.layout.w1()];
        let b1 = &self.params[self.layout.b1()];
        let w2 = &self.params[self.layout.w2()];
        let b2 = &self.params[self.layout.b2()];

        let mut hidden = vec![0.0; h];
        for (j, hj) in hidden.iter_mut().enumerate() {
            let mut z = b1[j];
            for (i, &p) in pooled.iter().enumerate().take(d) {
                z += p * w1[i * h + j];
            }
            *hj = z.tanh();
        }
        let mut logits = vec![0.0; c];
        for (k, lk) in logits.iter_mut().enumerate() {
            let mut z = b2[k];
            for (j, &a) in hidden.iter().enumerate() {
                z += a * w2[j * c + k];
            }
            *lk = z;
        }
        (hidden, softmax(&logits))
    }

    /// Class probability vector for one vectorized example. Deterministic;
    /// dropout is disabled at inference.
    pub fn predict_proba(&self, example: &Example) -> Result<Vec<f64>> {
        self.check_tokens(&example.tokens, &format!("example {:?}", example.id))?;
        let pooled = self.mean_embedding(&example.tokens);
        Ok(self.forward_from_pooled(&pooled).1)
    }

    /// Predicted class for one example: argmax of `predict_proba`, ties
    /// broken by the lowest class index.
    pub fn predict(&self, example: &Example) -> Result<usize> {
        Ok(argmax(&self.predict_proba(example)?))
    }

    /// Fraction of examples whose argmax prediction equals the gold label.
    pub fn evaluate(&self, dataset: &LabeledDataset) -> Result<f64> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut correct = 0usize;
        for (ex, label) in dataset.examples() {
            if self.predict(ex)? == *label {
                correct += 1;
            }
        }
        Ok(correct as f64 / dataset.len() as f64)
    }

    /// Mean cross-entropy over `batch` plus the weight-decay penalty
    /// `0.5 * weight_decay * (||W1||^2 + ||W2||^2)`. This is the scalar
    /// objective whose gradient [`ClassifierModel::gradient`] computes;
    /// biases and embeddings are exempt from the penalty.
    pub fn loss(&self, batch: &[(&Example, usize)], weight_decay: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for (ex, label) in batch {
            let probs = self.predict_proba(ex)?;
            total -= probs[*label].ln();
        }
        let mut penalty = 0.0;
        for &w in &self.params[self.layout.w1()] {
            penalty += w * w;
        }
        for &w in &self.params[self.layout.w2()] {
            penalty += w * w;
        }
        Ok(total / batch.len() as f64 + 0.5 * weight_decay * penalty)
    }

    /// Analytic gradient of [`ClassifierModel::loss`] over `batch`.
    pub fn gradient(&self, batch: &[(&Example, usize)], weight_decay: f64) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut grad = vec![0.0; self.layout.total()];
        let mut loss = 0.0;
        for (ex, label) in batch {
            self.check_tokens(&ex.tokens, &format!("example {:?}", ex.id))?;
            loss += self.accumulate_example(&ex.tokens, *label, None, &mut grad);
        }
        let inv = 1.0 / batch.len() as f64;
        for g in &mut grad {
            *g *= inv;
        }
        self.add_weight_decay(weight_decay, &mut grad);
        let _ = loss;
        Ok(Gradients { values: grad })
    }

    fn add_weight_decay(&self, weight_decay: f64, grad: &mut [f64]) {
        if weight_decay == 0.0 {
            return;
        }
        for r in [self.layout.w1(), self.layout.w2()] {
            for i in r {
                grad[i] += weight_decay * self.params[i];
            }
        }
    }

    /// Backward pass for one example; adds its (un-averaged) gradient into
    /// `grad` and returns the example's cross-entropy. `dropout` carries the
    /// per-dimension keep-scales applied to the pooled representation
    /// (`None` disables dropout).
    fn accumulate_example(
        &self,
        tokens: &[u32],
        label: usize,
        dropout: Option<&[f64]>,
        grad: &mut [f64],
    ) -> f64 {
        let Layout { d, h, c, .. } = self.layout;
        let w1_range = self.layout.w1();
        let b1_range = self.layout.b1();
        let w2_range = self.layout.w2();
        let b2_range = self.layout.b2();

        let mut pooled = self.mean_embedding(tokens);
        if let Some(scales) = dropout {
            for (p, s) in pooled.iter_mut().zip(scales) {
                *p *= s;
            }
        }
        let (hidden, probs) = self.forward_from_pooled(&pooled);
        let loss = -probs[label].ln();

        // d loss / d logits
        let mut dz2 = probs;
        dz2[label] -= 1.0;

        let w1 = &self.params[w1_range.clone()];
        let w2 = &self.params[w2_range.clone()];

        // head
        for (k, &g2) in dz2.iter().enumerate() {
            grad[b2_range.start + k] += g2;
        }
        let mut da = vec![0.0; h];
        for (j, &a) in hidden.iter().enumerate() {
            for (k, &g2) in dz2.iter().enumerate() {
                grad[w2_range.start + j * c + k] += a * g2;
                da[j] += w2[j * c + k] * g2;
            }
        }
        // hidden layer (tanh')
        let mut dz1 = vec![0.0; h];
        for j in 0..h {
            dz1[j] = da[j] * (1.0 - hidden[j] * hidden[j]);
        }
        for (j, &g1) in dz1.iter().enumerate() {
            grad[b1_range.start + j] += g1;
        }
        let mut dpooled = vec![0.0; d];
        for i in 0..d {
            let p = pooled[i];
            for (j, &g1) in dz1.iter().enumerate() {
                grad[w1_range.start + i * h + j] += p * g1;
                dpooled[i] += w1[i * h + j] * g1;
            }
        }
        if let Some(scales) = dropout {
            for (dp, s) in dpooled.iter_mut().zip(scales) {
                *dp *= s;
            }
        }
        // embeddings: each token occurrence receives dpooled / n
        let inv_len = 1.0 / tokens.len() as f64;
        for &t in tokens {
            let base = t as usize * d;
            for (i, &dp) in dpooled.iter().enumerate() {
                grad[base + i] += dp * inv_len;
            }
        }
        loss
    }

    /// Trains with mini-batch Adam, keeping the checkpoint with the best
    /// dev accuracy (ties go to the earlier epoch) and stopping early after
    /// `early_stop_patience` epochs without improvement.
    pub fn train(
        mut self,
        train_set: &LabeledDataset,
        dev_set: &LabeledDataset,
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainReport)> {
        cfg.validate()?;
        if train_set.is_empty() || dev_set.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (ex, _) in train_set.examples().iter().chain(dev_set.examples()) {
            self.check_tokens(&ex.tokens, &format!("example {:?}", ex.id))?;
        }

        let n = train_set.len();
        let steps_per_epoch = n.div_ceil(cfg.batch_size);
        let total_steps = (cfg.max_epochs * steps_per_epoch) as u64;
        let warmup_steps = ((total_steps as f64 * cfg.warmup_frac).round() as u64).max(1);

        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "shuffle"));
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "dropout"));

        let mut adam = AdamState::new(self.layout.total());
        let mut indices: Vec<usize> = (0..n).collect();
        let mut grad = vec![0.0; self.layout.total()];

        // the incoming parameters count as the epoch-0 baseline checkpoint,
        // so a phase that never improves dev returns its input unchanged
        let baseline_dev_accuracy = self.evaluate(dev_set)?;
        let mut report = TrainReport {
            train_loss: Vec::new(),
            dev_accuracy: Vec::new(),
            baseline_dev_accuracy,
            best_epoch: None,
            distinct_train_ids: train_set
                .ids()
                .collect::<std::collections::HashSet<_>>()
                .len(),
        };
        let mut best_acc = baseline_dev_accuracy;
        let mut best_params: Vec<f64> = self.params.clone();
        let mut epochs_since_best = 0usize;

        'epochs: for epoch in 0..cfg.max_epochs {
            use rand::seq::SliceRandom;
            indices.shuffle(&mut shuffle_rng);
            let mut epoch_loss = 0.0;
            for chunk in indices.chunks(cfg.batch_size) {
                grad.fill(0.0);
                let mut batch_loss = 0.0;
                for &idx in chunk {
                    let (ex, label) = &train_set.examples()[idx];
                    let scales = draw_dropout(&mut dropout_rng, self.layout.d, cfg.dropout_rate);
                    batch_loss += self.accumulate_example(
                        &ex.tokens,
                        *label,
                        scales.as_deref(),
                        &mut grad,
                    );
                }
                if !batch_loss.is_finite() {
                    return Err(Error::NonFiniteLoss { step: adam.t + 1 });
                }
                epoch_loss += batch_loss;
                let inv = 1.0 / chunk.len() as f64;
                for g in &mut grad {
                    *g *= inv;
                }
                self.add_weight_decay(cfg.weight_decay, &mut grad);
                let lr = cfg.learning_rate * lr_scale(adam.t + 1, warmup_steps, total_steps);
                adam.step(&mut self.params, &grad, lr, cfg);
            }
            report.train_loss.push(epoch_loss / n as f64);
            let dev_acc = self.evaluate(dev_set)?;
            report.dev_accuracy.push(dev_acc);
            if dev_acc > best_acc {
                best_acc = dev_acc;
                best_params.copy_from_slice(&self.params);
                report.best_epoch = Some(epoch);
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= cfg.early_stop_patience {
                    break 'epochs;
                }
            }
        }
        self.params = best_params;
        Ok((self, report))
    }
}

fn draw_dropout(rng: &mut ChaCha8Rng, d: usize, rate: f64) -> Option<Vec<f64>> {
    if rate == 0.0 {
        return None;
    }
    let keep_scale = 1.0 / (1.0 - rate);
    Some(
        (0..d)
            .map(|_| {
                if rng.random::<f64>() < rate {
                    0.0
                } else {
                    keep_scale
                }
            })
            .collect(),
    )
}

/// Linear warmup to 1.0 over `warmup` steps, then linear decay toward zero
/// at the end of the planned step budget. `t` is 1-based.
fn lr_scale(t: u64, warmup: u64, total: u64) -> f64 {
    if t <= warmup {
        t as f64 / warmup as f64
    } else if total <= warmup {
        1.0
    } else {
        ((total - t + 1) as f64 / (total - warmup) as f64).clamp(0.0, 1.0)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the maximum entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let b1 = cfg.adam_beta1;
        let b2 = cfg.adam_beta2;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
}
