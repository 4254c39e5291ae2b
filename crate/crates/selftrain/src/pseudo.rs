//! Teacher-based labeling of the unlabeled pool and construction of the
//! pseudo-labeled dataset D' under two selection rules: label everything
//! (naive) or keep the top-K most confident examples per class.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, LabeledDataset, UnlabeledPool};
use crate::error::{Error, Result};
use crate::hash::StableHasher;
use crate::model::ClassifierModel;

/// One pool example's teacher scores. `confidence` is the maximum softmax
/// probability; `predicted_label` its argmax (ties to the lowest class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub id: String,
    pub predicted_label: usize,
    pub confidence: f64,
    pub probs: Vec<f64>,
}

/// Teacher scores for every pool example, in pool order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPool {
    entries: Vec<ScoredEntry>,
    num_classes: usize,
    teacher_hash: u64,
}

impl ScoredPool {
    /// Builds a scored pool from precomputed entries (e.g. hand-written
    /// probability tables in tests).
    pub fn from_parts(entries: Vec<ScoredEntry>, num_classes: usize, teacher_hash: u64) -> Self {
        Self {
            entries,
            num_classes,
            teacher_hash,
        }
    }

    pub fn entries(&self) -> &[ScoredEntry] {
        &self.entries
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn teacher_hash(&self) -> u64 {
        self.teacher_hash
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// How D' is selected from a scored pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Keep every pool example with its argmax label.
    Naive,
    /// Keep the top-K per class by that class's probability.
    TopK(usize),
}

impl SelectionRule {
    pub fn describe(&self) -> String {
        match self {
            SelectionRule::Naive => "naive".to_string(),
            SelectionRule::TopK(k) => format!("top_k({k})"),
        }
    }
}

/// Provenance for a pseudo-labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoProvenance {
    pub teacher_hash: u64,
    pub strategy: String,
    pub k: Option<usize>,
}

/// D': pool examples with teacher-assigned labels and the probability the
/// teacher gave the assigned class.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabeledDataset {
    examples: Vec<(Example, usize, f64)>,
    num_classes: usize,
    provenance: PseudoProvenance,
}

impl PseudoLabeledDataset {
    pub fn examples(&self) -> &[(Example, usize, f64)] {
        &self.examples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn provenance(&self) -> &PseudoProvenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for (_, label, _) in &self.examples {
            counts[*label] += 1;
        }
        counts
    }

    /// Drops the confidences, yielding a plain labeled dataset for trainers.
    pub fn to_labeled(&self) -> Result<LabeledDataset> {
        LabeledDataset::new(
            self.examples
                .iter()
                .map(|(ex, label, _)| (ex.clone(), *label))
                .collect(),
            self.num_classes,
        )
    }

    pub fn content_hash(&self) -> u64 {
        let mut h = StableHasher::new();
        h.update_u64(self.provenance.teacher_hash);
        h.update_str(&self.provenance.strategy);
        for (ex, label, conf) in &self.examples {
            h.update_str(&ex.id);
            h.update_u64(*label as u64);
            h.update_u64(conf.to_bits());
        }
        h.finish()
    }

    /// Test-support constructor for building a D' directly from known
    /// labels (e.g. substituting an oracle teacher).
    pub fn from_parts(
        examples: Vec<(Example, usize, f64)>,
        num_classes: usize,
        provenance: PseudoProvenance,
    ) -> Self {
        Self {
            examples,
            num_classes,
            provenance,
        }
    }

    /// Reads a D' file written by [`PseudoLabeledDataset::save_jsonl`],
    /// restoring the sidecar provenance when present. Examples come back
    /// unvectorized.
    pub fn load_jsonl(path: &Path, num_classes: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            id: String,
            text: String,
            pseudo_label: usize,
            confidence: f64,
        }
        let text = std::fs::read_to_string(path)?;
        let mut examples = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                path: path.display().to_string(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
            if row.pseudo_label >= num_classes {
                return Err(Error::MalformedLine {
                    path: path.display().to_string(),
                    line: idx + 1,
                    reason: format!(
                        "pseudo_label {} out of range for {num_classes} classes",
                        row.pseudo_label
                    ),
                });
            }
            examples.push((Example::new(row.id, row.text), row.pseudo_label, row.confidence));
        }
        let sidecar = path.with_extension("provenance.json");
        let provenance = if sidecar.exists() {
            serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?
        } else {
            log::warn!("no provenance sidecar next to {}", path.display());
            PseudoProvenance {
                teacher_hash: 0,
                strategy: "unknown".into(),
                k: None,
            }
        };
        Ok(Self {
            examples,
            num_classes,
            provenance,
        })
    }

    /// Populates token ids for every example, as [`crate::corpus::vectorize`]
    /// does for labeled datasets.
    pub fn vectorize(&mut self, vocab: &crate::corpus::Vocab, max_len: usize) -> Result<()> {
        for (ex, _, _) in &mut self.examples {
            let tokens: Vec<u32> = crate::corpus::tokenize(&ex.text)
                .iter()
                .take(max_len)
                .map(|t| vocab.id_or_unk(t))
                .collect();
            if tokens.is_empty() {
                return Err(Error::EmptyText {
                    at: format!("example {:?}", ex.id),
                });
            }
            ex.tokens = tokens;
        }
        Ok(())
    }

    /// Writes D' as JSONL (id, text, pseudo_label, confidence) plus a
    /// `<path>.provenance.json` sidecar.
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            id: &'a str,
            text: &'a str,
            pseudo_label: usize,
            confidence: f64,
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (ex, label, conf) in &self.examples {
            let row = Row {
                id: &ex.id,
                text: &ex.text,
                pseudo_label: *label,
                confidence: *conf,
            };
            writeln!(f, "{}", serde_json::to_string(&row)?)?;
        }
        f.flush()?;
        let sidecar = path.with_extension("provenance.json");
        std::fs::write(sidecar, serde_json::to_string_pretty(&self.provenance)?)?;
        Ok(())
    }
}

/// Scores every pool example with the teacher. Entries may be evaluated
/// concurrently; output order always matches pool order.
pub fn label_pool(teacher: &ClassifierModel, pool: &UnlabeledPool) -> Result<ScoredPool> {
    let entries: Vec<ScoredEntry> = pool
        .examples()
        .par_iter()
        .map(|ex| {
            let probs = teacher.predict_proba(ex)?;
            let predicted = crate::model::argmax(&probs);
            Ok(ScoredEntry {
                id: ex.id.clone(),
                predicted_label: predicted,
                confidence: probs[predicted],
                probs,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScoredPool {
        entries,
        num_classes: teacher.num_classes(),
        teacher_hash: teacher.content_hash(),
    })
}

/// D' = the whole pool with argmax labels.
pub fn select_naive(scored: &ScoredPool, pool: &UnlabeledPool) -> PseudoLabeledDataset {
    let examples = scored
        .entries
        .iter()
        .zip(pool.examples())
        .map(|(entry, ex)| (ex.clone(), entry.predicted_label, entry.confidence))
        .collect();
    PseudoLabeledDataset {
        examples,
        num_classes: scored.num_classes,
        provenance: PseudoProvenance {
            teacher_hash: scored.teacher_hash,
            strategy: "naive".into(),
            k: None,
        },
    }
}

/// Per-class rankings of all pool entries by that class's probability
/// (descending), ties broken by ascending example id. These are the
/// pre-resolution lists that top-K selection consumes prefixes of.
pub fn ranked_by_class(scored: &ScoredPool) -> Vec<Vec<usize>> {
    (0..scored.num_classes)
        .map(|class| {
            let mut order: Vec<usize> = (0..scored.entries.len()).collect();
            order.sort_by(|&a, &b| {
                let (ea, eb) = (&scored.entries[a], &scored.entries[b]);
                eb.probs[class]
                    .partial_cmp(&ea.probs[class])
                    .expect("finite probabilities")
                    .then_with(|| ea.id.cmp(&eb.id))
            });
            order
        })
        .collect()
}

/// Top-K selection. Every class ranks the whole pool by its own class
/// probability and claims its top `min(K, |pool|)` entries; an entry
/// claimed by several classes goes to the class giving it the higher
/// probability (ties to the lower class index), and losing classes refill
/// from the next rank down, so per-class counts stay at K whenever the
/// pool allows.
pub fn select_top_k(
    scored: &ScoredPool,
    pool: &UnlabeledPool,
    k: usize,
) -> PseudoLabeledDataset {
    assert!(k >= 1, "top-K selection requires K >= 1");
    let n = scored.entries.len();
    let c = scored.num_classes;
    let target = k.min(n);
    let ranked = ranked_by_class(scored);

    // entry e prefers class a over class b on (probability, lower index)
    let prefers = |e: usize, a: usize, b: usize| -> bool {
        let pa = scored.entries[e].probs[a];
        let pb = scored.entries[e].probs[b];
        pa > pb || (pa == pb && a < b)
    };

    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut counts = vec![0usize; c];
    let mut cursor = vec![0usize; c];
    let mut pending: Vec<usize> = (0..c).rev().collect();
    while let Some(class) = pending.pop() {
        while counts[class] < target && cursor[class] < n {
            let entry = ranked[class][cursor[class]];
            cursor[class] += 1;
            match assigned[entry] {
                None => {
                    assigned[entry] = Some(class);
                    counts[class] += 1;
                }
                Some(holder) => {
                    if prefers(entry, class, holder) {
                        assigned[entry] = Some(class);
                        counts[class] += 1;
                        counts[holder] -= 1;
                        pending.push(holder);
                    }
                }
            }
        }
    }

    let examples = pool
        .examples()
        .iter()
        .enumerate()
        .filter_map(|(i, ex)| {
            assigned[i].map(|class| (ex.clone(), class, scored.entries[i].probs[class]))
        })
        .collect();
    PseudoLabeledDataset {
        examples,
        num_classes: c,
        provenance: PseudoProvenance {
            teacher_hash: scored.teacher_hash,
            strategy: "top_k".into(),
            k: Some(k),
        },
    }
}

/// Applies a selection rule.
pub fn select(
    scored: &ScoredPool,
    pool: &UnlabeledPool,
    rule: SelectionRule,
) -> PseudoLabeledDataset {
    match rule {
        SelectionRule::Naive => select_naive(scored, pool),
        SelectionRule::TopK(k) => select_top_k(scored, pool, k),
    }
}

/// Union of D (gold labels) and D' (pseudo labels), D first. Ids must be
/// disjoint.
pub fn merge(d: &LabeledDataset, d_prime: &PseudoLabeledDataset) -> Result<LabeledDataset> {
    let d_ids: HashSet<&str> = d.ids().collect();
    for (ex, _, _) in d_prime.examples() {
        if d_ids.contains(ex.id.as_str()) {
            return Err(Error::IdCollision { id: ex.id.clone() });
        }
    }
    let mut examples: Vec<(Example, usize)> = d.examples().to_vec();
    examples.extend(
        d_prime
            .examples()
            .iter()
            .map(|(ex, label, _)| (ex.clone(), *label)),
    );
    LabeledDataset::new(examples, d.num_classes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, tokenize, vectorize_pool, LabeledDataset};
    use crate::model::{ClassifierModel, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scored_from_probs(probs: &[(&str, Vec<f64>)]) -> ScoredPool {
        let entries = probs
            .iter()
            .map(|(id, p)| {
                let predicted = crate::model::argmax(p);
                ScoredEntry {
                    id: id.to_string(),
                    predicted_label: predicted,
                    confidence: p[predicted],
                    probs: p.clone(),
                }
            })
            .collect::<Vec<_>>();
        let num_classes = entries[0].probs.len();
        ScoredPool {
            entries,
            num_classes,
            teacher_hash: 0xfeed,
        }
    }

    fn pool_for(scored: &ScoredPool) -> UnlabeledPool {
        UnlabeledPool::new(
            scored
                .entries
                .iter()
                .map(|e| Example::new(e.id.clone(), format!("text {}", e.id)))
                .collect(),
        )
        .unwrap()
    }

    /// Direct transcription of the selection contract, used as the oracle:
    /// each class repeatedly takes the top-K prefix of its ranking among
    /// entries it has not lost, and every multiply-claimed entry is awarded
    /// to the class with the higher probability (ties to the lower class),
    /// until no conflicts remain.
    fn oracle_top_k(scored: &ScoredPool, k: usize) -> Vec<Option<usize>> {
        let n = scored.entries.len();
        let c = scored.num_classes;
        let target = k.min(n);
        let ranked = ranked_by_class(scored);
        let mut banned: Vec<HashSet<usize>> = vec![HashSet::new(); n];
        loop {
            let mut claims: Vec<Vec<usize>> = vec![Vec::new(); n];
            for class in 0..c {
                let mut taken = 0;
                for &e in &ranked[class] {
                    if taken == target {
                        break;
                    }
                    if !banned[e].contains(&class) {
                        claims[e].push(class);
                        taken += 1;
                    }
                }
            }
            let mut conflicted = false;
            for e in 0..n {
                if claims[e].len() > 1 {
                    conflicted = true;
                    let winner = *claims[e]
                        .iter()
                        .max_by(|&&a, &&b| {
                            scored.entries[e].probs[a]
                                .partial_cmp(&scored.entries[e].probs[b])
                                .unwrap()
                                .then_with(|| b.cmp(&a))
                        })
                        .unwrap();
                    for &loser in &claims[e] {
                        if loser != winner {
                            banned[e].insert(loser);
                        }
                    }
                }
            }
            if !conflicted {
                let mut assigned = vec![None; n];
                for e in 0..n {
                    if let Some(&class) = claims[e].first() {
                        assigned[e] = Some(class);
                    }
                }
                return assigned;
            }
        }
    }

    fn random_scored(rng: &mut ChaCha8Rng, n: usize, c: usize) -> ScoredPool {
        let entries = (0..n)
            .map(|i| {
                let raw: Vec<f64> = (0..c).map(|_| rng.random::<f64>() + 1e-3).collect();
                let sum: f64 = raw.iter().sum();
                let probs: Vec<f64> = raw.iter().map(|v| v / sum).collect();
                let predicted = crate::model::argmax(&probs);
                ScoredEntry {
                    id: format!("e{i:02}"),
                    predicted_label: predicted,
                    confidence: probs[predicted],
                    probs,
                }
            })
            .collect();
        ScoredPool {
            entries,
            num_classes: c,
            teacher_hash: 1,
        }
    }

    #[test]
    fn worked_binary_example() {
        // P(pos) = a:0.9 b:0.8 c:0.6 d:0.3 e:0.45 with classes (neg, pos)
        let scored = scored_from_probs(&[
            ("a", vec![0.1, 0.9]),
            ("b", vec![0.2, 0.8]),
            ("c", vec![0.4, 0.6]),
            ("d", vec![0.7, 0.3]),
            ("e", vec![0.55, 0.45]),
        ]);
        let pool = pool_for(&scored);
        let dp = select_top_k(&scored, &pool, 2);
        let mut by_class: Vec<Vec<&str>> = vec![Vec::new(); 2];
        for (ex, label, _) in dp.examples() {
            by_class[*label].push(&ex.id);
        }
        assert_eq!(by_class[1], vec!["a", "b"]); // pos picks
        assert_eq!(by_class[0], vec!["d", "e"]); // neg picks by P(neg)
    }

    #[test]
    fn k_covering_pool_assigns_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let n = 1 + (trial % 6);
            let scored = random_scored(&mut rng, n, 2);
            let pool = pool_for(&scored);
            let dp = select_top_k(&scored, &pool, n + 3);
            assert_eq!(dp.len(), n);
            for ((ex, label, conf), entry) in dp.examples().iter().zip(scored.entries()) {
                assert_eq!(ex.id, entry.id);
                assert_eq!(*label, entry.predicted_label);
                assert_eq!(*conf, entry.confidence);
            }
        }
    }

    #[test]
    fn double_tie_goes_to_class_zero() {
        let scored = scored_from_probs(&[("only", vec![0.5, 0.5])]);
        let pool = pool_for(&scored);
        let dp = select_top_k(&scored, &pool, 1);
        assert_eq!(dp.len(), 1);
        assert_eq!(dp.examples()[0].1, 0);
    }

    #[test]
    fn matches_oracle_on_random_pools() {
        // 1,000 seeded trials over pools of size <= 8, up to 3 classes
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..1000 {
            let n = 1 + rng.random_range(0..8);
            let c = 2 + rng.random_range(0..2);
            let k = 1 + rng.random_range(0..n + 2);
            let scored = random_scored(&mut rng, n, c);
            let pool = pool_for(&scored);
            let expected = oracle_top_k(&scored, k);
            let dp = select_top_k(&scored, &pool, k);
            let mut actual = vec![None; n];
            for (ex, label, _) in dp.examples() {
                let idx: usize = ex.id[1..].parse().unwrap();
                actual[idx] = Some(*label);
            }
            assert_eq!(
                actual, expected,
                "trial {trial}: n={n} c={c} k={k} diverged from oracle"
            );
        }
    }

    #[test]
    fn no_duplicates_and_counts_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = 1 + rng.random_range(0..12);
            let c = 2 + rng.random_range(0..2);
            let k = 1 + rng.random_range(0..6);
            let scored = random_scored(&mut rng, n, c);
            let pool = pool_for(&scored);
            let dp = select_top_k(&scored, &pool, k);
            let ids: HashSet<&str> =
                dp.examples().iter().map(|(ex, _, _)| ex.id.as_str()).collect();
            assert_eq!(ids.len(), dp.len(), "duplicate selection");
            let counts = dp.class_counts();
            assert!(counts.iter().all(|&cnt| cnt <= k.min(n)));
            if n >= c * k {
                assert!(counts.iter().all(|&cnt| cnt == k), "counts {counts:?}");
            }
        }
    }

    #[test]
    fn k_prefixes_are_monotone() {
        // the K1 prefix of each pre-resolution ranking is a prefix of the
        // K2 prefix for K1 < K2
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let scored = random_scored(&mut rng, 8, 3);
        let ranked = ranked_by_class(&scored);
        for list in &ranked {
            for k1 in 1..4 {
                for k2 in k1 + 1..6 {
                    assert_eq!(list[..k1.min(list.len())], list[..k2.min(list.len())][..k1.min(list.len())]);
                }
            }
        }
    }

    #[test]
    fn top_k_prefix_confidence_dominates_random_subsets() {
        // the pre-resolution top-K for class l has mean P(l) at least that
        // of any random equal-size selection
        let mut rng = ChaCha8Rng::seed_from_u64(401);
        for _ in 0..100 {
            let n = 2 + rng.random_range(0..8);
            let c = 2 + rng.random_range(0..2);
            let k = (1 + rng.random_range(0..n)).min(n);
            let scored = random_scored(&mut rng, n, c);
            let ranked = ranked_by_class(&scored);
            for class in 0..c {
                let top_mean: f64 = ranked[class][..k]
                    .iter()
                    .map(|&e| scored.entries[e].probs[class])
                    .sum::<f64>()
                    / k as f64;
                let mut indices: Vec<usize> = (0..n).collect();
                use rand::seq::SliceRandom;
                indices.shuffle(&mut rng);
                let random_mean: f64 = indices[..k]
                    .iter()
                    .map(|&e| scored.entries[e].probs[class])
                    .sum::<f64>()
                    / k as f64;
                assert!(top_mean >= random_mean - 1e-12);
            }
        }
    }

    #[test]
    fn naive_selection_keeps_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scored = random_scored(&mut rng, 100, 2);
        let pool = pool_for(&scored);
        let dp = select_naive(&scored, &pool);
        assert_eq!(dp.len(), 100);
        let mut predicted_counts = vec![0usize; 2];
        for e in scored.entries() {
            predicted_counts[e.predicted_label] += 1;
        }
        assert_eq!(dp.class_counts(), predicted_counts);

        let empty_scored = ScoredPool {
            entries: vec![],
            num_classes: 2,
            teacher_hash: 0,
        };
        let empty_pool = UnlabeledPool::new(vec![]).unwrap();
        assert_eq!(select_naive(&empty_scored, &empty_pool).len(), 0);
    }

    #[test]
    fn label_pool_is_deterministic_and_bounded() {
        let texts = ["good fun", "bad sad", "fun fun good", "sad bad awful", "mixed bag here"];
        let vocab = build_vocab(texts.iter().map(|t| tokenize(t)), 64, 1);
        let mut pool = UnlabeledPool::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Example::new(format!("u{i}"), *t))
                .collect(),
        )
        .unwrap();
        vectorize_pool(&mut pool, &vocab, 32).unwrap();
        let teacher = ClassifierModel::random(&vocab, 3, &ModelConfig::default(), 8);
        let a = label_pool(&teacher, &pool).unwrap();
        let b = label_pool(&teacher, &pool).unwrap();
        assert_eq!(a, b);
        for (entry, ex) in a.entries().iter().zip(pool.examples()) {
            assert_eq!(entry.id, ex.id); // pool order preserved
            assert!(entry.confidence >= 1.0 / 3.0 - 1e-12 && entry.confidence <= 1.0);
            assert_eq!(entry.confidence, entry.probs[entry.predicted_label]);
        }
    }

    #[test]
    fn uniform_teacher_labels_class_zero() {
        let texts = ["alpha beta", "gamma delta"];
        let vocab = build_vocab(texts.iter().map(|t| tokenize(t)), 64, 1);
        let mut pool = UnlabeledPool::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Example::new(format!("u{i}"), *t))
                .collect(),
        )
        .unwrap();
        vectorize_pool(&mut pool, &vocab, 32).unwrap();
        let mut teacher = ClassifierModel::random(&vocab, 4, &ModelConfig::default(), 8);
        let n = teacher.num_params();
        let head_start = teacher.vocab_size() * teacher.embedding_dim()
            + teacher.embedding_dim() * teacher.hidden_dim()
            + teacher.hidden_dim();
        teacher.params_mut()[head_start..n].fill(0.0);
        let scored = label_pool(&teacher, &pool).unwrap();
        for entry in scored.entries() {
            assert_eq!(entry.predicted_label, 0);
            assert!((entry.confidence - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_unions_with_gold_first() {
        let d = LabeledDataset::new(
            vec![
                (Example::new("d0", "gold one"), 0),
                (Example::new("d1", "gold two"), 1),
            ],
            2,
        )
        .unwrap();
        let dp = PseudoLabeledDataset::from_parts(
            vec![
                (Example::new("u0", "pseudo one"), 1, 0.9),
                (Example::new("u1", "pseudo two"), 0, 0.8),
            ],
            2,
            PseudoProvenance {
                teacher_hash: 0,
                strategy: "naive".into(),
                k: None,
            },
        );
        let merged = merge(&d, &dp).unwrap();
        assert_eq!(merged.len(), 4);
        assert_eq!(merged.examples()[0].0.id, "d0");
        assert_eq!(merged.examples()[0].1, 0);
        assert_eq!(merged.examples()[3].0.id, "u1");

        let empty = PseudoLabeledDataset::from_parts(
            vec![],
            2,
            PseudoProvenance {
                teacher_hash: 0,
                strategy: "naive".into(),
                k: None,
            },
        );
        assert_eq!(merge(&d, &empty).unwrap(), d);
    }

    #[test]
    fn merge_rejects_id_collisions() {
        let d = LabeledDataset::new(vec![(Example::new("same", "gold"), 0)], 2).unwrap();
        let dp = PseudoLabeledDataset::from_parts(
            vec![(Example::new("same", "pseudo"), 1, 0.7)],
            2,
            PseudoProvenance {
                teacher_hash: 0,
                strategy: "naive".into(),
                k: None,
            },
        );
        assert!(matches!(merge(&d, &dp), Err(Error::IdCollision { .. })));
    }

    #[test]
    fn dprime_jsonl_roundtrips() {
        let dp = PseudoLabeledDataset::from_parts(
            vec![
                (Example::new("u0", "some text"), 1, 0.92),
                (Example::new("u1", "more text"), 0, 0.61),
            ],
            2,
            PseudoProvenance {
                teacher_hash: 42,
                strategy: "top_k".into(),
                k: Some(1),
            },
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dprime.jsonl");
        dp.save_jsonl(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let rows: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["id"], "u0");
        assert_eq!(rows[0]["pseudo_label"], 1);
        assert_eq!(rows[1]["confidence"], 0.61);
        let sidecar: PseudoProvenance = serde_json::from_str(
            &std::fs::read_to_string(path.with_extension("provenance.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(sidecar, *dp.provenance());
    }
}
