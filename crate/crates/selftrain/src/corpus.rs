//! Dataset ingestion, tokenization, vocabulary construction, vectorization
//! and stratified subsampling of labeled sets.
//!
//! All operations here are pure and deterministic given their inputs (and a
//! seed where one is taken), so datasets can be rebuilt bit-identically and
//! shared freely across threads.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{stable_hash64, StableHasher};

/// Padding token id. Never appears inside a vectorized sequence.
pub const PAD_ID: u32 = 0;
/// Out-of-vocabulary token id.
pub const UNK_ID: u32 = 1;
/// Mask token id, used by masked-token pretraining.
pub const MASK_ID: u32 = 2;

const NUM_SPECIALS: usize = 3;

/// Default truncation bound applied by [`vectorize`].
pub const DEFAULT_MAX_LEN: usize = 256;

/// A single document. `tokens` is empty until the example is vectorized
/// against a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<u32>,
}

impl Example {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            tokens: Vec::new(),
        }
    }
}

/// Ordered class-name list; class index = position in the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    names: Vec<String>,
}

impl LabelMap {
    pub fn new(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name_of(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(|s| s.as_str())
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }
}

/// The labeled set: examples paired with gold class indices in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    examples: Vec<(Example, usize)>,
    num_classes: usize,
}

impl LabeledDataset {
    /// Builds a dataset, checking that labels are in range and ids are
    /// pairwise distinct.
    pub fn new(examples: Vec<(Example, usize)>, num_classes: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(examples.len());
        for (ex, label) in &examples {
            if *label >= num_classes {
                return Err(Error::ConfigInvalid {
                    field: "label".into(),
                    reason: format!("label {label} out of range for {num_classes} classes"),
                });
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::IdCollision { id: ex.id.clone() });
            }
        }
        Ok(Self {
            examples,
            num_classes,
        })
    }

    pub fn examples(&self) -> &[(Example, usize)] {
        &self.examples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|(ex, _)| ex.id.as_str())
    }

    /// Number of examples per class, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for (_, label) in &self.examples {
            counts[*label] += 1;
        }
        counts
    }

    /// Stable hash over ids, texts, labels and token ids.
    pub fn content_hash(&self) -> u64 {
        let mut h = StableHasher::new();
        h.update_u64(self.num_classes as u64);
        for (ex, label) in &self.examples {
            h.update_str(&ex.id).update_str(&ex.text);
            h.update_u64(*label as u64);
            for t in &ex.tokens {
                h.update_u64(u64::from(*t));
            }
        }
        h.finish()
    }
}

/// The in-domain unlabeled set U (or a general corpus standing in for a
/// much larger open-domain one).
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledPool {
    examples: Vec<Example>,
}

impl UnlabeledPool {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::IdCollision { id: ex.id.clone() });
            }
        }
        Ok(Self { examples })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|ex| ex.id.as_str())
    }

    pub fn content_hash(&self) -> u64 {
        let mut h = StableHasher::new();
        for ex in &self.examples {
            h.update_str(&ex.id).update_str(&ex.text);
            for t in &ex.tokens {
                h.update_u64(u64::from(*t));
            }
        }
        h.finish()
    }

    /// Seeded uniform subsample of `n` pool examples, without replacement,
    /// in original pool order. Returns the whole pool when `n >= len`.
    pub fn sample(&self, n: usize, seed: u64) -> UnlabeledPool {
        if n >= self.examples.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..self.examples.len()).collect();
        indices.shuffle(&mut rng);
        let mut picked: Vec<usize> = indices.into_iter().take(n).collect();
        picked.sort_unstable();
        UnlabeledPool {
            examples: picked.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }
}

/// Token/id mapping with dense ids. Ids 0..=2 are the PAD/UNK/MASK
/// specials; no corpus token maps to a special id.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    max_size: usize,
    min_freq: usize,
}

impl Vocab {
    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Id for `token`, falling back to UNK.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(|s| s.as_str())
    }

    /// Total number of ids including the three specials.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    /// Stable hash of the full id ordering plus construction parameters.
    /// Models and pretrained initializers record this to detect use with a
    /// different vocabulary.
    pub fn content_hash(&self) -> u64 {
        let mut h = StableHasher::new();
        h.update_u64(self.max_size as u64);
        h.update_u64(self.min_freq as u64);
        for tok in &self.id_to_token {
            h.update_str(tok);
        }
        h.finish()
    }
}

/// Lowercases, splits on whitespace, and splits leading/trailing ASCII
/// punctuation of each chunk into separate single-character tokens.
/// Interior punctuation (as in "don't") is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    for chunk in lowered.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let first_core = chars.iter().position(|c| !c.is_ascii_punctuation());
        match first_core {
            None => {
                // all punctuation: one token per character
                out.extend(chars.iter().map(|c| c.to_string()));
            }
            Some(start) => {
                let end = chars
                    .iter()
                    .rposition(|c| !c.is_ascii_punctuation())
                    .expect("start exists, so rposition exists");
                out.extend(chars[..start].iter().map(|c| c.to_string()));
                out.push(chars[start..=end].iter().collect());
                out.extend(chars[end + 1..].iter().map(|c| c.to_string()));
            }
        }
    }
    out
}

/// Builds a vocabulary from token sequences. Tokens are ranked by
/// (frequency desc, token lexicographic asc); the top `max_size - 3` that
/// occur at least `min_freq` times are kept after the three specials.
///
/// `max_size` must be at least 4 (room for the specials plus one token).
pub fn build_vocab<I, T>(sequences: I, max_size: usize, min_freq: usize) -> Vocab
where
    I: IntoIterator<Item = T>,
    T: IntoIterator<Item = String>,
{
    assert!(max_size >= NUM_SPECIALS + 1, "max_size must be >= 4");
    let mut freq: HashMap<String, usize> = HashMap::new();
    for seq in sequences {
        for tok in seq {
            *freq.entry(tok).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = freq
        .into_iter()
        .filter(|(_, count)| *count >= min_freq)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size - NUM_SPECIALS);

    let mut id_to_token: Vec<String> =
        vec!["<pad>".to_string(), "<unk>".to_string(), "<mask>".to_string()];
    id_to_token.extend(ranked.into_iter().map(|(tok, _)| tok));
    let token_to_id = id_to_token
        .iter()
        .enumerate()
        .skip(NUM_SPECIALS)
        .map(|(i, tok)| (tok.clone(), i as u32))
        .collect();
    Vocab {
        token_to_id,
        id_to_token,
        max_size,
        min_freq,
    }
}

fn vectorize_example(ex: &mut Example, vocab: &Vocab, max_len: usize) -> Result<()> {
    let tokens: Vec<u32> = tokenize(&ex.text)
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
    Ok(())
}

/// Populates token ids for every example in a labeled dataset.
/// Out-of-vocabulary tokens map to UNK; documents are truncated to
/// `max_len` tokens.
pub fn vectorize(dataset: &mut LabeledDataset, vocab: &Vocab, max_len: usize) -> Result<()> {
    for (ex, _) in &mut dataset.examples {
        vectorize_example(ex, vocab, max_len)?;
    }
    Ok(())
}

/// [`vectorize`] for unlabeled pools.
pub fn vectorize_pool(pool: &mut UnlabeledPool, vocab: &Vocab, max_len: usize) -> Result<()> {
    for ex in &mut pool.examples {
        vectorize_example(ex, vocab, max_len)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawLine {
    text: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    id: Option<String>,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, RawLine)>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path_str.clone());
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut raw: RawLine =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path_str.clone(),
                line: line_no,
                reason: e.to_string(),
            })?;
        if tokenize(&raw.text).is_empty() {
            return Err(Error::EmptyText {
                at: format!("{path_str}:{line_no}"),
            });
        }
        if raw.id.is_none() {
            raw.id = Some(format!("{file_name}:{line_no}"));
        }
        rows.push((line_no, raw));
    }
    Ok(rows)
}

/// Loads a labeled JSONL file: one object per line with required "text"
/// and "label" fields and an optional "id". Line order is preserved.
pub fn load_labeled_jsonl(path: &Path, label_map: &LabelMap) -> Result<LabeledDataset> {
    let path_str = path.display().to_string();
    let mut examples = Vec::new();
    for (line_no, raw) in read_lines(path)? {
        let label_name = raw.label.ok_or_else(|| Error::MalformedLine {
            path: path_str.clone(),
            line: line_no,
            reason: "missing \"label\" field".into(),
        })?;
        let label = label_map
            .index_of(&label_name)
            .ok_or(Error::UnknownLabel { value: label_name })?;
        examples.push((Example::new(raw.id.expect("id synthesized"), raw.text), label));
    }
    LabeledDataset::new(examples, label_map.num_classes())
}

/// Loads an unlabeled JSONL file ("label" fields, if present, are ignored).
pub fn load_unlabeled_jsonl(path: &Path) -> Result<UnlabeledPool> {
    let mut examples = Vec::new();
    for (_, raw) in read_lines(path)? {
        examples.push(Example::new(raw.id.expect("id synthesized"), raw.text));
    }
    UnlabeledPool::new(examples)
}

/// Class-balanced subsample: exactly `n / C` (floor) examples per class,
/// drawn without replacement by a seeded shuffle of each class's examples.
/// Output order is class 0 picks, then class 1 picks, and so on.
pub fn sample_labeled_subset(
    dataset: &LabeledDataset,
    n: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    let c = dataset.num_classes;
    let per_class = n / c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(per_class * c);
    for class in 0..c {
        let mut indices: Vec<usize> = dataset
            .examples
            .iter()
            .enumerate()
            .filter(|(_, (_, label))| *label == class)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < per_class {
            return Err(Error::InsufficientClass {
                label: class,
                available: indices.len(),
                needed: per_class,
            });
        }
        indices.shuffle(&mut rng);
        for &i in indices.iter().take(per_class) {
            picked.push(dataset.examples[i].clone());
        }
    }
    Ok(LabeledDataset {
        examples: picked,
        num_classes: c,
    })
}

/// Stable hash of a raw text corpus file's logical content, used in run
/// manifests.
pub fn file_content_hash(path: &Path) -> Result<u64> {
    Ok(stable_hash64(&std::fs::read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_jsonl(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    fn binary_map() -> LabelMap {
        LabelMap::new(vec!["neg".into(), "pos".into()])
    }

    #[test]
    fn tokenize_splits_edge_punctuation() {
        assert_eq!(tokenize("Good movie!"), vec!["good", "movie", "!"]);
    }

    #[test]
    fn tokenize_empty_input() {
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("   \t\n"), Vec::<String>::new());
    }

    #[test]
    fn tokenize_keeps_interior_apostrophe() {
        // interior apostrophe is not leading/trailing punctuation
        assert_eq!(tokenize("don't stop"), vec!["don't", "stop"]);
    }

    #[test]
    fn tokenize_all_punctuation_chunk() {
        assert_eq!(tokenize("-- ok"), vec!["-", "-", "ok"]);
        assert_eq!(tokenize("(hello)!"), vec!["(", "hello", ")", "!"]);
    }

    #[test]
    fn tokenize_is_deterministic() {
        let text = "It's GREAT, really -- (no joke)!";
        assert_eq!(tokenize(text), tokenize(text));
    }

    #[test]
    fn build_vocab_small_corpus() {
        let vocab = build_vocab(vec![tokenize("a a b")], 10, 1);
        assert_eq!(vocab.len(), 5);
        assert_eq!(vocab.id("a"), Some(3)); // highest frequency just after specials
        assert_eq!(vocab.id("b"), Some(4));
        assert_eq!(vocab.token(PAD_ID), Some("<pad>"));
        assert_eq!(vocab.token(UNK_ID), Some("<unk>"));
        assert_eq!(vocab.token(MASK_ID), Some("<mask>"));
    }

    #[test]
    fn build_vocab_min_freq_filters_everything() {
        let vocab = build_vocab(vec![tokenize("a b")], 10, 2);
        assert_eq!(vocab.len(), 3); // specials only
        assert_eq!(vocab.id("a"), None);
    }

    #[test]
    fn build_vocab_lexicographic_tie_break() {
        // "x" and "y" each occur 3 times; room for exactly one
        let seqs = vec![
            tokenize("x y"),
            tokenize("x y"),
            tokenize("x y"),
        ];
        let vocab = build_vocab(seqs, 4, 1);
        assert_eq!(vocab.len(), 4);
        assert_eq!(vocab.id("x"), Some(3));
        assert_eq!(vocab.id("y"), None);
    }

    #[test]
    fn vectorize_maps_oov_to_unk_and_truncates() {
        let vocab = build_vocab(vec![tokenize("good good movie")], 16, 1);
        let mut ds = LabeledDataset::new(
            vec![(Example::new("a", "good zzz"), 0)],
            2,
        )
        .unwrap();
        vectorize(&mut ds, &vocab, DEFAULT_MAX_LEN).unwrap();
        assert_eq!(ds.examples()[0].0.tokens, vec![vocab.id("good").unwrap(), UNK_ID]);

        let long_text = vec!["good"; 300].join(" ");
        let mut ds = LabeledDataset::new(vec![(Example::new("b", long_text), 0)], 2).unwrap();
        vectorize(&mut ds, &vocab, 256).unwrap();
        assert_eq!(ds.examples()[0].0.tokens.len(), 256);
    }

    #[test]
    fn vectorize_never_emits_pad_or_mask() {
        let vocab = build_vocab(vec![tokenize("alpha beta gamma")], 16, 1);
        let mut pool = UnlabeledPool::new(vec![
            Example::new("a", "alpha unknown beta!"),
            Example::new("b", "<pad> <mask> gamma"),
        ])
        .unwrap();
        vectorize_pool(&mut pool, &vocab, DEFAULT_MAX_LEN).unwrap();
        for ex in pool.examples() {
            assert!(!ex.tokens.is_empty());
            assert!(ex.tokens.iter().all(|&t| t != PAD_ID && t != MASK_ID));
        }
    }

    #[test]
    fn load_labeled_parses_and_counts_classes() {
        let f = write_jsonl(&[
            r#"{"text":"good movie","label":"pos"}"#,
            r#"{"text":"bad movie","label":"neg"}"#,
            r#"{"text":"fine movie","label":"pos"}"#,
        ]);
        let ds = load_labeled_jsonl(f.path(), &binary_map()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.class_counts(), vec![1, 2]);
        // ids synthesized from file name and line number
        let ids: Vec<&str> = ds.ids().collect();
        assert!(ids[0].ends_with(":1") && ids[2].ends_with(":3"));
        // pairwise distinct
        let set: HashSet<&str> = ids.iter().copied().collect();
        assert_eq!(set.len(), ds.len());
    }

    #[test]
    fn load_labeled_missing_label_is_malformed() {
        let f = write_jsonl(&[r#"{"text":"no label here"}"#]);
        match load_labeled_jsonl(f.path(), &binary_map()) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn load_labeled_bad_json_is_malformed() {
        let f = write_jsonl(&[r#"{"text": "ok", "label": "pos"}"#, "{not json"]);
        match load_labeled_jsonl(f.path(), &binary_map()) {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn load_labeled_unknown_label() {
        let f = write_jsonl(&[r#"{"text":"x","label":"meh"}"#]);
        match load_labeled_jsonl(f.path(), &binary_map()) {
            Err(Error::UnknownLabel { value }) => assert_eq!(value, "meh"),
            other => panic!("expected UnknownLabel, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_empty_text() {
        let f = write_jsonl(&[r#"{"text":"   ","label":"pos"}"#]);
        assert!(matches!(
            load_labeled_jsonl(f.path(), &binary_map()),
            Err(Error::EmptyText { .. })
        ));
    }

    #[test]
    fn load_twice_is_identical() {
        let f = write_jsonl(&[
            r#"{"text":"good","label":"pos","id":"a"}"#,
            r#"{"text":"bad","label":"neg","id":"b"}"#,
        ]);
        let a = load_labeled_jsonl(f.path(), &binary_map()).unwrap();
        let b = load_labeled_jsonl(f.path(), &binary_map()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn load_duplicate_ids_rejected() {
        let f = write_jsonl(&[
            r#"{"text":"x","label":"pos","id":"dup"}"#,
            r#"{"text":"y","label":"neg","id":"dup"}"#,
        ]);
        assert!(matches!(
            load_labeled_jsonl(f.path(), &binary_map()),
            Err(Error::IdCollision { .. })
        ));
    }

    fn balanced_dataset(n_per_class: usize) -> LabeledDataset {
        let mut examples = Vec::new();
        for i in 0..n_per_class {
            examples.push((Example::new(format!("p{i}"), "good stuff"), 1));
            examples.push((Example::new(format!("n{i}"), "bad stuff"), 0));
        }
        LabeledDataset::new(examples, 2).unwrap()
    }

    #[test]
    fn subset_is_exactly_stratified() {
        let ds = balanced_dataset(50);
        let sub = sample_labeled_subset(&ds, 10, 7).unwrap();
        assert_eq!(sub.len(), 10);
        assert_eq!(sub.class_counts(), vec![5, 5]);
    }

    #[test]
    fn subset_is_deterministic() {
        let ds = balanced_dataset(50);
        let a = sample_labeled_subset(&ds, 10, 7).unwrap();
        let b = sample_labeled_subset(&ds, 10, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_labeled_subset(&ds, 10, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subset_rounds_down_per_class() {
        // n=10 with C=3 gives floor(10/3)=3 per class, size 9
        let mut examples = Vec::new();
        for i in 0..12 {
            examples.push((Example::new(format!("e{i}"), "text here"), i % 3));
        }
        let ds = LabeledDataset::new(examples, 3).unwrap();
        let sub = sample_labeled_subset(&ds, 10, 1).unwrap();
        assert_eq!(sub.len(), 9);
        assert_eq!(sub.class_counts(), vec![3, 3, 3]);
    }

    #[test]
    fn subset_insufficient_class() {
        let mut examples = vec![(Example::new("only", "lonely"), 0)];
        for i in 0..10 {
            examples.push((Example::new(format!("p{i}"), "fine"), 1));
        }
        let ds = LabeledDataset::new(examples, 2).unwrap();
        match sample_labeled_subset(&ds, 4, 0) {
            Err(Error::InsufficientClass { label, available, needed }) => {
                assert_eq!((label, available, needed), (0, 1, 2));
            }
            other => panic!("expected InsufficientClass, got {other:?}"),
        }
    }

    #[test]
    fn pool_sample_is_seeded_and_ordered() {
        let pool = UnlabeledPool::new(
            (0..100)
                .map(|i| Example::new(format!("u{i}"), "some text"))
                .collect(),
        )
        .unwrap();
        let a = pool.sample(10, 3);
        let b = pool.sample(10, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        // original order preserved
        let idx: Vec<usize> = a
            .ids()
            .map(|id| id[1..].parse::<usize>().unwrap())
            .collect();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        assert_eq!(idx, sorted);
        // full-pool request is the identity
        assert_eq!(pool.sample(1000, 3), pool);
    }
}
