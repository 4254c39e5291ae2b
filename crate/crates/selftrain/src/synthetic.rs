//! Synthetic binary text-classification task used by the validation suite
//! and handy for demos: each class draws documents from its own unigram
//! distribution over a fixed vocabulary, with a configurable fraction of
//! probability mass on tokens shared between the classes.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Example, LabeledDataset, UnlabeledPool};
use crate::error::Result;

/// Generator parameters. Defaults: 2,000 token types, 30% shared mass,
/// documents of 30 to 80 tokens, two classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTask {
    pub vocab_size: usize,
    /// Probability mass each class puts on the shared token block.
    pub shared_mass: f64,
    /// Number of token types in the shared block; the rest split evenly
    /// into two class-specific blocks.
    pub shared_types: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            vocab_size: 2000,
            shared_mass: 0.3,
            shared_types: 600,
            min_len: 30,
            max_len: 80,
        }
    }
}

pub const CLASS_NAMES: [&str; 2] = ["neg", "pos"];

impl SyntheticTask {
    pub fn num_classes(&self) -> usize {
        2
    }

    fn specific_types(&self) -> usize {
        (self.vocab_size - self.shared_types) / 2
    }

    fn draw_token(&self, class: usize, rng: &mut ChaCha8Rng) -> String {
        let type_id = if rng.random::<f64>() < self.shared_mass {
            rng.random_range(0..self.shared_types)
        } else {
            let specific = self.specific_types();
            self.shared_types + class * specific + rng.random_range(0..specific)
        };
        format!("w{type_id:04}")
    }

    /// One document of `class`, 30-80 tokens by default.
    pub fn document(&self, class: usize, rng: &mut ChaCha8Rng) -> String {
        let len = rng.random_range(self.min_len..=self.max_len);
        let words: Vec<String> = (0..len).map(|_| self.draw_token(class, rng)).collect();
        words.join(" ")
    }

    /// Balanced labeled set of `2 * n_per_class` documents, classes
    /// interleaved. Unvectorized; callers build a vocab and vectorize.
    pub fn labeled(&self, n_per_class: usize, seed: u64, id_prefix: &str) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(2 * n_per_class);
        for i in 0..n_per_class {
            for class in 0..2 {
                rows.push((
                    Example::new(
                        format!("{id_prefix}{}", 2 * i + class),
                        self.document(class, &mut rng),
                    ),
                    class,
                ));
            }
        }
        LabeledDataset::new(rows, 2).expect("generated ids are distinct")
    }

    /// Unlabeled pool of `n` documents with classes drawn uniformly;
    /// returns the true labels alongside for oracle-teacher experiments.
    pub fn pool(&self, n: usize, seed: u64, id_prefix: &str) -> (UnlabeledPool, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut examples = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = rng.random_range(0..2usize);
            examples.push(Example::new(
                format!("{id_prefix}{i}"),
                self.document(class, &mut rng),
            ));
            labels.push(class);
        }
        (
            UnlabeledPool::new(examples).expect("generated ids are distinct"),
            labels,
        )
    }

    /// Writes a labeled split as JSONL with "neg"/"pos" label names.
    pub fn write_labeled_jsonl(
        &self,
        path: &Path,
        n_per_class: usize,
        seed: u64,
        id_prefix: &str,
    ) -> Result<()> {
        let ds = self.labeled(n_per_class, seed, id_prefix);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (ex, label) in ds.examples() {
            writeln!(
                f,
                "{}",
                serde_json::json!({
                    "id": ex.id,
                    "text": ex.text,
                    "label": CLASS_NAMES[*label],
                })
            )?;
        }
        f.flush()?;
        Ok(())
    }

    /// Writes an unlabeled pool as JSONL.
    pub fn write_pool_jsonl(
        &self,
        path: &Path,
        n: usize,
        seed: u64,
        id_prefix: &str,
    ) -> Result<()> {
        let (pool, _) = self.pool(n, seed, id_prefix);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for ex in pool.examples() {
            writeln!(f, "{}", serde_json::json!({ "id": ex.id, "text": ex.text }))?;
        }
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_balanced() {
        let task = SyntheticTask::default();
        let a = task.labeled(25, 7, "t");
        let b = task.labeled(25, 7, "t");
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert_eq!(a.class_counts(), vec![25, 25]);
    }

    #[test]
    fn documents_respect_length_bounds() {
        let task = SyntheticTask::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for class in 0..2 {
            for _ in 0..20 {
                let doc = task.document(class, &mut rng);
                let len = doc.split_whitespace().count();
                assert!((task.min_len..=task.max_len).contains(&len));
            }
        }
    }

    #[test]
    fn specific_tokens_never_cross_classes() {
        let task = SyntheticTask::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let specific = task.specific_types();
        for _ in 0..10 {
            let doc = task.document(0, &mut rng);
            for word in doc.split_whitespace() {
                let id: usize = word[1..].parse().unwrap();
                assert!(
                    id < task.shared_types + specific,
                    "class-0 doc contains class-1 token {word}"
                );
            }
        }
    }

    #[test]
    fn pool_reports_true_labels() {
        let task = SyntheticTask::default();
        let (pool, labels) = task.pool(100, 11, "u");
        assert_eq!(pool.len(), labels.len());
        // both classes present
        assert!(labels.iter().any(|&l| l == 0) && labels.iter().any(|&l| l == 1));
    }
}
