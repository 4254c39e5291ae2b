//! Property tests for the crate's core invariants.

use proptest::prelude::*;

use selftrain::pseudo::{ScoredEntry, ScoredPool};
use selftrain::*;

fn test_vocab() -> Vocab {
    build_vocab(
        vec![tokenize(
            "alpha beta gamma delta epsilon zeta eta theta iota kappa",
        )],
        32,
        1,
    )
}

proptest! {
    /// Tokenization is pure, deterministic and lowercasing; vectorized
    /// output never contains PAD or MASK and maps unknown tokens to UNK.
    #[test]
    fn tokenize_and_vectorize_invariants(text in ".{0,200}") {
        let first = tokenize(&text);
        let second = tokenize(&text);
        prop_assert_eq!(&first, &second);
        for tok in &first {
            let lowered = tok.to_lowercase();
            prop_assert_eq!(&lowered, tok);
            prop_assert!(!tok.is_empty());
        }
        let vocab = test_vocab();
        let ids: Vec<u32> = first.iter().map(|t| vocab.id_or_unk(t)).collect();
        for id in ids {
            prop_assert!(id != corpus::PAD_ID && id != corpus::MASK_ID);
            prop_assert!((id as usize) < vocab.len());
        }
    }

    /// Probabilities normalize for arbitrary finite parameters, not just
    /// freshly initialized ones.
    #[test]
    fn predict_proba_normalizes_for_arbitrary_params(
        seed in 0u64..1000,
        scale in 0.01f64..20.0,
        tokens in prop::collection::vec(0u32..13, 1..24),
    ) {
        let vocab = test_vocab();
        let mut model = ClassifierModel::random(
            &vocab,
            3,
            &ModelConfig { embedding_dim: 6, hidden_dim: 5 },
            seed,
        );
        for p in model.params_mut() {
            *p *= scale;
        }
        let mut ex = Example::new("p", "prop");
        ex.tokens = tokens;
        let probs = model.predict_proba(&ex).unwrap();
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    /// Top-K selection never emits an example twice and never exceeds K
    /// per class.
    #[test]
    fn select_top_k_no_duplicates(
        raw in prop::collection::vec(prop::collection::vec(1e-3f64..1.0, 2..4), 1..10),
        k in 1usize..8,
    ) {
        let num_classes = raw[0].len();
        let entries: Vec<ScoredEntry> = raw
            .iter()
            .enumerate()
            .filter(|(_, row)| row.len() == num_classes)
            .map(|(i, row)| {
                let sum: f64 = row.iter().sum();
                let probs: Vec<f64> = row.iter().map(|v| v / sum).collect();
                let predicted = selftrain::model::argmax(&probs);
                ScoredEntry {
                    id: format!("e{i:03}"),
                    predicted_label: predicted,
                    confidence: probs[predicted],
                    probs,
                }
            })
            .collect();
        let n = entries.len();
        let pool = UnlabeledPool::new(
            entries.iter().map(|e| Example::new(e.id.clone(), "t")).collect(),
        )
        .unwrap();
        let scored = ScoredPool::from_parts(entries, num_classes, 0);
        let dp = select_top_k(&scored, &pool, k);
        let ids: std::collections::HashSet<&str> =
            dp.examples().iter().map(|(ex, _, _)| ex.id.as_str()).collect();
        prop_assert_eq!(ids.len(), dp.len());
        for count in dp.class_counts() {
            prop_assert!(count <= k.min(n));
        }
        if n >= num_classes * k {
            prop_assert!(dp.class_counts().iter().all(|&c| c == k));
        }
    }

    /// Balanced subsampling is exactly stratified: every class count equals
    /// floor(n / C).
    #[test]
    fn subsample_is_exactly_stratified(
        per_class in 4usize..30,
        n in 2usize..20,
        seed in 0u64..500,
        num_classes in 2usize..4,
    ) {
        let mut rows = Vec::new();
        for class in 0..num_classes {
            for i in 0..per_class {
                rows.push((Example::new(format!("c{class}e{i}"), "text"), class));
            }
        }
        let ds = LabeledDataset::new(rows, num_classes).unwrap();
        let want = n / num_classes;
        prop_assume!(want <= per_class);
        let sub = sample_labeled_subset(&ds, n, seed).unwrap();
        let counts = sub.class_counts();
        prop_assert!(counts.iter().all(|&c| c == want), "counts {:?}", counts);
        // and deterministically so
        let again = sample_labeled_subset(&ds, n, seed).unwrap();
        prop_assert_eq!(sub, again);
    }
}
