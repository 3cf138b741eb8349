use kgvec_core::eval::{evaluate, spearman, GoldFormat, GoldStandard, Scorer};
use kgvec_core::labels::LabelIndex;
use kgvec_core::model::EmbeddingModel;
use kgvec_core::store::{Dataset, ModelStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 8] = ["car", "automobile", "bird", "eagle", "coast", "shore", "noon", "string"];

fn random_dataset(name: &str, seed: u64, vocabulary: &[&str]) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = vocabulary.iter().map(|w| (*w, (0..16).map(|_| rng.random_range(-1.0f32..1.0)).collect::<Vec<_>>()));
    Dataset::new(name, EmbeddingModel::from_rows(rows).unwrap(), LabelIndex::exact())
}

fn gold() -> GoldStandard {
    let text = "car automobile 50\nbird eagle 40\ncoast shore 45\nnoon string 3\ncar bird 10\nshore noon 7\nunknown car 5\n";
    GoldStandard::read("toy-men", text.as_bytes(), GoldFormat::Men).unwrap()
}

fn store() -> ModelStore {
    ModelStore::new()
        .with(random_dataset("wordnet", 1, &WORDS))
        .unwrap()
        .with(random_dataset("alod", 2, &WORDS[..5]))
        .unwrap()
        .with(random_dataset("dbpedia", 3, &WORDS[2..]))
        .unwrap()
}

#[test]
fn combined_score_is_the_exact_sum_of_per_model_scores() {
    let store = store();
    let names = ["alod", "dbpedia", "wordnet"];
    for pair in &gold().pairs {
        let combined = store.combined_similarity(&names, &pair.word1, &pair.word2).unwrap();
        let mut sum = 0.0;
        for name in names {
            let s = store.similarity(name, &pair.word1, &pair.word2).unwrap();
            if s.oov {
                assert_eq!(s.score, 0.0);
            }
            sum += s.score;
        }
        assert_eq!(combined.score, sum, "{pair:?}");
        for order in [["wordnet", "alod", "dbpedia"], ["dbpedia", "wordnet", "alod"]] {
            assert_eq!(store.combined_similarity(&order, &pair.word1, &pair.word2).unwrap().score, combined.score);
        }
        assert!(combined.score.abs() <= 3.0);
    }
    assert_eq!(store.combined_all("nothing", "nowhere").score, 0.0);
}

#[test]
fn all_oov_model_changes_nothing() {
    let base = store();
    let extended = store().with(random_dataset("empty", 4, &["zebra", "quartz"])).unwrap();
    let gold = gold();
    let base_names = base.names();
    let ext_names = extended.names();
    for pair in &gold.pairs {
        assert_eq!(
            base.combined_all(&pair.word1, &pair.word2).score,
            extended.combined_all(&pair.word1, &pair.word2).score
        );
    }
    let r1 = evaluate(Scorer::Combined(&base, &base_names), &gold).unwrap();
    let r2 = evaluate(Scorer::Combined(&extended, &ext_names), &gold).unwrap();
    assert_eq!(r1.rho, r2.rho);
    assert_eq!(r1.scores, r2.scores);
}

#[test]
fn combined_rho_is_spearman_of_summed_scores() {
    let store = store();
    let names = store.names();
    let gold = gold();
    let summed: Vec<f64> = gold
        .pairs
        .iter()
        .map(|p| {
            let mut total = 0.0;
            for n in &names {
                total += store.dataset(n).unwrap().similarity(&p.word1, &p.word2).score;
            }
            total
        })
        .collect();
    let human: Vec<f64> = gold.pairs.iter().map(|p| p.score).collect();
    let result = evaluate(Scorer::Combined(&store, &names), &gold).unwrap();
    assert_eq!(result.scores, summed);
    assert_eq!(result.rho, spearman(&summed, &human).unwrap());
    assert_eq!(result.dataset, "combined");
    assert_eq!(result.oov_first, 1);
    assert_eq!(result.oov_both, 0);
}

#[test]
fn all_pairs_oov_is_undefined_not_zero() {
    let store = ModelStore::new().with(random_dataset("x", 9, &["zebra"])).unwrap();
    let err = evaluate(Scorer::Single(store.dataset("x").unwrap()), &gold()).unwrap_err();
    assert!(matches!(err, kgvec_core::EvalError::UndefinedCorrelation));
}
