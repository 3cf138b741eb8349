use kgvec_core::sgns::NegativeSampler;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn empirical_frequencies_follow_smoothed_unigram() {
    let counts: [u64; 10] = [1000, 500, 250, 120, 60, 30, 15, 8, 4, 1];
    let sampler = NegativeSampler::new(&counts, 0.75);
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();

    let draws = 1_000_000;
    let mut hits = [0u64; 10];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..draws {
        hits[sampler.sample(&mut rng)] += 1;
    }
    for i in 0..counts.len() {
        let analytic = weights[i] / total;
        assert!((sampler.probability(i) - analytic).abs() < 1e-12);
        let empirical = hits[i] as f64 / draws as f64;
        assert!((empirical - analytic).abs() < 0.01, "token {i}: {empirical} vs {analytic}");
    }
}
