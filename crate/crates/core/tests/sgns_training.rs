mod common;

use common::sgns::{cooccurrence_corpus, dual_space_gap, gradient_case, loss, toy_config};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specqa::embeddings::sgns::{sgns_step, DenseRows, Scratch};
use specqa::embeddings::{train, train_with_stats};

#[test]
fn analytic_step_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let case = gradient_case(&mut rng);
        assert!(case.worst_rel_err < 1e-4, "rel err {}", case.worst_rel_err);
    }
}

#[test]
fn hand_set_two_dim_update() {
    // center in = (0.5, -0.25); context out = (0.1, 0.2); negative out = (-0.3, 0.4)
    let mut input = vec![0.5, -0.25, 0.0, 0.0, 0.0, 0.0];
    let mut output = vec![0.0, 0.0, 0.1, 0.2, -0.3, 0.4];
    let before = (input.clone(), output.clone());
    sgns_step(
        &mut DenseRows::new(&mut input, 2),
        &mut DenseRows::new(&mut output, 2),
        0,
        1,
        &[2],
        1.0f64,
        &mut Scratch::new(2),
    );
    let l = |i: &[f64], o: &[f64]| loss(i, o, 2, 0, 1, &[2]);
    for d in 0..2 {
        let mut plus = before.0.clone();
        let mut minus = before.0.clone();
        plus[d] += 1e-5;
        minus[d] -= 1e-5;
        let numeric = (l(&plus, &before.1) - l(&minus, &before.1)) / 2e-5;
        assert!((before.0[d] - input[d] - numeric).abs() < 1e-9);
    }
}

#[test]
fn cooccurring_pairs_align_across_spaces() {
    let mut passing = 0;
    for seed in 0..10 {
        let (sentences, pairs) = cooccurrence_corpus(seed);
        let e = train(&sentences, &toy_config(seed)).unwrap();
        let gap = dual_space_gap(&e, &pairs);
        if gap >= 0.2 {
            passing += 1;
        }
    }
    assert!(passing >= 9, "{passing}/10 seeds reached the gap");
}

#[test]
fn loss_decreases_over_epochs() {
    let (sentences, _) = cooccurrence_corpus(0);
    let mut decreasing = 0;
    for seed in 0..20 {
        let (_, stats) = train_with_stats(&sentences, &toy_config(seed)).unwrap();
        if stats.epoch_losses.last() < stats.epoch_losses.first() {
            decreasing += 1;
        }
    }
    assert!(decreasing >= 19, "{decreasing}/20");
}

#[test]
fn trained_spaces_differ() {
    let (sentences, _) = cooccurrence_corpus(1);
    let e = train(&sentences, &toy_config(1)).unwrap();
    assert_ne!(e.in_matrix(), e.out_matrix());
}
