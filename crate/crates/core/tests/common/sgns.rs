use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specqa::embeddings::sgns::{sgns_step, DenseRows, Scratch};
use specqa::embeddings::{DualEmbedding, Space, TrainConfig};

/// Pair loss written out from scratch in f64.
pub fn loss(input: &[f64], output: &[f64], dim: usize, center: usize, context: usize, negatives: &[usize]) -> f64 {
    let row = |m: &[f64], r: usize| m[r * dim..(r + 1) * dim].to_vec();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let log_sigmoid = |x: f64| -(1.0 + (-x).exp()).ln();
    let c = row(input, center);
    let mut l = -log_sigmoid(dot(&c, &row(output, context)));
    for &n in negatives {
        l -= log_sigmoid(-dot(&c, &row(output, n)));
    }
    l
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

pub struct GradientCase {
    pub worst_rel_err: f64,
}

/// One random update; compares the applied step with -∇L from central
/// differences, for the center row and every touched output row.
pub fn gradient_case(rng: &mut ChaCha8Rng) -> GradientCase {
    let eps = 1e-5;
    let dim = rng.gen_range(2..=8);
    let vocab = rng.gen_range(3..=10);
    let k = rng.gen_range(1..vocab.min(5));
    let ids = sample(rng, vocab, k + 1).into_vec();
    let (context, negatives) = (ids[0], ids[1..].to_vec());
    let center = rng.gen_range(0..vocab);
    let input: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-0.8..0.8)).collect();
    let output: Vec<f64> = (0..vocab * dim).map(|_| rng.gen_range(-0.8..0.8)).collect();

    let (mut in_after, mut out_after) = (input.clone(), output.clone());
    let mut scratch = Scratch::new(dim);
    sgns_step(
        &mut DenseRows::new(&mut in_after, dim),
        &mut DenseRows::new(&mut out_after, dim),
        center,
        context,
        &negatives,
        1.0,
        &mut scratch,
    );

    let numeric = |matrix_is_input: bool, row: usize| -> Vec<f64> {
        (0..dim)
            .map(|d| {
                let at = |delta: f64| {
                    let (mut i, mut o) = (input.clone(), output.clone());
                    let m = if matrix_is_input { &mut i } else { &mut o };
                    m[row * dim + d] += delta;
                    loss(&i, &o, dim, center, context, &negatives)
                };
                (at(eps) - at(-eps)) / (2.0 * eps)
            })
            .collect()
    };
    let applied = |before: &[f64], after: &[f64], row: usize| -> Vec<f64> {
        (0..dim).map(|d| before[row * dim + d] - after[row * dim + d]).collect()
    };

    let mut worst = rel_err(&applied(&input, &in_after, center), &numeric(true, center));
    for &row in &ids {
        worst = worst.max(rel_err(&applied(&output, &out_after, row), &numeric(false, row)));
    }
    GradientCase { worst_rel_err: worst }
}

/// Ten disjoint word pairs; every sentence is one pair.
pub fn cooccurrence_corpus(seed: u64) -> (Vec<Vec<String>>, Vec<(String, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(String, String)> = (0..10).map(|i| (format!("a{i}"), format!("b{i}"))).collect();
    let sentences = (0..2000)
        .map(|_| {
            let (a, b) = &pairs[rng.gen_range(0..pairs.len())];
            if rng.gen_bool(0.5) {
                vec![a.clone(), b.clone()]
            } else {
                vec![b.clone(), a.clone()]
            }
        })
        .collect();
    (sentences, pairs)
}

fn cos(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let n = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    dot / (n(a) * n(b))
}

/// Mean IN·OUT cosine over true pairs minus the mean over mismatched pairs.
pub fn dual_space_gap(e: &DualEmbedding, pairs: &[(String, String)]) -> f64 {
    let v = |space, t: &str| e.lookup(space, t).unwrap();
    let mut true_sum = 0.0;
    let mut false_sum = 0.0;
    let mut false_n = 0;
    for (i, (a, b)) in pairs.iter().enumerate() {
        true_sum += cos(v(Space::In, a), v(Space::Out, b));
        for (j, (_, other)) in pairs.iter().enumerate() {
            if i != j {
                false_sum += cos(v(Space::In, a), v(Space::Out, other));
                false_n += 1;
            }
        }
    }
    true_sum / pairs.len() as f64 - false_sum / false_n as f64
}

pub fn toy_config(seed: u64) -> TrainConfig {
    TrainConfig { dim: 20, seed, ..TrainConfig::default() }
}

