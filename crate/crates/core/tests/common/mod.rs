#![allow(dead_code)]

pub mod sgns;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use specqa::corpus::{AnswerTypeRules, ProductCatalog, TokenSequence};
use specqa::desm::DesmMode;
use specqa::embeddings::{DualEmbedding, Space, Vocab};
use specqa::ranking::{ScoreRequest, Scorer, ScorerError};

pub fn term(i: usize) -> String {
    format!("t{i}")
}

/// Random embedding over terms `t0..t{n}`; some rows are left at zero.
pub fn random_embedding(rng: &mut ChaCha8Rng, n_terms: usize, dim: usize, zero_rows: bool) -> DualEmbedding {
    let vocab = Vocab::from_entries((0..n_terms).map(|i| (term(i), 1 + i as u64)).collect()).unwrap();
    let matrix = |rng: &mut ChaCha8Rng| -> Vec<f32> {
        let mut m: Vec<f32> = (0..n_terms * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        if zero_rows {
            for row in 0..n_terms {
                if rng.gen_bool(0.1) {
                    m[row * dim..(row + 1) * dim].iter_mut().for_each(|x| *x = 0.0);
                }
            }
        }
        m
    };
    let in_m = matrix(rng);
    let out_m = matrix(rng);
    DualEmbedding::from_parts(dim, vocab, in_m, out_m).unwrap()
}

/// Token list over `t0..t{n+2}`; the top two ids are out of vocabulary.
pub fn random_tokens(rng: &mut ChaCha8Rng, n_terms: usize, max_len: usize) -> TokenSequence {
    let len = rng.gen_range(1..=max_len);
    let joined: Vec<String> = (0..len).map(|_| term(rng.gen_range(0..n_terms + 2))).collect();
    specqa::corpus::normalize(&joined.join(" "))
}

/// Straight transcription of the score: mean over question terms of the
/// cosine between the term vector and the mean unit spec vector.
pub fn brute_dual(q: &TokenSequence, s: &TokenSequence, e: &DualEmbedding, mode: DesmMode) -> Option<f64> {
    let vec_of = |space: Space, t: &str| -> Option<Vec<f64>> {
        let v: Vec<f64> = e.lookup(space, t)?.iter().map(|&x| x as f64).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 0.0).then_some(v)
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut centroid = vec![0.0; e.dim()];
    let mut used = 0usize;
    for t in s.iter() {
        if let Some(v) = vec_of(mode.spec, t) {
            let n = norm(&v);
            for (c, x) in centroid.iter_mut().zip(&v) {
                *c += x / n;
            }
            used += 1;
        }
    }
    if used == 0 {
        return None;
    }
    centroid.iter_mut().for_each(|c| *c /= used as f64);
    let cn = norm(&centroid);
    if cn == 0.0 {
        return None;
    }

    let mut total = 0.0;
    let mut q_used = 0usize;
    for t in q.iter() {
        if let Some(v) = vec_of(mode.question, t) {
            let dot: f64 = v.iter().zip(&centroid).map(|(a, b)| a * b).sum();
            total += dot / (norm(&v) * cn);
            q_used += 1;
        }
    }
    (q_used > 0).then(|| total / q_used as f64)
}

pub fn catalog(jsonl: &str) -> ProductCatalog {
    ProductCatalog::from_jsonl(jsonl.as_bytes(), &AnswerTypeRules::default()).unwrap()
}

/// Scores come from a closure over `(question_text, spec_text)`.
pub struct FnScorer<F>(pub F);

impl<F: FnMut(&str, &str) -> Option<f64>> Scorer for FnScorer<F> {
    fn name(&self) -> &str {
        "fn"
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        Ok(batch.iter().map(|r| (self.0)(r.question_text, r.spec_text)).collect())
    }
}

/// Applies a strictly increasing map to another scorer's outputs.
pub struct Rescaled<S>(pub S, pub fn(f64) -> f64);

impl<S: Scorer> Scorer for Rescaled<S> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        Ok(self.0.score_batch(batch)?.into_iter().map(|s| s.map(self.1)).collect())
    }
}

/// Small synthetic catalog with embeddings trained on it.
pub fn trained_fixture(n_products: usize, dim: usize, epochs: usize) -> (ProductCatalog, DualEmbedding) {
    use specqa::embeddings::{train, TrainConfig};
    use specqa::synth::{generate, SynthConfig};
    let catalog = generate(&SynthConfig { n_products, ..SynthConfig::default() }).unwrap();
    let cfg = TrainConfig { dim, epochs, ..TrainConfig::default() };
    let e = train(catalog.token_corpus(), &cfg).unwrap();
    (catalog, e)
}

/// Smallest grid point with the highest accuracy, by direct counting.
pub fn brute_sweep(scored: &[(f64, bool)], grid: &[f64]) -> (f64, f64) {
    let mut best: Option<(f64, f64)> = None;
    for &theta in grid {
        let correct = scored.iter().filter(|&&(s, rel)| (s >= theta) == rel).count();
        let acc = correct as f64 / scored.len() as f64;
        match best {
            Some((bt, ba)) if acc < ba || (acc == ba && bt <= theta) => {}
            _ => best = Some((theta, acc)),
        }
    }
    best.unwrap()
}

/// One product per question, `m` specs each, gold indexes as given.
/// Question `i` has text `q{i}`; spec `j` has text `s{j} x`.
pub fn matrix_catalog(m: usize, golds: &[usize]) -> ProductCatalog {
    use specqa::corpus::{Product, Question, Specification};
    let rules = AnswerTypeRules::default();
    let products = golds
        .iter()
        .enumerate()
        .map(|(i, &g)| Product {
            product_id: format!("p{i:05}"),
            vertical: "v".into(),
            specs: (0..m).map(|j| Specification::new(&format!("s{j}"), "x", j).unwrap()).collect(),
            questions: vec![Question::new(format!("q{i}"), format!("q{i}"), Some(g), &rules).unwrap()],
        })
        .collect();
    ProductCatalog::new(products).unwrap()
}

/// Parses the indexes back out of [`matrix_catalog`] texts.
pub fn matrix_cell(question_text: &str, spec_text: &str) -> (usize, usize) {
    let q = question_text.trim_start_matches('q').parse().unwrap();
    let s = spec_text.trim_start_matches('s').trim_end_matches(" x").parse().unwrap();
    (q, s)
}
