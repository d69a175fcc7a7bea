// HIT@k on held-out questions for every DESM mode and a random baseline.
//
// $ cargo run --release --example evaluate_hitk

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specqa::desm::DesmMode;
use specqa::embeddings::{train, TrainConfig};
use specqa::evaluation::{evaluate, report, ReportFormat, DEFAULT_KS};
use specqa::ranking::{DesmScorer, ScoreRequest, Scorer, ScorerError};
use specqa::synth::{generate, split_questions, SynthConfig};

struct Random(ChaCha8Rng);

impl Scorer for Random {
    fn name(&self) -> &str {
        "random"
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        Ok(batch.iter().map(|_| Some(self.0.gen())).collect())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = generate(&SynthConfig::default())?;
    let (train_set, test_set) = split_questions(&catalog, 0.2, 42);
    let e = train(train_set.token_corpus(), &TrainConfig { epochs: 20, ..TrainConfig::default() })?;

    let mut reports = Vec::new();
    for mode in DesmMode::ALL {
        reports.push(evaluate(&test_set, &mut DesmScorer::new(&e, mode), &DEFAULT_KS, "synth")?);
    }
    reports.push(evaluate(&test_set, &mut Random(ChaCha8Rng::seed_from_u64(1)), &DEFAULT_KS, "synth")?);
    print!("{}", report(&reports, ReportFormat::Markdown));
    Ok(())
}
