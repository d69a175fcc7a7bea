// Tune θ on a balanced validation set, label every pair, balance classes.
//
// $ cargo run --release --example threshold_labeling

use specqa::desm::DesmMode;
use specqa::embeddings::{train, TrainConfig};
use specqa::labeling::{balance, label_corpus, sweep_threshold, write_labeled_tsv, ThresholdGrid};
use specqa::synth::{generate, split_questions, validation_pairs, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = generate(&SynthConfig::default())?;
    let (train_set, _) = split_questions(&catalog, 0.2, 42);
    let validation = validation_pairs(&train_set, 380, 42);
    let e = train(train_set.token_corpus(), &TrainConfig { epochs: 20, ..TrainConfig::default() })?;

    let report = sweep_threshold(&validation, &e, DesmMode::OUT_OUT, ThresholdGrid::default())?;
    println!("theta* = {} accuracy {:.3} on {} pairs", report.theta_star, report.accuracy_at_theta_star, report.n_pairs);
    for (theta, acc) in report.sweep_table.iter().step_by(20) {
        println!("  {theta:+.2} {acc:.3} {}", "#".repeat((acc * 40.0) as usize));
    }

    let labeled = label_corpus(&train_set, &e, DesmMode::OUT_OUT, report.theta_star);
    println!("positives {} negatives {} skipped {}", labeled.positives(), labeled.negatives(), labeled.skipped_pairs);
    let balanced = balance(labeled.pairs, 42)?;
    println!("balanced: {} pairs; first rows:", balanced.len());
    write_labeled_tsv(std::io::stdout().lock(), &balanced[..3])?;
    Ok(())
}
