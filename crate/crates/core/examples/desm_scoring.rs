// The dual embedding score by hand and on trained vectors.
//
// $ cargo run --release --example desm_scoring

use specqa::corpus::normalize;
use specqa::desm::{dual_score, score_all, spec_centroid, DesmMode};
use specqa::embeddings::{train, DualEmbedding, Space, TrainConfig, Vocab};
use specqa::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // x = (1, 0), y = (0, 1) in both spaces.
    let vocab = Vocab::from_entries(vec![("x".into(), 1), ("y".into(), 1)])?;
    let m = vec![1.0, 0.0, 0.0, 1.0];
    let toy = DualEmbedding::from_parts(2, vocab, m.clone(), m)?;
    let spec = normalize("y x");
    println!("centroid {:?}", spec_centroid(&spec, &toy, Space::Out)?);
    println!("DUAL(x | y x) = {:.8}", dual_score(&normalize("x"), &spec, &toy, DesmMode::OUT_OUT)?.value);
    // Unknown tokens are skipped, not zero-filled.
    let d = dual_score(&normalize("x unknown"), &spec, &toy, DesmMode::OUT_OUT)?;
    println!("with an OOV term: {:.8} over {} term(s)", d.value, d.question_terms);

    let catalog = generate(&SynthConfig::default())?;
    let e = train(catalog.token_corpus(), &TrainConfig { epochs: 20, ..TrainConfig::default() })?;
    let product = &catalog.products()[0];
    let question = &product.questions[0];
    println!("\n{} ({}), gold {:?}", question.text, product.vertical, question.gold_spec_index);
    for mode in DesmMode::ALL {
        let scores: Vec<String> = score_all(question, product, &e, mode)?
            .iter()
            .map(|(_, s)| s.value().map_or("  -  ".into(), |v| format!("{v:+.2}")))
            .collect();
        println!("{mode:>8}: {}", scores.join(" "));
    }
    Ok(())
}
