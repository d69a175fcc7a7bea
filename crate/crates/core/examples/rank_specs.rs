// Ranks one product's specifications for a free-text question.
//
// $ cargo run --release --example rank_specs -- "is it good for rough use"

use specqa::corpus::{AnswerTypeRules, Question};
use specqa::desm::DesmMode;
use specqa::embeddings::{train, TrainConfig};
use specqa::ranking::{rank, DesmScorer};
use specqa::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "how long does the battery last".into());
    let catalog = generate(&SynthConfig::default())?;
    let e = train(catalog.token_corpus(), &TrainConfig { epochs: 20, ..TrainConfig::default() })?;

    let question = Question::new("cli", text, None, &AnswerTypeRules::default())?;
    let mut scorer = DesmScorer::new(&e, DesmMode::OUT_OUT);
    for product in &catalog.products()[..3] {
        let ranked = rank(&question, product, &mut scorer)?;
        println!("{} ({})", product.product_id, product.vertical);
        for (i, entry) in ranked.top(3).iter().enumerate() {
            println!("  {}. {:.3}  {}", i + 1, entry.score, product.specs[entry.spec_index].text());
        }
    }
    Ok(())
}
