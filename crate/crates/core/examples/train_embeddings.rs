// Trains IN/OUT vectors on a synthetic catalog and compares neighbours
// in the two spaces.
//
// $ cargo run --release --example train_embeddings

use specqa::embeddings::{train_with_stats, DualEmbedding, Space, TrainConfig};
use specqa::synth::{generate, SynthConfig};

fn cos(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let n = |v: &[f32]| v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    dot / (n(a) * n(b))
}

fn neighbours(e: &DualEmbedding, word: &str, other: Space) -> Vec<(String, f64)> {
    let v = e.lookup(Space::In, word).expect("word in vocabulary");
    let mut all: Vec<(String, f64)> = e
        .vocab()
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| *t != word)
        .map(|(id, (t, _))| (t.to_owned(), cos(v, e.vector(other, id))))
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1));
    all.truncate(5);
    all
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = generate(&SynthConfig::default())?;
    let cfg = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let (e, stats) = train_with_stats(catalog.token_corpus(), &cfg)?;
    println!("vocab {} dim {} pairs/epoch {}", e.vocab().len(), e.dim(), stats.pairs_per_epoch);
    for (i, l) in stats.epoch_losses.iter().enumerate() {
        println!("  epoch {:>2} loss {l:.4}", i + 1);
    }

    // IN-IN neighbours share a role (type); IN-OUT neighbours co-occur (topic).
    for space in [Space::In, Space::Out] {
        println!("battery IN-{space:?}: {:?}", neighbours(&e, "battery", space));
    }

    let path = std::env::temp_dir().join("specqa-example.desm");
    e.save(&path)?;
    let back = DualEmbedding::load(&path)?;
    println!("saved {} bytes, reload bit-exact: {}", std::fs::metadata(&path)?.len(), back.bit_eq(&e));
    Ok(())
}
