// Tokenization and answer-type buckets.
//
// $ cargo run --example normalize_and_classify

use specqa::corpus::{normalize, AnswerTypeRules, ProductCatalog};

const CATALOG: &str = r#"{"product_id":"bp1","vertical":"Backpack","specs":[{"key":"Compatible Laptop Size","value":"15.4 inch"},{"key":"Material","value":"Polyester"}],"questions":[{"question_id":"q1","text":"Does 16 inch laptop fit in to it?","gold_spec_index":0},{"question_id":"q2","text":"How many compartments?","gold_spec_index":1},{"question_id":"q3","text":"What's the material?","gold_spec_index":1}]}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for text in ["Screen size: 15.6\"!", "RAM = 8GB, v2.0.", "...3.5mm jack..."] {
        println!("{text:<24} -> {:?}", normalize(text).as_slice());
    }

    let catalog = ProductCatalog::from_jsonl(CATALOG.as_bytes(), &AnswerTypeRules::default())?;
    let product = &catalog.products()[0];
    for spec in &product.specs {
        println!("spec {}: {:?}", spec.index, spec.text());
    }
    for q in &product.questions {
        println!("{:<36} {}", q.text, q.answer_type);
    }
    println!("{:?}", catalog.answer_type_histogram());
    Ok(())
}
