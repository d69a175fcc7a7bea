mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_embedding, trained_fixture};
use specqa::corpus::{normalize, AnswerTypeRules, ProductCatalog};
use specqa::desm::DesmMode;
use specqa::embeddings::DualEmbedding;
use specqa::evaluation::{evaluate, parse_report_tsv, render_rows, report, ReportFormat, ReportRow};
use specqa::labeling::{
    label_corpus, read_labeled_tsv, read_validation_tsv, write_labeled_tsv, write_validation_tsv,
};
use specqa::ranking::DesmScorer;
use specqa::synth::{generate, validation_pairs, SynthConfig};

fn jsonl_round_trip(catalog: &ProductCatalog) -> ProductCatalog {
    let mut buf = Vec::new();
    catalog.write_jsonl(&mut buf).unwrap();
    ProductCatalog::from_jsonl(buf.as_slice(), &AnswerTypeRules::default()).unwrap()
}

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z][a-zA-Z0-9 .,?'-]{0,30}"
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in "\\PC{0,60}") {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once.joined()), once);
    }

    #[test]
    fn normalized_tokens_are_lowercase_alphanumeric(s in "\\PC{0,60}") {
        for t in normalize(&s).iter() {
            prop_assert!(!t.is_empty());
            prop_assert!(t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '.'));
            prop_assert!(!t.starts_with('.') && !t.ends_with('.'));
        }
    }

    #[test]
    fn catalog_jsonl_round_trips(
        specs in prop::collection::vec((text(), text()), 1..6),
        questions in prop::collection::vec(text(), 0..6),
    ) {
        let line = serde_json::json!({
            "product_id": "p1",
            "vertical": "Backpack",
            "specs": specs.iter().map(|(k, v)| serde_json::json!({"key": k, "value": v})).collect::<Vec<_>>(),
            "questions": questions.iter().enumerate().map(|(i, q)| serde_json::json!({
                "question_id": format!("q{i}"),
                "text": q,
                "gold_spec_index": i % specs.len(),
            })).collect::<Vec<_>>(),
        });
        let catalog = ProductCatalog::from_jsonl(line.to_string().as_bytes(), &AnswerTypeRules::default()).unwrap();
        prop_assert_eq!(jsonl_round_trip(&catalog), catalog);
    }

    #[test]
    fn embeddings_round_trip_bit_exactly(seed in any::<u64>(), n in 1usize..12, dim in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_embedding(&mut rng, n, dim, true);
        let mut buf = Vec::new();
        e.write_to(&mut buf).unwrap();
        let back = DualEmbedding::read_from(&mut buf.as_slice()).unwrap();
        prop_assert!(back.bit_eq(&e));
    }
}

#[test]
fn synthetic_catalog_round_trips() {
    let catalog = generate(&SynthConfig::default()).unwrap();
    assert_eq!(jsonl_round_trip(&catalog), catalog);
}

#[test]
fn trained_embedding_file_round_trip() {
    let (_, e) = trained_fixture(5, 100, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.desm");
    e.save(&path).unwrap();
    let back = DualEmbedding::load(&path).unwrap();
    assert!(back.bit_eq(&e));
    assert_eq!(back.dim(), 100);
}

#[test]
fn labeled_tsv_rewrites_identically() {
    let (catalog, e) = trained_fixture(5, 16, 3);
    let pairs = label_corpus(&catalog, &e, DesmMode::OUT_OUT, 0.4).pairs;
    let mut first = Vec::new();
    write_labeled_tsv(&mut first, &pairs).unwrap();
    let back = read_labeled_tsv(first.as_slice()).unwrap();
    let mut second = Vec::new();
    write_labeled_tsv(&mut second, &back).unwrap();
    assert_eq!(first, second);
    for (a, b) in pairs.iter().zip(&back) {
        assert_eq!((&a.product_id, &a.question_id, a.spec_index), (&b.product_id, &b.question_id, b.spec_index));
        assert_eq!((&a.spec_text, &a.question_text, a.label), (&b.spec_text, &b.question_text, b.label));
        assert!((a.score - b.score).abs() <= 5e-10);
    }
}

#[test]
fn validation_tsv_round_trips() {
    let catalog = generate(&SynthConfig::default()).unwrap();
    let pairs = validation_pairs(&catalog, 50, 3);
    let mut buf = Vec::new();
    write_validation_tsv(&mut buf, &pairs).unwrap();
    assert_eq!(read_validation_tsv(buf.as_slice()).unwrap(), pairs);
}

#[test]
fn report_tsv_round_trips() {
    let (catalog, e) = trained_fixture(6, 16, 3);
    let mut reports = Vec::new();
    for mode in DesmMode::ALL {
        let mut scorer = DesmScorer::new(&e, mode);
        reports.push(evaluate(&catalog, &mut scorer, &[1, 2, 3], "synth").unwrap());
    }
    let text = report(&reports, ReportFormat::Tsv);
    let rows = parse_report_tsv(&text).unwrap();
    let expected: Vec<ReportRow> = reports.iter().map(|r| r.to_row()).collect();
    assert_eq!(rows, expected);
    assert_eq!(render_rows(&rows, ReportFormat::Tsv), text);
}
