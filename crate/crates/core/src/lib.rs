//! # specqa
//!
//! Finds the product specifications that answer a user's question.
//!
//! Specifications (`"key value"` pairs such as `"compatible laptop size 15.4
//! inch"`) are ranked against a question by a pluggable [`ranking::Scorer`].
//! The built-in scorer is the dual embedding space score ([`desm`]): question
//! terms are compared by cosine against the centroid of the specification's
//! term vectors, where both sides may come from either weight matrix of a
//! skip-gram model ([`embeddings`]).
//!
//! The same score drives semi-supervised training-data creation
//! ([`labeling`]): a threshold tuned on a small hand-labeled set turns every
//! question/specification pair of a catalog into a positive or negative
//! example, and a balanced sample is written out for any downstream
//! classifier. Rankings are evaluated with HIT@k ([`evaluation`]).
//!
//! ```
//! use specqa::corpus::{AnswerTypeRules, ProductCatalog};
//! use specqa::desm::DesmMode;
//! use specqa::embeddings::{train, TrainConfig};
//! use specqa::ranking::{rank, DesmScorer};
//!
//! let jsonl = r#"{"product_id":"bp1","vertical":"Backpack","specs":[{"key":"material","value":"polyester"},{"key":"compatible laptop size","value":"15.4 inch"}],"questions":[{"question_id":"q1","text":"Which laptop size fits?","gold_spec_index":1}]}"#;
//! let catalog = ProductCatalog::from_jsonl(jsonl.as_bytes(), &AnswerTypeRules::default())?;
//! let cfg = TrainConfig { dim: 16, epochs: 20, ..TrainConfig::default() };
//! let embedding = train(catalog.token_corpus(), &cfg)?;
//!
//! let product = &catalog.products()[0];
//! let mut scorer = DesmScorer::new(&embedding, DesmMode::OUT_OUT);
//! let ranked = rank(&product.questions[0], product, &mut scorer)?;
//! assert_eq!(ranked.entries.len(), 2);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! Runnable walkthroughs live in `examples/`; the `specqa` binary exposes
//! the same pipeline on the command line ([`cli`]).

pub mod cli;
pub mod corpus;
pub mod desm;
pub mod embeddings;
pub mod evaluation;
pub mod labeling;
pub mod ranking;
pub mod synth;
