//! Ranking a product's specifications for one question.
//!
//! Any relevance model plugs in through [`Scorer`]: the built-in
//! [`DesmScorer`], or an out-of-process classifier bridged by
//! [`ExternalScorer`].

mod external;

use thiserror::Error;

pub use self::external::{ExternalScorer, ExternalScorerConfig};
use crate::corpus::{Product, Question, TokenSequence};
use crate::desm::{DesmMode, PreparedQuestion};
use crate::embeddings::DualEmbedding;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("failed to start scorer process: {0}")]
    Spawn(std::io::Error),
    #[error("scorer i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad handshake: {0}")]
    Handshake(String),
    #[error("malformed response line {line:?}")]
    MalformedResponse { line: String },
    #[error("count mismatch: sent {expected} pairs, got {got} scores")]
    CountMismatch { expected: usize, got: usize },
    #[error("score {score} outside declared range [{lo}, {hi}]")]
    OutOfRange { score: f64, lo: f64, hi: f64 },
    #[error("non-finite score")]
    NonFinite,
    #[error("scorer timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("scorer closed its output")]
    Closed,
}

#[derive(Debug, Error)]
pub enum RankError {
    #[error("unrankable question {question_id:?}: no scorable specification")]
    Unrankable { question_id: String },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// One question/specification pair presented to a scorer.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub question_text: &'a str,
    pub question_tokens: &'a TokenSequence,
    pub spec_text: &'a str,
    pub spec_tokens: &'a TokenSequence,
}

/// Relevance model over question/specification pairs.
pub trait Scorer {
    fn name(&self) -> &str;

    /// One entry per request, in order. `None` marks a pair the model cannot
    /// score (e.g. no known terms); it is never a stand-in for zero.
    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError>;
}

impl<S: Scorer + ?Sized> Scorer for &mut S {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        (**self).score_batch(batch)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        (**self).score_batch(batch)
    }
}

/// DUAL score as a [`Scorer`].
#[derive(Debug, Clone)]
pub struct DesmScorer<'e> {
    embedding: &'e DualEmbedding,
    mode: DesmMode,
    name: String,
}

impl<'e> DesmScorer<'e> {
    pub fn new(embedding: &'e DualEmbedding, mode: DesmMode) -> Self {
        Self {
            embedding,
            mode,
            name: format!("desm-{mode}"),
        }
    }

    pub fn mode(&self) -> DesmMode {
        self.mode
    }
}

impl Scorer for DesmScorer<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        let mut out = Vec::with_capacity(batch.len());
        // Batches from rank() share one question; prepare it once.
        let mut cached: Option<(&TokenSequence, Option<PreparedQuestion>)> = None;
        for req in batch {
            if cached.as_ref().map(|c| c.0) != Some(req.question_tokens) {
                let prepared =
                    PreparedQuestion::new(req.question_tokens, self.embedding, self.mode).ok();
                cached = Some((req.question_tokens, prepared));
            }
            let score = cached
                .as_ref()
                .and_then(|c| c.1.as_ref())
                .and_then(|q| q.score(req.spec_tokens, self.embedding, self.mode).ok())
                .map(|s| s.value);
            out.push(score);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    pub spec_index: usize,
    pub score: f64,
}

/// Specifications by descending score; ties go to the lower spec index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub question_id: String,
    pub entries: Vec<RankedEntry>,
    /// Specifications the scorer could not score; they are not ranked.
    pub unscorable: usize,
}

impl RankedList {
    /// 1-based rank of a specification, if it was ranked.
    pub fn rank_of(&self, spec_index: usize) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.spec_index == spec_index)
            .map(|p| p + 1)
    }

    pub fn top(&self, k: usize) -> &[RankedEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.spec_index).collect()
    }
}

/// Sorts `(spec index, score)` pairs by descending score, ascending index.
pub fn sort_entries(entries: &mut [RankedEntry]) {
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.spec_index.cmp(&b.spec_index))
    });
}

pub fn rank<S: Scorer + ?Sized>(
    question: &Question,
    product: &Product,
    scorer: &mut S,
) -> Result<RankedList, RankError> {
    let unrankable = || RankError::Unrankable {
        question_id: question.question_id.clone(),
    };
    if product.specs.is_empty() {
        return Err(unrankable());
    }
    let batch: Vec<ScoreRequest<'_>> = product
        .specs
        .iter()
        .map(|s| ScoreRequest {
            question_text: &question.text,
            question_tokens: &question.tokens,
            spec_text: s.text(),
            spec_tokens: s.tokens(),
        })
        .collect();
    let scores = scorer.score_batch(&batch)?;
    if scores.len() != batch.len() {
        return Err(ScorerError::CountMismatch {
            expected: batch.len(),
            got: scores.len(),
        }
        .into());
    }
    let mut entries = Vec::with_capacity(scores.len());
    let mut unscorable = 0;
    for (spec, score) in product.specs.iter().zip(scores) {
        match score {
            Some(s) if s.is_finite() => entries.push(RankedEntry {
                spec_index: spec.index,
                score: s,
            }),
            Some(_) => return Err(ScorerError::NonFinite.into()),
            None => unscorable += 1,
        }
    }
    if entries.is_empty() {
        return Err(unrankable());
    }
    sort_entries(&mut entries);
    Ok(RankedList {
        question_id: question.question_id.clone(),
        entries,
        unscorable,
    })
}
