use std::collections::HashMap;

use super::EmbeddingError;

/// Terms ordered by descending count, then lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    terms: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from `(term, count)` entries in the given order.
    /// Fails on duplicate terms.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self, EmbeddingError> {
        let mut terms = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (term, count) in entries {
            if index.insert(term.clone(), terms.len()).is_some() {
                return Err(EmbeddingError::DuplicateTerm(term));
            }
            terms.push(term);
            counts.push(count);
        }
        Ok(Self {
            terms,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.terms
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }
}

/// Counts unigrams over `corpus` and drops terms seen fewer than `min_count`
/// times.
pub fn build_vocab<'a, I, S>(corpus: I, min_count: u64) -> Result<Vocab, EmbeddingError>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = &'a String>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut sentences = 0usize;
    for sentence in corpus {
        sentences += 1;
        for tok in sentence {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    if sentences == 0 || counts.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| (t.to_owned(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_entries(entries)
}
