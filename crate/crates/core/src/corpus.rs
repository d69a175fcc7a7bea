//! Product catalogs, question sets and text normalization.
//!
//! A catalog is a list of products, each with an ordered list of key/value
//! specifications and the questions users asked about it. Specifications are
//! scored as the flattened text `"key value"` (e.g. `"number of cores 2"`).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate product_id {product_id:?} at line {line}")]
    DuplicateProduct { product_id: String, line: usize },
    #[error("duplicate question_id {question_id:?} in product {product_id:?}")]
    DuplicateQuestion {
        product_id: String,
        question_id: String,
    },
    #[error("gold index out of range: question {question_id:?} has gold_spec_index {index} but product {product_id:?} has {n_specs} specs")]
    GoldIndexOutOfRange {
        product_id: String,
        question_id: String,
        index: usize,
        n_specs: usize,
    },
    #[error("unknown product {product_id:?} at line {line}")]
    UnknownProduct { product_id: String, line: usize },
    #[error("unclassifiable question: empty token sequence")]
    Unclassifiable,
}

/// Lowercase terms produced by [`normalize`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    /// Space-joined form; `normalize(seq.joined()) == seq`.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Lowercase, replace punctuation with spaces (keeping periods between two
/// digits), split on whitespace.
pub fn normalize(text: &str) -> TokenSequence {
    let chars: Vec<char> = text.chars().collect();
    let mut cleaned = String::with_capacity(text.len());
    for (i, &c) in chars.iter().enumerate() {
        let c = c.to_ascii_lowercase();
        if c.is_ascii_lowercase() || c.is_ascii_digit() {
            cleaned.push(c);
        } else if c == '.'
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            cleaned.push('.');
        } else {
            cleaned.push(' ');
        }
    }
    TokenSequence(cleaned.split_whitespace().map(str::to_owned).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnswerType {
    Numerical,
    YesNo,
    Other,
}

impl AnswerType {
    pub const ALL: [AnswerType; 3] = [AnswerType::Numerical, AnswerType::YesNo, AnswerType::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::Numerical => "numerical",
            AnswerType::YesNo => "yes_no",
            AnswerType::Other => "other",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rule set for [`classify_answer_type`]. Rules are checked in order
/// yes/no, numerical, other; the first match wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerTypeRules {
    /// First tokens that mark a yes/no question.
    pub yes_no_openers: Vec<String>,
    /// Token phrases that mark a quantity question anywhere in the text.
    pub quantity_phrases: Vec<Vec<String>>,
    /// Terms that make `what is the <term>` a numerical question.
    pub unit_terms: Vec<String>,
}

impl Default for AnswerTypeRules {
    fn default() -> Self {
        let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
        Self {
            yes_no_openers: words(&[
                "is", "does", "do", "can", "will", "are", "has", "have", "should",
            ]),
            quantity_phrases: vec![words(&["how", "many"]), words(&["how", "much"])],
            unit_terms: words(&[
                "size", "weight", "height", "width", "depth", "capacity", "length",
            ]),
        }
    }
}

impl AnswerTypeRules {
    pub fn classify(&self, tokens: &TokenSequence) -> Result<AnswerType, CorpusError> {
        let toks = tokens.as_slice();
        let first = toks.first().ok_or(CorpusError::Unclassifiable)?;
        if self.yes_no_openers.iter().any(|w| w == first) {
            return Ok(AnswerType::YesNo);
        }
        let has_phrase = |phrase: &[String]| {
            !phrase.is_empty() && toks.windows(phrase.len()).any(|w| w == phrase)
        };
        if self.quantity_phrases.iter().any(|p| has_phrase(p)) {
            return Ok(AnswerType::Numerical);
        }
        let unit_seeking = toks.windows(4).any(|w| {
            w[0] == "what" && w[1] == "is" && w[2] == "the" && self.unit_terms.contains(&w[3])
        });
        if unit_seeking {
            return Ok(AnswerType::Numerical);
        }
        Ok(AnswerType::Other)
    }
}

/// Classify a question with the default rule set.
pub fn classify_answer_type(question: &Question) -> Result<AnswerType, CorpusError> {
    AnswerTypeRules::default().classify(&question.tokens)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub key: String,
    pub value: String,
    pub index: usize,
    text: String,
    tokens: TokenSequence,
}

impl Specification {
    /// Returns `None` when the key normalizes to nothing.
    pub fn new(key: &str, value: &str, index: usize) -> Option<Self> {
        if normalize(key).is_empty() {
            return None;
        }
        let text = if value.trim().is_empty() {
            key.trim().to_owned()
        } else {
            format!("{} {}", key.trim(), value.trim())
        };
        let tokens = normalize(&text);
        Some(Self {
            key: key.to_owned(),
            value: value.to_owned(),
            index,
            text,
            tokens,
        })
    }

    /// The `"key value"` rendering used for scoring.
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &TokenSequence {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub question_id: String,
    pub text: String,
    pub tokens: TokenSequence,
    pub gold_spec_index: Option<usize>,
    pub answer_type: AnswerType,
}

impl Question {
    /// Normalizes and classifies `text`. Fails when it has no tokens.
    pub fn new(
        question_id: impl Into<String>,
        text: impl Into<String>,
        gold_spec_index: Option<usize>,
        rules: &AnswerTypeRules,
    ) -> Result<Self, CorpusError> {
        let text = text.into();
        let tokens = normalize(&text);
        let answer_type = rules.classify(&tokens)?;
        Ok(Self {
            question_id: question_id.into(),
            text,
            tokens,
            gold_spec_index,
            answer_type,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    pub product_id: String,
    pub vertical: String,
    pub specs: Vec<Specification>,
    pub questions: Vec<Question>,
}

impl Product {
    pub fn spec_count(&self) -> usize {
        self.specs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogFormat {
    /// One product per line, specs and questions inline.
    Jsonl,
    /// Question rows only: `product_id, question_id, text, gold_spec_index`.
    /// Products come back without specs; attach them to a spec-bearing
    /// catalog with [`ProductCatalog::attach_questions`].
    Tsv,
}

impl FromStr for CatalogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Self::Jsonl),
            "tsv" => Ok(Self::Tsv),
            other => Err(format!("unknown catalog format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProductCatalog {
    products: Vec<Product>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    key: String,
    #[serde(default)]
    value: String,
}

#[derive(Serialize, Deserialize)]
struct RawQuestion {
    question_id: String,
    text: String,
    #[serde(default)]
    gold_spec_index: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawProduct {
    product_id: String,
    #[serde(default)]
    vertical: String,
    #[serde(default)]
    specs: Vec<RawSpec>,
    #[serde(default)]
    questions: Vec<RawQuestion>,
}

impl ProductCatalog {
    /// Builds a catalog, checking product id uniqueness and gold indexes.
    pub fn new(products: Vec<Product>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::new();
        for (i, p) in products.iter().enumerate() {
            if !ids.insert(p.product_id.as_str()) {
                return Err(CorpusError::DuplicateProduct {
                    product_id: p.product_id.clone(),
                    line: i + 1,
                });
            }
            check_product(p)?;
        }
        Ok(Self { products })
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn product(&self, product_id: &str) -> Option<&Product> {
        self.products.iter().find(|p| p.product_id == product_id)
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn question_count(&self) -> usize {
        self.products.iter().map(|p| p.questions.len()).sum()
    }

    /// Every question and every specification as token sequences: the
    /// embedding training corpus.
    pub fn token_corpus(&self) -> Vec<&TokenSequence> {
        let mut out = Vec::new();
        for p in &self.products {
            out.extend(p.specs.iter().map(Specification::tokens));
            out.extend(p.questions.iter().map(|q| &q.tokens));
        }
        out
    }

    /// Merges the questions of `questions` (usually loaded from TSV) into
    /// this catalog's products.
    pub fn attach_questions(&mut self, questions: ProductCatalog) -> Result<(), CorpusError> {
        for (line, src) in questions.products.into_iter().enumerate() {
            let target = self
                .products
                .iter_mut()
                .find(|p| p.product_id == src.product_id)
                .ok_or_else(|| CorpusError::UnknownProduct {
                    product_id: src.product_id.clone(),
                    line: line + 1,
                })?;
            target.questions.extend(src.questions);
            check_product(target)?;
        }
        Ok(())
    }

    pub fn from_jsonl<R: BufRead>(reader: R, rules: &AnswerTypeRules) -> Result<Self, CorpusError> {
        let mut products = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawProduct = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if !ids.insert(raw.product_id.clone()) {
                return Err(CorpusError::DuplicateProduct {
                    product_id: raw.product_id,
                    line: line_no,
                });
            }
            let mut specs = Vec::with_capacity(raw.specs.len());
            for (index, s) in raw.specs.iter().enumerate() {
                let spec = Specification::new(&s.key, &s.value, index).ok_or_else(|| {
                    CorpusError::Parse {
                        line: line_no,
                        message: format!("spec {index} has an empty key"),
                    }
                })?;
                specs.push(spec);
            }
            let mut questions = Vec::with_capacity(raw.questions.len());
            for q in raw.questions {
                let question = Question::new(q.question_id, q.text, q.gold_spec_index, rules)
                    .map_err(|e| CorpusError::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                questions.push(question);
            }
            let product = Product {
                product_id: raw.product_id,
                vertical: raw.vertical,
                specs,
                questions,
            };
            check_product(&product)?;
            products.push(product);
        }
        Ok(Self { products })
    }

    /// Reads question rows. Products are created in first-seen order with no
    /// specs, so gold indexes are only range-checked on attach.
    pub fn from_questions_tsv<R: BufRead>(
        reader: R,
        rules: &AnswerTypeRules,
    ) -> Result<Self, CorpusError> {
        let mut by_product: Vec<Product> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if line_no == 1 && cols.first() == Some(&"product_id") {
                continue;
            }
            if cols.len() != 4 {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("expected 4 tab-separated columns, found {}", cols.len()),
                });
            }
            let gold = match cols[3].trim() {
                "" => None,
                s => Some(s.parse::<usize>().map_err(|e| CorpusError::Parse {
                    line: line_no,
                    message: format!("bad gold_spec_index {s:?}: {e}"),
                })?),
            };
            let question =
                Question::new(cols[1], cols[2], gold, rules).map_err(|e| CorpusError::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
            match by_product.iter_mut().find(|p| p.product_id == cols[0]) {
                Some(p) => p.questions.push(question),
                None => by_product.push(Product {
                    product_id: cols[0].to_owned(),
                    vertical: String::new(),
                    specs: Vec::new(),
                    questions: vec![question],
                }),
            }
        }
        Ok(Self {
            products: by_product,
        })
    }

    /// Writes the catalog in the JSONL interchange form.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for p in &self.products {
            let raw = RawProduct {
                product_id: p.product_id.clone(),
                vertical: p.vertical.clone(),
                specs: p
                    .specs
                    .iter()
                    .map(|s| RawSpec {
                        key: s.key.clone(),
                        value: s.value.clone(),
                    })
                    .collect(),
                questions: p
                    .questions
                    .iter()
                    .map(|q| RawQuestion {
                        question_id: q.question_id.clone(),
                        text: q.text.clone(),
                        gold_spec_index: q.gold_spec_index,
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut w, &raw)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Question counts per answer type.
    pub fn answer_type_histogram(&self) -> BTreeMap<AnswerType, usize> {
        let mut hist = BTreeMap::new();
        for q in self.products.iter().flat_map(|p| &p.questions) {
            *hist.entry(q.answer_type).or_insert(0) += 1;
        }
        hist
    }
}

fn check_product(p: &Product) -> Result<(), CorpusError> {
    let mut qids = HashSet::new();
    for q in &p.questions {
        if !qids.insert(q.question_id.as_str()) {
            return Err(CorpusError::DuplicateQuestion {
                product_id: p.product_id.clone(),
                question_id: q.question_id.clone(),
            });
        }
        if let Some(index) = q.gold_spec_index {
            // Spec-less products are question-only staging records.
            if !p.specs.is_empty() && index >= p.specs.len() {
                return Err(CorpusError::GoldIndexOutOfRange {
                    product_id: p.product_id.clone(),
                    question_id: q.question_id.clone(),
                    index,
                    n_specs: p.specs.len(),
                });
            }
        }
    }
    Ok(())
}

/// Loads a catalog file in the given format with the default answer-type rules.
pub fn ingest_catalog(path: &Path, format: CatalogFormat) -> Result<ProductCatalog, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let rules = AnswerTypeRules::default();
    match format {
        CatalogFormat::Jsonl => ProductCatalog::from_jsonl(reader, &rules),
        CatalogFormat::Tsv => ProductCatalog::from_questions_tsv(reader, &rules),
    }
}
