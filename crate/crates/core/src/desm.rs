//! Dual embedding space relevance between a question and a specification.
//!
//! The specification is summarized by the centroid of its unit-normalized
//! term vectors; every question term is compared to that centroid by cosine
//! and the cosines are averaged:
//!
//! ```text
//! centroid(s) = 1/|s| Σ_{t ∈ s} t / ‖t‖
//! DUAL(q, s)  = 1/|q| Σ_{t ∈ q} cos(t, centroid(s))
//! ```
//!
//! Question vectors and spec vectors may come from different spaces (IN or
//! OUT); see [`DesmMode`]. Terms that are out of vocabulary or have a zero
//! vector are skipped and do not count towards `|q|` or `|s|`. All
//! arithmetic is f64 and sums run in ascending vocabulary-id order, so the
//! result does not depend on token order.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Product, Question};
use crate::embeddings::{DualEmbedding, Space};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesmError {
    #[error("unscorable question: no in-vocabulary terms")]
    UnscorableQuestion,
    #[error("unscorable specification: no in-vocabulary terms")]
    UnscorableSpecification,
}

/// Embedding spaces used for question terms and specification terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DesmMode {
    pub question: Space,
    pub spec: Space,
}

impl DesmMode {
    pub const IN_IN: Self = Self::new(Space::In, Space::In);
    pub const IN_OUT: Self = Self::new(Space::In, Space::Out);
    pub const OUT_IN: Self = Self::new(Space::Out, Space::In);
    pub const OUT_OUT: Self = Self::new(Space::Out, Space::Out);
    pub const ALL: [Self; 4] = [Self::IN_IN, Self::IN_OUT, Self::OUT_IN, Self::OUT_OUT];

    pub const fn new(question: Space, spec: Space) -> Self {
        Self { question, spec }
    }
}

impl Default for DesmMode {
    fn default() -> Self {
        Self::OUT_OUT
    }
}

impl fmt::Display for DesmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |s: Space| match s {
            Space::In => "in",
            Space::Out => "out",
        };
        write!(f, "{}-{}", name(self.question), name(self.spec))
    }
}

impl FromStr for DesmMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let space = |p: &str| match p {
            "in" => Ok(Space::In),
            "out" => Ok(Space::Out),
            other => Err(format!("unknown embedding space {other:?}")),
        };
        let lower = s.to_ascii_lowercase();
        let (q, sp) = lower
            .split_once(['-', '_'])
            .ok_or_else(|| format!("mode must look like out-out, got {s:?}"))?;
        Ok(Self::new(space(q)?, space(sp)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualScore {
    pub value: f64,
    /// Question term occurrences that contributed.
    pub question_terms: usize,
    /// Specification term occurrences in the centroid.
    pub spec_terms: usize,
}

/// Unit vectors of the usable tokens, sorted by vocabulary id.
fn unit_vectors<'t>(
    tokens: impl IntoIterator<Item = &'t String>,
    e: &DualEmbedding,
    space: Space,
) -> Vec<Vec<f64>> {
    let mut ids: Vec<usize> = tokens.into_iter().filter_map(|t| e.vocab().id(t)).collect();
    ids.sort_unstable();
    ids.into_iter()
        .filter_map(|id| {
            let v: Vec<f64> = e.vector(space, id).iter().map(|&x| x as f64).collect();
            let norm = dot(&v, &v).sqrt();
            (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|x| x / norm).collect())
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn centroid_of(units: &[Vec<f64>], dim: usize) -> Option<Vec<f64>> {
    if units.is_empty() {
        return None;
    }
    let mut c = vec![0.0; dim];
    for u in units {
        for (ci, ui) in c.iter_mut().zip(u) {
            *ci += ui;
        }
    }
    let n = units.len() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    Some(c)
}

/// Mean of the unit-normalized vectors of the usable spec tokens.
pub fn spec_centroid<'t>(
    spec_tokens: impl IntoIterator<Item = &'t String>,
    e: &DualEmbedding,
    space: Space,
) -> Result<Vec<f64>, DesmError> {
    let units = unit_vectors(spec_tokens, e, space);
    centroid_of(&units, e.dim()).ok_or(DesmError::UnscorableSpecification)
}

/// Question side of the score, reusable across specifications.
#[derive(Debug, Clone)]
pub struct PreparedQuestion {
    units: Vec<Vec<f64>>,
}

impl PreparedQuestion {
    pub fn new<'t>(
        tokens: impl IntoIterator<Item = &'t String>,
        e: &DualEmbedding,
        mode: DesmMode,
    ) -> Result<Self, DesmError> {
        let units = unit_vectors(tokens, e, mode.question);
        if units.is_empty() {
            return Err(DesmError::UnscorableQuestion);
        }
        Ok(Self { units })
    }

    pub fn term_count(&self) -> usize {
        self.units.len()
    }

    pub fn score<'t>(
        &self,
        spec_tokens: impl IntoIterator<Item = &'t String>,
        e: &DualEmbedding,
        mode: DesmMode,
    ) -> Result<DualScore, DesmError> {
        let spec_units = unit_vectors(spec_tokens, e, mode.spec);
        let centroid =
            centroid_of(&spec_units, e.dim()).ok_or(DesmError::UnscorableSpecification)?;
        let centroid_sq = dot(&centroid, &centroid);
        if centroid_sq <= 0.0 {
            // Opposing unit vectors cancelled out.
            return Err(DesmError::UnscorableSpecification);
        }
        let total: f64 = self
            .units
            .iter()
            .map(|u| {
                let cos = dot(u, &centroid) / (dot(u, u) * centroid_sq).sqrt();
                cos.clamp(-1.0, 1.0)
            })
            .sum();
        Ok(DualScore {
            value: (total / self.units.len() as f64).clamp(-1.0, 1.0),
            question_terms: self.units.len(),
            spec_terms: spec_units.len(),
        })
    }
}

pub fn dual_score<'q, 's>(
    question_tokens: impl IntoIterator<Item = &'q String>,
    spec_tokens: impl IntoIterator<Item = &'s String>,
    e: &DualEmbedding,
    mode: DesmMode,
) -> Result<DualScore, DesmError> {
    PreparedQuestion::new(question_tokens, e, mode)?.score(spec_tokens, e, mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecScore {
    Scored(DualScore),
    Unscorable,
}

impl SpecScore {
    pub fn value(&self) -> Option<f64> {
        match self {
            SpecScore::Scored(s) => Some(s.value),
            SpecScore::Unscorable => None,
        }
    }
}

/// Scores `question` against every specification of `product`, in index order.
pub fn score_all(
    question: &Question,
    product: &Product,
    e: &DualEmbedding,
    mode: DesmMode,
) -> Result<Vec<(usize, SpecScore)>, DesmError> {
    let prepared = PreparedQuestion::new(&question.tokens, e, mode)?;
    Ok(product
        .specs
        .iter()
        .map(|spec| {
            let score = match prepared.score(spec.tokens(), e, mode) {
                Ok(s) => SpecScore::Scored(s),
                Err(_) => SpecScore::Unscorable,
            };
            (spec.index, score)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnswerTypeRules, Specification};
    use crate::embeddings::Vocab;

    fn toks(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    fn embedding(terms: &[(&str, [f32; 2])]) -> DualEmbedding {
        let vocab = Vocab::from_entries(terms.iter().map(|(t, _)| (t.to_string(), 1)).collect())
            .unwrap();
        let m: Vec<f32> = terms.iter().flat_map(|(_, v)| *v).collect();
        DualEmbedding::from_parts(2, vocab, m.clone(), m).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let e = embedding(&[("x", [3.0, 4.0]), ("y", [0.0, 1.0]), ("z", [1.0, 0.0])]);
        let c = spec_centroid(&toks(&["x"]), &e, Space::Out).unwrap();
        assert!((c[0] - 0.6).abs() < 1e-7 && (c[1] - 0.8).abs() < 1e-7);
        let c = spec_centroid(&toks(&["y", "z"]), &e, Space::In).unwrap();
        assert_eq!(c, vec![0.5, 0.5]);
        assert_eq!(
            spec_centroid(&toks(&["nope"]), &e, Space::In),
            Err(DesmError::UnscorableSpecification)
        );
    }

    #[test]
    fn hand_computed_anchor() {
        let e = embedding(&[("q", [1.0, 0.0]), ("a", [0.0, 1.0]), ("b", [1.0, 0.0])]);
        let s = dual_score(&toks(&["q"]), &toks(&["a", "b"]), &e, DesmMode::OUT_OUT).unwrap();
        assert!((s.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert_eq!((s.question_terms, s.spec_terms), (1, 2));
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let e = embedding(&[("x", [0.3, -1.7]), ("y", [2.0, 0.1])]);
        for mode in [DesmMode::IN_IN, DesmMode::OUT_OUT] {
            let s = dual_score(&toks(&["x"]), &toks(&["x"]), &e, mode).unwrap();
            assert_eq!(s.value, 1.0);
        }
    }

    #[test]
    fn oov_and_zero_vectors_are_skipped() {
        let e = embedding(&[("x", [1.0, 0.0]), ("zero", [0.0, 0.0]), ("y", [0.0, 1.0])]);
        let s = dual_score(
            &toks(&["x", "oov", "zero"]),
            &toks(&["y", "zero", "x", "oov"]),
            &e,
            DesmMode::IN_IN,
        )
        .unwrap();
        assert_eq!((s.question_terms, s.spec_terms), (1, 2));
        assert_eq!(
            dual_score(&toks(&["oov"]), &toks(&["x"]), &e, DesmMode::IN_IN),
            Err(DesmError::UnscorableQuestion)
        );
        assert_eq!(
            dual_score(&toks(&["x"]), &toks(&["zero"]), &e, DesmMode::IN_IN),
            Err(DesmError::UnscorableSpecification)
        );
    }

    #[test]
    fn cancelling_centroid_is_unscorable() {
        let e = embedding(&[("p", [1.0, 0.0]), ("n", [-1.0, 0.0])]);
        assert_eq!(
            dual_score(&toks(&["p"]), &toks(&["p", "n"]), &e, DesmMode::IN_IN),
            Err(DesmError::UnscorableSpecification)
        );
    }

    #[test]
    fn duplicate_question_terms_weigh_by_multiplicity() {
        let e = embedding(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let s = dual_score(&toks(&["a", "a", "b"]), &toks(&["a"]), &e, DesmMode::IN_IN).unwrap();
        assert!((s.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.question_terms, 3);
    }

    #[test]
    fn modes_select_matrices() {
        let vocab = Vocab::from_entries(vec![("a".into(), 1), ("b".into(), 1)]).unwrap();
        let in_m = vec![1.0, 0.0, 1.0, 0.0];
        let out_m = vec![1.0, 0.0, 0.0, 1.0];
        let e = DualEmbedding::from_parts(2, vocab, in_m, out_m).unwrap();
        let q = toks(&["a"]);
        let s = toks(&["b"]);
        let v = |m| dual_score(&q, &s, &e, m).unwrap().value;
        assert_eq!(v(DesmMode::IN_IN), 1.0);
        assert_eq!(v(DesmMode::OUT_OUT), 0.0);
        assert_eq!(v(DesmMode::IN_OUT), 0.0);
        assert_eq!(v(DesmMode::OUT_IN), 1.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("OUT-OUT".parse::<DesmMode>().unwrap(), DesmMode::OUT_OUT);
        assert_eq!("in_out".parse::<DesmMode>().unwrap(), DesmMode::IN_OUT);
        assert!("out".parse::<DesmMode>().is_err());
        assert!("up-down".parse::<DesmMode>().is_err());
        assert_eq!(DesmMode::default().to_string(), "out-out");
    }

    #[test]
    fn score_all_marks_unscorable_specs() {
        let e = embedding(&[("core", [1.0, 0.0]), ("single", [0.6, 0.8]), ("ram", [0.0, 1.0])]);
        let rules = AnswerTypeRules::default();
        let q = Question::new("q1", "is it single core", None, &rules).unwrap();
        let product = Product {
            product_id: "p".into(),
            vertical: "Computer".into(),
            specs: vec![
                Specification::new("processor core", "dual", 0).unwrap(),
                Specification::new("colour", "black", 1).unwrap(),
                Specification::new("ram", "8", 2).unwrap(),
            ],
            questions: vec![],
        };
        let scores = score_all(&q, &product, &e, DesmMode::OUT_OUT).unwrap();
        assert_eq!(scores.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(scores[1].1, SpecScore::Unscorable);
        assert!(scores[0].1.value().is_some() && scores[2].1.value().is_some());

        let oov = Question::new("q2", "what colour", None, &rules).unwrap();
        assert_eq!(
            score_all(&oov, &product, &e, DesmMode::OUT_OUT),
            Err(DesmError::UnscorableQuestion)
        );
    }
}
