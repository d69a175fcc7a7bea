//! Semi-supervised training-set construction.
//!
//! 1. Pick the threshold θ that best separates a small hand-labeled
//!    validation set by DUAL score ([`sweep_threshold`]).
//! 2. Label every question × specification pair of a catalog as positive
//!    when its score is `>= θ` ([`label_corpus`]).
//! 3. Keep all positives and an equal-sized uniform sample of negatives
//!    ([`balance`]).

use std::fmt;
use std::io::{self, BufRead, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{normalize, TokenSequence};
use crate::desm::{dual_score, DesmMode, PreparedQuestion};
use crate::embeddings::DualEmbedding;
use crate::corpus::ProductCatalog;

#[derive(Debug, Error)]
pub enum LabelingError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty validation set ({rejected} pairs rejected as unscorable)")]
    EmptyValidation { rejected: usize },
    #[error("degenerate threshold grid: {0}")]
    DegenerateGrid(String),
    #[error("cannot balance: {positives} positives but only {negatives} negatives")]
    NotEnoughNegatives { positives: usize, negatives: usize },
    #[error("cannot balance: no positive pairs")]
    NoPositives,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationPair {
    pub question_text: String,
    pub spec_text: String,
    pub question: TokenSequence,
    pub spec: TokenSequence,
    pub relevant: bool,
}

impl ValidationPair {
    pub fn new(question_text: &str, spec_text: &str, relevant: bool) -> Self {
        Self {
            question_text: question_text.to_owned(),
            spec_text: spec_text.to_owned(),
            question: normalize(question_text),
            spec: normalize(spec_text),
            relevant,
        }
    }
}

/// Reads `question_text \t spec_text \t label{1,0}` rows.
pub fn read_validation_tsv<R: BufRead>(reader: R) -> Result<Vec<ValidationPair>, LabelingError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parse_err = |message: String| LabelingError::Parse { line: i + 1, message };
        if cols.len() != 3 {
            return Err(parse_err(format!("expected 3 columns, found {}", cols.len())));
        }
        let relevant = parse_label(cols[2]).map_err(parse_err)?;
        out.push(ValidationPair::new(cols[0], cols[1], relevant));
    }
    Ok(out)
}

pub fn write_validation_tsv<W: Write>(mut w: W, pairs: &[ValidationPair]) -> io::Result<()> {
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}",
            sanitize(&p.question_text),
            sanitize(&p.spec_text),
            u8::from(p.relevant)
        )?;
    }
    Ok(())
}

fn parse_label(s: &str) -> Result<bool, String> {
    match s.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(format!("label must be 1 or 0, got {other:?}")),
    }
}

/// Tabs and line breaks would break the TSV framing.
pub(crate) fn sanitize(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Inclusive grid `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self {
            lo: -1.0,
            hi: 1.0,
            step: 0.01,
        }
    }
}

impl ThresholdGrid {
    pub fn validate(&self) -> Result<(), LabelingError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(LabelingError::DegenerateGrid("bounds must be finite".into()));
        }
        if self.lo >= self.hi {
            return Err(LabelingError::DegenerateGrid(format!(
                "lo {} must be below hi {}",
                self.lo, self.hi
            )));
        }
        if self.step <= 0.0 {
            return Err(LabelingError::DegenerateGrid("step must be positive".into()));
        }
        if (self.hi - self.lo) / self.step > 1e7 {
            return Err(LabelingError::DegenerateGrid("more than 1e7 grid points".into()));
        }
        Ok(())
    }

    /// Grid points, rounded to 10 decimals so `0.21` is the literal `0.21`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SweepStrategy {
    #[default]
    Grid,
    /// Candidates are the lowest observed score, the midpoints between
    /// consecutive distinct scores, and one point above the highest score.
    Midpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub theta_star: f64,
    pub accuracy_at_theta_star: f64,
    pub sweep_table: Vec<(f64, f64)>,
    /// Validation pairs used after dropping unscorable ones.
    pub n_pairs: usize,
    pub rejected: usize,
}

impl ThresholdReport {
    /// `# theta_star=.. accuracy=.. n=.. rejected=..` followed by
    /// `theta \t accuracy` rows.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# theta_star={} accuracy={} n={} rejected={}",
            self.theta_star, self.accuracy_at_theta_star, self.n_pairs, self.rejected
        )?;
        writeln!(w, "theta\taccuracy")?;
        for (theta, acc) in &self.sweep_table {
            writeln!(w, "{theta}\t{acc}")?;
        }
        Ok(())
    }
}

/// Scores every validation pair; unscorable pairs are dropped and counted.
pub fn score_validation(
    pairs: &[ValidationPair],
    e: &DualEmbedding,
    mode: DesmMode,
) -> (Vec<(f64, bool)>, usize) {
    let mut scored = Vec::with_capacity(pairs.len());
    let mut rejected = 0;
    for p in pairs {
        match dual_score(&p.question, &p.spec, e, mode) {
            Ok(s) => scored.push((s.value, p.relevant)),
            Err(_) => rejected += 1,
        }
    }
    (scored, rejected)
}

pub fn sweep_threshold(
    pairs: &[ValidationPair],
    e: &DualEmbedding,
    mode: DesmMode,
    grid: ThresholdGrid,
) -> Result<ThresholdReport, LabelingError> {
    grid.validate()?;
    let (scored, rejected) = score_validation(pairs, e, mode);
    let mut report = sweep_scores(&scored, &grid.points(), rejected)?;
    report.rejected = rejected;
    Ok(report)
}

/// Threshold sweep over pre-computed `(score, relevant)` pairs.
pub fn sweep_scores(
    scored: &[(f64, bool)],
    candidates: &[f64],
    rejected: usize,
) -> Result<ThresholdReport, LabelingError> {
    if scored.is_empty() {
        return Err(LabelingError::EmptyValidation { rejected });
    }
    if candidates.is_empty() {
        return Err(LabelingError::DegenerateGrid("no candidate thresholds".into()));
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let total_relevant = sorted.iter().filter(|p| p.1).count();

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].total_cmp(&candidates[b]));
    let mut accuracy = vec![0.0; candidates.len()];
    // Walk thresholds upwards; `below` pairs are predicted irrelevant.
    let (mut below, mut relevant_below) = (0usize, 0usize);
    for &ci in &order {
        let theta = candidates[ci];
        while below < n && sorted[below].0 < theta {
            relevant_below += usize::from(sorted[below].1);
            below += 1;
        }
        let correct_negatives = below - relevant_below;
        let correct_positives = total_relevant - relevant_below;
        accuracy[ci] = (correct_positives + correct_negatives) as f64 / n as f64;
    }

    let sweep_table: Vec<(f64, f64)> = order.iter().map(|&i| (candidates[i], accuracy[i])).collect();
    let (mut theta_star, mut best) = sweep_table[0];
    for &(theta, acc) in &sweep_table[1..] {
        if acc > best {
            theta_star = theta;
            best = acc;
        }
    }
    Ok(ThresholdReport {
        theta_star,
        accuracy_at_theta_star: best,
        sweep_table,
        n_pairs: n,
        rejected,
    })
}

/// Midpoint candidates for [`SweepStrategy::Midpoints`].
pub fn midpoint_candidates(scored: &[(f64, bool)]) -> Vec<f64> {
    let mut values: Vec<f64> = scored.iter().map(|p| p.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let Some((&first, &last)) = values.first().zip(values.last()) else {
        return Vec::new();
    };
    let mut out = vec![first];
    out.extend(values.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(last + 1e-9_f64.max(last.abs() * 1e-12));
    out
}

pub fn sweep_threshold_with(
    pairs: &[ValidationPair],
    e: &DualEmbedding,
    mode: DesmMode,
    grid: ThresholdGrid,
    strategy: SweepStrategy,
) -> Result<ThresholdReport, LabelingError> {
    match strategy {
        SweepStrategy::Grid => sweep_threshold(pairs, e, mode, grid),
        SweepStrategy::Midpoints => {
            let (scored, rejected) = score_validation(pairs, e, mode);
            sweep_scores(&scored, &midpoint_candidates(&scored), rejected)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_score(score: f64, theta: f64) -> Self {
        if score >= theta {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "1",
            Label::Negative => "0",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub product_id: String,
    pub question_id: String,
    pub spec_index: usize,
    pub spec_text: String,
    pub question_text: String,
    pub score: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelingOutput {
    pub pairs: Vec<LabeledPair>,
    /// Question × spec pairs skipped because the spec had no usable terms.
    pub skipped_pairs: usize,
    /// Questions skipped entirely (each contributes its product's M pairs
    /// to `skipped_pairs`).
    pub unscorable_questions: usize,
}

impl LabelingOutput {
    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label == Label::Positive).count()
    }

    pub fn negatives(&self) -> usize {
        self.pairs.len() - self.positives()
    }
}

/// Labels every question against its own product's specifications. Output
/// is ordered by product_id, question_id, spec index.
pub fn label_corpus(
    catalog: &ProductCatalog,
    e: &DualEmbedding,
    mode: DesmMode,
    theta: f64,
) -> LabelingOutput {
    let mut products: Vec<_> = catalog.products().iter().collect();
    products.sort_by(|a, b| a.product_id.cmp(&b.product_id));
    let per_product: Vec<LabelingOutput> = products
        .par_iter()
        .map(|product| {
            let mut out = LabelingOutput::default();
            let mut questions: Vec<_> = product.questions.iter().collect();
            questions.sort_by(|a, b| a.question_id.cmp(&b.question_id));
            for q in questions {
                let Ok(prepared) = PreparedQuestion::new(&q.tokens, e, mode) else {
                    out.unscorable_questions += 1;
                    out.skipped_pairs += product.specs.len();
                    continue;
                };
                for spec in &product.specs {
                    match prepared.score(spec.tokens(), e, mode) {
                        Ok(s) => out.pairs.push(LabeledPair {
                            product_id: product.product_id.clone(),
                            question_id: q.question_id.clone(),
                            spec_index: spec.index,
                            spec_text: spec.text().to_owned(),
                            question_text: q.text.clone(),
                            score: s.value,
                            label: Label::from_score(s.value, theta),
                        }),
                        Err(_) => out.skipped_pairs += 1,
                    }
                }
            }
            out
        })
        .collect();
    per_product
        .into_iter()
        .fold(LabelingOutput::default(), |mut acc, part| {
            acc.pairs.extend(part.pairs);
            acc.skipped_pairs += part.skipped_pairs;
            acc.unscorable_questions += part.unscorable_questions;
            acc
        })
}

/// All positives plus `|positives|` negatives drawn uniformly without
/// replacement. Selected pairs keep their input order.
pub fn balance(pairs: Vec<LabeledPair>, seed: u64) -> Result<Vec<LabeledPair>, LabelingError> {
    let positives = pairs.iter().filter(|p| p.label == Label::Positive).count();
    let negative_positions: Vec<usize> = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.label == Label::Negative)
        .map(|(i, _)| i)
        .collect();
    if positives == 0 {
        return Err(LabelingError::NoPositives);
    }
    if negative_positions.len() < positives {
        return Err(LabelingError::NotEnoughNegatives {
            positives,
            negatives: negative_positions.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; pairs.len()];
    for i in sample(&mut rng, negative_positions.len(), positives) {
        keep[negative_positions[i]] = true;
    }
    Ok(pairs
        .into_iter()
        .zip(keep)
        .filter(|(p, k)| *k || p.label == Label::Positive)
        .map(|(p, _)| p)
        .collect())
}

/// `product_id \t question_id \t spec_index \t spec_text \t question_text \t
/// score \t label`, score with 9 decimals.
pub fn write_labeled_tsv<W: Write>(mut w: W, pairs: &[LabeledPair]) -> io::Result<()> {
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{:.9}\t{}",
            sanitize(&p.product_id),
            sanitize(&p.question_id),
            p.spec_index,
            sanitize(&p.spec_text),
            sanitize(&p.question_text),
            p.score,
            p.label
        )?;
    }
    Ok(())
}

pub fn read_labeled_tsv<R: BufRead>(reader: R) -> Result<Vec<LabeledPair>, LabelingError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| LabelingError::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(parse_err(format!("expected 7 columns, found {}", cols.len())));
        }
        let spec_index = cols[2]
            .parse()
            .map_err(|e| parse_err(format!("bad spec_index {:?}: {e}", cols[2])))?;
        let score: f64 = cols[5]
            .parse()
            .map_err(|e| parse_err(format!("bad score {:?}: {e}", cols[5])))?;
        let label = if parse_label(cols[6]).map_err(parse_err)? {
            Label::Positive
        } else {
            Label::Negative
        };
        out.push(LabeledPair {
            product_id: cols[0].to_owned(),
            question_id: cols[1].to_owned(),
            spec_index,
            spec_text: cols[3].to_owned(),
            question_text: cols[4].to_owned(),
            score,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(score: f64, label: Label, i: usize) -> LabeledPair {
        LabeledPair {
            product_id: "p".into(),
            question_id: format!("q{i:03}"),
            spec_index: i,
            spec_text: "material polyester".into(),
            question_text: "what is the fabric".into(),
            score,
            label,
        }
    }

    #[test]
    fn separable_sweep_picks_smallest_theta() {
        let mut scored = vec![];
        for i in 0..10 {
            scored.push((0.6 + i as f64 * 0.03, true));
            scored.push((0.2 - i as f64 * 0.05, false));
        }
        let grid = ThresholdGrid { lo: 0.0, hi: 1.0, step: 0.01 };
        let r = sweep_scores(&scored, &grid.points(), 0).unwrap();
        assert_eq!(r.theta_star, 0.21);
        assert_eq!(r.accuracy_at_theta_star, 1.0);
        assert_eq!(r.sweep_table.len(), 101);
    }

    #[test]
    fn single_pair_tie_breaks_low() {
        let grid = ThresholdGrid { lo: 0.0, hi: 1.0, step: 0.25 };
        assert_eq!(grid.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let r = sweep_scores(&[(0.5, true)], &grid.points(), 0).unwrap();
        assert_eq!(r.theta_star, 0.0);
        assert_eq!(r.accuracy_at_theta_star, 1.0);
        assert_eq!(r.sweep_table[2], (0.5, 1.0));
        assert_eq!(r.sweep_table[3], (0.75, 0.0));
    }

    #[test]
    fn grid_errors() {
        assert!(ThresholdGrid { lo: 1.0, hi: 1.0, step: 0.1 }.validate().is_err());
        assert!(ThresholdGrid { lo: 0.0, hi: 1.0, step: 0.0 }.validate().is_err());
        assert!(ThresholdGrid { lo: 0.0, hi: f64::NAN, step: 0.1 }.validate().is_err());
        assert!(matches!(
            sweep_scores(&[], &[0.0], 3),
            Err(LabelingError::EmptyValidation { rejected: 3 })
        ));
        assert_eq!(ThresholdGrid::default().points().len(), 201);
    }

    #[test]
    fn midpoints_cover_all_splits() {
        let scored = vec![(0.1, false), (0.3, true), (0.3, true), (0.7, true)];
        let c = midpoint_candidates(&scored);
        assert_eq!(c.len(), 4);
        assert_eq!(c[0], 0.1);
        assert!((c[1] - 0.2).abs() < 1e-15);
        let r = sweep_scores(&scored, &c, 0).unwrap();
        assert_eq!(r.accuracy_at_theta_star, 1.0);
        assert!((r.theta_star - 0.2).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_inclusive() {
        assert_eq!(Label::from_score(0.34, 0.34), Label::Positive);
        assert_eq!(Label::from_score(0.339, 0.34), Label::Negative);
    }

    #[test]
    fn balance_counts_and_determinism() {
        let pairs: Vec<_> = (0..110)
            .map(|i| pair(0.0, if i % 11 == 0 { Label::Positive } else { Label::Negative }, i))
            .collect();
        let a = balance(pairs.clone(), 42).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a.iter().filter(|p| p.label == Label::Positive).count(), 10);
        assert_eq!(balance(pairs.clone(), 42).unwrap(), a);
        assert_ne!(balance(pairs, 43).unwrap(), a);
    }

    #[test]
    fn balance_errors() {
        let mut pairs: Vec<_> = (0..10).map(|i| pair(0.9, Label::Positive, i)).collect();
        pairs.extend((10..15).map(|i| pair(0.1, Label::Negative, i)));
        assert!(matches!(
            balance(pairs, 1),
            Err(LabelingError::NotEnoughNegatives { positives: 10, negatives: 5 })
        ));
        let negs: Vec<_> = (0..3).map(|i| pair(0.1, Label::Negative, i)).collect();
        assert!(matches!(balance(negs, 1), Err(LabelingError::NoPositives)));
    }

    #[test]
    fn labeled_tsv_format() {
        let p = LabeledPair {
            question_text: "is it\tgood?".into(),
            ..pair(0.123456789123, Label::Positive, 3)
        };
        let mut buf = Vec::new();
        write_labeled_tsv(&mut buf, &[p]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "p\tq003\t3\tmaterial polyester\tis it good?\t0.123456789\t1\n"
        );
        let back = read_labeled_tsv(text.as_bytes()).unwrap();
        assert_eq!(back[0].score, 0.123456789);
        assert!(matches!(
            read_labeled_tsv("a\tb\n".as_bytes()),
            Err(LabelingError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn validation_tsv() {
        let text = "# header\nwhat is the fabric\tmaterial polyester\t1\nis it red\tram 8 gb\t0\n";
        let pairs = read_validation_tsv(text.as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs[0].relevant && !pairs[1].relevant);
        assert_eq!(pairs[1].spec.as_slice(), &["ram", "8", "gb"]);
        assert!(read_validation_tsv("a\tb\tyes\n".as_bytes()).is_err());
        let mut out = Vec::new();
        write_validation_tsv(&mut out, &pairs).unwrap();
        assert_eq!(read_validation_tsv(out.as_slice()).unwrap(), pairs);
    }
}
