//! HIT@k over annotated questions.
//!
//! HIT@k is the fraction of questions whose gold specification is among the
//! top k ranked specifications. Unrankable questions count as misses and are
//! tallied separately.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{AnswerType, ProductCatalog};
use crate::ranking::{rank, RankError, Scorer, ScorerError};

pub const DEFAULT_KS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("question {question_id:?} of product {product_id:?} has no gold_spec_index")]
    MissingGold {
        product_id: String,
        question_id: String,
    },
    #[error("no cutoffs requested")]
    EmptyKs,
    #[error("cutoff k must be >= 1")]
    ZeroK,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("report parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Hit counts for one slice of the questions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HitSummary {
    pub n_questions: usize,
    /// Parallel to the report's `ks`.
    pub hits: Vec<usize>,
    pub unrankable: usize,
}

impl HitSummary {
    fn new(n_ks: usize) -> Self {
        Self {
            n_questions: 0,
            hits: vec![0; n_ks],
            unrankable: 0,
        }
    }

    fn record(&mut self, ks: &[usize], gold_rank: Option<usize>) {
        self.n_questions += 1;
        if let Some(r) = gold_rank {
            for (h, &k) in self.hits.iter_mut().zip(ks) {
                *h += usize::from(r <= k);
            }
        }
    }

    pub fn rate(&self, i: usize) -> f64 {
        if self.n_questions == 0 {
            0.0
        } else {
            self.hits[i] as f64 / self.n_questions as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub scorer: String,
    /// Sorted, distinct cutoffs.
    pub ks: Vec<usize>,
    pub overall: HitSummary,
    pub by_answer_type: BTreeMap<AnswerType, HitSummary>,
}

impl EvalReport {
    pub fn n_questions(&self) -> usize {
        self.overall.n_questions
    }

    pub fn unrankable(&self) -> usize {
        self.overall.unrankable
    }

    pub fn hit_at(&self, k: usize) -> Option<f64> {
        self.ks
            .iter()
            .position(|&x| x == k)
            .map(|i| self.overall.rate(i))
    }

    pub fn to_row(&self) -> ReportRow {
        ReportRow {
            dataset: self.dataset.clone(),
            scorer: self.scorer.clone(),
            n: self.overall.n_questions,
            hit_at: self
                .ks
                .iter()
                .enumerate()
                .map(|(i, &k)| (k, self.overall.rate(i)))
                .collect(),
            unrankable: self.overall.unrankable,
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        report(std::slice::from_ref(self), format)
    }
}

fn normalize_ks(ks: &[usize]) -> Result<Vec<usize>, EvalError> {
    if ks.is_empty() {
        return Err(EvalError::EmptyKs);
    }
    if ks.contains(&0) {
        return Err(EvalError::ZeroK);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

/// Ranks every question of `catalog` with `scorer` and counts hits.
/// Questions are visited in product_id, question_id order.
pub fn evaluate<S: Scorer + ?Sized>(
    catalog: &ProductCatalog,
    scorer: &mut S,
    ks: &[usize],
    dataset: &str,
) -> Result<EvalReport, EvalError> {
    let ks = normalize_ks(ks)?;
    let mut products: Vec<_> = catalog.products().iter().collect();
    products.sort_by(|a, b| a.product_id.cmp(&b.product_id));
    for p in &products {
        if let Some(q) = p.questions.iter().find(|q| q.gold_spec_index.is_none()) {
            return Err(EvalError::MissingGold {
                product_id: p.product_id.clone(),
                question_id: q.question_id.clone(),
            });
        }
    }

    let mut overall = HitSummary::new(ks.len());
    let mut by_answer_type: BTreeMap<AnswerType, HitSummary> = BTreeMap::new();
    for product in products {
        let mut questions: Vec<_> = product.questions.iter().collect();
        questions.sort_by(|a, b| a.question_id.cmp(&b.question_id));
        for q in questions {
            let gold = q.gold_spec_index.expect("checked above");
            let (gold_rank, unrankable) = match rank(q, product, scorer) {
                Ok(list) => (list.rank_of(gold), false),
                Err(RankError::Unrankable { .. }) => (None, true),
                Err(RankError::Scorer(e)) => return Err(e.into()),
            };
            let slice = by_answer_type
                .entry(q.answer_type)
                .or_insert_with(|| HitSummary::new(ks.len()));
            for summary in [&mut overall, slice] {
                summary.record(&ks, gold_rank);
                summary.unrankable += usize::from(unrankable);
            }
        }
    }
    Ok(EvalReport {
        dataset: dataset.to_owned(),
        scorer: scorer.name().to_owned(),
        ks,
        overall,
        by_answer_type,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Self::Tsv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// One line of the report table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub scorer: String,
    pub n: usize,
    pub hit_at: Vec<(usize, f64)>,
    pub unrankable: usize,
}

/// Renders the report table; markdown output adds an answer-type breakdown.
pub fn report(reports: &[EvalReport], format: ReportFormat) -> String {
    let rows: Vec<ReportRow> = reports.iter().map(EvalReport::to_row).collect();
    let mut out = render_rows(&rows, format);
    if format == ReportFormat::Markdown && reports.iter().any(|r| !r.ks.is_empty() && r.n_questions() > 0) {
        out.push('\n');
        out.push_str(&render_breakdown(reports));
    }
    out
}

fn column_ks(rows: &[ReportRow]) -> Vec<usize> {
    let mut ks: Vec<usize> = rows.iter().flat_map(|r| r.hit_at.iter().map(|h| h.0)).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn rate_cell(row: &ReportRow, k: usize) -> Option<f64> {
    row.hit_at.iter().find(|h| h.0 == k).map(|h| h.1)
}

/// TSV columns: `dataset scorer n hit<k>... unrankable`. Rates are written
/// in shortest round-trip form so the file parses back exactly. When no
/// row carries any cutoff the table is header-only.
pub fn render_rows(rows: &[ReportRow], format: ReportFormat) -> String {
    let ks = column_ks(rows);
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str("dataset\tscorer\tn");
            for k in &ks {
                let _ = write!(out, "\thit{k}");
            }
            out.push_str("\tunrankable\n");
            if ks.is_empty() {
                return out;
            }
            for r in rows {
                let _ = write!(out, "{}\t{}\t{}", r.dataset, r.scorer, r.n);
                for &k in &ks {
                    match rate_cell(r, k) {
                        Some(v) => {
                            let _ = write!(out, "\t{v}");
                        }
                        None => out.push('\t'),
                    }
                }
                let _ = writeln!(out, "\t{}", r.unrankable);
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Dataset | Model | n |");
            for k in &ks {
                let _ = write!(out, " HIT@{k} |");
            }
            out.push_str(" Unrankable |\n|---|---|---:|");
            for _ in &ks {
                out.push_str("---:|");
            }
            out.push_str("---:|\n");
            if ks.is_empty() {
                return out;
            }
            // Group rows under their dataset, first-seen order.
            let mut datasets: Vec<&str> = Vec::new();
            for r in rows {
                if !datasets.contains(&r.dataset.as_str()) {
                    datasets.push(&r.dataset);
                }
            }
            for d in datasets {
                for (i, r) in rows.iter().filter(|r| r.dataset == d).enumerate() {
                    let label = if i == 0 { d } else { "" };
                    let _ = write!(out, "| {label} | {} | {} |", r.scorer, r.n);
                    for &k in &ks {
                        match rate_cell(r, k) {
                            Some(v) => {
                                let _ = write!(out, " {v:.2} |");
                            }
                            None => out.push_str(" |"),
                        }
                    }
                    let _ = writeln!(out, " {} |", r.unrankable);
                }
            }
        }
    }
    out
}

fn render_breakdown(reports: &[EvalReport]) -> String {
    let ks = column_ks(&reports.iter().map(EvalReport::to_row).collect::<Vec<_>>());
    let mut out = String::from("| Dataset | Model | Answer type | n |");
    for k in &ks {
        let _ = write!(out, " HIT@{k} |");
    }
    out.push_str("\n|---|---|---|---:|");
    for _ in &ks {
        out.push_str("---:|");
    }
    out.push('\n');
    for r in reports {
        for (t, s) in &r.by_answer_type {
            let _ = write!(out, "| {} | {} | {} | {} |", r.dataset, r.scorer, t, s.n_questions);
            for &k in &ks {
                match r.ks.iter().position(|&x| x == k) {
                    Some(i) => {
                        let _ = write!(out, " {:.2} |", s.rate(i));
                    }
                    None => out.push_str(" |"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Parses the TSV produced by [`render_rows`].
pub fn parse_report_tsv(text: &str) -> Result<Vec<ReportRow>, EvalError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let cols: Vec<&str> = header.split('\t').collect();
    let header_err = |message: String| EvalError::Parse { line: 1, message };
    if cols.len() < 4 || cols[..3] != ["dataset", "scorer", "n"] || cols.last() != Some(&"unrankable") {
        return Err(header_err(format!("unexpected header {header:?}")));
    }
    let ks: Vec<usize> = cols[3..cols.len() - 1]
        .iter()
        .map(|c| {
            c.strip_prefix("hit")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| header_err(format!("bad column {c:?}")))
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for (i, line) in lines {
        let err = |message: String| EvalError::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(err(format!("expected {} columns, found {}", cols.len(), fields.len())));
        }
        let n = fields[2].parse().map_err(|e| err(format!("bad n: {e}")))?;
        let unrankable = fields[fields.len() - 1]
            .parse()
            .map_err(|e| err(format!("bad unrankable: {e}")))?;
        let mut hit_at = Vec::new();
        for (&k, cell) in ks.iter().zip(&fields[3..fields.len() - 1]) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|e| err(format!("bad hit{k}: {e}")))?;
            hit_at.push((k, v));
        }
        rows.push(ReportRow {
            dataset: fields[0].to_owned(),
            scorer: fields[1].to_owned(),
            n,
            hit_at,
            unrankable,
        });
    }
    Ok(rows)
}
