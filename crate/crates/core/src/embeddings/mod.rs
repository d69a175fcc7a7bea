//! Skip-gram negative-sampling embeddings that keep both weight matrices.
//!
//! Standard word2vec exports only the input matrix (IN) and discards the
//! output matrix (OUT). Dual embedding scoring needs both, so [`train`]
//! returns them together as a [`DualEmbedding`].

mod io;
pub mod sgns;
mod vocab;

use std::io as stdio;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use self::io::{FORMAT_VERSION, MAGIC};
pub use self::vocab::{build_vocab, Vocab};
use self::sgns::{sgns_step, AtomicRows, DenseRows, Scratch};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o error: {0}")]
    Io(#[from] stdio::Error),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty vocabulary after applying min_count")]
    EmptyVocabulary,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch}, pair {pair} (learning rate {lr})")]
    NonFiniteLoss { epoch: usize, pair: u64, lr: f64 },
    #[error("unrecognized format (bad magic bytes)")]
    UnrecognizedFormat,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated embedding file")]
    Truncated,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("duplicate vocabulary term {0:?}")]
    DuplicateTerm(String),
}

/// Which weight matrix a vector is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    In,
    Out,
}

/// Vocabulary plus the IN and OUT matrices, each `|vocab| × dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEmbedding {
    dim: usize,
    vocab: Vocab,
    in_matrix: Vec<f32>,
    out_matrix: Vec<f32>,
}

impl DualEmbedding {
    pub fn from_parts(
        dim: usize,
        vocab: Vocab,
        in_matrix: Vec<f32>,
        out_matrix: Vec<f32>,
    ) -> Result<Self, EmbeddingError> {
        let expected = vocab.len() * dim;
        if dim == 0 || in_matrix.len() != expected || out_matrix.len() != expected {
            return Err(EmbeddingError::ShapeMismatch(format!(
                "expected {} × {dim} matrices, got {} and {} values",
                vocab.len(),
                in_matrix.len(),
                out_matrix.len()
            )));
        }
        Ok(Self {
            dim,
            vocab,
            in_matrix,
            out_matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn in_matrix(&self) -> &[f32] {
        &self.in_matrix
    }

    pub fn out_matrix(&self) -> &[f32] {
        &self.out_matrix
    }

    pub fn vector(&self, space: Space, id: usize) -> &[f32] {
        let m = match space {
            Space::In => &self.in_matrix,
            Space::Out => &self.out_matrix,
        };
        &m[id * self.dim..(id + 1) * self.dim]
    }

    pub fn lookup(&self, space: Space, term: &str) -> Option<&[f32]> {
        self.vocab.id(term).map(|id| self.vector(space, id))
    }

    /// Every matrix entry scaled by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        let scale = |m: &[f32]| m.iter().map(|v| v * factor).collect();
        Self {
            dim: self.dim,
            vocab: self.vocab.clone(),
            in_matrix: scale(&self.in_matrix),
            out_matrix: scale(&self.out_matrix),
        }
    }

    /// Equality on the bit patterns of every stored float.
    pub fn bit_eq(&self, other: &Self) -> bool {
        let bits = |m: &[f32]| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        self.dim == other.dim
            && self.vocab == other.vocab
            && bits(&self.in_matrix) == bits(&other.in_matrix)
            && bits(&self.out_matrix) == bits(&other.out_matrix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub seed: u64,
    /// Single-threaded, bit-reproducible training. When false, `threads`
    /// workers update the shared matrices without locks.
    pub deterministic: bool,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 1,
            seed: 42,
            deterministic: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_owned()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be a positive finite number");
        }
        if self.threads < 1 {
            return bad("threads must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    /// Mean per-pair loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: u64,
}

/// Final learning rate as a fraction of the initial one.
const MIN_LR_FRACTION: f64 = 1e-4;

/// Trains SGNS embeddings over `corpus`.
pub fn train<'a, I, S>(corpus: I, cfg: &TrainConfig) -> Result<DualEmbedding, EmbeddingError>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = &'a String>,
{
    train_with_stats(corpus, cfg).map(|(e, _)| e)
}

pub fn train_with_stats<'a, I, S>(
    corpus: I,
    cfg: &TrainConfig,
) -> Result<(DualEmbedding, TrainStats), EmbeddingError>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = &'a String>,
{
    cfg.validate()?;
    let sentences: Vec<Vec<&'a String>> = corpus
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();
    let vocab = build_vocab(sentences.iter().map(|s| s.iter().copied()), cfg.min_count)?;
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    let ids: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.id(t)).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();

    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let in_matrix: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| ((rng.gen::<f64>() - 0.5) / dim as f64) as f32)
        .collect();
    let out_matrix = vec![0f32; vocab.len() * dim];
    let noise = WeightedIndex::new(vocab.counts().iter().map(|&c| (c as f64).powf(0.75)))
        .expect("vocabulary counts are positive");

    let words_per_epoch: u64 = ids.iter().map(|s| s.len() as u64).sum();
    let schedule = LrSchedule {
        initial: cfg.initial_lr,
        total_words: words_per_epoch * cfg.epochs as u64,
    };

    let (in_matrix, out_matrix, stats) = if cfg.deterministic || cfg.threads == 1 {
        train_serial(&ids, in_matrix, out_matrix, &noise, &schedule, cfg, &mut rng)?
    } else {
        train_hogwild(&ids, in_matrix, out_matrix, &noise, &schedule, cfg)?
    };
    let embedding = DualEmbedding::from_parts(dim, vocab, in_matrix, out_matrix)?;
    Ok((embedding, stats))
}

struct LrSchedule {
    initial: f64,
    total_words: u64,
}

impl LrSchedule {
    /// Linear decay from `initial` to `initial * 1e-4` over all epochs.
    fn at(&self, words_done: u64) -> f64 {
        let progress = words_done as f64 / self.total_words.max(1) as f64;
        self.initial * (1.0 - progress).max(MIN_LR_FRACTION)
    }
}

/// Processes one sentence; returns (loss sum, pair count).
#[allow(clippy::too_many_arguments)]
fn train_sentence<I, O, R>(
    sentence: &[usize],
    input: &mut I,
    output: &mut O,
    noise: &WeightedIndex<f64>,
    cfg: &TrainConfig,
    lr_at: impl Fn(u64) -> f64,
    rng: &mut R,
    scratch: &mut Scratch<f32>,
    negatives: &mut Vec<usize>,
) -> (f64, u64)
where
    I: sgns::RowAccess<f32>,
    O: sgns::RowAccess<f32>,
    R: Rng,
{
    let mut loss = 0.0;
    let mut pairs = 0u64;
    for (pos, &center) in sentence.iter().enumerate() {
        let lr = lr_at(pos as u64) as f32;
        let lo = pos.saturating_sub(cfg.window);
        let hi = (pos + cfg.window).min(sentence.len() - 1);
        for (ctx_pos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
            if ctx_pos == pos {
                continue;
            }
            negatives.clear();
            for _ in 0..cfg.negatives {
                let n = noise.sample(rng);
                if n != context {
                    negatives.push(n);
                }
            }
            loss += sgns_step(input, output, center, context, negatives, lr, scratch) as f64;
            pairs += 1;
        }
    }
    (loss, pairs)
}

type TrainOutput = (Vec<f32>, Vec<f32>, TrainStats);

fn train_serial(
    ids: &[Vec<usize>],
    mut in_matrix: Vec<f32>,
    mut out_matrix: Vec<f32>,
    noise: &WeightedIndex<f64>,
    schedule: &LrSchedule,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutput, EmbeddingError> {
    let dim = cfg.dim;
    let mut scratch = Scratch::new(dim);
    let mut negatives = Vec::with_capacity(cfg.negatives);
    let mut words_done = 0u64;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut pairs_per_epoch = 0;
    for epoch in 0..cfg.epochs {
        let mut input = DenseRows::new(&mut in_matrix, dim);
        let mut output = DenseRows::new(&mut out_matrix, dim);
        let (mut loss, mut pairs) = (0.0, 0u64);
        for sentence in ids {
            let base = words_done;
            let (l, p) = train_sentence(
                sentence,
                &mut input,
                &mut output,
                noise,
                cfg,
                |offset| schedule.at(base + offset),
                rng,
                &mut scratch,
                &mut negatives,
            );
            words_done += sentence.len() as u64;
            loss += l;
            pairs += p;
            if !l.is_finite() {
                return Err(EmbeddingError::NonFiniteLoss {
                    epoch: epoch + 1,
                    pair: pairs,
                    lr: schedule.at(words_done),
                });
            }
        }
        epoch_losses.push(loss / pairs.max(1) as f64);
        pairs_per_epoch = pairs;
    }
    Ok((
        in_matrix,
        out_matrix,
        TrainStats {
            epoch_losses,
            pairs_per_epoch,
        },
    ))
}

fn train_hogwild(
    ids: &[Vec<usize>],
    in_matrix: Vec<f32>,
    out_matrix: Vec<f32>,
    noise: &WeightedIndex<f64>,
    schedule: &LrSchedule,
    cfg: &TrainConfig,
) -> Result<TrainOutput, EmbeddingError> {
    let dim = cfg.dim;
    let input = AtomicRows::from_vec(in_matrix, dim);
    let output = AtomicRows::from_vec(out_matrix, dim);
    let words_done = AtomicU64::new(0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut pairs_per_epoch = 0;
    for epoch in 0..cfg.epochs {
        let results: Vec<(f64, u64)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.threads)
                .map(|worker| {
                    let (input, output, words_done) = (&input, &output, &words_done);
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(
                            cfg.seed ^ ((epoch * cfg.threads + worker) as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                        );
                        let mut scratch = Scratch::new(dim);
                        let mut negatives = Vec::with_capacity(cfg.negatives);
                        let (mut inp, mut out) = (input, output);
                        let (mut loss, mut pairs) = (0.0, 0u64);
                        for sentence in ids.iter().skip(worker).step_by(cfg.threads) {
                            let base = words_done.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                            let (l, p) = train_sentence(
                                sentence,
                                &mut inp,
                                &mut out,
                                noise,
                                cfg,
                                |offset| schedule.at(base + offset),
                                &mut rng,
                                &mut scratch,
                                &mut negatives,
                            );
                            loss += l;
                            pairs += p;
                        }
                        (loss, pairs)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });
        let loss: f64 = results.iter().map(|r| r.0).sum();
        let pairs: u64 = results.iter().map(|r| r.1).sum();
        if !loss.is_finite() {
            return Err(EmbeddingError::NonFiniteLoss {
                epoch: epoch + 1,
                pair: pairs,
                lr: schedule.at(words_done.load(Ordering::Relaxed)),
            });
        }
        epoch_losses.push(loss / pairs.max(1) as f64);
        pairs_per_epoch = pairs;
    }
    Ok((
        input.into_vec(),
        output.into_vec(),
        TrainStats {
            epoch_losses,
            pairs_per_epoch,
        },
    ))
}
