//! Built-in baseline predictor and the score-file contract.
//!
//! The baseline is a one-vs-rest logistic classifier over hashed character
//! n-grams. External predictors plug in by writing a score TSV with one
//! probability per canonical technique.

use std::collections::HashMap;
use std::fs;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{write_file, Corpus, ParagraphId};
use crate::error::{Error, Result};
use crate::metrics::{f1_multilabel, PredictionSet};
use crate::taxonomy::{Technique, NUM_TECHNIQUES};

pub const MODEL_FORMAT: &str = "persuasion-ovr/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub hash_dim: usize,
    pub l2_normalize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_min: 3,
            ngram_max: 5,
            hash_dim: 1 << 18,
            l2_normalize: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return Err(Error::Config(format!(
                "bad n-gram range {}..={}",
                self.ngram_min, self.ngram_max
            )));
        }
        if !self.hash_dim.is_power_of_two() || self.hash_dim > 1 << 31 {
            return Err(Error::Config(format!(
                "hash_dim {} is not a power of two",
                self.hash_dim
            )));
        }
        Ok(())
    }
}

/// Sparse vector sorted by index, no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Signed hashed counts of lowercased NFC character n-grams.
pub fn featurize(text: &str, cfg: &FeatureConfig) -> Result<SparseVec> {
    if text.is_empty() {
        return Err(Error::Empty("cannot featurize empty text"));
    }
    let chars: Vec<char> = text.nfc().flat_map(char::to_lowercase).collect();
    let mask = (cfg.hash_dim - 1) as u64;
    let mut acc: HashMap<u32, f64> = HashMap::new();
    let mut buf = [0u8; 4];
    for n in cfg.ngram_min..=cfg.ngram_max {
        if chars.len() < n {
            break;
        }
        for w in chars.windows(n) {
            let mut h = FnvHasher::default();
            for c in w {
                h.write(c.encode_utf8(&mut buf).as_bytes());
            }
            let h = h.finish();
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            *acc.entry((h & mask) as u32).or_insert(0.0) += sign;
        }
    }
    let mut entries: Vec<(u32, f64)> = acc.into_iter().filter(|(_, v)| *v != 0.0).collect();
    entries.sort_unstable_by_key(|(i, _)| *i);
    let mut v = SparseVec { entries };
    if cfg.l2_normalize {
        let norm = v.norm();
        if norm > 0.0 {
            v.entries.iter_mut().for_each(|(_, x)| *x /= norm);
        }
    }
    Ok(v)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary logistic model over compact (dense) feature indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Training example in compact index space.
pub type Example = Vec<(usize, f64)>;

impl LogisticHead {
    pub fn zeros(dim: usize) -> Self {
        LogisticHead {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn logit(&self, x: &[(usize, f64)]) -> f64 {
        self.bias + x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    pub fn prob(&self, x: &[(usize, f64)]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Summed binary cross-entropy.
    pub fn loss(&self, xs: &[Example], ys: &[bool]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| {
                let z = self.logit(x);
                // log(1 + e^z) - y z, computed stably
                let softplus = if z > 0.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                };
                softplus - if y { z } else { 0.0 }
            })
            .sum()
    }

    /// Gradient of [`loss`](Self::loss) as (weights, bias).
    pub fn gradient(&self, xs: &[Example], ys: &[bool]) -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let r = self.prob(x) - if y { 1.0 } else { 0.0 };
            gb += r;
            for &(i, v) in x {
                gw[i] += r * v;
            }
        }
        (gw, gb)
    }

    fn step(&mut self, xs: &[&Example], ys: &[bool], lr: f64) {
        // sparse update: only touched coordinates change
        let mut gb = 0.0;
        let mut touched: Vec<(usize, f64)> = Vec::new();
        for (x, &y) in xs.iter().zip(ys) {
            let r = self.prob(x) - if y { 1.0 } else { 0.0 };
            gb += r;
            touched.extend(x.iter().map(|&(i, v)| (i, r * v)));
        }
        for (i, g) in touched {
            self.weights[i] -= lr * g;
        }
        self.bias -= lr * gb;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub selection: SelectionMetric,
    pub features: FeatureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 10,
            batch_size: 64,
            seed: 42,
            selection: SelectionMetric::Micro,
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_dev_micro_f1: f64,
    pub best_dev_macro_f1: f64,
    pub seed: u64,
    /// Mean training loss over all heads after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Labels with no positive (or no negative) training example; their
    /// head is bias-only at the smoothed prior.
    pub degenerate_labels: Vec<Technique>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub format: String,
    pub config: TrainConfig,
    /// Hash buckets seen in training, sorted; weights index into this list.
    pub buckets: Vec<u32>,
    pub heads: Vec<LogisticHead>,
    pub metadata: TrainingMetadata,
}

struct Compactor<'a> {
    index: &'a HashMap<u32, usize>,
}

impl Compactor<'_> {
    fn compact(&self, v: &SparseVec) -> Example {
        v.entries
            .iter()
            .filter_map(|(b, x)| self.index.get(b).map(|&i| (i, *x)))
            .collect()
    }
}

fn predict_rows(heads: &[LogisticHead], xs: &[Example]) -> Vec<[f64; NUM_TECHNIQUES]> {
    xs.iter()
        .map(|x| {
            let mut row = [0.0; NUM_TECHNIQUES];
            for (k, h) in heads.iter().enumerate() {
                row[k] = h.prob(x);
            }
            row
        })
        .collect()
}

fn threshold_rows(ids: &[ParagraphId], rows: &[[f64; NUM_TECHNIQUES]], theta: f64) -> PredictionSet {
    ids.iter()
        .zip(rows)
        .map(|(id, row)| {
            (
                id.clone(),
                Technique::ALL
                    .into_iter()
                    .filter(|t| row[t.index()] >= theta)
                    .collect(),
            )
        })
        .collect()
}

/// Trains one logistic head per technique, keeping the epoch with the best
/// dev score (at threshold 0.5).
pub fn train(train: &Corpus, dev: &Corpus, config: &TrainConfig) -> Result<OvrModel> {
    config.features.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    if dev.is_empty() {
        return Err(Error::Empty("dev corpus"));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let train_feats = train
        .iter()
        .map(|p| featurize(&p.text, &config.features))
        .collect::<Result<Vec<_>>>()?;
    let mut buckets: Vec<u32> = train_feats
        .iter()
        .flat_map(|v| v.entries.iter().map(|(b, _)| *b))
        .collect();
    buckets.sort_unstable();
    buckets.dedup();
    let index: HashMap<u32, usize> = buckets.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let compactor = Compactor { index: &index };
    let xs: Vec<Example> = train_feats.iter().map(|v| compactor.compact(v)).collect();
    let dev_xs: Vec<Example> = dev
        .iter()
        .map(|p| featurize(&p.text, &config.features).map(|v| compactor.compact(&v)))
        .collect::<Result<_>>()?;
    let dev_ids: Vec<ParagraphId> = dev.ids().cloned().collect();

    let labels: Vec<Vec<bool>> = Technique::ALL
        .iter()
        .map(|t| train.iter().map(|p| p.labels.contains(t)).collect())
        .collect();
    let n = xs.len();
    let mut heads: Vec<LogisticHead> = vec![LogisticHead::zeros(buckets.len()); NUM_TECHNIQUES];
    let mut degenerate = Vec::new();
    for t in Technique::ALL {
        let pos = labels[t.index()].iter().filter(|&&y| y).count();
        if pos == 0 || pos == n {
            let prior = (pos as f64 + 0.5) / (n as f64 + 1.0);
            heads[t.index()].bias = (prior / (1.0 - prior)).ln();
            degenerate.push(t);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(usize, f64, f64, f64, Vec<LogisticHead>)> = None;
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        heads
            .par_iter_mut()
            .enumerate()
            .filter(|(k, _)| !degenerate.contains(&Technique::ALL[*k]))
            .for_each(|(k, head)| {
                for batch in order.chunks(config.batch_size) {
                    let bx: Vec<&Example> = batch.iter().map(|&i| &xs[i]).collect();
                    let by: Vec<bool> = batch.iter().map(|&i| labels[k][i]).collect();
                    head.step(&bx, &by, config.learning_rate);
                }
            });
        let loss: f64 = heads
            .iter()
            .zip(&labels)
            .map(|(h, ys)| h.loss(&xs, ys))
            .sum::<f64>()
            / (n * NUM_TECHNIQUES) as f64;
        losses.push(loss);

        let rows = predict_rows(&heads, &dev_xs);
        let report = f1_multilabel(dev, &threshold_rows(&dev_ids, &rows, 0.5))?;
        let score = match config.selection {
            SelectionMetric::Micro => report.micro_f1,
            SelectionMetric::Macro => report.macro_f1,
        };
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((epoch + 1, score, report.micro_f1, report.macro_f1, heads.clone()));
        }
    }
    let (best_epoch, micro, macro_f1, best_heads) = match best {
        Some((e, _, mi, ma, h)) => (e, mi, ma, h),
        None => (0, 0.0, 0.0, heads),
    };
    Ok(OvrModel {
        format: MODEL_FORMAT.to_string(),
        config: *config,
        buckets,
        heads: best_heads,
        metadata: TrainingMetadata {
            epochs_run: config.epochs,
            best_epoch,
            best_dev_micro_f1: micro,
            best_dev_macro_f1: macro_f1,
            seed: config.seed,
            epoch_losses: losses,
            degenerate_labels: degenerate,
        },
    })
}

impl OvrModel {
    fn compact(&self, v: &SparseVec) -> Example {
        v.entries
            .iter()
            .filter_map(|(b, x)| self.buckets.binary_search(b).ok().map(|i| (i, *x)))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &serde_json::to_vec(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: OvrModel = serde_json::from_slice(&bytes)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "unsupported model format `{}`",
                model.format
            )));
        }
        if model.heads.len() != NUM_TECHNIQUES
            || model
                .heads
                .iter()
                .any(|h| h.weights.len() != model.buckets.len())
        {
            return Err(Error::Config("model head shape mismatch".into()));
        }
        Ok(model)
    }
}

/// Sigmoid outputs of every head for every paragraph.
pub fn predict_scores(model: &OvrModel, corpus: &Corpus) -> Result<ScoreMatrix> {
    let xs = corpus
        .paragraphs()
        .par_iter()
        .map(|p| featurize(&p.text, &model.config.features).map(|v| model.compact(&v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreMatrix {
        ids: corpus.ids().cloned().collect(),
        rows: predict_rows(&model.heads, &xs),
    })
}

// ---------------------------------------------------------------------------
// Score files
// ---------------------------------------------------------------------------

/// Per-paragraph probabilities in canonical technique order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub ids: Vec<ParagraphId>,
    pub rows: Vec<[f64; NUM_TECHNIQUES]>,
}

impl ScoreMatrix {
    pub fn new(ids: Vec<ParagraphId>, rows: Vec<[f64; NUM_TECHNIQUES]>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Schema(format!(
                "{} ids but {} rows",
                ids.len(),
                rows.len()
            )));
        }
        for (id, row) in ids.iter().zip(&rows) {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Schema(format!("value {v} for {id} outside [0, 1]")));
            }
        }
        Ok(ScoreMatrix { ids, rows })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, id: &ParagraphId) -> Option<&[f64; NUM_TECHNIQUES]> {
        self.ids.iter().position(|i| i == id).map(|k| &self.rows[k])
    }

    pub fn index(&self) -> HashMap<&ParagraphId, usize> {
        self.ids.iter().enumerate().map(|(k, id)| (id, k)).collect()
    }

    /// Every id must belong to `corpus`.
    pub fn validate_against(&self, corpus: &Corpus) -> Result<()> {
        let known: std::collections::HashSet<&ParagraphId> = corpus.ids().collect();
        match self.ids.iter().find(|id| !known.contains(id)) {
            Some(id) => Err(Error::Schema(format!("unknown paragraph id {id}"))),
            None => Ok(()),
        }
    }
}

/// Decimal text with 9 significant digits.
pub fn format_probability(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().expect("float formatting round-trips");
    format!("{rounded}")
}

pub fn write_scores(matrix: &ScoreMatrix, path: &Path) -> Result<()> {
    write_file(path, scores_to_string(matrix).as_bytes())
}

pub fn scores_to_string(matrix: &ScoreMatrix) -> String {
    let mut out = String::from("article_id\tparagraph_index");
    for t in Technique::ALL {
        out.push('\t');
        out.push_str(t.name());
    }
    out.push('\n');
    for (id, row) in matrix.ids.iter().zip(&matrix.rows) {
        out.push_str(&format!("{}\t{}", id.article_id, id.paragraph_index));
        for v in row {
            out.push('\t');
            out.push_str(&format_probability(*v));
        }
        out.push('\n');
    }
    out
}

pub fn read_scores(path: &Path) -> Result<ScoreMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_scores(&text).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn parse_scores(text: &str) -> Result<ScoreMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Schema("missing header".into()))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() != NUM_TECHNIQUES + 2 {
        return Err(Error::Schema(format!(
            "header has {} columns, expected {}",
            cols.len(),
            NUM_TECHNIQUES + 2
        )));
    }
    for (k, t) in Technique::ALL.iter().enumerate() {
        let name = cols[k + 2];
        if crate::taxonomy::parse_technique(name).ok() != Some(*t) {
            return Err(Error::Schema(format!(
                "column {} is `{name}`, expected `{}`",
                k + 3,
                t.name()
            )));
        }
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = n + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != NUM_TECHNIQUES + 2 {
            return Err(Error::Schema(format!(
                "line {lineno}: {} columns, expected {}",
                fields.len(),
                NUM_TECHNIQUES + 2
            )));
        }
        let index: u32 = fields[1]
            .parse()
            .map_err(|_| Error::Schema(format!("line {lineno}: bad paragraph index")))?;
        let id = ParagraphId::new(fields[0], index);
        if !seen.insert(id.clone()) {
            return Err(Error::Schema(format!("line {lineno}: duplicate id {id}")));
        }
        let mut row = [0.0; NUM_TECHNIQUES];
        for (k, f) in fields[2..].iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::Schema(format!("line {lineno}: bad value `{f}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Schema(format!(
                    "line {lineno}: value {v} outside [0, 1]"
                )));
            }
            row[k] = v;
        }
        ids.push(id);
        rows.push(row);
    }
    Ok(ScoreMatrix { ids, rows })
}
