//! Multi-label F1 and corpus-level BLEU.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::augment::AugmentationLedger;
use crate::corpus::{Corpus, ParagraphId, ProvenanceKind};
use crate::error::{Error, Result};
use crate::taxonomy::{Language, Technique, NUM_TECHNIQUES};

/// Predicted techniques per paragraph; a missing id predicts nothing.
pub type PredictionSet = BTreeMap<ParagraphId, BTreeSet<Technique>>;

/// Gold label sets of a corpus as a prediction set.
pub fn gold_labels(corpus: &Corpus) -> PredictionSet {
    corpus
        .iter()
        .map(|p| (p.id.clone(), p.labels.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: u64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub confusion: Confusion,
    /// Labels counted in the macro mean (those with any gold or predicted
    /// occurrence).
    pub macro_labels: usize,
    pub per_label: BTreeMap<Technique, LabelReport>,
}

impl EvalReport {
    pub fn per_label_tsv(&self) -> String {
        let mut out = String::from("technique\tprecision\trecall\tf1\tsupport\n");
        for (t, r) in &self.per_label {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
                t, r.precision, r.recall, r.f1, r.support
            ));
        }
        out
    }
}

/// Per-label confusion counts, indexed by canonical technique order.
pub fn label_confusions(gold: &Corpus, pred: &PredictionSet) -> Result<[Confusion; NUM_TECHNIQUES]> {
    let gold_ids: HashMap<&ParagraphId, &BTreeSet<Technique>> =
        gold.iter().map(|p| (&p.id, &p.labels)).collect();
    if let Some(id) = pred.keys().find(|id| !gold_ids.contains_key(id)) {
        return Err(Error::UnknownId(id.clone()));
    }
    let empty = BTreeSet::new();
    let mut cells = [Confusion::default(); NUM_TECHNIQUES];
    for p in gold {
        let predicted = pred.get(&p.id).unwrap_or(&empty);
        for t in p.labels.union(predicted) {
            let c = &mut cells[t.index()];
            match (p.labels.contains(t), predicted.contains(t)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => unreachable!(),
            }
        }
    }
    Ok(cells)
}

pub fn report_from_confusions(cells: &[Confusion; NUM_TECHNIQUES]) -> EvalReport {
    let mut total = Confusion::default();
    let mut per_label = BTreeMap::new();
    let mut macro_sum = 0.0;
    let mut macro_labels = 0usize;
    for t in Technique::ALL {
        let c = cells[t.index()];
        total.add(c);
        if c.tp + c.fp + c.fn_ > 0 {
            macro_sum += c.f1();
            macro_labels += 1;
        }
        per_label.insert(
            t,
            LabelReport {
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
                support: c.tp + c.fn_,
                confusion: c,
            },
        );
    }
    EvalReport {
        micro_f1: total.f1(),
        macro_f1: if macro_labels == 0 {
            0.0
        } else {
            macro_sum / macro_labels as f64
        },
        micro_precision: total.precision(),
        micro_recall: total.recall(),
        confusion: total,
        macro_labels,
        per_label,
    }
}

/// Micro and macro F1 over all (paragraph, technique) decisions.
pub fn f1_multilabel(gold: &Corpus, pred: &PredictionSet) -> Result<EvalReport> {
    Ok(report_from_confusions(&label_confusions(gold, pred)?))
}

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '«' | '»' | '“' | '”' | '„' | '‘' | '’' | '‚' | '…' | '—' | '–' | '¿' | '¡' | '·'
                | '。' | '、' | '，' | '：' | '；' | '！' | '？'
        )
}

/// NFC, whitespace split, leading/trailing punctuation split off one
/// character per token. Case is kept.
pub fn bleu_tokenize(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect();
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|c| is_punct(**c)).count();
        if lead == chars.len() {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| is_punct(**c)).count();
        out.extend(chars[..lead].iter().map(|c| c.to_string()));
        out.push(chars[lead..chars.len() - trail].iter().collect());
        out.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScores {
    /// Cumulative BLEU-1..BLEU-n on a 0-100 scale.
    pub bleu: Vec<f64>,
    /// (clipped matches, hypothesis n-grams) per order.
    pub matches: Vec<(u64, u64)>,
    /// Set for orders whose cumulative score is zero because some
    /// precision up to that order is zero.
    pub zero_precision: Vec<bool>,
    pub hypothesis_length: u64,
    pub reference_length: u64,
    pub brevity_penalty: f64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus-level cumulative BLEU with one reference per hypothesis.
pub fn bleu_corpus<R: AsRef<str>, H: AsRef<str>>(pairs: &[(R, H)], max_n: usize) -> Result<BleuScores> {
    if pairs.is_empty() {
        return Err(Error::Empty("no hypothesis to score"));
    }
    let max_n = max_n.max(1);
    let mut matches = vec![(0u64, 0u64); max_n];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (r, h) in pairs {
        let r = bleu_tokenize(r.as_ref());
        let h = bleu_tokenize(h.as_ref());
        hyp_len += h.len() as u64;
        ref_len += r.len() as u64;
        for (k, m) in matches.iter_mut().enumerate() {
            let n = k + 1;
            let rc = ngram_counts(&r, n);
            let hc = ngram_counts(&h, n);
            for (g, c) in hc {
                m.0 += c.min(rc.get(g).copied().unwrap_or(0));
            }
            m.1 += h.len().saturating_sub(n - 1) as u64;
        }
    }
    let bp = if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let mut bleu = Vec::with_capacity(max_n);
    let mut zero = Vec::with_capacity(max_n);
    let mut log_sum = 0.0;
    let mut dead = false;
    for (k, &(num, den)) in matches.iter().enumerate() {
        if num == 0 || den == 0 {
            dead = true;
        }
        if dead {
            bleu.push(0.0);
            zero.push(true);
            continue;
        }
        log_sum += (num as f64 / den as f64).ln();
        let n = (k + 1) as f64;
        bleu.push(100.0 * bp * (log_sum / n).exp());
        zero.push(false);
    }
    Ok(BleuScores {
        bleu,
        matches,
        zero_precision: zero,
        hypothesis_length: hyp_len,
        reference_length: ref_len,
        brevity_penalty: bp,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBleu {
    pub source: Language,
    pub pivot: Language,
    pub pairs: usize,
    pub scores: BleuScores,
}

impl PairBleu {
    /// e.g. `en2ru2en`
    pub fn label(&self) -> String {
        format!("{0}2{1}2{0}", self.source, self.pivot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub groups: Vec<PairBleu>,
    /// Unweighted mean of BLEU-4 over each language's pivot groups.
    pub language_average: BTreeMap<Language, f64>,
}

impl BleuReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lang pair\t1-gram\t2-gram\t3-gram\t4-gram\n");
        for g in &self.groups {
            out.push_str(&g.label());
            for b in &g.scores.bleu {
                out.push_str(&format!("\t{b:.2}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn averages_tsv(&self) -> String {
        let mut out = String::from("language\tbleu4_average\n");
        for (l, v) in &self.language_average {
            out.push_str(&format!("{l}\t{v:.2}\n"));
        }
        out
    }
}

/// BLEU of back-translated paraphrases against their originals, grouped by
/// (source, pivot).
pub fn bleu_by_pair(
    ledger: &AugmentationLedger,
    originals: &Corpus,
    paraphrases: &Corpus,
) -> Result<BleuReport> {
    let by_output: HashMap<&ParagraphId, _> = ledger.records.iter().map(|r| (&r.output, r)).collect();
    let originals: HashMap<&ParagraphId, &str> =
        originals.iter().map(|p| (&p.id, p.text.as_str())).collect();
    let mut groups: BTreeMap<(Language, Language), Vec<(&str, &str)>> = BTreeMap::new();
    for p in paraphrases {
        let ProvenanceKind::BackTranslated { pivot } = p.provenance.kind else {
            continue;
        };
        let rec = by_output
            .get(&p.id)
            .ok_or_else(|| Error::OrphanParaphrase(p.id.clone()))?;
        let reference = originals
            .get(&rec.origin)
            .ok_or_else(|| Error::UnknownId(rec.origin.clone()))?;
        groups
            .entry((p.language, pivot))
            .or_default()
            .push((reference, p.text.as_str()));
    }
    let mut out = Vec::new();
    let mut per_lang: BTreeMap<Language, Vec<f64>> = BTreeMap::new();
    for ((source, pivot), pairs) in groups {
        let scores = bleu_corpus(&pairs, 4)?;
        per_lang.entry(source).or_default().push(scores.bleu[3]);
        out.push(PairBleu {
            source,
            pivot,
            pairs: pairs.len(),
            scores,
        });
    }
    let language_average = per_lang
        .into_iter()
        .map(|(l, v)| (l, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    Ok(BleuReport {
        groups: out,
        language_average,
    })
}
