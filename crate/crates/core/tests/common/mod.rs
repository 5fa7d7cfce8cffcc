//! Independent oracles and random fixtures shared by the integration tests.
//! Nothing here calls the library routine it is checking.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use persuasion_core::corpus::{Corpus, Paragraph, ParagraphId};
use persuasion_core::model::ScoreMatrix;
use persuasion_core::{Language, PredictionSet, Technique, NUM_TECHNIQUES};
use rand::Rng;

pub fn random_labels(rng: &mut impl Rng, density: f64) -> BTreeSet<Technique> {
    Technique::ALL
        .into_iter()
        .filter(|_| rng.gen_bool(density))
        .collect()
}

pub fn random_gold(rng: &mut impl Rng, n: usize, lang: Language) -> Corpus {
    let density = rng.gen_range(0.02..0.4);
    let paragraphs = (0..n)
        .map(|i| {
            Paragraph::gold(
                ParagraphId::new("g", i as u32 + 1),
                lang,
                format!("paragraph {i}"),
                random_labels(rng, density),
            )
        })
        .collect();
    Corpus::new(paragraphs).unwrap()
}

pub fn random_pred(rng: &mut impl Rng, gold: &Corpus) -> PredictionSet {
    let density = rng.gen_range(0.02..0.4);
    gold.iter()
        .map(|p| {
            // predictions partially agree with gold
            let noise = random_labels(rng, density);
            let kept: BTreeSet<Technique> = p
                .labels
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.6))
                .collect();
            (p.id.clone(), kept.union(&noise).copied().collect())
        })
        .collect()
}

/// Scores quantized to hundredths so grid ties happen.
pub fn random_scores(rng: &mut impl Rng, gold: &Corpus) -> ScoreMatrix {
    let ids = gold.ids().cloned().collect();
    let rows = gold
        .iter()
        .map(|p| {
            let mut row = [0.0; NUM_TECHNIQUES];
            for t in Technique::ALL {
                let base: f64 = rng.gen_range(0.0..1.0);
                let v = if p.labels.contains(&t) {
                    (base + 0.3).min(1.0)
                } else {
                    base * 0.8
                };
                row[t.index()] = (v * 100.0).round() / 100.0;
            }
            row
        })
        .collect();
    ScoreMatrix::new(ids, rows).unwrap()
}

/// Dense 0/1 contingency counts over every (paragraph, technique) cell.
pub fn oracle_f1(gold: &Corpus, pred: &PredictionSet) -> (f64, f64) {
    let n = gold.len();
    let mut g = vec![[false; NUM_TECHNIQUES]; n];
    let mut h = vec![[false; NUM_TECHNIQUES]; n];
    for (i, p) in gold.iter().enumerate() {
        for j in 0..NUM_TECHNIQUES {
            let t = Technique::ALL[j];
            g[i][j] = p.labels.contains(&t);
            h[i][j] = pred.get(&p.id).is_some_and(|s| s.contains(&t));
        }
    }
    let f1 = |tp: u64, fp: u64, fnn: u64| {
        let d = 2 * tp + fp + fnn;
        if d == 0 {
            0.0
        } else {
            (2 * tp) as f64 / d as f64
        }
    };
    let (mut tp, mut fp, mut fnn) = (0, 0, 0);
    let mut macro_sum = 0.0;
    let mut macro_n = 0;
    for j in 0..NUM_TECHNIQUES {
        let (mut a, mut b, mut c) = (0u64, 0u64, 0u64);
        for i in 0..n {
            match (g[i][j], h[i][j]) {
                (true, true) => a += 1,
                (false, true) => b += 1,
                (true, false) => c += 1,
                (false, false) => {}
            }
        }
        tp += a;
        fp += b;
        fnn += c;
        if a + b + c > 0 {
            macro_sum += f1(a, b, c);
            macro_n += 1;
        }
    }
    let macro_f1 = if macro_n == 0 {
        0.0
    } else {
        macro_sum / macro_n as f64
    };
    (f1(tp, fp, fnn), macro_f1)
}

/// Micro-F1 of thresholded scores, computed cell by cell.
pub fn oracle_threshold_f1(scores: &ScoreMatrix, gold: &Corpus, theta: f64) -> f64 {
    let (mut tp, mut fp, mut fnn) = (0u64, 0u64, 0u64);
    for (id, row) in scores.ids.iter().zip(&scores.rows) {
        let labels = &gold.get(id).unwrap().labels;
        for t in Technique::ALL {
            match (labels.contains(&t), row[t.index()] >= theta) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fnn += 1,
                _ => {}
            }
        }
    }
    let d = 2 * tp + fp + fnn;
    if d == 0 {
        0.0
    } else {
        (2 * tp) as f64 / d as f64
    }
}

fn ngrams(tokens: &[&str], n: usize) -> HashMap<Vec<String>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(|s| s.to_string()).collect()).or_insert(0) += 1;
        }
    }
    m
}

/// Cumulative corpus BLEU-n over pre-tokenized (space separated) text.
pub fn oracle_bleu(pairs: &[(String, String)], n: usize) -> f64 {
    let mut matches = vec![0usize; n];
    let mut totals = vec![0usize; n];
    let (mut r, mut c) = (0usize, 0usize);
    for (reference, hyp) in pairs {
        let rt: Vec<&str> = reference.split(' ').filter(|s| !s.is_empty()).collect();
        let ht: Vec<&str> = hyp.split(' ').filter(|s| !s.is_empty()).collect();
        r += rt.len();
        c += ht.len();
        for k in 1..=n {
            let rg = ngrams(&rt, k);
            let hg = ngrams(&ht, k);
            totals[k - 1] += hg.values().sum::<usize>();
            matches[k - 1] += hg
                .iter()
                .map(|(g, &cnt)| cnt.min(*rg.get(g).unwrap_or(&0)))
                .sum::<usize>();
        }
    }
    if c == 0 || matches.contains(&0) {
        return 0.0;
    }
    let log_mean = (0..n)
        .map(|k| (matches[k] as f64 / totals[k] as f64).ln())
        .sum::<f64>()
        / n as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * log_mean.exp()
}

pub fn random_sentence(rng: &mut impl Rng, vocab: usize, len: std::ops::Range<usize>) -> String {
    let len = rng.gen_range(len);
    (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}
