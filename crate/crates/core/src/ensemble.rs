//! Threshold moving, rule-based overrides and vote-sum ensembling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Corpus, Paragraph};
use crate::error::{Error, Result};
use crate::metrics::{f1_multilabel, PredictionSet};
use crate::model::ScoreMatrix;
use crate::taxonomy::{Language, Technique};

/// A decision threshold on the 0.1..=0.9 grid, stored in tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold(u8);

impl Threshold {
    pub const GRID: [Threshold; 9] = [
        Threshold(1),
        Threshold(2),
        Threshold(3),
        Threshold(4),
        Threshold(5),
        Threshold(6),
        Threshold(7),
        Threshold(8),
        Threshold(9),
    ];

    pub fn from_tenths(t: u8) -> Result<Self> {
        if (1..=9).contains(&t) {
            Ok(Threshold(t))
        } else {
            Err(Error::Config(format!("threshold {t}/10 is off the grid")))
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        let t = (v * 10.0).round();
        if (v * 10.0 - t).abs() > 1e-9 || !(1.0..=9.0).contains(&t) {
            return Err(Error::Config(format!("threshold {v} is not on the 0.1..0.9 grid")));
        }
        Ok(Threshold(t as u8))
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    pub fn tenths(self) -> u8 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold(5)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Threshold::from_value(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Techniques whose score reaches the threshold (inclusive).
pub fn apply_threshold(scores: &ScoreMatrix, theta: Threshold) -> PredictionSet {
    let cut = theta.value();
    scores
        .ids
        .iter()
        .zip(&scores.rows)
        .map(|(id, row)| {
            (
                id.clone(),
                Technique::ALL
                    .into_iter()
                    .filter(|t| row[t.index()] >= cut)
                    .collect(),
            )
        })
        .collect()
}

fn restrict(pred: PredictionSet, corpus: &Corpus) -> Result<PredictionSet> {
    let mut pred = pred;
    let mut out = PredictionSet::new();
    for p in corpus {
        let labels = pred.remove(&p.id).ok_or_else(|| {
            Error::Schema(format!("scores have no row for paragraph {}", p.id))
        })?;
        out.insert(p.id.clone(), labels);
    }
    Ok(out)
}

/// Grid point with the best dev micro-F1; ties go to the smaller threshold.
pub fn tune_threshold(scores: &ScoreMatrix, dev_gold: &Corpus) -> Result<(Threshold, f64)> {
    let mut best: Option<(Threshold, f64)> = None;
    for theta in Threshold::GRID {
        let pred = restrict(apply_threshold(scores, theta), dev_gold)?;
        let f1 = f1_multilabel(dev_gold, &pred)?.micro_f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((theta, f1));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

// ---------------------------------------------------------------------------
// Heuristics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RuleAction {
    /// Add the technique when a trigger matches.
    #[default]
    Assert,
    /// Remove the technique when a trigger matches.
    Suppress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicRule {
    pub technique: Technique,
    pub language: Language,
    #[serde(default)]
    pub question_mark: bool,
    #[serde(default)]
    pub question_words: Vec<String>,
    #[serde(default)]
    pub action: RuleAction,
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl HeuristicRule {
    pub fn validate(&self) -> Result<()> {
        if !self.question_mark && self.question_words.iter().all(|w| words(w).is_empty()) {
            return Err(Error::Config(format!(
                "heuristic for {} ({}) has no trigger",
                self.technique, self.language
            )));
        }
        Ok(())
    }

    pub fn triggers(&self, p: &Paragraph) -> bool {
        if p.language != self.language {
            return false;
        }
        if self.question_mark && p.text.contains(['?', '¿', '？']) {
            return true;
        }
        if self.question_words.is_empty() {
            return false;
        }
        let tokens = words(&p.text);
        self.question_words.iter().any(|phrase| {
            let needle = words(phrase);
            !needle.is_empty() && tokens.windows(needle.len()).any(|w| w == needle.as_slice())
        })
    }
}

static QUESTION_WORDS: &str = include_str!("../data/question_words.toml");

/// Per-language question words; `path` overrides the built-in list.
pub fn load_question_words(path: Option<&Path>) -> Result<BTreeMap<Language, Vec<String>>> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?,
        None => QUESTION_WORDS.to_string(),
    };
    toml::from_str(&text).map_err(|e| Error::Config(format!("question words: {e}")))
}

/// One Doubt rule per language: question mark or question word asserts Doubt.
pub fn doubt_rules(languages: &[Language], action: RuleAction) -> Result<Vec<HeuristicRule>> {
    let table = load_question_words(None)?;
    Ok(languages
        .iter()
        .map(|&l| HeuristicRule {
            technique: Technique::Doubt,
            language: l,
            question_mark: true,
            question_words: table.get(&l).cloned().unwrap_or_default(),
            action,
        })
        .collect())
}

/// Applies rules in order; paragraphs are looked up in `corpus`.
pub fn apply_heuristics(
    pred: &PredictionSet,
    corpus: &Corpus,
    rules: &[HeuristicRule],
) -> PredictionSet {
    let mut out = pred.clone();
    if rules.is_empty() {
        return out;
    }
    for p in corpus {
        for rule in rules {
            if !rule.triggers(p) {
                continue;
            }
            let labels = out.entry(p.id.clone()).or_default();
            match rule.action {
                RuleAction::Assert => {
                    labels.insert(rule.technique);
                }
                RuleAction::Suppress => {
                    labels.remove(&rule.technique);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub id: String,
    /// Score TSV for this member (used by the command-line tool).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    /// Apply the configured heuristics to this member's votes.
    #[serde(default)]
    pub heuristics: bool,
}

impl MemberSpec {
    pub fn new(id: impl Into<String>) -> Self {
        MemberSpec {
            id: id.into(),
            scores: None,
            heuristics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Paragraphs to predict (used by the command-line tool).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    pub members: Vec<MemberSpec>,
    /// member id -> language -> threshold; missing entries use
    /// `default_threshold`.
    #[serde(default)]
    pub thresholds: BTreeMap<String, BTreeMap<Language, Threshold>>,
    #[serde(default)]
    pub default_threshold: Threshold,
    #[serde(default)]
    pub heuristics: Vec<HeuristicRule>,
    pub voting_threshold: usize,
}

impl EnsembleConfig {
    pub fn new(members: Vec<MemberSpec>) -> Self {
        EnsembleConfig {
            corpus: None,
            members,
            thresholds: BTreeMap::new(),
            default_threshold: Threshold::default(),
            heuristics: Vec::new(),
            voting_threshold: 1,
        }
    }

    pub fn threshold(&self, member: &str, lang: Language) -> Threshold {
        self.thresholds
            .get(member)
            .and_then(|m| m.get(&lang))
            .copied()
            .unwrap_or(self.default_threshold)
    }

    pub fn set_threshold(&mut self, member: &str, lang: Language, t: Threshold) {
        self.thresholds
            .entry(member.to_string())
            .or_default()
            .insert(lang, t);
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::Config("ensemble has no members".into()));
        }
        let ids: BTreeSet<&str> = self.members.iter().map(|m| m.id.as_str()).collect();
        if ids.len() != self.members.len() {
            return Err(Error::Config("duplicate member id".into()));
        }
        if self.voting_threshold < 1 || self.voting_threshold > self.members.len() {
            return Err(Error::Config(format!(
                "voting threshold {} outside 1..={}",
                self.voting_threshold,
                self.members.len()
            )));
        }
        for r in &self.heuristics {
            r.validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EnsembleConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("ensemble config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("ensemble config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }
}

/// One member's thresholded (and optionally rule-adjusted) predictions over
/// `corpus`.
pub fn member_votes(
    config: &EnsembleConfig,
    member: &MemberSpec,
    scores: &ScoreMatrix,
    corpus: &Corpus,
) -> Result<PredictionSet> {
    let index = scores.index();
    let mut pred = PredictionSet::new();
    for p in corpus {
        let k = *index.get(&p.id).ok_or_else(|| {
            Error::Schema(format!(
                "member `{}` has no scores for paragraph {}",
                member.id, p.id
            ))
        })?;
        let cut = config.threshold(&member.id, p.language).value();
        let row = &scores.rows[k];
        pred.insert(
            p.id.clone(),
            Technique::ALL
                .into_iter()
                .filter(|t| row[t.index()] >= cut)
                .collect(),
        );
    }
    if member.heuristics {
        pred = apply_heuristics(&pred, corpus, &config.heuristics);
    }
    Ok(pred)
}

/// A label is kept when at least `voting_threshold` members vote for it.
pub fn combine_votes(votes: &[PredictionSet], corpus: &Corpus, voting_threshold: usize) -> PredictionSet {
    let mut out = PredictionSet::new();
    for p in corpus {
        let mut counts: HashMap<Technique, usize> = HashMap::new();
        for v in votes {
            if let Some(ls) = v.get(&p.id) {
                for t in ls {
                    *counts.entry(*t).or_insert(0) += 1;
                }
            }
        }
        out.insert(
            p.id.clone(),
            counts
                .into_iter()
                .filter(|&(_, c)| c >= voting_threshold)
                .map(|(t, _)| t)
                .collect(),
        );
    }
    out
}

fn all_votes(
    config: &EnsembleConfig,
    member_scores: &[ScoreMatrix],
    corpus: &Corpus,
) -> Result<Vec<PredictionSet>> {
    if member_scores.len() != config.members.len() {
        return Err(Error::Config(format!(
            "{} members but {} score matrices",
            config.members.len(),
            member_scores.len()
        )));
    }
    config
        .members
        .iter()
        .zip(member_scores)
        .map(|(m, s)| member_votes(config, m, s, corpus))
        .collect()
}

pub fn ensemble_predict(
    config: &EnsembleConfig,
    member_scores: &[ScoreMatrix],
    corpus: &Corpus,
) -> Result<PredictionSet> {
    config.validate()?;
    let votes = all_votes(config, member_scores, corpus)?;
    Ok(combine_votes(&votes, corpus, config.voting_threshold))
}

/// Best voting threshold on dev; ties go to the smaller one. The config's
/// own `voting_threshold` is ignored.
pub fn tune_voting_threshold(
    config: &EnsembleConfig,
    member_scores: &[ScoreMatrix],
    dev_gold: &Corpus,
) -> Result<(usize, f64)> {
    if config.members.is_empty() {
        return Err(Error::Config("ensemble has no members".into()));
    }
    let votes = all_votes(config, member_scores, dev_gold)?;
    let mut best: Option<(usize, f64)> = None;
    for v in 1..=config.members.len() {
        let f1 = f1_multilabel(dev_gold, &combine_votes(&votes, dev_gold, v))?.micro_f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((v, f1));
        }
    }
    Ok(best.expect("at least one member"))
}

/// Tunes every member's threshold for every language present in `dev_gold`.
pub fn tune_member_thresholds(
    config: &mut EnsembleConfig,
    member_scores: &[ScoreMatrix],
    dev_gold: &Corpus,
) -> Result<()> {
    let by_lang = dev_gold.by_language();
    for (member, scores) in config.members.clone().iter().zip(member_scores) {
        for (lang, dev) in &by_lang {
            let (t, _) = tune_threshold(scores, dev)?;
            config.set_threshold(&member.id, *lang, t);
        }
    }
    Ok(())
}

/// A candidate member combination with its score matrices (aligned with
/// `members`).
#[derive(Debug, Clone)]
pub struct Candidate {
    pub members: Vec<MemberSpec>,
    pub scores: Vec<ScoreMatrix>,
}

impl Candidate {
    fn sorted_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.members.iter().map(|m| m.id.as_str()).collect();
        ids.sort_unstable();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub candidate: usize,
    pub config: EnsembleConfig,
    pub dev_micro_f1: f64,
}

/// Per language, tunes each candidate and keeps the best by dev micro-F1.
/// Equal scores go to the lexicographically smaller sorted member-id list.
pub fn select_ensemble(
    candidates: &[Candidate],
    dev_gold: &BTreeMap<Language, Corpus>,
    heuristics: &[HeuristicRule],
) -> Result<BTreeMap<Language, Selection>> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate ensembles".into()));
    }
    let mut out = BTreeMap::new();
    for (lang, dev) in dev_gold {
        let mut best: Option<Selection> = None;
        for (k, cand) in candidates.iter().enumerate() {
            let mut cfg = EnsembleConfig::new(cand.members.clone());
            cfg.heuristics = heuristics.to_vec();
            tune_member_thresholds(&mut cfg, &cand.scores, dev)?;
            let (v, f1) = tune_voting_threshold(&cfg, &cand.scores, dev)?;
            cfg.voting_threshold = v;
            let better = match &best {
                None => true,
                Some(b) => {
                    f1 > b.dev_micro_f1
                        || (f1 == b.dev_micro_f1
                            && cand.sorted_ids() < candidates[b.candidate].sorted_ids())
                }
            };
            if better {
                best = Some(Selection {
                    candidate: k,
                    config: cfg,
                    dev_micro_f1: f1,
                });
            }
        }
        out.insert(*lang, best.expect("non-empty candidates"));
    }
    Ok(out)
}
