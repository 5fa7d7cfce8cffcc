//! Paragraph data model, file formats and training-set recipes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{covered, parse_technique, Language, Pipeline, Technique};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParagraphId {
    pub article_id: String,
    pub paragraph_index: u32,
}

impl ParagraphId {
    pub fn new(article_id: impl Into<String>, paragraph_index: u32) -> Self {
        ParagraphId {
            article_id: article_id.into(),
            paragraph_index,
        }
    }

    /// Id of a paragraph derived from this one; the suffix names the derivation.
    pub fn derived(&self, suffix: &str) -> ParagraphId {
        ParagraphId {
            article_id: format!("{}~{}", self.article_id, suffix),
            paragraph_index: self.paragraph_index,
        }
    }
}

impl fmt::Display for ParagraphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.article_id, self.paragraph_index)
    }
}

/// Character span, offsets in Unicode scalar values, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub technique: Technique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProvenanceKind {
    Gold,
    Translated { source: Language },
    BackTranslated { pivot: Language },
    SpanOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub kind: ProvenanceKind,
    pub origin: Option<ParagraphId>,
}

impl Provenance {
    pub fn gold() -> Self {
        Provenance {
            kind: ProvenanceKind::Gold,
            origin: None,
        }
    }

    pub fn derived(kind: ProvenanceKind, origin: ParagraphId) -> Self {
        Provenance {
            kind,
            origin: Some(origin),
        }
    }

    pub fn is_gold(&self) -> bool {
        self.kind == ProvenanceKind::Gold
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub id: ParagraphId,
    pub language: Language,
    pub text: String,
    pub labels: BTreeSet<Technique>,
    pub spans: Vec<Span>,
    pub provenance: Provenance,
}

impl Paragraph {
    pub fn gold(
        id: ParagraphId,
        language: Language,
        text: impl Into<String>,
        labels: impl IntoIterator<Item = Technique>,
    ) -> Self {
        Paragraph {
            id,
            language,
            text: text.into(),
            labels: labels.into_iter().collect(),
            spans: Vec::new(),
            provenance: Provenance::gold(),
        }
    }

    pub fn with_spans(mut self, spans: Vec<Span>) -> Self {
        self.spans = spans;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidParagraph {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.text.is_empty() {
            return Err(bad("empty text"));
        }
        let len = self.text.chars().count();
        for s in &self.spans {
            if s.start >= s.end || s.end > len {
                return Err(bad(&format!(
                    "span {}..{} out of bounds for text of {} characters",
                    s.start, s.end, len
                )));
            }
            if !self.labels.contains(&s.technique) {
                return Err(bad(&format!(
                    "span technique `{}` missing from labels",
                    s.technique
                )));
            }
        }
        match (&self.provenance.kind, &self.provenance.origin) {
            (ProvenanceKind::Gold, Some(_)) => Err(bad("gold paragraph carries an origin")),
            (ProvenanceKind::Gold, None) => Ok(()),
            (_, None) => Err(bad("derived paragraph lacks an origin")),
            (_, Some(_)) => Ok(()),
        }
    }

    pub fn span_text(&self, span: &Span) -> String {
        self.text
            .chars()
            .skip(span.start)
            .take(span.end - span.start)
            .collect()
    }
}

/// An ordered collection of paragraphs with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    paragraphs: Vec<Paragraph>,
}

impl Corpus {
    pub fn new(paragraphs: Vec<Paragraph>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(paragraphs.len());
        for p in &paragraphs {
            p.validate()?;
            if !seen.insert(&p.id) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(Corpus { paragraphs })
    }

    pub fn empty() -> Self {
        Corpus::default()
    }

    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn into_paragraphs(self) -> Vec<Paragraph> {
        self.paragraphs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Paragraph> {
        self.paragraphs.iter()
    }

    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    pub fn get(&self, id: &ParagraphId) -> Option<&Paragraph> {
        self.paragraphs.iter().find(|p| &p.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &ParagraphId> {
        self.paragraphs.iter().map(|p| &p.id)
    }

    /// Same paragraphs, sorted by id.
    pub fn sorted(mut self) -> Self {
        self.paragraphs.sort_by(|a, b| a.id.cmp(&b.id));
        self
    }

    pub fn filter(&self, mut keep: impl FnMut(&Paragraph) -> bool) -> Corpus {
        Corpus {
            paragraphs: self.paragraphs.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    pub fn by_language(&self) -> BTreeMap<Language, Corpus> {
        let mut out: BTreeMap<Language, Vec<Paragraph>> = BTreeMap::new();
        for p in &self.paragraphs {
            out.entry(p.language).or_default().push(p.clone());
        }
        out.into_iter()
            .map(|(l, ps)| (l, Corpus { paragraphs: ps }))
            .collect()
    }

    /// Concatenates corpora; ids must stay unique.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Corpus>) -> Result<Corpus> {
        let all: Vec<Paragraph> = parts
            .into_iter()
            .flat_map(|c| c.paragraphs.iter().cloned())
            .collect();
        Corpus::new(all)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Paragraph;
    type IntoIter = std::slice::Iter<'a, Paragraph>;

    fn into_iter(self) -> Self::IntoIter {
        self.paragraphs.iter()
    }
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ProvenanceRecord {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_or_pivot: Option<Language>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<ParagraphId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParagraphRecord {
    article_id: String,
    paragraph_index: u32,
    language: String,
    text: String,
    #[serde(default)]
    labels: Vec<String>,
    #[serde(default)]
    spans: Vec<SpanRecord>,
    #[serde(default)]
    provenance: Option<ProvenanceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpanRecord {
    start: usize,
    end: usize,
    technique: String,
}

impl ParagraphRecord {
    fn from_paragraph(p: &Paragraph) -> Self {
        let (kind, sp) = match p.provenance.kind {
            ProvenanceKind::Gold => ("gold", None),
            ProvenanceKind::Translated { source } => ("translated", Some(source)),
            ProvenanceKind::BackTranslated { pivot } => ("back_translated", Some(pivot)),
            ProvenanceKind::SpanOnly => ("span_only", None),
        };
        ParagraphRecord {
            article_id: p.id.article_id.clone(),
            paragraph_index: p.id.paragraph_index,
            language: p.language.code().to_string(),
            text: p.text.clone(),
            labels: p.labels.iter().map(|t| t.name().to_string()).collect(),
            spans: p
                .spans
                .iter()
                .map(|s| SpanRecord {
                    start: s.start,
                    end: s.end,
                    technique: s.technique.name().to_string(),
                })
                .collect(),
            provenance: Some(ProvenanceRecord {
                kind: kind.to_string(),
                source_or_pivot: sp,
                origin: p.provenance.origin.clone(),
            }),
        }
    }

    fn into_paragraph(self) -> Result<Paragraph> {
        let language: Language = self.language.parse()?;
        let labels = self
            .labels
            .iter()
            .map(|l| parse_technique(l))
            .collect::<Result<BTreeSet<_>>>()?;
        let spans = self
            .spans
            .into_iter()
            .map(|s| {
                Ok(Span {
                    start: s.start,
                    end: s.end,
                    technique: parse_technique(&s.technique)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let provenance = match self.provenance {
            None => Provenance::gold(),
            Some(r) => {
                let need = |what: &str| {
                    r.source_or_pivot
                        .ok_or_else(|| Error::Config(format!("{what} provenance needs source_or_pivot")))
                };
                let kind = match r.kind.as_str() {
                    "gold" => ProvenanceKind::Gold,
                    "translated" => ProvenanceKind::Translated {
                        source: need("translated")?,
                    },
                    "back_translated" => ProvenanceKind::BackTranslated {
                        pivot: need("back_translated")?,
                    },
                    "span_only" => ProvenanceKind::SpanOnly,
                    other => {
                        return Err(Error::Config(format!("unknown provenance kind `{other}`")))
                    }
                };
                Provenance {
                    kind,
                    origin: r.origin,
                }
            }
        };
        let p = Paragraph {
            id: ParagraphId::new(self.article_id, self.paragraph_index),
            language,
            text: self.text,
            labels,
            spans,
            provenance,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON paragraph per line.
    Canonical,
    /// `article_id TAB paragraph_index TAB labels` rows; paragraph text is
    /// line `paragraph_index` (1-based) of `<articles_dir>/article<article_id>.txt`.
    TaskLabels {
        language: Language,
        articles_dir: PathBuf,
    },
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

fn rethrow_at(path: &Path, line: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } | Error::Io { .. } => e,
        other => Error::parse(path, line, other),
    }
}

/// Reads a corpus; every imported paragraph must be gold unless the canonical
/// record says otherwise.
pub fn import_corpus(path: &Path, format: &CorpusFormat) -> Result<Corpus> {
    let paragraphs = match format {
        CorpusFormat::Canonical => read_canonical(path)?,
        CorpusFormat::TaskLabels {
            language,
            articles_dir,
        } => read_task_corpus(path, *language, articles_dir)?,
    };
    let mut seen = HashSet::new();
    for p in &paragraphs {
        if !seen.insert(p.id.clone()) {
            return Err(Error::DuplicateId(p.id.clone()));
        }
    }
    Ok(Corpus { paragraphs })
}

fn read_canonical(path: &Path) -> Result<Vec<Paragraph>> {
    let mut out = Vec::new();
    for (n, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ParagraphRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, n, e))?;
        match rec.into_paragraph() {
            Ok(p) => out.push(p),
            // keep the typed vocabulary errors, but say where
            Err(e @ (Error::UnknownLanguage(_) | Error::UnknownTechnique(_))) => {
                return Err(Error::parse(path, n, e))
            }
            Err(e) => return Err(rethrow_at(path, n, e)),
        }
    }
    Ok(out)
}

pub fn parse_label_field(field: &str) -> Result<BTreeSet<Technique>> {
    field
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_technique)
        .collect()
}

/// Reads `article_id TAB paragraph_index TAB labels` rows.
pub fn read_task_labels(path: &Path) -> Result<Vec<(ParagraphId, BTreeSet<Technique>)>> {
    let mut out = Vec::new();
    for (n, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let article = fields.next().unwrap_or_default();
        let index = fields
            .next()
            .ok_or_else(|| Error::parse(path, n, "missing paragraph index"))?;
        let labels = fields.next().unwrap_or("");
        if fields.next().is_some() {
            return Err(Error::parse(path, n, "more than three fields"));
        }
        let index: u32 = index
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, n, format!("bad paragraph index: {e}")))?;
        let labels = parse_label_field(labels).map_err(|e| Error::parse(path, n, e))?;
        out.push((ParagraphId::new(article.trim(), index), labels));
    }
    Ok(out)
}

pub fn write_task_labels<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (&'a ParagraphId, &'a BTreeSet<Technique>)>,
) -> Result<()> {
    let mut buf = String::new();
    for (id, labels) in rows {
        let names: Vec<&str> = labels.iter().map(|t| t.name()).collect();
        buf.push_str(&format!(
            "{}\t{}\t{}\n",
            id.article_id,
            id.paragraph_index,
            names.join(",")
        ));
    }
    write_file(path, buf.as_bytes())
}

fn read_task_corpus(path: &Path, language: Language, articles_dir: &Path) -> Result<Vec<Paragraph>> {
    let rows = read_task_labels(path)?;
    let mut articles: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for (n, (id, labels)) in rows.into_iter().enumerate() {
        if !articles.contains_key(&id.article_id) {
            let file = articles_dir.join(format!("article{}.txt", id.article_id));
            let text = fs::read_to_string(&file)
                .map_err(|e| Error::io(file.display().to_string(), e))?;
            articles.insert(
                id.article_id.clone(),
                text.lines().map(str::to_string).collect(),
            );
        }
        let lines = &articles[&id.article_id];
        let text = (id.paragraph_index as usize)
            .checked_sub(1)
            .and_then(|i| lines.get(i))
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| {
                Error::parse(path, n + 1, format!("no text for paragraph {id}"))
            })?;
        out.push(Paragraph::gold(id, language, text.clone(), labels));
    }
    Ok(out)
}

pub fn export_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for p in corpus {
        serde_json::to_writer(&mut buf, &ParagraphRecord::from_paragraph(p))?;
        buf.push(b'\n');
    }
    write_file(path, &buf)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecipeName {
    Gold,
    T,
    Bt,
    BtSl,
    TBt,
    TBtSl,
    Span,
}

impl RecipeName {
    pub const ALL: [RecipeName; 7] = [
        RecipeName::Gold,
        RecipeName::T,
        RecipeName::Bt,
        RecipeName::BtSl,
        RecipeName::TBt,
        RecipeName::TBtSl,
        RecipeName::Span,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecipeName::Gold => "gold",
            RecipeName::T => "+T",
            RecipeName::Bt => "+BT",
            RecipeName::BtSl => "+BT-sl",
            RecipeName::TBt => "+T+BT",
            RecipeName::TBtSl => "+T+BT-sl",
            RecipeName::Span => "+span",
        }
    }

    /// Combined size over all languages of the training set built from the
    /// shared-task data. Used to order training sets on effect-plot axes.
    pub fn reference_total_size(self) -> usize {
        match self {
            RecipeName::Gold => 10_933,
            RecipeName::T => 65_576,
            RecipeName::Bt => 46_197,
            RecipeName::BtSl => 57_585,
            RecipeName::TBt => 84_438,
            RecipeName::TBtSl => 95_826,
            RecipeName::Span => 21_860,
        }
    }

    fn uses_translations(self) -> bool {
        matches!(self, RecipeName::T | RecipeName::TBt | RecipeName::TBtSl)
    }

    fn uses_back_translations(self) -> bool {
        matches!(
            self,
            RecipeName::Bt | RecipeName::BtSl | RecipeName::TBt | RecipeName::TBtSl
        )
    }

    fn uses_surprise_pivots(self) -> bool {
        matches!(self, RecipeName::BtSl | RecipeName::TBtSl)
    }

    fn excludes_surprise_targets(self) -> bool {
        matches!(self, RecipeName::TBt | RecipeName::TBtSl)
    }
}

impl fmt::Display for RecipeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecipeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        RecipeName::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s) || (s == "span" && *r == RecipeName::Span))
            .ok_or_else(|| Error::Config(format!("unknown recipe `{s}`")))
    }
}

impl Serialize for RecipeName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RecipeName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecipe {
    pub name: RecipeName,
    /// Keep only augmented paragraphs carrying a technique whose gold count in
    /// the target language is below this value.
    pub low_frequency_only: Option<usize>,
    /// Languages trained jointly: each receives the merged corpus of the group.
    pub family_group: Option<Vec<Language>>,
}

impl DatasetRecipe {
    pub fn new(name: RecipeName) -> Self {
        DatasetRecipe {
            name,
            low_frequency_only: None,
            family_group: None,
        }
    }
}

fn check_pool_paragraph(p: &Paragraph) -> Result<()> {
    let violation = |reason: String| Error::CoverageViolation {
        id: p.id.clone(),
        reason,
    };
    match p.provenance.kind {
        ProvenanceKind::Gold => Err(violation("gold paragraph in augmentation pool".into())),
        ProvenanceKind::Translated { source } => {
            if covered(Pipeline::Translation, source, p.language) {
                Ok(())
            } else {
                Err(violation(format!("no translation {source} -> {}", p.language)))
            }
        }
        ProvenanceKind::BackTranslated { pivot } => {
            if covered(Pipeline::BackTranslation, p.language, pivot) {
                Ok(())
            } else {
                Err(violation(format!(
                    "no back-translation {0} -> {pivot} -> {0}",
                    p.language
                )))
            }
        }
        ProvenanceKind::SpanOnly => Ok(()),
    }
}

/// Builds the per-language training sets of a recipe.
///
/// The output has an entry for every language (possibly empty) and each
/// corpus is sorted by id. `+span` is derived from the gold spans; span-only
/// paragraphs in the pool are not used by any recipe.
pub fn assemble(
    recipe: &DatasetRecipe,
    gold: &BTreeMap<Language, Corpus>,
    pool: &[Corpus],
) -> Result<BTreeMap<Language, Corpus>> {
    for p in pool.iter().flat_map(|c| c.iter()) {
        check_pool_paragraph(p)?;
    }
    let name = recipe.name;
    let mut out = BTreeMap::new();
    for lang in Language::ALL {
        if name.excludes_surprise_targets() && lang.is_surprise() {
            out.insert(lang, Corpus::empty());
            continue;
        }
        let gold_here = gold.get(&lang).cloned().unwrap_or_default();
        let selected = recipe
            .low_frequency_only
            .map(|thr| select_low_frequency(&gold_here, thr));
        let wanted = |p: &Paragraph| -> bool {
            if p.language != lang {
                return false;
            }
            let by_kind = match p.provenance.kind {
                ProvenanceKind::Translated { source } => {
                    name.uses_translations() && source.is_training()
                }
                ProvenanceKind::BackTranslated { pivot } => {
                    name.uses_back_translations()
                        && (pivot.is_training() || name.uses_surprise_pivots())
                }
                _ => false,
            };
            by_kind
                && selected
                    .as_ref()
                    .is_none_or(|sel| p.labels.iter().any(|t| sel.contains(t)))
        };
        let mut paragraphs: Vec<Paragraph> = gold_here.paragraphs.clone();
        if name == RecipeName::Span {
            paragraphs = inject_spans(&gold_here).paragraphs;
        }
        paragraphs.extend(
            pool.iter()
                .flat_map(|c| c.iter())
                .filter(|p| wanted(p))
                .cloned(),
        );
        out.insert(lang, Corpus::new(paragraphs)?.sorted());
    }
    if let Some(group) = &recipe.family_group {
        let merged = Corpus::concat(group.iter().filter_map(|l| out.get(l)))?.sorted();
        for l in group {
            out.insert(*l, merged.clone());
        }
    }
    Ok(out)
}

/// Adds, per spanned gold paragraph, one instance made only of its span texts.
pub fn inject_spans(corpus: &Corpus) -> Corpus {
    let mut out = corpus.paragraphs.clone();
    for p in corpus.iter().filter(|p| p.provenance.is_gold()) {
        if p.spans.is_empty() {
            continue;
        }
        let mut spans = p.spans.clone();
        spans.sort_by_key(|s| (s.start, s.end));
        let text = spans
            .iter()
            .map(|s| p.span_text(s))
            .collect::<Vec<_>>()
            .join(" ");
        out.push(Paragraph {
            id: p.id.derived("span"),
            language: p.language,
            text,
            labels: spans.iter().map(|s| s.technique).collect(),
            spans: Vec::new(),
            provenance: Provenance::derived(ProvenanceKind::SpanOnly, p.id.clone()),
        });
    }
    Corpus { paragraphs: out }
}

/// Number of paragraphs carrying each technique.
pub fn stats(corpus: &Corpus) -> BTreeMap<Technique, usize> {
    let mut counts: BTreeMap<Technique, usize> = Technique::ALL.iter().map(|&t| (t, 0)).collect();
    for p in corpus {
        for t in &p.labels {
            *counts.get_mut(t).expect("all techniques present") += 1;
        }
    }
    counts
}

/// Techniques with fewer than `threshold` occurrences.
pub fn select_low_frequency(corpus: &Corpus, threshold: usize) -> BTreeSet<Technique> {
    stats(corpus)
        .into_iter()
        .filter(|&(_, n)| n < threshold)
        .map(|(t, _)| t)
        .collect()
}

pub const FAMILY_GROUPS: [(&str, [Language; 2]); 3] = [
    ("en-ge", [Language::En, Language::Ge]),
    ("fr-it", [Language::Fr, Language::It]),
    ("ru-po", [Language::Ru, Language::Po]),
];

/// Merges the training languages into their language-family groups.
pub fn group_families(corpora: &BTreeMap<Language, Corpus>) -> Result<BTreeMap<String, Corpus>> {
    let mut out = BTreeMap::new();
    for (name, langs) in FAMILY_GROUPS {
        let parts = langs
            .iter()
            .map(|l| corpora.get(l).ok_or(Error::MissingLanguage(*l)))
            .collect::<Result<Vec<_>>>()?;
        out.insert(name.to_string(), Corpus::concat(parts)?);
    }
    Ok(out)
}
