//! Translation and back-translation augmentation with label transfer.
//!
//! Labels are copied from the origin paragraph; spans are dropped because
//! offsets do not survive translation. Directions missing from the coverage
//! matrix or from the backend's declared capability are skipped and counted.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_file, Corpus, Paragraph, ParagraphId, Provenance, ProvenanceKind};
use crate::error::{Error, Result};
use crate::taxonomy::{covered, Language, Pipeline};

pub type Direction = (Language, Language);

pub trait TranslatorBackend: Send + Sync {
    /// Directions this backend serves.
    fn capability(&self) -> BTreeSet<Direction>;

    fn translate(&self, text: &str, source: Language, target: Language) -> Result<String>;

    /// Whether `translate` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "k")]
pub enum MockMode {
    /// Prefixes `⟦s→t⟧ `.
    Tagging,
    /// Deletes every k-th whitespace token.
    Lossy(usize),
    Identity,
}

/// Deterministic stand-in for a real MT system.
pub fn mock_translate(
    text: &str,
    source: Language,
    target: Language,
    mode: MockMode,
    _seed: u64,
) -> String {
    match mode {
        MockMode::Tagging => format!("⟦{source}→{target}⟧ {text}"),
        MockMode::Lossy(k) => {
            let k = k.max(2);
            text.split_whitespace()
                .enumerate()
                .filter(|(i, _)| (i + 1) % k != 0)
                .map(|(_, t)| t)
                .collect::<Vec<_>>()
                .join(" ")
        }
        MockMode::Identity => text.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    pub mode: MockMode,
    pub seed: u64,
    directions: BTreeSet<Direction>,
}

impl MockBackend {
    /// Serves every ordered pair of distinct languages.
    pub fn new(mode: MockMode, seed: u64) -> Self {
        let directions = Language::ALL
            .iter()
            .flat_map(|&s| Language::ALL.iter().map(move |&t| (s, t)))
            .filter(|(s, t)| s != t)
            .collect();
        MockBackend {
            mode,
            seed,
            directions,
        }
    }

    pub fn with_directions(mut self, directions: impl IntoIterator<Item = Direction>) -> Self {
        self.directions = directions.into_iter().collect();
        self
    }
}

impl TranslatorBackend for MockBackend {
    fn capability(&self) -> BTreeSet<Direction> {
        self.directions.clone()
    }

    fn translate(&self, text: &str, source: Language, target: Language) -> Result<String> {
        if !self.directions.contains(&(source, target)) {
            return Err(Error::Backend(format!("direction {source}->{target} not served")));
        }
        Ok(mock_translate(text, source, target, self.mode, self.seed))
    }

    fn concurrent(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Bridge protocol
// ---------------------------------------------------------------------------

/// First line a bridge writes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Handshake {
    pub directions: Vec<(Language, Language)>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TranslateRequest {
    pub text: String,
    pub source: Language,
    pub target: Language,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum TranslateResponse {
    Ok { text: String },
    Err { error: String },
}

struct BridgeIo<R, W> {
    reader: R,
    writer: W,
}

/// Client side of the JSON-lines bridge protocol.
pub struct BridgeBackend<R, W> {
    io: Mutex<BridgeIo<R, W>>,
    directions: BTreeSet<Direction>,
    child: Option<Mutex<Child>>,
}

fn read_json_line<T: for<'de> Deserialize<'de>>(reader: &mut impl BufRead) -> Result<T> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| Error::io("bridge read", e))?;
    if n == 0 {
        return Err(Error::Backend("bridge closed its output".into()));
    }
    serde_json::from_str(line.trim_end()).map_err(|e| Error::Backend(format!("bad bridge message: {e}")))
}

impl<R: BufRead + Send, W: Write + Send> BridgeBackend<R, W> {
    /// Reads the capability handshake from `reader`.
    pub fn from_streams(mut reader: R, writer: W) -> Result<Self> {
        let hs: Handshake = read_json_line(&mut reader)?;
        Ok(BridgeBackend {
            io: Mutex::new(BridgeIo { reader, writer }),
            directions: hs.directions.into_iter().collect(),
            child: None,
        })
    }
}

impl BridgeBackend<BufReader<ChildStdout>, BufWriter<ChildStdin>> {
    /// Spawns `program args...` and performs the handshake.
    pub fn spawn(program: &Path, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::io(format!("spawning {}", program.display()), e))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut bridge = Self::from_streams(BufReader::new(stdout), BufWriter::new(stdin))?;
        bridge.child = Some(Mutex::new(child));
        Ok(bridge)
    }
}

impl<R, W> Drop for BridgeBackend<R, W> {
    fn drop(&mut self) {
        if let Some(child) = &self.child {
            if let Ok(mut c) = child.lock() {
                let _ = c.kill();
                let _ = c.wait();
            }
        }
    }
}

impl<R: BufRead + Send, W: Write + Send> TranslatorBackend for BridgeBackend<R, W> {
    fn capability(&self) -> BTreeSet<Direction> {
        self.directions.clone()
    }

    fn translate(&self, text: &str, source: Language, target: Language) -> Result<String> {
        let mut io = self.io.lock().map_err(|_| Error::Backend("bridge poisoned".into()))?;
        let req = TranslateRequest {
            text: text.to_string(),
            source,
            target,
        };
        let mut line = serde_json::to_vec(&req)?;
        line.push(b'\n');
        io.writer
            .write_all(&line)
            .and_then(|_| io.writer.flush())
            .map_err(|e| Error::io("bridge write", e))?;
        match read_json_line::<TranslateResponse>(&mut io.reader)? {
            TranslateResponse::Ok { text } if !text.is_empty() => Ok(text),
            TranslateResponse::Ok { .. } => Err(Error::Backend("empty translation".into())),
            TranslateResponse::Err { error } => Err(Error::Backend(error)),
        }
    }
}

/// Server side of the bridge protocol: announces the backend's capability,
/// then answers one request per line until `input` ends. Undeclared
/// directions and malformed requests get an error object.
pub fn serve_bridge(
    backend: &dyn TranslatorBackend,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<()> {
    let caps = backend.capability();
    let hs = Handshake {
        directions: caps.iter().copied().collect(),
    };
    let io_err = |e| Error::io("bridge output", e);
    serde_json::to_writer(&mut output, &hs)?;
    output.write_all(b"\n").map_err(io_err)?;
    output.flush().map_err(io_err)?;
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("bridge input", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<TranslateRequest>(&line) {
            Err(e) => TranslateResponse::Err {
                error: format!("bad request: {e}"),
            },
            Ok(req) if !caps.contains(&(req.source, req.target)) => TranslateResponse::Err {
                error: format!("undeclared direction {}->{}", req.source, req.target),
            },
            Ok(req) => match backend.translate(&req.text, req.source, req.target) {
                Ok(text) => TranslateResponse::Ok { text },
                Err(e) => TranslateResponse::Err {
                    error: e.to_string(),
                },
            },
        };
        serde_json::to_writer(&mut output, &resp)?;
        output.write_all(b"\n").map_err(io_err)?;
        output.flush().map_err(io_err)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub origin: ParagraphId,
    pub pipeline: Pipeline,
    /// `[s, t]` for translation, `[s, v, s]` for back-translation.
    pub path: Vec<Language>,
    pub output: ParagraphId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub origin: ParagraphId,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationLedger {
    pub records: Vec<LedgerRecord>,
    /// Paragraphs skipped because the direction is not covered (by the
    /// matrix or by the backend).
    pub skipped_uncovered: usize,
    pub failures: Vec<FailureRecord>,
}

impl AugmentationLedger {
    pub fn extend(&mut self, other: AugmentationLedger) {
        self.records.extend(other.records);
        self.skipped_uncovered += other.skipped_uncovered;
        self.failures.extend(other.failures);
    }

    pub fn record_for(&self, output: &ParagraphId) -> Option<&LedgerRecord> {
        self.records.iter().find(|r| &r.output == output)
    }

    /// One record per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        write_file(path, &buf)
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e))?);
        }
        Ok(AugmentationLedger {
            records,
            ..Default::default()
        })
    }
}

enum Outcome {
    Skipped,
    Done(Paragraph, LedgerRecord),
    Failed(FailureRecord),
}

fn run_paragraphs(
    corpus: &Corpus,
    backend: &dyn TranslatorBackend,
    job: impl Fn(&Paragraph) -> Outcome + Sync,
) -> Result<(Corpus, AugmentationLedger)> {
    let outcomes: Vec<Outcome> = if backend.concurrent() {
        corpus.paragraphs().par_iter().map(&job).collect()
    } else {
        corpus.iter().map(&job).collect()
    };
    let mut ledger = AugmentationLedger::default();
    let mut out = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Skipped => ledger.skipped_uncovered += 1,
            Outcome::Done(p, r) => {
                out.push(p);
                ledger.records.push(r);
            }
            Outcome::Failed(f) => ledger.failures.push(f),
        }
    }
    if out.is_empty() && !ledger.failures.is_empty() {
        return Err(Error::AllTranslationsFailed(ledger.failures.len()));
    }
    Ok((Corpus::new(out)?, ledger))
}

/// Renders each covered paragraph in `target`.
pub fn translate_corpus(
    corpus: &Corpus,
    target: Language,
    backend: &dyn TranslatorBackend,
) -> Result<(Corpus, AugmentationLedger)> {
    let caps = backend.capability();
    run_paragraphs(corpus, backend, |p| {
        let source = p.language;
        if !covered(Pipeline::Translation, source, target) || !caps.contains(&(source, target)) {
            return Outcome::Skipped;
        }
        match backend.translate(&p.text, source, target) {
            Ok(text) if !text.is_empty() => {
                let id = p.id.derived(&format!("{source}>{target}"));
                Outcome::Done(
                    Paragraph {
                        id: id.clone(),
                        language: target,
                        text,
                        labels: p.labels.clone(),
                        spans: Vec::new(),
                        provenance: Provenance::derived(
                            ProvenanceKind::Translated { source },
                            p.id.clone(),
                        ),
                    },
                    LedgerRecord {
                        origin: p.id.clone(),
                        pipeline: Pipeline::Translation,
                        path: vec![source, target],
                        output: id,
                    },
                )
            }
            Ok(_) => Outcome::Failed(FailureRecord {
                origin: p.id.clone(),
                error: "empty translation".into(),
            }),
            Err(e) => Outcome::Failed(FailureRecord {
                origin: p.id.clone(),
                error: e.to_string(),
            }),
        }
    })
}

/// Paraphrases each covered paragraph through `pivot` and back.
pub fn back_translate_corpus(
    corpus: &Corpus,
    pivot: Language,
    backend: &dyn TranslatorBackend,
) -> Result<(Corpus, AugmentationLedger)> {
    let caps = backend.capability();
    run_paragraphs(corpus, backend, |p| {
        let lang = p.language;
        if !covered(Pipeline::BackTranslation, lang, pivot)
            || !caps.contains(&(lang, pivot))
            || !caps.contains(&(pivot, lang))
        {
            return Outcome::Skipped;
        }
        let round_trip = backend
            .translate(&p.text, lang, pivot)
            .and_then(|mid| backend.translate(&mid, pivot, lang));
        match round_trip {
            Ok(text) if !text.is_empty() => {
                let id = p.id.derived(&format!("{lang}>{pivot}>{lang}"));
                Outcome::Done(
                    Paragraph {
                        id: id.clone(),
                        language: lang,
                        text,
                        labels: p.labels.clone(),
                        spans: Vec::new(),
                        provenance: Provenance::derived(
                            ProvenanceKind::BackTranslated { pivot },
                            p.id.clone(),
                        ),
                    },
                    LedgerRecord {
                        origin: p.id.clone(),
                        pipeline: Pipeline::BackTranslation,
                        path: vec![lang, pivot, lang],
                        output: id,
                    },
                )
            }
            Ok(_) => Outcome::Failed(FailureRecord {
                origin: p.id.clone(),
                error: "empty translation".into(),
            }),
            Err(e) => Outcome::Failed(FailureRecord {
                origin: p.id.clone(),
                error: e.to_string(),
            }),
        }
    })
}

/// All covered translations into every language plus all covered
/// back-translations through every pivot.
pub fn augment_all(
    corpus: &Corpus,
    backend: &dyn TranslatorBackend,
) -> Result<(Corpus, AugmentationLedger)> {
    let mut parts = Vec::new();
    let mut ledger = AugmentationLedger::default();
    for target in Language::ALL {
        let input = corpus.filter(|p| p.language != target);
        if input.is_empty() {
            continue;
        }
        let (c, l) = translate_corpus(&input, target, backend)?;
        parts.push(c);
        ledger.extend(l);
        let (c, l) = back_translate_corpus(&input, target, backend)?;
        parts.push(c);
        ledger.extend(l);
    }
    Ok((Corpus::concat(&parts)?.sorted(), ledger))
}
