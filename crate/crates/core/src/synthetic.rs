//! Seeded synthetic gold data for tests, benchmarks and smoke runs.
//!
//! Each technique has a cue token per language, so a character n-gram model
//! can learn it. Doubt paragraphs end with a question.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Paragraph, ParagraphId, Span};
use crate::taxonomy::{Language, Technique};

const FILLER: [&str; 12] = [
    "lorem", "ipsum", "dolor", "sit", "amet", "tempor", "magna", "aliqua", "veniam", "nostrud",
    "ullamco", "commodo",
];

fn cue(t: Technique, lang: Language) -> String {
    format!("zq{}{}x", t.index(), lang.code())
}

/// `per_language` gold paragraphs for each of `languages`, one article per
/// language. At most `max_labels` techniques per paragraph are drawn from
/// `techniques`.
pub fn gold_corpus(
    languages: &[Language],
    per_language: u32,
    techniques: &[Technique],
    max_labels: usize,
    seed: u64,
) -> BTreeMap<Language, Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for &lang in languages {
        let mut paragraphs = Vec::new();
        for i in 0..per_language {
            let k = rng.gen_range(0..=max_labels.min(techniques.len()));
            let labels: BTreeSet<Technique> =
                techniques.choose_multiple(&mut rng, k).copied().collect();
            let mut text = String::new();
            let mut spans = Vec::new();
            for w in 0..rng.gen_range(4..9) {
                if w > 0 {
                    text.push(' ');
                }
                text.push_str(FILLER.choose(&mut rng).expect("non-empty"));
            }
            for &t in &labels {
                text.push(' ');
                let start = text.chars().count();
                text.push_str(&cue(t, lang));
                spans.push(Span {
                    start,
                    end: text.chars().count(),
                    technique: t,
                });
            }
            text.push_str(if labels.contains(&Technique::Doubt) { " ?" } else { " ." });
            paragraphs.push(
                Paragraph::gold(ParagraphId::new(format!("{lang}{seed}"), i + 1), lang, text, labels)
                    .with_spans(spans),
            );
        }
        out.insert(lang, Corpus::new(paragraphs).expect("generated ids are unique"));
    }
    out
}

/// Five techniques covering common and rare labels, used by the default
/// fixtures.
pub const FIXTURE_TECHNIQUES: [Technique; 5] = [
    Technique::LoadedLanguage,
    Technique::NameCallingLabeling,
    Technique::Doubt,
    Technique::Repetition,
    Technique::Slogans,
];
