//! Fixtures shared by the benchmarks.

use persuasion_core::synthetic::{gold_corpus, FIXTURE_TECHNIQUES};
use persuasion_core::{Corpus, Language};

pub const LANGUAGES: [Language; 3] = [Language::En, Language::Fr, Language::Po];

/// Synthetic gold paragraphs for [`LANGUAGES`] merged into one corpus.
pub fn corpus(per_language: u32, seed: u64) -> Corpus {
    let parts = gold_corpus(&LANGUAGES, per_language, &FIXTURE_TECHNIQUES, 3, seed);
    Corpus::new(parts.into_values().flat_map(Corpus::into_paragraphs).collect())
        .expect("synthetic ids are unique")
}
