//! Fixed label and language registry.
//!
//! The 23 persuasion techniques are listed in canonical order (grouped by
//! their coarse category); every per-label vector in the crate (score rows,
//! model heads, per-label reports) follows [`Technique::ALL`].
//!
//! The machine-translation coverage matrix is compiled in. It is directed:
//! `is_covered(Translation, s, t)` asks whether text in `s` can be rendered in
//! `t`, and `is_covered(BackTranslation, s, v)` whether text in `s` can be
//! paraphrased through the pivot `v` (s -> v -> s).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Language {
    En,
    Fr,
    It,
    Ru,
    Ge,
    Po,
    Es,
    El,
    Ka,
}

impl Language {
    pub const ALL: [Language; 9] = [
        Language::En,
        Language::Fr,
        Language::It,
        Language::Ru,
        Language::Ge,
        Language::Po,
        Language::Es,
        Language::El,
        Language::Ka,
    ];

    /// Languages with gold training data.
    pub const TRAINING: [Language; 6] = [
        Language::En,
        Language::Fr,
        Language::It,
        Language::Ru,
        Language::Ge,
        Language::Po,
    ];

    /// Test-only languages.
    pub const SURPRISE: [Language; 3] = [Language::Es, Language::El, Language::Ka];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Fr => "fr",
            Language::It => "it",
            Language::Ru => "ru",
            Language::Ge => "ge",
            Language::Po => "po",
            Language::Es => "es",
            Language::El => "el",
            Language::Ka => "ka",
        }
    }

    pub fn is_training(self) -> bool {
        Self::TRAINING.contains(&self)
    }

    pub fn is_surprise(self) -> bool {
        Self::SURPRISE.contains(&self)
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::ALL
            .iter()
            .copied()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::UnknownLanguage(s.to_string()))
    }
}

impl Serialize for Language {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Language {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Justification,
    Simplification,
    Distraction,
    Call,
    ManipulativeWording,
    AttackToReputation,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Justification,
        Category::Simplification,
        Category::Distraction,
        Category::Call,
        Category::ManipulativeWording,
        Category::AttackToReputation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Justification => "Justification",
            Category::Simplification => "Simplification",
            Category::Distraction => "Distraction",
            Category::Call => "Call",
            Category::ManipulativeWording => "Manipulative Wording",
            Category::AttackToReputation => "Attack to Reputation",
        }
    }

    pub fn techniques(self) -> impl Iterator<Item = Technique> {
        Technique::ALL
            .into_iter()
            .filter(move |t| t.category() == self)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! techniques {
    ($( $variant:ident => $name:literal, $cat:ident; )*) => {
        /// A fine-grained persuasion technique.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Technique {
            $( $variant, )*
        }

        impl Technique {
            pub const ALL: [Technique; 23] = [ $( Technique::$variant, )* ];

            pub fn name(self) -> &'static str {
                match self {
                    $( Technique::$variant => $name, )*
                }
            }

            pub fn category(self) -> Category {
                match self {
                    $( Technique::$variant => Category::$cat, )*
                }
            }
        }
    };
}

techniques! {
    AppealToAuthority => "Appeal to Authority", Justification;
    AppealToPopularity => "Appeal to Popularity", Justification;
    AppealToValues => "Appeal to Values", Justification;
    AppealToFearPrejudice => "Appeal to Fear-Prejudice", Justification;
    FlagWaving => "Flag Waving", Justification;
    CausalOversimplification => "Causal Oversimplification", Simplification;
    FalseDilemmaNoChoice => "False Dilemma-No Choice", Simplification;
    ConsequentialOversimplification => "Consequential Oversimplification", Simplification;
    StrawMan => "Straw Man", Distraction;
    Whataboutism => "Whataboutism", Distraction;
    RedHerring => "Red Herring", Distraction;
    AppealToTime => "Appeal to Time", Call;
    Slogans => "Slogans", Call;
    ConversationKiller => "Conversation Killer", Call;
    LoadedLanguage => "Loaded Language", ManipulativeWording;
    Repetition => "Repetition", ManipulativeWording;
    ExaggerationMinimisation => "Exaggeration-Minimisation", ManipulativeWording;
    ObfuscationVaguenessConfusion => "Obfuscation-Vagueness-Confusion", ManipulativeWording;
    AppealToHypocrisy => "Appeal to Hypocrisy", AttackToReputation;
    Doubt => "Doubt", AttackToReputation;
    NameCallingLabeling => "Name Calling-Labeling", AttackToReputation;
    GuiltByAssociation => "Guilt by Association", AttackToReputation;
    QuestioningTheReputation => "Questioning the Reputation", AttackToReputation;
}

pub const NUM_TECHNIQUES: usize = 23;

// Separators are interchangeable and case is ignored.
fn normalize_label(s: &str) -> String {
    s.trim()
        .chars()
        .map(|c| match c {
            '_' | '-' | ' ' => ' ',
            c => c.to_ascii_lowercase(),
        })
        .collect::<String>()
        .split(' ')
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

impl Technique {
    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Technique> {
        Technique::ALL.get(i).copied()
    }
}

pub fn parse_technique(name: &str) -> Result<Technique> {
    let wanted = normalize_label(name);
    Technique::ALL
        .into_iter()
        .find(|t| normalize_label(t.name()) == wanted)
        .ok_or_else(|| Error::UnknownTechnique(name.to_string()))
}

pub fn category_of(t: Technique) -> Category {
    t.category()
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_technique(s)
    }
}

impl Serialize for Technique {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Technique {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_technique(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pipeline {
    Translation,
    BackTranslation,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Translation => "translation",
            Pipeline::BackTranslation => "back-translation",
        })
    }
}

// Rows are target languages in `Language::ALL` order, columns the six training
// source languages (en fr it ru ge po). Each cell holds (translation,
// back-translation). Surprise languages never appear as sources.
const Y: (bool, bool) = (true, true);
const N: (bool, bool) = (false, false);
const TN: (bool, bool) = (true, false);

#[rustfmt::skip]
const COVERAGE: [[(bool, bool); 6]; 9] = [
    //        en  fr  it  ru  ge  po
    /* en */ [N,  Y,  Y,  Y,  Y,  Y],
    /* fr */ [Y,  N,  TN, Y,  Y,  Y],
    /* it */ [Y,  N,  N,  N,  Y,  N],
    /* ru */ [Y,  Y,  N,  N,  N,  N],
    /* ge */ [Y,  Y,  Y,  N,  N,  Y],
    /* po */ [N,  Y,  N,  N,  Y,  N],
    /* es */ [Y,  Y,  Y,  Y,  Y,  N],
    /* el */ [TN, Y,  N,  N,  TN, N],
    /* ka */ [N,  N,  N,  N,  N,  N],
];

/// Directed MT availability.
///
/// For back-translation, `target` is the pivot.
pub fn is_covered(kind: Pipeline, source: Language, target: Language) -> Result<bool> {
    if source == target {
        return Err(Error::SameLanguage(source));
    }
    if !source.is_training() {
        return Ok(false);
    }
    let (t, bt) = COVERAGE[target.index()][source.index()];
    Ok(match kind {
        Pipeline::Translation => t,
        Pipeline::BackTranslation => bt,
    })
}

/// Same as [`is_covered`] but treats `source == target` as uncovered.
pub fn covered(kind: Pipeline, source: Language, target: Language) -> bool {
    is_covered(kind, source, target).unwrap_or(false)
}

/// Every covered direction of the given kind, in canonical language order.
pub fn covered_pairs(kind: Pipeline) -> Vec<(Language, Language)> {
    Language::TRAINING
        .iter()
        .flat_map(|&s| Language::ALL.iter().map(move |&t| (s, t)))
        .filter(|&(s, t)| covered(kind, s, t))
        .collect()
}

/// TSV dump of the technique table followed by the coverage matrix.
pub fn export_tsv() -> String {
    let mut out = String::from("technique\tcategory\n");
    for t in Technique::ALL {
        out.push_str(&format!("{}\t{}\n", t.name(), t.category().name()));
    }
    out.push('\n');
    out.push_str("kind\tsource\ttarget\tcovered\n");
    for kind in [Pipeline::Translation, Pipeline::BackTranslation] {
        for s in Language::TRAINING {
            for t in Language::ALL {
                if s == t {
                    continue;
                }
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    kind,
                    s,
                    t,
                    covered(kind, s, t)
                ));
            }
        }
    }
    out
}
