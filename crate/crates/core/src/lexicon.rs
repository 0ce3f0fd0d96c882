//! Bilingual dictionary ingestion and round-trip translation.
//!
//! A [`TranslationTable`] holds undirected `(language, foreign word, English
//! gloss)` facts and exposes them both ways: English to foreign within a
//! language, and foreign back to English. Round-tripping a seed color through
//! every language yields the `(color, language, foreign word, back-translation)`
//! tuples the rest of the pipeline consumes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// NFC-normalize and trim surrounding whitespace.
pub fn normalize_text(s: &str) -> String {
    s.trim().nfc().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LexiconFormat {
    #[default]
    Tsv,
}

/// One dictionary fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub language: String,
    pub foreign: String,
    pub gloss: String,
}

impl Edge {
    /// Builds a normalized edge; English glosses are case-folded, foreign
    /// words keep their case. Returns `None` if any field is empty.
    pub fn new(language: &str, foreign: &str, gloss: &str) -> Option<Edge> {
        let language = normalize_text(language);
        let foreign = normalize_text(foreign);
        let gloss = normalize_text(gloss).to_lowercase();
        if language.is_empty() || foreign.is_empty() || gloss.is_empty() {
            return None;
        }
        Some(Edge {
            language,
            foreign,
            gloss,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows: usize,
    pub loaded: usize,
    pub duplicates: usize,
    pub skipped: usize,
}

/// Immutable, deduplicated translation dictionary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranslationTable {
    edges: BTreeSet<Edge>,
    // language -> gloss -> foreign words
    forward: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    // language -> foreign word -> glosses
    backward: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
}

impl TranslationTable {
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut table = TranslationTable::default();
        for edge in edges {
            table.insert(edge);
        }
        table
    }

    fn insert(&mut self, edge: Edge) -> bool {
        if self.edges.contains(&edge) {
            return false;
        }
        self.forward
            .entry(edge.language.clone())
            .or_default()
            .entry(edge.gloss.clone())
            .or_default()
            .insert(edge.foreign.clone());
        self.backward
            .entry(edge.language.clone())
            .or_default()
            .entry(edge.foreign.clone())
            .or_default()
            .insert(edge.gloss.clone());
        self.edges.insert(edge)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.backward.keys().map(String::as_str)
    }

    /// Every foreign word recorded for `lang`, in sorted order.
    pub fn words(&self, lang: &str) -> BTreeSet<&str> {
        self.backward
            .get(lang)
            .map(|m| m.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn contains_word(&self, lang: &str, word: &str) -> bool {
        self.backward
            .get(lang)
            .is_some_and(|m| m.contains_key(word))
    }

    /// Foreign words in `lang` glossed as `color`.
    pub fn translate(&self, color: &str, lang: &str) -> BTreeSet<String> {
        let color = normalize_text(color).to_lowercase();
        self.forward
            .get(lang)
            .and_then(|m| m.get(&color))
            .cloned()
            .unwrap_or_default()
    }

    /// English glosses attached to `word` in `lang`.
    pub fn back_translate(&self, word: &str, lang: &str) -> BTreeSet<String> {
        let word = normalize_text(word);
        self.backward
            .get(lang)
            .and_then(|m| m.get(&word))
            .cloned()
            .unwrap_or_default()
    }

    /// One record per translation of `color` in `lang`, ordered by foreign word.
    pub fn round_trip(&self, color: &str, lang: &str) -> Vec<RoundTripRecord> {
        let color = normalize_text(color).to_lowercase();
        self.translate(&color, lang)
            .into_iter()
            .map(|foreign| RoundTripRecord {
                back_translations: self.back_translate(&foreign, lang),
                color: color.clone(),
                language: lang.to_string(),
                foreign,
            })
            .collect()
    }

    /// Round-trip records for `color` across every language, ordered by
    /// `(language, foreign word)`.
    pub fn round_trip_all(&self, color: &str) -> Vec<RoundTripRecord> {
        self.languages()
            .flat_map(|lang| self.round_trip(color, lang))
            .collect()
    }

    /// All `(language, foreign word)` translations of `color`.
    pub fn translations(&self, color: &str) -> Vec<(String, String)> {
        let color = normalize_text(color).to_lowercase();
        self.forward
            .iter()
            .filter_map(|(lang, glosses)| glosses.get(&color).map(|ws| (lang, ws)))
            .flat_map(|(lang, ws)| ws.iter().map(move |w| (lang.clone(), w.clone())))
            .collect()
    }
}

/// Reads a headerless `language<TAB>foreign<TAB>gloss` file.
pub fn load_lexicon(
    path: impl AsRef<Path>,
    format: LexiconFormat,
) -> Result<(TranslationTable, LoadReport)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        LexiconFormat::Tsv => parse_lexicon_tsv(&text, path),
    }
}

pub(crate) fn parse_lexicon_tsv(text: &str, path: &Path) -> Result<(TranslationTable, LoadReport)> {
    let mut table = TranslationTable::default();
    let mut report = LoadReport::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.rows += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        let edge = if cols.len() >= 3 {
            Edge::new(cols[0], cols[1], cols[2])
        } else {
            None
        };
        match edge {
            Some(edge) => {
                if table.insert(edge) {
                    report.loaded += 1;
                } else {
                    report.duplicates += 1;
                }
            }
            None => {
                warn!("{}:{}: skipping malformed row", path.display(), lineno + 1);
                report.skipped += 1;
            }
        }
    }
    if table.is_empty() {
        return Err(Error::EmptyLexicon {
            path: path.to_path_buf(),
            skipped: report.skipped,
        });
    }
    Ok((table, report))
}

/// The diachronic acquisition stage of each basic color.
pub fn canonical_stage(term: &str) -> Option<u8> {
    match term {
        "white" | "black" => Some(1),
        "red" => Some(2),
        "green" | "yellow" => Some(3),
        "blue" => Some(4),
        "brown" => Some(5),
        "purple" | "pink" | "orange" | "grey" | "gray" => Some(6),
        _ => None,
    }
}

pub const BASIC_COLOR_COUNT: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorConcept {
    pub term: String,
    pub is_basic: bool,
    pub bk_stage: Option<u8>,
}

impl ColorConcept {
    pub fn basic(term: &str, stage: u8) -> Self {
        ColorConcept {
            term: term.to_string(),
            is_basic: true,
            bk_stage: Some(stage),
        }
    }

    pub fn secondary(term: &str) -> Self {
        ColorConcept {
            term: term.to_string(),
            is_basic: false,
            bk_stage: None,
        }
    }
}

impl fmt::Display for ColorConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.term)?;
        if self.is_basic {
            f.write_str("*")?;
        }
        if let Some(stage) = self.bk_stage {
            write!(f, "@{stage}")?;
        }
        Ok(())
    }
}

/// Ordered seed colors. Exactly eleven are basic, and a stage is present
/// iff the color is basic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList {
    concepts: Vec<ColorConcept>,
}

impl SeedList {
    pub fn new(concepts: Vec<ColorConcept>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &concepts {
            if !seen.insert(c.term.as_str()) {
                return Err(Error::invalid(format!("duplicate seed color `{}`", c.term)));
            }
            match (c.is_basic, c.bk_stage) {
                (true, Some(1..=7)) | (false, None) => {}
                (true, _) => {
                    return Err(Error::invalid(format!(
                        "basic color `{}` needs a stage in 1..=7",
                        c.term
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::invalid(format!(
                        "secondary color `{}` must not carry a stage",
                        c.term
                    )))
                }
            }
        }
        let basic = concepts.iter().filter(|c| c.is_basic).count();
        if basic != BASIC_COLOR_COUNT {
            return Err(Error::invalid(format!(
                "expected {BASIC_COLOR_COUNT} basic colors, found {basic}"
            )));
        }
        Ok(SeedList { concepts })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse().map_err(|e| match e {
            Error::InvalidInput(message) => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message,
            },
            other => other,
        })
    }

    pub fn concepts(&self) -> &[ColorConcept] {
        &self.concepts
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(|c| c.term.as_str())
    }

    pub fn get(&self, term: &str) -> Option<&ColorConcept> {
        self.concepts.iter().find(|c| c.term == term)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

impl FromStr for SeedList {
    type Err = Error;

    /// One term per line; `*` marks basic terms and `@N` gives the stage.
    /// A basic term without `@N` takes its canonical stage.
    fn from_str(s: &str) -> Result<Self> {
        let mut concepts = Vec::new();
        for line in s.lines() {
            let line = normalize_text(line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, stage) = match line.rsplit_once('@') {
                Some((head, n)) => {
                    let n: u8 = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad stage in `{line}`")))?;
                    (head.trim(), Some(n))
                }
                None => (line.as_str(), None),
            };
            let (term, is_basic) = match head.strip_suffix('*') {
                Some(term) => (term.trim(), true),
                None => (head, false),
            };
            let term = term.to_lowercase();
            if term.is_empty() {
                return Err(Error::invalid(format!("empty term in `{line}`")));
            }
            let bk_stage = match (is_basic, stage) {
                (true, None) => Some(canonical_stage(&term).ok_or_else(|| {
                    Error::invalid(format!("basic color `{term}` has no known stage; add @N"))
                })?),
                (_, stage) => stage,
            };
            concepts.push(ColorConcept {
                term,
                is_basic,
                bk_stage,
            });
        }
        SeedList::new(concepts)
    }
}

/// A translation of a color and everything it translates back to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoundTripRecord {
    pub color: String,
    pub language: String,
    pub foreign: String,
    pub back_translations: BTreeSet<String>,
}

/// The union of back-translations over a set of records.
pub fn round_trip_set<'a>(records: impl IntoIterator<Item = &'a RoundTripRecord>) -> BTreeSet<String> {
    records
        .into_iter()
        .flat_map(|r| r.back_translations.iter().cloned())
        .collect()
}
