//! The fourteen basicness features and the matrix that joins them.

mod matrix;
mod sources;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use matrix::{assemble_feature_matrix, median, FeatureColumns, FeatureMatrix};
pub use sources::{
    ColorEtymology, ConcretenessLexicon, CorpusCounts, CorpusSource, CorpusSummary, EtymologyProcess,
    EtymologyTable,
};

use crate::error::{Error, Result};
use crate::lexicon::{RoundTripRecord, TranslationTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    WordConcreteness,
    TranslationConcreteness,
    NgramFrequency,
    NgramPctAdj,
    PenntbPctAdj,
    CompoundCount,
    CompoundFrequency,
    AffixPresence,
    Borrowing,
    Cognate,
    Derivation,
    SuffixDerivation,
    Inheritance,
    WordLength,
}

impl Feature {
    pub const ALL: [Feature; 14] = [
        Feature::WordConcreteness,
        Feature::TranslationConcreteness,
        Feature::NgramFrequency,
        Feature::NgramPctAdj,
        Feature::PenntbPctAdj,
        Feature::CompoundCount,
        Feature::CompoundFrequency,
        Feature::AffixPresence,
        Feature::Borrowing,
        Feature::Cognate,
        Feature::Derivation,
        Feature::SuffixDerivation,
        Feature::Inheritance,
        Feature::WordLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::WordConcreteness => "word-concreteness",
            Feature::TranslationConcreteness => "translation-concreteness",
            Feature::NgramFrequency => "ngram-frequency",
            Feature::NgramPctAdj => "ngram-pct-adj",
            Feature::PenntbPctAdj => "penntb-pct-adj",
            Feature::CompoundCount => "compound-count",
            Feature::CompoundFrequency => "compound-frequency",
            Feature::AffixPresence => "affix-presence",
            Feature::Borrowing => "borrowing",
            Feature::Cognate => "cognate",
            Feature::Derivation => "derivation",
            Feature::SuffixDerivation => "suffix-derivation",
            Feature::Inheritance => "inheritance",
            Feature::WordLength => "word-length",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown feature `{s}`")))
    }
}

pub fn word_concreteness(color: &str, lex: &ConcretenessLexicon) -> Option<f64> {
    lex.get(color)
}

/// Mean concreteness of a color's back-translations, each weighted by the
/// number of languages whose round-trip set contains it. Unrated
/// back-translations are ignored.
pub fn translation_concreteness(records: &[RoundTripRecord], lex: &ConcretenessLexicon) -> Option<f64> {
    let mut languages: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        for b in &r.back_translations {
            languages.entry(b).or_default().insert(&r.language);
        }
    }
    weighted_mean(languages.iter().map(|(b, ls)| (*b, ls.len() as f64)), lex)
}

/// Weighted mean rating over `(word, weight)` pairs with known ratings.
pub fn weighted_mean<'a>(
    weights: impl IntoIterator<Item = (&'a str, f64)>,
    lex: &ConcretenessLexicon,
) -> Option<f64> {
    let (num, den) = weights
        .into_iter()
        .filter_map(|(w, n)| lex.get(w).map(|r| (r * n, n)))
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosFeatures {
    pub frequency: u64,
    /// adjective / (adjective + noun); `None` when neither was tagged
    pub pct_adj: Option<f64>,
}

pub fn pos_features(color: &str, corpus: &CorpusSummary) -> Option<PosFeatures> {
    corpus.get(color).map(|c| PosFeatures {
        frequency: c.total,
        pct_adj: (c.adj + c.noun > 0).then(|| c.adj as f64 / (c.adj + c.noun) as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtymologyFractions {
    pub borrowing: f64,
    pub cognate: f64,
    pub derivation: f64,
    pub suffix_derivation: f64,
    pub inheritance: f64,
}

/// Process counts divided by the number of foreign words recorded for the
/// color. `None` when the color is absent or has no recorded words.
pub fn etymology_features(color: &str, table: &EtymologyTable) -> Option<EtymologyFractions> {
    let e = table.get(color)?;
    if e.total == 0 {
        return None;
    }
    let frac = |p| e.count(p) as f64 / e.total as f64;
    Some(EtymologyFractions {
        borrowing: frac(EtymologyProcess::Borrowing),
        cognate: frac(EtymologyProcess::Cognate),
        derivation: frac(EtymologyProcess::Derivation),
        suffix_derivation: frac(EtymologyProcess::SuffixDerivation),
        inheritance: frac(EtymologyProcess::Inheritance),
    })
}

/// Mean length in Unicode scalar values of all translations of `color`.
pub fn word_length_feature(color: &str, table: &TranslationTable) -> Option<f64> {
    mean_length(table.translations(color).iter().map(|(_, w)| w.as_str()))
}

pub fn mean_length<'a>(words: impl IntoIterator<Item = &'a str>) -> Option<f64> {
    let (sum, n) = words
        .into_iter()
        .fold((0usize, 0usize), |(s, n), w| (s + w.chars().count(), n + 1));
    (n > 0).then(|| sum as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Edge;

    fn lex(rows: &[(&str, f64)]) -> ConcretenessLexicon {
        ConcretenessLexicon::new(rows.iter().map(|(w, r)| (w.to_string(), *r))).unwrap()
    }

    #[test]
    fn feature_names_round_trip() {
        for f in Feature::ALL {
            assert_eq!(f.name().parse::<Feature>().unwrap(), f);
        }
        assert!("colorfulness".parse::<Feature>().is_err());
    }

    #[test]
    fn word_concreteness_lookup() {
        let l = lex(&[("orange", 4.66), ("beige", 3.41)]);
        assert_eq!(word_concreteness("orange", &l), Some(4.66));
        assert_eq!(word_concreteness("beige", &l), Some(3.41));
        assert_eq!(word_concreteness("puce", &l), None);
    }

    fn records(lang_glosses: &[(&str, &[&str])]) -> Vec<RoundTripRecord> {
        lang_glosses
            .iter()
            .enumerate()
            .map(|(i, (lang, gs))| RoundTripRecord {
                color: "c".into(),
                language: lang.to_string(),
                foreign: format!("w{i}"),
                back_translations: gs.iter().map(|s| s.to_string()).collect(),
            })
            .collect()
    }

    #[test]
    fn translation_concreteness_weights_by_language() {
        let l = lex(&[("a", 2.0), ("b", 4.0)]);
        // a in 3 languages, b in 1; two records in l1 count once
        let r = records(&[("l1", &["a"]), ("l1", &["a", "b"]), ("l2", &["a"]), ("l3", &["a", "zzz"])]);
        let got = translation_concreteness(&r, &l).unwrap();
        assert!((got - (3.0 * 2.0 + 4.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn translation_concreteness_degenerate() {
        let l = lex(&[("a", 2.5)]);
        assert_eq!(translation_concreteness(&records(&[("l1", &["a"])]), &l), Some(2.5));
        assert_eq!(translation_concreteness(&records(&[("l1", &["q"])]), &l), None);
    }

    #[test]
    fn pos_ratio() {
        let c = CorpusSummary::new(
            CorpusSource::Ngram,
            [
                ("red".to_string(), CorpusCounts { total: 150, adj: 90, noun: 10 }),
                ("teal".to_string(), CorpusCounts { total: 60, adj: 0, noun: 50 }),
            ],
        )
        .unwrap();
        let red = pos_features("red", &c).unwrap();
        assert_eq!(red.frequency, 150);
        assert!((red.pct_adj.unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(pos_features("teal", &c).unwrap().pct_adj, Some(0.0));
        assert_eq!(pos_features("puce", &c), None);
    }

    #[test]
    fn etymology_fractions() {
        let t = EtymologyTable::new(vec![("red".to_string(), EtymologyProcess::Borrowing, 5, 100)]).unwrap();
        let e = etymology_features("red", &t).unwrap();
        assert!((e.borrowing - 0.05).abs() < 1e-12);
        assert_eq!(e.cognate, 0.0);
        let t = EtymologyTable::new(vec![("red".to_string(), EtymologyProcess::Borrowing, 0, 0)]).unwrap();
        assert_eq!(etymology_features("red", &t), None);
    }

    #[test]
    fn word_lengths() {
        let t = TranslationTable::from_edges(
            [("deu", "rot", "red"), ("fra", "rouge", "red"), ("spa", "rojo", "blue"), ("jpn", "赤", "crimson"), ("ita", "rosso", "crimson")]
                .iter()
                .filter_map(|(l, f, g)| Edge::new(l, f, g)),
        );
        assert_eq!(word_length_feature("red", &t), Some(4.0));
        assert_eq!(word_length_feature("blue", &t), Some(4.0));
        assert_eq!(word_length_feature("crimson", &t), Some(3.0));
        assert_eq!(word_length_feature("puce", &t), None);
    }
}
