//! Compound detection with arbitrary-length glue and cross-lingual recipes.
//!
//! Every word is split into `(left, glue, right)` at all boundary pairs with
//! non-empty left and right parts. A split is a candidate when both parts are
//! words of the same language (or the right part is a known derivational
//! suffix). Candidates are grouped into recipes by the English concepts of
//! their components; a recipe's support is the number of languages that use
//! it. Filtering runs in two passes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::TranslationTable;

/// Concept label used when the right component is a derivational suffix
/// rather than a dictionary word.
pub const AFFIX_CONCEPT: &str = "<affix>";

pub const DEFAULT_THRESHOLD: usize = 2;

/// A borrowed three-way split of a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split<'a> {
    pub left: &'a str,
    pub glue: &'a str,
    pub right: &'a str,
}

fn char_bounds(word: &str) -> Vec<usize> {
    word.char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect()
}

/// All `K(K-1)/2` splits of a `K`-character word, ordered by left length
/// and then glue length. Words shorter than two characters have none.
pub fn enumerate_splits(word: &str) -> Vec<Split<'_>> {
    enumerate_splits_with_max_glue(word, None)
}

/// Like [`enumerate_splits`], optionally capping the glue length (in chars).
pub fn enumerate_splits_with_max_glue(word: &str, max_glue: Option<usize>) -> Vec<Split<'_>> {
    let b = char_bounds(word);
    let k = b.len() - 1;
    let mut out = Vec::new();
    for i in 1..k {
        for j in i..k {
            if max_glue.is_some_and(|g| j - i > g) {
                break;
            }
            out.push(Split {
                left: &word[..b[i]],
                glue: &word[b[i]..b[j]],
                right: &word[b[j]..],
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub language: String,
    pub word: String,
    pub left: String,
    pub glue: String,
    pub right: String,
    pub left_concepts: BTreeSet<String>,
    pub right_concepts: BTreeSet<String>,
}

impl SplitCandidate {
    /// Concept pairs this candidate could instantiate, in sorted order.
    pub fn concept_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.left_concepts.iter().flat_map(move |l| {
            self.right_concepts
                .iter()
                .map(move |r| (l.as_str(), r.as_str()))
        })
    }

    pub fn reconstruct(&self) -> String {
        format!("{}{}{}", self.left, self.glue, self.right)
    }
}

/// Splits of every word in `lang` whose components are attested words of
/// the same language. A right component may also be one of `suffixes`, in
/// which case its concept is [`AFFIX_CONCEPT`].
pub fn extract_candidates(
    table: &TranslationTable,
    lang: &str,
    suffixes: &BTreeSet<String>,
) -> Vec<SplitCandidate> {
    let mut out = Vec::new();
    for word in table.words(lang) {
        for split in enumerate_splits(word) {
            if !table.contains_word(lang, split.left) {
                continue;
            }
            let right_concepts = if table.contains_word(lang, split.right) {
                table.back_translate(split.right, lang)
            } else if suffixes.contains(split.right) {
                BTreeSet::from([AFFIX_CONCEPT.to_string()])
            } else {
                continue;
            };
            out.push(SplitCandidate {
                language: lang.to_string(),
                word: word.to_string(),
                left: split.left.to_string(),
                glue: split.glue.to_string(),
                right: split.right.to_string(),
                left_concepts: table.back_translate(split.left, lang),
                right_concepts,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub left_concept: String,
    pub right_concept: String,
    pub support: usize,
    pub languages: BTreeSet<String>,
}

fn sort_recipes(mut recipes: Vec<Recipe>) -> Vec<Recipe> {
    recipes.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.left_concept.cmp(&b.left_concept))
            .then_with(|| a.right_concept.cmp(&b.right_concept))
    });
    recipes
}

fn recipes_from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Vec<Recipe> {
    let mut langs: BTreeMap<(&str, &str), BTreeSet<String>> = BTreeMap::new();
    for (l, r, lang) in pairs {
        langs.entry((l, r)).or_default().insert(lang.to_string());
    }
    sort_recipes(
        langs
            .into_iter()
            .map(|((l, r), languages)| Recipe {
                left_concept: l.to_string(),
                right_concept: r.to_string(),
                support: languages.len(),
                languages,
            })
            .collect(),
    )
}

/// Groups candidates by component concept pair; support counts languages.
/// Sorted by support, descending, then by concept pair.
pub fn build_recipes(candidates: &[SplitCandidate]) -> Vec<Recipe> {
    recipes_from_pairs(candidates.iter().flat_map(|c| {
        c.concept_pairs()
            .map(move |(l, r)| (l, r, c.language.as_str()))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundAnalysis {
    pub candidate: SplitCandidate,
    pub recipe: Recipe,
    pub score: usize,
    pub accepted: bool,
}

fn index(recipes: &[Recipe]) -> BTreeMap<(&str, &str), &Recipe> {
    recipes
        .iter()
        .map(|r| ((r.left_concept.as_str(), r.right_concept.as_str()), r))
        .collect()
}

/// Scores candidates by the support of their best recipe and keeps those at
/// or above `threshold`. Accepted candidates then rebuild the recipes, each
/// contributing only its best first-pass recipe, and every candidate is
/// rescored once against the rebuilt set.
pub fn score_and_filter(
    candidates: &[SplitCandidate],
    recipes: &[Recipe],
    threshold: usize,
) -> Result<Vec<CompoundAnalysis>> {
    if threshold < 1 {
        return Err(Error::config("compounds.threshold", "must be at least 1"));
    }
    let first = index(recipes);
    // best first-pass recipe per candidate; pairs are visited in sorted
    // order, so ties keep the lexicographically smallest pair
    let mut designated: Vec<(&Recipe, bool)> = Vec::with_capacity(candidates.len());
    for c in candidates {
        let mut best: Option<&Recipe> = None;
        for pair in c.concept_pairs() {
            let r = first.get(&pair).copied().ok_or_else(|| {
                Error::invalid(format!(
                    "recipe ({}, {}) missing for candidate `{}`",
                    pair.0, pair.1, c.word
                ))
            })?;
            if best.is_none_or(|b| r.support > b.support) {
                best = Some(r);
            }
        }
        let best = best.ok_or_else(|| Error::invalid(format!("candidate `{}` has no concepts", c.word)))?;
        designated.push((best, best.support >= threshold));
    }

    let second = recipes_from_pairs(
        candidates
            .iter()
            .zip(&designated)
            .filter(|(_, (_, ok))| *ok)
            .map(|(c, (r, _))| {
                (
                    r.left_concept.as_str(),
                    r.right_concept.as_str(),
                    c.language.as_str(),
                )
            }),
    );
    let second = index(&second);

    Ok(candidates
        .iter()
        .zip(&designated)
        .map(|(c, (r, _))| {
            let key = (r.left_concept.as_str(), r.right_concept.as_str());
            let (recipe, score) = match second.get(&key) {
                Some(r2) => ((*r2).clone(), r2.support),
                None => ((*r).clone(), 0),
            };
            CompoundAnalysis {
                candidate: c.clone(),
                recipe,
                score,
                accepted: score >= threshold,
            }
        })
        .collect())
}

/// Per color, the number of its translations that are accepted compounds
/// and that number as a fraction of all its translations. `None` for colors
/// without translations.
pub fn compounding_features(
    analyses: &[CompoundAnalysis],
    colors: &[String],
    translations: &BTreeMap<String, Vec<(String, String)>>,
) -> BTreeMap<String, Option<(usize, f64)>> {
    let accepted: BTreeSet<(String, String)> = analyses
        .iter()
        .filter(|a| a.accepted)
        .map(|a| (a.candidate.language.clone(), a.candidate.word.clone()))
        .collect();
    compounding_features_from_accepted(&accepted, colors, translations)
}

/// [`compounding_features`] given the accepted `(language, word)` pairs.
pub fn compounding_features_from_accepted(
    accepted: &BTreeSet<(String, String)>,
    colors: &[String],
    translations: &BTreeMap<String, Vec<(String, String)>>,
) -> BTreeMap<String, Option<(usize, f64)>> {
    colors
        .iter()
        .map(|color| {
            let pairs: BTreeSet<&(String, String)> = translations.get(color).into_iter().flatten().collect();
            let value = (!pairs.is_empty()).then(|| {
                let count = pairs.iter().filter(|p| accepted.contains(**p)).count();
                (count, count as f64 / pairs.len() as f64)
            });
            (color.clone(), value)
        })
        .collect()
}

/// Accepted compounds by glue length in characters.
pub fn glue_length_histogram(analyses: &[CompoundAnalysis]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    let words: BTreeSet<(&str, &str, &str, &str)> = analyses
        .iter()
        .filter(|a| a.accepted)
        .map(|a| {
            let c = &a.candidate;
            (c.language.as_str(), c.word.as_str(), c.left.as_str(), c.glue.as_str())
        })
        .collect();
    for (_, _, _, glue) in words {
        *hist.entry(glue.chars().count()).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Edge;

    fn table(rows: &[(&str, &str, &str)]) -> TranslationTable {
        TranslationTable::from_edges(rows.iter().filter_map(|(l, f, g)| Edge::new(l, f, g)))
    }

    fn parts<'a>(s: &Split<'a>) -> (&'a str, &'a str, &'a str) {
        (s.left, s.glue, s.right)
    }

    #[test]
    fn three_char_splits() {
        let got: Vec<_> = enumerate_splits("abc").iter().map(parts).collect();
        assert_eq!(got, vec![("a", "", "bc"), ("a", "b", "c"), ("ab", "", "c")]);
    }

    #[test]
    fn split_counts() {
        assert_eq!(enumerate_splits("ab").len(), 1);
        assert_eq!(enumerate_splits("abcdefghij").len(), 45);
        assert!(enumerate_splits("a").is_empty());
        assert!(enumerate_splits("").is_empty());
    }

    #[test]
    fn glue_cap() {
        let capped = enumerate_splits_with_max_glue("abcde", Some(1));
        assert!(capped.iter().all(|s| s.glue.chars().count() <= 1));
        // (a, bcd, e), (a, bc, de), (ab, cd, e) need longer glue
        assert_eq!(capped.len(), 10 - 3);
    }

    #[test]
    fn extracts_german_and_mandarin_compounds() {
        let t = table(&[
            ("deu", "dunkel", "dark"),
            ("deu", "rot", "red"),
            ("deu", "dunkelrot", "dark red"),
            ("cmn", "橙", "orange"),
            ("cmn", "色", "color"),
            ("cmn", "橙色", "orange"),
        ]);
        let none = BTreeSet::new();
        let deu = extract_candidates(&t, "deu", &none);
        assert_eq!(deu.len(), 1);
        assert_eq!((deu[0].left.as_str(), deu[0].glue.as_str(), deu[0].right.as_str()), ("dunkel", "", "rot"));
        let cmn = extract_candidates(&t, "cmn", &none);
        assert_eq!(cmn.len(), 1);
        assert_eq!((cmn[0].left.as_str(), cmn[0].right.as_str()), ("橙", "色"));
    }

    #[test]
    fn out_of_lexicon_components_yield_nothing() {
        let t = table(&[("deu", "blau", "blue"), ("deu", "grün", "green")]);
        assert!(extract_candidates(&t, "deu", &BTreeSet::new()).is_empty());
    }

    #[test]
    fn affix_right_components() {
        let t = table(&[("spa", "anaranja", "orange"), ("spa", "anaranjado", "orange")]);
        let suffixes = BTreeSet::from(["do".to_string()]);
        let c = extract_candidates(&t, "spa", &suffixes);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].right_concepts, BTreeSet::from([AFFIX_CONCEPT.to_string()]));
    }

    fn cand(lang: &str, word: &str, l: &[&str], r: &[&str]) -> SplitCandidate {
        SplitCandidate {
            language: lang.into(),
            word: word.into(),
            left: word[..1].into(),
            glue: String::new(),
            right: word[1..].into(),
            left_concepts: l.iter().map(|s| s.to_string()).collect(),
            right_concepts: r.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn recipe_support_counts_languages() {
        let cs = vec![
            cand("deu", "ab", &["dark"], &["red"]),
            cand("nld", "cd", &["dark"], &["red"]),
            cand("swe", "ef", &["dark"], &["red"]),
            cand("swe", "gh", &["dark"], &["red"]),
            cand("fin", "ij", &["sick"], &["house"]),
        ];
        let r = build_recipes(&cs);
        assert_eq!(r[0].left_concept, "dark");
        assert_eq!(r[0].support, 3);
        assert_eq!(r[1].support, 1);
    }

    #[test]
    fn threshold_filtering() {
        let cs = vec![
            cand("deu", "ab", &["dark"], &["red"]),
            cand("nld", "cd", &["dark"], &["red"]),
            cand("fin", "ij", &["sick"], &["house"]),
        ];
        let r = build_recipes(&cs);
        let a = score_and_filter(&cs, &r, 2).unwrap();
        assert!(a[0].accepted && a[1].accepted);
        assert_eq!(a[0].score, 2);
        assert!(!a[2].accepted);
        assert!(score_and_filter(&cs, &r, 0).is_err());
    }

    #[test]
    fn second_pass_drops_recipes_losing_supporters() {
        // xb also instantiates (p, q), which three languages support, so in
        // the second pass (x, y) keeps only xa and falls below threshold
        let cs = vec![
            cand("la", "ab", &["x"], &["y"]),
            cand("lb", "cd", &["p", "x"], &["q", "y"]),
            cand("lc", "ef", &["p"], &["q"]),
            cand("ld", "gh", &["p"], &["q"]),
        ];
        let r = build_recipes(&cs);
        let xy = r.iter().find(|r| r.left_concept == "x" && r.right_concept == "y").unwrap();
        assert_eq!(xy.support, 2);
        let a = score_and_filter(&cs, &r, 2).unwrap();
        assert!(!a[0].accepted);
        assert_eq!(a[0].score, 1);
        assert!(a[1..].iter().all(|a| a.accepted && a.score == 3));
    }

    #[test]
    fn compounding_feature_counts() {
        let cs = vec![cand("deu", "ab", &["dark"], &["red"]), cand("nld", "cd", &["dark"], &["red"])];
        let a = score_and_filter(&cs, &build_recipes(&cs), 2).unwrap();
        let tr: BTreeMap<String, Vec<(String, String)>> = BTreeMap::from([
            (
                "red".to_string(),
                vec![
                    ("deu".into(), "ab".into()),
                    ("deu".into(), "rot".into()),
                    ("ita".into(), "rosso".into()),
                    ("fra".into(), "rouge".into()),
                ],
            ),
            ("blue".to_string(), vec![("deu".into(), "blau".into())]),
            ("dark red".to_string(), vec![("deu".into(), "ab".into()), ("nld".into(), "cd".into())]),
        ]);
        let colors: Vec<String> = ["red", "blue", "dark red", "puce"].iter().map(|s| s.to_string()).collect();
        let f = compounding_features(&a, &colors, &tr);
        assert_eq!(f["red"], Some((1, 0.25)));
        assert_eq!(f["blue"], Some((0, 0.0)));
        assert_eq!(f["dark red"], Some((2, 1.0)));
        assert_eq!(f["puce"], None);
        assert_eq!(glue_length_histogram(&a), BTreeMap::from([(0, 2)]));
    }
}
