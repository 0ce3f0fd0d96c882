//! Affix discovery over Viterbi segmentations and the affix-presence feature.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::model::{SegmentModel, SegmentScorer};
use super::viterbi::{viterbi_segment, Segmentation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AffixPosition {
    Prefix,
    Suffix,
}

impl fmt::Display for AffixPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffixPosition::Prefix => "prefix",
            AffixPosition::Suffix => "suffix",
        })
    }
}

impl FromStr for AffixPosition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefix" => Ok(AffixPosition::Prefix),
            "suffix" => Ok(AffixPosition::Suffix),
            _ => Err(Error::invalid(format!("unknown affix position `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AffixClass {
    ColorSpecific,
    GeneralDerivational,
    Neither,
}

impl fmt::Display for AffixClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffixClass::ColorSpecific => "color-specific",
            AffixClass::GeneralDerivational => "general-derivational",
            AffixClass::Neither => "neither",
        })
    }
}

impl FromStr for AffixClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "color-specific" => Ok(AffixClass::ColorSpecific),
            "general-derivational" => Ok(AffixClass::GeneralDerivational),
            "neither" => Ok(AffixClass::Neither),
            _ => Err(Error::invalid(format!("unknown affix class `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffixThresholds {
    /// Color words an affix must occur in before it is reported.
    pub min_color_words: usize,
    pub min_color_coverage: f64,
    /// color coverage / global coverage needed to call an affix color-specific
    pub specificity_ratio: f64,
    pub min_global_coverage: f64,
    pub epsilon: f64,
}

impl Default for AffixThresholds {
    fn default() -> Self {
        AffixThresholds {
            min_color_words: 2,
            min_color_coverage: 0.2,
            specificity_ratio: 5.0,
            min_global_coverage: 0.1,
            epsilon: 1e-9,
        }
    }
}

impl AffixThresholds {
    pub fn classify(&self, color_coverage: f64, global_coverage: f64) -> AffixClass {
        if color_coverage < self.min_color_coverage {
            AffixClass::Neither
        } else if color_coverage / global_coverage.max(self.epsilon) >= self.specificity_ratio {
            AffixClass::ColorSpecific
        } else if global_coverage >= self.min_global_coverage {
            AffixClass::GeneralDerivational
        } else {
            AffixClass::Neither
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affix {
    pub language: String,
    pub form: String,
    pub position: AffixPosition,
    pub color_coverage: f64,
    pub global_coverage: f64,
    pub class: AffixClass,
}

fn edge_segment(seg: &Segmentation, position: AffixPosition) -> Option<&str> {
    match position {
        AffixPosition::Prefix => seg.prefix(),
        AffixPosition::Suffix => seg.suffix(),
    }
}

fn coverage(segs: &[Segmentation], form: &str, position: AffixPosition) -> f64 {
    if segs.is_empty() {
        return 0.0;
    }
    let hits = segs
        .iter()
        .filter(|s| edge_segment(s, position) == Some(form))
        .count();
    hits as f64 / segs.len() as f64
}

/// Finds prefixes and suffixes that begin or end at least
/// `min_color_words` color-word segmentations, with their coverage over
/// color words and over all words. Only split words (two or more segments)
/// contribute an affix. Global coverage is measured over
/// `all_words ∪ color_words`.
pub fn discover_affixes<S: AsRef<str>>(
    model: &SegmentModel,
    color_words: &[S],
    all_words: &[S],
    thresholds: &AffixThresholds,
) -> Result<Vec<Affix>> {
    if !model.is_trained() {
        return Err(Error::invalid(format!(
            "segment model for `{}` is untrained",
            model.language()
        )));
    }
    let colors: BTreeSet<&str> = color_words.iter().map(AsRef::as_ref).collect();
    let all: BTreeSet<&str> = all_words
        .iter()
        .map(AsRef::as_ref)
        .chain(colors.iter().copied())
        .collect();
    let segment_all = |words: &BTreeSet<&str>| -> Result<Vec<Segmentation>> {
        words.iter().map(|w| viterbi_segment(model, w)).collect()
    };
    let color_segs = segment_all(&colors)?;
    let all_segs = segment_all(&all)?;

    let mut support: BTreeMap<(AffixPosition, &str), usize> = BTreeMap::new();
    for seg in &color_segs {
        for pos in [AffixPosition::Prefix, AffixPosition::Suffix] {
            if let Some(form) = edge_segment(seg, pos) {
                *support.entry((pos, form)).or_insert(0) += 1;
            }
        }
    }

    let mut out: Vec<Affix> = support
        .into_iter()
        .filter(|(_, n)| *n >= thresholds.min_color_words)
        .map(|((position, form), _)| {
            let color_coverage = coverage(&color_segs, form, position);
            let global_coverage = coverage(&all_segs, form, position);
            Affix {
                language: model.language().to_string(),
                form: form.to_string(),
                position,
                color_coverage,
                global_coverage,
                class: thresholds.classify(color_coverage, global_coverage),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.color_coverage
            .total_cmp(&a.color_coverage)
            .then(a.position.cmp(&b.position))
            .then(a.form.cmp(&b.form))
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffixPresenceConfig {
    /// Size of the top slice of the bootstrap ranking.
    pub top_k: usize,
    /// Top colors that must share a suffix in a language for it to count.
    pub min_supporting_colors: usize,
}

impl Default for AffixPresenceConfig {
    fn default() -> Self {
        AffixPresenceConfig {
            top_k: 10,
            min_supporting_colors: 2,
        }
    }
}

/// Per color: the fraction of its `(language, word)` translations whose
/// segmentation ends in a suffix shared by at least `min_supporting_colors`
/// of the top-ranked colors' translations in that language. Colors without
/// translations map to `None`. Languages without a model contribute
/// unsegmented (suffix-less) words.
pub fn affix_presence_feature<M: SegmentScorer>(
    colors: &[String],
    translations: &BTreeMap<String, Vec<(String, String)>>,
    models: &BTreeMap<String, M>,
    bootstrap_ranking: &[String],
    config: &AffixPresenceConfig,
) -> Result<BTreeMap<String, Option<f64>>> {
    if bootstrap_ranking.len() < config.top_k {
        return Err(Error::invalid(format!(
            "bootstrap ranking has {} colors, need at least {}",
            bootstrap_ranking.len(),
            config.top_k
        )));
    }
    let suffix_of = |lang: &str, word: &str| -> Result<Option<String>> {
        let Some(model) = models.get(lang) else {
            return Ok(None);
        };
        Ok(viterbi_segment(model, word)?.suffix().map(str::to_string))
    };

    // language -> suffix -> supporting top colors
    let mut support: BTreeMap<String, BTreeMap<String, BTreeSet<&str>>> = BTreeMap::new();
    for color in &bootstrap_ranking[..config.top_k] {
        for (lang, word) in translations.get(color).into_iter().flatten() {
            if let Some(suffix) = suffix_of(lang, word)? {
                support
                    .entry(lang.clone())
                    .or_default()
                    .entry(suffix)
                    .or_default()
                    .insert(color.as_str());
            }
        }
    }
    let strong: BTreeSet<(String, String)> = support
        .into_iter()
        .flat_map(|(lang, m)| {
            m.into_iter()
                .filter(|(_, cs)| cs.len() >= config.min_supporting_colors)
                .map(move |(suffix, _)| (lang.clone(), suffix))
        })
        .collect();

    let mut out = BTreeMap::new();
    for color in colors {
        let pairs = translations.get(color).map(Vec::as_slice).unwrap_or_default();
        if pairs.is_empty() {
            out.insert(color.clone(), None);
            continue;
        }
        let mut hits = 0usize;
        for (lang, word) in pairs {
            if let Some(suffix) = suffix_of(lang, word)? {
                if strong.contains(&(lang.clone(), suffix)) {
                    hits += 1;
                }
            }
        }
        out.insert(color.clone(), Some(hits as f64 / pairs.len() as f64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::model::SegmentTable;

    #[test]
    fn classification_anchors() {
        let t = AffixThresholds::default();
        // rare elsewhere, 40% of color words
        assert_eq!(t.classify(0.40, 0.05), AffixClass::ColorSpecific);
        // broadly used adjectivalizer
        assert_eq!(t.classify(0.36, 0.30), AffixClass::GeneralDerivational);
        assert_eq!(t.classify(0.15, 0.0), AffixClass::Neither);
        assert_eq!(t.classify(0.30, 0.08), AffixClass::Neither);
    }

    fn table(entries: &[(&str, f64)]) -> SegmentTable {
        SegmentTable::new(entries.iter().map(|(s, p)| (s.to_string(), *p))).unwrap()
    }

    fn ranking(top: &[&str]) -> Vec<String> {
        let mut r: Vec<String> = top.iter().map(|s| s.to_string()).collect();
        for i in r.len()..10 {
            r.push(format!("filler{i}"));
        }
        r
    }

    #[test]
    fn presence_counts_strong_suffixes() {
        // in every language "ka" ends two top colors' words
        let models: BTreeMap<String, SegmentTable> = ["l1", "l2", "l3"]
            .iter()
            .map(|l| {
                (
                    l.to_string(),
                    table(&[("ro", 0.2), ("bi", 0.2), ("ka", 0.3), ("pu", 0.1), ("se", 0.1), ("mi", 0.1)]),
                )
            })
            .collect();
        let mut tr: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for l in ["l1", "l2", "l3"] {
            tr.entry("red".into()).or_default().push((l.into(), "roka".into()));
            tr.entry("white".into()).or_default().push((l.into(), "bika".into()));
        }
        tr.insert(
            "puce".into(),
            vec![
                ("l1".into(), "puka".into()),
                ("l2".into(), "puse".into()),
                ("l3".into(), "pumi".into()),
                ("l3".into(), "se".into()),
            ],
        );
        let colors: Vec<String> = ["red", "white", "puce", "taupe"].iter().map(|s| s.to_string()).collect();
        let f = affix_presence_feature(
            &colors,
            &tr,
            &models,
            &ranking(&["red", "white"]),
            &AffixPresenceConfig::default(),
        )
        .unwrap();
        assert_eq!(f["red"], Some(1.0));
        assert_eq!(f["white"], Some(1.0));
        assert_eq!(f["puce"], Some(0.25));
        assert_eq!(f["taupe"], None);
    }

    #[test]
    fn short_bootstrap_ranking_is_an_error() {
        let models: BTreeMap<String, SegmentTable> = BTreeMap::new();
        let r: Vec<String> = vec!["a".into(); 9];
        assert!(affix_presence_feature(&[], &BTreeMap::new(), &models, &r, &AffixPresenceConfig::default()).is_err());
    }
}
