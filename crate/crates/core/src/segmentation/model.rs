use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_MAX_SEGMENT_LEN: usize = 8;

/// Anything that can score a candidate segment for Viterbi decoding.
pub trait SegmentScorer {
    /// Score of `segment` (a log probability for proper models), or `None`
    /// when the segment may not be used at all.
    fn score(&self, segment: &str) -> Option<f64>;

    /// Longest admissible segment, in characters.
    fn max_segment_len(&self) -> usize;
}

/// Unigram segment model with Dirichlet-smoothed MAP probabilities
/// `(count + alpha) / (total + alpha * V)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentModel {
    language: String,
    counts: BTreeMap<String, u64>,
    total: u64,
    alpha: f64,
    vocab_size: usize,
    max_segment_len: usize,
    #[serde(skip)]
    universe: Option<BTreeSet<String>>,
}

impl SegmentModel {
    /// Builds a model from explicit segment counts. `vocab_size` must be at
    /// least the number of distinct counted segments or the distribution
    /// would not normalize.
    pub fn from_counts(
        language: impl Into<String>,
        counts: BTreeMap<String, u64>,
        alpha: f64,
        vocab_size: usize,
        max_segment_len: usize,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if max_segment_len == 0 {
            return Err(Error::invalid("max_segment_len must be at least 1"));
        }
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        if counts.keys().any(|s| s.is_empty()) {
            return Err(Error::invalid("empty segment in count table"));
        }
        if vocab_size < counts.len() || vocab_size == 0 {
            return Err(Error::invalid(format!(
                "vocab size {vocab_size} smaller than {} counted segments",
                counts.len()
            )));
        }
        let total = counts.values().sum();
        Ok(SegmentModel {
            language: language.into(),
            counts,
            total,
            alpha,
            vocab_size,
            max_segment_len,
            universe: None,
        })
    }

    pub(crate) fn with_universe(mut self, universe: BTreeSet<String>) -> Self {
        debug_assert_eq!(universe.len(), self.vocab_size);
        self.universe = Some(universe);
        self
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, segment: &str) -> u64 {
        self.counts.get(segment).copied().unwrap_or(0)
    }

    pub fn is_trained(&self) -> bool {
        self.total > 0
    }

    /// The event space the prior is defined over, when known (trained models).
    pub fn universe(&self) -> Option<&BTreeSet<String>> {
        self.universe.as_ref()
    }

    fn denominator(&self) -> f64 {
        self.total as f64 + self.alpha * self.vocab_size as f64
    }

    /// MAP probability of `segment`; unseen segments receive
    /// `alpha / (total + alpha * V)`.
    pub fn segment_probability(&self, segment: &str) -> Result<f64> {
        if segment.is_empty() {
            return Err(Error::invalid("segment must be non-empty"));
        }
        Ok(self.probability(segment))
    }

    fn probability(&self, segment: &str) -> f64 {
        (self.count(segment) as f64 + self.alpha) / self.denominator()
    }

    /// Total mass over the event space: stored segments plus the smoothed
    /// mass of the `V - stored` unseen ones.
    pub fn total_mass(&self) -> f64 {
        let d = self.denominator();
        let stored: f64 = self
            .counts
            .values()
            .map(|&c| (c as f64 + self.alpha) / d)
            .sum();
        let unseen = (self.vocab_size - self.counts.len()) as f64 * self.alpha / d;
        stored + unseen
    }
}

impl SegmentScorer for SegmentModel {
    fn score(&self, segment: &str) -> Option<f64> {
        if segment.is_empty() || segment.chars().count() > self.max_segment_len {
            return None;
        }
        Some(self.probability(segment).ln())
    }

    fn max_segment_len(&self) -> usize {
        self.max_segment_len
    }
}

/// Explicit segment probabilities. Segments not in the table cannot be used.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentTable {
    probs: BTreeMap<String, f64>,
    max_len: usize,
}

impl SegmentTable {
    pub fn new(probs: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut table = SegmentTable::default();
        for (seg, p) in probs {
            if seg.is_empty() {
                return Err(Error::invalid("empty segment in probability table"));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("probability of `{seg}` outside (0, 1]: {p}")));
            }
            table.max_len = table.max_len.max(seg.chars().count());
            table.probs.insert(seg, p);
        }
        Ok(table)
    }

    pub fn probability(&self, segment: &str) -> Option<f64> {
        self.probs.get(segment).copied()
    }
}

impl SegmentScorer for SegmentTable {
    fn score(&self, segment: &str) -> Option<f64> {
        self.probs.get(segment).map(|p| p.ln())
    }

    fn max_segment_len(&self) -> usize {
        self.max_len.max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(counts: &[(&str, u64)], alpha: f64, v: usize) -> SegmentModel {
        let counts = counts.iter().map(|(s, c)| (s.to_string(), *c)).collect();
        SegmentModel::from_counts("xx", counts, alpha, v, 8).unwrap()
    }

    #[test]
    fn map_estimate_worked_example() {
        let m = model(&[("a", 3), ("b", 1)], 0.01, 2);
        let p = m.segment_probability("a").unwrap();
        assert!((p - 3.01 / 4.02).abs() < 1e-15);
        assert!((p - 0.748_756_218_905_472_6).abs() < 1e-12);
    }

    #[test]
    fn unseen_segment_gets_smoothed_mass() {
        let m = model(&[("a", 3), ("b", 1)], 0.01, 2);
        let p = m.segment_probability("z").unwrap();
        assert!((p - 0.01 / 4.02).abs() < 1e-15);
    }

    #[test]
    fn large_alpha_tends_to_uniform() {
        let m = model(&[("a", 2), ("b", 2), ("c", 2)], 1e9, 3);
        for s in ["a", "b", "c"] {
            assert!((m.segment_probability(s).unwrap() - 1.0 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_segment_rejected() {
        let m = model(&[("a", 1)], 0.01, 1);
        assert!(m.segment_probability("").is_err());
    }

    #[test]
    fn alpha_must_be_positive() {
        let counts = BTreeMap::from([("a".to_string(), 1)]);
        assert!(SegmentModel::from_counts("xx", counts.clone(), 0.0, 1, 8).is_err());
        assert!(SegmentModel::from_counts("xx", counts, -1.0, 1, 8).is_err());
    }

    #[test]
    fn mass_sums_to_one() {
        let m = model(&[("a", 3), ("b", 1), ("ab", 7)], 0.01, 40);
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_rejects_bad_probabilities() {
        assert!(SegmentTable::new([("a".to_string(), 0.0)]).is_err());
        assert!(SegmentTable::new([("a".to_string(), 1.5)]).is_err());
    }
}
