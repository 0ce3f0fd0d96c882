//! Unsupervised training of the unigram segment model.
//!
//! Training searches for the analysis of the word list with the shortest
//! description: the corpus cost of every token under the smoothed model
//! plus a one-off spelling cost of `(len + 1) * ln(A + 1)` nats for each
//! segment type in use, `A` being the alphabet size. Every word starts as a
//! single segment. A move splits one edge string off every segment type
//! that starts (or ends) with it, all at once; splitting an affix off many
//! words together is what lets it pay for itself, which one word at a time
//! it never would. Each iteration scores every move against the current
//! counts and applies the improving ones best first, skipping any that
//! touch a type an earlier move already split. The search stops when no
//! move helps or after `max_iters` iterations. Segments still longer than
//! `max_segment_len` are then cut by Viterbi against the final counts.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{SegmentModel, SegmentScorer, DEFAULT_ALPHA, DEFAULT_MAX_SEGMENT_LEN};
use super::viterbi::viterbi_segment;
use crate::error::{Error, Result};

/// Reserved word-boundary markers; they never occur inside training words.
pub const BOS: char = '\u{2}';
pub const EOS: char = '\u{3}';

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub max_iters: usize,
    pub max_segment_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: DEFAULT_ALPHA,
            max_iters: 20,
            max_segment_len: DEFAULT_MAX_SEGMENT_LEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("segmentation.alpha", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("segmentation.max_iters", "must be at least 1"));
        }
        if self.max_segment_len == 0 {
            return Err(Error::config("segmentation.max_segment_len", "must be at least 1"));
        }
        Ok(())
    }
}

/// Distinct substrings of `word` of at most `max_len` characters, with
/// their occurrence counts inside the word.
pub(crate) fn substrings(word: &str, max_len: usize) -> BTreeMap<&str, u64> {
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = bounds.len() - 1;
    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..=(i + max_len).min(n) {
            *out.entry(&word[bounds[i]..bounds[j]]).or_insert(0) += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    Prefix,
    Suffix,
}

/// Description length bookkeeping over segment counts.
struct Cost {
    alpha: f64,
    alpha_v: f64,
    char_cost: f64,
}

impl Cost {
    /// Contribution of one segment type with `n` tokens.
    fn term(&self, seg: &str, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        (seg.chars().count() as f64 + 1.0) * self.char_cost - n * (n + self.alpha).ln()
    }

    fn total_term(&self, total: u64) -> f64 {
        let t = total as f64;
        t * (t + self.alpha_v).ln()
    }
}

fn split_at_chars(s: &str, k: usize) -> (&str, &str) {
    let i = s.char_indices().nth(k).map_or(s.len(), |(i, _)| i);
    s.split_at(i)
}

fn count_tokens<'a>(analyses: impl Iterator<Item = (&'a Vec<String>, u64)>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for (segs, f) in analyses {
        for s in segs {
            *counts.entry(s.clone()).or_insert(0) += f;
        }
    }
    counts
}

/// Change in description length if every type in `types` loses `affix` at
/// `edge`. Types are distinct and strictly longer than the affix.
fn move_delta(counts: &BTreeMap<String, u64>, total: u64, cost: &Cost, edge: Edge, affix: &str, types: &[&str]) -> f64 {
    let k = affix.chars().count();
    let mut delta: BTreeMap<&str, i64> = BTreeMap::new();
    let mut added = 0u64;
    for &t in types {
        let n = counts[t];
        let rest = match edge {
            Edge::Prefix => split_at_chars(t, k).1,
            Edge::Suffix => split_at_chars(t, t.chars().count() - k).0,
        };
        *delta.entry(t).or_insert(0) -= n as i64;
        *delta.entry(rest).or_insert(0) += n as i64;
        *delta.entry(affix).or_insert(0) += n as i64;
        added += n;
    }
    let mut d = cost.total_term(total + added) - cost.total_term(total);
    for (seg, dn) in delta {
        let old = counts.get(seg).copied().unwrap_or(0);
        let new = (old as i64 + dn) as u64;
        d += cost.term(seg, new) - cost.term(seg, old);
    }
    d
}

/// Scores a segment against counts during the final cut of long segments.
struct CutScorer<'a> {
    counts: &'a BTreeMap<String, u64>,
    total: u64,
    cost: &'a Cost,
    max_len: usize,
}

impl SegmentScorer for CutScorer<'_> {
    fn score(&self, segment: &str) -> Option<f64> {
        let len = segment.chars().count();
        if len == 0 || len > self.max_len {
            return None;
        }
        let c = self.counts.get(segment).copied().unwrap_or(0) as f64;
        let p = (c + self.cost.alpha) / (self.total as f64 + self.cost.alpha_v);
        let spell = if c == 0.0 { (len as f64 + 1.0) * self.cost.char_cost } else { 0.0 };
        Some(p.ln() - spell)
    }

    fn max_segment_len(&self) -> usize {
        self.max_len
    }
}

/// Trains a segment model for one language.
pub fn train_segmenter<S: AsRef<str>>(
    language: &str,
    words: &[S],
    config: &TrainConfig,
) -> Result<SegmentModel> {
    config.validate()?;
    if words.is_empty() {
        return Err(Error::invalid("cannot train a segmenter on an empty word list"));
    }
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for w in words {
        let w = w.as_ref();
        if w.is_empty() {
            return Err(Error::invalid("empty word in training list"));
        }
        if w.contains([BOS, EOS]) {
            return Err(Error::invalid(format!("word {w:?} contains a reserved boundary marker")));
        }
        *freq.entry(w).or_insert(0) += 1;
    }

    let max_len = config.max_segment_len;
    let mut universe: BTreeSet<String> = BTreeSet::new();
    let mut alphabet: BTreeSet<char> = BTreeSet::new();
    for &w in freq.keys() {
        alphabet.extend(w.chars());
        universe.extend(substrings(w, max_len).into_keys().map(str::to_string));
    }
    let cost = Cost {
        alpha: config.alpha,
        alpha_v: config.alpha * universe.len() as f64,
        char_cost: (alphabet.len() as f64 + 1.0).ln(),
    };

    let mut analysis: BTreeMap<&str, Vec<String>> = freq.keys().map(|&w| (w, vec![w.to_string()])).collect();
    for iter in 0..config.max_iters {
        let counts = count_tokens(analysis.iter().map(|(w, s)| (s, freq[w])));
        let total: u64 = counts.values().sum();
        let mut candidates: BTreeMap<(Edge, &str), Vec<&str>> = BTreeMap::new();
        for t in counts.keys() {
            let len = t.chars().count();
            for k in 1..len.min(max_len + 1) {
                candidates.entry((Edge::Prefix, split_at_chars(t, k).0)).or_default().push(t);
                candidates.entry((Edge::Suffix, split_at_chars(t, len - k).1)).or_default().push(t);
            }
        }
        let mut scored: Vec<(f64, Edge, &str, &[&str])> = candidates
            .par_iter()
            .map(|(&(edge, affix), types)| {
                let d = move_delta(&counts, total, &cost, edge, affix, types);
                (d, edge, affix, types.as_slice())
            })
            .filter(|c| c.0 < -1e-9)
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(b.2)));
        // best first; a type split by an earlier move is left alone
        let mut plan: BTreeMap<&str, (Edge, &str)> = BTreeMap::new();
        for (gain, edge, affix, types) in scored {
            if types.iter().any(|t| plan.contains_key(t)) {
                continue;
            }
            log::debug!("{language}: split {edge:?} {affix:?} ({gain:.3} nats)");
            for &t in types {
                plan.insert(t, (edge, affix));
            }
        }
        if plan.is_empty() {
            log::debug!("{language}: converged after {iter} iterations");
            break;
        }
        let plan: BTreeMap<String, [String; 2]> = plan
            .into_iter()
            .map(|(t, (edge, affix))| {
                let k = affix.chars().count();
                let (a, b) = match edge {
                    Edge::Prefix => split_at_chars(t, k),
                    Edge::Suffix => split_at_chars(t, t.chars().count() - k),
                };
                (t.to_string(), [a.to_string(), b.to_string()])
            })
            .collect();
        for segs in analysis.values_mut() {
            *segs = segs
                .drain(..)
                .flat_map(|s| match plan.get(&s) {
                    Some(parts) => parts.to_vec(),
                    None => vec![s],
                })
                .collect();
        }
    }

    // every cut sees the same counts, so the order of cuts is irrelevant
    let counts = count_tokens(analysis.iter().map(|(w, s)| (s, freq[w])));
    let total: u64 = counts.values().sum();
    let scorer = CutScorer {
        counts: &counts,
        total,
        cost: &cost,
        max_len,
    };
    let mut cuts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in counts.keys().filter(|t| t.chars().count() > max_len) {
        cuts.insert(t.clone(), viterbi_segment(&scorer, t)?.segments);
    }
    let mut final_counts: BTreeMap<String, u64> = BTreeMap::new();
    for (s, n) in counts {
        match cuts.get(&s) {
            Some(parts) => {
                for p in parts {
                    *final_counts.entry(p.clone()).or_insert(0) += n;
                }
            }
            None => *final_counts.entry(s).or_insert(0) += n,
        }
    }

    let model = SegmentModel::from_counts(language, final_counts, config.alpha, universe.len(), max_len)?;
    Ok(model.with_universe(universe))
}
