use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::model::SegmentScorer;
use crate::error::{Error, Result};

/// A segmentation of a word. Segments concatenate to the word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub word: String,
    pub segments: Vec<String>,
    pub log_prob: f64,
}

impl Segmentation {
    pub fn first(&self) -> &str {
        &self.segments[0]
    }

    pub fn last(&self) -> &str {
        &self.segments[self.segments.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Suffix segment, if the word was split at all.
    pub fn suffix(&self) -> Option<&str> {
        (self.segments.len() >= 2).then(|| self.last())
    }

    pub fn prefix(&self) -> Option<&str> {
        (self.segments.len() >= 2).then(|| self.first())
    }
}

#[derive(Clone, Copy)]
struct Cell {
    score: f64,
    count: usize,
    back: usize,
}

/// Highest-scoring segmentation of `word` under `scorer`.
///
/// Scores add left to right along the path. Exact score ties go to the
/// segmentation with fewer segments, then to the lexicographically smallest
/// segment list. Both criteria have optimal substructure over prefixes, so
/// the dynamic program is exact.
pub fn viterbi_segment<M: SegmentScorer + ?Sized>(scorer: &M, word: &str) -> Result<Segmentation> {
    if word.is_empty() {
        return Err(Error::invalid("cannot segment an empty word"));
    }
    // byte offset of every char boundary, including the end
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = bounds.len() - 1;
    let max_len = scorer.max_segment_len().max(1);

    let mut cells: Vec<Option<Cell>> = vec![None; n + 1];
    cells[0] = Some(Cell {
        score: 0.0,
        count: 0,
        back: 0,
    });

    for end in 1..=n {
        let mut best: Option<Cell> = None;
        for start in end.saturating_sub(max_len)..end {
            let Some(prev) = cells[start] else { continue };
            let Some(lp) = scorer.score(&word[bounds[start]..bounds[end]]) else {
                continue;
            };
            let cand = Cell {
                score: prev.score + lp,
                count: prev.count + 1,
                back: start,
            };
            best = Some(match best {
                None => cand,
                Some(cur) => {
                    if better(&cand, &cur, &cells, &bounds, word, end) {
                        cand
                    } else {
                        cur
                    }
                }
            });
        }
        cells[end] = best;
    }

    let last = cells[n].ok_or_else(|| Error::invalid(format!("no admissible segmentation of `{word}`")))?;
    let segments = path(&cells, &bounds, word, n)
        .into_iter()
        .map(str::to_string)
        .collect();
    Ok(Segmentation {
        word: word.to_string(),
        segments,
        log_prob: last.score,
    })
}

fn better(cand: &Cell, cur: &Cell, cells: &[Option<Cell>], bounds: &[usize], word: &str, end: usize) -> bool {
    match cand.score.partial_cmp(&cur.score) {
        Some(Ordering::Greater) => return true,
        Some(Ordering::Less) => return false,
        _ => {}
    }
    match cand.count.cmp(&cur.count) {
        Ordering::Less => return true,
        Ordering::Greater => return false,
        Ordering::Equal => {}
    }
    let mut a = path(cells, bounds, word, cand.back);
    a.push(&word[bounds[cand.back]..bounds[end]]);
    let mut b = path(cells, bounds, word, cur.back);
    b.push(&word[bounds[cur.back]..bounds[end]]);
    a < b
}

fn path<'w>(cells: &[Option<Cell>], bounds: &[usize], word: &'w str, mut end: usize) -> Vec<&'w str> {
    let mut out = Vec::new();
    while end > 0 {
        let cell = cells[end].expect("back-pointer to unreachable cell");
        out.push(&word[bounds[cell.back]..bounds[end]]);
        end = cell.back;
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::model::SegmentTable;

    fn table(entries: &[(&str, f64)]) -> SegmentTable {
        SegmentTable::new(entries.iter().map(|(s, p)| (s.to_string(), *p))).unwrap()
    }

    #[test]
    fn product_beats_whole() {
        let t = table(&[("ab", 0.5), ("c", 0.5), ("abc", 0.2)]);
        let s = viterbi_segment(&t, "abc").unwrap();
        assert_eq!(s.segments, vec!["ab", "c"]);
        assert!((s.log_prob - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_char() {
        let t = table(&[("a", 0.3)]);
        assert_eq!(viterbi_segment(&t, "a").unwrap().segments, vec!["a"]);
    }

    #[test]
    fn uniform_prefers_fewest_segments() {
        let word = "abcd";
        let mut entries = Vec::new();
        for i in 0..word.len() {
            for j in i + 1..=word.len() {
                entries.push((word[i..j].to_string(), 0.1));
            }
        }
        let t = SegmentTable::new(entries).unwrap();
        assert_eq!(viterbi_segment(&t, word).unwrap().segments, vec!["abcd"]);
    }

    #[test]
    fn exact_ties_prefer_fewer_then_lexicographic() {
        // a|bc and ab|c both score 0.25; lexicographic order picks a|bc
        let t = table(&[("a", 0.5), ("bc", 0.5), ("ab", 0.5), ("c", 0.5)]);
        assert_eq!(viterbi_segment(&t, "abc").unwrap().segments, vec!["a", "bc"]);
        // whole word ties with a two-segment path: fewer segments wins
        let t = table(&[("ab", 0.25), ("a", 0.5), ("b", 0.5)]);
        assert_eq!(viterbi_segment(&t, "ab").unwrap().segments, vec!["ab"]);
    }

    #[test]
    fn multibyte_characters() {
        let t = table(&[("橙", 0.4), ("色", 0.4), ("橙色", 0.1)]);
        let s = viterbi_segment(&t, "橙色").unwrap();
        assert_eq!(s.segments, vec!["橙", "色"]);
        assert_eq!(s.segments.concat(), "橙色");
    }

    #[test]
    fn empty_word_is_an_error() {
        let t = table(&[("a", 0.5)]);
        assert!(viterbi_segment(&t, "").is_err());
    }

    #[test]
    fn unreachable_word_is_an_error() {
        let t = table(&[("a", 0.5)]);
        assert!(viterbi_segment(&t, "ab").is_err());
    }
}
