//! Loaders for the external feature resources.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::normalize_text;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
}

fn field<T: FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad {name} `{raw}`"),
    })
}

fn arity(path: &Path, line: usize, cols: &[&str], n: usize) -> Result<()> {
    if cols.len() < n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected {n} tab-separated columns, found {}", cols.len()),
        });
    }
    Ok(())
}

/// English word concreteness ratings on a 1–5 scale.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConcretenessLexicon {
    ratings: BTreeMap<String, f64>,
}

impl ConcretenessLexicon {
    pub fn new(ratings: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (word, r) in ratings {
            if !(1.0..=5.0).contains(&r) {
                return Err(Error::invalid(format!("rating {r} for `{word}` outside [1, 5]")));
            }
            out.insert(normalize_text(&word).to_lowercase(), r);
        }
        Ok(ConcretenessLexicon { ratings: out })
    }

    /// `word<TAB>rating`
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read(path)?;
        let mut ratings = Vec::new();
        for (line, cols) in rows(&text) {
            arity(path, line, &cols, 2)?;
            let r: f64 = field(path, line, "rating", cols[1])?;
            if !(1.0..=5.0).contains(&r) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("rating {r} outside [1, 5]"),
                });
            }
            ratings.push((cols[0].to_string(), r));
        }
        Self::new(ratings)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.ratings.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusSource {
    Ngram,
    Treebank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorpusCounts {
    pub total: u64,
    pub adj: u64,
    pub noun: u64,
}

/// Per-word frequency and part-of-speech counts from one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub source: CorpusSource,
    counts: BTreeMap<String, CorpusCounts>,
}

impl CorpusSummary {
    pub fn new(source: CorpusSource, counts: impl IntoIterator<Item = (String, CorpusCounts)>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (word, c) in counts {
            if c.adj + c.noun > c.total {
                return Err(Error::invalid(format!(
                    "`{word}`: adjective + noun counts exceed total"
                )));
            }
            out.insert(normalize_text(&word).to_lowercase(), c);
        }
        Ok(CorpusSummary { source, counts: out })
    }

    /// `word<TAB>total<TAB>adj<TAB>noun`
    pub fn load(source: CorpusSource, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read(path)?;
        let mut counts = Vec::new();
        for (line, cols) in rows(&text) {
            arity(path, line, &cols, 4)?;
            let c = CorpusCounts {
                total: field(path, line, "total", cols[1])?,
                adj: field(path, line, "adjective count", cols[2])?,
                noun: field(path, line, "noun count", cols[3])?,
            };
            if c.adj + c.noun > c.total {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "adjective + noun counts exceed total".into(),
                });
            }
            counts.push((cols[0].to_string(), c));
        }
        Self::new(source, counts)
    }

    pub fn get(&self, word: &str) -> Option<CorpusCounts> {
        self.counts.get(word).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtymologyProcess {
    Inheritance,
    Derivation,
    SuffixDerivation,
    Cognate,
    Borrowing,
    None,
}

impl FromStr for EtymologyProcess {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_lowercase().as_str() {
            "inheritance" => EtymologyProcess::Inheritance,
            "derivation" => EtymologyProcess::Derivation,
            "suffix-derivation" => EtymologyProcess::SuffixDerivation,
            "cognate" => EtymologyProcess::Cognate,
            "borrowing" => EtymologyProcess::Borrowing,
            "none" => EtymologyProcess::None,
            other => return Err(Error::invalid(format!("unknown etymology process `{other}`"))),
        })
    }
}

impl fmt::Display for EtymologyProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EtymologyProcess::Inheritance => "inheritance",
            EtymologyProcess::Derivation => "derivation",
            EtymologyProcess::SuffixDerivation => "suffix-derivation",
            EtymologyProcess::Cognate => "cognate",
            EtymologyProcess::Borrowing => "borrowing",
            EtymologyProcess::None => "none",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColorEtymology {
    /// Foreign words recorded for the color.
    pub total: u64,
    pub counts: BTreeMap<EtymologyProcess, u64>,
}

impl ColorEtymology {
    pub fn count(&self, process: EtymologyProcess) -> u64 {
        self.counts.get(&process).copied().unwrap_or(0)
    }
}

/// Per-color counts of etymological processes. Suffix derivations are also
/// counted under derivation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EtymologyTable {
    colors: BTreeMap<String, ColorEtymology>,
}

impl EtymologyTable {
    pub fn new(rows: impl IntoIterator<Item = (String, EtymologyProcess, u64, u64)>) -> Result<Self> {
        let mut colors: BTreeMap<String, ColorEtymology> = BTreeMap::new();
        for (color, process, count, total) in rows {
            let color = normalize_text(&color).to_lowercase();
            let entry = colors.entry(color.clone()).or_default();
            if entry.counts.is_empty() && entry.total == 0 {
                entry.total = total;
            } else if entry.total != total {
                return Err(Error::invalid(format!(
                    "`{color}`: inconsistent totals {} and {total}",
                    entry.total
                )));
            }
            *entry.counts.entry(process).or_insert(0) += count;
        }
        for (color, e) in &colors {
            if e.count(EtymologyProcess::SuffixDerivation) > e.count(EtymologyProcess::Derivation) {
                return Err(Error::invalid(format!(
                    "`{color}`: suffix derivations exceed derivations"
                )));
            }
            if e.counts.values().any(|&c| c > e.total) {
                return Err(Error::invalid(format!("`{color}`: a process count exceeds the total")));
            }
        }
        Ok(EtymologyTable { colors })
    }

    /// `color<TAB>process<TAB>count<TAB>total`
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read(path)?;
        let mut out = Vec::new();
        for (line, cols) in rows(&text) {
            arity(path, line, &cols, 4)?;
            let process = cols[1].parse().map_err(|e: Error| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            out.push((
                cols[0].to_string(),
                process,
                field(path, line, "count", cols[2])?,
                field(path, line, "total", cols[3])?,
            ));
        }
        Self::new(out).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn get(&self, color: &str) -> Option<&ColorEtymology> {
        self.colors.get(color)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn concreteness_range_checked() {
        assert!(ConcretenessLexicon::new([("a".to_string(), 0.5)]).is_err());
        let lex = ConcretenessLexicon::new([("Orange".to_string(), 4.66)]).unwrap();
        assert_eq!(lex.get("orange"), Some(4.66));
    }

    #[test]
    fn corpus_invariant() {
        let bad = CorpusCounts {
            total: 10,
            adj: 8,
            noun: 5,
        };
        assert!(CorpusSummary::new(CorpusSource::Ngram, [("red".to_string(), bad)]).is_err());
    }

    #[test]
    fn etymology_loading() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "red\tborrowing\t5\t100\nred\tderivation\t3\t100\nred\tsuffix-derivation\t2\t100").unwrap();
        let t = EtymologyTable::load(f.path()).unwrap();
        let red = t.get("red").unwrap();
        assert_eq!(red.total, 100);
        assert_eq!(red.count(EtymologyProcess::Borrowing), 5);
        assert_eq!(red.count(EtymologyProcess::Cognate), 0);
    }

    #[test]
    fn etymology_suffix_subset_enforced() {
        let rows = vec![
            ("red".to_string(), EtymologyProcess::Derivation, 1, 10),
            ("red".to_string(), EtymologyProcess::SuffixDerivation, 2, 10),
        ];
        assert!(EtymologyTable::new(rows).is_err());
        let rows = vec![
            ("red".to_string(), EtymologyProcess::Derivation, 1, 10),
            ("red".to_string(), EtymologyProcess::Borrowing, 2, 12),
        ];
        assert!(EtymologyTable::new(rows).is_err());
    }
}
