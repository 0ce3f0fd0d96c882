//! Within-language naming consensus and inventory spread for elicitation
//! data in World Color Survey layout.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lexicon::normalize_text;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Elicitation {
    pub language: String,
    pub speaker: String,
    pub chip: String,
    pub term: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ElicitationTable {
    rows: Vec<Elicitation>,
    /// Later responses for an already answered (language, speaker, chip).
    pub conflicts: usize,
    /// Rows with an empty field or the wrong arity.
    pub skipped: usize,
}

impl ElicitationTable {
    /// Keeps the first response per (language, speaker, chip).
    pub fn from_rows(rows: impl IntoIterator<Item = Elicitation>) -> Self {
        let mut seen = BTreeSet::new();
        let mut out = ElicitationTable::default();
        for r in rows {
            let r = Elicitation {
                language: normalize_text(&r.language),
                speaker: normalize_text(&r.speaker),
                chip: normalize_text(&r.chip),
                term: normalize_text(&r.term),
            };
            if [&r.language, &r.speaker, &r.chip, &r.term].iter().any(|f| f.is_empty()) {
                out.skipped += 1;
                continue;
            }
            if seen.insert((r.language.clone(), r.speaker.clone(), r.chip.clone())) {
                out.rows.push(r);
            } else {
                out.conflicts += 1;
            }
        }
        out
    }

    pub fn rows(&self) -> &[Elicitation] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn languages(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.language.as_str()).collect()
    }

    /// speaker -> terms they used
    fn speakers(&self, language: &str) -> Result<BTreeMap<&str, BTreeSet<&str>>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.language == language) {
            out.entry(&r.speaker).or_default().insert(&r.term);
        }
        if out.is_empty() {
            return Err(Error::invalid(format!("unknown language `{language}`")));
        }
        Ok(out)
    }
}

/// `language<TAB>speaker<TAB>chip<TAB>term`
pub fn load_wcs(path: impl AsRef<Path>) -> Result<ElicitationTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut bad = 0;
    let rows: Vec<Elicitation> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != 4 {
                bad += 1;
                return None;
            }
            Some(Elicitation {
                language: cols[0].into(),
                speaker: cols[1].into(),
                chip: cols[2].into(),
                term: cols[3].into(),
            })
        })
        .collect();
    let mut table = ElicitationTable::from_rows(rows);
    table.skipped += bad;
    if table.skipped > 0 || table.conflicts > 0 {
        log::warn!(
            "{}: skipped {} rows, {} conflicting duplicates",
            path.display(),
            table.skipped,
            table.conflicts
        );
    }
    Ok(table)
}

/// Fraction of the language's speakers who used each term at least once.
pub fn term_consensus(table: &ElicitationTable, language: &str) -> Result<BTreeMap<String, f64>> {
    let speakers = table.speakers(language)?;
    let mut users: BTreeMap<&str, usize> = BTreeMap::new();
    for terms in speakers.values() {
        for t in terms {
            *users.entry(t).or_insert(0) += 1;
        }
    }
    let n = speakers.len() as f64;
    Ok(users.into_iter().map(|(t, k)| (t.to_string(), k as f64 / n)).collect())
}

/// Mean and population standard deviation of per-speaker distinct-term
/// counts.
pub fn inventory_stats(table: &ElicitationTable, language: &str) -> Result<(f64, f64)> {
    let sizes: Vec<f64> = table
        .speakers(language)?
        .values()
        .map(|t| t.len() as f64)
        .collect();
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageReport {
    pub language: String,
    pub speakers: usize,
    pub distinct_terms: usize,
    pub inventory_mean: f64,
    pub inventory_std: f64,
    /// Highest consensus first, then by term.
    pub terms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HeterogeneityReport {
    /// Most distinct terms first, then by language id.
    pub languages: Vec<LanguageReport>,
}

pub fn heterogeneity_report(table: &ElicitationTable) -> Result<HeterogeneityReport> {
    let mut languages = Vec::new();
    for lang in table.languages() {
        let consensus = term_consensus(table, lang)?;
        let (mean, std) = inventory_stats(table, lang)?;
        let mut terms: Vec<(String, f64)> = consensus.into_iter().collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        languages.push(LanguageReport {
            language: lang.to_string(),
            speakers: table.speakers(lang)?.len(),
            distinct_terms: terms.len(),
            inventory_mean: mean,
            inventory_std: std,
            terms,
        });
    }
    languages.sort_by(|a, b| {
        b.distinct_terms
            .cmp(&a.distinct_terms)
            .then_with(|| a.language.cmp(&b.language))
    });
    Ok(HeterogeneityReport { languages })
}

fn csv_io(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

impl HeterogeneityReport {
    /// `language,term,speakers_fraction`, one row per distinct term.
    pub fn write_consensus_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["language", "term", "consensus"]).map_err(csv_io)?;
        for l in &self.languages {
            for (t, f) in &l.terms {
                out.write_record([l.language.as_str(), t, &format!("{f:.6}")])
                    .map_err(csv_io)?;
            }
        }
        out.flush().map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn write_inventory_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["language", "speakers", "distinct_terms", "inventory_mean", "inventory_std"])
            .map_err(csv_io)?;
        for l in &self.languages {
            out.write_record([
                l.language.clone(),
                l.speakers.to_string(),
                l.distinct_terms.to_string(),
                format!("{:.6}", l.inventory_mean),
                format!("{:.6}", l.inventory_std),
            ])
            .map_err(csv_io)?;
        }
        out.flush().map_err(|e| Error::Internal(e.to_string()))
    }

    /// Stacked columns, one per language. Each cell is a term; redder cells
    /// were used by more speakers.
    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 24;
        const CELL_H: usize = 8;
        const GAP: usize = 6;
        const MARGIN: usize = 20;
        const LABEL: usize = 40;
        let tallest = self.languages.iter().map(|l| l.distinct_terms).max().unwrap_or(0);
        let width = 2 * MARGIN + self.languages.len() * (CELL_W + GAP);
        let plot_h = tallest * CELL_H;
        let height = 2 * MARGIN + plot_h + LABEL;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        for (i, l) in self.languages.iter().enumerate() {
            let x = MARGIN + i * (CELL_W + GAP);
            let _ = writeln!(
                s,
                r#"<g class="language" data-language="{}" data-terms="{}">"#,
                escape(&l.language),
                l.distinct_terms
            );
            for (k, (term, f)) in l.terms.iter().enumerate() {
                let y = MARGIN + plot_h - (k + 1) * CELL_H;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}" stroke="gray" stroke-width="0.5"><title>{} {:.2}</title></rect>"#,
                    shade(*f),
                    escape(term),
                    f
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="8" text-anchor="end" transform="rotate(-60 {} {})">{}</text>"#,
                x + CELL_W / 2,
                MARGIN + plot_h + 10,
                x + CELL_W / 2,
                MARGIN + plot_h + 10,
                escape(&l.language)
            );
            s.push_str("</g>\n");
        }
        s.push_str("</svg>\n");
        s
    }
}

/// White at zero consensus, pure red at full consensus.
fn shade(fraction: f64) -> String {
    let gb = (255.0 * (1.0 - fraction.clamp(0.0, 1.0))).round() as u8;
    format!("#ff{gb:02x}{gb:02x}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
