use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Feature, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negated,
}

/// How each raw column is turned into a basicness score before averaging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Directions {
    pub negated: BTreeSet<Feature>,
    /// Columns passed through ln(1 + x) before min-max scaling.
    pub log_scaled: BTreeSet<Feature>,
}

impl Default for Directions {
    fn default() -> Self {
        Directions {
            negated: BTreeSet::from([
                Feature::WordConcreteness,
                Feature::TranslationConcreteness,
                Feature::WordLength,
                Feature::CompoundFrequency,
                Feature::Borrowing,
            ]),
            log_scaled: BTreeSet::from([Feature::NgramFrequency]),
        }
    }
}

impl Directions {
    pub fn direction(&self, feature: Feature) -> Direction {
        if self.negated.contains(&feature) {
            Direction::Negated
        } else {
            Direction::Positive
        }
    }

    /// The column with sign applied, suitable for rank statistics.
    pub fn directed(&self, feature: Feature, values: &[f64]) -> Vec<f64> {
        match self.direction(feature) {
            Direction::Positive => values.to_vec(),
            Direction::Negated => values.iter().map(|v| -v).collect(),
        }
    }

    fn prepared(&self, feature: Feature, values: &[f64]) -> Result<Vec<f64>> {
        if !self.log_scaled.contains(&feature) {
            return Ok(values.to_vec());
        }
        if values.iter().any(|&v| v <= -1.0) {
            return Err(Error::invalid(format!(
                "`{feature}` is log-scaled but has values ≤ -1"
            )));
        }
        Ok(values.iter().map(|v| v.ln_1p()).collect())
    }
}

/// Min-max scales a column into [0, 1], flipped when negated.
pub fn normalize_feature(values: &[f64], direction: Direction) -> Result<Vec<f64>> {
    normalize_named(values, direction, "column")
}

fn normalize_named(values: &[f64], direction: Direction, name: &str) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("`{name}` has non-finite values")));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || lo == hi {
        return Err(Error::DegenerateColumn(name.to_string()));
    }
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|v| {
            let s = (v - lo) / span;
            match direction {
                Direction::Positive => s,
                Direction::Negated => 1.0 - s,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedColor {
    pub color: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRanking {
    /// Best first.
    pub ranking: Vec<RankedColor>,
    /// Scores aligned with the matrix rows.
    pub row_scores: Vec<f64>,
    pub features: Vec<Feature>,
    pub negated: Vec<Feature>,
    /// Constant columns; they add the same zero to every color.
    pub degenerate: Vec<Feature>,
}

impl AggregateRanking {
    pub fn top(&self, k: usize) -> Vec<String> {
        self.ranking.iter().take(k).map(|r| r.color.clone()).collect()
    }

    pub fn colors(&self) -> Vec<String> {
        self.top(self.ranking.len())
    }

    pub fn score(&self, color: &str) -> Option<f64> {
        self.ranking.iter().find(|r| r.color == color).map(|r| r.score)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        out.write_record(["rank", "color", "score"]).map_err(io)?;
        for (i, r) in self.ranking.iter().enumerate() {
            out.write_record([(i + 1).to_string(), r.color.clone(), format!("{:.6}", r.score)])
                .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Unweighted mean of the normalized `subset` columns, divided by the
/// largest mean so the top color scores 1. Ties keep matrix row order,
/// which is the seed-list order.
///
/// Columns are summed in canonical feature order whatever the order of
/// `subset` or of the matrix, so the result does not depend on either.
pub fn aggregate(matrix: &FeatureMatrix, directions: &Directions, subset: &[Feature]) -> Result<AggregateRanking> {
    let features: Vec<Feature> = subset.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if features.is_empty() {
        return Err(Error::invalid("aggregation needs at least one feature"));
    }
    let n = matrix.n_rows();
    let mut sums = vec![0.0; n];
    let mut degenerate = Vec::new();
    for &f in &features {
        let raw = directions.prepared(f, &matrix.column(f)?)?;
        match normalize_named(&raw, directions.direction(f), f.name()) {
            Ok(col) => {
                for (s, v) in sums.iter_mut().zip(col) {
                    *s += v;
                }
            }
            Err(Error::DegenerateColumn(_)) => {
                log::warn!("feature `{f}` is constant over the surviving colors");
                degenerate.push(f);
            }
            Err(e) => return Err(e),
        }
    }
    if degenerate.len() == features.len() {
        return Err(Error::DegenerateColumn(
            features.iter().map(|f| f.name()).collect::<Vec<_>>().join(","),
        ));
    }
    let k = features.len() as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / k).collect();
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let row_scores: Vec<f64> = means.iter().map(|m| m / max).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| row_scores[b].total_cmp(&row_scores[a]).then(a.cmp(&b)));
    Ok(AggregateRanking {
        ranking: order
            .into_iter()
            .map(|i| RankedColor {
                color: matrix.colors()[i].clone(),
                score: row_scores[i],
            })
            .collect(),
        row_scores,
        negated: features.iter().copied().filter(|f| directions.negated.contains(f)).collect(),
        features,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPassAggregate {
    pub bootstrap: AggregateRanking,
    pub final_ranking: AggregateRanking,
    /// The input matrix with the affix-presence column filled in.
    pub matrix: FeatureMatrix,
}

/// Aggregates everything except affix presence, hands that ranking to
/// `affix_presence` to compute the missing column, then aggregates again
/// over all columns.
pub fn bootstrap_then_full_aggregate<F>(
    matrix: &FeatureMatrix,
    directions: &Directions,
    affix_presence: F,
) -> Result<TwoPassAggregate>
where
    F: FnOnce(&AggregateRanking) -> Result<BTreeMap<String, Option<f64>>>,
{
    let first: Vec<Feature> = matrix
        .features()
        .iter()
        .copied()
        .filter(|&f| f != Feature::AffixPresence)
        .collect();
    let bootstrap = aggregate(matrix, directions, &first)?;
    let column = affix_presence(&bootstrap)?;
    let full = matrix.clone().with_column(Feature::AffixPresence, &column)?;
    let final_ranking = aggregate(&full, directions, full.features())?;
    Ok(TwoPassAggregate {
        bootstrap,
        final_ranking,
        matrix: full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(features: &[Feature], rows: &[&[f64]]) -> FeatureMatrix {
        let colors = (0..rows.len()).map(|i| format!("c{i}")).collect();
        FeatureMatrix::from_rows(colors, features.to_vec(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn plain() -> Directions {
        Directions {
            negated: BTreeSet::new(),
            log_scaled: BTreeSet::new(),
        }
    }

    #[test]
    fn min_max_examples() {
        assert_eq!(normalize_feature(&[2.0, 4.0, 6.0], Direction::Positive).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_feature(&[2.0, 4.0, 6.0], Direction::Negated).unwrap(), vec![1.0, 0.5, 0.0]);
        assert!(matches!(
            normalize_feature(&[5.0, 5.0, 5.0], Direction::Positive),
            Err(Error::DegenerateColumn(_))
        ));
    }

    #[test]
    fn duplicate_columns_match_single_column() {
        let m = matrix(&[Feature::Cognate, Feature::Derivation], &[&[1.0, 1.0], &[3.0, 3.0], &[2.0, 2.0]]);
        let both = aggregate(&m, &plain(), &[Feature::Cognate, Feature::Derivation]).unwrap();
        let one = aggregate(&m, &plain(), &[Feature::Cognate]).unwrap();
        assert_eq!(both.colors(), one.colors());
        assert_eq!(both.colors(), ["c1", "c2", "c0"]);
        assert_eq!(both.ranking[0].score, 1.0);
    }

    #[test]
    fn negation_and_rescale() {
        let m = matrix(&[Feature::WordLength, Feature::Cognate], &[&[3.0, 1.0], &[5.0, 0.0], &[4.0, 0.5]]);
        let r = aggregate(&m, &Directions::default(), m.features()).unwrap();
        assert_eq!(r.colors(), ["c0", "c2", "c1"]);
        assert_eq!(r.row_scores, vec![1.0, 0.0, 0.5]);
        assert_eq!(r.negated, vec![Feature::WordLength]);
    }

    #[test]
    fn ties_keep_row_order() {
        let m = matrix(&[Feature::Cognate], &[&[1.0], &[2.0], &[2.0], &[1.0]]);
        let r = aggregate(&m, &plain(), &[Feature::Cognate]).unwrap();
        assert_eq!(r.colors(), ["c1", "c2", "c0", "c3"]);
    }

    #[test]
    fn empty_subset_is_an_error() {
        let m = matrix(&[Feature::Cognate], &[&[1.0], &[2.0]]);
        assert!(aggregate(&m, &plain(), &[]).is_err());
        assert!(aggregate(&m, &plain(), &[Feature::Borrowing]).is_err());
    }

    #[test]
    fn log_scaling_changes_scores_not_single_column_order() {
        let m = matrix(&[Feature::NgramFrequency], &[&[10.0], &[1000.0], &[100.0]]);
        let r = aggregate(&m, &Directions::default(), &[Feature::NgramFrequency]).unwrap();
        assert_eq!(r.colors(), ["c1", "c2", "c0"]);
        let mid = ((101f64).ln() - (11f64).ln()) / ((1001f64).ln() - (11f64).ln());
        assert!((r.row_scores[2] - mid).abs() < 1e-12);
    }

    #[test]
    fn uniform_affix_column_keeps_bootstrap_order() {
        let m = matrix(&[Feature::Cognate, Feature::Derivation], &[&[1.0, 2.0], &[3.0, 1.0], &[2.0, 2.5], &[0.0, 0.0]]);
        let two = bootstrap_then_full_aggregate(&m, &plain(), |b| {
            Ok(b.colors().into_iter().map(|c| (c, Some(0.3))).collect())
        })
        .unwrap();
        assert_eq!(two.bootstrap.colors(), two.final_ranking.colors());
        assert_eq!(two.final_ranking.degenerate, vec![Feature::AffixPresence]);
        assert_eq!(two.matrix.features().len(), 3);
    }

    #[test]
    fn missing_affix_column_is_an_error() {
        let m = matrix(&[Feature::Cognate], &[&[1.0], &[2.0]]);
        let r = bootstrap_then_full_aggregate(&m, &plain(), |b| Ok(b.colors().into_iter().map(|c| (c, None)).collect()));
        assert!(r.is_err());
    }
}
