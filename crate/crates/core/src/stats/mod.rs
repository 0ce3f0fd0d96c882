//! Rank correlation, normalization, aggregation and feature elimination.

mod aggregate;
mod gamma;
mod rfe;

use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregate, bootstrap_then_full_aggregate, normalize_feature, AggregateRanking, Direction, Directions,
    RankedColor, TwoPassAggregate,
};
pub use gamma::{gamma, GammaResult};
pub use rfe::{rfe, subset_gamma, RfeResult, RfeStep};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::lexicon::{ColorConcept, SeedList};

/// Stage given to every secondary color in the sequence target.
pub const SECONDARY_STAGE: u8 = 7;

fn concept<'a>(seeds: &'a SeedList, color: &str) -> Result<&'a ColorConcept> {
    seeds
        .get(color)
        .ok_or_else(|| Error::invalid(format!("`{color}` is not in the seed list")))
}

/// 1 for basic colors, 0 for secondary ones.
pub fn basic_target(colors: &[String], seeds: &SeedList) -> Result<Vec<f64>> {
    colors
        .iter()
        .map(|c| Ok(if concept(seeds, c)?.is_basic { 1.0 } else { 0.0 }))
        .collect()
}

/// Negated acquisition stage, so earlier colors rank higher. Secondary
/// colors share one stage after all basic ones.
pub fn sequence_target(colors: &[String], seeds: &SeedList) -> Result<Vec<f64>> {
    colors
        .iter()
        .map(|c| {
            let k = concept(seeds, c)?;
            let stage = if k.is_basic {
                k.bk_stage
                    .ok_or_else(|| Error::invalid(format!("basic color `{c}` has no stage")))?
            } else {
                SECONDARY_STAGE
            };
            Ok(-f64::from(stage))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceScope {
    #[default]
    All,
    BasicOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRow {
    pub feature: String,
    pub gamma_basic: Option<f64>,
    pub gamma_sequence: Option<f64>,
}

fn defined(r: Result<GammaResult>) -> Result<Option<f64>> {
    match r {
        Ok(g) => Ok(Some(g.gamma)),
        Err(Error::UndefinedGamma) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One row per matrix feature (with its direction applied) and a final
/// `aggregate` row for `scores`, which must be aligned with the matrix rows.
pub fn gamma_table(
    matrix: &FeatureMatrix,
    directions: &Directions,
    scores: &[f64],
    seeds: &SeedList,
    scope: SequenceScope,
) -> Result<Vec<GammaRow>> {
    let basic = basic_target(matrix.colors(), seeds)?;
    let sequence = sequence_target(matrix.colors(), seeds)?;
    let keep: Vec<usize> = (0..matrix.n_rows())
        .filter(|&i| scope == SequenceScope::All || basic[i] == 1.0)
        .collect();
    let pick = |v: &[f64]| -> Vec<f64> { keep.iter().map(|&i| v[i]).collect() };
    let seq_target = pick(&sequence);
    let row = |name: String, v: &[f64]| -> Result<GammaRow> {
        Ok(GammaRow {
            feature: name,
            gamma_basic: defined(gamma(v, &basic))?,
            gamma_sequence: if keep.len() < 2 {
                None
            } else {
                defined(gamma(&pick(v), &seq_target))?
            },
        })
    };
    let mut out = Vec::new();
    for &f in matrix.features() {
        out.push(row(f.name().to_string(), &directions.directed(f, &matrix.column(f)?))?);
    }
    out.push(row("aggregate".to_string(), scores)?);
    Ok(out)
}

pub fn write_gamma_csv<W: std::io::Write>(rows: &[GammaRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    let cell = |g: Option<f64>| g.map(|g| format!("{g:.6}")).unwrap_or_default();
    out.write_record(["feature", "gamma_basic", "gamma_sequence"]).map_err(io)?;
    for r in rows {
        out.write_record([r.feature.clone(), cell(r.gamma_basic), cell(r.gamma_sequence)])
            .map_err(io)?;
    }
    out.flush().map_err(|e| Error::Internal(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Feature;

    fn seeds() -> SeedList {
        "white*\nblack*\nred*\ngreen*\nyellow*\nblue*\nbrown*\npurple*\npink*\norange*\ngrey*\ncrimson\nbeige"
            .parse()
            .unwrap()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sequence_stages() {
        let t = sequence_target(&names(&["white", "blue", "crimson", "purple", "grey"]), &seeds()).unwrap();
        assert_eq!(t, vec![-1.0, -4.0, -7.0, -6.0, -6.0]);
        assert!(sequence_target(&names(&["mauve"]), &seeds()).is_err());
    }

    #[test]
    fn table_has_aggregate_row() {
        let colors = names(&["white", "red", "blue", "crimson", "beige"]);
        let m = FeatureMatrix::from_rows(
            colors,
            vec![Feature::Cognate, Feature::WordLength],
            vec![vec![5.0, 3.0], vec![4.0, 3.0], vec![3.0, 4.0], vec![2.0, 7.0], vec![1.0, 5.0]],
        )
        .unwrap();
        let scores = [1.0, 0.8, 0.6, 0.2, 0.1];
        let rows = gamma_table(&m, &Directions::default(), &scores, &seeds(), SequenceScope::All).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].gamma_basic, Some(1.0));
        assert_eq!(rows[0].gamma_sequence, Some(1.0));
        assert_eq!(rows[2].feature, "aggregate");
        // word length is negated
        assert!(rows[1].gamma_basic.unwrap() > 0.0);
        let basic_only = gamma_table(&m, &Directions::default(), &scores, &seeds(), SequenceScope::BasicOnly).unwrap();
        assert_eq!(basic_only[0].gamma_sequence, Some(1.0));
        let mut buf = Vec::new();
        write_gamma_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("feature,gamma_basic,gamma_sequence\n"));
    }
}
