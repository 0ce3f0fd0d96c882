use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::Serialize;

use super::Feature;
use crate::error::{Error, Result};

/// Median of a non-empty slice; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

/// Raw per-feature maps from color to value, `None` meaning missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureColumns {
    columns: BTreeMap<Feature, BTreeMap<String, Option<f64>>>,
}

impl FeatureColumns {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, feature: Feature, values: BTreeMap<String, Option<f64>>) {
        self.columns.insert(feature, values);
    }

    pub fn set(&mut self, feature: Feature, color: &str, value: Option<f64>) {
        self.columns
            .entry(feature)
            .or_default()
            .insert(color.to_string(), value);
    }

    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        self.columns.keys().copied()
    }

    pub fn get(&self, feature: Feature, color: &str) -> Option<f64> {
        self.columns.get(&feature)?.get(color).copied().flatten()
    }
}

/// Colors by features, with no missing cells. Cells that were missing have
/// been filled with the column median and are flagged in the imputation mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMatrix {
    colors: Vec<String>,
    features: Vec<Feature>,
    // row-major
    values: Vec<Vec<f64>>,
    imputed: Vec<Vec<bool>>,
    dropped: Vec<String>,
}

/// Joins feature columns over `colors` (kept in the given order).
///
/// Colors missing more than half of the columns are dropped; remaining gaps
/// take the median of the surviving colors' observed values in that column.
pub fn assemble_feature_matrix(columns: &FeatureColumns, colors: &[String]) -> Result<FeatureMatrix> {
    let features: Vec<Feature> = columns.features().collect();
    if features.is_empty() {
        return Err(Error::invalid("no feature columns to assemble"));
    }
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for color in colors {
        let missing = features
            .iter()
            .filter(|f| columns.get(**f, color).is_none())
            .count();
        if 2 * missing > features.len() {
            dropped.push(color.clone());
        } else {
            kept.push(color.clone());
        }
    }
    if kept.len() < 2 {
        return Err(Error::invalid(format!(
            "only {} color(s) survive the missing-value filter; need at least 2",
            kept.len()
        )));
    }
    let mut values = vec![vec![0.0; features.len()]; kept.len()];
    let mut imputed = vec![vec![false; features.len()]; kept.len()];
    for (j, &f) in features.iter().enumerate() {
        let observed: Vec<f64> = kept.iter().filter_map(|c| columns.get(f, c)).collect();
        let fill = median(&observed)
            .ok_or_else(|| Error::invalid(format!("column `{f}` has no observed values")))?;
        for (i, c) in kept.iter().enumerate() {
            match columns.get(f, c) {
                Some(v) => values[i][j] = v,
                None => {
                    values[i][j] = fill;
                    imputed[i][j] = true;
                }
            }
        }
    }
    Ok(FeatureMatrix {
        colors: kept,
        features,
        values,
        imputed,
        dropped,
    })
}

impl FeatureMatrix {
    /// Builds a complete matrix directly from rows.
    pub fn from_rows(colors: Vec<String>, features: Vec<Feature>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != colors.len() || values.iter().any(|r| r.len() != features.len()) {
            return Err(Error::invalid("matrix shape does not match labels"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix contains non-finite values"));
        }
        let unique: BTreeSet<_> = features.iter().collect();
        if unique.len() != features.len() {
            return Err(Error::invalid("duplicate feature column"));
        }
        let imputed = vec![vec![false; features.len()]; colors.len()];
        Ok(FeatureMatrix {
            colors,
            features,
            values,
            imputed,
            dropped: Vec::new(),
        })
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    pub fn n_rows(&self) -> usize {
        self.colors.len()
    }

    pub fn has(&self, feature: Feature) -> bool {
        self.features.contains(&feature)
    }

    fn col_index(&self, feature: Feature) -> Result<usize> {
        self.features
            .iter()
            .position(|&f| f == feature)
            .ok_or_else(|| Error::invalid(format!("feature `{feature}` not in matrix")))
    }

    pub fn column(&self, feature: Feature) -> Result<Vec<f64>> {
        let j = self.col_index(feature)?;
        Ok(self.values.iter().map(|r| r[j]).collect())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn is_imputed(&self, row: usize, feature: Feature) -> bool {
        self.col_index(feature)
            .map(|j| self.imputed[row][j])
            .unwrap_or(false)
    }

    /// `(color, feature)` cells filled by imputation.
    pub fn imputed_cells(&self) -> Vec<(String, Feature)> {
        let mut out = Vec::new();
        for (i, c) in self.colors.iter().enumerate() {
            for (j, &f) in self.features.iter().enumerate() {
                if self.imputed[i][j] {
                    out.push((c.clone(), f));
                }
            }
        }
        out
    }

    /// Adds (or replaces) a column, imputing missing cells with its median.
    pub fn with_column(mut self, feature: Feature, values: &BTreeMap<String, Option<f64>>) -> Result<Self> {
        let observed: Vec<f64> = self
            .colors
            .iter()
            .filter_map(|c| values.get(c).copied().flatten())
            .collect();
        let fill = median(&observed)
            .ok_or_else(|| Error::invalid(format!("column `{feature}` has no observed values")))?;
        let j = match self.col_index(feature) {
            Ok(j) => j,
            Err(_) => {
                // keep canonical column order
                let j = self.features.iter().take_while(|&&f| f < feature).count();
                self.features.insert(j, feature);
                for (row, mask) in self.values.iter_mut().zip(self.imputed.iter_mut()) {
                    row.insert(j, 0.0);
                    mask.insert(j, false);
                }
                j
            }
        };
        for (i, c) in self.colors.iter().enumerate() {
            match values.get(c).copied().flatten() {
                Some(v) => {
                    self.values[i][j] = v;
                    self.imputed[i][j] = false;
                }
                None => {
                    self.values[i][j] = fill;
                    self.imputed[i][j] = true;
                }
            }
        }
        Ok(self)
    }

    /// A copy restricted to `subset`, in the matrix's own column order.
    pub fn select(&self, subset: &[Feature]) -> Result<Self> {
        for f in subset {
            self.col_index(*f)?;
        }
        let keep: Vec<usize> = (0..self.features.len())
            .filter(|&j| subset.contains(&self.features[j]))
            .collect();
        Ok(FeatureMatrix {
            colors: self.colors.clone(),
            features: keep.iter().map(|&j| self.features[j]).collect(),
            values: self
                .values
                .iter()
                .map(|r| keep.iter().map(|&j| r[j]).collect())
                .collect(),
            imputed: self
                .imputed
                .iter()
                .map(|r| keep.iter().map(|&j| r[j]).collect())
                .collect(),
            dropped: self.dropped.clone(),
        })
    }

    /// A copy keeping only the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.n_rows()) {
            return Err(Error::invalid(format!("row {i} out of range")));
        }
        Ok(FeatureMatrix {
            colors: indices.iter().map(|&i| self.colors[i].clone()).collect(),
            features: self.features.clone(),
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
            imputed: indices.iter().map(|&i| self.imputed[i].clone()).collect(),
            dropped: self.dropped.clone(),
        })
    }

    /// CSV with a `color` column followed by one column per feature.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["color".to_string()];
        header.extend(self.features.iter().map(|f| f.name().to_string()));
        out.write_record(&header).map_err(csv_err)?;
        for (c, row) in self.colors.iter().zip(&self.values) {
            let mut rec = vec![c.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Internal(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("color") {
            return Err(Error::invalid("feature CSV must start with a `color` column"));
        }
        let features = header
            .iter()
            .skip(1)
            .map(str::parse)
            .collect::<Result<Vec<Feature>>>()?;
        let mut colors = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            colors.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad feature value `{v}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        Self::from_rows(colors, features, values)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colors(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[1.0, 2.0, 4.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn complete_input_has_no_imputation() {
        let mut cols = FeatureColumns::new();
        for (k, f) in Feature::ALL.into_iter().enumerate() {
            for (i, c) in colors(3).iter().enumerate() {
                cols.set(f, c, Some((i * k) as f64));
            }
        }
        let m = assemble_feature_matrix(&cols, &colors(3)).unwrap();
        assert_eq!(m.features().len(), 14);
        assert!(m.imputed_cells().is_empty());
        assert!(m.dropped().is_empty());
    }

    #[test]
    fn sparse_color_dropped() {
        let cs = colors(4);
        let mut cols = FeatureColumns::new();
        for (k, f) in Feature::ALL.into_iter().enumerate() {
            for c in &cs {
                let missing = c == "c3" && k < 8;
                cols.set(f, c, (!missing).then_some(1.0 + k as f64));
            }
        }
        let m = assemble_feature_matrix(&cols, &cs).unwrap();
        assert_eq!(m.dropped(), ["c3".to_string()]);
        assert_eq!(m.colors(), &cs[..3]);
    }

    #[test]
    fn median_imputation() {
        let cs = colors(4);
        let mut cols = FeatureColumns::new();
        for (c, v) in cs.iter().zip([Some(1.0), Some(2.0), None, Some(4.0)]) {
            cols.set(Feature::WordLength, c, v);
            cols.set(Feature::Cognate, c, Some(0.5));
        }
        let m = assemble_feature_matrix(&cols, &cs).unwrap();
        assert_eq!(m.column(Feature::WordLength).unwrap(), vec![1.0, 2.0, 2.0, 4.0]);
        assert!(m.is_imputed(2, Feature::WordLength));
        assert!(!m.is_imputed(2, Feature::Cognate));
    }

    #[test]
    fn too_few_survivors() {
        let mut cols = FeatureColumns::new();
        cols.set(Feature::WordLength, "a", Some(1.0));
        cols.set(Feature::WordLength, "b", None);
        assert!(assemble_feature_matrix(&cols, &["a".into(), "b".into()]).is_err());
    }

    #[test]
    fn column_arrival_order_irrelevant() {
        let cs = colors(3);
        let mut a = FeatureColumns::new();
        let mut b = FeatureColumns::new();
        let data = [(Feature::Borrowing, [0.1, 0.2, 0.3]), (Feature::WordLength, [3.0, 4.0, 5.0])];
        for (f, vs) in data {
            a.insert(f, cs.iter().cloned().zip(vs.map(Some)).collect());
        }
        for (f, vs) in data.into_iter().rev() {
            b.insert(f, cs.iter().cloned().zip(vs.map(Some)).collect());
        }
        assert_eq!(assemble_feature_matrix(&a, &cs).unwrap(), assemble_feature_matrix(&b, &cs).unwrap());
    }

    #[test]
    fn with_column_keeps_canonical_order() {
        let m = FeatureMatrix::from_rows(
            colors(2),
            vec![Feature::WordConcreteness, Feature::WordLength],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        )
        .unwrap();
        let vals = BTreeMap::from([("c0".to_string(), Some(0.5)), ("c1".to_string(), None)]);
        let m = m.with_column(Feature::AffixPresence, &vals).unwrap();
        assert_eq!(m.features()[1], Feature::AffixPresence);
        assert_eq!(m.column(Feature::AffixPresence).unwrap(), vec![0.5, 0.5]);
        assert!(m.is_imputed(1, Feature::AffixPresence));
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix::from_rows(
            colors(2),
            vec![Feature::Cognate, Feature::WordLength],
            vec![vec![0.1, 2.0 / 3.0], vec![1e-7, 4.0]],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = FeatureMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back.column(Feature::WordLength).unwrap(), m.column(Feature::WordLength).unwrap());
        assert_eq!(back.colors(), m.colors());
    }
}
