use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, Directions};
use super::gamma::gamma;
use crate::error::{Error, Result};
use crate::features::{Feature, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeStep {
    /// `None` for the starting set.
    pub removed_feature: Option<Feature>,
    pub features: Vec<Feature>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    pub trajectory: Vec<RfeStep>,
    pub best_features: Vec<Feature>,
    pub best_gamma: f64,
}

/// Gamma between the aggregate score over `subset` and `target`; `None`
/// when every pair is tied.
pub fn subset_gamma(
    matrix: &FeatureMatrix,
    target: &[f64],
    directions: &Directions,
    subset: &[Feature],
) -> Result<Option<f64>> {
    let ranking = aggregate(matrix, directions, subset)?;
    match gamma(&ranking.row_scores, target) {
        Ok(g) => Ok(Some(g.gamma)),
        Err(Error::UndefinedGamma) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Greedy backward elimination. Each step drops the feature whose removal
/// gives the highest gamma, preferring the alphabetically first feature
/// name on ties, and only if that strictly improves on the current gamma.
pub fn rfe(matrix: &FeatureMatrix, target: &[f64], directions: &Directions) -> Result<RfeResult> {
    let mut current: Vec<Feature> = matrix.features().to_vec();
    current.sort();
    if current.len() < 2 {
        return Err(Error::invalid("elimination needs at least two features"));
    }
    if target.len() != matrix.n_rows() {
        return Err(Error::invalid("target length does not match the matrix"));
    }
    let mut current_gamma =
        subset_gamma(matrix, target, directions, &current)?.ok_or(Error::UndefinedGamma)?;
    let mut trajectory = vec![RfeStep {
        removed_feature: None,
        features: current.clone(),
        gamma: current_gamma,
    }];
    while current.len() > 1 {
        let candidates: Vec<(Feature, Option<f64>)> = current
            .par_iter()
            .map(|&f| {
                let rest: Vec<Feature> = current.iter().copied().filter(|&g| g != f).collect();
                subset_gamma(matrix, target, directions, &rest).map(|g| (f, g))
            })
            .collect::<Result<_>>()?;
        let best = candidates
            .into_iter()
            .filter_map(|(f, g)| g.map(|g| (f, g)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.name().cmp(a.0.name())));
        match best {
            Some((f, g)) if g > current_gamma => {
                current.retain(|&x| x != f);
                current_gamma = g;
                trajectory.push(RfeStep {
                    removed_feature: Some(f),
                    features: current.clone(),
                    gamma: g,
                });
            }
            _ => break,
        }
    }
    Ok(RfeResult {
        trajectory,
        best_features: current,
        best_gamma: current_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn plain() -> Directions {
        Directions {
            negated: BTreeSet::new(),
            log_scaled: BTreeSet::new(),
        }
    }

    fn matrix(features: &[Feature], cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::from_rows((0..n).map(|i| format!("c{i}")).collect(), features.to_vec(), rows).unwrap()
    }

    #[test]
    fn identical_columns_stop_immediately() {
        let col = vec![1.0, 4.0, 2.0, 3.0];
        let m = matrix(&[Feature::Cognate, Feature::Derivation], &[col.clone(), col]);
        let r = rfe(&m, &[4.0, 3.0, 2.0, 1.0], &plain()).unwrap();
        assert_eq!(r.trajectory.len(), 1);
        assert_eq!(r.best_features.len(), 2);
    }

    #[test]
    fn complementary_pair_is_kept() {
        // each column alone misorders one pair; the sum orders all four
        let a = vec![4.0, 3.0, 0.0, 1.0];
        let b = vec![3.0, 4.0, 1.0, 0.0];
        let m = matrix(&[Feature::Cognate, Feature::Derivation], &[a, b]);
        let target = [4.0, 3.5, 2.0, 1.0];
        assert!(subset_gamma(&m, &target, &plain(), &[Feature::Cognate]).unwrap().unwrap() < 1.0);
        assert!(subset_gamma(&m, &target, &plain(), &[Feature::Derivation]).unwrap().unwrap() < 1.0);
        let r = rfe(&m, &target, &plain()).unwrap();
        assert_eq!(r.best_features.len(), 2);
        assert_eq!(r.best_gamma, 1.0);
    }

    #[test]
    fn needs_two_features() {
        let m = matrix(&[Feature::Cognate], &[vec![1.0, 2.0]]);
        assert!(rfe(&m, &[1.0, 2.0], &plain()).is_err());
    }
}
