use std::collections::BTreeMap;

use colorbasis::compounds::enumerate_splits;
use colorbasis::features::{Feature, FeatureMatrix};
use colorbasis::segmentation::{train_segmenter, viterbi_segment, SegmentTable, TrainConfig};
use colorbasis::stats::{gamma, normalize_feature, Direction};
use proptest::prelude::*;

fn pairwise(x: &[f64], y: &[f64]) -> (u64, u64) {
    let (mut c, mut d) = (0, 0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if s > 0.0 {
                c += 1;
            } else if s < 0.0 {
                d += 1;
            }
        }
    }
    (c, d)
}

fn tied_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec((0i32..6).prop_map(f64::from), n),
            prop::collection::vec((0i32..6).prop_map(f64::from), n),
        )
    })
}

proptest! {
    #[test]
    fn gamma_counts_match_pairwise((x, y) in tied_pairs()) {
        let (c, d) = pairwise(&x, &y);
        match gamma(&x, &y) {
            Ok(g) => {
                prop_assert_eq!((g.concordant, g.discordant), (c, d));
                prop_assert_eq!(g.concordant + g.discordant + g.tied, (x.len() * (x.len() - 1) / 2) as u64);
            }
            Err(_) => prop_assert_eq!(c + d, 0),
        }
    }

    #[test]
    fn gamma_symmetry((x, y) in tied_pairs()) {
        if let (Ok(a), Ok(b)) = (gamma(&x, &y), gamma(&y, &x)) {
            prop_assert_eq!(a.gamma, b.gamma);
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert_eq!(gamma(&x, &neg).unwrap().gamma, -a.gamma);
        }
    }

    #[test]
    fn segments_concatenate(word in "[abc]{1,12}", weights in prop::collection::vec(0.01f64..1.0, 12)) {
        let mut table = BTreeMap::new();
        for (i, c) in ['a', 'b', 'c'].iter().enumerate() {
            table.insert(c.to_string(), weights[i]);
        }
        for (i, s) in ["ab", "bc", "ca", "abc", "cab", "bca", "aa", "bb", "cc"].iter().enumerate() {
            table.insert(s.to_string(), weights[3 + i]);
        }
        let m = SegmentTable::new(table).unwrap();
        let seg = viterbi_segment(&m, &word).unwrap();
        prop_assert_eq!(seg.segments.concat(), word);
    }

    #[test]
    fn trained_model_is_normalized_and_order_free(words in prop::collection::vec("[a-e]{1,7}", 1..25)) {
        let m = train_segmenter("xx", &words, &TrainConfig::default()).unwrap();
        prop_assert!((m.total_mass() - 1.0).abs() < 1e-9);
        let mut rev = words.clone();
        rev.reverse();
        let r = train_segmenter("xx", &rev, &TrainConfig::default()).unwrap();
        prop_assert_eq!(m.counts(), r.counts());
        for w in &words {
            prop_assert_eq!(viterbi_segment(&m, w).unwrap().segments.concat(), w.clone());
        }
    }

    #[test]
    fn split_count(word in "\\PC{0,30}") {
        let k = word.chars().count();
        prop_assert_eq!(enumerate_splits(&word).len(), k * k.saturating_sub(1) / 2);
    }

    #[test]
    fn normalized_columns_span_unit_interval(v in prop::collection::vec(-1e6f64..1e6, 2..30)) {
        prop_assume!(v.iter().any(|x| *x != v[0]));
        for dir in [Direction::Positive, Direction::Negated] {
            let n = normalize_feature(&v, dir).unwrap();
            prop_assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!(n.contains(&0.0) && n.contains(&1.0));
        }
    }

    #[test]
    fn matrix_csv_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..10)) {
        let colors: Vec<String> = (0..rows.len()).map(|i| format!("c{i}")).collect();
        let features = vec![Feature::WordConcreteness, Feature::NgramFrequency, Feature::WordLength];
        let m = FeatureMatrix::from_rows(colors, features, rows).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = FeatureMatrix::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.colors(), m.colors());
        for i in 0..m.n_rows() {
            prop_assert_eq!(back.row(i), m.row(i));
        }
    }
}
