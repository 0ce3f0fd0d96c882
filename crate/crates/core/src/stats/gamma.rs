use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaResult {
    pub gamma: f64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in either series.
    pub tied: u64,
}

/// Goodman–Kruskal gamma over all unordered index pairs, skipping pairs tied
/// in either series.
///
/// Runs in O(n log n): rows are sorted by (x, y) and the discordant pairs
/// are the strict inversions left in y, counted by merge sort. Concordant
/// pairs follow from the tie counts.
pub fn gamma(x: &[f64], y: &[f64]) -> Result<GammaResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "gamma needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("gamma needs at least two observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("gamma input contains non-finite values"));
    }
    // + 0.0 folds -0.0 into 0.0 so total_cmp agrees with ==
    let mut rows: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n = rows.len() as u64;
    let all = n * (n - 1) / 2;
    let tied_x = tie_pairs(rows.iter().map(|r| r.0));
    let tied_xy = tie_pairs_by(&rows, |a, b| a == b);

    let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = inversions(&mut ys, &mut buf);
    // ys is now sorted
    let tied_y = tie_pairs(ys.iter().copied());

    let untied = all + tied_xy - tied_x - tied_y;
    let concordant = untied - discordant;
    if untied == 0 {
        return Err(Error::UndefinedGamma);
    }
    Ok(GammaResult {
        gamma: (concordant as f64 - discordant as f64) / untied as f64,
        concordant,
        discordant,
        tied: all - untied,
    })
}

/// Pairs of equal values in an already sorted sequence.
fn tie_pairs(sorted: impl Iterator<Item = f64>) -> u64 {
    let v: Vec<f64> = sorted.collect();
    tie_pairs_by(&v, |a, b| a == b)
}

fn tie_pairs_by<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of pairs i < j with v[i] > v[j].
fn inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        inversions(l, bl) + inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            j += 1;
            count += (mid - i) as u64;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}
