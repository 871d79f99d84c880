//! Ranking agreement between learned weights and an official ranking.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

/// `|set(predicted[..n]) ∩ set(gold[..n])| / n`.
pub fn overlap_top_n<T: Eq + Hash>(predicted: &[T], gold: &[T], n: usize) -> Result<f64> {
    if n == 0 || n > predicted.len() || n > gold.len() {
        return Err(Error::InvalidParameter(format!(
            "top-n of {n} needs 1 <= n <= {}",
            predicted.len().min(gold.len())
        )));
    }
    let top: HashSet<&T> = predicted[..n].iter().collect();
    let hits = gold[..n].iter().collect::<HashSet<&T>>().intersection(&top).count();
    Ok(hits as f64 / n as f64)
}

/// Kendall's tau-b between two paired score vectors, in O(n log n).
///
/// Returns 0 when either side is constant, where the statistic is undefined.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("tau needs at least 2 items, got {n}")));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("tau inputs must not be NaN".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n * (n - 1) / 2) as i64;
    let tied_x = tie_pairs(&pairs, |a, b| a.0 == b.0);
    let tied_xy = tie_pairs(&pairs, |a, b| a == b);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf) as i64;
    let tied_y = tie_pairs(&ys, |a, b| a == b);

    let denom = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let s = n0 - tied_x - tied_y + tied_xy - 2 * swaps;
    Ok((s as f64 / denom).clamp(-1.0, 1.0))
}

/// Pairs inside runs of adjacent equal items.
fn tie_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> i64 {
    let mut total = 0i64;
    let mut run = 1i64;
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

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    let k = k + mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tau-b between two orderings (best first), over the items they share.
pub fn kendall_tau<T: Eq + Hash>(predicted: &[T], gold: &[T]) -> Result<f64> {
    let in_gold: HashSet<&T> = gold.iter().collect();
    let common: Vec<&T> = predicted.iter().filter(|p| in_gold.contains(p)).collect();
    if common.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "tau needs at least 2 common systems, got {}",
            common.len()
        )));
    }
    let gold_pos = |item: &T| gold.iter().position(|g| g == item).expect("item is in gold");
    let x: Vec<f64> = (0..common.len()).map(|i| -(i as f64)).collect();
    let y: Vec<f64> = common.iter().map(|c| -(gold_pos(c) as f64)).collect();
    kendall_tau_b(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn overlap_examples() {
        let gold = ["Facebook-FAIR", "Microsoft-sent-doc", "Microsoft-doc-level"];
        let same = ["Microsoft-doc-level", "Facebook-FAIR", "Microsoft-sent-doc"];
        assert_eq!(overlap_top_n(&same, &gold, 3).unwrap(), 1.0);
        let one = ["online-B", "Facebook-FAIR", "NEU"];
        assert_abs_diff_eq!(overlap_top_n(&one, &gold, 3).unwrap(), 1.0 / 3.0);
        assert_eq!(overlap_top_n(&["a", "b", "c"], &gold, 3).unwrap(), 0.0);
        assert!(overlap_top_n(&["a", "b"], &gold, 3).is_err());
        assert!(overlap_top_n(&same, &gold, 0).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_eq!(kendall_tau(&[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[4, 3, 2, 1], &[1, 2, 3, 4]).unwrap(), -1.0);
        // Gold restricted to common items.
        assert_eq!(kendall_tau(&[9, 1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert!(kendall_tau(&[1, 9], &[1, 2]).is_err());
    }

    #[test]
    fn tau_b_with_ties() {
        // x ties one pair: concordant 2, discordant 0, tied_x 1, n0 3.
        let t = kendall_tau_b(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(t, 2.0 / (2.0f64 * 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!(kendall_tau_b(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(kendall_tau_b(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau_b(&[1.0, 2.0], &[1.0]).is_err());
    }
}
