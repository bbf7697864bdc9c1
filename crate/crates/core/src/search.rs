//! Monotone predicate searches and the geometric threshold schedule shared by
//! the greedy solvers.

use crate::error::Result;

/// Largest k in [lo, hi] with `pred(k)` true, assuming `pred` holds on a
/// prefix of the range and `pred(lo)` is known to be true.
pub(crate) fn largest_true<P>(lo: u64, hi: u64, mut pred: P) -> Result<u64>
where
    P: FnMut(u64) -> Result<bool>,
{
    let (mut good, mut bad) = (lo, hi + 1);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if pred(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Smallest k in [lo, hi] with `pred(k)` true, assuming `pred` holds on a
/// suffix of the range and `pred(hi)` is known to be true.
pub(crate) fn smallest_true<P>(lo: u64, hi: u64, mut pred: P) -> Result<u64>
where
    P: FnMut(u64) -> Result<bool>,
{
    let (mut bad, mut good) = (lo as i128 - 1, hi as i128);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if pred(mid as u64)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good as u64)
}

/// Thresholds start·(1-eps)^j for j = 0, 1, ... while the value stays at or
/// above `stop`. Powers are taken from the integer exponent to avoid drift.
pub(crate) fn thresholds(start: f64, stop: f64, eps: f64) -> impl Iterator<Item = f64> {
    let ratio = 1.0 - eps;
    let live = start > 0.0 && stop > 0.0 && start.is_finite();
    (0i32..).map(move |j| start * ratio.powi(j)).take_while(move |&t| live && t >= stop)
}

/// Replaces eps by 1/⌈1/eps⌉ so that 1/eps is an integer.
pub fn effective_epsilon(eps: f64) -> f64 {
    let inv = (1.0 / eps - 1e-9).ceil().max(1.0);
    1.0 / inv
}

/// Derives an independent child seed (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn searches_match_linear_scan() {
        for cut in 0..=20u64 {
            let got = largest_true(0, 20, |k| Ok(k <= cut)).unwrap();
            assert_eq!(got, cut);
            let got = smallest_true(0, 20, |k| Ok(k >= cut)).unwrap();
            assert_eq!(got, cut);
        }
        assert_eq!(largest_true(3, 3, |_| Ok(true)).unwrap(), 3);
        assert_eq!(smallest_true(5, 5, |_| Ok(true)).unwrap(), 5);
    }

    #[test]
    fn schedule_is_geometric_and_bounded() {
        let t: Vec<f64> = thresholds(8.0, 1.0, 0.5).collect();
        assert_eq!(t, vec![8.0, 4.0, 2.0, 1.0]);
        assert_eq!(thresholds(0.0, 1.0, 0.5).count(), 0);
    }

    #[test]
    fn epsilon_rounding() {
        assert_eq!(effective_epsilon(0.1), 0.1);
        assert_eq!(effective_epsilon(0.25), 0.25);
        assert_eq!(effective_epsilon(0.3), 0.25);
        assert_eq!(effective_epsilon(0.9), 0.5);
    }
}
