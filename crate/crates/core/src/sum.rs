//! Deterministic pairwise reductions.

const BLOCK: usize = 32;

/// Pairwise sum of `f(0) + ... + f(n - 1)`.
///
/// The summation tree depends only on `n`, so results are bit-reproducible.
pub fn pairwise<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= BLOCK {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    if n == 0 {
        0.0
    } else {
        rec(0, n, &f)
    }
}

pub fn pairwise_slice(values: &[f64]) -> f64 {
    pairwise(values.len(), |i| values[i])
}

/// Composite trapezoid rule on (possibly non-uniform) samples.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    if times.len() < 2 {
        return 0.0;
    }
    pairwise(times.len() - 1, |i| {
        0.5 * (times[i + 1] - times[i]) * (values[i] + values[i + 1])
    })
}
