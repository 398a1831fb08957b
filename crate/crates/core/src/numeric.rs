/// Maximum halvings for every bracketing search in the crate.
pub(crate) const MAX_BISECTION_ITERS: usize = 60;

/// Finds the root of an increasing function `f` on `[lo, hi]`, assuming
/// `f(lo) <= 0 <= f(hi)`. Stops once the bracket is narrower than `tol`.
pub(crate) fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Relative near-tie test shared by the planners.
pub(crate) fn nearly_equal(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() < rel * x.abs().max(y.abs()).max(1.0)
}
