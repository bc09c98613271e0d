//! Bracketing root finders for the monotone scalar equations that appear in
//! the decay-rate and dwell-time computations.

use crate::scalar::Real;

/// Doubles `hi` (starting from `start`) until `f(hi)` has the sign `want_positive`.
/// Returns `None` after `max_doublings` unsuccessful doublings.
pub fn expand_upper<T: Real>(
    f: &impl Fn(T) -> T,
    start: T,
    want_positive: bool,
    max_doublings: usize,
) -> Option<T> {
    let mut hi = start;
    for _ in 0..=max_doublings {
        let v = f(hi);
        if (want_positive && v >= T::zero()) || (!want_positive && v <= T::zero()) {
            return Some(hi);
        }
        hi = hi * T::two();
    }
    None
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs (or
/// one is zero). Runs until the midpoint no longer moves or `max_iter` steps,
/// and returns whichever endpoint has the smaller residual.
pub fn bisect<T: Real>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T, max_iter: usize) -> T {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == T::zero() {
        return lo;
    }
    if fhi == T::zero() {
        return hi;
    }
    let lo_negative = flo < T::zero();
    for _ in 0..max_iter {
        let mid = lo + (hi - lo) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm < T::zero()) == lo_negative {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    if flo.abs() <= fhi.abs() {
        lo
    } else {
        hi
    }
}
