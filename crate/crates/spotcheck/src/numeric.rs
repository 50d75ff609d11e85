//! Small numerical building blocks shared across modules: compensated
//! summation, golden-section search, and monotone bisection.

/// Neumaier-compensated accumulator for long sums of `ln T` terms.
///
/// Plain `f64` accumulation loses low-order bits once the running sum grows;
/// with up to 10⁹ terms per analysis the compensated form keeps the error at
/// a few ulps independent of length.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x_max, f_max)`. `f` is evaluated at most `max_evals` times; the
/// bracket also stops shrinking below `tol` relative width.
pub fn golden_section_maximize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    max_evals: usize,
    tol: f64,
) -> (f64, f64) {
    const PHI: f64 = 1.618_033_988_749_895;
    const RESP: f64 = 2.0 - PHI;

    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;

    while evals < max_evals && (b - a).abs() > tol * (a.abs() + b.abs() + 1.0) {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    if f1 > f2 { (x1, f1) } else { (x2, f2) }
}

/// Bisection root of a monotone-increasing function `h` on `[lo, hi]`.
///
/// Requires `h(lo) ≤ 0 ≤ h(hi)`; returns the midpoint of the final bracket
/// once its width is below `tol` or after `max_iter` halvings. If `h` has no
/// sign change on the bracket the nearer endpoint is returned.
pub fn bisect_increasing(
    h: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    if h(lo) > 0.0 {
        return lo;
    }
    if h(hi) < 0.0 {
        return hi;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest integer `n` in `[lo, ceiling]` with `ok(n)` true, for a predicate
/// that is monotone in `n` (false below the answer, true at and above it).
///
/// Doubles from `lo` to bracket the answer, then binary-searches. Returns
/// `None` when even `ceiling` fails.
pub fn smallest_satisfying(ok: impl Fn(u64) -> bool, lo: u64, ceiling: u64) -> Option<u64> {
    let mut hi = lo.max(1);
    if ok(hi) {
        // already true at the floor; still binary search down to lo
        return Some(binary_first(ok, lo.max(1), hi));
    }
    loop {
        let next = hi.saturating_mul(2);
        if next > ceiling {
            if ok(ceiling) {
                return Some(binary_first(ok, hi + 1, ceiling));
            }
            return None;
        }
        hi = next;
        if ok(hi) {
            return Some(binary_first(ok, hi / 2 + 1, hi));
        }
    }
}

fn binary_first(ok: impl Fn(u64) -> bool, mut lo: u64, mut hi: u64) -> u64 {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::new();
        s.add(1e16);
        for _ in 0..10_000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 10_000.0);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section_maximize(|x| -(x - 1.25) * (x - 1.25), -4.0, 7.0, 200, 1e-12);
        assert!((x - 1.25).abs() < 1e-9);
        assert!(v > -1e-18);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect_increasing(|x| x * x * x - 8.0, 0.0, 10.0, 1e-13, 200);
        assert!((r - 2.0).abs() < 1e-10);
    }

    #[test]
    fn smallest_satisfying_matches_linear_scan() {
        for target in [1u64, 2, 3, 17, 64, 1000] {
            let got = smallest_satisfying(|n| n >= target, 1, 1 << 40).unwrap();
            assert_eq!(got, target);
        }
        assert_eq!(smallest_satisfying(|_| false, 1, 1 << 20), None);
    }
}
