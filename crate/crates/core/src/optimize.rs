//! Scalar maximization and root bracketing shared by the recursion solver and
//! the value iteration.

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
}

/// Maximizes `objective` on `[lo, hi]`: a uniform scan over `grid_points`
/// points, then golden-section refinement inside the bracket around the best
/// scan point. Ties go to the smallest argument; the refined point only
/// replaces the scan winner when strictly better.
pub fn maximize<F>(
    objective: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    refine_iters: usize,
) -> Maximum
where
    F: Fn(f64) -> f64,
{
    debug_assert!(hi >= lo);
    let n = grid_points.max(2);
    if hi == lo {
        return Maximum {
            arg: lo,
            value: objective(lo),
        };
    }
    let width = hi - lo;
    let point = |i: usize| {
        if i == n - 1 {
            hi
        } else {
            lo + width * (i as f64) / ((n - 1) as f64)
        }
    };

    let mut best_i = 0;
    let mut best = objective(lo);
    for i in 1..n {
        let v = objective(point(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }

    let mut result = Maximum {
        arg: point(best_i),
        value: best,
    };
    if refine_iters == 0 {
        return result;
    }
    let left = point(best_i.saturating_sub(1));
    let right = point((best_i + 1).min(n - 1));
    let refined = golden_section_max(&objective, left, right, refine_iters);
    if refined.value > result.value {
        result = refined;
    }
    result
}

/// Golden-section search for the maximum of a unimodal function. Returns the
/// best point evaluated.
pub fn golden_section_max<F>(objective: F, lo: f64, hi: f64, iters: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut best = if f2 > f1 {
        Maximum { arg: x2, value: f2 }
    } else {
        Maximum { arg: x1, value: f1 }
    };

    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1);
            if f1 > best.value {
                best = Maximum { arg: x1, value: f1 };
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2);
            if f2 > best.value {
                best = Maximum { arg: x2, value: f2 };
            }
        }
    }
    best
}

/// Bisection for a sign change of `f` on `[lo, hi]`, where `f(lo) > 0 >= f(hi)`.
/// Stops once the bracket is narrower than `tol` or cannot shrink further.
pub fn bisect_decreasing<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
