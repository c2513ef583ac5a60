//! One-dimensional maximization: a uniform coarse grid followed by
//! golden-section refinement around the best cell.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns the best point found and its value once the bracket is below `tol`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Samples `f` at `lo, lo + step, ...` strictly below `hi`.
pub fn grid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Vec<(f64, f64)> {
    let count = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..count)
        .map(|i| lo + i as f64 * step)
        .filter(|x| *x < hi || count == 1)
        .map(|x| (x, f(x)))
        .collect()
}

/// Grid search over `[lo, hi)` then golden-section refinement within one
/// grid step on either side of the best sample.
///
/// The grid must be fine enough that `f` is unimodal within two steps of
/// its global maximum.
pub fn grid_then_golden<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    step: f64,
    tol: f64,
) -> (f64, f64) {
    let samples = grid(&f, lo, hi, step);
    let (x0, f0) =
        samples.iter().copied().fold(
            (lo, f64::NEG_INFINITY),
            |best, s| if s.1 > best.1 { s } else { best },
        );
    let (x, fx) = golden_max(&f, x0 - step, x0 + step, tol);
    if fx >= f0 {
        (x, fx)
    } else {
        (x0, f0)
    }
}
