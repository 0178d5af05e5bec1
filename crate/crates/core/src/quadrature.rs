//! Numerical integration on an interval.

use crate::scalar::Real;

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the whole interval; callers wanting a
/// relative tolerance pass `rtol * |rough estimate|`. Recursion stops at
/// `max_depth` regardless of the error estimate.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, max_depth: u32) -> T {
    if a == b {
        return T::zero();
    }
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[inline]
fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    recurse(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
}

/// Eight-point Gauss-Legendre rule on `[0, 1]`: `(node, weight)` pairs.
pub fn gauss_legendre_8<T: Real>() -> [(T, T); 8] {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let mut out = [(T::zero(), T::zero()); 8];
    for i in 0..4 {
        let w = T::lit(W[i] / 2.0);
        out[2 * i] = (T::lit((1.0 - X[i]) / 2.0), w);
        out[2 * i + 1] = (T::lit((1.0 + X[i]) / 2.0), w);
    }
    out
}

/// Composite Gauss-Legendre on `[a, b]` with `panels` equal panels.
pub fn gauss_legendre<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, panels: usize) -> T {
    let rule = gauss_legendre_8::<T>();
    let h = (b - a) / T::from_usize_lossy(panels);
    let mut total = T::zero();
    for p in 0..panels {
        let lo = a + h * T::from_usize_lossy(p);
        let mut acc = T::zero();
        for &(x, w) in &rule {
            acc = acc + w * f(lo + h * x);
        }
        total = total + acc * h;
    }
    total
}
