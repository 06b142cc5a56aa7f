//! Bracketed scalar root finding shared by the flux inverse, event location and threshold searches.

/// Newton iteration kept inside a sign-change bracket `[lo, hi]`; falls back to
/// bisection whenever the Newton step leaves the bracket or stalls.
/// `f` returns `(value, derivative)`. Requires `f(lo) <= 0 <= f(hi)` (increasing case).
pub fn safeguarded_newton<F>(mut lo: f64, mut hi: f64, x0: f64, abs_tol: f64, f: F) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    let mut last_step = hi - lo;
    let mut small_steps = 0;
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        let newton = x - fx / dfx;
        // Bisect when Newton leaves the bracket or fails to halve the previous step.
        let next = if dfx > 0.0 && newton > lo && newton < hi && (2.0 * fx).abs() <= (last_step * dfx).abs() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        last_step = step;
        x = next;
        let machine = 4.0 * f64::EPSILON * x.abs();
        if step <= machine || width <= machine {
            return x;
        }
        // One extra step after reaching the tolerance lets Newton finish its quadratic descent.
        if step <= abs_tol {
            small_steps += 1;
            if small_steps >= 2 {
                return x;
            }
        }
    }
    x
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`; returns the bracket midpoint.
pub fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max<F>(mut a: f64, mut b: f64, tol: f64, f: F) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
