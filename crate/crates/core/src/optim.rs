//! Deterministic scalar search: golden section, log-bracket minimization, bisection.
//!
//! Objectives may return `NaN` or `+inf` outside their domain; both are treated as
//! `+inf` so a grid scan simply steps over them.

/// Relative tolerance used by every minimizer in the crate.
pub const REL_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 200;

/// Log-domain bracket for positive free parameters.
pub const LOG_LO: f64 = 1e-12;
pub const LOG_HI: f64 = 1e12;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Golden-section search on `[lo, hi]` for a unimodal `f`.
///
/// Stops once the bracket is narrower than `rel_tol * max(1, |x|)` or after
/// `max_iter` shrinks.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    for _ in 0..max_iter {
        let scale = a.abs().max(b.abs()).max(1.0);
        if b - a <= rel_tol * scale {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sanitize(f(d));
        }
    }
    if fc <= fd {
        Minimum { x: c, value: fc }
    } else {
        Minimum { x: d, value: fd }
    }
}

/// Scans `points` equally spaced abscissae on `[lo, hi]`, then refines around the best.
pub fn minimize_scan<F>(mut f: F, lo: f64, hi: f64, points: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let points = points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let (best_i, best_v) = (0..points)
        .map(|i| (i, sanitize(f(lo + step * i as f64))))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if best_v.is_infinite() {
        return Minimum {
            x: lo + step * best_i as f64,
            value: best_v,
        };
    }
    let left = lo + step * best_i.saturating_sub(1) as f64;
    let right = lo + step * (best_i + 1).min(points - 1) as f64;
    let refined = golden_section(&mut f, left, right, REL_TOL, MAX_ITER);
    let grid = Minimum {
        x: lo + step * best_i as f64,
        value: best_v,
    };
    if refined.value <= grid.value {
        refined
    } else {
        grid
    }
}

/// Minimizes over `x in [lo, hi]`, `lo > 0`, by scanning and refining in `ln x`.
pub fn minimize_log<F>(mut f: F, lo: f64, hi: f64, points: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let m = minimize_scan(|s| f(s.exp()), lo.ln(), hi.ln(), points);
    Minimum {
        x: m.x.exp(),
        value: m.value,
    }
}

/// [`minimize_log`] on the standard bracket `[1e-12, 1e12]`, four points per decade.
pub fn minimize_positive<F>(f: F) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    minimize_log(f, LOG_LO, LOG_HI, 97)
}

/// Largest `x` in `[lo, hi]` with `pred(x)`, for a predicate that is true on a prefix
/// of the interval. Assumes `pred(lo)` holds.
pub fn bisect_last_true<F>(mut pred: F, lo: f64, hi: f64) -> f64
where
    F: FnMut(f64) -> bool,
{
    if pred(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

/// Root of an increasing `g` on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`, bisected to
/// adjacent doubles; returns whichever endpoint has the smaller residual.
pub fn bisect_increasing<F>(mut g: F, lo: f64, hi: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm < 0.0 {
            a = mid;
            ga = gm;
        } else {
            b = mid;
            gb = gm;
        }
    }
    if ga.abs() <= gb.abs() {
        a
    } else {
        b
    }
}
