//! Shared numeric primitives: adaptive quadrature and golden-section search.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericError {
    #[error("quadrature failed to converge on [{a}, {b}]")]
    QuadratureDivergence { a: f64, b: f64 },
    #[error("invalid interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

const MAX_DEPTH: u32 = 60;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Subdivides until the local Richardson error estimate `|S2 - S1| / 15`
/// meets the tolerance, which is distributed over subintervals. The
/// effective tolerance per call is `max(abs_tol, rel_tol * |estimate|)`.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, NumericError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(NumericError::BadInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    // A first rough scale for the relative criterion; refined per level.
    let scale = whole.abs().max(abs_tol);
    let tol = (rel_tol * scale).max(abs_tol);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
        .ok_or(NumericError::QuadratureDivergence { a, b })
}

/// Integrates over consecutive segments `points[0]..points[last]`, running
/// the adaptive rule on each segment. Callers pass interior breakpoints at
/// known features (quantiles, peaks) so that narrow mass concentrations
/// cannot be skipped by the first coarse samples.
pub fn adaptive_simpson_segmented(
    f: &dyn Fn(f64) -> f64,
    points: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64, NumericError> {
    let mut total = 0.0;
    for pair in points.windows(2) {
        total += adaptive_simpson(f, pair[0], pair[1], rel_tol, abs_tol)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || b - a <= f64::EPSILON * (a.abs() + b.abs()) {
        return Some(left + right + err / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let half_tol = 0.5 * tol;
    let l = recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Some(l + r)
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket shrinks below `rel_tol` relative to the midpoint
/// magnitude (plus a tiny absolute floor) and returns `(x_min, f(x_min))`.
pub fn golden_section_min(
    f: &dyn Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    rel_tol: f64,
) -> (f64, f64) {
    debug_assert!(a <= b);
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= rel_tol * mid.abs().max(1e-300) + 1e-300 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let f = |x: f64| 3.0 * x * x;
        let v = adaptive_simpson(&f, 0.0, 2.0, 1e-12, 1e-15).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn integrates_a_narrow_peak_with_segment_hints() {
        // Gaussian bump of width 1e-3 at 0.5 inside [0, 1000]: the plain
        // top-level rule could miss it; a breakpoint at the peak cannot.
        let s = 1e-3;
        let f = move |x: f64| (-((x - 0.5) / s).powi(2) / 2.0).exp();
        let v = adaptive_simpson_segmented(&f, &[0.0, 0.5, 1000.0], 1e-10, 1e-16).unwrap();
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(v, exact, max_relative = 1e-8);
    }

    #[test]
    fn integrates_exp_decay() {
        let f = |x: f64| (-x).exp();
        let v = adaptive_simpson(&f, 0.0, 50.0, 1e-12, 1e-16).unwrap();
        // The per-interval Richardson rule is an estimate, so the realized
        // error can exceed the request by a small factor.
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn rejects_bad_intervals() {
        let f = |x: f64| x;
        assert!(adaptive_simpson(&f, 1.0, 0.0, 1e-6, 1e-9).is_err());
        assert!(adaptive_simpson(&f, f64::NEG_INFINITY, 0.0, 1e-6, 1e-9).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let f = |x: f64| (x - 1.25).powi(2) + 3.0;
        let (x, fx) = golden_section_min(&f, -10.0, 10.0, 1e-10);
        // Positional accuracy is limited by the final bracket width on the
        // original interval scale; the value converges quadratically faster.
        assert_relative_eq!(x, 1.25, epsilon = 1e-7);
        assert_relative_eq!(fx, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn golden_section_handles_boundary_minimum() {
        let f = |x: f64| x;
        let (x, _) = golden_section_min(&f, 2.0, 5.0, 1e-9);
        assert_relative_eq!(x, 2.0, epsilon = 1e-6);
    }
}
