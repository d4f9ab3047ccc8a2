use crate::{Error, Result};

/// Brent's bracketed root finder (bisection safeguarding secant and inverse
/// quadratic steps).
///
/// Stops once `|g(x)| <= tol` or the bracket has shrunk to a few ulps, in
/// which case the best endpoint is returned.
pub fn find_root<G: FnMut(f64) -> f64>(mut g: G, (a, b): (f64, f64), tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = g(a);
    let mut fb = g(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NonFinite {
            at: if fa.is_finite() { b } else { a },
        });
    }
    if fa == 0.0 || fa.abs() <= tol && fa.abs() <= fb.abs() {
        return Ok(a);
    }
    if fb == 0.0 || fb.abs() <= tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket { a, b, ga: fa, gb: fb });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..400 {
        if fb.abs() <= tol {
            return Ok(b);
        }
        let width_tol = 4.0 * f64::EPSILON * b.abs().max(1e-300);
        if (b - a).abs() <= width_tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let between = (s > lo.min(b)) && (s < lo.max(b));
        let reject = !between
            || (bisected && (s - b).abs() >= 0.5 * (b - c).abs())
            || (!bisected && (s - b).abs() >= 0.5 * (c - d).abs())
            || (bisected && (b - c).abs() < width_tol)
            || (!bisected && (c - d).abs() < width_tol);
        if reject {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = g(s);
        if !fs.is_finite() {
            return Err(Error::NonFinite { at: s });
        }
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(b)
}
