//! Scalar root finding on brackets.

use crate::error::{Error, Result};

/// Solves `g(x) = target` for an increasing `g` known to cross `target` in
/// `[lo, hi]`. `g` returns `(value, derivative)`. Newton steps that leave the
/// current bracket, or that come from a non-positive slope, are replaced by
/// bisection.
pub fn monotone_newton<G>(mut g: G, target: f64, mut lo: f64, mut hi: f64, x0: f64, max_iter: usize) -> Result<f64>
where
    G: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    let mut best = (f64::INFINITY, x);
    for _ in 0..max_iter {
        let (y, dy) = g(x)?;
        let r = y - target;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r == 0.0 {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - r / dy;
        let next = if dy > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let scale = x.abs().max(1.0);
        if (next - x).abs() <= 2.0 * f64::EPSILON * scale || hi - lo <= 2.0 * f64::EPSILON * scale {
            return Ok(if (next - x).abs() <= 2.0 * f64::EPSILON * scale { next } else { best.1 });
        }
        x = next;
    }
    // The iteration budget is generous; reaching it means the residual stalled
    // at rounding level. Accept only if that level is tiny.
    if best.0 < 1e-13 {
        Ok(best.1)
    } else {
        Err(Error::numerical(format!("monotone Newton did not converge (residual {:e})", best.0), lo, hi))
    }
}

/// Brent's method for a sign change of `f` on `[a, b]`.
pub fn brent<F>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    brent_ftol(f, a, b, xtol, 0.0, max_iter)
}

/// [`brent`] that also stops once `|f| <= ftol`, for functions whose values
/// carry noise of that size.
pub fn brent_ftol<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, ftol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa.abs() <= ftol.max(0.0) && fa.abs() <= fb.abs() {
        return Ok(a);
    }
    if fb.abs() <= ftol.max(0.0) {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical("no sign change on bracket", a, b));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::numerical("Brent iteration budget exhausted", b.min(c), b.max(c)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_inverts_cubic() {
        let g = |x: f64| Ok((x * x * x + x, 3.0 * x * x + 1.0));
        let x = monotone_newton(g, 10.0, 0.0, 5.0, 4.9, 100).unwrap();
        assert!((x - 2.0).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // derivative vanishes at 0; bisection must take over
        let g = |x: f64| Ok((x * x * x, 3.0 * x * x));
        let x = monotone_newton(g, 1e-6, -1.0, 1.0, 0.0, 200).unwrap();
        assert!((x - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(|x: f64| Ok(x.cos()), 1.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_non_bracket() {
        assert!(brent(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 50).is_err());
    }
}
