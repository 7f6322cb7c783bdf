//! One-dimensional golden-section maximization and bisection.

use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[a, b]` until the bracket is narrower than `tol`.
/// Returns the best point seen, including the end points.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut best = [(a, f(a)), (b, f(b))].into_iter().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for p in [(c, fc), (d, fd)] {
        if p.1 > best.1 {
            best = p;
        }
    }
    best
}

/// Root of `f` on `[a, b]`, which must bracket a sign change.
pub fn bisect(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!("[{a}, {b}] does not bracket a root")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_top() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7 && (fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }
}
