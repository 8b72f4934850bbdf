//! Bracketed one-dimensional root finding shared by the profile calibration
//! and the coupling optimizers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("bracket [{lo}, {hi}] does not enclose a sign change (f = {f_lo}, {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("function returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

/// Bisection on `[lo, hi]` until the bracket width drops below
/// `rel_tol * |x|` (or `abs_tol`, whichever is larger).
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, abs_tol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if (b - a) <= (rel_tol * mid.abs()).max(abs_tol) || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(RootError::NonFinite { x: mid });
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection in `ln x` for strictly positive brackets; suited to rates that
/// span decades.
pub fn bisect_log<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo > 0.0 && hi > 0.0);
    let root = bisect(|y| f(y.exp()), lo.ln(), hi.ln(), 0.0, rel_tol)?;
    Ok(root.exp())
}
