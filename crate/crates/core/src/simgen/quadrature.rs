//! One-dimensional numerics for censoring calibration.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
/// Refinement stops once the local error is at rounding level.
const RELATIVE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Adaptive Simpson integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let floor = RELATIVE_FLOOR * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Solves `f(x) = target` for a monotone `f` on `(0, inf)` by bracket
/// expansion from `guess` followed by bisection. Fails unless the final
/// residual is within `tolerance`.
pub fn solve_monotone<F: Fn(f64) -> f64>(f: F, target: f64, guess: f64, tolerance: f64) -> Result<f64> {
    if !(guess > 0.0 && guess.is_finite()) {
        return Err(Error::Calibration(format!("invalid starting point {guess}")));
    }
    let f0 = f(guess);
    let f1 = f(guess * 2.0);
    let increasing = f1 >= f0;
    // g(x) >= 0 to the right of the root
    let g = |x: f64| if increasing { f(x) - target } else { target - f(x) };

    let mut lo = guess;
    let mut hi = guess;
    let mut steps = 0;
    while g(lo) > 0.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 400 || lo == 0.0 {
            return Err(Error::Calibration(format!("target {target} unattainable below {lo:e}")));
        }
    }
    steps = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 400 || !hi.is_finite() {
            return Err(Error::Calibration(format!("target {target} unattainable above {hi:e}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = (f(root) - target).abs();
    if residual > tolerance {
        return Err(Error::Calibration(format!(
            "residual {residual:e} at {root} exceeds tolerance {tolerance:e}"
        )));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_and_exponentials() {
        assert_relative_eq!(integrate(|x| x * x, 0.0, 3.0, 1e-12), 9.0, epsilon = 1e-10);
        assert_relative_eq!(integrate(|x| (-x).exp(), 0.0, 20.0, 1e-12), 1.0 - (-20f64).exp(), epsilon = 1e-10);
        assert_eq!(integrate(|x| x, 2.0, 2.0, 1e-9), 0.0);
    }

    #[test]
    fn integrates_kinked_function() {
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-12);
        assert_relative_eq!(v, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn solves_both_directions() {
        let r = solve_monotone(|x| x * x, 2.0, 10.0, 1e-12).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
        let r = solve_monotone(|x| 1.0 / x, 4.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(r, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn unattainable_target_errors() {
        let err = solve_monotone(|x| x / (1.0 + x), 1.5, 1.0, 1e-6);
        assert!(matches!(err, Err(Error::Calibration(_))));
    }
}
