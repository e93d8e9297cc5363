//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 60;

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`
/// (with `abs_floor` as an absolute floor for integrals near zero).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    // coarse pass fixes the absolute target for the refinement
    let m = 0.5 * (lo + hi);
    let (flo, fm, fhi) = (f(lo), f(m), f(hi));
    let whole = simpson(lo, hi, flo, fm, fhi);
    let tol = (rel_tol * whole.abs()).max(abs_floor);
    sign * refine(&f, lo, hi, flo, fm, fhi, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_log() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-10, 1e-14);
        assert!((v - 9.0).abs() < 1e-9);
        let v = integrate(|x| 1.0 / x, 1.0, std::f64::consts::E, 1e-10, 1e-14);
        assert!((v - 1.0).abs() < 1e-9);
        let v = integrate(|x| x, 2.0, 0.0, 1e-10, 1e-14);
        assert!((v + 2.0).abs() < 1e-12);
    }
}
