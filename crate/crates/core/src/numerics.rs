//! Root bracketing and adaptive Gauss-Legendre quadrature.

use std::sync::OnceLock;

/// Locates the switch point of a monotone predicate on `[lo, hi]`.
///
/// `pred(lo)` must be false and `pred(hi)` true; the returned bracket
/// `(a, b)` has `pred(a) == false`, `pred(b) == true` and `b - a <= tol`
/// (or has stopped shrinking in floating point).
pub fn bisect_predicate<F>(mut lo: f64, mut hi: f64, tol: f64, mut pred: F) -> (f64, f64)
where
    F: FnMut(f64) -> bool,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

const GL_ORDER: usize = 10;

/// Nodes and weights of the `GL_ORDER`-point rule on `[-1, 1]`.
fn gauss_legendre_rule() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

fn gl_fixed<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre_rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

const MAX_DEPTH: u32 = 40;

/// `∫_a^b f` by recursive bisection: a panel is accepted once the one-panel
/// and two-panel Gauss-Legendre estimates agree within its share of `tol`.
pub fn adaptive_gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let whole = gl_fixed(&mut f, a, b);
    refine(&mut f, a, b, whole, tol, 0)
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gl_fixed(f, a, mid);
    let right = gl_fixed(f, mid, b);
    let split = left + right;
    if (split - whole).abs() <= tol || depth >= MAX_DEPTH || mid <= a || mid >= b {
        return split;
    }
    refine(f, a, mid, left, 0.5 * tol, depth + 1) + refine(f, mid, b, right, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        // degree 2n-1 = 19
        let v = adaptive_gauss_legendre(|x: f64| x.powi(19) + x.powi(8), 0.0, 1.0, 1e-14);
        assert_abs_diff_eq!(v, 1.0 / 20.0 + 1.0 / 9.0, epsilon = 1e-14);
        let w: f64 = gauss_legendre_rule().iter().map(|r| r.1).sum();
        assert_abs_diff_eq!(w, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn kinked_integrand() {
        // |x - 1/3| on [0, 1]: exact 5/18
        let v = adaptive_gauss_legendre(|x: f64| (x - 1.0 / 3.0).abs(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, 5.0 / 18.0, epsilon = 1e-11);
    }

    #[test]
    fn smooth_integrand() {
        let v = adaptive_gauss_legendre(|x: f64| (-x).exp(), 0.0, 3.0, 1e-12);
        assert_abs_diff_eq!(v, 1.0 - (-3.0f64).exp(), epsilon = 1e-13);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_gauss_legendre(|x| x, 1.0, 1.0, 1e-10), 0.0);
    }

    #[test]
    fn bisection_brackets_switch() {
        let (lo, hi) = bisect_predicate(0.0, 4.0, 1e-13, |x| x * x >= 2.0);
        assert!(lo * lo < 2.0 && hi * hi >= 2.0);
        assert_abs_diff_eq!(hi, 2f64.sqrt(), epsilon = 1e-12);
    }
}
