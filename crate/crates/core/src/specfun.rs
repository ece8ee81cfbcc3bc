//! Special functions needed by the gain profile of the Fock-state model.
//!
//! Everything here is real-valued and restricted to the parameter ranges the
//! model actually visits: generalized Laguerre polynomials, the Kummer function
//! `1F1(-x; 2; alpha)` at non-integer `x`, and a handful of Bessel helpers for
//! the large-`n0` asymptotics.

use serde::Serialize;

use crate::error::{Error, Result};

const MAX_LAGUERRE_DEGREE: usize = 1_000_000;
const KUMMER_TERM_TOL: f64 = 1e-15;
const KUMMER_MAX_TERMS: usize = 500;

/// Generalized Laguerre polynomial `L_n^{(k)}(x)` by upward three-term recurrence.
pub fn laguerre(n: usize, k: usize, x: f64) -> Result<f64> {
    if n > MAX_LAGUERRE_DEGREE {
        return Err(Error::Domain(format!(
            "Laguerre degree {n} exceeds {MAX_LAGUERRE_DEGREE}"
        )));
    }
    let k = k as f64;
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + k - x;
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + k + 1.0 - x) * cur - (m + k) * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Plain hypergeometric series for `1F1(-x; 2; alpha)`.
fn kummer_series(x: f64, alpha: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 0..KUMMER_MAX_TERMS {
        let m = m as f64;
        term *= (m - x) * alpha / ((m + 2.0) * (m + 1.0));
        sum += term;
        if !sum.is_finite() {
            break;
        }
        if term.abs() <= KUMMER_TERM_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNonConvergence {
        terms: KUMMER_MAX_TERMS,
        partial_sum: sum,
    })
}

/// Confluent hypergeometric function `1F1(-x; 2; alpha)` for real `x >= -1/2`.
///
/// The series is only summed for the fractional part `x0 = x - k` (with
/// `x0` in `[-1/2, 1/2)`) and for `x0 - 1`; the integer part is reached with
/// the contiguous relation in the first parameter,
///
/// `(x + 2) M(-(x+1)) = (2x + 2 - alpha) M(-x) - x M(-(x-1))`,
///
/// which at integer `x` is the Laguerre recurrence. Summing the alternating
/// series directly at large `x` loses all digits to cancellation.
pub fn kummer_1f1_neg(x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(x >= -0.5) || !x.is_finite() {
        return Err(Error::Domain(format!("argument must be >= -1/2, got {x}")));
    }
    let steps = (x + 0.5).floor();
    let x0 = x - steps;
    let steps = steps as usize;
    let mut cur = kummer_series(x0, alpha)?;
    if steps == 0 {
        return Ok(cur);
    }
    let mut prev = kummer_series(x0 - 1.0, alpha)?;
    for j in 0..steps {
        let xc = x0 + j as f64;
        let next = ((2.0 * xc + 2.0 - alpha) * cur - xc * prev) / (xc + 2.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Brent's method on a sign-changing bracket `[a, b]`.
pub fn brent<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!("no sign change on [{a}, {b}]")));
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
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
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
        fb = f(b);
    }
    Err(Error::Domain("Brent iteration budget exhausted".into()))
}

/// Smallest positive root of `L_{n0}^{(1)}`, the gain parameter that blocks
/// the transition `n0 -> n0 + 1`.
pub fn laguerre_first_zero(n0: usize) -> Result<f64> {
    if n0 == 0 {
        return Err(Error::Domain("n0 must be at least 1".into()));
    }
    let g = |a: f64| laguerre(n0, 1, a).unwrap_or(f64::NAN);
    let upper = 16.0 / n0 as f64;
    let grid = 64;
    let mut lo = 0.0;
    let mut f_lo = (n0 + 1) as f64;
    for i in 1..=grid {
        let hi = upper * i as f64 / grid as f64;
        let f_hi = g(hi);
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_hi.signum() != f_lo.signum() {
            return brent(g, lo, hi, 1e-15, 200);
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::Domain(format!(
        "no Laguerre zero found in (0, {upper}] for n0 = {n0}"
    )))
}

fn bessel_series(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=nu {
        term *= half / k as f64;
    }
    let mut sum = term;
    let h2 = half * half;
    for k in 1..200 {
        term *= -h2 / (k as f64 * (k + nu) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn bessel_asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (nu as f64) * std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function of the first kind `J_0`.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 12.0 {
        bessel_series(0, ax)
    } else {
        bessel_asymptotic(0, ax)
    }
}

/// Bessel function of the first kind `J_1`.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 12.0 {
        bessel_series(1, ax)
    } else {
        bessel_asymptotic(1, ax)
    };
    v.copysign(x)
}

/// First positive zero of `J_1` and the value of `J_0` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselConstants {
    pub x11: f64,
    pub j: f64,
}

pub fn bessel_constants() -> BesselConstants {
    let mut x: f64 = 3.83;
    for _ in 0..50 {
        let j1 = bessel_j1(x);
        let dj1 = bessel_j0(x) - j1 / x;
        let step = j1 / dj1;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    BesselConstants {
        x11: x,
        j: bessel_j0(x),
    }
}

/// Large-`n` (Mehler-Heine) approximation of `1F1(-n; 2; alpha)`,
/// `e^{alpha/2} J_1(sqrt(4 n alpha)) / sqrt(n alpha)`.
pub fn mehler_heine_f(n: f64, alpha: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("n must be >= 1, got {n}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let na = n * alpha;
    Ok((0.5 * alpha).exp() * bessel_j1((4.0 * na).sqrt()) / na.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Explicit sum `sum_i (-1)^i C(n+k, n-i) x^i / i!`.
    fn laguerre_by_definition(n: usize, k: usize, x: f64) -> f64 {
        let mut fact = 1.0;
        let mut sum = 0.0;
        for i in 0..=n {
            if i > 0 {
                fact *= i as f64;
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binomial(n + k, n - i) * x.powi(i as i32) / fact;
        }
        sum
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre(0, 1, 0.7).unwrap(), 1.0);
        assert_relative_eq!(laguerre(1, 1, 0.5).unwrap(), 1.5, epsilon = 1e-15);
        let v = laguerre(2, 1, 3.0).unwrap();
        assert_relative_eq!(v, -1.5, epsilon = 1e-14);
        assert_relative_eq!(v, laguerre_by_definition(2, 1, 3.0), epsilon = 1e-14);
    }

    #[test]
    fn laguerre_matches_explicit_sum() {
        for n in 0..15 {
            for k in 0..4 {
                for &x in &[0.1, 0.9, 2.5, 6.0] {
                    let a = laguerre(n, k, x).unwrap();
                    let b = laguerre_by_definition(n, k, x);
                    assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "n={n} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn laguerre_rejects_absurd_degree() {
        assert!(laguerre(2_000_000, 1, 1.0).is_err());
    }

    #[test]
    fn kummer_examples() {
        assert_eq!(kummer_1f1_neg(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(kummer_1f1_neg(1.0, 0.8).unwrap(), 0.6, epsilon = 1e-15);
        let expected = laguerre(5, 1, 1.0).unwrap() / 6.0;
        assert_relative_eq!(kummer_1f1_neg(5.0, 1.0).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn kummer_non_integer_matches_direct_series() {
        // Small alpha keeps the direct series well conditioned.
        for &x in &[-0.5, -0.2, 0.3, 1.7, 4.25, 9.9] {
            for &a in &[0.05, 0.3, 1.0] {
                let direct = kummer_series(x, a).unwrap();
                let v = kummer_1f1_neg(x, a).unwrap();
                assert!((v - direct).abs() < 1e-12 * direct.abs().max(1.0), "x={x} a={a}");
            }
        }
    }

    #[test]
    fn kummer_domain_errors() {
        assert!(kummer_1f1_neg(-0.6, 1.0).is_err());
        assert!(kummer_1f1_neg(1.0, 0.0).is_err());
        assert!(kummer_1f1_neg(1.0, -1.0).is_err());
    }

    #[test]
    fn kummer_series_reports_partial_sum() {
        // A huge alpha cannot converge inside the term budget.
        match kummer_series(-0.3, 5000.0) {
            Err(Error::SeriesNonConvergence { terms, partial_sum }) => {
                assert_eq!(terms, KUMMER_MAX_TERMS);
                assert!(partial_sum.is_finite() || partial_sum.is_infinite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn first_zero_examples() {
        assert_relative_eq!(laguerre_first_zero(1).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(laguerre_first_zero(2).unwrap(), 3.0 - 3f64.sqrt(), epsilon = 1e-12);
        let z50 = laguerre_first_zero(50).unwrap();
        assert!((z50 - 3.67 / 50.0).abs() / (3.67 / 50.0) < 0.03, "z50={z50}");
        assert!(laguerre_first_zero(0).is_err());
    }

    #[test]
    fn first_zero_approaches_bessel_limit() {
        let bc = bessel_constants();
        let limit = bc.x11 * bc.x11 / 4.0;
        assert!((limit - 3.670).abs() < 1e-3);
        let z = laguerre_first_zero(100).unwrap() * 100.0;
        assert!((z - limit).abs() / limit < 0.01, "n0*alpha = {z}");
    }

    #[test]
    fn bessel_constant_values() {
        let bc = bessel_constants();
        assert!((bc.x11 - 3.83).abs() < 0.005);
        assert!((bc.j + 0.40).abs() < 0.005);
        assert!(bc.j < 0.0);
        assert!(bessel_j1(bc.x11).abs() < 1e-12);
    }

    #[test]
    fn bessel_series_and_asymptotic_agree_at_switch() {
        for &x in &[11.0, 12.0, 13.0] {
            assert!((bessel_series(0, x) - bessel_asymptotic(0, x)).abs() < 1e-10);
            assert!((bessel_series(1, x) - bessel_asymptotic(1, x)).abs() < 1e-10);
        }
    }

    #[test]
    fn mehler_heine_examples() {
        let a = laguerre_first_zero(50).unwrap();
        assert!(mehler_heine_f(50.0, a).unwrap().abs() < 0.01);
        assert_relative_eq!(
            mehler_heine_f(1.0, 1.0).unwrap(),
            0.5f64.exp() * bessel_j1(2.0),
            epsilon = 1e-15
        );
        assert!(mehler_heine_f(0.5, 1.0).is_err());
    }

    #[test]
    fn mehler_heine_error_decays_like_one_over_n() {
        let bc = bessel_constants();
        for &n in &[30.0, 60.0, 120.0] {
            for &frac in &[0.5, 0.8, 0.9, 1.0] {
                let alpha = frac * bc.x11 * bc.x11 / (4.0 * n);
                let exact = kummer_1f1_neg(n, alpha).unwrap();
                let approx = mehler_heine_f(n, alpha).unwrap();
                assert!((approx - exact).abs() <= 0.6 / n, "n={n} frac={frac}");
            }
        }
    }

    proptest! {
        #[test]
        fn laguerre_recurrence_residual(n in 1usize..200, x in 0.0f64..10.0) {
            let lm = laguerre(n - 1, 1, x).unwrap();
            let l0 = laguerre(n, 1, x).unwrap();
            let lp = laguerre(n + 1, 1, x).unwrap();
            let nf = n as f64;
            let residual = (nf + 1.0) * lp - (2.0 * nf + 2.0 - x) * l0 + (nf + 1.0) * lm;
            let scale = l0.abs().max(lp.abs()).max(lm.abs()).max(1.0) * (nf + 1.0);
            prop_assert!(residual.abs() <= 1e-12 * scale);
        }

        #[test]
        fn kummer_integer_consistency(n in 0usize..=100, alpha in 0.01f64..=4.0) {
            let k = kummer_1f1_neg(n as f64, alpha).unwrap() * (n as f64 + 1.0);
            let l = laguerre(n, 1, alpha).unwrap();
            prop_assert!((k - l).abs() <= 1e-10 * l.abs().max(1e-300) || (k - l).abs() < 1e-12);
        }
    }
}
