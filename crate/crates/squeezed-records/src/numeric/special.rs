//! Sine integral and small numerical helpers.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

/// Sine integral `Si(x) = ∫₀ˣ sin(y)/y dy`.
///
/// Power series for `|x| ≤ 4`; beyond that the complex continued fraction for
/// `E₁(ix)`, which converges quickly there and keeps the absolute error near
/// machine precision (a truncated asymptotic series cannot reach 1e-10 until
/// `x` is well above 20).
pub fn sine_integral(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x <= 4.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0u32;
        loop {
            let k = 2 * n + 1;
            term *= -x2 / ((k + 1) as f64 * (k + 2) as f64);
            let contrib = term / (k + 2) as f64;
            sum += contrib;
            n += 1;
            if contrib.abs() < 1e-18 * sum.abs() || n > 60 {
                break;
            }
        }
        sum
    } else {
        // Modified Lentz evaluation of E₁(ix) e^{ix}.
        let tiny = 1e-300;
        let mut b = Complex64::new(1.0, x);
        let mut c = Complex64::new(1.0 / tiny, 0.0);
        let mut d = b.inv();
        let mut h = d;
        for i in 2..200 {
            let a = -((i - 1) as f64).powi(2);
            b += 2.0;
            d = (d * a + b).inv();
            c = b + c.inv() * a;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h *= Complex64::new(x.cos(), -x.sin());
        FRAC_PI_2 + h.im
    }
}

/// `a·b − c·d` evaluated with fused multiply-adds so the rounding of the two
/// products does not dominate when they nearly cancel.
pub fn diff_of_products(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let cd = c * d;
    let err = c.mul_add(-d, cd);
    let dop = a.mul_add(b, -cd);
    dop + err
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_series() {
        let x: f64 = 1e-3;
        let s = x - x.powi(3) / 18.0 + x.powi(5) / 600.0;
        assert!((sine_integral(x) - s).abs() < 1e-18);
        assert_eq!(sine_integral(0.0), 0.0);
    }

    #[test]
    fn branch_continuity_at_four() {
        let lo = sine_integral(4.0 - 1e-12);
        let hi = sine_integral(4.0 + 1e-12);
        assert!((lo - hi).abs() < 1e-12);
    }

    #[test]
    fn odd_and_limit() {
        assert_eq!(sine_integral(-2.5), -sine_integral(2.5));
        assert!((sine_integral(1e6) - FRAC_PI_2).abs() < 2e-6);
    }

    #[test]
    fn cancelling_products() {
        let a = 1.0 + 2f64.powi(-30);
        let v = diff_of_products(a, a, 1.0, 1.0);
        let exact = 2f64.powi(-29) + 2f64.powi(-60);
        assert_eq!(v, exact);
    }
}
