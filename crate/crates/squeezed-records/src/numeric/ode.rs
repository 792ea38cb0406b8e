//! Dormand–Prince 5(4) adaptive integrator for complex-valued systems.
//!
//! The error norm is taken per complex component, `|err| / (atol + rtol·|y|)`,
//! so a component whose real or imaginary part crosses zero does not force the
//! step size down.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control parameters.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 5_000_000,
        }
    }
}

/// Integration statistics.
#[derive(Clone, Copy, Debug, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) and returns `y(t1)`.
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[Complex64],
    opts: OdeOptions,
) -> Result<(Vec<Complex64>, OdeStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    if t1 == t0 || n == 0 {
        return Ok((y, stats));
    }
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::Domain("non-finite integration bounds".into()));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut k1 = vec![Complex64::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut ytmp = k1.clone();
    let mut ynew = k1.clone();

    f(t0, &y, &mut k1);
    stats.evaluations += 1;

    let scale = |a: &[Complex64], b: &[Complex64], i: usize| {
        opts.atol + opts.rtol * a[i].norm().max(b[i].norm())
    };

    // Initial step guess.
    let mut h = {
        let d0 = rms(&y, |i| y[i].norm() / scale(&y, &y, i));
        let d1 = rms(&k1, |i| k1[i].norm() / scale(&y, &y, i));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            (0.01 * d0 / d1).min(span)
        };
        for i in 0..n {
            ytmp[i] = y[i] + k1[i] * (dir * h0);
        }
        f(t0 + dir * h0, &ytmp, &mut k2);
        stats.evaluations += 1;
        let d2 = rms(&k2, |i| (k2[i] - k1[i]).norm() / scale(&y, &y, i)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    };

    let mut t = t0;
    let tiny = 1e-14 * t0.abs().max(t1.abs()).max(span);
    let mut last_rejected = false;
    loop {
        let remaining = (t1 - t).abs();
        if remaining <= tiny {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::NonConvergence(format!(
                "step budget of {} exhausted at t = {t:e}",
                opts.max_steps
            )));
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < tiny {
            return Err(Error::NonConvergence(format!(
                "step size underflow at t = {t:e}"
            )));
        }
        let hs = dir * h;

        for i in 0..n {
            ytmp[i] = y[i] + k1[i] * (hs * A21);
        }
        f(t + C2 * hs, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * hs;
        }
        f(t + C3 * hs, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * hs;
        }
        f(t + C4 * hs, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * hs;
        }
        f(t + C5 * hs, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] =
                y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * hs;
        }
        let tn = if last { t1 } else { t + hs };
        f(tn, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] =
                y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * hs;
        }
        f(tn, &ynew, &mut k7);
        stats.evaluations += 6;

        let err = rms(&ynew, |i| {
            let e =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            e.norm() / scale(&y, &ynew, i)
        });
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = tn;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                break;
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac.clamp(0.2, 5.0);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

fn rms(v: &[Complex64], term: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = (0..v.len()).map(|i| term(i).powi(2)).sum();
    (s / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_phase() {
        // y' = i ω y has y(t) = e^{iωt}.
        let w = 3.0;
        let opts = OdeOptions {
            rtol: 1e-11,
            atol: 1e-14,
            ..Default::default()
        };
        let (y, _) = dopri5(
            |_, y, dy| dy[0] = Complex64::i() * w * y[0],
            0.0,
            10.0,
            &[Complex64::new(1.0, 0.0)],
            opts,
        )
        .unwrap();
        let exact = Complex64::from_polar(1.0, w * 10.0);
        assert!((y[0] - exact).norm() < 1e-8, "{}", (y[0] - exact).norm());
    }

    #[test]
    fn backward_integration() {
        let (y, _) = dopri5(
            |_, y, dy| dy[0] = -y[0],
            2.0,
            0.0,
            &[Complex64::new((-2.0f64).exp(), 0.0)],
            OdeOptions {
                rtol: 1e-12,
                atol: 1e-15,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_span_is_identity() {
        let y0 = [Complex64::new(0.3, -0.7)];
        let (y, st) = dopri5(
            |_, _, dy| dy[0] = Complex64::new(1.0, 0.0),
            1.0,
            1.0,
            &y0,
            OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(y[0], y0[0]);
        assert_eq!(st.evaluations, 0);
    }
}
