//! Leading non-Gaussian kernel `F(k, k′, q, t)`.
//!
//! The wavefunction is `Ψ_G·exp[∫ F φ_q φ_k φ_k′]` with
//! `Ψ_G = exp[−½∫ A φ_k φ_−k]`, and `F` obeys
//! `F′ − iαF = −i𝓗`, where `α = −(A_k + A_k′ + A_q)/(a²H²)` and `𝓗` is the
//! symmetrized action of `−𝓛₃` on `Ψ_G`. A constant long mode `φ_L` on one leg
//! shifts the short-mode kernel by `δA = −6φ_L F(k, k, 0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cosmo::{Coupling, Epoch, ModeTriplet};
use crate::error::{domain, Error, Result};
use crate::gaussian::{
    closed_form_a_inflation, closed_form_a_radiation_exact, mode_ode_options, SINE_GUARD,
};
use crate::numeric::{dopri5, integrate_complex, sine_integral, QuadOptions};

/// Kernel value at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicKernel {
    pub triplet: ModeTriplet,
    pub time: f64,
    pub f: Complex64,
}

/// Interaction source `𝓗^(int)` at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceTerm {
    pub triplet: ModeTriplet,
    pub time: f64,
    pub value: Complex64,
}

/// Linear-dynamics factor `α` at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaFactor {
    pub triplet: ModeTriplet,
    pub time: f64,
    pub value: Complex64,
}

/// Solver used by [`integrate_f`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FMethod {
    /// Adaptive quadrature of the explicit solution.
    Quadrature,
    /// Direct integration of the kernel together with the leg mode functions.
    Ode,
}

fn kernel_a(epoch: &Epoch, p: f64, t: f64) -> Result<Complex64> {
    if p == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    match epoch {
        Epoch::Inflation(_) => closed_form_a_inflation(p, t),
        Epoch::Radiation(e) => closed_form_a_radiation_exact(p, t, e.tau_f),
    }
}

/// Mode function `ĝ` and derivative with `A = −i a²H² ĝ′/ĝ`, continuous across
/// the end of inflation. A zero wavenumber gives `(1, 0)`.
pub fn mode_function(epoch: &Epoch, p: f64, t: f64) -> (Complex64, Complex64) {
    if p == 0.0 {
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    match epoch {
        Epoch::Inflation(_) => crate::gaussian::inflation_mode(p, t),
        Epoch::Radiation(e) => {
            let tf = e.tau_f;
            let x = p * tf;
            let ph = Complex64::from_polar(1.0, x);
            let u0 = Complex64::new(-tf, tf * x) * ph;
            let v0 = Complex64::new(1.0 - x * x, -x) * ph;
            let (s, c) = (p * t).sin_cos();
            let u = u0 * c + v0 * (s / p);
            let v = v0 * c - u0 * (p * s);
            let et = t - tf;
            (u / et, (v * et - u) / (et * et))
        }
    }
}

fn validate(triplet: &ModeTriplet, epoch: &Epoch, t: f64) -> Result<()> {
    triplet.validate()?;
    epoch.check_time(t)
}

/// Symmetrized interaction source
/// `𝓗 = ⅓[−(g/2)a²H²(k² + k′² + q²) + (g̃/(a²H²))(A_kA_k′ + A_kA_q + A_k′A_q)]`.
///
/// The kernels are evaluated exactly, so the source stays finite at the
/// zeros of `sin kη` where the leading-order cotangents diverge.
pub fn source_term(
    triplet: &ModeTriplet,
    time: f64,
    epoch: &Epoch,
    coupling: &Coupling,
) -> Result<Complex64> {
    validate(triplet, epoch, time)?;
    if coupling.g == 0.0 && coupling.g_tilde == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p = epoch.pump_unchecked(time);
    let [ak, akp, aq] = [
        kernel_a(epoch, triplet.k, time)?,
        kernel_a(epoch, triplet.k_prime, time)?,
        kernel_a(epoch, triplet.q, time)?,
    ];
    let grad = -0.5 * coupling.g * p * triplet.sum_squares();
    let kin = (ak * akp + ak * aq + akp * aq) * (coupling.g_tilde / p);
    Ok((kin + grad) / 3.0)
}

/// `𝓗·ĝ_kĝ_k′ĝ_q`, the regular integrand of the explicit solution.
fn source_times_g(
    triplet: &ModeTriplet,
    t: f64,
    epoch: &Epoch,
    coupling: &Coupling,
) -> (Complex64, Complex64) {
    let p = epoch.pump_unchecked(t);
    let (gk, dk) = mode_function(epoch, triplet.k, t);
    let (gp, dp) = mode_function(epoch, triplet.k_prime, t);
    let (gq, dq) = mode_function(epoch, triplet.q, t);
    let g = gk * gp * gq;
    let grad = g * (-0.5 * coupling.g * p * triplet.sum_squares());
    let kin = (dk * dp * gq + dk * gp * dq + gk * dp * dq) * (-coupling.g_tilde * p);
    ((grad + kin) / 3.0, g)
}

/// `α = −(A_k + A_k′ + A_q)/(a²H²)`.
pub fn alpha_factor(triplet: &ModeTriplet, time: f64, epoch: &Epoch) -> Result<Complex64> {
    validate(triplet, epoch, time)?;
    let p = epoch.pump_unchecked(time);
    let sum = kernel_a(epoch, triplet.k, time)?
        + kernel_a(epoch, triplet.k_prime, time)?
        + kernel_a(epoch, triplet.q, time)?;
    Ok(-sum / p)
}

/// Leading-order adiabatic kernel `𝓗/α` for a start deep inside the horizon,
/// where the oscillating source has not yet built up a phase.
pub fn adiabatic_initial_f(
    triplet: &ModeTriplet,
    t0: f64,
    epoch: &Epoch,
    coupling: &Coupling,
) -> Result<Complex64> {
    let h = source_term(triplet, t0, epoch, coupling)?;
    let a = alpha_factor(triplet, t0, epoch)?;
    Ok(h / a)
}

/// Evolves `F` from `t0` to `t1` within one epoch.
#[allow(clippy::too_many_arguments)]
pub fn integrate_f(
    triplet: &ModeTriplet,
    t0: f64,
    t1: f64,
    f0: Complex64,
    epoch: &Epoch,
    coupling: &Coupling,
    rel_tol: f64,
    method: FMethod,
) -> Result<Complex64> {
    validate(triplet, epoch, t0)?;
    epoch.check_time(t1)?;
    if t1 < t0 {
        return Err(domain("integrate_f requires t0 <= t1"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(domain("rel_tol must lie in (0, 1)"));
    }
    if t0 == t1 {
        return Ok(f0);
    }
    let silent = coupling.g == 0.0 && coupling.g_tilde == 0.0;
    if silent && f0 == Complex64::new(0.0, 0.0) {
        return Ok(f0);
    }
    match method {
        FMethod::Quadrature => {
            let (_, g0) = source_times_g(triplet, t0, epoch, coupling);
            let (_, g1) = source_times_g(triplet, t1, epoch, coupling);
            let integral = if silent {
                Complex64::new(0.0, 0.0)
            } else {
                let opts = QuadOptions {
                    epsabs: 1e-300,
                    epsrel: rel_tol * 1e-2,
                    max_intervals: 200_000,
                };
                integrate_complex(
                    |s| source_times_g(triplet, s, epoch, coupling).0,
                    t0,
                    t1,
                    opts,
                )?
                .value
            };
            Ok((g0 * f0 - Complex64::i() * integral) / g1)
        }
        FMethod::Ode => integrate_f_ode(triplet, t0, t1, f0, epoch, coupling, rel_tol),
    }
}

fn leg_initial(epoch: &Epoch, p: f64, t0: f64) -> Result<(Complex64, Complex64)> {
    if p == 0.0 {
        return Ok((Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
    }
    let a = kernel_a(epoch, p, t0)?;
    let g = Complex64::new(1.0 / (2.0 * a.re).sqrt(), 0.0);
    Ok((g, Complex64::i() * a * g))
}

fn integrate_f_ode(
    triplet: &ModeTriplet,
    t0: f64,
    t1: f64,
    f0: Complex64,
    epoch: &Epoch,
    coupling: &Coupling,
    rel_tol: f64,
) -> Result<Complex64> {
    let legs = triplet.legs();
    let mut y0 = Vec::with_capacity(7);
    for &p in &legs {
        let (g, h) = leg_initial(epoch, p, t0)?;
        y0.push(g);
        y0.push(h);
    }
    // Scale the kernel so its error weight is comparable to the leg variables.
    let fscale = source_term(triplet, t0, epoch, coupling)?
        .norm()
        .max(f0.norm())
        .max(1e-300);
    y0.push(f0 / fscale);
    let sum_sq = triplet.sum_squares();
    let (g, gt) = (coupling.g, coupling.g_tilde);
    let i = Complex64::i();
    let (y, _) = dopri5(
        |t, y, dy| {
            let p = epoch.pump_unchecked(t);
            let mut a = [Complex64::new(0.0, 0.0); 3];
            for (j, &pj) in legs.iter().enumerate() {
                let (gj, hj) = (y[2 * j], y[2 * j + 1]);
                dy[2 * j] = hj / p;
                dy[2 * j + 1] = -p * pj * pj * gj;
                a[j] = -i * hj / gj;
            }
            let alpha = -(a[0] + a[1] + a[2]) / p;
            let h =
                ((a[0] * a[1] + a[0] * a[2] + a[1] * a[2]) * (gt / p) - 0.5 * g * p * sum_sq) / 3.0;
            dy[6] = i * alpha * y[6] - i * h / fscale;
        },
        t0,
        t1,
        &y0,
        mode_ode_options(rel_tol, 1.0),
    )?;
    Ok(y[6] * fscale)
}

/// Superhorizon phase during inflation as quoted: `−(g/(3τ))(k² + k′² + q²)`.
pub fn imf_inflation_closed(triplet: &ModeTriplet, tau: f64, g: f64) -> Result<f64> {
    triplet.validate()?;
    if !(tau < 0.0 && tau.is_finite()) {
        return Err(domain("inflationary time must be negative"));
    }
    let kmax = triplet.k.max(triplet.k_prime).max(triplet.q);
    if (kmax * tau).abs() > 0.1 {
        log::warn!(
            "superhorizon Im F used with |k tau| = {}",
            (kmax * tau).abs()
        );
    }
    Ok(-(g / (3.0 * tau)) * triplet.sum_squares())
}

/// `[Si((q + q∥)η) + Si((q − q∥)η)]/sin(qη)`, tending to 2 as `qη → 0`.
pub fn sine_integral_ratio(q: f64, q_parallel: f64, eta: f64) -> Result<f64> {
    let qe = q * eta;
    if qe == 0.0 {
        return Ok(2.0);
    }
    let s = qe.sin();
    if s.abs() < SINE_GUARD && qe > 1.0 {
        return Err(Error::Singular(format!(
            "sin(q eta) = {s} inside the guard band"
        )));
    }
    Ok((sine_integral((q + q_parallel) * eta) + sine_integral((q - q_parallel) * eta)) / s)
}

/// Late-time radiation-era phase for `q ≪ k`, `kη ≫ 1`, as quoted:
/// `−((g + g̃)/12)·k³(kη)³/(kτ_f)⁴·[Si((q+q∥)η) + Si((q−q∥)η)]/(sin kη sin k′η sin qη)`.
pub fn imf_radiation_closed(
    triplet: &ModeTriplet,
    eta: f64,
    coupling: &Coupling,
    tau_f: f64,
) -> Result<f64> {
    triplet.validate()?;
    if !(eta > 0.0 && tau_f < 0.0) {
        return Err(domain("need eta > 0 and tau_f < 0"));
    }
    let (k, kp) = (triplet.k, triplet.k_prime);
    if triplet.q > 0.1 * k || k * eta < 5.0 || (k * tau_f).abs() > 0.1 {
        log::warn!("radiation Im F closed form used outside q << k, k eta >> 1, |k tau_f| << 1");
    }
    let (sk, skp) = ((k * eta).sin(), (kp * eta).sin());
    if sk.abs() < SINE_GUARD || skp.abs() < SINE_GUARD {
        return Err(Error::Singular("sin(k eta) inside the guard band".into()));
    }
    let ratio = sine_integral_ratio(triplet.q, triplet.q_parallel, eta)?;
    let ke = k * eta;
    Ok(
        -(coupling.sum() / 12.0) * k.powi(3) * ke.powi(3) / (k * tau_f).powi(4) * ratio
            / (sk * skp),
    )
}

/// Free propagation after inflation, `F₀·Π (pη/sin pη)` over the three legs.
pub fn free_f_propagation(f0: Complex64, triplet: &ModeTriplet, eta: f64) -> Result<Complex64> {
    triplet.validate()?;
    if !(eta >= 0.0) {
        return Err(domain("eta must be non-negative"));
    }
    let mut factor = 1.0;
    for p in triplet.legs() {
        let x = p * eta;
        if x == 0.0 {
            continue;
        }
        let s = x.sin();
        if s.abs() < SINE_GUARD && x > 1.0 {
            return Err(Error::Singular(format!("sin({x}) inside the guard band")));
        }
        factor *= x / s;
    }
    Ok(f0 * factor)
}

/// One row of an `Im F` comparison table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImFSample {
    pub eta: f64,
    pub im_f: f64,
    pub im_f_closed: f64,
    pub rel_err: f64,
}

impl ImFSample {
    pub const HEADER: [&'static str; 4] = ["eta", "im_F", "im_F_closed", "rel_err"];

    pub fn row(&self) -> [f64; 4] {
        [self.eta, self.im_f, self.im_f_closed, self.rel_err]
    }
}
