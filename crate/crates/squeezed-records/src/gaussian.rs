//! Linear (Gaussian) dynamics: the kernel `A(k, t)`, two-point functions,
//! rotated phase-space variables, Wigner functions and Gaussian overlaps.
//!
//! A single real quadrature of a mode has wavefunction `ψ ∝ exp(−½Aφ²)`, so
//! that `⟨φ²⟩ = 1/(2 Re A)`. A complex Fourier mode carries two independent
//! quadratures with identical statistics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cosmo::Epoch;
use crate::error::{domain, Error, Result};
use crate::numeric::{diff_of_products, dopri5, OdeOptions};

/// Guard band on `|sin kη|` for expressions with a vanishing denominator.
pub const SINE_GUARD: f64 = 1e-6;

/// Per-mode Gaussian kernel at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    pub k: f64,
    pub time: f64,
    pub a: Complex64,
}

impl GaussianKernel {
    pub fn new(k: f64, time: f64, a: Complex64) -> Result<Self> {
        if !(a.re > 0.0 && a.is_finite()) {
            return Err(domain(format!(
                "kernel must have positive real part, got {a}"
            )));
        }
        Ok(Self { k, time, a })
    }

    pub fn two_point(&self) -> Result<TwoPointSet> {
        two_point_from_a(self.a)
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("wavenumber must be positive, got {k}")))
    }
}

/// Bunch-Davies kernel during inflation: `k³(1 − i/(kτ))/(1 + k²τ²)`.
pub fn closed_form_a_inflation(k: f64, tau: f64) -> Result<Complex64> {
    check_k(k)?;
    if !(tau < 0.0 && tau.is_finite()) {
        return Err(domain(format!(
            "inflationary time must be negative, got {tau}"
        )));
    }
    let kt = k * tau;
    let k3 = k * k * k;
    let den = 1.0 + kt * kt;
    Ok(Complex64::new(k3 / den, -k3 / (kt * den)))
}

/// Mode function `ĝ = (1 − ikτ)e^{ikτ}` and its derivative `k²τ e^{ikτ}`,
/// normalized so that `A = −i a²H² ĝ′/ĝ` and `Re A = k³/|ĝ|²`.
pub fn inflation_mode(k: f64, tau: f64) -> (Complex64, Complex64) {
    let kt = k * tau;
    let e = Complex64::from_polar(1.0, kt);
    (Complex64::new(1.0, -kt) * e, e * (k * kt))
}

/// Radiation-era mode in the `u = a·g` variables, returned with the common
/// phase `e^{ikτ_f}` stripped and scaled by `k`: `(U, V) = (kû, û′)`.
fn radiation_uv(k: f64, eta: f64, tau_f: f64) -> (Complex64, Complex64) {
    let x = k * tau_f;
    let (s, c) = (k * eta).sin_cos();
    let x2 = x * x;
    let u = Complex64::new(s * (1.0 - x2) - x * c, x * (x * c - s));
    let v = Complex64::new(c * (1.0 - x2) + x * s, -x * (x * s + c));
    (u, v)
}

fn check_radiation(k: f64, eta: f64, tau_f: f64) -> Result<()> {
    check_k(k)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(domain(format!(
            "radiation-era time must be non-negative, got {eta}"
        )));
    }
    if !(tau_f < 0.0 && tau_f.is_finite()) {
        return Err(domain("tau_f must be negative"));
    }
    Ok(())
}

/// Exact radiation-era kernel continuing the inflationary vacuum from `τ_f`.
///
/// The closed form shares the denominator
/// `D = 2k⁴τ_f⁴ + (2k²τ_f² − 1)cos 2kη − 2kτ_f sin 2kη + 1`, which is
/// evaluated in the factored, manifestly positive form `D = 2|kû|²` so that it
/// stays accurate where the literal sum cancels to rounding.
pub fn closed_form_a_radiation_exact(k: f64, eta: f64, tau_f: f64) -> Result<Complex64> {
    check_radiation(k, eta, tau_f)?;
    let x = k * tau_f;
    let ke = k * eta;
    let (s, c) = ke.sin_cos();
    let (u, _) = radiation_uv(k, eta, tau_f);
    let d = 2.0 * u.norm_sqr();
    let et = eta - tau_f;
    let k2 = k * k;
    let re = 2.0 * k2 * k2 * k * et * et / d;
    let num = 2.0 * x.powi(4) - (ke + x - 2.0 * ke * x * x + 2.0 * x.powi(3)) * (2.0 * s * c)
        + 2.0 * ke * x * (c * c - s * s)
        + 2.0 * s * s;
    let im = et * num / (tau_f.powi(4) * d);
    Ok(Complex64::new(re, im))
}

/// The exact radiation-era kernel evaluated term by term as printed, with
/// the literal `cos 2kη` denominator. Loses accuracy where that denominator
/// cancels; used only to cross-check the factored evaluation.
pub fn radiation_exact_literal(k: f64, eta: f64, tau_f: f64) -> Result<Complex64> {
    check_radiation(k, eta, tau_f)?;
    let (x, ke) = (k * tau_f, k * eta);
    let (s2, c2) = (2.0 * ke).sin_cos();
    let et = eta - tau_f;
    let d = 2.0 * x.powi(4) + (2.0 * x * x - 1.0) * c2 - 2.0 * x * s2 + 1.0;
    let re = 2.0 * k.powi(5) * et * et / d;
    let num = 2.0 * x.powi(4) - (ke + x - 2.0 * ke * x * x + 2.0 * x.powi(3)) * s2
        + (2.0 * ke * x - 1.0) * c2
        + 1.0;
    Ok(Complex64::new(re, et * num / (tau_f.powi(4) * d)))
}

/// Leading-order radiation-era kernel for `|kτ_f| ≪ 1`:
/// `k³(kη)²/sin²(kη)·[1 − i(kτ_f)⁻⁴(sin kη cos kη − sin²(kη)/(kη))]`.
pub fn closed_form_a_radiation_approx(k: f64, eta: f64, tau_f: f64) -> Result<Complex64> {
    check_radiation(k, eta, tau_f)?;
    if eta == 0.0 {
        return Err(domain("approximate form requires eta > 0"));
    }
    let x = k * tau_f;
    if x.abs() > 0.3 {
        log::warn!(
            "approximate radiation kernel used with |k tau_f| = {} > 0.3",
            x.abs()
        );
    }
    let ke = k * eta;
    let (s, c) = ke.sin_cos();
    if s.abs() < SINE_GUARD {
        return Err(Error::Singular(format!(
            "approximate kernel diverges at sin(k eta) = {s}; use the exact form"
        )));
    }
    let pre = k.powi(3) * ke * ke / (s * s);
    Ok(Complex64::new(pre, -pre * (s * c - s * s / ke) / x.powi(4)))
}

/// Integrates `i dA/dt = A²/(a²H²) − a²H²k²` from `t0` to `t1` within one
/// epoch.
///
/// `A` is written as `−i h/g` with `g′ = h/(a²H²)`, `h′ = −a²H²k² g`; the
/// linear pair stays regular where `A` itself grows without bound.
pub fn integrate_a(
    epoch: &Epoch,
    k: f64,
    t0: f64,
    t1: f64,
    a0: Complex64,
    rel_tol: f64,
) -> Result<Complex64> {
    check_k(k)?;
    epoch.check_time(t0)?;
    epoch.check_time(t1)?;
    if !(a0.re > 0.0 && a0.is_finite()) {
        return Err(domain("initial kernel must have positive real part"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(domain("rel_tol must lie in (0, 1)"));
    }
    if t0 == t1 {
        return Ok(a0);
    }
    let g0 = Complex64::new(1.0 / (2.0 * a0.re).sqrt(), 0.0);
    let h0 = Complex64::i() * a0 * g0;
    let (y, stats) = dopri5(
        |t, y, dy| {
            let p = epoch.pump_unchecked(t);
            dy[0] = y[1] / p;
            dy[1] = -p * k * k * y[0];
        },
        t0,
        t1,
        &[g0, h0],
        mode_ode_options(rel_tol, g0.norm() + h0.norm()),
    )?;
    log::debug!(
        "integrate_a: {} steps, {} rejected",
        stats.accepted,
        stats.rejected
    );
    Ok(a_from_mode(y[0], y[1]))
}

pub(crate) fn mode_ode_options(rel_tol: f64, scale: f64) -> OdeOptions {
    let rtol = rel_tol * 1e-2;
    OdeOptions {
        rtol,
        atol: rtol * 1e-30 * scale,
        ..OdeOptions::default()
    }
}

/// `A = −i h/g`, with the real part taken from the conserved Wronskian
/// `Im(h ḡ) = ½`.
pub(crate) fn a_from_mode(g: Complex64, h: Complex64) -> Complex64 {
    let n = g.norm_sqr();
    Complex64::new(0.5 / n, -(h * g.conj()).re / n)
}

/// Integrates the Riccati equation for `A` directly. Valid only on spans
/// where `A` stays bounded; kept as an independent check of [`integrate_a`].
pub fn integrate_a_riccati(
    epoch: &Epoch,
    k: f64,
    t0: f64,
    t1: f64,
    a0: Complex64,
    rel_tol: f64,
) -> Result<Complex64> {
    check_k(k)?;
    epoch.check_time(t0)?;
    epoch.check_time(t1)?;
    let (y, _) = dopri5(
        |t, y, dy| {
            let p = epoch.pump_unchecked(t);
            dy[0] = -Complex64::i() * (y[0] * y[0] / p - p * k * k);
        },
        t0,
        t1,
        &[a0],
        mode_ode_options(rel_tol, a0.norm()),
    )?;
    Ok(y[0])
}

/// Equal-time second moments of one real quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSet {
    pub phi_phi: f64,
    pub pi_pi: f64,
    /// Symmetrized cross moment `½⟨{φ, π}⟩`.
    pub phi_pi: f64,
}

impl TwoPointSet {
    pub fn new(phi_phi: f64, pi_pi: f64, phi_pi: f64) -> Result<Self> {
        let t = Self {
            phi_phi,
            pi_pi,
            phi_pi,
        };
        t.check_positive()?;
        Ok(t)
    }

    /// `⟨φφ⟩⟨ππ⟩ − ⟨φπ⟩²`, evaluated with a compensated product difference.
    pub fn determinant(&self) -> f64 {
        diff_of_products(self.phi_phi, self.pi_pi, self.phi_pi, self.phi_pi)
    }

    /// Deviation of the determinant from the pure-state value ¼.
    pub fn purity_deviation(&self) -> f64 {
        self.determinant() - 0.25
    }

    /// `|det − ¼|` relative to `max(1, 4⟨φφ⟩⟨ππ⟩)`: the determinant of a
    /// stored covariance cannot be resolved better than the rounding of its
    /// product terms, which grow as `(Im A/Re A)²` for squeezed states.
    pub fn purity_error(&self) -> f64 {
        self.purity_deviation().abs() / (4.0 * self.phi_phi * self.pi_pi).max(1.0)
    }

    pub fn check_positive(&self) -> Result<()> {
        if !(self.phi_phi > 0.0 && self.pi_pi > 0.0 && self.determinant() > 0.0)
            || !(self.phi_phi + self.pi_pi + self.phi_pi).is_finite()
        {
            return Err(Error::NotPositiveDefinite(format!("{self:?}")));
        }
        Ok(())
    }

    /// Element-wise mean of two covariances.
    pub fn average(&self, other: &Self) -> Self {
        Self {
            phi_phi: 0.5 * (self.phi_phi + other.phi_phi),
            pi_pi: 0.5 * (self.pi_pi + other.pi_pi),
            phi_pi: 0.5 * (self.phi_pi + other.phi_pi),
        }
    }
}

/// Moments of the pure Gaussian state with kernel `A`.
pub fn two_point_from_a(a: Complex64) -> Result<TwoPointSet> {
    if !(a.re > 0.0 && a.is_finite()) {
        return Err(domain(format!(
            "kernel must have positive real part, got {a}"
        )));
    }
    let r = 2.0 * a.re;
    Ok(TwoPointSet {
        phi_phi: 1.0 / r,
        pi_pi: (a.re * a.re + a.im * a.im) / r,
        phi_pi: -a.im / r,
    })
}

/// Normalized probability density `|ψ(φ)|²` of one quadrature.
pub fn probability_density(a: Complex64, phi: f64) -> f64 {
    (a.re / std::f64::consts::PI).sqrt() * (-a.re * phi * phi).exp()
}

/// Heisenberg-picture coefficients of `φ_k(τ)` and `π_k(τ)` on the
/// annihilation operator during inflation.
pub fn heisenberg_mode(k: f64, tau: f64) -> Result<(Complex64, Complex64)> {
    check_k(k)?;
    if !(tau < 0.0 && tau.is_finite()) {
        return Err(domain(format!(
            "inflationary time must be negative, got {tau}"
        )));
    }
    let norm = 1.0 / (2.0 * k * k * k).sqrt();
    let e = Complex64::from_polar(norm, -k * tau);
    Ok((Complex64::new(1.0, k * tau) * e, e * (k * k / tau)))
}

/// Coefficient of the physical velocity `dφ/dt = φ′/a`.
pub fn physical_velocity_coefficient(k: f64, tau: f64, hubble_rate: f64) -> Result<Complex64> {
    heisenberg_mode(k, tau)?;
    let kt = k * tau;
    Ok(Complex64::from_polar(1.0 / (2.0 * k * k * k).sqrt(), -kt) * (-hubble_rate * kt * kt))
}

/// Moments built from Heisenberg coefficients: `|φ_c|²`, `|π_c|²`, `Re(φ_c π̄_c)`.
pub fn two_point_from_heisenberg(phi_c: Complex64, pi_c: Complex64) -> TwoPointSet {
    TwoPointSet {
        phi_phi: phi_c.norm_sqr(),
        pi_pi: pi_c.norm_sqr(),
        phi_pi: (phi_c * pi_c.conj()).re,
    }
}

/// Equal-time commutator `[φ, π]` from Heisenberg coefficients.
pub fn heisenberg_commutator(phi_c: Complex64, pi_c: Complex64) -> Complex64 {
    phi_c * pi_c.conj() - phi_c.conj() * pi_c
}

/// Phase-space scaling used to define the rotated variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FrameConvention {
    /// Rotate `(φk^{3/2}, πk^{−3/2})`.
    Inflation { k: f64 },
    /// Rotate the pair `(kη̃·x, x + ε p/(kη̃))` built from the scaled
    /// variables `x, p` with `ε = (kτ_f)⁴` and `η̃ = η − τ_f`; it moves rigidly
    /// during radiation domination, so its principal variances are constant.
    Radiation { k: f64, eta: f64, tau_f: f64 },
}

/// Principal-axis description of a single-mode covariance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedFrame {
    pub theta: f64,
    /// Variance along the squeezed direction, `⟨ΦΦ⟩`.
    pub phi2: f64,
    /// Variance along the anti-squeezed direction, `⟨ΠΠ⟩`.
    pub pi2: f64,
    /// `(⟨ΠΠ⟩/(k⁶⟨ΦΦ⟩))^{1/4}`: `1/|kτ|` on superhorizon scales during inflation.
    pub squeeze_ratio: f64,
}

/// Scaled covariance `(a, b, c)`, the Jacobian determinant of the scaling and `k`.
fn scaled_covariance(tp: &TwoPointSet, conv: FrameConvention) -> Result<(f64, f64, f64, f64, f64)> {
    match conv {
        FrameConvention::Inflation { k } => {
            check_k(k)?;
            let k3 = k * k * k;
            Ok((tp.phi_phi * k3, tp.pi_pi / k3, tp.phi_pi, 1.0, k))
        }
        FrameConvention::Radiation { k, eta, tau_f } => {
            check_radiation(k, eta, tau_f)?;
            let k3 = k * k * k;
            let (a, b, c) = (tp.phi_phi * k3, tp.pi_pi / k3, tp.phi_pi);
            let m = k * (eta - tau_f);
            let eps = (k * tau_f).powi(4);
            let r = eps / m;
            // (X, W) = (m x, x + r p)
            let xx = m * m * a;
            let ww = a + 2.0 * r * c + r * r * b;
            let xw = m * (a + r * c);
            Ok((xx, ww, xw, eps, k))
        }
    }
}

fn principal_axes(a: f64, b: f64, c: f64, det: f64) -> (f64, f64, f64) {
    let theta = 0.5 * (2.0 * c).atan2(b - a);
    let half_tr = 0.5 * (a + b);
    let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
    let lmax = half_tr + rad;
    let lmin = det / lmax;
    (theta, lmin, lmax)
}

fn frame_from_scaled(a: f64, b: f64, c: f64, det_scaled: f64, jac: f64, k: f64) -> RotatedFrame {
    let (theta, lmin, lmax) = principal_axes(a, b, c, det_scaled);
    let k3 = k * k * k;
    let phi2 = lmin / k3;
    let pi2 = lmax * k3 / (jac * jac);
    RotatedFrame {
        theta,
        phi2,
        pi2,
        squeeze_ratio: (pi2 / (phi2 * k3 * k3)).powf(0.25),
    }
}

/// Rotates to uncorrelated variables. An isotropic covariance returns `θ = 0`.
pub fn rotated_frame(tp: &TwoPointSet, conv: FrameConvention) -> Result<RotatedFrame> {
    tp.check_positive()?;
    let (a, b, c, jac, k) = scaled_covariance(tp, conv)?;
    let det = diff_of_products(a, b, c, c);
    if !(det > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("{tp:?}")));
    }
    Ok(frame_from_scaled(a, b, c, det, jac, k))
}

/// Rotated frame of the pure state with kernel `A`, using the exact
/// determinant ¼ for the small principal variance.
pub fn rotated_frame_from_a(a: Complex64, conv: FrameConvention) -> Result<RotatedFrame> {
    let tp = two_point_from_a(a)?;
    let (sa, sb, sc, jac, k) = scaled_covariance(&tp, conv)?;
    Ok(frame_from_scaled(sa, sb, sc, 0.25 * jac * jac, jac, k))
}

/// Cross moment of the scaled variables after rotating by `theta`.
pub fn rotated_cross_moment(tp: &TwoPointSet, conv: FrameConvention, theta: f64) -> Result<f64> {
    let (a, b, c, _, _) = scaled_covariance(tp, conv)?;
    let (s, co) = theta.sin_cos();
    Ok(0.5 * (a - b) * (2.0 * s * co) + c * (co * co - s * s))
}

/// Phase-space sampling grid for Wigner functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub n_phi: usize,
    pub n_pi: usize,
    /// Half-width in standard deviations of each marginal.
    pub extent_sigma: f64,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            n_phi: 129,
            n_pi: 129,
            extent_sigma: 6.0,
        }
    }
}

/// Wigner function sampled on a rectangular grid, row-major in `phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i_phi: usize, j_pi: usize) -> f64 {
        self.values[i_phi * self.pi.len() + j_pi]
    }

    fn steps(&self) -> (f64, f64) {
        (self.phi[1] - self.phi[0], self.pi[1] - self.pi[0])
    }

    /// Total mass by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        let (dp, dq) = self.steps();
        let (n, m) = (self.phi.len(), self.pi.len());
        let mut total = 0.0;
        for i in 0..n {
            let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            for j in 0..m {
                let wj = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                total += wi * wj * self.at(i, j);
            }
        }
        total * dp * dq
    }

    /// Marginal over `π`, by the trapezoid rule.
    pub fn phi_marginal(&self) -> Vec<f64> {
        let (_, dq) = self.steps();
        let m = self.pi.len();
        (0..self.phi.len())
            .map(|i| {
                let s: f64 = (0..m)
                    .map(|j| if j == 0 || j == m - 1 { 0.5 } else { 1.0 } * self.at(i, j))
                    .sum();
                s * dq
            })
            .collect()
    }

    /// Second moments by the trapezoid rule.
    pub fn moments(&self) -> TwoPointSet {
        let (dp, dq) = self.steps();
        let (n, m) = (self.phi.len(), self.pi.len());
        let (mut xx, mut pp, mut xp) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            for j in 0..m {
                let wj = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
                let w = wi * wj * self.at(i, j);
                xx += w * self.phi[i] * self.phi[i];
                pp += w * self.pi[j] * self.pi[j];
                xp += w * self.phi[i] * self.pi[j];
            }
        }
        let area = dp * dq;
        TwoPointSet {
            phi_phi: xx * area,
            pi_pi: pp * area,
            phi_pi: xp * area,
        }
    }
}

/// Value of the Gaussian Wigner function with covariance `tp` at `(φ, π)`.
pub fn wigner_value(tp: &TwoPointSet, phi: f64, pi: f64) -> f64 {
    let det = tp.determinant();
    let q = (tp.pi_pi * phi * phi - 2.0 * tp.phi_pi * phi * pi + tp.phi_phi * pi * pi) / det;
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

/// Samples the Gaussian Wigner function on a grid spanning
/// `±extent_sigma` marginal standard deviations.
pub fn wigner_gaussian(tp: &TwoPointSet, grid: PhaseGrid) -> Result<WignerGrid> {
    tp.check_positive()?;
    if grid.n_phi < 32 || grid.n_pi < 32 {
        return Err(Error::Resolution(format!(
            "Wigner grid needs at least 32 points per axis, got {}x{}",
            grid.n_phi, grid.n_pi
        )));
    }
    if !(grid.extent_sigma >= 5.0) {
        return Err(Error::Resolution(
            "Wigner grid must span at least 5 standard deviations".into(),
        ));
    }
    let axis = |n: usize, sd: f64| -> Vec<f64> {
        let h = grid.extent_sigma * sd;
        (0..n)
            .map(|i| -h + 2.0 * h * i as f64 / (n - 1) as f64)
            .collect()
    };
    let phi = axis(grid.n_phi, tp.phi_phi.sqrt());
    let pi = axis(grid.n_pi, tp.pi_pi.sqrt());
    let mut values = Vec::with_capacity(phi.len() * pi.len());
    for &x in &phi {
        for &p in &pi {
            values.push(wigner_value(tp, x, p));
        }
    }
    Ok(WignerGrid { phi, pi, values })
}

/// `Tr ρ_A ρ_B = 1/(2√det Σ̄)` for one quadrature, with `Σ̄` the mean covariance.
pub fn gaussian_overlap(a: &TwoPointSet, b: &TwoPointSet) -> Result<f64> {
    a.check_positive()?;
    b.check_positive()?;
    let det = a.average(b).determinant();
    if !(det > 0.0) {
        return Err(Error::NotPositiveDefinite("mean covariance".into()));
    }
    Ok(0.5 / det.sqrt())
}

/// Overlap of a complex Fourier mode, whose two quadratures are independent
/// and identically distributed.
pub fn complex_mode_overlap(a: &TwoPointSet, b: &TwoPointSet) -> Result<f64> {
    Ok(gaussian_overlap(a, b)?.powi(2))
}

/// Overlap normalized by the purities, `(det Σ_A det Σ_B)^{1/4}/√det Σ̄`, which
/// equals one for identical (possibly mixed) states.
pub fn normalized_overlap(a: &TwoPointSet, b: &TwoPointSet) -> Result<f64> {
    a.check_positive()?;
    b.check_positive()?;
    let det = a.average(b).determinant();
    Ok((a.determinant() * b.determinant()).sqrt().sqrt() / det.sqrt())
}

/// Kernel of a mode evolving on a long-wavelength background `φ_L`:
/// `Im A ↦ (1 − 2gφ_L) Im A`.
pub fn shifted_phase_a(a: Complex64, g: f64, phi_l: f64) -> Result<Complex64> {
    let s = g * phi_l;
    if !(s.abs() < 0.5) {
        return Err(domain(format!("|g phi_L| = {} must be below 0.5", s.abs())));
    }
    if s.abs() >= 0.1 {
        log::warn!("|g phi_L| = {} is outside the perturbative regime", s.abs());
    }
    Ok(Complex64::new(a.re, (1.0 - 2.0 * s) * a.im))
}

/// One row of a per-mode time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSample {
    pub time: f64,
    pub re_a: f64,
    pub im_a: f64,
    pub phi_phi: f64,
    pub pi_pi: f64,
    pub phi_pi: f64,
    pub theta: f64,
    pub squeeze_ratio: f64,
}

impl ModeSample {
    pub const HEADER: [&'static str; 8] = [
        "time",
        "re_A",
        "im_A",
        "phi_phi",
        "pi_pi",
        "phi_pi",
        "theta",
        "squeeze_ratio",
    ];

    pub fn from_a(time: f64, a: Complex64, conv: FrameConvention) -> Result<Self> {
        let tp = two_point_from_a(a)?;
        let frame = rotated_frame_from_a(a, conv)?;
        Ok(Self {
            time,
            re_a: a.re,
            im_a: a.im,
            phi_phi: tp.phi_phi,
            pi_pi: tp.pi_pi,
            phi_pi: tp.phi_pi,
            theta: frame.theta,
            squeeze_ratio: frame.squeeze_ratio,
        })
    }

    pub fn row(&self) -> [f64; 8] {
        [
            self.time,
            self.re_a,
            self.im_a,
            self.phi_phi,
            self.pi_pi,
            self.phi_pi,
            self.theta,
            self.squeeze_ratio,
        ]
    }
}
