//! Gaussian-window localized modes.
//!
//! A window `W(k′|k₀, x₀) = (2√π σ)^{3/2} exp[−½σ²|k′ − k₀|² + ik′·x₀]` picks
//! out Fourier modes near `k₀` and positions within `σ` of `x₀`; it is
//! normalized so that `∫_{k′}|W|² = 1` with `∫_{k′} = ∫d³k′/(2π)³`.
//! Localized rotated variables convolve each Fourier mode, expressed in its
//! own principal frame, against the window.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cosmo::Epoch;
use crate::error::{domain, Result};
use crate::gaussian::{
    closed_form_a_inflation, closed_form_a_radiation_exact, rotated_frame_from_a, FrameConvention,
    RotatedFrame,
};
use crate::numeric::{integrate, QuadOptions};

pub type Vec3 = [f64; 3];

/// Default slack factor for the disjointness hierarchy.
pub const DEFAULT_SLACK: f64 = 3.0;

/// Smallest `σ|k₀|` accepted by [`localized_variances`].
pub const MIN_SIGMA_K: f64 = 6.0;

/// Below this `σ|k₀|` a validity warning is emitted.
pub const WARN_SIGMA_K: f64 = 10.0;

/// Half-width of the radial integration band in units of `1/σ`.
const RADIAL_HALF_WIDTH: f64 = 9.0;

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist2(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(d, d)
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Window centre `x0`, central wavevector `k0` and width `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub x0: Vec3,
    pub k0: Vec3,
    pub sigma: f64,
}

impl WindowSpec {
    pub fn new(x0: Vec3, k0: Vec3, sigma: f64) -> Result<Self> {
        let spec = Self { x0, k0, sigma };
        spec.validate()?;
        Ok(spec)
    }

    /// Window built from a direction and a magnitude, as listed in configs.
    pub fn from_direction(x0: Vec3, direction: Vec3, k_magnitude: f64, sigma: f64) -> Result<Self> {
        let n = norm(direction);
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain("window direction must be a non-zero vector"));
        }
        let k0 = direction.map(|c| c / n * k_magnitude);
        Self::new(x0, k0, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(domain("window width sigma must be positive"));
        }
        if !self.x0.iter().chain(self.k0.iter()).all(|c| c.is_finite()) {
            return Err(domain("window centre and wavevector must be finite"));
        }
        let sk = self.sigma_k();
        if sk < WARN_SIGMA_K {
            log::warn!("window with sigma*|k0| = {sk} < {WARN_SIGMA_K}: localized modes are poorly defined");
        }
        Ok(())
    }

    pub fn k_magnitude(&self) -> f64 {
        norm(self.k0)
    }

    pub fn sigma_k(&self) -> f64 {
        self.sigma * self.k_magnitude()
    }

    /// Unit vector along `k0`.
    pub fn direction(&self) -> Result<Vec3> {
        let k = self.k_magnitude();
        if k == 0.0 {
            return Err(domain("window wavevector is zero"));
        }
        Ok(self.k0.map(|c| c / k))
    }
}

/// Which real combination of the `±k₀` localized modes is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    /// `(Φ(k₀) + Φ(−k₀))/√2`
    Real,
    /// `(Φ(k₀) − Φ(−k₀))/(√2 i)`
    Imaginary,
}

/// A localized real degree of freedom together with its epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedMode {
    pub spec: WindowSpec,
    pub component: Component,
    pub epoch: Epoch,
}

impl LocalizedMode {
    /// The two components share one `∫|W|²P` term and differ only by the
    /// pairing `∫W(k′)W(−k′)P ∝ e^{−σ²k₀²}`, which for `σ|k₀| ≥ 6` lies more
    /// than ten orders of magnitude below it for power-law spectra and is
    /// dropped; the components are therefore statistically identical.
    pub fn variances(&self, time: f64) -> Result<LocalizedVariances> {
        localized_variances(&self.spec, &self.epoch, time)
    }
}

/// `W(k′|k₀, x₀)`.
pub fn window(spec: &WindowSpec, k_prime: Vec3) -> Complex64 {
    let amp = (2.0 * PI.sqrt() * spec.sigma).powf(1.5);
    let s2 = spec.sigma * spec.sigma;
    Complex64::from_polar(
        amp * (-0.5 * s2 * dist2(k_prime, spec.k0)).exp(),
        dot(k_prime, spec.x0),
    )
}

/// `[Φ(k, x), Π(p, y)]` for windows `a = (x, k)` and `b = (y, p)`:
/// `i exp[−|x−y|²/(4σ²) − σ²|k+p|²/4 + (i/2)(k−p)·(x−y)]`.
pub fn window_commutator(a: &WindowSpec, b: &WindowSpec) -> Result<Complex64> {
    if a.sigma != b.sigma {
        return Err(domain("window commutator needs equal widths"));
    }
    let s2 = a.sigma * a.sigma;
    let dx = [a.x0[0] - b.x0[0], a.x0[1] - b.x0[1], a.x0[2] - b.x0[2]];
    let ks = [a.k0[0] + b.k0[0], a.k0[1] + b.k0[1], a.k0[2] + b.k0[2]];
    let kd = [a.k0[0] - b.k0[0], a.k0[1] - b.k0[1], a.k0[2] - b.k0[2]];
    let modulus = (-dot(dx, dx) / (4.0 * s2) - 0.25 * s2 * dot(ks, ks)).exp();
    Ok(Complex64::i() * Complex64::from_polar(modulus, 0.5 * dot(kd, dx)))
}

/// `W̃(y) = ∫_{k′} e^{−ik′·y} W(k′) = π^{−3/4}σ^{−3/2} exp[−|x₀−y|²/(2σ²) + ik₀·(x₀−y)]`.
pub fn real_space_window(spec: &WindowSpec, y: Vec3) -> Complex64 {
    let s = spec.sigma;
    let amp = PI.powf(-0.75) * s.powf(-1.5);
    let dx = [spec.x0[0] - y[0], spec.x0[1] - y[1], spec.x0[2] - y[2]];
    Complex64::from_polar(amp * (-dot(dx, dx) / (2.0 * s * s)).exp(), dot(spec.k0, dx))
}

/// Angle-averaged `|W|²` density in `|k′| = κ`, normalized to unit integral.
///
/// The angular integral is done analytically:
/// `∫dμ e^{2σ²κk₀μ} = sinh(2σ²κk₀)/(σ²κk₀)`.
pub fn radial_weight(kappa: f64, k0: f64, sigma: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let s2 = sigma * sigma;
    let pref = (2.0 * PI.sqrt() * sigma).powi(3) / (4.0 * PI * PI);
    let d = kappa - k0;
    let z = 4.0 * s2 * kappa * k0;
    // (1 − e^{−z})/z without cancellation for small z
    let shape = if z < 1e-8 {
        1.0 - 0.5 * z
    } else {
        -(-z).exp_m1() / z
    };
    pref * kappa * kappa * (-s2 * d * d).exp() * 2.0 * shape
}

/// Localized second moments of the rotated variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedVariances {
    /// `⟨Φ_S²⟩`
    pub phi2: f64,
    /// `⟨Π_S²⟩`
    pub pi2: f64,
    /// `⟨Φ_SΠ_S⟩`, zero because every Fourier mode is taken in its own
    /// principal frame.
    pub cross: f64,
    /// Pure Fourier-mode variances at `|k₀|`.
    pub fourier_phi2: f64,
    pub fourier_pi2: f64,
    /// Nominal `1/(σk₀)` band for the window corrections.
    pub band: f64,
    /// Combined quadrature error estimate (relative).
    pub quad_error: f64,
}

impl LocalizedVariances {
    /// Measured relative deviations of `(phi2, pi2)` from the pure Fourier mode.
    pub fn window_correction(&self) -> (f64, f64) {
        (
            self.phi2 / self.fourier_phi2 - 1.0,
            self.pi2 / self.fourier_pi2 - 1.0,
        )
    }

    pub fn determinant(&self) -> f64 {
        self.phi2 * self.pi2 - self.cross * self.cross
    }
}

/// Principal-frame variances of a single Fourier mode `|k| = kappa`.
pub fn fourier_frame(epoch: &Epoch, kappa: f64, time: f64) -> Result<RotatedFrame> {
    epoch.check_time(time)?;
    match epoch {
        Epoch::Inflation(_) => {
            let a = closed_form_a_inflation(kappa, time)?;
            rotated_frame_from_a(a, FrameConvention::Inflation { k: kappa })
        }
        Epoch::Radiation(e) => {
            let a = closed_form_a_radiation_exact(kappa, time, e.tau_f)?;
            rotated_frame_from_a(
                a,
                FrameConvention::Radiation {
                    k: kappa,
                    eta: time,
                    tau_f: e.tau_f,
                },
            )
        }
    }
}

/// Localized variances `(⟨Φ_S²⟩, ⟨Π_S²⟩, ⟨Φ_SΠ_S⟩)` by adaptive radial
/// quadrature of the per-mode rotated variances against `|W|²`.
pub fn localized_variances(
    spec: &WindowSpec,
    epoch: &Epoch,
    time: f64,
) -> Result<LocalizedVariances> {
    spec.validate()?;
    epoch.check_time(time)?;
    let k0 = spec.k_magnitude();
    let sk = spec.sigma_k();
    if sk < MIN_SIGMA_K {
        return Err(domain(format!(
            "sigma*|k0| = {sk} is below {MIN_SIGMA_K}; the window does not isolate a wavenumber"
        )));
    }
    if let Epoch::Inflation(_) = epoch {
        if (k0 * time).abs() > 0.1 {
            log::warn!(
                "localized inflationary variances outside the superhorizon regime, |k tau| = {}",
                (k0 * time).abs()
            );
        }
    }
    let fourier = fourier_frame(epoch, k0, time)?;
    let lo = (k0 - RADIAL_HALF_WIDTH / spec.sigma).max(0.0);
    let hi = k0 + RADIAL_HALF_WIDTH / spec.sigma;
    let opts = QuadOptions {
        epsabs: 0.0,
        epsrel: 1e-11,
        max_intervals: 20_000,
    };
    let mut failure = None;
    let mut moment = |pick: fn(&RotatedFrame) -> f64, scale: f64| {
        integrate(
            |kappa| {
                if kappa <= 0.0 {
                    return 0.0;
                }
                match fourier_frame(epoch, kappa, time) {
                    Ok(fr) => radial_weight(kappa, k0, spec.sigma) * pick(&fr) / scale,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            lo,
            hi,
            opts,
        )
    };
    let phi = moment(|f| f.phi2, fourier.phi2)?;
    let pi = moment(|f| f.pi2, fourier.pi2)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(LocalizedVariances {
        phi2: phi.value * fourier.phi2,
        pi2: pi.value * fourier.pi2,
        cross: 0.0,
        fourier_phi2: fourier.phi2,
        fourier_pi2: fourier.pi2,
        band: 1.0 / sk,
        quad_error: phi.error / phi.value.abs() + pi.error / pi.value.abs(),
    })
}

/// Centres `x₀ ± k̂₀η` of the two regions a localized mode depends on in
/// the radiation era, and whether the wavepacket has spread (`η > σ²|k₀|`).
pub fn support_regions(spec: &WindowSpec, eta: f64) -> Result<(Vec3, Vec3, bool)> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(domain("eta must be non-negative"));
    }
    let n = spec.direction()?;
    let plus = [
        spec.x0[0] + n[0] * eta,
        spec.x0[1] + n[1] * eta,
        spec.x0[2] + n[2] * eta,
    ];
    let minus = [
        spec.x0[0] - n[0] * eta,
        spec.x0[1] - n[1] * eta,
        spec.x0[2] - n[2] * eta,
    ];
    let spread = eta > spec.sigma * spec.sigma * spec.k_magnitude();
    Ok((plus, minus, spread))
}

/// `|Δk|/k ≳ σ/η ≳ 1/(σk)` with the default slack factor.
pub fn disjointness_hierarchy(k: f64, delta_k: f64, sigma: f64, eta: f64) -> bool {
    disjointness_hierarchy_with_slack(k, delta_k, sigma, eta, DEFAULT_SLACK)
}

/// The hierarchy with an explicit slack: each `a ≳ b` holds when
/// `slack·a ≥ b`, and the middle ratio must lie in the propagating regime
/// `σ/η ≤ 1`.
pub fn disjointness_hierarchy_with_slack(
    k: f64,
    delta_k: f64,
    sigma: f64,
    eta: f64,
    slack: f64,
) -> bool {
    if !(k > 0.0 && sigma > 0.0 && eta > 0.0 && slack >= 1.0) || !(delta_k.abs() > 0.0) {
        return false;
    }
    let r_dir = delta_k.abs() / k;
    let r_prop = sigma / eta;
    let r_spread = 1.0 / (sigma * k);
    r_prop <= 1.0 && slack * r_dir >= r_prop && slack * r_prop >= r_spread
}
