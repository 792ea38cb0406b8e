//! Conditional statistics of localized short modes given a classical
//! long-wavelength background, and the record diagnostics built on them.
//!
//! A background realization is a finite set of Fourier amplitudes `φ_q` with
//! per-mode variance `1/(2q³)`. Wavevectors are drawn log-uniformly in
//! `[q_min, q_star]` with isotropic directions, and each carries the cell
//! weight `μ_q` that turns sums into `∫_q = ∫d³q/(2π)³`: a linear functional
//! `∫_q φ_q f(q)` is evaluated as `Σ √μ_q (φ_q f(q) + c.c.)`.
//!
//! Conditional moments of the form
//! `⟨Φ²⟩ = p₀ + (D²/P)·S`, `⟨ΦΠ⟩ = D·ψ`, `⟨Π²⟩ = P`
//! are stored together with `ψ` (the recorded variable) and the excess
//! `E = S − ψ² ≥ 0`, so the determinant `p₀P + D²E` is evaluated without the
//! cancellation between `⟨Φ²⟩⟨Π²⟩` and `⟨ΦΠ⟩²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cosmo::{Coupling, Epoch, InflationEpoch};
use crate::error::{domain, Result};
use crate::localized::{disjointness_hierarchy, localized_variances, Vec3, WindowSpec};
use crate::numeric::{gauss_legendre, integrate, sine_integral, QuadOptions};

/// Overlap below which two conditional states count as distinguishable.
pub const DISTINGUISHABLE_OVERLAP: f64 = 0.01;

/// Default threshold on `(g+g̃)^{1/4}·a_f/a_i` for the global records condition.
pub const GLOBAL_RECORDS_THRESHOLD: f64 = 10.0;

/// Default safety factor in the perturbativity flag.
pub const PERTURBATIVITY_SAFETY: f64 = 1.0;

/// Pairs whose smoothing envelope is below `e^{−ENVELOPE_CUT}` are skipped.
const ENVELOPE_CUT: f64 = 50.0;

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// One sampled Fourier mode; its partner at `−q` carries the conjugate amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongMode {
    pub q: Vec3,
    pub amplitude: Complex64,
    /// Cell weight `μ_q`.
    pub weight: f64,
}

/// A classical realization of the long-wavelength field at the end of inflation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongWavelengthField {
    pub q_min: f64,
    pub q_star: f64,
    pub seed: u64,
    pub modes: Vec<LongMode>,
}

impl LongWavelengthField {
    /// Every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            m.amplitude *= factor;
        }
        out
    }

    /// `Σ √μ (φ_q e^{iq·x}·f(q) + c.c.)` as a list of signed-mode coefficients.
    fn coefficients(&self, x: Vec3, f: impl Fn(&LongMode) -> f64) -> Vec<(Vec3, Complex64)> {
        let mut out = Vec::with_capacity(2 * self.modes.len());
        for m in &self.modes {
            let c = m.amplitude * Complex64::from_polar(m.weight.sqrt() * f(m), dot(m.q, x));
            out.push((m.q, c));
            out.push((m.q.map(|v| -v), c.conj()));
        }
        out
    }

    /// Unsmoothed field value `φ(x)`.
    pub fn value(&self, x: Vec3) -> f64 {
        sum_linear(&self.coefficients(x, |_| 1.0), 0.0)
    }
}

fn sum_linear(coeffs: &[(Vec3, Complex64)], sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    coeffs
        .iter()
        .map(|(q, c)| c.re * (-0.25 * s2 * dot(*q, *q)).exp())
        .sum()
}

/// `Σ_{a,b} c_a c_b e^{−σ²|q_a+q_b|²/4}`, the smoothed square of the field
/// built from the coefficients.
fn smoothed_square(coeffs: &[(Vec3, Complex64)], sigma: f64) -> f64 {
    let s2 = 0.25 * sigma * sigma;
    let mut total = 0.0;
    for (a, (qa, ca)) in coeffs.iter().enumerate() {
        for (qb, cb) in &coeffs[a..] {
            let p = [qa[0] + qb[0], qa[1] + qb[1], qa[2] + qb[2]];
            let e = s2 * dot(p, p);
            if e > ENVELOPE_CUT {
                continue;
            }
            let w = if std::ptr::eq(ca, cb) { 1.0 } else { 2.0 };
            total += w * (ca * cb).re * (-e).exp();
        }
    }
    total
}

/// Draws a scale-invariant background with `n_modes` independent modes.
pub fn sample_long_field(
    q_min: f64,
    q_star: f64,
    n_modes: usize,
    seed: u64,
) -> Result<LongWavelengthField> {
    if !(q_min > 0.0 && q_min.is_finite()) {
        return Err(domain("q_min must be positive"));
    }
    if !(q_star > q_min && q_star.is_finite()) {
        return Err(domain("q_star must exceed q_min"));
    }
    if n_modes < 8 {
        return Err(domain(format!("need at least 8 modes, got {n_modes}")));
    }
    let log_range = (q_star / q_min).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = (0..n_modes)
        .map(|_| {
            let q = q_min * (log_range * rng.random::<f64>()).exp();
            let mu: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            let st = (1.0 - mu * mu).max(0.0).sqrt();
            let dir = [st * phi.cos(), st * phi.sin(), mu];
            let sd = (0.25 / (q * q * q)).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            LongMode {
                q: dir.map(|c| c * q),
                amplitude: Complex64::new(re * sd, im * sd),
                weight: q * q * q * log_range / (4.0 * PI * PI * n_modes as f64),
            }
        })
        .collect();
    Ok(LongWavelengthField {
        q_min,
        q_star,
        seed,
        modes,
    })
}

/// `φ_σ(x) = ∫_q φ_q e^{iq·x − σ²q²/4}`.
pub fn smoothed_field(field: &LongWavelengthField, x: Vec3, sigma: f64) -> f64 {
    sum_linear(&field.coefficients(x, |_| 1.0), sigma)
}

/// `(φ²)_σ(x) = ∫_{q,q′<q⋆} φ_q φ_q′ e^{i(q+q′)·x − σ²|q+q′|²/4}`.
pub fn smoothed_squared_field(
    field: &LongWavelengthField,
    x: Vec3,
    sigma: f64,
    q_star: f64,
) -> f64 {
    let coeffs: Vec<_> = field
        .coefficients(x, |_| 1.0)
        .into_iter()
        .filter(|(q, _)| dot(*q, *q) < q_star * q_star)
        .collect();
    smoothed_square(&coeffs, sigma)
}

/// `[Si((q+q∥)η) + Si((q−q∥)η)]/(qη)`: 2 for `qη → 0`, `≈ π/(qη)` for `qη ≫ 1`
/// away from the axis.
pub fn sine_bracket(q: f64, q_parallel: f64, eta: f64) -> f64 {
    let qe = q * eta;
    if qe == 0.0 {
        return 2.0;
    }
    (sine_integral((q + q_parallel) * eta) + sine_integral((q - q_parallel) * eta)) / qe
}

fn directional_coefficients(
    field: &LongWavelengthField,
    x: Vec3,
    k_hat: Vec3,
    eta: f64,
) -> Vec<(Vec3, Complex64)> {
    field.coefficients(x, |m| {
        let q = dot(m.q, m.q).sqrt();
        sine_bracket(q, dot(m.q, k_hat), eta)
    })
}

fn check_unit(k_hat: Vec3) -> Result<()> {
    if (dot(k_hat, k_hat) - 1.0).abs() > 1e-9 {
        return Err(domain("k_hat must be a unit vector"));
    }
    Ok(())
}

/// `φ_k̂(x, η) = ∫_q φ_q(0) e^{iq·x}[Si((q+q∥)η) + Si((q−q∥)η)]/(qη)`.
pub fn directional_smoothed_field(
    field: &LongWavelengthField,
    x: Vec3,
    k_hat: Vec3,
    eta: f64,
) -> Result<f64> {
    check_unit(k_hat)?;
    if !(eta >= 0.0) {
        return Err(domain("eta must be non-negative"));
    }
    Ok(sum_linear(
        &directional_coefficients(field, x, k_hat, eta),
        0.0,
    ))
}

/// The directional field additionally smoothed by the window,
/// `ψ_σ = ∫_q φ_q e^{iq·x − σ²q²/4}·bracket/(qη)`, and its smoothed square
/// `(ψ²)_σ`. The first is what a window at `x` records; the difference
/// `(ψ²)_σ − ψ_σ²` is the local variance responsible for mixing.
pub fn windowed_directional_moments(
    field: &LongWavelengthField,
    x: Vec3,
    k_hat: Vec3,
    eta: f64,
    sigma: f64,
) -> Result<(f64, f64)> {
    check_unit(k_hat)?;
    let coeffs = directional_coefficients(field, x, k_hat, eta);
    Ok((sum_linear(&coeffs, sigma), smoothed_square(&coeffs, sigma)))
}

/// Ensemble variance of `φ_k̂` for a scale-invariant spectrum on `[q_min, q_star]`:
/// `∫_q (1/2q³)·⟨bracket²⟩_angles`.
pub fn directional_variance(q_min: f64, q_star: f64, eta: f64) -> Result<f64> {
    if !(q_min > 0.0 && q_star > q_min && eta >= 0.0) {
        return Err(domain("need 0 < q_min < q_star and eta >= 0"));
    }
    let (mu, w) = gauss_legendre(64);
    // log-spaced radial variable, ∫_q (1/2q³) = (1/4π²)∫ d ln q
    let r = integrate(
        |lnq| {
            let q = lnq.exp();
            let ang: f64 = mu
                .iter()
                .zip(&w)
                .map(|(&m, &wm)| wm * sine_bracket(q, q * m, eta).powi(2))
                .sum();
            0.5 * ang / (4.0 * PI * PI)
        },
        q_min.ln(),
        q_star.ln(),
        QuadOptions {
            epsabs: 0.0,
            epsrel: 1e-9,
            max_intervals: 5_000,
        },
    )?;
    Ok(r.value)
}

/// Ensemble mean of `∫_q (1/2q³)` over `[a, b]`, i.e. `ln(b/a)/(4π²)`.
pub fn scale_invariant_band(a: f64, b: f64) -> f64 {
    if b > a && a > 0.0 {
        (b / a).ln() / (4.0 * PI * PI)
    } else {
        0.0
    }
}

/// Which epoch the moments refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpochKind {
    Inflation,
    Radiation,
}

/// Parameters the moments were evaluated at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentContext {
    pub spec: WindowSpec,
    pub time: f64,
    pub coupling: Coupling,
    pub epoch: EpochKind,
}

/// Conditional second moments of a localized short mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments {
    pub phi2: f64,
    pub pi2: f64,
    pub cross: f64,
    /// Part of `⟨Φ²⟩` independent of the conditioning, `p₀`.
    pub base_phi2: f64,
    /// `D` in `⟨ΦΠ⟩ = D·ψ`.
    pub coefficient: f64,
    /// The recorded long-wavelength variable `ψ`.
    pub recorded: f64,
    /// `E = S − ψ² ≥ 0`.
    pub excess: f64,
    pub context: MomentContext,
}

impl ConditionalMoments {
    fn build(
        base_phi2: f64,
        pi2: f64,
        coefficient: f64,
        recorded: f64,
        excess: f64,
        context: MomentContext,
    ) -> Self {
        let excess = excess.max(0.0);
        let s = recorded * recorded + excess;
        Self {
            phi2: base_phi2 + coefficient * coefficient / pi2 * s,
            pi2,
            cross: coefficient * recorded,
            base_phi2,
            coefficient,
            recorded,
            excess,
            context,
        }
    }

    /// `⟨Φ²⟩⟨Π²⟩ − ⟨ΦΠ⟩² = p₀P + D²E`.
    pub fn determinant(&self) -> f64 {
        self.base_phi2 * self.pi2 + self.coefficient * self.coefficient * self.excess
    }

    /// The same quantity formed directly from the three moments.
    pub fn naive_determinant(&self) -> f64 {
        self.phi2 * self.pi2 - self.cross * self.cross
    }

    /// Background shifted uniformly by `delta` in the recorded variable.
    pub fn shifted(&self, delta: f64) -> Self {
        Self::build(
            self.base_phi2,
            self.pi2,
            self.coefficient,
            self.recorded + delta,
            self.excess,
            self.context,
        )
    }

    /// The recorded variable inferred from the moments, `⟨ΦΠ⟩/D`.
    pub fn inferred(&self) -> Option<f64> {
        (self.coefficient != 0.0).then(|| self.cross / self.coefficient)
    }
}

/// `(det Σ_A det Σ_B)^{1/4}/√det Σ̄` for one real component, evaluated from
/// the structured form so that it stays accurate for very thin ellipses.
pub fn conditional_overlap(a: &ConditionalMoments, b: &ConditionalMoments) -> Result<f64> {
    if a.base_phi2 != b.base_phi2 || a.pi2 != b.pi2 || a.coefficient != b.coefficient {
        return Err(domain(
            "conditional states must share the window, time and coupling",
        ));
    }
    let d2 = a.coefficient * a.coefficient;
    let base = a.base_phi2 * a.pi2;
    let dpsi = a.recorded - b.recorded;
    let mean = base + d2 * (0.5 * (a.excess + b.excess) + 0.25 * dpsi * dpsi);
    Ok((a.determinant() * b.determinant()).sqrt().sqrt() / mean.sqrt())
}

/// Overlap of the localized complex mode, whose real and imaginary
/// components are independent and identically conditioned.
pub fn conditional_mode_overlap(a: &ConditionalMoments, b: &ConditionalMoments) -> Result<f64> {
    Ok(conditional_overlap(a, b)?.powi(2))
}

/// `(det)/(⟨Φ²⟩⟨Π²⟩)`.
pub fn mixedness_ratio(m: &ConditionalMoments) -> f64 {
    m.determinant() / (m.phi2 * m.pi2)
}

/// Inflationary baseline: localized linear moments plus the entanglement
/// with unconditioned modes `q⋆ < q < k`, `(2g²/k³)·ln(k/q⋆)/(4π²)`.
/// Returns `(p₀, P)` with `P = k³/(2(kτ)²)` and `p₀P` equal to the localized
/// determinant plus the unconditioned contribution.
pub fn inflation_baseline(
    spec: &WindowSpec,
    tau: f64,
    coupling: &Coupling,
    q_star: f64,
) -> Result<(f64, f64)> {
    let k = spec.k_magnitude();
    let epoch = Epoch::Inflation(InflationEpoch::new(1.0, tau.min(-f64::MIN_POSITIVE))?);
    let loc = localized_variances(spec, &epoch, tau)?;
    let kt = k * tau;
    let pi2 = k.powi(3) / (2.0 * kt * kt);
    let unconditioned = 2.0 * coupling.g * coupling.g / k.powi(3) * scale_invariant_band(q_star, k);
    Ok((loc.phi2 * loc.pi2 / pi2 + unconditioned, pi2))
}

/// Conditional moments during inflation on superhorizon scales:
/// `⟨ΦΠ⟩ = (g/kτ)φ_σ`, `⟨Φ²⟩ = (2g²/k³)(φ²)_σ + baseline`, `⟨Π²⟩ = k³/(2(kτ)²)`.
pub fn conditional_moments_inflation(
    spec: &WindowSpec,
    field: &LongWavelengthField,
    tau: f64,
    coupling: &Coupling,
) -> Result<ConditionalMoments> {
    let (p0, pi2) = inflation_baseline(spec, tau, coupling, field.q_star)?;
    conditional_moments_inflation_with_baseline(spec, field, tau, coupling, (p0, pi2))
}

/// As [`conditional_moments_inflation`] with a precomputed baseline.
pub fn conditional_moments_inflation_with_baseline(
    spec: &WindowSpec,
    field: &LongWavelengthField,
    tau: f64,
    coupling: &Coupling,
    baseline: (f64, f64),
) -> Result<ConditionalMoments> {
    coupling.validate()?;
    if !(tau < 0.0) {
        return Err(domain("inflationary time must be negative"));
    }
    let k = spec.k_magnitude();
    if (k * tau).abs() > 0.1 {
        log::warn!(
            "inflationary conditional moments outside |k tau| << 1: {}",
            (k * tau).abs()
        );
    }
    let coeffs: Vec<_> = field
        .coefficients(spec.x0, |_| 1.0)
        .into_iter()
        .filter(|(q, _)| dot(*q, *q) < field.q_star * field.q_star)
        .collect();
    let psi = sum_linear(&coeffs, spec.sigma);
    let s = smoothed_square(&coeffs, spec.sigma);
    let context = MomentContext {
        spec: *spec,
        time: tau,
        coupling: *coupling,
        epoch: EpochKind::Inflation,
    };
    Ok(ConditionalMoments::build(
        baseline.0,
        baseline.1,
        coupling.g / (k * tau),
        psi,
        s - psi * psi,
        context,
    ))
}

/// Closed-form radiation-era moments for a recorded value `phi_khat` and
/// local excess `excess = (φ_k̂²)_σ − φ_k̂²`:
/// `⟨ΦΠ⟩ = ((g+g̃)/4)(kη/(kτ_f)⁴)φ_k̂`,
/// `⟨Φ²⟩ = (kτ_f)⁸/(2k³) + ((g+g̃)²(kη)²/(8k³))·(φ_k̂² + excess)`,
/// `⟨Π²⟩ = k³/(2(kτ_f)⁸)`.
pub fn radiation_moments_closed(
    spec: &WindowSpec,
    eta: f64,
    coupling: &Coupling,
    tau_f: f64,
    phi_khat: f64,
    excess: f64,
) -> Result<ConditionalMoments> {
    coupling.validate()?;
    if !(eta > 0.0 && tau_f < 0.0) {
        return Err(domain("need eta > 0 and tau_f < 0"));
    }
    let k = spec.k_magnitude();
    let x = k * tau_f;
    if k * eta < 5.0 || spec.sigma > 0.1 * eta || x.abs() > 0.1 {
        log::warn!(
            "radiation conditional moments outside k eta >> 1, sigma << eta, |k tau_f| << 1"
        );
    }
    let x8 = x.powi(8);
    let context = MomentContext {
        spec: *spec,
        time: eta,
        coupling: *coupling,
        epoch: EpochKind::Radiation,
    };
    Ok(ConditionalMoments::build(
        x8 / (2.0 * k.powi(3)),
        k.powi(3) / (2.0 * x8),
        0.25 * coupling.sum() * k * eta / x.powi(4),
        phi_khat,
        excess,
        context,
    ))
}

/// Conditional moments of a localized mode in the radiation era.
///
/// Modes above `q⋆` are not conditioned on; their contribution
/// `∫_{q>q⋆}(1/2q³)(π/qη)² = 1/(8q⋆²η²)` is added to the excess.
pub fn conditional_moments_radiation(
    spec: &WindowSpec,
    field: &LongWavelengthField,
    eta: f64,
    coupling: &Coupling,
    tau_f: f64,
) -> Result<ConditionalMoments> {
    let k_hat = spec.direction()?;
    let (psi, s) = windowed_directional_moments(field, spec.x0, k_hat, eta, spec.sigma)?;
    let tail = 1.0 / (8.0 * (field.q_star * eta).powi(2));
    radiation_moments_closed(spec, eta, coupling, tau_f, psi, s - psi * psi + tail)
}

/// `(g + g̃)kη ≥ (kτ_f)⁴`: the mode is squeezed and entangled enough to
/// carry at least one bit about the background.
pub fn records_condition(k: f64, eta: f64, coupling: &Coupling, tau_f: f64) -> bool {
    coupling.sum() * k * eta >= (k * tau_f).powi(4)
}

/// `(g+g̃)^{1/4}·a_f/a_i ≥ threshold` with `a_f/a_i = 1/|q_min τ_f|`.
pub fn global_records_condition(
    coupling: &Coupling,
    q_min: f64,
    tau_f: f64,
    threshold: f64,
) -> bool {
    let s = coupling.sum();
    s > 0.0 && s.powf(0.25) / (q_min * tau_f).abs() >= threshold
}

/// True while the normalized three-point amplitude `(|g|+|g̃|)·kη` stays
/// below one, with an optional safety factor.
pub fn perturbativity_flag(k: f64, eta: f64, coupling: &Coupling) -> bool {
    perturbativity_flag_with_safety(k, eta, coupling, PERTURBATIVITY_SAFETY)
}

pub fn perturbativity_flag_with_safety(k: f64, eta: f64, coupling: &Coupling, safety: f64) -> bool {
    safety * (coupling.g.abs() + coupling.g_tilde.abs()) * k * eta < 1.0
}

/// Smallest shift in the recorded variable at which the localized mode
/// overlap falls below `threshold`, found by a geometric sweep followed by
/// bisection.
pub fn precision_by_sweep(m: &ConditionalMoments, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(domain("threshold must lie in (0, 1)"));
    }
    if m.coefficient == 0.0 {
        return Ok(f64::INFINITY);
    }
    let overlap = |d: f64| conditional_mode_overlap(m, &m.shifted(d));
    let mut hi = 1e-12 * (1.0 + m.recorded.abs());
    let mut lo = 0.0;
    while overlap(hi)? > threshold {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if overlap(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(hi)
}

/// `(Δ, overlap)` table of the localized-mode overlap against a shifted background.
pub fn overlap_sweep(m: &ConditionalMoments, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    deltas
        .iter()
        .map(|&d| Ok((d, conditional_mode_overlap(m, &m.shifted(d))?)))
        .collect()
}

/// Mean, standard error and range of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl EnsembleStats {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n,
        }
    }
}

/// Mixedness of a typical background, `⟨det − p₀P⟩/⟨⟨Φ²⟩⟨Π²⟩ − p₀P⟩` over an
/// ensemble, with a delta-method standard error. Individual ratios are
/// dominated by the rare backgrounds with `φ_k̂ ≈ 0`, where the mode records
/// nothing; the ratio of means weights backgrounds by their size.
pub fn typical_mixedness(moments: &[ConditionalMoments]) -> EnsembleStats {
    let n = moments.len();
    let num: Vec<f64> = moments.iter().map(|m| m.excess).collect();
    let den: Vec<f64> = moments
        .iter()
        .map(|m| m.excess + m.recorded * m.recorded)
        .collect();
    let sn = EnsembleStats::from_samples(&num);
    let sd = EnsembleStats::from_samples(&den);
    let r = sn.mean / sd.mean;
    let resid: Vec<f64> = num.iter().zip(&den).map(|(a, b)| a - r * b).collect();
    let se = EnsembleStats::from_samples(&resid).std_err / sd.mean;
    let ratios: Vec<f64> = moments.iter().map(mixedness_ratio).collect();
    let single = EnsembleStats::from_samples(&ratios);
    EnsembleStats {
        mean: r,
        std_err: se,
        min: single.min,
        max: single.max,
        n,
    }
}

/// Outcome of a record assessment for one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordAssessment {
    /// Resolvable shift `Δφ_k̂` (ensemble mean), infinite without a record.
    pub precision: f64,
    pub precision_stats: EnsembleStats,
    /// `precision/(σ/η)`, the fitted constant in `Δφ ∼ σ/η`.
    pub precision_constant: f64,
    /// Number of disjoint EPR region pairs, `2π(η/σ)²`, when the records
    /// condition and the disjointness hierarchy hold.
    pub redundancy_estimate: f64,
    pub forms_record: bool,
    pub perturbative: bool,
    pub mixedness: EnsembleStats,
}

/// Assesses records in the window `spec` at time `eta` over an ensemble of backgrounds.
///
/// `forms_record` is the records condition; `perturbative` is reported
/// alongside it and does not gate it.
pub fn record_precision(
    spec: &WindowSpec,
    eta: f64,
    coupling: &Coupling,
    tau_f: f64,
    fields: &[LongWavelengthField],
) -> Result<RecordAssessment> {
    if fields.is_empty() {
        return Err(domain("record assessment needs at least one background"));
    }
    let k = spec.k_magnitude();
    let moments = fields
        .par_iter()
        .map(|f| conditional_moments_radiation(spec, f, eta, coupling, tau_f))
        .collect::<Result<Vec<_>>>()?;
    let mixedness = typical_mixedness(&moments);
    let perturbative = perturbativity_flag(k, eta, coupling);
    let forms_record = records_condition(k, eta, coupling, tau_f);
    let sigma_eta = spec.sigma / eta;
    if coupling.sum() == 0.0 {
        let inf = EnsembleStats {
            mean: f64::INFINITY,
            std_err: 0.0,
            min: f64::INFINITY,
            max: f64::INFINITY,
            n: fields.len(),
        };
        return Ok(RecordAssessment {
            precision: f64::INFINITY,
            precision_stats: inf,
            precision_constant: f64::INFINITY,
            redundancy_estimate: 0.0,
            forms_record: false,
            perturbative,
            mixedness,
        });
    }
    let precisions = moments
        .par_iter()
        .map(|m| precision_by_sweep(m, DISTINGUISHABLE_OVERLAP))
        .collect::<Result<Vec<_>>>()?;
    let stats = EnsembleStats::from_samples(&precisions);
    let redundancy_estimate = if !records_condition(k, eta, coupling, tau_f) {
        0.0
    } else if disjointness_hierarchy(k, k * sigma_eta, spec.sigma, eta) {
        2.0 * PI / (sigma_eta * sigma_eta)
    } else {
        1.0
    };
    Ok(RecordAssessment {
        precision: stats.mean,
        precision_stats: stats,
        precision_constant: stats.mean / sigma_eta,
        redundancy_estimate,
        forms_record,
        perturbative,
        mixedness,
    })
}

/// Per-seed ratio of the conditioned determinant to the unconditioned one
/// during inflation; the unconditioned state has `⟨Φ²⟩ = p₀ + (D²/P)⟨S⟩`
/// with the ensemble mean `⟨S⟩ = ln(q⋆/q_min)/(4π²)`.
pub fn inflation_determinant_ratios(
    spec: &WindowSpec,
    tau: f64,
    coupling: &Coupling,
    fields: &[LongWavelengthField],
) -> Result<Vec<f64>> {
    let Some(first) = fields.first() else {
        return Ok(Vec::new());
    };
    let baseline = inflation_baseline(spec, tau, coupling, first.q_star)?;
    fields
        .par_iter()
        .map(|f| {
            if f.q_star != first.q_star || f.q_min != first.q_min {
                return Err(domain("ensemble members must share q_min and q_star"));
            }
            let m = conditional_moments_inflation_with_baseline(spec, f, tau, coupling, baseline)?;
            let mean_s = scale_invariant_band(f.q_min, f.q_star);
            let unconditioned = m.base_phi2 * m.pi2 + m.coefficient * m.coefficient * mean_s;
            Ok(m.determinant() / unconditioned)
        })
        .collect()
}

/// Samples `n_seeds` backgrounds with seeds `base_seed, base_seed+1, …`.
pub fn sample_ensemble(
    q_min: f64,
    q_star: f64,
    n_modes: usize,
    base_seed: u64,
    n_seeds: usize,
) -> Result<Vec<LongWavelengthField>> {
    (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| sample_long_field(q_min, q_star, n_modes, base_seed.wrapping_add(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_field() -> LongWavelengthField {
        sample_long_field(1e-2, 1.0, 16, 1).unwrap().scaled(0.0)
    }

    fn single_mode(q: Vec3, amp: Complex64) -> LongWavelengthField {
        LongWavelengthField {
            q_min: 1e-3,
            q_star: 1e3,
            seed: 0,
            modes: vec![LongMode {
                q,
                amplitude: amp,
                weight: 1.0,
            }],
        }
    }

    #[test]
    fn sampling_is_deterministic_and_validated() {
        let a = sample_long_field(1e-3, 1.0, 32, 9).unwrap();
        let b = sample_long_field(1e-3, 1.0, 32, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_long_field(1e-3, 1.0, 32, 10).unwrap());
        assert!(sample_long_field(1.0, 1.0, 32, 0).is_err());
        assert!(sample_long_field(1e-3, 1.0, 7, 0).is_err());
    }

    #[test]
    fn per_mode_variance_is_scale_invariant() {
        let fields = sample_ensemble(1e-2, 10.0, 8, 100, 1250).unwrap();
        let xs: Vec<f64> = fields
            .iter()
            .flat_map(|f| {
                f.modes
                    .iter()
                    .map(|m| m.amplitude.norm_sqr() * 2.0 * dot(m.q, m.q).powf(1.5))
            })
            .collect();
        let s = EnsembleStats::from_samples(&xs);
        assert_eq!(s.n, 10_000);
        assert!((s.mean - 1.0).abs() < 0.05, "{s:?}");
    }

    #[test]
    fn zero_field_gives_zero() {
        let f = zero_field();
        assert_eq!(smoothed_field(&f, [0.1, 0.2, 0.3], 1.0), 0.0);
        assert_eq!(smoothed_squared_field(&f, [0.1, 0.2, 0.3], 1.0, 1.0), 0.0);
        assert_eq!(
            directional_smoothed_field(&f, [0.0; 3], [1.0, 0.0, 0.0], 3.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn short_modes_are_suppressed_by_the_envelope() {
        let f = single_mode([8.0, 0.0, 0.0], Complex64::new(0.3, 0.1));
        let raw = f.value([0.0; 3]);
        let sm = smoothed_field(&f, [0.0; 3], 1.0);
        assert!((sm / raw - (-16.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn smoothed_square_matches_position_space() {
        // single mode pair ±q along x: square the field on a line, then smooth
        // with the kernel (πσ²)^{-1/2} e^{−y²/σ²} whose transform is e^{−σ²p²/4}
        let q = 1.3;
        let f = single_mode([q, 0.0, 0.0], Complex64::new(0.4, -0.7));
        let (sigma, x0) = (0.8, 0.37);
        let want = smoothed_squared_field(&f, [x0, 0.0, 0.0], sigma, 10.0);
        let r = integrate(
            |y| {
                let v = f.value([x0 + y, 0.0, 0.0]);
                v * v * (-y * y / (sigma * sigma)).exp() / (PI.sqrt() * sigma)
            },
            -12.0 * sigma,
            12.0 * sigma,
            QuadOptions::default(),
        )
        .unwrap();
        assert!(
            (want - r.value).abs() < 1e-10 * r.value.abs(),
            "{want} vs {}",
            r.value
        );
        // the zero-momentum part is 2|φ_q|²
        let amp2 = 2.0 * f.modes[0].amplitude.norm_sqr();
        let far = smoothed_squared_field(&f, [x0, 0.0, 0.0], 50.0, 10.0);
        assert!((far - amp2).abs() < 1e-12);
    }

    #[test]
    fn smoothed_variance_matches_quadrature() {
        let (qmin, qstar, sigma) = (1e-2, 10.0, 1.0);
        let fields = sample_ensemble(qmin, qstar, 24, 7, 10_000).unwrap();
        let vals: Vec<f64> = fields
            .iter()
            .map(|f| smoothed_field(f, [0.0; 3], sigma).powi(2))
            .collect();
        let s = EnsembleStats::from_samples(&vals);
        let want = integrate(
            |lnq| {
                let q = lnq.exp();
                (-0.5 * sigma * sigma * q * q).exp() / (4.0 * PI * PI)
            },
            qmin.ln(),
            qstar.ln(),
            QuadOptions::default(),
        )
        .unwrap()
        .value;
        assert!((s.mean / want - 1.0).abs() < 0.05, "{} vs {want}", s.mean);
    }

    #[test]
    fn smoothed_square_mean_grows_logarithmically() {
        for qstar in [1.0, 100.0] {
            let fields = sample_ensemble(1e-2, qstar, 16, 3, 2000).unwrap();
            let vals: Vec<f64> = fields
                .iter()
                .map(|f| smoothed_squared_field(f, [0.0; 3], 1.0, qstar))
                .collect();
            let s = EnsembleStats::from_samples(&vals);
            let want = scale_invariant_band(1e-2, qstar);
            assert!((s.mean - want).abs() < 4.0 * s.std_err, "{s:?} vs {want}");
        }
    }

    #[test]
    fn directional_field_limits() {
        let f = sample_long_field(1e-3, 1e-2, 16, 4).unwrap();
        let x = [0.2, -0.1, 0.4];
        let khat = [0.0, 0.6, 0.8];
        // qη ≪ 1: the bracket tends to 2
        let small = directional_smoothed_field(&f, x, khat, 1e-3).unwrap();
        assert!((small / (2.0 * f.value(x)) - 1.0).abs() < 1e-9);
        // qη = 10³ off axis: π/(qη) within 10⁻³
        let q = 2.0;
        let g = single_mode([q * 0.6, q * 0.8, 0.0], Complex64::new(1.0, 0.0));
        let eta = 1e3 / q;
        let d = directional_smoothed_field(&g, [0.0; 3], [1.0, 0.0, 0.0], eta).unwrap();
        assert!((d / (PI / (q * eta) * g.value([0.0; 3])) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn directional_variance_slope() {
        let eta = 1.0;
        let v1 = directional_variance(1e-4, 10.0, eta).unwrap();
        let v2 = directional_variance(1e-3, 10.0, eta).unwrap();
        // each decade of superhorizon modes adds 4 ln10/(4π²)
        let slope = (v1 - v2) / 10f64.ln();
        assert!((slope * PI * PI - 1.0).abs() < 1e-3, "{slope}");
    }

    #[test]
    fn inflation_moments_basics() {
        let spec = WindowSpec::new([0.0; 3], [0.0, 0.0, 1e3], 1.0).unwrap();
        let tau = -1e-6;
        let f = sample_long_field(1e-2, 10.0, 32, 5).unwrap();
        let m0 = conditional_moments_inflation(&spec, &f, tau, &Coupling::zero()).unwrap();
        assert_eq!(m0.cross, 0.0);
        let k: f64 = 1e3;
        assert!((m0.pi2 / (k.powi(3) / (2.0 * (k * tau).powi(2))) - 1.0).abs() < 1e-14);
        let c = Coupling::new(1e-2, 0.0).unwrap();
        let m1 = conditional_moments_inflation(&spec, &f, tau, &c).unwrap();
        let m2 = conditional_moments_inflation(&spec, &f, 2.0 * tau, &c).unwrap();
        assert!((m1.cross / m2.cross - 2.0).abs() < 1e-12);
        assert!(
            (m1.cross - 1e-2 / (k * tau) * smoothed_field(&f, [0.0; 3], 1.0)).abs()
                < 1e-9 * m1.cross.abs()
        );
        assert!(m1.determinant() >= 0.25 * (1.0 - 1e-8));
        assert!(((m1.naive_determinant() - m1.determinant()) / m1.determinant()).abs() < 1e-6);
    }

    #[test]
    fn fourier_mode_oracle_for_inflationary_cross() {
        // a constant long mode shifts Im A by (1 − 2gφ_L); the induced cross
        // moment in the unshifted principal frame is g φ_L/(kτ) in magnitude
        use crate::gaussian::{
            closed_form_a_inflation, rotated_cross_moment, rotated_frame, shifted_phase_a,
            two_point_from_a, FrameConvention,
        };
        let (k, tau, g, phi_l) = (2.0, -1e-4, 1e-3, 0.3);
        let conv = FrameConvention::Inflation { k };
        let a = closed_form_a_inflation(k, tau).unwrap();
        let theta = rotated_frame(&two_point_from_a(a).unwrap(), conv)
            .unwrap()
            .theta;
        let tp = two_point_from_a(shifted_phase_a(a, g, phi_l).unwrap()).unwrap();
        let cross = rotated_cross_moment(&tp, conv, theta).unwrap();
        assert!(
            (cross.abs() / (g * phi_l / (k * tau)).abs() - 1.0).abs() < 1e-3,
            "{cross}"
        );
    }

    #[test]
    fn radiation_closed_form_example_and_cancellation() {
        let k = 10.0;
        let spec = WindowSpec::new([0.0; 3], [k, 0.0, 0.0], 1.0).unwrap();
        let eta = 10.0;
        let c = Coupling::new(0.5, 0.5).unwrap();
        let m = radiation_moments_closed(&spec, eta, &c, -0.1 / k, 1.0, 0.0).unwrap();
        assert!((m.cross / 2.5e5 - 1.0).abs() < 1e-12);
        let lead = (m.phi2 - m.base_phi2) * m.pi2;
        assert!((lead / (m.cross * m.cross) - 1.0).abs() < 1e-10);
        assert!((m.determinant() - 0.25).abs() < 1e-15);
        let z = radiation_moments_closed(
            &spec,
            eta,
            &Coupling::new(0.3, -0.3).unwrap(),
            -0.1 / k,
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(z.cross, 0.0);
        assert_eq!(z.phi2, z.base_phi2);
        assert_eq!(mixedness_ratio(&z), 1.0);
    }

    #[test]
    fn sweep_matches_closed_form_threshold() {
        let spec = WindowSpec::new([0.0; 3], [10.0, 0.0, 0.0], 1.0).unwrap();
        let m = radiation_moments_closed(
            &spec,
            100.0,
            &Coupling::new(0.5, 0.5).unwrap(),
            -0.01,
            0.7,
            1e-4,
        )
        .unwrap();
        let d = precision_by_sweep(&m, 0.01).unwrap();
        // complex-mode overlap 1/(1 + D²Δ²/(4 det))
        let want = 2.0 * (m.determinant() * 99.0).sqrt() / m.coefficient.abs();
        assert!((d / want - 1.0).abs() < 1e-9, "{d} vs {want}");
        let table = overlap_sweep(&m, &[0.0, d, 2.0 * d]).unwrap();
        assert!((table[0].1 - 1.0).abs() < 1e-15);
        assert!(table[2].1 < table[1].1);
    }

    #[test]
    fn conditions_and_flags() {
        let c = Coupling::new(1e-3, 0.0).unwrap();
        assert!(perturbativity_flag(1.0, 10.0, &c));
        assert!(!perturbativity_flag(1.0, 1e4, &c));
        assert!(perturbativity_flag(1.0, 1e12, &Coupling::zero()));
        let s = Coupling::new(5e-5, 5e-5).unwrap();
        assert!(global_records_condition(
            &s,
            1e-3,
            -1.0,
            GLOBAL_RECORDS_THRESHOLD
        ));
        assert!(!global_records_condition(
            &Coupling::zero(),
            1e-3,
            -1.0,
            GLOBAL_RECORDS_THRESHOLD
        ));
        assert!(records_condition(
            1.0,
            100.0,
            &Coupling::new(0.5, 0.5).unwrap(),
            -0.1
        ));
        assert!(!records_condition(
            1.0,
            100.0,
            &Coupling::new(0.5, -0.5).unwrap(),
            -0.1
        ));
    }

    #[test]
    fn zero_coupling_has_no_record() {
        let spec = WindowSpec::new([0.0; 3], [10.0, 0.0, 0.0], 1.0).unwrap();
        let fields = sample_ensemble(1e-4, 10.0, 16, 0, 4).unwrap();
        let a = record_precision(
            &spec,
            100.0,
            &Coupling::new(0.2, -0.2).unwrap(),
            -0.01,
            &fields,
        )
        .unwrap();
        assert!(!a.forms_record);
        assert!(a.precision.is_infinite());
    }
}
