//! Continuous pure decoherence of one degree of freedom: the Lindblad
//! closed form and generator, redundancy and fragment overlaps, branch
//! entropy, and second moments of quantum Brownian motion.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{dopri5, OdeOptions};

/// Decoherence rate `D`, elapsed time `T`, optional mass and potential wavenumber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureDecoherenceModel {
    pub d: f64,
    pub t: f64,
    pub mass: Option<f64>,
    pub k_pot: f64,
}

impl PureDecoherenceModel {
    pub fn new(d: f64, t: f64, mass: Option<f64>, k_pot: f64) -> Result<Self> {
        let m = Self { d, t, mass, k_pot };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(domain("decoherence rate D must be positive"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(domain("elapsed time T must be positive"));
        }
        if let Some(m) = self.mass {
            if !(m > 0.0 && m.is_finite()) {
                return Err(domain("mass must be positive"));
            }
        }
        if !(self.k_pot >= 0.0 && self.k_pot.is_finite()) {
            return Err(domain("potential wavenumber must be non-negative"));
        }
        Ok(())
    }

    /// `ℓ = 1/√(DT)`.
    pub fn decoherence_length(&self) -> f64 {
        1.0 / (self.d * self.t).sqrt()
    }

    /// `ℓ̃ = (Dm)^{−1/4}`, infinite without a mass.
    pub fn kinetic_length(&self) -> f64 {
        self.mass
            .map_or(f64::INFINITY, |m| (self.d * m).powf(-0.25))
    }

    /// `t̃ = 12^{1/4}√(m/D)`, infinite without a mass.
    pub fn kinetic_time(&self) -> f64 {
        self.mass
            .map_or(f64::INFINITY, |m| 12f64.powf(0.25) * (m / self.d).sqrt())
    }
}

/// Density matrix sampled on a uniform grid of `ν` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub nu: Vec<f64>,
    /// Row-major `ρ(ν_i, ν_j)`.
    pub rho: Vec<Complex64>,
}

impl DensityGrid {
    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.rho[i * self.dim() + j]
    }

    /// Pure state `ψ(ν_i)ψ*(ν_j)`, normalized to unit discrete trace.
    pub fn pure(nu: Vec<f64>, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != nu.len() || nu.is_empty() {
            return Err(domain("amplitudes must match the grid"));
        }
        let n2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if !(n2 > 0.0) {
            return Err(domain("state is zero"));
        }
        let n = nu.len();
        let mut rho = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                rho[i * n + j] = psi[i] * psi[j].conj() / n2;
            }
        }
        Ok(Self { nu, rho })
    }

    /// Checks Hermiticity and unit trace.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.rho.len() != n * n || n == 0 {
            return Err(domain("density matrix does not match the grid"));
        }
        let scale = self
            .rho
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        for i in 0..n {
            for j in i..n {
                if (self.at(i, j) - self.at(j, i).conj()).norm() > 1e-12 * scale {
                    return Err(domain("density matrix is not Hermitian"));
                }
            }
        }
        let tr: Complex64 = (0..n).map(|i| self.at(i, i)).sum();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(domain(format!("density matrix trace is {tr}, expected 1")));
        }
        Ok(())
    }
}

/// `ρ(ν, ν′) = ρ₀(ν, ν′)·e^{−(ν−ν′)²/(2ℓ²)}` with `ℓ = 1/√(DT)`.
pub fn lindblad_decohere(rho0: &DensityGrid, d: f64, t: f64) -> Result<DensityGrid> {
    rho0.validate()?;
    let model = PureDecoherenceModel::new(d, t, None, 0.0)?;
    let l2 = model.decoherence_length().powi(2);
    let n = rho0.dim();
    let mut out = rho0.clone();
    for i in 0..n {
        for j in 0..n {
            let dn = rho0.nu[i] - rho0.nu[j];
            out.rho[i * n + j] *= (-dn * dn / (2.0 * l2)).exp();
        }
    }
    Ok(out)
}

/// Integrates `∂_tρ = D(ν̂ρν̂ − ½{ν̂², ρ})` with an adaptive Runge–Kutta
/// scheme, applying `ν̂` as an operator on the grid.
pub fn lindblad_evolve(
    rho0: &DensityGrid,
    d: f64,
    t: f64,
    opts: OdeOptions,
) -> Result<DensityGrid> {
    rho0.validate()?;
    PureDecoherenceModel::new(d, t, None, 0.0)?;
    let n = rho0.dim();
    let nu = rho0.nu.clone();
    let (y, _) = dopri5(
        |_, r, out| {
            // ν̂ρν̂ − ½(ν̂²ρ + ρν̂²) with ν̂ diagonal on the grid
            for i in 0..n {
                for j in 0..n {
                    let v = r[i * n + j];
                    out[i * n + j] =
                        d * (nu[i] * v * nu[j] - 0.5 * (nu[i] * nu[i] * v + v * nu[j] * nu[j]));
                }
            }
        },
        0.0,
        t,
        &rho0.rho,
        opts,
    )?;
    Ok(DensityGrid {
        nu: rho0.nu.clone(),
        rho: y,
    })
}

/// Redundancy at precision `δν`: `δν²DT` without kinetics, or
/// `(δν/ℓ̃)²(δt/t̃)` with a mass (`δt` defaults to `t̃`).
pub fn redundancy_function(
    delta_nu: f64,
    d: f64,
    t: f64,
    mass: Option<f64>,
    delta_t: Option<f64>,
) -> Result<f64> {
    if !(delta_nu > 0.0) {
        return Err(domain("delta_nu must be positive"));
    }
    let model = PureDecoherenceModel::new(d, t, mass, 0.0)?;
    match mass {
        None => Ok(delta_nu * delta_nu * d * t),
        Some(_) => {
            let tt = model.kinetic_time();
            let dt = delta_t.unwrap_or(tt);
            if !(dt > 0.0) {
                return Err(domain("delta_t must be positive"));
            }
            Ok((delta_nu / model.kinetic_length()).powi(2) * dt / tt)
        }
    }
}

/// Overlap of the states of a `1/R` fragment conditional on `ν` and `ν′`,
/// normalized to one at coincidence: `e^{−(ν−ν′)²/(Rℓ²)}`.
pub fn fragment_overlap(nu: f64, nu_prime: f64, r: f64, ell: f64) -> Result<f64> {
    if !(r >= 1.0) || !(ell > 0.0) {
        return Err(domain("need R >= 1 and ell > 0"));
    }
    let dn = nu - nu_prime;
    Ok((-dn * dn / (r * ell * ell)).exp())
}

/// The same overlap from an explicit model of `n_env` environment pieces,
/// each a Gaussian wavefunction on a `y` grid with `⟨y²⟩ = D` that picks up
/// the phase `e^{iνy√Δt}` during its interaction window `Δt = T/n_env`.
/// Returns `|Π_{i∈F}⟨E_i(ν)|E_i(ν′)⟩|²` for the first `n_fragment` pieces.
pub fn fragment_overlap_explicit(
    nu: f64,
    nu_prime: f64,
    d: f64,
    t: f64,
    n_env: usize,
    n_fragment: usize,
    grid_points: usize,
) -> Result<f64> {
    PureDecoherenceModel::new(d, t, None, 0.0)?;
    if n_fragment == 0 || n_fragment > n_env || grid_points < 16 {
        return Err(domain(
            "need 0 < n_fragment <= n_env and at least 16 grid points",
        ));
    }
    let dt = t / n_env as f64;
    let coupling = dt.sqrt(); // g Δt with g = Δt^{-1/2}
    let sd = d.sqrt();
    let half = 12.0 * sd;
    let h = 2.0 * half / (grid_points - 1) as f64;
    let mut amp = Complex64::new(1.0, 0.0);
    for _ in 0..n_fragment {
        // ⟨E(ν)|E(ν′)⟩ = Σ |ψ(y)|² e^{i(ν′−ν) g Δt y} h
        let mut s = Complex64::default();
        let mut norm = 0.0;
        for i in 0..grid_points {
            let y = -half + h * i as f64;
            let w = (-y * y / (2.0 * d)).exp();
            norm += w * h;
            s += Complex64::from_polar(w * h, (nu_prime - nu) * coupling * y);
        }
        amp *= s / norm;
    }
    Ok(amp.norm_sqr())
}

/// `S = ∫|ψ(ν)|² ln(δν/|ψ(ν)|²) dν` on a uniform grid with spacing `h`.
pub fn branch_entropy(psi: &[Complex64], h: f64, delta_nu: f64) -> Result<f64> {
    if !(delta_nu > 0.0 && h > 0.0) {
        return Err(domain("delta_nu and grid spacing must be positive"));
    }
    let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * h;
    if (total - 1.0).abs() > 1e-8 {
        return Err(domain(format!("|psi|^2 integrates to {total}, expected 1")));
    }
    Ok(psi
        .iter()
        .map(|a| {
            let p = a.norm_sqr();
            if p > 0.0 {
                p * (delta_nu / p).ln() * h
            } else {
                0.0
            }
        })
        .sum())
}

/// `(⟨ν²⟩, ⟨μ²⟩, ⟨{ν,μ}⟩/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QbmMoments {
    pub nu2: f64,
    pub mu2: f64,
    pub sym: f64,
}

impl QbmMoments {
    pub fn determinant(&self) -> f64 {
        self.nu2 * self.mu2 - self.sym * self.sym
    }
}

/// Second moments under `∂_tρ = −i[μ²/2m + k²ν²/2, ρ] − D[ν,[ν,ρ]]`:
/// `ν²′ = 2s/m`, `s′ = μ²/m − k²ν²`, `μ²′ = −2k²s + 2D`. Without a mass the
/// kinetic term is absent.
pub fn qbm_moments(
    model: &PureDecoherenceModel,
    initial: QbmMoments,
    t: f64,
) -> Result<QbmMoments> {
    model.validate()?;
    if !(initial.nu2 > 0.0 && initial.mu2 > 0.0 && initial.determinant() > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("{initial:?}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain("time must be non-negative"));
    }
    let inv_m = model.mass.map_or(0.0, |m| 1.0 / m);
    let k2 = model.k_pot * model.k_pot;
    let d = model.d;
    let y0 = [
        Complex64::new(initial.nu2, 0.0),
        Complex64::new(initial.mu2, 0.0),
        Complex64::new(initial.sym, 0.0),
    ];
    let (y, _) = dopri5(
        |_, y, out| {
            out[0] = 2.0 * y[2] * inv_m;
            out[1] = -2.0 * k2 * y[2] + 2.0 * d;
            out[2] = y[1] * inv_m - k2 * y[0];
        },
        0.0,
        t,
        &y0,
        OdeOptions {
            rtol: 1e-11,
            atol: 1e-14,
            max_steps: 2_000_000,
        },
    )?;
    Ok(QbmMoments {
        nu2: y[0].re,
        mu2: y[1].re,
        sym: y[2].re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, half: f64) -> Vec<f64> {
        (0..n)
            .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn gaussian_state(n: usize) -> DensityGrid {
        let nu = grid(n, 3.0);
        let psi: Vec<Complex64> = nu
            .iter()
            .map(|&x| Complex64::from_polar((-x * x / 2.0).exp(), 0.7 * x))
            .collect();
        DensityGrid::pure(nu, &psi).unwrap()
    }

    #[test]
    fn closed_form_suppression() {
        let s = gaussian_state(128);
        let out = lindblad_decohere(&s, 1.0, 1.0).unwrap();
        let n = s.dim();
        for i in 0..n {
            assert_eq!(out.at(i, i), s.at(i, i));
        }
        // find a pair separated by ~1 and check e^{-Δ²/2}
        let (i, j) = (10, 10 + 21);
        let dn = s.nu[j] - s.nu[i];
        let ratio = (out.at(i, j) / s.at(i, j)).re;
        assert!((ratio - (-dn * dn / 2.0).exp()).abs() < 1e-14);
        let one = lindblad_decohere(
            &DensityGrid::pure(vec![0.0, 1.0], &[Complex64::new(1.0, 0.0); 2]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(((one.at(0, 1) / 0.5).re - 0.6065306597126334).abs() < 1e-12);
    }

    #[test]
    fn generator_matches_closed_form_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nu = grid(128, 2.0);
        let psi: Vec<Complex64> = (0..128)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let s = DensityGrid::pure(nu, &psi).unwrap();
        let want = lindblad_decohere(&s, 0.8, 1.5).unwrap();
        let got = lindblad_evolve(
            &s,
            0.8,
            1.5,
            OdeOptions {
                rtol: 1e-10,
                atol: 1e-14,
                max_steps: 100_000,
            },
        )
        .unwrap();
        let err = want
            .rho
            .iter()
            .zip(&got.rho)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn input_validation() {
        let mut s = gaussian_state(8);
        s.rho[1] += Complex64::new(0.1, 0.0);
        assert!(lindblad_decohere(&s, 1.0, 1.0).is_err());
        let mut t = gaussian_state(8);
        for v in &mut t.rho {
            *v *= 2.0;
        }
        assert!(lindblad_decohere(&t, 1.0, 1.0).is_err());
    }

    #[test]
    fn redundancy_examples() {
        assert!((redundancy_function(0.5, 1.0, 100.0, None, None).unwrap() - 25.0).abs() < 1e-12);
        let (d, t): (f64, f64) = (2.0, 3.0);
        let ell = 1.0 / (d * t).sqrt();
        assert!((redundancy_function(ell, d, t, None, None).unwrap() - 1.0).abs() < 1e-12);
        let m = PureDecoherenceModel::new(1.0, 1.0, Some(1.0), 0.0).unwrap();
        assert!((m.kinetic_time() - 1.8612097182041991).abs() < 1e-12);
        assert!((m.kinetic_length() - 1.0).abs() < 1e-15);
        let r =
            redundancy_function(3.0, 1.0, 1.0, Some(1.0), Some(2.0 * m.kinetic_time())).unwrap();
        assert!((r - 18.0).abs() < 1e-12);
    }

    #[test]
    fn fragment_overlap_matches_explicit_model() {
        let (d, t): (f64, f64) = (1.0, 12.0);
        let ell = 1.0 / (d * t).sqrt();
        for r in [1.0, 2.0, 3.0, 7.5] {
            let sep = ell * f64::sqrt(r);
            assert!(
                (fragment_overlap(0.3, 0.3 + sep, r, ell).unwrap() - (-1.0f64).exp()).abs() < 1e-14
            );
        }
        assert_eq!(fragment_overlap(0.2, 0.2, 4.0, ell).unwrap(), 1.0);
        // 12 pieces, a third of them
        for dn in [0.1, 0.3, 0.5] {
            let exact = fragment_overlap_explicit(0.0, dn, d, t, 12, 4, 801).unwrap();
            let closed = fragment_overlap(0.0, dn, 3.0, ell).unwrap();
            assert!((exact - closed).abs() < 1e-3, "{exact} vs {closed}");
        }
    }

    #[test]
    fn entropy_properties() {
        let h = 0.01;
        let l: f64 = 2.0;
        let n = (l / h) as usize;
        let uniform = vec![Complex64::new((1.0 / l).sqrt(), 0.0); n];
        let s = branch_entropy(&uniform, h, 0.1).unwrap();
        assert!((s - (0.1 * l).ln()).abs() < 1e-10);
        let s2 = branch_entropy(&uniform, h, 0.2).unwrap();
        assert!((s2 - s - 2f64.ln()).abs() < 1e-12);
        let nu = grid(2001, 10.0);
        let hh = nu[1] - nu[0];
        let gauss = |shift: f64| -> Vec<Complex64> {
            let norm = (std::f64::consts::PI).powf(-0.25);
            nu.iter()
                .map(|&x| Complex64::new(norm * (-(x - shift).powi(2) / 2.0).exp(), 0.0))
                .collect()
        };
        let a = gauss(0.0);
        let mut b = a.clone();
        b.rotate_right(37);
        let sa = branch_entropy(&a, hh, 0.3).unwrap();
        let sb = branch_entropy(&b, hh, 0.3).unwrap();
        assert!((sa - sb).abs() < 1e-10);
        assert!(branch_entropy(&[Complex64::new(1.0, 0.0); 10], 1.0, 1.0).is_err());
    }

    #[test]
    fn qbm_limits() {
        let init = QbmMoments {
            nu2: 0.5,
            mu2: 0.5,
            sym: 0.0,
        };
        let pure = PureDecoherenceModel::new(0.3, 1.0, None, 0.0).unwrap();
        let out = qbm_moments(&pure, init, 2.0).unwrap();
        assert!((out.mu2 - (0.5 + 2.0 * 0.3 * 2.0)).abs() < 1e-10);
        assert!((out.nu2 - 0.5).abs() < 1e-14);
        // closed harmonic evolution conserves the determinant
        let osc = PureDecoherenceModel {
            d: 1e-300,
            t: 1.0,
            mass: Some(1.0),
            k_pot: 2.0,
        };
        let init = QbmMoments {
            nu2: 0.3,
            mu2: 2.0,
            sym: 0.4,
        };
        for t in [0.3, 1.7, 5.0] {
            let m = qbm_moments(&osc, init, t).unwrap();
            assert!((m.determinant() / init.determinant() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dispersion_timescale() {
        // minimum-uncertainty packet decohered to ℓ̃: diffusion (2Dt³/3m²)
        // overtakes ballistic spreading (⟨μ²⟩t²/m²) at t ~ √(m/D)
        let (d, m) = (2.0, 5.0);
        let model = PureDecoherenceModel::new(d, 1.0, Some(m), 0.0).unwrap();
        let lt = model.kinetic_length();
        let init = QbmMoments {
            nu2: lt * lt / 4.0,
            mu2: 1.0 / (lt * lt),
            sym: 0.0,
        };
        let free = PureDecoherenceModel { d: 1e-300, ..model };
        let mut t = 1e-3 * (m / d).sqrt();
        let crossing = loop {
            let with = qbm_moments(&model, init, t).unwrap().nu2;
            let without = qbm_moments(&free, init, t).unwrap().nu2;
            if with - without >= without - init.nu2 {
                break t;
            }
            t *= 1.01;
        };
        let ratio = crossing / (m / d).sqrt();
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}
