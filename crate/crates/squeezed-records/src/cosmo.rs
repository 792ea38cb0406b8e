//! Background cosmology: epochs, scale factors, couplings and gauge maps.
//!
//! Conventions: ħ = 1, unit comoving volume, inflationary conformal time
//! `τ < 0`, radiation-era conformal time `η ≥ 0` measured from the end of
//! inflation at `τ_f`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Quasi-de Sitter inflation, `a(τ) = −1/(Hτ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationEpoch {
    pub hubble_rate: f64,
    pub tau_f: f64,
}

/// Radiation domination glued C¹ onto the end of inflation at `τ_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiationEpoch {
    pub hubble_rate: f64,
    pub tau_f: f64,
}

fn check_background(hubble_rate: f64, tau_f: f64) -> Result<()> {
    if !(hubble_rate.is_finite() && hubble_rate > 0.0) {
        return Err(domain("hubble_rate must be positive"));
    }
    if !(tau_f.is_finite() && tau_f < 0.0) {
        return Err(domain("tau_f must be negative"));
    }
    Ok(())
}

impl InflationEpoch {
    pub fn new(hubble_rate: f64, tau_f: f64) -> Result<Self> {
        check_background(hubble_rate, tau_f)?;
        Ok(Self { hubble_rate, tau_f })
    }

    pub fn radiation(&self) -> RadiationEpoch {
        RadiationEpoch {
            hubble_rate: self.hubble_rate,
            tau_f: self.tau_f,
        }
    }
}

impl RadiationEpoch {
    pub fn new(hubble_rate: f64, tau_f: f64) -> Result<Self> {
        check_background(hubble_rate, tau_f)?;
        Ok(Self { hubble_rate, tau_f })
    }
}

/// Either epoch; times are `τ` for inflation and `η` for radiation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Epoch {
    Inflation(InflationEpoch),
    Radiation(RadiationEpoch),
}

impl Epoch {
    pub fn tau_f(&self) -> f64 {
        match self {
            Epoch::Inflation(e) => e.tau_f,
            Epoch::Radiation(e) => e.tau_f,
        }
    }

    pub fn hubble_rate(&self) -> f64 {
        match self {
            Epoch::Inflation(e) => e.hubble_rate,
            Epoch::Radiation(e) => e.hubble_rate,
        }
    }

    /// Rejects times outside the epoch's domain.
    pub fn check_time(&self, t: f64) -> Result<()> {
        match self {
            Epoch::Inflation(_) if !(t < 0.0 && t.is_finite()) => Err(domain(format!(
                "inflationary time must be negative, got {t}"
            ))),
            Epoch::Radiation(_) if !(t >= 0.0 && t.is_finite()) => Err(domain(format!(
                "radiation-era time must be non-negative, got {t}"
            ))),
            _ => Ok(()),
        }
    }

    /// Scale factor at time `t`.
    pub fn scale_factor(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self {
            Epoch::Inflation(e) => -1.0 / (e.hubble_rate * t),
            Epoch::Radiation(e) => (-1.0 / (e.hubble_rate * e.tau_f)) * (1.0 + t / (-e.tau_f)),
        })
    }

    /// Conformal-time derivative of the scale factor.
    pub fn scale_factor_derivative(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self {
            Epoch::Inflation(e) => 1.0 / (e.hubble_rate * t * t),
            Epoch::Radiation(e) => 1.0 / (e.hubble_rate * e.tau_f * e.tau_f),
        })
    }

    /// `a²H²`, the coefficient multiplying the kinetic term of the mode action.
    /// It is independent of `H`: `1/τ²` during inflation and
    /// `(η − τ_f)²/τ_f⁴` afterwards.
    pub fn pump(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.pump_unchecked(t))
    }

    pub(crate) fn pump_unchecked(&self, t: f64) -> f64 {
        match self {
            Epoch::Inflation(_) => 1.0 / (t * t),
            Epoch::Radiation(e) => {
                let s = t - e.tau_f;
                s * s / e.tau_f.powi(4)
            }
        }
    }
}

/// Scale factor of either epoch.
pub fn scale_factor(epoch: &Epoch, time: f64) -> Result<f64> {
    epoch.scale_factor(time)
}

/// Conformal time at which `|kτ| = 1`.
pub fn horizon_crossing_time(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(domain("wavenumber must be positive"));
    }
    Ok(-1.0 / k)
}

/// Cubic couplings `(g, g̃)` of `a²H²[gφ(∇φ)² + g̃φφ′²]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub g: f64,
    pub g_tilde: f64,
}

impl Coupling {
    pub fn new(g: f64, g_tilde: f64) -> Result<Self> {
        let c = Self { g, g_tilde };
        c.validate()?;
        c.warn_if_large();
        Ok(c)
    }

    pub fn zero() -> Self {
        Self {
            g: 0.0,
            g_tilde: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("g_tilde", self.g_tilde)] {
            if !(v.is_finite() && v.abs() < 1.0) {
                return Err(domain(format!("|{name}| must be below 1, got {v}")));
            }
        }
        Ok(())
    }

    /// Whether either coupling exceeds the validity threshold 0.1.
    pub fn is_large(&self) -> bool {
        self.g.abs() > 0.1 || self.g_tilde.abs() > 0.1
    }

    /// Logs a validity warning when [`Coupling::is_large`].
    pub fn warn_if_large(&self) {
        if self.is_large() {
            log::warn!(
                "coupling (g, g_tilde) = ({}, {}) exceeds 0.1; perturbative results may be unreliable",
                self.g,
                self.g_tilde
            );
        }
    }

    pub fn sum(&self) -> f64 {
        self.g + self.g_tilde
    }
}

/// Field variable whose long-wavelength modulation is mapped onto `(g, g̃)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gauge {
    /// Comoving curvature: kinetic `(1 + 3ζ_L)`, gradient `(1 + ζ_L)`.
    Zeta,
    /// Spatially flat inflaton fluctuation, per unit `δφ_L/M_p`.
    Inflaton { epsilon: f64, planck_mass: f64 },
    /// Kinetic `(1 + c_kin φ_L)` and gradient `(1 + c_grad φ_L)` coefficients.
    Generic { c_kin: f64, c_grad: f64 },
}

/// Couplings from a gauge map plus a note on the field normalization used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMap {
    pub g: f64,
    pub g_tilde: f64,
    pub normalization: String,
}

impl CouplingMap {
    pub fn coupling(&self) -> Coupling {
        Coupling {
            g: self.g,
            g_tilde: self.g_tilde,
        }
    }
}

/// Matches kinetic and gradient coefficients against `(1 + 2g̃φ_L)` and
/// `(1 − 2gφ_L)`.
pub fn gauge_coupling_map(gauge: Gauge) -> Result<CouplingMap> {
    let (c_kin, c_grad, normalization) = match gauge {
        Gauge::Zeta => (3.0, 1.0, "per unit zeta_L".to_string()),
        Gauge::Inflaton {
            epsilon,
            planck_mass,
        } => {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
            }
            if !(planck_mass.is_finite() && planck_mass > 0.0) {
                return Err(domain("planck_mass must be positive"));
            }
            let s = epsilon / (2.0 * epsilon).sqrt();
            (
                -s,
                s,
                format!(
                    "per unit delta_phi_L/M_p with M_p = {planck_mass}; coefficient epsilon/sqrt(2 epsilon) = {s}"
                ),
            )
        }
        Gauge::Generic { c_kin, c_grad } => {
            if !(c_kin.is_finite() && c_grad.is_finite()) {
                return Err(domain("coefficients must be finite"));
            }
            (c_kin, c_grad, "per unit phi_L".to_string())
        }
    };
    Ok(CouplingMap {
        g: -0.5 * c_grad,
        g_tilde: 0.5 * c_kin,
        normalization,
    })
}

/// Wavenumber magnitudes of a momentum-conserving triplet plus `q∥ = q·k̂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTriplet {
    pub k: f64,
    pub k_prime: f64,
    pub q: f64,
    pub q_parallel: f64,
}

impl ModeTriplet {
    pub fn new(k: f64, k_prime: f64, q: f64, q_parallel: f64) -> Result<Self> {
        let t = Self {
            k,
            k_prime,
            q,
            q_parallel,
        };
        t.validate()?;
        Ok(t)
    }

    /// Squeezed triplet with `k′ = |k + q|` fixed by `q` and `q∥`.
    pub fn squeezed(k: f64, q: f64, q_parallel: f64) -> Result<Self> {
        let kp2 = k * k + q * q + 2.0 * k * q_parallel;
        Self::new(k, kp2.max(0.0).sqrt(), q, q_parallel)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            k,
            k_prime,
            q,
            q_parallel,
        } = *self;
        if !(k > 0.0 && k_prime > 0.0 && q >= 0.0) || !(k + k_prime + q + q_parallel).is_finite() {
            return Err(domain("triplet needs k, k' > 0 and q >= 0"));
        }
        if q_parallel.abs() > q * (1.0 + 1e-12) {
            return Err(domain("|q_parallel| must not exceed q"));
        }
        let slack = 1e-12 * (k + k_prime + q);
        if k > k_prime + q + slack || k_prime > k + q + slack || q > k + k_prime + slack {
            return Err(domain("wavenumbers violate the triangle inequality"));
        }
        Ok(())
    }

    pub fn legs(&self) -> [f64; 3] {
        [self.k, self.k_prime, self.q]
    }

    pub fn sum_squares(&self) -> f64 {
        self.k * self.k + self.k_prime * self.k_prime + self.q * self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_factor_anchors() {
        let inf = Epoch::Inflation(InflationEpoch::new(1.0, -0.1).unwrap());
        assert_eq!(inf.scale_factor(-1.0).unwrap(), 1.0);
        let rad = Epoch::Radiation(RadiationEpoch::new(1.0, -0.1).unwrap());
        assert!((rad.scale_factor(0.0).unwrap() - 10.0).abs() < 1e-12);
        assert!(inf.scale_factor(0.5).is_err());
        assert!(rad.scale_factor(-0.5).is_err());
    }

    #[test]
    fn radiation_derivative_matches_finite_difference() {
        let rad = Epoch::Radiation(RadiationEpoch::new(1.0, -0.1).unwrap());
        let h = 1e-6;
        let fd = (rad.scale_factor(h).unwrap() - rad.scale_factor(0.0).unwrap()) / h;
        let exact = rad.scale_factor_derivative(0.0).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn continuity_at_transition() {
        for &(hub, tf) in &[(1.0, -0.1), (2.5, -1e-3), (0.3, -7.0)] {
            let inf = Epoch::Inflation(InflationEpoch::new(hub, tf).unwrap());
            let rad = Epoch::Radiation(RadiationEpoch::new(hub, tf).unwrap());
            let (a1, a2) = (
                inf.scale_factor(tf).unwrap(),
                rad.scale_factor(0.0).unwrap(),
            );
            let (d1, d2) = (
                inf.scale_factor_derivative(tf).unwrap(),
                rad.scale_factor_derivative(0.0).unwrap(),
            );
            assert!(((a1 - a2) / a1).abs() < 1e-12);
            assert!(((d1 - d2) / d1).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_crossing() {
        assert_eq!(horizon_crossing_time(1.0).unwrap(), -1.0);
        assert_eq!(horizon_crossing_time(100.0).unwrap(), -0.01);
        assert_eq!(horizon_crossing_time(0.5).unwrap(), -2.0);
        assert!(horizon_crossing_time(0.0).is_err());
    }

    #[test]
    fn gauge_maps() {
        let z = gauge_coupling_map(Gauge::Zeta).unwrap();
        assert_eq!((z.g, z.g_tilde), (-0.5, 1.5));
        assert_eq!(z.g + z.g_tilde, 1.0);
        let zero = gauge_coupling_map(Gauge::Generic {
            c_kin: 0.0,
            c_grad: 0.0,
        })
        .unwrap();
        assert_eq!((zero.g, zero.g_tilde), (0.0, 0.0));
        let x = 0.01;
        let gen = gauge_coupling_map(Gauge::Generic {
            c_kin: 2.0 * x,
            c_grad: -2.0 * x,
        })
        .unwrap();
        assert!((gen.g - 0.01).abs() < 1e-15 && (gen.g_tilde - 0.01).abs() < 1e-15);
        assert!(gauge_coupling_map(Gauge::Inflaton {
            epsilon: 1.5,
            planck_mass: 1.0
        })
        .is_err());
        let inf = gauge_coupling_map(Gauge::Inflaton {
            epsilon: 0.02,
            planck_mass: 1.0,
        })
        .unwrap();
        assert!((inf.g + inf.g_tilde + 0.1).abs() < 1e-12);
    }

    #[test]
    fn triplet_validation() {
        assert!(ModeTriplet::new(1.0, 1.0, 0.0, 0.0).is_ok());
        assert!(ModeTriplet::new(1.0, 3.0, 1.0, 0.0).is_err());
        assert!(ModeTriplet::new(1.0, 1.0, 0.5, 0.7).is_err());
        let t = ModeTriplet::squeezed(1.0, 0.01, 0.005).unwrap();
        assert!(t.validate().is_ok());
    }
}
