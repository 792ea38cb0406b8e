//! Scenario configuration: TOML schema, defaults and validation.
//!
//! Every section is optional and every key has a default, so a file holding
//! only `scenario = "radiation-records"` is complete. Unknown keys, wrong
//! types and duplicate keys are parse errors carrying a line and column;
//! physical invariants are checked afterwards and reported all at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cosmo::{Coupling, InflationEpoch};
use crate::error::{Error, Result};
use crate::localized::{WindowSpec, MIN_SIGMA_K};
use crate::toy::HermiteGrid;

/// Pipelines the runner knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    InflationLinear,
    InflationCubic,
    RadiationLinear,
    RadiationRecords,
    ToyLindblad,
    ToyGhz,
    HermiteDemo,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::InflationLinear,
        Scenario::InflationCubic,
        Scenario::RadiationLinear,
        Scenario::RadiationRecords,
        Scenario::ToyLindblad,
        Scenario::ToyGhz,
        Scenario::HermiteDemo,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Scenario::InflationLinear => "inflation-linear",
            Scenario::InflationCubic => "inflation-cubic",
            Scenario::RadiationLinear => "radiation-linear",
            Scenario::RadiationRecords => "radiation-records",
            Scenario::ToyLindblad => "toy-lindblad",
            Scenario::ToyGhz => "toy-ghz",
            Scenario::HermiteDemo => "hermite-demo",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Background: Hubble rate and the conformal time at which inflation ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpochConfig {
    pub hubble_rate: f64,
    pub tau_f: f64,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            hubble_rate: 1.0,
            tau_f: -1e-3,
        }
    }
}

/// Cubic couplings. The default has `g + g̃ = 1`, the sum the comoving
/// curvature variable carries, split evenly to respect `|g|, |g̃| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub g: f64,
    pub g_tilde: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            g: 0.5,
            g_tilde: 0.5,
        }
    }
}

impl CouplingConfig {
    pub fn coupling(&self) -> Coupling {
        Coupling {
            g: self.g,
            g_tilde: self.g_tilde,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default)]
    pub x0: [f64; 3],
    pub k0: [f64; 3],
    pub sigma: f64,
}

impl WindowConfig {
    pub fn spec(&self) -> WindowSpec {
        WindowSpec {
            x0: self.x0,
            k0: self.k0,
            sigma: self.sigma,
        }
    }
}

/// Two windows at `|k₀| = 100`, `σ = 1`, whose directions differ by
/// 0.06 rad so that their support regions at `η = 100` sit `6σ` apart.
pub fn default_windows() -> Vec<WindowConfig> {
    let (s, c) = 0.06f64.sin_cos();
    vec![
        WindowConfig {
            x0: [0.0; 3],
            k0: [100.0, 0.0, 0.0],
            sigma: 1.0,
        },
        WindowConfig {
            x0: [0.0; 3],
            k0: [100.0 * c, 100.0 * s, 0.0],
            sigma: 1.0,
        },
    ]
}

/// `n` log-spaced values from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Mode grid for the inflationary scenarios; times are given as `kτ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationGrid {
    pub k: Vec<f64>,
    pub k_tau_start: f64,
    pub k_tau_end: f64,
    pub n_times: usize,
}

impl Default for InflationGrid {
    fn default() -> Self {
        Self {
            k: log_space(0.1, 10.0, 16),
            k_tau_start: -50.0,
            k_tau_end: -1e-2,
            n_times: 32,
        }
    }
}

/// Mode grid for the radiation era; times are given as `kη` from 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationGrid {
    pub k: Vec<f64>,
    pub k_eta_end: f64,
    pub n_times: usize,
    /// `kη` at which the rotated momentum variance is compared.
    pub k_eta_squeeze: f64,
}

impl Default for RadiationGrid {
    fn default() -> Self {
        Self {
            k: vec![1.0, 3.0, 10.0],
            k_eta_end: 20.0,
            n_times: 64,
            k_eta_squeeze: 50.0,
        }
    }
}

/// Triplets for the cubic-kernel scenario: `k = k′` with `q = ratio·k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubicGrid {
    pub k: f64,
    pub q_ratios: Vec<f64>,
    pub k_tau_start: f64,
    pub k_tau_end: f64,
    pub n_times: usize,
}

impl Default for CubicGrid {
    fn default() -> Self {
        Self {
            k: 1.0,
            q_ratios: vec![0.0, 1e-2, 0.1],
            k_tau_start: -50.0,
            k_tau_end: -1e-2,
            n_times: 12,
        }
    }
}

/// Long-wavelength background ensemble and evaluation time for records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordsConfig {
    pub eta: f64,
    pub q_min: f64,
    pub q_star: f64,
    pub n_modes: usize,
    pub n_seeds: usize,
    /// Smallest support-centre separation, in units of `σ`, for two windows
    /// to count as disjoint.
    pub disjoint_sigmas: f64,
}

impl Default for RecordsConfig {
    fn default() -> Self {
        Self {
            eta: 100.0,
            q_min: 1e-4,
            q_star: 10.0,
            n_modes: 128,
            n_seeds: 1000,
            disjoint_sigmas: 4.0,
        }
    }
}

/// Phase-space grid for Wigner output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    /// Wavenumber whose Wigner function is written.
    pub k: f64,
    pub n_phi: usize,
    pub n_pi: usize,
    pub extent_sigma: f64,
    /// Number of time slices, spread over the mode grid.
    pub n_slices: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            n_phi: 33,
            n_pi: 33,
            extent_sigma: 6.0,
            n_slices: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    /// Lindblad rate `D` and duration `T`.
    pub d: f64,
    pub t: f64,
    pub grid_points: usize,
    pub grid_half_width: f64,
    pub n_env: usize,
    pub n_fragment: usize,
    pub env_grid_points: usize,
    /// GHZ register size and local dimension.
    pub n_sites: usize,
    pub local_dim: usize,
    /// Number of pairs in the paired-qudit state.
    pub n_pairs: usize,
    /// Register size of the momentum-space example.
    pub momentum_n: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            t: 12.0,
            grid_points: 128,
            grid_half_width: 2.0,
            n_env: 12,
            n_fragment: 4,
            env_grid_points: 801,
            n_sites: 4,
            local_dim: 2,
            n_pairs: 3,
            momentum_n: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HermiteConfig {
    pub n_max: usize,
    pub half_width: f64,
    pub n_points: usize,
    /// Centre and width of the Gaussian used in the reconstruction demo.
    pub test_center: f64,
    pub test_width: f64,
}

impl Default for HermiteConfig {
    fn default() -> Self {
        Self {
            n_max: 24,
            half_width: 16.0,
            n_points: 2001,
            test_center: 1.5,
            test_width: 1.5,
        }
    }
}

/// Check tolerances before `tolerance_scale` is applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative accuracy requested from the integrators.
    pub integrator: f64,
    pub purity: f64,
    pub closed_form: f64,
    pub squeezing: f64,
    pub cubic: f64,
    pub lindblad: f64,
    pub fragment: f64,
    pub hermite: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integrator: 1e-8,
            purity: 1e-8,
            closed_form: 1e-6,
            squeezing: 1e-2,
            cubic: 1e-2,
            lindblad: 1e-6,
            fragment: 1e-3,
            hermite: 1e-10,
        }
    }
}

/// A complete, validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker-thread hint; 0 lets the pool choose.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub epoch: EpochConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default = "default_windows")]
    pub windows: Vec<WindowConfig>,
    #[serde(default)]
    pub inflation: InflationGrid,
    #[serde(default)]
    pub radiation: RadiationGrid,
    #[serde(default)]
    pub cubic: CubicGrid,
    #[serde(default)]
    pub records: RecordsConfig,
    #[serde(default)]
    pub wigner: WignerConfig,
    #[serde(default)]
    pub toy: ToyConfig,
    #[serde(default)]
    pub hermite: HermiteConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_seed() -> u64 {
    20_240_901
}

fn one() -> f64 {
    1.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ScenarioConfig {
    /// Defaults for `scenario`.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: default_seed(),
            workers: 0,
            tolerance_scale: 1.0,
            out_dir: default_out_dir(),
            epoch: EpochConfig::default(),
            coupling: CouplingConfig::default(),
            windows: default_windows(),
            inflation: InflationGrid::default(),
            radiation: RadiationGrid::default(),
            cubic: CubicGrid::default(),
            records: RecordsConfig::default(),
            wigner: WignerConfig::default(),
            toy: ToyConfig::default(),
            hermite: HermiteConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    /// Every violated invariant, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let e = &self.epoch;
        need(
            e.tau_f < 0.0 && e.tau_f.is_finite(),
            "tau_f must be negative".into(),
        );
        need(
            e.hubble_rate > 0.0 && e.hubble_rate.is_finite(),
            "hubble_rate must be positive".into(),
        );
        if e.tau_f < 0.0 && e.hubble_rate > 0.0 {
            if let Err(err) = InflationEpoch::new(e.hubble_rate, e.tau_f) {
                need(false, format!("epoch: {err}"));
            }
        }
        if let Err(err) = self.coupling.coupling().validate() {
            need(false, format!("coupling: {err}"));
        }
        need(
            self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite(),
            "tolerance_scale must be positive".into(),
        );

        need(!self.windows.is_empty(), "windows must not be empty".into());
        for (i, w) in self.windows.iter().enumerate() {
            let spec = w.spec();
            if let Err(err) = spec.validate() {
                need(false, format!("windows[{i}]: {err}"));
            } else {
                need(
                    spec.sigma * spec.k_magnitude() >= MIN_SIGMA_K,
                    format!("windows[{i}]: sigma*|k0| must be at least {MIN_SIGMA_K}"),
                );
            }
        }

        let g = &self.inflation;
        need(!g.k.is_empty(), "inflation.k must not be empty".into());
        need(
            g.k.iter().all(|k| *k > 0.0 && k.is_finite()),
            "inflation.k values must be positive".into(),
        );
        need(
            g.k_tau_start < g.k_tau_end && g.k_tau_end < 0.0,
            "inflation needs k_tau_start < k_tau_end < 0".into(),
        );
        need(
            g.n_times >= 2,
            "inflation.n_times must be at least 2".into(),
        );

        let r = &self.radiation;
        need(!r.k.is_empty(), "radiation.k must not be empty".into());
        need(
            r.k.iter().all(|k| *k > 0.0 && k.is_finite()),
            "radiation.k values must be positive".into(),
        );
        need(
            r.k_eta_end > 0.0,
            "radiation.k_eta_end must be positive".into(),
        );
        need(
            r.k_eta_squeeze > 0.0,
            "radiation.k_eta_squeeze must be positive".into(),
        );
        need(
            r.n_times >= 2,
            "radiation.n_times must be at least 2".into(),
        );

        let c = &self.cubic;
        need(
            c.k > 0.0 && c.k.is_finite(),
            "cubic.k must be positive".into(),
        );
        need(
            c.q_ratios.iter().all(|q| (0.0..=2.0).contains(q)),
            "cubic.q_ratios must lie in [0, 2]".into(),
        );
        need(
            c.k_tau_start < c.k_tau_end && c.k_tau_end < 0.0,
            "cubic needs k_tau_start < k_tau_end < 0".into(),
        );
        need(c.n_times >= 2, "cubic.n_times must be at least 2".into());

        let rc = &self.records;
        need(
            rc.eta > 0.0 && rc.eta.is_finite(),
            "records.eta must be positive".into(),
        );
        need(
            rc.q_min > 0.0 && rc.q_min < rc.q_star && rc.q_star.is_finite(),
            "records needs 0 < q_min < q_star".into(),
        );
        need(rc.n_modes >= 8, "records.n_modes must be at least 8".into());
        need(rc.n_seeds >= 1, "records.n_seeds must be at least 1".into());
        need(
            rc.disjoint_sigmas > 0.0,
            "records.disjoint_sigmas must be positive".into(),
        );

        let w = &self.wigner;
        need(
            w.k > 0.0 && w.k.is_finite(),
            "wigner.k must be positive".into(),
        );
        need(
            w.n_phi >= 32 && w.n_pi >= 32,
            "wigner grids need at least 32 points per axis".into(),
        );
        need(
            w.extent_sigma >= 5.0,
            "wigner.extent_sigma must be at least 5".into(),
        );
        need(w.n_slices >= 1, "wigner.n_slices must be at least 1".into());

        let t = &self.toy;
        need(
            t.d > 0.0 && t.t > 0.0,
            "toy.d and toy.t must be positive".into(),
        );
        need(
            t.grid_points >= 2,
            "toy.grid_points must be at least 2".into(),
        );
        need(
            t.grid_half_width > 0.0,
            "toy.grid_half_width must be positive".into(),
        );
        need(
            t.n_fragment >= 1 && t.n_fragment <= t.n_env,
            "toy needs 1 <= n_fragment <= n_env".into(),
        );
        need(
            t.env_grid_points >= 16,
            "toy.env_grid_points must be at least 16".into(),
        );
        need(t.n_sites >= 2, "toy.n_sites must be at least 2".into());
        need(
            (2..=255).contains(&t.local_dim),
            "toy.local_dim must lie in [2, 255]".into(),
        );
        need(t.n_pairs >= 1, "toy.n_pairs must be at least 1".into());
        need(
            t.momentum_n >= 3,
            "toy.momentum_n must be at least 3".into(),
        );

        let h = &self.hermite;
        match HermiteGrid::symmetric(h.half_width, h.n_points) {
            Ok(grid) => {
                if let Err(err) = grid.check_resolution(h.n_max) {
                    need(false, format!("hermite: {err}"));
                }
            }
            Err(err) => need(false, format!("hermite: {err}")),
        }
        need(
            h.test_width > 0.0,
            "hermite.test_width must be positive".into(),
        );

        let tol = &self.tolerances;
        need(
            tol.integrator > 0.0 && tol.integrator < 1.0,
            "tolerances.integrator must lie in (0, 1)".into(),
        );
        for (name, x) in [
            ("purity", tol.purity),
            ("closed_form", tol.closed_form),
            ("squeezing", tol.squeezing),
            ("cubic", tol.cubic),
            ("lindblad", tol.lindblad),
            ("fragment", tol.fragment),
            ("hermite", tol.hermite),
        ] {
            need(
                x > 0.0 && x.is_finite(),
                format!("tolerances.{name} must be positive"),
            );
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// SHA-256 over the canonical JSON form, leaving out fields that cannot
    /// change results (output location and worker count).
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
            map.remove("workers");
        }
        let text = serde_json::to_string(&value).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Scales a base tolerance by `tolerance_scale`.
    pub fn tol(&self, base: f64) -> f64 {
        base * self.tolerance_scale
    }
}

/// Parses configuration text without validating physical invariants.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        Error::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })
}

/// Parses and validates configuration text.
pub fn load_config_str(text: &str) -> Result<ScenarioConfig> {
    let cfg = parse(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config_str(&text)
}

/// 1-based line and column (in characters) of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset.min(text.len());
    while !text.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
