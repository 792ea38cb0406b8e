//! Scenario pipelines with embedded checks.
//!
//! Each scenario writes its data files into the output directory and a
//! `report.json` holding the config hash, every check with its measured
//! value and threshold, summary metrics and the wall-clock time. Only the
//! report carries timing, so the data files are byte-identical across runs
//! with the same config and seed, whatever the worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{log_space, Scenario, ScenarioConfig};
use crate::cosmo::{Coupling, Epoch, InflationEpoch, ModeTriplet};
use crate::cubic::{adiabatic_initial_f, imf_inflation_closed, integrate_f, FMethod};
use crate::error::{Error, Result};
use crate::gaussian::{
    closed_form_a_inflation, closed_form_a_radiation_approx, closed_form_a_radiation_exact,
    integrate_a, rotated_frame_from_a, two_point_from_a, FrameConvention, ModeSample, PhaseGrid,
};
use crate::io::{emit_wigner_contours, write_json, CsvTable};
use crate::localized::support_regions;
use crate::numeric::OdeOptions;
use crate::records::{
    conditional_moments_radiation, mixedness_ratio, precision_by_sweep, record_precision,
    sample_ensemble, ConditionalMoments, RecordAssessment, DISTINGUISHABLE_OVERLAP,
};
use crate::toy::{
    branch_entropy, fragment_overlap, fragment_overlap_explicit, hermite_function, hermite_gram,
    hermite_mode_decomposition, hermite_reconstruct, lindblad_decohere, lindblad_evolve,
    momentum_records_demo, qbm_moments, redundancy_function, single_site_redundancy,
    verify_records, BranchState, DensityGrid, HermiteGrid, PureDecoherenceModel, QbmMoments,
    RecordProjectorSet,
};

/// Name of the report file written next to the data files.
pub const REPORT_FILE: &str = "report.json";

/// Largest relative deviation allowed between the approximate and exact
/// radiation kernels, in units of `|kτ_f|`.
const APPROX_KERNEL_FACTOR: f64 = 5.0;

/// `|sin kη|` below which the approximate kernel is not compared.
const SINE_ZERO_BAND: f64 = 0.1;

/// One embedded check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity.
    pub value: f64,
    /// Bound it was compared against.
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= threshold`.
    fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    fn holds(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail: detail.into(),
        }
    }
}

/// Outcome of a scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    /// Data files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    dir: PathBuf,
    checks: Vec<Check>,
    metrics: BTreeMap<String, f64>,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }

    fn check(&mut self, c: Check) {
        if !c.passed {
            log::warn!(
                "check {} failed: value {} vs threshold {} ({})",
                c.name,
                c.value,
                c.threshold,
                c.detail
            );
        }
        self.checks.push(c);
    }
}

/// Runs the configured scenario and writes its artifacts and report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    if matches!(
        cfg.scenario,
        Scenario::InflationCubic | Scenario::RadiationRecords
    ) {
        cfg.coupling.coupling().warn_if_large();
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let mut run = Run {
        cfg,
        dir: cfg.out_dir.clone(),
        checks: Vec::new(),
        metrics: BTreeMap::new(),
        artifacts: Vec::new(),
    };
    pool.install(|| dispatch(&mut run))
        .map_err(|e| Error::Scenario {
            scenario: cfg.scenario.id().to_string(),
            source: Box::new(e),
        })?;
    let report = RunReport {
        scenario: cfg.scenario,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        passed: run.checks.iter().all(|c| c.passed),
        checks: run.checks,
        metrics: run.metrics,
        artifacts: run.artifacts,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&cfg.out_dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

fn dispatch(run: &mut Run) -> Result<()> {
    match run.cfg.scenario {
        Scenario::InflationLinear => inflation_linear(run),
        Scenario::InflationCubic => inflation_cubic(run),
        Scenario::RadiationLinear => radiation_linear(run),
        Scenario::RadiationRecords => radiation_records(run),
        Scenario::ToyLindblad => toy_lindblad(run),
        Scenario::ToyGhz => toy_ghz(run),
        Scenario::HermiteDemo => hermite_demo(run),
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter()
        .fold(0.0, |m, x| if x > m || x.is_nan() { x } else { m })
}

fn inflation_epoch(cfg: &ScenarioConfig) -> Result<InflationEpoch> {
    InflationEpoch::new(cfg.epoch.hubble_rate, cfg.epoch.tau_f)
}

/// `kτ` values from `start` to `end` (both negative), log-spaced in `|kτ|`.
fn k_tau_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    log_space(-start, -end, n).into_iter().map(|x| -x).collect()
}

struct ModeRow {
    k: f64,
    sample: ModeSample,
    closed: Complex64,
    rel_err: f64,
    purity: f64,
}

/// Steps `A` along `times`, starting from `a0` at `times[0]`.
fn kernel_series(
    epoch: &Epoch,
    k: f64,
    times: &[f64],
    a0: Complex64,
    tol: f64,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut a = a0;
    out.push(a);
    for w in times.windows(2) {
        a = integrate_a(epoch, k, w[0], w[1], a, tol)?;
        out.push(a);
    }
    Ok(out)
}

fn inflation_linear(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let ep = Epoch::Inflation(inflation_epoch(cfg)?);
    let grid = &cfg.inflation;
    let kt = k_tau_grid(grid.k_tau_start, grid.k_tau_end, grid.n_times);
    let tol = cfg.tolerances.integrator;
    let per_k: Vec<Vec<ModeRow>> = grid
        .k
        .par_iter()
        .map(|&k| {
            let times: Vec<f64> = kt.iter().map(|x| x / k).collect();
            let series = kernel_series(&ep, k, &times, closed_form_a_inflation(k, times[0])?, tol)?;
            times
                .iter()
                .zip(series)
                .map(|(&t, a)| {
                    let closed = closed_form_a_inflation(k, t)?;
                    Ok(ModeRow {
                        k,
                        sample: ModeSample::from_a(t, a, FrameConvention::Inflation { k })?,
                        closed,
                        rel_err: rel(a, closed),
                        purity: two_point_from_a(a)?.purity_error(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut modes = CsvTable::new(
        &["k"]
            .into_iter()
            .chain(ModeSample::HEADER)
            .chain(["re_A_closed", "im_A_closed", "rel_err"])
            .collect::<Vec<_>>(),
    );
    let mut purity = CsvTable::new(&["k", "time", "purity_error"]);
    for r in per_k.iter().flatten() {
        let mut row = vec![r.k];
        row.extend(r.sample.row());
        row.extend([r.closed.re, r.closed.im, r.rel_err]);
        modes.push(&row);
        purity.push(&[r.k, r.sample.time, r.purity]);
    }
    modes.write(&run.path("inflation_modes.csv"))?;
    purity.write(&run.path("purity.csv"))?;

    let max_err = max_of(per_k.iter().flatten().map(|r| r.rel_err));
    let max_purity = max_of(per_k.iter().flatten().map(|r| r.purity));
    run.check(Check::at_most(
        "riccati_vs_closed_form",
        max_err,
        cfg.tol(cfg.tolerances.closed_form),
        "largest relative error of the integrated kernel",
    ));
    run.check(Check::at_most(
        "purity",
        max_purity,
        cfg.tol(cfg.tolerances.purity),
        "largest |<phi phi><pi pi> - <phi pi>^2 - 1/4| / max(1, 4<phi phi><pi pi>)",
    ));

    // Rotated variances at the last time against the superhorizon forms.
    let mut squeeze_dev: f64 = 0.0;
    for rows in &per_k {
        let last = rows.last().expect("n_times >= 2");
        let (k, t) = (last.k, last.sample.time);
        let a = Complex64::new(last.sample.re_a, last.sample.im_a);
        let f = rotated_frame_from_a(a, FrameConvention::Inflation { k })?;
        let ktau = k * t;
        let want_phi = ktau * ktau / (2.0 * k.powi(3));
        let want_pi = k.powi(3) / (2.0 * ktau * ktau);
        squeeze_dev = squeeze_dev
            .max((f.phi2 / want_phi - 1.0).abs())
            .max((f.pi2 / want_pi - 1.0).abs());
    }
    run.check(Check::at_most(
        "squeezed_variances",
        squeeze_dev,
        cfg.tol(cfg.tolerances.squeezing),
        "rotated variances vs (k tau)^2/(2k^3) and k^3/(2(k tau)^2) at the last time",
    ));

    // Wigner contours for one mode.
    let w = &cfg.wigner;
    let k = w.k;
    let slices: Vec<f64> = k_tau_grid(grid.k_tau_start, grid.k_tau_end, w.n_slices.max(2))
        .into_iter()
        .map(|x| x / k)
        .collect();
    let slices = if w.n_slices == 1 {
        vec![*slices.last().unwrap()]
    } else {
        slices
    };
    let first = grid.k_tau_start / k;
    let mut times = vec![first];
    times.extend(slices.iter().copied().filter(|&t| t != first));
    let kernels = kernel_series(&ep, k, &times, closed_form_a_inflation(k, first)?, tol)?;
    let series = times
        .iter()
        .zip(&kernels)
        .filter(|(t, _)| slices.contains(t))
        .map(|(&t, &a)| Ok((t, two_point_from_a(a)?)))
        .collect::<Result<Vec<_>>>()?;
    let phase = PhaseGrid {
        n_phi: w.n_phi,
        n_pi: w.n_pi,
        extent_sigma: w.extent_sigma,
    };
    let path = run.path("wigner.csv");
    let (epath, ellipses) = emit_wigner_contours(k, &series, phase, &path)?;
    run.artifacts
        .push(epath.file_name().unwrap().to_string_lossy().into_owned());
    let area_dev = max_of(ellipses.iter().map(|e| (e.sqrt_det - 0.5).abs()));
    run.check(Check::at_most(
        "wigner_area",
        area_dev,
        cfg.tol(cfg.tolerances.purity),
        "largest |sqrt(det) - 1/2| over the Wigner slices",
    ));
    let last = ellipses.last().expect("at least one slice");
    let ktau = k * last.time;
    let ratio_dev = (last.axes_ratio * ktau * ktau - 1.0).abs();
    run.check(Check::at_most(
        "wigner_axes_ratio",
        ratio_dev,
        cfg.tol(cfg.tolerances.squeezing),
        "axes ratio vs 1/(k tau)^2 at the last slice",
    ));

    run.metric("modes", grid.k.len() as f64);
    run.metric("max_rel_err", max_err);
    run.metric("max_purity_error", max_purity);
    run.metric("final_axes_ratio", last.axes_ratio);
    Ok(())
}

fn inflation_cubic(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let ep = Epoch::Inflation(inflation_epoch(cfg)?);
    let c = cfg.coupling.coupling();
    let grid = &cfg.cubic;
    let k = grid.k;
    let kt = k_tau_grid(grid.k_tau_start, grid.k_tau_end, grid.n_times);
    let t0 = kt[0] / k;
    let tol = cfg.tolerances.integrator;
    let triplets = grid
        .q_ratios
        .iter()
        .map(|&r| ModeTriplet::squeezed(k, r * k, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = (0..triplets.len())
        .flat_map(|i| kt.iter().map(move |&x| (i, x / k)))
        .collect();
    let values: Vec<Complex64> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let tr = &triplets[i];
            let f0 = adiabatic_initial_f(tr, t0, &ep, &c)?;
            integrate_f(tr, t0, t, f0, &ep, &c, tol, FMethod::Quadrature)
        })
        .collect::<Result<_>>()?;

    let mut table = CsvTable::new(&[
        "q_over_k",
        "k_tau",
        "tau",
        "re_F",
        "im_F",
        "im_F_closed",
        "ratio",
    ]);
    let mut worst: f64 = 0.0;
    let mut n_super = 0;
    for (&(i, t), f) in jobs.iter().zip(&values) {
        let tr = &triplets[i];
        let kmax = tr.k.max(tr.k_prime).max(tr.q);
        let closed = if (kmax * t).abs() <= 0.1 {
            imf_inflation_closed(tr, t, c.g)?
        } else {
            f64::NAN
        };
        let ratio = f.im / closed;
        if closed.is_finite() {
            n_super += 1;
            worst = worst.max((ratio - 1.0).abs());
        }
        table.push(&[grid.q_ratios[i], k * t, t, f.re, f.im, closed, ratio]);
    }
    table.write(&run.path("cubic_imf.csv"))?;
    if n_super > 0 {
        run.check(Check::at_most(
            "superhorizon_im_f",
            worst,
            cfg.tol(cfg.tolerances.cubic),
            "largest |Im F / (-g(k^2+k'^2+q^2)/(3 tau)) - 1| with |k tau| <= 0.1",
        ));
    }

    // The two solvers agree at the last time.
    let t1 = *kt.last().unwrap() / k;
    let solver_dev = triplets
        .par_iter()
        .map(|tr| {
            let f0 = adiabatic_initial_f(tr, t0, &ep, &c)?;
            let a = integrate_f(tr, t0, t1, f0, &ep, &c, tol, FMethod::Quadrature)?;
            let b = integrate_f(tr, t0, t1, f0, &ep, &c, tol, FMethod::Ode)?;
            Ok((a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?;
    run.check(Check::at_most(
        "quadrature_vs_ode",
        max_of(solver_dev.iter().copied()),
        cfg.tol(cfg.tolerances.cubic),
        "relative difference of the two kernel solvers at the last time",
    ));

    // A g̃-only coupling stops generating phase outside the horizon; the
    // phase is linear in the couplings, so a small unit suffices.
    let m = 1e-2;
    let tr = ModeTriplet::squeezed(k, 0.0, 0.0)?;
    let (ta, tb) = (kt[kt.len() - 2] / k, t1);
    let growth = |cc: Coupling| -> Result<f64> {
        let f0 = adiabatic_initial_f(&tr, t0, &ep, &cc)?;
        let fa = integrate_f(&tr, t0, ta, f0, &ep, &cc, tol, FMethod::Quadrature)?;
        let fb = integrate_f(&tr, t0, tb, f0, &ep, &cc, tol, FMethod::Quadrature)?;
        Ok((fb.im - fa.im).abs())
    };
    let ratio = growth(Coupling::new(0.0, m)?)? / growth(Coupling::new(m, 0.0)?)?;
    run.check(Check::at_most(
        "g_tilde_inert_superhorizon",
        ratio,
        cfg.tol(1e-3),
        "late-time Im F growth with g_tilde only, relative to g only",
    ));
    run.metric("worst_superhorizon_deviation", worst);
    run.metric("g_tilde_growth_ratio", ratio);
    Ok(())
}

fn radiation_linear(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let inf = inflation_epoch(cfg)?;
    let tau_f = inf.tau_f;
    let ep = Epoch::Radiation(inf.radiation());
    let grid = &cfg.radiation;
    let tol = cfg.tolerances.integrator;
    let n = grid.n_times;
    struct Out {
        rows: Vec<(ModeRow, f64)>,
        squeeze_dev: f64,
        approx_dev: f64,
    }
    let per_k: Vec<Out> = grid
        .k
        .par_iter()
        .map(|&k| {
            let times: Vec<f64> = (0..n)
                .map(|i| grid.k_eta_end / k * i as f64 / (n - 1) as f64)
                .collect();
            let a0 = closed_form_a_inflation(k, tau_f)?;
            let series = kernel_series(&ep, k, &times, a0, tol)?;
            let mut approx_dev: f64 = 0.0;
            let rows = times
                .iter()
                .zip(series)
                .map(|(&eta, a)| {
                    let closed = closed_form_a_radiation_exact(k, eta, tau_f)?;
                    let approx = if eta > 0.0 && (k * eta).sin().abs() >= SINE_ZERO_BAND {
                        let d = rel(closed_form_a_radiation_approx(k, eta, tau_f)?, closed);
                        approx_dev = approx_dev.max(d / (k * tau_f).abs());
                        d
                    } else {
                        f64::NAN
                    };
                    let row = ModeRow {
                        k,
                        sample: ModeSample::from_a(
                            eta,
                            a,
                            FrameConvention::Radiation { k, eta, tau_f },
                        )?,
                        closed,
                        rel_err: rel(a, closed),
                        purity: two_point_from_a(a)?.purity_error(),
                    };
                    Ok((row, approx))
                })
                .collect::<Result<Vec<_>>>()?;
            let eta_s = grid.k_eta_squeeze / k;
            let a_s = integrate_a(&ep, k, 0.0, eta_s, a0, tol)?;
            let f = rotated_frame_from_a(
                a_s,
                FrameConvention::Radiation {
                    k,
                    eta: eta_s,
                    tau_f,
                },
            )?;
            let want = k.powi(3) / (2.0 * (k * tau_f).powi(8));
            Ok(Out {
                rows,
                squeeze_dev: (f.pi2 / want - 1.0).abs(),
                approx_dev,
            })
        })
        .collect::<Result<_>>()?;

    let mut modes = CsvTable::new(
        &["k"]
            .into_iter()
            .chain(ModeSample::HEADER)
            .chain(["re_A_exact", "im_A_exact", "rel_err", "approx_rel_err"])
            .collect::<Vec<_>>(),
    );
    let mut purity = CsvTable::new(&["k", "time", "purity_error"]);
    for (r, approx) in per_k.iter().flat_map(|o| &o.rows) {
        let mut row = vec![r.k];
        row.extend(r.sample.row());
        row.extend([r.closed.re, r.closed.im, r.rel_err, *approx]);
        modes.push(&row);
        purity.push(&[r.k, r.sample.time, r.purity]);
    }
    modes.write(&run.path("radiation_modes.csv"))?;
    purity.write(&run.path("purity.csv"))?;

    let rows = || per_k.iter().flat_map(|o| o.rows.iter().map(|(r, _)| r));
    let max_err = max_of(rows().map(|r| r.rel_err));
    let max_purity = max_of(rows().map(|r| r.purity));
    let approx = max_of(per_k.iter().map(|o| o.approx_dev));
    let squeeze = max_of(per_k.iter().map(|o| o.squeeze_dev));
    run.check(Check::at_most(
        "riccati_vs_exact",
        max_err,
        cfg.tol(cfg.tolerances.closed_form),
        "largest relative error of the integrated kernel",
    ));
    run.check(Check::at_most(
        "approximate_kernel",
        approx,
        cfg.tol(APPROX_KERNEL_FACTOR),
        "largest relative error of the approximate kernel in units of |k tau_f|, away from sine zeros",
    ));
    run.check(Check::at_most(
        "purity",
        max_purity,
        cfg.tol(cfg.tolerances.purity),
        "largest |<phi phi><pi pi> - <phi pi>^2 - 1/4| / max(1, 4<phi phi><pi pi>)",
    ));
    run.check(Check::at_most(
        "rotated_momentum_variance",
        squeeze,
        cfg.tol(cfg.tolerances.squeezing),
        "<Pi Pi>' vs k^3/(2 (k tau_f)^8)",
    ));
    run.metric("max_rel_err", max_err);
    run.metric("max_purity_error", max_purity);
    run.metric("approx_err_over_k_tau_f", approx);
    run.metric("rotated_momentum_deviation", squeeze);
    Ok(())
}

/// Records JSON payload for one window.
#[derive(Serialize)]
struct WindowRecord<'a> {
    x0: [f64; 3],
    k0: [f64; 3],
    sigma: f64,
    support_plus: [f64; 3],
    support_minus: [f64; 3],
    assessment: &'a RecordAssessment,
}

fn radiation_records(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let rc = &cfg.records;
    let c = cfg.coupling.coupling();
    let tau_f = cfg.epoch.tau_f;
    let eta = rc.eta;
    let fields = sample_ensemble(rc.q_min, rc.q_star, rc.n_modes, cfg.seed, rc.n_seeds)?;
    let specs: Vec<_> = cfg.windows.iter().map(|w| w.spec()).collect();

    let assessments = specs
        .iter()
        .map(|s| record_precision(s, eta, &c, tau_f, &fields))
        .collect::<Result<Vec<_>>>()?;
    let moments: Vec<Vec<ConditionalMoments>> = specs
        .iter()
        .map(|s| {
            fields
                .par_iter()
                .map(|f| conditional_moments_radiation(s, f, eta, &c, tau_f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let precisions: Vec<Vec<f64>> = if c.sum() == 0.0 {
        moments
            .iter()
            .map(|ms| vec![f64::INFINITY; ms.len()])
            .collect()
    } else {
        moments
            .iter()
            .map(|ms| {
                ms.par_iter()
                    .map(|m| precision_by_sweep(m, DISTINGUISHABLE_OVERLAP))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?
    };

    let mut table = CsvTable::new(&[
        "window",
        "seed",
        "phi_khat",
        "excess",
        "phi2",
        "pi2",
        "cross",
        "determinant",
        "precision",
        "mixedness",
    ]);
    let mut min_det = f64::INFINITY;
    for (w, ms) in moments.iter().enumerate() {
        for (i, m) in ms.iter().enumerate() {
            let det = m.determinant();
            min_det = min_det.min(det);
            table.push(&[
                w as f64,
                fields[i].seed as f64,
                m.recorded,
                m.excess,
                m.phi2,
                m.pi2,
                m.cross,
                det,
                precisions[w][i],
                mixedness_ratio(m),
            ]);
        }
    }
    table.write(&run.path("records_samples.csv"))?;

    let windows = specs
        .iter()
        .zip(&assessments)
        .map(|(s, a)| {
            let (p, m, _) = support_regions(s, eta)?;
            Ok(WindowRecord {
                x0: s.x0,
                k0: s.k0,
                sigma: s.sigma,
                support_plus: p,
                support_minus: m,
                assessment: a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = serde_json::json!({
        "eta": eta,
        "tau_f": tau_f,
        "g": c.g,
        "g_tilde": c.g_tilde,
        "n_seeds": rc.n_seeds,
        "windows": windows,
    });
    write_json(&run.path("records.json"), &summary)?;

    let a0 = &assessments[0];
    let sigma = specs[0].sigma;
    let sigma_eta = sigma / eta;
    run.check(Check::holds(
        "forms_record",
        a0.forms_record,
        format!(
            "(g + g_tilde) k eta >= (k tau_f)^4 (perturbative = {})",
            a0.perturbative
        ),
    ));
    let factor = 3.0 * cfg.tolerance_scale;
    let spread = a0.precision_constant.max(1.0 / a0.precision_constant);
    run.check(Check::at_most(
        "precision_scale",
        spread,
        factor,
        format!(
            "precision = {:.4e} = {:.4} sigma/eta",
            a0.precision, a0.precision_constant
        ),
    ));
    let target = sigma_eta * sigma_eta;
    let mx = &a0.mixedness;
    let (lo, hi) = (mx.mean - 3.0 * mx.std_err, mx.mean + 3.0 * mx.std_err);
    let f5 = 5.0 * cfg.tolerance_scale;
    let gap = if hi < target / f5 {
        target / (f5 * hi.max(f64::MIN_POSITIVE))
    } else if lo > target * f5 {
        lo / (target * f5)
    } else {
        1.0
    };
    run.check(Check::at_most(
        "mixedness_scale",
        gap,
        1.0,
        format!(
            "mixedness {:.4e} +- {:.1e} vs sigma^2/eta^2 = {target:.4e}",
            mx.mean, mx.std_err
        ),
    ));
    run.check(Check::at_most(
        "determinant_floor",
        (1.0 - 4.0 * min_det).max(0.0),
        1e-12,
        "relative shortfall of the smallest conditional determinant below 1/4",
    ));

    if specs.len() >= 2 {
        let (p0, m0, _) = support_regions(&specs[0], eta)?;
        let mut worst: f64 = 0.0;
        let mut disjoint = true;
        for (j, s) in specs.iter().enumerate().skip(1) {
            let (pj, mj, _) = support_regions(s, eta)?;
            let sep = [(p0, pj), (p0, mj), (m0, pj), (m0, mj)]
                .iter()
                .map(|(a, b)| {
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            disjoint &= sep >= rc.disjoint_sigmas * sigma.max(s.sigma);
            for i in 0..fields.len() {
                let band = precisions[0][i].max(precisions[j][i]);
                let d = (moments[0][i].recorded - moments[j][i].recorded).abs();
                worst = worst.max(d / band);
            }
        }
        run.check(Check::holds(
            "windows_disjoint",
            disjoint,
            format!(
                "support centres at least {} sigma apart",
                rc.disjoint_sigmas
            ),
        ));
        run.check(Check::at_most(
            "redundant_inference",
            worst,
            cfg.tolerance_scale,
            "largest |phi_khat difference| between windows in units of the precision",
        ));
        run.metric("redundancy_worst_ratio", worst);
    }
    run.metric("precision", a0.precision);
    run.metric("precision_constant", a0.precision_constant);
    run.metric("mixedness_mean", mx.mean);
    run.metric("mixedness_std_err", mx.std_err);
    run.metric("redundancy_estimate", a0.redundancy_estimate);
    run.metric("min_determinant", min_det);
    Ok(())
}

fn toy_lindblad(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let t = &cfg.toy;
    let n = t.grid_points;
    let nu: Vec<f64> = (0..n)
        .map(|i| -t.grid_half_width + 2.0 * t.grid_half_width * i as f64 / (n - 1) as f64)
        .collect();
    let h = nu[1] - nu[0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = (raw.iter().map(|a| a.norm_sqr()).sum::<f64>() * h).sqrt();
    let psi: Vec<Complex64> = raw.iter().map(|a| a / norm).collect();
    let rho0 = DensityGrid::pure(nu.clone(), &psi)?;
    let closed = lindblad_decohere(&rho0, t.d, t.t)?;
    let opts = OdeOptions {
        rtol: cfg.tolerances.integrator * 1e-2,
        atol: 1e-14,
        ..OdeOptions::default()
    };
    let evolved = lindblad_evolve(&rho0, t.d, t.t, opts)?;
    let gen_err = max_of(
        closed
            .rho
            .iter()
            .zip(&evolved.rho)
            .map(|(a, b)| (a - b).norm()),
    );
    run.check(Check::at_most(
        "generator_vs_closed_form",
        gen_err,
        cfg.tol(cfg.tolerances.lindblad),
        "largest |rho_generator - rho_closed| over the grid",
    ));

    let model = PureDecoherenceModel::new(t.d, t.t, None, 0.0)?;
    let ell = model.decoherence_length();
    let mid = n / 2;
    let mut profile = CsvTable::new(&[
        "delta_nu",
        "suppression_closed",
        "suppression_generator",
        "gaussian",
    ]);
    for j in 0..n {
        let r0 = rho0.at(mid, j);
        let dn = nu[j] - nu[mid];
        profile.push(&[
            dn,
            (closed.at(mid, j) / r0).re,
            (evolved.at(mid, j) / r0).re,
            (-dn * dn / (2.0 * ell * ell)).exp(),
        ]);
    }
    profile.write(&run.path("lindblad_profile.csv"))?;

    let mut frag = CsvTable::new(&[
        "n_fragment",
        "R",
        "delta_nu",
        "redundancy",
        "overlap_closed",
        "overlap_explicit",
    ]);
    let divisors: Vec<usize> = (1..=t.n_env).filter(|f| t.n_env.is_multiple_of(*f)).collect();
    let rows = divisors
        .par_iter()
        .map(|&nf| {
            let r = t.n_env as f64 / nf as f64;
            let dn = ell * r.sqrt();
            Ok((
                nf,
                r,
                dn,
                redundancy_function(dn, t.d, t.t, None, None)?,
                fragment_overlap(0.0, dn, r, ell)?,
                fragment_overlap_explicit(0.0, dn, t.d, t.t, t.n_env, nf, t.env_grid_points)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let target = (-1.0f64).exp();
    let mut frag_dev: f64 = 0.0;
    let mut r_dev: f64 = 0.0;
    for &(nf, r, dn, red, oc, oe) in &rows {
        frag.push(&[nf as f64, r, dn, red, oc, oe]);
        frag_dev = frag_dev.max((oe - target).abs()).max((oc - target).abs());
        r_dev = r_dev.max((red / r - 1.0).abs());
    }
    frag.write(&run.path("fragments.csv"))?;
    run.check(Check::at_most(
        "redundancy_function",
        r_dev,
        1e-12,
        "R(ell sqrt(R)) = R from delta_nu^2 D T",
    ));
    run.check(Check::at_most(
        "fragment_overlap",
        frag_dev,
        cfg.tol(cfg.tolerances.fragment),
        "explicit finite-environment overlap at delta_nu = ell sqrt(R) vs 1/e",
    ));

    let rf = t.n_env as f64 / t.n_fragment as f64;
    let entropy = branch_entropy(&psi, h, ell * rf.sqrt())?;

    // Second moments of the same system with kinetic energy.
    let qbm = PureDecoherenceModel::new(t.d, t.t, Some(1.0), 0.0)?;
    let init = QbmMoments {
        nu2: 0.5,
        mu2: 0.5,
        sym: 0.0,
    };
    let mut qt = CsvTable::new(&["time", "nu2", "mu2", "sym", "determinant"]);
    let mut min_det = f64::INFINITY;
    for i in 0..=16 {
        let time = t.t * i as f64 / 16.0;
        let m = qbm_moments(&qbm, init, time)?;
        min_det = min_det.min(m.determinant());
        qt.push(&[time, m.nu2, m.mu2, m.sym, m.determinant()]);
    }
    qt.write(&run.path("qbm_moments.csv"))?;
    run.check(Check::at_most(
        "qbm_uncertainty",
        0.25 - min_det,
        1e-12,
        "second-moment determinant never drops below 1/4",
    ));
    run.metric("decoherence_length", ell);
    run.metric("generator_error", gen_err);
    run.metric("branch_entropy", entropy);
    run.metric("fragment_deviation", frag_dev);
    Ok(())
}

fn bell(sign: f64) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 4];
    v[0] = Complex64::new(1.0, 0.0);
    v[3] = Complex64::new(sign, 0.0);
    v
}

fn toy_ghz(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let t = &cfg.toy;
    let ghz = BranchState::ghz(t.n_sites, t.local_dim)?;
    let sites = (0..t.n_sites)
        .map(|i| RecordProjectorSet::computational(i, t.local_dim))
        .collect::<Result<Vec<_>>>()?;
    let ghz_ok = verify_records(&ghz, &sites)?;
    let ghz_r = single_site_redundancy(&ghz)?;

    let paired = BranchState::paired(t.n_pairs)?;
    let singles = (0..2 * t.n_pairs)
        .map(|i| RecordProjectorSet::computational(i, 2))
        .collect::<Result<Vec<_>>>()?;
    let pairs = (0..t.n_pairs)
        .map(|p| RecordProjectorSet::rank_one(vec![2 * p, 2 * p + 1], &[bell(1.0), bell(-1.0)], 2))
        .collect::<Result<Vec<_>>>()?;
    let paired_single = verify_records(&paired, &singles)?;
    let paired_pairs = verify_records(&paired, &pairs)?;
    let (before, after) = momentum_records_demo(t.momentum_n)?;

    let summary = serde_json::json!({
        "ghz": {
            "n_sites": t.n_sites,
            "local_dim": t.local_dim,
            "verify_records_single_sites": ghz_ok,
            "single_site_redundancy": ghz_r,
        },
        "paired": {
            "n_pairs": t.n_pairs,
            "verify_records_single_sites": paired_single,
            "verify_records_pairs": paired_pairs,
        },
        "momentum": {
            "n": t.momentum_n,
            "configuration_redundancy": before,
            "momentum_redundancy": after,
        },
    });
    write_json(&run.path("toy_ghz.json"), &summary)?;

    run.check(Check::holds(
        "ghz_records",
        ghz_ok,
        "single-site projectors record the GHZ branches",
    ));
    run.check(Check::holds(
        "ghz_redundancy",
        ghz_r == t.n_sites,
        format!("single-site redundancy {ghz_r} of {}", t.n_sites),
    ));
    run.check(Check::holds(
        "paired_single_site",
        !paired_single,
        "single sites carry no record of the paired branches",
    ));
    run.check(Check::holds(
        "paired_two_site",
        paired_pairs,
        "Bell-basis pair projectors record the branches",
    ));
    run.check(Check::holds(
        "momentum_redundancy",
        after == t.momentum_n,
        format!("momentum-space redundancy {after} of {}", t.momentum_n),
    ));
    run.metric("ghz_redundancy", ghz_r as f64);
    run.metric("momentum_redundancy", after as f64);
    run.metric("configuration_redundancy", before as f64);
    Ok(())
}

fn hermite_demo(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let hc = &cfg.hermite;
    let grid = HermiteGrid::symmetric(hc.half_width, hc.n_points)?;
    let gram = hermite_gram(grid, hc.n_max)?;
    let gram_dev = max_of(gram.iter().enumerate().flat_map(|(i, row)| {
        row.iter()
            .enumerate()
            .map(move |(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
    }));
    run.check(Check::at_most(
        "gram_identity",
        gram_dev,
        cfg.tol(cfg.tolerances.hermite),
        "largest |G - I| for the basis on the grid",
    ));

    let basis_n = 3.min(hc.n_max);
    let e: Vec<f64> = grid
        .points()
        .map(|x| hermite_function(basis_n, x))
        .collect();
    let ce = hermite_mode_decomposition(&e, grid, hc.n_max)?;
    let unit_dev = max_of(
        ce.iter()
            .enumerate()
            .map(|(n, v)| (v - if n == basis_n { 1.0 } else { 0.0 }).abs()),
    );
    run.check(Check::at_most(
        "basis_projection",
        unit_dev,
        cfg.tol(cfg.tolerances.hermite),
        "a basis function projects onto a unit vector",
    ));

    let f: Vec<f64> = grid
        .points()
        .map(|x| (-(x - hc.test_center).powi(2) / hc.test_width).exp())
        .collect();
    let coeffs = hermite_mode_decomposition(&f, grid, hc.n_max)?;
    let mut ct = CsvTable::new(&["n", "coefficient"]);
    for (n, c) in coeffs.iter().enumerate() {
        ct.push(&[n as f64, *c]);
    }
    ct.write(&run.path("hermite_coefficients.csv"))?;

    let mut orders: Vec<usize> = [2, 6, 12, 24]
        .into_iter()
        .filter(|&o| o < hc.n_max)
        .collect();
    orders.push(hc.n_max);
    let mut rt = CsvTable::new(&["order", "l2_error"]);
    let errors: Vec<f64> = orders
        .iter()
        .map(|&o| {
            let r = hermite_reconstruct(&coeffs[..=o], grid);
            r.iter()
                .zip(&f)
                .map(|(a, b)| (a - b).powi(2) * grid.h)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    for (o, e) in orders.iter().zip(&errors) {
        rt.push(&[*o as f64, *e]);
    }
    rt.write(&run.path("hermite_reconstruction.csv"))?;
    run.check(Check::holds(
        "reconstruction_converges",
        errors.windows(2).all(|w| w[1] <= w[0]),
        format!("L2 errors {errors:?}"),
    ));
    run.metric("gram_deviation", gram_dev);
    run.metric("final_l2_error", *errors.last().unwrap());
    Ok(())
}

/// Data files (everything but the report) in `dir`, sorted by name.
pub fn data_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != REPORT_FILE))
        .collect();
    out.sort();
    Ok(out)
}
