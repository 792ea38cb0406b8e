//! Property tests for the physical and numerical invariants.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use squeezed_records::config::{parse, Scenario, ScenarioConfig};
use squeezed_records::cosmo::{Coupling, Epoch, InflationEpoch, ModeTriplet};
use squeezed_records::cubic::{adiabatic_initial_f, imf_radiation_closed, integrate_f, FMethod};
use squeezed_records::gaussian::{
    closed_form_a_inflation, closed_form_a_radiation_exact, gaussian_overlap, heisenberg_mode,
    two_point_from_a, two_point_from_heisenberg,
};
use squeezed_records::localized::WindowSpec;
use squeezed_records::numeric::{integrate, sine_integral, OdeOptions, QuadOptions};
use squeezed_records::records::{
    conditional_moments_inflation, conditional_moments_radiation, radiation_moments_closed,
    sample_long_field,
};
use squeezed_records::toy::{
    fragment_overlap, hermite_function, hermite_mode_decomposition, lindblad_decohere,
    lindblad_evolve, verify_records, BranchState, DensityGrid, HermiteGrid, RecordProjectorSet,
};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn inflation_kernel_is_pure(log_k in -2.0f64..2.0, log_kt in -4.0f64..2.0) {
        let k = 10f64.powf(log_k);
        let tau = -(10f64.powf(log_kt)) / k;
        let tp = two_point_from_a(closed_form_a_inflation(k, tau).unwrap()).unwrap();
        prop_assert!(tp.purity_error() < 1e-12);
    }

    #[test]
    fn radiation_kernel_is_pure(log_k in -2.0f64..2.0, ke in 0.0f64..60.0, log_x in -4.0f64..-1.0) {
        let k = 10f64.powf(log_k);
        let tau_f = -(10f64.powf(log_x)) / k;
        let tp = two_point_from_a(closed_form_a_radiation_exact(k, ke / k, tau_f).unwrap()).unwrap();
        prop_assert!(tp.purity_error() < 1e-12);
    }

    #[test]
    fn heisenberg_and_schroedinger_moments_agree(log_k in -1.0f64..1.0, log_kt in -3.0f64..1.5) {
        let k = 10f64.powf(log_k);
        let tau = -(10f64.powf(log_kt)) / k;
        let s = two_point_from_a(closed_form_a_inflation(k, tau).unwrap()).unwrap();
        let (p, q) = heisenberg_mode(k, tau).unwrap();
        let h = two_point_from_heisenberg(p, q);
        prop_assert!(close(s.phi_phi, h.phi_phi, 1e-10));
        prop_assert!(close(s.pi_pi, h.pi_pi, 1e-10));
        let scale = (s.phi_phi * s.pi_pi).sqrt();
        prop_assert!((s.phi_pi - h.phi_pi).abs() <= 1e-10 * scale);
    }

    #[test]
    fn subhorizon_power_spectrum_decays(log_k in -1.0f64..1.0, ke in 0.5f64..60.0) {
        let k = 10f64.powf(log_k);
        let tau_f = -1e-6 / k;
        let tp = two_point_from_a(closed_form_a_radiation_exact(k, ke / k, tau_f).unwrap()).unwrap();
        let envelope = tp.phi_phi * ke * ke * 2.0 * k.powi(3);
        prop_assert!((envelope - ke.sin().powi(2)).abs() < 1e-4, "{envelope}");
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(kt1 in -10.0f64..-0.01, kt2 in -10.0f64..-0.01) {
        let a = two_point_from_a(closed_form_a_inflation(1.0, kt1).unwrap()).unwrap();
        let b = two_point_from_a(closed_form_a_inflation(1.0, kt2).unwrap()).unwrap();
        let ab = gaussian_overlap(&a, &b).unwrap();
        prop_assert!((ab - gaussian_overlap(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!(ab <= 1.0 + 1e-12 && ab > 0.0);
        prop_assert!((gaussian_overlap(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sine_integral_matches_quadrature(x in 0.0f64..40.0) {
        let q = integrate(|t: f64| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, QuadOptions::default()).unwrap();
        prop_assert!((sine_integral(x) - q.value).abs() < 1e-10);
        prop_assert_eq!(sine_integral(-x), -sine_integral(x));
        prop_assert!(sine_integral(x) <= sine_integral(PI) + 1e-15);
    }

    #[test]
    fn fragment_overlap_is_inverse_e_at_the_redundancy_scale(r in 1.0f64..1e3, ell in 0.01f64..10.0) {
        let o = fragment_overlap(0.0, ell * r.sqrt(), r, ell).unwrap();
        prop_assert!((o - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn ghz_records_are_symmetric(n in 2usize..6, d in 2usize..4, i in 0usize..6, j in 0usize..6) {
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let ghz = BranchState::ghz(n, d).unwrap();
        let a = RecordProjectorSet::computational(i, d).unwrap();
        let b = RecordProjectorSet::computational(j, d).unwrap();
        let ab = verify_records(&ghz, &[a.clone(), b.clone()]).unwrap();
        let ba = verify_records(&ghz, &[b, a]).unwrap();
        prop_assert!(ab && ba);
    }

    #[test]
    fn hermite_projection_recovers_coefficients(c in proptest::collection::vec(-1.0f64..1.0, 6)) {
        let grid = HermiteGrid::symmetric(12.0, 1201).unwrap();
        let f: Vec<f64> = grid
            .points()
            .map(|x| c.iter().enumerate().map(|(n, a)| a * hermite_function(n, x)).sum())
            .collect();
        let got = hermite_mode_decomposition(&f, grid, 9).unwrap();
        for (n, v) in got.iter().enumerate() {
            let want = c.get(n).copied().unwrap_or(0.0);
            prop_assert!((v - want).abs() < 1e-10, "n = {n}: {v} vs {want}");
        }
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse(&text);
    }

    #[test]
    fn config_round_trips(seed in any::<u64>(), workers in 0usize..16, scale in 0.1f64..10.0, s in 0usize..7) {
        let mut cfg = ScenarioConfig::new(Scenario::ALL[s]);
        cfg.seed = seed;
        cfg.workers = workers;
        cfg.tolerance_scale = scale;
        let text = toml::to_string(&cfg).unwrap();
        prop_assert_eq!(parse(&text).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn conditional_determinant_floor(seed in any::<u64>(), theta in 0.0f64..PI, sigma in 0.5f64..2.0) {
        let field = sample_long_field(1e-3, 5.0, 24, seed).unwrap();
        let spec = WindowSpec::new([0.3, -0.2, 0.1], [100.0 * theta.cos(), 100.0 * theta.sin(), 0.0], sigma).unwrap();
        let c = Coupling::new(0.3, 0.2).unwrap();
        let m = conditional_moments_radiation(&spec, &field, 100.0, &c, -1e-3).unwrap();
        prop_assert!(m.determinant() >= 0.25 * (1.0 - 1e-8));
        let m = conditional_moments_inflation(&spec, &field, -1e-4, &c).unwrap();
        prop_assert!(m.determinant() >= 0.25 * (1.0 - 1e-8));
    }

    #[test]
    fn record_is_linear_in_the_background(seed in any::<u64>()) {
        let field = sample_long_field(1e-3, 5.0, 24, seed).unwrap();
        let double = field.scaled(2.0);
        let spec = WindowSpec::new([0.0; 3], [0.0, 0.0, 100.0], 1.0).unwrap();
        let c = Coupling::new(0.5, 0.5).unwrap();
        let a = conditional_moments_radiation(&spec, &field, 100.0, &c, -1e-3).unwrap();
        let b = conditional_moments_radiation(&spec, &double, 100.0, &c, -1e-3).unwrap();
        prop_assert!(close(b.cross, 2.0 * a.cross, 1e-8));
        let a = conditional_moments_inflation(&spec, &field, -1e-4, &c).unwrap();
        let b = conditional_moments_inflation(&spec, &double, -1e-4, &c).unwrap();
        prop_assert!(close(b.cross, 2.0 * a.cross, 1e-8));
    }

    #[test]
    fn leading_parts_cancel(phi in -5.0f64..5.0, excess in 0.0f64..1e-2) {
        prop_assume!(phi.abs() > 1e-3);
        let spec = WindowSpec::new([0.0; 3], [100.0, 0.0, 0.0], 1.0).unwrap();
        let c = Coupling::new(0.5, 0.5).unwrap();
        let m = radiation_moments_closed(&spec, 100.0, &c, -1e-3, phi, excess).unwrap();
        let leading = (m.coefficient * phi).powi(2);
        let naive = m.phi2 * m.pi2 - m.cross * m.cross;
        let structured = m.base_phi2 * m.pi2 + m.coefficient * m.coefficient * excess;
        prop_assert!((naive - structured).abs() <= 1e-10 * leading);
    }

    #[test]
    fn opposite_couplings_cancel_the_radiation_phase(g in 1e-4f64..0.5, eta in 10.0f64..100.0) {
        prop_assume!(eta.sin().abs() > 0.1 && (1.01 * eta).sin().abs() > 0.1);
        let t = ModeTriplet::new(1.0, 1.01, 0.01, 0.005).unwrap();
        let v = imf_radiation_closed(&t, eta, &Coupling::new(g, -g).unwrap(), -1e-3).unwrap();
        prop_assert_eq!(v, 0.0);
    }

    #[test]
    fn lindblad_generator_matches_closed_form(seed in any::<u64>(), d in 0.1f64..2.0, t in 0.1f64..5.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 24;
        let nu: Vec<f64> = (0..n).map(|i| -1.5 + 3.0 * i as f64 / (n - 1) as f64).collect();
        // A random Hermitian, unit-trace mixture of two pure states.
        let mut rho = vec![Complex64::default(); n * n];
        for w in [0.7, 0.3] {
            let psi: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let p = DensityGrid::pure(nu.clone(), &psi).unwrap();
            for (r, v) in rho.iter_mut().zip(&p.rho) {
                *r += w * v;
            }
        }
        let rho0 = DensityGrid { nu, rho };
        let closed = lindblad_decohere(&rho0, d, t).unwrap();
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-14, ..OdeOptions::default() };
        let evolved = lindblad_evolve(&rho0, d, t, opts).unwrap();
        let err = closed.rho.iter().zip(&evolved.rho).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6, "{err}");
        let trace: Complex64 = (0..n).map(|i| evolved.at(i, i)).sum();
        prop_assert!((trace - 1.0).norm() < 1e-10);
        prop_assert!(evolved.validate().is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn quadrature_and_ode_agree_on_random_triplets(
        kp in 0.6f64..1.4,
        qf in 0.05f64..0.5,
        cosine in -1.0f64..1.0,
        g in -0.05f64..0.05,
        gt in -0.05f64..0.05,
    ) {
        prop_assume!(g.abs() + gt.abs() > 1e-3);
        let q = qf * kp.min(1.0);
        let Ok(t) = ModeTriplet::new(1.0, kp, q, cosine * q) else {
            return Ok(());
        };
        let c = Coupling::new(g, gt).unwrap();
        let inf = InflationEpoch::new(1.0, -0.05).unwrap();
        let ep = Epoch::Inflation(inf);
        let f0 = adiabatic_initial_f(&t, -20.0, &ep, &c).unwrap();
        let a = integrate_f(&t, -20.0, -0.05, f0, &ep, &c, 1e-8, FMethod::Quadrature).unwrap();
        let b = integrate_f(&t, -20.0, -0.05, f0, &ep, &c, 1e-8, FMethod::Ode).unwrap();
        prop_assert!((a - b).norm() <= 1e-6 * a.norm(), "{a} vs {b}");
        let ep = Epoch::Radiation(inf.radiation());
        let a = integrate_f(&t, 0.0, 8.0, f0, &ep, &c, 1e-8, FMethod::Quadrature).unwrap();
        let b = integrate_f(&t, 0.0, 8.0, f0, &ep, &c, 1e-8, FMethod::Ode).unwrap();
        prop_assert!((a - b).norm() <= 1e-6 * a.norm(), "{a} vs {b}");
    }
}

#[test]
fn epochs_join_continuously() {
    let inf = InflationEpoch::new(1.0, -1e-2).unwrap();
    let (i, r) = (Epoch::Inflation(inf), Epoch::Radiation(inf.radiation()));
    let (a0, a1) = (i.scale_factor(-1e-2).unwrap(), r.scale_factor(0.0).unwrap());
    let (d0, d1) = (
        i.scale_factor_derivative(-1e-2).unwrap(),
        r.scale_factor_derivative(0.0).unwrap(),
    );
    assert!((a0 - a1).abs() <= 1e-12 * a0);
    assert!((d0 - d1).abs() <= 1e-12 * d0);
}

#[test]
fn wkb_phase_limit() {
    for k in [0.3, 1.0, 4.0] {
        let tau = -1e-5 / k;
        let a = closed_form_a_inflation(k, tau).unwrap();
        assert!((a.im * tau / (k * k) + 1.0).abs() < 1e-3);
    }
}
