use landau_core::equilibrium::Equilibrium;
use landau_core::linresponse::*;
use proptest::prelude::*;

fn datum(amplitude: f64, velocity: VelocityProfile) -> InitialDatumSpec {
    InitialDatumSpec::new(SpatialProfile::Gaussian { width: 1.0 }, velocity, amplitude).unwrap()
}

#[test]
fn invalid_datum_rejected() {
    assert!(InitialDatumSpec::new(SpatialProfile::Gaussian { width: -1.0 }, VelocityProfile::Poisson, 1.0).is_err());
    assert!(InitialDatumSpec::new(SpatialProfile::Gaussian { width: 1.0 }, VelocityProfile::Poisson, -1.0).is_err());
    assert!(KGrid::log(3, 0.1, 1.0).is_err());
}

#[test]
fn separable_and_quadrature_forcing_agree() {
    let f0 = datum(1.0, VelocityProfile::Gaussian { width: 0.8 });
    // t·k·|v| stays within what 96 angular nodes resolve
    let quad = VelocityQuadrature::new(96, 96, SpeedMap::Tangent { scale: 1.0 }).unwrap();
    for &k in &[0.05, 0.5, 2.0] {
        let a = free_streaming_forcing(&f0, k, 0.05, 100, ForcingMethod::Separable).unwrap();
        let b = free_streaming_forcing(&f0, k, 0.05, 100, ForcingMethod::Quadrature(&quad)).unwrap();
        assert!(a.max_diff(&b) < 1e-6 * a.sup_norm(), "k={k}: {}", a.max_diff(&b) / a.sup_norm());
    }
}

#[test]
fn initial_density_reconstructs_spatial_profile() {
    let f0 = datum(1.0, VelocityProfile::Poisson);
    let kgrid = KGrid::default_grid();
    let run = solve_linear(&Equilibrium::poisson(), &f0, &kgrid, 0.05, 2, ForcingMethod::Separable).unwrap();
    let radii: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
    let ev = RadialEvaluator::new(&kgrid, radii.clone());
    let rho = ev.density(&run.snapshot(0));
    for (r, x) in radii.iter().zip(&rho) {
        assert!((x - (-r * r).exp()).abs() < 1e-4, "r={r}: {x}");
    }
    // field of a Gaussian ball: e(r) = r⁻²∫₀^r e^{−s²}s²ds
    let e = ev.field(&run.snapshot(0));
    for (r, x) in radii.iter().zip(&e).skip(1) {
        let q = 0.25 * std::f64::consts::PI.sqrt() * libm_erf(*r) - 0.5 * r * (-r * r).exp();
        assert!((x - q / (r * r)).abs() < 1e-4, "r={r}");
    }
}

/// erf by its Taylor series (adequate for |x| ≤ 5 at this tolerance).
fn libm_erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn long_wave_mode_carries_the_charge_oscillation() {
    // ρ̂(k, t) = â(k) e^{−tk} cos t for Poisson-velocity data
    let f0 = datum(1.0, VelocityProfile::Poisson);
    let kgrid = KGrid::log(8, 1e-3, 1.0).unwrap();
    let run = solve_linear(&Equilibrium::poisson(), &f0, &kgrid, 0.01, 2000, ForcingMethod::Separable).unwrap();
    for (j, &k) in kgrid.k.iter().enumerate() {
        let a = f0.spatial.transform(k);
        for n in (0..=2000).step_by(100) {
            let t = n as f64 * 0.01;
            let exact = a * (-t * k).exp() * t.cos();
            let err = (run.rho_hat[j].values[n].re - exact).abs() / a;
            // product-trapezoid convolution: second order in dt
            assert!(err < 0.01 * 0.01 * (1.0 + t), "k={k} t={t}: {err:e}");
        }
    }
}

#[test]
fn representation_two_guard() {
    let quad = VelocityQuadrature::new(32, 16, SpeedMap::Truncated { v_max: 4.0 }).unwrap();
    let f0 = datum(1.0, VelocityProfile::Bump { radius: 4.0 });
    let samples = f0.samples(&quad, 0.5);
    assert!(decompose_rep_ii(&quad, &samples, 0.5, 0.1, 10).is_err());
    let samples = f0.samples(&quad, 0.05);
    assert!(decompose_rep_ii(&quad, &samples, 0.05, 0.1, 10).is_ok());
}

#[test]
fn field_summary_decays() {
    let f0 = datum(1.0, VelocityProfile::Poisson);
    let kgrid = KGrid::log(128, 1e-3, 20.0).unwrap();
    let run = solve_linear(&Equilibrium::poisson(), &f0, &kgrid, 0.05, 400, ForcingMethod::Separable).unwrap();
    let s = summarize_field(&run, 40.0, 161);
    assert_eq!(s.times.len(), 401);
    let early = s.sup_field[..40].iter().copied().fold(0.0, f64::max);
    let late = s.sup_field[360..].iter().copied().fold(0.0, f64::max);
    assert!(late < 0.05 * early, "{early} {late}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn response_is_linear_in_amplitude(eps in 1e-4f64..10.0) {
        let kgrid = KGrid::log(16, 1e-2, 5.0).unwrap();
        let eq = Equilibrium::poisson();
        let one = solve_linear(&eq, &datum(1.0, VelocityProfile::Poisson), &kgrid, 0.05, 100, ForcingMethod::Separable).unwrap();
        let scaled = solve_linear(&eq, &datum(eps, VelocityProfile::Poisson), &kgrid, 0.05, 100, ForcingMethod::Separable).unwrap();
        for (a, b) in one.rho_hat.iter().zip(&scaled.rho_hat) {
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x * eps - y).norm() <= 1e-12 * eps * x.norm().max(1.0));
            }
        }
    }

    #[test]
    fn rep_one_reconstructs_resolvent(k in 0.01f64..3.0) {
        let f0 = datum(1.0, VelocityProfile::Gaussian { width: 1.0 });
        let h = free_streaming_forcing(&f0, k, 0.005, 4000, ForcingMethod::Separable).unwrap();
        let sol = landau_core::volterra::apply_resolvent(k, &h).unwrap();
        let rec = decompose_rep_i(&h).reconstruct();
        prop_assert!(rec.max_diff(&sol) <= 1e-4 * sol.sup_norm());
    }
}
