use landau_core::equilibrium::Equilibrium;
use landau_core::volterra::*;
use landau_core::Complex64;
use proptest::prelude::*;

fn forcing(k: f64, dt: f64, n: usize, a: f64, w: f64) -> ModeSeries {
    ModeSeries::from_fn(k, dt, n, |t| Complex64::new(a * (w * t).cos(), 0.3 * a * (0.5 * t).sin()) * (-0.1 * t).exp())
}

#[test]
fn zero_forcing_gives_zero() {
    let eq = Equilibrium::poisson();
    let h = ModeSeries::from_fn(0.5, 0.01, 500, |_| Complex64::new(0.0, 0.0));
    assert_eq!(solve_volterra_march(&eq, 0.5, &h).unwrap().sup_norm(), 0.0);
    assert_eq!(apply_resolvent(0.5, &h).unwrap().sup_norm(), 0.0);
}

#[test]
fn bad_wavenumber_rejected() {
    let eq = Equilibrium::poisson();
    let h = ModeSeries::from_fn(0.0, 0.01, 10, |_| Complex64::new(1.0, 0.0));
    assert!(solve_volterra_march(&eq, 0.0, &h).is_err());
    assert!(apply_resolvent(-1.0, &h).is_err());
}

#[test]
fn resolvent_solution_has_small_residual() {
    let eq = Equilibrium::poisson();
    for &dt in &[0.02, 0.01] {
        let h = forcing(0.8, dt, (20.0 / dt) as usize, 1.0, 1.3);
        let rho = apply_resolvent(0.8, &h).unwrap();
        let res = volterra_residual(&eq, 0.8, &rho, &h).unwrap();
        assert!(res < 5.0 * dt * dt, "dt={dt}: {res}");
    }
}

#[test]
fn maxwellian_march_has_discrete_residual_zero() {
    let eq = Equilibrium::maxwellian();
    let h = forcing(0.5, 0.02, 1000, 1.0, 0.7);
    let rho = solve_volterra_march(&eq, 0.5, &h).unwrap();
    assert!(volterra_residual(&eq, 0.5, &rho, &h).unwrap() < 1e-10);
}

#[test]
fn kernel_samples_start_at_zero() {
    let eq = Equilibrium::poisson();
    let s = kernel_samples(&eq, 1.0, 0.1, 5).unwrap();
    assert_eq!(s[0], 0.0);
    assert!((s[3] - 0.3 * (-0.3f64).exp()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn march_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, k in 0.05f64..3.0) {
        let eq = Equilibrium::poisson();
        let (h1, h2) = (forcing(k, 0.02, 400, 1.0, 0.9), forcing(k, 0.02, 400, 1.0, 2.1));
        let mix = ModeSeries::new(k, 0.02, h1.values.iter().zip(&h2.values).map(|(x, y)| a * x + b * y).collect());
        let (r1, r2) = (solve_volterra_march(&eq, k, &h1).unwrap(), solve_volterra_march(&eq, k, &h2).unwrap());
        let rm = solve_volterra_march(&eq, k, &mix).unwrap();
        for n in 0..rm.len() {
            prop_assert!((rm.values[n] - a * r1.values[n] - b * r2.values[n]).norm() < 1e-12);
        }
    }

    #[test]
    fn march_and_resolvent_agree(k in 0.05f64..3.0, w in 0.0f64..3.0) {
        let eq = Equilibrium::poisson();
        let h = forcing(k, 0.005, 2000, 1.0, w);
        let a = solve_volterra_march(&eq, k, &h).unwrap();
        let b = apply_resolvent(k, &h).unwrap();
        prop_assert!(a.max_diff(&b) < 1e-4);
    }

    #[test]
    fn exponential_forcing_oracle(k in 0.05f64..3.0) {
        let h = ModeSeries::from_fn(k, 0.002, 5000, |t| Complex64::new((-t * k).exp(), 0.0));
        let rho = apply_resolvent(k, &h).unwrap();
        for (n, v) in rho.values.iter().enumerate() {
            prop_assert!((v.re - exponential_forcing_solution(k, n as f64 * 0.002)).abs() < 1e-5);
        }
    }
}
