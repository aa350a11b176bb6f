use landau_core::characteristics::{FnRadial, IntegratorOptions, Radial, ZeroField};
use landau_core::diagnostics::*;
use landau_core::equilibrium::Equilibrium;
use landau_core::linresponse::{InitialDatumSpec, SpatialProfile, VelocityProfile};
use landau_core::nonlinear::RadialGrid;
use landau_core::{Complex64, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

/// Δr = 0.05 on [0, 40]: bands 0..=3.
fn fine() -> BandFilterBank {
    BandFilterBank::new(&RadialGrid::new(801, 40.0).unwrap()).unwrap()
}

fn gaussian(g: &RadialGrid, w: f64) -> Vec<f64> {
    g.nodes().iter().map(|r| (-(r / w).powi(2)).exp()).collect()
}

/// sin(k₀r)/r with k₀ = jπ/R_max: a single sine mode of the grid.
fn pure_mode(g: &RadialGrid, j: usize) -> (f64, Vec<f64>) {
    let k0 = j as f64 * PI / g.r_max;
    let f = g.nodes().iter().map(|&r| if r == 0.0 { k0 } else { (k0 * r).sin() / r }).collect();
    (k0, f)
}

fn sup_diff(a: &[f64], b: &[f64], range: std::ops::Range<usize>) -> f64 {
    range.map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

#[test]
fn band_range_follows_the_resolution_rule() {
    let bank = fine();
    assert_eq!(bank.bands(), 0..=3);
    let coarse = BandFilterBank::new(&RadialGrid::new(96, 40.0).unwrap()).unwrap();
    assert_eq!(coarse.bands(), 0..=0);
    assert!(matches!(BandFilterBank::new(&RadialGrid::new(16, 40.0).unwrap()), Err(Error::InvalidInput(_))));
    assert!(bank.lp_filter(&vec![0.0; 801], 4).is_err());
    assert!(bank.lp_filter(&vec![0.0; 800], 1).is_err());
}

#[test]
fn bands_and_tails_reconstruct_the_profile() {
    let bank = fine();
    let g = bank.grid.clone();
    let f = gaussian(&g, 3.0);
    let (lo, hi) = (bank.k_min, bank.k_max);
    let mut sum = bank
        .apply_multiplier(&f, |xi| 1.0 - lp_bump(xi / 2f64.powi(hi)) + lp_bump(xi / 2f64.powi(lo - 1)))
        .unwrap();
    for k in bank.bands() {
        for (s, p) in sum.iter_mut().zip(bank.lp_filter(&f, k).unwrap()) {
            *s += p;
        }
    }
    assert!(sup_diff(&sum, &f, 1..g.n - 1) < 1e-10);
}

#[test]
fn pure_mode_lands_in_one_band() {
    let bank = fine();
    let g = bank.grid.clone();
    // k₀ ≈ 1.96 lies where φ₁ = 1
    let (k0, f) = pure_mode(&g, 25);
    assert!(k0 > 1.6 && k0 < 2.5);
    for k in bank.bands() {
        let p = bank.lp_filter(&f, k).unwrap();
        let target: Vec<f64> = if k == 1 { f.clone() } else { vec![0.0; g.n] };
        assert!(sup_diff(&p, &target, 1..g.n) < 1e-10, "band {k}");
    }
}

#[test]
fn distant_bands_are_orthogonal() {
    let bank = fine();
    let f = gaussian(&bank.grid, 0.7);
    for j in bank.bands() {
        let pj = bank.lp_filter(&f, j).unwrap();
        for k in bank.bands().filter(|k| (k - j).abs() >= 2) {
            let pkj = bank.lp_filter(&pj, k).unwrap();
            assert!(pkj.iter().all(|x| x.abs() < 1e-12), "P{k}P{j}");
        }
    }
}

#[test]
fn band_kernel_l1_value_and_bound() {
    let c = band_kernel_l1();
    assert!(c > 14.9 && c < 15.1, "{c}");
    let bank = fine();
    let g = &bank.grid;
    for w in [0.5, 1.0, 3.0] {
        let f = gaussian(g, w);
        let l1 = g.integrate(&f);
        for k in bank.bands() {
            let p: Vec<f64> = bank.lp_filter(&f, k).unwrap().iter().map(|x| x.abs()).collect();
            assert!(g.integrate(&p) <= c * l1, "w={w} k={k}");
        }
    }
}

#[test]
fn bnorm_of_zero_is_zero() {
    let bank = fine();
    let r = bnorm(&bank, &vec![0.0; 801], 3.0, Some(&vec![0.0; 801])).unwrap();
    assert_eq!((r.b0, r.stat, r.osc), (0.0, 0.0, 0.0));
    assert!(r.bands.iter().all(|b| b.linf == 0.0 && b.l1 == 0.0));
}

#[test]
fn bnorm_of_a_single_band_profile() {
    let bank = fine();
    let g = bank.grid.clone();
    let (_, f) = pure_mode(&g, 25);
    let t = 2.0;
    let r = bnorm(&bank, &f, t, None).unwrap();
    let b1 = r.bands.iter().find(|b| b.k == 1).unwrap();
    assert!(r.bands.iter().filter(|b| b.k != 1).all(|b| b.linf < 1e-10));
    let jt3 = (1.0 + t * t).powf(1.5);
    assert!((r.b0 - (jt3 * b1.linf + b1.l1)).abs() < 1e-9 * r.b0);
}

#[test]
fn envelope_fit_recovers_power() {
    let t: Vec<f64> = (1..=10000).map(|i| 0.01 * i as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| t.powf(-2.0) * t.cos().abs()).collect();
    let fit = fit_decay_rate(&t, &v, (10.0, 100.0), FitMethod::EnvelopePeaks).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.01, "{}", fit.slope);
    assert!(fit.n_points >= 28 && fit.r_squared > 0.999);
}

#[test]
fn all_sample_fit_is_exact_on_a_power_law() {
    let t: Vec<f64> = (1..=100).map(|i| i as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-1.5)).collect();
    let fit = fit_decay_rate(&t, &v, (5.0, 100.0), FitMethod::AllSamples).unwrap();
    assert!((fit.slope + 1.5).abs() < 1e-12 && (fit.intercept - 3f64.ln()).abs() < 1e-10);
}

#[test]
fn exponential_decay_is_a_model_mismatch() {
    let t: Vec<f64> = (1..=100).map(|i| i as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| (-0.3 * t).exp()).collect();
    assert!(matches!(fit_decay_rate(&t, &v, (5.0, 100.0), FitMethod::AllSamples), Err(Error::ModelMismatch(_))));
}

#[test]
fn short_series_is_insufficient() {
    let t: Vec<f64> = (1..=7).map(|i| i as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| 1.0 / t).collect();
    assert!(matches!(fit_decay_rate(&t, &v, (1.0, 7.0), FitMethod::AllSamples), Err(Error::InsufficientData(_))));
    let t: Vec<f64> = (0..1000).map(|i| 0.01 * i as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| t.cos()).collect();
    assert!(matches!(fit_oscillation(&t, &v, (0.0, 10.0)), Err(Error::InsufficientData(_))));
}

#[test]
fn oscillation_fit_recovers_frequency() {
    let t: Vec<f64> = (0..20000).map(|i| 0.01 * i as f64).collect();
    let v: Vec<f64> = t.iter().map(|t| (1.3 * t + 0.2).cos() / (1.0 + t)).collect();
    let fit = fit_oscillation(&t, &v, (10.0, 190.0)).unwrap();
    assert!((fit.frequency - 1.3).abs() < 1e-4, "{}", fit.frequency);
    assert!((fit.mean_spacing - PI / 1.3).abs() < 1e-4);
}

fn synth(t: &[f64], c0: &[f64], c1: &[Complex64]) -> Vec<Vec<f64>> {
    t.iter()
        .map(|&s| c0.iter().zip(c1).map(|(a, c)| a + (c * Complex64::new(s.cos(), -s.sin())).re).collect())
        .collect()
}

#[test]
fn stat_osc_fit_is_exact_on_its_model() {
    let t: Vec<f64> = (0..=1200).map(|i| 0.05 * i as f64).collect();
    let c0 = vec![1.0, -0.5, 0.25];
    let c1 = vec![Complex64::new(0.3, -0.2), Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
    let wins = fit_stat_osc(&t, &synth(&t, &c0, &c1), STAT_OSC_WINDOW).unwrap();
    assert!(wins.len() >= 4);
    for w in &wins {
        assert!(w.condition < 10.0);
        for j in 0..3 {
            assert!((w.c0[j] - c0[j]).abs() < 1e-12 && (w.c1[j] - c1[j]).norm() < 1e-12);
        }
        assert!(w.max_residual() < 1e-12);
        assert!((w.t_end - w.t_start - STAT_OSC_WINDOW).abs() < 1e-12);
    }
    assert!((wins[1].t_start - wins[0].t_start - 0.5 * STAT_OSC_WINDOW).abs() < 1e-12);
}

#[test]
fn stat_osc_fit_under_noise() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let t: Vec<f64> = (0..=4000).map(|i| 0.01 * i as f64).collect();
    let c0 = vec![0.4];
    let c1 = vec![Complex64::new(-0.1, 0.6)];
    let mut rho = synth(&t, &c0, &c1);
    for row in rho.iter_mut() {
        row[0] += 1e-3 * (rng.gen::<f64>() - 0.5) * 12f64.sqrt();
    }
    for w in fit_stat_osc(&t, &rho, STAT_OSC_WINDOW).unwrap() {
        assert!((w.c0[0] - 0.4).abs() < 2e-4 && (w.c1[0] - c1[0]).norm() < 3e-4);
        assert!((w.residual[0] - 1e-3).abs() < 1e-4, "{}", w.residual[0]);
    }
}

#[test]
fn stat_osc_is_the_least_squares_minimizer() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let t: Vec<f64> = (0..=400).map(|i| 0.05 * i as f64).collect();
    let rho: Vec<Vec<f64>> = t.iter().map(|s| vec![(0.7 * s).sin() + 0.1 * s + rng.gen::<f64>()]).collect();
    let w = &fit_stat_osc(&t, &rho, 6.0 * PI).unwrap()[0];
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] <= w.t_end + 1e-12).collect();
    let ss = |c: [f64; 3]| -> f64 {
        idx.iter().map(|&i| (rho[i][0] - c[0] - c[1] * t[i].cos() - c[2] * t[i].sin()).powi(2)).sum()
    };
    let best = [w.c0[0], w.c1[0].re, w.c1[0].im];
    let s0 = ss(best);
    assert!((s0 / idx.len() as f64).sqrt() - w.residual[0] < 1e-12);
    for p in 0..3 {
        for d in [-1e-3, 1e-3, -0.1, 0.1] {
            let mut c = best;
            c[p] += d;
            assert!(ss(c) > s0);
        }
    }
}

#[test]
fn stat_osc_rejects_degenerate_windows() {
    let t: Vec<f64> = (0..=100).map(|i| 1e-4 * i as f64).collect();
    let rho = vec![vec![1.0]; t.len()];
    assert!(matches!(fit_stat_osc(&t, &rho, 5e-3), Err(Error::Unstable(_))));
    assert!(matches!(fit_stat_osc(&t, &rho, 1.0), Err(Error::InsufficientData(_))));
}

fn seeds() -> Vec<([f64; 3], [f64; 3])> {
    vec![([0.5, 0.0, 0.0], [0.3, 0.1, 0.0]), ([0.0, -1.0, 0.5], [0.0, 0.2, -0.4]), ([1.0, 1.0, 1.0], [-0.2, 0.0, 0.5])]
}

#[test]
fn scattering_of_free_streaming_vanishes() {
    let rep = scattering_diagnostic(&ZeroField, &seeds(), &[1.0, 2.0, 4.0], 0.1, &IntegratorOptions::default()).unwrap();
    assert!(rep.delta.iter().all(|&d| d < 1e-13));
    assert!(rep.fit.is_none());
    assert!(scattering_diagnostic(&ZeroField, &[], &[1.0], 0.1, &IntegratorOptions::default()).is_err());
}

#[test]
fn scattering_decays_in_a_dispersing_field() {
    // e(r, t) = r/(1 + r²)·⟨t⟩⁻⁴: the deviations converge as t → ∞
    let f = FnRadial(|r: f64, t: f64| 0.2 * r / (1.0 + r * r) / (1.0 + t * t).powi(2));
    let times: Vec<f64> = (0..8).map(|i| 2.0 * 1.3f64.powi(i)).collect();
    let rep = scattering_diagnostic(&Radial(&f), &seeds(), &times, 0.05, &IntegratorOptions::default()).unwrap();
    assert!(rep.is_monotone(), "{:?}", rep.delta);
    assert!(rep.fit.unwrap().slope < -1.0);
}

#[test]
fn profile_of_free_streaming_is_the_datum() {
    let eq = Equilibrium::poisson();
    let datum =
        InitialDatumSpec::new(SpatialProfile::Gaussian { width: 2.0 }, VelocityProfile::Gaussian { width: 1.0 }, 1e-3)
            .unwrap();
    let opts = IntegratorOptions::default();
    for (x, v) in seeds() {
        let p = profile_value(&eq, &datum, &ZeroField, x, v, 5.0, 0.1, &opts).unwrap();
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((p - datum.eval(r, s)).abs() < 1e-15);
    }
    let conv = profile_convergence(&eq, &datum, &ZeroField, &seeds(), &[1.0, 3.0], 0.1, &opts).unwrap();
    assert!(conv.iter().all(|&d| d < 1e-15));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bnorm_is_homogeneous(c in 0.01f64..100.0, w in 0.3f64..4.0, t in 0.0f64..50.0) {
        let bank = BandFilterBank::new(&RadialGrid::new(201, 40.0).unwrap()).unwrap();
        let f = gaussian(&bank.grid, w);
        let cf: Vec<f64> = f.iter().map(|x| c * x).collect();
        let (a, b) = (bnorm(&bank, &f, t, Some(&f)).unwrap(), bnorm(&bank, &cf, t, Some(&cf)).unwrap());
        for (x, y) in [(a.b0, b.b0), (a.stat, b.stat), (a.osc, b.osc)] {
            prop_assert!((c * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn band_filter_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let bank = BandFilterBank::new(&RadialGrid::new(201, 40.0).unwrap()).unwrap();
        let (f, g) = (gaussian(&bank.grid, 1.0), gaussian(&bank.grid, 2.5));
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let k = bank.k_min;
        let (pf, pg, pm) = (bank.lp_filter(&f, k).unwrap(), bank.lp_filter(&g, k).unwrap(), bank.lp_filter(&mix, k).unwrap());
        for i in 0..pm.len() {
            prop_assert!((pm[i] - a * pf[i] - b * pg[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn stat_osc_is_insensitive_to_window_length() {
    // exact-model data: 4π, 6π and 10π windows all return the same split
    let t: Vec<f64> = (0..=2000).map(|i| 0.02 * i as f64).collect();
    let c0 = vec![0.3, -1.2];
    let c1 = vec![Complex64::new(0.5, 0.5), Complex64::new(-0.2, 0.9)];
    let rho = synth(&t, &c0, &c1);
    for window in [4.0 * PI, 6.0 * PI, 10.0 * PI] {
        for w in fit_stat_osc(&t, &rho, window).unwrap() {
            for j in 0..2 {
                assert!((w.c0[j] - c0[j]).abs() < 1e-12 && (w.c1[j] - c1[j]).norm() < 1e-12);
            }
        }
    }
}
