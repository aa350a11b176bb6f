use landau_core::characteristics::*;
use proptest::prelude::*;

fn field() -> FnRadial<impl Fn(f64, f64) -> f64 + Sync> {
    FnRadial(|r: f64, t: f64| 0.3 * r / (1.0 + r * r) / (1.0 + t * t))
}

fn forward(t: f64, n: usize) -> Vec<f64> {
    backward_grid(t, n).into_iter().rev().collect()
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[test]
fn zero_field_lines_are_straight() {
    let (x, v) = ([1.0, -2.0, 0.5], [0.3, 0.1, -0.7]);
    let (y, w) = deviations(x, v, &backward_grid(7.0, 70), &ZeroField, &IntegratorOptions::default()).unwrap();
    assert!(y.iter().chain(&w).all(|d| norm(*d) < 1e-13));
}

#[test]
fn grids_must_be_monotone() {
    let opts = IntegratorOptions::default();
    assert!(integrate([0.0; 3], [0.0; 3], &[0.0, 1.0, 0.5], &ZeroField, &opts).is_err());
    assert!(integrate([0.0; 3], [0.0; 3], &[0.0], &ZeroField, &opts).is_err());
    assert!(integrate_backward([0.0; 3], [0.0; 3], &[0.0, 1.0], &ZeroField, &opts).is_err());
}

#[test]
fn reduced_trajectory_matches_full_one() {
    let f = field();
    let opts = IntegratorOptions::default();
    let (x, v) = ([1.2, 0.4, -0.3], [0.2, 0.5, 0.1]);
    let grid = forward(6.0, 600);
    let full = integrate(x, v, &grid, &Radial(&f), &opts).unwrap();
    let r0 = norm(x);
    let u0 = (x[0] * v[0] + x[1] * v[1] + x[2] * v[2]) / r0;
    let ell = norm(cross(x, v));
    let red = integrate_reduced(r0, u0, ell, &grid, &f, &opts).unwrap();
    for j in (0..grid.len()).step_by(50) {
        let (p, q) = (full.pos[j], full.vel[j]);
        let r = norm(p);
        let u = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / r;
        assert!((red.r[j] - r).abs() < 1e-9 && (red.u[j] - u).abs() < 1e-9, "j={j}");
        assert!((red.w(j) - norm(cross(p, q)) / r).abs() < 1e-9);
    }
}

#[test]
fn radial_line_passes_through_origin() {
    // ℓ = 0 uses the signed line: a particle aimed at the centre goes through
    let opts = IntegratorOptions::default();
    let tr = integrate_reduced(1.0, -1.0, 0.0, &forward(2.0, 200), &ZeroField, &opts).unwrap();
    assert!((tr.r[200] + 1.0).abs() < 1e-12);
    assert_eq!(tr.radial_state(200), (1.0, 1.0));
}

#[test]
fn picard_deviations_match_rk4() {
    let f = field();
    let (x, v) = ([0.8, -0.2, 0.4], [0.3, 0.3, -0.2]);
    let t = 5.0;
    let (y1, w1, _) = deviation_picard(x, v, t, 400, &Radial(&f), 50).unwrap();
    let (y2, w2) = deviations(x, v, &backward_grid(t, 400), &Radial(&f), &IntegratorOptions::default()).unwrap();
    for j in 0..=400 {
        assert!(norm([y1[j][0] - y2[j][0], y1[j][1] - y2[j][1], y1[j][2] - y2[j][2]]) < 1e-6);
        assert!(norm([w1[j][0] - w2[j][0], w1[j][1] - w2[j][1], w1[j][2] - w2[j][2]]) < 1e-6);
    }
}

#[test]
fn blow_up_is_reported() {
    let huge = FnRadial(|r: f64, _t: f64| 1e6 * r);
    let opts = IntegratorOptions::default();
    let r = integrate_reduced(1.0, 0.0, 0.5, &forward(1.0, 10), &huge, &opts);
    assert!(r.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn backward_forward_round_trip(
        x in prop::array::uniform3(-3.0f64..3.0),
        v in prop::array::uniform3(-1.0f64..1.0),
        t in 1.0f64..10.0,
    ) {
        let f = field();
        let opts = IntegratorOptions::default();
        let n = (t / 0.02).ceil() as usize;
        let fwd = integrate(x, v, &forward(t, n), &Radial(&f), &opts).unwrap();
        let back = integrate(fwd.pos[n], fwd.vel[n], &backward_grid(t, n), &Radial(&f), &opts).unwrap();
        let (x0, v0) = back.foot();
        prop_assert!(norm([x0[0] - x[0], x0[1] - x[1], x0[2] - x[2]]) < 1e-8);
        prop_assert!(norm([v0[0] - v[0], v0[1] - v[1], v0[2] - v[2]]) < 1e-8);
    }

    #[test]
    fn angular_momentum_is_conserved(
        x in prop::array::uniform3(0.5f64..3.0),
        v in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let f = field();
        let tr = integrate(x, v, &forward(5.0, 250), &Radial(&f), &IntegratorOptions::default()).unwrap();
        let l0 = cross(x, v);
        for (p, q) in tr.pos.iter().zip(&tr.vel) {
            let l = cross(*p, *q);
            prop_assert!(norm([l[0] - l0[0], l[1] - l0[1], l[2] - l0[2]]) < 1e-10 * norm(l0).max(1.0));
        }
    }
}
