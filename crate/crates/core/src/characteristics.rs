//! Characteristic curves of ∂ₛX = V, ∂ₛV = E(X, s) for a prescribed field,
//! in full 3D and in reduced spherical coordinates (r, u, ℓ), together with
//! the deviations from free streaming
//!   Ỹ(x, v, s, t) = X(x + tv, v, s, t) − x − sv,   W̃ = V − v.

use crate::error::{Error, Result};
use crate::quadrature::cumulative_uniform;

pub type Vec3 = [f64; 3];

/// A vector field E(x, t).
pub trait FieldSampler: Sync {
    fn field(&self, x: Vec3, t: f64) -> Vec3;
}

/// A radial field e(r, t), with E(x) = e(|x|) x/|x|.
pub trait RadialFieldSampler: Sync {
    fn radial_field(&self, r: f64, t: f64) -> f64;
}

/// Adapts a radial sampler to the vector interface.
pub struct Radial<'a, S: RadialFieldSampler + ?Sized>(pub &'a S);

impl<S: RadialFieldSampler + ?Sized> FieldSampler for Radial<'_, S> {
    fn field(&self, x: Vec3, t: f64) -> Vec3 {
        let r = norm(x);
        if r == 0.0 {
            return [0.0; 3];
        }
        let e = self.0.radial_field(r, t) / r;
        [e * x[0], e * x[1], e * x[2]]
    }
}

/// Closure-backed vector field.
pub struct FnField<F>(pub F);

impl<F: Fn(Vec3, f64) -> Vec3 + Sync> FieldSampler for FnField<F> {
    fn field(&self, x: Vec3, t: f64) -> Vec3 {
        (self.0)(x, t)
    }
}

/// Closure-backed radial field.
pub struct FnRadial<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> RadialFieldSampler for FnRadial<F> {
    fn radial_field(&self, r: f64, t: f64) -> f64 {
        (self.0)(r, t)
    }
}

pub struct ZeroField;

impl FieldSampler for ZeroField {
    fn field(&self, _x: Vec3, _t: f64) -> Vec3 {
        [0.0; 3]
    }
}

impl RadialFieldSampler for ZeroField {
    fn radial_field(&self, _r: f64, _t: f64) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    /// Largest admissible velocity change per step (blow-up guard).
    pub max_dv: f64,
    /// Radius below which reduced trajectories substep (centrifugal barrier).
    pub r_safe: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { max_dv: 1.0, r_safe: 0.04 }
    }
}

/// Characteristic through (x, v) at the anchor time, sampled on `s_grid`.
#[derive(Clone, Debug)]
pub struct TrajectorySet {
    pub x: Vec3,
    pub v: Vec3,
    pub anchor: f64,
    pub s_grid: Vec<f64>,
    pub pos: Vec<Vec3>,
    pub vel: Vec<Vec3>,
}

impl TrajectorySet {
    /// Ỹ(s) = X(s) − [x − (t − s)v]: deviation from the free line through
    /// the anchor point.
    pub fn y_dev(&self) -> Vec<Vec3> {
        self.s_grid
            .iter()
            .zip(&self.pos)
            .map(|(&s, p)| {
                let tau = self.anchor - s;
                [
                    p[0] - self.x[0] + tau * self.v[0],
                    p[1] - self.x[1] + tau * self.v[1],
                    p[2] - self.x[2] + tau * self.v[2],
                ]
            })
            .collect()
    }

    /// W̃(s) = V(s) − v.
    pub fn w_dev(&self) -> Vec<Vec3> {
        self.vel
            .iter()
            .map(|q| [q[0] - self.v[0], q[1] - self.v[1], q[2] - self.v[2]])
            .collect()
    }

    pub fn foot(&self) -> (Vec3, Vec3) {
        (*self.pos.last().unwrap(), *self.vel.last().unwrap())
    }
}

#[inline]
pub fn norm(x: Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[inline]
fn axpy(a: f64, x: Vec3, y: Vec3) -> Vec3 {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

/// Uniform grid from t down to 0 with n steps.
pub fn backward_grid(t: f64, n: usize) -> Vec<f64> {
    // the last node is exactly 0 (t·n/n can round below t)
    (0..=n).map(|j| if j == n { 0.0 } else { t - t * j as f64 / n as f64 }).collect()
}

fn check_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.len() < 2 {
        return Err(Error::InvalidInput("s-grid needs at least two points".into()));
    }
    let dir = (s_grid[1] - s_grid[0]).signum();
    if dir == 0.0 || s_grid.windows(2).any(|w| (w[1] - w[0]).signum() != dir) {
        return Err(Error::InvalidInput("s-grid must be strictly monotone".into()));
    }
    Ok(())
}

/// Classical RK4 along an arbitrary monotone grid (forward or backward).
pub fn integrate<F: FieldSampler + ?Sized>(
    x: Vec3,
    v: Vec3,
    s_grid: &[f64],
    field: &F,
    opts: &IntegratorOptions,
) -> Result<TrajectorySet> {
    check_grid(s_grid)?;
    let mut pos = Vec::with_capacity(s_grid.len());
    let mut vel = Vec::with_capacity(s_grid.len());
    let (mut p, mut q) = (x, v);
    pos.push(p);
    vel.push(q);
    for w in s_grid.windows(2) {
        let (s, h) = (w[0], w[1] - w[0]);
        let k1x = q;
        let k1v = field.field(p, s);
        let k2x = axpy(0.5 * h, k1v, q);
        let k2v = field.field(axpy(0.5 * h, k1x, p), s + 0.5 * h);
        let k3x = axpy(0.5 * h, k2v, q);
        let k3v = field.field(axpy(0.5 * h, k2x, p), s + 0.5 * h);
        let k4x = axpy(h, k3v, q);
        let k4v = field.field(axpy(h, k3x, p), s + h);
        let mut dv = [0.0; 3];
        for d in 0..3 {
            p[d] += h / 6.0 * (k1x[d] + 2.0 * k2x[d] + 2.0 * k3x[d] + k4x[d]);
            dv[d] = h / 6.0 * (k1v[d] + 2.0 * k2v[d] + 2.0 * k3v[d] + k4v[d]);
            q[d] += dv[d];
        }
        if !(norm(dv) <= opts.max_dv) {
            return Err(Error::BlowUp(format!(
                "velocity change {} in one step near s = {s}",
                norm(dv)
            )));
        }
        pos.push(p);
        vel.push(q);
    }
    Ok(TrajectorySet {
        x,
        v,
        anchor: s_grid[0],
        s_grid: s_grid.to_vec(),
        pos,
        vel,
    })
}

/// Backward characteristic through (x, v) at time t = s_grid[0].
pub fn integrate_backward<F: FieldSampler + ?Sized>(
    x: Vec3,
    v: Vec3,
    s_grid: &[f64],
    field: &F,
    opts: &IntegratorOptions,
) -> Result<TrajectorySet> {
    check_grid(s_grid)?;
    if s_grid[1] > s_grid[0] || *s_grid.last().unwrap() < 0.0 {
        return Err(Error::InvalidInput("backward grid must decrease from t into [0, t]".into()));
    }
    integrate(x, v, s_grid, field, opts)
}

/// Deviation functions (Ỹ, W̃) for the seed (x, v): the backward
/// characteristic is started from x + tv at time t.
pub fn deviations<F: FieldSampler + ?Sized>(
    x: Vec3,
    v: Vec3,
    s_grid: &[f64],
    field: &F,
    opts: &IntegratorOptions,
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let t = s_grid[0];
    let anchor = axpy(t, v, x);
    let tr = integrate_backward(anchor, v, s_grid, field, opts)?;
    Ok((tr.y_dev(), tr.w_dev()))
}

/// Reduced spherical characteristic: ṙ = u, u̇ = e(r, s) + ℓ²/r³ with ℓ
/// constant. For ℓ = 0 the signed-line form (r may change sign, e odd) is
/// used.
#[derive(Clone, Debug)]
pub struct ReducedTrajectory {
    pub ell: f64,
    pub anchor: f64,
    pub s_grid: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub min_r: f64,
    pub signed_line: bool,
}

impl ReducedTrajectory {
    /// Tangential speed w = ℓ/|r|.
    pub fn w(&self, j: usize) -> f64 {
        if self.signed_line {
            0.0
        } else {
            self.ell / self.r[j]
        }
    }

    /// |X| and the radial velocity (outward component) at index j.
    pub fn radial_state(&self, j: usize) -> (f64, f64) {
        let r = self.r[j];
        if r < 0.0 {
            (-r, -self.u[j])
        } else {
            (r, self.u[j])
        }
    }
}

#[inline]
fn reduced_accel<S: RadialFieldSampler + ?Sized>(field: &S, ell: f64, r: f64, s: f64) -> f64 {
    if ell == 0.0 {
        let e = field.radial_field(r.abs(), s);
        if r < 0.0 {
            -e
        } else {
            e
        }
    } else {
        field.radial_field(r, s) + ell * ell / (r * r * r)
    }
}

/// One RK4 step of the reduced system.
#[inline]
pub fn reduced_rk4_step<S: RadialFieldSampler + ?Sized>(
    field: &S,
    ell: f64,
    r: f64,
    u: f64,
    s: f64,
    h: f64,
) -> (f64, f64) {
    let a1 = reduced_accel(field, ell, r, s);
    let r2 = r + 0.5 * h * u;
    let u2 = u + 0.5 * h * a1;
    let a2 = reduced_accel(field, ell, r2, s + 0.5 * h);
    let r3 = r + 0.5 * h * u2;
    let u3 = u + 0.5 * h * a2;
    let a3 = reduced_accel(field, ell, r3, s + 0.5 * h);
    let r4 = r + h * u3;
    let u4 = u + h * a3;
    let a4 = reduced_accel(field, ell, r4, s + h);
    (
        r + h / 6.0 * (u + 2.0 * u2 + 2.0 * u3 + u4),
        u + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    )
}

/// Number of substeps needed so that a step of size |h| stays well
/// resolved against the centrifugal scale r.
#[inline]
pub fn barrier_substeps(r: f64, u: f64, ell: f64, h: f64, r_safe: f64) -> usize {
    if ell == 0.0 {
        return 1;
    }
    let speed = (u * u + (ell / r).powi(2)).sqrt();
    let ratio = h.abs() * speed / r;
    if r >= r_safe && ratio <= 0.1 {
        return 1;
    }
    let mut n = 1usize;
    while h.abs() / n as f64 * speed / r > 0.05 && n < 4096 {
        n *= 2;
    }
    n.max(if r < r_safe { 2 } else { 1 })
}

pub fn integrate_reduced<S: RadialFieldSampler + ?Sized>(
    r: f64,
    u: f64,
    ell: f64,
    s_grid: &[f64],
    field: &S,
    opts: &IntegratorOptions,
) -> Result<ReducedTrajectory> {
    check_grid(s_grid)?;
    if !(r > 0.0 || ell == 0.0) || ell < 0.0 {
        return Err(Error::InvalidInput("reduced seed needs r > 0 and ℓ ≥ 0".into()));
    }
    let signed_line = ell == 0.0;
    let mut rs = vec![r];
    let mut us = vec![u];
    let (mut cr, mut cu) = (r, u);
    let mut min_r = r.abs();
    for w in s_grid.windows(2) {
        let (s0, h) = (w[0], w[1] - w[0]);
        let n = barrier_substeps(cr, cu, ell, h, opts.r_safe);
        let hs = h / n as f64;
        let u_before = cu;
        for m in 0..n {
            let (nr, nu) = reduced_rk4_step(field, ell, cr, cu, s0 + m as f64 * hs, hs);
            cr = nr;
            cu = nu;
            min_r = min_r.min(cr.abs());
            if !signed_line && !(cr > 0.0) {
                return Err(Error::Unstable(format!(
                    "reduced trajectory crossed the centrifugal barrier near s = {s0}"
                )));
            }
        }
        // the barrier alone can reverse u; anything beyond that is the field
        let speed = (u_before * u_before + if signed_line { 0.0 } else { (ell / rs[rs.len() - 1]).powi(2) }).sqrt();
        if !((cu - u_before).abs() <= opts.max_dv + 2.0 * speed) {
            return Err(Error::BlowUp(format!("radial velocity jump near s = {s0}")));
        }
        rs.push(cr);
        us.push(cu);
    }
    Ok(ReducedTrajectory {
        ell,
        anchor: s_grid[0],
        s_grid: s_grid.to_vec(),
        r: rs,
        u: us,
        min_r,
        signed_line,
    })
}

/// Fixed-point iteration of
///   W̃(s) = −∫ₛᵗ E(x + τv + Ỹ(τ), τ) dτ,  Ỹ(s) = ∫ₛᵗ (τ − s) E(…) dτ
/// on a uniform grid from t down to 0, starting from Ỹ ≡ 0.
/// Returns (Ỹ, W̃, iterations).
pub fn deviation_picard<F: FieldSampler + ?Sized>(
    x: Vec3,
    v: Vec3,
    t: f64,
    n: usize,
    field: &F,
    max_iter: usize,
) -> Result<(Vec<Vec3>, Vec<Vec3>, usize)> {
    if n < 4 || !(t > 0.0) {
        return Err(Error::InvalidInput("deviation grid needs t > 0 and n ≥ 4".into()));
    }
    let h = t / n as f64;
    let taus: Vec<f64> = (0..=n).map(|j| t - j as f64 * h).collect();
    let mut y = vec![[0.0; 3]; n + 1];
    let mut w = vec![[0.0; 3]; n + 1];
    let mut last_change = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=max_iter {
        let e: Vec<Vec3> = taus
            .iter()
            .zip(&y)
            .map(|(&tau, yy)| field.field(axpy(1.0, *yy, axpy(tau, v, x)), tau))
            .collect();
        let mut ny = vec![[0.0; 3]; n + 1];
        let mut nw = vec![[0.0; 3]; n + 1];
        for d in 0..3 {
            let f: Vec<f64> = e.iter().map(|q| q[d]).collect();
            let g: Vec<f64> = e.iter().zip(&taus).map(|(q, &tau)| tau * q[d]).collect();
            // running integrals from t downwards: ∫_{τ_j}^{t}
            let ci = cumulative_uniform(&f, h, false);
            let cj = cumulative_uniform(&g, h, false);
            for j in 0..=n {
                nw[j][d] = -ci[j];
                ny[j][d] = cj[j] - taus[j] * ci[j];
            }
        }
        let change = y
            .iter()
            .zip(&ny)
            .chain(w.iter().zip(&nw))
            .map(|(a, b)| norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
            .fold(0.0, f64::max);
        y = ny;
        w = nw;
        if change < 1e-10 {
            return Ok((y, w, it));
        }
        if change > last_change {
            growth += 1;
            if growth >= 3 {
                return Err(Error::NonConvergence(format!(
                    "deviation iteration is not contracting (change {change:e} at iteration {it})"
                )));
            }
        }
        last_change = change;
    }
    Err(Error::NonConvergence(format!(
        "deviation iteration did not reach 1e-10 in {max_iter} iterations (last change {last_change:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_streaming_is_exact() {
        let g = backward_grid(3.0, 30);
        let tr = integrate_backward([1.0, 2.0, 3.0], [0.5, -0.2, 0.1], &g, &ZeroField, &Default::default())
            .unwrap();
        let (p, q) = tr.foot();
        assert!((p[0] - (1.0 - 1.5)).abs() < 1e-13 && (p[1] - 2.6).abs() < 1e-13);
        assert_eq!(q, [0.5, -0.2, 0.1]);
        assert!(tr.y_dev().iter().all(|y| norm(*y) < 1e-12));
    }

    #[test]
    fn constant_field_is_quadratic() {
        let e0 = [0.1, -0.05, 0.02];
        let f = FnField(move |_x: Vec3, _t: f64| e0);
        let (x, v, t) = ([0.3, 0.0, -1.0], [1.0, 0.5, 0.0], 2.0);
        let tr = integrate_backward(x, v, &backward_grid(t, 10), &f, &Default::default()).unwrap();
        let (p, q) = tr.foot();
        for d in 0..3 {
            assert!((q[d] - (v[d] - t * e0[d])).abs() < 1e-13);
            assert!((p[d] - (x[d] - t * v[d] + 0.5 * t * t * e0[d])).abs() < 1e-13);
        }
    }

    #[test]
    fn reduced_free_motion_conserves_speed() {
        let g = backward_grid(5.0, 200);
        let tr = integrate_reduced(0.5, -0.3, 0.2, &g, &ZeroField, &Default::default()).unwrap();
        let s0 = 0.3f64.powi(2) + (0.2f64 / 0.5).powi(2);
        for j in 0..g.len() {
            let s = tr.u[j].powi(2) + (0.2 / tr.r[j]).powi(2);
            assert!((s - s0).abs() < 1e-8);
        }
    }
}
