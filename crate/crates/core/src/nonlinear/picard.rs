use super::config::NonlinearConfig;
use super::direct::free_density;
use super::grid::{radial_poisson, RadialGrid, SpectralGrid};
use super::history::FieldHistory;
use crate::characteristics::RadialFieldSampler;
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::linresponse::{
    solve_linear, ForcingMethod, InitialDatumSpec, KGrid, RadialEvaluator, SpeedMap,
    VelocityQuadrature,
};
use crate::quadrature::lagrange4;
use crate::volterra::{apply_resolvent, solve_volterra_march, ModeSeries};
use num_complex::Complex64;
use rayon::prelude::*;

type V2 = [f64; 2];

/// 𝒩 = 𝒩₁ + 𝒩₂ on the radial grid at the assembly times, with
/// 𝒩₁ = H + Δ𝒩₁ (H the exact free-streaming density).
#[derive(Clone, Debug)]
pub struct ForcingField {
    pub times: Vec<f64>,
    pub free: Vec<Vec<f64>>,
    pub delta_n1: Vec<Vec<f64>>,
    pub n2: Vec<Vec<f64>>,
}

impl ForcingField {
    pub fn n1(&self, c: usize) -> Vec<f64> {
        self.free[c].iter().zip(&self.delta_n1[c]).map(|(a, b)| a + b).collect()
    }

    pub fn total(&self, c: usize) -> Vec<f64> {
        self.n1(c).iter().zip(&self.n2[c]).map(|(a, b)| a + b).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardIterate {
    pub iteration: usize,
    /// sup_{r,t} |e⁽ⁿ⁾ − e⁽ⁿ⁻¹⁾|
    pub distance: f64,
    /// distance / previous distance (NaN on the first iterate)
    pub ratio: f64,
    pub relaxed: bool,
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    pub history: FieldHistory,
    /// The linear solution used as E⁽⁰⁾.
    pub linear: FieldHistory,
    pub iterates: Vec<PicardIterate>,
    pub converged: bool,
    pub forcing: ForcingField,
}

#[inline]
fn field2<S: RadialFieldSampler + ?Sized>(f: &S, x: V2, s: f64) -> V2 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r == 0.0 {
        return [0.0; 2];
    }
    let e = f.radial_field(r, s) / r;
    [e * x[0], e * x[1]]
}

#[inline]
fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Reaction and foot terms for one (x, v) node: returns
/// (∫₀ᵗ E(X)·∇M₀(V) ds, ∫₀ᵗ E(x−(t−s)v)·∇M₀(v) ds, X(0), V(0)).
fn node_integrals<S: RadialFieldSampler + ?Sized>(
    eq: &Equilibrium,
    field: &S,
    r_box: f64,
    x: V2,
    v: V2,
    t: f64,
    ds: f64,
    max_dv: f64,
) -> Result<(f64, f64, V2, V2)> {
    let n = (t / ds).ceil().max(1.0) as usize;
    let h = -t / n as f64;
    let gv = eq.radial_grad_factor((v[0] * v[0] + v[1] * v[1]).sqrt());
    let src = |p: V2, q: V2, s: f64| -> (V2, f64) {
        let e = field2(field, p, s);
        let g = eq.radial_grad_factor((q[0] * q[0] + q[1] * q[1]).sqrt());
        (e, g * dot(e, q))
    };
    let free = |s: f64| -> f64 {
        let p = [x[0] - (t - s) * v[0], x[1] - (t - s) * v[1]];
        gv * dot(field2(field, p, s), v)
    };
    let (mut p, mut q) = (x, v);
    let (mut acc_t, mut acc_f) = (0.0, 0.0);
    let mut fb = free(t);
    for j in 0..n {
        let s = t + j as f64 * h;
        let (k1v, a1) = src(p, q, s);
        let k1x = q;
        let p2 = [p[0] + 0.5 * h * k1x[0], p[1] + 0.5 * h * k1x[1]];
        let q2 = [q[0] + 0.5 * h * k1v[0], q[1] + 0.5 * h * k1v[1]];
        let (k2v, a2) = src(p2, q2, s + 0.5 * h);
        let p3 = [p[0] + 0.5 * h * q2[0], p[1] + 0.5 * h * q2[1]];
        let q3 = [q[0] + 0.5 * h * k2v[0], q[1] + 0.5 * h * k2v[1]];
        let (k3v, a3) = src(p3, q3, s + 0.5 * h);
        let p4 = [p[0] + h * q3[0], p[1] + h * q3[1]];
        let q4 = [q[0] + h * k3v[0], q[1] + h * k3v[1]];
        let (k4v, a4) = src(p4, q4, s + h);
        let mut dv = 0.0;
        for d in 0..2 {
            p[d] += h / 6.0 * (k1x[d] + 2.0 * q2[d] + 2.0 * q3[d] + q4[d]);
            let inc = h / 6.0 * (k1v[d] + 2.0 * k2v[d] + 2.0 * k3v[d] + k4v[d]);
            q[d] += inc;
            dv += inc * inc;
        }
        if !(dv.sqrt() <= max_dv) {
            return Err(Error::BlowUp(format!("velocity change {} near s = {s}", dv.sqrt())));
        }
        acc_t += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        let fm = free(s + 0.5 * h);
        let fe = free(s + h);
        acc_f += h / 6.0 * (fb + 4.0 * fm + fe);
        fb = fe;
        // both curves outside the box and receding (backward in s): done
        let s_new = s + h;
        let pf = [x[0] - (t - s_new) * v[0], x[1] - (t - s_new) * v[1]];
        if dot(p, p) > r_box * r_box && dot(p, q) < 0.0 && dot(pf, pf) > r_box * r_box && dot(pf, v) < 0.0 {
            p = [p[0] - s_new * q[0], p[1] - s_new * q[1]];
            break;
        }
    }
    Ok((-acc_t, -acc_f, p, q))
}

/// Velocity rule used for the assembly: tangent-mapped speeds × cosines.
pub fn picard_quadrature(cfg: &NonlinearConfig) -> Result<VelocityQuadrature> {
    VelocityQuadrature::new(cfg.n_u, cfg.n_l, SpeedMap::Tangent { scale: 1.0 })
}

/// Δ𝒩₁(r_i, t) and 𝒩₂(r_i, t) on every grid radius, from backward
/// characteristics of the field history started at (x, v) = ((r_i, 0), v):
///   Δ𝒩₁ = ∫ [f₀(X(0), V(0)) − f₀(x − tv, v)] dv,
///   𝒩₂ = ∫∫ [E(x − (t−s)v, s)·∇M₀(v) − E(X(s), s)·∇M₀(V(s))] ds dv.
pub fn assemble_forcing_n<S: RadialFieldSampler + ?Sized>(
    eq: &Equilibrium,
    datum: &InitialDatumSpec,
    field: &S,
    grid: &RadialGrid,
    quad: &VelocityQuadrature,
    t: f64,
    ds: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if t <= 0.0 {
        return Ok((vec![0.0; grid.n], vec![0.0; grid.n]));
    }
    let rows: Vec<(f64, f64)> = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let x = [grid.r(i), 0.0];
            let mut dn1 = 0.0;
            let mut n2 = 0.0;
            for p in 0..quad.len() {
                let (s, mu) = (quad.speed[p], quad.mu[p]);
                let v = [s * mu, s * (1.0 - mu * mu).max(0.0).sqrt()];
                let (tt, tf, x0, v0) = node_integrals(eq, field, grid.r_max, x, v, t, ds, 1.0)?;
                let xf = [x[0] - t * v[0], x[1] - t * v[1]];
                let feet = datum.eval(dot(x0, x0).sqrt(), dot(v0, v0).sqrt());
                let free = datum.eval(dot(xf, xf).sqrt(), s);
                dn1 += quad.weight[p] * (feet - free);
                n2 += quad.weight[p] * (tf - tt);
            }
            Ok((dn1, n2))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

/// (K ⋆ ρ)(r, t_n) = ∫₀ᵗ (t−s) M̂₀((t−s)k) ρ̂(k, s) ds evaluated per sine
/// mode and transformed back: the v-integral of the free-streaming term
/// ∫∫ E(x − (t−s)v, s)·∇M₀(v) in closed form.
pub fn free_term_spectral(eq: &Equilibrium, history: &FieldHistory, n: usize, pad: usize) -> Result<Vec<f64>> {
    let sg = SpectralGrid::new(&history.grid, pad);
    let dt = history.dt;
    let t = n as f64 * dt;
    let hats: Vec<Vec<f64>> = (0..=n).map(|j| sg.forward(&history.rho[j])).collect();
    let mut out = vec![0.0; sg.k.len()];
    for (m, &k) in sg.k.iter().enumerate() {
        let mut acc = 0.0;
        for j in 0..=n {
            let tau = t - j as f64 * dt;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * tau * eq.m0_fourier(tau * k)? * hats[j][m];
        }
        out[m] = acc * dt;
    }
    Ok(sg.inverse(&out, history.grid.n))
}

/// ρ_lin and e_lin on the radial grid from the per-mode linear solution.
pub fn linear_history(cfg: &NonlinearConfig, grid: &RadialGrid) -> Result<FieldHistory> {
    let kg = KGrid::log(384, 1e-3, 30.0)?;
    let run = solve_linear(&cfg.equilibrium, &cfg.datum, &kg, cfg.dt, cfg.n_steps(), ForcingMethod::Separable)?;
    let ev = RadialEvaluator::new(&kg, grid.nodes());
    let rho: Vec<Vec<f64>> = (0..run.n_times()).map(|n| ev.density(&run.snapshot(n))).collect();
    FieldHistory::from_density(grid.clone(), cfg.dt, rho)
}

/// ρ̂ ↦ resolvent per sine mode, for a density correction δ𝒩 on the fine grid.
fn resolve_correction(
    eq: &Equilibrium,
    sg: &SpectralGrid,
    dn: &[Vec<f64>],
    dt: f64,
    n_out: usize,
) -> Result<Vec<Vec<f64>>> {
    let hats: Vec<Vec<f64>> = dn.par_iter().map(|row| sg.forward(row)).collect();
    let nt = dn.len();
    let solved: Vec<Vec<f64>> = sg
        .k
        .par_iter()
        .enumerate()
        .map(|(m, &k)| {
            let h = ModeSeries::new(k, dt, (0..nt).map(|n| Complex64::new(hats[n][m], 0.0)).collect());
            let r = if eq.is_poisson() { apply_resolvent(k, &h)? } else { solve_volterra_march(eq, k, &h)? };
            Ok(r.values.iter().map(|z| z.re).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..nt)
        .into_par_iter()
        .map(|n| {
            let col: Vec<f64> = solved.iter().map(|s| s[n]).collect();
            sg.inverse(&col, n_out)
        })
        .collect())
}

/// Mode P: fixed point on the field history,
///   e⁽ⁿ⁾ → 𝒩[e⁽ⁿ⁾] → ρ⁽ⁿ⁺¹⁾ = ρ_lin + 𝓡[𝒩 − H] → e⁽ⁿ⁺¹⁾ = radial_poisson(ρ⁽ⁿ⁺¹⁾),
/// where 𝓡 is the Volterra resolvent applied per sine mode and ρ_lin = 𝓡[H]
/// is taken from the exact linear solution. Starts from e⁽⁰⁾ = e_lin and
/// stops once sup|e⁽ⁿ⁺¹⁾ − e⁽ⁿ⁾| < tol_picard.
pub fn run_picard(cfg: &NonlinearConfig) -> Result<PicardReport> {
    cfg.validate()?;
    let grid = RadialGrid::new(cfg.n_r, cfg.r_max)?;
    let n_steps = cfg.n_steps();
    let dt = cfg.dt;
    let eq = &cfg.equilibrium;
    let linear = linear_history(cfg, &grid)?;
    let quad = picard_quadrature(cfg)?;
    let sg = SpectralGrid::new(&grid, cfg.pad_factor);

    // assembly times: every `stride` steps, plus the final step
    let stride = cfg.picard_stride.min(n_steps);
    let mut coarse: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *coarse.last().unwrap() != n_steps {
        coarse.push(n_steps);
    }
    let free = free_density(cfg, &grid)?;

    let mut current = linear.clone();
    let mut iterates = Vec::new();
    let mut converged = false;
    let mut prev_dist = f64::INFINITY;
    let mut growth = 0;
    let mut forcing = None;
    for it in 1..=cfg.picard_max_iter {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = coarse
            .iter()
            .map(|&n| {
                assemble_forcing_n(eq, &cfg.datum, &current, &grid, &quad, n as f64 * dt, cfg.picard_ds)
            })
            .collect::<Result<_>>()?;
        let ff = ForcingField {
            times: coarse.iter().map(|&n| n as f64 * dt).collect(),
            free: coarse.iter().map(|&n| free[n].clone()).collect(),
            delta_n1: rows.iter().map(|r| r.0.clone()).collect(),
            n2: rows.iter().map(|r| r.1.clone()).collect(),
        };
        let dn = interpolate_in_time(&ff, &coarse, grid.n, n_steps, dt);
        let corr = resolve_correction(eq, &sg, &dn, dt, grid.n)?;
        let rho: Vec<Vec<f64>> = linear
            .rho
            .iter()
            .zip(&corr)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let mut e: Vec<Vec<f64>> = rho.iter().map(|row| radial_poisson(&grid, row)).collect();
        let dist = sup_diff(&e, &current.e);
        let ratio = if iterates.is_empty() { f64::NAN } else { dist / prev_dist };
        let relaxed = ratio > 0.9 && cfg.relaxation < 1.0;
        if relaxed {
            for (new, old) in e.iter_mut().zip(&current.e) {
                for (a, b) in new.iter_mut().zip(old) {
                    *a = b + cfg.relaxation * (*a - b);
                }
            }
        }
        iterates.push(PicardIterate { iteration: it, distance: dist, ratio, relaxed });
        log::info!("picard iterate {it}: distance {dist:.3e}, ratio {ratio:.3e}");
        current = FieldHistory::new(grid.clone(), dt, rho, e)?;
        forcing = Some(ff);
        if dist < cfg.tol_picard {
            converged = true;
            break;
        }
        if dist > prev_dist {
            growth += 1;
            if growth >= 2 {
                return Err(Error::NonConvergence(format!(
                    "picard iteration is not contracting: {}",
                    iterate_log(&iterates)
                )));
            }
        }
        prev_dist = dist;
    }
    Ok(PicardReport { history: current, linear, iterates, converged, forcing: forcing.unwrap() })
}

pub fn iterate_log(iterates: &[PicardIterate]) -> String {
    iterates
        .iter()
        .map(|i| format!("[{}] d={:.3e} q={:.3e}", i.iteration, i.distance, i.ratio))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// 𝒩 − H on the fine time grid (four-point Lagrange between assembly times).
fn interpolate_in_time(ff: &ForcingField, coarse: &[usize], n_r: usize, n_steps: usize, dt: f64) -> Vec<Vec<f64>> {
    let nc = coarse.len();
    let uniform = coarse.windows(2).all(|w| w[1] - w[0] == coarse[1] - coarse[0]);
    let dev: Vec<Vec<f64>> = (0..nc)
        .map(|c| ff.delta_n1[c].iter().zip(&ff.n2[c]).map(|(a, b)| a + b).collect())
        .collect();
    (0..=n_steps)
        .map(|n| {
            let t = n as f64 * dt;
            (0..n_r)
                .map(|i| {
                    let col: Vec<f64> = dev.iter().map(|row| row[i]).collect();
                    if uniform {
                        let hc = (coarse[1] - coarse[0]) as f64 * dt;
                        lagrange4(&col, 0.0, hc, t).unwrap_or(0.0)
                    } else {
                        nonuniform_interp(&col, coarse, dt, t)
                    }
                })
                .collect()
        })
        .collect()
}

fn nonuniform_interp(col: &[f64], coarse: &[usize], dt: f64, t: f64) -> f64 {
    let ts: Vec<f64> = coarse.iter().map(|&n| n as f64 * dt).collect();
    let nc = ts.len();
    let j = ts.iter().position(|&x| x > t).unwrap_or(nc - 1).max(1);
    let lo = j.saturating_sub(2).min(nc.saturating_sub(4));
    let hi = (lo + 4).min(nc);
    let mut acc = 0.0;
    for a in lo..hi {
        let mut l = 1.0;
        for b in lo..hi {
            if a != b {
                l *= (t - ts[b]) / (ts[a] - ts[b]);
            }
        }
        acc += l * col[a];
    }
    acc
}
