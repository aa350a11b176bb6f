use super::config::NonlinearConfig;
use super::grid::{radial_poisson, RadialGrid, SpectralGrid};
use super::history::{interp_odd, FieldHistory};
use super::lattice::{PhaseQuadrature, VelocityLattice};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::linresponse::{free_streaming_forcing, ForcingMethod, KGrid, RadialEvaluator};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Chunk size for the deterministic per-worker deposition buffers.
const CHUNK: usize = 4096;

#[derive(Clone, Debug)]
pub struct DirectReport {
    pub history: FieldHistory,
    pub n_markers: usize,
    /// Σ w_p f₀(p): the initial perturbation mass carried by the markers.
    pub mass_initial: f64,
    /// max_n |mass(t_n) − mass_initial| / |mass_initial|, with
    /// mass = active + leaked − injected.
    pub mass_drift: f64,
    /// Mass carried out through R_max by the end of the run.
    pub leaked: f64,
    /// Mass carried in by re-injected background markers.
    pub injected: f64,
    /// max_n |ρ(R_max)| / max |ρ|.
    pub boundary_ratio: f64,
    /// Relative error of the lattice's background mass.
    pub lattice_mass_error: f64,
}

/// Markers in structure-of-arrays form.
struct Markers {
    r: Vec<f64>,
    u: Vec<f64>,
    ell: Vec<f64>,
    g: Vec<f64>,
    f0: Vec<f64>,
    weight: Vec<f64>,
    alive: Vec<bool>,
    // free-streaming companions (control variate)
    r0: Vec<f64>,
    u0: Vec<f64>,
    v2: Vec<f64>,
    // kick scratch: source and post-kick M₀ per marker
    dg: Vec<f64>,
    m0: Vec<f64>,
}

/// Exact free flight in reduced coordinates over time τ.
#[inline]
fn drift(r: f64, u: f64, ell: f64, tau: f64) -> (f64, f64) {
    let w = if r > 0.0 { ell / r } else { 0.0 };
    let v2 = u * u + w * w;
    let r2 = (r * r + 2.0 * r * u * tau + v2 * tau * tau).max(0.0);
    let rn = r2.sqrt();
    if rn == 0.0 {
        return (0.0, v2.sqrt());
    }
    (rn, (r * u + v2 * tau) / rn)
}

/// Tent deposition of Σ w_p q_p onto the grid nodes, followed by the
/// fourth-order correction of the tent smoothing. Next to the origin,
/// where dividing by r² would cost two orders, ρ = α + βr² + γr⁴ is fitted
/// to the first three tent moments instead.
fn deposit_density(grid: &RadialGrid, d: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let h = grid.dr;
    let big_d: Vec<f64> = (0..n)
        .map(|i| if i == 0 { 2.0 * d[0] } else { d[i] } / (4.0 * PI * h))
        .collect();
    let mut rho = vec![0.0; n];
    for i in 1..n - 1 {
        let q = (-big_d[i - 1] + 14.0 * big_d[i] - big_d[i + 1]) / 12.0;
        rho[i] = q / grid.r(i).powi(2);
    }
    rho[n - 1] = d[n - 1] / grid.tent_volume(n - 1);
    let m = origin_moments(grid);
    let c = solve3(m, [d[0], d[1], d[2]]);
    rho[0] = c[0];
    rho[1] = c[0] + c[1] * h * h + c[2] * h.powi(4);
    rho
}

/// M[i][j] = ∫ 4π r^{2+2j} W_i(r) dr for the tents W_0, W_1, W_2.
fn origin_moments(grid: &RadialGrid) -> [[f64; 3]; 3] {
    let h = grid.dr;
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        let ri = grid.r(i);
        for (j, out) in row.iter_mut().enumerate() {
            let f = |r: f64| 4.0 * PI * r.powi(2 + 2 * j as i32) * (1.0 - (r - ri).abs() / h);
            let mut acc = 0.0;
            for (a, b) in [((ri - h).max(0.0), ri), (ri, ri + h)] {
                if b > a {
                    let (x, w) = crate::quadrature::gl_interval(8, a, b);
                    acc += x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>();
                }
            }
            *out = acc;
        }
    }
    m
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][j] = b[i];
        }
        *o = det(m) / d;
    }
    out
}

#[inline]
fn tent(grid: &RadialGrid, r: f64) -> Option<(usize, f64)> {
    if !(r >= 0.0) || r > grid.r_max {
        return None;
    }
    let s = r / grid.dr;
    let i = (s.floor() as usize).min(grid.n - 2);
    Some((i, s - i as f64))
}

/// Free-streaming density H(r, t) = ∫ f₀(x − tv, v) dv of the separable
/// datum, inverted from its transform â(k) b̂(tk) on a fine log k-grid.
pub fn free_density(cfg: &NonlinearConfig, grid: &RadialGrid) -> Result<Vec<Vec<f64>>> {
    let kg = KGrid::log(384, 1e-3, 30.0)?;
    let n_steps = cfg.n_steps();
    let ev = RadialEvaluator::new(&kg, grid.nodes());
    let modes: Vec<_> = kg
        .k
        .iter()
        .map(|&k| free_streaming_forcing(&cfg.datum, k, cfg.dt, n_steps, ForcingMethod::Separable))
        .collect::<Result<_>>()?;
    Ok((0..=n_steps)
        .map(|n| {
            let snap: Vec<f64> = modes.iter().map(|m| m.values[n].re).collect();
            ev.density(&snap)
        })
        .collect())
}

/// Low-pass on the deposited deviation: ρ̂ ↦ ρ̂·exp(−(k/k_c(t))⁸) on the
/// grid's sine modes, k_c(t) = k_late + k_boost·e^{−t}. The lattice
/// quadrature is exact for the smooth initial datum and loses resolution
/// at high k only as free streaming shears it, hence the time-dependent cut.
struct DepositFilter {
    sg: SpectralGrid,
    k_late: f64,
    k_boost: f64,
}

impl DepositFilter {
    fn apply(&self, rho: &mut [f64], t: f64) {
        let n = rho.len();
        let kc = self.k_late + self.k_boost * (-t).exp();
        let mut fh = self.sg.forward(rho);
        for (f, k) in fh.iter_mut().zip(&self.sg.k) {
            *f *= (-(k / kc).powi(8)).exp();
        }
        // the boundary node is not a sine-series node (ρ need not vanish there)
        let last = rho[n - 1];
        rho.copy_from_slice(&self.sg.inverse(&fh, n));
        rho[n - 1] = last;
    }
}

/// Mode D: forward markers carrying g = f along the full characteristics,
/// with Strang splitting
///   half kick (u += ½Δt e, g += M₀(v_old) − M₀(v_new)) → exact free drift →
///   deposit & solve → half kick,
/// so that M₀ + g is transported exactly through each kick (consecutive
/// half kicks in the same field are merged). In the linearized variant the
/// kick leaves u unchanged and g picks up −Δt e ∂ᵤM₀. Each kick's source is
/// projected per cell onto zero net mass, so the marker mass is conserved
/// to rounding.
pub fn run_direct(cfg: &NonlinearConfig) -> Result<DirectReport> {
    cfg.validate()?;
    let grid = RadialGrid::new(cfg.n_r, cfg.r_max)?;
    let lattice = VelocityLattice::new(cfg.n_u, cfg.n_l)?;
    let eq = &cfg.equilibrium;
    let quad = PhaseQuadrature::new(&grid, &lattice, cfg.markers_per_cell, eq);
    let np = quad.len();
    let mut m = Markers {
        r: quad.r.clone(),
        u: quad.u.clone(),
        ell: quad.r.iter().zip(&quad.w).map(|(r, w)| r * w).collect(),
        g: vec![0.0; np],
        f0: vec![0.0; np],
        weight: quad.weight.clone(),
        alive: vec![true; np],
        r0: quad.r.clone(),
        u0: quad.u.clone(),
        v2: quad.u.iter().zip(&quad.w).map(|(u, w)| u * u + w * w).collect(),
        dg: vec![0.0; np],
        m0: vec![0.0; np],
    };
    for p in 0..np {
        m.f0[p] = cfg.datum.eval(m.r[p], m.v2[p].sqrt());
        m.g[p] = m.f0[p];
    }
    let mass_initial: f64 = m.weight.iter().zip(&m.f0).map(|(w, f)| w * f).sum();
    let lattice_mass_error = quad.background_mass_error(eq, cfg.r_max);

    let n_steps = cfg.n_steps();
    let dt = cfg.dt;
    let free = if cfg.control_variate { Some(free_density(cfg, &grid)?) } else { None };
    let filter = cfg.filter_k_late.map(|k_late| DepositFilter {
        sg: SpectralGrid::new(&grid, 1),
        k_late,
        k_boost: cfg.filter_k_boost,
    });

    let mut leaked = 0.0;
    let mut injected = 0.0;
    let mut mass_drift: f64 = 0.0;
    let mut rho_hist = Vec::with_capacity(n_steps + 1);
    let mut e_hist: Vec<Vec<f64>> = Vec::with_capacity(n_steps + 1);
    // enclosed charge R²e(R, t_j), for the inflow through R_max
    let mut q_edge = Vec::with_capacity(n_steps + 1);
    let r_max = grid.r_max;

    let (rho, e) = solve_field(&grid, &m, 0.0, free.as_ref().map(|f| &f[0][..]), filter.as_ref());
    q_edge.push(r_max * r_max * e[grid.n - 1]);
    rho_hist.push(rho);
    e_hist.push(e);
    kick(cfg, &grid, &mut m, &e_hist[0], 0.5 * dt);

    for n in 0..n_steps {
        let t1 = (n + 1) as f64 * dt;
        let (lost, gained) = drift_all(cfg, &mut m, &q_edge, t1);
        leaked += lost;
        injected += gained;
        let (rho, e) = solve_field(&grid, &m, t1, free.as_ref().map(|f| &f[n + 1][..]), filter.as_ref());
        if rho.iter().any(|x| !x.is_finite()) {
            return Err(Error::BlowUp(format!("non-finite density at t = {t1}")));
        }
        let tau = if n + 1 == n_steps { 0.5 * dt } else { dt };
        kick(cfg, &grid, &mut m, &e, tau);
        q_edge.push(r_max * r_max * e[grid.n - 1]);
        rho_hist.push(rho);
        e_hist.push(e);
        let active: f64 = m
            .weight
            .par_chunks(CHUNK)
            .zip(m.g.par_chunks(CHUNK).zip(m.alive.par_chunks(CHUNK)))
            .map(|(w, (g, a))| (0..w.len()).filter(|&i| a[i]).map(|i| w[i] * g[i]).sum::<f64>())
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        if mass_initial != 0.0 {
            mass_drift = mass_drift.max((active + leaked - injected - mass_initial).abs() / mass_initial.abs());
        }
    }
    let history = FieldHistory::new(grid, dt, rho_hist, e_hist)?;
    let boundary_ratio = history.boundary_ratio();
    if boundary_ratio > 1e-8 {
        log::info!("boundary density reaches {boundary_ratio:.2e} of the peak");
    }
    Ok(DirectReport {
        history,
        n_markers: np,
        mass_initial,
        mass_drift,
        leaked,
        injected,
        boundary_ratio,
        lattice_mass_error,
    })
}

/// Free drift of every marker over one step ending at t. Markers leaving
/// through R_max are either absorbed or replaced by mirrored background
/// markers entering from outside. Returns (mass out, mass in).
fn drift_all(cfg: &NonlinearConfig, m: &mut Markers, q_edge: &[f64], t: f64) -> (f64, f64) {
    let r_max = cfg.r_max;
    let dt = cfg.dt;
    let eq = &cfg.equilibrium;
    let inj = cfg.reinject;
    let flux: Vec<(f64, f64)> = m
        .r
        .par_chunks_mut(CHUNK)
        .zip(m.u.par_chunks_mut(CHUNK))
        .zip(m.ell.par_chunks(CHUNK))
        .zip(m.alive.par_chunks_mut(CHUNK))
        .zip(m.g.par_chunks_mut(CHUNK).zip(m.weight.par_chunks(CHUNK)))
        .map(|((((r, u), ell), alive), (g, w))| {
            let (mut lost, mut gained) = (0.0, 0.0);
            for i in 0..r.len() {
                if !alive[i] {
                    continue;
                }
                let (nr, nu) = drift(r[i], u[i], ell[i], dt);
                r[i] = nr;
                u[i] = nu;
                if nr > r_max {
                    lost += w[i] * g[i];
                    if inj {
                        r[i] = (2.0 * r_max - nr).max(0.0);
                        u[i] = -nu;
                        let wt = if r[i] > 0.0 { ell[i] / r[i] } else { 0.0 };
                        g[i] = inflow_value(eq, r_max, q_edge, dt, t, r[i], -nu, wt);
                        gained += w[i] * g[i];
                    } else {
                        alive[i] = false;
                    }
                }
            }
            (lost, gained)
        })
        .collect();
    flux.iter().fold((0.0, 0.0), |acc, f| (acc.0 + f.0, acc.1 + f.1))
}

/// Perturbation carried by a background marker entering the box at time t
/// with position (r, 0) and velocity (u, w), u < 0: along its straight past
/// path outside the box it felt the field Q(s)/|y|² of the enclosed charge,
/// so g = −G(|v|)∫ Q(s) (y·v)/|y|³ ds, with G = ∂ᵤM₀/u. On each step Q is
/// held at the interval mean and the path integral taken exactly,
/// ∫ (y·v)/|y|³ ds = 1/|y(a)| − 1/|y(b)|, with |y| clipped at R_max so the
/// in-box part of the last step contributes nothing. Charge outside the box
/// is neglected.
#[allow(clippy::too_many_arguments)]
fn inflow_value(eq: &Equilibrium, r_max: f64, q: &[f64], dt: f64, t: f64, r: f64, u: f64, w: f64) -> f64 {
    let speed = (u * u + w * w).sqrt();
    let at = |s: f64| {
        let (x, y) = (r - (t - s) * u, -(t - s) * w);
        (x * x + y * y).sqrt().max(r_max)
    };
    let mut j = q.len() - 1;
    let mut acc = 0.0;
    // last partial interval [t_j, t] with the latest charge
    let mut yb = at(t);
    let a = j as f64 * dt;
    if a < t {
        let ya = at(a);
        acc += q[j] * (1.0 / ya - 1.0 / yb);
        yb = ya;
    }
    while j > 0 {
        let ya = at((j - 1) as f64 * dt);
        acc += 0.5 * (q[j] + q[j - 1]) * (1.0 / ya - 1.0 / yb);
        j -= 1;
        yb = ya;
        if ya > 50.0 * r_max {
            // far tail with the charge frozen
            acc += q[j] * (1.0 / at(0.0) - 1.0 / ya);
            break;
        }
    }
    -eq.radial_grad_factor(speed) * acc
}

/// Deposits the markers (optionally as a deviation from exact free
/// streaming) and solves for the field.
fn solve_field(
    grid: &RadialGrid,
    m: &Markers,
    t: f64,
    free: Option<&[f64]>,
    filter: Option<&DepositFilter>,
) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let cv = free.is_some();
    let partial: Vec<Vec<f64>> = (0..m.r.len())
        .into_par_iter()
        .step_by(CHUNK)
        .map(|start| {
            let end = (start + CHUNK).min(m.r.len());
            let mut d = vec![0.0; n];
            for p in start..end {
                if m.alive[p] {
                    if let Some((i, s)) = tent(grid, m.r[p]) {
                        let q = m.weight[p] * m.g[p];
                        d[i] += q * (1.0 - s);
                        d[i + 1] += q * s;
                    }
                }
                if cv {
                    let rf = (m.r0[p] * m.r0[p] + 2.0 * m.r0[p] * m.u0[p] * t + m.v2[p] * t * t)
                        .max(0.0)
                        .sqrt();
                    if let Some((i, s)) = tent(grid, rf) {
                        let q = m.weight[p] * m.f0[p];
                        d[i] -= q * (1.0 - s);
                        d[i + 1] -= q * s;
                    }
                }
            }
            d
        })
        .collect();
    let mut d = vec![0.0; n];
    for part in &partial {
        for (a, b) in d.iter_mut().zip(part) {
            *a += b;
        }
    }
    let mut rho = deposit_density(grid, &d);
    if let Some(f) = filter {
        f.apply(&mut rho, t);
    }
    if let Some(h) = free {
        for (a, b) in rho.iter_mut().zip(h) {
            *a += b;
        }
    }
    let e = radial_poisson(grid, &rho);
    (rho, e)
}

/// Kick of length τ in the radial field e (grid samples).
fn kick(cfg: &NonlinearConfig, grid: &RadialGrid, m: &mut Markers, e: &[f64], tau: f64) {
    let eq = &cfg.equilibrium;
    let n = grid.n;
    let lin = cfg.linearized;
    let (r_all, ell_all, alive_all, w_all) = (&m.r, &m.ell, &m.alive, &m.weight);
    // source and background per cell, accumulated per chunk
    let sums: Vec<(Vec<f64>, Vec<f64>)> = m
        .dg
        .par_chunks_mut(CHUNK)
        .zip(m.m0.par_chunks_mut(CHUNK))
        .zip(m.u.par_chunks_mut(CHUNK))
        .enumerate()
        .map(|(c, ((dg, m0), u))| {
            let base = c * CHUNK;
            let mut src = vec![0.0; n];
            let mut bg = vec![0.0; n];
            for i in 0..dg.len() {
                let p = base + i;
                if !alive_all[p] {
                    continue;
                }
                let r = r_all[p];
                let ef = interp_odd(e, grid.dr, r.min(grid.r_max));
                let w = if r > 0.0 { ell_all[p] / r } else { 0.0 };
                let s_old = (u[i] * u[i] + w * w).sqrt();
                if lin {
                    dg[i] = -tau * ef * u[i] * eq.radial_grad_factor(s_old);
                    m0[i] = eq.radial(s_old);
                } else {
                    let un = u[i] + tau * ef;
                    let s_new = (un * un + w * w).sqrt();
                    let (a, b) = (eq.radial(s_old), eq.radial(s_new));
                    dg[i] = a - b;
                    m0[i] = b;
                    u[i] = un;
                }
                let cell = ((r / grid.dr) as usize).min(n - 1);
                src[cell] += w_all[p] * dg[i];
                bg[cell] += w_all[p] * m0[i];
            }
            (src, bg)
        })
        .collect();
    let mut src = vec![0.0; n];
    let mut bg = vec![0.0; n];
    for (s, b) in &sums {
        for c in 0..n {
            src[c] += s[c];
            bg[c] += b[c];
        }
    }
    // per-cell projection onto zero net source
    let lam: Vec<f64> = src.iter().zip(&bg).map(|(s, b)| if *b > 0.0 { s / b } else { 0.0 }).collect();
    let (dg_all, m0_all) = (&m.dg, &m.m0);
    m.g.par_chunks_mut(CHUNK).enumerate().for_each(|(c, g)| {
        let base = c * CHUNK;
        for i in 0..g.len() {
            let p = base + i;
            if alive_all[p] {
                let cell = ((r_all[p] / grid.dr) as usize).min(n - 1);
                g[i] += dg_all[p] - m0_all[p] * lam[cell];
            }
        }
    });
}
