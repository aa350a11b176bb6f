//! Post-processing of computed densities and fields: Littlewood–Paley
//! bands and the B-norm proxies built from them, decay-rate and frequency
//! fits, the static/oscillatory window decomposition, and the scattering
//! diagnostic on the characteristic deviations.

use crate::characteristics::{backward_grid, deviations, integrate_backward, norm, FieldSampler, IntegratorOptions, Vec3};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::jbracket;
use crate::linresponse::InitialDatumSpec;
use crate::nonlinear::{radial_poisson, RadialGrid, SpectralGrid};
use crate::quadrature::composite;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Exponent δ in the stationary and oscillatory norm weights.
pub const NORM_DELTA: f64 = 1e-4;

/// C² bump: 1 on |x| ≤ 5/4, 0 on |x| ≥ 8/5, quintic smoothstep between.
pub fn lp_bump(x: f64) -> f64 {
    let s = ((x.abs() - 1.25) / 0.35).clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Band multiplier φ_k(ξ) = φ(|ξ|/2^k) − φ(|ξ|/2^{k−1}).
pub fn lp_band(k: i32, xi: f64) -> f64 {
    let a = 2f64.powi(k);
    lp_bump(xi / a) - lp_bump(2.0 * xi / a)
}

/// Dyadic band decomposition on a radial grid.
#[derive(Clone, Debug)]
pub struct BandFilterBank {
    pub grid: RadialGrid,
    pub k_min: i32,
    pub k_max: i32,
    sg: SpectralGrid,
}

impl BandFilterBank {
    /// Bands whose nominal wavenumber 2^k lies in [4·2π/R_max, k_Nyq/4],
    /// k_Nyq = π/Δr: the box resolves at least four wavelengths and the grid
    /// at least eight points per wavelength.
    pub fn new(grid: &RadialGrid) -> Result<Self> {
        let lo = 4.0 * 2.0 * PI / grid.r_max;
        let hi = PI / grid.dr / 4.0;
        let (k_min, k_max) = (lo.log2().ceil() as i32, hi.log2().floor() as i32);
        if k_min > k_max {
            return Err(Error::InvalidInput(format!(
                "grid admits no dyadic band: need 2^k in [{lo:.3}, {hi:.3}]"
            )));
        }
        Ok(Self::with_range(grid, k_min, k_max))
    }

    /// Any range, without the resolution check.
    pub fn with_range(grid: &RadialGrid, k_min: i32, k_max: i32) -> Self {
        BandFilterBank { grid: grid.clone(), k_min, k_max, sg: SpectralGrid::new(grid, 1) }
    }

    pub fn bands(&self) -> std::ops::RangeInclusive<i32> {
        self.k_min..=self.k_max
    }

    /// Applies a radial Fourier multiplier m(|ξ|).
    pub fn apply_multiplier<M: Fn(f64) -> f64>(&self, f: &[f64], m: M) -> Result<Vec<f64>> {
        if f.len() != self.grid.n {
            return Err(Error::InvalidInput("profile does not match the grid".into()));
        }
        let fh: Vec<f64> = self.sg.forward(f).iter().zip(&self.sg.k).map(|(x, &k)| x * m(k)).collect();
        Ok(self.sg.inverse(&fh, self.grid.n))
    }

    /// P_k f.
    pub fn lp_filter(&self, f: &[f64], k: i32) -> Result<Vec<f64>> {
        if k < self.k_min || k > self.k_max {
            return Err(Error::InvalidInput(format!(
                "band {k} outside the resolved range [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        self.apply_multiplier(f, |xi| lp_band(k, xi))
    }
}

/// (1/2π²r)∫ φ₀(ξ) ξ sin(ξr) dξ, the radial kernel of P₀. The integral is
/// split at the kinks of φ₀ and uses panels no wider than 1/r.
fn band_kernel(r: f64) -> f64 {
    const KNOTS: [f64; 4] = [0.625, 0.8, 1.25, 1.6];
    let panel = (0.5 / r.max(1.0)).min(0.05);
    let seg = |a: f64, b: f64| {
        if r < 1e-12 {
            composite(&|x: f64| lp_band(0, x) * x * x, a, b, panel, 12)
        } else {
            composite(&|x: f64| lp_band(0, x) * x * (x * r).sin(), a, b, panel, 12) / r
        }
    };
    KNOTS.windows(2).map(|w| seg(w[0], w[1])).sum::<f64>() / (2.0 * PI * PI)
}

/// ‖𝓕⁻¹φ_k‖_{L¹(R³)}, independent of k by scaling; the kernel decays like
/// r⁻⁵, so the integral is truncated at r = 400.
pub fn band_kernel_l1() -> f64 {
    let h = 0.02;
    let n = (400.0 / h) as usize;
    let vals: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let r = i as f64 * h;
            band_kernel(r).abs() * r * r
        })
        .collect();
    let inner: f64 = vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n]);
    4.0 * PI * inner * h
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandNorm {
    pub k: i32,
    pub linf: f64,
    pub l1: f64,
}

/// Norm proxies of a density snapshot at time t.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub t: f64,
    pub bands: Vec<BandNorm>,
    /// B⁰_t(ρ) = sup_k {⟨t⟩³‖P_kρ‖_∞ + ‖P_kρ‖₁}.
    pub b0: f64,
    /// ⟨t⟩^{1−2δ} B⁰_t(⟨∇⟩ρ).
    pub stat: f64,
    /// ⟨t⟩^{−δ} B⁰_t(ρ) + ⟨t⟩^{1−2δ}[B⁰_t(|∇|ρ) + B⁰_t(∂_tρ)].
    pub osc: f64,
}

fn b0_of<M: Fn(f64) -> f64>(bank: &BandFilterBank, f: &[f64], t: f64, m: M) -> Result<(f64, Vec<BandNorm>)> {
    let w = jbracket(t).powi(3);
    let mut sup: f64 = 0.0;
    let mut out = Vec::new();
    for k in bank.bands() {
        let p = bank.apply_multiplier(f, |xi| lp_band(k, xi) * m(xi))?;
        let linf = p.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let abs: Vec<f64> = p.iter().map(|x| x.abs()).collect();
        let l1 = bank.grid.integrate(&abs);
        sup = sup.max(w * linf + l1);
        out.push(BandNorm { k, linf, l1 });
    }
    Ok((sup, out))
}

/// Evaluates the norm proxies; `drho_dt` adds the time-derivative part of
/// the oscillatory norm when available.
pub fn bnorm(bank: &BandFilterBank, rho: &[f64], t: f64, drho_dt: Option<&[f64]>) -> Result<NormReport> {
    let jt = jbracket(t);
    let (b0, bands) = b0_of(bank, rho, t, |_| 1.0)?;
    let (b_bracket, _) = b0_of(bank, rho, t, jbracket)?;
    let (b_grad, _) = b0_of(bank, rho, t, |xi| xi)?;
    let b_dt = match drho_dt {
        Some(d) => b0_of(bank, d, t, |_| 1.0)?.0,
        None => 0.0,
    };
    let w = jt.powf(1.0 - 2.0 * NORM_DELTA);
    Ok(NormReport {
        t,
        bands,
        b0,
        stat: w * b_bracket,
        osc: jt.powf(-NORM_DELTA) * b0 + w * (b_grad + b_dt),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMethod {
    /// Local maxima of the series, refined by a parabola through the three
    /// samples around each maximum.
    EnvelopePeaks,
    AllSamples,
}

/// log v = intercept + slope·log t on a window.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// R² of the competing model log v = a + b·t on the same points.
    pub exp_r_squared: f64,
    pub n_points: usize,
    pub window: (f64, f64),
    pub method: FitMethod,
}

struct Ols {
    slope: f64,
    intercept: f64,
    slope_stderr: f64,
    r_squared: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if n > 2.0 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    Ols { slope, intercept, slope_stderr, r_squared }
}

/// Refined local maxima of v inside the window.
pub fn envelope_peaks(t: &[f64], v: &[f64], window: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..v.len().saturating_sub(1) {
        if !(v[i] >= v[i - 1] && v[i] > v[i + 1]) {
            continue;
        }
        let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
        let den = a - 2.0 * b + c;
        let (tp, vp) = if den < 0.0 {
            let d = 0.5 * (a - c) / den;
            let h = 0.5 * (t[i + 1] - t[i - 1]);
            (t[i] + d * h, b - 0.25 * (a - c) * d)
        } else {
            (t[i], b)
        };
        if tp >= window.0 && tp <= window.1 {
            out.push((tp, vp));
        }
    }
    out
}

/// Power-law fit of a positive decaying series. Rejects the fit with
/// `ModelMismatch` when the power law explains the data poorly (R² < 0.9)
/// or an exponential leaves ten times less unexplained variance.
pub fn fit_decay_rate(t: &[f64], v: &[f64], window: (f64, f64), method: FitMethod) -> Result<RateFit> {
    if t.len() != v.len() {
        return Err(Error::InvalidInput("time and value series differ in length".into()));
    }
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InvalidInput(format!("bad fit window {window:?}")));
    }
    let pts: Vec<(f64, f64)> = match method {
        FitMethod::EnvelopePeaks => envelope_peaks(t, v, window),
        FitMethod::AllSamples => t
            .iter()
            .zip(v)
            .filter(|(&a, _)| a >= window.0 && a <= window.1)
            .map(|(&a, &b)| (a, b))
            .collect(),
    };
    if pts.len() < 8 {
        return Err(Error::InsufficientData(format!("{} points in {window:?}, need 8", pts.len())));
    }
    if pts.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InvalidInput("decay fit needs positive finite values".into()));
    }
    let lt: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let tt: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let lv: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let pow = ols(&lt, &lv);
    let exp = ols(&tt, &lv);
    if pow.r_squared < 0.9 || (1.0 - exp.r_squared) * 10.0 < 1.0 - pow.r_squared {
        return Err(Error::ModelMismatch(format!(
            "power-law R² = {:.4}, exponential R² = {:.4}",
            pow.r_squared, exp.r_squared
        )));
    }
    Ok(RateFit {
        slope: pow.slope,
        intercept: pow.intercept,
        slope_stderr: pow.slope_stderr,
        r_squared: pow.r_squared,
        exp_r_squared: exp.r_squared,
        n_points: pts.len(),
        window,
        method,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillationFit {
    pub frequency: f64,
    pub stderr: f64,
    pub mean_spacing: f64,
    pub crossings: Vec<f64>,
}

/// Zero crossings of v in the window, by linear interpolation.
pub fn zero_crossings(t: &[f64], v: &[f64], window: (f64, f64)) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..v.len().saturating_sub(1) {
        let (a, b) = (v[i], v[i + 1]);
        if a == 0.0 && i > 0 {
            continue;
        }
        if a == 0.0 || a * b < 0.0 {
            let tc = t[i] + (t[i + 1] - t[i]) * a / (a - b);
            if tc >= window.0 && tc <= window.1 {
                out.push(tc);
            }
        }
    }
    out
}

/// Angular frequency π / (mean zero-crossing spacing); needs ≥ 20 crossings.
pub fn fit_oscillation(t: &[f64], v: &[f64], window: (f64, f64)) -> Result<OscillationFit> {
    if t.len() != v.len() {
        return Err(Error::InvalidInput("time and value series differ in length".into()));
    }
    let crossings = zero_crossings(t, v, window);
    let n = crossings.len();
    if n < 20 {
        return Err(Error::InsufficientData(format!("{n} zero crossings in {window:?}, need 20")));
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    let m = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / m;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se_mean = (var / m).sqrt();
    Ok(OscillationFit { frequency: PI / mean, stderr: PI * se_mean / (mean * mean), mean_spacing: mean, crossings })
}

/// ρ(r, t) ≈ c₀(r) + Re(c₁(r)e^{−it}) on one window.
#[derive(Clone, Debug, PartialEq)]
pub struct StatOscWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub c0: Vec<f64>,
    pub c1: Vec<Complex64>,
    /// RMS residual per grid point.
    pub residual: Vec<f64>,
    /// Condition number of the 3×3 normal matrix.
    pub condition: f64,
}

impl StatOscWindow {
    pub fn t_mid(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }

    /// sup_r |e[c₀]|, the stationary field amplitude.
    pub fn stat_field_sup(&self, grid: &RadialGrid) -> f64 {
        radial_poisson(grid, &self.c0).iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// sup_r |e[c₁]|, the oscillating field amplitude.
    pub fn osc_field_sup(&self, grid: &RadialGrid) -> f64 {
        let re: Vec<f64> = self.c1.iter().map(|c| c.re).collect();
        let im: Vec<f64> = self.c1.iter().map(|c| c.im).collect();
        let (a, b) = (radial_poisson(grid, &re), radial_poisson(grid, &im));
        a.iter().zip(&b).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Default window length for the static/oscillatory fit.
pub const STAT_OSC_WINDOW: f64 = 6.0 * PI;

/// Least-squares fit of c₀ + Re(c₁e^{−it}) per grid point over windows of
/// length `window` with 50 % overlap. Windows whose normal equations have
/// condition number above 1e6 are rejected.
pub fn fit_stat_osc(t: &[f64], rho: &[Vec<f64>], window: f64) -> Result<Vec<StatOscWindow>> {
    if t.len() != rho.len() || t.len() < 3 {
        return Err(Error::InvalidInput("need matching time and density series".into()));
    }
    if !(window > 0.0) {
        return Err(Error::InvalidInput("window length must be positive".into()));
    }
    let (t0, t1) = (t[0], *t.last().unwrap());
    if t1 - t0 < window {
        return Err(Error::InsufficientData(format!("series spans {:.3}, window is {window:.3}", t1 - t0)));
    }
    let n_r = rho[0].len();
    let mut out = Vec::new();
    let mut start = t0;
    while start + window <= t1 + 1e-9 {
        let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= start - 1e-12 && t[i] <= start + window + 1e-12).collect();
        // normal matrix of the basis (1, cos t, sin t)
        let mut a = [[0.0; 3]; 3];
        for &i in &idx {
            let b = [1.0, t[i].cos(), t[i].sin()];
            for p in 0..3 {
                for q in 0..3 {
                    a[p][q] += b[p] * b[q];
                }
            }
        }
        let (ev_min, ev_max) = sym3_eig_extremes(&a);
        let condition = if ev_min > 0.0 { ev_max / ev_min } else { f64::INFINITY };
        if condition > 1e6 {
            return Err(Error::Unstable(format!(
                "normal equations ill-conditioned (κ = {condition:.3e}) on window [{start:.3}, {:.3}]",
                start + window
            )));
        }
        let inv = inv3(&a);
        let mut c0 = vec![0.0; n_r];
        let mut c1 = vec![Complex64::new(0.0, 0.0); n_r];
        let mut residual = vec![0.0; n_r];
        for j in 0..n_r {
            let mut rhs = [0.0; 3];
            for &i in &idx {
                let y = rho[i][j];
                rhs[0] += y;
                rhs[1] += y * t[i].cos();
                rhs[2] += y * t[i].sin();
            }
            let c: Vec<f64> = (0..3).map(|p| (0..3).map(|q| inv[p][q] * rhs[q]).sum()).collect();
            c0[j] = c[0];
            c1[j] = Complex64::new(c[1], c[2]);
            let ss: f64 = idx
                .iter()
                .map(|&i| (rho[i][j] - c[0] - c[1] * t[i].cos() - c[2] * t[i].sin()).powi(2))
                .sum();
            residual[j] = (ss / idx.len() as f64).sqrt();
        }
        out.push(StatOscWindow { t_start: start, t_end: start + window, c0, c1, residual, condition });
        start += 0.5 * window;
    }
    Ok(out)
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn inv3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let d = det3(a);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            m[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / d;
        }
    }
    m
}

/// Smallest and largest eigenvalues of a symmetric 3×3 matrix.
fn sym3_eig_extremes(a: &[[f64; 3]; 3]) -> (f64, f64) {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let d = [a[0][0], a[1][1], a[2][2]];
        return (d.iter().copied().fold(f64::INFINITY, f64::min), d.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = *a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (*x - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    (e3, e1)
}

/// Δ(t, 2t) for each requested t, from the deviations at s = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    /// Power-law fit of Δ(t, 2t) when at least eight times were given.
    pub fit: Option<RateFit>,
}

impl ScatteringReport {
    /// Δ non-increasing along the requested times.
    pub fn is_monotone(&self) -> bool {
        self.delta.windows(2).all(|w| w[1] <= w[0])
    }
}

/// (Ỹ(0), W̃(0)) for a seed at horizon t, with RK4 steps of at most `h`.
pub fn deviation_at_origin<F: FieldSampler + ?Sized>(
    field: &F,
    x: Vec3,
    v: Vec3,
    t: f64,
    h: f64,
    opts: &IntegratorOptions,
) -> Result<(Vec3, Vec3)> {
    let n = ((t / h).ceil() as usize).max(1);
    let (y, w) = deviations(x, v, &backward_grid(t, n), field, opts)?;
    Ok((*y.last().unwrap(), *w.last().unwrap()))
}

/// Δ(t, 2t) = sup over seeds of |Ỹ(0; t) − Ỹ(0; 2t)| + |W̃(0; t) − W̃(0; 2t)|.
pub fn scattering_diagnostic<F: FieldSampler + ?Sized>(
    field: &F,
    seeds: &[(Vec3, Vec3)],
    times: &[f64],
    h: f64,
    opts: &IntegratorOptions,
) -> Result<ScatteringReport> {
    if seeds.is_empty() || times.is_empty() {
        return Err(Error::InvalidInput("scattering diagnostic needs seeds and times".into()));
    }
    if times.iter().any(|&t| !(t > 0.0)) || !(h > 0.0) {
        return Err(Error::InvalidInput("times and step must be positive".into()));
    }
    let delta: Vec<f64> = times
        .par_iter()
        .map(|&t| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for &(x, v) in seeds {
                let (y1, w1) = deviation_at_origin(field, x, v, t, h, opts)?;
                let (y2, w2) = deviation_at_origin(field, x, v, 2.0 * t, h, opts)?;
                let dy = norm([y1[0] - y2[0], y1[1] - y2[1], y1[2] - y2[2]]);
                let dw = norm([w1[0] - w2[0], w1[1] - w2[1], w1[2] - w2[2]]);
                worst = worst.max(dy + dw);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let fit = if times.len() >= 8 {
        let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().copied().fold(0.0, f64::max);
        fit_decay_rate(times, &delta, (lo, hi), FitMethod::AllSamples).ok()
    } else {
        None
    };
    Ok(ScatteringReport { times: times.to_vec(), delta, fit })
}

/// Profile proxy f(x + tv, v, t) = f₀(X(0), V(0)) − ∫₀ᵗ E(X, s)·∇M₀(V) ds
/// along the backward characteristic of the linearized-in-f equation.
#[allow(clippy::too_many_arguments)]
pub fn profile_value<F: FieldSampler + ?Sized>(
    eq: &Equilibrium,
    datum: &InitialDatumSpec,
    field: &F,
    x: Vec3,
    v: Vec3,
    t: f64,
    h: f64,
    opts: &IntegratorOptions,
) -> Result<f64> {
    let n = ((t / h).ceil() as usize).max(1);
    let grid = backward_grid(t, n);
    let anchor = [x[0] + t * v[0], x[1] + t * v[1], x[2] + t * v[2]];
    let tr = integrate_backward(anchor, v, &grid, field, opts)?;
    let src: Vec<f64> = grid
        .iter()
        .zip(tr.pos.iter().zip(&tr.vel))
        .map(|(&s, (p, q))| {
            let e = field.field(*p, s);
            let g = eq.radial_grad_factor(norm(*q));
            g * (e[0] * q[0] + e[1] * q[1] + e[2] * q[2])
        })
        .collect();
    let step = t / n as f64;
    let integral = step * (src.iter().sum::<f64>() - 0.5 * (src[0] + src[n]));
    let (x0, v0) = tr.foot();
    Ok(datum.eval(norm(x0), norm(v0)) - integral)
}

/// sup over seeds of |f(x + tv, v, t) − f(x + 2tv, v, 2t)| for each t.
#[allow(clippy::too_many_arguments)]
pub fn profile_convergence<F: FieldSampler + ?Sized>(
    eq: &Equilibrium,
    datum: &InitialDatumSpec,
    field: &F,
    seeds: &[(Vec3, Vec3)],
    times: &[f64],
    h: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<f64>> {
    times
        .par_iter()
        .map(|&t| {
            let mut worst: f64 = 0.0;
            for &(x, v) in seeds {
                let a = profile_value(eq, datum, field, x, v, t, h, opts)?;
                let b = profile_value(eq, datum, field, x, v, 2.0 * t, h, opts)?;
                worst = worst.max((a - b).abs());
            }
            Ok(worst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_partition_of_unity() {
        for i in 1..400 {
            let xi = 0.05 * i as f64;
            let s: f64 = (-12..=12).map(|k| lp_band(k, xi)).sum();
            assert!((s - lp_bump(xi / 4096.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn eigen_extremes_of_diagonal_and_rotated() {
        let a = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let (lo, hi) = sym3_eig_extremes(&a);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
    }
}
