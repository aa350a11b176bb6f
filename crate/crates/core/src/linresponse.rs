//! Linearized Vlasov–Poisson around M₀: free-streaming forcing, per-mode
//! density through the Volterra resolvent, radial reconstruction of ρ and E,
//! and the two static/oscillatory representations of the density.

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::quadrature::{self, int_s2_j0, int_s_j1, sph_j0, sph_j1};
use crate::volterra::{apply_resolvent, solve_volterra_march, ModeSeries};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Radial spatial factor a(|x|).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpatialProfile {
    /// a(r) = exp(−(r/width)²)
    Gaussian { width: f64 },
}

impl SpatialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            SpatialProfile::Gaussian { width } => (-(r / width).powi(2)).exp(),
        }
    }

    /// â(k) = ∫ a(|x|) e^{−ix·ξ} dx at |ξ| = k.
    pub fn transform(&self, k: f64) -> f64 {
        match *self {
            SpatialProfile::Gaussian { width } => {
                (PI * width * width).powf(1.5) * (-0.25 * width * width * k * k).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpatialProfile::Gaussian { width } if width > 0.0 && width.is_finite() => Ok(()),
            _ => Err(Error::InvalidInput(format!("bad spatial profile {self:?}"))),
        }
    }
}

/// Isotropic velocity factor b(|v|), normalized to ∫b dv = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityProfile {
    /// b = M₀, the Poisson profile itself.
    Poisson,
    /// Gaussian with per-component standard deviation `width`.
    Gaussian { width: f64 },
    /// Compactly supported C(1 − |v|²/R²)⁴ on |v| < R.
    Bump { radius: f64 },
}

impl VelocityProfile {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            VelocityProfile::Poisson => {
                let d = 1.0 + s * s;
                1.0 / (PI * PI * d * d)
            }
            VelocityProfile::Gaussian { width } => {
                (2.0 * PI * width * width).powf(-1.5) * (-0.5 * (s / width).powi(2)).exp()
            }
            VelocityProfile::Bump { radius } => {
                if s >= radius {
                    0.0
                } else {
                    let c = 3465.0 / (512.0 * PI * radius.powi(3));
                    c * (1.0 - (s / radius).powi(2)).powi(4)
                }
            }
        }
    }

    /// (1/s) db/ds, so that ∇_v b = v · grad_factor(|v|).
    pub fn grad_factor(&self, s: f64) -> f64 {
        match *self {
            VelocityProfile::Poisson => {
                let d = 1.0 + s * s;
                -4.0 / (PI * PI * d * d * d)
            }
            VelocityProfile::Gaussian { width } => -self.eval(s) / (width * width),
            VelocityProfile::Bump { radius } => {
                if s >= radius {
                    0.0
                } else {
                    let c = 3465.0 / (512.0 * PI * radius.powi(3));
                    -8.0 * c * (1.0 - (s / radius).powi(2)).powi(3) / (radius * radius)
                }
            }
        }
    }

    /// b̂(η) at |η| = eta.
    pub fn transform(&self, eta: f64) -> f64 {
        match *self {
            VelocityProfile::Poisson => (-eta).exp(),
            VelocityProfile::Gaussian { width } => (-0.5 * width * width * eta * eta).exp(),
            VelocityProfile::Bump { radius } => {
                if eta < 1e-10 {
                    return 1.0;
                }
                let f = |s: f64| self.eval(s) * s * (eta * s).sin();
                let panel = (PI / eta).min(radius / 4.0);
                4.0 * PI / eta * quadrature::composite(&f, 0.0, radius, panel, 20)
            }
        }
    }

    /// Largest speed carrying weight (∞ for non-compact profiles).
    pub fn support(&self) -> f64 {
        match *self {
            VelocityProfile::Bump { radius } => radius,
            _ => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            VelocityProfile::Poisson => true,
            VelocityProfile::Gaussian { width } => width > 0.0 && width.is_finite(),
            VelocityProfile::Bump { radius } => radius > 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad velocity profile {self:?}")))
        }
    }
}

/// Separable initial perturbation f₀(x, v) = ε a(|x|) b(|v|).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDatumSpec {
    pub spatial: SpatialProfile,
    pub velocity: VelocityProfile,
    pub amplitude: f64,
}

impl InitialDatumSpec {
    pub fn new(spatial: SpatialProfile, velocity: VelocityProfile, amplitude: f64) -> Result<Self> {
        spatial.validate()?;
        velocity.validate()?;
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidInput(format!("amplitude must be ≥ 0, got {amplitude}")));
        }
        Ok(InitialDatumSpec { spatial, velocity, amplitude })
    }

    #[inline]
    pub fn eval(&self, r: f64, speed: f64) -> f64 {
        self.amplitude * self.spatial.eval(r) * self.velocity.eval(speed)
    }

    /// f̂₀(ξ, v) at |ξ| = k (spatial transform only).
    pub fn spatial_transform(&self, k: f64, speed: f64) -> f64 {
        self.amplitude * self.spatial.transform(k) * self.velocity.eval(speed)
    }

    /// Samples of f̂₀(ξ, v) on the quadrature nodes at |ξ| = k.
    pub fn samples(&self, quad: &VelocityQuadrature, k: f64) -> Vec<f64> {
        let a = self.amplitude * self.spatial.transform(k);
        quad.speed.iter().map(|&s| a * self.velocity.eval(s)).collect()
    }
}

/// How |v| is laid out by the velocity quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpeedMap {
    /// Gauss–Legendre on [0, v_max].
    Truncated { v_max: f64 },
    /// |v| = scale · tan θ with Gauss–Legendre in θ ∈ [0, π/2): covers the
    /// whole half-line, so algebraic tails such as M₀ are integrated fully.
    Tangent { scale: f64 },
}

/// Tensor rule for ∫ g(v) dv = 2π ∫∫ g |v|² d|v| dμ, μ = cos∠(v, ξ).
#[derive(Clone, Debug)]
pub struct VelocityQuadrature {
    pub speed: Vec<f64>,
    pub mu: Vec<f64>,
    pub weight: Vec<f64>,
    pub n_angle: usize,
}

impl VelocityQuadrature {
    pub fn new(n_speed: usize, n_angle: usize, map: SpeedMap) -> Result<Self> {
        if n_speed < 2 || n_angle < 2 {
            return Err(Error::InvalidInput("quadrature needs at least 2×2 nodes".into()));
        }
        let (s_nodes, s_weights): (Vec<f64>, Vec<f64>) = match map {
            SpeedMap::Truncated { v_max } => quadrature::gl_interval(n_speed, 0.0, v_max),
            SpeedMap::Tangent { scale } => {
                let (th, w) = quadrature::gl_interval(n_speed, 0.0, 0.5 * PI);
                th.iter()
                    .zip(w.iter())
                    .map(|(&t, &w)| (scale * t.tan(), w * scale / (t.cos() * t.cos())))
                    .unzip()
            }
        };
        let (mu_nodes, mu_weights) = quadrature::gl_interval(n_angle, -1.0, 1.0);
        let mut speed = Vec::with_capacity(n_speed * n_angle);
        let mut mu = Vec::with_capacity(n_speed * n_angle);
        let mut weight = Vec::with_capacity(n_speed * n_angle);
        for (&s, &ws) in s_nodes.iter().zip(s_weights.iter()) {
            for (&m, &wm) in mu_nodes.iter().zip(mu_weights.iter()) {
                speed.push(s);
                mu.push(m);
                weight.push(2.0 * PI * s * s * ws * wm);
            }
        }
        Ok(VelocityQuadrature { speed, mu, weight, n_angle })
    }

    /// Default 64 × 32 rule on the tangent map.
    pub fn default_rule() -> Self {
        Self::new(64, 32, SpeedMap::Tangent { scale: 1.0 }).expect("valid default")
    }

    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    /// ∫ g(|v|) dv for an isotropic integrand.
    pub fn integrate_radial<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.speed.iter().zip(self.weight.iter()).map(|(&s, &w)| w * g(s)).sum()
    }

    /// Largest speed among nodes where `samples` is non-negligible.
    fn effective_vmax(&self, samples: &[f64]) -> f64 {
        let peak = samples.iter().map(|x| x.abs()).fold(0.0, f64::max);
        self.speed
            .iter()
            .zip(samples)
            .zip(&self.weight)
            .filter(|((_, &x), &w)| (x * w).abs() > 1e-14 * peak.max(1e-300))
            .map(|((&s, _), _)| s)
            .fold(0.0, f64::max)
    }
}

/// How the free-streaming forcing is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum ForcingMethod<'a> {
    /// â(k) b̂(tk) from the closed-form transforms.
    Separable,
    /// ∫ f̂₀(ξ, v) e^{−itv·ξ} dv on the given nodes.
    Quadrature(&'a VelocityQuadrature),
}

/// Ĥ(k, t) = ∫ f̂₀(ξ, v) e^{−itv·ξ} dv on t_n = n·dt, n ≤ n_steps.
pub fn free_streaming_forcing(
    f0: &InitialDatumSpec,
    k: f64,
    dt: f64,
    n_steps: usize,
    method: ForcingMethod<'_>,
) -> Result<ModeSeries> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    match method {
        ForcingMethod::Separable => {
            let a = f0.amplitude * f0.spatial.transform(k);
            Ok(ModeSeries::from_fn(k, dt, n_steps, |t| {
                Complex64::new(a * f0.velocity.transform(t * k), 0.0)
            }))
        }
        ForcingMethod::Quadrature(quad) => {
            let samples = f0.samples(quad, k);
            forcing_from_samples(quad, &samples, k, dt, n_steps)
        }
    }
}

/// Quadrature forcing for arbitrary node samples of f̂₀(ξ, ·) at |ξ| = k.
pub fn forcing_from_samples(
    quad: &VelocityQuadrature,
    samples: &[f64],
    k: f64,
    dt: f64,
    n_steps: usize,
) -> Result<ModeSeries> {
    if samples.len() != quad.len() {
        return Err(Error::InvalidInput("sample count does not match the quadrature".into()));
    }
    let vmax = quad.effective_vmax(samples);
    let phase = n_steps as f64 * dt * k * vmax;
    if phase > quad.n_angle as f64 {
        log::warn!(
            "phase resolution t·k·|v|max = {phase:.1} exceeds {} angular nodes; forcing may alias",
            quad.n_angle
        );
    }
    let values = (0..=n_steps)
        .map(|n| {
            let t = n as f64 * dt;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..quad.len() {
                let ph = -t * k * quad.speed[p] * quad.mu[p];
                acc += quad.weight[p] * samples[p] * Complex64::new(ph.cos(), ph.sin());
            }
            acc
        })
        .collect();
    Ok(ModeSeries::new(k, dt, values))
}

/// Logarithmic wavenumber grid with weights for ∫ g(k) dk.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    pub k: Vec<f64>,
    pub weight: Vec<f64>,
}

impl KGrid {
    pub fn log(n: usize, k_min: f64, k_max: f64) -> Result<Self> {
        if n < 4 || !(k_min > 0.0 && k_max > k_min) {
            return Err(Error::InvalidInput("k-grid needs n ≥ 4 and 0 < k_min < k_max".into()));
        }
        let h = (k_max / k_min).ln() / (n - 1) as f64;
        let k: Vec<f64> = (0..n).map(|i| k_min * (i as f64 * h).exp()).collect();
        let weight = k
            .iter()
            .enumerate()
            .map(|(i, &kk)| {
                let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                end * h * kk
            })
            .collect();
        Ok(KGrid { k, weight })
    }

    /// Default 256 points on [1e-3, 20].
    pub fn default_grid() -> Self {
        Self::log(256, 1e-3, 20.0).expect("valid default")
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

/// Output of the linear solver: ρ̂(k, t) per mode.
#[derive(Clone, Debug)]
pub struct LinearRun {
    pub kgrid: KGrid,
    pub dt: f64,
    pub rho_hat: Vec<ModeSeries>,
}

impl LinearRun {
    pub fn n_times(&self) -> usize {
        self.rho_hat.first().map_or(0, |m| m.len())
    }

    /// |Ê(k, t_n)| = |ρ̂(k, t_n)| / k.
    pub fn field_magnitude(&self, mode: usize, n: usize) -> f64 {
        self.rho_hat[mode].values[n].norm() / self.kgrid.k[mode]
    }

    /// Real part of ρ̂ at time index n across the k-grid.
    pub fn snapshot(&self, n: usize) -> Vec<f64> {
        self.rho_hat.iter().map(|m| m.values[n].re).collect()
    }
}

/// Solves the linear problem mode by mode on a uniform time grid.
pub fn solve_linear(
    eq: &Equilibrium,
    f0: &InitialDatumSpec,
    kgrid: &KGrid,
    dt: f64,
    n_steps: usize,
    method: ForcingMethod<'_>,
) -> Result<LinearRun> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    if kgrid.k.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::InvalidInput("k-grid must be positive".into()));
    }
    let rho_hat = kgrid
        .k
        .par_iter()
        .map(|&k| {
            let h = free_streaming_forcing(f0, k, dt, n_steps, method)?;
            if eq.is_poisson() {
                apply_resolvent(k, &h)
            } else {
                solve_volterra_march(eq, k, &h)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearRun { kgrid: kgrid.clone(), dt, rho_hat })
}

/// Precomputed inverse radial transforms from a k-grid to a set of radii:
///   e(r) = (2π²)^{-1} ∫ ρ̂(k) k j₁(kr) dk,   ρ(r) = (2π²)^{-1} ∫ ρ̂(k) k² j₀(kr) dk.
/// The unresolved band [0, k_min] is added assuming ρ̂ constant there.
#[derive(Clone, Debug)]
pub struct RadialEvaluator {
    pub radii: Vec<f64>,
    field_w: Vec<f64>,
    density_w: Vec<f64>,
    nk: usize,
}

impl RadialEvaluator {
    pub fn new(kgrid: &KGrid, radii: Vec<f64>) -> Self {
        let nk = kgrid.len();
        let c = 1.0 / (2.0 * PI * PI);
        let k0 = kgrid.k[0];
        let mut field_w = vec![0.0; radii.len() * nk];
        let mut density_w = vec![0.0; radii.len() * nk];
        for (i, &r) in radii.iter().enumerate() {
            for (j, (&k, &w)) in kgrid.k.iter().zip(&kgrid.weight).enumerate() {
                field_w[i * nk + j] = c * w * k * sph_j1(k * r);
                density_w[i * nk + j] = c * w * k * k * sph_j0(k * r);
            }
            if r > 0.0 {
                field_w[i * nk] += c * int_s_j1(k0 * r) / (r * r);
                density_w[i * nk] += c * int_s2_j0(k0 * r) / (r * r * r);
            } else {
                density_w[i * nk] += c * k0 * k0 * k0 / 3.0;
            }
        }
        RadialEvaluator { radii, field_w, density_w, nk }
    }

    fn apply(&self, w: &[f64], rho_hat: &[f64]) -> Vec<f64> {
        assert_eq!(rho_hat.len(), self.nk);
        w.chunks(self.nk)
            .map(|row| row.iter().zip(rho_hat).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Radial field e(r) on the stored radii.
    pub fn field(&self, rho_hat: &[f64]) -> Vec<f64> {
        self.apply(&self.field_w, rho_hat)
    }

    /// Density ρ(r) on the stored radii.
    pub fn density(&self, rho_hat: &[f64]) -> Vec<f64> {
        self.apply(&self.density_w, rho_hat)
    }
}

/// Per-time summaries of a linear run on a radial evaluation grid.
#[derive(Clone, Debug)]
pub struct FieldSummary {
    pub times: Vec<f64>,
    pub sup_field: Vec<f64>,
    pub l1_density: Vec<f64>,
}

/// sup_r |E(t)| and ‖ρ(t)‖_{L¹} = 4π∫|ρ|r²dr on uniform radii [0, r_max].
pub fn summarize_field(run: &LinearRun, r_max: f64, n_r: usize) -> FieldSummary {
    let dr = r_max / (n_r - 1) as f64;
    let radii: Vec<f64> = (0..n_r).map(|i| i as f64 * dr).collect();
    let ev = RadialEvaluator::new(&run.kgrid, radii.clone());
    let nt = run.n_times();
    let rows: Vec<(f64, f64)> = (0..nt)
        .into_par_iter()
        .map(|n| {
            let snap = run.snapshot(n);
            let e = ev.field(&snap);
            let rho = ev.density(&snap);
            let sup = e.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let l1 = 4.0
                * PI
                * rho
                    .iter()
                    .zip(&radii)
                    .enumerate()
                    .map(|(i, (x, r))| {
                        let w = if i == 0 || i == n_r - 1 { 0.5 } else { 1.0 };
                        w * x.abs() * r * r * dr
                    })
                    .sum::<f64>();
            (sup, l1)
        })
        .collect();
    FieldSummary {
        times: (0..nt).map(|n| n as f64 * run.dt).collect(),
        sup_field: rows.iter().map(|r| r.0).collect(),
        l1_density: rows.iter().map(|r| r.1).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    I,
    II,
}

/// ρ̂ = r_part + Re(e^{−it} t_part) (for real, isotropic data).
#[derive(Clone, Debug)]
pub struct DecompositionPair {
    pub r_part: ModeSeries,
    pub t_part: ModeSeries,
    pub representation: Representation,
}

impl DecompositionPair {
    pub fn reconstruct(&self) -> ModeSeries {
        let dt = self.r_part.dt;
        let values = self
            .r_part
            .values
            .iter()
            .zip(&self.t_part.values)
            .enumerate()
            .map(|(n, (r, t))| {
                let ph = -(n as f64) * dt;
                r + Complex64::new((Complex64::new(ph.cos(), ph.sin()) * t).re, 0.0)
            })
            .collect();
        ModeSeries::new(self.r_part.k, dt, values)
    }
}

/// Representation I: R = Ĥ, T(t) = −i∫₀ᵗ e^{is} e^{−(t−s)k} Ĥ(s) ds (trapezoid).
/// The reconstruction R + Re(e^{−it}T) equals the resolvent solution when Ĥ
/// is real, which is the case for isotropic data.
pub fn decompose_rep_i(forcing: &ModeSeries) -> DecompositionPair {
    let (k, dt) = (forcing.k, forcing.dt);
    let h = &forcing.values;
    let q = (-k * dt).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut qn = 1.0;
    let mut t_part = Vec::with_capacity(h.len());
    for (n, &hn) in h.iter().enumerate() {
        let s = n as f64 * dt;
        let rot = Complex64::new(s.cos(), s.sin());
        acc = q * acc + rot * hn;
        if n == 0 {
            t_part.push(Complex64::new(0.0, 0.0));
        } else {
            let trap = acc - 0.5 * qn * h[0] - 0.5 * rot * hn;
            t_part.push(-I * dt * trap);
        }
        qn *= q;
    }
    DecompositionPair {
        r_part: forcing.clone(),
        t_part: ModeSeries::new(k, dt, t_part),
        representation: Representation::I,
    }
}

/// Representation II for a time-independent datum sampled on the nodes:
/// with 𝒟 = k − i v·ξ,
///   R(t) = ∫ 𝒟²/(1+𝒟²) f̂₀ e^{−itv·ξ} dv,   T(t) = e^{−tk} ∫ (1 − i𝒟)^{-1} f̂₀ dv.
/// Requires the resonance guard sup |v·ξ| ≤ 1/2 over weighted nodes.
pub fn decompose_rep_ii(
    quad: &VelocityQuadrature,
    samples: &[f64],
    k: f64,
    dt: f64,
    n_steps: usize,
) -> Result<DecompositionPair> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    if samples.len() != quad.len() {
        return Err(Error::InvalidInput("sample count does not match the quadrature".into()));
    }
    let vmax = quad.effective_vmax(samples);
    if k * vmax > 0.5 {
        return Err(Error::InvalidInput(format!(
            "resonance guard violated: sup|v·ξ| = {} > 1/2",
            k * vmax
        )));
    }
    let mut gain = Vec::with_capacity(quad.len());
    let mut t0 = Complex64::new(0.0, 0.0);
    for p in 0..quad.len() {
        let d = Complex64::new(k, -k * quad.speed[p] * quad.mu[p]);
        let d2 = d * d;
        gain.push(quad.weight[p] * samples[p] * d2 / (1.0 + d2));
        t0 += quad.weight[p] * samples[p] / (1.0 - I * d);
    }
    let mut r_part = Vec::with_capacity(n_steps + 1);
    let mut t_part = Vec::with_capacity(n_steps + 1);
    for n in 0..=n_steps {
        let t = n as f64 * dt;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..quad.len() {
            let ph = -t * k * quad.speed[p] * quad.mu[p];
            acc += gain[p] * Complex64::new(ph.cos(), ph.sin());
        }
        r_part.push(acc);
        t_part.push((-t * k).exp() * t0);
    }
    Ok(DecompositionPair {
        r_part: ModeSeries::new(k, dt, r_part),
        t_part: ModeSeries::new(k, dt, t_part),
        representation: Representation::II,
    })
}
