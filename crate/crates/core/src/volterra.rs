//! Per-mode Volterra equation of the second kind
//!
//!   ρ̂(t) + ∫₀ᵗ (t−s) M̂₀((t−s)k) ρ̂(s) ds = Ĥ(t),
//!
//! solved either by product-trapezoid marching or, for the Poisson
//! equilibrium, through the explicit resolvent G(τ) = δ − e^{−τk} sin τ.

use crate::dispersion::resolvent_kernel_g;
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Samples of a single Fourier mode on the uniform grid t_n = n·dt.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSeries {
    pub k: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl ModeSeries {
    pub fn new(k: f64, dt: f64, values: Vec<Complex64>) -> Self {
        ModeSeries { k, dt, values }
    }

    /// Samples `f` at t_n = n·dt, n = 0..n_steps.
    pub fn from_fn<F: Fn(f64) -> Complex64>(k: f64, dt: f64, n_steps: usize, f: F) -> Self {
        let values = (0..=n_steps).map(|n| f(n as f64 * dt)).collect();
        ModeSeries { k, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn t_max(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.dt
    }

    /// max_n |a_n − b_n|.
    pub fn max_diff(&self, other: &ModeSeries) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn validate(k: f64, forcing: &ModeSeries) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    if !(forcing.dt.is_finite() && forcing.dt > 0.0) {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    if forcing.values.is_empty() {
        return Err(Error::InvalidInput("empty forcing".into()));
    }
    if forcing.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidInput("non-finite forcing sample".into()));
    }
    Ok(())
}

/// Kernel samples K_m = τ_m M̂₀(τ_m k), τ_m = m·dt.
pub fn kernel_samples(eq: &Equilibrium, k: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|m| {
            let tau = m as f64 * dt;
            Ok(tau * eq.m0_fourier(tau * k)?)
        })
        .collect()
}

/// Product-trapezoid marching. For the Poisson equilibrium the history sum is
/// carried by two exponential recursions, so the cost is O(N); other
/// equilibria fall back to the direct O(N²) sum.
pub fn solve_volterra_march(eq: &Equilibrium, k: f64, forcing: &ModeSeries) -> Result<ModeSeries> {
    validate(k, forcing)?;
    let dt = forcing.dt;
    let h = &forcing.values;
    let n = h.len();
    if dt * k > 1.0 {
        log::warn!("march step dt·k = {} exceeds 1", dt * k);
    }
    let mut rho = vec![Complex64::new(0.0, 0.0); n];
    rho[0] = h[0];
    if eq.is_poisson() {
        let q = (-k * dt).exp();
        // a_n = Σ_{j<n} q^{n-j} ρ_j,  b_n = Σ_{j<n} (n-j) q^{n-j} ρ_j
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut qn = 1.0;
        for step in 1..n {
            b = q * (b + a + rho[step - 1]);
            a = q * (a + rho[step - 1]);
            qn *= q;
            let tn = step as f64 * dt;
            let hist = dt * (dt * b) - 0.5 * dt * (tn * qn) * rho[0];
            rho[step] = h[step] - hist;
        }
    } else {
        let kern = kernel_samples(eq, k, dt, n)?;
        for step in 1..n {
            let mut s = -0.5 * kern[step] * rho[0];
            for j in 0..step {
                s += kern[step - j] * rho[j];
            }
            rho[step] = h[step] - dt * s;
        }
    }
    check_finite(&rho)?;
    Ok(ModeSeries::new(k, dt, rho))
}

fn check_finite(v: &[Complex64]) -> Result<()> {
    if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Unstable("non-finite Volterra solution".into()));
    }
    Ok(())
}

/// ρ̂ = Ĥ − ∫₀ᵗ e^{−(t−s)k} sin(t−s) Ĥ(s) ds by the trapezoid rule, using
/// sin τ = (e^{iτ} − e^{−iτ})/(2i) to run the convolution in O(N).
/// Only valid for the Poisson equilibrium.
pub fn apply_resolvent(k: f64, forcing: &ModeSeries) -> Result<ModeSeries> {
    validate(k, forcing)?;
    let dt = forcing.dt;
    let h = &forcing.values;
    let n = h.len();
    let qp = (Complex64::new(-k, 1.0) * dt).exp();
    let qm = (Complex64::new(-k, -1.0) * dt).exp();
    let mut cp = Complex64::new(0.0, 0.0);
    let mut cm = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    out.push(h[0]);
    for step in 1..n {
        cp = qp * (cp + h[step - 1]);
        cm = qm * (cm + h[step - 1]);
        let tn = step as f64 * dt;
        let conv = (cp - cm) / (2.0 * I) + 0.5 * resolvent_kernel_g(k, tn) * h[0];
        out.push(h[step] - dt * conv);
    }
    check_finite(&out)?;
    Ok(ModeSeries::new(k, dt, out))
}

/// Exact solution for the forcing Ĥ(t) = e^{−tk}: ρ̂(t) = e^{−tk} cos t.
#[inline]
pub fn exponential_forcing_solution(k: f64, t: f64) -> f64 {
    (-t * k).exp() * t.cos()
}

/// max_n |ρ_n + (K ⋆ ρ)_n − H_n| with the product-trapezoid history sum.
pub fn volterra_residual(
    eq: &Equilibrium,
    k: f64,
    rho: &ModeSeries,
    forcing: &ModeSeries,
) -> Result<f64> {
    validate(k, forcing)?;
    if rho.len() != forcing.len() || (rho.dt - forcing.dt).abs() > 1e-15 {
        return Err(Error::InvalidInput("series grids differ".into()));
    }
    let dt = rho.dt;
    let n = rho.len();
    let kern = kernel_samples(eq, k, dt, n)?;
    let mut worst: f64 = 0.0;
    for step in 0..n {
        let mut s = Complex64::new(0.0, 0.0);
        if step > 0 {
            s = -0.5 * kern[step] * rho.values[0];
            for j in 0..step {
                s += kern[step - j] * rho.values[j];
            }
        }
        worst = worst.max((rho.values[step] + dt * s - forcing.values[step]).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn march_and_resolvent_solve_exponential_forcing() {
        let eq = Equilibrium::poisson();
        let k = 0.3;
        let dt = 0.01;
        let h = ModeSeries::from_fn(k, dt, 2000, |t| Complex64::new((-t * k).exp(), 0.0));
        let exact = ModeSeries::from_fn(k, dt, 2000, |t| {
            Complex64::new(exponential_forcing_solution(k, t), 0.0)
        });
        let m = solve_volterra_march(&eq, k, &h).unwrap();
        let r = apply_resolvent(k, &h).unwrap();
        assert!(m.max_diff(&exact) < 1e-4, "{}", m.max_diff(&exact));
        assert!(r.max_diff(&exact) < 1e-4, "{}", r.max_diff(&exact));
    }

    #[test]
    fn fast_march_matches_direct_sum() {
        let eq = Equilibrium::poisson();
        let k = 0.7;
        let dt = 0.05;
        let h = ModeSeries::from_fn(k, dt, 300, |t| Complex64::new(t.cos(), (0.3 * t).sin()));
        let fast = solve_volterra_march(&eq, k, &h).unwrap();
        let kern = kernel_samples(&eq, k, dt, h.len()).unwrap();
        let mut slow = vec![h.values[0]];
        for n in 1..h.len() {
            let mut s = -0.5 * kern[n] * slow[0];
            for j in 0..n {
                s += kern[n - j] * slow[j];
            }
            slow.push(h.values[n] - dt * s);
        }
        let d = fast
            .values
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
        assert!(volterra_residual(&eq, k, &fast, &h).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let h = ModeSeries::new(1.0, 0.1, vec![Complex64::new(f64::NAN, 0.0)]);
        assert!(apply_resolvent(1.0, &h).is_err());
        let h = ModeSeries::new(1.0, 0.1, vec![Complex64::new(1.0, 0.0)]);
        assert!(apply_resolvent(0.0, &h).is_err());
    }
}
