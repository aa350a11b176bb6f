//! Dispersion kernel K(k, λ) = ∫₀^∞ τ M̂₀(τk) e^{-iλτ} dτ, the Penrose
//! function 1 + K, and the Landau roots.
//!
//! Valid on the closed lower half-plane Im λ ≤ 0. For the Poisson equilibrium
//! K = 1/(k + iλ)², whose roots λ = ±1 + ik sit in the upper half-plane.

use crate::equilibrium::{Equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::quadrature;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_args(k: f64, lambda: Complex64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite λ".into()));
    }
    Ok(())
}

/// K(k, λ) for Im λ ≤ 0.
#[allow(non_snake_case)]
pub fn eval_K(eq: &Equilibrium, k: f64, lambda: Complex64) -> Result<Complex64> {
    check_args(k, lambda)?;
    if lambda.im > 0.0 {
        return Err(Error::OutsideDomain(lambda.im));
    }
    match eq.kind() {
        EquilibriumKind::Poisson => {
            let d = Complex64::new(k, 0.0) + I * lambda;
            Ok(1.0 / (d * d))
        }
        EquilibriumKind::CustomIsotropic(_) => kernel_quadrature(eq, k, lambda, 1e-12),
    }
}

/// Penrose function 1 + K(k, λ).
pub fn eval_penrose(eq: &Equilibrium, k: f64, lambda: Complex64) -> Result<Complex64> {
    Ok(1.0 + eval_K(eq, k, lambda)?)
}

/// 1 + K continued into Im λ > 0: the closed form for the Poisson
/// equilibrium, the τ-integral for equilibria with super-exponentially
/// decaying transforms. Used for root residuals.
pub fn eval_penrose_continued(eq: &Equilibrium, k: f64, lambda: Complex64) -> Result<Complex64> {
    check_args(k, lambda)?;
    match eq.kind() {
        EquilibriumKind::Poisson => {
            let d = Complex64::new(k, 0.0) + I * lambda;
            Ok(1.0 + 1.0 / (d * d))
        }
        EquilibriumKind::CustomIsotropic(_) => tau_integral(eq, k, lambda, 1e-13).map(|v| 1.0 + v),
    }
}

/// Direct τ-quadrature of K for any equilibrium, used to cross-check the
/// closed form. Requires Im λ ≤ 0.
pub fn kernel_quadrature(eq: &Equilibrium, k: f64, lambda: Complex64, tol: f64) -> Result<Complex64> {
    check_args(k, lambda)?;
    if lambda.im > 0.0 {
        return Err(Error::OutsideDomain(lambda.im));
    }
    tau_integral(eq, k, lambda, tol)
}

/// τ-quadrature without the half-plane restriction. Only meaningful when
/// τ M̂₀(τk) e^{Im λ τ} still decays, i.e. for equilibria whose transform
/// decays faster than any exponential.
fn tau_integral(eq: &Equilibrium, k: f64, lambda: Complex64, tol: f64) -> Result<Complex64> {
    let growth = lambda.im.max(0.0);
    let decay = if eq.is_poisson() { k + (-lambda.im).max(0.0) } else { k };
    let mut panel = 2.0 / decay;
    if lambda.re.abs() > 1e-12 {
        panel = panel.min(std::f64::consts::PI / lambda.re.abs());
    }
    if !eq.is_poisson() {
        panel = panel.min(1.0 / k);
    }
    if eq.is_poisson() && lambda.im >= k {
        return Err(Error::Quadrature("τ-integral diverges".into()));
    }
    let tau_cap = 200.0 / decay.min(k.max(1e-300)) + 200.0;
    let integrand = |tau: f64| -> Complex64 {
        let m = eq.m0_fourier(tau * k).unwrap_or(f64::NAN);
        tau * m * (-I * lambda * tau).exp()
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let mut start = 0.0;
    let mut quiet = 0;
    while start < tau_cap {
        let end = start + panel;
        let part = quadrature::composite_c(&integrand, start, end, panel, 20);
        if !(part.re.is_finite() && part.im.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite integrand near τ = {start}")));
        }
        acc += part;
        let mut m_end = eq.m0_fourier(end * k).unwrap_or(f64::INFINITY).abs();
        if !eq.is_poisson() && m_end < 1e-14 {
            // below the accuracy of the numerical transform: treat as zero
            m_end = 0.0;
        }
        let env = end * m_end * (growth * end).exp();
        let floor = tol * acc.norm().max(1.0);
        if (part.norm() <= floor || m_end == 0.0) && env * panel <= floor {
            quiet += 1;
            if quiet >= 3 {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
        start = end;
    }
    Err(Error::Quadrature(format!("τ-integral did not settle before τ = {tau_cap}")))
}

/// Small-frequency limit of the Penrose function, 1 − λ^{-2}.
pub fn penrose_small_k_limit(lambda: Complex64) -> Complex64 {
    1.0 - 1.0 / (lambda * lambda)
}

/// Smooth part of the resolvent kernel, G(τ) = δ(τ) − e^{−τk} sin τ.
#[inline]
pub fn resolvent_kernel_g(k: f64, tau: f64) -> f64 {
    -(-tau * k).exp() * tau.sin()
}

/// The two Landau roots of 1 + K(k, ·). They sit in Im λ > 0, outside the
/// half-plane where `eval_K` is defined.
pub fn landau_roots(eq: &Equilibrium, k: f64) -> Result<[Complex64; 2]> {
    check_args(k, Complex64::new(0.0, 0.0))?;
    match eq.kind() {
        EquilibriumKind::Poisson => Ok([Complex64::new(1.0, k), Complex64::new(-1.0, k)]),
        EquilibriumKind::CustomIsotropic(_) => {
            let f = |l: Complex64| tau_integral(eq, k, l, 1e-13).map(|v| 1.0 + v);
            let a = secant(&f, Complex64::new(1.0, k), Complex64::new(1.05, k * 0.9))?;
            let b = secant(&f, Complex64::new(-1.0, k), Complex64::new(-1.05, k * 0.9))?;
            Ok([a, b])
        }
    }
}

fn secant<F: Fn(Complex64) -> Result<Complex64>>(
    f: &F,
    mut x0: Complex64,
    mut x1: Complex64,
) -> Result<Complex64> {
    let mut f0 = f(x0)?;
    let mut f1 = f(x1)?;
    for _ in 0..80 {
        if f1.norm() < 1e-11 {
            return Ok(x1);
        }
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            break;
        }
        let mut step = f1 * (x1 - x0) / denom;
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        x0 = x1;
        f0 = f1;
        x1 -= step;
        f1 = f(x1)?;
    }
    Err(Error::NonConvergence(format!(
        "root search stalled at λ = {x1} with |1+K| = {}",
        f1.norm()
    )))
}

/// min over real λ of |1 + K(k, λ)|, which bounds |1 + K| from below on the
/// whole closed lower half-plane (the function is analytic, non-vanishing
/// there and tends to one at infinity).
pub fn penrose_margin(eq: &Equilibrium, k: f64) -> Result<f64> {
    let span = 6.0 + 4.0 * k;
    let n = 600;
    let eval = |x: f64| eval_penrose(eq, k, Complex64::new(x, 0.0)).map(|v| v.norm());
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let x = -span + 2.0 * span * i as f64 / n as f64;
        let v = eval(x)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    // golden-section refinement around the coarse minimum
    let h = 2.0 * span / n as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if eval(c)? < eval(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(best.0.min(eval(0.5 * (a + b))?))
}
