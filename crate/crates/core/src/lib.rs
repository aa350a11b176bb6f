//! Numerical toolkit for Landau damping of the Vlasov–Poisson system on R³
//! linearized around the Poisson equilibrium M₀(v) = 1/(π²(1+|v|²)²).
//!
//! Fourier convention throughout: f̂(ξ) = ∫ f(x) e^{-ix·ξ} dx, with the
//! inverse carrying (2π)^{-3}. Time-Laplace variable λ with Im λ ≤ 0.

pub mod characteristics;
pub mod diagnostics;
pub mod dispersion;
pub mod equilibrium;
pub mod error;
pub mod linresponse;
pub mod nonlinear;
pub mod quadrature;
pub mod volterra;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Japanese bracket ⟨t⟩ = sqrt(1 + t²).
#[inline]
pub fn jbracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}
