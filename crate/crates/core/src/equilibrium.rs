//! Radial equilibria M₀(|v|) and their Fourier transforms.

use crate::error::{Error, Result};
use crate::quadrature;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type RadialProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomProfile {
    name: String,
    profile: RadialProfile,
    v_cut: f64,
}

#[derive(Clone)]
pub enum EquilibriumKind {
    Poisson,
    CustomIsotropic(CustomProfile),
}

impl fmt::Debug for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumKind::Poisson => write!(f, "Poisson"),
            EquilibriumKind::CustomIsotropic(c) => write!(f, "CustomIsotropic({})", c.name),
        }
    }
}

/// A normalized, isotropic equilibrium density ∫M₀ dv = 1.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    kind: EquilibriumKind,
}

const NORM_TOL: f64 = 1e-8;
const TAIL_TOL: f64 = 1e-10;

impl Equilibrium {
    pub fn poisson() -> Self {
        Equilibrium { kind: EquilibriumKind::Poisson }
    }

    /// Unit-temperature Maxwellian, handled through the numerical path.
    pub fn maxwellian() -> Self {
        let c = (2.0 * PI).powf(-1.5);
        Self::custom("maxwellian", Arc::new(move |s: f64| c * (-0.5 * s * s).exp()))
            .expect("maxwellian is normalized")
    }

    /// Wraps a radial profile s ↦ M₀(s). The profile must be finite,
    /// non-negative and normalized to one.
    pub fn custom(name: &str, profile: RadialProfile) -> Result<Self> {
        for i in 0..=4000 {
            let s = i as f64 * 0.01;
            let p = profile(s);
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "profile {name} is negative or non-finite at |v| = {s}"
                )));
            }
        }
        let shell = |s: f64| 4.0 * PI * s * s * profile(s);
        let mut v_cut = 8.0;
        loop {
            let tail = quadrature::adaptive(&shell, v_cut, 2.0 * v_cut, 1e-14)?;
            let edge = 4.0 * PI * (2.0 * v_cut).powi(3) * profile(2.0 * v_cut);
            if tail < TAIL_TOL && edge < TAIL_TOL {
                break;
            }
            v_cut *= 2.0;
            if v_cut > 1e4 {
                return Err(Error::InvalidInput(format!(
                    "profile {name} tail too heavy for the numerical path"
                )));
            }
        }
        let mass = quadrature::adaptive(&shell, 0.0, v_cut, 1e-13)?;
        if (mass - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "profile {name} has mass {mass}, expected 1"
            )));
        }
        Ok(Equilibrium {
            kind: EquilibriumKind::CustomIsotropic(CustomProfile {
                name: name.to_string(),
                profile,
                v_cut,
            }),
        })
    }

    pub fn kind(&self) -> &EquilibriumKind {
        &self.kind
    }

    pub fn is_poisson(&self) -> bool {
        matches!(self.kind, EquilibriumKind::Poisson)
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            EquilibriumKind::Poisson => "poisson",
            EquilibriumKind::CustomIsotropic(c) => &c.name,
        }
    }

    /// Velocity cutoff used by the numerical transform (∞ for Poisson).
    pub fn v_cut(&self) -> f64 {
        match &self.kind {
            EquilibriumKind::Poisson => f64::INFINITY,
            EquilibriumKind::CustomIsotropic(c) => c.v_cut,
        }
    }

    /// M₀ as a function of s = |v|.
    #[inline]
    pub fn radial(&self, s: f64) -> f64 {
        match &self.kind {
            EquilibriumKind::Poisson => {
                let d = 1.0 + s * s;
                1.0 / (PI * PI * d * d)
            }
            EquilibriumKind::CustomIsotropic(c) => (c.profile)(s),
        }
    }

    /// (1/s) dM₀/ds, so that ∇M₀(v) = v · radial_grad_factor(|v|).
    #[inline]
    pub fn radial_grad_factor(&self, s: f64) -> f64 {
        match &self.kind {
            EquilibriumKind::Poisson => {
                let d = 1.0 + s * s;
                -4.0 / (PI * PI * d * d * d)
            }
            EquilibriumKind::CustomIsotropic(c) => {
                let h = 1e-4 * (1.0 + s);
                if s < 1e-3 {
                    // even profile: p(s) ≈ p(0) + p''(0) s²/2, so p'/s → p''(0)
                    let p = &c.profile;
                    (p(h) - 2.0 * p(0.0) + p(h)) / (h * h)
                } else {
                    let p = &c.profile;
                    (p(s + h) - p(s - h)) / (2.0 * h * s)
                }
            }
        }
    }

    /// Checked point evaluation of M₀(v).
    pub fn m0_value(&self, v: [f64; 3]) -> Result<f64> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite velocity".into()));
        }
        let s = norm3(v);
        let m = self.radial(s);
        if !m.is_finite() || m < 0.0 {
            return Err(Error::InvalidInput(format!("M0 invalid at |v| = {s}")));
        }
        Ok(m)
    }

    pub fn m0_grad(&self, v: [f64; 3]) -> Result<[f64; 3]> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite velocity".into()));
        }
        let g = self.radial_grad_factor(norm3(v));
        Ok([g * v[0], g * v[1], g * v[2]])
    }

    /// M̂₀(k) for k = |ξ| ≥ 0.
    pub fn m0_fourier(&self, k: f64) -> Result<f64> {
        if !k.is_finite() || k < 0.0 {
            return Err(Error::InvalidInput(format!("bad wavenumber {k}")));
        }
        match &self.kind {
            EquilibriumKind::Poisson => Ok((-k).exp()),
            EquilibriumKind::CustomIsotropic(c) => {
                radial_transform(&|s: f64| (c.profile)(s), k, c.v_cut)
            }
        }
    }

    /// Sine-transform quadrature of the stored profile, available for every
    /// kind (for Poisson it cross-checks the closed form).
    pub fn m0_fourier_numeric(&self, k: f64) -> Result<f64> {
        if !k.is_finite() || k < 0.0 {
            return Err(Error::InvalidInput(format!("bad wavenumber {k}")));
        }
        match &self.kind {
            EquilibriumKind::Poisson => {
                // algebraic tail: truncate at 1e4, where the remainder is O(1e-8/k)
                let p = |s: f64| self.radial(s);
                if k < 1e-8 {
                    // s = tan θ maps the algebraic tail onto a finite interval
                    let g = |th: f64| {
                        let (t, c) = (th.tan(), th.cos());
                        4.0 * PI * t * t * p(t) / (c * c)
                    };
                    return quadrature::adaptive(&g, 0.0, 0.5 * PI - 1e-9, 1e-13);
                }
                let f = |s: f64| p(s) * s * (k * s).sin();
                let panel = (std::f64::consts::PI / k).min(1.0);
                let near = quadrature::adaptive(&f, 0.0, 50.0, 1e-14)?;
                Ok(4.0 * PI / k * (near + quadrature::composite(&f, 50.0, 1e4, panel, 16)))
            }
            EquilibriumKind::CustomIsotropic(_) => self.m0_fourier(k),
        }
    }
}

/// (4π/k)∫₀^{v_cut} p(s) s sin(ks) ds, or 4π∫p s² ds at k = 0.
fn radial_transform<F: Fn(f64) -> f64>(p: &F, k: f64, v_cut: f64) -> Result<f64> {
    if k < 1e-8 {
        quadrature::adaptive(&|s: f64| 4.0 * PI * s * s * p(s), 0.0, v_cut, 1e-13)
    } else {
        let f = |s: f64| p(s) * s * (k * s).sin();
        Ok(4.0 * PI / k * quadrature::adaptive(&f, 0.0, v_cut, 1e-13 * k.min(1.0))?)
    }
}

#[inline]
pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_values() {
        let eq = Equilibrium::poisson();
        assert!((eq.m0_value([0.0; 3]).unwrap() - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!((eq.m0_fourier(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((eq.m0_fourier(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!(eq.m0_value([f64::NAN, 0.0, 0.0]).is_err());
        assert!(eq.m0_fourier(-1.0).is_err());
    }

    #[test]
    fn poisson_gradient_matches_finite_difference() {
        let eq = Equilibrium::poisson();
        let v = [0.3, -0.7, 1.1];
        let g = eq.m0_grad(v).unwrap();
        for d in 0..3 {
            let mut vp = v;
            let mut vm = v;
            vp[d] += 1e-6;
            vm[d] -= 1e-6;
            let fd = (eq.m0_value(vp).unwrap() - eq.m0_value(vm).unwrap()) / 2e-6;
            assert!((fd - g[d]).abs() < 1e-8);
        }
    }

    #[test]
    fn poisson_numeric_transform_matches_closed_form() {
        let eq = Equilibrium::poisson();
        for &k in &[0.0, 0.1, 1.0, 5.0] {
            let v = eq.m0_fourier_numeric(k).unwrap();
            assert!((v - (-k).exp()).abs() < 1e-6, "k={k} v={v}");
        }
    }

    #[test]
    fn maxwellian_transform_is_gaussian() {
        let eq = Equilibrium::maxwellian();
        for &k in &[0.0, 0.3, 1.0, 2.5] {
            let v = eq.m0_fourier(k).unwrap();
            assert!((v - (-0.5 * k * k).exp()).abs() < 1e-10, "k={k} v={v}");
        }
    }

    #[test]
    fn custom_rejects_bad_profiles() {
        assert!(Equilibrium::custom("neg", Arc::new(|s: f64| -(-s).exp())).is_err());
        assert!(Equilibrium::custom("unnormalized", Arc::new(|s: f64| (-s * s).exp())).is_err());
    }
}
