//! Quadrature, interpolation and small special-function helpers shared by the
//! solver modules.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let r = Arc::new(compute_gl(n));
    cache.lock().unwrap().insert(n, r.clone());
    r
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            return (vec![0.0], vec![2.0]);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gl_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (
        gl.0.iter().map(|&x| c + h * x).collect(),
        gl.1.iter().map(|&w| h * w).collect(),
    )
}

fn gl_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let gl = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * gl.0.iter().zip(gl.1.iter()).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>()
}

/// Adaptive bisection with a 10/20-point Gauss–Legendre error estimate.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
        let coarse = gl_fixed(f, a, b, 10);
        let fine = gl_fixed(f, a, b, 20);
        if (fine - coarse).abs() <= tol || (b - a) < 1e-12 * (1.0 + a.abs()) {
            return Ok(fine);
        }
        if depth > 40 {
            return Err(Error::Quadrature(format!(
                "adaptive bisection exhausted on [{a}, {b}]"
            )));
        }
        let m = 0.5 * (a + b);
        Ok(rec(f, a, m, 0.5 * tol, depth + 1)? + rec(f, m, b, 0.5 * tol, depth + 1)?)
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("non-finite integration bounds".into()));
    }
    rec(f, a, b, abs_tol, 0)
}

/// Composite Gauss–Legendre on panels no longer than `max_panel`.
pub fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, max_panel: f64, n: usize) -> f64 {
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| gl_fixed(f, a + p as f64 * h, a + (p + 1) as f64 * h, n))
        .sum()
}

/// Complex composite Gauss–Legendre on panels no longer than `max_panel`.
pub fn composite_c<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    max_panel: f64,
    n: usize,
) -> Complex64 {
    let gl = gauss_legendre(n);
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        for (&x, &w) in gl.0.iter().zip(gl.1.iter()) {
            acc += f(c + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// Running integral ∫_{x_0}^{x_i} f on a uniform grid: trapezoid rule with
/// fourth-order end corrections built from the neighbouring samples.
/// `left_even` declares f even about x_0 (so f_{-1} = f_1).
pub fn cumulative_uniform(f: &[f64], h: f64, left_even: bool) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    for i in 0..n - 1 {
        let trap = 0.5 * h * (f[i] + f[i + 1]);
        let left = if i >= 1 {
            Some(f[i - 1])
        } else if left_even && n > 1 {
            Some(f[1])
        } else {
            None
        };
        let right = if i + 2 < n { Some(f[i + 2]) } else { None };
        let corr = match (left, right) {
            (Some(l), Some(r)) => -h / 24.0 * (r - f[i + 1] - f[i] + l),
            // one-sided cubic estimate of f'' at the cell midpoint
            (None, Some(r)) if i + 3 < n => {
                -h / 12.0 * (1.5 * f[i] - 3.5 * f[i + 1] + 2.5 * r - 0.5 * f[i + 3])
            }
            (Some(l), None) if i >= 2 => {
                -h / 12.0 * (1.5 * f[i + 1] - 3.5 * f[i] + 2.5 * l - 0.5 * f[i - 2])
            }
            _ => 0.0,
        };
        out[i + 1] = out[i] + trap + corr;
    }
    out
}

/// Four-point Lagrange interpolation on a uniform grid x_i = x0 + i h.
/// Falls back to lower order near the ends. Returns None outside the grid.
#[inline]
pub fn lagrange4(y: &[f64], x0: f64, h: f64, x: f64) -> Option<f64> {
    let n = y.len();
    let s = (x - x0) / h;
    if !(s >= 0.0) || s > (n - 1) as f64 {
        return None;
    }
    if n < 4 {
        let i = (s.floor() as usize).min(n.saturating_sub(2));
        let t = s - i as f64;
        return Some(y[i] * (1.0 - t) + y[(i + 1).min(n - 1)] * t);
    }
    let i = (s.floor() as usize).clamp(1, n - 3);
    let t = s - i as f64;
    let (a, b, c, d) = (y[i - 1], y[i], y[i + 1], y[i + 2]);
    Some(
        -a * t * (t - 1.0) * (t - 2.0) / 6.0 + b * (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
            - c * (t + 1.0) * t * (t - 2.0) / 2.0
            + d * (t + 1.0) * t * (t - 1.0) / 6.0,
    )
}

/// Spherical Bessel j₀(x) = sin x / x.
#[inline]
pub fn sph_j0(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Spherical Bessel j₁(x) = sin x / x² − cos x / x.
#[inline]
pub fn sph_j1(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        x / 3.0 - x * x * x / 30.0
    } else {
        (x.sin() / x - x.cos()) / x
    }
}

/// ∫₀^x s j₁(s) ds = Si(x) − sin x.
pub fn int_s_j1(x: f64) -> f64 {
    sine_integral(x) - x.sin()
}

/// ∫₀^x s² j₀(s) ds = sin x − x cos x.
pub fn int_s2_j0(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        x * x * x / 3.0
    } else {
        x.sin() - x * x.cos()
    }
}

/// Sine integral Si(x): power series for |x| ≤ 4, panel Gauss–Legendre up to
/// 50, auxiliary-function asymptotics beyond.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 4.0 {
        let mut term = ax;
        let mut sum = ax;
        let x2 = ax * ax;
        for n in 1..80 {
            let nf = n as f64;
            term *= -x2 / ((2.0 * nf) * (2.0 * nf + 1.0));
            let add = term / (2.0 * nf + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else if ax <= 50.0 {
        sine_integral(4.0) + composite(&|t: f64| t.sin() / t, 4.0, ax, 1.0, 16)
    } else {
        // Si = π/2 − f cos x − g sin x with asymptotic f, g.
        let inv = 1.0 / ax;
        let inv2 = inv * inv;
        let (mut f, mut g) = (0.0, 0.0);
        let mut tf = inv;
        let mut tg = inv2;
        for n in 0..12 {
            f += tf;
            g += tg;
            let nf = n as f64;
            let nt = -(2.0 * nf + 1.0) * (2.0 * nf + 2.0) * inv2;
            let ntg = -(2.0 * nf + 2.0) * (2.0 * nf + 3.0) * inv2;
            if (tf * nt).abs() > tf.abs() {
                break;
            }
            tf *= nt;
            tg *= ntg;
        }
        std::f64::consts::FRAC_PI_2 - f * ax.cos() - g * ax.sin()
    };
    v.copysign(x)
}
