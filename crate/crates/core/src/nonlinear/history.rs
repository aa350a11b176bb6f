use super::grid::{radial_poisson, RadialGrid};
use crate::characteristics::RadialFieldSampler;
use crate::error::{Error, Result};
use std::sync::atomic::{AtomicBool, Ordering};

/// Interpolation used when the history is sampled off-grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldInterp {
    /// Linear in r and t.
    Bilinear,
    /// Four-point Lagrange in r (odd extension through r = 0), linear in t.
    CubicRadial,
}

/// ρ(r, t) and e(r, t) on the radial grid × uniform time grid t_n = n·dt.
#[derive(Debug)]
pub struct FieldHistory {
    pub grid: RadialGrid,
    pub dt: f64,
    pub rho: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub interp: FieldInterp,
    warned: AtomicBool,
}

impl Clone for FieldHistory {
    fn clone(&self) -> Self {
        FieldHistory {
            grid: self.grid.clone(),
            dt: self.dt,
            rho: self.rho.clone(),
            e: self.e.clone(),
            interp: self.interp,
            warned: AtomicBool::new(false),
        }
    }
}

impl FieldHistory {
    pub fn new(grid: RadialGrid, dt: f64, rho: Vec<Vec<f64>>, e: Vec<Vec<f64>>) -> Result<Self> {
        if rho.len() != e.len() || rho.is_empty() {
            return Err(Error::InvalidInput("ρ and e histories differ in length".into()));
        }
        if rho.iter().chain(e.iter()).any(|row| row.len() != grid.n) {
            return Err(Error::InvalidInput("history rows must match the radial grid".into()));
        }
        Ok(FieldHistory { grid, dt, rho, e, interp: FieldInterp::Bilinear, warned: AtomicBool::new(false) })
    }

    /// Builds the field from the density with `radial_poisson`.
    pub fn from_density(grid: RadialGrid, dt: f64, rho: Vec<Vec<f64>>) -> Result<Self> {
        let e = rho.iter().map(|row| radial_poisson(&grid, row)).collect();
        Self::new(grid, dt, rho, e)
    }

    pub fn zeros(grid: RadialGrid, dt: f64, n_times: usize) -> Self {
        let z = vec![vec![0.0; grid.n]; n_times];
        Self::new(grid, dt, z.clone(), z).expect("consistent shapes")
    }

    pub fn with_interp(mut self, interp: FieldInterp) -> Self {
        self.interp = interp;
        self
    }

    pub fn n_times(&self) -> usize {
        self.rho.len()
    }

    pub fn t_end(&self) -> f64 {
        (self.n_times() - 1) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_times()).map(|n| n as f64 * self.dt).collect()
    }

    /// sup over the grid and all stored times of |e|.
    pub fn sup_field(&self) -> f64 {
        self.e.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// max_n |ρ(R_max, t_n)| / max |ρ|: the boundary leakage indicator.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.rho.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.rho.iter().map(|row| row[row.len() - 1].abs()).fold(0.0, f64::max) / peak
    }

    /// max_n of the relative mismatch between e and radial_poisson(ρ).
    pub fn poisson_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let scale = self.sup_field().max(1e-300);
        for (rho, e) in self.rho.iter().zip(&self.e) {
            let ref_e = radial_poisson(&self.grid, rho);
            for (a, b) in e.iter().zip(&ref_e) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }

    fn radial_at(&self, row: &[f64], r: f64) -> f64 {
        let h = self.grid.dr;
        match self.interp {
            FieldInterp::Bilinear => {
                let s = r / h;
                let i = (s.floor() as usize).min(self.grid.n - 2);
                let w = s - i as f64;
                row[i] * (1.0 - w) + row[i + 1] * w
            }
            FieldInterp::CubicRadial => interp_odd(row, h, r),
        }
    }

    fn outside(&self, r: f64, t: f64) -> f64 {
        if !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!("field sampled outside the stored box at r = {r:.3}, t = {t:.3}; using 0");
        }
        0.0
    }
}

impl RadialFieldSampler for FieldHistory {
    fn radial_field(&self, r: f64, t: f64) -> f64 {
        let t_end = self.t_end();
        if r > self.grid.r_max || t < -1e-12 || t > t_end + 1e-9 {
            return self.outside(r, t);
        }
        let s = (t / self.dt).max(0.0);
        let n = (s.floor() as usize).min(self.n_times().saturating_sub(2));
        if self.n_times() == 1 {
            return self.radial_at(&self.e[0], r);
        }
        let w = s - n as f64;
        let a = self.radial_at(&self.e[n], r);
        if w == 0.0 {
            return a;
        }
        let b = self.radial_at(&self.e[n + 1], r);
        a * (1.0 - w) + b * w
    }
}

/// Four-point Lagrange interpolation of an odd radial profile sampled at
/// r_i = i·h (the stencil reflects through r = 0 with a sign change).
#[inline]
pub(crate) fn interp_odd(row: &[f64], h: f64, r: f64) -> f64 {
    let n = row.len();
    let s = r / h;
    let i = s.floor() as usize;
    let (a, b, c, d, t) = if i == 0 {
        (-row[1], row[0], row[1], row[2], s)
    } else {
        let i = i.min(n - 3);
        (row[i - 1], row[i], row[i + 1], row[i + 2], s - i as f64)
    };
    -a * t * (t - 1.0) * (t - 2.0) / 6.0 + b * (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
        - c * (t + 1.0) * t * (t - 2.0) / 2.0
        + d * (t + 1.0) * t * (t - 1.0) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_reproduce_linear_fields() {
        let g = RadialGrid::new(41, 4.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|n| g.nodes().iter().map(|&r| r * (1.0 + n as f64)).collect())
            .collect();
        let h = FieldHistory::new(g, 0.5, rows.clone(), rows).unwrap();
        assert!((h.radial_field(1.23, 0.75) - 1.23 * 2.5).abs() < 1e-12);
        assert_eq!(h.radial_field(5.0, 0.5), 0.0);
        let h = h.with_interp(FieldInterp::CubicRadial);
        assert!((h.radial_field(0.05, 1.0) - 0.05 * 3.0).abs() < 1e-12);
    }
}
