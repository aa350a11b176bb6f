use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::linresponse::{InitialDatumSpec, SpatialProfile, VelocityProfile};

/// Parameters shared by both nonlinear modes.
#[derive(Clone, Debug)]
pub struct NonlinearConfig {
    pub equilibrium: Equilibrium,
    pub datum: InitialDatumSpec,
    pub n_r: usize,
    pub r_max: f64,
    /// Speed nodes of the velocity lattice (tangent-mapped).
    pub n_u: usize,
    /// Direction-cosine nodes of the velocity lattice.
    pub n_l: usize,
    pub dt: f64,
    pub t_max: f64,
    /// Mode D: markers per radial cell (staggered sub-lattice).
    pub markers_per_cell: usize,
    /// Mode D: linearized dynamics (free characteristics, linear source).
    pub linearized: bool,
    /// Mode D: deposit only the deviation from exact free streaming.
    pub control_variate: bool,
    /// Mode D: replace markers leaving through R_max by mirrored incoming
    /// background markers (otherwise they are absorbed).
    pub reinject: bool,
    /// Mode D: low-pass exp(−(k/k_c(t))⁸) on the deposited deviation, with
    /// k_c(t) = filter_k_late + filter_k_boost·e^{−t}; `None` deposits raw.
    pub filter_k_late: Option<f64>,
    pub filter_k_boost: f64,
    pub tol_picard: f64,
    pub picard_max_iter: usize,
    /// Mode P: the forcing is assembled every `picard_stride` steps.
    pub picard_stride: usize,
    /// Mode P: RK4 step for backward characteristics.
    pub picard_ds: f64,
    /// Mode P: under-relaxation used once the ratio test exceeds 0.9.
    pub relaxation: f64,
    /// Mode P: zero padding of the sine-transform domain.
    pub pad_factor: usize,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        NonlinearConfig {
            equilibrium: Equilibrium::poisson(),
            datum: InitialDatumSpec {
                spatial: SpatialProfile::Gaussian { width: 2.0 },
                velocity: VelocityProfile::Gaussian { width: 1.0 },
                amplitude: 1e-3,
            },
            n_r: 96,
            r_max: 40.0,
            n_u: 32,
            n_l: 16,
            dt: 0.05,
            t_max: 40.0,
            markers_per_cell: 8,
            linearized: false,
            control_variate: true,
            reinject: true,
            filter_k_late: Some(2.0),
            filter_k_boost: 6.0,
            tol_picard: 1e-10,
            picard_max_iter: 8,
            picard_stride: 16,
            picard_ds: 0.2,
            relaxation: 0.5,
            pad_factor: 2,
        }
    }
}

impl NonlinearConfig {
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.n_r < 4 || self.n_u < 4 || self.n_l < 4 {
            return bad("grid sizes must be ≥ 4");
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return bad("r_max must be positive");
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return bad("dt must lie in (0, 0.1]");
        }
        if !(self.t_max >= self.dt) {
            return bad("t_max must be at least one step");
        }
        if (self.t_max / self.dt - self.n_steps() as f64).abs() > 1e-9 {
            return bad("t_max must be a multiple of dt");
        }
        if self.markers_per_cell == 0 || self.picard_stride == 0 || self.pad_factor == 0 {
            return bad("markers_per_cell, picard_stride and pad_factor must be ≥ 1");
        }
        if !(self.picard_ds > 0.0) || !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad("picard_ds must be positive and relaxation in (0, 1]");
        }
        if !(self.tol_picard > 0.0) {
            return bad("tol_picard must be positive");
        }
        Ok(())
    }
}
