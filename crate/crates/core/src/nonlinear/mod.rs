//! Spherically symmetric nonlinear Vlasov–Poisson around M₀.
//!
//! Two independent solvers share the radial grid and field history types:
//! * Mode D (`run_direct`): forward markers on a reduced phase lattice carry
//!   the perturbation value g along characteristics, with the source
//!   −E·∇ᵥM₀ applied in exact half-kicks (Strang splitting).
//! * Mode P (`run_picard`): fixed point on the density through the Volterra
//!   resolvent, with the forcing 𝒩 = 𝒩₁ + 𝒩₂ assembled from backward
//!   characteristics in the current field.

mod config;
mod direct;
mod grid;
mod history;
mod lattice;
mod picard;

pub use config::NonlinearConfig;
pub use direct::{free_density, run_direct, DirectReport};
pub use grid::{
    radial_fourier, radial_fourier_at, radial_fourier_inverse, radial_poisson, RadialGrid,
    SpectralGrid,
};
pub use history::{FieldHistory, FieldInterp};
pub use lattice::{PhaseQuadrature, VelocityLattice};
pub use picard::{
    assemble_forcing_n, free_term_spectral, iterate_log, linear_history, picard_quadrature, run_picard,
    ForcingField, PicardIterate, PicardReport,
};
