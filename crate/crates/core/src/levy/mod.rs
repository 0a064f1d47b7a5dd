//! Subordinate Brownian motions: Bernstein functions, characteristic
//! exponents and their almost-increasing envelope, the scaling condition at
//! infinity, and the Lévy densities obtained by subordination.

mod bernstein;
mod subordination;

pub use bernstein::{check_h, default_grids, psi_star, sup_envelope, BernsteinFamily, BernsteinSpec, ScalingFit};
pub use subordination::{
    levy_density_in_window, levy_density_sbm, stable_levy_density, subordination_window, verify_nu_bounds, NuBoundsReport, SubordinationWindow,
};
