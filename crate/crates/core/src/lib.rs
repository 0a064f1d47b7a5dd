//! Numerical laboratory for fully nonlinear equations driven by spatially
//! inhomogeneous nonlocal operators.
//!
//! The crate is `no_std` (with `alloc`) and contains all of the numerics:
//! scaling profiles and kernels, singular quadrature, linear and extremal
//! (Pucci-type) operators, the integral-bound certificates used in the
//! oscillation-decay argument, a monotone finite-difference solver with
//! policy iteration, Hölder-regularity probes, and the subordinate Brownian
//! motion examples. IO, configuration and the CLI live in `nonlocal-lab`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod grid;
pub mod kernel;
pub mod lemma;
pub mod levy;
pub mod math;
pub mod operators;
pub mod point;
pub mod probe;
pub mod quadrature;
pub mod scaling;
pub mod singular;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use kernel::{ExtremalClass, KernelSpec, Multiplier, Tail};
pub use point::Point;
pub use quadrature::{Estimate, QuadratureConfig};
pub use scaling::{ScalingFamily, ScalingFunction, WeakScaling};
