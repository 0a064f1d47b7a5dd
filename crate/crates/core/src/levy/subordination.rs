use alloc::vec::Vec;

use super::bernstein::{psi_star, BernsteinFamily, BernsteinSpec};
use crate::error::{invalid, Error, Result};
use crate::math::{exp, gamma, powf, PI};
use crate::quadrature::{integrate_log, Lower, QuadratureConfig, Upper};

/// Truncation window `[t_min, t_max]` of the subordination integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinationWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl SubordinationWindow {
    /// Widens both ends by `factor` (halves `t_min`, doubles `t_max` for 2).
    pub fn widened(self, factor: f64) -> Self {
        Self { t_min: self.t_min / factor, t_max: self.t_max * factor }
    }
}

// Power envelope μ(t) ≤ c t^{-1-a} valid for large t.
fn power_envelope(spec: &BernsteinSpec) -> Option<(f64, f64)> {
    let coeff = |alpha: f64| {
        let a = alpha / 2.0;
        (a / gamma(1.0 - a), a)
    };
    match spec.family {
        BernsteinFamily::Stable { alpha } | BernsteinFamily::Relativistic { alpha, .. } => Some(coeff(alpha)),
        BernsteinFamily::Mixed { alpha, beta } => {
            let (ca, _) = coeff(alpha);
            let (cb, b) = coeff(beta);
            // t^{-1-α/2} ≤ t^{-1-β/2} for t ≥ 1
            Some((ca + cb, b))
        }
        BernsteinFamily::LogPerturbed { .. } => None,
    }
}

fn integrand(spec: &BernsteinSpec, d: usize, radius: f64, t: f64) -> f64 {
    let mu = spec.levy_measure_density(t).unwrap_or(0.0);
    t * powf(4.0 * PI * t, -(d as f64) / 2.0) * exp(-radius * radius / (4.0 * t)) * mu
}

/// Window whose omitted tails are each below `1e-9` of the integral, using
/// the Gaussian factor below `t_min` and the power envelope of `μ` above
/// `t_max`.
pub fn subordination_window(spec: &BernsteinSpec, d: usize, radius: f64) -> Result<SubordinationWindow> {
    let (c, a) = power_envelope(spec).ok_or_else(|| Error::Unsupported("no explicit Lévy measure for this family".into()))?;
    let r2 = radius * radius;
    // e^{-r²/4t} < e^{-70} below t_min
    let t_min = r2 / 280.0;
    let mut t_max = r2.max(1.0) * 1e2;
    let cfg = QuadratureConfig::with_tolerances(0.0, 1e-12);
    let body = integrate_log(|t| integrand(spec, d, radius, t), Lower::At(t_min), Upper::At(t_max), &[r2 / 4.0], &cfg)?.value;
    let expo = d as f64 / 2.0 + a;
    loop {
        let tail = powf(4.0 * PI, -(d as f64) / 2.0) * c * powf(t_max, -expo) / expo;
        if tail < 1e-12 * body || t_max > 1e300 {
            break;
        }
        t_max *= 10.0;
    }
    Ok(SubordinationWindow { t_min, t_max })
}

/// Lévy density `ν(x) = ∫ (4πt)^{-d/2} e^{-|x|²/(4t)} μ(dt)` of the
/// subordinate Brownian motion, at `|x| = radius`.
pub fn levy_density_sbm(spec: &BernsteinSpec, d: usize, radius: f64) -> Result<f64> {
    let window = subordination_window(spec, d, radius)?;
    levy_density_in_window(spec, d, radius, window)
}

pub fn levy_density_in_window(spec: &BernsteinSpec, d: usize, radius: f64, window: SubordinationWindow) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(invalid("Lévy density requires |x| > 0"));
    }
    if spec.levy_measure_density(1.0).is_none() {
        return Err(Error::Unsupported("no explicit Lévy measure for this family".into()));
    }
    let cfg = QuadratureConfig::with_tolerances(0.0, 1e-12);
    let peak = radius * radius / 4.0;
    let breaks = [peak / 16.0, peak, peak * 16.0];
    Ok(integrate_log(|t| integrand(spec, d, radius, t), Lower::At(window.t_min), Upper::At(window.t_max), &breaks, &cfg)?.value)
}

/// Lévy density of the isotropic `α`-stable process with `ψ(ξ) = |ξ|^α`:
/// `c(d, α) |x|^{-d-α}`, `c(d, α) = α 2^{α-1} Γ((d+α)/2) / (π^{d/2} Γ(1-α/2))`.
pub fn stable_levy_density(d: usize, alpha: f64, radius: f64) -> f64 {
    let d = d as f64;
    let c = alpha * powf(2.0, alpha - 1.0) * gamma(0.5 * (d + alpha)) / (powf(PI, 0.5 * d) * gamma(1.0 - 0.5 * alpha));
    c * powf(radius, -d - alpha)
}

/// Witnessed two-sided comparability `ν(x) ≍ ψ*(1/|x|)/|x|^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuBoundsReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Same ratios with `ψ` in place of `ψ*`.
    pub psi_ratios: Vec<f64>,
    pub pass: bool,
}

impl NuBoundsReport {
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

/// Computes `ν(x)|x|^d / ψ*(|x|⁻¹)` over the sampled radii; passes when all
/// ratios are finite and positive.
pub fn verify_nu_bounds(spec: &BernsteinSpec, d: usize, radii: &[f64]) -> Result<NuBoundsReport> {
    let r0 = spec.natural_r0();
    if radii.iter().any(|&r| !(r > 0.0 && r < r0 * (1.0 + 1e-12))) {
        return Err(crate::error::precondition("samples must satisfy 0 < |x| < r0"));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    let mut psi_ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let nu = levy_density_sbm(spec, d, r)?;
        let scaled = nu * powf(r, d as f64);
        ratios.push(scaled / psi_star(spec, 1.0 / r));
        psi_ratios.push(scaled / spec.psi(1.0 / r));
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let pass = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    Ok(NuBoundsReport { radii: radii.to_vec(), ratios, min_ratio, max_ratio, psi_ratios, pass })
}
