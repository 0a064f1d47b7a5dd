//! Oscillation decay over dyadic balls and discrete Hölder seminorms.

use alloc::vec::Vec;

use crate::error::{precondition, Result};
use crate::grid::GridFunction;
use crate::math::{log2, powf};
use crate::point::Point;

/// Minimum nodes across a ball's diameter for its oscillation to count.
pub const NODES_PER_DIAMETER: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationProfile {
    pub center: Point,
    pub scale: f64,
    /// `Osc_{B(x0, 2^{-k} s)} u` for `k = 0..`.
    pub osc: Vec<f64>,
    pub noise_floor: f64,
    /// The requested depth exceeded the grid's resolution.
    pub truncated: bool,
}

impl OscillationProfile {
    pub fn radius(&self, k: usize) -> f64 {
        self.scale * powf(2.0, -(k as f64))
    }

    /// Entries at or above the noise floor.
    pub fn usable(&self) -> Vec<(usize, f64)> {
        self.osc.iter().copied().enumerate().filter(|&(_, o)| o > self.noise_floor && o > 0.0).collect()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.osc.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `10 · tol · (1 + ‖u‖∞)`.
pub fn noise_floor(tolerance: f64, sup_norm: f64) -> f64 {
    10.0 * tolerance * (1.0 + sup_norm)
}

/// Max minus min of `u` over the nodes of the closed ball `B(x0, ρ)`.
pub fn oscillation(u: &GridFunction, x0: Point, rho: f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in u.grid.nodes_in_ball(x0, rho) {
        lo = lo.min(u.values[n]);
        hi = hi.max(u.values[n]);
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Oscillations on `B(x0, 2^{-k} s)` for `k = 0..=depth`, stopping early
/// once a ball has fewer than five nodes across.
pub fn oscillation_profile(u: &GridFunction, x0: Point, s: f64, depth: usize, noise_floor: f64) -> Result<OscillationProfile> {
    if !(s > 0.0) {
        return Err(precondition("base scale must be positive"));
    }
    let nodes = u.grid.nodes_in_ball(x0, s);
    if nodes.is_empty() || nodes.iter().any(|&n| !u.mask[n]) {
        return Err(precondition("B(x0, s) must lie inside the solved domain"));
    }
    let mut osc = Vec::with_capacity(depth + 1);
    let mut truncated = false;
    for k in 0..=depth {
        let rho = s * powf(2.0, -(k as f64));
        if 2.0 * rho / u.grid.h < NODES_PER_DIAMETER {
            truncated = true;
            break;
        }
        osc.push(oscillation(u, x0, rho));
    }
    Ok(OscillationProfile { center: x0, scale: s, osc, noise_floor, truncated })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFit {
    pub alpha_emp: f64,
    pub c_emp: f64,
    pub gamma_emp: f64,
    pub r_squared: f64,
    pub levels_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fit {
    /// Every entry is below the noise floor.
    Flat,
    Holder(HolderFit),
}

/// Least-squares slope of `log₂ Osc_k` against `-k`, so that
/// `Osc_k ≈ C (2^{-k} s)^α`.
pub fn fit_holder(profile: &OscillationProfile) -> Result<Fit> {
    let pts = profile.usable();
    if pts.is_empty() {
        return Ok(Fit::Flat);
    }
    if pts.len() < 3 {
        return Err(precondition("fewer than three usable profile entries"));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|&(k, _)| k as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|&(_, o)| log2(o)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| {
        let e = y - (intercept + slope * x);
        e * e
    }).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let alpha = -slope;
    Ok(Fit::Holder(HolderFit {
        alpha_emp: alpha,
        c_emp: powf(2.0, intercept) / powf(profile.scale, alpha),
        gamma_emp: 1.0 - powf(2.0, -alpha),
        r_squared,
        levels_used: pts.len(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormReport {
    pub seminorm: f64,
    /// `seminorm · (r ∧ r0)^α / ‖u‖∞`.
    pub bound_constant: f64,
    pub pairs_used: usize,
    pub pairs_total: usize,
    /// Every `stride`-th pair in lexicographic order was used.
    pub stride: usize,
}

pub const MAX_PAIRS: usize = 1_000_000;

/// `max |u(x) - u(y)|/|x - y|^α` over every `stride`-th node pair of
/// `B(z0, r/2)`.
pub fn seminorm_with_stride(u: &GridFunction, z0: Point, r: f64, alpha: f64, stride: usize) -> (f64, usize, usize) {
    let nodes: Vec<usize> = u.grid.nodes_in_ball(z0, 0.5 * r);
    let stride = stride.max(1);
    let mut best: f64 = 0.0;
    let mut idx = 0usize;
    let mut used = 0usize;
    for (a, &i) in nodes.iter().enumerate() {
        let (pi, ui) = (u.grid.node(i), u.values[i]);
        for &j in &nodes[a + 1..] {
            if idx % stride == 0 {
                let q = (ui - u.values[j]).abs() / powf(pi.dist(u.grid.node(j)), alpha);
                best = best.max(q);
                used += 1;
            }
            idx += 1;
        }
    }
    (best, used, idx)
}

pub fn holder_seminorm_report(u: &GridFunction, z0: Point, r: f64, r0: f64, alpha: f64) -> Result<SeminormReport> {
    if !(alpha > 0.0) {
        return Err(precondition("alpha must be positive"));
    }
    if !(r > 0.0 && r0 > 0.0) {
        return Err(precondition("radii must be positive"));
    }
    let n = u.grid.nodes_in_ball(z0, 0.5 * r).len();
    let total = n * n.saturating_sub(1) / 2;
    let stride = total.div_ceil(MAX_PAIRS).max(1);
    let (seminorm, used, _) = seminorm_with_stride(u, z0, r, alpha, stride);
    let sup = u.bound;
    let bound_constant = if sup > 0.0 { seminorm * powf(r.min(r0), alpha) / sup } else { 0.0 };
    Ok(SeminormReport { seminorm, bound_constant, pairs_used: used, pairs_total: total, stride })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use alloc::sync::Arc;

    fn sampled<F: Fn(Point) -> f64>(f: F, h: f64, n: usize) -> GridFunction {
        // nodes at (k - n/2) h, so the origin is a node
        let g = Grid::new(1, Point::d1(-(n as f64 / 2.0 + 0.5) * h), h, [n + 1, 1]).unwrap();
        let vals: Vec<f64> = g.nodes().map(&f).collect();
        let sup = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        GridFunction::new(g, vals, alloc::vec![true; n + 1], Arc::new(|_| 0.0), sup).unwrap()
    }

    fn profile(osc: &[f64]) -> OscillationProfile {
        OscillationProfile { center: Point::ORIGIN, scale: 1.0, osc: osc.to_vec(), noise_floor: 0.0, truncated: false }
    }

    #[test]
    fn exact_geometric_profiles() {
        let Fit::Holder(f) = fit_holder(&profile(&[1.0, 0.5, 0.25, 0.125])).unwrap() else { panic!() };
        assert!((f.alpha_emp - 1.0).abs() < 1e-14 && (f.gamma_emp - 0.5).abs() < 1e-14);
        let half = powf(2.0, -0.5);
        let Fit::Holder(f) = fit_holder(&profile(&[1.0, half, 0.5, 0.5 * half])).unwrap() else { panic!() };
        assert!((f.alpha_emp - 0.5).abs() < 1e-14);
        assert!((f.c_emp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_and_short_profiles() {
        assert_eq!(fit_holder(&profile(&[0.0, 0.0, 0.0])).unwrap(), Fit::Flat);
        assert!(fit_holder(&profile(&[1.0, 0.5])).is_err());
    }

    #[test]
    fn power_function_recovers_exponent() {
        let u = sampled(|p| powf(p.x().abs(), 0.3), 1.0 / 1024.0, 2048);
        let p = oscillation_profile(&u, Point::ORIGIN, 0.5, 7, 0.0).unwrap();
        assert!(p.is_non_increasing());
        let Fit::Holder(f) = fit_holder(&p).unwrap() else { panic!() };
        assert!((f.alpha_emp - 0.3).abs() < 0.01);
    }

    #[test]
    fn constant_has_zero_oscillation_and_seminorm() {
        let u = sampled(|_| 3.0, 0.01, 200);
        let p = oscillation_profile(&u, Point::ORIGIN, 0.5, 4, 0.0).unwrap();
        assert!(p.osc.iter().all(|&o| o == 0.0));
        assert_eq!(holder_seminorm_report(&u, Point::ORIGIN, 1.0, 1.0, 0.5).unwrap().seminorm, 0.0);
    }

    #[test]
    fn lipschitz_line() {
        let u = sampled(|p| p.x(), 0.01, 200);
        let s = holder_seminorm_report(&u, Point::ORIGIN, 2.0, 1.0, 1.0).unwrap();
        assert!((s.seminorm - 1.0).abs() < 1e-10);
        assert_eq!(s.stride, 1);
    }

    #[test]
    fn deep_profiles_are_truncated() {
        let u = sampled(|p| p.x(), 0.1, 20);
        let p = oscillation_profile(&u, Point::ORIGIN, 0.5, 6, 0.0).unwrap();
        assert!(p.truncated && p.osc.len() < 7);
    }
}
