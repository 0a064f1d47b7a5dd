//! Singular and tail integrals of the kernel, evaluated in polar coordinates
//! with the radius in logarithmic scale.

use alloc::vec::Vec;

use crate::error::{precondition, Result};
use crate::kernel::KernelSpec;
use crate::math::{cos, powf, powi, sin, PI};
use crate::point::Point;
use crate::quadrature::{integrate_log, Estimate, Lower, QuadratureConfig, Upper};
use crate::scaling::ScalingFunction;

/// Unit directions with their angular weights: `±1` in one dimension, an
/// `n`-node trapezoid rule on the circle in two. For even `n` direction
/// `j + n/2` is the antipode of `j`.
pub fn directions(d: usize, n: usize) -> Vec<(Point, f64)> {
    if d == 1 {
        return alloc::vec![(Point::d1(1.0), 1.0), (Point::d1(-1.0), 1.0)];
    }
    let n = n.max(4) & !1;
    let w = 2.0 * PI / n as f64;
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            (Point::d2(cos(t), sin(t)), w)
        })
        .collect()
}

/// `∫ a(s) s^{d-1} J(s) ds` where `a(s)` is the caller's angular integral at
/// radius `s` (the kernel's radial profile is applied here).
pub fn shell_integral<A: FnMut(f64) -> f64>(
    kspec: &KernelSpec,
    mut a: A,
    lower: Lower,
    upper: Upper,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let upper = match (upper, kspec.support_radius()) {
        (Upper::Infinity, Some(r)) => Upper::At(r),
        (Upper::At(b), Some(r)) => Upper::At(b.min(r)),
        (u, None) => u,
    };
    let mut all: Vec<f64> = kspec.breakpoints();
    all.extend_from_slice(breaks);
    let h = |s: f64| {
        let j = kspec.radial(s);
        if j == 0.0 {
            0.0
        } else {
            powi(s, kspec.d as i32) * j * a(s)
        }
    };
    integrate_log(h, lower, upper, &all, cfg)
}

/// `∫ g(z) K(x, x + z) dz` over `ℝ^d`, multiplier included.
///
/// `g` receives the displacement `z = y - x` rather than `y`, so that
/// integrands depending on `|y - x|` keep full precision near the diagonal.
/// `g(z) K(x, x + z)` must be integrable at `z = 0`; a non-integrable
/// singularity shows up as [`crate::Error::NonIntegrable`].
pub fn singular_integral<G: Fn(Point) -> f64>(kspec: &KernelSpec, g: G, x: Point, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Estimate> {
    let dirs = directions(kspec.d, cfg.angular_nodes);
    let ang = |s: f64| {
        dirs.iter()
            .map(|&(e, w)| {
                let z = e * s;
                let gv = g(z);
                if gv == 0.0 {
                    0.0
                } else {
                    w * gv * kspec.weight(x, x + z)
                }
            })
            .sum::<f64>()
    };
    shell_integral(kspec, ang, Lower::Zero, Upper::Infinity, breaks, cfg)
}

/// The four radial integrals bounding the kernel's moments at scale `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// `r⁻² ∫₀^r s f(1/s) ds`
    F0,
    /// `∫_r^{r0} s⁻¹ f(1/s) ds`
    Fr0,
    /// `r⁻¹ ∫₀^r f(1/s) ds`, needs `δ2 < 1`
    GradF0,
    /// `r⁻¹ ∫_r^{r0} f(1/s) ds`, needs `δ1 > 1`
    GradFr0,
}

impl MomentKind {
    pub const ALL: [MomentKind; 4] = [MomentKind::F0, MomentKind::Fr0, MomentKind::GradF0, MomentKind::GradFr0];

    pub fn name(self) -> &'static str {
        match self {
            MomentKind::F0 => "f0",
            MomentKind::Fr0 => "fr0",
            MomentKind::GradF0 => "gradf0",
            MomentKind::GradFr0 => "gradfr0",
        }
    }

    /// Whether the case condition of this kind holds for `f`.
    pub fn applies(self, f: &ScalingFunction) -> bool {
        match self {
            MomentKind::GradF0 => f.cert.delta2 < 1.0,
            MomentKind::GradFr0 => f.cert.delta1 > 1.0,
            _ => true,
        }
    }
}

/// A radial moment with its closed-form upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMoment {
    pub kind: MomentKind,
    pub r: f64,
    pub value: Estimate,
    pub bound: f64,
}

impl RadialMoment {
    /// `(bound - value) / bound`.
    pub fn margin(&self) -> f64 {
        (self.bound - self.value.value) / self.bound
    }
}

pub fn radial_moment(f: &ScalingFunction, r: f64, kind: MomentKind, cfg: &QuadratureConfig) -> Result<RadialMoment> {
    let c = f.cert;
    if !(r > 0.0 && r < c.r0) {
        return Err(precondition("radial moments need 0 < r < r0"));
    }
    if !kind.applies(f) {
        return Err(precondition(match kind {
            MomentKind::GradF0 => "gradf0 requires delta2 < 1",
            _ => "gradfr0 requires delta1 > 1",
        }));
    }
    let fr = f.at_radius(r);
    let (value, bound) = match kind {
        MomentKind::F0 => {
            let e = integrate_log(|s| s * s * f.at_radius(s), Lower::Zero, Upper::At(r), &[], cfg)?;
            (scale(e, 1.0 / (r * r)), c.a2 / (2.0 - c.delta2) * fr)
        }
        MomentKind::Fr0 => {
            let e = integrate_log(|s| f.at_radius(s), Lower::At(r), Upper::At(c.r0), &[], cfg)?;
            (e, fr / (c.a1 * c.delta1))
        }
        MomentKind::GradF0 => {
            let e = integrate_log(|s| s * f.at_radius(s), Lower::Zero, Upper::At(r), &[], cfg)?;
            (scale(e, 1.0 / r), c.a2 / (1.0 - c.delta2) * fr)
        }
        MomentKind::GradFr0 => {
            let e = integrate_log(|s| s * f.at_radius(s), Lower::At(r), Upper::At(c.r0), &[], cfg)?;
            (scale(e, 1.0 / r), fr / (c.a1 * (c.delta1 - 1.0)))
        }
    };
    Ok(RadialMoment { kind, r, value, bound })
}

fn scale(e: Estimate, k: f64) -> Estimate {
    Estimate::new(e.value * k, e.error * k)
}

/// `∫ (1 ∧ (|y-x|/r)²) K(x, y) dy`.
pub fn wedge_integral(kspec: &KernelSpec, x: Point, r: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if !(r > 0.0 && r <= kspec.r0()) {
        return Err(precondition("wedge integral needs 0 < r ≤ r0"));
    }
    singular_integral(
        kspec,
        |z| {
            let q = z.norm() / r;
            (q * q).min(1.0)
        },
        x,
        &[r],
        cfg,
    )
}

/// `∫_{|y-x|>s/4} ((2 (|4(y-x)| ∧ r0)/s)^η - 1) K(x, y) dy`.
pub fn growth_integral(kspec: &KernelSpec, x: Point, s: f64, eta: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let r0 = kspec.r0();
    if !(s > 0.0 && s < r0) {
        return Err(precondition("growth integral needs 0 < s < r0"));
    }
    if !(eta >= 0.0 && eta < kspec.scaling.cert.delta1) {
        return Err(precondition("growth exponent must satisfy 0 ≤ η < δ1"));
    }
    if eta == 0.0 {
        return Ok(Estimate::default());
    }
    let dirs = directions(kspec.d, cfg.angular_nodes);
    let ang = |rho: f64| {
        let q = powf(2.0 * (4.0 * rho).min(r0) / s, eta) - 1.0;
        q * dirs.iter().map(|&(e, w)| w * kspec.weight(x, x + e * rho)).sum::<f64>()
    };
    shell_integral(kspec, ang, Lower::At(s / 4.0), Upper::Infinity, &[r0 / 4.0], cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Multiplier, Tail};
    use crate::math::log_space;
    use crate::quadrature::integrate;

    fn tight() -> QuadratureConfig {
        QuadratureConfig::with_tolerances(1e-13, 1e-11)
    }

    fn power_kernel(alpha: f64, r0: f64, tail: Tail) -> KernelSpec {
        KernelSpec::new(1, ScalingFunction::power(alpha, r0).unwrap(), tail).unwrap()
    }

    #[test]
    fn power_moments_closed_forms() {
        for alpha in [0.3, 0.8, 1.2, 1.7] {
            let f = ScalingFunction::power(alpha, 1.0).unwrap();
            for r in [1e-3, 0.05, 0.6] {
                let m = radial_moment(&f, r, MomentKind::F0, &tight()).unwrap();
                let exact = powf(r, -alpha) / (2.0 - alpha);
                assert!((m.value.value - exact).abs() < 1e-9 * exact);
                assert!((m.bound - exact).abs() < 1e-12 * exact);
                let m = radial_moment(&f, r, MomentKind::Fr0, &tight()).unwrap();
                let exact = (powf(r, -alpha) - 1.0) / alpha;
                assert!((m.value.value - exact).abs() < 1e-9 * exact);
                assert!(m.value.value <= m.bound);
            }
        }
    }

    #[test]
    fn gradient_moments_respect_cases() {
        let f = ScalingFunction::power(0.5, 1.0).unwrap();
        let m = radial_moment(&f, 0.1, MomentKind::GradF0, &tight()).unwrap();
        assert!((m.value.value - powf(0.1, -0.5) / 0.5).abs() < 1e-9);
        assert!(radial_moment(&f, 0.1, MomentKind::GradFr0, &tight()).is_err());
        let g = ScalingFunction::power(1.5, 1.0).unwrap();
        let m = radial_moment(&g, 0.1, MomentKind::GradFr0, &tight()).unwrap();
        assert!(m.value.value <= m.bound);
        assert!(radial_moment(&g, 0.1, MomentKind::GradF0, &tight()).is_err());
        assert!(radial_moment(&g, 1.0, MomentKind::F0, &tight()).is_err());
    }

    #[test]
    fn fr0_vanishes_at_r0() {
        let f = ScalingFunction::mixed(1.5, 0.5, 1.0).unwrap();
        let m = radial_moment(&f, 1.0 - 1e-9, MomentKind::Fr0, &tight()).unwrap();
        assert!(m.value.value < 1e-8 && m.bound > 0.5);
    }

    #[test]
    fn wedge_closed_form_power_continuation() {
        for alpha in [0.5, 1.0, 1.5] {
            let k = power_kernel(alpha, 1.0, Tail::PowerContinuation);
            for r in [0.01, 0.3, 1.0] {
                let w = wedge_integral(&k, Point::d1(0.4), r, &tight()).unwrap();
                let exact = 2.0 * powf(r, -alpha) * (1.0 / (2.0 - alpha) + 1.0 / alpha);
                assert!((w.value - exact).abs() < 1e-9 * exact, "α={alpha} r={r}");
            }
        }
        let k = power_kernel(0.7, 0.8, Tail::Truncate { r_inf: 0.8 });
        let w = wedge_integral(&k, Point::ORIGIN, 0.8, &tight()).unwrap();
        assert!((w.value - 2.0 * powf(0.8, -0.7) / 1.3).abs() < 1e-10);
    }

    #[test]
    fn wedge_non_increasing_in_r() {
        let f = ScalingFunction::log_perturbed(1.0, 0.5, 1.0).unwrap();
        let k = KernelSpec::new(2, f, Tail::ExponentialDamping { rate: 1.0 }).unwrap();
        let v: Vec<f64> = log_space(1e-3, 1.0, 12).iter().map(|&r| wedge_integral(&k, Point::ORIGIN, r, &tight()).unwrap().value).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn inhomogeneous_integrand_uses_multiplier() {
        let k = power_kernel(1.0, 1.0, Tail::Truncate { r_inf: 2.0 });
        let base = wedge_integral(&k, Point::ORIGIN, 0.5, &tight()).unwrap().value;
        let km = k.clone().with_multiplier(Multiplier::constant(0.5).unwrap());
        let half = wedge_integral(&km, Point::ORIGIN, 0.5, &tight()).unwrap().value;
        assert!((half - 0.5 * base).abs() < 1e-10 * base);
    }

    #[test]
    fn growth_integral_power_oracle() {
        let (alpha, r0, s, eta) = (1.2, 1.0, 0.02, 0.4);
        let k = power_kernel(alpha, r0, Tail::PowerContinuation);
        let v = growth_integral(&k, Point::ORIGIN, s, eta, &tight()).unwrap().value;
        let a = alpha;
        let middle = 2.0 * powf(4.0 / s, a)
            * (powf(2.0, eta) * (1.0 - powf(s / r0, a - eta)) / (a - eta) - (1.0 - powf(s / r0, a)) / a);
        let tail = 2.0 * (powf(2.0 * r0 / s, eta) - 1.0) * powf(4.0 / r0, a) / a;
        assert!((v - (middle + tail)).abs() < 1e-9 * v, "{v} vs {}", middle + tail);
        // independent s-variable quadrature of the middle part
        let direct = integrate(|rho| 2.0 * (powf(8.0 * rho / s, eta) - 1.0) * powf(rho, -1.0 - a), s / 4.0, r0 / 4.0, &[], &tight()).unwrap();
        assert!((direct.value - middle).abs() < 1e-9 * middle);
    }

    #[test]
    fn growth_integral_monotone_in_eta_and_zero_at_zero() {
        let k = power_kernel(1.5, 1.0, Tail::Truncate { r_inf: 3.0 });
        assert_eq!(growth_integral(&k, Point::ORIGIN, 0.1, 0.0, &tight()).unwrap().value, 0.0);
        let v: Vec<f64> = [0.1, 0.4, 0.8, 1.2].iter().map(|&e| growth_integral(&k, Point::ORIGIN, 0.1, e, &tight()).unwrap().value).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(growth_integral(&k, Point::ORIGIN, 0.1, 1.5, &tight()).is_err());
    }

    #[test]
    fn singular_integral_examples() {
        let k = power_kernel(0.6, 1.0, Tail::PowerContinuation);
        assert_eq!(singular_integral(&k, |_| 0.0, Point::ORIGIN, &[], &tight()).unwrap().value, 0.0);
        let r = 0.3;
        let v = singular_integral(&k, |z: Point| if z.norm() < r { z.dot(z) } else { 0.0 }, Point::ORIGIN, &[r], &tight()).unwrap();
        let exact = 2.0 * powf(r, 1.4) / 1.4;
        assert!((v.value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn directions_pair_antipodes() {
        let d = directions(2, 64);
        assert_eq!(d.len(), 64);
        for j in 0..32 {
            let (a, b) = (d[j].0, d[j + 32].0);
            assert!((a + b).norm() < 1e-14);
        }
        let total: f64 = d.iter().map(|p| p.1).sum();
        assert!((total - 2.0 * PI).abs() < 1e-13);
    }
}
