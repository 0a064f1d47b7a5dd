//! Spatial kernels `J(x, y)`, their tails, multipliers and extremal classes.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};
use crate::math::{exp, powi, sin, sphere_measure};
use crate::point::Point;
use crate::quadrature::{integrate_log, Lower, QuadratureConfig, Upper};
use crate::scaling::ScalingFunction;

/// Radial model of the kernel beyond `r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Near-diagonal formula continued up to `r_inf`, zero beyond.
    Truncate { r_inf: f64 },
    /// Near-diagonal formula on all of `(0, ∞)`.
    PowerContinuation,
    /// Near-diagonal formula times `exp(-rate (s - r0))`.
    ExponentialDamping { rate: f64 },
}

impl Tail {
    pub fn name(&self) -> &'static str {
        match self {
            Tail::Truncate { .. } => "truncate",
            Tail::PowerContinuation => "power_continuation",
            Tail::ExponentialDamping { .. } => "exponential_damping",
        }
    }
}

type Field = dyn Fn(Point, Point) -> f64 + Send + Sync;

/// Bounded multiplier `m(x, y) ∈ [lower, upper]`, turning `J` into the
/// concrete kernel `K = m J`.
#[derive(Clone)]
pub struct Multiplier {
    pub lower: f64,
    pub upper: f64,
    /// `m(x, x + z) = m(x, x - z)` for all `x, z`.
    pub even: bool,
    field: Arc<Field>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier").field("lower", &self.lower).field("upper", &self.upper).field("even", &self.even).finish()
    }
}

impl Multiplier {
    /// Wraps a closure. Values are clamped into `[lower, upper]` on evaluation
    /// so the comparability envelope cannot be violated by construction.
    pub fn new<F>(lower: f64, upper: f64, even: bool, field: F) -> Result<Self>
    where
        F: Fn(Point, Point) -> f64 + Send + Sync + 'static,
    {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(invalid("multiplier bounds need 0 < lower ≤ upper < ∞"));
        }
        Ok(Self { lower, upper, even, field: Arc::new(field) })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, c, true, move |_, _| c)
    }

    /// `λ + (Λ - λ)(1 + sin(x₁ + y₁))/2`.
    pub fn sinusoidal(lambda: f64, big_lambda: f64) -> Result<Self> {
        Self::new(lambda, big_lambda, false, move |x, y| lambda + (big_lambda - lambda) * 0.5 * (1.0 + sin(x.x() + y.x())))
    }

    /// Equals 1 for `|y - x| < r0` and varies in `[lo, 1]` with `x` beyond.
    pub fn inhomogeneous_tail(r0: f64, lo: f64) -> Result<Self> {
        Self::new(lo.min(1.0), 1.0, true, move |x, y| {
            if x.dist(y) < r0 {
                1.0
            } else {
                lo + (1.0 - lo) * 0.5 * (1.0 + sin(3.0 * x.x() + 2.0 * x.y()))
            }
        })
    }

    pub fn eval(&self, x: Point, y: Point) -> f64 {
        (self.field)(x, y).clamp(self.lower, self.upper)
    }
}

/// The kernel `J(x,y) = f(|x-y|⁻¹)/|x-y|^d` for `|x-y| < r0`, with a radial
/// tail of mass `m0` and an optional multiplier.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub d: usize,
    pub scaling: ScalingFunction,
    pub tail: Tail,
    pub m0: f64,
    pub multiplier: Option<Multiplier>,
}

impl KernelSpec {
    /// Builds the kernel and computes its tail mass.
    pub fn new(d: usize, scaling: ScalingFunction, tail: Tail) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(Error::Unsupported("only d = 1 and d = 2 are implemented".to_string()));
        }
        match tail {
            Tail::Truncate { r_inf } if !(r_inf >= scaling.r0() && r_inf.is_finite()) => {
                return Err(invalid("truncation radius must satisfy r0 ≤ R∞ < ∞"))
            }
            Tail::ExponentialDamping { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return Err(invalid("damping rate must be positive"))
            }
            _ => {}
        }
        let mut k = Self { d, scaling, tail, m0: 0.0, multiplier: None };
        k.m0 = k.tail_mass(Point::ORIGIN)?;
        Ok(k)
    }

    pub fn with_multiplier(mut self, m: Multiplier) -> Self {
        self.multiplier = Some(m);
        self
    }

    pub fn without_multiplier(&self) -> Self {
        Self { multiplier: None, ..self.clone() }
    }

    pub fn r0(&self) -> f64 {
        self.scaling.r0()
    }

    /// Whether the operator carries the gradient compensator (`δ2 ≥ 1`).
    pub fn compensated(&self) -> bool {
        self.scaling.cert.delta2 >= 1.0
    }

    pub fn omega(&self) -> f64 {
        sphere_measure(self.d)
    }

    /// Outer edge of the support, if finite.
    pub fn support_radius(&self) -> Option<f64> {
        match self.tail {
            Tail::Truncate { r_inf } => Some(r_inf),
            _ => None,
        }
    }

    fn near(&self, s: f64) -> f64 {
        self.scaling.eval(1.0 / s) / powi(s, self.d as i32)
    }

    /// `J` as a function of the radius `s = |x - y| > 0`.
    pub fn radial(&self, s: f64) -> f64 {
        let r0 = self.r0();
        if s < r0 {
            return self.near(s);
        }
        match self.tail {
            Tail::Truncate { r_inf } => {
                if s < r_inf {
                    self.near(s)
                } else {
                    0.0
                }
            }
            Tail::PowerContinuation => self.near(s),
            Tail::ExponentialDamping { rate } => self.near(s) * exp(-rate * (s - r0)),
        }
    }

    /// `ω_d s^d J(s)`: the mass of the radial shell per unit of `ln s`.
    pub fn shell_density(&self, s: f64) -> f64 {
        self.omega() * powi(s, self.d as i32) * self.radial(s)
    }

    /// Radii where the radial profile has kinks or jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = alloc::vec![self.r0()];
        if let Tail::Truncate { r_inf } = self.tail {
            b.push(r_inf);
        }
        b
    }

    /// `K(x, y) = m(x, y) J(x, y)`.
    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        let s = x.dist(y);
        if s == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.radial(s) * self.multiplier.as_ref().map_or(1.0, |m| m.eval(x, y)))
    }

    /// `m(x, y)`, or 1 without a multiplier.
    pub fn weight(&self, x: Point, y: Point) -> f64 {
        self.multiplier.as_ref().map_or(1.0, |m| m.eval(x, y))
    }

    /// `∫_{|y-x| ≥ r0} J(x, y) dy`. Tails are radial so the value does not
    /// depend on `x`.
    pub fn tail_mass(&self, _x: Point) -> Result<f64> {
        self.tail_mass_with(&QuadratureConfig::with_tolerances(1e-13, 1e-12))
    }

    pub fn tail_mass_with(&self, cfg: &QuadratureConfig) -> Result<f64> {
        let r0 = self.r0();
        let upper = match self.tail {
            Tail::Truncate { r_inf } => {
                if r_inf <= r0 {
                    return Ok(0.0);
                }
                Upper::At(r_inf)
            }
            Tail::PowerContinuation => {
                if self.scaling.exponent_at_zero() <= 1e-9 {
                    return Err(Error::DivergentTail("f does not vanish at zero like a positive power".to_string()));
                }
                Upper::Infinity
            }
            Tail::ExponentialDamping { .. } => Upper::Infinity,
        };
        let est = integrate_log(|s| self.shell_density(s), Lower::At(r0), upper, &[], cfg).map_err(|e| match e {
            Error::NonIntegrable { .. } => Error::DivergentTail("tail integral does not converge".to_string()),
            other => other,
        })?;
        Ok(est.value)
    }

    /// `J(r0⁻) - J(r0⁺)`; the kernel need not be continuous at `r0`.
    pub fn boundary_jump(&self) -> f64 {
        let r0 = self.r0();
        let inside = self.near(r0);
        let outside = match self.tail {
            Tail::Truncate { r_inf } if r_inf <= r0 => 0.0,
            _ => self.radial(r0),
        };
        inside - outside
    }
}

/// The class `𝓛` (or `𝓛_sym`) of kernels `λJ ≤ K ≤ ΛJ`.
#[derive(Debug, Clone)]
pub struct ExtremalClass {
    pub lambda: f64,
    pub big_lambda: f64,
    pub symmetric: bool,
    pub base: KernelSpec,
}

impl ExtremalClass {
    pub fn new(lambda: f64, big_lambda: f64, symmetric: bool, base: KernelSpec) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return Err(invalid("ellipticity constants need 0 < λ ≤ Λ < ∞"));
        }
        Ok(Self { lambda, big_lambda, symmetric, base: base.without_multiplier() })
    }

    /// Whether `K = m J` belongs to the class.
    pub fn admits(&self, m: &Multiplier) -> bool {
        m.lower >= self.lambda && m.upper <= self.big_lambda && (!self.symmetric || m.even)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{ln, powf};
    use crate::quadrature::integrate;

    fn power(alpha: f64, r0: f64, tail: Tail) -> KernelSpec {
        KernelSpec::new(1, ScalingFunction::power(alpha, r0).unwrap(), tail).unwrap()
    }

    #[test]
    fn near_diagonal_power_law() {
        let k = power(1.5, 1.0, Tail::PowerContinuation);
        let v = k.eval(Point::d1(0.2), Point::d1(0.45)).unwrap();
        assert!((v - powf(0.25, -2.5)).abs() < 1e-12 * v);
        assert_eq!(k.eval(Point::d1(0.3), Point::d1(0.3)), Err(Error::SingularPoint));
    }

    #[test]
    fn log_perturbed_is_comparable_to_log_weighted_power() {
        let f = ScalingFunction::log_perturbed(1.0, 1.0, 1.0).unwrap();
        let k = KernelSpec::new(2, f, Tail::PowerContinuation).unwrap();
        for s in crate::math::log_space(1e-8, 0.36, 40) {
            let q = k.radial(s) / (powf(s, -3.0) * ln(1.0 / s));
            assert!((1.0..=1.0 + crate::math::LN_2).contains(&q), "s={s} q={q}");
        }
    }

    #[test]
    fn truncation_and_tail_masses() {
        let k = power(1.5, 1.0, Tail::Truncate { r_inf: 3.0 });
        assert_eq!(k.radial(3.5), 0.0);
        assert_eq!(power(0.7, 1.0, Tail::Truncate { r_inf: 1.0 }).m0, 0.0);
        for alpha in [0.3, 1.0, 1.7] {
            let k = power(alpha, 1.0, Tail::PowerContinuation);
            assert!((k.m0 - 2.0 / alpha).abs() < 1e-11, "{alpha}: {}", k.m0);
        }
        // α = 0.5, r0 = 1, R∞ = 16/9 has unit tail mass
        let k = power(0.5, 1.0, Tail::Truncate { r_inf: 16.0 / 9.0 });
        assert!((k.m0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_tail_matches_direct_quadrature() {
        let k = power(1.2, 0.5, Tail::ExponentialDamping { rate: 2.0 });
        let cfg = QuadratureConfig::with_tolerances(1e-14, 1e-13);
        // oracle: plain s-variable integration on [r0, 40], the rest is < e^-79
        let direct = integrate(|s| 2.0 * powf(s, -2.2) * exp(-2.0 * (s - 0.5)), 0.5, 40.0, &[1.0, 2.0, 5.0, 10.0], &cfg).unwrap();
        assert!((k.m0 - direct.value).abs() < 1e-10);
        assert!(k.m0.is_finite() && k.m0 > 0.0);
    }

    #[test]
    fn divergent_continuation_is_flagged() {
        let f = ScalingFunction::with_certificate(
            crate::scaling::ScalingFamily::LogPerturbed { alpha: 1.0, p: -0.99999999999 },
            crate::scaling::WeakScaling { a1: 0.5, a2: 1.0, delta1: 0.5, delta2: 1.0, r0: 1.0 },
        )
        .unwrap();
        assert!(matches!(KernelSpec::new(1, f, Tail::PowerContinuation), Err(Error::DivergentTail(_))));
    }

    #[test]
    fn jump_at_r0_is_recorded() {
        assert_eq!(power(1.0, 1.0, Tail::PowerContinuation).boundary_jump(), 0.0);
        assert_eq!(power(1.0, 1.0, Tail::Truncate { r_inf: 1.0 }).boundary_jump(), 1.0);
    }

    #[test]
    fn radial_symmetry_in_two_dimensions() {
        let k = KernelSpec::new(2, ScalingFunction::mixed(1.5, 0.5, 1.0).unwrap(), Tail::ExponentialDamping { rate: 1.0 }).unwrap();
        let a = k.eval(Point::d2(0.1, 0.2), Point::d2(0.4, 0.6)).unwrap();
        let b = k.eval(Point::d2(-1.0, 3.0), Point::d2(-1.5, 3.0)).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn class_membership() {
        let k = power(1.0, 1.0, Tail::PowerContinuation);
        let c = ExtremalClass::new(0.5, 2.0, true, k.clone()).unwrap();
        assert!(c.admits(&Multiplier::constant(1.0).unwrap()));
        assert!(!c.admits(&Multiplier::sinusoidal(0.5, 2.0).unwrap()));
        assert!(ExtremalClass::new(2.0, 1.0, false, k).is_err());
    }
}
