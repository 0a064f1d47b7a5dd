//! The linear operator `L_K` and the extremal operators `M⁺`, `M⁻`.
//!
//! Integrals are taken in polar coordinates around `x`. Below a small model
//! radius the difference `u(x+z) - u(x)` is replaced by its second-order
//! Taylor expansion, which avoids cancellation at the diagonal.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::Result;
use crate::kernel::{ExtremalClass, KernelSpec};
use crate::math::{beta_profile, exp, powf};
use crate::point::{quadratic_form, Hessian, Point};
use crate::quadrature::{Estimate, Lower, QuadratureConfig, Upper};
use crate::singular::{directions, shell_integral};

/// A bounded function on `ℝ^d` that is twice differentiable at the points
/// where operators are evaluated.
pub trait TestFunction: Send + Sync {
    fn value(&self, y: Point) -> f64;
    fn gradient(&self, x: Point) -> Point;
    fn hessian(&self, x: Point) -> Hessian;

    /// `u(x + z) - u(x)`.
    fn difference(&self, x: Point, z: Point) -> f64 {
        self.value(x + z) - self.value(x)
    }

    /// Typical length over which `u` varies.
    fn length_scale(&self) -> f64 {
        1.0
    }

    /// Distances from `x` at which `u` loses smoothness.
    fn kinks(&self, _x: Point) -> Vec<f64> {
        Vec::new()
    }

    /// Upper bound of `|u|` on `ℝ^d`.
    fn sup_norm(&self) -> f64;

    /// Radius below which the Taylor model replaces differences.
    fn model_radius(&self, x: Point) -> f64 {
        let nearest = self.kinks(x).into_iter().filter(|&k| k > 0.0).fold(f64::INFINITY, f64::min);
        (1e-4 * self.length_scale()).min(0.25 * nearest)
    }
}

impl<T: TestFunction + ?Sized> TestFunction for &T {
    fn value(&self, y: Point) -> f64 {
        (**self).value(y)
    }
    fn gradient(&self, x: Point) -> Point {
        (**self).gradient(x)
    }
    fn hessian(&self, x: Point) -> Hessian {
        (**self).hessian(x)
    }
    fn difference(&self, x: Point, z: Point) -> f64 {
        (**self).difference(x, z)
    }
    fn length_scale(&self) -> f64 {
        (**self).length_scale()
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        (**self).kinks(x)
    }
    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }
    fn model_radius(&self, x: Point) -> f64 {
        (**self).model_radius(x)
    }
}

fn outer(v: Point) -> Hessian {
    [[v.0[0] * v.0[0], v.0[0] * v.0[1]], [v.0[1] * v.0[0], v.0[1] * v.0[1]]]
}

fn combine(a: f64, i: &Hessian, b: f64, o: &Hessian) -> Hessian {
    let mut h = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            h[r][c] = a * i[r][c] + b * o[r][c];
        }
    }
    h
}

const IDENTITY: Hessian = [[1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _: Point) -> f64 {
        self.0
    }
    fn gradient(&self, _: Point) -> Point {
        Point::ORIGIN
    }
    fn hessian(&self, _: Point) -> Hessian {
        [[0.0; 2]; 2]
    }
    fn difference(&self, _: Point, _: Point) -> f64 {
        0.0
    }
    fn sup_norm(&self) -> f64 {
        self.0.abs()
    }
}

/// `a·x + b`. Unbounded, so only meaningful for the symmetric form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub slope: Point,
    pub offset: f64,
}

impl TestFunction for Affine {
    fn value(&self, y: Point) -> f64 {
        self.slope.dot(y) + self.offset
    }
    fn gradient(&self, _: Point) -> Point {
        self.slope
    }
    fn hessian(&self, _: Point) -> Hessian {
        [[0.0; 2]; 2]
    }
    fn difference(&self, _: Point, z: Point) -> f64 {
        self.slope.dot(z)
    }
    fn sup_norm(&self) -> f64 {
        f64::INFINITY
    }
}

/// `|y - c|²` on `B(c, R)`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedQuadratic {
    pub center: Point,
    pub radius: f64,
}

impl TestFunction for TruncatedQuadratic {
    fn value(&self, y: Point) -> f64 {
        let v = y - self.center;
        if v.norm() < self.radius {
            v.dot(v)
        } else {
            0.0
        }
    }
    fn gradient(&self, x: Point) -> Point {
        (x - self.center) * 2.0
    }
    fn hessian(&self, _: Point) -> Hessian {
        [[2.0, 0.0], [0.0, 2.0]]
    }
    fn length_scale(&self) -> f64 {
        self.radius
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        let d = x.dist(self.center);
        alloc::vec![(self.radius - d).abs(), self.radius + d]
    }
    fn sup_norm(&self) -> f64 {
        self.radius * self.radius
    }
}

/// `b_{z,r}(y) = β(|y - z|/r)` with `β(t) = (1 - t²)₊²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
}

impl Bump {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }
}

impl TestFunction for Bump {
    fn value(&self, y: Point) -> f64 {
        beta_profile(y.dist(self.center) / self.radius)
    }
    fn gradient(&self, x: Point) -> Point {
        let v = x - self.center;
        let r2 = self.radius * self.radius;
        let q = v.dot(v) / r2;
        if q >= 1.0 {
            return Point::ORIGIN;
        }
        v * (-4.0 * (1.0 - q) / r2)
    }
    fn hessian(&self, x: Point) -> Hessian {
        let v = x - self.center;
        let r2 = self.radius * self.radius;
        let q = v.dot(v) / r2;
        if q >= 1.0 {
            return [[0.0; 2]; 2];
        }
        combine(-4.0 * (1.0 - q) / r2, &IDENTITY, 8.0 / (r2 * r2), &outer(v))
    }
    fn length_scale(&self) -> f64 {
        self.radius
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        let d = x.dist(self.center);
        alloc::vec![(self.radius - d).abs(), self.radius + d]
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// `A exp(-|y - c|²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub center: Point,
    pub width: f64,
    pub amplitude: f64,
}

impl TestFunction for Gaussian {
    fn value(&self, y: Point) -> f64 {
        let v = y - self.center;
        self.amplitude * exp(-v.dot(v) / (self.width * self.width))
    }
    fn gradient(&self, x: Point) -> Point {
        let v = x - self.center;
        let s2 = self.width * self.width;
        v * (-2.0 * self.value(x) / s2)
    }
    fn hessian(&self, x: Point) -> Hessian {
        let v = x - self.center;
        let s2 = self.width * self.width;
        let e = self.value(x);
        combine(-2.0 * e / s2, &IDENTITY, 4.0 * e / (s2 * s2), &outer(v))
    }
    fn difference(&self, x: Point, z: Point) -> f64 {
        let v = x - self.center;
        let s2 = self.width * self.width;
        self.value(x) * libm::expm1(-(2.0 * v.dot(z) + z.dot(z)) / s2)
    }
    fn length_scale(&self) -> f64 {
        self.width
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.abs()
    }
}

/// `(1 - |y|²)₊^{α/2}`, whose fractional Laplacian of order `α` is constant
/// on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalProfile {
    pub alpha: f64,
}

impl TestFunction for FractionalProfile {
    fn value(&self, y: Point) -> f64 {
        let q = 1.0 - y.dot(y);
        if q > 0.0 {
            powf(q, 0.5 * self.alpha)
        } else {
            0.0
        }
    }
    fn gradient(&self, x: Point) -> Point {
        let p = 0.5 * self.alpha;
        let q = 1.0 - x.dot(x);
        if q <= 0.0 {
            return Point::ORIGIN;
        }
        x * (-2.0 * p * powf(q, p - 1.0))
    }
    fn hessian(&self, x: Point) -> Hessian {
        let p = 0.5 * self.alpha;
        let q = 1.0 - x.dot(x);
        if q <= 0.0 {
            return [[0.0; 2]; 2];
        }
        combine(-2.0 * p * powf(q, p - 1.0), &IDENTITY, 4.0 * p * (p - 1.0) * powf(q, p - 2.0), &outer(x))
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        let d = x.norm();
        alloc::vec![(1.0 - d).abs(), 1.0 + d]
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// `c · u`.
pub struct Scaled<U>(pub f64, pub U);

impl<U: TestFunction> TestFunction for Scaled<U> {
    fn value(&self, y: Point) -> f64 {
        self.0 * self.1.value(y)
    }
    fn gradient(&self, x: Point) -> Point {
        self.1.gradient(x) * self.0
    }
    fn hessian(&self, x: Point) -> Hessian {
        combine(self.0, &self.1.hessian(x), 0.0, &IDENTITY)
    }
    fn difference(&self, x: Point, z: Point) -> f64 {
        self.0 * self.1.difference(x, z)
    }
    fn length_scale(&self) -> f64 {
        self.1.length_scale()
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        self.1.kinks(x)
    }
    fn sup_norm(&self) -> f64 {
        self.0.abs() * self.1.sup_norm()
    }
    fn model_radius(&self, x: Point) -> f64 {
        self.1.model_radius(x)
    }
}

/// `u(· - h)`.
pub struct Translated<U>(pub Point, pub U);

impl<U: TestFunction> TestFunction for Translated<U> {
    fn value(&self, y: Point) -> f64 {
        self.1.value(y - self.0)
    }
    fn gradient(&self, x: Point) -> Point {
        self.1.gradient(x - self.0)
    }
    fn hessian(&self, x: Point) -> Hessian {
        self.1.hessian(x - self.0)
    }
    fn difference(&self, x: Point, z: Point) -> f64 {
        self.1.difference(x - self.0, z)
    }
    fn length_scale(&self) -> f64 {
        self.1.length_scale()
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        self.1.kinks(x - self.0)
    }
    fn sup_norm(&self) -> f64 {
        self.1.sup_norm()
    }
    fn model_radius(&self, x: Point) -> f64 {
        self.1.model_radius(x - self.0)
    }
}

/// Sum of boxed terms.
#[derive(Default)]
pub struct Sum(pub Vec<Box<dyn TestFunction>>);

impl Sum {
    pub fn push<U: TestFunction + 'static>(mut self, u: U) -> Self {
        self.0.push(Box::new(u));
        self
    }
}

impl TestFunction for Sum {
    fn value(&self, y: Point) -> f64 {
        self.0.iter().map(|u| u.value(y)).sum()
    }
    fn gradient(&self, x: Point) -> Point {
        self.0.iter().fold(Point::ORIGIN, |a, u| a + u.gradient(x))
    }
    fn hessian(&self, x: Point) -> Hessian {
        self.0.iter().fold([[0.0; 2]; 2], |a, u| combine(1.0, &a, 1.0, &u.hessian(x)))
    }
    fn difference(&self, x: Point, z: Point) -> f64 {
        self.0.iter().map(|u| u.difference(x, z)).sum()
    }
    fn length_scale(&self) -> f64 {
        self.0.iter().map(|u| u.length_scale()).fold(f64::INFINITY, f64::min)
    }
    fn kinks(&self, x: Point) -> Vec<f64> {
        self.0.iter().flat_map(|u| u.kinks(x)).collect()
    }
    fn sup_norm(&self) -> f64 {
        self.0.iter().map(|u| u.sup_norm()).sum()
    }
    fn model_radius(&self, x: Point) -> f64 {
        self.0.iter().map(|u| u.model_radius(x)).fold(f64::INFINITY, f64::min)
    }
}

/// Sign of an extremal operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Difference data at one point, shared by all operator evaluations.
struct Local<'a, U: ?Sized> {
    u: &'a U,
    x: Point,
    grad: Point,
    hess: Hessian,
    rho: f64,
    breaks: Vec<f64>,
}

impl<'a, U: TestFunction + ?Sized> Local<'a, U> {
    fn new(u: &'a U, x: Point, cfg: &QuadratureConfig) -> Self {
        let rho = u.model_radius(x);
        let mut breaks = u.kinks(x);
        breaks.push(rho);
        breaks.extend_from_slice(&cfg.split_radii);
        Self { u, x, grad: u.gradient(x), hess: u.hessian(x), rho, breaks }
    }

    /// `u(x+z) - u(x) - c ∇u(x)·z` with `c` the compensator indicator.
    fn first(&self, z: Point, s: f64, compensate: bool) -> f64 {
        if s < self.rho {
            let lin = if compensate { 0.0 } else { self.grad.dot(z) };
            lin + 0.5 * quadratic_form(&self.hess, z)
        } else {
            let d = self.u.difference(self.x, z);
            if compensate {
                d - self.grad.dot(z)
            } else {
                d
            }
        }
    }

    /// `u(x+z) + u(x-z) - 2u(x)`.
    fn second(&self, z: Point, s: f64) -> f64 {
        if s < self.rho {
            quadratic_form(&self.hess, z)
        } else {
            self.u.difference(self.x, z) + self.u.difference(self.x, -z)
        }
    }
}

fn integrate_directions<U, P>(kspec: &KernelSpec, local: &Local<'_, U>, cfg: &QuadratureConfig, mut per_dir: P) -> Result<Estimate>
where
    U: TestFunction + ?Sized,
    P: FnMut(Point, f64) -> f64,
{
    let dirs = directions(kspec.d, cfg.angular_nodes);
    let ang = |s: f64| dirs.iter().map(|&(e, w)| w * per_dir(e * s, s)).sum::<f64>();
    shell_integral(kspec, ang, Lower::Zero, Upper::Infinity, &local.breaks, cfg)
}

/// `L_K u(x)`, with `K = m J` taken from the kernel's multiplier.
pub fn apply_linear<U: TestFunction + ?Sized>(kspec: &KernelSpec, u: &U, x: Point, cfg: &QuadratureConfig) -> Result<Estimate> {
    let local = Local::new(u, x, cfg);
    let comp = kspec.compensated();
    let r0 = kspec.r0();
    integrate_directions(kspec, &local, cfg, |z, s| {
        let g = local.first(z, s, comp && s < r0);
        if g == 0.0 {
            0.0
        } else {
            g * kspec.weight(x, x + z)
        }
    })
}

fn bang_bang(g: f64, hi: f64, lo: f64) -> f64 {
    if g > 0.0 {
        hi * g
    } else {
        lo * g
    }
}

fn extremal<U: TestFunction + ?Sized>(class: &ExtremalClass, u: &U, x: Point, sign: Sign, cfg: &QuadratureConfig) -> Result<Estimate> {
    if class.symmetric {
        return second_difference_form(class, u, x, sign, cfg);
    }
    let kspec = &class.base;
    let local = Local::new(u, x, cfg);
    let comp = kspec.compensated();
    let r0 = kspec.r0();
    let (hi, lo) = match sign {
        Sign::Plus => (class.big_lambda, class.lambda),
        Sign::Minus => (class.lambda, class.big_lambda),
    };
    integrate_directions(kspec, &local, cfg, |z, s| bang_bang(local.first(z, s, comp && s < r0), hi, lo))
}

/// `M⁺ u(x) = sup_{K} L_K u(x)` over the class.
pub fn extremal_plus<U: TestFunction + ?Sized>(class: &ExtremalClass, u: &U, x: Point, cfg: &QuadratureConfig) -> Result<Estimate> {
    extremal(class, u, x, Sign::Plus, cfg)
}

/// `M⁻ u(x) = inf_{K} L_K u(x)` over the class.
pub fn extremal_minus<U: TestFunction + ?Sized>(class: &ExtremalClass, u: &U, x: Point, cfg: &QuadratureConfig) -> Result<Estimate> {
    extremal(class, u, x, Sign::Minus, cfg)
}

/// `½ ∫ [Λ (δ²u)₊ - λ (δ²u)₋] J(x, x+z) dz` for `Sign::Plus` and the mirror
/// for `Sign::Minus`, with `δ²u(x; z) = u(x+z) + u(x-z) - 2u(x)`. This is
/// the extremal value over symmetric kernels; no gradient term appears.
pub fn second_difference_form<U: TestFunction + ?Sized>(
    class: &ExtremalClass,
    u: &U,
    x: Point,
    sign: Sign,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let kspec = &class.base;
    let local = Local::new(u, x, cfg);
    let (hi, lo) = match sign {
        Sign::Plus => (class.big_lambda, class.lambda),
        Sign::Minus => (class.lambda, class.big_lambda),
    };
    integrate_directions(kspec, &local, cfg, |z, s| 0.5 * bang_bang(local.second(z, s), hi, lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Multiplier, Tail};
    use crate::scaling::ScalingFunction;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::with_tolerances(1e-12, 1e-10)
    }

    fn class(alpha: f64, d: usize, lambda: f64, big: f64, symmetric: bool) -> ExtremalClass {
        let k = KernelSpec::new(d, ScalingFunction::power(alpha, 1.0).unwrap(), Tail::Truncate { r_inf: 2.0 }).unwrap();
        ExtremalClass::new(lambda, big, symmetric, k).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        for alpha in [0.5, 1.5] {
            let c = class(alpha, 2, 0.5, 2.0, false);
            let x = Point::d2(0.3, -0.1);
            assert_eq!(apply_linear(&c.base, &Constant(3.0), x, &cfg()).unwrap().value, 0.0);
            assert_eq!(extremal_plus(&c, &Constant(3.0), x, &cfg()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn bump_at_its_maximum() {
        let c = class(1.2, 1, 0.5, 2.0, false);
        let b = Bump::new(Point::ORIGIN, 1.0);
        let l = apply_linear(&c.base, &b, Point::ORIGIN, &cfg()).unwrap().value;
        let mm = extremal_minus(&c, &b, Point::ORIGIN, &cfg()).unwrap().value;
        let mp = extremal_plus(&c, &b, Point::ORIGIN, &cfg()).unwrap().value;
        assert!(l < 0.0 && mm <= mp && mp <= 0.0);
        assert!((mm - 2.0 * l).abs() < 1e-9 * l.abs() && (mp - 0.5 * l).abs() < 1e-9 * l.abs());
    }

    #[test]
    fn sign_exchange() {
        let c = class(0.7, 2, 0.3, 1.7, false);
        let g = Gaussian { center: Point::d2(0.2, 0.1), width: 0.4, amplitude: 1.3 };
        let x = Point::d2(0.0, 0.25);
        let a = extremal_plus(&c, &Scaled(-1.0, g), x, &cfg()).unwrap().value;
        let b = extremal_minus(&c, &g, x, &cfg()).unwrap().value;
        assert!((a + b).abs() <= 1e-10 * b.abs().max(1.0));
    }

    #[test]
    fn degenerate_class_is_linear() {
        let c = class(1.5, 1, 0.8, 0.8, false);
        let g = Gaussian { center: Point::d1(0.1), width: 0.3, amplitude: 1.0 };
        let k = c.base.clone().with_multiplier(Multiplier::constant(0.8).unwrap());
        let l = apply_linear(&k, &g, Point::d1(0.2), &cfg()).unwrap().value;
        let p = extremal_plus(&c, &g, Point::d1(0.2), &cfg()).unwrap().value;
        let m = extremal_minus(&c, &g, Point::d1(0.2), &cfg()).unwrap().value;
        assert!((p - l).abs() < 1e-9 * l.abs() && (m - l).abs() < 1e-9 * l.abs());
    }

    #[test]
    fn affine_second_difference_vanishes() {
        let c = class(1.5, 2, 0.5, 2.0, true);
        let a = Affine { slope: Point::d2(1.0, -2.0), offset: 0.5 };
        assert_eq!(second_difference_form(&c, &a, Point::d2(0.1, 0.2), Sign::Plus, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn truncated_quadratic_matches_closed_form() {
        // δ²u = 2z² on |z| < R∞ = 2, so M⁺ = Λ ∫ z² |z|^{-1-α} dz = 2Λ R^{2-α}/(2-α)
        let alpha = 0.8;
        let c = class(alpha, 1, 0.5, 2.0, true);
        let u = TruncatedQuadratic { center: Point::ORIGIN, radius: 2.0 };
        let v = second_difference_form(&c, &u, Point::ORIGIN, Sign::Plus, &cfg()).unwrap().value;
        let exact = 2.0 * 2.0 * powf(2.0, 2.0 - alpha) / (2.0 - alpha);
        assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
    }

    #[test]
    fn even_functions_agree_across_classes() {
        let sym = class(0.6, 2, 0.5, 2.0, true);
        let non = class(0.6, 2, 0.5, 2.0, false);
        let x = Point::d2(0.2, -0.3);
        let g = Gaussian { center: x, width: 0.5, amplitude: 1.0 };
        for (a, b) in [
            (extremal_plus(&sym, &g, x, &cfg()), extremal_plus(&non, &g, x, &cfg())),
            (extremal_minus(&sym, &g, x, &cfg()), extremal_minus(&non, &g, x, &cfg())),
        ] {
            let (a, b) = (a.unwrap().value, b.unwrap().value);
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn fractional_profile_has_constant_image() {
        use crate::math::{gamma, sqrt, PI};
        for alpha in [0.5, 1.0, 1.5] {
            let k = KernelSpec::new(1, ScalingFunction::power(alpha, 1.0).unwrap(), Tail::PowerContinuation).unwrap();
            let c = alpha * powf(2.0, alpha - 1.0) * gamma(0.5 * (1.0 + alpha)) / (sqrt(PI) * gamma(1.0 - 0.5 * alpha));
            let exact = -powf(2.0, alpha) * gamma(0.5 * (1.0 + alpha)) * gamma(1.0 + 0.5 * alpha) / (sqrt(PI) * c);
            for x in [-0.85, -0.4, 0.0, 0.3, 0.89] {
                let v = apply_linear(&k, &FractionalProfile { alpha }, Point::d1(x), &cfg()).unwrap().value;
                assert!((v - exact).abs() < 1e-6 * exact.abs(), "α={alpha} x={x}: {v} vs {exact}");
            }
        }
    }
}
