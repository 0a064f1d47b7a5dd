//! Randomized invariants of the numerics.

use std::sync::Arc;

use nonlocal_core::grid::{Domain, Exterior};
use nonlocal_core::lemma::{compute_constants, wedge_constant, BETA_GAP};
use nonlocal_core::levy::{psi_star, sup_envelope, BernsteinSpec};
use nonlocal_core::math::log_space;
use nonlocal_core::operators::{apply_linear, extremal_minus, extremal_plus, Gaussian, Scaled, Sum, TestFunction, Translated};
use nonlocal_core::probe::{fit_holder, oscillation_profile, Fit};
use nonlocal_core::quadrature::{integrate, integrate_log, Lower, Upper};
use nonlocal_core::scaling::{check_weak_scaling, default_scaling_grids, is_monotone_on};
use nonlocal_core::solver::{solve, Equation, ProblemSpec, Sense};
use nonlocal_core::{ExtremalClass, Grid, GridFunction, KernelSpec, Multiplier, Point, QuadratureConfig, ScalingFunction, Tail};
use proptest::prelude::*;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::with_tolerances(1e-12, 1e-10)
}

fn power(alpha: f64, d: usize, tail: Tail) -> KernelSpec {
    KernelSpec::new(d, ScalingFunction::power(alpha, 1.0).unwrap(), tail).unwrap()
}

fn pt(d: usize, a: f64, b: f64) -> Point {
    if d == 1 {
        Point::d1(a)
    } else {
        Point::d2(a, b)
    }
}

fn gaussian(d: usize, c: (f64, f64), width: f64, amplitude: f64) -> Gaussian {
    Gaussian { center: pt(d, c.0, c.1), width, amplitude }
}

fn tol(a: f64, b: f64) -> f64 {
    1e-8 * (1.0 + a.abs() + b.abs())
}

prop_compose! {
    fn class_and_point()(d in 1usize..=2, alpha in 0.3f64..1.7, symmetric in any::<bool>(), lambda in 0.3f64..1.0, spread in 1.0f64..3.0,
                         x in (-0.5f64..0.5, -0.5f64..0.5)) -> (ExtremalClass, Point) {
        let base = power(alpha, d, Tail::Truncate { r_inf: 2.0 });
        (ExtremalClass::new(lambda, lambda * spread, symmetric, base).unwrap(), pt(d, x.0, x.1))
    }
}

prop_compose! {
    fn bump()(c in (-1.0f64..1.0, -1.0f64..1.0), width in 0.3f64..1.2, amplitude in -2.0f64..2.0) -> ((f64, f64), f64, f64) {
        (c, width, amplitude)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn exact_power_scaling_has_zero_margin(alpha in 0.05f64..1.95, r0 in 0.1f64..10.0) {
        let f = ScalingFunction::power(alpha, r0).unwrap();
        let (s, t) = default_scaling_grids(r0);
        let rep = check_weak_scaling(&f, &s, &t).unwrap();
        prop_assert!(rep.pass);
        prop_assert!(rep.worst_lower_margin.abs() < 1e-12 && rep.worst_upper_margin.abs() < 1e-12);
    }

    #[test]
    fn library_profiles_are_monotone(alpha in 0.2f64..1.4, beta in 0.1f64..0.5, p in 0.5f64..2.0) {
        let samples = log_space(1e-6, 1e6, 200);
        for f in [ScalingFunction::mixed(alpha, alpha + beta, 1.0).unwrap(), ScalingFunction::log_perturbed(alpha, p, 1.0).unwrap()] {
            prop_assert!(is_monotone_on(&f, &samples), "{}", f.name());
        }
    }

    #[test]
    fn kernel_is_radial(alpha in 0.2f64..1.8, s in 0.01f64..3.0, a in 0.0f64..6.3, b in 0.0f64..6.3, shift in (-2.0f64..2.0, -2.0f64..2.0)) {
        let k = power(alpha, 2, Tail::PowerContinuation);
        let x = Point::d2(shift.0, shift.1);
        let j1 = k.eval(x, x + Point::d2(s * a.cos(), s * a.sin())).unwrap();
        let j2 = k.eval(Point::ORIGIN, Point::d2(s * b.cos(), s * b.sin())).unwrap();
        prop_assert!((j1 - j2).abs() <= 1e-13 * j1.abs());
    }

    #[test]
    fn linear_operator_is_linear((cp, x) in class_and_point(), g1 in bump(), g2 in bump(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let d = cp.base.d;
        let k = cp.base.clone().with_multiplier(Multiplier::sinusoidal(cp.lambda, cp.big_lambda).unwrap());
        let u1 = gaussian(d, g1.0, g1.1, g1.2);
        let u2 = gaussian(d, g2.0, g2.1, g2.2);
        let sum = Sum(Vec::new()).push(Scaled(a, u1)).push(Scaled(b, u2));
        let l1 = apply_linear(&k, &u1, x, &cfg()).unwrap().value;
        let l2 = apply_linear(&k, &u2, x, &cfg()).unwrap().value;
        let l = apply_linear(&k, &sum, x, &cfg()).unwrap().value;
        prop_assert!((l - a * l1 - b * l2).abs() <= tol(a * l1, b * l2), "{l} vs {}", a * l1 + b * l2);
    }

    #[test]
    fn extremal_homogeneity_and_sign_flip((class, x) in class_and_point(), g in bump(), c in 0.1f64..3.0) {
        let u = gaussian(class.base.d, g.0, g.1, g.2);
        let p = extremal_plus(&class, &u, x, &cfg()).unwrap().value;
        let m = extremal_minus(&class, &u, x, &cfg()).unwrap().value;
        let pc = extremal_plus(&class, &Scaled(c, u), x, &cfg()).unwrap().value;
        prop_assert!((pc - c * p).abs() <= tol(pc, c * p));
        let flipped = extremal_plus(&class, &Scaled(-c, u), x, &cfg()).unwrap().value;
        prop_assert!((flipped + c * m).abs() <= tol(flipped, c * m));
    }

    #[test]
    fn extremal_sub_and_superadditivity((class, x) in class_and_point(), g1 in bump(), g2 in bump()) {
        let d = class.base.d;
        let (u1, u2) = (gaussian(d, g1.0, g1.1, g1.2), gaussian(d, g2.0, g2.1, g2.2));
        let both = Sum(Vec::new()).push(u1).push(u2);
        let c = cfg();
        let p = extremal_plus(&class, &both, x, &c).unwrap().value;
        let (p1, p2) = (extremal_plus(&class, &u1, x, &c).unwrap().value, extremal_plus(&class, &u2, x, &c).unwrap().value);
        prop_assert!(p <= p1 + p2 + tol(p1, p2));
        let m = extremal_minus(&class, &both, x, &c).unwrap().value;
        let (m1, m2) = (extremal_minus(&class, &u1, x, &c).unwrap().value, extremal_minus(&class, &u2, x, &c).unwrap().value);
        prop_assert!(m >= m1 + m2 - tol(m1, m2));
    }

    #[test]
    fn extremal_translation_covariance((class, x) in class_and_point(), g in bump(), h in (-1.0f64..1.0, -1.0f64..1.0)) {
        let d = class.base.d;
        let u = gaussian(d, g.0, g.1, g.2);
        let h = pt(d, h.0, h.1);
        let a = extremal_plus(&class, &u, x, &cfg()).unwrap().value;
        let b = extremal_plus(&class, &Translated(h, u), x + h, &cfg()).unwrap().value;
        prop_assert!((a - b).abs() <= tol(a, b));
    }

    #[test]
    fn multiplier_kernels_lie_in_the_envelope((class, x) in class_and_point(), g in bump(), t in 0.0f64..1.0) {
        let d = class.base.d;
        let u = gaussian(d, g.0, g.1, g.2);
        let level = class.lambda + t * (class.big_lambda - class.lambda);
        let k = class.base.clone().with_multiplier(Multiplier::constant(level).unwrap());
        let l = apply_linear(&k, &u, x, &cfg()).unwrap().value;
        let p = extremal_plus(&class, &u, x, &cfg()).unwrap().value;
        let m = extremal_minus(&class, &u, x, &cfg()).unwrap().value;
        prop_assert!(m - tol(m, l) <= l && l <= p + tol(p, l), "{m} <= {l} <= {p}");
    }

    #[test]
    fn log_quadrature_meets_its_tolerance(p in 0.2f64..1.8, b in 0.1f64..5.0) {
        // ∫_0^b s^{p-1} ds = b^p / p, written as ∫ s^p d(ln s)
        let e = integrate_log(|s| s.powf(p), Lower::Zero, Upper::At(b), &[], &cfg()).unwrap();
        let exact = b.powf(p) / p;
        prop_assert!(e.error <= 1e-12f64.max(1e-10 * e.value.abs()));
        prop_assert!((e.value - exact).abs() <= 1e-9 * exact);
        let lin = integrate(|s| s * s, 0.0, b, &[0.5 * b], &cfg()).unwrap();
        prop_assert!((lin.value - b * b * b / 3.0).abs() <= 1e-13 * b * b * b);
    }

    #[test]
    fn holder_fit_ignores_scale_and_shift(beta in 0.2f64..0.9, c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], shift in -3.0f64..3.0) {
        let grid = Grid::covering(1, &Domain::Box { lo: Point::d1(-1.0), hi: Point::d1(1.0) }, 1024).unwrap();
        let x0 = grid.node(512);
        let make = |a: f64, b: f64| {
            let values: Vec<f64> = grid.nodes().map(|p| a * (p.x() - x0.x()).abs().powf(beta) + b).collect();
            let bound = a.abs() * 2.0 + b.abs();
            GridFunction::new(grid, values, vec![true; grid.len()], Arc::new(move |_| b), bound).unwrap()
        };
        let fit = |u: &GridFunction| match fit_holder(&oscillation_profile(u, x0, 0.5, 6, 0.0).unwrap()).unwrap() {
            Fit::Holder(h) => h.alpha_emp,
            Fit::Flat => f64::NAN,
        };
        let a0 = fit(&make(1.0, 0.0));
        let a1 = fit(&make(c, shift));
        prop_assert!((a0 - a1).abs() <= 1e-9, "{a0} vs {a1}");
    }

    #[test]
    fn psi_star_is_monotone_and_idempotent(alpha in 0.2f64..1.8, m in 0.1f64..3.0, t in 0.01f64..100.0) {
        let spec = BernsteinSpec::relativistic(alpha, m).unwrap();
        let ts = log_space(0.01 * t, t, 12);
        let vals: Vec<f64> = ts.iter().map(|&s| psi_star(&spec, s)).collect();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        prop_assert!(psi_star(&spec, t) >= spec.psi(t) * (1.0 - 1e-12));
        let twice = sup_envelope(|s| psi_star(&spec, s), t);
        prop_assert!((twice - psi_star(&spec, t)).abs() <= 1e-12 * twice.abs());
    }

    #[test]
    fn constants_are_consistent(alpha in 0.1f64..1.9, d in 1usize..=2, lambda in 0.2f64..1.0, spread in 1.0f64..4.0, eta1 in 0.05f64..2.0, r1 in 0.01f64..0.99) {
        prop_assume!((alpha - 1.0).abs() > 1e-3);
        let k = power(alpha, d, Tail::PowerContinuation);
        let class = ExtremalClass::new(lambda, lambda * spread, false, k.clone()).unwrap();
        let c = compute_constants(&k, &class, eta1, r1).unwrap();
        prop_assert_eq!(c, compute_constants(&k, &class, eta1, r1).unwrap());
        prop_assert_eq!(c.c1, wedge_constant(&k));
        prop_assert!((c.gamma - c.theta * 95.0 / 256.0).abs() <= 1e-15 && (BETA_GAP - 95.0 / 256.0).abs() < 1e-16);
        prop_assert!((c.alpha + (1.0 - c.gamma).log2()).abs() <= 1e-15);
        prop_assert!(c.theta > 0.0 && c.theta < 0.25 && c.alpha < eta1);
        prop_assert!(c.c2 >= c.c2_active);
    }
}

fn interval() -> Domain {
    Domain::Box { lo: Point::d1(-1.0), hi: Point::d1(1.0) }
}

fn equation(kind: u8, alpha: f64) -> Equation {
    let k = |a: f64| power(a, 1, Tail::PowerContinuation);
    match kind {
        0 => Equation::Linear(k(alpha)),
        1 => Equation::Bellman { kernels: vec![k(alpha), k(0.5 * alpha + 0.3)], sense: Sense::Sup },
        _ => Equation::ExtremalMidpoint(ExtremalClass::new(0.5, 2.0, true, k(alpha)).unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn discrete_comparison_and_maximum_principle(kind in 0u8..3, alpha in 0.4f64..1.6, a in -1.0f64..1.0, w in 0.5f64..4.0, bump_at in -2.0f64..2.0, h in 0.0f64..1.0) {
        let g1: Exterior = Arc::new(move |p: Point| a * (w * p.x()).tanh());
        let g2: Exterior = Arc::new(move |p: Point| a * (w * p.x()).tanh() + h * (-(p.x() - bump_at).powi(2)).exp());
        let s1 = solve(&ProblemSpec::new(1, interval(), 24, g1, 2.0, equation(kind, alpha))).unwrap();
        let s2 = solve(&ProblemSpec::new(1, interval(), 24, g2, 2.0, equation(kind, alpha))).unwrap();
        for k in s1.u.domain_nodes() {
            prop_assert!(s2.u.values[k] >= s1.u.values[k] - 1e-10);
            prop_assert!(s1.u.values[k].abs() <= a.abs() + 1e-10);
        }
        prop_assert!(s1.residual_history.windows(2).all(|r| r[1] <= r[0] * (1.0 + 1e-9) + 1e-14));
    }
}

#[test]
fn constant_data_is_reproduced() {
    for kind in 0..3 {
        let g: Exterior = Arc::new(|_| -0.4);
        let s = solve(&ProblemSpec::new(1, interval(), 30, g, 1.0, equation(kind, 0.9))).unwrap();
        assert!(s.u.domain_nodes().all(|k| (s.u.values[k] + 0.4).abs() < 1e-10));
    }
}

#[test]
fn gaussian_difference_matches_values() {
    let u = gaussian(2, (0.3, -0.2), 0.7, 1.3);
    let x = Point::d2(0.1, 0.4);
    for z in [Point::d2(0.5, -0.1), Point::d2(-1e-3, 2e-3)] {
        let direct = u.value(x + z) - u.value(x);
        assert!((u.difference(x, z) - direct).abs() < 1e-15);
    }
}
