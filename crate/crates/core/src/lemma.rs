//! Numerical certificates for the moment bounds, the wedge bound, the growth
//! lemma, the bump bound and the oscillation lemma, with explicit constants.

use alloc::vec::Vec;

use crate::error::{precondition, Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{ExtremalClass, KernelSpec};
use crate::math::{ball_volume, beta_profile, log2, log_space, powf};
use crate::operators::{extremal_minus, Bump};
use crate::point::Point;
use crate::quadrature::QuadratureConfig;
use crate::scaling::ScalingFunction;
use crate::singular::{growth_integral, radial_moment, wedge_integral, MomentKind};
use crate::solver::residual;

/// `β(1/2) - β(3/4) = 9/16 - 49/256`.
pub const BETA_GAP: f64 = 95.0 / 256.0;

/// `θ` is kept strictly below 1/4.
pub const THETA_CAP: f64 = 0.25 * (1.0 - 1e-9);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConstants {
    pub c1: f64,
    /// Bump constant certified against: `12dΛ(C1 + ω a2/(1-δ2) + ω/(a1(δ1-1)))`
    /// with the terms whose case condition holds, or `12dΛC1` for the
    /// symmetric class.
    pub c2: f64,
    /// Bump constant with only the term that the case actually uses.
    pub c2_active: f64,
    pub c3: f64,
    pub omega_d: f64,
    pub theta: f64,
    /// Whether the cap `θ < 1/4` was tighter than the displayed formula.
    pub theta_capped: bool,
    pub gamma: f64,
    pub eta1: f64,
    pub r1: f64,
    pub alpha: f64,
}

/// `C1 = ω_d (a2/(2-δ2) + 1/(a1 δ1)) + M0/f(1/r0)`.
pub fn wedge_constant(k: &KernelSpec) -> f64 {
    let c = k.scaling.cert;
    k.omega() * (c.a2 / (2.0 - c.delta2) + 1.0 / (c.a1 * c.delta1)) + k.m0 / k.scaling.at_radius(c.r0)
}

/// `ε = ω_d λ / (Λ 2^{d+5+δ2} a2 d)`, the growth tolerance of the
/// oscillation lemma.
pub fn oscillation_epsilon(class: &ExtremalClass) -> f64 {
    let k = &class.base;
    let c = k.scaling.cert;
    let d = k.d as f64;
    k.omega() * class.lambda / (class.big_lambda * powf(2.0, d + 5.0 + c.delta2) * c.a2 * d)
}

fn case_holds(f: &ScalingFunction) -> bool {
    f.cert.delta1 > 1.0 || f.cert.delta2 < 1.0
}

pub fn compute_constants(kspec: &KernelSpec, class: &ExtremalClass, eta1: f64, r1: f64) -> Result<LemmaConstants> {
    let c = kspec.scaling.cert;
    if !(eta1 > 0.0 && eta1.is_finite()) {
        return Err(precondition("eta1 must be positive"));
    }
    if !(r1 > 0.0 && r1 < c.r0) {
        return Err(precondition("r1 must lie in (0, r0)"));
    }
    if !class.symmetric && !case_holds(&kspec.scaling) {
        return Err(Error::CaseMismatch(alloc::format!(
            "non-symmetric class needs delta1 > 1 or delta2 < 1 (delta1 = {}, delta2 = {})",
            c.delta1,
            c.delta2
        )));
    }
    let d = kspec.d as f64;
    let omega = kspec.omega();
    let lam = class.big_lambda;
    let c1 = wedge_constant(kspec);
    let i2 = if c.delta2 < 1.0 { omega * c.a2 / (1.0 - c.delta2) } else { 0.0 };
    let i3 = if c.delta1 > 1.0 { omega / (c.a1 * (c.delta1 - 1.0)) } else { 0.0 };
    let (c2, c2_active) = if class.symmetric {
        (12.0 * d * lam * c1, 12.0 * d * lam * c1)
    } else {
        let active = if c.delta2 < 1.0 { i2 } else { i3 };
        (12.0 * d * lam * (c1 + i2 + i3), 12.0 * d * lam * (c1 + active))
    };
    let c3 = omega * class.lambda / (powf(2.0, d + 3.0 + c.delta2) * c.a2 * d);
    let formula = (c3 / (8.0 * c2)).min((1.0 - powf(2.0, -eta1)) / (2.0 * BETA_GAP));
    let theta_capped = formula > THETA_CAP;
    let theta = formula.min(THETA_CAP);
    let gamma = theta * BETA_GAP;
    let alpha = -log2(1.0 - gamma);
    if !(gamma > 0.0 && gamma < 1.0 - powf(2.0, -eta1) && alpha < eta1) {
        return Err(precondition("gamma left (0, 1 - 2^-eta1)"));
    }
    Ok(LemmaConstants { c1, c2, c2_active, c3, omega_d: omega, theta, theta_capped, gamma, eta1, r1, alpha })
}

/// Constants of the oscillation lemma with `(r1, η1)` from [`find_eta_r`]
/// at [`oscillation_epsilon`].
pub fn theorem_constants(class: &ExtremalClass, cfg: &QuadratureConfig) -> Result<(LemmaConstants, GrowthLemmaResult)> {
    let g = find_eta_r(&class.base, oscillation_epsilon(class), cfg)?;
    Ok((compute_constants(&class.base, class, g.eta_eps, g.r_eps)?, g))
}

/// One checked inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub lemma: &'static str,
    pub kind: &'static str,
    pub inputs: Vec<(&'static str, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` divided by the check's natural scale.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LemmaReport {
    pub records: Vec<CheckRecord>,
}

impl LemmaReport {
    pub fn worst_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    /// First failing record.
    pub fn witness(&self) -> Option<&CheckRecord> {
        self.records.iter().find(|r| !r.pass)
    }

    pub fn extend(&mut self, other: LemmaReport) {
        self.records.extend(other.records);
    }
}

/// Moment bounds at every `r` and wedge bounds at every `(r, x)`. A record
/// passes when its margin is at least `-tol`.
pub fn verify_lemma_integrals(kspec: &KernelSpec, r_samples: &[f64], base_points: &[Point], tol: f64, cfg: &QuadratureConfig) -> Result<LemmaReport> {
    let f = &kspec.scaling;
    let r0 = kspec.r0();
    if let Some(&r) = r_samples.iter().find(|&&r| !(r > 0.0 && r < r0)) {
        return Err(precondition(alloc::format!("sample radius {r} outside (0, r0)")));
    }
    let c1 = wedge_constant(kspec);
    let mut report = LemmaReport::default();
    for &r in r_samples {
        for kind in MomentKind::ALL.into_iter().filter(|k| k.applies(f)) {
            let m = radial_moment(f, r, kind, cfg)?;
            let margin = m.margin();
            report.records.push(CheckRecord { lemma: "moment", kind: kind.name(), inputs: alloc::vec![("r", r)], lhs: m.value.value, rhs: m.bound, margin, pass: margin >= -tol });
        }
        let rhs = c1 * f.at_radius(r);
        for &x in base_points {
            let w = wedge_integral(kspec, x, r, cfg)?.value;
            let margin = (rhs - w) / rhs;
            report.records.push(CheckRecord {
                lemma: "wedge",
                kind: "c1",
                inputs: alloc::vec![("r", r), ("x1", x.0[0]), ("x2", x.0[1])],
                lhs: w,
                rhs,
                margin,
                pass: margin >= -tol,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthLemmaResult {
    pub epsilon: f64,
    pub r_eps: f64,
    pub eta_eps: f64,
    /// Smallest relative margin of `growth ≤ ε f(1/s)` over the validation sample.
    pub worst_margin: f64,
    /// `ω a2 4^δ2 a1⁻¹ ∫₁^∞ ((2t)^η - 1) t^{-δ1-1} dt` at `η_eps`.
    pub integral_term: f64,
    /// `ε` large enough that `η` sits at the top of `(0, δ1)`.
    pub saturated: bool,
}

/// `∫₁^∞ ((2t)^η - 1) t^{-δ-1} dt = 2^η/(δ - η) - 1/δ`.
pub fn growth_tail_integral(eta: f64, delta1: f64) -> f64 {
    powf(2.0, eta) / (delta1 - eta) - 1.0 / delta1
}

pub fn find_eta_r(kspec: &KernelSpec, epsilon: f64, cfg: &QuadratureConfig) -> Result<GrowthLemmaResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(precondition("epsilon must be positive"));
    }
    let c = kspec.scaling.cert;
    let pre = kspec.omega() * c.a2 * powf(4.0, c.delta2) / c.a1;
    let phi = |eta: f64| pre * growth_tail_integral(eta, c.delta1);
    let top = c.delta1 * (1.0 - 1e-6);
    let saturated = phi(top) < 0.5 * epsilon;
    let star = if saturated {
        top
    } else {
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 0.5 * epsilon {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * c.delta1 {
                break;
            }
        }
        lo
    };
    // half of the admissible exponent leaves room for r
    let eta = 0.5 * star;
    if !(eta > 0.0) {
        return Err(precondition("epsilon too small to find a positive growth exponent"));
    }
    let c1 = wedge_constant(kspec);
    let ratio = 0.5 * epsilon * c.a1 / (powf(2.0, 4.0 + c.delta1) * c1);
    let r = (0.5 * c.r0 * powf(ratio, 1.0 / (c.delta1 - eta))).min(0.5 * c.r0);
    let mut out = GrowthLemmaResult { epsilon, r_eps: r, eta_eps: eta, worst_margin: f64::INFINITY, integral_term: phi(eta), saturated };
    out.worst_margin = validate_growth(kspec, &out, &log_space(1e-3 * r, r * (1.0 - 1e-9), 20), &[Point::ORIGIN], cfg)?.worst_margin();
    Ok(out)
}

/// Re-checks `growth_integral(x, s, η) ≤ ε f(1/s)` at the given `s < r_eps`.
pub fn validate_growth(kspec: &KernelSpec, g: &GrowthLemmaResult, s_samples: &[f64], base_points: &[Point], cfg: &QuadratureConfig) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for &s in s_samples {
        if !(s > 0.0 && s < g.r_eps) {
            return Err(precondition("validation radii must lie in (0, r_eps)"));
        }
        let rhs = g.epsilon * kspec.scaling.at_radius(s);
        for &x in base_points {
            let lhs = growth_integral(kspec, x, s, g.eta_eps, cfg)?.value;
            let margin = (rhs - lhs) / rhs;
            report.records.push(CheckRecord { lemma: "growth", kind: "eps", inputs: alloc::vec![("s", s), ("eta", g.eta_eps)], lhs, rhs, margin, pass: margin > 0.0 });
        }
    }
    Ok(report)
}

/// `|M⁻ b_{z,r}(x)| ≤ C2 f(1/r)` at each sample `(z, r, x)`. Margins are
/// `(C2 f(1/r) - |M⁻ b|)/f(1/r)`; a record passes when the margin is at
/// least `-tol`.
pub fn verify_bump_bound(class: &ExtremalClass, consts: &LemmaConstants, samples: &[(Point, f64, Point)], tol: f64, cfg: &QuadratureConfig) -> Result<LemmaReport> {
    let k = &class.base;
    if !class.symmetric && !case_holds(&k.scaling) {
        return Err(Error::CaseMismatch("non-symmetric class needs delta1 > 1 or delta2 < 1".into()));
    }
    let mut report = LemmaReport::default();
    for &(z, r, x) in samples {
        if !(r > 0.0 && r <= k.r0()) {
            return Err(precondition("bump radius must satisfy 0 < r ≤ r0"));
        }
        let fr = k.scaling.at_radius(r);
        let lhs = extremal_minus(class, &Bump::new(z, r), x, cfg)?.value.abs();
        let rhs = consts.c2 * fr;
        let margin = (rhs - lhs) / fr;
        report.records.push(CheckRecord {
            lemma: "bump",
            kind: if class.symmetric { "sym" } else { "nonsym" },
            inputs: alloc::vec![("z1", z.0[0]), ("z2", z.0[1]), ("r", r), ("x1", x.0[0]), ("x2", x.0[1])],
            lhs,
            rhs,
            margin,
            pass: margin >= -tol,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationCheck {
    /// Fraction of `|B(z, r)|` the set `{u ≤ 0}` must exceed; 1/2 in the
    /// lemma, any `δ r^d / |B(z, r)|` in its generalization.
    pub measure_fraction: f64,
    /// Slack allowed in the pointwise checks.
    pub tolerance: f64,
}

impl Default for OscillationCheck {
    fn default() -> Self {
        Self { measure_fraction: 0.5, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationReport {
    /// `M⁺u ≥ 0` at the nodes of `B(z, r)`.
    pub subsolution: bool,
    /// `u ≤ 1/2` on `B(z, r)`.
    pub bounded: bool,
    /// `u ≤ (2(|x-z| ∧ r0)/r)^η1 - 1/2` outside `B(z, r)`.
    pub growth: bool,
    /// `|{u ≤ 0} ∩ B(z, r)| > fraction · |B(z, r)|`.
    pub measure: bool,
    /// `sup_{B(z, r/2)} u ≤ 1/2 - γ`.
    pub conclusion: bool,
    pub min_plus: f64,
    pub max_on_ball: f64,
    pub measured_fraction: f64,
    pub sup_half_ball: f64,
}

impl OscillationReport {
    pub fn hypotheses(&self) -> [bool; 4] {
        [self.subsolution, self.bounded, self.growth, self.measure]
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses().iter().all(|&b| b)
    }
}

// Outside the lattice hull only the exterior bound is known.
const GROWTH_RAYS: usize = 64;

pub fn verify_oscillation_lemma(
    u: &GridFunction,
    z: Point,
    r: f64,
    class: &ExtremalClass,
    consts: &LemmaConstants,
    check: &OscillationCheck,
    cfg: &QuadratureConfig,
) -> Result<OscillationReport> {
    if !(r > 0.0 && r < consts.r1) {
        return Err(precondition("oscillation lemma needs 0 < r < r1"));
    }
    let grid = u.grid;
    let r0 = class.base.r0();
    let tol = check.tolerance;
    let envelope = |x: Point| powf(2.0 * x.dist(z).min(r0) / r, consts.eta1) - 0.5;

    let field = residual(class, u, cfg)?;
    let mut min_plus = f64::INFINITY;
    for (k, &n) in field.nodes.iter().enumerate() {
        if grid.node(n).dist(z) < r {
            min_plus = min_plus.min(field.plus[k]);
        }
    }
    let mut max_on_ball = f64::NEG_INFINITY;
    let mut sup_half = f64::NEG_INFINITY;
    let mut growth = true;
    for n in 0..grid.len() {
        let p = grid.node(n);
        let v = u.values[n];
        let dz = p.dist(z);
        if dz < r {
            max_on_ball = max_on_ball.max(v);
            if dz < 0.5 * r {
                sup_half = sup_half.max(v);
            }
        } else if v > envelope(p) + tol {
            growth = false;
        }
    }
    // exterior closure along rays out past r0, then the upper bound of u
    let (lo, hi) = grid.hull();
    let reach = ((hi - lo).norm() + z.dist((lo + hi) * 0.5) + r).max(r0.min(1e6 * r));
    for (e, _) in crate::singular::directions(grid.d, GROWTH_RAYS) {
        for t in log_space(r, reach, 400) {
            let p = z + e * t;
            if !grid.in_hull(p) && u.eval(p) > envelope(p) + tol {
                growth = false;
            }
        }
    }
    if u.range.1 > powf(2.0 * reach.min(r0) / r, consts.eta1) - 0.5 + tol {
        growth = false;
    }

    // cells fully inside B(z, r) on which the interpolant is ≤ 0
    let h = grid.h;
    let mut count = 0usize;
    for n in 0..grid.len() {
        let c = grid.node(n);
        let corners: Vec<Point> = if grid.d == 1 {
            alloc::vec![c - Point::d1(0.5 * h), c + Point::d1(0.5 * h)]
        } else {
            [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)].iter().map(|&(a, b)| c + Point::d2(0.5 * a * h, 0.5 * b * h)).collect()
        };
        if corners.iter().all(|&q| q.dist(z) <= r) && u.values[n] <= 0.0 && corners.iter().all(|&q| u.eval(q) <= 0.0) {
            count += 1;
        }
    }
    let ball = ball_volume(grid.d) * powf(r, grid.d as f64);
    let measured_fraction = count as f64 * powf(h, grid.d as f64) / ball;

    Ok(OscillationReport {
        subsolution: min_plus >= -tol,
        bounded: max_on_ball <= 0.5 + tol,
        growth,
        measure: measured_fraction > check.measure_fraction,
        conclusion: sup_half <= 0.5 - consts.gamma,
        min_plus,
        max_on_ball,
        measured_fraction,
        sup_half_ball: sup_half,
    })
}

/// `β(1/2)`, the bump value on `∂B(z, r/2)`.
pub fn beta_half() -> f64 {
    beta_profile(0.5)
}
