//! Scaling profiles `f` and their weak scaling certificates
//! `a1 s^{δ1} ≤ f(st)/f(t) ≤ a2 s^{δ2}` for `s ≥ 1`, `t ≥ 1/r0`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::levy::{check_h, default_grids, BernsteinSpec};
use crate::math::{exp, ln_1p, powf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingFamily {
    /// `f(t) = t^α`
    Power { alpha: f64 },
    /// `f(t) = t^α (ln(1 + t))^p`; near the diagonal the kernel behaves like
    /// `|z|^{-d-α} ln(1/|z|)^p`.
    LogPerturbed { alpha: f64, p: f64 },
    /// `f(t) = t^α + t^β`
    Mixed { alpha: f64, beta: f64 },
    /// `f(t) = φ(t²)`, the characteristic exponent of a subordinate Brownian
    /// motion.
    BernsteinInduced(BernsteinSpec),
}

/// Constants of the weak scaling condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakScaling {
    pub a1: f64,
    pub a2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub r0: f64,
}

impl WeakScaling {
    pub fn validate(&self) -> Result<()> {
        let in_range = |d: f64| d > 0.0 && d < 2.0;
        if !(self.a1 > 0.0 && self.a2 > 0.0 && self.a1.is_finite() && self.a2.is_finite()) {
            return Err(invalid("a1, a2 must be positive and finite"));
        }
        if !(in_range(self.delta1) && in_range(self.delta2)) {
            return Err(invalid("delta1, delta2 must lie in (0, 2)"));
        }
        if self.delta1 > self.delta2 {
            return Err(invalid("delta1 must not exceed delta2"));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(invalid("r0 must be positive"));
        }
        Ok(())
    }
}

/// A profile `f` together with the certificate it is claimed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFunction {
    pub family: ScalingFamily,
    pub cert: WeakScaling,
}

// Bound of (1 + x/L0) e^{-εx} over x ≥ 0.
fn log_excess(eps: f64, l0: f64) -> f64 {
    let el = eps * l0;
    if el < 1.0 {
        exp(el - 1.0) / el
    } else {
        1.0
    }
}

impl ScalingFunction {
    /// Uses `cert` as declared, validating only its ranges. Whether the
    /// profile really satisfies it is what [`check_weak_scaling`] decides.
    pub fn with_certificate(family: ScalingFamily, cert: WeakScaling) -> Result<Self> {
        cert.validate()?;
        match family {
            ScalingFamily::Power { alpha } if !(alpha > 0.0 && alpha < 2.0) => return Err(invalid("power exponent outside (0, 2)")),
            ScalingFamily::Mixed { alpha, beta } if !(alpha > 0.0 && alpha < 2.0 && beta > 0.0 && beta < 2.0) => {
                return Err(invalid("mixed exponents outside (0, 2)"))
            }
            ScalingFamily::LogPerturbed { alpha, p } if !(alpha > 0.0 && alpha < 2.0 && alpha + p > 0.0) => {
                return Err(invalid("log-perturbed profile needs α ∈ (0,2) and α + p > 0"))
            }
            _ => {}
        }
        Ok(Self { family, cert })
    }

    /// `f(t) = t^α` with the exact certificate `a1 = a2 = 1`, `δ1 = δ2 = α`.
    pub fn power(alpha: f64, r0: f64) -> Result<Self> {
        Self::with_certificate(ScalingFamily::Power { alpha }, WeakScaling { a1: 1.0, a2: 1.0, delta1: alpha, delta2: alpha, r0 })
    }

    /// `f(t) = t^α + t^β` with `a1 = a2 = 1`, `δ1 = min`, `δ2 = max`.
    pub fn mixed(alpha: f64, beta: f64, r0: f64) -> Result<Self> {
        Self::with_certificate(
            ScalingFamily::Mixed { alpha, beta },
            WeakScaling { a1: 1.0, a2: 1.0, delta1: alpha.min(beta), delta2: alpha.max(beta), r0 },
        )
    }

    /// `f(t) = t^α (ln(1+t))^p` with an analytic certificate.
    ///
    /// With `x = ln s` and `L0 = ln(1 + 1/r0)`,
    /// `ln(1+st)/ln(1+t) ∈ [1, 1 + x/L0]` and `1 + x/L0 ≤ M e^{εx}` with
    /// `M = e^{εL0-1}/(εL0)` (or 1 when `εL0 ≥ 1`). For `p ≥ 0` this gives
    /// `δ1 = α`, `δ2 = α + pε`, `a2 = M^p`; for `p < 0` the roles flip.
    pub fn log_perturbed(alpha: f64, p: f64, r0: f64) -> Result<Self> {
        let l0 = ln_1p(1.0 / r0);
        let cert = if p >= 0.0 {
            let eps = if p > 0.0 { (0.5 * (2.0 - alpha) / p).min(0.25) } else { 0.0 };
            let a2 = if p > 0.0 { powf(log_excess(eps, l0), p) } else { 1.0 };
            WeakScaling { a1: 1.0, a2, delta1: alpha, delta2: alpha + p * eps, r0 }
        } else {
            let q = -p;
            let eps = (0.5 * alpha / q).min(0.25);
            WeakScaling { a1: powf(log_excess(eps, l0), -q), a2: 1.0, delta1: alpha - q * eps, delta2: alpha, r0 }
        };
        Self::with_certificate(ScalingFamily::LogPerturbed { alpha, p }, cert)
    }

    /// `f = ψ = φ(t²)` with exponents fitted on the default grids.
    pub fn bernstein_induced(spec: BernsteinSpec, r0: f64) -> Result<Self> {
        let (sg, tg) = default_grids(r0);
        let fit = check_h(|t| spec.psi(t), r0, &sg, &tg);
        if !fit.pass {
            return Err(invalid("exponent does not satisfy the scaling condition on the default grids"));
        }
        Self::with_certificate(
            ScalingFamily::BernsteinInduced(spec),
            WeakScaling { a1: fit.a1, a2: fit.a2, delta1: fit.delta1, delta2: fit.delta2, r0 },
        )
    }

    /// `f(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.family {
            ScalingFamily::Power { alpha } => powf(t, alpha),
            ScalingFamily::LogPerturbed { alpha, p } => powf(t, alpha) * powf(ln_1p(t), p),
            ScalingFamily::Mixed { alpha, beta } => powf(t, alpha) + powf(t, beta),
            ScalingFamily::BernsteinInduced(spec) => spec.psi(t),
        }
    }

    /// `f(st)/f(t)`, simplified analytically where possible.
    pub fn ratio(&self, s: f64, t: f64) -> f64 {
        match self.family {
            ScalingFamily::Power { alpha } => powf(s, alpha),
            _ => self.eval(s * t) / self.eval(t),
        }
    }

    pub fn r0(&self) -> f64 {
        self.cert.r0
    }

    /// `f(1/r)`, the natural scale of every bound at radius `r`.
    pub fn at_radius(&self, r: f64) -> f64 {
        self.eval(1.0 / r)
    }

    /// Local exponent of `f` at zero, `log₂(f(2τ)/f(τ))` for tiny `τ`. The
    /// power continuation of the kernel is integrable at infinity iff this
    /// is positive.
    pub fn exponent_at_zero(&self) -> f64 {
        let tau = 1e-12;
        crate::math::log2(self.eval(2.0 * tau) / self.eval(tau))
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            ScalingFamily::Power { .. } => "power",
            ScalingFamily::LogPerturbed { .. } => "log_perturbed",
            ScalingFamily::Mixed { .. } => "mixed",
            ScalingFamily::BernsteinInduced(_) => "bernstein_induced",
        }
    }
}

/// Outcome of checking a weak scaling certificate on grids.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakScalingReport {
    /// `min (f(st)/f(t)) / (a1 s^{δ1}) - 1` over the grid.
    pub worst_lower_margin: f64,
    /// `min 1 - (f(st)/f(t)) / (a2 s^{δ2})` over the grid.
    pub worst_upper_margin: f64,
    pub pass: bool,
    /// First violating `(s, t)` pair, if any.
    pub violation: Option<(f64, f64)>,
}

const SCALING_SLACK: f64 = 1e-12;

pub fn check_weak_scaling(f: &ScalingFunction, s_grid: &[f64], t_grid: &[f64]) -> Result<WeakScalingReport> {
    if s_grid.is_empty() || t_grid.is_empty() {
        return Err(crate::error::precondition("grids must be nonempty"));
    }
    let c = f.cert;
    let mut lower = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut violation = None;
    for &s in s_grid {
        for &t in t_grid {
            let ratio = f.ratio(s, t);
            let lo = ratio / (c.a1 * powf(s, c.delta1)) - 1.0;
            let up = 1.0 - ratio / (c.a2 * powf(s, c.delta2));
            if violation.is_none() && (lo < -SCALING_SLACK || up < -SCALING_SLACK) {
                violation = Some((s, t));
            }
            lower = lower.min(lo);
            upper = upper.min(up);
        }
    }
    Ok(WeakScalingReport { worst_lower_margin: lower, worst_upper_margin: upper, pass: violation.is_none(), violation })
}

/// Default grids of the certificate check for a given `r0`.
pub fn default_scaling_grids(r0: f64) -> (Vec<f64>, Vec<f64>) {
    default_grids(r0)
}

/// Whether `f` is non-decreasing on the sample.
pub fn is_monotone_on(f: &ScalingFunction, samples: &[f64]) -> bool {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).all(|w| f.eval(w[0]) <= f.eval(w[1]) * (1.0 + 1e-14))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{log_space, E};

    #[test]
    fn eval_examples() {
        let p = ScalingFunction::power(1.5, 1.0).unwrap();
        assert!((p.eval(4.0) - 8.0).abs() < 1e-12);
        let l = ScalingFunction::log_perturbed(1.0, 1.0, 1.0).unwrap();
        assert!((l.eval(E - 1.0) - (E - 1.0)).abs() < 1e-14);
        for f in [p, l, ScalingFunction::mixed(1.5, 0.5, 1.0).unwrap()] {
            assert_eq!(f.eval(0.0), 0.0);
            assert!(log_space(1e-6, 1e6, 50).iter().all(|&t| f.eval(0.0) <= f.eval(t)));
        }
    }

    #[test]
    fn power_certificate_has_zero_margin() {
        let f = ScalingFunction::power(1.3, 0.5).unwrap();
        let (sg, tg) = default_scaling_grids(0.5);
        let rep = check_weak_scaling(&f, &sg, &tg).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.worst_lower_margin, 0.0);
        assert_eq!(rep.worst_upper_margin, 0.0);
    }

    #[test]
    fn mixed_certificate_passes_dense_oracle() {
        let f = ScalingFunction::mixed(1.5, 0.5, 1.0).unwrap();
        let sg = log_space(1.0, 1e4, 200);
        let tg = log_space(1.0, 1e4, 200);
        let rep = check_weak_scaling(&f, &sg, &tg).unwrap();
        assert!(rep.pass, "{rep:?}");
        // oracle: the ratio is a convex combination of s^1.5 and s^0.5
        for &s in &sg {
            for &t in &tg {
                let r: f64 = (powf(s * t, 1.5) + powf(s * t, 0.5)) / (powf(t, 1.5) + powf(t, 0.5));
                assert!(r >= powf(s, 0.5) * (1.0 - 1e-13) && r <= powf(s, 1.5) * (1.0 + 1e-13));
            }
        }
    }

    #[test]
    fn understated_exponent_fails_at_first_pair() {
        let f = ScalingFunction::with_certificate(
            ScalingFamily::Power { alpha: 1.0 },
            WeakScaling { a1: 1.0, a2: 1.0, delta1: 0.5, delta2: 0.5, r0: 1.0 },
        )
        .unwrap();
        let rep = check_weak_scaling(&f, &[2.0, 4.0], &[1.0, 3.0]).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.violation, Some((2.0, 1.0)));
    }

    #[test]
    fn log_perturbed_certificates_hold() {
        let sg = log_space(1.0, 1e6, 120);
        for (alpha, p, r0) in [(1.0, 1.0, 1.0), (0.5, 0.75, 0.5), (1.5, -0.5, 1.0), (1.0, -0.5, 0.3), (1.2, 0.4, 2.0)] {
            let f = ScalingFunction::log_perturbed(alpha, p, r0).unwrap();
            let tg = log_space(1.0 / r0, 1e6 / r0, 120);
            let rep = check_weak_scaling(&f, &sg, &tg).unwrap();
            assert!(rep.pass, "α={alpha} p={p}: {rep:?}");
            assert!(is_monotone_on(&f, &log_space(1e-8, 1e8, 400)));
        }
    }

    #[test]
    fn bernstein_induced_fits_itself() {
        let spec = BernsteinSpec::relativistic(1.0, 1.0).unwrap();
        let f = ScalingFunction::bernstein_induced(spec, spec.natural_r0()).unwrap();
        let (sg, tg) = default_scaling_grids(f.r0());
        assert!(check_weak_scaling(&f, &sg, &tg).unwrap().pass);
    }

    #[test]
    fn invalid_certificates_rejected() {
        let bad = WeakScaling { a1: 1.0, a2: 1.0, delta1: 1.5, delta2: 0.5, r0: 1.0 };
        assert!(ScalingFunction::with_certificate(ScalingFamily::Power { alpha: 1.0 }, bad).is_err());
        assert!(ScalingFunction::power(2.0, 1.0).is_err());
    }
}
