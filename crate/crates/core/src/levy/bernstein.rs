use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::{gamma, ln, ln_1p, log_space, powf};

/// Named Bernstein functions `φ` whose exponent `ψ(t) = φ(t²)` satisfies
/// the weak scaling condition at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BernsteinFamily {
    /// `φ(λ) = λ^{α/2}`
    Stable { alpha: f64 },
    /// `φ(λ) = (λ + m^{2/α})^{α/2} - m`
    Relativistic { alpha: f64, m: f64 },
    /// `φ(λ) = λ^{α/2} + λ^{β/2}`, `0 < β < α < 2`
    Mixed { alpha: f64, beta: f64 },
    /// `φ(λ) = λ^{α/2} (log(1 + λ))^p`
    LogPerturbed { alpha: f64, p: f64 },
}

/// A Bernstein function `φ(λ) = bλ + ∫ (1 - e^{-λt}) μ(dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinSpec {
    pub family: BernsteinFamily,
    pub drift: f64,
}

impl BernsteinSpec {
    pub fn new(family: BernsteinFamily) -> Result<Self> {
        let spec = Self { family, drift: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(BernsteinFamily::Stable { alpha })
    }

    pub fn relativistic(alpha: f64, m: f64) -> Result<Self> {
        Self::new(BernsteinFamily::Relativistic { alpha, m })
    }

    pub fn mixed(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(BernsteinFamily::Mixed { alpha, beta })
    }

    pub fn log_perturbed(alpha: f64, p: f64) -> Result<Self> {
        Self::new(BernsteinFamily::LogPerturbed { alpha, p })
    }

    pub fn with_drift(mut self, drift: f64) -> Result<Self> {
        if !(drift >= 0.0) {
            return Err(invalid("drift must be nonnegative"));
        }
        self.drift = drift;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let stable_range = |a: f64| a > 0.0 && a < 2.0;
        match self.family {
            BernsteinFamily::Stable { alpha } if stable_range(alpha) => Ok(()),
            BernsteinFamily::Relativistic { alpha, m } if stable_range(alpha) && m > 0.0 => Ok(()),
            BernsteinFamily::Mixed { alpha, beta } if stable_range(alpha) && beta > 0.0 && beta < alpha => Ok(()),
            BernsteinFamily::LogPerturbed { alpha, p }
                if stable_range(alpha) && p >= -alpha / 2.0 && p <= (2.0 - alpha) / 2.0 =>
            {
                Ok(())
            }
            _ => Err(invalid("Bernstein family parameters out of range")),
        }
    }

    /// `φ(λ)`.
    pub fn phi(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        let body = match self.family {
            BernsteinFamily::Stable { alpha } => powf(lambda, alpha / 2.0),
            BernsteinFamily::Relativistic { alpha, m } => {
                let c = powf(m, 2.0 / alpha);
                // (λ + c)^{α/2} - c^{α/2}, written to avoid cancellation for small λ
                let ratio = ln_1p(lambda / c);
                m * libm::expm1(alpha / 2.0 * ratio)
            }
            BernsteinFamily::Mixed { alpha, beta } => powf(lambda, alpha / 2.0) + powf(lambda, beta / 2.0),
            BernsteinFamily::LogPerturbed { alpha, p } => powf(lambda, alpha / 2.0) * powf(ln_1p(lambda), p),
        };
        body + self.drift * lambda
    }

    /// Characteristic exponent `ψ(t) = φ(t²)`.
    pub fn psi(&self, t: f64) -> f64 {
        self.phi(t * t)
    }

    /// Scale `r0` from which the weak scaling condition is checked.
    pub fn natural_r0(&self) -> f64 {
        match self.family {
            BernsteinFamily::Relativistic { alpha, m } => powf(m, -1.0 / alpha),
            _ => 1.0,
        }
    }

    /// Lévy measure density `μ(t)` of the subordinator, when explicit.
    pub fn levy_measure_density(&self, t: f64) -> Option<f64> {
        let stable = |alpha: f64| {
            let a = alpha / 2.0;
            a / gamma(1.0 - a) * powf(t, -1.0 - a)
        };
        match self.family {
            BernsteinFamily::Stable { alpha } => Some(stable(alpha)),
            BernsteinFamily::Relativistic { alpha, m } => Some(stable(alpha) * libm::exp(-powf(m, 2.0 / alpha) * t)),
            BernsteinFamily::Mixed { alpha, beta } => Some(stable(alpha) + stable(beta)),
            BernsteinFamily::LogPerturbed { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            BernsteinFamily::Stable { .. } => "stable",
            BernsteinFamily::Relativistic { .. } => "relativistic",
            BernsteinFamily::Mixed { .. } => "mixed",
            BernsteinFamily::LogPerturbed { .. } => "log_perturbed",
        }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-14 * b.abs() {
            break;
        }
    }
    fc.max(fd)
}

/// `sup_{s ≤ t} f(s)`.
///
/// Samples `[0, t]` on a logarithmic grid; when the running maximum is
/// attained before `t` the bracketing segment is refined by golden-section
/// search. Monotone profiles return `f(t)` exactly.
pub fn sup_envelope<F: Fn(f64) -> f64>(f: F, t: f64) -> f64 {
    if t <= 0.0 {
        return f(0.0).max(0.0);
    }
    let grid = log_space(t * 1e-12, t, 160);
    let values: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    let (imax, vmax) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f(0.0)), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if imax == values.len() - 1 {
        return values[imax];
    }
    let lo = if imax == 0 { 0.0 } else { grid[imax - 1] };
    let hi = grid[(imax + 1).min(grid.len() - 1)];
    vmax.max(golden_max(&f, lo, hi))
}

/// `ψ*(t) = sup_{s ≤ t} ψ(s)`.
pub fn psi_star(spec: &BernsteinSpec, t: f64) -> f64 {
    sup_envelope(|s| spec.psi(s), t)
}

/// Fitted weak scaling constants for an exponent profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub a1: f64,
    pub a2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub r0: f64,
    pub pass: bool,
}

/// Default certificate grids: 32 log-spaced `s ∈ [1, 10³]` and 32 log-spaced
/// `t ∈ [1/r0, 10³/r0]`.
pub fn default_grids(r0: f64) -> (Vec<f64>, Vec<f64>) {
    (log_space(1.0, 1e3, 32), log_space(1.0 / r0, 1e3 / r0, 32))
}

/// Fits `(a1, a2, δ1, δ2)` so that `a1 s^{δ1} ≤ ψ(st)/ψ(t) ≤ a2 s^{δ2}` on
/// the grid. The exponents are the extreme log-log slopes of `ψ` over the
/// covered range `[min t, max s · max t]`, the tightest pair for which the
/// sandwich holds with `a1 = a2 = 1` along the dense sample; the prefactors
/// then absorb the residual grid slack. A failed fit (exponents outside
/// `(0, 2)` or non-finite ratios) is reported through `pass`, not an error.
pub fn check_h<F: Fn(f64) -> f64>(psi: F, r0: f64, s_grid: &[f64], t_grid: &[f64]) -> ScalingFit {
    let t_lo = t_grid.iter().copied().fold(f64::INFINITY, f64::min).max(1.0 / r0);
    let s_hi = s_grid.iter().copied().fold(1.0, f64::max);
    let t_hi = t_grid.iter().copied().fold(t_lo, f64::max) * s_hi;
    let dense = log_space(t_lo, t_hi, 2048);
    let (mut d1, mut d2) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut prev = (ln(dense[0]), ln(psi(dense[0])));
    for &t in &dense[1..] {
        let cur = (ln(t), ln(psi(t)));
        let slope = (cur.1 - prev.1) / (cur.0 - prev.0);
        d1 = d1.min(slope);
        d2 = d2.max(slope);
        prev = cur;
    }
    let (mut a1, mut a2) = (f64::INFINITY, 0.0_f64);
    for &s in s_grid {
        for &t in t_grid {
            let ratio = psi(s * t) / psi(t);
            a1 = a1.min(ratio / powf(s, d1));
            a2 = a2.max(ratio / powf(s, d2));
        }
    }
    let pass = d1.is_finite() && d2.is_finite() && d1 > 0.0 && d2 < 2.0 && d1 <= d2 && a1 > 0.0 && a2.is_finite();
    ScalingFit { a1, a2, delta1: d1, delta2: d2, r0, pass }
}
