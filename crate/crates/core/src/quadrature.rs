//! Adaptive Gauss–Kronrod quadrature with a logarithmic radial variable.
//!
//! Every radial integral in the crate is written as `∫ h(s) d(ln s)`, where
//! the caller supplies `h(s) = s · (integrand in ds)`. In the log variable the
//! algebraic singularities of the kernels at `s → 0` and their power tails at
//! `s → ∞` become exponentially decaying ends, which are truncated once they
//! stop contributing at the requested tolerance.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, exp, ln, PI};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and panel budget for the adaptive integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Extra breakpoints (radii) merged into every radial integral.
    pub split_radii: Vec<f64>,
    pub max_panels: usize,
    /// Trapezoid nodes on the circle for two-dimensional angular averages.
    pub angular_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            split_radii: Vec::new(),
            max_panels: 4000,
            angular_nodes: 64,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    /// Scales both tolerances, keeping everything else.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { abs_tol: self.abs_tol * factor, rel_tol: self.rel_tol * factor, ..self.clone() }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral value together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

impl core::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate::new(self.value + o.value, self.error + o.error)
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    at_floor: bool,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = hw * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * hw;
    let raw = ((kron - gauss) * hw).abs();
    let floor = 50.0 * f64::EPSILON * resabs * hw.abs();
    Panel { a, b, value, error: raw.max(floor), at_floor: raw <= floor }
}

fn check_finite(p: &Panel) -> Result<()> {
    if p.value.is_finite() && p.error.is_finite() {
        Ok(())
    } else {
        Err(Error::NonIntegrable { location: "interior" })
    }
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, mut panels: Vec<Panel>, cfg: &QuadratureConfig) -> Result<Estimate> {
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= cfg.target(value) {
            return Ok(Estimate::new(value, error));
        }
        let (worst, wp) = match panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.at_floor)
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
        {
            Some((i, p)) => (i, *p),
            // every panel is limited by rounding: nothing left to gain
            None => return Ok(Estimate::new(value, error)),
        };
        if panels.len() >= cfg.max_panels {
            return Err(Error::QuadratureBudget { value, error });
        }
        let mid = 0.5 * (wp.a + wp.b);
        if !(mid > wp.a && mid < wp.b) {
            panels[worst].at_floor = true;
            continue;
        }
        let left = gk15(f, wp.a, mid);
        let right = gk15(f, mid, wp.b);
        check_finite(&left)?;
        check_finite(&right)?;
        panels[worst] = left;
        panels.push(right);
    }
}

fn sorted_breaks(lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(lo);
    pts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi && b.is_finite()));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}

/// Adaptive integral of `f` over `[a, b]` with interior breakpoints.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::default());
    }
    if a > b {
        let e = integrate(f, b, a, breaks, cfg)?;
        return Ok(Estimate::new(-e.value, e.error));
    }
    let pts = sorted_breaks(a, b, breaks);
    let mut panels = Vec::with_capacity(pts.len() + 16);
    for w in pts.windows(2) {
        let p = gk15(&mut f, w[0], w[1]);
        check_finite(&p)?;
        panels.push(p);
    }
    refine(&mut f, panels, cfg)
}

/// Lower end of a radial integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lower {
    Zero,
    At(f64),
}

/// Upper end of a radial integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Infinity,
    At(f64),
}

// Representable range of the log variable; beyond it kernels overflow.
const U_MIN: f64 = -460.0;
const U_MAX: f64 = 460.0;

/// `∫ h(s) d(ln s)` over a radial range, with `h(s) = s · (integrand in ds)`.
///
/// Semi-infinite ends are covered by geometrically growing panels in `ln s`
/// until the extrapolated remainder falls below a thousandth of the running
/// tolerance. An end that never becomes negligible inside the representable
/// range is reported as [`Error::NonIntegrable`].
pub fn integrate_log<F: FnMut(f64) -> f64>(mut h: F, lower: Lower, upper: Upper, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Estimate> {
    let lo = match lower {
        Lower::Zero => None,
        Lower::At(a) => Some(a),
    };
    let hi = match upper {
        Upper::Infinity => None,
        Upper::At(b) => Some(b),
    };
    if let (Some(a), Some(b)) = (lo, hi) {
        if a >= b {
            return Ok(Estimate::default());
        }
    }
    if let Some(a) = lo {
        if a <= 0.0 {
            return Err(crate::error::invalid("radial lower limit must be positive"));
        }
    }
    let mut inner: Vec<f64> = breaks
        .iter()
        .chain(cfg.split_radii.iter())
        .copied()
        .filter(|&b| b > 0.0 && b.is_finite() && lo.is_none_or(|a| b > a) && hi.is_none_or(|c| b < c))
        .collect();
    inner.sort_by(f64::total_cmp);
    let anchor_lo = lo.unwrap_or_else(|| inner.first().copied().or(hi).unwrap_or(1.0).min(hi.unwrap_or(f64::MAX)));
    let anchor_hi = hi.unwrap_or_else(|| inner.last().copied().or(lo).unwrap_or(1.0).max(anchor_lo));

    let mut g = |u: f64| h(exp(u));
    let mut pts: Vec<f64> = Vec::with_capacity(inner.len() + 2);
    pts.push(ln(anchor_lo));
    pts.extend(inner.iter().filter(|&&b| b > anchor_lo && b < anchor_hi).map(|&b| ln(b)));
    pts.push(ln(anchor_hi));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut panels: Vec<Panel> = Vec::with_capacity(pts.len() + 32);
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let p = gk15(&mut g, w[0], w[1]);
            check_finite(&p)?;
            panels.push(p);
        }
    }
    let mut running: f64 = panels.iter().map(|p| p.value).sum();

    // Past the last panel the integrand is treated as locally exponential in
    // `ln s` (a power law in `s`) and its remainder `h/c` is added in closed
    // form once it is negligible.
    let mut extend = |panels: &mut Vec<Panel>, running: &mut f64, start: f64, dir: f64, location: &'static str| -> Result<(f64, f64)> {
        let mut width = 1.0;
        let mut offset = 0.0;
        let mut last_c: Option<f64> = None;
        loop {
            let u0 = start + dir * offset;
            let u1 = (start + dir * (offset + width)).clamp(U_MIN, U_MAX);
            let p = if dir < 0.0 { gk15(&mut g, u1, u0) } else { gk15(&mut g, u0, u1) };
            check_finite(&p)?;
            *running += p.value;
            panels.push(p);
            let end = g(u1);
            let prev = g(u1 - dir);
            let (remainder, drift) = if end == 0.0 {
                (Some(0.0), 0.0)
            } else {
                let c = ln(prev.abs() / end.abs());
                let ok = c.is_finite() && c > 1e-3 && prev.signum() == end.signum();
                let drift = last_c.map_or(f64::INFINITY, |l| (c - l).abs() / c);
                last_c = ok.then_some(c);
                (ok.then(|| end / c), drift)
            };
            if let Some(rem) = remainder {
                // negligible, or a slowly decaying power law whose exponent has settled
                let small = 1e-3 * cfg.target(*running);
                if rem.abs() <= small {
                    return Ok((rem, 0.1 * rem.abs()));
                }
                if rem.abs() * drift <= small {
                    return Ok((rem, rem.abs() * drift));
                }
            }
            if u1 <= U_MIN || u1 >= U_MAX {
                return Err(Error::NonIntegrable { location });
            }
            offset += width;
            width *= 2.0;
        }
    };
    let mut remainder = Estimate::default();
    if lo.is_none() {
        let (v, e) = extend(&mut panels, &mut running, ln(anchor_lo), -1.0, "s = 0")?;
        remainder = remainder + Estimate::new(v, e);
    }
    if hi.is_none() {
        let (v, e) = extend(&mut panels, &mut running, ln(anchor_hi), 1.0, "s = infinity")?;
        remainder = remainder + Estimate::new(v, e);
    }
    let body = refine(&mut g, panels, cfg)?;
    Ok(body + remainder)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
    x.into_iter().zip(w).map(move |(xi, wi)| (c + hw * xi, hw * wi))
}
