//! TOML run configuration. Every field has a default, so an empty file is a
//! valid configuration (the one-dimensional `α = 1/2` fractional setup).

use std::path::Path;
use std::sync::Arc;

use nonlocal_core::grid::{Domain, Exterior};
use nonlocal_core::levy::BernsteinSpec;
use nonlocal_core::solver::{Equation, ProblemSpec, Sense};
use nonlocal_core::{ExtremalClass, KernelSpec, Multiplier, Point, QuadratureConfig, ScalingFunction, Tail, WeakScaling};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub kernel: KernelConfig,
    pub class: ClassConfig,
    pub grid: GridConfig,
    pub quadrature: QuadratureSection,
    pub probe: ProbeConfig,
    pub levy: LevyConfig,
    pub lemmas: LemmaConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), LabError> {
        let bytes = std::fs::read(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| LabError::Config(e.to_string()))?;
        Ok((Self::from_toml(text)?, bytes))
    }
}

/// Declared weak scaling constants, replacing the family's own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub a1: f64,
    pub a2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub d: usize,
    /// `power`, `log_perturbed`, `mixed`, `stable`, `relativistic`.
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    /// Mass of the relativistic family.
    pub m: f64,
    pub r0: f64,
    /// `truncate`, `power` or `exponential`.
    pub tail: String,
    pub r_inf: f64,
    pub rate: f64,
    /// `none`, `constant`, `sinusoidal` or `inhomogeneous_tail`.
    pub multiplier: String,
    pub multiplier_value: f64,
    pub certificate: Option<CertificateConfig>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            d: 1,
            family: "power".into(),
            alpha: 0.5,
            beta: 0.3,
            p: 1.0,
            m: 1.0,
            r0: 1.0,
            tail: "truncate".into(),
            r_inf: 16.0 / 9.0,
            rate: 1.0,
            multiplier: "none".into(),
            multiplier_value: 1.0,
            certificate: None,
        }
    }
}

fn core(e: nonlocal_core::Error) -> LabError {
    LabError::Config(e.to_string())
}

impl KernelConfig {
    pub fn scaling(&self) -> Result<ScalingFunction, LabError> {
        let base = match self.family.as_str() {
            "power" => ScalingFunction::power(self.alpha, self.r0),
            "log_perturbed" => ScalingFunction::log_perturbed(self.alpha, self.p, self.r0),
            "mixed" => ScalingFunction::mixed(self.alpha, self.beta, self.r0),
            "stable" => BernsteinSpec::stable(self.alpha).and_then(|b| ScalingFunction::bernstein_induced(b, self.r0)),
            "relativistic" => BernsteinSpec::relativistic(self.alpha, self.m).and_then(|b| ScalingFunction::bernstein_induced(b, self.r0)),
            other => return Err(LabError::Config(format!("unknown kernel family `{other}`"))),
        }
        .map_err(core)?;
        match self.certificate {
            None => Ok(base),
            Some(c) => ScalingFunction::with_certificate(
                base.family,
                WeakScaling { a1: c.a1, a2: c.a2, delta1: c.delta1, delta2: c.delta2, r0: self.r0 },
            )
            .map_err(core),
        }
    }

    pub fn tail(&self) -> Result<Tail, LabError> {
        match self.tail.as_str() {
            "truncate" => Ok(Tail::Truncate { r_inf: self.r_inf }),
            "power" => Ok(Tail::PowerContinuation),
            "exponential" => Ok(Tail::ExponentialDamping { rate: self.rate }),
            other => Err(LabError::Config(format!("unknown tail `{other}`"))),
        }
    }

    pub fn multiplier(&self) -> Result<Option<Multiplier>, LabError> {
        let v = self.multiplier_value;
        match self.multiplier.as_str() {
            "none" => Ok(None),
            "constant" => Multiplier::constant(v).map(Some).map_err(core),
            "sinusoidal" => Multiplier::sinusoidal(v.min(1.0), v.max(1.0)).map(Some).map_err(core),
            "inhomogeneous_tail" => Multiplier::inhomogeneous_tail(self.r0, v).map(Some).map_err(core),
            other => Err(LabError::Config(format!("unknown multiplier `{other}`"))),
        }
    }

    /// The kernel with its multiplier.
    pub fn kernel(&self) -> Result<KernelSpec, LabError> {
        let k = KernelSpec::new(self.d, self.scaling()?, self.tail()?).map_err(core)?;
        Ok(match self.multiplier()? {
            Some(m) => k.with_multiplier(m),
            None => k,
        })
    }

    /// Same kernel with a power profile of exponent `alpha`.
    pub fn power_variant(&self, alpha: f64) -> Result<KernelSpec, LabError> {
        let cfg = KernelConfig { family: "power".into(), alpha, certificate: None, ..self.clone() };
        cfg.kernel()
    }

    pub fn bernstein(&self) -> Result<BernsteinSpec, LabError> {
        bernstein(&self.family, self.alpha, self.beta, self.p, self.m)
    }
}

pub fn bernstein(family: &str, alpha: f64, beta: f64, p: f64, m: f64) -> Result<BernsteinSpec, LabError> {
    match family {
        "stable" | "power" => BernsteinSpec::stable(alpha),
        "relativistic" => BernsteinSpec::relativistic(alpha, m),
        "mixed" => BernsteinSpec::mixed(alpha, beta),
        "log_perturbed" => BernsteinSpec::log_perturbed(alpha, p),
        other => return Err(LabError::Config(format!("unknown Bernstein family `{other}`"))),
    }
    .map_err(core)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassConfig {
    pub lambda: f64,
    pub big_lambda: f64,
    pub symmetric: bool,
}

impl Default for ClassConfig {
    fn default() -> Self {
        Self { lambda: 1.0, big_lambda: 2.0, symmetric: true }
    }
}

impl ClassConfig {
    pub fn class(&self, base: &KernelSpec) -> Result<ExtremalClass, LabError> {
        ExtremalClass::new(self.lambda, self.big_lambda, self.symmetric, base.clone()).map_err(core)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `ball` or `box`.
    pub domain: String,
    pub center: [f64; 2],
    pub radius: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub cells: usize,
    /// `constant`, `indicator` (1 for `a < x₁ < b`) or `step` (1 for `x₁ > a`).
    pub exterior: String,
    pub value: f64,
    pub a: f64,
    pub b: f64,
    /// `linear`, `midpoint`, `bellman_sup`, `bellman_inf` or `isaacs`.
    pub equation: String,
    /// Power exponents of the kernel family for Bellman and Isaacs runs;
    /// Isaacs uses the first half for `sup` and the rest for `inf`.
    pub family_alphas: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            domain: "ball".into(),
            center: [0.0, 0.0],
            radius: 1.0,
            lo: [-1.0, -1.0],
            hi: [1.0, 1.0],
            cells: 40,
            exterior: "indicator".into(),
            value: 1.0,
            a: 1.0,
            b: 2.0,
            equation: "linear".into(),
            family_alphas: vec![0.5, 1.5],
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

impl GridConfig {
    pub fn domain(&self) -> Result<Domain, LabError> {
        match self.domain.as_str() {
            "ball" => Ok(Domain::Ball { center: Point(self.center), radius: self.radius }),
            "box" => Ok(Domain::Box { lo: Point(self.lo), hi: Point(self.hi) }),
            other => Err(LabError::Config(format!("unknown domain `{other}`"))),
        }
    }

    /// Exterior closure with its range.
    pub fn exterior(&self) -> Result<(Exterior, (f64, f64)), LabError> {
        let (v, a, b) = (self.value, self.a, self.b);
        let span = (v.min(0.0), v.max(0.0));
        match self.exterior.as_str() {
            "constant" => Ok((Arc::new(move |_| v), (v, v))),
            "indicator" => Ok((Arc::new(move |p: Point| if p.x() > a && p.x() < b { v } else { 0.0 }), span)),
            "step" => Ok((Arc::new(move |p: Point| if p.x() > a { v } else { 0.0 }), span)),
            other => Err(LabError::Config(format!("unknown exterior data `{other}`"))),
        }
    }

    pub fn equation(&self, kernel: &KernelConfig, class: &ClassConfig) -> Result<Equation, LabError> {
        let family = || self.family_alphas.iter().map(|&a| kernel.power_variant(a)).collect::<Result<Vec<_>, _>>();
        Ok(match self.equation.as_str() {
            "linear" => Equation::Linear(kernel.kernel()?),
            "midpoint" => Equation::ExtremalMidpoint(class.class(&kernel.kernel()?)?),
            "bellman_sup" => Equation::Bellman { kernels: family()?, sense: Sense::Sup },
            "bellman_inf" => Equation::Bellman { kernels: family()?, sense: Sense::Inf },
            "isaacs" => {
                let mut ks = family()?;
                if ks.len() < 2 {
                    return Err(LabError::Config("isaacs needs at least two family_alphas".into()));
                }
                let inf = ks.split_off(ks.len() / 2);
                Equation::Isaacs { sup: ks, inf }
            }
            other => return Err(LabError::Config(format!("unknown equation `{other}`"))),
        })
    }

    pub fn problem(&self, kernel: &KernelConfig, class: &ClassConfig, quad: &QuadratureConfig) -> Result<ProblemSpec, LabError> {
        let (g, (lo, hi)) = self.exterior()?;
        let mut spec = ProblemSpec::new(kernel.d, self.domain()?, self.cells, g, 0.0, self.equation(kernel, class)?).with_exterior_range(lo, hi);
        spec.tolerance = self.tolerance;
        spec.max_iterations = self.max_iterations;
        spec.quadrature = quad.clone();
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub angular_nodes: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self { abs_tol: q.abs_tol, rel_tol: q.rel_tol, max_panels: q.max_panels, angular_nodes: q.angular_nodes }
    }
}

impl QuadratureSection {
    pub fn config(&self) -> QuadratureConfig {
        QuadratureConfig { abs_tol: self.abs_tol, rel_tol: self.rel_tol, max_panels: self.max_panels, angular_nodes: self.angular_nodes, ..QuadratureConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// `solve` (probe the solver output of [grid]) or `fixture` (`|x - c|^β`).
    pub source: String,
    pub fixture_beta: f64,
    pub centers: Vec<[f64; 2]>,
    pub scale: f64,
    pub depth: usize,
    /// Ball `B(z0, r/2)` of the seminorm report.
    pub seminorm_radius: f64,
    /// Exponent of the seminorm; the fitted one when absent.
    pub seminorm_alpha: Option<f64>,
    pub min_r_squared: f64,
    pub min_alpha: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            source: "solve".into(),
            fixture_beta: 0.3,
            centers: vec![[-0.3, 0.0], [0.0, 0.0], [0.3, 0.0]],
            scale: 0.25,
            depth: 6,
            seminorm_radius: 0.5,
            seminorm_alpha: None,
            min_r_squared: 0.9,
            min_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevyConfig {
    pub families: Vec<String>,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub m: f64,
    /// Sample points of `ψ* ≤ π² ψ`.
    pub samples: usize,
    /// Radii of the density comparisons.
    pub radii: usize,
    pub max_spread: f64,
}

impl Default for LevyConfig {
    fn default() -> Self {
        Self {
            families: vec!["stable".into(), "relativistic".into(), "mixed".into(), "log_perturbed".into()],
            d: 1,
            alpha: 1.5,
            beta: 0.5,
            p: 0.25,
            m: 1.0,
            samples: 1000,
            radii: 20,
            max_spread: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    /// Log-spaced radii in `(r_min_fraction · r0, r0)`.
    pub radii: usize,
    pub r_min_fraction: f64,
    pub base_points: Vec<[f64; 2]>,
    pub epsilons: Vec<f64>,
    pub growth_samples: usize,
    /// Random `(z, r, x)` triples of the bump bound.
    pub bump_samples: usize,
    pub tolerance: f64,
    pub bump_tolerance: f64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            radii: 100,
            r_min_fraction: 1e-3,
            base_points: vec![[0.0, 0.0], [0.7, -0.2]],
            epsilons: vec![0.1, 0.01, 0.001],
            growth_samples: 40,
            bump_samples: 50,
            tolerance: 1e-8,
            bump_tolerance: 1e-6,
        }
    }
}
