//! Monotone finite-difference solver for nonlocal Dirichlet problems:
//! linear equations `L_K u = 0`, Bellman equations `sup_k L_k u = 0` (or
//! `inf`), and Isaacs equations `½(sup_k L_k u + inf_j L_j u) = 0`, with
//! `u = g` outside the domain.

pub mod linalg;
pub mod stencil;

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{precondition, Error, Result};
use crate::grid::{Domain, Exterior, Grid, GridFunction};
use crate::kernel::{ExtremalClass, KernelSpec, Multiplier};
use crate::quadrature::QuadratureConfig;
use linalg::{Dense, Lu};
pub use stencil::{build_stencil, End, Layout, Row, Stencil, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Sup,
    Inf,
}

#[derive(Debug, Clone)]
pub enum Equation {
    Linear(KernelSpec),
    Bellman { kernels: Vec<KernelSpec>, sense: Sense },
    Isaacs { sup: Vec<KernelSpec>, inf: Vec<KernelSpec> },
    /// `½(M⁺ + M⁻) u = 0` over an extremal class. Both extremal operators
    /// are bang-bang in the same kernel, so the midpoint is the linear
    /// operator with kernel `(λ + Λ)/2 · J`.
    ExtremalMidpoint(ExtremalClass),
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub d: usize,
    pub domain: Domain,
    /// Cells across the domain's bounding box.
    pub cells: usize,
    pub exterior: Exterior,
    /// `lo ≤ exterior ≤ hi`.
    pub exterior_range: (f64, f64),
    pub equation: Equation,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub quadrature: QuadratureConfig,
}

impl ProblemSpec {
    pub fn new(d: usize, domain: Domain, cells: usize, exterior: Exterior, exterior_bound: f64, equation: Equation) -> Self {
        Self {
            d,
            domain,
            cells,
            exterior,
            exterior_range: (-exterior_bound, exterior_bound),
            equation,
            tolerance: 1e-8,
            max_iterations: 50,
            quadrature: QuadratureConfig::default(),
        }
    }

    pub fn with_exterior_range(mut self, lo: f64, hi: f64) -> Self {
        self.exterior_range = (lo, hi);
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::covering(self.d, &self.domain, self.cells)
    }

    pub fn layout(&self) -> Result<Layout> {
        Ok(Layout::new(self.grid()?, self.domain, self.exterior.clone()))
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    /// Values at the unknowns, in stencil order.
    pub unknowns: Vec<f64>,
    pub iterations: usize,
    /// `max |F_h(u)|` after each iteration.
    pub residual_history: Vec<f64>,
    pub residual: f64,
    /// Final kernel choice per unknown (first index for Isaacs sup part,
    /// second for the inf part).
    pub policy: Vec<(usize, usize)>,
}

fn assemble<'a, F: Fn(usize) -> Vec<(f64, &'a Row)>>(n: usize, rows_of: F) -> (Dense, Vec<f64>) {
    let mut m = Dense::zeros(n);
    let mut b = alloc::vec![0.0; n];
    for i in 0..n {
        for (c, row) in rows_of(i) {
            for t in &row.terms {
                let w = c * t.weight;
                *m.at(i, i) += w;
                match t.end {
                    End::Node(j) => *m.at(i, j) -= w,
                    End::Value(v) => b[i] += w * v,
                }
            }
        }
    }
    (m, b)
}

fn to_grid_function(layout: &Layout, spec: &ProblemSpec, u: &[f64]) -> Result<GridFunction> {
    let grid = layout.grid;
    let values = (0..grid.len()).map(|n| match layout.slot[n] {
        Some(i) => u[i],
        None => (layout.exterior)(grid.node(n)),
    });
    let mask = layout.slot.iter().map(|s| s.is_some()).collect();
    GridFunction::with_range(grid, values.collect(), mask, spec.exterior.clone(), spec.exterior_range)
}

/// Solves a linear problem with a direct factorization.
pub fn solve_dirichlet(spec: &ProblemSpec) -> Result<Solution> {
    let k = match &spec.equation {
        Equation::Linear(k) => k.clone(),
        Equation::ExtremalMidpoint(c) => midpoint_kernel(c)?,
        _ => return Err(precondition("solve_dirichlet expects a linear equation")),
    };
    let layout = spec.layout()?;
    let st = build_stencil(&k, &layout, &spec.quadrature)?;
    let n = st.len();
    let (m, b) = assemble(n, |i| alloc::vec![(1.0, &st.rows[i])]);
    let u = Lu::factor(m)?.solve(&b);
    let residual = st.apply(&u).iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if !(residual <= spec.tolerance * (1.0 + scale_of(&st))) {
        return Err(Error::IterationBudget { iterations: 1, residual });
    }
    Ok(Solution { u: to_grid_function(&layout, spec, &u)?, unknowns: u, iterations: 1, residual_history: alloc::vec![residual], residual, policy: alloc::vec![(0, 0); n] })
}

fn scale_of(st: &Stencil) -> f64 {
    st.rows.iter().map(|r| r.diagonal()).fold(0.0, f64::max) * 1e-8
}

/// The linear kernel `(λ + Λ)/2 · J` of the midpoint equation.
pub fn midpoint_kernel(c: &ExtremalClass) -> Result<KernelSpec> {
    Ok(c.base.clone().with_multiplier(Multiplier::constant(0.5 * (c.lambda + c.big_lambda))?))
}

// Choice that keeps `current` unless another value is better by > 1e-12.
fn choose(values: &[f64], current: usize, sense: Sense) -> usize {
    let mut best = current;
    for (k, &v) in values.iter().enumerate() {
        let better = match sense {
            Sense::Sup => v > values[best] + 1e-12 * (1.0 + values[best].abs()),
            Sense::Inf => v < values[best] - 1e-12 * (1.0 + values[best].abs()),
        };
        if better {
            best = k;
        }
    }
    best
}

fn extreme(values: &[f64], sense: Sense) -> f64 {
    match sense {
        Sense::Sup => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Sense::Inf => values.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Howard policy iteration for Bellman and Isaacs equations, starting from
/// `initial` (or the first kernel everywhere).
pub fn solve_bellman_from(spec: &ProblemSpec, initial: Option<Vec<(usize, usize)>>) -> Result<Solution> {
    let (sup, inf, isaacs) = match &spec.equation {
        Equation::Bellman { kernels, sense: Sense::Sup } => (kernels.clone(), Vec::new(), false),
        Equation::Bellman { kernels, sense: Sense::Inf } => (Vec::new(), kernels.clone(), false),
        Equation::Isaacs { sup, inf } => (sup.clone(), inf.clone(), true),
        Equation::Linear(_) | Equation::ExtremalMidpoint(_) => return solve_dirichlet(spec),
    };
    if (sup.is_empty() && inf.is_empty()) || (isaacs && (sup.is_empty() || inf.is_empty())) {
        return Err(precondition("kernel families must be nonempty"));
    }
    let layout = spec.layout()?;
    let build = |ks: &[KernelSpec]| ks.iter().map(|k| build_stencil(k, &layout, &spec.quadrature)).collect::<Result<Vec<_>>>();
    let sup_st = build(&sup)?;
    let inf_st = build(&inf)?;
    let n = layout.unknowns.len();
    let mut policy = initial.unwrap_or_else(|| alloc::vec![(0, 0); n]);
    if policy.len() != n || policy.iter().any(|&(a, b)| (!sup_st.is_empty() && a >= sup_st.len()) || (!inf_st.is_empty() && b >= inf_st.len())) {
        return Err(precondition("initial policy does not match the problem"));
    }
    let weight = if isaacs { 0.5 } else { 1.0 };
    let mut seen: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut history = Vec::new();
    for it in 1..=spec.max_iterations {
        let (m, b) = assemble(n, |i| {
            let mut v = Vec::with_capacity(2);
            if !sup_st.is_empty() {
                v.push((weight, &sup_st[policy[i].0].rows[i]));
            }
            if !inf_st.is_empty() {
                v.push((weight, &inf_st[policy[i].1].rows[i]));
            }
            v
        });
        let u = Lu::factor(m)?.solve(&b);
        let mut next = policy.clone();
        let mut residual: f64 = 0.0;
        for i in 0..n {
            let mut f = 0.0;
            if !sup_st.is_empty() {
                let vals: Vec<f64> = sup_st.iter().map(|s| s.apply_row(i, &u)).collect();
                next[i].0 = choose(&vals, policy[i].0, Sense::Sup);
                f += weight * extreme(&vals, Sense::Sup);
            }
            if !inf_st.is_empty() {
                let vals: Vec<f64> = inf_st.iter().map(|s| s.apply_row(i, &u)).collect();
                next[i].1 = choose(&vals, policy[i].1, Sense::Inf);
                f += weight * extreme(&vals, Sense::Inf);
            }
            residual = residual.max(f.abs());
        }
        history.push(residual);
        if next == policy {
            let scale = sup_st.iter().chain(&inf_st).map(scale_of).fold(0.0, f64::max);
            if residual <= spec.tolerance * (1.0 + scale) {
                return Ok(Solution { u: to_grid_function(&layout, spec, &u)?, unknowns: u, iterations: it, residual_history: history, residual, policy });
            }
            return Err(Error::IterationBudget { iterations: it, residual });
        }
        if let Some(pos) = seen.iter().position(|p| *p == next) {
            return Err(Error::PolicyCycle(seen.len() - pos + 1));
        }
        seen.push(policy);
        policy = next;
    }
    Err(Error::IterationBudget { iterations: spec.max_iterations, residual: history.last().copied().unwrap_or(f64::NAN) })
}

pub fn solve_bellman(spec: &ProblemSpec) -> Result<Solution> {
    solve_bellman_from(spec, None)
}

/// Any supported equation.
pub fn solve(spec: &ProblemSpec) -> Result<Solution> {
    match spec.equation {
        Equation::Linear(_) | Equation::ExtremalMidpoint(_) => solve_dirichlet(spec),
        _ => solve_bellman(spec),
    }
}

/// Discrete extremal operators at every domain node.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    /// Lattice index of each entry.
    pub nodes: Vec<usize>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl ResidualField {
    pub fn min_plus(&self) -> f64 {
        self.plus.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_minus(&self) -> f64 {
        self.minus.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(M⁺_h u, M⁻_h u)` at the domain nodes of `u`, from the stencil of the
/// class's base kernel. Bang-bang selection acts on antipodal pairs of
/// second differences for the symmetric class and on single compensated
/// differences otherwise.
pub fn residual(class: &ExtremalClass, u: &GridFunction, cfg: &QuadratureConfig) -> Result<ResidualField> {
    let grid = u.grid;
    let mask = u.mask.clone();
    let domain_nodes: Vec<usize> = (0..grid.len()).filter(|&k| mask[k]).collect();
    let values = u.values.clone();
    let layout = {
        let unknowns = domain_nodes.clone();
        let mut slot = alloc::vec![None; grid.len()];
        for (i, &k) in unknowns.iter().enumerate() {
            slot[k] = Some(i);
        }
        let dom = Domain::Box { lo: grid.lo, hi: grid.lo };
        Layout { grid, domain: dom, unknowns, slot, exterior: u.exterior.clone() }
    };
    // lattice nodes outside the mask keep their stored values
    let vals = values.clone();
    let lattice = grid;
    let ext = u.exterior.clone();
    let exterior: Exterior = alloc::sync::Arc::new(move |p| {
        if lattice.in_hull(p) {
            let fi = (p.0[0] - lattice.lo.0[0]) / lattice.h - 0.5;
            let fj = if lattice.d == 2 { (p.0[1] - lattice.lo.0[1]) / lattice.h - 0.5 } else { 0.0 };
            let (ri, rj) = (crate::math::round(fi), crate::math::round(fj));
            if (fi - ri).abs() < 1e-9 && (fj - rj).abs() < 1e-9 {
                if let Some(k) = lattice.checked(ri as i64, rj as i64) {
                    return vals[k];
                }
            }
        }
        ext(p)
    });
    let layout = Layout { exterior: exterior.clone(), ..layout };
    let st = build_stencil(&class.base, &layout, cfg)?;
    let uu: Vec<f64> = domain_nodes.iter().map(|&k| values[k]).collect();
    let (lo, hi) = (class.lambda, class.big_lambda);
    let bang = |g: f64, plus: bool| {
        let (a, b) = if plus { (hi, lo) } else { (lo, hi) };
        if g > 0.0 {
            a * g
        } else {
            b * g
        }
    };
    let mut plus = Vec::with_capacity(uu.len());
    let mut minus = Vec::with_capacity(uu.len());
    for i in 0..uu.len() {
        let row = &st.rows[i];
        let ui = uu[i];
        let (mut p, mut m) = (0.0, 0.0);
        if class.symmetric {
            for pair in row.terms[..row.paired].chunks(2) {
                let d2 = pair[0].weight * (st.value(pair[0].end, &uu) - ui) + pair[1].weight * (st.value(pair[1].end, &uu) - ui);
                p += bang(d2, true);
                m += bang(d2, false);
            }
        } else {
            let grad = if class.base.compensated() { st.gradient(i, &uu, &exterior) } else { crate::point::Point::ORIGIN };
            for t in &row.terms[..row.paired] {
                let g = t.weight * (st.value(t.end, &uu) - ui - grad.dot(t.moment));
                p += bang(g, true);
                m += bang(g, false);
            }
        }
        plus.push(p);
        minus.push(m);
    }
    if grid.is_empty() {
        return Err(Error::Unsupported("empty grid".to_string()));
    }
    Ok(ResidualField { nodes: domain_nodes, plus, minus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Tail;
    use crate::point::Point;
    use crate::scaling::ScalingFunction;
    use alloc::sync::Arc;

    fn frac(alpha: f64) -> KernelSpec {
        KernelSpec::new(1, ScalingFunction::power(alpha, 1.0).unwrap(), Tail::PowerContinuation).unwrap()
    }

    fn problem(eq: Equation, cells: usize, g: Exterior) -> ProblemSpec {
        ProblemSpec::new(1, Domain::Ball { center: Point::ORIGIN, radius: 1.0 }, cells, g, 1.0, eq)
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let s = solve_dirichlet(&problem(Equation::Linear(frac(1.0)), 24, Arc::new(|_| 0.75))).unwrap();
        assert!(s.unknowns.iter().all(|v| (v - 0.75).abs() < 1e-10));
    }

    #[test]
    fn single_kernel_bellman_equals_linear() {
        let g: Exterior = Arc::new(|p: Point| if p.x() > 1.0 && p.x() < 2.0 { 1.0 } else { 0.0 });
        let a = solve_dirichlet(&problem(Equation::Linear(frac(1.5)), 20, g.clone())).unwrap();
        let b = solve_bellman(&problem(Equation::Bellman { kernels: alloc::vec![frac(1.5)], sense: Sense::Sup }, 20, g)).unwrap();
        for (x, y) in a.unknowns.iter().zip(&b.unknowns) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(b.iterations, 1);
    }

    #[test]
    fn two_kernel_bellman_converges() {
        let g: Exterior = Arc::new(|p: Point| if p.x() > 1.0 && p.x() < 2.0 { 1.0 } else { 0.0 });
        let s = solve_bellman(&problem(Equation::Bellman { kernels: alloc::vec![frac(0.5), frac(1.5)], sense: Sense::Sup }, 24, g)).unwrap();
        assert!(s.residual < 1e-8);
        assert!(s.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14));
    }

    #[test]
    fn midpoint_solution_has_signed_residuals() {
        let class = ExtremalClass::new(0.5, 2.0, true, frac(1.0)).unwrap();
        let g: Exterior = Arc::new(|p: Point| if p.x() > 1.0 && p.x() < 2.0 { 1.0 } else { 0.0 });
        let s = solve_dirichlet(&problem(Equation::ExtremalMidpoint(class.clone()), 20, g)).unwrap();
        let r = residual(&class, &s.u, &QuadratureConfig::default()).unwrap();
        assert!(r.min_plus() >= -1e-8 && r.max_minus() <= 1e-8);
    }
}
