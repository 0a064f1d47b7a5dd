//! Monotone quadrature stencils for `L_K` on a cell-centered lattice.
//!
//! For a node `x` the kernel mass is split into
//! * the central cell `C₀ = x + [-h/2, h/2]^d`, where `u` is replaced by its
//!   quadratic model; this yields `m₂/(2h²)` times second differences along
//!   the axes, with `m₂ = ∫_{C₀} z₁² J(z) dz`;
//! * the other cells `C_k` of a square window, weighted by `∫_{C_k} J`; cells
//!   of unknown nodes couple to the unknown, all others contribute the cell
//!   average of the exterior data;
//! * the far field beyond the window, in angular sectors and dyadic radial
//!   chunks, contributing the exterior data's `J`-weighted average.
//!
//! Antipodal cells and chunks are stored as consecutive pairs, which is what
//! the symmetric extremal operator needs.

use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{precondition, Error, Result};
use crate::grid::{Domain, Exterior, Grid};
use crate::kernel::KernelSpec;
use crate::math::{cos, sin, sqrt, PI};
use crate::point::Point;
use crate::quadrature::{gauss_legendre_on, integrate, integrate_log, Lower, QuadratureConfig, Upper};
use crate::singular::shell_integral;

/// Far end of a stencil term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum End {
    /// Index into the unknown vector.
    Node(usize),
    /// Known exterior value.
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub end: End,
    /// Part of the displacement entering the gradient compensator.
    pub moment: Point,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub terms: Vec<Term>,
    /// The first `paired` terms come in antipodal pairs.
    pub paired: usize,
}

impl Row {
    pub fn diagonal(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }
}

/// Translation-invariant cell weights `∫_{C_k} J` of one kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub d: usize,
    pub h: f64,
    pub window: usize,
    pub m2: f64,
    w: Vec<f64>,
}

impl WeightTable {
    fn slot(&self, k: (i64, i64)) -> usize {
        let side = 2 * self.window + 1;
        let a = (k.0 + self.window as i64) as usize;
        let b = if self.d == 2 { (k.1 + self.window as i64) as usize } else { 0 };
        b * side + a
    }

    pub fn weight(&self, k: (i64, i64)) -> f64 {
        self.w[self.slot(k)]
    }

    /// Offsets of the window in pair order: `k` followed by `-k`.
    pub fn paired_offsets(&self) -> Vec<(i64, i64)> {
        let n = self.window as i64;
        let mut out = Vec::new();
        let rows = if self.d == 2 { n } else { 0 };
        for k2 in 0..=rows {
            for k1 in -n..=n {
                if k2 == 0 && k1 <= 0 {
                    continue;
                }
                out.push((k1, k2));
                out.push((-k1, -k2));
            }
        }
        out
    }
}

fn tight(cfg: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig { abs_tol: 0.0, rel_tol: cfg.rel_tol.min(1e-10), ..cfg.clone() }
}

// Radii crossing the segment {(x, y): y ∈ [y0, y1]} at fixed x.
fn circle_breaks(x: f64, radii: &[f64]) -> Vec<f64> {
    radii.iter().filter(|&&r| r > x.abs()).flat_map(|&r| {
        let y = sqrt(r * r - x * x);
        [y, -y]
    }).collect()
}

fn cell_integral(k: &KernelSpec, a: Point, b: Point, cfg: &QuadratureConfig) -> Result<f64> {
    let radii = k.breakpoints();
    if k.d == 1 {
        let (lo, hi) = (a.x(), b.x());
        // cells lie on one side of the origin
        let breaks: Vec<f64> = radii.iter().flat_map(|&r| [r, -r]).collect();
        return Ok(integrate(|s| k.radial(s.abs()), lo, hi, &breaks, cfg)?.value);
    }
    let failed = Cell::new(None);
    let inner = |x: f64| {
        let breaks = circle_breaks(x, &radii);
        match integrate(|y| k.radial(sqrt(x * x + y * y)), a.y(), b.y(), &breaks, cfg) {
            Ok(e) => e.value,
            Err(err) => {
                failed.set(Some(err));
                f64::NAN
            }
        }
    };
    let outer_breaks: Vec<f64> = radii.iter().flat_map(|&r| [r, -r]).collect();
    let v = integrate(inner, a.x(), b.x(), &outer_breaks, cfg);
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(v?.value)
}

/// Second moment `∫_{C₀} z₁² J(z) dz` of the central cell.
pub fn central_moment(k: &KernelSpec, h: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let half = 0.5 * h;
    if k.d == 1 {
        return Ok(2.0 * integrate_log(|s| s * s * s * k.radial(s), Lower::Zero, Upper::At(half), &[], cfg)?.value);
    }
    // ½∫|z|²J over the square, by octants: 4 ∫_0^{π/4} ∫_0^{h/(2cosθ)} ρ³ J dρ dθ
    let failed = Cell::new(None);
    let radial = |t: f64| match integrate_log(|r| r * r * r * r * k.radial(r), Lower::Zero, Upper::At(half / cos(t)), &[], cfg) {
        Ok(e) => e.value,
        Err(err) => {
            failed.set(Some(err));
            f64::NAN
        }
    };
    let v = integrate(radial, 0.0, 0.25 * PI, &[], cfg);
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(4.0 * v?.value)
}

pub fn weight_table(k: &KernelSpec, h: f64, window: usize, cfg: &QuadratureConfig) -> Result<WeightTable> {
    let cfg = tight(cfg);
    let side = 2 * window + 1;
    let d = k.d;
    let mut t = WeightTable { d, h, window, m2: central_moment(k, h, &cfg)?, w: alloc::vec![0.0; if d == 2 { side * side } else { side }] };
    let support = k.support_radius();
    let n = window as i64;
    let cell = |k1: i64, k2: i64| {
        let lo = Point::d2((k1 as f64 - 0.5) * h, (k2 as f64 - 0.5) * h);
        let hi = Point::d2((k1 as f64 + 0.5) * h, (k2 as f64 + 0.5) * h);
        (lo, hi)
    };
    if d == 1 {
        for k1 in 1..=n {
            let (lo, hi) = cell(k1, 0);
            let v = if support.is_some_and(|r| lo.x() >= r) { 0.0 } else { cell_integral(k, lo, hi, &cfg)? };
            let (a, b) = (t.slot((k1, 0)), t.slot((-k1, 0)));
            t.w[a] = v;
            t.w[b] = v;
        }
    } else {
        for k1 in 0..=n {
            for k2 in 0..=k1 {
                if k1 == 0 {
                    continue;
                }
                let (lo, hi) = cell(k1, k2);
                let nearest = Point::d2(lo.x().max(0.0), lo.y().max(0.0)).norm();
                let v = if support.is_some_and(|r| nearest >= r) { 0.0 } else { cell_integral(k, lo, hi, &cfg)? };
                for (a, b) in [(k1, k2), (k2, k1)] {
                    for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let s = t.slot((sa * a, sb * b));
                        t.w[s] = v;
                    }
                }
            }
        }
    }
    if let Some(bad) = t.w.iter().chain(core::iter::once(&t.m2)).find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::NonMonotoneStencil(alloc::format!("cell weight {bad}")));
    }
    Ok(t)
}

/// A discretized operator on the unknown nodes of a lattice.
#[derive(Clone)]
pub struct Stencil {
    pub grid: Grid,
    pub kernel: KernelSpec,
    /// Lattice index of every unknown.
    pub unknowns: Vec<usize>,
    /// Unknown index of every lattice node, if any.
    pub slot: Vec<Option<usize>>,
    /// Exterior data at lattice nodes.
    pub lattice_g: Vec<f64>,
    pub rows: Vec<Row>,
    pub table: WeightTable,
}

impl core::fmt::Debug for Stencil {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Stencil").field("grid", &self.grid).field("unknowns", &self.unknowns.len()).finish_non_exhaustive()
    }
}

/// Layout shared by all stencils of one problem.
#[derive(Clone)]
pub struct Layout {
    pub grid: Grid,
    pub domain: Domain,
    pub unknowns: Vec<usize>,
    pub slot: Vec<Option<usize>>,
    pub exterior: Exterior,
}

impl Layout {
    pub fn new(grid: Grid, domain: Domain, exterior: Exterior) -> Self {
        let slot_of: Vec<bool> = (0..grid.len()).map(|k| domain.contains(grid.d, grid.node(k))).collect();
        let unknowns: Vec<usize> = (0..grid.len()).filter(|&k| slot_of[k]).collect();
        let mut slot = alloc::vec![None; grid.len()];
        for (i, &k) in unknowns.iter().enumerate() {
            slot[k] = Some(i);
        }
        Self { grid, domain, unknowns, slot, exterior }
    }

    /// `End` of the lattice point `(i, j)`, which may be off the grid.
    fn end_at(&self, i: i64, j: i64) -> End {
        match self.grid.checked(i, j).and_then(|k| self.slot[k]) {
            Some(u) => End::Node(u),
            None => End::Value((self.exterior)(self.grid.point(i, j))),
        }
    }
}

// Number of dyadic radial chunks before the last, unbounded one.
const FAR_LEVELS: usize = 8;
// Angular sectors of the far field in two dimensions (octants).
const FAR_SECTORS: usize = 8;
const SECTOR_NODES: usize = 8;

struct FarChunk {
    weight: f64,
    load: f64,
    moment: Point,
}

fn far_chunk<M: Fn(Point) -> f64, G: Fn(Point) -> f64>(
    k: &KernelSpec,
    x: Point,
    m: &M,
    g: &G,
    half: f64,
    sector: usize,
    level: usize,
    cfg: &QuadratureConfig,
) -> Result<FarChunk> {
    let r0 = k.r0();
    let comp = k.compensated();
    let last = level == FAR_LEVELS;
    let scale_lo = (1u64 << level) as f64;
    let mut chunk = FarChunk { weight: 0.0, load: 0.0, moment: Point::ORIGIN };
    let one_ray = |e: Point, rho_min: f64, aw: f64, chunk: &mut FarChunk| -> Result<()> {
        let lo = rho_min * scale_lo;
        if k.support_radius().is_some_and(|r| lo >= r) {
            return Ok(());
        }
        let upper = if last { Upper::Infinity } else { Upper::At(2.0 * lo) };
        let w = shell_integral(k, |s| m(e * s), Lower::At(lo), upper, &[], cfg)?;
        let gl = shell_integral(k, |s| m(e * s) * g(x + e * s), Lower::At(lo), upper, &[], cfg)?;
        chunk.weight += aw * w.value;
        chunk.load += aw * gl.value;
        if comp && lo < r0 {
            let top = if last { r0 } else { (2.0 * lo).min(r0) };
            let mo = shell_integral(k, |s| s * m(e * s), Lower::At(lo), Upper::At(top), &[], cfg)?;
            chunk.moment = chunk.moment + e * (aw * mo.value);
        }
        Ok(())
    };
    if k.d == 1 {
        let e = Point::d1(if sector == 0 { 1.0 } else { -1.0 });
        one_ray(e, half, 1.0, &mut chunk)?;
    } else {
        let a = sector as f64 * 2.0 * PI / FAR_SECTORS as f64;
        let b = a + 2.0 * PI / FAR_SECTORS as f64;
        for (t, w) in gauss_legendre_on(SECTOR_NODES, a, b) {
            let e = Point::d2(cos(t), sin(t));
            let rho_min = half / e.x().abs().max(e.y().abs());
            one_ray(e, rho_min, w, &mut chunk)?;
        }
    }
    Ok(chunk)
}

fn cell_average<G: Fn(Point) -> f64>(g: &G, center: Point, h: f64, d: usize) -> f64 {
    if d == 1 {
        return gauss_legendre_on(3, center.x() - 0.5 * h, center.x() + 0.5 * h).map(|(t, w)| w * g(Point::d1(t))).sum::<f64>() / h;
    }
    let pts: Vec<(f64, f64)> = gauss_legendre_on(2, -0.5 * h, 0.5 * h).collect();
    let mut s = 0.0;
    for &(a, wa) in &pts {
        for &(b, wb) in &pts {
            s += wa * wb * g(center + Point::d2(a, b));
        }
    }
    s / (h * h)
}

/// Window half-width in cells for a kernel on a lattice.
pub fn window_for(k: &KernelSpec, grid: &Grid) -> usize {
    let span = grid.n[0].max(grid.n[1]) - 1;
    match k.support_radius() {
        Some(r) => span.min((r / grid.h + 1.0) as usize),
        None => span,
    }
}

/// Assembles the stencil of `k` (multiplier included) on `layout`.
pub fn build_stencil(k: &KernelSpec, layout: &Layout, cfg: &QuadratureConfig) -> Result<Stencil> {
    let grid = layout.grid;
    let h = grid.h;
    if grid.d != k.d {
        return Err(precondition("grid and kernel dimensions differ"));
    }
    if !(h < 0.25 * k.r0()) {
        return Err(precondition("grid spacing must satisfy h < r0/4"));
    }
    let window = window_for(k, &grid);
    let table = weight_table(k, h, window, cfg)?;
    let offsets = table.paired_offsets();
    let half = (window as f64 + 0.5) * h;
    let far = match k.support_radius() {
        Some(r) => half < r,
        None => true,
    };
    let comp = k.compensated();
    let r0 = k.r0();
    let g = &layout.exterior;
    let mut rows = Vec::with_capacity(layout.unknowns.len());
    for &node in &layout.unknowns {
        let (ix, iy) = grid.coords(node);
        let (ix, iy) = (ix as i64, iy as i64);
        let x = grid.node(node);
        let m_at = |z: Point| k.weight(x, x + z);
        let centre = m_at(Point::ORIGIN) * table.m2 / (2.0 * h * h);
        let mut terms = Vec::with_capacity(offsets.len() + 4 * FAR_LEVELS + 8);
        let mut bias = Point::ORIGIN;
        for &(k1, k2) in &offsets {
            let w0 = table.weight((k1, k2));
            let axis = (k2 == 0 && k1.abs() == 1) || (k1 == 0 && k2.abs() == 1);
            let z = Point::d2(k1 as f64 * h, k2 as f64 * h);
            let mut w = w0 * m_at(z);
            if axis {
                w += centre;
            }
            let end = match grid.checked(ix + k1, iy + k2).and_then(|n| layout.slot[n]) {
                Some(u) => End::Node(u),
                None => End::Value(if w0 > 0.0 { cell_average(&|p| g(p), x + z, h, grid.d) } else { 0.0 }),
            };
            let moment = if comp && z.norm() < r0 { z } else { Point::ORIGIN };
            bias = bias + moment * (w0 * m_at(z));
            terms.push(Term { weight: w, end, moment });
        }
        if far {
            let sectors = if grid.d == 1 { 2 } else { FAR_SECTORS };
            for s in 0..sectors / 2 {
                for level in 0..=FAR_LEVELS {
                    for sec in [s, s + sectors / 2] {
                        let c = far_chunk(k, x, &m_at, &|p| g(p), half, sec, level, cfg)?;
                        let v = if c.weight > 0.0 { c.load / c.weight } else { 0.0 };
                        bias = bias + c.moment;
                        terms.push(Term { weight: c.weight, end: End::Value(v), moment: if c.weight > 0.0 { c.moment * (1.0 / c.weight) } else { Point::ORIGIN } });
                    }
                }
            }
        }
        let paired = terms.len();
        // multipliers that are not even leave a first moment behind, which the
        // compensator turns into a drift -B·∇u; upwinded to stay monotone
        if comp {
            let total: f64 = terms.iter().map(|t| t.weight).sum();
            for a in 0..grid.d {
                let c = -bias.0[a];
                if c.abs() > 1e-12 * total * h {
                    let step: i64 = if c > 0.0 { 1 } else { -1 };
                    let (di, dj) = if a == 0 { (step, 0) } else { (0, step) };
                    terms.push(Term { weight: c.abs() / h, end: layout.end_at(ix + di, iy + dj), moment: Point::ORIGIN });
                }
            }
        }
        if let Some(t) = terms.iter().find(|t| !(t.weight.is_finite() && t.weight >= 0.0)) {
            return Err(Error::NonMonotoneStencil(alloc::format!("weight {} at node {node}", t.weight)));
        }
        rows.push(Row { terms, paired });
    }
    let lattice_g = (0..grid.len()).map(|n| if layout.slot[n].is_some() { 0.0 } else { g(grid.node(n)) }).collect();
    Ok(Stencil { grid, kernel: k.clone(), unknowns: layout.unknowns.clone(), slot: layout.slot.clone(), lattice_g, rows, table })
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unknowns.is_empty()
    }

    #[inline]
    pub fn value(&self, end: End, u: &[f64]) -> f64 {
        match end {
            End::Node(j) => u[j],
            End::Value(v) => v,
        }
    }

    /// `L_h u` at unknown `i`.
    pub fn apply_row(&self, i: usize, u: &[f64]) -> f64 {
        let ui = u[i];
        self.rows[i].terms.iter().map(|t| t.weight * (self.value(t.end, u) - ui)).sum()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.apply_row(i, u)).collect()
    }

    /// Value at a lattice point given unknowns `u`, falling back to the
    /// exterior closure off the grid.
    pub fn lattice_value(&self, i: i64, j: i64, u: &[f64], exterior: &Exterior) -> f64 {
        match self.grid.checked(i, j) {
            Some(n) => match self.slot[n] {
                Some(s) => u[s],
                None => self.lattice_g[n],
            },
            None => exterior(self.grid.point(i, j)),
        }
    }

    /// Centered difference gradient at unknown `i`.
    pub fn gradient(&self, i: usize, u: &[f64], exterior: &Exterior) -> Point {
        let (ix, iy) = self.grid.coords(self.unknowns[i]);
        let (ix, iy) = (ix as i64, iy as i64);
        let h = self.grid.h;
        let mut g = Point::ORIGIN;
        g.0[0] = (self.lattice_value(ix + 1, iy, u, exterior) - self.lattice_value(ix - 1, iy, u, exterior)) / (2.0 * h);
        if self.grid.d == 2 {
            g.0[1] = (self.lattice_value(ix, iy + 1, u, exterior) - self.lattice_value(ix, iy - 1, u, exterior)) / (2.0 * h);
        }
        g
    }

    /// Mass the row sends to known values (exterior cells and far field).
    pub fn exterior_mass(&self, i: usize) -> f64 {
        self.rows[i].terms[..self.rows[i].paired].iter().filter(|t| matches!(t.end, End::Value(_))).map(|t| t.weight).sum()
    }
}
