//! Uniform cell-centered lattices and grid functions with an exterior
//! extension to all of `ℝ^d`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};
use crate::math::{floor, round};
use crate::operators::TestFunction;
use crate::point::{Hessian, Point};

/// Open ball or open box in `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

impl Domain {
    pub fn contains(&self, d: usize, p: Point) -> bool {
        match *self {
            Domain::Ball { center, radius } => p.dist(center) < radius,
            Domain::Box { lo, hi } => (0..d).all(|a| p.0[a] > lo.0[a] && p.0[a] < hi.0[a]),
        }
    }

    /// Lower and upper corners of the bounding box.
    pub fn bounds(&self, d: usize) -> (Point, Point) {
        let (mut lo, mut hi) = match *self {
            Domain::Ball { center, radius } => (center - Point([radius; 2]), center + Point([radius; 2])),
            Domain::Box { lo, hi } => (lo, hi),
        };
        if d == 1 {
            lo.0[1] = 0.0;
            hi.0[1] = 0.0;
        }
        (lo, hi)
    }

    pub fn diameter(&self, d: usize) -> f64 {
        let (lo, hi) = self.bounds(d);
        (hi - lo).norm()
    }
}

/// Lattice of cell centers `lo + (i + ½) h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub lo: Point,
    pub h: f64,
    pub n: [usize; 2],
}

impl Grid {
    pub fn new(d: usize, lo: Point, h: f64, n: [usize; 2]) -> Result<Self> {
        if !(d == 1 || d == 2) || !(h > 0.0 && h.is_finite()) || n[0] == 0 || (d == 2 && n[1] == 0) {
            return Err(invalid("grid needs d ∈ {1,2}, h > 0 and nonempty extents"));
        }
        let n = if d == 1 { [n[0], 1] } else { n };
        Ok(Self { d, lo, h, n })
    }

    /// Lattice whose cells tile the bounding box of `domain` with `cells`
    /// cells along the longest side, plus one layer of exterior cells on
    /// every side.
    pub fn covering(d: usize, domain: &Domain, cells: usize) -> Result<Self> {
        let (lo, hi) = domain.bounds(d);
        let ext = hi - lo;
        let width = if d == 1 { ext.0[0] } else { ext.0[0].max(ext.0[1]) };
        if cells < 2 {
            return Err(invalid("need at least two cells across the domain"));
        }
        let h = width / cells as f64;
        let count = |len: f64| round(len / h) as usize + 2;
        let n = [count(ext.0[0]), if d == 2 { count(ext.0[1]) } else { 1 }];
        let mut origin = lo - Point([h, h]);
        if d == 1 {
            origin.0[1] = 0.0;
        }
        Self::new(d, origin, h, n)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n[0], k / self.n[0])
    }

    pub fn node(&self, k: usize) -> Point {
        let (i, j) = self.coords(k);
        self.point(i as i64, j as i64)
    }

    /// Center of the lattice cell `(i, j)`, which may lie outside the grid.
    pub fn point(&self, i: i64, j: i64) -> Point {
        let x = self.lo.0[0] + (i as f64 + 0.5) * self.h;
        let y = if self.d == 2 { self.lo.0[1] + (j as f64 + 0.5) * self.h } else { 0.0 };
        Point::d2(x, y)
    }

    /// Lattice node index of `(i, j)` if it lies inside the grid.
    pub fn checked(&self, i: i64, j: i64) -> Option<usize> {
        (i >= 0 && j >= 0 && (i as usize) < self.n[0] && (j as usize) < self.n[1]).then(|| self.index(i as usize, j as usize))
    }

    /// Corners of the convex hull of the node centers.
    pub fn hull(&self) -> (Point, Point) {
        let a = self.point(0, 0);
        let b = self.point(self.n[0] as i64 - 1, self.n[1] as i64 - 1);
        (a, b)
    }

    pub fn in_hull(&self, p: Point) -> bool {
        let (a, b) = self.hull();
        let tol = 1e-12 * self.h;
        (0..self.d).all(|k| p.0[k] >= a.0[k] - tol && p.0[k] <= b.0[k] + tol)
    }

    /// Fractional lattice coordinates of `p`.
    fn frac(&self, p: Point, axis: usize) -> f64 {
        (p.0[axis] - self.lo.0[axis]) / self.h - 0.5
    }

    /// Nodes whose centers lie in the closed ball `B(c, r)`.
    pub fn nodes_in_ball(&self, c: Point, r: f64) -> Vec<usize> {
        let tol = 1e-12 * self.h;
        (0..self.len()).filter(|&k| self.node(k).dist(c) <= r + tol).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }
}

pub type Exterior = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// A function on `ℝ^d`: node values inside the grid's hull, multilinearly
/// interpolated, and an analytic closure outside it.
#[derive(Clone)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Nodes belonging to the solved domain.
    pub mask: Vec<bool>,
    pub exterior: Exterior,
    /// `sup |u|`, over the node values and the declared bound of the
    /// exterior closure.
    pub bound: f64,
    /// `(inf u, sup u)` bounds over the same sets.
    pub range: (f64, f64),
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction").field("grid", &self.grid).field("bound", &self.bound).finish_non_exhaustive()
    }
}

impl GridFunction {
    /// `exterior_bound` is the caller's bound on `|exterior|`; it is checked
    /// against a sample of points around the grid.
    pub fn new(grid: Grid, values: Vec<f64>, mask: Vec<bool>, exterior: Exterior, exterior_bound: f64) -> Result<Self> {
        Self::with_range(grid, values, mask, exterior, (-exterior_bound, exterior_bound))
    }

    /// Like [`GridFunction::new`] with one-sided bounds `lo ≤ exterior ≤ hi`.
    pub fn with_range(grid: Grid, values: Vec<f64>, mask: Vec<bool>, exterior: Exterior, (lo, hi): (f64, f64)) -> Result<Self> {
        if !(lo <= hi) {
            return Err(invalid("exterior range is empty"));
        }
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(invalid("values and mask must have one entry per node"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid values must be finite"));
        }
        let (a, b) = grid.hull();
        let span = (b - a).norm().max(grid.h);
        let sampled = (0..64)
            .map(|k| {
                let t = k as f64 * 0.37;
                let p = Point::d2(a.0[0] - span * crate::math::cos(t) * (1.0 + 0.1 * k as f64), a.0[1] + span * crate::math::sin(t) * (grid.d - 1) as f64);
                exterior(p)
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let slack = 1e-12 * (lo.abs() + hi.abs());
        if sampled.0 < lo - slack || sampled.1 > hi + slack {
            return Err(invalid("exterior closure leaves its declared range"));
        }
        let range = values.iter().fold((lo, hi), |(a, b), &v| (a.min(v), b.max(v)));
        let bound = range.0.abs().max(range.1.abs());
        Ok(Self { grid, values, mask, exterior, bound, range })
    }

    /// Samples `u` at every node. All nodes are marked as domain nodes.
    pub fn sample<U: TestFunction + 'static + Clone>(grid: Grid, u: U) -> Result<Self> {
        let values: Vec<f64> = grid.nodes().map(|p| u.value(p)).collect();
        let bound = u.sup_norm();
        let mask = alloc::vec![true; grid.len()];
        let ext = u.clone();
        Self::new(grid, values, mask, Arc::new(move |p| ext.value(p)), bound)
    }

    /// Same grid and exterior, new node values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::with_range(self.grid, values, self.mask.clone(), self.exterior.clone(), self.range)
    }

    /// `a u + b`, applied to nodes and exterior alike.
    pub fn affine_map(&self, a: f64, b: f64) -> Self {
        let ext = self.exterior.clone();
        let (p, q) = (a * self.range.0 + b, a * self.range.1 + b);
        let range = (p.min(q), p.max(q));
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v + b).collect(),
            mask: self.mask.clone(),
            exterior: Arc::new(move |p| a * ext(p) + b),
            bound: range.0.abs().max(range.1.abs()),
            range,
        }
    }

    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn domain_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(|&k| self.mask[k])
    }

    /// Maximum of `|u|` over the node values.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn eval(&self, p: Point) -> f64 {
        let g = &self.grid;
        if !g.in_hull(p) {
            return (self.exterior)(p);
        }
        let axis = |a: usize| {
            if a >= g.d {
                return (0usize, 0usize, 0.0);
            }
            let f = g.frac(p, a).clamp(0.0, (g.n[a] - 1) as f64);
            let i = (floor(f) as usize).min(g.n[a].saturating_sub(2));
            let t = f - i as f64;
            if g.n[a] == 1 {
                (0, 0, 0.0)
            } else {
                (i, i + 1, t)
            }
        };
        let (i0, i1, tx) = axis(0);
        let (j0, j1, ty) = axis(1);
        let v = |i, j| self.values[g.index(i, j)];
        let lower = (1.0 - tx) * v(i0, j0) + tx * v(i1, j0);
        if g.d == 1 {
            return lower;
        }
        let upper = (1.0 - tx) * v(i0, j1) + tx * v(i1, j1);
        (1.0 - ty) * lower + ty * upper
    }
}

impl TestFunction for GridFunction {
    fn value(&self, y: Point) -> f64 {
        self.eval(y)
    }

    fn gradient(&self, x: Point) -> Point {
        let h = self.grid.h;
        let mut g = Point::ORIGIN;
        for a in 0..self.grid.d {
            let mut e = Point::ORIGIN;
            e.0[a] = h;
            g.0[a] = (self.eval(x + e) - self.eval(x - e)) / (2.0 * h);
        }
        g
    }

    fn hessian(&self, x: Point) -> Hessian {
        let h = self.grid.h;
        let c = self.eval(x);
        let mut m = [[0.0; 2]; 2];
        let unit = |a: usize| {
            let mut e = Point::ORIGIN;
            e.0[a] = h;
            e
        };
        for a in 0..self.grid.d {
            let e = unit(a);
            m[a][a] = (self.eval(x + e) - 2.0 * c + self.eval(x - e)) / (h * h);
        }
        if self.grid.d == 2 {
            let (e, f) = (unit(0), unit(1));
            let mixed = (self.eval(x + e + f) - self.eval(x + e - f) - self.eval(x - e + f) + self.eval(x - e - f)) / (4.0 * h * h);
            m[0][1] = mixed;
            m[1][0] = mixed;
        }
        m
    }

    fn length_scale(&self) -> f64 {
        self.grid.h
    }

    fn kinks(&self, _x: Point) -> Vec<f64> {
        (1..=8).map(|k| k as f64 * self.grid.h).collect()
    }

    fn sup_norm(&self) -> f64 {
        self.bound
    }

    fn model_radius(&self, _x: Point) -> f64 {
        self.grid.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Gaussian;

    #[test]
    fn covering_lattice_has_exterior_layer() {
        let dom = Domain::Ball { center: Point::ORIGIN, radius: 1.0 };
        let g = Grid::covering(1, &dom, 10).unwrap();
        assert_eq!(g.n, [12, 1]);
        assert!((g.node(0).x() + 1.1).abs() < 1e-14 && (g.node(1).x() + 0.9).abs() < 1e-14);
        let inside: Vec<usize> = (0..g.len()).filter(|&k| dom.contains(1, g.node(k))).collect();
        assert_eq!(inside, (1..=10).collect::<Vec<_>>());
        let g2 = Grid::covering(2, &dom, 8).unwrap();
        assert_eq!(g2.n, [10, 10]);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let g = Grid::new(2, Point::d2(-1.0, -1.0), 0.25, [8, 8]).unwrap();
        let f = |p: Point| 1.0 + 2.0 * p.x() - p.y() + 0.5 * p.x() * p.y();
        let vals = g.nodes().map(f).collect();
        let u = GridFunction::new(g, vals, alloc::vec![true; 64], Arc::new(|_| 0.0), 0.0).unwrap();
        for p in [Point::d2(0.1, -0.3), Point::d2(-0.8, 0.8), Point::d2(0.6, 0.2)] {
            assert!((u.eval(p) - f(p)).abs() < 1e-13);
        }
        assert_eq!(u.eval(Point::d2(5.0, 0.0)), 0.0);
    }

    #[test]
    fn exterior_bound_is_checked() {
        let g = Grid::new(1, Point::d1(0.0), 0.1, [10, 1]).unwrap();
        assert!(GridFunction::new(g, alloc::vec![0.0; 10], alloc::vec![true; 10], Arc::new(|_| 2.0), 1.0).is_err());
    }

    #[test]
    fn sampled_gaussian_derivatives() {
        let g = Grid::new(1, Point::d1(-2.0), 0.01, [400, 1]).unwrap();
        let gs = Gaussian { center: Point::ORIGIN, width: 0.5, amplitude: 1.0 };
        let u = GridFunction::sample(g, gs).unwrap();
        let x = u.grid.node(230);
        assert!((u.gradient(x).x() - gs.gradient(x).x()).abs() < 1e-3);
        assert!((u.hessian(x)[0][0] - gs.hessian(x)[0][0]).abs() < 1e-2);
    }
}
