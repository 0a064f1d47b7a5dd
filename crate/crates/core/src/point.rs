use core::ops::{Add, Mul, Neg, Sub};

use crate::math::sqrt;

/// A point (or vector) in `R^1` or `R^2`. One-dimensional points keep the
/// second coordinate at zero so that Euclidean distances stay correct.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point(pub [f64; 2]);

impl Point {
    pub const ORIGIN: Point = Point([0.0, 0.0]);

    pub const fn d1(x: f64) -> Self {
        Point([x, 0.0])
    }

    pub const fn d2(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    pub fn dot(self, other: Point) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Sup-norm, used for lattice windows.
    pub fn max_abs(self) -> f64 {
        self.0[0].abs().max(self.0[1].abs())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point([-self.0[0], -self.0[1]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, c: f64) -> Point {
        Point([self.0[0] * c, self.0[1] * c])
    }
}

/// Symmetric 2x2 matrix used for Hessians.
pub type Hessian = [[f64; 2]; 2];

pub fn quadratic_form(h: &Hessian, v: Point) -> f64 {
    let [a, b] = v.0;
    h[0][0] * a * a + (h[0][1] + h[1][0]) * a * b + h[1][1] * b * b
}
