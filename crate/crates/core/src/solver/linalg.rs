//! Dense LU factorization with partial pivoting.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: alloc::vec![0.0; n * n] }
    }

    #[inline]
    pub fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.a[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
}

pub struct Lu {
    m: Dense,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(mut m: Dense) -> Result<Self> {
        let n = m.n;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m.get(i, k).abs().total_cmp(&m.get(j, k).abs())).unwrap_or(k);
            if !(m.get(p, k).abs() > 1e-14 * scale) {
                return Err(Error::SingularSystem(k));
            }
            if p != k {
                for j in 0..n {
                    m.a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = m.get(k, k);
            let (upper, lower) = m.a.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let f = row[k] / pivot;
                if f != 0.0 {
                    row[k] = f;
                    for j in k + 1..n {
                        row[j] -= f * row_k[j];
                    }
                }
            }
        }
        Ok(Self { m, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.m.get(i, j) * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.m.get(i, j) * x[j]).sum();
            x[i] = (x[i] - s) / self.m.get(i, i);
        }
        x
    }
}

pub fn solve(m: Dense, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(m)?.solve(b))
}
