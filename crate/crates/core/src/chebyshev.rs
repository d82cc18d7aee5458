//! Chebyshev series on an interval: interpolation, differentiation and
//! evaluation over `f64` or [`Jet`] arguments.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::jet::Jet;

/// Arithmetic needed by Clenshaw summation.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + From<f64>
{
}

impl Real for f64 {}
impl Real for Jet {}

#[derive(Clone, Debug, PartialEq)]
pub struct ChebSeries {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

/// Chebyshev–Lobatto points on [a, b], ordered from `b` down to `a`.
pub fn lobatto_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let x = (PI * j as f64 / n as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

/// Differentiation matrix acting on values at [`lobatto_points`].
pub fn differentiation_matrix(a: f64, b: f64, n: usize) -> DMatrix<f64> {
    let x: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
    let c = |j: usize| -> f64 {
        let base = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j.is_multiple_of(2) {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    // negative-sum trick for the diagonal
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d * (2.0 / (b - a))
}

impl ChebSeries {
    /// Interpolates values given at the `n + 1` Lobatto points of [a, b].
    pub fn from_lobatto_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len() - 1;
        assert!(n >= 1, "need at least two samples");
        let mut coeffs = vec![0.0; n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (j, &f) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                sum += w * f * (PI * (j * k) as f64 / n as f64).cos();
            }
            *ck = 2.0 * sum / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        ChebSeries { a, b, coeffs }
    }

    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = lobatto_points(a, b, n).into_iter().map(f).collect();
        Self::from_lobatto_values(a, b, &values)
    }

    /// Doubles the degree until the trailing coefficients fall below `tol`
    /// relative to the largest; returns the chopped series and whether it resolved.
    pub fn adaptive(a: f64, b: f64, tol: f64, max_degree: usize, f: impl Fn(f64) -> f64) -> (Self, bool) {
        let mut n = 16;
        loop {
            let s = Self::from_fn(a, b, n, &f);
            let scale = s.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
            let tail = s.coeffs[n.saturating_sub(3)..]
                .iter()
                .fold(0.0f64, |m, c| m.max(c.abs()));
            if tail <= tol * scale {
                return (s.chopped(tol * scale * 0.01), true);
            }
            if n >= max_degree {
                return (s, false);
            }
            n *= 2;
        }
    }

    /// Interpolates at the `n` Chebyshev points of the first kind, which
    /// avoid the endpoints.
    pub fn from_fn_interior(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let theta: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
        let values: Vec<f64> = theta
            .iter()
            .map(|t| f(0.5 * (a + b) + 0.5 * (b - a) * t.cos()))
            .collect();
        let coeffs = (0..n)
            .map(|k| {
                let sum: f64 = values.iter().zip(&theta).map(|(v, t)| v * (k as f64 * t).cos()).sum();
                if k == 0 {
                    sum / n as f64
                } else {
                    2.0 * sum / n as f64
                }
            })
            .collect();
        ChebSeries { a, b, coeffs }
    }

    /// [`ChebSeries::adaptive`] on first-kind points.
    pub fn adaptive_interior(a: f64, b: f64, tol: f64, max_degree: usize, f: impl Fn(f64) -> f64) -> (Self, bool) {
        let mut n = 16;
        loop {
            let s = Self::from_fn_interior(a, b, n, &f);
            let scale = s.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
            let tail = s.coeffs[n.saturating_sub(3)..]
                .iter()
                .fold(0.0f64, |m, c| m.max(c.abs()));
            if tail <= tol * scale {
                return (s.chopped(tol * scale * 0.01), true);
            }
            if n >= max_degree {
                return (s, false);
            }
            n *= 2;
        }
    }

    /// Drops trailing coefficients below `abs_tol`.
    pub fn chopped(mut self, abs_tol: f64) -> Self {
        while self.coeffs.len() > 2 && self.coeffs.last().is_some_and(|c| c.abs() < abs_tol) {
            self.coeffs.pop();
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    fn to_unit<T: Real>(&self, x: T) -> T {
        let scale = 2.0 / (self.b - self.a);
        let shift = -(self.a + self.b) / (self.b - self.a);
        x * scale + T::from(shift)
    }

    /// Clenshaw summation.
    pub fn eval<T: Real>(&self, x: T) -> T {
        let t = self.to_unit(x);
        let two_t = t * 2.0;
        let mut b1 = T::from(0.0);
        let mut b2 = T::from(0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = two_t * b1 - b2 + T::from(c);
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + T::from(self.coeffs[0])
    }

    pub fn derivative(&self) -> ChebSeries {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries { a: self.a, b: self.b, coeffs: vec![0.0] };
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        if d.is_empty() {
            d.push(0.0);
        }
        let scale = 2.0 / (self.b - self.a);
        ChebSeries {
            a: self.a,
            b: self.b,
            coeffs: d.into_iter().map(|c| c * scale).collect(),
        }
    }

    /// The polynomial quotient `(f(x) − f(a))/(x − a)`, obtained by a
    /// backward recurrence on the coefficients rather than pointwise.
    pub fn divided_at_lower(&self) -> ChebSeries {
        let p = &self.coeffs;
        let n = p.len() - 1;
        let scale = 2.0 / (self.b - self.a);
        if n == 0 {
            return ChebSeries { a: self.a, b: self.b, coeffs: vec![0.0] };
        }
        // (x + 1) q = p − p(−1) on the unit interval
        let mut q = vec![0.0; n + 2];
        for j in (2..=n).rev() {
            q[j - 1] = 2.0 * (p[j] - q[j] - 0.5 * q[j + 1]);
        }
        q[0] = p[1] - q[1] - 0.5 * q[2];
        q.truncate(n);
        ChebSeries {
            a: self.a,
            b: self.b,
            coeffs: q.into_iter().map(|c| c * scale).collect(),
        }
    }

    /// Value and first two derivatives at `x`.
    pub fn eval3(&self, x: f64) -> [f64; 3] {
        let d1 = self.derivative();
        let d2 = d1.derivative();
        [self.eval(x), d1.eval(x), d2.eval(x)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_differentiates_smooth_function() {
        let s = ChebSeries::from_fn(0.0, 2.0, 40, |x| (x * 1.3).sin() * x.exp());
        let d = s.derivative();
        let dd = d.derivative();
        for &x in &[0.0f64, 0.3, 1.1, 2.0] {
            let f = (x * 1.3).sin() * x.exp();
            let fp = 1.3 * (x * 1.3).cos() * x.exp() + f;
            let fpp = -1.69 * f + 2.6 * (1.3 * x).cos() * x.exp() + f;
            assert!((s.eval(x) - f).abs() < 1e-13);
            assert!((d.eval(x) - fp).abs() < 1e-11);
            assert!((dd.eval(x) - fpp).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn jet_evaluation_carries_derivatives() {
        let s = ChebSeries::from_fn(-1.0, 3.0, 30, |x| 1.0 / (2.0 + x * x));
        let x = Jet::var(0.8, 0);
        let j = s.eval(x);
        let [v, d, dd] = s.eval3(0.8);
        assert!((j.v - v).abs() < 1e-15);
        assert!((j.g[0] - d).abs() < 1e-12);
        assert!((j.h[0][0] - dd).abs() < 1e-10);
    }

    #[test]
    fn differentiation_matrix_is_exact_on_polynomials() {
        let n = 12;
        let pts = lobatto_points(0.5, 2.5, n);
        let d = differentiation_matrix(0.5, 2.5, n);
        let f: Vec<f64> = pts.iter().map(|x| x.powi(5) - 3.0 * x).collect();
        for (i, x) in pts.iter().enumerate() {
            let df: f64 = (0..=n).map(|j| d[(i, j)] * f[j]).sum();
            assert!((df - (5.0 * x.powi(4) - 3.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn adaptive_resolves_analytic_function() {
        let (s, ok) = ChebSeries::adaptive(0.0, 1.0, 1e-14, 512, |x| (5.0 * x).cos());
        assert!(ok);
        assert!(s.degree() < 64);
        assert!((s.eval(0.37) - (1.85f64).cos()).abs() < 1e-13);
    }

    #[test]
    fn division_at_lower_endpoint() {
        let f = |x: f64| (x - 0.5).exp() * (1.0 + x * x);
        let series = ChebSeries::from_fn(0.5, 2.0, 40, f);
        let q = series.divided_at_lower();
        for x in [0.5, 0.6, 1.3, 2.0] {
            let exact = if x == 0.5 { 1.0 + 0.25 + 2.0 * 0.5 } else { (f(x) - f(0.5)) / (x - 0.5) };
            assert!((q.eval(x) - exact).abs() < 1e-11, "{x}: {} vs {exact}", q.eval(x));
        }
    }
}
