//! Second-order forward-mode jets in up to four variables.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to the chart coordinates. Metric component closures are written
//! once against `Jet` arithmetic; seeding the inputs with [`Jet::var`] yields
//! exact first and second derivatives, while [`Jet::constant`] inputs make the
//! same closure a plain evaluator (used by the finite-difference scheme).

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum number of independent variables carried by a jet.
pub const MAX_VARS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; MAX_VARS],
    pub h: [[f64; MAX_VARS]; MAX_VARS],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::constant(0.0)
    }
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Jet {
            v,
            g: [0.0; MAX_VARS],
            h: [[0.0; MAX_VARS]; MAX_VARS],
        }
    }

    /// Independent variable number `index` at value `v`.
    pub fn var(v: f64, index: usize) -> Self {
        assert!(index < MAX_VARS, "jet variable index {index} out of range");
        let mut j = Jet::constant(v);
        j.g[index] = 1.0;
        j
    }

    /// Seeds a full coordinate tuple as independent variables.
    pub fn seed(point: &[f64]) -> Vec<Jet> {
        point.iter().enumerate().map(|(i, &x)| Jet::var(x, i)).collect()
    }

    pub fn constants(point: &[f64]) -> Vec<Jet> {
        point.iter().map(|&x| Jet::constant(x)).collect()
    }

    /// Applies a scalar function given its value and first two derivatives at `self.v`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Jet {
        let mut out = Jet::constant(f);
        for i in 0..MAX_VARS {
            out.g[i] = df * self.g[i];
        }
        for i in 0..MAX_VARS {
            for k in 0..MAX_VARS {
                out.h[i][k] = df * self.h[i][k] + d2f * self.g[i] * self.g[k];
            }
        }
        out
    }

    /// Second-order Taylor lift of a univariate function known through its
    /// value and derivatives at `self.v`.
    pub fn lift(self, derivs: [f64; 3]) -> Jet {
        self.chain(derivs[0], derivs[1], derivs[2])
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(self) -> Jet {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powi(self, n: i32) -> Jet {
        match n {
            0 => Jet::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let nf = n as f64;
                let p2 = self.v.powi(n - 2);
                self.chain(p2 * self.v * self.v, nf * p2 * self.v, nf * (nf - 1.0) * p2)
            }
        }
    }

    pub fn powf(self, a: f64) -> Jet {
        let p = self.v.powf(a - 2.0);
        self.chain(p * self.v * self.v, a * p * self.v, a * (a - 1.0) * p)
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(self) -> Jet {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(self) -> Jet {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(self) -> Jet {
        let t = self.v.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn square(self) -> Jet {
        self * self
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        self.v += rhs.v;
        for i in 0..MAX_VARS {
            self.g[i] += rhs.g[i];
            for k in 0..MAX_VARS {
                self.h[i][k] += rhs.h[i][k];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(mut self) -> Jet {
        self.v = -self.v;
        for i in 0..MAX_VARS {
            self.g[i] = -self.g[i];
            for k in 0..MAX_VARS {
                self.h[i][k] = -self.h[i][k];
            }
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v * rhs.v);
        for i in 0..MAX_VARS {
            out.g[i] = self.v * rhs.g[i] + rhs.v * self.g[i];
        }
        for i in 0..MAX_VARS {
            for k in 0..MAX_VARS {
                out.h[i][k] = self.v * rhs.h[i][k]
                    + rhs.v * self.h[i][k]
                    + self.g[i] * rhs.g[k]
                    + rhs.g[i] * self.g[k];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet {
        self.v += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: f64) -> Jet {
        self.v -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(mut self, rhs: f64) -> Jet {
        self.v *= rhs;
        for i in 0..MAX_VARS {
            self.g[i] *= rhs;
            for k in 0..MAX_VARS {
                self.h[i][k] *= rhs;
            }
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        (-rhs) + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::constant(0.0), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd2(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let h = 1e-4;
        let gx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let gy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        let hxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let hyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let hxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h))
            / (4.0 * h * h);
        ([gx, gy], [[hxx, hxy], [hxy, hyy]])
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = |x: f64, y: f64| (x * y).sin() * (x - y).exp() / (1.0 + x * x).sqrt() + y.powi(3);
        let (x, y) = (0.7, -0.3);
        let jx = Jet::var(x, 0);
        let jy = Jet::var(y, 1);
        let j = (jx * jy).sin() * (jx - jy).exp() / (jx * jx + 1.0).sqrt() + jy.powi(3);
        let (g, h) = fd2(f, x, y);
        assert!((j.v - f(x, y)).abs() < 1e-15);
        for i in 0..2 {
            assert!((j.g[i] - g[i]).abs() < 1e-7, "grad {i}");
            for k in 0..2 {
                assert!((j.h[i][k] - h[i][k]).abs() < 1e-5, "hess {i}{k}");
            }
        }
    }

    #[test]
    fn hyperbolic_functions_and_log() {
        let x = Jet::var(0.4, 0);
        let t = x.tanh();
        assert!((t.g[0] - 1.0 / 0.4f64.cosh().powi(2)).abs() < 1e-14);
        let l = x.exp().ln();
        assert!((l.v - 0.4).abs() < 1e-15 && (l.g[0] - 1.0).abs() < 1e-15 && l.h[0][0].abs() < 1e-14);
        let c = x.cosh() * x.cosh() - x.sinh() * x.sinh();
        assert!((c.v - 1.0).abs() < 1e-14 && c.g[0].abs() < 1e-14 && c.h[0][0].abs() < 1e-13);
    }

    #[test]
    fn powers_agree_with_products() {
        let x = Jet::var(1.3, 2);
        let a = x.powi(4);
        let b = x * x * x * x;
        let c = x.powf(4.0);
        for (p, q) in [(a, b), (a, c)] {
            assert!((p.v - q.v).abs() < 1e-12);
            assert!((p.g[2] - q.g[2]).abs() < 1e-12);
            assert!((p.h[2][2] - q.h[2][2]).abs() < 1e-11);
        }
    }
}
