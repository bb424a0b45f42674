//! Second-order forward-mode differentiation.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to up to [`MAX_VARS`] seed variables. Arithmetic propagates all
//! three exactly (to rounding), so evaluating a landscape on jets yields the
//! analytic gradient and Hessian in a single pass.

use std::ops::{Add, Mul, Neg, Sub};

/// Maximum number of independent variables a jet tracks.
pub const MAX_VARS: usize = 6;

/// Scalar types the kinematic formulas are generic over.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::constant(k)
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; MAX_VARS],
    pub h: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; MAX_VARS], h: [[0.0; MAX_VARS]; MAX_VARS] }
    }

    /// Seed variable `index` at value `v`.
    pub fn variable(v: f64, index: usize) -> Self {
        assert!(index < MAX_VARS, "jet variable index {index} out of range");
        let mut j = Self::constant(v);
        j.g[index] = 1.0;
        j
    }

    /// Apply a scalar function given f, f', f'' at the current value.
    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..MAX_VARS {
            out.g[i] = f1 * self.g[i];
            for k in 0..MAX_VARS {
                out.h[i][k] = f1 * self.h[i][k] + f2 * self.g[i] * self.g[k];
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for i in 0..MAX_VARS {
            self.g[i] += o.g[i];
            for k in 0..MAX_VARS {
                self.h[i][k] += o.h[i][k];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
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
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..MAX_VARS {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for k in 0..MAX_VARS {
                out.h[i][k] = self.v * o.h[i][k]
                    + o.v * self.h[i][k]
                    + self.g[i] * o.g[k]
                    + o.g[i] * self.g[k];
            }
        }
        out
    }
}

impl Scalar for Jet {
    fn constant(v: f64) -> Self {
        Jet::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn scale(mut self, k: f64) -> Self {
        self.v *= k;
        for i in 0..MAX_VARS {
            self.g[i] *= k;
            for j in 0..MAX_VARS {
                self.h[i][j] *= k;
            }
        }
        self
    }
}

/// Complex number over a [`Scalar`].
#[derive(Clone, Copy, Debug)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Self { re, im }
    }

    pub fn real(re: T) -> Self {
        Self { re, im: T::constant(0.0) }
    }

    pub fn zero() -> Self {
        Self::real(T::constant(0.0))
    }

    /// `e^{i theta}`
    pub fn cis(theta: T) -> Self {
        Self { re: theta.cos(), im: theta.sin() }
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, k: f64) -> Self {
        Self { re: self.re.scale(k), im: self.im.scale(k) }
    }

    pub fn mul_real(self, r: T) -> Self {
        Self { re: self.re * r, im: self.im * r }
    }
}

impl<T: Scalar> Add for Cx<T> {
    type Output = Cx<T>;
    fn add(self, o: Self) -> Self {
        Cx { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<T: Scalar> Mul for Cx<T> {
    type Output = Cx<T>;
    fn mul(self, o: Self) -> Self {
        Cx {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_chain_rule() {
        // f(x, y) = sin(x) * cos(y) * x
        let (x0, y0) = (0.7, -1.3);
        let x = Jet::variable(x0, 0);
        let y = Jet::variable(y0, 1);
        let f = x.sin() * y.cos() * x;

        let v = x0.sin() * y0.cos() * x0;
        assert!((f.v - v).abs() < 1e-15);
        let fx = (x0.cos() * x0 + x0.sin()) * y0.cos();
        let fy = -x0.sin() * y0.sin() * x0;
        assert!((f.g[0] - fx).abs() < 1e-15);
        assert!((f.g[1] - fy).abs() < 1e-15);
        let fxx = (2.0 * x0.cos() - x0 * x0.sin()) * y0.cos();
        let fxy = -(x0.cos() * x0 + x0.sin()) * y0.sin();
        let fyy = -x0.sin() * y0.cos() * x0;
        assert!((f.h[0][0] - fxx).abs() < 1e-14);
        assert!((f.h[0][1] - fxy).abs() < 1e-14);
        assert!((f.h[1][0] - fxy).abs() < 1e-14);
        assert!((f.h[1][1] - fyy).abs() < 1e-14);
    }

    #[test]
    fn complex_modulus_of_phase_is_flat() {
        let t = Jet::variable(0.4, 0);
        let z = Cx::cis(t).scale(2.0);
        let n = z.norm_sqr();
        assert!((n.v - 4.0).abs() < 1e-14);
        assert!(n.g[0].abs() < 1e-14);
        assert!(n.h[0][0].abs() < 1e-14);
    }
}
