//! Order-2 truncated Taylor jets: value, gradient and Hessian carried together
//! through arithmetic so one evaluation pass yields all second partials.

use std::ops::{Add, Mul, Neg, Sub};

/// Value, gradient and (symmetric, row-major) Hessian of a scalar at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, nvars: usize) -> Self {
        Jet2 {
            value,
            grad: vec![0.0; nvars],
            hess: vec![0.0; nvars * nvars],
        }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, nvars: usize) -> Self {
        let mut j = Jet2::constant(value, nvars);
        j.grad[index] = 1.0;
        j
    }

    pub fn nvars(&self) -> usize {
        self.grad.len()
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.grad.len() + j]
    }

    fn from_upper(value: f64, grad: Vec<f64>, mut upper: impl FnMut(usize, usize) -> f64) -> Self {
        let n = grad.len();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = upper(i, j);
                hess[i * n + j] = v;
                hess[j * n + i] = v;
            }
        }
        Jet2 { value, grad, hess }
    }

    pub fn scale(&self, a: f64) -> Self {
        Jet2 {
            value: a * self.value,
            grad: self.grad.iter().map(|g| a * g).collect(),
            hess: self.hess.iter().map(|h| a * h).collect(),
        }
    }

    /// Compose with a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let grad: Vec<f64> = self.grad.iter().map(|g| f1 * g).collect();
        let g = &self.grad;
        Jet2::from_upper(f0, grad, |i, j| f1 * self.h(i, j) + f2 * g[i] * g[j])
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(&self, n: i32) -> Self {
        let v = self.value;
        match n {
            0 => Jet2::constant(1.0, self.nvars()),
            1 => self.clone(),
            _ => {
                let nf = n as f64;
                self.chain(
                    v.powi(n),
                    nf * v.powi(n - 1),
                    nf * (nf - 1.0) * v.powi(n - 2),
                )
            }
        }
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn div(&self, other: &Jet2) -> Self {
        self * &other.recip()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }
}

impl Add for &Jet2 {
    type Output = Jet2;
    fn add(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            grad: self.grad.iter().zip(&rhs.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&rhs.hess).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: &Jet2) -> Jet2 {
        let (a, b) = (self, rhs);
        let grad: Vec<f64> = a
            .grad
            .iter()
            .zip(&b.grad)
            .map(|(ga, gb)| ga * b.value + a.value * gb)
            .collect();
        Jet2::from_upper(a.value * b.value, grad, |i, j| {
            a.h(i, j) * b.value + a.value * b.h(i, j) + (a.grad[i] * b.grad[j] + a.grad[j] * b.grad[i])
        })
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_variables() {
        let x = Jet2::variable(3.0, 0, 2);
        let y = Jet2::variable(4.0, 1, 2);
        let p = &x * &y;
        assert_eq!(p.value, 12.0);
        assert_eq!(p.grad, vec![4.0, 3.0]);
        assert_eq!(p.hess, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn reciprocal_second_derivative() {
        let x = Jet2::variable(2.0, 0, 1);
        let r = x.recip();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.grad[0], -0.25);
        assert_eq!(r.hess[0], 0.25);
    }

    #[test]
    fn tanh_derivatives_match_closed_form() {
        let x = Jet2::variable(0.7, 0, 1);
        let t = x.tanh();
        let s2 = 1.0 / 0.7f64.cosh().powi(2);
        assert!((t.grad[0] - s2).abs() < 1e-15);
        assert!((t.hess[0] + 2.0 * 0.7f64.tanh() * s2).abs() < 1e-15);
    }
}
