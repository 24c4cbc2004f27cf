//! Forward-mode automatic differentiation.
//!
//! A [`Jet<T>`] carries a value and its gradient with respect to a fixed set
//! of seed variables. Nesting gives higher orders: `Jet<Jet<f64>>` holds all
//! second partial derivatives, `Jet<Jet<Jet<f64>>>` all third ones.
//! An empty gradient stands for a constant.

use std::ops::{Add, Div, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::scalar::Num;

/// Real-valued field elements with the elementary functions.
pub trait Real: Num + 'static {
    fn from_f64(v: f64) -> Self;
    /// The innermost value.
    fn value_f64(&self) -> f64;
    /// Value and every stored derivative are finite.
    fn is_finite(&self) -> bool;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;

    fn powi(&self, k: i32) -> Self {
        let mut base = if k < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value_f64(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
}

type Grad<T> = SmallVec<[T; 4]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub grad: Grad<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(value: T) -> Self {
        Jet { value, grad: SmallVec::new() }
    }

    /// Seed variable `index` of `dim`.
    pub fn variable(value: T, index: usize, dim: usize) -> Self {
        let grad = (0..dim).map(|i| if i == index { T::one() } else { T::zero() }).collect();
        Jet { value, grad }
    }

    /// Partial derivative `i`; zero beyond the stored gradient.
    pub fn d(&self, i: usize) -> T {
        self.grad.get(i).cloned().unwrap_or_else(T::zero)
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Grad<T> {
        let n = self.grad.len().max(other.grad.len());
        (0..n).map(|i| f(self.d(i), other.d(i))).collect()
    }

    fn scaled(&self, k: &T) -> Grad<T> {
        self.grad.iter().map(|g| g.clone() * k.clone()).collect()
    }

    /// Apply a scalar function with value `fx` and derivative `dfx`.
    fn chain(&self, fx: T, dfx: T) -> Self {
        Jet { value: fx, grad: self.scaled(&dfx) }
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let grad = self.zip(&rhs, |a, b| a + b);
        Jet { value: self.value + rhs.value, grad }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let grad = self.zip(&rhs, |a, b| a - b);
        Jet { value: self.value - rhs.value, grad }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (self.value.clone(), rhs.value.clone());
        let grad = self.zip(&rhs, |a, b| a * v.clone() + u.clone() * b);
        Jet { value: self.value * rhs.value, grad }
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = rhs.value.clone();
        let q = self.value.clone() / v.clone();
        let grad = self.zip(&rhs, |a, b| (a - q.clone() * b) / v.clone());
        Jet { value: q, grad }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet { value: -self.value, grad: self.grad.into_iter().map(|g| -g).collect() }
    }
}

impl<T: Real> Num for Jet<T> {
    fn zero() -> Self {
        Jet::constant(T::zero())
    }
    fn one() -> Self {
        Jet::constant(T::one())
    }
    fn from_i64(v: i64) -> Self {
        Jet::constant(T::from_i64(v))
    }
    fn magnitude(&self) -> f64 {
        self.value.magnitude()
    }
    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.grad.iter().all(Num::is_zero)
    }
}

impl<T: Real> Real for Jet<T> {
    fn from_f64(v: f64) -> Self {
        Jet::constant(T::from_f64(v))
    }
    fn value_f64(&self) -> f64 {
        self.value.value_f64()
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(Real::is_finite)
    }
    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e.clone(), e)
    }
    fn ln(&self) -> Self {
        self.chain(self.value.ln(), T::one() / self.value.clone())
    }
    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s.clone(), T::one() / (T::from_i64(2) * s))
    }
}

pub type Dual1 = Jet<f64>;
pub type Dual2 = Jet<Jet<f64>>;
pub type Dual3 = Jet<Jet<Jet<f64>>>;

/// First-order seeds at `point`.
pub fn seed1(point: &[f64]) -> Vec<Dual1> {
    let n = point.len();
    point.iter().enumerate().map(|(i, &x)| Jet::variable(x, i, n)).collect()
}

/// Second-order seeds at `point`.
pub fn seed2(point: &[f64]) -> Vec<Dual2> {
    let n = point.len();
    point
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet {
            value: Jet::variable(x, i, n),
            grad: (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 })).collect(),
        })
        .collect()
}

/// Third-order seeds at `point`.
pub fn seed3(point: &[f64]) -> Vec<Dual3> {
    let n = point.len();
    let inner = seed2(point);
    inner
        .into_iter()
        .enumerate()
        .map(|(i, v)| Jet {
            value: v,
            grad: (0..n).map(|j| Jet::constant(Jet::constant(if i == j { 1.0 } else { 0.0 }))).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Real>(x: &[T]) -> T {
        // x0^2 * sin(x1) + exp(x0 * x1) / sqrt(x0)
        x[0].clone() * x[0].clone() * x[1].sin() + (x[0].clone() * x[1].clone()).exp() / x[0].sqrt()
    }

    fn central_grad(x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn first_order_matches_differences() {
        let x = [1.3, 0.4];
        let j = f(&seed1(&x));
        assert!((j.value - f(&x)).abs() < 1e-15);
        for (a, b) in j.grad.iter().zip(central_grad(&x, 1e-6)) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn second_order_is_symmetric_and_matches_differences() {
        let x = [1.3, 0.4];
        let j = f(&seed2(&x));
        let h = 1e-5;
        for s in 0..2 {
            for t in 0..2 {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[t] += h;
                m[t] -= h;
                let fd = (central_grad(&p, h)[s] - central_grad(&m, h)[s]) / (2.0 * h);
                assert!((j.d(s).d(t) - fd).abs() < 1e-4);
            }
        }
        assert_eq!(j.d(0).d(1), j.d(1).d(0));
        assert_eq!(j.value.d(0), j.d(0).value);
    }

    #[test]
    fn third_order_on_a_cubic() {
        // x0^2 x1: d^3 / dx0 dx0 dx1 = 2
        let x = seed3(&[0.7, -1.1]);
        let p = x[0].clone() * x[0].clone() * x[1].clone();
        assert!((p.d(0).d(0).d(1) - 2.0).abs() < 1e-14);
        assert!((p.d(1).d(1).d(1)).abs() < 1e-14);
    }

    #[test]
    fn integer_powers() {
        let x = seed1(&[2.0]);
        let p = x[0].powi(-2);
        assert!((p.value - 0.25).abs() < 1e-15);
        assert!((p.grad[0] + 0.25).abs() < 1e-15);
        assert_eq!(x[0].powi(0).value, 1.0);
    }
}
