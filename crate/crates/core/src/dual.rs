//! Forward-mode automatic differentiation over complex scalars.
//!
//! All maps differentiated in this crate are polynomial or rational in
//! their inputs, so the complex derivative is the holomorphic one and a
//! single tangent component suffices for directional derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

/// Field operations shared by `C64` and [`Dual`].
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(c: C64) -> Self;
    fn value(self) -> C64;

    fn zero() -> Self {
        Self::cst(C64::new(0.0, 0.0))
    }

    fn real(x: f64) -> Self {
        Self::cst(C64::new(x, 0.0))
    }
}

impl Scalar for C64 {
    fn cst(c: C64) -> Self {
        c
    }
    fn value(self) -> C64 {
        self
    }
}

/// `value + eps * tangent` with `eps^2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub re: C64,
    pub eps: C64,
}

impl Dual {
    pub fn new(re: C64, eps: C64) -> Self {
        Self { re, eps }
    }

    pub fn variable(re: C64) -> Self {
        Self { re, eps: C64::new(1.0, 0.0) }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.inv();
        Self::new(self.re * inv, (self.eps * o.re - self.re * o.eps) * inv * inv)
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl Scalar for Dual {
    fn cst(c: C64) -> Self {
        Self::new(c, C64::new(0.0, 0.0))
    }
    fn value(self) -> C64 {
        self.re
    }
}

/// Directional derivative of `f` at `x` along `dx`.
pub fn jvp<F>(f: F, x: &[C64], dx: &[C64]) -> (Vec<C64>, Vec<C64>)
where
    F: Fn(&[Dual]) -> Vec<Dual>,
{
    let args: Vec<Dual> = x.iter().zip(dx).map(|(&v, &d)| Dual::new(v, d)).collect();
    let out = f(&args);
    (out.iter().map(|d| d.re).collect(), out.iter().map(|d| d.eps).collect())
}

/// Gradient of a scalar function by one forward pass per input.
pub fn gradient<F>(f: F, x: &[C64]) -> (C64, Vec<C64>)
where
    F: Fn(&[Dual]) -> Dual,
{
    let mut value = C64::new(0.0, 0.0);
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let args: Vec<Dual> = x
            .iter()
            .enumerate()
            .map(|(m, &v)| if m == k { Dual::variable(v) } else { Dual::cst(v) })
            .collect();
        let out = f(&args);
        value = out.re;
        grad.push(out.eps);
    }
    (value, grad)
}
