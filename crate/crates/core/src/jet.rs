//! Truncated Taylor jets carrying exact first and second derivatives with
//! respect to the model parameters.
//!
//! The particle filter is written once, generic over [`Scalar`], and
//! instantiated with `f64` (likelihood only), [`Jet1`] (plus gradient) or
//! [`Jet2`] (plus Hessian). Each arithmetic operation applies the chain
//! rule, so a state propagated through the model carries `dx/dθ` and
//! `d²x/dθ²` alongside its value.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest parameter dimension a jet can carry.
pub const MAX_PARAMS: usize = 3;

pub type Grad = [f64; MAX_PARAMS];
pub type Hess = [[f64; MAX_PARAMS]; MAX_PARAMS];

const ZERO_GRAD: Grad = [0.0; MAX_PARAMS];
const ZERO_HESS: Hess = [[0.0; MAX_PARAMS]; MAX_PARAMS];

/// A real number optionally carrying derivatives w.r.t. the parameters.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Highest derivative order carried (0, 1 or 2).
    const ORDER: usize;

    fn constant(value: f64) -> Self;

    /// The `index`-th independent variable, with unit gradient in that slot.
    fn variable(value: f64, index: usize) -> Self;

    fn from_parts(value: f64, grad: &Grad, hess: &Hess) -> Self;

    fn value(&self) -> f64;
    fn grad(&self, i: usize) -> f64;
    fn hess(&self, i: usize, j: usize) -> f64;

    /// `f(u)` given `f`, `f'` and `f''` evaluated at `u.value()`.
    fn chain1(self, f: f64, df: f64, d2f: f64) -> Self;

    /// `f(u, v)` given the value and partial derivatives of `f` at the values
    /// of `u` and `v`.
    #[allow(clippy::too_many_arguments)]
    fn chain2(u: Self, v: Self, f: f64, fu: f64, fv: f64, fuu: f64, fuv: f64, fvv: f64) -> Self;

    fn ln(self) -> Self {
        let v = self.value();
        self.chain1(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    fn exp(self) -> Self {
        let e = self.value().exp();
        self.chain1(e, e, e)
    }

    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.chain1(s, 0.5 / s, -0.25 / (s * s * s))
    }

    fn recip(self) -> Self {
        let v = self.value();
        self.chain1(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    fn square(self) -> Self {
        let v = self.value();
        self.chain1(v * v, 2.0 * v, 2.0)
    }

    fn grad_array(&self) -> Grad {
        let mut g = ZERO_GRAD;
        if Self::ORDER >= 1 {
            for (i, slot) in g.iter_mut().enumerate() {
                *slot = self.grad(i);
            }
        }
        g
    }

    fn hess_array(&self) -> Hess {
        let mut h = ZERO_HESS;
        if Self::ORDER >= 2 {
            for (i, row) in h.iter_mut().enumerate() {
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = self.hess(i, j);
                }
            }
        }
        h
    }
}

impl Scalar for f64 {
    const ORDER: usize = 0;

    #[inline]
    fn constant(value: f64) -> Self {
        value
    }
    #[inline]
    fn variable(value: f64, _index: usize) -> Self {
        value
    }
    #[inline]
    fn from_parts(value: f64, _grad: &Grad, _hess: &Hess) -> Self {
        value
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn grad(&self, _i: usize) -> f64 {
        0.0
    }
    #[inline]
    fn hess(&self, _i: usize, _j: usize) -> f64 {
        0.0
    }
    #[inline]
    fn chain1(self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }
    #[inline]
    fn chain2(_u: Self, _v: Self, f: f64, _fu: f64, _fv: f64, _fuu: f64, _fuv: f64, _fvv: f64) -> Self {
        f
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn recip(self) -> Self {
        f64::recip(self)
    }
    #[inline]
    fn square(self) -> Self {
        self * self
    }
}

/// Value and gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub v: f64,
    pub g: Grad,
}

/// Value, gradient and (symmetric) Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: Grad,
    pub h: Hess,
}

impl Scalar for Jet1 {
    const ORDER: usize = 1;

    #[inline]
    fn constant(value: f64) -> Self {
        Jet1 { v: value, g: ZERO_GRAD }
    }
    #[inline]
    fn variable(value: f64, index: usize) -> Self {
        let mut g = ZERO_GRAD;
        g[index] = 1.0;
        Jet1 { v: value, g }
    }
    #[inline]
    fn from_parts(value: f64, grad: &Grad, _hess: &Hess) -> Self {
        Jet1 { v: value, g: *grad }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    #[inline]
    fn grad(&self, i: usize) -> f64 {
        self.g[i]
    }
    #[inline]
    fn hess(&self, _i: usize, _j: usize) -> f64 {
        0.0
    }
    #[inline]
    fn chain1(self, f: f64, df: f64, _d2f: f64) -> Self {
        let mut g = ZERO_GRAD;
        for i in 0..MAX_PARAMS {
            g[i] = df * self.g[i];
        }
        Jet1 { v: f, g }
    }
    #[inline]
    fn chain2(u: Self, v: Self, f: f64, fu: f64, fv: f64, _fuu: f64, _fuv: f64, _fvv: f64) -> Self {
        let mut g = ZERO_GRAD;
        for i in 0..MAX_PARAMS {
            g[i] = fu * u.g[i] + fv * v.g[i];
        }
        Jet1 { v: f, g }
    }
}

impl Scalar for Jet2 {
    const ORDER: usize = 2;

    #[inline]
    fn constant(value: f64) -> Self {
        Jet2 { v: value, g: ZERO_GRAD, h: ZERO_HESS }
    }
    #[inline]
    fn variable(value: f64, index: usize) -> Self {
        let mut g = ZERO_GRAD;
        g[index] = 1.0;
        Jet2 { v: value, g, h: ZERO_HESS }
    }
    #[inline]
    fn from_parts(value: f64, grad: &Grad, hess: &Hess) -> Self {
        Jet2 { v: value, g: *grad, h: *hess }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    #[inline]
    fn grad(&self, i: usize) -> f64 {
        self.g[i]
    }
    #[inline]
    fn hess(&self, i: usize, j: usize) -> f64 {
        self.h[i][j]
    }
    #[inline]
    fn chain1(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut g = ZERO_GRAD;
        let mut h = ZERO_HESS;
        for i in 0..MAX_PARAMS {
            g[i] = df * self.g[i];
            for j in 0..MAX_PARAMS {
                h[i][j] = df * self.h[i][j] + d2f * (self.g[i] * self.g[j]);
            }
        }
        Jet2 { v: f, g, h }
    }
    #[inline]
    fn chain2(u: Self, v: Self, f: f64, fu: f64, fv: f64, fuu: f64, fuv: f64, fvv: f64) -> Self {
        let mut g = ZERO_GRAD;
        let mut h = ZERO_HESS;
        for i in 0..MAX_PARAMS {
            g[i] = fu * u.g[i] + fv * v.g[i];
            for j in 0..MAX_PARAMS {
                h[i][j] = fu * u.h[i][j]
                    + fv * v.h[i][j]
                    + fuu * (u.g[i] * u.g[j])
                    + fvv * (v.g[i] * v.g[j])
                    + fuv * (u.g[i] * v.g[j] + v.g[i] * u.g[j]);
            }
        }
        Jet2 { v: f, g, h }
    }
}

macro_rules! jet_ops {
    ($jet:ident, $($field:ident),*) => {
        impl Add for $jet {
            type Output = $jet;
            #[inline]
            fn add(mut self, rhs: $jet) -> $jet {
                self.v += rhs.v;
                $(add_assign(&mut self.$field, &rhs.$field);)*
                self
            }
        }
        impl Sub for $jet {
            type Output = $jet;
            #[inline]
            fn sub(mut self, rhs: $jet) -> $jet {
                self.v -= rhs.v;
                $(sub_assign(&mut self.$field, &rhs.$field);)*
                self
            }
        }
        impl Mul for $jet {
            type Output = $jet;
            #[inline]
            fn mul(self, rhs: $jet) -> $jet {
                <$jet as Scalar>::chain2(self, rhs, self.v * rhs.v, rhs.v, self.v, 0.0, 1.0, 0.0)
            }
        }
        impl Div for $jet {
            type Output = $jet;
            #[inline]
            fn div(self, rhs: $jet) -> $jet {
                let inv = 1.0 / rhs.v;
                let q = self.v / rhs.v;
                <$jet as Scalar>::chain2(
                    self,
                    rhs,
                    q,
                    inv,
                    -q * inv,
                    0.0,
                    -inv * inv,
                    2.0 * q * inv * inv,
                )
            }
        }
        impl Neg for $jet {
            type Output = $jet;
            #[inline]
            fn neg(mut self) -> $jet {
                self.v = -self.v;
                $(scale_assign(&mut self.$field, -1.0);)*
                self
            }
        }
        impl Add<f64> for $jet {
            type Output = $jet;
            #[inline]
            fn add(mut self, rhs: f64) -> $jet {
                self.v += rhs;
                self
            }
        }
        impl Sub<f64> for $jet {
            type Output = $jet;
            #[inline]
            fn sub(mut self, rhs: f64) -> $jet {
                self.v -= rhs;
                self
            }
        }
        impl Mul<f64> for $jet {
            type Output = $jet;
            #[inline]
            fn mul(mut self, rhs: f64) -> $jet {
                self.v *= rhs;
                $(scale_assign(&mut self.$field, rhs);)*
                self
            }
        }
        impl Div<f64> for $jet {
            type Output = $jet;
            #[inline]
            fn div(self, rhs: f64) -> $jet {
                let mut out = self * (1.0 / rhs);
                out.v = self.v / rhs;
                out
            }
        }
    };
}

trait Coefficients {
    fn each_mut(&mut self, other: &Self, f: impl Fn(&mut f64, f64));
    fn scale(&mut self, factor: f64);
}

impl Coefficients for Grad {
    #[inline]
    fn each_mut(&mut self, other: &Self, f: impl Fn(&mut f64, f64)) {
        for (a, b) in self.iter_mut().zip(other) {
            f(a, *b);
        }
    }
    #[inline]
    fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|a| *a *= factor);
    }
}

impl Coefficients for Hess {
    #[inline]
    fn each_mut(&mut self, other: &Self, f: impl Fn(&mut f64, f64)) {
        for (ra, rb) in self.iter_mut().zip(other) {
            for (a, b) in ra.iter_mut().zip(rb) {
                f(a, *b);
            }
        }
    }
    #[inline]
    fn scale(&mut self, factor: f64) {
        self.iter_mut().flatten().for_each(|a| *a *= factor);
    }
}

#[inline]
fn add_assign<C: Coefficients>(a: &mut C, b: &C) {
    a.each_mut(b, |x, y| *x += y);
}

#[inline]
fn sub_assign<C: Coefficients>(a: &mut C, b: &C) {
    a.each_mut(b, |x, y| *x -= y);
}

#[inline]
fn scale_assign<C: Coefficients>(a: &mut C, factor: f64) {
    a.scale(factor);
}

jet_ops!(Jet1, g);
jet_ops!(Jet2, g, h);
