//! Truncated hyper-dual numbers.
//!
//! A [`Jet`] of order `k` is an element of the algebra
//! `ℝ[ε₀, …, ε_{k−1}] / (ε₀², …, ε_{k−1}²)`, stored as its `2^k` coefficients
//! indexed by bitmask: the coefficient at index `S` multiplies `Π_{i ∈ S} εᵢ`.
//!
//! Evaluating a smooth function on `x + ε_j` and reading off the `ε_j`
//! coefficient gives an exact directional derivative. Using one fresh
//! infinitesimal per nested derivative gives exact mixed partials of any
//! order, which is how every exterior-calculus operator in this crate is
//! differentiated. New infinitesimals are always appended at the top index,
//! so "lifting" a jet to a higher order is zero padding and "taking the
//! derivative along the newest infinitesimal" is reading the upper half.

use smallvec::SmallVec;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

type Coeffs = SmallVec<[f64; 8]>;

/// A truncated multivariate Taylor value with nilpotent infinitesimals.
#[derive(Clone, PartialEq)]
pub struct Jet {
    c: Coeffs,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet{:?}", self.c.as_slice())
    }
}

impl Jet {
    /// A constant of order 0.
    pub fn constant(v: f64) -> Self {
        let mut c = Coeffs::new();
        c.push(v);
        Jet { c }
    }

    /// Builds a jet from raw coefficients; the length must be a power of two.
    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        assert!(coeffs.len().is_power_of_two(), "jet length must be a power of two");
        Jet { c: Coeffs::from_slice(coeffs) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Number of infinitesimals carried.
    pub fn order(&self) -> usize {
        self.c.len().trailing_zeros() as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Zero-pads to `order` infinitesimals. Lifting never lowers the order.
    pub fn lifted(&self, order: usize) -> Jet {
        let n = 1usize << order;
        if n <= self.c.len() {
            return self.clone();
        }
        let mut c = self.c.clone();
        c.resize(n, 0.0);
        Jet { c }
    }

    /// Lifts to one more infinitesimal (at index `order`) and adds it.
    pub fn perturbed(&self, order: usize) -> Jet {
        let mut j = self.lifted(order + 1);
        j.c[1 << order] += 1.0;
        j
    }

    /// `lower + ε·upper` with the new infinitesimal at index `order`; both
    /// inputs must have order at most `order`.
    pub fn with_top(lower: &Jet, upper: &Jet, order: usize) -> Jet {
        debug_assert!(lower.order() <= order && upper.order() <= order);
        let mut c = lower.lifted(order).c;
        c.extend_from_slice(&upper.lifted(order).c);
        Jet { c }
    }

    /// The coefficient of the infinitesimal at index `order`, as a jet in the
    /// lower infinitesimals. Inputs of lower order have a zero derivative.
    pub fn top_derivative(&self, order: usize) -> Jet {
        let half = 1usize << order;
        if self.c.len() <= half {
            return Jet::constant(0.0).lifted(order);
        }
        Jet { c: Coeffs::from_slice(&self.c[half..2 * half]) }
    }

    /// The part of the jet free of the infinitesimal at index `order`.
    pub fn truncated(&self, order: usize) -> Jet {
        let half = 1usize << order;
        if self.c.len() <= half {
            return self.clone();
        }
        Jet { c: Coeffs::from_slice(&self.c[..half]) }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn nilpotent(&self) -> Jet {
        let mut n = self.clone();
        n.c[0] = 0.0;
        n
    }

    /// Applies a scalar function given its derivatives at the value part,
    /// `derivs[m] = f^{(m)}(x₀)` for `m = 0..=order`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let k = self.order();
        let mut out = Jet::constant(derivs[0]).lifted(k);
        if k == 0 {
            return out;
        }
        let n = self.nilpotent();
        let mut power = n.clone();
        let mut factorial = 1.0;
        for (m, d) in derivs.iter().enumerate().take(k + 1).skip(1) {
            factorial *= m as f64;
            out += &power.scale(d / factorial);
            if m < k {
                power = &power * &n;
            }
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Jet {
        let x = self.value();
        let k = self.order();
        let mut d = Vec::with_capacity(k + 1);
        d.push(x.ln());
        let mut fact = 1.0;
        for m in 1..=k {
            if m > 1 {
                fact *= (m - 1) as f64;
            }
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign * fact / x.powi(m as i32));
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        let x = self.value();
        let k = self.order();
        let mut d = Vec::with_capacity(k + 1);
        let mut coef = 1.0;
        for m in 0..=k {
            d.push(coef * x.powf(0.5 - m as f64));
            coef *= 0.5 - m as f64;
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.order()).map(|m| cycle[m % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.order()).map(|m| cycle[m % 4]).collect();
        self.compose(&d)
    }

    pub fn recip(&self) -> Jet {
        let x = self.value();
        let k = self.order();
        let mut d = Vec::with_capacity(k + 1);
        let mut fact = 1.0;
        for m in 0..=k {
            if m > 0 {
                fact *= m as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            d.push(sign * fact / x.powi(m as i32 + 1));
        }
        self.compose(&d)
    }

    /// Integer power by repeated squaring (exact in the nilpotent part).
    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut result = Jet::constant(1.0).lifted(self.order());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Two-argument arctangent `atan2(self, x)`.
    ///
    /// Written as `atan2(y₀, x₀) + atan(r)` with
    /// `r = (x₀·y − y₀·x) / (x₀·x + y₀·y)`, whose value part is zero, so the
    /// arctangent series terminates.
    pub fn atan2(&self, x: &Jet) -> Jet {
        let y = self;
        let (y0, x0) = (y.value(), x.value());
        let k = y.order().max(x.order());
        let base = y0.atan2(x0);
        if k == 0 {
            return Jet::constant(base);
        }
        let num = &y.scale(x0) - &x.scale(y0);
        let den = &x.scale(x0) + &y.scale(y0);
        let r = &num / &den;
        let mut out = Jet::constant(base).lifted(k);
        let r2 = &r * &r;
        let mut term = r.clone();
        let mut j = 1usize;
        while j <= k {
            let sign = if (j / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
            out += &term.scale(sign / j as f64);
            term = &term * &r2;
            j += 2;
        }
        out
    }
}

fn binary(a: &Jet, b: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
    let n = a.c.len().max(b.c.len());
    let mut c = Coeffs::with_capacity(n);
    for i in 0..n {
        let x = a.c.get(i).copied().unwrap_or(0.0);
        let y = b.c.get(i).copied().unwrap_or(0.0);
        c.push(f(x, y));
    }
    Jet { c }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        binary(self, rhs, |x, y| x + y)
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        binary(self, rhs, |x, y| x - y)
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        if self.c.len() == 1 {
            return rhs.scale(self.c[0]);
        }
        if rhs.c.len() == 1 {
            return self.scale(rhs.c[0]);
        }
        let n = self.c.len().max(rhs.c.len());
        let a = self.lifted(n.trailing_zeros() as usize);
        let b = rhs.lifted(n.trailing_zeros() as usize);
        let mut c = Coeffs::from_elem(0.0, n);
        for (s, slot) in c.iter_mut().enumerate() {
            // Subset convolution: sum over submasks t of s.
            let mut t = s;
            let mut acc = 0.0;
            loop {
                acc += a.c[t] * b.c[s ^ t];
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            *slot = acc;
        }
        Jet { c }
    }
}

impl Div<&Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        if rhs.c.len() == 1 {
            return self.scale(1.0 / rhs.c[0]);
        }
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.c.len() > self.c.len() {
            self.c.resize(rhs.c.len(), 0.0);
        }
        for (x, y) in self.c.iter_mut().zip(rhs.c.iter()) {
            *x += y;
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

/// Lifts a slice of plain values to order-0 jets.
pub fn constants(values: &[f64]) -> Vec<Jet> {
    values.iter().map(|&v| Jet::constant(v)).collect()
}

/// Highest order among a collection of jets.
pub fn max_order<'a>(jets: impl IntoIterator<Item = &'a Jet>) -> usize {
    jets.into_iter().map(Jet::order).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x: f64) -> Jet {
        Jet::constant(x).perturbed(0)
    }

    #[test]
    fn product_rule_first_order() {
        let x = var(3.0);
        let y = &x * &x;
        assert_eq!(y.coeffs(), &[9.0, 6.0]);
    }

    #[test]
    fn mixed_partial_of_monomial() {
        // f(x, y) = x²y at (2, 3); ∂x∂y f = 2x = 4.
        let x = Jet::constant(2.0).perturbed(0);
        let y = Jet::constant(3.0).perturbed(1).lifted(2);
        let x = x.lifted(2);
        let f = &(&x * &x) * &y;
        assert_eq!(f.coeffs(), &[12.0, 12.0, 4.0, 4.0]);
    }

    #[test]
    fn second_derivative_along_same_direction() {
        // Seeding the same coordinate in two slots gives f''.
        let x = Jet::constant(0.7).perturbed(0).perturbed(1);
        let f = x.sin();
        let c = f.coeffs();
        assert!((c[3] + 0.7f64.sin()).abs() < 1e-15);
        assert!((c[1] - 0.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = Jet::constant(1.3).perturbed(0).perturbed(1).perturbed(2);
        let third = |j: &Jet| j.coeffs()[7];
        assert!((third(&x.exp()) - 1.3f64.exp()).abs() < 1e-12);
        assert!((third(&x.ln()) - 2.0 / 1.3f64.powi(3)).abs() < 1e-12);
        let s = x.sqrt();
        assert!((third(&s) - 0.375 * 1.3f64.powf(-2.5)).abs() < 1e-12);
        assert!((third(&x.recip()) + 6.0 / 1.3f64.powi(4)).abs() < 1e-12);
        assert!((third(&x.cos()) - 1.3f64.sin()).abs() < 1e-12);
        let p = x.powi(-2);
        assert!((third(&p) + 24.0 / 1.3f64.powi(5)).abs() < 1e-11);
    }

    #[test]
    fn atan2_derivatives() {
        // ∂/∂y atan2(y, x) = x / (x² + y²), ∂²/∂y∂x = (y² − x²) / (x² + y²)².
        let (x0, y0) = (-0.4, 1.1);
        let y = Jet::constant(y0).perturbed(0).lifted(2);
        let x = Jet::constant(x0).lifted(1).perturbed(1);
        let a = y.atan2(&x);
        let r2 = x0 * x0 + y0 * y0;
        assert!((a.value() - y0.atan2(x0)).abs() < 1e-15);
        assert!((a.coeffs()[1] - x0 / r2).abs() < 1e-14);
        assert!((a.coeffs()[2] + y0 / r2).abs() < 1e-14);
        assert!((a.coeffs()[3] - (y0 * y0 - x0 * x0) / (r2 * r2)).abs() < 1e-14);
    }

    #[test]
    fn top_derivative_reads_upper_half() {
        let j = Jet::from_coeffs(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(j.top_derivative(1).coeffs(), &[3.0, 4.0]);
        assert_eq!(j.truncated(1).coeffs(), &[1.0, 2.0]);
        assert_eq!(Jet::constant(5.0).top_derivative(0).coeffs(), &[0.0]);
    }
}
