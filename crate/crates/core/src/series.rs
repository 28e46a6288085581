//! Truncated power series over an abstract coefficient ring.
//!
//! A [`CoeffSeries`] always carries its truncation order explicitly. Binary
//! operations return a series truncated to the smaller of the two operand
//! orders, so a result never claims more valid terms than its inputs.

use std::fmt;

use crate::error::{Error, Result};
use crate::xi::XiFunction;

/// Leading-coefficient floor for square roots and reciprocals.
pub const DEFAULT_INVERT_FLOOR: f64 = 1e-6;

/// Ring operations needed by the series algebra.
pub trait Coefficient: Clone + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, factor: f64) -> Self;
    /// Sup-norm (sampled for function coefficients).
    fn norm(&self) -> f64;
}

/// Coefficients with a pointwise square root and reciprocal away from zero.
pub trait InvertibleCoefficient: Coefficient {
    /// Pointwise lower bound used against the invertibility floor.
    fn infimum(&self) -> f64;
    fn sqrt_checked(&self, floor: f64) -> Result<Self>;
    fn recip_checked(&self, floor: f64) -> Result<Self>;
}

impl Coefficient for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, factor: f64) -> Self {
        self * factor
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl InvertibleCoefficient for f64 {
    fn infimum(&self) -> f64 {
        *self
    }

    fn sqrt_checked(&self, floor: f64) -> Result<Self> {
        if !self.is_finite() {
            return Err(Error::NonFinite("scalar sqrt"));
        }
        if *self <= floor {
            return Err(Error::NonInvertibleLeadingCoefficient {
                infimum: *self,
                floor,
            });
        }
        Ok(self.sqrt())
    }

    fn recip_checked(&self, floor: f64) -> Result<Self> {
        if !self.is_finite() {
            return Err(Error::NonFinite("scalar reciprocal"));
        }
        if self.abs() <= floor {
            return Err(Error::NonInvertibleLeadingCoefficient {
                infimum: self.abs(),
                floor,
            });
        }
        Ok(1.0 / self)
    }
}

/// Power series c₀ + c₁z + … + c_N z^N, valid through order N.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeries<R> {
    coeffs: Vec<R>,
}

impl<R: Coefficient> CoeffSeries<R> {
    /// Series whose order is `coeffs.len() - 1`.
    ///
    /// # Panics
    /// If `coeffs` is empty: a series has at least the constant term.
    pub fn new(coeffs: Vec<R>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Self { coeffs }
    }

    /// Pads with zeros or truncates `coeffs` to exactly `order + 1` terms.
    pub fn from_prefix(mut coeffs: Vec<R>, order: usize) -> Self {
        coeffs.resize(order + 1, R::zero());
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::from_prefix(Vec::new(), order)
    }

    pub fn constant(c: R, order: usize) -> Self {
        Self::from_prefix(vec![c], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<R> {
        self.coeffs
    }

    /// Coefficient of zⁿ. Panics when `n` exceeds the order.
    pub fn coeff(&self, n: usize) -> &R {
        &self.coeffs[n]
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot extend a truncated series");
        Self {
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    pub fn map<S: Coefficient>(&self, f: impl Fn(&R) -> S) -> CoeffSeries<S> {
        CoeffSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self {
            coeffs: (0..=n).map(|i| self.coeffs[i].add(&other.coeffs[i])).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self {
            coeffs: (0..=n).map(|i| self.coeffs[i].sub(&other.coeffs[i])).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|c| c.scale(factor))
    }

    /// Cauchy product truncated to the common order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let coeffs = (0..=n)
            .map(|m| {
                let mut acc = R::zero();
                for i in 0..=m {
                    acc = acc.add(&self.coeffs[i].mul(&other.coeffs[m - i]));
                }
                acc
            })
            .collect();
        Self { coeffs }
    }

    pub fn powi(&self, exponent: u32) -> Self {
        let mut out = Self::constant(R::one(), self.order());
        for _ in 0..exponent {
            out = out.mul(self);
        }
        out
    }

    /// Multiplies by the variable: order grows by one.
    pub fn shift(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(R::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// Largest coefficient norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(Coefficient::norm).fold(0.0, f64::max)
    }
}

impl<R: InvertibleCoefficient> CoeffSeries<R> {
    /// Square root with `s₀ = √a₀`, via sₙ = (aₙ − Σ_{0<i<n} sᵢsₙ₋ᵢ) / (2s₀).
    pub fn sqrt(&self, floor: f64) -> Result<Self> {
        let a0 = &self.coeffs[0];
        let s0 = a0.sqrt_checked(floor)?;
        let inv_two_s0 = s0.scale(2.0).recip_checked(floor)?;
        let mut out: Vec<R> = Vec::with_capacity(self.coeffs.len());
        out.push(s0);
        for n in 1..=self.order() {
            let mut acc = self.coeffs[n].clone();
            for i in 1..n {
                acc = acc.sub(&out[i].mul(&out[n - i]));
            }
            out.push(acc.mul(&inv_two_s0));
        }
        Ok(Self { coeffs: out })
    }

    pub fn recip(&self, floor: f64) -> Result<Self> {
        let r0 = self.coeffs[0].recip_checked(floor)?;
        let mut out: Vec<R> = Vec::with_capacity(self.coeffs.len());
        out.push(r0.clone());
        for n in 1..=self.order() {
            let mut acc = R::zero();
            for i in 1..=n {
                acc = acc.add(&self.coeffs[i].mul(&out[n - i]));
            }
            out.push(acc.mul(&r0).scale(-1.0));
        }
        Ok(Self { coeffs: out })
    }

    pub fn div(&self, denominator: &Self, floor: f64) -> Result<Self> {
        Ok(self.mul(&denominator.recip(floor)?))
    }
}

impl CoeffSeries<f64> {
    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// Formal composition `self(h(ε))`.
    ///
    /// `h` must have zero constant term. The result is valid through
    /// `min(order(h), (order(self) + 1)·val(h) − 1)` where `val(h)` is the
    /// index of the first nonzero coefficient of `h`.
    pub fn substitute(&self, h: &CoeffSeries<f64>) -> Result<CoeffSeries<f64>> {
        let h0 = h.coeffs[0];
        if h0 != 0.0 {
            return Err(Error::NonzeroConstantTerm(h0));
        }
        let valuation = h.coeffs.iter().position(|c| *c != 0.0);
        let order = match valuation {
            Some(v) => h.order().min((self.order() + 1) * v - 1),
            None => h.order(),
        };
        let h = h.truncate(order);
        let mut acc = CoeffSeries::constant(*self.coeffs.last().unwrap(), order);
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(&h);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }
}

/// Substitutes `z = δ·w(ξ)` into a scalar series, giving a δ-series whose
/// m-th coefficient is `Bₘ·w(ξ)ᵐ`.
pub fn apply_function_series(b: &CoeffSeries<f64>, w: &XiFunction) -> CoeffSeries<XiFunction> {
    let mut power = XiFunction::constant(1.0);
    let mut coeffs = Vec::with_capacity(b.order() + 1);
    for (m, bm) in b.coeffs().iter().enumerate() {
        if m > 0 {
            power = power.mul(w);
        }
        coeffs.push(power.scale(*bm));
    }
    CoeffSeries::new(coeffs)
}
