//! Smooth functions of ξ ∈ [0, 1] stored as values at Chebyshev points.
//!
//! Values live on the Chebyshev points of the second kind
//! `ξⱼ = (1 + cos(πj/n))/2`, `j = 0..=n`, with `n` a power of two so that
//! coarser grids are subsets of finer ones. Evaluation uses the barycentric
//! formula and is exact at the nodes; in particular a function sampled as
//! zero at ξ = 0 evaluates to exactly zero there.

use crate::error::{Error, Result};
use crate::series::{Coefficient, InvertibleCoefficient};

/// Relative tolerance for adaptive construction.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Hard cap on the grid size `n`.
pub const DEFAULT_MAX_DEGREE: usize = 512;

const MIN_DEGREE: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct XiFunction {
    /// Values at ξⱼ, ordered from ξ = 1 (j = 0) down to ξ = 0 (j = n).
    /// A single value is a constant.
    values: Vec<f64>,
}

/// Chebyshev points `cos(πj/n)` on [-1, 1] for power-of-two `n`, cached.
fn cheb_points(n: usize) -> &'static [f64] {
    use std::sync::OnceLock;
    static TABLES: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=12)
            .map(|e| {
                let n = 1usize << e;
                (0..=n)
                    .map(|j| {
                        if 2 * j == n {
                            0.0
                        } else {
                            (std::f64::consts::PI * j as f64 / n as f64).cos()
                        }
                    })
                    .collect()
            })
            .collect()
    });
    debug_assert!(n.is_power_of_two() && n <= 1 << 12);
    &tables[n.trailing_zeros() as usize]
}

fn node(j: usize, n: usize) -> f64 {
    0.5 * (1.0 + cheb_points(n)[j])
}

/// Chebyshev coefficients of the interpolant through `values`.
fn chebyshev_coeffs(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    if n == 0 {
        return values.to_vec();
    }
    let two_n = 2 * n;
    let cos_table: Vec<f64> = (0..two_n)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    (0..=n)
        .map(|m| {
            let mut acc = 0.0;
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * cos_table[(j * m) % two_n];
            }
            let c = 2.0 * acc / n as f64;
            if m == 0 || m == n {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

impl XiFunction {
    pub fn constant(c: f64) -> Self {
        Self { values: vec![c] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Adaptive construction at the default tolerance and degree cap.
    pub fn from_fn(f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn_with(f, DEFAULT_TOL, DEFAULT_MAX_DEGREE)
    }

    /// Doubles the grid until the trailing Chebyshev coefficients and the
    /// off-node residual both fall below `tol` relative to the sampled scale,
    /// then drops to the coarsest nested grid that still meets `tol`.
    pub fn from_fn_with(f: impl Fn(f64) -> f64, tol: f64, max_degree: usize) -> Result<Self> {
        let mut n = MIN_DEGREE;
        let mut values: Vec<f64> = (0..=n).map(|j| f(node(j, n))).collect();
        loop {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("XiFunction sample"));
            }
            let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                return Ok(Self::zero());
            }
            let coeffs = chebyshev_coeffs(&values);
            let tail_start = n - n / 8;
            let tail = coeffs[tail_start..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if tail <= tol * scale {
                let candidate = Self { values: values.clone() }.simplified_with(&coeffs, tol);
                let off_node = (0..8)
                    .map(|i| {
                        let j = (i * n) / 8;
                        let x = 0.5
                            * (1.0
                                + (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos());
                        (candidate.eval(x) - f(x)).abs()
                    })
                    .fold(0.0f64, f64::max);
                if off_node <= tol * scale {
                    return Ok(candidate);
                }
            }
            if n >= max_degree {
                return Err(Error::InterpolationFailure { tol, cap: max_degree });
            }
            // Refine: the old nodes are the even-indexed nodes of the new grid.
            let m = 2 * n;
            let mut refined = Vec::with_capacity(m + 1);
            for j in 0..=m {
                if j % 2 == 0 {
                    refined.push(values[j / 2]);
                } else {
                    refined.push(f(node(j, m)));
                }
            }
            values = refined;
            n = m;
        }
    }

    /// Coarsest nested subgrid whose discarded Chebyshev content is below
    /// `tol` times the scale. Retained node values are unchanged.
    fn simplified_with(self, coeffs: &[f64], tol: f64) -> Self {
        let n = self.values.len() - 1;
        if n == 0 {
            return self;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = tol * scale;
        // Highest index with a significant coefficient.
        let last = coeffs.iter().rposition(|c| c.abs() > threshold).unwrap_or(0);
        if last == 0 {
            let c = self.values[0];
            if self.values.iter().all(|v| *v == c) {
                return Self::constant(c);
            }
        }
        let mut m = 1;
        while m <= last {
            m *= 2;
        }
        // Leave a margin so aliasing of the neglected tail stays below tol.
        let m = (2 * m).min(n);
        let stride = n / m;
        Self {
            values: self.values.iter().step_by(stride).copied().collect(),
        }
    }

    fn simplified(self, tol: f64) -> Self {
        let coeffs = chebyshev_coeffs(&self.values);
        self.simplified_with(&coeffs, tol)
    }

    /// Grid size `n` (0 for constants).
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    /// Node values from ξ = 1 down to ξ = 0.
    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let n = self.values.len() - 1;
        if n == 0 {
            return self.values[0];
        }
        let t = 2.0 * xi - 1.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (v, xj)) in self.values.iter().zip(cheb_points(n)).enumerate() {
            let diff = t - xj;
            if diff == 0.0 {
                return *v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            let q = w / diff;
            num += q * v;
            den += q;
        }
        num / den
    }

    /// Node values on the grid of size `n`, which must be a multiple of ours.
    fn resample(&self, n: usize) -> Vec<f64> {
        let own = self.values.len() - 1;
        if own == 0 {
            return vec![self.values[0]; n + 1];
        }
        debug_assert_eq!(n % own, 0);
        let stride = n / own;
        (0..=n)
            .map(|j| {
                if j % stride == 0 {
                    self.values[j / stride]
                } else {
                    self.eval(node(j, n))
                }
            })
            .collect()
    }

    fn zip_with(&self, other: &Self, n: usize, op: impl Fn(f64, f64) -> f64) -> Self {
        if n == 0 {
            return Self::constant(op(self.values[0], other.values[0]));
        }
        let a = self.resample(n);
        let b = other.resample(n);
        let values = a.iter().zip(&b).map(|(x, y)| op(*x, *y)).collect();
        Self { values }.simplified(DEFAULT_TOL * 1e-2)
    }

    fn common_grid(&self, other: &Self) -> usize {
        self.degree().max(other.degree())
    }

    /// Pointwise product. The product of two degree-n interpolants needs a
    /// grid of size 2n; the result is then coarsened where possible.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.degree(), other.degree());
        let n = if a == 0 || b == 0 {
            a.max(b)
        } else {
            (a + b).next_power_of_two().min(4 * DEFAULT_MAX_DEGREE)
        };
        self.zip_with(other, n, |x, y| x * y)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, self.common_grid(other), |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, self.common_grid(other), |x, y| x - y)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn powi(&self, exponent: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..exponent {
            out = out.mul(self);
        }
        out
    }

    fn check_grid(&self) -> Vec<f64> {
        let n = (2 * self.degree()).max(MIN_DEGREE);
        (0..=n).map(|j| self.eval(node(j, n))).collect()
    }

    /// Maximum modulus over a grid twice as fine as the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.check_grid().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sampled minimum over a grid twice as fine as the nodes.
    pub fn sampled_min(&self) -> f64 {
        self.check_grid().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Pointwise square root; requires the sampled minimum to exceed `floor`.
    pub fn sqrt(&self, floor: f64) -> Result<Self> {
        let inf = self.sampled_min();
        if inf <= floor {
            return Err(Error::NonInvertibleLeadingCoefficient { infimum: inf, floor });
        }
        if self.degree() == 0 {
            return Ok(Self::constant(self.values[0].sqrt()));
        }
        Self::from_fn(|x| self.eval(x).sqrt())
    }

    pub fn recip(&self, floor: f64) -> Result<Self> {
        let inf = self.check_grid().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if inf <= floor {
            return Err(Error::NonInvertibleLeadingCoefficient { infimum: inf, floor });
        }
        if self.degree() == 0 {
            return Ok(Self::constant(1.0 / self.values[0]));
        }
        Self::from_fn(|x| 1.0 / self.eval(x))
    }
}

impl Coefficient for XiFunction {
    fn zero() -> Self {
        XiFunction::zero()
    }
    fn one() -> Self {
        XiFunction::constant(1.0)
    }
    fn add(&self, other: &Self) -> Self {
        XiFunction::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        XiFunction::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        XiFunction::mul(self, other)
    }
    fn scale(&self, factor: f64) -> Self {
        XiFunction::scale(self, factor)
    }
    fn norm(&self) -> f64 {
        self.sup_norm()
    }
}

impl InvertibleCoefficient for XiFunction {
    fn infimum(&self) -> f64 {
        self.sampled_min()
    }
    fn sqrt_checked(&self, floor: f64) -> Result<Self> {
        self.sqrt(floor)
    }
    fn recip_checked(&self, floor: f64) -> Result<Self> {
        self.recip(floor)
    }
}
