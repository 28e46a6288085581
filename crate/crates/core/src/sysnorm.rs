//! Input systems `ż = −w f(z) + z^{l+1} g(z)`, `ẇ = k z^{2k−1} f(z) + k w z^l g(z)`
//! and the normal-form data derived from them.
//!
//! Everything downstream depends on the field only through `F = g/f`, the
//! exponent `p = l − k + 1` and `k`. The quadrant transforms replace `F` by
//! `±F(±z)`; a [`NormalizedSystem`] records which transform it carries so that
//! direct (non-series) evaluation of `F`, `A` and `B` stays available.

use num_complex::Complex64;

use crate::error::{Assumption, Error, Result};
use crate::series::CoeffSeries;

/// δ-order used when none is given.
pub const DEFAULT_WORKING_ORDER: usize = 12;
/// Largest ε the default job uses; sets the radius floor.
pub const DEFAULT_EPS_REF: f64 = 0.08;

const F0_TOL: f64 = 1e-14;
const RADIUS_CAP: f64 = 1.0;
const CIRCLE_SAMPLES: usize = 512;

/// Polynomial coefficients of `f` and `g` plus the exponents `k`, `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub k: u32,
    pub l: u32,
}

fn horner<T>(coeffs: &[f64], z: T) -> T
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Add<f64, Output = T> + From<f64>,
{
    coeffs.iter().rev().fold(T::from(0.0), |acc, c| acc * z + *c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c)
        .collect()
}

impl SystemSpec {
    pub fn new(f: Vec<f64>, g: Vec<f64>, k: u32, l: u32) -> Self {
        Self { f, g, k, l }
    }

    pub fn validate(&self) -> Result<()> {
        if self.f.iter().chain(&self.g).any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        if self.f.first().map_or(true, |f0| f0.abs() <= F0_TOL) {
            return Err(Error::AssumptionViolation(Assumption::F0Zero));
        }
        if self.k < 1 || self.k > self.l + 1 {
            return Err(Error::AssumptionViolation(Assumption::KRange));
        }
        if self.k == self.l + 1 {
            return Err(Error::AssumptionViolation(Assumption::KEqualsLPlus1));
        }
        Ok(())
    }

    /// `p = l − k + 1`. Meaningful once [`validate`](Self::validate) passed.
    pub fn p(&self) -> u32 {
        self.l + 1 - self.k
    }

    pub fn f_at(&self, z: f64) -> f64 {
        horner(&self.f, z)
    }

    pub fn g_at(&self, z: f64) -> f64 {
        horner(&self.g, z)
    }

    /// `F(z) = g(z)/f(z)` and `F′(z)`, evaluated directly.
    pub fn big_f_at(&self, z: f64) -> (f64, f64) {
        let (f, g) = (self.f_at(z), self.g_at(z));
        let (df, dg) = (horner(&derivative(&self.f), z), horner(&derivative(&self.g), z));
        (g / f, (dg * f - g * df) / (f * f))
    }

    fn big_f_complex(&self, z: Complex64) -> (Complex64, Complex64) {
        let f = horner(&self.f, z);
        let g = horner(&self.g, z);
        let df = horner(&derivative(&self.f), z);
        let dg = horner(&derivative(&self.g), z);
        (g / f, (dg * f - g * df) / (f * f))
    }
}

/// Which reflection of the first-quadrant problem a system describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrant {
    J2,
    J3,
    J4,
}

/// `F_J(z) = sign · F(±z)` relative to the user's `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FTransform {
    pub sign: f64,
    pub reflect: bool,
}

impl FTransform {
    pub const IDENTITY: FTransform = FTransform {
        sign: 1.0,
        reflect: false,
    };

    fn of(which: Quadrant, p: u32, k: u32) -> Self {
        let parity = if (p + k) % 2 == 0 { 1.0 } else { -1.0 };
        match which {
            Quadrant::J2 => FTransform {
                sign: parity,
                reflect: true,
            },
            Quadrant::J3 => FTransform {
                sign: -parity,
                reflect: true,
            },
            Quadrant::J4 => FTransform {
                sign: -1.0,
                reflect: false,
            },
        }
    }

    /// `outer ∘ self`: apply `self` first, then `outer`.
    fn then(self, outer: FTransform) -> FTransform {
        FTransform {
            sign: self.sign * outer.sign,
            reflect: self.reflect ^ outer.reflect,
        }
    }

    fn coeff_factor(self, m: usize) -> f64 {
        if self.reflect && m % 2 == 1 {
            -self.sign
        } else {
            self.sign
        }
    }
}

/// Normal-form data: `F`, `p`, `A = 1 + z^{2p}F²`, `B = 2zF′ + 2(p+2k)F`.
#[derive(Clone, Debug)]
pub struct NormalizedSystem {
    pub spec: SystemSpec,
    pub k: u32,
    pub l: u32,
    pub p: u32,
    pub transform: FTransform,
    pub f_series: CoeffSeries<f64>,
    pub a_series: CoeffSeries<f64>,
    pub b_series: CoeffSeries<f64>,
    /// Coefficients of F², indexed from z⁰.
    pub f2_series: CoeffSeries<f64>,
    pub b0: f64,
    pub b1: f64,
    /// `(−1)^{p+k−1}`.
    pub theta_p: f64,
    pub radius_r: f64,
    /// Root-test radius of F's Taylor coefficients (infinite for polynomials).
    pub root_radius: f64,
}

/// Numeric constants of the contraction argument on a disc of radius `r`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ContractionBounds {
    pub r: f64,
    pub c0: f64,
    pub m_bound: f64,
    pub mu: f64,
    pub delta0: f64,
}

fn root_test_radius(coeffs: &[f64]) -> f64 {
    let n = coeffs.len();
    let start = (n / 2).max(1);
    let mut worst = 0.0f64;
    for (m, c) in coeffs.iter().enumerate().skip(start) {
        let a = c.abs();
        if a > 1e-300 {
            worst = worst.max(a.powf(1.0 / m as f64));
        }
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        1.0 / worst
    }
}

/// Derived series for a given `F`.
fn derived(f_series: &CoeffSeries<f64>, p: u32, k: u32) -> (CoeffSeries<f64>, CoeffSeries<f64>, CoeffSeries<f64>) {
    let order = f_series.order();
    let f2 = f_series.mul(f_series);
    let two_p = 2 * p as usize;
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    for m in 0..=order {
        if m + two_p <= order {
            a[m + two_p] += f2.coeff(m);
        }
    }
    let b = f_series
        .coeffs()
        .iter()
        .enumerate()
        .map(|(m, fm)| 2.0 * (m as f64 + p as f64 + 2.0 * k as f64) * fm)
        .collect();
    (CoeffSeries::new(a), CoeffSeries::new(b), f2)
}

/// Normalizes with the default radius reference.
pub fn normalize(spec: &SystemSpec, working_order: usize) -> Result<NormalizedSystem> {
    normalize_with(spec, working_order, DEFAULT_EPS_REF)
}

/// Validates `spec` and derives the normal-form data through `working_order`.
///
/// `eps_ref` is the largest ε the caller intends to use: the radius is
/// `min(0.8·root radius, max(1, 10·eps_ref))`.
pub fn normalize_with(spec: &SystemSpec, working_order: usize, eps_ref: f64) -> Result<NormalizedSystem> {
    spec.validate()?;
    let (k, l, p) = (spec.k, spec.l, spec.p());
    let f = CoeffSeries::from_prefix(spec.f.clone(), working_order);
    let g = CoeffSeries::from_prefix(spec.g.clone(), working_order);
    let f_series = g.div(&f, F0_TOL)?;
    let (a_series, b_series, f2_series) = derived(&f_series, p, k);
    let root_radius = root_test_radius(f_series.coeffs());
    let radius_r = (0.8 * root_radius).min(RADIUS_CAP.max(10.0 * eps_ref));
    let theta_p = if (p + k - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(NormalizedSystem {
        spec: spec.clone(),
        k,
        l,
        p,
        transform: FTransform::IDENTITY,
        b0: *b_series.coeff(0),
        b1: if working_order >= 1 { *b_series.coeff(1) } else { 0.0 },
        f_series,
        a_series,
        b_series,
        f2_series,
        theta_p,
        radius_r,
        root_radius,
    })
}

impl NormalizedSystem {
    pub fn working_order(&self) -> usize {
        self.f_series.order()
    }

    /// The system with `F` replaced by `JᵢF`.
    pub fn quadrant_transform(&self, which: Quadrant) -> NormalizedSystem {
        let j = FTransform::of(which, self.p, self.k);
        let f_series = CoeffSeries::new(
            self.f_series
                .coeffs()
                .iter()
                .enumerate()
                .map(|(m, c)| j.coeff_factor(m) * c)
                .collect(),
        );
        let (a_series, b_series, f2_series) = derived(&f_series, self.p, self.k);
        NormalizedSystem {
            transform: self.transform.then(j),
            b0: *b_series.coeff(0),
            b1: if self.working_order() >= 1 { *b_series.coeff(1) } else { 0.0 },
            f_series,
            a_series,
            b_series,
            f2_series,
            spec: self.spec.clone(),
            ..*self
        }
    }

    /// `F` and `F′` of this (possibly transformed) system, from `f` and `g`.
    pub fn big_f_direct(&self, z: f64) -> (f64, f64) {
        let t = self.transform;
        let arg = if t.reflect { -z } else { z };
        let (fv, dfv) = self.spec.big_f_at(arg);
        let chain = if t.reflect { -1.0 } else { 1.0 };
        (t.sign * fv, t.sign * chain * dfv)
    }

    fn big_f_direct_complex(&self, z: Complex64) -> (Complex64, Complex64) {
        let t = self.transform;
        let arg = if t.reflect { -z } else { z };
        let (fv, dfv) = self.spec.big_f_complex(arg);
        let chain = if t.reflect { -1.0 } else { 1.0 };
        (fv * t.sign, dfv * (t.sign * chain))
    }

    pub fn a_direct(&self, z: f64) -> f64 {
        let (fv, _) = self.big_f_direct(z);
        1.0 + z.powi(2 * self.p as i32) * fv * fv
    }

    pub fn b_direct(&self, z: f64) -> f64 {
        let (fv, dfv) = self.big_f_direct(z);
        2.0 * z * dfv + 2.0 * (self.p + 2 * self.k) as f64 * fv
    }

    fn circle_sup(&self, r: f64, h: impl Fn(Complex64, Complex64, Complex64) -> f64) -> f64 {
        (0..CIRCLE_SAMPLES)
            .map(|i| {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * i as f64 / CIRCLE_SAMPLES as f64);
                let (fv, dfv) = self.big_f_direct_complex(z);
                h(z, fv, dfv)
            })
            .fold(0.0, f64::max)
    }

    /// `sup_{|z|≤r} |A(z) − 1|`, sampled on the circle `|z| = r`.
    pub fn a_deviation(&self, r: f64) -> f64 {
        let two_p = 2 * self.p as i32;
        self.circle_sup(r, |z, fv, _| (z.powi(two_p) * fv * fv).norm())
    }

    /// `sup_{|z|≤r} |B(z)|`, sampled on the circle `|z| = r`.
    pub fn b_sup(&self, r: f64) -> f64 {
        let c = 2.0 * (self.p + 2 * self.k) as f64;
        self.circle_sup(r, |z, fv, dfv| (z * dfv * 2.0 + fv * c).norm())
    }

    /// Contraction constants on the disc of radius `r`, or `None` when
    /// `2k·c₀ ≥ 1` there.
    pub fn bounds_at(&self, r: f64) -> Option<ContractionBounds> {
        let k = self.k as f64;
        let c0 = self.a_deviation(r);
        if 2.0 * k * c0 >= 1.0 {
            return None;
        }
        let m_bound = self.b_sup(r);
        let mu = 0.5 * (1.0 - 2.0 * k * c0);
        let p = self.p as f64;
        let delta0 = if m_bound == 0.0 {
            r
        } else {
            let first = mu / ((2.0 / 3.0) * (2.0 * k * (1.0 + c0) + mu).sqrt() * m_bound);
            let second = 3.0 * (1.0 - 2.0 * k * c0 - mu).sqrt() / m_bound;
            // Both inequalities are strict.
            (0.999 * first.min(second).powf(1.0 / p)).min(r)
        };
        Some(ContractionBounds {
            r,
            c0,
            m_bound,
            mu,
            delta0,
        })
    }

    /// Best contraction constants over discs of radius up to `radius_r`.
    pub fn contraction_bounds(&self) -> Option<ContractionBounds> {
        (1..=40)
            .filter_map(|i| self.bounds_at(self.radius_r * i as f64 / 40.0))
            .fold(None, |best: Option<ContractionBounds>, b| match best {
                Some(x) if x.delta0 >= b.delta0 => Some(x),
                _ => Some(b),
            })
    }

    /// Point `w = z^{l+1}F(z)` on the transversal.
    pub fn transversal_w(&self, z: f64) -> Result<f64> {
        if !(z.abs() <= self.radius_r) {
            return Err(Error::OutOfRadius {
                z: z.abs(),
                radius: self.radius_r,
            });
        }
        let (fv, _) = self.spec.big_f_at(z);
        Ok(z.powi(self.l as i32 + 1) * fv)
    }
}
