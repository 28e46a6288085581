//! The profile `P(ξ;δ) = 2k∫₀¹(1−ξ²s)^{2k−1}A(δ(1−ξ²s))ds`, the special
//! functions `Φ_{p,k}`, `Ψ_k` and the weighted cumulative integral that
//! produces each `vₙ` from `Rₙ₋ₚ`.

use statrs::function::beta::ln_beta;

use crate::error::Result;
use crate::quadrature::{gauss_legendre_unit, graded_toward_start, Integrator};
use crate::series::CoeffSeries;
use crate::sysnorm::NormalizedSystem;
use crate::xi::XiFunction;

/// Grading ratio used by [`psi`].
pub const DEFAULT_PSI_GRADING: f64 = 0.25;
const GRADED_LEVELS: usize = 24;

/// `Σ_{j<n}(1−u)^j`, which equals `(1 − (1−u)^n)/u` for `u ≠ 0`.
fn geometric_sum(u: f64, n: u32) -> f64 {
    let q = 1.0 - u;
    if u.abs() < 0.5 {
        (0..n).rev().fold(0.0, |acc, _| acc * q + 1.0)
    } else {
        (1.0 - q.powi(n as i32)) / u
    }
}

/// `P₀(ξ) = (1 − (1−ξ²)^{2k})/ξ²`, with limit `2k` at ξ = 0.
pub fn p0(k: u32, xi: f64) -> f64 {
    geometric_sum(xi * xi, 2 * k)
}

/// `(1 − (1−ξ²)^n)/ξ²` scaled by `2k/n`: the ξ-profile of `P_{2p+m}` with `n = 2k+2p+m`.
fn p_shape(k: u32, n: u32, xi: f64) -> f64 {
    2.0 * k as f64 / n as f64 * geometric_sum(xi * xi, n)
}

/// δ-series of `P(ξ;δ)` through `order`, coefficients as functions of ξ.
pub fn p_series(ns: &NormalizedSystem, order: usize) -> Result<CoeffSeries<XiFunction>> {
    let (k, p) = (ns.k, ns.p as usize);
    let mut coeffs = vec![XiFunction::zero(); order + 1];
    coeffs[0] = XiFunction::from_fn(|xi| p0(k, xi))?;
    for n in (2 * p)..=order {
        let m = n - 2 * p;
        let f2m = ns.f2_series.coeffs().get(m).copied().unwrap_or(0.0);
        if f2m != 0.0 {
            let deg = 2 * k + n as u32;
            coeffs[n] = XiFunction::from_fn(|xi| p_shape(k, deg, xi))?.scale(f2m);
        }
    }
    Ok(CoeffSeries::new(coeffs))
}

/// δ-series of `P(1;δ) = 1 + Σ F_{2,m}·2k/(2p+2k+m)·δ^{2p+m}`.
pub fn p_at_one_series(ns: &NormalizedSystem, order: usize) -> CoeffSeries<f64> {
    let (k, p) = (ns.k as usize, ns.p as usize);
    let mut coeffs = vec![0.0; order + 1];
    coeffs[0] = 1.0;
    for n in (2 * p)..=order {
        let m = n - 2 * p;
        let f2m = ns.f2_series.coeffs().get(m).copied().unwrap_or(0.0);
        coeffs[n] = f2m * 2.0 * k as f64 / (2 * k + n) as f64;
    }
    CoeffSeries::new(coeffs)
}

/// `P(ξ;δ)` by quadrature of its defining integral, with `A` evaluated
/// directly from `f` and `g`.
pub fn p_direct(ns: &NormalizedSystem, xi: f64, delta: f64, quad: &Integrator) -> Result<f64> {
    let k = ns.k as i32;
    let x2 = xi * xi;
    let v = quad.integrate(
        |s| {
            let sigma = 1.0 - x2 * s;
            sigma.powi(2 * k - 1) * ns.a_direct(delta * sigma)
        },
        0.0,
        1.0,
    )?;
    Ok(2.0 * k as f64 * v)
}

/// `Φ_{p,k}(1) = B((p+k)/(2k), 3/2)/(2k)`.
pub fn phi_closed_form(p: u32, k: u32) -> f64 {
    let two_k = 2.0 * k as f64;
    ln_beta((p + k) as f64 / two_k, 1.5).exp() / two_k
}

/// `Φ_{p,k}(ξ) = ξ^{−2}∫_{1−ξ²}^1 s^{p+k−1}(1−s^{2k})^{1/2}ds`.
///
/// Computed as `ξ∫₀¹(1−ξ²τ)^{p+k−1}(τ·Q(ξ²τ))^{1/2}dτ` with `Q(u) = Σ_{j<2k}(1−u)^j`,
/// on panels graded toward the square-root endpoint τ = 0.
pub fn phi(p: u32, k: u32, xi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    let x2 = xi * xi;
    let e = (p + k - 1) as i32;
    let quad = Integrator::new(1e-15, 1e-14);
    let v = quad.integrate_panels(
        |tau| {
            let u = x2 * tau;
            (1.0 - u).powi(e) * (tau * geometric_sum(u, 2 * k)).sqrt()
        },
        &graded_toward_start(0.0, 1.0, 0.25, GRADED_LEVELS),
    )?;
    Ok(xi * v)
}

/// `Ψ_k(ξ)` with the default grading.
pub fn psi(k: u32, xi: f64) -> Result<f64> {
    psi_with_grading(k, xi, DEFAULT_PSI_GRADING)
}

/// `Ψ_k(ξ) = ξ^{−2}∫_{1−ξ²}^1 s^k(1−s^{2k})^{−1/2}∫_s^1σ^k(1−σ^{2k})^{1/2}dσ ds`.
///
/// With `s = 1−ξ²τ`, `σ = 1−ω` this is
/// `∫₀¹(1−u)^k I(u)/(u·Q(u))^{1/2}dτ`, `u = ξ²τ`, `I(u) = ∫₀^u(1−ω)^k(ωQ(ω))^{1/2}dω`.
/// Both integrals are taken on panels graded geometrically with `ratio`
/// toward their singular endpoint.
pub fn psi_with_grading(k: u32, xi: f64, ratio: f64) -> Result<f64> {
    if xi == 0.0 {
        return Ok(0.0);
    }
    let x2 = xi * xi;
    let kk = k as i32;
    let inner_quad = Integrator::new(1e-16, 1e-13);
    let outer_quad = Integrator::new(1e-14, 1e-12);
    let inner = |u: f64| -> Result<f64> {
        inner_quad.integrate_panels(
            |w| (1.0 - w).powi(kk) * (w * geometric_sum(w, 2 * k)).sqrt(),
            &graded_toward_start(0.0, u, ratio, GRADED_LEVELS),
        )
    };
    let failure = std::cell::Cell::new(None);
    let v = outer_quad.integrate_panels(
        |tau| {
            let u = x2 * tau;
            if u == 0.0 {
                return 0.0;
            }
            match inner(u) {
                Ok(i) => (1.0 - u).powi(kk) * i / (u * geometric_sum(u, 2 * k)).sqrt(),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        },
        &graded_toward_start(0.0, 1.0, ratio, GRADED_LEVELS),
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `ξ ↦ 2ξ^{−2}∫₀^ξ t²(1−t²)^{p+k−1}R(t)dt`, evaluated as
/// `2ξ∫₀¹s²(1−ξ²s²)^{p+k−1}R(ξs)ds`.
///
/// `R` is a polynomial interpolant, so the s-integrand is a polynomial and a
/// Gauss–Legendre rule of matching degree integrates it exactly.
pub fn weighted_cumulative(r: &XiFunction, p: u32, k: u32) -> Result<XiFunction> {
    if r.node_values().iter().all(|v| *v == 0.0) {
        return Ok(XiFunction::zero());
    }
    let e = (p + k - 1) as i32;
    let rule = gauss_legendre_unit(2 + 2 * e as usize + r.degree());
    XiFunction::from_fn(|xi| {
        let x2 = xi * xi;
        let sum: f64 = rule
            .iter()
            .map(|(s, w)| w * s * s * (1.0 - x2 * s * s).powi(e) * r.eval(xi * s))
            .sum();
        2.0 * xi * sum
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysnorm::{normalize, SystemSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn p0_values() {
        for xi in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert_abs_diff_eq!(p0(1, xi), 2.0 - xi * xi, epsilon = 1e-15);
        }
        for k in 1..6 {
            assert_eq!(p0(k, 0.0), 2.0 * k as f64);
            assert_abs_diff_eq!(p0(k, 1.0), 1.0, epsilon = 1e-15);
        }
        // Small ξ keeps full relative precision.
        let xi = 1e-9;
        assert_abs_diff_eq!(p0(3, xi), 6.0 - 15.0 * xi * xi, epsilon = 1e-15);
    }

    #[test]
    fn p0_is_monotone_and_at_least_one() {
        for k in 1..=6 {
            let mut prev = f64::INFINITY;
            for i in 0..=200 {
                let v = p0(k, i as f64 / 200.0);
                assert!(v >= 1.0 - 1e-15 && v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn p_series_constant_field() {
        let ns = normalize(&SystemSpec::new(vec![1.0], vec![1.0], 1, 2), 8).unwrap();
        let ps = p_series(&ns, 6).unwrap();
        for n in [1, 2, 3, 5, 6] {
            assert_eq!(ps.coeff(n).sup_norm(), 0.0, "n = {n}");
        }
        for xi in [0.2f64, 0.7, 1.0] {
            let expect = (1.0 / 3.0) * (1.0 - (1.0 - xi * xi).powi(6)) / (xi * xi);
            assert_abs_diff_eq!(ps.coeff(4).eval(xi), expect, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(ps.coeff(4).eval(1.0), 1.0 / 3.0, epsilon = 1e-15);
        let at_one = p_at_one_series(&ns, 6);
        assert_eq!(at_one.coeffs(), &[1.0, 0.0, 0.0, 0.0, 1.0 / 3.0, 0.0, 0.0]);
    }

    #[test]
    fn p_series_matches_direct_quadrature() {
        let ns = normalize(&SystemSpec::new(vec![1.0, 0.3], vec![0.5, -1.0, 0.25], 2, 2), 14).unwrap();
        let ps = p_series(&ns, 14).unwrap();
        let quad = Integrator::new(1e-15, 1e-15);
        for xi in [0.0, 0.3, 0.8, 1.0] {
            for delta in [0.05, -0.1] {
                let direct = p_direct(&ns, xi, delta, &quad).unwrap();
                let series: f64 = ps
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(n, c)| c.eval(xi) * delta.powi(n as i32))
                    .sum();
                assert_abs_diff_eq!(direct, series, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn phi_known_values() {
        assert_abs_diff_eq!(phi(1, 1, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(phi(2, 1, 1.0).unwrap(), PI / 16.0, epsilon = 1e-13);
        assert_abs_diff_eq!(phi_closed_form(1, 1), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(phi_closed_form(2, 1), PI / 16.0, epsilon = 1e-14);
        assert_eq!(phi(3, 2, 0.0).unwrap(), 0.0);
        assert!(phi(3, 2, 1e-4).unwrap().abs() < 1e-3);
    }

    #[test]
    fn phi_closed_form_agrees_with_quadrature() {
        for p in 1..=6 {
            for k in 1..=6 {
                let q = phi(p, k, 1.0).unwrap();
                assert_abs_diff_eq!(q, phi_closed_form(p, k), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn phi_interior_against_substitution_form() {
        // Φ_{p,k}(ξ) = 2ξ∫₀¹ t²(1−ξ²t²)^{p+k−1} Q(ξ²t²)^{1/2} dt.
        let quad = Integrator::new(1e-15, 1e-15);
        for (p, k) in [(1, 1), (2, 3), (4, 2)] {
            for xi in [0.1, 0.5, 0.9] {
                let x2: f64 = xi * xi;
                let alt = 2.0
                    * xi
                    * quad
                        .integrate(
                            |t| {
                                let u = x2 * t * t;
                                t * t * (1.0 - u).powi((p + k - 1) as i32) * geometric_sum(u, 2 * k).sqrt()
                            },
                            0.0,
                            1.0,
                        )
                        .unwrap();
                assert_abs_diff_eq!(phi(p, k, xi).unwrap(), alt, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(1, 0.0).unwrap(), 0.0);
        for k in 1..=3 {
            for xi in [0.1, 0.5, 1.0] {
                assert!(psi(k, xi).unwrap() >= 0.0);
            }
        }
        // For k = 1 the inner integral is (1−s²)^{3/2}/3, so Ψ₁(1) = 1/12.
        assert_abs_diff_eq!(psi(1, 1.0).unwrap(), 1.0 / 12.0, epsilon = 1e-12);
        for xi in [0.2f64, 0.6] {
            let lo = 1.0 - xi * xi;
            let anti = |s: f64| (s * s / 2.0 - s.powi(4) / 4.0) / 3.0;
            assert_abs_diff_eq!(psi(1, xi).unwrap(), (anti(1.0) - anti(lo)) / (xi * xi), epsilon = 1e-12);
        }
        let a = psi_with_grading(1, 1.0, 0.25).unwrap();
        let b = psi_with_grading(1, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn weighted_cumulative_examples() {
        let zero = weighted_cumulative(&XiFunction::zero(), 2, 1).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
        let one = weighted_cumulative(&XiFunction::constant(1.0), 1, 0).unwrap();
        for xi in [0.0, 0.25, 0.6, 1.0] {
            assert_abs_diff_eq!(one.eval(xi), 2.0 * xi / 3.0, epsilon = 1e-14);
        }
        assert_eq!(one.eval(0.0), 0.0);
    }

    #[test]
    fn weighted_cumulative_reproduces_phi() {
        for (p, k) in [(1, 1), (2, 1), (3, 2), (1, 3)] {
            let r = XiFunction::from_fn(|xi| p0(k, xi).sqrt()).unwrap().scale(7.0);
            let v = weighted_cumulative(&r, p, k).unwrap();
            for i in 0..=20 {
                let xi = i as f64 / 20.0;
                assert_abs_diff_eq!(v.eval(xi), 7.0 * phi(p, k, xi).unwrap(), epsilon = 1e-9);
            }
        }
    }
}
