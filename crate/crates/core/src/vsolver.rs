//! The correction `v(ξ;δ) = Σ_{n≥p} δⁿvₙ(ξ)` to the profile, solved order by
//! order from `vₙ = W[Rₙ₋ₚ]`, where `Σ δⁿRₙ = (P+v)^{1/2}·B(δ(1−ξ²))` and `W`
//! is [`weighted_cumulative`].

use crate::error::{Error, Result};
use crate::profile::{p_direct, p_series, weighted_cumulative};
use crate::quadrature::Integrator;
use crate::series::{apply_function_series, CoeffSeries};
use crate::sysnorm::NormalizedSystem;
use crate::xi::XiFunction;

/// Floor for square roots and reciprocals of the leading coefficient `P₀ ≥ 1`.
pub const SQRT_FLOOR: f64 = 1e-6;
const RESIDUAL_GRID: usize = 16;

#[derive(Clone, Debug)]
pub struct VSolution {
    pub sys: NormalizedSystem,
    pub order: usize,
    pub v: CoeffSeries<XiFunction>,
    pub pser: CoeffSeries<XiFunction>,
}

pub fn solve_v(ns: &NormalizedSystem, order: usize) -> Result<VSolution> {
    let p = ns.p as usize;
    if order < p {
        return Err(Error::OrderTooLow { order, minimum: p });
    }
    if order > ns.working_order() {
        return Err(Error::OrderTooHigh {
            order,
            available: ns.working_order(),
        });
    }
    let pser = p_series(ns, order)?;
    let one_minus_sq = XiFunction::from_fn(|xi| 1.0 - xi * xi)?;
    let bw = apply_function_series(&ns.b_series.truncate(order - p), &one_minus_sq);

    let mut v = vec![XiFunction::zero(); order + 1];
    // Coefficients of (P + v)^{1/2}, extended as the vⱼ become known.
    let mut root: Vec<XiFunction> = vec![pser.coeff(0).sqrt(SQRT_FLOOR)?];
    let inv_two_root0 = root[0].scale(2.0).recip(SQRT_FLOOR)?;
    for n in p..=order {
        let m = n - p;
        while root.len() <= m {
            let j = root.len();
            let mut acc = pser.coeff(j).add(&v[j]);
            for i in 1..j {
                acc = acc.sub(&root[i].mul(&root[j - i]));
            }
            root.push(acc.mul(&inv_two_root0));
        }
        let mut r = XiFunction::zero();
        for i in 0..=m {
            let b = bw.coeff(m - i);
            if ns.b_series.coeff(m - i) != &0.0 && root[i].sup_norm() != 0.0 {
                r = r.add(&root[i].mul(b));
            }
        }
        v[n] = weighted_cumulative(&r, ns.p, ns.k)?;
    }
    Ok(VSolution {
        sys: ns.clone(),
        order,
        v: CoeffSeries::new(v),
        pser,
    })
}

fn horner_xi(coeffs: &[XiFunction], xi: f64, delta: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * delta + c.eval(xi))
}

impl VSolution {
    /// Truncated `v(ξ;δ)`.
    pub fn eval(&self, xi: f64, delta: f64) -> f64 {
        horner_xi(self.v.coeffs(), xi, delta)
    }

    /// Truncated `P(ξ;δ)` from the series.
    pub fn eval_p(&self, xi: f64, delta: f64) -> f64 {
        horner_xi(self.pser.coeffs(), xi, delta)
    }

    /// `vₙ(1)` for n = 0..=order.
    pub fn v_at_one(&self) -> CoeffSeries<f64> {
        self.v.map(|c| c.eval(1.0))
    }

    /// Largest `|v(ξ;δ)|` over a uniform ξ-grid.
    pub fn sup_abs(&self, delta: f64) -> f64 {
        (0..=4 * RESIDUAL_GRID)
            .map(|i| self.eval(i as f64 / (4 * RESIDUAL_GRID) as f64, delta).abs())
            .fold(0.0, f64::max)
    }

    fn check_radius(&self, delta: f64) -> Result<()> {
        if delta.abs() > self.sys.radius_r || !delta.is_finite() {
            return Err(Error::OutOfRadius {
                z: delta.abs(),
                radius: self.sys.radius_r,
            });
        }
        Ok(())
    }

    /// `J[v](ξ;δ)` by direct quadrature, with `P`, `B` evaluated from the field.
    pub fn apply_operator(&self, xi: f64, delta: f64, quad: &Integrator) -> Result<f64> {
        let ns = &self.sys;
        if xi == 0.0 {
            return Ok(0.0);
        }
        let e = (ns.p + ns.k - 1) as i32;
        let x2 = xi * xi;
        let failure = std::cell::Cell::new(None);
        let integral = quad.integrate(
            |s| {
                let t = xi * s;
                let bracket = match p_direct(ns, t, delta, quad) {
                    Ok(pv) => pv + self.eval(t, delta),
                    Err(e) => {
                        failure.set(Some(e));
                        return 0.0;
                    }
                };
                if !(bracket > 0.0) {
                    failure.set(Some(Error::NegativeBracket(bracket)));
                    return 0.0;
                }
                let sigma = 1.0 - x2 * s * s;
                s * s * sigma.powi(e) * bracket.sqrt() * ns.b_direct(delta * sigma)
            },
            0.0,
            1.0,
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(2.0 * delta.powi(ns.p as i32) * xi * integral)
    }

    /// `sup |v − J[v]|` over `deltas` and a uniform ξ-grid.
    pub fn fixed_point_residual(&self, deltas: &[f64]) -> Result<f64> {
        let quad = Integrator::new(1e-16, 1e-14);
        let mut worst = 0.0f64;
        for &delta in deltas {
            self.check_radius(delta)?;
            for i in 0..=RESIDUAL_GRID {
                let xi = i as f64 / RESIDUAL_GRID as f64;
                let jv = self.apply_operator(xi, delta, &quad)?;
                worst = worst.max((self.eval(xi, delta) - jv).abs());
            }
        }
        Ok(worst)
    }

    /// The orbit branch `y = (η−x)^{1/2}η^{k−1/2}[P(ξ;εη) + v(ξ;εη)]^{1/2}`,
    /// `ξ = (1 − x/η)^{1/2}`, for `0 ≤ x ≤ η`.
    pub fn eval_phi_solution(&self, x: f64, eps: f64, eta: f64) -> Result<f64> {
        if !(eta > 0.0) || !(0.0..=eta).contains(&x) {
            return Err(Error::InvalidInput(format!("need 0 <= x <= eta, got x = {x}, eta = {eta}")));
        }
        let delta = eps * eta;
        self.check_radius(delta)?;
        let xi = (1.0 - x / eta).max(0.0).sqrt();
        let quad = Integrator::new(1e-15, 1e-14);
        let bracket = p_direct(&self.sys, xi, delta, &quad)? + self.eval(xi, delta);
        if !(bracket > 0.0) {
            return Err(Error::NegativeBracket(bracket));
        }
        let k = self.sys.k as f64;
        Ok((eta - x).sqrt() * eta.powf(k - 0.5) * bracket.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{phi, psi};
    use crate::sysnorm::{normalize, Quadrant, SystemSpec};
    use approx::assert_abs_diff_eq;

    fn solve(f: &[f64], g: &[f64], k: u32, l: u32, order: usize) -> VSolution {
        let ns = normalize(&SystemSpec::new(f.to_vec(), g.to_vec(), k, l), order.max(8)).unwrap();
        solve_v(&ns, order).unwrap()
    }

    fn grid() -> impl Iterator<Item = f64> {
        (0..=10).map(|i| i as f64 / 10.0)
    }

    #[test]
    fn order_checks() {
        let ns = normalize(&SystemSpec::new(vec![1.0], vec![1.0], 1, 3), 8).unwrap();
        assert_eq!(solve_v(&ns, 2).unwrap_err(), Error::OrderTooLow { order: 2, minimum: 3 });
        assert!(matches!(solve_v(&ns, 9), Err(Error::OrderTooHigh { .. })));
    }

    #[test]
    fn hamiltonian_gives_zero() {
        let vs = solve(&[1.0], &[0.0], 1, 2, 6);
        assert!(vs.v.coeffs().iter().all(|c| c.sup_norm() == 0.0));
        assert_eq!(vs.fixed_point_residual(&[0.05]).unwrap(), 0.0);
    }

    #[test]
    fn structural_zeros() {
        let vs = solve(&[1.0, 0.2], &[0.7, -0.4], 2, 4, 7);
        for n in 0..3 {
            assert_eq!(vs.v.coeff(n).sup_norm(), 0.0);
        }
        for c in vs.v.coeffs() {
            assert_eq!(c.eval(0.0), 0.0);
        }
    }

    #[test]
    fn first_coefficient_is_b0_phi() {
        for (k, l) in [(1, 1), (1, 2), (2, 3), (3, 4)] {
            let vs = solve(&[1.0], &[1.0, 0.5], k, l, (l + 1 - k + 1) as usize);
            let p = vs.sys.p;
            for xi in grid() {
                let expect = vs.sys.b0 * phi(p, k, xi).unwrap();
                assert_abs_diff_eq!(vs.v.coeff(p as usize).eval(xi), expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn second_coefficient_uses_phi_p_plus_one() {
        // p = 2, k = 1: the δ^{p+1} coefficient is B₁Φ_{p+1,k}, not B₁Φ_{p+k+1,k}.
        let vs = solve(&[1.0], &[0.0, 1.0], 1, 2, 3);
        let (b1, p, k) = (vs.sys.b1, vs.sys.p, vs.sys.k);
        let mut off = 0.0f64;
        for xi in grid() {
            let got = vs.v.coeff(3).eval(xi);
            assert_abs_diff_eq!(got, b1 * phi(p + 1, k, xi).unwrap(), epsilon = 1e-9);
            off = off.max((got - b1 * phi(p + k + 1, k, xi).unwrap()).abs());
        }
        assert!(off > 1e-2, "subscripts indistinguishable: {off}");
        for (k, l) in [(2, 3), (3, 4), (2, 4)] {
            let vs = solve(&[1.0], &[0.3, 1.0], k, l, (l + 1 - k + 1) as usize);
            let p = vs.sys.p;
            for xi in grid() {
                let expect = vs.sys.b1 * phi(p + 1, k, xi).unwrap();
                assert_abs_diff_eq!(vs.v.coeff(p as usize + 1).eval(xi), expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn p_equals_one_picks_up_psi() {
        for k in [1, 2] {
            let vs = solve(&[1.0], &[0.6, 1.0], k, k, 2);
            let (b0, b1) = (vs.sys.b0, vs.sys.b1);
            for xi in grid() {
                let expect = b1 * phi(2, k, xi).unwrap() + 0.5 * b0 * b0 * psi(k, xi).unwrap();
                assert_abs_diff_eq!(vs.v.coeff(2).eval(xi), expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn parity_transfer_under_j2() {
        let ns = normalize(&SystemSpec::new(vec![1.0, 0.4], vec![0.5, 1.0, -0.3], 1, 2), 8).unwrap();
        let j2 = ns.quadrant_transform(Quadrant::J2);
        let mut manual = ns.clone();
        let sign = |m: usize| if (ns.p + ns.k + m as u32) % 2 == 0 { 1.0 } else { -1.0 };
        let alt = |s: &CoeffSeries<f64>| {
            CoeffSeries::new(s.coeffs().iter().enumerate().map(|(m, c)| if m % 2 == 0 { *c } else { -c }).collect())
        };
        manual.b_series = CoeffSeries::new(ns.b_series.coeffs().iter().enumerate().map(|(m, b)| sign(m) * b).collect());
        manual.f2_series = alt(&ns.f2_series);
        let order = ns.p as usize + 2;
        let a = solve_v(&j2, order).unwrap();
        let b = solve_v(&manual, order).unwrap();
        for n in 0..=order {
            for xi in grid() {
                assert_abs_diff_eq!(a.v.coeff(n).eval(xi), b.v.coeff(n).eval(xi), epsilon = 1e-13);
            }
        }
        let vp = a.v.coeff(ns.p as usize);
        let orig = solve_v(&ns, order).unwrap();
        for xi in grid() {
            assert_abs_diff_eq!(vp.eval(xi), sign(0) * orig.v.coeff(ns.p as usize).eval(xi), epsilon = 1e-13);
        }
    }

    #[test]
    fn fixed_point_residual_constant_field() {
        let vs = solve(&[1.0], &[1.0], 1, 2, 6);
        let r05 = vs.fixed_point_residual(&[0.05]).unwrap();
        assert!(r05 <= 1e-8, "{r05:e}");
        let r08 = vs.fixed_point_residual(&[0.08]).unwrap();
        let r04 = vs.fixed_point_residual(&[0.04]).unwrap();
        assert!(r08 / r04 >= 2f64.powi(7) / 2.0, "{r08:e} {r04:e}");
    }

    #[test]
    fn solution_stays_in_contraction_ball() {
        let vs = solve(&[1.0], &[1.0, 0.5], 1, 2, 6);
        let b = vs.sys.contraction_bounds().unwrap();
        for delta in [b.delta0, -b.delta0, 0.5 * b.delta0] {
            assert!(vs.sup_abs(delta) <= b.mu);
        }
    }

    #[test]
    fn unperturbed_orbit() {
        let vs = solve(&[1.0], &[0.0], 1, 2, 3);
        assert_abs_diff_eq!(vs.eval_phi_solution(0.6, 0.0, 1.0).unwrap(), 0.8, epsilon = 1e-14);
        assert_eq!(vs.eval_phi_solution(1.0, 0.05, 1.0).unwrap(), 0.0);
        let vs = solve(&[1.0], &[0.0], 2, 2, 3);
        let y = vs.eval_phi_solution(0.5, 0.0, 1.2).unwrap();
        assert_abs_diff_eq!(y, (1.2f64.powi(4) - 0.5f64.powi(4)).sqrt(), epsilon = 1e-13);
        assert!(matches!(vs.eval_phi_solution(1.5, 0.0, 1.2), Err(Error::InvalidInput(_))));
    }
}
