//! Independent check of the series: integrate the field numerically to the
//! first return and compare.
//!
//! The main oracle integrates `ẋ = −2y`, `ẏ = 2k x^{2k−1}A(εx) + εᵖ y x^{p+k−1}B(εx)`
//! from `(1, 0)`; in these coordinates the transversal is the positive x-axis
//! and the return point is `z = ε·x`. `A` and `B` are evaluated from `f` and
//! `g` directly, not from their series. A second oracle integrates the
//! original `(z, w)` system and detects the curved transversal.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorEntry, Result};
use crate::ode::{locate_root, DenseStep, Stepper, Tolerances};
use crate::retmap::{return_map_for, ReturnMapResult};
use crate::sysnorm::{normalize, NormalizedSystem, SystemSpec, DEFAULT_WORKING_ORDER};
use crate::vsolver::solve_v;

pub const DEFAULT_TOL: f64 = 1e-13;
pub const MIN_TOL: f64 = 1e-13;
pub const MAX_TOL: f64 = 1e-6;
/// Half-width of the box the rescaled orbit must stay in.
pub const ORBIT_BOX: f64 = 2.0;
/// Largest admissible first-order correction `|Z_{p+1}|εᵖ`.
pub const FIRST_ORDER_GATE: f64 = 0.2;
/// Default ε grid, geometric from 0.02 to 0.08.
pub const DEFAULT_EPSILONS: [f64; 4] = [0.02, 0.02 * 1.587_401_051_968_199_4, 0.02 * 2.519_842_099_789_746_4, 0.08];
/// Truncation order of v used for the fixed-point check.
pub const FIXED_POINT_ORDER: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCrossing {
    pub z_return: f64,
    pub x_return: f64,
    pub t_return: f64,
    pub n_steps: usize,
    pub err_estimate: f64,
    pub half_turns: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::InvalidInput(format!("tol must lie in [{MIN_TOL:e}, {MAX_TOL:e}], got {tol:e}")));
    }
    Ok(())
}

/// `0.5·radius_r`.
pub fn eps_max(ns: &NormalizedSystem) -> f64 {
    0.5 * ns.radius_r
}

fn check_eps(ns: &NormalizedSystem, eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
    }
    if eps > eps_max(ns) {
        return Err(Error::OutOfRadius {
            z: eps,
            radius: eps_max(ns),
        });
    }
    Ok(())
}

struct Run {
    x: f64,
    t: f64,
    steps: usize,
    half_turns: u32,
}

/// Drives `stepper` until `event` crosses zero upward at `accept(u) == true`.
/// Other crossings of `event` count as half turns.
fn run_to_return<F>(
    stepper: &mut Stepper<F, 2>,
    event: impl Fn(&[f64; 2]) -> f64,
    event_rate: impl Fn(f64, &[f64; 2]) -> f64,
    accept: impl Fn(&[f64; 2]) -> bool,
    in_box: impl Fn(&[f64; 2]) -> bool,
    tol: f64,
) -> Result<([f64; 2], f64, u32)>
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
{
    let mut half_turns = 0;
    loop {
        let s: DenseStep<2> = stepper.step()?;
        if !in_box(&s.y1) {
            return Err(Error::NoReturnDetected(format!(
                "orbit left the validated box at t = {:.6e}",
                s.t1
            )));
        }
        let (a, b) = (event(&s.y0), event(&s.y1));
        let up = a < 0.0 && b >= 0.0;
        let down = a > 0.0 && b <= 0.0;
        if !(up || down) {
            continue;
        }
        let t = locate_root(&s, &event, |t, u| event_rate(t, u), tol);
        let u = stepper.restep(&s, t);
        half_turns += 1;
        if up && accept(&u) {
            return Ok((u, t, half_turns));
        }
    }
}

fn rescaled_return(ns: &NormalizedSystem, eps: f64, tol: f64) -> Result<Run> {
    let k = ns.k as i32;
    let p = ns.p as i32;
    let eps_p = eps.powi(p);
    let rhs = |_t: f64, u: &[f64; 2]| {
        let (x, y) = (u[0], u[1]);
        let z = eps * x;
        [
            -2.0 * y,
            2.0 * k as f64 * x.powi(2 * k - 1) * ns.a_direct(z) + eps_p * y * x.powi(p + k - 1) * ns.b_direct(z),
        ]
    };
    let mut stepper = Stepper::new(rhs, 0.0, [1.0, 0.0], 1e-3, Tolerances::uniform(tol / 10.0));
    let (u, t, half_turns) = run_to_return(
        &mut stepper,
        |u| u[1],
        |t, u| rhs(t, u)[1],
        |u| u[0] > 0.0,
        |u| u[0].abs() <= ORBIT_BOX && u[1].abs() <= ORBIT_BOX,
        tol * 1e-3,
    )?;
    Ok(Run {
        x: u[0],
        t,
        steps: stepper.steps(),
        half_turns,
    })
}

fn crossing(eps: f64, fine: Run, coarse: Run, scale: f64) -> OrbitCrossing {
    OrbitCrossing {
        z_return: scale * fine.x,
        x_return: fine.x / (scale / eps),
        t_return: fine.t,
        n_steps: fine.steps,
        err_estimate: scale * (fine.x - coarse.x).abs(),
        half_turns: fine.half_turns,
    }
}

/// First return of the orbit through `(z, w₁) = (ε, 0)`, from the rescaled system.
///
/// `err_estimate` is the change in `z_return` when the tolerance is loosened tenfold.
pub fn numeric_return(spec: &SystemSpec, eps: f64, tol: f64) -> Result<OrbitCrossing> {
    let ns = normalize(spec, DEFAULT_WORKING_ORDER)?;
    numeric_return_for(&ns, eps, tol)
}

pub fn numeric_return_for(ns: &NormalizedSystem, eps: f64, tol: f64) -> Result<OrbitCrossing> {
    check_tol(tol)?;
    check_eps(ns, eps)?;
    let fine = rescaled_return(ns, eps, tol)?;
    let coarse = rescaled_return(ns, eps, 10.0 * tol)?;
    Ok(crossing(eps, fine, coarse, eps))
}

fn original_return(spec: &SystemSpec, eps: f64, tol: f64) -> Result<Run> {
    let (k, l) = (spec.k as i32, spec.l as i32);
    let rhs = |_t: f64, u: &[f64; 2]| {
        let (z, w) = (u[0], u[1]);
        let (f, g) = (spec.f_at(z), spec.g_at(z));
        [
            -w * f + z.powi(l + 1) * g,
            k as f64 * z.powi(2 * k - 1) * f + k as f64 * w * z.powi(l) * g,
        ]
    };
    let w1 = |u: &[f64; 2]| u[1] - u[0].powi(l + 1) * spec.big_f_at(u[0]).0;
    let w1_rate = |t: f64, u: &[f64; 2]| {
        let d = rhs(t, u);
        let (fv, dfv) = spec.big_f_at(u[0]);
        let z = u[0];
        d[1] - ((l + 1) as f64 * z.powi(l) * fv + z.powi(l + 1) * dfv) * d[0]
    };
    let w_scale = eps.powi(k);
    let direction = spec.f[0].signum();
    let tolerances = Tolerances {
        rtol: tol / 10.0,
        atol: [tol * eps / 10.0, tol * w_scale / 10.0],
        max_steps: 1_000_000,
    };
    let w0 = eps.powi(l + 1) * spec.big_f_at(eps).0;
    let h0 = direction * 1e-3 * eps.powi(1 - k);
    let mut stepper = Stepper::new(rhs, 0.0, [eps, w0], h0, tolerances);
    let (u, t, half_turns) = run_to_return(
        &mut stepper,
        w1,
        w1_rate,
        |u| u[0] > 0.0,
        |u| u[0].abs() <= ORBIT_BOX * eps && w1(u).abs() <= ORBIT_BOX * w_scale,
        tol * 1e-3 * w_scale,
    )?;
    Ok(Run {
        x: u[0],
        t,
        steps: stepper.steps(),
        half_turns,
    })
}

/// First return computed in the original `(z, w)` coordinates, detecting the
/// transversal `w = z^{l+1}F(z)` directly.
pub fn numeric_return_original(spec: &SystemSpec, eps: f64, tol: f64) -> Result<OrbitCrossing> {
    let ns = normalize(spec, DEFAULT_WORKING_ORDER)?;
    check_tol(tol)?;
    check_eps(&ns, eps)?;
    let fine = original_return(spec, eps, tol)?;
    let coarse = original_return(spec, eps, 10.0 * tol)?;
    Ok(crossing(eps, fine, coarse, 1.0))
}

/// Height `y` where the rescaled orbit from `(1, 0)` first reaches `x = 0`.
pub fn numeric_axis_height(spec: &SystemSpec, eps: f64, tol: f64) -> Result<f64> {
    let ns = normalize(spec, DEFAULT_WORKING_ORDER)?;
    check_tol(tol)?;
    check_eps(&ns, eps)?;
    let (k, p) = (ns.k as i32, ns.p as i32);
    let eps_p = eps.powi(p);
    let rhs = |_t: f64, u: &[f64; 2]| {
        let (x, y) = (u[0], u[1]);
        let z = eps * x;
        [
            -2.0 * y,
            2.0 * k as f64 * x.powi(2 * k - 1) * ns.a_direct(z) + eps_p * y * x.powi(p + k - 1) * ns.b_direct(z),
        ]
    };
    let mut stepper = Stepper::new(rhs, 0.0, [1.0, 0.0], 1e-3, Tolerances::uniform(tol / 10.0));
    // x decreases through zero, so track −x upward.
    let (u, _, _) = run_to_return(
        &mut stepper,
        |u| -u[0],
        |_, u| 2.0 * u[1],
        |_| true,
        |u| u[0].abs() <= ORBIT_BOX && u[1].abs() <= ORBIT_BOX,
        tol * 1e-3,
    )?;
    Ok(u[1])
}

/// Least-squares line through `(ln ε, ln |residual|)` at the default noise floor.
pub fn order_fit(samples: &[(f64, f64)]) -> Result<FitResult> {
    order_fit_with_floor(samples, 10.0 * DEFAULT_TOL)
}

/// As [`order_fit`], dropping samples whose residual is within `floor`.
/// Fails when fewer than three samples remain.
pub fn order_fit_with_floor(samples: &[(f64, f64)], floor: f64) -> Result<FitResult> {
    fit_above(samples, floor, |_| floor)
}

/// As [`order_fit_with_floor`] with a floor of `floor_per_eps·ε`, for
/// residuals measured in `z = εx` when the integrator tolerance applies to `x`.
pub fn order_fit_scaled(samples: &[(f64, f64)], floor_per_eps: f64) -> Result<FitResult> {
    fit_above(samples, floor_per_eps, |e| floor_per_eps * e)
}

fn fit_above(samples: &[(f64, f64)], reported_floor: f64, floor_at: impl Fn(f64) -> f64) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput(format!("order fit needs at least 3 samples, got {}", samples.len())));
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(e, r)| *e > 0.0 && r.abs() > floor_at(*e))
        .map(|(e, r)| (e.ln(), r.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::ResidualBelowNoiseFloor { floor: reported_floor });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("order fit needs distinct epsilons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        samples: pts.len(),
    })
}

/// Estimates `Zₙ` from numeric returns `(ε, z)` by fitting
/// `(z − ε)/εⁿ ≈ c₀ + c₁ε + … + c_m εᵐ` and returning `c₀`.
pub fn fit_coefficient(samples: &[(f64, f64)], n: u32, extra_terms: usize) -> Result<f64> {
    let cols = extra_terms + 1;
    if samples.len() < cols {
        return Err(Error::InvalidInput(format!("need at least {cols} samples, got {}", samples.len())));
    }
    let a = DMatrix::from_fn(samples.len(), cols, |i, j| samples[i].0.powi(j as i32));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|(e, z)| (z - e) / e.powi(n as i32)));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("coefficient fit failed: {e}")))?;
    Ok(coef[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Allowed shortfall of the fitted slope below `order + 1`.
    pub slope_margin: f64,
    pub fixed_point: f64,
    pub closed_form: f64,
    /// Bound on residuals when they all sit at the noise floor.
    pub absolute_residual: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            slope_margin: 0.2,
            fixed_point: 1e-8,
            closed_form: 1e-8,
            absolute_residual: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsSample {
    pub eps: f64,
    pub z_series: f64,
    pub z_numeric: Option<f64>,
    pub residual: Option<f64>,
    pub err_estimate: Option<f64>,
    pub half_turns: Option<u32>,
    pub error: Option<ErrorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub order: usize,
    pub tol: f64,
    pub samples: Vec<EpsSample>,
    pub fit: Option<FitResult>,
    pub expected_slope: f64,
    pub fixed_point_deltas: Vec<f64>,
    pub fixed_point_residual: Option<f64>,
    /// `Z_{p+1}` and, when the order reaches it, `Z_{p+2}`.
    pub series_leading: Vec<f64>,
    pub closed_form_leading: Option<(f64, f64)>,
    pub checks: Vec<Check>,
    pub errors: Vec<ErrorEntry>,
    pub pass: bool,
}

impl VerificationReport {
    fn empty(order: usize, tol: f64) -> Self {
        Self {
            order,
            tol,
            samples: Vec::new(),
            fit: None,
            expected_slope: (order + 1) as f64,
            fixed_point_deltas: Vec::new(),
            fixed_point_residual: None,
            series_leading: Vec::new(),
            closed_form_leading: None,
            checks: Vec::new(),
            errors: Vec::new(),
            pass: false,
        }
    }
}

/// δ samples for the fixed-point check: `{±0.04, ±0.08}`, shrunk to
/// `{±δ₀/2, ±δ₀}` when δ₀ < 0.08.
pub fn fixed_point_deltas(ns: &NormalizedSystem) -> Option<Vec<f64>> {
    let b = ns.contraction_bounds()?;
    let top = b.delta0.min(0.08);
    Some(vec![-top, -0.5 * top, 0.5 * top, top])
}

fn sample_at(ns: &NormalizedSystem, res: &ReturnMapResult, eps: f64, tol: f64) -> EpsSample {
    let z_series = res.eval(eps);
    let mut out = EpsSample {
        eps,
        z_series,
        z_numeric: None,
        residual: None,
        err_estimate: None,
        half_turns: None,
        error: None,
    };
    if let Err(e) = check_eps(ns, eps) {
        out.error = Some(ErrorEntry::new("oracle", &e));
        return out;
    }
    let p = ns.p as usize;
    let first_order = res.coeffs().get(p + 1).copied().unwrap_or(0.0).abs() * eps.powi(p as i32);
    if first_order > FIRST_ORDER_GATE {
        out.error = Some(ErrorEntry::new(
            "oracle",
            &Error::InvalidInput(format!(
                "first-order correction {first_order:.3e} exceeds {FIRST_ORDER_GATE} at epsilon {eps}"
            )),
        ));
        return out;
    }
    match numeric_return_for(ns, eps, tol) {
        Ok(c) => {
            out.z_numeric = Some(c.z_return);
            out.residual = Some((c.z_return - z_series).abs());
            out.err_estimate = Some(c.err_estimate);
            out.half_turns = Some(c.half_turns);
            if c.half_turns != 2 {
                out.error = Some(ErrorEntry::new(
                    "oracle",
                    &Error::NoReturnDetected(format!("{} half turns before the return", c.half_turns)),
                ));
            }
        }
        Err(e) => out.error = Some(ErrorEntry::new("oracle", &e)),
    }
    out
}

/// Runs the series and the oracle side by side with default thresholds.
pub fn verify(spec: &SystemSpec, order: usize, eps_list: &[f64]) -> VerificationReport {
    verify_with(spec, order, eps_list, DEFAULT_TOL, &Thresholds::default())
}

/// Series versus oracle at each ε, remainder-order fit, fixed-point residual
/// and closed-form comparison. Errors are recorded per item.
pub fn verify_with(spec: &SystemSpec, order: usize, eps_list: &[f64], tol: f64, th: &Thresholds) -> VerificationReport {
    let mut report = VerificationReport::empty(order, tol);
    let ns = match normalize(spec, order.max(DEFAULT_WORKING_ORDER).max(FIXED_POINT_ORDER)) {
        Ok(ns) => ns,
        Err(e) => {
            report.errors.push(ErrorEntry::new("normalize", &e));
            return report;
        }
    };
    if let Err(e) = check_tol(tol) {
        report.errors.push(ErrorEntry::new("oracle", &e));
        return report;
    }
    let res = match return_map_for(&ns, order) {
        Ok(r) => r,
        Err(e) => {
            report.errors.push(ErrorEntry::new("retmap", &e));
            return report;
        }
    };

    report.samples = std::thread::scope(|scope| {
        let handles: Vec<_> = eps_list
            .iter()
            .map(|&eps| {
                let (ns, res) = (&ns, &res);
                scope.spawn(move || sample_at(ns, res, eps, tol))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle thread panicked")).collect()
    });
    for s in &report.samples {
        if let Some(e) = &s.error {
            report.errors.push(e.clone());
        }
    }

    let residuals: Vec<(f64, f64)> = report
        .samples
        .iter()
        .filter_map(|s| s.residual.map(|r| (s.eps, r)))
        .collect();
    let slope_target = report.expected_slope - th.slope_margin;
    match order_fit_scaled(&residuals, 10.0 * tol) {
        Ok(fit) => {
            report.fit = Some(fit);
            report.checks.push(Check {
                name: "remainder_order".into(),
                pass: fit.slope >= slope_target,
                value: Some(fit.slope),
                threshold: Some(slope_target),
                detail: format!("log-log slope over {} samples, r^2 = {:.6}", fit.samples, fit.r_squared),
            });
        }
        Err(Error::ResidualBelowNoiseFloor { .. }) => {
            let worst = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
            report.checks.push(Check {
                name: "remainder_order".into(),
                pass: residuals.len() >= 3 && worst <= th.absolute_residual,
                value: Some(worst),
                threshold: Some(th.absolute_residual),
                detail: "residuals at the noise floor; absolute bound applied".into(),
            });
        }
        Err(e) => {
            report.errors.push(ErrorEntry::new("fit", &e));
            report.checks.push(Check {
                name: "remainder_order".into(),
                pass: false,
                value: None,
                threshold: Some(slope_target),
                detail: e.to_string(),
            });
        }
    }

    match fixed_point_deltas(&ns) {
        Some(deltas) => {
            report.fixed_point_deltas = deltas.clone();
            let fp_order = FIXED_POINT_ORDER.max(ns.p as usize);
            match solve_v(&ns, fp_order).and_then(|vs| vs.fixed_point_residual(&deltas)) {
                Ok(r) => {
                    report.fixed_point_residual = Some(r);
                    report.checks.push(Check {
                        name: "fixed_point".into(),
                        pass: r <= th.fixed_point,
                        value: Some(r),
                        threshold: Some(th.fixed_point),
                        detail: format!("sup |v - J[v]| at truncation order {fp_order}"),
                    });
                }
                Err(e) => {
                    report.errors.push(ErrorEntry::new("vsolver", &e));
                    report.checks.push(Check {
                        name: "fixed_point".into(),
                        pass: false,
                        value: None,
                        threshold: Some(th.fixed_point),
                        detail: e.to_string(),
                    });
                }
            }
        }
        None => report.checks.push(Check {
            name: "fixed_point".into(),
            pass: false,
            value: None,
            threshold: Some(th.fixed_point),
            detail: "no disc with 2k*c0 < 1 inside the radius".into(),
        }),
    }

    let p = ns.p as usize;
    let cf = res.leading_closed_form;
    report.closed_form_leading = Some(cf);
    let z = res.coeffs();
    let second = z.get(p + 2).copied();
    report.series_leading = std::iter::once(z[p + 1]).chain(second).collect();
    let mut gap = (z[p + 1] - cf.0).abs();
    if let Some(z2) = second {
        gap = gap.max((z2 - cf.1).abs());
    }
    report.checks.push(Check {
        name: "closed_form".into(),
        pass: gap <= th.closed_form,
        value: Some(gap),
        threshold: Some(th.closed_form),
        detail: "leading coefficients against their closed forms".into(),
    });

    report.pass = report.errors.is_empty() && report.checks.iter().all(|c| c.pass);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spec(f: &[f64], g: &[f64], k: u32, l: u32) -> SystemSpec {
        SystemSpec::new(f.to_vec(), g.to_vec(), k, l)
    }

    #[test]
    fn hamiltonian_orbit_closes() {
        let c = numeric_return(&spec(&[1.0], &[0.0], 1, 2), 0.1, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(c.z_return, 0.1, epsilon = 1e-10);
        assert_eq!(c.half_turns, 2);
        assert_abs_diff_eq!(c.t_return, PI, epsilon = 1e-9);
    }

    #[test]
    fn constant_field_return() {
        let eps = 0.05;
        let c = numeric_return(&spec(&[1.0], &[1.0], 1, 2), eps, DEFAULT_TOL).unwrap();
        let lead = PI * eps.powi(3);
        assert!(((c.z_return - eps) - lead).abs() <= 0.05 * lead);
        assert!(c.err_estimate < 1e-11);
    }

    #[test]
    fn original_coordinates_agree() {
        for s in [spec(&[1.0], &[1.0], 1, 2), spec(&[2.0, 0.5], &[1.0, -1.0], 2, 2), spec(&[-1.0, 0.3], &[0.5, 1.0], 1, 1)] {
            let a = numeric_return(&s, 0.05, DEFAULT_TOL).unwrap();
            let b = numeric_return_original(&s, 0.05, DEFAULT_TOL).unwrap();
            assert_eq!(b.half_turns, 2);
            assert_abs_diff_eq!(a.z_return, b.z_return, epsilon = 1e-11);
        }
    }

    #[test]
    fn tolerance_and_radius_checks() {
        let s = spec(&[1.0], &[1.0], 1, 2);
        assert!(matches!(numeric_return(&s, 0.05, 1e-3), Err(Error::InvalidInput(_))));
        assert!(matches!(numeric_return(&s, 5.0, 1e-10), Err(Error::OutOfRadius { .. })));
        assert!(matches!(numeric_return(&s, -0.1, 1e-10), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn exact_power_law_fit() {
        let samples: Vec<(f64, f64)> = [0.02f64, 0.03, 0.05, 0.08].iter().map(|&e| (e, 3.0 * e.powi(4))).collect();
        let fit = order_fit(&samples).unwrap();
        assert_abs_diff_eq!(fit.slope, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-10);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_floor_fit() {
        let samples = [(0.02, 1e-14), (0.04, 0.0), (0.08, 5e-13)];
        assert!(matches!(order_fit(&samples), Err(Error::ResidualBelowNoiseFloor { .. })));
        assert!(matches!(order_fit(&samples[..2]), Err(Error::InvalidInput(_))));
        let scaled = [(0.02, 1e-13), (0.04, 8e-13), (0.08, 6.4e-12)];
        assert!(order_fit(&scaled).is_err());
        assert_abs_diff_eq!(order_fit_scaled(&scaled, 1e-12).unwrap().slope, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn coefficient_fit_recovers_polynomial() {
        let samples: Vec<(f64, f64)> = [0.02f64, 0.03, 0.05, 0.08]
            .iter()
            .map(|&e| (e, e + 2.5 * e.powi(3) - 1.0 * e.powi(4) + 7.0 * e.powi(5)))
            .collect();
        assert_abs_diff_eq!(fit_coefficient(&samples, 3, 2).unwrap(), 2.5, epsilon = 1e-9);
    }

    #[test]
    fn axis_height_matches_branch_formula() {
        let s = spec(&[1.0], &[1.0], 1, 2);
        let ns = normalize(&s, 8).unwrap();
        let vs = solve_v(&ns, 8).unwrap();
        let y_series = vs.eval_phi_solution(0.0, 0.05, 1.0).unwrap();
        let y_num = numeric_axis_height(&s, 0.05, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(y_series, y_num, epsilon = 1e-6);
    }

    #[test]
    fn unperturbed_flow_returns_for_every_k() {
        for k in 1..=4 {
            let c = numeric_return(&spec(&[1.0], &[0.0], k, k), 0.1, DEFAULT_TOL).unwrap();
            assert_abs_diff_eq!(c.x_return, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn verify_hamiltonian_and_invalid() {
        let r = verify(&spec(&[1.0], &[0.0], 1, 2), 6, &DEFAULT_EPSILONS);
        assert!(r.pass, "{r:#?}");
        let r = verify(&spec(&[1.0], &[1.0], 2, 1), 6, &DEFAULT_EPSILONS);
        assert!(!r.pass);
        assert_eq!(r.errors[0].code, "k_equals_l_plus_1");
        assert!(r.samples.is_empty());
    }

    #[test]
    fn verify_constant_field() {
        let r = verify(&spec(&[1.0], &[1.0], 1, 2), 4, &DEFAULT_EPSILONS);
        assert!(r.pass, "{r:#?}");
        assert!(r.fit.unwrap().slope >= 4.8);
    }
}
