//! Matching of the quadrant solutions and the resulting return map
//! `Z(ε) = ε·N_{J₃F}(N_F(1, ε), ε)`.
//!
//! A branch through `(η, 0)` reaches the y-axis at height squared
//! `η^{2k}·S(εη)` with `S(δ) = P(1;δ) + v(1;δ)`. Each matching step equates
//! these heights for two quadrant systems and solves for the new `η̃`
//! order by order in ε.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{p_at_one_series, phi_closed_form};
use crate::series::CoeffSeries;
use crate::sysnorm::{normalize, ContractionBounds, NormalizedSystem, Quadrant, SystemSpec, DEFAULT_WORKING_ORDER};
use crate::vsolver::{solve_v, VSolution};

/// Classification threshold used when none is given.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-7;
/// Half-width of the admissible window for the constant term of η.
pub const ETA_WINDOW: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesRole {
    /// Starting point on the positive x-axis; constant term near 1.
    Eta,
    /// Return map; `Z₀ = 0`, `Z₁ = 1`.
    Z,
    /// Height squared on the y-axis.
    SideValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsSeries {
    pub series: CoeffSeries<f64>,
    pub role: SeriesRole,
}

impl EpsSeries {
    pub fn eta(series: CoeffSeries<f64>) -> Self {
        Self {
            series,
            role: SeriesRole::Eta,
        }
    }

    /// `η ≡ 1` through `order`.
    pub fn unit_eta(order: usize) -> Self {
        Self::eta(CoeffSeries::constant(1.0, order))
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn coeff(&self, n: usize) -> f64 {
        *self.series.coeff(n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub v_order: usize,
    pub working_order: usize,
    pub radius_r: f64,
    pub bounds: Option<ContractionBounds>,
    /// Estimated error of the assembled Zₙ.
    pub assembly_error: f64,
    /// `N_F(1, ε)` from the first matching step.
    pub first_step: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ReturnMapResult {
    pub z: EpsSeries,
    pub p: u32,
    pub k: u32,
    pub leading_closed_form: (f64, f64),
    pub diagnostics: Diagnostics,
    pub system: NormalizedSystem,
}

impl ReturnMapResult {
    pub fn order(&self) -> usize {
        self.z.order()
    }

    pub fn coeffs(&self) -> &[f64] {
        self.z.series.coeffs()
    }

    /// `Z(ε)` from the truncated series.
    pub fn eval(&self, eps: f64) -> f64 {
        self.z.series.eval(eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Focus { order: usize, sign: Sign },
    CenterCandidate { verified_up_to: usize },
}

/// `S(δ) = P(1;δ) + v(1;δ)` through the order of `vs`.
pub fn side_series(ns: &NormalizedSystem, vs: &VSolution) -> CoeffSeries<f64> {
    p_at_one_series(ns, vs.order).add(&vs.v_at_one())
}

fn side_value_from(s: &CoeffSeries<f64>, k: u32, eta: &CoeffSeries<f64>) -> Result<CoeffSeries<f64>> {
    let order = eta.order().min(s.order());
    let mut h = vec![0.0; order + 1];
    h[1..].copy_from_slice(&eta.coeffs()[..order]);
    let composed = s.truncate(order).substitute(&CoeffSeries::new(h))?;
    Ok(eta.truncate(order).powi(2 * k).mul(&composed))
}

/// ε-series of `η(ε)^{2k}·[P(1; εη(ε)) + v(1; εη(ε))]`.
pub fn side_value_series(ns: &NormalizedSystem, vs: &VSolution, eta: &EpsSeries) -> Result<EpsSeries> {
    Ok(EpsSeries {
        series: side_value_from(&side_series(ns, vs), ns.k, &eta.series)?,
        role: SeriesRole::SideValue,
    })
}

/// Solves `side_value(to, η̃) = side_value(from, η)` for `η̃` with `η̃(0) = η(0)`.
pub fn matching_step(
    ns_from: &NormalizedSystem,
    ns_to: &NormalizedSystem,
    vs_from: &VSolution,
    vs_to: &VSolution,
    eta: &EpsSeries,
) -> Result<EpsSeries> {
    let k = ns_to.k;
    let target = side_value_series(ns_from, vs_from, eta)?.series;
    let s_to = side_series(ns_to, vs_to);
    let order = target.order().min(s_to.order());
    let eta0 = eta.coeff(0);
    let jacobian = 2.0 * k as f64 * eta0.powi(2 * k as i32 - 1);
    if !(jacobian.abs() > 1e-12) {
        return Err(Error::DegenerateJacobian(jacobian));
    }
    let mut tilde = vec![0.0; order + 1];
    tilde[0] = eta0;
    for n in 1..=order {
        let trial = CoeffSeries::new(tilde[..=n].to_vec());
        let lhs = side_value_from(&s_to, k, &trial)?;
        tilde[n] = (target.coeff(n) - lhs.coeff(n)) / jacobian;
    }
    Ok(EpsSeries::eta(CoeffSeries::new(tilde)))
}

/// The first nontrivial pair `(Z_{p+1}, Z_{p+2})` in closed form.
pub fn closed_form_leading(ns: &NormalizedSystem) -> (f64, f64) {
    let (p, k) = (ns.p, ns.k);
    let two_k = 2.0 * k as f64;
    let theta = ns.theta_p;
    let c = ns.b0 * phi_closed_form(p, k) * (1.0 + theta) / two_k;
    if p >= 2 {
        let d = ns.b1 * phi_closed_form(p + 1, k) * (1.0 - theta) / two_k;
        (2.0 * c, 2.0 * d)
    } else {
        let phi1 = phi_closed_form(1, k);
        let d = ((1.0 - theta) * ns.b1 * phi_closed_form(2, k) + (1.0 + theta) / k as f64 * ns.b0 * ns.b0 * phi1 * phi1)
            / two_k;
        (2.0 * c, 2.0 * (d + c * c))
    }
}

/// The four quadrant systems F, J₂F, J₃F, J₄F.
pub fn quadrant_systems(ns: &NormalizedSystem) -> [NormalizedSystem; 4] {
    [
        ns.clone(),
        ns.quadrant_transform(Quadrant::J2),
        ns.quadrant_transform(Quadrant::J3),
        ns.quadrant_transform(Quadrant::J4),
    ]
}

/// Solves `v` for every system in parallel.
pub fn solve_all(systems: &[NormalizedSystem], order: usize) -> Result<Vec<VSolution>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = systems
            .iter()
            .map(|ns| scope.spawn(move || solve_v(ns, order)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("v-solver thread panicked"))
            .collect()
    })
}

/// Gap between the computed leading coefficients of `v` at ξ = 1 and their
/// closed forms, used to size the assembly error.
fn leading_discrepancy(vs: &VSolution) -> f64 {
    let ns = &vs.sys;
    let p = ns.p as usize;
    let at_one = vs.v_at_one();
    let mut gap = (at_one.coeff(p) - ns.b0 * phi_closed_form(ns.p, ns.k)).abs();
    if ns.p >= 2 && vs.order > p {
        gap = gap.max((at_one.coeff(p + 1) - ns.b1 * phi_closed_form(ns.p + 1, ns.k)).abs());
    }
    gap
}

/// Return-map series through `order` (at least `p + 1`).
pub fn return_map(spec: &SystemSpec, order: usize) -> Result<ReturnMapResult> {
    let ns = normalize(spec, order.max(DEFAULT_WORKING_ORDER))?;
    return_map_for(&ns, order)
}

pub fn return_map_for(ns: &NormalizedSystem, order: usize) -> Result<ReturnMapResult> {
    let p = ns.p as usize;
    if order < p + 1 {
        return Err(Error::OrderTooLow {
            order,
            minimum: p + 1,
        });
    }
    if order > ns.working_order() + 1 {
        return Err(Error::OrderTooHigh {
            order,
            available: ns.working_order() + 1,
        });
    }
    let v_order = order - 1;
    let systems = quadrant_systems(ns);
    let vs = solve_all(&systems, v_order)?;
    let eta = EpsSeries::unit_eta(v_order);
    let first = matching_step(&systems[0], &systems[1], &vs[0], &vs[1], &eta)?;
    let second = matching_step(&systems[2], &systems[3], &vs[2], &vs[3], &first)?;
    let mut z = vec![0.0; order + 1];
    z[1..].copy_from_slice(second.series.coeffs());
    let z_scale = z[2..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let discrepancy = vs.iter().map(leading_discrepancy).fold(0.0, f64::max);
    let assembly_error = 10.0 * discrepancy + 1e-12 * order as f64 * z_scale.max(1.0);
    Ok(ReturnMapResult {
        z: EpsSeries {
            series: CoeffSeries::new(z),
            role: SeriesRole::Z,
        },
        p: ns.p,
        k: ns.k,
        leading_closed_form: closed_form_leading(ns),
        diagnostics: Diagnostics {
            v_order,
            working_order: ns.working_order(),
            radius_r: ns.radius_r,
            bounds: ns.contraction_bounds(),
            assembly_error,
            first_step: first.series.coeffs().to_vec(),
        },
        system: ns.clone(),
    })
}

/// `N_F(η, ε)` and `N_{J₃F}(η, ε)` for the same `η`, through `order`.
pub fn first_matching_maps(ns: &NormalizedSystem, eta: &EpsSeries) -> Result<(EpsSeries, EpsSeries)> {
    let systems = quadrant_systems(ns);
    let vs = solve_all(&systems, eta.order())?;
    let n_f = matching_step(&systems[0], &systems[1], &vs[0], &vs[1], eta)?;
    let n_j3 = matching_step(&systems[2], &systems[3], &vs[2], &vs[3], eta)?;
    Ok((n_f, n_j3))
}

/// Focus at the first `|Zₙ|` above the threshold, otherwise a center candidate.
///
/// The threshold is `tol` raised, if needed, to ten times the assembly error.
pub fn classify(res: &ReturnMapResult, tol: f64) -> Classification {
    let tol = tol.max(10.0 * res.diagnostics.assembly_error);
    res.coeffs()
        .iter()
        .enumerate()
        .skip(2)
        .find(|(_, z)| z.abs() > tol)
        .map(|(order, z)| Classification::Focus {
            order,
            sign: if *z > 0.0 { Sign::Positive } else { Sign::Negative },
        })
        .unwrap_or(Classification::CenterCandidate {
            verified_up_to: res.order(),
        })
}
