//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Panels are bisected in order of largest error estimate until the summed
//! estimate meets `max(abs_tol, rel_tol·|I|)`. Ties are broken by panel
//! position and the final sum runs left to right, so results are
//! deterministic.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_panels: 4000,
        }
    }
}

impl Integrator {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        self.integrate_panels(f, &[a, b])
    }

    /// Integrates over consecutive panels given by `breaks` (sorted).
    pub fn integrate_panels(&self, f: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<f64> {
        assert!(breaks.len() >= 2, "need at least one panel");
        let mut panels: Vec<Panel> = breaks
            .windows(2)
            .filter(|w| w[1] != w[0])
            .map(|w| gk15(&f, w[0], w[1]))
            .collect();
        if panels.is_empty() {
            return Ok(0.0);
        }
        loop {
            let total: f64 = panels.iter().map(|p| p.value).sum();
            let err: f64 = panels.iter().map(|p| p.error).sum();
            if !total.is_finite() {
                return Err(Error::NonFinite("quadrature"));
            }
            let target = self.abs_tol.max(self.rel_tol * total.abs());
            if err <= target {
                panels.sort_by(|x, y| x.a.total_cmp(&y.a));
                return Ok(panels.iter().map(|p| p.value).sum());
            }
            if panels.len() >= self.max_panels {
                return Err(Error::QuadratureFailure {
                    estimate: err,
                    requested: target,
                });
            }
            let (idx, worst) = panels
                .iter()
                .enumerate()
                .fold((0, panels[0]), |best, (i, p)| {
                    if p.error > best.1.error {
                        (i, *p)
                    } else {
                        best
                    }
                });
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                return Err(Error::QuadratureFailure {
                    estimate: err,
                    requested: target,
                });
            }
            panels[idx] = gk15(&f, worst.a, mid);
            panels.push(gk15(&f, mid, worst.b));
        }
    }
}

/// Breakpoints on [a, b] graded geometrically toward `a` with ratio `ratio`
/// (0 < ratio < 1) over `levels` panels.
pub fn graded_toward_start(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..levels).map(|i| a + (b - a) * ratio.powi(i as i32)).collect();
    pts.push(a);
    pts.reverse();
    pts
}

/// Gauss–Legendre rule on [0, 1] exact for polynomials of degree `degree`.
pub fn gauss_legendre_unit(degree: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(degree / 2 + 1).unwrap();
    GaussLegendre::new(n)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}
