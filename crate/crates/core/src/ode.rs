//! Dormand–Prince 5(4) with Hairer's dense output.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const A7: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Step-size control parameters.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
    pub max_steps: usize,
}

impl<const N: usize> Tolerances<N> {
    pub fn uniform(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: [tol; N],
            max_steps: 1_000_000,
        }
    }
}

/// An accepted step with its continuous extension.
#[derive(Clone, Copy, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// State at `t`, for `t` between `t0` and `t1`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h();
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

/// One Dormand–Prince step of size `h` from `(t, y)` with `k1 = f(t, y)`.
/// Returns the new state, its derivative, the error vector and the dense
/// output coefficients.
fn dp_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N], [[f64; N]; 5]) {
    let k2 = f(t + C[1] * h, &axpy(y, h, &[(A2[0], k1)]));
    let k3 = f(t + C[2] * h, &axpy(y, h, &[(A3[0], k1), (A3[1], &k2)]));
    let k4 = f(t + C[3] * h, &axpy(y, h, &[(A4[0], k1), (A4[1], &k2), (A4[2], &k3)]));
    let k5 = f(
        t + C[4] * h,
        &axpy(y, h, &[(A5[0], k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]),
    );
    let k6 = f(
        t + C[5] * h,
        &axpy(y, h, &[(A6[0], k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
    );
    let y1 = axpy(y, h, &[(A7[0], k1), (A7[2], &k3), (A7[3], &k4), (A7[4], &k5), (A7[5], &k6)]);
    let k7 = f(t + h, &y1);
    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let err: [f64; N] = std::array::from_fn(|i| h * (0..7).map(|j| E[j] * ks[j][i]).sum::<f64>());
    let r1 = *y;
    let r2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
    let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
    let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
    let r5: [f64; N] = std::array::from_fn(|i| h * (0..7).map(|j| D[j] * ks[j][i]).sum::<f64>());
    (y1, k7, err, [r1, r2, r3, r4, r5])
}

/// Adaptive integrator state.
pub struct Stepper<F, const N: usize> {
    f: F,
    tol: Tolerances<N>,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    steps: usize,
}

impl<F, const N: usize> Stepper<F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    /// Starts at `(t0, y0)`; the sign of `h0` sets the direction of time.
    pub fn new(f: F, t0: f64, y0: [f64; N], h0: f64, tol: Tolerances<N>) -> Self {
        let k1 = f(t0, &y0);
        Self {
            f,
            tol,
            t: t0,
            y: y0,
            k1,
            h: h0,
            steps: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        (self.f)(t, y)
    }

    fn error_norm(&self, y1: &[f64; N], err: &[f64; N]) -> f64 {
        let sum: f64 = (0..N)
            .map(|i| {
                let sc = self.tol.atol[i] + self.tol.rtol * self.y[i].abs().max(y1[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    /// Takes one accepted step.
    pub fn step(&mut self) -> Result<DenseStep<N>> {
        loop {
            if self.steps >= self.tol.max_steps {
                return Err(Error::NoReturnDetected(format!("step budget of {} exhausted", self.tol.max_steps)));
            }
            let h = self.h;
            if self.t + h == self.t {
                return Err(Error::NoReturnDetected("step size underflow".into()));
            }
            let (y1, k7, err, rcont) = dp_step(&self.f, self.t, &self.y, &self.k1, h);
            let norm = self.error_norm(&y1, &err);
            if !norm.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                self.h *= 0.2;
                self.steps += 1;
                continue;
            }
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            self.steps += 1;
            if norm <= 1.0 {
                let step = DenseStep {
                    t0: self.t,
                    t1: self.t + h,
                    y0: self.y,
                    y1,
                    rcont,
                };
                self.t += h;
                self.y = y1;
                self.k1 = k7;
                self.h = h * factor;
                return Ok(step);
            }
            self.h = h * factor.min(1.0);
        }
    }

    /// A single fresh step from the start of `step` to `t`, which must lie
    /// inside it; more accurate than the interpolant.
    pub fn restep(&self, step: &DenseStep<N>, t: f64) -> [f64; N] {
        let k1 = (self.f)(step.t0, &step.y0);
        dp_step(&self.f, step.t0, &step.y0, &k1, t - step.t0).0
    }
}

/// Root of `g(t, u(t))` inside a step where `g` changes sign between the
/// endpoints, by Newton on the interpolant safeguarded with bisection.
pub fn locate_root<const N: usize>(
    step: &DenseStep<N>,
    g: impl Fn(&[f64; N]) -> f64,
    dg: impl Fn(f64, &[f64; N]) -> f64,
    tol: f64,
) -> f64 {
    let (mut lo, mut hi) = (step.t0, step.t1);
    let g_lo = g(&step.y0);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let u = step.interpolate(t);
        let gv = g(&u);
        if gv.abs() <= tol {
            break;
        }
        if (gv > 0.0) == (g_lo > 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        let d = dg(t, &u);
        let newton = t - gv / d;
        let inside = if lo < hi {
            newton > lo && newton < hi
        } else {
            newton < lo && newton > hi
        };
        let next = if d != 0.0 && inside { newton } else { 0.5 * (lo + hi) };
        if next == t {
            break;
        }
        t = next;
    }
    t
}
