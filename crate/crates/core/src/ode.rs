//! Dormand-Prince 5(4) with Hairer's quartic continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 2_000_000;

/// Mixed error control: component `i` is measured against `atol[i] + rtol·|y_i|`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

impl<const N: usize> Tolerances<N> {
    pub fn new(rtol: f64, atol: [f64; N]) -> Self {
        Self { rtol, atol }
    }

    pub fn uniform(tol: f64) -> Self {
        Self { rtol: tol, atol: [tol; N] }
    }
}

/// One accepted step together with its interpolation coefficients.
#[derive(Debug, Clone)]
struct Step<const N: usize> {
    t0: f64,
    h: f64,
    coef: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let c = &self.coef;
        std::array::from_fn(|i| {
            c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])))
        })
    }
}

/// Continuous solution on `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct DenseTrajectory<const N: usize> {
    steps: Vec<Step<N>>,
    t_start: f64,
    t_end: f64,
    y_end: [f64; N],
    rhs_evals: usize,
}

impl<const N: usize> DenseTrajectory<N> {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn rhs_evals(&self) -> usize {
        self.rhs_evals
    }

    /// Interpolated state; `t` is clamped to the integration interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.steps.is_empty() || t >= self.t_end {
            return self.y_end;
        }
        let t = t.max(self.t_start);
        let k = self.steps.partition_point(|s| s.t0 <= t).saturating_sub(1);
        self.steps[k].eval(t)
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerances<N>,
) -> Result<DenseTrajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "integration interval [{t0}, {t1}] is empty"
        )));
    }
    let scale =
        |a: &[f64; N], b: &[f64; N], i: usize| tol.atol[i] + tol.rtol * a[i].abs().max(b[i].abs());

    let mut evals = 0usize;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    evals += 1;

    // Hairer's starting step heuristic.
    let mut h = {
        let d0 = rms::<N>(|i| y[i] / scale(&y, &y, i));
        let d1 = rms::<N>(|i| k1[i] / scale(&y, &y, i));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(&y, h0, &[(1.0, &k1)]);
        let f1 = rhs(t + h0, &y1);
        evals += 1;
        let d2 = rms::<N>(|i| (f1[i] - k1[i]) / scale(&y, &y, i)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(t1 - t0)
    };

    let mut steps = Vec::new();
    let h_min = 1e-14 * (t1 - t0).abs().max(1.0);
    while t < t1 {
        if steps.len() > MAX_STEPS || h < h_min {
            return Err(Error::StepFailure { t, h });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t + h, &y_new);
        evals += 6;

        let err = rms::<N>(|i| {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            e / scale(&y, &y_new, i)
        });
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let c4: [f64; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let c5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            steps.push(Step { t0: t, h, coef: [y, ydiff, bspl, c4, c5] });
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
        }
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        h *= if err <= 1.0 { fac } else { fac.min(1.0) };
    }
    Ok(DenseTrajectory { steps, t_start: t0, t_end: t1, y_end: y, rhs_evals: evals })
}

fn rms<const N: usize>(term: impl Fn(usize) -> f64) -> f64 {
    ((0..N).map(|i| term(i).powi(2)).sum::<f64>() / N as f64).sqrt()
}
