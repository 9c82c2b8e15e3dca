//! Rotationally invariant disk reduction and comparison with the ball.
//!
//! The totally geodesic disk orthogonal to the divisor carries `dt² + ρ(t)² dθ²`
//! where `ρ'' = -K_disk ρ`, `ρ(0) = 0`, `ρ'(0) = 1`. Near the origin the
//! linear system is integrated directly. From `t = 1` on the solver follows
//! `(log ρ - 2t, 2 - ρ'/ρ)`, whose second entry decays like `e^{-4t}` and is
//! tracked to full relative precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decay::{self, DecayFit};
use crate::error::{Error, Result};
use crate::ode::{self, DenseTrajectory, Tolerances};
use crate::profile::{solve_profile, MetricProfile, ModelParams};
use crate::quad::gauss8;

pub const MIN_HORIZON: f64 = 15.0;
/// Where the solver switches from `(ρ, ρ')` to the log variables.
const SWITCH: f64 = 1.0;
pub const SLOW_CONVERGENCE_LIMIT: f64 = 1e-4;
pub const ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DiskProfile<'a> {
    profile: &'a MetricProfile,
    near: DenseTrajectory<2>,
    far: DenseTrajectory<2>,
    grid: Vec<f64>,
    /// `∫_{t_i}^∞ (2 - ρ'/ρ)` at grid points beyond the switch, zero before.
    log_tail: Vec<f64>,
    /// `∫_{t_i}^∞ dτ/ρ` with the `1/τ` singularity removed below the switch.
    conformal_tail: Vec<f64>,
}

pub fn disk_profile(profile: &MetricProfile) -> Result<DiskProfile<'_>> {
    if profile.t_max() < MIN_HORIZON {
        return Err(Error::HorizonTooShort { t_max: profile.t_max(), required: MIN_HORIZON });
    }
    let coupling = 2.0 * (profile.params().nf() - 1.0);
    let tol = profile.tol();
    let near = ode::integrate(
        |t, y: &[f64; 2]| {
            let q = profile.deviation_unchecked(t).q;
            [y[1], (4.0 - coupling * q) * y[0]]
        },
        0.0,
        [0.0, 1.0],
        SWITCH,
        Tolerances::uniform(tol),
    )?;
    let [r1, rp1] = near.eval(SWITCH);
    let far = ode::integrate(
        |t, y: &[f64; 2]| {
            let q = profile.deviation_unchecked(t).q;
            let z = y[1];
            [-z, -z * (4.0 - z) + coupling * q]
        },
        SWITCH,
        [r1.ln() - 2.0 * SWITCH, 2.0 - rp1 / r1],
        profile.t_max(),
        Tolerances::new(tol, [1e-3 * tol, 1e-300]),
    )?;
    let grid: Vec<f64> = profile.grid().collect();
    let mut dp = DiskProfile { profile, near, far, grid, log_tail: Vec::new(), conformal_tail: Vec::new() };
    dp.fill_tails();
    Ok(dp)
}

impl<'a> DiskProfile<'a> {
    pub fn profile(&self) -> &'a MetricProfile {
        self.profile
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn t_max(&self) -> f64 {
        self.profile.t_max()
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_max() * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { t, t_max: self.t_max() });
        }
        Ok(())
    }

    fn zeta(&self, t: f64) -> f64 {
        self.far.eval(t)[1]
    }

    fn state(&self, t: f64) -> (f64, f64) {
        if t <= SWITCH {
            let [r, rp] = self.near.eval(t);
            (r, rp)
        } else {
            let [l, z] = self.far.eval(t);
            let r = (l + 2.0 * t).exp();
            (r, r * (2.0 - z))
        }
    }

    /// `(ρ, ρ')` at `t`.
    pub fn rho(&self, t: f64) -> Result<(f64, f64)> {
        self.check(t)?;
        Ok(self.state(t))
    }

    /// `ρ e^{-2t}`.
    pub fn scaled_rho(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(if t <= SWITCH { self.state(t).0 * (-2.0 * t).exp() } else { self.far.eval(t)[0].exp() })
    }

    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        self.grid.iter().map(|&t| {
            let (r, rp) = self.state(t);
            (t, r, rp)
        }).collect()
    }

    fn inverse_rho_regular(&self, t: f64) -> f64 {
        if t <= SWITCH {
            1.0 / self.state(t).0 - 1.0 / t
        } else {
            1.0 / self.state(t).0
        }
    }

    /// `∫_a^b dτ/ρ` with `1/τ` subtracted below the switch.
    fn regular_integral(&self, a: f64, b: f64) -> f64 {
        let f = |s: f64| self.inverse_rho_regular(s);
        if a < SWITCH && b > SWITCH {
            gauss8(a, SWITCH, f) + gauss8(SWITCH, b, f)
        } else {
            gauss8(a, b, f)
        }
    }

    fn fill_tails(&mut self) {
        let m = self.grid.len();
        let t_max = self.t_max();
        let mut log_tail = vec![0.0; m];
        let mut conf = vec![0.0; m];
        // ρ grows like e^{2t} beyond the horizon and ζ like e^{-4t}
        log_tail[m - 1] = self.zeta(t_max) / 4.0;
        conf[m - 1] = 1.0 / (2.0 * self.state(t_max).0);
        for i in (0..m - 1).rev() {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            if a >= SWITCH {
                log_tail[i] = log_tail[i + 1] + gauss8(a, b, |s| self.zeta(s));
            }
            conf[i] = conf[i + 1] + if a > 0.0 { self.regular_integral(a, b) } else { 0.0 };
        }
        self.log_tail = log_tail;
        self.conformal_tail = conf;
    }

    fn grid_index_above(&self, t: f64) -> usize {
        self.grid.partition_point(|&g| g < t).min(self.grid.len() - 1)
    }

    /// `∫_t^∞ (2 - ρ'/ρ)`, defined for `t ≥ 1`.
    pub fn log_tail(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        if t < SWITCH {
            return Err(Error::InvalidArgument(format!("log tail needs t >= {SWITCH}, got {t}")));
        }
        let i = self.grid_index_above(t);
        let g = self.grid[i];
        Ok(self.log_tail[i] + if g > t { gauss8(t, g, |s| self.zeta(s)) } else { 0.0 })
    }

    /// Logarithm of the conformal radius: `log r = -∫_t^∞ dτ/ρ`, so `r → 1` at infinity.
    pub fn log_conformal_radius(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        if !(t > 0.0) {
            return Err(Error::InvalidArgument("the conformal radius is 0 at the divisor".into()));
        }
        let i = self.grid_index_above(t);
        let g = self.grid[i];
        let mut tail = self.conformal_tail[i];
        if g > t {
            tail += self.regular_integral(t, g);
        }
        if t < SWITCH {
            tail += SWITCH.ln() - t.ln();
        }
        Ok(-tail)
    }

    /// `lim ρ e^{-2t}` by regressing `ρ e^{-2t} = A + B e^{-2t}` on the last five units.
    pub fn orbit_asymptote(&self) -> Result<OrbitAsymptote> {
        let t_max = self.t_max();
        let pts: Vec<(f64, f64)> = self
            .grid
            .iter()
            .filter(|&&t| t >= t_max - 5.0)
            .map(|&t| (t, self.far.eval(t)[0].exp()))
            .collect();
        let (limit, _, residual) = decay::fit_constant_plus_mode(&pts, 2.0)?;
        Ok(OrbitAsymptote { limit, residual })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitAsymptote {
    /// `lim ρ e^{-2t}`.
    pub limit: f64,
    /// Largest relative residual of the regression.
    pub residual: f64,
}

/// Cone parameter of the model: `α = lim ρ e^{-2t} / A²` where `f ~ A e^t`.
///
/// The ball disk with cone parameter `α` at equal distance `t̄ = t + s` has
/// `ρ̂ = (α/2) sinh 2t̄`; matching both the orbit growth and the divisor tube
/// growth forces this normalization.
pub fn alpha_of_c(dprof: &DiskProfile<'_>) -> Result<f64> {
    let orbit = dprof.orbit_asymptote()?;
    if orbit.residual > SLOW_CONVERGENCE_LIMIT {
        return Err(Error::SlowConvergence { residual: orbit.residual, limit: SLOW_CONVERGENCE_LIMIT });
    }
    let amp = dprof.profile().ball_asymptote()?.amplitude;
    Ok(orbit.limit / (amp * amp))
}

/// Solves the profile and disk reduction for each `c` in parallel.
pub fn alpha_map(n: u32, cs: &[f64], t_max: f64, tol: f64) -> Vec<(f64, Result<f64>)> {
    cs.par_iter()
        .map(|&c| {
            let alpha = ModelParams::new(n, c)
                .and_then(|p| solve_profile(p, t_max, tol))
                .and_then(|prof| alpha_of_c(&disk_profile(&prof)?));
            (c, alpha)
        })
        .collect()
}

/// Inverts the α-map by bisection on `c`.
pub fn c_for_alpha(n: u32, alpha: f64, t_max: f64, tol: f64) -> Result<f64> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::BisectionFailure { alpha });
    }
    let eval = |c: f64| -> Result<f64> {
        let prof = solve_profile(ModelParams::new(n, c)?, t_max, tol)?;
        alpha_of_c(&disk_profile(&prof)?)
    };
    if (alpha - 1.0).abs() < 1e-12 {
        return Ok(1.0);
    }
    let lower = ModelParams::lower_bound(n);
    let mut hi = 1.0;
    let mut lo = lower + 0.5 * (1.0 - lower);
    let mut steps = 0;
    while eval(lo)? < alpha {
        hi = lo;
        lo = lower + 0.5 * (lo - lower);
        steps += 1;
        if steps > 40 {
            return Err(Error::BisectionFailure { alpha });
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichBounds {
    pub rate: f64,
    pub upper_constant: f64,
    pub lower_constant: f64,
    /// Smallest slack of either inequality in `log(ω^D/ω̂^D)`, in units of `e^{-rate·t}`.
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: u32,
    pub c: f64,
    pub alpha: f64,
    /// `log(α_own/α)` where `α_own` is read off the disk profile without regression.
    pub alpha_mismatch: f64,
    pub shift: f64,
    /// `(t, log(ω^D/ω̂^D))`: log of the ratio of disk area forms at equal distance from the divisor.
    pub ratio_samples: Vec<(f64, f64)>,
    pub ratio_fit: DecayFit,
    /// `(t, log(ωⁿ/ω̂ⁿ))` in the radial reduction.
    pub volume_ratio_samples: Vec<(f64, f64)>,
    pub volume_fit: DecayFit,
    pub sandwich: SandwichBounds,
    /// Best constant `c'` with `ω^D ≥ c' ω̂^D` at every sample.
    pub lower_comparison_constant: f64,
}

pub const ALPHA_CONSISTENCY: f64 = 1e-6;
pub const RATIO_WINDOW: (f64, f64) = (5.0, 15.0);
const SANDWICH_START: f64 = 5.0;

/// Compares the disk reduction with the ball disk `ρ̂ = (α/2) sinh 2(t + s)`.
pub fn compare_with_ball(dprof: &DiskProfile<'_>, alpha: f64) -> Result<ComparisonReport> {
    if !(alpha >= 1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be at least 1")));
    }
    let profile = dprof.profile();
    let params = *profile.params();
    let s = profile.ball_asymptote()?.shift;
    let ts: Vec<f64> = dprof.grid().iter().copied().filter(|&t| t >= SWITCH).collect();
    // log(ρ/ρ̂) = ∫_t^∞ ζ - log(1 - e^{-4(t+s)}) + log(α_own/α); the last term is
    // reported separately so the shape comparison keeps its relative precision.
    let t_max = dprof.t_max();
    let own = 4.0 * (dprof.far.eval(t_max)[0] - dprof.log_tail(t_max)? - 2.0 * s).exp();
    let alpha_mismatch = (own / alpha).ln();
    if alpha_mismatch.abs() > ALPHA_CONSISTENCY {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} is inconsistent with the profile (its own value is {own})"
        )));
    }
    let log_ratio = |t: f64| -> Result<f64> {
        let ln_cut = (-(-4.0 * (t + s)).exp()).ln_1p();
        Ok(dprof.log_tail(t)? - ln_cut)
    };
    let ratio_samples: Vec<(f64, f64)> = ts.iter().map(|&t| Ok((t, log_ratio(t)?))).collect::<Result<_>>()?;
    let remainder = profile.ball_remainder(&ts)?;
    let volume_ratio_samples: Vec<(f64, f64)> = ratio_samples
        .iter()
        .zip(&remainder)
        .map(|(&(t, lr), &(d, _))| (t, lr + (2.0 * params.nf() - 2.0) * (d / (t + s).cosh()).ln_1p()))
        .collect();
    let abs_series = |v: &[(f64, f64)]| v.iter().map(|&(t, x)| (t, x.abs())).collect::<Vec<_>>();
    let ratio_fit = decay::fit_decay_rate(&abs_series(&ratio_samples), RATIO_WINDOW)?;
    let volume_fit = decay::fit_decay_rate(&abs_series(&volume_ratio_samples), RATIO_WINDOW)?;

    let sandwich = sandwich_bounds(&ratio_samples, 0.9 * ratio_fit.rate);
    let mut lower_comparison_constant =
        ratio_samples.iter().map(|&(_, x)| (x + alpha_mismatch).exp()).fold(f64::INFINITY, f64::min);
    // the ball point at distance t + s from the divisor exists only for t > -s
    for &t in dprof.grid().iter().filter(|&&t| t + s > 0.0 && t > 0.0 && t < SWITCH) {
        let rho_hat = 0.5 * alpha * (2.0 * (t + s)).sinh();
        lower_comparison_constant = lower_comparison_constant.min(dprof.state(t).0 / rho_hat);
    }
    Ok(ComparisonReport {
        n: params.n(),
        c: params.c(),
        alpha,
        alpha_mismatch,
        shift: s,
        ratio_samples,
        ratio_fit,
        volume_ratio_samples,
        volume_fit,
        sandwich,
        lower_comparison_constant,
    })
}

fn sandwich_bounds(ratio: &[(f64, f64)], rate: f64) -> SandwichBounds {
    let tail: Vec<(f64, f64)> = ratio.iter().copied().filter(|&(t, _)| t >= SANDWICH_START).collect();
    // ρ/ρ̂ < 1/(1 - C₁e^{-at})  ⇔  C₁ > (1 - e^{-L}) e^{at}; the lower bound is symmetric.
    let need = |sign: f64| {
        tail.iter()
            .map(|&(t, l)| -(-sign * l).exp_m1() * (rate * t).exp())
            .fold(0.0, f64::max)
    };
    let upper_constant = 1.01 * need(1.0) + 1e-300;
    let lower_constant = 1.01 * need(-1.0) + 1e-300;
    // slack in units of the envelope e^{-at}, compared in log form so that it survives underflow of 1 - e^L
    let min_slack = tail
        .iter()
        .map(|&(t, l)| {
            let e = (-rate * t).exp();
            let up = -(-upper_constant * e).ln_1p() - l;
            let lo = l - (-lower_constant * e).ln_1p();
            up.min(lo) / e
        })
        .fold(f64::INFINITY, f64::min);
    SandwichBounds { rate, upper_constant, lower_constant, min_slack }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkSample {
    pub t: f64,
    /// `e^{-g}(½ e^{-τ}(1 - e^τ)² g_ττ + 1)` from finite differences of the reconstructed `g`.
    pub combination: f64,
    /// `-K_disk/4` from the profile.
    pub expected: f64,
}

/// Conformal comparison with the Poincaré disk of curvature `-4`.
///
/// In the conformal coordinate `z` of the disk, `ω^D = e^{g} |dz|²/(1-|z|²)²`
/// with `τ = log |z|²`. The combination equals `-K_disk/4 ≥ 1`.
pub fn remark_inequality(dprof: &DiskProfile<'_>, ts: &[f64]) -> Result<Vec<RemarkSample>> {
    let g = |t: f64| -> Result<f64> {
        let lr = dprof.log_conformal_radius(t)?;
        let rho = dprof.rho(t)?.0;
        Ok(2.0 * (rho.ln() - lr + (-(2.0 * lr).exp_m1()).ln()))
    };
    let h = 1e-3;
    let g_tau = |t: f64| -> Result<f64> { Ok((g(t + h)? - g(t - h)?) / (2.0 * h) * dprof.rho(t)?.0 / 2.0) };
    ts.iter()
        .map(|&t| {
            if !(t > 2.0 * h) {
                return Err(Error::InvalidArgument(format!("remark sample t = {t} too close to the divisor")));
            }
            let g_tt = (g_tau(t + h)? - g_tau(t - h)?) / (2.0 * h) * dprof.rho(t)?.0 / 2.0;
            let lr = dprof.log_conformal_radius(t)?;
            let one_minus = -(2.0 * lr).exp_m1();
            let combination = (-g(t)?).exp() * (0.5 * one_minus * one_minus / (2.0 * lr).exp() * g_tt + 1.0);
            let q = dprof.profile().deviation(t)?.q;
            let expected = 1.0 - 0.5 * (dprof.profile().params().nf() - 1.0) * q;
            Ok(RemarkSample { t, combination, expected })
        })
        .collect()
}

/// Cone angle `2π ρ_down'(0)` of the downstairs model `ρ/d`; the upstairs slope must be 1.
pub fn cone_angle_check(dprof: &DiskProfile<'_>, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("branching order must be positive".into()));
    }
    let h = 1e-6;
    let slope = dprof.rho(h)?.0 / h / d as f64;
    let expected = 1.0 / d as f64;
    if (slope - expected).abs() > ANGLE_TOL {
        return Err(Error::AngleMismatch { slope, expected });
    }
    Ok(2.0 * std::f64::consts::PI * slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsometry {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds of `ω_down / ω_cone` on the punctured neighbourhood `0 < t ≤ radius`, where
/// `ω_cone = |w|^{-2(1-1/d)} |dw|²` and `w = z^d`.
pub fn cone_quasi_isometry(dprof: &DiskProfile<'_>, d: u32, radius: f64, samples: usize) -> Result<QuasiIsometry> {
    if d == 0 || samples < 2 {
        return Err(Error::InvalidArgument("need d >= 1 and at least two samples".into()));
    }
    let d2 = (d as f64).powi(2);
    let mut lower = f64::INFINITY;
    let mut upper = 0.0f64;
    for i in 1..=samples {
        let t = radius * i as f64 / samples as f64;
        let rho = dprof.rho(t)?.0;
        let ratio = (rho * (-dprof.log_conformal_radius(t)?).exp()).powi(2) / d2;
        lower = lower.min(ratio);
        upper = upper.max(ratio);
    }
    Ok(QuasiIsometry { lower, upper })
}
