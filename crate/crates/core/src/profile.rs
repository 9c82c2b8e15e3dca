//! The invariant Kähler-Einstein profile `f(t)`.
//!
//! `f` solves `f''/f + n(f'/f)^2 + n/f^2 = n + 1` with `f(0) = c`, `f'(0) = 0`.
//! The solver integrates `(log f, 1 - f'/f)` rather than `(f, f')`: both
//! variables stay O(1) or decay, so relative accuracy survives to large `t`.
//! Two first integrals give cancellation-free access to the small quantities
//! that the decay checks need:
//!
//! * `f''/f - 1 = n(1 - 1/c^2)(c/f)^(2n+2)`
//! * `f'^2 = f^2 - 1 + c^(2n)(1 - c^2) f^(-2n)`

use serde::{Deserialize, Serialize};

use crate::decay;
use crate::error::{Error, Result};
use crate::ode::{self, DenseTrajectory, Tolerances};
use crate::quad::{gauss8, gauss8_composite};

pub use crate::decay::{fit_decay_rate, DecayFit};

pub const GRID_POINTS: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_T_MAX: f64 = 20.0;
/// Minimal gap between `c` and the product-limit value `sqrt(n/(n+1))`.
pub const BOUNDARY_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: u32,
    c: f64,
}

impl ModelParams {
    pub fn new(n: u32, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("complex dimension n = {n} must be >= 2")));
        }
        let lower = Self::lower_bound(n);
        if !(c > lower + BOUNDARY_EPS && c <= 1.0) {
            return Err(Error::InvalidInitialValue { n, c, lower });
        }
        Ok(Self { n, c })
    }

    /// The complex hyperbolic ball, `f = cosh`.
    pub fn ball(n: u32) -> Result<Self> {
        Self::new(n, 1.0)
    }

    /// `sqrt(n/(n+1))`, the value of the constant (product) solution.
    pub fn lower_bound(n: u32) -> f64 {
        (n as f64 / (n as f64 + 1.0)).sqrt()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn einstein_constant(&self) -> f64 {
        -2.0 * (self.nf() + 1.0)
    }

    /// Largest sectional curvature, attained at `t = 0` on totally real planes.
    pub fn sup_sectional(&self) -> f64 {
        -(self.nf() + 1.0) + self.nf() / (self.c * self.c)
    }

    /// `f''/f - 1` at the origin; the first integral scales it by `(c/f)^(2n+2)`.
    pub fn excess_at_origin(&self) -> f64 {
        self.nf() * (1.0 - 1.0 / (self.c * self.c))
    }

    /// Constant `k` in `f'^2 = f^2 - 1 + k f^(-2n)`.
    pub fn energy_constant(&self) -> f64 {
        self.c.powi(2 * self.n as i32) * (1.0 - self.c * self.c)
    }
}

/// Length factor that turns `Ric = einstein_constant(n)·g` into `Ric = target·g`.
/// Lengths (and `t`, `f`) scale by the factor, curvatures by its inverse square.
pub fn einstein_rescaling(n: u32, target: f64) -> Result<f64> {
    if !(target < 0.0) {
        return Err(Error::InvalidArgument(format!("target Einstein constant {target} must be negative")));
    }
    Ok((-2.0 * (n as f64 + 1.0) / target).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

/// Small quantities measuring the distance to the ball profile, computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    /// `1 - f'/f`
    pub w: f64,
    /// `f''/f - 1`
    pub q: f64,
}

#[derive(Debug, Clone)]
pub struct MetricProfile {
    params: ModelParams,
    t_max: f64,
    tol: f64,
    traj: DenseTrajectory<2>,
    samples: Vec<Sample>,
}

/// Residual of the profile equation written as `f''/f + n(f'/f)^2 + n/f^2 - (n+1)`.
pub fn ode_residual(n: u32, s: &Sample) -> f64 {
    let nf = n as f64;
    let y = s.fp / s.f;
    s.fpp / s.f + nf * y * y + nf / (s.f * s.f) - (nf + 1.0)
}

pub fn solve_profile(params: ModelParams, t_max: f64, tol: f64) -> Result<MetricProfile> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("t_max = {t_max} must be positive")));
    }
    if !(tol > 0.0 && tol < 1e-4) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must lie in (0, 1e-4)")));
    }
    let nf = params.nf();
    let rhs = move |_t: f64, y: &[f64; 2]| {
        let (l, w) = (y[0], y[1]);
        [1.0 - w, -(nf + 1.0) * w * (2.0 - w) + nf * (-2.0 * l).exp()]
    };
    let tols = Tolerances::new(tol, [1e-3 * tol, 1e-12 * tol]);
    let traj = ode::integrate(rhs, 0.0, [params.c.ln(), 1.0], t_max, tols)?;
    let mut profile = MetricProfile { params, t_max, tol, traj, samples: Vec::new() };
    profile.samples = uniform_grid(t_max, GRID_POINTS)
        .into_iter()
        .map(|t| profile.sample_unchecked(t))
        .collect();
    Ok(profile)
}

pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
    let h = t_max / (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { t_max } else { i as f64 * h }).collect()
}

impl MetricProfile {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n(&self) -> u32 {
        self.params.n
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_max * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange { t, t_max: self.t_max });
        }
        Ok(())
    }

    /// `(log f, 1 - f'/f)` at `t`.
    pub fn log_state(&self, t: f64) -> Result<(f64, f64)> {
        self.check(t)?;
        let y = self.traj.eval(t);
        Ok((y[0], y[1]))
    }

    pub fn eval(&self, t: f64) -> Result<Sample> {
        self.check(t)?;
        Ok(self.sample_unchecked(t))
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        Ok(self.eval(t)?.f)
    }

    pub(crate) fn sample_unchecked(&self, t: f64) -> Sample {
        let [l, w] = self.traj.eval(t);
        let nf = self.params.nf();
        let f = l.exp();
        let y = 1.0 - w;
        let fpp = f * (nf + 1.0 - nf * y * y - nf * (-2.0 * l).exp());
        Sample { t, f, fp: f * y, fpp }
    }

    pub fn deviation(&self, t: f64) -> Result<Deviation> {
        self.check(t)?;
        Ok(self.deviation_unchecked(t))
    }

    pub(crate) fn deviation_unchecked(&self, t: f64) -> Deviation {
        let [l, w] = self.traj.eval(t);
        Deviation { w, q: self.excess_from_log_f(l) }
    }

    /// `f''/f - 1` from the first integral, given `log f`.
    pub(crate) fn excess_from_log_f(&self, log_f: f64) -> f64 {
        let p = &self.params;
        p.excess_at_origin() * ((2.0 * p.nf() + 2.0) * (p.c.ln() - log_f)).exp()
    }

    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| ode_residual(self.params.n, s).abs())
            .fold(0.0, f64::max)
    }

    /// Forcing `(f''/f - 1)·f` of the remainder `f - cosh(t + s)`.
    fn remainder_forcing(&self, t: f64) -> f64 {
        let p = &self.params;
        let l = self.traj.eval(t)[0];
        let k = p.excess_at_origin() * p.c.powi(2 * p.n as i32 + 2);
        k * (-(2.0 * p.nf() + 1.0) * l).exp()
    }

    /// The remainder `D = f - cosh(t + s)` and its derivative at increasing grid points.
    ///
    /// `D` solves `D'' - D = (f''/f - 1) f` and decays, hence
    /// `D(t) = ∫_t^∞ sinh(τ - t) (f''/f - 1) f dτ`. The two exponential kernels
    /// are accumulated backwards from the horizon so each value keeps full
    /// relative precision however small it is.
    pub fn ball_remainder(&self, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
        if ts.is_empty() {
            return Ok(Vec::new());
        }
        for w in ts.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidArgument("remainder grid must be increasing".into()));
            }
        }
        self.check(ts[0])?;
        self.check(ts[ts.len() - 1])?;
        let last = ts[ts.len() - 1].min(self.t_max);
        let nf = self.params.nf();
        let g_end = self.remainder_forcing(self.t_max);
        let span = self.t_max - last;
        let mut ip = gauss8_composite(last, self.t_max, 0.1, |s| (s - last).exp() * self.remainder_forcing(s))
            + span.exp() * g_end / (2.0 * nf);
        let mut im = gauss8_composite(last, self.t_max, 0.1, |s| (last - s).exp() * self.remainder_forcing(s))
            + (-span).exp() * g_end / (2.0 * nf + 2.0);
        let mut out = vec![(0.0, 0.0); ts.len()];
        out[ts.len() - 1] = (0.5 * (ip - im), -0.5 * (ip + im));
        for i in (0..ts.len() - 1).rev() {
            let (a, b) = (ts[i], ts[i + 1]);
            let h = b - a;
            ip = gauss8(a, b, |s| (s - a).exp() * self.remainder_forcing(s)) + h.exp() * ip;
            im = gauss8(a, b, |s| (a - s).exp() * self.remainder_forcing(s)) + (-h).exp() * im;
            out[i] = (0.5 * (ip - im), -0.5 * (ip + im));
        }
        Ok(out)
    }

    /// Phase shift `s` with `f(t) - cosh(t + s) → 0`.
    pub fn ball_asymptote(&self) -> Result<BallAsymptote> {
        let (d0, dp0) = self.ball_remainder(&[0.0])?[0];
        let shift = (-dp0).asinh();
        Ok(BallAsymptote {
            shift,
            amplitude: 0.5 * shift.exp(),
            consistency: (shift.cosh() - (self.params.c - d0)).abs(),
        })
    }

    /// Fit `f e^{-t} ≈ A + B e^{-2t}` on `[t_max - 5, t_max]`; returns `(A, relative residual)`.
    pub fn regressed_amplitude(&self) -> Result<(f64, f64)> {
        if self.t_max < 15.0 {
            return Err(Error::HorizonTooShort { t_max: self.t_max, required: 15.0 });
        }
        let pts: Vec<(f64, f64)> = self
            .grid()
            .filter(|&t| t >= self.t_max - 5.0)
            .map(|t| (t, (self.traj.eval(t)[0] - t).exp()))
            .collect();
        let (a, _, resid) = decay::fit_constant_plus_mode(&pts, 2.0)?;
        Ok((a, resid))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallAsymptote {
    /// `s` in `f(t) ≈ cosh(t + s)`.
    pub shift: f64,
    /// `A = lim f e^{-t} = e^s / 2`.
    pub amplitude: f64,
    /// `|cosh s - (c - D(0))|`, zero up to quadrature error.
    pub consistency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimStatus {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimOutcome {
    pub claim: u8,
    pub statement: String,
    pub status: ClaimStatus,
    /// Largest violation of the inequality chain found on the grid (0 when none).
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub outcomes: Vec<ClaimOutcome>,
}

impl ClaimReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != ClaimStatus::Fail)
    }

    pub fn worst_slack(&self) -> f64 {
        self.outcomes.iter().map(|o| o.slack).fold(0.0, f64::max)
    }
}

/// Largest amount by which `xs` fails to be nonincreasing.
fn increase_violation(xs: impl Iterator<Item = f64>) -> f64 {
    let mut lowest = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for x in xs {
        worst = worst.max(x - lowest);
        lowest = lowest.min(x);
    }
    worst
}

/// Check the four qualitative claims on the grid samples.
pub fn verify_claims(profile: &MetricProfile, eps: f64) -> Result<ClaimReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1)")));
    }
    if profile.t_max < 5.0 {
        return Err(Error::HorizonTooShort { t_max: profile.t_max, required: 5.0 });
    }
    let grid: Vec<(f64, f64, Deviation)> = profile
        .grid()
        .map(|t| (t, profile.traj.eval(t)[0], profile.deviation_unchecked(t)))
        .collect();
    let last = grid[grid.len() - 1].2;
    let asymptotic = profile.t_max >= 15.0;
    let status = |ok: bool| if ok { ClaimStatus::Pass } else { ClaimStatus::Fail };

    // (log f)'' = f''/f - (f'/f)^2 = q + w(2 - w)
    let s1 = grid.iter().map(|(_, _, d)| (-(d.q + d.w * (2.0 - d.w))).max(0.0)).fold(0.0, f64::max);
    let c1 = ClaimOutcome {
        claim: 1,
        statement: "log f is convex".into(),
        status: status(s1 <= eps),
        slack: s1,
    };

    let s2 = increase_violation(grid.iter().map(|(_, _, d)| d.w));
    let c2 = ClaimOutcome {
        claim: 2,
        statement: "f'/f is nondecreasing and tends to 1".into(),
        status: status(s2 <= eps && (!asymptotic || last.w.abs() < eps)),
        slack: s2,
    };

    let c3 = if profile.params.c >= 1.0 {
        ClaimOutcome {
            claim: 3,
            statement: "f < cosh and f'/f < tanh for t > 0".into(),
            status: ClaimStatus::Vacuous,
            slack: 0.0,
        }
    } else {
        let mut s3: f64 = 0.0;
        let mut strict = true;
        for &(t, l, d) in grid.iter().filter(|g| g.0 > 0.0) {
            let log_cosh = t + (-2.0 * t).exp().ln_1p() - std::f64::consts::LN_2;
            let a = l - log_cosh;
            let b = (1.0 - d.w) - t.tanh();
            s3 = s3.max(a.max(0.0)).max(b.max(0.0));
            strict &= a < 0.0 && b < 0.0;
        }
        ClaimOutcome {
            claim: 3,
            statement: "f < cosh and f'/f < tanh for t > 0".into(),
            status: status(s3 <= eps && (strict || s3 <= 10.0 * profile.tol)),
            slack: s3,
        }
    };

    let mono = increase_violation(grid.iter().map(|(_, _, d)| -d.q));
    let bound = grid.iter().map(|(_, _, d)| d.q.max(0.0)).fold(0.0, f64::max);
    let s4 = mono.max(bound);
    let c4 = ClaimOutcome {
        claim: 4,
        statement: "f''/f is nondecreasing, at most 1, and tends to 1".into(),
        status: status(s4 <= eps && (!asymptotic || last.q.abs() < eps)),
        slack: s4,
    };
    Ok(ClaimReport { outcomes: vec![c1, c2, c3, c4] })
}

/// Sampled `(t, |f'/f - 1|)` on the profile grid.
pub fn log_derivative_gap_series(profile: &MetricProfile) -> Vec<(f64, f64)> {
    profile.grid().map(|t| (t, profile.deviation_unchecked(t).w.abs())).collect()
}

/// Sampled `(t, |f''/f - 1|)` on the profile grid.
pub fn curvature_gap_series(profile: &MetricProfile) -> Vec<(f64, f64)> {
    profile.grid().map(|t| (t, profile.deviation_unchecked(t).q.abs())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(n: u32, c: f64) -> MetricProfile {
        solve_profile(ModelParams::new(n, c).unwrap(), DEFAULT_T_MAX, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1, 1.0).is_err());
        assert!(matches!(ModelParams::new(2, 1.01), Err(Error::InvalidInitialValue { .. })));
        assert!(matches!(
            ModelParams::new(2, (2.0f64 / 3.0).sqrt()),
            Err(Error::InvalidInitialValue { .. })
        ));
        assert!(ModelParams::new(2, (2.0f64 / 3.0).sqrt() + 1e-12).is_ok());
        assert_eq!(ModelParams::ball(3).unwrap().einstein_constant(), -8.0);
    }

    #[test]
    fn solver_rejects_bad_settings() {
        let p = ModelParams::ball(2).unwrap();
        assert!(solve_profile(p, 0.0, 1e-10).is_err());
        assert!(solve_profile(p, 10.0, 1e-3).is_err());
    }

    #[test]
    fn ball_is_cosh() {
        let pr = solve(2, 1.0);
        assert!((pr.f(1.0).unwrap() - 1.543_080_634_815_243_7).abs() < 1e-9);
        for s in pr.samples().iter().filter(|s| s.t <= 10.0) {
            assert!((s.f - s.t.cosh()).abs() < 1e-8, "t = {}", s.t);
        }
    }

    #[test]
    fn second_derivative_at_origin() {
        let pr = solve(2, 0.95);
        let s = pr.eval(0.0).unwrap();
        assert!((s.fpp / s.f - (3.0 - 2.0 / 0.9025)).abs() < 1e-12);
        assert_eq!(s.fp, 0.0);
        assert!((s.f - 0.95).abs() < 1e-15);
    }

    #[test]
    fn residual_and_monotonicity() {
        let pr = solve(3, 0.9);
        assert!(pr.max_residual() <= 10.0 * pr.tol());
        for w in pr.samples().windows(2) {
            assert!(w[1].f > w[0].f);
            // f'/f rounds to 1 once 1 - f'/f drops below machine epsilon
            let gap = pr.deviation(w[1].t).unwrap().w;
            assert!(gap > 0.0 && gap <= 1.0);
        }
    }

    #[test]
    fn first_integral_matches_ode_where_resolvable() {
        let pr = solve(2, 0.9);
        for t in [0.0, 0.5, 1.0, 2.0] {
            let s = pr.eval(t).unwrap();
            let q = pr.deviation(t).unwrap().q;
            assert!((s.fpp / s.f - 1.0 - q).abs() < 1e-9);
        }
    }

    #[test]
    fn claims_hold_and_ball_is_vacuous() {
        let rep = verify_claims(&solve(2, 0.9), 1e-3).unwrap();
        assert!(rep.all_pass());
        assert!(rep.outcomes.iter().all(|o| o.status == ClaimStatus::Pass));
        let ball = verify_claims(&solve(2, 1.0), 1e-3).unwrap();
        assert_eq!(ball.outcomes[2].status, ClaimStatus::Vacuous);
        let short = solve_profile(ModelParams::ball(2).unwrap(), 4.0, 1e-10).unwrap();
        assert!(matches!(verify_claims(&short, 1e-3), Err(Error::HorizonTooShort { .. })));
    }

    #[test]
    fn log_convexity_at_origin_n3() {
        let pr = solve(3, 0.9);
        let d = pr.deviation(0.0).unwrap();
        assert!(((d.q + d.w * (2.0 - d.w)) - (4.0 - 3.0 / 0.81)).abs() < 1e-12);
    }

    #[test]
    fn remainder_vanishes_for_ball_and_matches_profile() {
        let ball = solve(2, 1.0);
        assert_eq!(ball.ball_asymptote().unwrap().shift, 0.0);
        let pr = solve(2, 0.9);
        let asym = pr.ball_asymptote().unwrap();
        assert!(asym.consistency < 1e-9);
        let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let rem = pr.ball_remainder(&ts).unwrap();
        for (t, (d, dp)) in ts.iter().zip(rem) {
            let s = pr.eval(*t).unwrap();
            let big = (t + asym.shift).cosh();
            assert!(((s.f - big) - d).abs() < 1e-9 * s.f, "t = {t}");
            assert!(((s.fp - (t + asym.shift).sinh()) - dp).abs() < 1e-9 * s.f, "t = {t}");
        }
        let (a, resid) = pr.regressed_amplitude().unwrap();
        assert!(resid < 1e-8);
        assert!((a / asym.amplitude - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rescaling_to_unit_constant() {
        let k = einstein_rescaling(2, -1.0).unwrap();
        assert!((k * k - 6.0).abs() < 1e-14);
        assert!(einstein_rescaling(2, 1.0).is_err());
    }
}
