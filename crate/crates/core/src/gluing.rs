//! Radial gluing of the cone model into the ball and the Newton re-solve.
//!
//! The cone profile is written as `f_d = F + D` with `F = cosh(t + s)`. The
//! glued profile keeps the remainder inside the collar: `f_glue = F + χ D`.
//! Writing `𝒩(f) = f f'' + n f'^2 + n - (n+1) f^2`, both `𝒩(F)` and
//! `𝒩(F + D)` vanish, which leaves
//!
//! `𝒩(f_glue) = 𝒩₂(χD) - χ 𝒩₂(D) + F(χ''D + 2χ'D') + 2n F'χ'D`
//!
//! with `𝒩₂(G) = G G'' + n G'^2 - (n+1) G^2`. Every term is of the size of the
//! result, so the Einstein defect `E = 𝒩/f²` keeps relative precision even
//! when it is far below machine epsilon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::CutoffSpec;
use crate::comparison::{alpha_of_c, c_for_alpha, disk_profile};
use crate::decay;
use crate::error::{Error, Result};
use crate::profile::{solve_profile, MetricProfile, ModelParams, DEFAULT_TOL};

pub const MIN_GLUE_RADIUS: f64 = 8.0;
/// Outer margin `T - R` used when none is given.
pub const DEFAULT_MARGIN: f64 = 5.0;
/// Grid points per unit length of the glued grid.
pub const POINTS_PER_UNIT: f64 = 160.0;
/// Below this the defect is treated as identically zero.
pub const DEFECT_FLOOR: f64 = 1e-30;
pub const ALPHA_MATCH_TOL: f64 = 1e-4;
/// Horizon used when locating `c` from the cone order.
const ALPHA_HORIZON: f64 = 20.0;
pub const MAX_NEWTON_ITERS: usize = 25;
pub const CONVERGED_RESIDUAL: f64 = 1e-10;

/// Smooth model with cone parameter `α = d`, solved once and reused across radii.
#[derive(Debug, Clone)]
pub struct ConeModel {
    d: u32,
    profile: MetricProfile,
    shift: f64,
    regression_shift: f64,
}

impl ConeModel {
    pub fn solve(n: u32, d: u32, t_max: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("cone order must be positive".into()));
        }
        let alpha = d as f64;
        let c = c_for_alpha(n, alpha, ALPHA_HORIZON, DEFAULT_TOL)?;
        if d > 1 {
            let check = solve_profile(ModelParams::new(n, c)?, ALPHA_HORIZON, DEFAULT_TOL)?;
            let got = alpha_of_c(&disk_profile(&check)?)?;
            if (got - alpha).abs() > ALPHA_MATCH_TOL {
                return Err(Error::BisectionFailure { alpha });
            }
        }
        let profile = solve_profile(ModelParams::new(n, c)?, t_max, DEFAULT_TOL)?;
        let shift = profile.ball_asymptote()?.shift;
        let regression_shift = match profile.regressed_amplitude() {
            Ok((a, _)) => (2.0 * a).ln(),
            Err(_) => f64::NAN,
        };
        Ok(Self { d, profile, shift, regression_shift })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.profile.n()
    }

    pub fn c(&self) -> f64 {
        self.profile.params().c()
    }

    pub fn profile(&self) -> &MetricProfile {
        &self.profile
    }

    /// `s` with `f_d - cosh(t + s) → 0`, from the decaying remainder.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `log(2A)` with `A` regressed from `f e^{-t}` near the horizon.
    pub fn regression_shift(&self) -> f64 {
        self.regression_shift
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluedProfile {
    pub n: u32,
    pub d: u32,
    pub c: f64,
    pub r: f64,
    pub t_end: f64,
    pub shift: f64,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub chi: Vec<f64>,
    /// `E = f''/f + n f'^2/f^2 + n/f^2 - (n+1)` of the glued profile.
    pub defect: Vec<f64>,
    /// Remainder `f_d - F` on the grid, kept for the closeness check.
    remainder: Vec<f64>,
}

fn second_order_part(n: f64, g: f64, g1: f64, g2: f64) -> f64 {
    g * g2 + n * g1 * g1 - (n + 1.0) * g * g
}

pub fn glue(cone: &ConeModel, r: f64, t_end: f64) -> Result<GluedProfile> {
    if !(r >= MIN_GLUE_RADIUS) {
        return Err(Error::RadiusTooSmall { r, min: MIN_GLUE_RADIUS });
    }
    if !(t_end >= r + 2.0) {
        return Err(Error::InvalidArgument(format!("T = {t_end} must be at least R + 2")));
    }
    let profile = cone.profile();
    if t_end > profile.t_max() {
        return Err(Error::HorizonTooShort { t_max: profile.t_max(), required: t_end });
    }
    let spec = CutoffSpec::new(r, 2)?;
    let nf = profile.params().nf();
    let s = cone.shift;
    let points = (t_end * POINTS_PER_UNIT).ceil() as usize + 1;
    let grid: Vec<f64> = (0..points).map(|i| t_end * i as f64 / (points - 1) as f64).collect();
    let rem = profile.ball_remainder(&grid)?;
    let m = grid.len();
    let (mut f, mut fp, mut fpp, mut chi, mut defect, mut remainder) =
        (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for (i, &t) in grid.iter().enumerate() {
        let (d0, d1) = rem[i];
        let forcing = profile.deviation(t)?.q * profile.f(t)?;
        let d2 = d0 + forcing;
        let (big, big1) = ((t + s).cosh(), (t + s).sinh());
        let [x0, x1, x2] = spec.radial_jet(t);
        let (g0, g1, g2) = (x0 * d0, x1 * d0 + x0 * d1, x2 * d0 + 2.0 * x1 * d1 + x0 * d2);
        let numer = second_order_part(nf, g0, g1, g2) - x0 * second_order_part(nf, d0, d1, d2)
            + big * (x2 * d0 + 2.0 * x1 * d1)
            + 2.0 * nf * big1 * x1 * d0;
        f[i] = big + g0;
        fp[i] = big1 + g1;
        fpp[i] = big + g2;
        chi[i] = x0;
        defect[i] = numer / (f[i] * f[i]);
        remainder[i] = d0;
    }
    Ok(GluedProfile {
        n: profile.n(),
        d: cone.d,
        c: cone.c(),
        r,
        t_end,
        shift: s,
        grid,
        f,
        fp,
        fpp,
        chi,
        defect,
        remainder,
    })
}

/// Solves the cone model and glues it at radius `r` with outer end `t_end`.
pub fn build_glued_profile(n: u32, d: u32, r: f64, t_end: f64) -> Result<GluedProfile> {
    let cone = ConeModel::solve(n, d, t_end.max(ALPHA_HORIZON))?;
    glue(&cone, r, t_end)
}

impl GluedProfile {
    pub fn sup_defect(&self) -> f64 {
        self.defect.iter().fold(0.0, |a, &e| a.max(e.abs()))
    }

    /// Smallest interval containing every nonzero defect sample.
    pub fn defect_support(&self) -> Option<(f64, f64)> {
        let first = self.defect.iter().position(|&e| e != 0.0)?;
        let last = self.defect.iter().rposition(|&e| e != 0.0)?;
        Some((self.grid[first], self.grid[last]))
    }

    /// `sup |f_glue - F| / F` over `[R/4, R/2]`.
    pub fn glue_closeness(&self) -> f64 {
        self.grid
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t >= self.r / 4.0 && t <= self.r / 2.0)
            .map(|(i, &t)| (self.chi[i] * self.remainder[i] / (t + self.shift).cosh()).abs())
            .fold(0.0, f64::max)
    }

    fn numerator(&self, i: usize) -> f64 {
        self.defect[i] * self.f[i] * self.f[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectDecay {
    pub rate: f64,
    pub r_squared: f64,
}

fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(Error::DegenerateFit { count: radii.len(), required: 4 });
    }
    if let Some(&r) = radii.iter().find(|&&r| !(r >= MIN_GLUE_RADIUS)) {
        return Err(Error::RadiusTooSmall { r, min: MIN_GLUE_RADIUS });
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be increasing".into()));
    }
    Ok(())
}

/// Glues at every radius in parallel, each with `T = R + 5`.
pub fn glue_sweep(cone: &ConeModel, radii: &[f64]) -> Result<Vec<GluedProfile>> {
    radii.par_iter().map(|&r| glue(cone, r, r + DEFAULT_MARGIN)).collect()
}

/// Fits `log sup|E| = const - rate·R`.
pub fn defect_decay(n: u32, d: u32, radii: &[f64]) -> Result<(DefectDecay, Vec<f64>)> {
    validate_radii(radii)?;
    let horizon = radii[radii.len() - 1] + DEFAULT_MARGIN;
    let cone = ConeModel::solve(n, d, horizon.max(ALPHA_HORIZON))?;
    let sups: Vec<f64> = glue_sweep(&cone, radii)?.iter().map(GluedProfile::sup_defect).collect();
    fit_sups(radii, &sups).map(|fit| (fit, sups))
}

/// The regression step of [`defect_decay`].
pub fn fit_sups(radii: &[f64], sups: &[f64]) -> Result<DefectDecay> {
    let (&r, &sup) = radii.iter().zip(sups).next_back().ok_or(Error::DegenerateFit { count: 0, required: 4 })?;
    if !(sup >= DEFECT_FLOOR) {
        return Err(Error::DefectUnderflow { r, sup, floor: DEFECT_FLOOR });
    }
    let pts: Vec<(f64, f64)> = radii.iter().zip(sups).map(|(&r, &v)| (r, v.ln())).collect();
    let line = decay::fit_line(&pts)?;
    Ok(DefectDecay { rate: -line.slope, r_squared: line.r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub r: f64,
    pub newton_iters: usize,
    /// `sup |u|/f + sup |u'|/f + sup |u''|/f` for the correction `u = f_corrected - f_glue`.
    pub correction_norm: f64,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub converged: bool,
    /// Smallest `C` with `f_glue/C ≤ f_corrected ≤ C f_glue`.
    pub metric_bound: f64,
    /// `-f''/f` of the corrected profile at the divisor.
    pub sup_sectional_at_divisor: f64,
    /// The same for the cone model, `-(n+1) + n/c²`.
    pub model_sup_sectional: f64,
    pub corrected: Vec<f64>,
}

/// Discrete pieces of `𝒩(f_glue + u) - 𝒩(f_glue)` at node `i`.
struct Stencil {
    d1: f64,
    d2: f64,
}

fn stencil(u: &[f64], i: usize, h: f64) -> Stencil {
    if i == 0 {
        // ghost node u_{-1} = u_1 encodes u'(0) = 0
        Stencil { d1: 0.0, d2: 2.0 * (u[1] - u[0]) / (h * h) }
    } else {
        Stencil { d1: (u[i + 1] - u[i - 1]) / (2.0 * h), d2: (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) }
    }
}

fn scaled_residual(g: &GluedProfile, u: &[f64], h: f64) -> Vec<f64> {
    let nf = g.n as f64;
    (0..u.len() - 1)
        .map(|i| {
            let st = stencil(u, i, h);
            let (f, f1, f2, v) = (g.f[i], g.fp[i], g.fpp[i], u[i]);
            let delta = f * st.d2 + v * f2 + v * st.d2 + nf * (2.0 * f1 * st.d1 + st.d1 * st.d1)
                - (nf + 1.0) * (2.0 * f * v + v * v);
            (g.numerator(i) + delta) / ((f + v) * (f + v))
        })
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Thomas algorithm; `lower[0]` and `upper[m-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return None;
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = if i + 1 < m { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Newton iteration for `𝒩(f) = 0` with `f'(0) = 0` and `f(T) = f_glue(T)`.
///
/// The unknown is the correction `u` on the glued grid; `𝒩(f_glue)` enters
/// exactly and only the derivatives of `u` are discretized.
pub fn newton_resolve(glued: &GluedProfile) -> Result<PerturbationReport> {
    let m = glued.grid.len();
    let h = glued.grid[1] - glued.grid[0];
    let nf = glued.n as f64;
    let mut u = vec![0.0; m];
    let mut res = scaled_residual(glued, &u, h);
    let initial = sup(&res);
    if !initial.is_finite() {
        return Err(Error::NewtonDivergence { iters: 0, residual: initial });
    }
    let mut iters = 0;
    let mut current = initial;
    while current > 0.0 && current > 1e-12 * initial {
        if iters == MAX_NEWTON_ITERS {
            return Err(Error::NewtonDivergence { iters, residual: current });
        }
        let k = m - 1;
        let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for i in 0..k {
            let st = stencil(&u, i, h);
            let (f, f1, f2) = (glued.f[i], glued.fp[i], glued.fpp[i]);
            let full = f + u[i];
            let scale = 1.0 / (full * full);
            let drift = nf * (2.0 * f1 + 2.0 * st.d1) / (2.0 * h);
            diag[i] = scale * (-2.0 * full / (h * h) + f2 + st.d2 - 2.0 * (nf + 1.0) * full);
            if i == 0 {
                upper[i] = scale * 2.0 * full / (h * h);
            } else {
                lower[i] = scale * (full / (h * h) - drift);
                if i + 1 < k {
                    upper[i] = scale * (full / (h * h) + drift);
                }
            }
            rhs[i] = -res[i] * (full * full) * scale;
        }
        let du = solve_tridiagonal(&lower, &diag, &upper, &rhs)
            .ok_or(Error::NewtonDivergence { iters, residual: current })?;
        let damping = if iters == 0 { 0.5 } else { 1.0 };
        let step = du.iter().zip(&glued.f).map(|(d, f)| (d / f).abs()).fold(0.0, f64::max);
        for i in 0..k {
            u[i] += damping * du[i];
        }
        iters += 1;
        res = scaled_residual(glued, &u, h);
        let next = sup(&res);
        if !next.is_finite() || glued.f.iter().zip(&u).any(|(f, v)| !(f + v > 0.0)) {
            return Err(Error::NewtonDivergence { iters, residual: next });
        }
        current = next;
        let size = u.iter().zip(&glued.f).map(|(v, f)| (v / f).abs()).fold(0.0, f64::max);
        if damping == 1.0 && step <= 1e-14 * size {
            break;
        }
    }
    let converged = current <= CONVERGED_RESIDUAL;
    let rel = |vals: Vec<f64>| vals.iter().zip(&glued.f).map(|(v, f)| (v / f).abs()).fold(0.0, f64::max);
    let d1: Vec<f64> = (0..m - 1).map(|i| stencil(&u, i, h).d1).collect();
    let d2: Vec<f64> = (0..m - 1).map(|i| stencil(&u, i, h).d2).collect();
    let correction_norm = rel(u.clone()) + rel(d1) + rel(d2.clone());
    let corrected: Vec<f64> = glued.f.iter().zip(&u).map(|(f, v)| f + v).collect();
    let metric_bound = glued
        .f
        .iter()
        .zip(&corrected)
        .map(|(a, b)| (a / b).max(b / a))
        .fold(1.0, f64::max);
    let fpp0 = glued.fpp[0] + d2[0];
    let c = glued.c;
    Ok(PerturbationReport {
        r: glued.r,
        newton_iters: iters,
        correction_norm,
        initial_residual: initial,
        final_residual: current,
        converged,
        metric_bound,
        sup_sectional_at_divisor: -fpp0 / corrected[0],
        model_sup_sectional: -(nf + 1.0) + nf / (c * c),
        corrected,
    })
}
