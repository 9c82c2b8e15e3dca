//! The unit ball with the Kähler metric `g_{jk̄} = [(1-|z|²)δ_jk + z̄_j z_k] / (4(1-|z|²)²)`.
//!
//! Real lengths are `ds² = 4 Σ g_{jk̄} dz_j dz̄_k`, so sectional curvatures lie in
//! `[-4, -1]` and the origin sees the Euclidean metric.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOUNDARY_MARGIN: f64 = 1e-12;
/// Step of the geodesic oracle's RK4 integrator in the affine parameter.
pub const ORACLE_STEP: f64 = 1e-3;
pub const MIN_COLLAR_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    z: Vec<Complex64>,
}

fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

fn hermitian_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

impl BallPoint {
    pub fn new(z: Vec<Complex64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidArgument("a ball point needs at least one coordinate".into()));
        }
        let norm = norm_sqr(&z).sqrt();
        if !(norm < 1.0 - BOUNDARY_MARGIN) {
            return Err(Error::BoundaryPoint { norm });
        }
        Ok(Self { z })
    }

    pub fn from_real(re: &[f64]) -> Result<Self> {
        Self::new(re.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn origin(n: usize) -> Self {
        Self { z: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.z)
    }

    /// `u = 1 + |z_1|²/(1 - |z|²)`, equal to `cosh² d(p, B₀)`.
    pub fn divisor_invariant(&self) -> f64 {
        1.0 + self.z[0].norm_sqr() / (1.0 - self.norm_sqr())
    }
}

fn metric_matrix(z: &[Complex64]) -> DMatrix<Complex64> {
    let n = z.len();
    let s = 1.0 - norm_sqr(z);
    DMatrix::from_fn(n, n, |j, k| {
        let delta = if j == k { s } else { 0.0 };
        (Complex64::new(delta, 0.0) + z[j].conj() * z[k]) / (4.0 * s * s)
    })
}

pub fn ball_metric(p: &BallPoint) -> DMatrix<Complex64> {
    metric_matrix(&p.z)
}

/// `d(p, B₀) = arccosh sqrt(u)`, evaluated as `asinh(|z_1| / sqrt(1 - |z|²))`.
pub fn distance_to_divisor(p: &BallPoint) -> f64 {
    (p.z[0].norm() / (1.0 - p.norm_sqr()).sqrt()).asinh()
}

/// Closed-form distance, `cosh² d = |1 - <p,q>|² / ((1 - |p|²)(1 - |q|²))`.
pub fn ball_distance(p: &BallPoint, q: &BallPoint) -> f64 {
    let num = (Complex64::new(1.0, 0.0) - hermitian_dot(&p.z, &q.z)).norm_sqr();
    let c2 = num / ((1.0 - p.norm_sqr()) * (1.0 - q.norm_sqr()));
    (c2 - 1.0).max(0.0).sqrt().asinh()
}

/// Automorphism exchanging `0` and `a`; it preserves `B₀` when `a_1 = 0`.
pub fn ball_automorphism(a: &BallPoint, z: &BallPoint) -> Result<BallPoint> {
    if a.n() != z.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: z.n() });
    }
    let aa = a.norm_sqr();
    if aa == 0.0 {
        return Ok(BallPoint { z: z.z.iter().map(|c| -c).collect() });
    }
    let za = hermitian_dot(&z.z, &a.z);
    let sa = (1.0 - aa).sqrt();
    let denom = Complex64::new(1.0, 0.0) - za;
    let w = (0..a.n())
        .map(|i| {
            let proj = za * a.z[i] / aa;
            (a.z[i] - proj - sa * (z.z[i] - proj)) / denom
        })
        .collect();
    BallPoint::new(w)
}

/// `-½ ∂∂̄ log det g` by Wirtinger central differences with step `h`.
pub fn ricci_form_numeric(p: &BallPoint, h: f64) -> DMatrix<Complex64> {
    let n = p.n();
    let log_det = |z: &[Complex64]| -> f64 { metric_matrix(z).determinant().re.ln() };
    let shifted = |j: usize, dj: Complex64, k: usize, dk: Complex64| -> f64 {
        let mut z = p.z.clone();
        z[j] += dj;
        z[k] += dk;
        log_det(&z)
    };
    let one = Complex64::new(h, 0.0);
    let eye = Complex64::new(0.0, h);
    DMatrix::from_fn(n, n, |j, k| {
        // ∂_j ∂_k̄ = ¼ (∂_xj - i ∂_yj)(∂_xk + i ∂_yk)
        let mixed = |dj: Complex64, dk: Complex64| {
            (shifted(j, dj, k, dk) - shifted(j, dj, k, -dk) - shifted(j, -dj, k, dk) + shifted(j, -dj, k, -dk))
                / (4.0 * h * h)
        };
        let xx = mixed(one, one);
        let yy = mixed(eye, eye);
        let xy = mixed(one, eye);
        let yx = mixed(eye, one);
        let ddbar = 0.25 * Complex64::new(xx + yy, xy - yx);
        -0.5 * ddbar
    })
}

/// Geodesic acceleration `−Γ(v, v)` of the ball metric at `z`, written into `out`.
fn geodesic_acceleration(z: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
    let s = 1.0 - norm_sqr(z);
    // a_l = Σ_jk v_j v_k ∂_j g_{k l̄}
    let zv: Complex64 = z.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let mut za = Complex64::new(0.0, 0.0);
    for l in 0..z.len() {
        out[l] = 0.25 * (2.0 * zv * v[l] / (s * s) + 2.0 * zv * zv * z[l] / (s * s * s));
        za += z[l].conj() * out[l];
    }
    // (Gᵀ)⁻¹ = 4s(I − z z*) because s + |z|² = 1
    for l in 0..z.len() {
        out[l] = -4.0 * s * (out[l] - z[l] * za);
    }
}

/// RK4 geodesic from `z0` with initial velocity `v0` on the unit parameter interval.
fn shoot(z0: &[Complex64], v0: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = z0.len();
    let steps = (1.0 / ORACLE_STEP).round() as usize;
    let h = 1.0 / steps as f64;
    let zero = Complex64::new(0.0, 0.0);
    let mut z = z0.to_vec();
    let mut v = v0.to_vec();
    let (mut zt, mut vt) = (vec![zero; n], vec![zero; n]);
    let (mut v2, mut v3, mut v4) = (vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut k = [vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]];
    for _ in 0..steps {
        geodesic_acceleration(&z, &v, &mut k[0]);
        for i in 0..n {
            zt[i] = z[i] + v[i] * (h / 2.0);
            v2[i] = v[i] + k[0][i] * (h / 2.0);
        }
        geodesic_acceleration(&zt, &v2, &mut k[1]);
        for i in 0..n {
            zt[i] = z[i] + v2[i] * (h / 2.0);
            v3[i] = v[i] + k[1][i] * (h / 2.0);
        }
        geodesic_acceleration(&zt, &v3, &mut k[2]);
        for i in 0..n {
            zt[i] = z[i] + v3[i] * h;
            v4[i] = v[i] + k[2][i] * h;
        }
        geodesic_acceleration(&zt, &v4, &mut k[3]);
        for i in 0..n {
            vt[i] = v[i] + (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]) * (h / 6.0);
            z[i] += (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]) * (h / 6.0);
        }
        std::mem::swap(&mut v, &mut vt);
        if !(norm_sqr(&z) < 1.0) {
            return None;
        }
    }
    Some(z)
}

fn pack(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn unpack(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Initial velocity of the geodesic from `p` to `q` on `[0, 1]`, by Newton
/// iteration on the shooting map with a finite-difference Jacobian.
pub fn shoot_velocity(p: &BallPoint, q: &BallPoint, guess: Option<&[Complex64]>, tol: f64) -> Result<Vec<Complex64>> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch { expected: p.n(), got: q.n() });
    }
    let dim = 2 * p.n();
    let target = pack(&q.z);
    let miss = |x: &[f64]| -> Option<Vec<f64>> {
        let end = pack(&shoot(&p.z, &unpack(x))?);
        Some(end.iter().zip(&target).map(|(a, b)| a - b).collect())
    };
    let mut x = match guess {
        Some(g) => pack(g),
        None => q.z.iter().zip(&p.z).flat_map(|(a, b)| [(a - b).re, (a - b).im]).collect(),
    };
    let mut r = miss(&x).ok_or_else(|| Error::NoConvergence("initial shot left the ball".into()))?;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    for _ in 0..50 {
        if norm(&r) <= tol {
            return Ok(unpack(&x));
        }
        let eps = 1e-7;
        let mut jac = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut xp = x.clone();
            xp[c] += eps;
            let mut xm = x.clone();
            xm[c] -= eps;
            let (rp, rm) = match (miss(&xp), miss(&xm)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::NoConvergence("shooting Jacobian left the ball".into())),
            };
            for i in 0..dim {
                jac[(i, c)] = (rp[i] - rm[i]) / (2.0 * eps);
            }
        }
        let dx = jac
            .lu()
            .solve(&DVector::from_vec(r.clone()))
            .ok_or_else(|| Error::NoConvergence("singular shooting Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let xt: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, b)| a - lambda * b).collect();
            if let Some(rt) = miss(&xt) {
                if norm(&rt) < norm(&r) || lambda < 1e-3 {
                    x = xt;
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(Error::NoConvergence("shooting line search stalled".into()));
            }
        }
    }
    if norm(&r) <= tol {
        Ok(unpack(&x))
    } else {
        Err(Error::NoConvergence(format!("shooting residual {:e} after 50 iterations", norm(&r))))
    }
}

/// Riemannian length of the tangent vector `v` at `p`.
pub fn tangent_length(p: &BallPoint, v: &[Complex64]) -> f64 {
    let g = ball_metric(p);
    let vbar: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
    let gv = &g * DVector::from_vec(vbar);
    let inner: Complex64 = (0..v.len()).map(|j| v[j] * gv[j]).sum();
    (4.0 * inner.re).max(0.0).sqrt()
}

/// Distance by shooting on the geodesic equation; independent of any closed form.
pub fn geodesic_distance_oracle(p: &BallPoint, q: &BallPoint, tol: f64) -> Result<f64> {
    geodesic_distance_warm(p, q, tol, None).map(|(d, _)| d)
}

/// As [`geodesic_distance_oracle`], reusing an initial velocity guess; returns the velocity too.
pub fn geodesic_distance_warm(
    p: &BallPoint,
    q: &BallPoint,
    tol: f64,
    guess: Option<&[Complex64]>,
) -> Result<(f64, Vec<Complex64>)> {
    if norm_sqr(&p.z.iter().zip(&q.z).map(|(a, b)| a - b).collect::<Vec<_>>()) == 0.0 {
        return Ok((0.0, vec![Complex64::new(0.0, 0.0); p.n()]));
    }
    let v = shoot_velocity(p, q, guess, (tol * 1e-3).max(1e-13))?;
    Ok((tangent_length(p, &v), v))
}

/// Simplex search used to minimize oracle distances over the divisor.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, xtol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < xtol {
            break;
        }
        let centroid: Vec<f64> =
            (0..d).map(|i| simplex[..d].iter().map(|(x, _)| x[i]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc = along(if fr < simplex[d].1 { 0.5 } else { -0.5 });
            let fc = f(&xc);
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = entry.0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Oracle distance from `p` to the divisor: geodesic distances minimized over divisor points.
pub fn divisor_distance_by_oracle(p: &BallPoint, tol: f64) -> Result<f64> {
    let n = p.n();
    if n < 2 {
        return Err(Error::InvalidArgument("the divisor needs n >= 2".into()));
    }
    let start: Vec<f64> = p.z[1..].iter().flat_map(|c| [c.re, c.im]).collect();
    let warm = std::cell::RefCell::new(None::<Vec<Complex64>>);
    let err = std::cell::RefCell::new(None::<Error>);
    let objective = |x: &[f64]| -> f64 {
        let mut z = vec![Complex64::new(0.0, 0.0)];
        z.extend(unpack(x));
        let Ok(q) = BallPoint::new(z) else { return f64::INFINITY };
        let guess = warm.borrow().clone();
        match geodesic_distance_warm(p, &q, tol, guess.as_deref()) {
            Ok((d, v)) => {
                *warm.borrow_mut() = Some(v);
                d
            }
            Err(e) => {
                *err.borrow_mut() = Some(e);
                f64::INFINITY
            }
        }
    };
    let (_, best) = nelder_mead(objective, &start, 0.05, 1e-5, 400);
    if !best.is_finite() {
        return Err(err.into_inner().unwrap_or_else(|| Error::NoConvergence("divisor search failed".into())));
    }
    Ok(best)
}

/// Collar cut-off `χ̃_R = ξ(2 log u / R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    r: f64,
    max_order: u32,
}

impl CutoffSpec {
    pub fn new(r: f64, max_order: u32) -> Result<Self> {
        if !(r >= MIN_COLLAR_RADIUS) {
            return Err(Error::RadiusTooSmall { r, min: MIN_COLLAR_RADIUS });
        }
        Ok(Self { r, max_order })
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    /// Cut-off as a function of the distance `d` to the divisor.
    pub fn radial(&self, d: f64) -> f64 {
        let log_cosh = d.abs() + (-2.0 * d.abs()).exp().ln_1p() - std::f64::consts::LN_2;
        collar_profile(4.0 * log_cosh / self.r)
    }

    /// `(χ, χ', χ'')` in the distance `d`, in closed form.
    pub fn radial_jet(&self, d: f64) -> [f64; 3] {
        let d = d.abs();
        let log_cosh = d + (-2.0 * d).exp().ln_1p() - std::f64::consts::LN_2;
        let s = 4.0 * log_cosh / self.r;
        let s1 = 4.0 * d.tanh() / self.r;
        let s2 = 4.0 / (self.r * d.cosh().powi(2));
        let [x0, x1, x2] = collar_jet(s);
        [x0, x1 * s1, x2 * s1 * s1 + x1 * s2]
    }

    /// `d^k χ / dd^k`: closed form up to order 2, central differences above.
    pub fn radial_derivative(&self, d: f64, k: u32) -> f64 {
        match k {
            0..=2 => self.radial_jet(d)[k as usize],
            _ => {
                let h = 1e-3 * self.r / 8.0;
                (self.radial_derivative(d + h, k - 1) - self.radial_derivative(d - h, k - 1)) / (2.0 * h)
            }
        }
    }
}

/// `(φ, φ', φ'')` for `φ(x) = e^{-1/x}` on `x > 0`.
fn bump_jet(x: f64) -> [f64; 3] {
    let v = bump(x);
    if v == 0.0 {
        return [0.0; 3];
    }
    let inv = 1.0 / x;
    [v, v * inv * inv, v * inv.powi(3) * (inv - 2.0)]
}

/// `(ξ, ξ', ξ'')` of [`collar_profile`].
pub fn collar_jet(s: f64) -> [f64; 3] {
    if s <= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    if s >= 1.5 {
        return [0.0; 3];
    }
    let [a, a1, a2] = bump_jet(1.5 - s);
    let [b, b1, b2] = bump_jet(s - 1.0);
    // a(s) = φ(3/2 - s) flips the sign of odd derivatives
    let (a1, b1) = (-a1, b1);
    let sum = a + b;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    let sum1 = a1 + b1;
    [a / sum, num / (sum * sum), (num1 * sum - 2.0 * num * sum1) / sum.powi(3)]
}

fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth nonincreasing step: 1 on `(-∞, 1]`, 0 on `[3/2, ∞)`.
pub fn collar_profile(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 1.5 {
        0.0
    } else {
        let a = bump(1.5 - s);
        a / (a + bump(s - 1.0))
    }
}

pub fn cutoff(spec: &CutoffSpec, p: &BallPoint) -> f64 {
    collar_profile(2.0 * p.divisor_invariant().ln() / spec.r)
}

const DERIVATIVE_GRID: usize = 4000;

/// Empirical `sup_d |d^k χ / dd^k|` over `d ∈ [0, R]`.
pub fn cutoff_derivative_bounds(spec: &CutoffSpec, k: u32) -> Result<f64> {
    if k > spec.max_order {
        return Err(Error::InvalidArgument(format!("order {k} exceeds max_order {}", spec.max_order)));
    }
    let r = spec.r;
    Ok((0..=DERIVATIVE_GRID)
        .map(|i| spec.radial_derivative(r * i as f64 / DERIVATIVE_GRID as f64, k).abs())
        .fold(0.0, f64::max))
}

/// `sup |∇²χ|` for the full covariant Hessian on `B^n`. The level sets of the
/// distance have principal curvatures `2 coth 2d` (once) and `tanh d`
/// (`2n - 2` times), so this norm carries a first-derivative term.
pub fn cutoff_hessian_sup(spec: &CutoffSpec, n: u32) -> f64 {
    let r = spec.r;
    (1..=DERIVATIVE_GRID)
        .map(|i| {
            let d = r * i as f64 / DERIVATIVE_GRID as f64;
            let c1 = spec.radial_derivative(d, 1);
            let c2 = spec.radial_derivative(d, 2);
            let shape = 4.0 / (2.0 * d).tanh().powi(2) + (2.0 * n as f64 - 2.0) * d.tanh().powi(2);
            (c2 * c2 + c1 * c1 * shape).sqrt()
        })
        .fold(0.0, f64::max)
}
