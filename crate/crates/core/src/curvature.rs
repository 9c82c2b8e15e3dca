//! Curvature of the invariant metric at distance `t` from the divisor.
//!
//! Frame: `(ξ, Jξ, e_1, Je_1, …)` with `ξ` the unit radial vector. In this
//! frame the curvature tensor is
//! `(K_disk/4) P(g_D, g_D) + 2μ P(g_D, g_⊥) - m P(g_⊥, g_⊥)`
//! where `g_D`, `g_⊥` are the metric restricted to the complex disk direction and
//! to its orthogonal complement and `P` is [`tensor::kahler_product`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::MetricProfile;
use crate::tensor::{self, complex_structure, RiemannTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub t: f64,
    /// Gauss curvature of totally real planes `-f''/f`.
    pub k_tr: f64,
    /// Gauss curvature of the complex disk orthogonal to the divisor.
    pub k_disk: f64,
    /// Principal curvature `f'/f` of the distance hypersurfaces.
    pub lambda: f64,
    /// Horizontal multiplier `(f'^2 + 1)/f^2`.
    pub m: f64,
    /// Curvature of mixed planes spanned by a disk and a horizontal vector.
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct CurvatureProfile<'a> {
    profile: &'a MetricProfile,
    samples: Vec<CurvatureSample>,
}

fn sample_from(n: u32, t: f64, f: f64, fp: f64, fpp: f64) -> CurvatureSample {
    let nf = n as f64;
    let k_tr = -fpp / f;
    CurvatureSample {
        t,
        k_tr,
        k_disk: -2.0 * (nf + 1.0) - 2.0 * (nf - 1.0) * k_tr,
        lambda: fp / f,
        m: (fp * fp + 1.0) / (f * f),
        mu: k_tr,
    }
}

pub fn curvature_profile(profile: &MetricProfile) -> CurvatureProfile<'_> {
    let n = profile.n();
    let samples = profile.samples().iter().map(|s| sample_from(n, s.t, s.f, s.fp, s.fpp)).collect();
    CurvatureProfile { profile, samples }
}

impl<'a> CurvatureProfile<'a> {
    pub fn profile(&self) -> &'a MetricProfile {
        self.profile
    }

    pub fn samples(&self) -> &[CurvatureSample] {
        &self.samples
    }

    pub fn at(&self, t: f64) -> Result<CurvatureSample> {
        let s = self.profile.eval(t)?;
        Ok(sample_from(self.profile.n(), t, s.f, s.fp, s.fpp))
    }

    /// Operator minus the ball operator at the same `t`, built from the
    /// cancellation-free excess `q = f''/f - 1`.
    pub fn ball_deviation_operator(&self, t: f64) -> Result<RiemannTensor> {
        let q = self.profile.deviation(t)?.q;
        let nf = self.profile.params().nf();
        assemble_tensor(self.profile.n() as usize, 2.0 * (nf - 1.0) * q, -q, -q / nf)
    }
}

/// Tensor with disk curvature `k_disk`, mixed curvature `mu` and horizontal multiplier `m`.
pub fn assemble_tensor(n: usize, k_disk: f64, mu: f64, m: f64) -> Result<RiemannTensor> {
    if n < 1 {
        return Err(Error::InvalidArgument("complex dimension must be positive".into()));
    }
    let dim = 2 * n;
    let g_disk = DMatrix::from_fn(dim, dim, |a, b| if a == b && a < 2 { 1.0 } else { 0.0 });
    let g_perp = DMatrix::from_fn(dim, dim, |a, b| if a == b && a >= 2 { 1.0 } else { 0.0 });
    let dd = tensor::kahler_product(&g_disk, &g_disk)?;
    let dp = tensor::kahler_product(&g_disk, &g_perp)?;
    let pp = tensor::kahler_product(&g_perp, &g_perp)?;
    Ok(RiemannTensor::from_fn(dim, |a, b, c, d| {
        0.25 * k_disk * dd.component(a, b, c, d) + 2.0 * mu * dp.component(a, b, c, d)
            - m * pp.component(a, b, c, d)
    }))
}

/// Curvature operator at one point, with its data in the adapted frame.
#[derive(Debug, Clone)]
pub struct PointCurvatureOperator {
    pub n: usize,
    pub t: f64,
    pub values: CurvatureSample,
    pub tensor: RiemannTensor,
}

/// Block view of the operator on `Λ² = A₁ ⊕ A₂ ⊕ A₃`.
#[derive(Debug, Clone)]
pub struct OperatorBlocks {
    /// `<R(ξ∧Jξ), ξ∧Jξ>`, the disk curvature.
    pub a1: f64,
    /// Restriction to mixed bivectors `{ξ, Jξ} ∧ {e_k, Je_k}`.
    pub a2: DMatrix<f64>,
    /// Restriction to horizontal bivectors.
    pub a3: DMatrix<f64>,
    /// Coupling of `ξ∧Jξ` with the horizontal bivectors.
    pub a1_a3: DVector<f64>,
    /// Largest entry coupling `A₂` with `A₁ ⊕ A₃`; zero since `A₂` is invariant.
    pub a2_leak: f64,
}

pub fn assemble_point_operator(cprof: &CurvatureProfile<'_>, t: f64) -> Result<PointCurvatureOperator> {
    let t_max = cprof.profile.t_max();
    if !(t >= 0.0 && t <= t_max) {
        return Err(Error::OutOfRange { t, t_max });
    }
    let values = cprof.at(t)?;
    let n = cprof.profile.n() as usize;
    let tensor = assemble_tensor(n, values.k_disk, values.mu, values.m)?;
    Ok(PointCurvatureOperator { n, t, values, tensor })
}

fn bivector_class(a: usize, b: usize) -> u8 {
    match (a < 2, b < 2) {
        (true, true) => 1,
        (false, false) => 3,
        _ => 2,
    }
}

impl PointCurvatureOperator {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn ricci_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.tensor.ricci()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn blocks(&self) -> OperatorBlocks {
        let m = self.dim();
        let op = self.tensor.operator();
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
        let idx = |class: u8| -> Vec<usize> {
            pairs.iter().enumerate().filter(|(_, p)| bivector_class(p.0, p.1) == class).map(|(i, _)| i).collect()
        };
        let (i1, i2, i3) = (idx(1), idx(2), idx(3));
        let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| op[(r[i], c[j])]);
        let mut leak: f64 = 0.0;
        for &i in &i2 {
            for &j in i1.iter().chain(&i3) {
                leak = leak.max(op[(i, j)].abs());
            }
        }
        OperatorBlocks {
            a1: op[(i1[0], i1[0])],
            a2: sub(&i2, &i2),
            a3: sub(&i3, &i3),
            a1_a3: DVector::from_iterator(i3.len(), i3.iter().map(|&j| op[(i1[0], j)])),
            a2_leak: leak,
        }
    }

    /// `S_v[a][b] = R(e_a, v, v, e_b)`, so `K(u, v) = uᵀ S_v u` for orthonormal `u, v`.
    fn jacobi_matrix(&self, v: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |a, b| {
            let mut acc = 0.0;
            for c in 0..m {
                if v[c] == 0.0 {
                    continue;
                }
                for d in 0..m {
                    acc += self.tensor.component(a, c, d, b) * v[c] * v[d];
                }
            }
            acc
        })
    }

    /// Curvatures of the closed-form candidate planes of the adapted frame.
    pub fn candidate_planes(&self) -> Vec<(&'static str, Plane)> {
        let m = self.dim();
        let e = |a: usize| (0..m).map(|i| if i == a { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        let mut out = vec![
            ("disk", Plane::new(e(0), e(1))),
            ("totally real", Plane::new(e(0), e(2))),
            ("horizontal holomorphic", Plane::new(e(2), e(3))),
        ];
        if self.n >= 3 {
            out.push(("horizontal totally real", Plane::new(e(2), e(4))));
        }
        out
    }
}

/// Oriented orthonormal pair spanning a 2-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(a: &mut [f64]) {
    let s = dot(a, a).sqrt();
    a.iter_mut().for_each(|x| *x /= s);
}

impl Plane {
    /// Gram-Schmidt orthonormalization of `(u, v)`.
    pub fn new(mut u: Vec<f64>, mut v: Vec<f64>) -> Self {
        normalize(&mut u);
        let p = dot(&u, &v);
        v.iter_mut().zip(&u).for_each(|(y, x)| *y -= p * x);
        normalize(&mut v);
        Self { u, v }
    }

    /// `<Ju, v>`: zero for totally real planes, `±1` for complex lines.
    pub fn kahler_cosine(&self) -> f64 {
        let j = complex_structure(self.u.len() / 2);
        let ju = &j * DVector::from_column_slice(&self.u);
        dot(ju.as_slice(), &self.v)
    }

    pub fn curvature(&self, r: &RiemannTensor) -> f64 {
        r.eval(&self.u, &self.v, &self.v, &self.u)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionalExtremes {
    pub min_k: f64,
    pub max_k: f64,
    pub argmin: Plane,
    pub argmax: Plane,
    /// Largest projected-gradient norm at the refined optima.
    pub stationarity: f64,
}

pub const MIN_PLANE_SAMPLES: usize = 1000;
const REFINE_STARTS: usize = 8;
const STATIONARITY_TOL: f64 = 1e-9;

fn gaussian_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| StandardNormal.sample(rng)).collect()
}

/// Eigenvector of `S` restricted to `v^⊥` with the largest (`sign = 1`) or
/// smallest (`sign = -1`) eigenvalue.
fn restricted_extreme(s: &DMatrix<f64>, v: &[f64], sign: f64) -> Vec<f64> {
    let m = s.nrows();
    let vv = DVector::from_column_slice(v);
    let p = DMatrix::identity(m, m) - &vv * vv.transpose();
    let shift = 1e3 * (1.0 + s.abs().max());
    let mat = sign * (&p * s * &p) - shift * &vv * vv.transpose();
    let eig = SymmetricEigen::new(mat);
    let k = eig.eigenvalues.imax();
    eig.eigenvectors.column(k).iter().copied().collect()
}

/// Alternating exact maximization over each spanning vector. Each half-step
/// cannot decrease `sign·K`, and a fixed point is a stationary plane.
fn refine_plane(op: &PointCurvatureOperator, plane: &Plane, sign: f64) -> (Plane, f64) {
    let mut pl = plane.clone();
    let mut best = sign * pl.curvature(&op.tensor);

    for _ in 0..500 {
        let u = restricted_extreme(&op.jacobi_matrix(&pl.v), &pl.v, sign);
        pl = Plane::new(pl.v.clone(), u);
        let k = sign * pl.curvature(&op.tensor);
        let settled = (k - best).abs() <= 1e-15 * (1.0 + best.abs());
        best = k;
        if settled {
            break;
        }
    }
    let grad = stationarity(op, &pl);
    (pl, grad)
}

/// Norm of the Grassmannian gradient of `K` at an orthonormal plane.
fn stationarity(op: &PointCurvatureOperator, pl: &Plane) -> f64 {
    let gu = &op.jacobi_matrix(&pl.v) * DVector::from_column_slice(&pl.u);
    let gv = &op.jacobi_matrix(&pl.u) * DVector::from_column_slice(&pl.v);
    let res = |g: &DVector<f64>, a: &[f64], b: &[f64]| {
        let mut r = g.clone();
        let (pa, pb) = (dot(r.as_slice(), a), dot(r.as_slice(), b));
        for i in 0..r.len() {
            r[i] -= pa * a[i] + pb * b[i];
        }
        r.norm()
    };
    res(&gu, &pl.u, &pl.v).max(res(&gv, &pl.u, &pl.v))
}

/// Extremes of sectional curvature over 2-planes: random Grassmannian
/// sampling followed by refinement of the best candidates.
pub fn extremize_sectional(op: &PointCurvatureOperator, samples: usize, seed: u64) -> Result<SectionalExtremes> {
    if samples < MIN_PLANE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "plane search needs at least {MIN_PLANE_SAMPLES} samples, got {samples}"
        )));
    }
    let m = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planes: Vec<(f64, Plane)> = (0..samples)
        .map(|_| {
            let pl = Plane::new(gaussian_vector(&mut rng, m), gaussian_vector(&mut rng, m));
            (pl.curvature(&op.tensor), pl)
        })
        .collect();
    planes.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut stat: f64 = 0.0;
    let mut best_max = (f64::NEG_INFINITY, planes[planes.len() - 1].1.clone());
    for (_, pl) in planes.iter().rev().take(REFINE_STARTS) {
        let (p, g) = refine_plane(op, pl, 1.0);
        let k = p.curvature(&op.tensor);
        if k > best_max.0 {
            best_max = (k, p);
            stat = stat.max(g);
        }
    }
    let mut best_min = (f64::INFINITY, planes[0].1.clone());
    for (_, pl) in planes.iter().take(REFINE_STARTS) {
        let (p, g) = refine_plane(op, pl, -1.0);
        let k = p.curvature(&op.tensor);
        if k < best_min.0 {
            best_min = (k, p);
            stat = stat.max(g);
        }
    }
    Ok(SectionalExtremes {
        min_k: best_min.0,
        max_k: best_max.0,
        argmin: best_min.1,
        argmax: best_max.1,
        stationarity: stat,
    })
}

/// `R(u, Ju, Ju, u)` for a unit vector `u`.
fn holomorphic_curvature(op: &PointCurvatureOperator, j: &DMatrix<f64>, u: &[f64]) -> f64 {
    let ju = j * DVector::from_column_slice(u);
    op.tensor.eval(u, ju.as_slice(), ju.as_slice(), u)
}

/// Projected gradient ascent of `sign·H` on the unit sphere with Armijo steps.
/// The Kähler symmetries make the Euclidean gradient `4 S_{Ju} u`.
fn refine_holomorphic(op: &PointCurvatureOperator, j: &DMatrix<f64>, start: &[f64], sign: f64) -> (f64, f64) {
    let mut u = start.to_vec();
    normalize(&mut u);
    let mut h = sign * holomorphic_curvature(op, j, &u);
    let mut step = 0.1;
    let mut gnorm = f64::INFINITY;
    for _ in 0..2000 {
        let ju = j * DVector::from_column_slice(&u);
        let mut g: Vec<f64> = (&op.jacobi_matrix(ju.as_slice()) * DVector::from_column_slice(&u))
            .iter()
            .map(|x| 4.0 * sign * x)
            .collect();
        let radial = dot(&g, &u);
        g.iter_mut().zip(&u).for_each(|(x, y)| *x -= radial * y);
        gnorm = dot(&g, &g).sqrt();
        if gnorm < STATIONARITY_TOL {
            break;
        }
        loop {
            let mut trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            normalize(&mut trial);
            let ht = sign * holomorphic_curvature(op, j, &trial);
            if ht >= h + 1e-4 * step * gnorm * gnorm || step < 1e-12 {
                u = trial;
                h = ht;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if step < 1e-12 {
            break;
        }
    }
    (sign * h, gnorm)
}

/// Extremes of holomorphic sectional curvature over complex lines.
pub fn holomorphic_sectional_range(op: &PointCurvatureOperator, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < MIN_PLANE_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "line search needs at least {MIN_PLANE_SAMPLES} samples, got {samples}"
        )));
    }
    let m = op.dim();
    let j = complex_structure(op.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines: Vec<(f64, Vec<f64>)> = (0..samples)
        .map(|_| {
            let mut u = gaussian_vector(&mut rng, m);
            normalize(&mut u);
            (holomorphic_curvature(op, &j, &u), u)
        })
        .collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = lines
        .iter()
        .take(REFINE_STARTS)
        .map(|(_, u)| refine_holomorphic(op, &j, u, -1.0).0)
        .fold(lines[0].0, f64::min);
    let hi = lines
        .iter()
        .rev()
        .take(REFINE_STARTS)
        .map(|(_, u)| refine_holomorphic(op, &j, u, 1.0).0)
        .fold(lines[lines.len() - 1].0, f64::max);
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{solve_profile, ModelParams, DEFAULT_TOL};

    fn profile(n: u32, c: f64) -> MetricProfile {
        solve_profile(ModelParams::new(n, c).unwrap(), 20.0, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn ball_profile_is_constant() {
        let p = profile(2, 1.0);
        let cp = curvature_profile(&p);
        for s in cp.samples().iter().filter(|s| s.t <= 10.0) {
            assert!((s.k_tr + 1.0).abs() < 1e-8);
            assert!((s.k_disk + 4.0).abs() < 1e-8);
            assert!((s.m - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn values_at_origin() {
        let p = profile(2, 0.95);
        let s = curvature_profile(&p).at(0.0).unwrap();
        let ktr = -(3.0 - 2.0 / 0.9025);
        assert!((s.k_tr - ktr).abs() < 1e-12);
        assert!((s.k_disk - (-6.0 - 2.0 * ktr)).abs() < 1e-12);
    }

    #[test]
    fn ball_operator_is_constant_hsc() {
        let p = profile(3, 1.0);
        let op = assemble_point_operator(&curvature_profile(&p), 1.3).unwrap();
        let r0 = tensor::constant_hsc_tensor(3, -4.0).unwrap();
        assert!(op.tensor.max_abs_diff(&r0) < 1e-8);
    }

    #[test]
    fn einstein_blocks_and_symmetries() {
        let p = profile(2, 0.9);
        let cp = curvature_profile(&p);
        let op = assemble_point_operator(&cp, 0.0).unwrap();
        for ev in op.ricci_eigenvalues() {
            assert!((ev + 6.0).abs() < 1e-7);
        }
        assert!(op.tensor.symmetry_defects().max() < 1e-12);
        assert!(op.tensor.kahler_defect() < 1e-12);
        let b = op.blocks();
        assert!((b.a1 - op.values.k_disk).abs() < 1e-12);
        assert_eq!(b.a2_leak, 0.0);
        assert_eq!(b.a2.nrows(), 2 * (2 * 2 - 2));
        assert!(assemble_point_operator(&cp, 25.0).is_err());
    }

    #[test]
    fn mixed_planes_have_curvature_mu() {
        let p = profile(3, 0.9);
        let op = assemble_point_operator(&curvature_profile(&p), 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = gaussian_vector(&mut rng, 6);
            let u = vec![g[0], g[1], 0.0, 0.0, 0.0, 0.0];
            let v = vec![0.0, 0.0, g[2], g[3], g[4], g[5]];
            let k = Plane::new(u, v).curvature(&op.tensor);
            assert!((k - op.values.mu).abs() < 1e-12);
        }
    }

    #[test]
    fn extremes_at_origin() {
        let p = profile(2, 0.95);
        let op = assemble_point_operator(&curvature_profile(&p), 0.0).unwrap();
        let ex = extremize_sectional(&op, 1000, 7).unwrap();
        let sup = -3.0 + 2.0 / 0.9025;
        assert!((ex.max_k - sup).abs() < 1e-6, "{}", ex.max_k);
        assert!(ex.argmax.kahler_cosine().abs() < 1e-4);
        assert!(ex.min_k >= -6.0 - 1e-6);
        assert!(ex.stationarity < 1e-6);
        assert!(extremize_sectional(&op, 10, 0).is_err());
    }

    /// Complex line `sqrt(s) ξ + sqrt(1-s) e` in the three-parameter Kähler family.
    fn mixed_line(v: &CurvatureSample, s: f64) -> f64 {
        v.k_disk * s * s + 8.0 * v.mu * s * (1.0 - s) - 4.0 * v.m * (1.0 - s) * (1.0 - s)
    }

    #[test]
    fn holomorphic_range_matches_line_family() {
        for (n, c) in [(2, 1.0), (2, 0.9), (3, 0.9)] {
            let p = profile(n, c);
            let op = assemble_point_operator(&curvature_profile(&p), 0.0).unwrap();
            let (lo, hi) = holomorphic_sectional_range(&op, 1000, 11).unwrap();
            let family: Vec<f64> = (0..=10_000).map(|k| mixed_line(&op.values, k as f64 / 1e4)).collect();
            let fmax = family.iter().copied().fold(f64::MIN, f64::max);
            let fmin = family.iter().copied().fold(f64::MAX, f64::min);
            assert!((hi - fmax).abs() < 1e-6, "n={n} c={c}: {hi} vs {fmax}");
            assert!((lo - fmin).abs() < 1e-6, "n={n} c={c}: {lo} vs {fmin}");
            assert!(lo >= op.values.k_disk.min(-4.0 * op.values.m) - 1e-6);
        }
        // n = 2, t = 0: the balanced line reaches 2/c^2 - 6, above -4 when c < 1
        let p = profile(2, 0.9);
        let op = assemble_point_operator(&curvature_profile(&p), 0.0).unwrap();
        let (_, hi) = holomorphic_sectional_range(&op, 1000, 3).unwrap();
        assert!((hi - (2.0 / 0.81 - 6.0)).abs() < 1e-6);
    }
}
