//! Algebraic curvature tensors on an orthonormal frame of `R^{2n}` with the
//! standard complex structure `J e_{2k} = e_{2k+1}`, `J e_{2k+1} = -e_{2k}`.
//!
//! Sign convention: `K(X, Y) = R(X, Y, Y, X)` for an orthonormal pair.
//! Hermitian components use `u_i = (e_{2i} - i J e_{2i}) / sqrt 2` and
//! `R_{i j̄ k l̄} = R(u_i, ū_j, u_k, ū_l) / 2`, which sends the tensor of constant
//! holomorphic sectional curvature `H` to `(H/4)(δ_ij δ_kl + δ_il δ_kj)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real symmetric bilinear form in the orthonormal frame.
pub type BilinearForm = DMatrix<f64>;
/// Hermitian form `h_{i j̄}` in complex coordinates.
pub type HermitianForm = DMatrix<Complex64>;

/// Matrix of `J`: column `a` holds `J e_a`.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Two-form `(X, Y) ↦ h(JX, Y)` of a J-invariant symmetric form.
pub fn kahler_form_of(h: &BilinearForm) -> DMatrix<f64> {
    let j = complex_structure(h.nrows() / 2);
    j.transpose() * h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDefects {
    pub antisymmetry: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryDefects {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.pair).max(self.bianchi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor {
    dim: usize,
    full: Vec<f64>,
    /// `pairs[(ab), (cd)] = R(e_a, e_b, e_c, e_d)` for `a < b`, `c < d`.
    pairs: DMatrix<f64>,
}

fn pair_count(dim: usize) -> usize {
    dim * (dim - 1) / 2
}

/// Lexicographic index of `a < b` among ordered pairs.
fn pair_index(dim: usize, a: usize, b: usize) -> usize {
    a * (2 * dim - a - 1) / 2 + (b - a - 1)
}

fn wedge(x: &[f64], y: &[f64]) -> DVector<f64> {
    let dim = x.len();
    let mut out = DVector::zeros(pair_count(dim));
    for a in 0..dim {
        for b in a + 1..dim {
            out[pair_index(dim, a, b)] = x[a] * y[b] - x[b] * y[a];
        }
    }
    out
}

impl RiemannTensor {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut full = vec![0.0; dim.pow(4)];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        full[((a * dim + b) * dim + c) * dim + d] = f(a, b, c, d);
                    }
                }
            }
        }
        let np = pair_count(dim);
        let mut pairs = DMatrix::zeros(np, np);
        for a in 0..dim {
            for b in a + 1..dim {
                for c in 0..dim {
                    for d in c + 1..dim {
                        pairs[(pair_index(dim, a, b), pair_index(dim, c, d))] =
                            full[((a * dim + b) * dim + c) * dim + d];
                    }
                }
            }
        }
        Self { dim, full, pairs }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_fn(dim, |_, _, _, _| 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.dim;
        self.full[((a * m + b) * m + c) * m + d]
    }

    /// `R(X, Y, Z, W)` for arbitrary vectors.
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        wedge(x, y).dot(&(&self.pairs * wedge(z, w)))
    }

    pub fn sectional(&self, u: &[f64], v: &[f64]) -> f64 {
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        self.eval(u, v, v, u) / (uu * vv - uv * uv)
    }

    /// Curvature operator on `Λ²` in the basis `e_a ∧ e_b` (`a < b`), signed so
    /// that `<Rω, ω> = K` for a unit decomposable `ω`.
    pub fn operator(&self) -> DMatrix<f64> {
        -&self.pairs
    }

    /// `Ric(e_b, e_c) = Σ_i R(e_b, e_i, e_i, e_c)`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let m = self.dim;
        DMatrix::from_fn(m, m, |b, c| (0..m).map(|i| self.component(b, i, i, c)).sum())
    }

    pub fn symmetry_defects(&self) -> SymmetryDefects {
        let m = self.dim;
        let mut s = SymmetryDefects { antisymmetry: 0.0, pair: 0.0, bianchi: 0.0 };
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let r = self.component(a, b, c, d);
                        s.antisymmetry = s
                            .antisymmetry
                            .max((r + self.component(b, a, c, d)).abs())
                            .max((r + self.component(a, b, d, c)).abs());
                        s.pair = s.pair.max((r - self.component(c, d, a, b)).abs());
                        let cyc = r + self.component(b, c, a, d) + self.component(c, a, b, d);
                        s.bianchi = s.bianchi.max(cyc.abs());
                    }
                }
            }
        }
        s
    }

    /// `max |R(JX, JY, Z, W) - R(X, Y, Z, W)|` over frame vectors.
    pub fn kahler_defect(&self) -> f64 {
        let m = self.dim;
        if !m.is_multiple_of(2) {
            return f64::INFINITY;
        }
        let j = complex_structure(m / 2);
        let col = |a: usize| j.column(a).iter().copied().collect::<Vec<f64>>();
        let basis = |a: usize| (0..m).map(|i| if i == a { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                let (ja, jb) = (col(a), col(b));
                for c in 0..m {
                    for d in 0..m {
                        let lhs = self.eval(&ja, &jb, &basis(c), &basis(d));
                        worst = worst.max((lhs - self.component(a, b, c, d)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.full.iter().zip(&other.full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Frobenius norm of the curvature operator.
    pub fn operator_norm(&self) -> f64 {
        self.pairs.norm()
    }

    /// Coefficients as `(a, b, c, d, value)` for `a < b`, `c < d`, nonzero entries.
    pub fn coefficient_list(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let m = self.dim;
        let mut out = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                for c in 0..m {
                    for d in c + 1..m {
                        let v = self.component(a, b, c, d);
                        if v != 0.0 {
                            out.push((a, b, c, d, v));
                        }
                    }
                }
            }
        }
        out
    }
}

impl Add for &RiemannTensor {
    type Output = RiemannTensor;
    fn add(self, rhs: &RiemannTensor) -> RiemannTensor {
        RiemannTensor::from_fn(self.dim, |a, b, c, d| self.component(a, b, c, d) + rhs.component(a, b, c, d))
    }
}

impl Sub for &RiemannTensor {
    type Output = RiemannTensor;
    fn sub(self, rhs: &RiemannTensor) -> RiemannTensor {
        RiemannTensor::from_fn(self.dim, |a, b, c, d| self.component(a, b, c, d) - rhs.component(a, b, c, d))
    }
}

impl Mul<&RiemannTensor> for f64 {
    type Output = RiemannTensor;
    fn mul(self, rhs: &RiemannTensor) -> RiemannTensor {
        RiemannTensor::from_fn(rhs.dim, |a, b, c, d| self * rhs.component(a, b, c, d))
    }
}

fn check_square(h: &DMatrix<f64>, dim: usize) -> Result<()> {
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: h.nrows().max(h.ncols()) });
    }
    Ok(())
}

/// `(h⊙k)(X,Y,Z,W) = h(X,W)k(Y,Z) + h(Y,Z)k(X,W) - h(X,Z)k(Y,W) - h(Y,W)k(X,Z)`.
pub fn kulkarni_nomizu(h: &BilinearForm, k: &BilinearForm) -> Result<RiemannTensor> {
    let m = h.nrows();
    check_square(h, m)?;
    check_square(k, m)?;
    Ok(RiemannTensor::from_fn(m, |x, y, z, w| {
        h[(x, w)] * k[(y, z)] + h[(y, z)] * k[(x, w)] - h[(x, z)] * k[(y, w)] - h[(y, w)] * k[(x, z)]
    }))
}

/// Kähler analogue of the Kulkarni-Nomizu product for J-invariant forms:
/// `½ h⊙k` plus the matching two-form terms, so that `P(g, g)` has
/// holomorphic sectional curvature 4 and `(H/4) P(g, g)` is the model tensor.
pub fn kahler_product(h: &BilinearForm, k: &BilinearForm) -> Result<RiemannTensor> {
    let m = h.nrows();
    if !m.is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: m + 1, got: m });
    }
    check_square(h, m)?;
    check_square(k, m)?;
    let kn = kulkarni_nomizu(h, k)?;
    let (a, b) = (kahler_form_of(h), kahler_form_of(k));
    Ok(RiemannTensor::from_fn(m, |x, y, z, w| {
        let two_form = a[(x, w)] * b[(y, z)] + b[(x, w)] * a[(y, z)]
            - a[(x, z)] * b[(y, w)]
            - b[(x, z)] * a[(y, w)]
            - 2.0 * a[(x, y)] * b[(z, w)]
            - 2.0 * b[(x, y)] * a[(z, w)];
        0.5 * kn.component(x, y, z, w) + 0.5 * two_form
    }))
}

/// Kähler curvature tensor of constant holomorphic sectional curvature `H` on `C^n`.
pub fn constant_hsc_tensor(n: usize, hsc: f64) -> Result<RiemannTensor> {
    if n == 0 {
        return Err(Error::InvalidArgument("complex dimension must be positive".into()));
    }
    let g = DMatrix::identity(2 * n, 2 * n);
    Ok((hsc / 4.0) * &kahler_product(&g, &g)?)
}

/// Curvature of the total space of a submersion with umbilic fibres from the
/// curvature of the base: adds the three `λ²` integrability terms, then
/// subtracts `½ (λg)⊙(λg)` from the Gauss equation.
pub fn oneill_submersion_correction(base: &RiemannTensor, lambda: f64) -> Result<RiemannTensor> {
    let m = base.dim();
    if !m.is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: m + 1, got: m });
    }
    let g = DMatrix::<f64>::identity(m, m);
    let om = kahler_form_of(&g);
    let l2 = lambda * lambda;
    let shape = kulkarni_nomizu(&(lambda * &g), &(lambda * &g))?;
    Ok(RiemannTensor::from_fn(m, |x, y, z, w| {
        let twist = om[(x, z)] * om[(y, w)] - om[(y, z)] * om[(x, w)] + 2.0 * om[(z, w)] * om[(x, y)];
        base.component(x, y, z, w) + l2 * twist - 0.5 * shape.component(x, y, z, w)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCurvature {
    n: usize,
    coef: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermitianDefects {
    /// `|R_{ij̄kl̄} - conj(R_{jī lk̄})|`
    pub conjugation: f64,
    /// `|R_{ij̄kl̄} - R_{kj̄il̄}|`
    pub swap: f64,
}

fn complex_frame_vector(n: usize, i: usize, conjugate: bool) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(0.0, 0.0); 2 * n];
    v[2 * i] = Complex64::new(s, 0.0);
    v[2 * i + 1] = Complex64::new(0.0, if conjugate { s } else { -s });
    v
}

impl HermitianCurvature {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut coef = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        coef.push(f(i, j, k, l));
                    }
                }
            }
        }
        Self { n, coef }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `R_{i j̄ k l̄}`
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let n = self.n;
        self.coef[((i * n + j) * n + k) * n + l]
    }

    pub fn from_real(r: &RiemannTensor) -> Result<Self> {
        let m = r.dim();
        if !m.is_multiple_of(2) {
            return Err(Error::DimensionMismatch { expected: m + 1, got: m });
        }
        let n = m / 2;
        let u: Vec<Vec<Complex64>> = (0..n).map(|i| complex_frame_vector(n, i, false)).collect();
        let ub: Vec<Vec<Complex64>> = (0..n).map(|i| complex_frame_vector(n, i, true)).collect();
        let support = |i: usize| [2 * i, 2 * i + 1];
        Ok(Self::from_fn(n, |i, j, k, l| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in support(i) {
                for b in support(j) {
                    for c in support(k) {
                        for d in support(l) {
                            acc += u[i][a] * ub[j][b] * u[k][c] * ub[l][d] * r.component(a, b, c, d);
                        }
                    }
                }
            }
            acc * 0.5
        }))
    }

    /// Inverse of [`HermitianCurvature::from_real`] for tensors with the Kähler symmetries.
    pub fn to_real(&self) -> RiemannTensor {
        let n = self.n;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // complex coordinate of the real basis vector e_a
        let coord = |a: usize, i: usize| -> Complex64 {
            if a / 2 != i {
                Complex64::new(0.0, 0.0)
            } else if a.is_multiple_of(2) {
                Complex64::new(s, 0.0)
            } else {
                Complex64::new(0.0, s)
            }
        };
        RiemannTensor::from_fn(2 * n, |a, b, c, d| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let first = coord(a, i) * coord(b, j).conj() - coord(b, i) * coord(a, j).conj();
                    if first.norm_sqr() == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        for l in 0..n {
                            let second = coord(c, k) * coord(d, l).conj() - coord(d, k) * coord(c, l).conj();
                            acc += 2.0 * self.get(i, j, k, l) * first * second;
                        }
                    }
                }
            }
            acc.re
        })
    }

    pub fn symmetry_defects(&self) -> HermitianDefects {
        let n = self.n;
        let mut out = HermitianDefects { conjugation: 0.0, swap: 0.0 };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        out.conjugation = out.conjugation.max((r - self.get(j, i, l, k).conj()).norm());
                        out.swap = out.swap.max((r - self.get(k, j, i, l)).norm());
                    }
                }
            }
        }
        out
    }

    /// `Q(ξ) = Σ R_{i j̄ k l̄} ξ^{i j̄} conj(ξ^{l k̄})`, real for Hermitian-symmetric tensors.
    pub fn quadratic_form(&self, xi: &DMatrix<Complex64>) -> f64 {
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        acc += self.get(i, j, k, l) * xi[(i, j)] * xi[(l, k)].conj();
                    }
                }
            }
        }
        acc.re
    }

    /// Hermitian matrix `M` with `Q(ξ) = vec(ξ)^* M vec(ξ)`, `vec` row-major.
    pub fn siu_matrix(&self) -> DMatrix<Complex64> {
        let n = self.n;
        DMatrix::from_fn(n * n, n * n, |row, col| {
            let (l, k) = (row / n, row % n);
            let (i, j) = (col / n, col % n);
            self.get(i, j, k, l)
        })
    }
}

/// Tensor `-(h_{ij̄} h_{kl̄} + h_{il̄} h_{kj̄})` of a Hermitian form.
pub fn tensor_from_form(h: &HermitianForm) -> HermitianCurvature {
    HermitianCurvature::from_fn(h.nrows(), |i, j, k, l| -(h[(i, j)] * h[(k, l)] + h[(i, l)] * h[(k, j)]))
}

/// `-A(gg + gg) - B(ψψ + ψψ) - C τ_i τ̄_j τ_k τ̄_l`.
pub fn bland_decomposition_tensor(
    g: &HermitianForm,
    psi_grad: &[Complex64],
    a: f64,
    b: f64,
    c: f64,
    psi_hessian: &HermitianForm,
) -> Result<HermitianCurvature> {
    for (name, value) in [("A", a), ("B", b), ("C", c)] {
        if value < 0.0 {
            return Err(Error::NegativeCoefficient { name, value, min: 0.0 });
        }
    }
    let n = g.nrows();
    if psi_grad.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: psi_grad.len() });
    }
    if psi_hessian.nrows() != n || g.ncols() != n || psi_hessian.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: psi_hessian.nrows() });
    }
    let tg = tensor_from_form(g);
    let tp = tensor_from_form(psi_hessian);
    Ok(HermitianCurvature::from_fn(n, |i, j, k, l| {
        let tau = psi_grad[i] * psi_grad[j].conj() * psi_grad[k] * psi_grad[l].conj();
        a * tg.get(i, j, k, l) + b * tp.get(i, j, k, l) - c * tau
    }))
}

/// Lower bound on `A` required for the cone metric with parameter `alpha`.
pub fn bland_lower_bound(n: u32, alpha: f64) -> f64 {
    2.0 / (n as f64 * alpha + 1.0)
}

pub fn validate_bland_coefficient(a: f64, n: u32, alpha: f64) -> Result<()> {
    let min = bland_lower_bound(n, alpha);
    if a < min {
        return Err(Error::NegativeCoefficient { name: "A", value: a, min });
    }
    Ok(())
}

/// Margins below this count as zero.
pub const VSN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsnVerdict {
    pub is_vsn: bool,
    /// Smallest `-Q(ξ)/|ξ|²` observed.
    pub worst_margin: f64,
    /// Row-major `(re, im)` entries of the worst `ξ`.
    pub worst_xi: Vec<(f64, f64)>,
    pub trials: usize,
}

/// Very strong negativity test: random matrices, coordinate matrices and the
/// top eigenvector of the Siu matrix.
pub fn vsn_test(r: &HermitianCurvature, trials: usize, seed: u64) -> Result<VsnVerdict> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("vsn_test needs at least 100 trials, got {trials}")));
    }
    let n = r.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<DMatrix<Complex64>> = Vec::with_capacity(trials + n * n + 1);
    for _ in 0..trials {
        candidates.push(DMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        }));
    }
    for i in 0..n {
        for j in 0..n {
            let mut e = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
            e[(i, j)] = Complex64::new(1.0, 0.0);
            candidates.push(e);
        }
    }
    let eig = SymmetricEigen::new(r.siu_matrix());
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    candidates.push(DMatrix::from_fn(n, n, |i, j| v[i * n + j]));

    let mut worst = f64::INFINITY;
    let mut worst_xi = Vec::new();
    for xi in &candidates {
        let norm2: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            continue;
        }
        let margin = -r.quadratic_form(xi) / norm2;
        if margin < worst {
            worst = margin;
            worst_xi = xi.transpose().iter().map(|z| (z.re, z.im)).collect();
        }
    }
    Ok(VsnVerdict { is_vsn: worst > VSN_EPS, worst_margin: worst, worst_xi, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: usize, a: usize) -> Vec<f64> {
        (0..m).map(|i| if i == a { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn pair_indexing_is_dense() {
        let m = 6;
        let mut seen = vec![false; pair_count(m)];
        for a in 0..m {
            for b in a + 1..m {
                seen[pair_index(m, a, b)] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn kn_of_metric() {
        let g = DMatrix::identity(4, 4);
        let kn = kulkarni_nomizu(&g, &g).unwrap();
        assert_eq!(kn.component(0, 1, 1, 0), 2.0);
        let hyp = -0.5 * &kn;
        for a in 0..4 {
            for b in a + 1..4 {
                assert!((hyp.sectional(&unit(4, a), &unit(4, b)) + 1.0).abs() < 1e-14);
            }
        }
        let h = 3.0 * &g;
        let scaled = kulkarni_nomizu(&h, &h).unwrap();
        assert!(scaled.max_abs_diff(&(9.0 * &kn)) < 1e-14);
        assert!(kulkarni_nomizu(&g, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn ball_tensor_curvatures() {
        let r = constant_hsc_tensor(2, -4.0).unwrap();
        assert!(r.symmetry_defects().max() < 1e-12);
        assert!(r.kahler_defect() < 1e-12);
        // holomorphic plane e0, Je0 = e1
        assert!((r.sectional(&unit(4, 0), &unit(4, 1)) + 4.0).abs() < 1e-14);
        // totally real plane e0, e2
        assert!((r.sectional(&unit(4, 0), &unit(4, 2)) + 1.0).abs() < 1e-14);
        let ric = r.ricci();
        assert!((ric - DMatrix::identity(4, 4) * -6.0).abs().max() < 1e-14);
        let surface = constant_hsc_tensor(1, -4.0).unwrap();
        assert!((surface.sectional(&unit(2, 0), &unit(2, 1)) + 4.0).abs() < 1e-14);
    }

    #[test]
    fn oneill_reproduces_multiplier() {
        let r0 = constant_hsc_tensor(2, -4.0).unwrap();
        let t: f64 = 1.0;
        let (f, fp) = (t.cosh(), t.sinh());
        let base = (1.0 / (f * f)) * &r0;
        let out = oneill_submersion_correction(&base, fp / f).unwrap();
        let expect = ((fp * fp + 1.0) / (f * f)) * &r0;
        assert!(out.max_abs_diff(&expect) < 1e-14);
        assert!(out.max_abs_diff(&r0) < 1e-14);
        assert_eq!(oneill_submersion_correction(&base, 0.0).unwrap(), base);
    }

    #[test]
    fn hermitian_normalization_and_round_trip() {
        let r = constant_hsc_tensor(2, -4.0).unwrap();
        let h = HermitianCurvature::from_real(&r).unwrap();
        assert!((h.get(0, 0, 0, 0) - Complex64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((h.get(0, 0, 1, 1) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((h.get(0, 1, 1, 0) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        let d = h.symmetry_defects();
        assert!(d.conjugation < 1e-14 && d.swap < 1e-14);
        assert!(h.to_real().max_abs_diff(&r) < 1e-13);
    }

    #[test]
    fn identity_form_values() {
        let h = tensor_from_form(&DMatrix::identity(2, 2));
        let mut xi = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
        xi[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!((h.quadratic_form(&xi) + 2.0).abs() < 1e-15);
        let mut degenerate = DMatrix::identity(2, 2);
        degenerate[(0, 0)] = Complex64::new(0.0, 0.0);
        let hd = tensor_from_form(&degenerate);
        assert_eq!(hd.quadratic_form(&xi), 0.0);
        assert!(!vsn_test(&hd, 100, 1).unwrap().is_vsn);
    }

    #[test]
    fn gradient_term_is_seminegative() {
        let n = 3;
        let zero = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        grad[0] = Complex64::new(1.0, 0.0);
        let r = bland_decomposition_tensor(&zero, &grad, 0.0, 0.0, 1.0, &zero).unwrap();
        let v = vsn_test(&r, 200, 3).unwrap();
        assert!(!v.is_vsn);
        assert!(v.worst_margin.abs() < 1e-12);
        assert!(matches!(
            bland_decomposition_tensor(&zero, &grad, -1.0, 0.0, 0.0, &zero),
            Err(Error::NegativeCoefficient { name: "A", .. })
        ));
    }

    #[test]
    fn bland_bound() {
        assert!((bland_lower_bound(2, 2.0) - 0.4).abs() < 1e-15);
        assert!(validate_bland_coefficient(0.39, 2, 2.0).is_err());
        assert!(validate_bland_coefficient(0.4, 2, 2.0).is_ok());
    }
}
