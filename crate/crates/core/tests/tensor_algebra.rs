use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use thullen::curvature::{assemble_point_operator, curvature_profile};
use thullen::profile::{solve_profile, ModelParams, DEFAULT_TOL};
use thullen::tensor::{bland_decomposition_tensor, kulkarni_nomizu, tensor_from_form, vsn_test, HermitianCurvature};
use thullen::Error;

fn symmetric(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    (&m + m.transpose()) * 0.5
}

fn complex_matrix(n: usize, vals: &[(f64, f64)]) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| Complex64::new(vals[i * n + j].0, vals[i * n + j].1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kulkarni_nomizu_symmetries(a in prop::collection::vec(-2.0f64..2.0, 16), b in prop::collection::vec(-2.0f64..2.0, 16)) {
        let r = kulkarni_nomizu(&symmetric(4, &a), &symmetric(4, &b)).unwrap();
        prop_assert!(r.symmetry_defects().max() <= 1e-12);
    }

    #[test]
    fn positive_forms_give_vsn(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9), seed in 0u64..100) {
        let m = complex_matrix(3, &vals);
        let g = &m * m.adjoint() + DMatrix::identity(3, 3) * Complex64::new(0.1, 0.0);
        prop_assert!(vsn_test(&tensor_from_form(&g), 100, seed).unwrap().is_vsn);
    }

    #[test]
    fn kernel_gives_zero_margin(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6)) {
        // rank-2 form on C³
        let m = DMatrix::from_fn(3, 2, |i, j| Complex64::new(vals[i * 2 + j].0, vals[i * 2 + j].1));
        let g = &m * m.adjoint();
        let verdict = vsn_test(&tensor_from_form(&g), 100, 1).unwrap();
        prop_assert!(!verdict.is_vsn);
        prop_assert!(verdict.worst_margin.abs() <= 1e-10, "{}", verdict.worst_margin);
    }
}

#[test]
fn unit_form_values() {
    let h = tensor_from_form(&DMatrix::identity(2, 2));
    let mut xi = DMatrix::zeros(2, 2);
    xi[(0, 0)] = Complex64::new(1.0, 0.0);
    assert!((h.quadratic_form(&xi) + 2.0).abs() < 1e-15);
    assert!(vsn_test(&h, 100, 0).unwrap().worst_margin >= 1.0 - 1e-12);
}

#[test]
fn bland_tensor_terms() {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let zero = DMatrix::<Complex64>::zeros(2, 2);
    let e1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let only_tau = bland_decomposition_tensor(&id, &e1, 0.0, 0.0, 1.0, &zero).unwrap();
    let v = vsn_test(&only_tau, 100, 2).unwrap();
    assert!(!v.is_vsn && v.worst_margin >= -1e-12);
    let with_a = bland_decomposition_tensor(&id, &e1, 0.4, 0.0, 0.0, &zero).unwrap();
    assert!(vsn_test(&with_a, 100, 2).unwrap().worst_margin >= 0.4 - 1e-12);
    assert!(matches!(
        bland_decomposition_tensor(&id, &e1, -0.1, 0.0, 0.0, &zero),
        Err(Error::NegativeCoefficient { .. })
    ));
}

#[test]
fn ball_operator_is_vsn_at_every_distance() {
    let prof = solve_profile(ModelParams::ball(3).unwrap(), 12.0, DEFAULT_TOL).unwrap();
    let cprof = curvature_profile(&prof);
    for t in [0.0, 1.0, 4.0, 10.0] {
        let op = assemble_point_operator(&cprof, t).unwrap();
        let herm = HermitianCurvature::from_real(&op.tensor).unwrap();
        assert!(vsn_test(&herm, 100, 9).unwrap().is_vsn, "t = {t}");
    }
}
