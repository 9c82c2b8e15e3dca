use proptest::prelude::*;

use thullen::curvature::{assemble_point_operator, curvature_profile, extremize_sectional, Plane};
use thullen::decay::fit_decay_rate;
use thullen::profile::{ode_residual, solve_profile, ModelParams, DEFAULT_TOL};
use thullen::tensor::{vsn_test, HermitianCurvature};
use thullen::Error;

fn lower(n: u32) -> f64 {
    ModelParams::lower_bound(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_and_convexity(n in 2u32..=4, frac in 0.02f64..1.0) {
        let c = lower(n) + frac * (1.0 - lower(n));
        let prof = solve_profile(ModelParams::new(n, c).unwrap(), 15.0, DEFAULT_TOL).unwrap();
        let tol = 10.0 * DEFAULT_TOL;
        let mut last = f64::NEG_INFINITY;
        for s in prof.samples() {
            prop_assert!(ode_residual(n, s).abs() <= 1e-7, "residual at t = {}", s.t);
            prop_assert!(s.fpp * s.f - s.fp * s.fp >= -tol * s.f * s.f);
            let ratio = s.fpp / s.f;
            prop_assert!(ratio <= 1.0 + tol);
            prop_assert!(last <= ratio + tol);
            last = ratio;
        }
    }

    #[test]
    fn profiles_are_ordered_in_the_initial_value(n in 2u32..=3, a in 0.02f64..0.98, gap in 0.005f64..0.5) {
        let c1 = lower(n) + a * (1.0 - lower(n));
        let c2 = (c1 + gap * (1.0 - c1)).min(1.0);
        prop_assume!(c2 > c1);
        let p1 = solve_profile(ModelParams::new(n, c1).unwrap(), 12.0, DEFAULT_TOL).unwrap();
        let p2 = solve_profile(ModelParams::new(n, c2).unwrap(), 12.0, DEFAULT_TOL).unwrap();
        for i in 1..=120 {
            let t = 0.1 * i as f64;
            prop_assert!(p1.f(t).unwrap() < p2.f(t).unwrap(), "t = {}", t);
        }
    }

    #[test]
    fn sampled_sectional_curvature_is_negative(n in 2u32..=3, frac in 0.05f64..1.0, t in 0.0f64..8.0, seed in 0u64..1000) {
        let c = lower(n) + frac * (1.0 - lower(n));
        let prof = solve_profile(ModelParams::new(n, c).unwrap(), 12.0, DEFAULT_TOL).unwrap();
        let op = assemble_point_operator(&curvature_profile(&prof), t).unwrap();
        let ext = extremize_sectional(&op, 1000, seed).unwrap();
        prop_assert!(ext.max_k < 0.0);
        prop_assert!(ext.min_k >= -2.0 * n as f64 - 2.0 - 1e-6);
    }

    #[test]
    fn model_operators_are_very_strongly_negative(n in 2u32..=3, frac in 0.05f64..1.0, t in 0.0f64..6.0) {
        let c = lower(n) + frac * (1.0 - lower(n));
        let prof = solve_profile(ModelParams::new(n, c).unwrap(), 12.0, DEFAULT_TOL).unwrap();
        let op = assemble_point_operator(&curvature_profile(&prof), t).unwrap();
        let herm = HermitianCurvature::from_real(&op.tensor).unwrap();
        prop_assert!(vsn_test(&herm, 100, 3).unwrap().is_vsn);
    }
}

#[test]
fn closed_form_endpoints() {
    for n in [2, 3] {
        let ball = solve_profile(ModelParams::ball(n).unwrap(), 10.0, DEFAULT_TOL).unwrap();
        for i in 0..=100 {
            let t = 0.1 * i as f64;
            assert!((ball.f(t).unwrap() / t.cosh() - 1.0).abs() <= 1e-8);
        }
        assert!(matches!(ModelParams::new(n, lower(n)), Err(Error::InvalidInitialValue { .. })));
        assert!(ModelParams::new(n, 1.0 + 1e-9).is_err());
    }
}

#[test]
fn argmax_at_divisor_is_totally_real() {
    for (n, c) in [(2, 0.85), (2, 0.95), (3, 0.9)] {
        let prof = solve_profile(ModelParams::new(n, c).unwrap(), 12.0, DEFAULT_TOL).unwrap();
        let op = assemble_point_operator(&curvature_profile(&prof), 0.0).unwrap();
        let ext = extremize_sectional(&op, 1000, 5).unwrap();
        assert!(ext.argmax.kahler_cosine().abs() < 1e-6, "n = {n}, c = {c}");
    }
}

#[test]
fn horizontal_planes_between_pinching_bounds() {
    let prof = solve_profile(ModelParams::new(3, 0.9).unwrap(), 12.0, DEFAULT_TOL).unwrap();
    let cprof = curvature_profile(&prof);
    for t in [0.0, 0.7, 3.0] {
        let op = assemble_point_operator(&cprof, t).unwrap();
        let m = cprof.at(t).unwrap().m;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..200 {
            let a = 0.031 * i as f64;
            let u = vec![0.0, 0.0, a.cos(), a.sin(), 0.3, -0.2];
            let v = vec![0.0, 0.0, (2.0 * a).sin(), 0.5, a.cos(), 1.0];
            let k = Plane::new(u, v).curvature(&op.tensor);
            lo = lo.min(k);
            hi = hi.max(k);
        }
        assert!(lo >= -4.0 * m - 1e-9 && hi <= -m + 1e-9, "t = {t}: [{lo}, {hi}] vs m = {m}");
    }
}

#[test]
fn operator_converges_to_ball() {
    let prof = solve_profile(ModelParams::new(2, 0.9).unwrap(), 20.0, DEFAULT_TOL).unwrap();
    let cprof = curvature_profile(&prof);
    let series: Vec<(f64, f64)> = (0..=100)
        .map(|i| {
            let t = 5.0 + 0.1 * i as f64;
            (t, cprof.ball_deviation_operator(t).unwrap().operator_norm())
        })
        .collect();
    let fit = fit_decay_rate(&series, (5.0, 15.0)).unwrap();
    assert!(fit.rate >= 0.9, "{fit:?}");
}
