use proptest::prelude::*;

use thullen::comparison::{alpha_map, alpha_of_c, c_for_alpha, compare_with_ball, disk_profile, remark_inequality};
use thullen::decay::fit_line;
use thullen::gluing::{glue, glue_sweep, newton_resolve, ConeModel};
use thullen::profile::{solve_profile, ModelParams, DEFAULT_TOL};

#[test]
fn disk_ratio_decays_on_the_claim_grid() {
    for c in [0.85, 0.9, 0.95] {
        let prof = solve_profile(ModelParams::new(2, c).unwrap(), 20.0, 1e-12).unwrap();
        let dp = disk_profile(&prof).unwrap();
        let rep = compare_with_ball(&dp, alpha_of_c(&dp).unwrap()).unwrap();
        assert!(rep.ratio_fit.rate >= 0.5, "c = {c}: {:?}", rep.ratio_fit);
        assert!(rep.sandwich.min_slack > 0.0, "c = {c}");
        assert!(rep.volume_fit.rate > 0.0);
    }
}

#[test]
fn remark_combination_stays_above_one() {
    for c in [0.85, 0.95] {
        let prof = solve_profile(ModelParams::new(2, c).unwrap(), 20.0, DEFAULT_TOL).unwrap();
        let dp = disk_profile(&prof).unwrap();
        let ts: Vec<f64> = (1..40).map(|i| 0.25 * i as f64).collect();
        for s in remark_inequality(&dp, &ts).unwrap() {
            assert!(s.combination > 1.0 - 1e-4, "t = {}: {}", s.t, s.combination);
            assert!((s.combination - s.expected).abs() < 1e-5, "t = {}", s.t);
        }
    }
}

#[test]
fn alpha_map_is_monotone_and_invertible() {
    let lo = ModelParams::lower_bound(2) + 0.01;
    let cs: Vec<f64> = (0..20).map(|i| lo + (1.0 - lo) * i as f64 / 19.0).collect();
    let alphas: Vec<f64> = alpha_map(2, &cs, 20.0, DEFAULT_TOL).into_iter().map(|(_, a)| a.unwrap()).collect();
    assert!(alphas.windows(2).all(|w| w[1] < w[0]));
    assert!((alphas[19] - 1.0).abs() <= 1e-4);
    let c = c_for_alpha(2, 3.0, 20.0, DEFAULT_TOL).unwrap();
    // closed form 1/((n+1)c² − n) at alpha = 3
    assert!((c - (7.0f64 / 9.0).sqrt()).abs() < 1e-6, "{c}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn defect_supported_in_the_collar(r in 8.0f64..24.0, d in 2u32..=3) {
        let cone = ConeModel::solve(2, d, 30.0).unwrap();
        let g = glue(&cone, r, r + 5.0).unwrap();
        let h = g.grid[1] - g.grid[0];
        for (t, e) in g.grid.iter().zip(&g.defect) {
            if *t <= r / 4.0 || *t >= r / 2.0 + h {
                prop_assert!(e.abs() <= 1e-12, "R = {}, t = {}: {}", r, t, e);
            }
        }
    }
}

#[test]
fn corrected_metric_stays_close() {
    let cone = ConeModel::solve(2, 2, 30.0).unwrap();
    let radii = [8.0, 12.0, 16.0, 20.0];
    let glued = glue_sweep(&cone, &radii).unwrap();
    let mut closeness = Vec::new();
    for g in &glued {
        let rep = newton_resolve(g).unwrap();
        if g.r >= 12.0 {
            assert!(rep.converged && rep.newton_iters <= 10);
            assert!(rep.metric_bound <= 1.01, "R = {}: {}", g.r, rep.metric_bound);
            assert!((rep.sup_sectional_at_divisor - rep.model_sup_sectional).abs() <= 1e-3);
        }
        closeness.push((g.r, g.glue_closeness().ln()));
    }
    assert!(fit_line(&closeness).unwrap().slope < 0.0, "{closeness:?}");
}
