//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) and exits non-zero if any
//! criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use thullen::ball::{
    ball_distance, cutoff, cutoff_derivative_bounds, distance_to_divisor, divisor_distance_by_oracle,
    geodesic_distance_oracle, BallPoint, CutoffSpec,
};
use thullen::comparison::{alpha_map, alpha_of_c, compare_with_ball, disk_profile};
use thullen::curvature::{assemble_point_operator, curvature_profile, extremize_sectional, holomorphic_sectional_range};
use thullen::decay::{fit_decay_rate, fit_line};
use thullen::gluing::{fit_sups, glue_sweep, newton_resolve, ConeModel};
use thullen::profile::{log_derivative_gap_series, solve_profile, verify_claims, ModelParams, DEFAULT_TOL};
use thullen::tensor::{constant_hsc_tensor, tensor_from_form, vsn_test, HermitianCurvature};
use thullen::Result;

const SEED: u64 = 20_240_611;

type Criterion = (&'static str, fn() -> Result<Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

/// `(n, c)` pairs of the claims grid; 0.85 is skipped where inadmissible.
fn claim_grid() -> Vec<(u32, f64)> {
    let mut out = Vec::new();
    for n in [2, 3] {
        for c in [0.85, 0.9, 0.95] {
            if c > ModelParams::lower_bound(n) {
                out.push((n, c));
            }
        }
    }
    out
}

fn ball_anchor() -> Result<Verdict> {
    let mut worst_f: f64 = 0.0;
    let mut worst_k: f64 = 0.0;
    for n in [2, 3] {
        let prof = solve_profile(ModelParams::ball(n)?, 10.0, DEFAULT_TOL)?;
        for i in 0..=1000 {
            let t = 10.0 * i as f64 / 1000.0;
            worst_f = worst_f.max((prof.f(t)? / t.cosh() - 1.0).abs() * t.cosh());
        }
        let cprof = curvature_profile(&prof);
        for s in cprof.samples() {
            worst_k = worst_k.max((s.k_tr + 1.0).abs()).max((s.k_disk + 4.0).abs()).max((s.m - 1.0).abs());
        }
    }
    verdict(worst_f <= 1e-8 && worst_k <= 1e-8, format!("max |f - cosh| = {worst_f:.2e}, max curvature gap = {worst_k:.2e}"))
}

fn product_limit() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        let c = ModelParams::lower_bound(n) + 1e-12;
        let prof = solve_profile(ModelParams::new(n, c)?, 10.0, 1e-12)?;
        for i in 0..=1000 {
            let t = 10.0 * i as f64 / 1000.0;
            worst = worst.max((prof.f(t)? - c).abs());
        }
    }
    verdict(worst <= 1e-6, format!("max |f - c| on [0,10] = {worst:.3e} (bound 1e-6)"))
}

fn claims() -> Result<Verdict> {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (n, c) in claim_grid() {
        let prof = solve_profile(ModelParams::new(n, c)?, 20.0, DEFAULT_TOL)?;
        let rep = verify_claims(&prof, 1e-9)?;
        worst = worst.max(rep.worst_slack());
        if !rep.all_pass() {
            failures.push(format!("(n={n}, c={c})"));
        }
    }
    verdict(failures.is_empty(), format!("{} parameter pairs, worst slack {worst:.2e}, failures {failures:?}", claim_grid().len()))
}

fn claim_five() -> Result<Verdict> {
    let mut worst_rate = f64::INFINITY;
    let mut worst_r2 = f64::INFINITY;
    for (n, c) in claim_grid() {
        let prof = solve_profile(ModelParams::new(n, c)?, 20.0, DEFAULT_TOL)?;
        let fit = fit_decay_rate(&log_derivative_gap_series(&prof), (5.0, 15.0))?;
        worst_rate = worst_rate.min(fit.rate);
        worst_r2 = worst_r2.min(fit.r_squared);
    }
    verdict(worst_rate >= 0.9 && worst_r2 >= 0.99, format!("min rate {worst_rate:.4}, min r² {worst_r2:.6}"))
}

fn sup_sectional() -> Result<Verdict> {
    let mut sup_gap: f64 = 0.0;
    let mut range_ok = true;
    let mut worst_holo = f64::NEG_INFINITY;
    let mut holo_low_ok = true;
    for (n, c) in claim_grid() {
        let params = ModelParams::new(n, c)?;
        let prof = solve_profile(params, 20.0, DEFAULT_TOL)?;
        let cprof = curvature_profile(&prof);
        let floor = -2.0 * n as f64 - 2.0 - 1e-6;
        for (i, t) in [0.0, 0.5, 2.0, 6.0].into_iter().enumerate() {
            let op = assemble_point_operator(&cprof, t)?;
            let ext = extremize_sectional(&op, 1000, SEED + i as u64)?;
            if t == 0.0 {
                sup_gap = sup_gap.max((ext.max_k - params.sup_sectional()).abs());
            }
            range_ok &= ext.min_k >= floor && ext.max_k <= params.sup_sectional() + 1e-6;
            let (hmin, hmax) = holomorphic_sectional_range(&op, 1000, SEED + i as u64)?;
            holo_low_ok &= hmin >= floor;
            worst_holo = worst_holo.max(hmax);
        }
    }
    let holo_ok = holo_low_ok && worst_holo <= -4.0 + 1e-6;
    verdict(
        sup_gap <= 1e-6 && range_ok && holo_ok,
        format!(
            "sup-K gap {sup_gap:.2e}, sectional range ok: {range_ok}, holomorphic max {worst_holo:.6} (ceiling -4), lower ok: {holo_low_ok}"
        ),
    )
}

fn einstein() -> Result<Verdict> {
    let mut ric: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for (n, c) in claim_grid().into_iter().chain([(2, 1.0), (3, 1.0)]) {
        let params = ModelParams::new(n, c)?;
        let prof = solve_profile(params, 20.0, DEFAULT_TOL)?;
        let cprof = curvature_profile(&prof);
        let target = params.einstein_constant();
        for i in 0..50 {
            let op = assemble_point_operator(&cprof, 12.0 * i as f64 / 49.0)?;
            ric = op.ricci_eigenvalues().iter().map(|e| (e - target).abs()).fold(ric, f64::max);
            sym = sym.max(op.tensor.symmetry_defects().max());
        }
    }
    verdict(ric <= 1e-7 && sym <= 1e-12, format!("max Ricci gap {ric:.2e}, max symmetry defect {sym:.2e}"))
}

fn alpha_monotone() -> Result<Verdict> {
    let mut detail = Vec::new();
    let mut pass = true;
    for n in [2, 3] {
        let lower = ModelParams::lower_bound(n) + 0.01;
        let cs: Vec<f64> = (0..20).map(|i| lower + (1.0 - lower) * i as f64 / 19.0).collect();
        let alphas = alpha_map(n, &cs, 20.0, DEFAULT_TOL).into_iter().map(|(_, a)| a).collect::<Result<Vec<f64>>>()?;
        let decreasing = alphas.windows(2).all(|w| w[1] < w[0]);
        let at_one = alphas[19];
        pass &= decreasing && (at_one - 1.0).abs() <= 1e-4;
        detail.push(format!("n={n}: decreasing {decreasing}, alpha(1) = {at_one:.9}"));
    }
    verdict(pass, detail.join("; "))
}

fn disk_comparison() -> Result<Verdict> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, c) in [(2, 0.9), (3, 0.95)] {
        let prof = solve_profile(ModelParams::new(n, c)?, 20.0, 1e-12)?;
        let dp = disk_profile(&prof)?;
        let rep = compare_with_ball(&dp, alpha_of_c(&dp)?)?;
        let at15 = rep
            .ratio_samples
            .iter()
            .min_by(|a, b| (a.0 - 15.0).abs().total_cmp(&(b.0 - 15.0).abs()))
            .map(|s| s.1.abs())
            .unwrap_or(f64::INFINITY);
        pass &= rep.ratio_fit.rate > 0.0 && at15 <= 1e-3 && rep.volume_fit.rate > 0.0;
        detail.push(format!(
            "n={n} c={c}: rate {:.3}, |log ratio|(15) {at15:.2e}, volume rate {:.3}",
            rep.ratio_fit.rate, rep.volume_fit.rate
        ));
    }
    verdict(pass, detail.join("; "))
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Result<BallPoint> {
    let z: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    let radius = 0.8 * rng.random_range(0.05f64..1.0).sqrt();
    BallPoint::new(z.into_iter().map(|w| w * (radius / norm)).collect())
}

fn distance_and_cutoff() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pairs = (0..10)
        .map(|i| Ok((random_point(&mut rng, 2 + i % 2)?, random_point(&mut rng, 2 + i % 2)?)))
        .collect::<Result<Vec<_>>>()?;
    let gaps = pairs
        .par_iter()
        .map(|(a, b)| {
            let pair = (geodesic_distance_oracle(a, b, 1e-10)? - ball_distance(a, b)).abs();
            let divisor = (divisor_distance_by_oracle(a, 1e-10)? - distance_to_divisor(a)).abs();
            Ok((pair, divisor))
        })
        .collect::<Result<Vec<_>>>()?;
    let pair_gap = gaps.iter().map(|g| g.0).fold(0.0, f64::max);
    let divisor_gap = gaps.iter().map(|g| g.1).fold(0.0, f64::max);

    let mut support_ok = true;
    let mut spread: Vec<f64> = Vec::new();
    for k in [1, 2] {
        let scaled: Vec<f64> = [8.0, 16.0, 32.0]
            .into_iter()
            .map(|r| Ok(cutoff_derivative_bounds(&CutoffSpec::new(r, 2)?, k)? * f64::powi(r, k as i32)))
            .collect::<Result<_>>()?;
        let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
        let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
        spread.push(hi / lo - 1.0);
    }
    for r in [8.0, 16.0, 32.0] {
        let spec = CutoffSpec::new(r, 2)?;
        for i in 0..=400 {
            let d = 1.2 * r * i as f64 / 400.0;
            let s = 4.0 * d.cosh().ln() / r;
            // points with tanh d rounding to 1 are off the ball; use the radial profile there
            let chi = if d < 12.0 { cutoff(&spec, &BallPoint::from_real(&[d.tanh(), 0.0])?) } else { spec.radial(d) };
            support_ok &= (0.0..=1.0).contains(&chi);
            if s <= 0.999 {
                support_ok &= chi == 1.0;
            }
            if s >= 1.501 {
                support_ok &= chi == 0.0;
            }
        }
    }
    let scaling_ok = spread.iter().all(|&s| s <= 0.05);
    verdict(
        pair_gap <= 1e-6 && divisor_gap <= 1e-6 && support_ok && scaling_ok,
        format!(
            "pair gap {pair_gap:.2e}, divisor gap {divisor_gap:.2e}, support ok {support_ok}, R^k-scaled spread k=1: {:.2e}, k=2: {:.2e}",
            spread[0], spread[1]
        ),
    )
}

fn gluing() -> Result<Verdict> {
    let radii = [8.0, 12.0, 16.0, 20.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [2, 3] {
        let cone = ConeModel::solve(2, d, 25.0)?;
        let glued = glue_sweep(&cone, &radii)?;
        let sups: Vec<f64> = glued.iter().map(|g| g.sup_defect()).collect();
        let fit = fit_sups(&radii, &sups)?;
        let strictly = sups.windows(2).all(|w| w[1] < w[0]);
        let reports = glued.iter().map(newton_resolve).collect::<Result<Vec<_>>>()?;
        let newton_ok = reports.iter().filter(|r| r.r >= 12.0).all(|r| r.converged && r.newton_iters <= 10);
        let norms: Vec<(f64, f64)> = reports.iter().map(|r| (r.r, r.correction_norm.ln())).collect();
        let slope = fit_line(&norms)?.slope;
        pass &= strictly && fit.rate > 0.0 && fit.r_squared >= 0.95 && newton_ok && slope < 0.0;
        detail.push(format!(
            "d={d}: rate {:.3}, r² {:.5}, iterations {:?}, correction log-slope {slope:.3}",
            fit.rate,
            fit.r_squared,
            reports.iter().map(|r| r.newton_iters).collect::<Vec<_>>()
        ));
    }
    verdict(pass, detail.join("; "))
}

fn vsn() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut gap: f64 = 0.0;
    for trial in 0..100 {
        let n = 2 + trial % 3;
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..4.0)).collect();
        let g = DMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { lambda[i] } else { 0.0 }, 0.0));
        let xi = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let q = tensor_from_form(&g).quadratic_form(&xi);
        let trace: Complex64 = (0..n).map(|i| xi[(i, i)] * lambda[i]).sum();
        let mut expected = trace.norm_sqr();
        for i in 0..n {
            for j in 0..n {
                expected += lambda[i] * lambda[j] * xi[(i, j)].norm_sqr();
            }
        }
        gap = gap.max((-q - expected).abs());
    }
    let mut hsc_ok = true;
    for n in [2, 3] {
        let ball = HermitianCurvature::from_real(&constant_hsc_tensor(n, -4.0)?)?;
        hsc_ok &= vsn_test(&ball, 200, SEED)?.is_vsn;
    }
    let mut degenerate = DMatrix::<Complex64>::identity(3, 3);
    degenerate[(0, 0)] = Complex64::new(0.0, 0.0);
    let margin = vsn_test(&tensor_from_form(&degenerate), 200, SEED)?.worst_margin;
    verdict(
        gap <= 1e-12 && hsc_ok && margin.abs() <= 1e-10,
        format!("identity gap {gap:.2e}, HSC(-4) is VSN: {hsc_ok}, degenerate margin {margin:.2e}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 ball closed-form anchor", ball_anchor),
        ("2 product-limit anchor", product_limit),
        ("3 profile claims 1-4", claims),
        ("4 claim 5 decay", claim_five),
        ("5 sectional and holomorphic bounds", sup_sectional),
        ("6 Einstein and tensor symmetries", einstein),
        ("7 alpha map", alpha_monotone),
        ("8 disk comparison", disk_comparison),
        ("9 divisor distance and cut-off", distance_and_cutoff),
        ("10 gluing defect and Newton", gluing),
        ("11 very strong negativity", vsn),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {detail} [{:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
