//! Command-line front end.
//!
//! Flags override values from an optional `key=value` config file. Exit codes:
//! 0 on success, 2 on validation failures, 3 on numerical failures.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::comparison::{alpha_map, alpha_of_c, c_for_alpha, compare_with_ball, disk_profile};
use crate::curvature::{assemble_point_operator, curvature_profile, extremize_sectional, holomorphic_sectional_range};
use crate::decay::fit_decay_rate;
use crate::error::{Error, Result};
use crate::gluing::{fit_sups, glue, glue_sweep, newton_resolve, ConeModel, DEFAULT_MARGIN};
use crate::io::{self, CsvTable};
use crate::profile::{
    log_derivative_gap_series, solve_profile, verify_claims, MetricProfile, ModelParams, DEFAULT_TOL,
    DEFAULT_T_MAX,
};
use crate::tensor::{constant_hsc_tensor, tensor_from_form, vsn_test, HermitianCurvature, VSN_EPS};

#[derive(Debug, Parser)]
#[command(name = "thullen", version, about = "Invariant Kähler-Einstein profiles along a divisor in complex hyperbolic space")]
pub struct Cli {
    /// Optional `key=value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Curvature,
    Alphamap,
    Compare,
    Glue,
    Vsn,
    VerifyAll,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the profile ODE; CSV header `t,f,fp,fpp`.
    Solve(Options),
    /// Curvature functions along the profile, plus plane extremization with JSON output.
    Curvature(Options),
    /// Two-column `c,alpha` table over `--sweep lo:hi:count`.
    Alphamap(Options),
    /// Disk-level comparison with the ball.
    Compare(Options),
    /// Glue the cone model into the ball and re-solve by Newton iteration.
    Glue(Options),
    /// Very strong negativity verdict for the curvature tensor at `--at`.
    Vsn(Options),
    /// Run the invariant suite on a default parameter grid and print a table.
    VerifyAll(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Cone order.
    #[arg(long)]
    pub d: Option<u32>,
    /// Single collar radius; `glue` then writes the defect series.
    #[arg(long = "R", visible_alias = "radius")]
    pub r: Option<f64>,
    /// Comma-separated collar radii for a sweep.
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Random planes for the sectional curvature search.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Distance from the divisor for point operators.
    #[arg(long)]
    pub at: Option<f64>,
    /// `lo:hi:count` for `alphamap`.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, value_enum)]
    pub output: Option<Format>,
    /// Output file; defaults to a generated name in `$THULLEN_OUTPUT_DIR` or `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script next to CSV output.
    #[arg(long)]
    pub gnuplot: bool,
}

/// Parsed `key=value` file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", no + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("config line {}: unknown key {key:?}", no + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Parse(format!("config key {key}: {e}"))))
            .transpose()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n", "c", "alpha", "d", "r", "radii", "t_max", "tol", "seed", "trials", "samples", "at", "sweep", "output", "out",
    "gnuplot",
];

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: u32,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub d: u32,
    pub r: Option<f64>,
    pub radii: Vec<f64>,
    pub t_max: f64,
    pub tol: f64,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub at: f64,
    pub sweep: Option<(f64, f64, usize)>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub gnuplot: bool,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("radii: {e}"))))
        .collect()
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("sweep {s:?}: expected lo:hi:count")));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| Error::Parse(format!("sweep: {e}")));
    let count = parts[2].trim().parse::<usize>().map_err(|e| Error::Parse(format!("sweep count: {e}")))?;
    Ok((num(parts[0])?, num(parts[1])?, count))
}

impl RunConfig {
    pub fn resolve(command: CommandKind, o: &Options, file: &ConfigFile) -> Result<Self> {
        macro_rules! pick {
            ($field:ident, $key:literal, $default:expr) => {
                match o.$field.clone() {
                    Some(v) => v,
                    None => file.get($key)?.unwrap_or($default),
                }
            };
            ($field:ident, $key:literal) => {
                match o.$field.clone() {
                    Some(v) => Some(v),
                    None => file.get($key)?,
                }
            };
        }
        let c: Option<f64> = pick!(c, "c");
        let alpha: Option<f64> = pick!(alpha, "alpha");
        let needs_model = matches!(command, CommandKind::Solve | CommandKind::Curvature | CommandKind::Compare | CommandKind::Vsn);
        if needs_model && c.is_some() == alpha.is_some() {
            return Err(Error::InvalidArgument("give exactly one of --c and --alpha".into()));
        }
        let tol: f64 = pick!(tol, "tol", DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1e-4) {
            return Err(Error::InvalidArgument(format!("tol = {tol} must lie in (0, 1e-4)")));
        }
        let radii_text: Option<String> = pick!(radii, "radii");
        let radii = match radii_text {
            Some(s) => parse_list(&s)?,
            None => vec![8.0, 12.0, 16.0, 20.0],
        };
        let sweep_text: Option<String> = pick!(sweep, "sweep");
        let format_text: Option<Format> = pick!(output, "output");
        let gnuplot = o.gnuplot || file.get::<bool>("gnuplot")?.unwrap_or(false);
        Ok(Self {
            command,
            n: pick!(n, "n", 2),
            c,
            alpha,
            d: pick!(d, "d", 2),
            r: pick!(r, "r"),
            radii,
            t_max: pick!(t_max, "t_max", DEFAULT_T_MAX),
            tol,
            seed: pick!(seed, "seed", 7),
            trials: pick!(trials, "trials", 200),
            samples: pick!(samples, "samples", 1000),
            at: pick!(at, "at", 0.0),
            sweep: sweep_text.map(|s| parse_sweep(&s)).transpose()?,
            format: format_text.unwrap_or(Format::Csv),
            out: pick!(out, "out"),
            gnuplot,
        })
    }

    fn params(&self) -> Result<ModelParams> {
        let c = match (self.c, self.alpha) {
            (Some(c), None) => c,
            (None, Some(a)) => c_for_alpha(self.n, a, self.t_max.max(DEFAULT_T_MAX), self.tol)?,
            _ => return Err(Error::InvalidArgument("give exactly one of --c and --alpha".into())),
        };
        ModelParams::new(self.n, c)
    }

    fn destination(&self, stem: &str) -> PathBuf {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        self.out.clone().unwrap_or_else(|| io::default_output_dir().join(format!("{stem}.{ext}")))
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    /// Lines for standard output.
    pub report: Vec<String>,
    /// False when `verify-all` found a failing check.
    pub all_pass: bool,
}

fn emit_csv(cfg: &RunConfig, stem: &str, table: &CsvTable, log_y: bool, outcome: &mut Outcome) -> Result<()> {
    let path = cfg.destination(stem);
    io::write_atomic(&path, &table.render())?;
    outcome.written.push(path.clone());
    if cfg.gnuplot {
        let script = path.with_extension("gp");
        io::write_atomic(&script, &io::gnuplot_script(&path, table, log_y))?;
        outcome.written.push(script);
    }
    Ok(())
}

fn emit_json(cfg: &RunConfig, stem: &str, kind: &str, body: impl Serialize, outcome: &mut Outcome) -> Result<()> {
    let path = cfg.destination(stem);
    io::write_atomic(&path, &io::render_json(&io::document(kind, body)?)?)?;
    outcome.written.push(path);
    Ok(())
}

fn stem(cfg: &RunConfig, name: &str, p: &ModelParams) -> String {
    let _ = cfg;
    format!("{name}_n{}_c{}", p.n(), p.c())
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let mut outcome = Outcome { all_pass: true, ..Default::default() };
    match cfg.command {
        CommandKind::Solve => {
            let p = cfg.params()?;
            let prof = solve_profile(p, cfg.t_max, cfg.tol)?;
            match cfg.format {
                Format::Csv => emit_csv(cfg, &stem(cfg, "profile", &p), &io::profile_csv(&prof), false, &mut outcome)?,
                Format::Json => {
                    let path = cfg.destination(&stem(cfg, "profile", &p));
                    io::write_atomic(&path, &(io::profile_json(&prof)? + "\n"))?;
                    outcome.written.push(path);
                }
            }
        }
        CommandKind::Curvature => {
            let p = cfg.params()?;
            let prof = solve_profile(p, cfg.t_max, cfg.tol)?;
            let cprof = curvature_profile(&prof);
            match cfg.format {
                Format::Csv => emit_csv(cfg, &stem(cfg, "curvature", &p), &io::curvature_csv(&cprof), false, &mut outcome)?,
                Format::Json => {
                    let op = assemble_point_operator(&cprof, cfg.at)?;
                    let ext = extremize_sectional(&op, cfg.samples, cfg.seed)?;
                    let (hmin, hmax) = holomorphic_sectional_range(&op, cfg.samples, cfg.seed)?;
                    let body = json!({
                        "n": p.n(), "c": p.c(), "t": cfg.at, "seed": cfg.seed,
                        "values": op.values,
                        "ricci_eigenvalues": op.ricci_eigenvalues(),
                        "sectional": ext,
                        "argmax_kahler_cosine": ext.argmax.kahler_cosine(),
                        "holomorphic_sectional": {"min": hmin, "max": hmax},
                        "tensor": io::tensor_json(&op.tensor)?,
                    });
                    emit_json(cfg, &format!("{}_t{}", stem(cfg, "curvature", &p), cfg.at), "curvature_point", body, &mut outcome)?;
                }
            }
        }
        CommandKind::Alphamap => {
            let lower = ModelParams::lower_bound(cfg.n);
            let (lo, hi, count) = cfg.sweep.unwrap_or((lower + 0.01, 1.0, 20));
            if count < 2 || !(hi > lo) {
                return Err(Error::InvalidArgument("sweep needs lo < hi and at least 2 points".into()));
            }
            let cs: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
            let mut table = CsvTable::new(&["c", "alpha"]);
            for (c, a) in alpha_map(cfg.n, &cs, cfg.t_max.max(DEFAULT_T_MAX), cfg.tol) {
                table.push(vec![c, a?])?;
            }
            let stem = format!("alphamap_n{}", cfg.n);
            match cfg.format {
                Format::Csv => emit_csv(cfg, &stem, &table, false, &mut outcome)?,
                Format::Json => emit_json(cfg, &stem, "alpha_map", json!({"n": cfg.n, "rows": table.rows()}), &mut outcome)?,
            }
        }
        CommandKind::Compare => {
            let p = cfg.params()?;
            let prof = solve_profile(p, cfg.t_max.max(DEFAULT_T_MAX), cfg.tol)?;
            let dp = disk_profile(&prof)?;
            let alpha = alpha_of_c(&dp)?;
            let rep = compare_with_ball(&dp, alpha)?;
            match cfg.format {
                Format::Csv => {
                    let mut table = CsvTable::new(&["t", "log_ratio", "log_volume_ratio"]);
                    for (a, b) in rep.ratio_samples.iter().zip(&rep.volume_ratio_samples) {
                        table.push(vec![a.0, a.1, b.1])?;
                    }
                    emit_csv(cfg, &stem(cfg, "compare", &p), &table, true, &mut outcome)?;
                }
                Format::Json => emit_json(cfg, &stem(cfg, "compare", &p), "comparison", &rep, &mut outcome)?,
            }
            outcome.report.push(format!("alpha = {alpha}, ratio decay rate = {}", rep.ratio_fit.rate));
        }
        CommandKind::Glue => run_glue(cfg, &mut outcome)?,
        CommandKind::Vsn => {
            let p = cfg.params()?;
            let prof = solve_profile(p, cfg.t_max, cfg.tol)?;
            let cprof = curvature_profile(&prof);
            let op = assemble_point_operator(&cprof, cfg.at)?;
            let herm = HermitianCurvature::from_real(&op.tensor)?;
            let verdict = vsn_test(&herm, cfg.trials, cfg.seed)?;
            outcome.report.push(format!("is_vsn = {}, worst margin = {}", verdict.is_vsn, verdict.worst_margin));
            let body = json!({"n": p.n(), "c": p.c(), "t": cfg.at, "seed": cfg.seed, "verdict": verdict});
            let cfg = RunConfig { format: Format::Json, ..cfg.clone() };
            emit_json(&cfg, &format!("{}_t{}", stem(&cfg, "vsn", &p), cfg.at), "vsn_verdict", body, &mut outcome)?;
        }
        CommandKind::VerifyAll => {
            let rows = verify_all(cfg.n, cfg.seed)?;
            outcome.all_pass = rows.iter().all(|r| r.pass);
            outcome.report = render_checks(&rows);
        }
    }
    Ok(outcome)
}

fn run_glue(cfg: &RunConfig, outcome: &mut Outcome) -> Result<()> {
    let radii = match cfg.r {
        Some(r) => vec![r],
        None => cfg.radii.clone(),
    };
    let largest = radii.iter().copied().fold(0.0, f64::max);
    let cone = ConeModel::solve(cfg.n, cfg.d, (largest + DEFAULT_MARGIN).max(DEFAULT_T_MAX))?;
    let stem = format!("glue_n{}_d{}", cfg.n, cfg.d);
    if let Some(r) = cfg.r {
        let g = glue(&cone, r, r + DEFAULT_MARGIN)?;
        let rep = newton_resolve(&g)?;
        let mut table = CsvTable::new(&["t", "f_glue", "chi", "defect", "f_corrected"]);
        for i in 0..g.grid.len() {
            table.push(vec![g.grid[i], g.f[i], g.chi[i], g.defect[i], rep.corrected[i]])?;
        }
        let stem = format!("{stem}_R{r}");
        match cfg.format {
            Format::Csv => emit_csv(cfg, &stem, &table, false, outcome)?,
            Format::Json => emit_json(cfg, &stem, "glued_profile", json!({"glued": g, "newton": rep}), outcome)?,
        }
        outcome.report.push(format!("R = {r}: sup defect {:e}, Newton iterations {}", g.sup_defect(), rep.newton_iters));
        return Ok(());
    }
    let glued = glue_sweep(&cone, &radii)?;
    let reports = glued.par_iter().map(newton_resolve).collect::<Result<Vec<_>>>()?;
    let mut table = CsvTable::new(&[
        "R", "sup_defect", "glue_closeness", "correction_norm", "iterations", "final_residual", "metric_bound",
    ]);
    for (g, rep) in glued.iter().zip(&reports) {
        table.push(vec![
            g.r,
            g.sup_defect(),
            g.glue_closeness(),
            rep.correction_norm,
            rep.newton_iters as f64,
            rep.final_residual,
            rep.metric_bound,
        ])?;
    }
    match cfg.format {
        Format::Csv => emit_csv(cfg, &stem, &table, true, outcome)?,
        Format::Json => {
            let sups: Vec<f64> = glued.iter().map(|g| g.sup_defect()).collect();
            let fit = if radii.len() >= 4 { Some(fit_sups(&radii, &sups)?) } else { None };
            let rows: Vec<_> = glued
                .iter()
                .zip(&reports)
                .map(|(g, rep)| json!({
                    "R": g.r, "sup_defect": g.sup_defect(), "glue_closeness": g.glue_closeness(),
                    "correction_norm": rep.correction_norm, "iterations": rep.newton_iters,
                    "final_residual": rep.final_residual, "metric_bound": rep.metric_bound,
                }))
                .collect();
            emit_json(cfg, &stem, "glue_sweep", json!({"n": cfg.n, "d": cfg.d, "c": cone.c(), "rows": rows, "defect_fit": fit}), outcome)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckRow {
    CheckRow { name: name.into(), pass, detail: detail.into() }
}

pub fn render_checks(rows: &[CheckRow]) -> Vec<String> {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    rows.iter()
        .map(|r| format!("{:<width$}  {}  {}", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail))
        .collect()
}

fn profile_checks(n: u32, c: f64, seed: u64) -> Result<Vec<CheckRow>> {
    let prof: MetricProfile = solve_profile(ModelParams::new(n, c)?, DEFAULT_T_MAX, DEFAULT_TOL)?;
    let mut rows = Vec::new();
    let claims = verify_claims(&prof, 1e-9)?;
    for o in &claims.outcomes {
        rows.push(check(
            format!("claim {} (n={n}, c={c})", o.claim),
            o.status != crate::profile::ClaimStatus::Fail,
            format!("{:?}, slack {:e}", o.status, o.slack),
        ));
    }
    let fit = fit_decay_rate(&log_derivative_gap_series(&prof), (5.0, 15.0))?;
    rows.push(check(
        format!("claim 5 decay (n={n}, c={c})"),
        fit.rate >= 0.9 && fit.r_squared >= 0.99,
        format!("rate {:.4}, r² {:.6}", fit.rate, fit.r_squared),
    ));
    let cprof = curvature_profile(&prof);
    let op = assemble_point_operator(&cprof, 0.0)?;
    let ext = extremize_sectional(&op, 1000, seed)?;
    let expected = prof.params().sup_sectional();
    rows.push(check(
        format!("sup K at divisor (n={n}, c={c})"),
        (ext.max_k - expected).abs() <= 1e-6,
        format!("max {:.9} vs {:.9}", ext.max_k, expected),
    ));
    let target = prof.params().einstein_constant();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let t = 10.0 * i as f64 / 49.0;
        let op = assemble_point_operator(&cprof, t)?;
        worst = op.ricci_eigenvalues().iter().map(|e| (e - target).abs()).fold(worst, f64::max);
    }
    rows.push(check(format!("Einstein (n={n}, c={c})"), worst <= 1e-7, format!("max |Ric - ({target})| {worst:e}")));
    let verdict = vsn_test(&HermitianCurvature::from_real(&op.tensor)?, 200, seed)?;
    rows.push(check(
        format!("VSN at divisor (n={n}, c={c})"),
        verdict.is_vsn,
        format!("worst margin {:.6}", verdict.worst_margin),
    ));
    Ok(rows)
}

/// `-Q(ξ)` against `|Σ λ_i ξ^{ii}|² + Σ λ_i λ_j |ξ^{ij}|²` for `-(gg + gg)` with `g = diag(λ)`.
fn vsn_identity_gap(n: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let g = DMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { lambda[i] } else { 0.0 }, 0.0));
        let xi = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let q = tensor_from_form(&g).quadratic_form(&xi);
        let trace: Complex64 = (0..n).map(|i| lambda[i] * xi[(i, i)]).sum();
        let mut rhs = trace.norm_sqr();
        for i in 0..n {
            for j in 0..n {
                rhs += lambda[i] * lambda[j] * xi[(i, j)].norm_sqr();
            }
        }
        worst = worst.max((-q - rhs).abs() / rhs.max(1.0));
    }
    worst
}

/// The invariant suite for complex dimension `n`.
pub fn verify_all(n: u32, seed: u64) -> Result<Vec<CheckRow>> {
    let lower = ModelParams::lower_bound(n);
    let cs: Vec<f64> = [0.85, 0.9, 0.95].into_iter().filter(|&c| c > lower).collect();
    let mut rows: Vec<CheckRow> = cs
        .par_iter()
        .map(|&c| profile_checks(n, c, seed))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let cs: Vec<f64> = (0..20).map(|i| lower + 0.01 + (1.0 - lower - 0.01) * i as f64 / 19.0).collect();
    let map = alpha_map(n, &cs, DEFAULT_T_MAX, DEFAULT_TOL);
    let alphas = map.into_iter().map(|(_, a)| a).collect::<Result<Vec<f64>>>()?;
    let decreasing = alphas.windows(2).all(|w| w[1] < w[0]);
    let at_one = alphas[alphas.len() - 1];
    rows.push(check(
        "alpha map",
        decreasing && (at_one - 1.0).abs() <= 1e-4,
        format!("strictly decreasing: {decreasing}, alpha(1) = {at_one:.9}"),
    ));

    let gap = vsn_identity_gap(n as usize, 100, seed);
    rows.push(check("VSN identity", gap <= 1e-12, format!("max relative gap {gap:e}")));
    let ball = HermitianCurvature::from_real(&constant_hsc_tensor(n as usize, -4.0)?)?;
    let verdict = vsn_test(&ball, 200, seed)?;
    rows.push(check("VSN constant HSC -4", verdict.is_vsn, format!("worst margin {:.6}", verdict.worst_margin)));
    let mut degenerate = DMatrix::identity(n as usize, n as usize);
    degenerate[(0, 0)] = Complex64::new(0.0, 0.0);
    let verdict = vsn_test(&tensor_from_form(&degenerate), 200, seed)?;
    rows.push(check(
        "VSN degenerate margin",
        verdict.worst_margin.abs() <= VSN_EPS,
        format!("worst margin {:e}", verdict.worst_margin),
    ));

    let radii = [8.0, 12.0, 16.0, 20.0];
    let cone = ConeModel::solve(n, 2, 25.0)?;
    let glued = glue_sweep(&cone, &radii)?;
    let sups: Vec<f64> = glued.iter().map(|g| g.sup_defect()).collect();
    let fit = fit_sups(&radii, &sups)?;
    let strictly = sups.windows(2).all(|w| w[1] < w[0]);
    rows.push(check(
        "gluing defect decay (d=2)",
        strictly && fit.rate > 0.0 && fit.r_squared >= 0.95,
        format!("rate {:.4}, r² {:.6}", fit.rate, fit.r_squared),
    ));
    let reports = glued.par_iter().map(newton_resolve).collect::<Result<Vec<_>>>()?;
    let newton_ok = reports.iter().filter(|r| r.r >= 12.0).all(|r| r.converged && r.newton_iters <= 10);
    rows.push(check(
        "Newton re-solve (d=2)",
        newton_ok,
        format!("iterations {:?}", reports.iter().map(|r| r.newton_iters).collect::<Vec<_>>()),
    ));
    Ok(rows)
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (kind, opts) = match &cli.command {
        Command::Solve(o) => (CommandKind::Solve, o),
        Command::Curvature(o) => (CommandKind::Curvature, o),
        Command::Alphamap(o) => (CommandKind::Alphamap, o),
        Command::Compare(o) => (CommandKind::Compare, o),
        Command::Glue(o) => (CommandKind::Glue, o),
        Command::Vsn(o) => (CommandKind::Vsn, o),
        Command::VerifyAll(o) => (CommandKind::VerifyAll, o),
    };
    let result = cli
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()
        .map(Option::unwrap_or_default)
        .and_then(|file| RunConfig::resolve(kind, opts, &file))
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            for line in &outcome.report {
                println!("{line}");
            }
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            if outcome.all_pass {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}
