//! Monte Carlo benchmark: noise calibration, per-method synthesis over many
//! data sets, rollout evaluation and table output.
//!
//! Seed tree (all through [`child_seed`]):
//! * data set `k` at noise level `s`: `[s, k, 0]`, its start state `[s, k, 1]`;
//! * rollout `j` of controller `k`: noise `[s, k, 2, j]`, start state `[s, k, 3, j]`;
//! * calibration data set `i`: `[CALIBRATION_BRANCH, i]`.
//!
//! Seeds do not depend on the method, so every method sees the same data sets
//! and the same rollout noise at a given cell.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ddlqr_sdp::SolverSettings;

use crate::data::{collect, snr_measured};
use crate::error::{invalid, Error, Result};
use crate::mss::true_spectral_radius;
use crate::rng::{child_seed, stream};
use crate::synth::{synthesize, FailureKind, Method, SynthInput, SynthOptions};
use crate::sys::{discretize, empirical_cost, quarter_car_with, simulate, CostSpec, Discretization, DiscreteLinearSystem, InitialCondition, QuarterCarParams};

/// Root-seed branch used for calibration data sets.
pub const CALIBRATION_BRANCH: u64 = 0xCA11;
/// Bisection budget for [`calibrate_noise`].
pub const CALIBRATION_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SnrConvention {
    /// `r = 10^(−SNR/10)`.
    #[default]
    Nominal,
    /// Bisection on `r` against the measured data SNR.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WChoice {
    /// Data-driven methods receive the true `W`.
    #[default]
    True,
    /// Data-driven methods use the residual covariance estimate.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_ts")]
    pub ts: f64,
    #[serde(default)]
    pub discretization: String,
    #[serde(default)]
    pub params: QuarterCarParams,
}

fn default_ts() -> f64 {
    0.01
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { ts: default_ts(), discretization: "zoh".into(), params: QuarterCarParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    /// Full `Q` (rows); mutually exclusive with `q_diag`.
    pub q: Option<Vec<Vec<f64>>>,
    pub q_diag: Option<Vec<f64>>,
    pub r: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub mean: Vec<f64>,
    /// Diagonal of the covariance.
    pub cov_diag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self { tol_feas: s.tol_feas, tol_gap: s.tol_gap, max_iter: s.max_iter }
    }
}

/// Benchmark configuration, read from TOML. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_K")]
    pub n_k: usize,
    #[serde(rename = "N_S")]
    pub n_s: usize,
    #[serde(rename = "N_P")]
    pub n_p: usize,
    pub input_scale: f64,
    pub methods: Vec<String>,
    #[serde(default)]
    pub reg_weight: f64,
    /// Target SNRs in dB; ignored when `r_values` is given.
    #[serde(default)]
    pub snr_targets_db: Vec<f64>,
    /// Explicit road-noise variances.
    pub r_values: Option<Vec<f64>>,
    #[serde(default)]
    pub snr_mode: SnrConvention,
    #[serde(default)]
    pub w_source: WChoice,
    /// Data sets per bisection step (median SNR).
    #[serde(default = "default_calibration_sets")]
    pub calibration_sets: usize,
    #[serde(default)]
    pub system: SystemConfig,
    pub spec: SpecConfig,
    pub x0_dist: InitialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_calibration_sets() -> usize {
    11
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(format!("bench config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format { path: path.display().to_string(), msg: e.to_string() })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("bench config serializes")
    }

    /// Desk-scale quarter-car protocol with unit weights.
    pub fn desk_default() -> Self {
        Self {
            seed: 2024,
            n: 10,
            n_k: 20,
            n_s: 50,
            n_p: 150,
            input_scale: 10.0,
            methods: ["model", "indirect_ce", "direct_ce", "robust_direct"].map(String::from).to_vec(),
            reg_weight: 0.0,
            snr_targets_db: vec![50.0, 37.0],
            r_values: None,
            snr_mode: SnrConvention::Nominal,
            w_source: WChoice::True,
            calibration_sets: default_calibration_sets(),
            system: SystemConfig::default(),
            spec: SpecConfig { q: None, q_diag: Some(vec![1.0; 4]), r: 1.0, gamma: 0.9999 },
            x0_dist: InitialConfig { mean: vec![0.3, -4.0, 0.1, -1.0], cov_diag: vec![0.0006; 4] },
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_k == 0 || self.n_s == 0 || self.n_p == 0 || self.n == 0 {
            return Err(invalid("N, N_K, N_S and N_P must all be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        let methods = self.parsed_methods()?;
        if methods.contains(&Method::DirectCeReg) && !(self.reg_weight > 0.0) {
            return Err(invalid("direct_ce_reg needs reg_weight > 0"));
        }
        match &self.r_values {
            Some(rs) => {
                if rs.is_empty() || rs.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                    return Err(invalid("r_values must be positive and finite (W must be positive definite)"));
                }
            }
            None => {
                if self.snr_targets_db.is_empty() || self.snr_targets_db.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("snr_targets_db must be a nonempty list of finite values"));
                }
            }
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(invalid("input_scale must be positive"));
        }
        if self.x0_dist.mean.len() != 4 || self.x0_dist.cov_diag.len() != 4 {
            return Err(invalid("x0_dist needs four entries for the quarter car"));
        }
        if self.calibration_sets == 0 {
            return Err(invalid("calibration_sets must be at least 1"));
        }
        self.discretization()?;
        self.cost_spec()?;
        Ok(())
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    fn discretization(&self) -> Result<Discretization> {
        if self.system.discretization.is_empty() {
            Ok(Discretization::Zoh)
        } else {
            self.system.discretization.parse()
        }
    }

    pub fn cost_spec(&self) -> Result<CostSpec> {
        let q = match (&self.spec.q, &self.spec.q_diag) {
            (Some(rows), None) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(invalid("spec.q must be square"));
                }
                DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied())
            }
            (None, Some(d)) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            _ => return Err(invalid("give exactly one of spec.q and spec.q_diag")),
        };
        if q.nrows() != 4 {
            return Err(invalid("Q must be 4 x 4 for the quarter car"));
        }
        CostSpec::new(q, DMatrix::from_element(1, 1, self.spec.r), self.spec.gamma)
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        InitialCondition::new(
            DVector::from_column_slice(&self.x0_dist.mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(&self.x0_dist.cov_diag)),
        )
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings { tol_feas: self.solver.tol_feas, tol_gap: self.solver.tol_gap, max_iter: self.solver.max_iter }
    }

    /// The discrete plant at road variance `r`.
    pub fn system_at(&self, r: f64) -> Result<DiscreteLinearSystem> {
        discretize(&quarter_car_with(&self.system.params, r)?, self.system.ts, self.discretization()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub r: f64,
    pub achieved_db: f64,
    pub steps: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median measured (oracle-mode) SNR in dB over `seeds` data sets at noise level `r`.
pub fn median_snr_db(
    make_system: &dyn Fn(f64) -> Result<DiscreteLinearSystem>,
    r: f64,
    len: usize,
    input_scale: f64,
    x0: &InitialCondition,
    seeds: &[u64],
) -> Result<f64> {
    let sys = make_system(r)?;
    let sampler = x0.sampler();
    let mut vals = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let start = sampler.sample(&mut stream(child_seed(s, &[1])));
        let ds = collect(&sys, len, &start, input_scale, child_seed(s, &[0]))?;
        vals.push(snr_measured(&ds)?.db);
    }
    Ok(median(vals))
}

/// Bisection on `log r` until the median measured SNR is within 1 dB of
/// `target_db`. The bracket is `[1e-12, 1e4]`; a target outside the SNR range
/// spanned there, or no convergence within [`CALIBRATION_STEPS`], is an error.
pub fn calibrate_noise(
    make_system: &dyn Fn(f64) -> Result<DiscreteLinearSystem>,
    input_scale: f64,
    target_db: f64,
    len: usize,
    x0: &InitialCondition,
    seeds: &[u64],
) -> Result<Calibration> {
    if !target_db.is_finite() {
        return Err(invalid("calibration target must be finite"));
    }
    if seeds.is_empty() {
        return Err(invalid("calibration needs at least one seed"));
    }
    let snr = |r: f64| median_snr_db(make_system, r, len, input_scale, x0, seeds);
    let (mut lo, mut hi) = (1e-12_f64.ln(), 1e4_f64.ln());
    let (s_lo, s_hi) = (snr(lo.exp())?, snr(hi.exp())?);
    if !(s_lo >= target_db && target_db >= s_hi) {
        return Err(Error::Calibration(format!(
            "target {target_db} dB is outside the bracket [{s_hi:.2}, {s_lo:.2}] dB spanned by r in [1e-12, 1e4]"
        )));
    }
    for step in 1..=CALIBRATION_STEPS {
        let mid = 0.5 * (lo + hi);
        let s = snr(mid.exp())?;
        if (s - target_db).abs() <= 1.0 {
            return Ok(Calibration { r: mid.exp(), achieved_db: s, steps: step });
        }
        if s > target_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!("no r within 1 dB of {target_db} dB after {CALIBRATION_STEPS} bisection steps")))
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub snr_target_db: Option<f64>,
    pub snr_achieved_db: f64,
    pub r: f64,
    pub n_designed: usize,
    pub n_fail_solver: usize,
    pub n_fail_extract: usize,
    pub n_fail_unstable: usize,
    pub mean_cost: Option<f64>,
    pub mean_alpha: Option<f64>,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl BenchRow {
    pub fn n_failures(&self) -> usize {
        self.n_fail_solver + self.n_fail_extract + self.n_fail_unstable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Copy with timing zeroed, for byte comparisons.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.wall_time_s = 0.0;
        }
        out
    }

    /// Rows of one method, in noise-level order.
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.method == method.as_str())
    }
}

/// Per-controller outcome.
#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    Failed(FailureKind),
    Unstable,
    Ok { cost: f64, alpha: Option<f64> },
}

struct Level {
    target: Option<f64>,
    r: f64,
    sys: DiscreteLinearSystem,
    achieved_db: f64,
}

fn resolve_levels(cfg: &BenchConfig) -> Result<Vec<Level>> {
    let x0 = cfg.initial_condition()?;
    let make = |r: f64| cfg.system_at(r);
    let cal_seeds: Vec<u64> = (0..cfg.calibration_sets as u64).map(|i| child_seed(cfg.seed, &[CALIBRATION_BRANCH, i])).collect();
    let pairs: Vec<(Option<f64>, f64)> = match &cfg.r_values {
        Some(rs) => rs.iter().map(|&r| (None, r)).collect(),
        None => cfg
            .snr_targets_db
            .iter()
            .map(|&t| match cfg.snr_mode {
                SnrConvention::Nominal => Ok((Some(t), 10f64.powf(-t / 10.0))),
                SnrConvention::Calibrated => {
                    calibrate_noise(&make, cfg.input_scale, t, cfg.n, &x0, &cal_seeds).map(|c| (Some(t), c.r))
                }
            })
            .collect::<Result<_>>()?,
    };
    pairs
        .into_iter()
        .map(|(target, r)| {
            let achieved_db = median_snr_db(&make, r, cfg.n, cfg.input_scale, &x0, &cal_seeds)?;
            Ok(Level { target, r, sys: cfg.system_at(r)?, achieved_db })
        })
        .collect()
}

fn evaluate_gain(cfg: &BenchConfig, spec: &CostSpec, sys: &DiscreteLinearSystem, k: &DMatrix<f64>, level: u64, ctrl: u64) -> Result<f64> {
    let sampler = cfg.initial_condition()?.sampler();
    let mut total = 0.0;
    for j in 0..cfg.n_s as u64 {
        let x0 = sampler.sample(&mut stream(child_seed(cfg.seed, &[level, ctrl, 3, j])));
        // N_P stored states: x_0 .. x_{N_P − 1}.
        let traj = simulate(sys, k, &x0, cfg.n_p - 1, child_seed(cfg.seed, &[level, ctrl, 2, j]))?;
        let steps_missing = traj.states.len() < cfg.n_p;
        if steps_missing && !traj.diverged {
            return Err(invalid("rollout stopped early"));
        }
        total += empirical_cost(&traj, spec, k, false);
    }
    Ok(total / (cfg.n_s * cfg.n_p) as f64)
}

fn run_cell(cfg: &BenchConfig, spec: &CostSpec, opts: &SynthOptions, lvl: &Level, level: u64, method: Method, ctrl: u64) -> Result<Outcome> {
    let sys = &lvl.sys;
    let res = if method.needs_plant() {
        synthesize(method, SynthInput { data: None, plant: Some((&sys.a, &sys.b)), w: Some(&sys.w), reg_weight: 0.0 }, spec, opts)
    } else {
        let sampler = cfg.initial_condition()?.sampler();
        let start = sampler.sample(&mut stream(child_seed(cfg.seed, &[level, ctrl, 1])));
        let ds = collect(sys, cfg.n, &start, cfg.input_scale, child_seed(cfg.seed, &[level, ctrl, 0]))?;
        let w = match cfg.w_source {
            WChoice::True => Some(&sys.w),
            WChoice::Estimated => None,
        };
        synthesize(method, SynthInput { data: Some(&ds), plant: None, w, reg_weight: cfg.reg_weight }, spec, opts)
    };
    let res = match res {
        Ok(r) => r,
        Err(e) => {
            log::warn!("bench: {method} controller {ctrl} at r = {:e}: {e}", lvl.r);
            return Ok(Outcome::Failed(FailureKind::SolverNumerical));
        }
    };
    if let Some(f) = res.failure {
        return Ok(Outcome::Failed(f));
    }
    let k = res.k.as_ref().expect("successful synthesis carries a gain");
    if true_spectral_radius(&sys.a, &sys.b, k) >= 1.0 {
        return Ok(Outcome::Unstable);
    }
    let cost = evaluate_gain(cfg, spec, sys, k, level, ctrl)?;
    Ok(Outcome::Ok { cost, alpha: res.alpha })
}

/// Runs every (noise level × method × controller) cell on `workers` threads.
/// Results are collected in cell order, so reports are identical for any
/// worker count.
pub fn run_benchmark(cfg: &BenchConfig, workers: usize) -> Result<BenchReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

fn run_inner(cfg: &BenchConfig) -> Result<BenchReport> {
    let spec = cfg.cost_spec()?;
    let methods = cfg.parsed_methods()?;
    let opts = SynthOptions { settings: cfg.settings(), ..SynthOptions::default() };
    let levels = resolve_levels(cfg)?;
    let cells: Vec<(usize, usize, u64)> = (0..levels.len())
        .flat_map(|l| (0..methods.len()).flat_map(move |m| (0..cfg.n_k as u64).map(move |k| (l, m, k))))
        .collect();
    let outcomes: Vec<(Result<Outcome>, f64)> = cells
        .par_iter()
        .map(|&(l, m, k)| {
            let t = Instant::now();
            let out = run_cell(cfg, &spec, &opts, &levels[l], l as u64, methods[m], k);
            (out, t.elapsed().as_secs_f64())
        })
        .collect();

    let mut rows = Vec::with_capacity(levels.len() * methods.len());
    let mut it = outcomes.into_iter();
    for lvl in &levels {
        for &method in &methods {
            let mut row = BenchRow {
                method: method.as_str().to_string(),
                snr_target_db: lvl.target,
                snr_achieved_db: lvl.achieved_db,
                r: lvl.r,
                n_designed: cfg.n_k,
                n_fail_solver: 0,
                n_fail_extract: 0,
                n_fail_unstable: 0,
                mean_cost: None,
                mean_alpha: None,
                wall_time_s: 0.0,
                seed: cfg.seed,
            };
            let (mut cost_sum, mut alpha_sum, mut n_ok, mut n_alpha) = (0.0, 0.0, 0usize, 0usize);
            for _ in 0..cfg.n_k {
                let (out, secs) = it.next().expect("one outcome per cell");
                row.wall_time_s += secs;
                match out? {
                    Outcome::Failed(FailureKind::ExtractionConditioning) => row.n_fail_extract += 1,
                    Outcome::Failed(_) => row.n_fail_solver += 1,
                    Outcome::Unstable => row.n_fail_unstable += 1,
                    Outcome::Ok { cost, alpha } => {
                        cost_sum += cost;
                        n_ok += 1;
                        if let Some(a) = alpha {
                            alpha_sum += a;
                            n_alpha += 1;
                        }
                    }
                }
            }
            if n_ok > 0 {
                row.mean_cost = Some(cost_sum / n_ok as f64);
            }
            if n_alpha > 0 {
                row.mean_alpha = Some(alpha_sum / n_alpha as f64);
            }
            rows.push(row);
        }
    }
    Ok(BenchReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "text" | "aligned-text" => Ok(Self::Text),
            _ => Err(invalid(format!("unknown table format `{s}`"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "method",
    "snr_target_db",
    "snr_achieved_db",
    "r",
    "n_designed",
    "n_fail_solver",
    "n_fail_extract",
    "n_fail_unstable",
    "mean_cost",
    "mean_alpha",
    "wall_time_s",
    "seed",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn to_csv(report: &BenchReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.method.clone(),
            opt(r.snr_target_db),
            format!("{:?}", r.snr_achieved_db),
            format!("{:?}", r.r),
            r.n_designed.to_string(),
            r.n_fail_solver.to_string(),
            r.n_fail_extract.to_string(),
            r.n_fail_unstable.to_string(),
            opt(r.mean_cost),
            opt(r.mean_alpha),
            format!("{:?}", r.wall_time_s),
            r.seed.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

pub fn parse_csv(text: &str) -> Result<BenchReport> {
    let bad = |msg: String| Error::Format { path: "<bench csv>".into(), msg };
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(bad("unexpected header".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad count `{s}`")));
    let optn = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows.push(BenchRow {
            method: rec[0].to_string(),
            snr_target_db: optn(&rec[1])?,
            snr_achieved_db: num(&rec[2])?,
            r: num(&rec[3])?,
            n_designed: int(&rec[4])?,
            n_fail_solver: int(&rec[5])?,
            n_fail_extract: int(&rec[6])?,
            n_fail_unstable: int(&rec[7])?,
            mean_cost: optn(&rec[8])?,
            mean_alpha: optn(&rec[9])?,
            wall_time_s: num(&rec[10])?,
            seed: rec[11].parse().map_err(|_| bad(format!("bad seed `{}`", &rec[11])))?,
        });
    }
    Ok(BenchReport { rows })
}

/// Paper-style layout: one block per noise level with ᾱ, J̄ and n_f per method.
pub fn to_text(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>9} {:>9} {:>10} {:>12} {:>12} {:>4} {:>6} {:>6} {:>6}",
        "method", "target_dB", "meas_dB", "r", "alpha", "J", "n_f", "solver", "extr", "unst"
    );
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<14} {:>9} {:>9.2} {:>10.3e} {:>12} {:>12} {:>4} {:>6} {:>6} {:>6}",
            r.method,
            r.snr_target_db.map_or("-".to_string(), |t| format!("{t:.1}")),
            r.snr_achieved_db,
            r.r,
            cell(r.mean_alpha),
            cell(r.mean_cost),
            r.n_failures(),
            r.n_fail_solver,
            r.n_fail_extract,
            r.n_fail_unstable
        );
    }
    out
}

/// Writes `bench.csv` or `bench.txt` under `dir`; returns the path written.
pub fn emit_tables(report: &BenchReport, format: TableFormat, dir: &Path) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let (name, text) = match format {
        TableFormat::Csv => ("bench.csv", to_csv(report)),
        TableFormat::Text => ("bench.txt", to_text(report)),
    };
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}
