//! `ddlqr` command line: collect data, identify, synthesize, certify,
//! simulate, bound the suboptimality gap and run benchmarks.
//!
//! Exit codes: 0 success, 1 user error, 2 solver or method failure,
//! 3 internal error. Each run ends with one `key=value` summary line on stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use ddlqr::bench::{emit_tables, run_benchmark, BenchConfig, TableFormat};
use ddlqr::data::{collect, estimate_noise_cov, least_squares_id, snr_measured, SnrMode};
use ddlqr::gap::{cost_gap_bound, gap_bound, GapInputs};
use ddlqr::io::{self, SolutionMeta};
use ddlqr::linalg::norm2;
use ddlqr::mss::{empirical_mss, mss_certificate, mss_certificate_alpha, true_spectral_radius};
use ddlqr::oracle::{gamma_lower_bound_model, solve_discounted_dare, DARE_MAX_ITER, DARE_TOL};
use ddlqr::rng::{child_seed, stream};
use ddlqr::synth::{bellman_certificate, gamma_floor_data, synthesize, Method, SynthInput, SynthOptions};
use ddlqr::sys::{discretize, empirical_cost, quarter_car_with, simulate, CostSpec, Discretization, InitialCondition, QuarterCarParams};
use ddlqr::Error;
use ddlqr_sdp::SolverSettings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_METHOD: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ddlqr", version, about = "Data-driven discounted LQR synthesis and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the ZOH-discretized quarter-car plant as a system bundle.
    QuarterCar(QuarterCarArgs),
    /// Record one input/state trajectory from a system bundle.
    Collect(CollectArgs),
    /// Least-squares identification; writes (Â, B̂, Ŵ) as a system bundle.
    Identify(IdentifyArgs),
    /// Synthesize a gain with one of the LMI methods.
    Synth(SynthArgs),
    /// Evaluate stability certificates and discount floors of a stored solution.
    Certify(CertifyArgs),
    /// Closed-loop Monte Carlo rollouts of a gain.
    Simulate(SimulateArgs),
    /// Suboptimality-gap bound of a stored robust solution.
    Gap(GapArgs),
    /// Run the Monte Carlo benchmark described by a TOML config.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct QuarterCarArgs {
    /// Road-displacement noise variance r.
    #[arg(long, conflicts_with = "snr_db")]
    pub r: Option<f64>,
    /// Nominal SNR in dB, mapped to r = 10^(-SNR/10).
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Sampling period in seconds.
    #[arg(long, default_value_t = 0.01)]
    pub ts: f64,
    /// Discretization method.
    #[arg(long, default_value = "zoh")]
    pub discretization: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    /// System bundle directory.
    #[arg(long)]
    pub system: PathBuf,
    /// Number of samples N.
    #[arg(long)]
    pub n: usize,
    /// Random seed.
    #[arg(long)]
    pub seed: u64,
    /// Excitation scale a in u = a·υ, υ ~ N(0, I).
    #[arg(long, default_value_t = 1.0)]
    pub input_scale: f64,
    /// Mean of the initial state, comma separated (default: zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Diagonal of the initial-state covariance, comma separated (default: zero).
    #[arg(long, value_delimiter = ',')]
    pub x0_cov: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Data bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Model,
    Ce,
    DirectCe,
    DirectCeReg,
    Robust,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Model => Method::Model,
            MethodArg::Ce => Method::IndirectCe,
            MethodArg::DirectCe => Method::DirectCe,
            MethodArg::DirectCeReg => Method::DirectCeReg,
            MethodArg::Robust => Method::RobustDirect,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Primal/dual feasibility tolerance.
    #[arg(long, default_value_t = SolverSettings::default().tol_feas)]
    pub tol_feas: f64,
    /// Relative duality-gap tolerance.
    #[arg(long, default_value_t = SolverSettings::default().tol_gap)]
    pub tol_gap: f64,
    /// Interior-point iteration limit.
    #[arg(long, default_value_t = SolverSettings::default().max_iter)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings { tol_feas: self.tol_feas, tol_gap: self.tol_gap, max_iter: self.max_iter }
    }
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// State weight Q (CSV).
    #[arg(long)]
    pub q: PathBuf,
    /// Input weight R (CSV).
    #[arg(long)]
    pub r: PathBuf,
    /// Discount factor in (0, 1).
    #[arg(long)]
    pub gamma: f64,
}

impl SpecArgs {
    fn load(&self) -> ddlqr::Result<CostSpec> {
        CostSpec::new(io::read_matrix(&self.q)?, io::read_matrix(&self.r)?, self.gamma)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthesis method.
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Data bundle directory (data-driven methods).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// System bundle; required by `model`, supplies the true W otherwise.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Noise covariance (CSV); overrides the system's W.
    #[arg(long)]
    pub w: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Weight of the row-space regularizer (direct-ce-reg).
    #[arg(long, default_value_t = 0.0)]
    pub reg_weight: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Solution bundle directory.
    #[arg(long)]
    pub solution: PathBuf,
    /// Data bundle directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// System bundle for ground-truth checks.
    #[arg(long)]
    pub system: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// System bundle directory.
    #[arg(long)]
    pub system: PathBuf,
    /// Gain K (CSV).
    #[arg(long)]
    pub gain: PathBuf,
    /// Steps per rollout.
    #[arg(long)]
    pub steps: usize,
    /// Number of rollouts.
    #[arg(long)]
    pub trials: usize,
    /// Random seed.
    #[arg(long)]
    pub seed: u64,
    /// Initial state, comma separated (default: zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// State weight for the reported cost (default: identity).
    #[arg(long)]
    pub q: Option<PathBuf>,
    /// Input weight for the reported cost (default: identity).
    #[arg(long)]
    pub r: Option<PathBuf>,
    /// Output CSV file (one row per rollout).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SnrModeArg {
    Oracle,
    Estimated,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    /// System bundle (true plant).
    #[arg(long)]
    pub system: PathBuf,
    /// Data bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Solution bundle of a direct method.
    #[arg(long)]
    pub solution: PathBuf,
    /// Decay rate ρ (default: midpoint between ρ(√γL) and 1).
    #[arg(long)]
    pub rho: Option<f64>,
    /// SNR source: recorded noise or least-squares residual.
    #[arg(long, value_enum, default_value = "oracle")]
    pub snr_mode: SnrModeArg,
    /// Output CSV file (key,value).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn classify(e: Error) -> Failure {
    let code = match &e {
        Error::InvalidInput(_)
        | Error::RankDeficient { .. }
        | Error::InvalidParameterization(_)
        | Error::Calibration(_)
        | Error::Format { .. }
        | Error::Io(_) => EXIT_USER,
        Error::Solver(_) | Error::DareNoConvergence { .. } | Error::Conditioning(_) => EXIT_METHOD,
        Error::Sdp(_) => EXIT_INTERNAL,
    };
    Failure { code, message: e.to_string() }
}

fn user(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USER, message: msg.into() }
}

type CliResult = Result<String, Failure>;

/// Parses `args` (including the program name) and runs the command. Returns
/// the exit code; human output and the summary line go to stdout, errors to
/// stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            println!("status=error exit={}", f.code);
            f.code
        }
    }
}

pub fn execute(cmd: &Command) -> CliResult {
    match cmd {
        Command::QuarterCar(a) => cmd_quarter_car(a),
        Command::Collect(a) => cmd_collect(a),
        Command::Identify(a) => cmd_identify(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gap(a) => cmd_gap(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn kv(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn opt_f(v: Option<f64>) -> String {
    v.map_or("none".to_string(), |x| format!("{x:e}"))
}

fn cmd_quarter_car(a: &QuarterCarArgs) -> CliResult {
    let r = match (a.r, a.snr_db) {
        (Some(r), None) => r,
        (None, Some(db)) => 10f64.powf(-db / 10.0),
        _ => return Err(user("give exactly one of --r and --snr-db")),
    };
    let method: Discretization = a.discretization.parse().map_err(classify)?;
    let sys = discretize(&quarter_car_with(&QuarterCarParams::default(), r).map_err(classify)?, a.ts, method).map_err(classify)?;
    let hash = io::save_system(&a.out, &sys, Some(a.ts), &format!("quarter_car r={r:e} {}", a.discretization)).map_err(classify)?;
    log::info!("quarter-car r={r:e} ts={} -> {} (sha256 {hash})", a.ts, a.out.display());
    Ok(kv(&[("status", "ok".into()), ("r", format!("{r:e}")), ("system_hash", hash)]))
}

fn initial_state(mean: &Option<Vec<f64>>, cov: &Option<Vec<f64>>, n: usize) -> Result<InitialCondition, Failure> {
    let mean = DVector::from_vec(mean.clone().unwrap_or_else(|| vec![0.0; n]));
    let cov = DMatrix::from_diagonal(&DVector::from_vec(cov.clone().unwrap_or_else(|| vec![0.0; n])));
    if mean.len() != n || cov.nrows() != n {
        return Err(user(format!("--x0/--x0-cov need {n} entries")));
    }
    InitialCondition::new(mean, cov).map_err(classify)
}

fn cmd_collect(a: &CollectArgs) -> CliResult {
    let (sys, _) = io::load_system(&a.system).map_err(classify)?;
    let sys_hash = io::system_hash(&a.system).map_err(classify)?;
    let x0 = initial_state(&a.x0, &a.x0_cov, sys.n())?;
    let start = x0.sampler().sample(&mut stream(child_seed(a.seed, &[1])));
    let mut ds = collect(&sys, a.n, &start, a.input_scale, child_seed(a.seed, &[0])).map_err(classify)?;
    ds.seed = a.seed;
    let hash = io::save_data(&a.out, &ds, Some(sys_hash.clone())).map_err(classify)?;
    let snr = snr_measured(&ds).map_err(classify)?;
    log::info!("collect N={} seed={} input_scale={} system={sys_hash} -> {} (sha256 {hash})", a.n, a.seed, a.input_scale, a.out.display());
    println!("collected {} samples; data SNR {:.2} dB", a.n, snr.db);
    Ok(kv(&[
        ("status", "ok".into()),
        ("n", a.n.to_string()),
        ("seed", a.seed.to_string()),
        ("snr_db", format!("{:.6}", snr.db)),
        ("data_hash", hash),
    ]))
}

fn cmd_identify(a: &IdentifyArgs) -> CliResult {
    let (ds, _) = io::load_data(&a.data).map_err(classify)?;
    let data_hash = io::data_hash(&a.data).map_err(classify)?;
    let model = least_squares_id(&ds).map_err(classify)?;
    let w_hat = estimate_noise_cov(&ds, &model);
    let sys = ddlqr::sys::DiscreteLinearSystem::new(model.a_hat.clone(), model.b_hat.clone(), w_hat).map_err(classify)?;
    let hash = io::save_system(&a.out, &sys, None, &format!("least squares from data {data_hash}")).map_err(classify)?;
    io::write_matrix(&a.out.join("residual.csv"), &model.residual).map_err(classify)?;
    log::info!("identify data={data_hash} -> {} (sha256 {hash})", a.out.display());
    Ok(kv(&[
        ("status", "ok".into()),
        ("residual_norm", format!("{:e}", norm2(&model.residual))),
        ("system_hash", hash),
    ]))
}

fn cmd_synth(a: &SynthArgs) -> CliResult {
    let method: Method = a.method.into();
    let spec = a.spec.load().map_err(classify)?;
    let system = match &a.system {
        Some(dir) => Some(io::load_system(dir).map_err(classify)?.0),
        None => None,
    };
    if method.needs_plant() && system.is_none() {
        return Err(user("--system is required for --method model"));
    }
    let data = match &a.data {
        Some(dir) => Some(io::load_data(dir).map_err(classify)?.0),
        None if !method.needs_plant() => return Err(user(format!("--data is required for --method {method}"))),
        None => None,
    };
    let data_hash = match &a.data {
        Some(dir) => Some(io::data_hash(dir).map_err(classify)?),
        None => None,
    };
    let w = match (&a.w, &system) {
        (Some(path), _) => Some(io::read_matrix(path).map_err(classify)?),
        (None, Some(sys)) => Some(sys.w.clone()),
        (None, None) => None,
    };
    let opts = SynthOptions { settings: a.solver.settings(), ..SynthOptions::default() };
    let input = SynthInput {
        data: data.as_ref(),
        plant: system.as_ref().map(|s| (&s.a, &s.b)),
        w: w.as_ref(),
        reg_weight: a.reg_weight,
    };
    log::info!("synth method={method} gamma={} data={:?} settings={:?}", spec.gamma, data_hash, opts.settings);
    let res = synthesize(method, input, &spec, &opts).map_err(classify)?;
    let meta = SolutionMeta::from_result(&res, &spec, &opts, data_hash);
    io::save_solution(&a.out, &res, &spec, &meta).map_err(classify)?;
    let mut pairs = vec![
        ("status", if res.succeeded() { "ok".to_string() } else { "failed".to_string() }),
        ("method", method.to_string()),
        ("solver_status", res.status.to_string()),
        ("failure", res.failure.map_or("none".into(), |f| f.as_str().to_string())),
        ("alpha", opt_f(res.alpha)),
        ("solve_time_s", format!("{:.4}", res.diagnostics.solve_time)),
    ];
    if let Some(k) = &res.k {
        println!("K = {}", fmt_row(k));
        if let Some(sys) = &system {
            pairs.push(("true_rho", format!("{:.9}", true_spectral_radius(&sys.a, &sys.b, k))));
        }
    }
    let line = kv(&pairs);
    if res.succeeded() {
        Ok(line)
    } else {
        eprintln!("synthesis failed: {:?} ({:?})", res.failure, res.status);
        Err(Failure { code: EXIT_METHOD, message: line })
    }
}

fn fmt_row(m: &DMatrix<f64>) -> String {
    let mut s = String::from("[");
    for i in 0..m.nrows() {
        if i > 0 {
            s.push_str("; ");
        }
        for j in 0..m.ncols() {
            if j > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "{:.8e}", m[(i, j)]);
        }
    }
    s.push(']');
    s
}

fn cmd_certify(a: &CertifyArgs) -> CliResult {
    let sol = io::load_solution(&a.solution).map_err(classify)?;
    let spec = sol.cost_spec().map_err(classify)?;
    let pn = norm2(&sol.p);
    let mut pairs = vec![("status", "ok".to_string()), ("method", sol.meta.method.clone())];
    if let Some(dir) = &a.data {
        let (ds, _) = io::load_data(dir).map_err(classify)?;
        let g = sol.g().unwrap_or_else(|| ddlqr::linalg::pinv(&ds.x0));
        let c = mss_certificate(&g, &sol.p, &ds.x1, &ds.u0, &sol.w, &spec);
        println!("data certificate (Tr(PW) weight): lambda_min/|P| = {:.3e} -> {}", c.residual_min_eig / pn, if c.passes { "pass" } else { "fail" });
        pairs.push(("cert_trpw_pass", c.passes.to_string()));
        pairs.push(("cert_trpw_min_eig", format!("{:e}", c.residual_min_eig / pn)));
        if let Some(alpha) = sol.meta.alpha {
            let ca = mss_certificate_alpha(&g, &sol.p, &ds.x1, &ds.u0, alpha, &spec);
            println!("data certificate (1/alpha weight): lambda_min/|P| = {:.3e} -> {}", ca.residual_min_eig / pn, if ca.passes { "pass" } else { "fail" });
            pairs.push(("cert_alpha_pass", ca.passes.to_string()));
        }
        let floor = gamma_floor_data(&g, &sol.p, &ds.x1, &ds.u0, &sol.w, &spec);
        pairs.push(("gamma_floor_data", format!("{floor:e}")));
    }
    if let Some(dir) = &a.system {
        let (sys, _) = io::load_system(dir).map_err(classify)?;
        let rho = true_spectral_radius(&sys.a, &sys.b, &sol.k);
        let b = bellman_certificate(&sol.k, &sol.p, &sys.a, &sys.b, &spec);
        let floor = gamma_lower_bound_model(&sys.a, &sys.b, &sol.k, &sol.p, &spec.q, &spec.r);
        println!("true closed loop: rho = {rho:.9}; Bellman certificate -> {}", if b.passes { "pass" } else { "fail" });
        pairs.push(("true_rho", format!("{rho:.9}")));
        pairs.push(("bellman_pass", b.passes.to_string()));
        pairs.push(("gamma_floor_model", format!("{floor:e}")));
    }
    if a.data.is_none() && a.system.is_none() {
        return Err(user("give --data and/or --system"));
    }
    Ok(kv(&pairs))
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult {
    let (sys, _) = io::load_system(&a.system).map_err(classify)?;
    let k = io::read_matrix(&a.gain).map_err(classify)?;
    if a.trials == 0 || a.steps == 0 {
        return Err(user("--trials and --steps must be positive"));
    }
    let q = match &a.q {
        Some(p) => io::read_matrix(p).map_err(classify)?,
        None => DMatrix::identity(sys.n(), sys.n()),
    };
    let r = match &a.r {
        Some(p) => io::read_matrix(p).map_err(classify)?,
        None => DMatrix::identity(sys.m(), sys.m()),
    };
    // rollout costs are undiscounted; gamma is unused here
    let spec = CostSpec::new(q, r, 0.5).map_err(classify)?;
    let x0 = initial_state(&a.x0, &None, sys.n())?.mean;
    let mut out = String::from("trial,seed,diverged,cost,final_norm\n");
    let mut total = 0.0;
    let mut diverged = 0usize;
    for t in 0..a.trials as u64 {
        let seed = child_seed(a.seed, &[t]);
        let traj = simulate(&sys, &k, &x0, a.steps, seed).map_err(classify)?;
        let cost = empirical_cost(&traj, &spec, &k, false);
        diverged += traj.diverged as usize;
        total += cost;
        let last = traj.states.last().map_or(0.0, |x| x.norm());
        let _ = writeln!(out, "{t},{seed},{},{cost:?},{last:?}", traj.diverged);
    }
    fs::write(&a.out, out).map_err(|e| classify(e.into()))?;
    let mean = total / a.trials as f64;
    let rho = true_spectral_radius(&sys.a, &sys.b, &k);
    let mut pairs = vec![
        ("status", "ok".to_string()),
        ("trials", a.trials.to_string()),
        ("mean_cost", format!("{mean:e}")),
        ("diverged", diverged.to_string()),
        ("rho", format!("{rho:.9}")),
    ];
    if a.trials >= 30 && a.steps >= 10 {
        let est = empirical_mss(&sys, &k, a.trials, a.steps, child_seed(a.seed, &[u64::MAX])).map_err(classify)?;
        pairs.push(("mss_converged", est.converged.to_string()));
    }
    Ok(kv(&pairs))
}

fn cmd_gap(a: &GapArgs) -> CliResult {
    let (sys, _) = io::load_system(&a.system).map_err(classify)?;
    let (mut ds, _) = io::load_data(&a.data).map_err(classify)?;
    let sol = io::load_solution(&a.solution).map_err(classify)?;
    let spec = sol.cost_spec().map_err(classify)?;
    let g = sol.g().ok_or_else(|| user("the gap bound needs a direct-method solution (F.csv)"))?;
    if let SnrModeArg::Estimated = a.snr_mode {
        ds.omega0 = None;
    } else if ds.omega0.is_none() {
        return Err(user("oracle SNR needs Omega0.csv in the data bundle; use --snr-mode estimated"));
    }
    let snr = snr_measured(&ds).map_err(classify)?;
    debug_assert!(matches!(snr.mode, SnrMode::Oracle | SnrMode::Estimated));
    let oracle = solve_discounted_dare(&sys, &spec, DARE_TOL, DARE_MAX_ITER as usize).map_err(classify)?;
    let d0 = ds.d0();
    let bundle = gap_bound(&GapInputs {
        u0: &ds.u0,
        x0: &ds.x0,
        d0: &d0,
        g: &g,
        a: &sys.a,
        b: &sys.b,
        k_star: &oracle.k_star,
        p_star: &oracle.p_star,
        w: &sys.w,
        r: &spec.r,
        gamma: spec.gamma,
        snr,
        rho: a.rho,
    })
    .map_err(classify)?;
    let dp = norm2(&(&sol.p - &oracle.p_star));
    let x0 = ds.x0.column(0).into_owned();
    let mut text = String::from("key,value\n");
    for (k, v) in bundle.record() {
        let _ = writeln!(text, "{k},{v:?}");
    }
    let _ = writeln!(text, "delta_p_measured,{dp:?}");
    if bundle.valid && spec.gamma < 1.0 {
        let _ = writeln!(text, "cost_gap_bound,{:?}", cost_gap_bound(&x0, bundle.delta, &sys.w, spec.gamma));
    }
    fs::write(&a.out, text).map_err(|e| classify(e.into()))?;
    Ok(kv(&[
        ("status", "ok".into()),
        ("valid", bundle.valid.to_string()),
        ("d", format!("{:e}", bundle.d)),
        ("delta", format!("{:e}", bundle.delta)),
        ("delta_p", format!("{dp:e}")),
        ("snr_db", format!("{:.3}", snr.db)),
    ]))
}

fn cmd_bench(a: &BenchArgs) -> CliResult {
    let cfg = BenchConfig::load(&a.config).map_err(classify)?;
    let cfg_hash = io::hash_file(&a.config).map_err(classify)?;
    log::info!("bench config {} (sha256 {cfg_hash}) seed={} workers={}", a.config.display(), cfg.seed, a.workers);
    log::info!("resolved config:\n{}", cfg.to_toml());
    let report = run_benchmark(&cfg, a.workers).map_err(classify)?;
    let csv = emit_tables(&report, TableFormat::Csv, &a.out).map_err(classify)?;
    let txt = emit_tables(&report, TableFormat::Text, &a.out).map_err(classify)?;
    fs::write(a.out.join("config.toml"), cfg.to_toml()).map_err(|e| classify(e.into()))?;
    print!("{}", fs::read_to_string(&txt).map_err(|e| classify(e.into()))?);
    let csv_hash = io::hash_file(&csv).map_err(classify)?;
    log::info!("wrote {} (sha256 {csv_hash})", csv.display());
    Ok(kv(&[
        ("status", "ok".into()),
        ("rows", report.rows.len().to_string()),
        ("seed", cfg.seed.to_string()),
        ("config_hash", cfg_hash),
        ("csv", csv.display().to_string()),
    ]))
}

/// Long flag names registered for each subcommand, for help-text checks.
pub fn flag_registry() -> Vec<(String, Vec<String>)> {
    use clap::CommandFactory;
    Cli::command()
        .get_subcommands()
        .map(|sc| {
            let flags = sc.get_arguments().filter_map(|a| a.get_long().map(|l| format!("--{l}"))).collect();
            (sc.get_name().to_string(), flags)
        })
        .collect()
}

/// Help text of one subcommand.
pub fn subcommand_help(name: &str) -> Option<String> {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    let sc = cmd.find_subcommand_mut(name)?;
    Some(sc.render_long_help().to_string())
}
