//! LMI syntheses of discounted LQR gains.
//!
//! Every program is posed in weight-balanced coordinates `x̃ = Sx`, `ũ = Tu`
//! with `Q = SᵀS` and `R = TᵀT`, so the weights become identities. This is a
//! congruence of each LMI: objectives, feasibility and `α` are unchanged, the
//! margin `Y ⪰ εI` maps to `Ỹ ⪰ εSSᵀ`, and results are mapped back exactly.
//! Without it the programs at large `Q/R` ratios are badly scaled.

use std::sync::Arc;

use nalgebra::DMatrix;

use ddlqr_sdp::{AffineExpr, BlockLmi, ConicSolver, IpmSolver, ProgramBuilder, Sense, SolveStatus, SolverSettings, VarId};

use crate::data::{estimate_noise_cov, least_squares_id, rank_check, DataSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cond, min_eig, norm2, pinv, spd_inverse, symmetrize, upper_factor};
use crate::mss::{mss_certificate, mss_certificate_alpha};
use crate::oracle::gamma_lower_bound_model;
use crate::sys::CostSpec;

/// Strictness margin for `Y ≻ 0` and `α > 0`.
pub const EPS: f64 = 1e-9;
/// Largest condition number of `Y` accepted at gain extraction.
pub const MAX_COND_Y: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Model,
    IndirectCe,
    DirectCe,
    DirectCeReg,
    RobustDirect,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Model, Method::IndirectCe, Method::DirectCe, Method::DirectCeReg, Method::RobustDirect];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Model => "model",
            Method::IndirectCe => "indirect_ce",
            Method::DirectCe => "direct_ce",
            Method::DirectCeReg => "direct_ce_reg",
            Method::RobustDirect => "robust_direct",
        }
    }

    pub fn needs_plant(&self) -> bool {
        *self == Method::Model
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "model" => Method::Model,
            "ce" | "indirect_ce" | "indirect-ce" => Method::IndirectCe,
            "direct-ce" | "direct_ce" => Method::DirectCe,
            "direct-ce-reg" | "direct_ce_reg" => Method::DirectCeReg,
            "robust" | "robust_direct" | "robust-direct" => Method::RobustDirect,
            _ => return Err(invalid(format!("unknown method `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    SolverInfeasible,
    SolverNumerical,
    ExtractionConditioning,
}

impl FailureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureKind::SolverInfeasible => "solver_infeasible",
            FailureKind::SolverNumerical => "solver_numerical",
            FailureKind::ExtractionConditioning => "extraction_conditioning",
        }
    }
}

/// Where the noise covariance used by a data-driven method came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WSource {
    Supplied,
    Estimated,
}

#[derive(Clone)]
pub struct SynthOptions {
    pub settings: SolverSettings,
    pub eps: f64,
    pub max_cond: f64,
    pub solver: Arc<dyn ConicSolver>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { settings: SolverSettings::default(), eps: EPS, max_cond: MAX_COND_Y, solver: Arc::new(IpmSolver) }
    }
}

impl std::fmt::Debug for SynthOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SynthOptions")
            .field("settings", &self.settings)
            .field("eps", &self.eps)
            .field("max_cond", &self.max_cond)
            .field("solver", &self.solver.id())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// λ_min of the method's own Bellman inequality divided by ‖P‖₂.
    pub bellman_residual: Option<f64>,
    /// Discount floor (model form for model/CE methods, data form otherwise).
    pub gamma_floor: Option<f64>,
    pub solve_time: f64,
    pub iterations: usize,
    pub objective: f64,
    pub cond_y: Option<f64>,
    /// Robust method: λ_min/‖P‖₂ of the Tr(PW)-weighted data certificate.
    pub certificate_trpw: Option<f64>,
    /// Robust method: λ_min/‖P‖₂ of the α-weighted data certificate.
    pub certificate_alpha: Option<f64>,
    /// Robust method: the Tr(PW)-weighted certificate missed its tolerance.
    pub degraded: bool,
    pub w_source: Option<WSource>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub method: Method,
    pub status: SolveStatus,
    pub failure: Option<FailureKind>,
    pub k: Option<DMatrix<f64>>,
    pub p: Option<DMatrix<f64>>,
    pub y: Option<DMatrix<f64>>,
    pub m: Option<DMatrix<f64>>,
    pub f: Option<DMatrix<f64>>,
    pub alpha: Option<f64>,
    /// Noise covariance the program was built with.
    pub w: DMatrix<f64>,
    pub diagnostics: Diagnostics,
}

impl SynthesisResult {
    fn failed(method: Method, status: SolveStatus, failure: FailureKind, w: DMatrix<f64>, diagnostics: Diagnostics) -> Self {
        Self { method, status, failure: Some(failure), k: None, p: None, y: None, m: None, f: None, alpha: None, w, diagnostics }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && self.k.is_some()
    }

    /// `G = F Y⁻¹` for the direct methods.
    pub fn g(&self) -> Option<DMatrix<f64>> {
        Some(self.f.as_ref()? * self.p.as_ref()?)
    }
}

/// Coordinates in which `Q` and `R` become identities.
struct Balance {
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
    t: DMatrix<f64>,
    t_inv: DMatrix<f64>,
}

impl Balance {
    fn new(spec: &CostSpec) -> Result<Self> {
        let s = upper_factor(&spec.q)?;
        let t = upper_factor(&spec.r)?;
        let s_inv = s.clone().try_inverse().ok_or_else(|| invalid("Q factor is singular"))?;
        let t_inv = t.clone().try_inverse().ok_or_else(|| invalid("R factor is singular"))?;
        Ok(Self { s, s_inv, t, t_inv })
    }

    /// `W̃⁻¹ = S⁻ᵀW⁻¹S⁻¹`.
    fn w_inv(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let wi = spd_inverse(w).map_err(|_| invalid("noise covariance W must be positive definite"))?;
        Ok(symmetrize(&(self.s_inv.transpose() * wi * &self.s_inv)))
    }

    fn y_back(&self, yt: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.s_inv * yt * self.s_inv.transpose()))
    }

    /// Margin matrix `εSSᵀ`.
    fn margin(&self, eps: f64) -> DMatrix<f64> {
        &self.s * self.s.transpose() * eps
    }
}

fn classify(status: SolveStatus) -> FailureKind {
    match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => FailureKind::SolverInfeasible,
        _ => FailureKind::SolverNumerical,
    }
}

/// Adds the four-block discounted Bellman LMI `[[−Y, Y, Kᵀ-part, closed-loop-part], …] ⪯ 0`
/// (with identity weights) plus an optional fifth robustness block.
fn bellman_lmi(
    pb: &mut ProgramBuilder,
    y: VarId,
    input_part: AffineExpr,
    state_part: AffineExpr,
    robust: Option<(AffineExpr, VarId, usize)>,
    gamma: f64,
) -> Result<()> {
    let n = input_part.ncols();
    let m = input_part.nrows();
    let mut sizes = vec![n, n, m, n];
    if let Some((_, _, len)) = &robust {
        sizes.push(*len);
    }
    let mut lmi = BlockLmi::new(&sizes);
    lmi.set(0, 0, -AffineExpr::var(y));
    lmi.set(0, 1, AffineExpr::var(y));
    lmi.set(2, 0, input_part);
    lmi.set(3, 0, state_part);
    lmi.set(1, 1, AffineExpr::constant(-DMatrix::identity(n, n)));
    lmi.set(2, 2, AffineExpr::constant(-DMatrix::identity(m, m)));
    lmi.set(3, 3, AffineExpr::var(y) * (-1.0 / gamma));
    if let Some((f_part, alpha, len)) = robust {
        lmi.set(4, 0, f_part);
        lmi.set(4, 4, AffineExpr::scaled(alpha, &(-DMatrix::identity(len, len) / gamma)));
    }
    pb.block_lmi(&lmi, Sense::Nsd)?;
    Ok(())
}

fn check_w(w: &DMatrix<f64>, n: usize) -> Result<()> {
    if w.shape() != (n, n) {
        return Err(invalid("noise covariance has the wrong shape"));
    }
    Ok(())
}

/// Model-based design: maximize `Tr(W⁻¹Y)` subject to the Bellman LMI; `K = MY⁻¹`.
pub fn synth_model_based(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    spec: &CostSpec,
    w: &DMatrix<f64>,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    synth_model_inner(Method::Model, a, b, spec, w, None, opts)
}

fn synth_model_inner(
    method: Method,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    spec: &CostSpec,
    w: &DMatrix<f64>,
    w_source: Option<WSource>,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    let (n, m) = (a.nrows(), b.ncols());
    if a.shape() != (n, n) || b.nrows() != n || spec.q.nrows() != n || spec.r.nrows() != m {
        return Err(invalid("plant and weights have inconsistent shapes"));
    }
    check_w(w, n)?;
    let bal = Balance::new(spec)?;
    let w_inv = bal.w_inv(w)?;
    let at = &bal.s * a * &bal.s_inv;
    let bt = &bal.s * b * &bal.t_inv;

    let mut pb = ProgramBuilder::new();
    pb.set_margin(opts.eps);
    let y = pb.symmetric("Y", n);
    let mm = pb.rect("M", m, n);
    pb.maximize(AffineExpr::trace(&w_inv, y));
    let state = AffineExpr::product(&at, y, &DMatrix::identity(n, n)) + AffineExpr::product(&bt, mm, &DMatrix::identity(n, n));
    bellman_lmi(&mut pb, y, AffineExpr::var(mm), state, None, spec.gamma)?;
    pb.lmi(&(AffineExpr::var(y) - bal.margin(opts.eps)), Sense::Psd)?;
    let prog = pb.build();
    let sol = opts.solver.solve(&prog, &opts.settings);
    let mut diag = Diagnostics {
        solve_time: sol.solve_time.as_secs_f64(),
        iterations: sol.iterations,
        objective: sol.objective,
        w_source,
        ..Default::default()
    };
    if !sol.is_optimal() {
        return Ok(SynthesisResult::failed(method, sol.status, classify(sol.status), w.clone(), diag));
    }
    let y_val = bal.y_back(&sol.value(y));
    let m_val = &bal.t_inv * sol.value(mm) * bal.s_inv.transpose();
    let (k, p, cy) = match extract(&m_val, &y_val, opts.max_cond) {
        Ok(v) => v,
        Err(cy) => {
            diag.cond_y = Some(cy);
            return Ok(SynthesisResult::failed(method, sol.status, FailureKind::ExtractionConditioning, w.clone(), diag));
        }
    };
    diag.cond_y = Some(cy);
    let cert = bellman_certificate(&k, &p, a, b, spec);
    diag.bellman_residual = Some(cert.min_eig / norm2(&p));
    diag.gamma_floor = Some(gamma_lower_bound_model(a, b, &k, &p, &spec.q, &spec.r));
    Ok(SynthesisResult {
        method,
        status: sol.status,
        failure: None,
        k: Some(k),
        p: Some(p),
        y: Some(y_val),
        m: Some(m_val),
        f: None,
        alpha: None,
        w: w.clone(),
        diagnostics: diag,
    })
}

/// `K = N Y⁻¹` and `P = Y⁻¹`, or the condition number of `Y` when it is too
/// close to singular.
fn extract(num: &DMatrix<f64>, y: &DMatrix<f64>, max_cond: f64) -> std::result::Result<(DMatrix<f64>, DMatrix<f64>, f64), f64> {
    let cy = cond(y);
    if !(cy <= max_cond) {
        return Err(cy);
    }
    let ch = symmetrize(y).cholesky().ok_or(cy)?;
    let k = ch.solve(&num.transpose()).transpose();
    let p = symmetrize(&ch.inverse());
    Ok((k, p, cy))
}

fn resolve_w(ds: &DataSet, w: Option<&DMatrix<f64>>) -> Result<(DMatrix<f64>, WSource)> {
    match w {
        Some(w) => {
            check_w(w, ds.n())?;
            Ok((w.clone(), WSource::Supplied))
        }
        None => {
            let model = least_squares_id(ds)?;
            Ok((estimate_noise_cov(ds, &model), WSource::Estimated))
        }
    }
}

fn require_rich(ds: &DataSet) -> Result<()> {
    let rep = rank_check(ds);
    if !rep.rich {
        return Err(Error::RankDeficient { rank: rep.rank, needed: rep.needed });
    }
    Ok(())
}

/// Certainty equivalence through identification: least squares, then the
/// model-based program on `(Â, B̂)`. `w = None` uses the residual covariance.
pub fn synth_indirect_ce(ds: &DataSet, spec: &CostSpec, w: Option<&DMatrix<f64>>, opts: &SynthOptions) -> Result<SynthesisResult> {
    let model = least_squares_id(ds)?;
    let (w, src) = resolve_w(ds, w)?;
    synth_model_inner(Method::IndirectCe, &model.a_hat, &model.b_hat, spec, &w, Some(src), opts)
}

struct DirectSetup {
    bal: Balance,
    u0t: DMatrix<f64>,
    x0t: DMatrix<f64>,
    x1t: DMatrix<f64>,
    w_inv: DMatrix<f64>,
}

fn direct_setup(ds: &DataSet, spec: &CostSpec, w: &DMatrix<f64>) -> Result<DirectSetup> {
    if spec.q.nrows() != ds.n() || spec.r.nrows() != ds.m() {
        return Err(invalid("weights do not match the data dimensions"));
    }
    let bal = Balance::new(spec)?;
    let w_inv = bal.w_inv(w)?;
    Ok(DirectSetup {
        u0t: &bal.t * &ds.u0,
        x0t: &bal.s * &ds.x0,
        x1t: &bal.s * &ds.x1,
        w_inv,
        bal,
    })
}

/// Direct certainty equivalence over `F` with `X₀F = Y`; `K = U₀FY⁻¹`.
///
/// `reg_weight > 0` subtracts `reg_weight·‖(I − D₀†D₀)F‖_F` from the
/// objective, pulling `F` toward the row space of the data.
pub fn synth_direct_ce(
    ds: &DataSet,
    spec: &CostSpec,
    w: Option<&DMatrix<f64>>,
    reg_weight: f64,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    if !(reg_weight >= 0.0 && reg_weight.is_finite()) {
        return Err(invalid(format!("regularization weight {reg_weight} must be finite and nonnegative")));
    }
    require_rich(ds)?;
    let method = if reg_weight > 0.0 { Method::DirectCeReg } else { Method::DirectCe };
    let (w, src) = resolve_w(ds, w)?;
    let st = direct_setup(ds, spec, &w)?;
    let (n, len) = (ds.n(), ds.len());
    let id_n = DMatrix::identity(n, n);

    let mut pb = ProgramBuilder::new();
    pb.set_margin(opts.eps);
    let y = pb.symmetric("Y", n);
    let f = pb.rect("F", len, n);
    let mut objective = AffineExpr::trace(&st.w_inv, y);
    if reg_weight > 0.0 {
        let t = pb.scalar("t");
        objective = objective - AffineExpr::scaled(t, &DMatrix::from_element(1, 1, reg_weight));
        // ‖vec((I − Π)F̃S⁻ᵀ)‖₂ ≤ t as [[tI, v], [vᵀ, t]] ⪰ 0.
        let d0 = ds.d0();
        let proj = DMatrix::identity(len, len) - pinv(&d0) * &d0;
        let right = st.bal.s_inv.transpose();
        let big = len * n;
        let mut v = AffineExpr::zeros(big, 1);
        for j in 0..n {
            let mut place = DMatrix::zeros(big, len);
            place.view_mut((j * len, 0), (len, len)).copy_from(&proj);
            v = v + AffineExpr::product(&place, f, &right.columns(j, 1).into_owned());
        }
        let mut arrow = BlockLmi::new(&[big, 1]);
        arrow.set(0, 0, AffineExpr::scaled(t, &DMatrix::identity(big, big)));
        arrow.set(1, 0, v.transpose());
        arrow.set(1, 1, AffineExpr::var(t));
        pb.block_lmi(&arrow, Sense::Psd)?;
    }
    pb.maximize(objective);
    let input = AffineExpr::product(&st.u0t, f, &id_n);
    let state = AffineExpr::product(&st.x1t, f, &id_n);
    bellman_lmi(&mut pb, y, input, state, None, spec.gamma)?;
    pb.equal_zero(&(AffineExpr::product(&st.x0t, f, &id_n) - AffineExpr::var(y)));
    pb.lmi(&(AffineExpr::var(y) - st.bal.margin(opts.eps)), Sense::Psd)?;
    let prog = pb.build();
    let sol = opts.solver.solve(&prog, &opts.settings);
    finish_direct(method, ds, spec, w, src, &st, &sol, y, f, None, opts)
}

/// Robust direct design: maximize `α` subject to the five-block LMI with
/// `−(α/γ)I_N`, `X₀F = Y` and `Tr(W⁻¹Y) ≥ αn²`; `K = U₀FY⁻¹`.
pub fn synth_robust_direct(ds: &DataSet, spec: &CostSpec, w: Option<&DMatrix<f64>>, opts: &SynthOptions) -> Result<SynthesisResult> {
    require_rich(ds)?;
    let (w, src) = resolve_w(ds, w)?;
    let st = direct_setup(ds, spec, &w)?;
    let (n, len) = (ds.n(), ds.len());
    let id_n = DMatrix::identity(n, n);

    let mut pb = ProgramBuilder::new();
    pb.set_margin(opts.eps);
    let y = pb.symmetric("Y", n);
    let f = pb.rect("F", len, n);
    let alpha = pb.scalar("alpha");
    pb.maximize(AffineExpr::var(alpha));
    let input = AffineExpr::product(&st.u0t, f, &id_n);
    let state = AffineExpr::product(&st.x1t, f, &id_n);
    bellman_lmi(&mut pb, y, input, state, Some((AffineExpr::var(f), alpha, len)), spec.gamma)?;
    pb.equal_zero(&(AffineExpr::product(&st.x0t, f, &id_n) - AffineExpr::var(y)));
    let n2 = DMatrix::from_element(1, 1, (n * n) as f64);
    pb.nonneg(&(AffineExpr::trace(&st.w_inv, y) - AffineExpr::scaled(alpha, &n2)));
    pb.nonneg(&(AffineExpr::var(alpha) - DMatrix::from_element(1, 1, opts.eps)));
    pb.lmi(&(AffineExpr::var(y) - st.bal.margin(opts.eps)), Sense::Psd)?;
    let prog = pb.build();
    let sol = opts.solver.solve(&prog, &opts.settings);
    finish_direct(Method::RobustDirect, ds, spec, w, src, &st, &sol, y, f, Some(alpha), opts)
}

#[allow(clippy::too_many_arguments)]
fn finish_direct(
    method: Method,
    ds: &DataSet,
    spec: &CostSpec,
    w: DMatrix<f64>,
    src: WSource,
    st: &DirectSetup,
    sol: &ddlqr_sdp::ConicSolution,
    y: VarId,
    f: VarId,
    alpha: Option<VarId>,
    opts: &SynthOptions,
) -> Result<SynthesisResult> {
    let mut diag = Diagnostics {
        solve_time: sol.solve_time.as_secs_f64(),
        iterations: sol.iterations,
        objective: sol.objective,
        w_source: Some(src),
        ..Default::default()
    };
    if !sol.is_optimal() {
        return Ok(SynthesisResult::failed(method, sol.status, classify(sol.status), w, diag));
    }
    let y_val = st.bal.y_back(&sol.value(y));
    let f_val = sol.value(f) * st.bal.s_inv.transpose();
    let u0f = &ds.u0 * &f_val;
    let (k, p, cy) = match extract(&u0f, &y_val, opts.max_cond) {
        Ok(v) => v,
        Err(cy) => {
            diag.cond_y = Some(cy);
            return Ok(SynthesisResult::failed(method, sol.status, FailureKind::ExtractionConditioning, w, diag));
        }
    };
    diag.cond_y = Some(cy);
    let g = &f_val * &p;
    let pn = norm2(&p);
    let nominal = data_bellman(&g, &p, &ds.x1, &ds.u0, spec);
    diag.bellman_residual = Some(min_eig(&nominal) / pn);
    diag.gamma_floor = Some(gamma_floor_data(&g, &p, &ds.x1, &ds.u0, &w, spec));
    let alpha_val = alpha.map(|a| sol.scalar(a));
    if let Some(a) = alpha_val {
        let c47 = mss_certificate(&g, &p, &ds.x1, &ds.u0, &w, spec);
        let ca = mss_certificate_alpha(&g, &p, &ds.x1, &ds.u0, a, spec);
        diag.certificate_trpw = Some(c47.residual_min_eig / pn);
        diag.certificate_alpha = Some(ca.residual_min_eig / pn);
        diag.degraded = !c47.passes;
    }
    Ok(SynthesisResult {
        method,
        status: sol.status,
        failure: None,
        k: Some(k),
        p: Some(p),
        y: Some(y_val),
        m: None,
        f: Some(f_val),
        alpha: alpha_val,
        w,
        diagnostics: diag,
    })
}

/// `P − Q − (U₀G)ᵀR(U₀G) − γ(X₁G)ᵀP(X₁G)`.
fn data_bellman(g: &DMatrix<f64>, p: &DMatrix<f64>, x1: &DMatrix<f64>, u0: &DMatrix<f64>, spec: &CostSpec) -> DMatrix<f64> {
    let kg = u0 * g;
    let lg = x1 * g;
    symmetrize(&(p - &spec.q - kg.transpose() * &spec.r * &kg - lg.transpose() * p * &lg * spec.gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellmanCertificate {
    pub residual: DMatrix<f64>,
    pub min_eig: f64,
    pub passes: bool,
}

/// `S = P − Q − KᵀRK − γ(A+BK)ᵀP(A+BK)`; passes iff `λ_min(S) ≥ −1e-7‖P‖₂`.
pub fn bellman_certificate(
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    spec: &CostSpec,
) -> BellmanCertificate {
    let l = a + b * k;
    let s = symmetrize(&(p - &spec.q - k.transpose() * &spec.r * k - l.transpose() * p * &l * spec.gamma));
    let min_eig = min_eig(&s);
    BellmanCertificate { passes: min_eig >= -1e-7 * norm2(p), min_eig, residual: s }
}

/// Data-based discount floor
/// `1 − λ_min(Q + (U₀G)ᵀR(U₀G)) / λ_max((X₁G)ᵀP(X₁G) + Tr(PW)GᵀG)`; `−∞` for a zero denominator.
pub fn gamma_floor_data(
    g: &DMatrix<f64>,
    p: &DMatrix<f64>,
    x1: &DMatrix<f64>,
    u0: &DMatrix<f64>,
    w: &DMatrix<f64>,
    spec: &CostSpec,
) -> f64 {
    let kg = u0 * g;
    let lg = x1 * g;
    let den = crate::linalg::max_eig(&(lg.transpose() * p * &lg + g.transpose() * g * (p * w).trace()));
    if den <= 0.0 {
        return f64::NEG_INFINITY;
    }
    1.0 - min_eig(&(&spec.q + kg.transpose() * &spec.r * &kg)) / den
}

/// Inputs for [`synthesize`].
#[derive(Debug, Clone, Copy)]
pub struct SynthInput<'a> {
    pub data: Option<&'a DataSet>,
    /// True plant `(A, B)`; required by the model-based method only.
    pub plant: Option<(&'a DMatrix<f64>, &'a DMatrix<f64>)>,
    /// Known noise covariance; data-driven methods estimate it when absent.
    pub w: Option<&'a DMatrix<f64>>,
    pub reg_weight: f64,
}

/// Dispatches to the method's synthesis routine.
pub fn synthesize(method: Method, input: SynthInput<'_>, spec: &CostSpec, opts: &SynthOptions) -> Result<SynthesisResult> {
    let need_data = || input.data.ok_or_else(|| invalid(format!("method {method} needs a data set")));
    match method {
        Method::Model => {
            let (a, b) = input.plant.ok_or_else(|| invalid("the model-based method needs the plant (A, B)"))?;
            let w = input.w.ok_or_else(|| invalid("the model-based method needs W"))?;
            synth_model_based(a, b, spec, w, opts)
        }
        Method::IndirectCe => synth_indirect_ce(need_data()?, spec, input.w, opts),
        Method::DirectCe => synth_direct_ce(need_data()?, spec, input.w, 0.0, opts),
        Method::DirectCeReg => {
            if !(input.reg_weight > 0.0) {
                return Err(invalid("direct_ce_reg needs a positive regularization weight"));
            }
            synth_direct_ce(need_data()?, spec, input.w, input.reg_weight, opts)
        }
        Method::RobustDirect => synth_robust_direct(need_data()?, spec, input.w, opts),
    }
}
