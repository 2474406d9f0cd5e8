//! Suboptimality-gap bound for the robust direct design relative to the
//! optimal discounted LQR solution.

use nalgebra::{DMatrix, DVector};

use crate::data::Snr;
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, pinv, spectral_radius};

/// Hard cap on the number of powers examined by [`tau_decay`].
pub const TAU_K_MAX: usize = 10_000;

/// `τ(√γL, ρ) = sup_k ‖(√γL)^k‖₂ ρ^{−k}`.
///
/// With `M = √γL/ρ` and `t_k = ‖M^k‖₂`, once some `t_j ≤ 1` every later term
/// satisfies `t_{j+i} ≤ t_j t_i ≤ t_i`, so the running maximum is the exact
/// supremum. If that never happens within `k_max` powers the running maximum
/// is returned and a warning is logged.
pub fn tau_decay(l: &DMatrix<f64>, gamma: f64, rho: f64, k_max: usize) -> Result<f64> {
    if !l.is_square() {
        return Err(invalid("L must be square"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho = {rho} must lie in (0, 1)")));
    }
    let m = l * (gamma.sqrt() / rho);
    let radius = spectral_radius(&(l * gamma.sqrt()));
    // Equality is admissible when the supremum is attained (normal L).
    if rho < radius * (1.0 - 1e-12) {
        return Err(invalid(format!("rho = {rho} is below the spectral radius {radius} of sqrt(gamma) L")));
    }
    let mut power = DMatrix::identity(l.nrows(), l.ncols());
    let mut best = 1.0_f64;
    for _ in 1..=k_max.max(1) {
        power = &power * &m;
        let t = norm2(&power);
        if !t.is_finite() {
            return Err(Error::Conditioning(t));
        }
        if t <= 1.0 {
            return Ok(best);
        }
        best = best.max(t);
    }
    log::warn!("tau_decay: no contracting power within {k_max} steps; supremum may be underestimated");
    Ok(best)
}

/// Midpoint default `(1 + ρ(√γL))/2`.
pub fn default_rho(l: &DMatrix<f64>, gamma: f64) -> f64 {
    0.5 * (1.0 + spectral_radius(&(l * gamma.sqrt())))
}

/// `Ḡ = (I − X₀†X₀)G`, the part of `G` in the null space of `X₀`.
pub fn null_split(g: &DMatrix<f64>, x0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x0.nrows();
    if g.nrows() != x0.ncols() || g.ncols() != n {
        return Err(invalid("G must be N x n for X0 of shape n x N"));
    }
    let viol = (x0 * g - DMatrix::<f64>::identity(n, n)).norm();
    if viol > 1e-6 * (1.0 + norm2(x0) * norm2(g)) {
        return Err(Error::InvalidParameterization(viol));
    }
    let x0p = pinv(x0);
    let gbar = g - &x0p * (x0 * g);
    debug_assert!((&x0p + &gbar - g).norm() <= 1e-6 * (1.0 + g.norm()));
    Ok(gbar)
}

#[derive(Debug, Clone)]
pub struct GapInputs<'a> {
    pub u0: &'a DMatrix<f64>,
    pub x0: &'a DMatrix<f64>,
    pub d0: &'a DMatrix<f64>,
    pub g: &'a DMatrix<f64>,
    pub a: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
    pub k_star: &'a DMatrix<f64>,
    pub p_star: &'a DMatrix<f64>,
    pub w: &'a DMatrix<f64>,
    pub r: &'a DMatrix<f64>,
    pub gamma: f64,
    pub snr: Snr,
    /// `None` selects [`default_rho`].
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapBundle {
    /// Linear SNR used in the bound (not dB).
    pub snr: f64,
    pub snr_mode: crate::data::SnrMode,
    pub tau: f64,
    pub tau_bar: f64,
    pub rho: f64,
    pub gbar: DMatrix<f64>,
    pub g_norm: f64,
    pub theta_norm: f64,
    pub l: DMatrix<f64>,
    pub delta1: f64,
    pub delta2: f64,
    pub d: f64,
    /// `δ₁/δ₂` when valid; `+∞` otherwise.
    pub delta: f64,
    pub valid: bool,
}

impl GapBundle {
    /// Flat key-value view for tables.
    pub fn record(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("snr", self.snr),
            ("tau", self.tau),
            ("tau_bar", self.tau_bar),
            ("rho", self.rho),
            ("gbar_norm", norm2(&self.gbar)),
            ("g_norm", self.g_norm),
            ("theta_norm", self.theta_norm),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("d", self.d),
            ("delta", self.delta),
            ("valid", if self.valid { 1.0 } else { 0.0 }),
        ]
    }
}

/// Evaluates `δ₁`, `d`, `δ₂ = 1 − d` and `δ = δ₁/δ₂` (valid iff `d < 1`).
pub fn gap_bound(inp: &GapInputs<'_>) -> Result<GapBundle> {
    let l = inp.a + inp.b * inp.k_star;
    let rho = match inp.rho {
        Some(r) => r,
        None => default_rho(&l, inp.gamma),
    };
    let tau = tau_decay(&l, inp.gamma, rho, TAU_K_MAX)?;
    let tau_bar = tau / (1.0 - rho * rho);
    let gbar = null_split(inp.g, inp.x0)?;
    let g_norm = norm2(&(pinv(inp.x0) + &gbar));
    let mut theta = DMatrix::zeros(inp.a.nrows(), inp.a.ncols() + inp.b.ncols());
    theta.view_mut((0, 0), inp.a.shape()).copy_from(inp.a);
    theta.view_mut((0, inp.a.ncols()), inp.b.shape()).copy_from(inp.b);
    let theta_norm = norm2(&theta);
    let inv_snr2 = if inp.snr.linear.is_infinite() { 0.0 } else { 1.0 / (inp.snr.linear * inp.snr.linear) };
    let gamma = inp.gamma;
    let p_norm = norm2(inp.p_star);
    let d0_2 = norm2(inp.d0).powi(2);
    let u0_2 = norm2(inp.u0).powi(2);
    let tr_w = inp.w.trace();
    let l_norm = norm2(&l);
    let noise_term = theta_norm * theta_norm + inv_snr2;
    let g2 = g_norm * g_norm;

    let delta1 = tau_bar * g2 * (u0_2 * norm2(inp.r) + 2.0 * gamma * d0_2 * p_norm * noise_term + gamma * p_norm * tr_w)
        + tau_bar * gamma * norm2(inp.a) * p_norm * l_norm;
    let d = tau_bar * gamma * g2 * (2.0 * d0_2 * noise_term + tr_w) + tau_bar * gamma * l_norm * l_norm;
    let delta2 = 1.0 - d;
    let valid = d < 1.0;
    Ok(GapBundle {
        snr: inp.snr.linear,
        snr_mode: inp.snr.mode,
        tau,
        tau_bar,
        rho,
        gbar,
        g_norm,
        theta_norm,
        l,
        delta1,
        delta2,
        d,
        delta: if valid { delta1 / delta2 } else { f64::INFINITY },
        valid,
    })
}

/// `‖ΔP‖ (‖x₀‖² + γ/(1−γ)|Tr W|)` for `γ ∈ (0, 1)`.
pub fn cost_gap_bound(x0: &DVector<f64>, delta_p_norm: f64, w: &DMatrix<f64>, gamma: f64) -> f64 {
    delta_p_norm * (x0.norm_squared() + gamma / (1.0 - gamma) * w.trace().abs())
}
