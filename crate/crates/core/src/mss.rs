//! Mean-square stability: multiplicative-noise view of the data-driven
//! closed loop, data certificates, and ground-truth checks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{min_eig, norm2, spectral_radius, symmetrize};
use crate::rng::{child_seed, stream, Gaussian};
use crate::sys::{CostSpec, DiscreteLinearSystem, DIVERGENCE_GUARD};

/// `x_{k+1} = (A₀ + Σ ϑᵢAᵢ)x_k + ω_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeNoiseSystem {
    pub a0: DMatrix<f64>,
    pub ai: Vec<DMatrix<f64>>,
    pub theta_dim: usize,
}

impl MultiplicativeNoiseSystem {
    pub fn new(a0: DMatrix<f64>, g: &DMatrix<f64>) -> Self {
        let n = a0.nrows();
        let ai = decompose(g, n);
        Self { a0, theta_dim: ai.len(), ai }
    }

    /// `A₀ + Σ ϑᵢAᵢ`.
    pub fn realize(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.a0.clone();
        for (t, a) in theta.iter().zip(&self.ai) {
            out += a * *t;
        }
        out
    }
}

/// Splits `−Ω₀G` into `nN` rank-one pieces. Index `i = t·n + j` corresponds to
/// `ϑᵢ = ω_t^{(j)}`, and `Aᵢ` holds `−(row t of G)` in row `j`.
pub fn decompose(g: &DMatrix<f64>, n: usize) -> Vec<DMatrix<f64>> {
    let len = g.nrows();
    let mut out = Vec::with_capacity(n * len);
    for t in 0..len {
        for j in 0..n {
            let mut a = DMatrix::zeros(n, g.ncols());
            a.set_row(j, &(-g.row(t)));
            out.push(a);
        }
    }
    out
}

/// Stacks `Ω₀` column by column into `ϑ` (matching [`decompose`]).
pub fn theta_from_noise(omega0: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(omega0.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MssCertificate {
    pub passes: bool,
    pub residual_min_eig: f64,
    pub residual: DMatrix<f64>,
}

fn certificate(
    g: &DMatrix<f64>,
    p: &DMatrix<f64>,
    x1: &DMatrix<f64>,
    u0: &DMatrix<f64>,
    robust_weight: f64,
    spec: &CostSpec,
) -> MssCertificate {
    let lg = x1 * g;
    let kg = u0 * g;
    let s = symmetrize(
        &(p - (lg.transpose() * p * &lg) * spec.gamma
            - &spec.q
            - kg.transpose() * &spec.r * &kg
            - g.transpose() * g * robust_weight),
    );
    let residual_min_eig = min_eig(&s);
    MssCertificate { passes: residual_min_eig >= -1e-6 * norm2(p), residual_min_eig, residual: s }
}

/// `S = P − γ(X₁G)ᵀP(X₁G) − Q − (U₀G)ᵀR(U₀G) − γTr(PW)GᵀG`;
/// passes iff `λ_min(S) ≥ −1e-6‖P‖₂`.
pub fn mss_certificate(
    g: &DMatrix<f64>,
    p: &DMatrix<f64>,
    x1: &DMatrix<f64>,
    u0: &DMatrix<f64>,
    w: &DMatrix<f64>,
    spec: &CostSpec,
) -> MssCertificate {
    certificate(g, p, x1, u0, spec.gamma * (p * w).trace(), spec)
}

/// The same inequality with the robustness weight `γ/α` that the synthesis LMI
/// actually enforces.
pub fn mss_certificate_alpha(
    g: &DMatrix<f64>,
    p: &DMatrix<f64>,
    x1: &DMatrix<f64>,
    u0: &DMatrix<f64>,
    alpha: f64,
    spec: &CostSpec,
) -> MssCertificate {
    certificate(g, p, x1, u0, spec.gamma / alpha, spec)
}

/// `ρ(A + BK)`.
pub fn true_spectral_radius(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    spectral_radius(&(a + b * k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MssEstimate {
    /// Tail average of the sample second moment.
    pub sigma_inf: DMatrix<f64>,
    pub converged: bool,
    /// `‖M₂ − M₁‖_F/‖M₂‖_F` between the two halves of the tail window.
    pub tail_drift: f64,
    pub diverged_trials: usize,
}

/// Monte Carlo estimate of `lim E[x_k x_kᵀ]` from `x₀ = 0`, using the last 20%
/// of the horizon. Trials run in parallel on independent streams and are
/// reduced in trial order.
pub fn empirical_mss(sys: &DiscreteLinearSystem, k: &DMatrix<f64>, trials: usize, horizon: usize, seed: u64) -> Result<MssEstimate> {
    if trials < 30 {
        return Err(invalid("empirical MSS needs at least 30 trials"));
    }
    if horizon < 10 {
        return Err(invalid("empirical MSS needs a horizon of at least 10 steps"));
    }
    let n = sys.n();
    let l = sys.closed_loop(k);
    let window = (horizon / 5).max(2);
    let half = window / 2;
    let start = horizon - window;
    let noise = Gaussian::centered(&sys.w);
    let runs: Vec<Option<(DMatrix<f64>, DMatrix<f64>)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(child_seed(seed, &[trial as u64]));
            let mut x = DVector::zeros(n);
            let mut first = DMatrix::zeros(n, n);
            let mut second = DMatrix::zeros(n, n);
            for step in 1..=horizon {
                x = &l * &x + noise.sample(&mut rng);
                if !(x.norm() <= DIVERGENCE_GUARD) {
                    return None;
                }
                if step > start {
                    let outer = &x * x.transpose();
                    if step <= start + half {
                        first += outer;
                    } else {
                        second += outer;
                    }
                }
            }
            Some((first, second))
        })
        .collect();
    let diverged_trials = runs.iter().filter(|r| r.is_none()).count();
    let ok: Vec<_> = runs.into_iter().flatten().collect();
    if ok.is_empty() || diverged_trials * 2 > trials {
        return Ok(MssEstimate {
            sigma_inf: DMatrix::from_element(n, n, f64::NAN),
            converged: false,
            tail_drift: f64::INFINITY,
            diverged_trials,
        });
    }
    let mut m1 = DMatrix::zeros(n, n);
    let mut m2 = DMatrix::zeros(n, n);
    for (a, b) in &ok {
        m1 += a;
        m2 += b;
    }
    let m1 = m1 / (ok.len() * half) as f64;
    let m2 = m2 / (ok.len() * (window - half)) as f64;
    let tail_drift = (&m2 - &m1).norm() / m2.norm().max(f64::MIN_POSITIVE);
    let sigma_inf = symmetrize(&((&m1 * half as f64 + &m2 * (window - half) as f64) / window as f64));
    Ok(MssEstimate { converged: diverged_trials == 0 && tail_drift <= 0.1, sigma_inf, tail_drift, diverged_trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_layout() {
        let g = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ai = decompose(&g, 2);
        assert_eq!(ai.len(), 6);
        assert_eq!(ai[0], -DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]));
        assert_eq!(ai[1], -DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 2.0]));
        assert_eq!(ai[2], -DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]));
    }

    #[test]
    fn zero_g_gives_zero_pieces() {
        assert!(decompose(&DMatrix::zeros(4, 3), 3).iter().all(|a| a.amax() == 0.0));
    }

    #[test]
    fn radius_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
        let b = DMatrix::zeros(2, 1);
        assert_eq!(true_spectral_radius(&a, &b, &DMatrix::zeros(1, 2)), 2.0);
        let b = DMatrix::identity(2, 2);
        assert_eq!(true_spectral_radius(&a, &b, &-&a), 0.0);
    }

    #[test]
    fn scaling_p_down_breaks_certificate() {
        // Scalar data with G = 1: S = p − γ x1² p − q − u0² r − γ p w.
        let spec = CostSpec::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0), 0.5).unwrap();
        let g = DMatrix::from_element(1, 1, 1.0);
        let x1 = DMatrix::from_element(1, 1, 0.5);
        let u0 = DMatrix::from_element(1, 1, 0.5);
        let w = DMatrix::from_element(1, 1, 0.1);
        let p = DMatrix::from_element(1, 1, 2.0);
        assert!(mss_certificate(&g, &p, &x1, &u0, &w, &spec).passes);
        assert!(!mss_certificate(&g, &(&p * 0.5), &x1, &u0, &w, &spec).passes);
    }
}
