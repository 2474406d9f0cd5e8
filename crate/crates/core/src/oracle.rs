//! Model-based reference: discounted Riccati fixed point and the value,
//! cost and discount-floor formulas built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{max_eig, min_eig, spectral_radius, symmetrize};
use crate::sys::{CostSpec, DiscreteLinearSystem, InitialCondition};

pub const DARE_TOL: f64 = 1e-12;
pub const DARE_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub p_star: DMatrix<f64>,
    pub k_star: DMatrix<f64>,
    pub c_star: f64,
    pub iterations: usize,
    /// Bellman residual `‖P − Q − KᵀRK − γ(A+BK)ᵀP(A+BK)‖_F / ‖P‖_F`.
    pub residual: f64,
}

/// `K = −γ(R + γBᵀPB)⁻¹BᵀPA`.
pub fn greedy_gain(sys: &DiscreteLinearSystem, spec: &CostSpec, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = spec.gamma;
    let lhs = &spec.r + sys.b.transpose() * p * &sys.b * g;
    let rhs = sys.b.transpose() * p * &sys.a * g;
    let sol = lhs
        .cholesky()
        .ok_or_else(|| invalid("R + γBᵀPB is not positive definite"))?
        .solve(&rhs);
    Ok(-sol)
}

/// Bellman residual matrix of `(P, K)` on the true plant.
pub fn bellman_residual(sys: &DiscreteLinearSystem, spec: &CostSpec, p: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    let l = sys.closed_loop(k);
    p - spec.stage_weight(k) - l.transpose() * p * &l * spec.gamma
}

/// One value-iteration step `P ← Q + γAᵀPA − γ²AᵀPB(R + γBᵀPB)⁻¹BᵀPA`.
pub fn riccati_step(sys: &DiscreteLinearSystem, spec: &CostSpec, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sg = spec.gamma.sqrt();
    let ab = &sys.a * sg;
    let bb = &sys.b * sg;
    let pa = p * &ab;
    let gram = &spec.r + bb.transpose() * p * &bb;
    let cross = bb.transpose() * &pa;
    let corr = gram
        .cholesky()
        .ok_or_else(|| invalid("R + γBᵀPB lost definiteness"))?
        .solve(&cross);
    Ok(symmetrize(&(&spec.q + ab.transpose() * &pa - cross.transpose() * corr)))
}

/// Value iteration `P ← Q + ĀᵀPĀ − ĀᵀPB̄(R + B̄ᵀPB̄)⁻¹B̄ᵀPĀ` on
/// `(Ā, B̄) = (√γA, √γB)` from `P₀ = 0`.
pub fn solve_discounted_dare(sys: &DiscreteLinearSystem, spec: &CostSpec, tol: f64, max_iter: usize) -> Result<OptimalSolution> {
    if sys.n() != spec.q.nrows() || sys.m() != spec.r.nrows() {
        return Err(invalid("cost weights do not match the system dimensions"));
    }
    let mut p = DMatrix::zeros(sys.n(), sys.n());
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let next = riccati_step(sys, spec, &p)?;
        let step = (&next - &p).norm() / next.norm().max(f64::MIN_POSITIVE);
        p = next;
        if !step.is_finite() {
            return Err(Error::DareNoConvergence { iterations: it, residual: step, history });
        }
        if it % 1000 == 0 || step <= tol {
            history.push(step);
        }
        if step <= tol {
            let k = greedy_gain(sys, spec, &p)?;
            let residual = bellman_residual(sys, spec, &p, &k).norm() / p.norm();
            return Ok(OptimalSolution {
                c_star: c_star(&p, &sys.w, spec.gamma),
                p_star: p,
                k_star: k,
                iterations: it,
                residual,
            });
        }
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::DareNoConvergence { iterations: max_iter, residual: last, history })
}

/// `γ/(1−γ)·Tr(P*W)`.
pub fn c_star(p_star: &DMatrix<f64>, w: &DMatrix<f64>, gamma: f64) -> f64 {
    gamma / (1.0 - gamma) * (p_star * w).trace()
}

/// `x₀ᵀP*x₀ + c*`.
pub fn optimal_value(x0: &DVector<f64>, sol: &OptimalSolution) -> f64 {
    (x0.transpose() * &sol.p_star * x0)[(0, 0)] + sol.c_star
}

/// Average cost per step `Tr(PW)`.
pub fn averaged_cost(p: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (p * w).trace()
}

/// `x̄₀ᵀPx̄₀ + Tr(PΣ) + βγ/(1−γ)·Tr(PW)`; `beta = 1` is the expected bound.
pub fn cost_upper_bound(x0: &InitialCondition, p: &DMatrix<f64>, w: &DMatrix<f64>, gamma: f64, beta: f64) -> f64 {
    (x0.mean.transpose() * p * &x0.mean)[(0, 0)]
        + (p * &x0.cov).trace()
        + beta * gamma / (1.0 - gamma) * (p * w).trace()
}

/// `1 − λ_min(Q + KᵀRK)/λ_max((A+BK)ᵀP(A+BK))`; the discount must exceed it
/// for the undiscounted closed loop to inherit stability. `−∞` when `A + BK = 0`.
pub fn gamma_lower_bound_model(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    k: &DMatrix<f64>,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> f64 {
    let l = a + b * k;
    let den = max_eig(&(l.transpose() * p * &l));
    if den <= 0.0 {
        return f64::NEG_INFINITY;
    }
    1.0 - min_eig(&(q + k.transpose() * r * k)) / den
}

/// `ρ(√γ(A + BK))`.
pub fn discounted_radius(sys: &DiscreteLinearSystem, k: &DMatrix<f64>, gamma: f64) -> f64 {
    gamma.sqrt() * spectral_radius(&sys.closed_loop(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn zero_dynamics() {
        let sys = DiscreteLinearSystem::new(s(0.0), s(1.0), s(0.0)).unwrap();
        let spec = CostSpec::new(s(1.0), s(1.0), 0.9).unwrap();
        let sol = solve_discounted_dare(&sys, &spec, DARE_TOL, 100).unwrap();
        assert!((sol.p_star[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(sol.k_star[(0, 0)], 0.0);
    }

    #[test]
    fn scalar_closed_form() {
        // 0.99P² − 0.98P − 1 = 0 for a = b = q = r = 1, γ = 0.99.
        let sys = DiscreteLinearSystem::new(s(1.0), s(1.0), s(0.0)).unwrap();
        let spec = CostSpec::new(s(1.0), s(1.0), 0.99).unwrap();
        let sol = solve_discounted_dare(&sys, &spec, DARE_TOL, 100_000).unwrap();
        let p = (0.98 + (0.98f64 * 0.98 + 4.0 * 0.99).sqrt()) / 1.98;
        assert!((sol.p_star[(0, 0)] - p).abs() < 1e-10);
        assert!((sol.k_star[(0, 0)] + 0.99 * p / (1.0 + 0.99 * p)).abs() < 1e-10);
    }

    #[test]
    fn unstabilizable_reports_failure() {
        let sys = DiscreteLinearSystem::new(s(2.0), s(0.0), s(0.0)).unwrap();
        let spec = CostSpec::new(s(1.0), s(1.0), 0.99).unwrap();
        assert!(matches!(
            solve_discounted_dare(&sys, &spec, DARE_TOL, 2000),
            Err(Error::DareNoConvergence { .. })
        ));
    }

    #[test]
    fn formula_examples() {
        assert_eq!(c_star(&DMatrix::identity(2, 2), &DMatrix::zeros(2, 2), 0.5), 0.0);
        assert_eq!(c_star(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), 0.5), 2.0);
        assert_eq!(averaged_cost(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3)), 3.0);
        let sol = OptimalSolution {
            p_star: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])),
            k_star: DMatrix::zeros(1, 2),
            c_star: 1.0,
            iterations: 0,
            residual: 0.0,
        };
        assert_eq!(optimal_value(&DVector::zeros(2), &sol), 1.0);
        assert_eq!(optimal_value(&DVector::from_vec(vec![1.0, 0.0]), &sol), 3.0);
        let x0 = InitialCondition::fixed(DVector::zeros(1));
        assert_eq!(cost_upper_bound(&x0, &s(1.0), &s(1.0), 0.5, 1.0), 1.0);
        let x0 = InitialCondition::fixed(DVector::from_element(1, 2.0));
        assert_eq!(cost_upper_bound(&x0, &s(3.0), &s(0.0), 0.5, 1.0), 12.0);
    }

    #[test]
    fn gamma_floor_examples() {
        let i = DMatrix::<f64>::identity(2, 2);
        let z = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(gamma_lower_bound_model(&i, &i, &-&i, &i, &i, &i), f64::NEG_INFINITY);
        // Q + KᵀRK = I and (A+BK)ᵀP(A+BK) = I.
        assert_eq!(gamma_lower_bound_model(&i, &z, &z, &i, &i, &i), 0.0);
    }
}
