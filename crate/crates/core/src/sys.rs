//! Ground-truth stochastic LTI plants: construction, discretization,
//! closed-loop simulation and empirical cost.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::linalg::{is_finite, sym_eigenvalues};
use crate::rng::{stream, Gaussian};

/// States beyond this norm mark a trajectory as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e12;

fn check_psd(name: &str, w: &DMatrix<f64>) -> Result<()> {
    if !w.is_square() {
        return Err(invalid(format!("{name} must be square")));
    }
    let scale = w.amax();
    if (w - w.transpose()).amax() > 1e-12 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
        return Err(invalid(format!("{name} is not symmetric")));
    }
    if scale > 0.0 && sym_eigenvalues(w).min() < -1e-12 * scale {
        return Err(invalid(format!("{name} is not positive semidefinite")));
    }
    Ok(())
}

fn check_pd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    check_psd(name, m)?;
    if m.is_empty() || sym_eigenvalues(m).min() <= 0.0 {
        return Err(invalid(format!("{name} must be positive definite")));
    }
    Ok(())
}

/// `x_{k+1} = A x_k + B u_k + w_k`, `w_k ~ N(0, W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl DiscreteLinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || w.shape() != (n, n) {
            return Err(invalid(format!(
                "inconsistent shapes: A {:?}, B {:?}, W {:?}",
                a.shape(),
                b.shape(),
                w.shape()
            )));
        }
        if n == 0 || b.ncols() == 0 {
            return Err(invalid("state and input dimensions must be positive"));
        }
        if !(is_finite(&a) && is_finite(&b) && is_finite(&w)) {
            return Err(invalid("non-finite system matrix entry"));
        }
        check_psd("W", &w)?;
        Ok(Self { a, b, w })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * k
    }

    pub fn with_noise(&self, w: DMatrix<f64>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLinearSystem {
    pub ac: DMatrix<f64>,
    pub bc: DMatrix<f64>,
    pub wc: DMatrix<f64>,
}

impl ContinuousLinearSystem {
    pub fn new(ac: DMatrix<f64>, bc: DMatrix<f64>, wc: DMatrix<f64>) -> Result<Self> {
        let n = ac.nrows();
        if !ac.is_square() || bc.nrows() != n || wc.shape() != (n, n) {
            return Err(invalid("inconsistent continuous-time shapes"));
        }
        check_psd("Wc", &wc)?;
        Ok(Self { ac, bc, wc })
    }
}

/// Quadratic stage cost `xᵀQx + uᵀRu` discounted by `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
}

impl CostSpec {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>, gamma: f64) -> Result<Self> {
        check_pd("Q", &q)?;
        check_pd("R", &r)?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("discount factor {gamma} is outside (0, 1)")));
        }
        Ok(Self { q, r, gamma })
    }

    /// Per-step closed-loop weight `Q + KᵀRK`.
    pub fn stage_weight(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q + k.transpose() * &self.r * k
    }
}

/// `x₀ ~ N(mean, cov)`; a zero covariance gives a deterministic start.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl InitialCondition {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(invalid("initial covariance does not match the mean"));
        }
        check_psd("initial covariance", &cov)?;
        Ok(Self { mean, cov })
    }

    pub fn fixed(x0: DVector<f64>) -> Self {
        let n = x0.len();
        Self { mean: x0, cov: DMatrix::zeros(n, n) }
    }

    /// Benchmark start distribution: mean (0.3, −4, 0.1, −1), covariance 0.0006·I.
    pub fn quarter_car() -> Self {
        Self {
            mean: DVector::from_vec(vec![0.3, -4.0, 0.1, -1.0]),
            cov: DMatrix::identity(4, 4) * 0.0006,
        }
    }

    pub fn sampler(&self) -> Gaussian {
        Gaussian::new(self.mean.clone(), &self.cov)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub seed: u64,
    /// Set when a state norm exceeded [`DIVERGENCE_GUARD`]; the trajectory stops there.
    pub diverged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discretization {
    #[default]
    Zoh,
    Euler,
}

impl std::str::FromStr for Discretization {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zoh" => Ok(Self::Zoh),
            "euler" => Ok(Self::Euler),
            _ => Err(invalid(format!("unknown discretization `{s}` (zoh or euler)"))),
        }
    }
}

/// Samples a continuous plant with period `ts`. The noise covariance is taken
/// as the per-step discrete covariance unchanged.
pub fn discretize(cs: &ContinuousLinearSystem, ts: f64, method: Discretization) -> Result<DiscreteLinearSystem> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(invalid(format!("sampling time {ts} must be positive")));
    }
    if !(is_finite(&cs.ac) && is_finite(&cs.bc) && is_finite(&cs.wc)) {
        return Err(invalid("non-finite continuous-time entry"));
    }
    let (n, m) = (cs.ac.nrows(), cs.bc.ncols());
    let (a, b) = match method {
        Discretization::Euler => (DMatrix::identity(n, n) + &cs.ac * ts, &cs.bc * ts),
        Discretization::Zoh => {
            // exp([[Ac, Bc], [0, 0]]·Ts) = [[A, B], [0, I]]
            let mut aug = DMatrix::zeros(n + m, n + m);
            aug.view_mut((0, 0), (n, n)).copy_from(&(&cs.ac * ts));
            aug.view_mut((0, n), (n, m)).copy_from(&(&cs.bc * ts));
            let e = aug.exp();
            (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
        }
    };
    DiscreteLinearSystem::new(a, b, cs.wc.clone())
}

/// Physical constants of the two-mass suspension.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuarterCarParams {
    pub m_s: f64,
    pub m_u: f64,
    pub b_s: f64,
    pub k_s: f64,
    pub k_t: f64,
}

impl Default for QuarterCarParams {
    fn default() -> Self {
        Self { m_s: 240.0, m_u: 36.0, b_s: 980.0, k_s: 16000.0, k_t: 160000.0 }
    }
}

/// Quarter-car suspension with road-displacement variance `r`.
///
/// States: suspension deflection, body velocity, tyre deflection, wheel velocity.
pub fn quarter_car(r: f64) -> Result<ContinuousLinearSystem> {
    quarter_car_with(&QuarterCarParams::default(), r)
}

pub fn quarter_car_with(p: &QuarterCarParams, r: f64) -> Result<ContinuousLinearSystem> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("road variance r = {r} must be positive")));
    }
    let ac = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, -1.0,
            -p.k_s / p.m_s, -p.b_s / p.m_s, 0.0, p.b_s / p.m_s,
            0.0, 0.0, 0.0, 1.0,
            p.k_s / p.m_u, p.b_s / p.m_u, -p.k_t / p.m_u, -p.b_s / p.m_u,
        ],
    );
    let bc = DMatrix::from_column_slice(4, 1, &[0.0, 1.0 / p.m_s, 0.0, -1.0 / p.m_u]);
    let wc = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0001, 0.00001, r, 0.001]));
    ContinuousLinearSystem::new(ac, bc, wc)
}

/// Zero-order-hold quarter car at the benchmark sampling time of 10 ms.
pub fn quarter_car_discrete(r: f64) -> Result<DiscreteLinearSystem> {
    discretize(&quarter_car(r)?, 0.01, Discretization::Zoh)
}

/// Runs `x_{k+1} = (A + BK)x_k + w_k` for `steps` steps from `x0`.
pub fn simulate(sys: &DiscreteLinearSystem, k: &DMatrix<f64>, x0: &DVector<f64>, steps: usize, seed: u64) -> Result<Trajectory> {
    if k.shape() != (sys.m(), sys.n()) || x0.len() != sys.n() {
        return Err(invalid("gain or initial state has the wrong shape"));
    }
    if steps == 0 {
        return Err(invalid("simulation needs at least one step"));
    }
    let mut rng = stream(seed);
    let noise = Gaussian::centered(&sys.w);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps);
    let mut x = x0.clone();
    let mut diverged = false;
    states.push(x.clone());
    for _ in 0..steps {
        let u = k * &x;
        x = &sys.a * &x + &sys.b * &u + noise.sample(&mut rng);
        inputs.push(u);
        states.push(x.clone());
        if !(x.norm() <= DIVERGENCE_GUARD) {
            diverged = true;
            break;
        }
    }
    Ok(Trajectory { states, inputs, seed, diverged })
}

/// `Σ_k γ^k x_kᵀ(Q + KᵀRK)x_k` over every stored state (`γ = 1` when not
/// discounted). Diverged trajectories cost `+∞`.
pub fn empirical_cost(traj: &Trajectory, spec: &CostSpec, k: &DMatrix<f64>, discounted: bool) -> f64 {
    if traj.diverged {
        return f64::INFINITY;
    }
    let weight = spec.stage_weight(k);
    let g = if discounted { spec.gamma } else { 1.0 };
    let mut disc = 1.0;
    let mut total = 0.0;
    for x in &traj.states {
        total += disc * (x.transpose() * &weight * x)[(0, 0)];
        disc *= g;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn zoh_of_zero_dynamics() {
        let cs = ContinuousLinearSystem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let d = discretize(&cs, 0.01, Discretization::Zoh).unwrap();
        assert!((d.a - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
        assert!((d.b - DMatrix::<f64>::identity(2, 2) * 0.01).amax() < 1e-15);
    }

    #[test]
    fn euler_scalar() {
        let cs = ContinuousLinearSystem::new(scalar(-2.0), scalar(3.0), scalar(0.0)).unwrap();
        let d = discretize(&cs, 0.1, Discretization::Euler).unwrap();
        assert!((d.a[(0, 0)] - 0.8).abs() < 1e-15);
        assert!((d.b[(0, 0)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cs = ContinuousLinearSystem::new(scalar(f64::NAN), scalar(1.0), scalar(0.0)).unwrap();
        assert!(discretize(&cs, 0.1, Discretization::Zoh).is_err());
        assert!(quarter_car(0.0).is_err());
        assert!(CostSpec::new(scalar(1.0), scalar(1.0), 1.0).is_err());
        assert!(CostSpec::new(scalar(0.0), scalar(1.0), 0.5).is_err());
    }

    #[test]
    fn quarter_car_matrices() {
        let cs = quarter_car(0.001).unwrap();
        assert_eq!(cs.wc, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0001, 0.00001, 0.001, 0.001])));
        assert_eq!(cs.ac.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, -1.0]);
        assert_eq!(cs.bc.as_slice(), &[0.0, 1.0 / 240.0, 0.0, -1.0 / 36.0]);
    }

    #[test]
    fn noise_free_scalar_recursion() {
        let sys = DiscreteLinearSystem::new(scalar(0.5), scalar(0.0), scalar(0.0)).unwrap();
        let t = simulate(&sys, &scalar(0.0), &DVector::from_element(1, 1.0), 2, 1).unwrap();
        let xs: Vec<f64> = t.states.iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![1.0, 0.5, 0.25]);
        assert_eq!(t.inputs.len() + 1, t.states.len());
    }

    #[test]
    fn deadbeat_is_exact() {
        let sys = DiscreteLinearSystem::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let k = -sys.a.clone();
        let t = simulate(&sys, &k, &DVector::from_vec(vec![3.0, -7.0]), 1, 0).unwrap();
        assert_eq!(t.states[1], DVector::zeros(2));
    }

    #[test]
    fn divergence_is_flagged() {
        let sys = DiscreteLinearSystem::new(scalar(1e4), scalar(0.0), scalar(0.0)).unwrap();
        let t = simulate(&sys, &scalar(0.0), &DVector::from_element(1, 1.0), 10, 0).unwrap();
        assert!(t.diverged);
        let spec = CostSpec::new(scalar(1.0), scalar(1.0), 0.5).unwrap();
        assert_eq!(empirical_cost(&t, &spec, &scalar(0.0), false), f64::INFINITY);
    }

    #[test]
    fn cost_examples() {
        let traj = |xs: &[f64]| Trajectory {
            states: xs.iter().map(|&v| DVector::from_element(1, v)).collect(),
            inputs: vec![DVector::zeros(1); xs.len() - 1],
            seed: 0,
            diverged: false,
        };
        let spec = CostSpec::new(scalar(2.0), scalar(1.0), 0.5).unwrap();
        assert_eq!(empirical_cost(&traj(&[0.0, 0.0]), &spec, &scalar(3.0), false), 0.0);
        assert_eq!(empirical_cost(&traj(&[1.0, 0.0]), &spec, &scalar(3.0), false), 11.0);
        // R = 0 is outside CostSpec's contract, so build the struct directly.
        let spec = CostSpec { q: scalar(1.0), r: scalar(0.0), gamma: 0.5 };
        assert_eq!(empirical_cost(&traj(&[1.0, 1.0]), &spec, &scalar(0.0), true), 1.5);
    }
}
