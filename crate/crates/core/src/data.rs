//! One batch of input–state data: collection, richness, least-squares
//! identification, residual noise covariance and signal-to-noise ratio.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, pinv, singular_values, symmetrize, RANK_TOL};
use crate::rng::{standard_normal, stream, Gaussian};
use crate::sys::DiscreteLinearSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub u0: DMatrix<f64>,
    pub x0: DMatrix<f64>,
    pub x1: DMatrix<f64>,
    /// Hidden process noise, kept for oracle checks only.
    pub omega0: Option<DMatrix<f64>>,
    pub seed: u64,
    pub input_scale: f64,
}

impl DataSet {
    pub fn new(u0: DMatrix<f64>, x0: DMatrix<f64>, x1: DMatrix<f64>) -> Result<Self> {
        let len = u0.ncols();
        if x0.ncols() != len || x1.ncols() != len || x0.nrows() != x1.nrows() {
            return Err(invalid(format!(
                "data shapes disagree: U0 {:?}, X0 {:?}, X1 {:?}",
                u0.shape(),
                x0.shape(),
                x1.shape()
            )));
        }
        Ok(Self { u0, x0, x1, omega0: None, seed: 0, input_scale: f64::NAN })
    }

    pub fn n(&self) -> usize {
        self.x0.nrows()
    }

    pub fn m(&self) -> usize {
        self.u0.nrows()
    }

    pub fn len(&self) -> usize {
        self.u0.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `D₀ = [U₀; X₀]`.
    pub fn d0(&self) -> DMatrix<f64> {
        let (n, m, len) = (self.n(), self.m(), self.len());
        let mut d = DMatrix::zeros(m + n, len);
        d.view_mut((0, 0), (m, len)).copy_from(&self.u0);
        d.view_mut((m, 0), (n, len)).copy_from(&self.x0);
        d
    }
}

/// Simulates `len` steps under i.i.d. excitation `u_k = input_scale·υ_k`,
/// `υ_k ~ N(0, I)`, recording the noise actually injected.
pub fn collect(sys: &DiscreteLinearSystem, len: usize, x0: &DVector<f64>, input_scale: f64, seed: u64) -> Result<DataSet> {
    if len == 0 {
        return Err(invalid("data length must be at least 1"));
    }
    if x0.len() != sys.n() {
        return Err(invalid("initial state has the wrong length"));
    }
    let (n, m) = (sys.n(), sys.m());
    let mut rng = stream(seed);
    let noise = Gaussian::centered(&sys.w);
    let mut u0 = DMatrix::zeros(m, len);
    let mut xs = DMatrix::zeros(n, len + 1);
    let mut omega = DMatrix::zeros(n, len);
    xs.set_column(0, x0);
    for k in 0..len {
        let u = standard_normal(&mut rng, m) * input_scale;
        let w = noise.sample(&mut rng);
        let next = &sys.a * xs.column(k) + &sys.b * &u + &w;
        u0.set_column(k, &u);
        omega.set_column(k, &w);
        xs.set_column(k + 1, &next);
    }
    Ok(DataSet {
        u0,
        x0: xs.columns(0, len).into_owned(),
        x1: xs.columns(1, len).into_owned(),
        omega0: Some(omega),
        seed,
        input_scale,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rich: bool,
    pub rank: usize,
    pub needed: usize,
    pub singular_values: Vec<f64>,
}

/// Whether `D₀` has full row rank `n + m` at the `RANK_TOL` threshold.
pub fn rank_check(ds: &DataSet) -> RankReport {
    let needed = ds.n() + ds.m();
    let sv = singular_values(&ds.d0());
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let rank = if smax > 0.0 { sv.iter().filter(|&&s| s > RANK_TOL * smax).count() } else { 0 };
    RankReport { rich: rank == needed, rank, needed, singular_values: sv.iter().copied().collect() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedModel {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    /// Residual covariance, filled by [`estimate_noise_cov`].
    pub w_hat: Option<DMatrix<f64>>,
    /// `X₁ − [B̂ Â] D₀`.
    pub residual: DMatrix<f64>,
}

fn require_rich(ds: &DataSet) -> Result<()> {
    let rep = rank_check(ds);
    if rep.rich {
        Ok(())
    } else {
        Err(Error::RankDeficient { rank: rep.rank, needed: rep.needed })
    }
}

/// `[B̂ Â] = X₁ D₀†`.
pub fn least_squares_id(ds: &DataSet) -> Result<IdentifiedModel> {
    require_rich(ds)?;
    let d0 = ds.d0();
    let theta = &ds.x1 * pinv(&d0);
    let m = ds.m();
    let b_hat = theta.columns(0, m).into_owned();
    let a_hat = theta.columns(m, ds.n()).into_owned();
    let residual = &ds.x1 - &theta * &d0;
    Ok(IdentifiedModel { a_hat, b_hat, w_hat: None, residual })
}

/// `Ŵ = (1/N) Σ ŵ_k ŵ_kᵀ` over the least-squares residuals.
pub fn estimate_noise_cov(ds: &DataSet, model: &IdentifiedModel) -> DMatrix<f64> {
    let res = &ds.x1 - &model.a_hat * &ds.x0 - &model.b_hat * &ds.u0;
    symmetrize(&(&res * res.transpose() / ds.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrMode {
    /// Uses the recorded noise `Ω₀`.
    Oracle,
    /// Uses the least-squares residual in place of `Ω₀`.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    /// `1/(‖Ω₀‖₂‖D₀†‖₂)`; `+∞` when the noise is zero.
    pub linear: f64,
    pub db: f64,
    pub mode: SnrMode,
}

impl Snr {
    pub fn from_norms(omega_norm: f64, d0_pinv_norm: f64, mode: SnrMode) -> Self {
        let linear = 1.0 / (omega_norm * d0_pinv_norm);
        Self { linear, db: 20.0 * linear.log10(), mode }
    }
}

/// Signal-to-noise ratio `20·log₁₀(1/(‖Ω₀‖₂‖D₀†‖₂))`.
pub fn snr_measured(ds: &DataSet) -> Result<Snr> {
    let d0_pinv = norm2(&pinv(&ds.d0()));
    match &ds.omega0 {
        Some(om) => Ok(Snr::from_norms(norm2(om), d0_pinv, SnrMode::Oracle)),
        None => {
            let model = least_squares_id(ds)?;
            Ok(Snr::from_norms(norm2(&model.residual), d0_pinv, SnrMode::Estimated))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_sys(a: f64, b: f64) -> DiscreteLinearSystem {
        DiscreteLinearSystem::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn hand_solvable_fit() {
        let ds = DataSet::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
        )
        .unwrap();
        let model = least_squares_id(&ds).unwrap();
        assert!((model.a_hat[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((model.b_hat[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deficient_cases() {
        let zero = DataSet::new(DMatrix::zeros(1, 10), DMatrix::zeros(4, 10), DMatrix::zeros(4, 10)).unwrap();
        assert!(!rank_check(&zero).rich);
        let short = DataSet::new(DMatrix::zeros(1, 3), DMatrix::identity(4, 3), DMatrix::zeros(4, 3)).unwrap();
        let rep = rank_check(&short);
        assert!(!rep.rich && rep.rank <= 3);
        assert!(matches!(least_squares_id(&short), Err(Error::RankDeficient { needed: 5, .. })));
    }

    #[test]
    fn noise_free_collection_records_zero_noise() {
        let ds = collect(&scalar_sys(0.5, 1.0), 5, &DVector::from_element(1, 0.0), 1.0, 4).unwrap();
        assert_eq!(ds.omega0.as_ref().unwrap(), &DMatrix::zeros(1, 5));
        let model = least_squares_id(&ds).unwrap();
        assert!(estimate_noise_cov(&ds, &model).amax() < 1e-12);
        assert_eq!(snr_measured(&ds).unwrap().linear, f64::INFINITY);
    }

    #[test]
    fn unit_norms_are_zero_db() {
        let s = Snr::from_norms(1.0, 1.0, SnrMode::Oracle);
        assert_eq!(s.db, 0.0);
        let halved = Snr::from_norms(2.0, 1.0, SnrMode::Oracle);
        assert!((s.db - halved.db - 20.0 * 2f64.log10()).abs() < 1e-12);
    }
}
