use ddlqr::linalg::min_eig;
use ddlqr::oracle::riccati_step;
use ddlqr::rng::{standard_normal, stream};
use ddlqr::sys::{CostSpec, DiscreteLinearSystem};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn randm(seed: u64, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(r, c, standard_normal(&mut stream(seed), r * c).as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Value iteration from zero produces a PSD-nondecreasing sequence.
    #[test]
    fn value_iteration_is_monotone(n in 1usize..=5, m in 1usize..=3, seed in any::<u64>(), gamma in 0.1f64..0.999) {
        let a = randm(seed, n, n) * 0.8;
        let b = randm(seed ^ 1, n, m);
        let sys = DiscreteLinearSystem::new(a, b, DMatrix::identity(n, n)).unwrap();
        let lq = randm(seed ^ 2, n, n);
        let q = &lq * lq.transpose() + DMatrix::identity(n, n) * 0.1;
        let spec = CostSpec::new(q, DMatrix::identity(m, m), gamma).unwrap();
        let mut p = DMatrix::zeros(n, n);
        for _ in 0..40 {
            let next = riccati_step(&sys, &spec, &p).unwrap();
            let scale = next.norm().max(1.0);
            prop_assert!(min_eig(&(&next - &p)) >= -1e-9 * scale);
            p = next;
        }
    }

    /// Larger state weight gives a larger value matrix.
    #[test]
    fn value_is_monotone_in_state_weight(seed in any::<u64>(), extra in 0.0f64..10.0) {
        let n = 3;
        let sys = DiscreteLinearSystem::new(randm(seed, n, n) * 0.5, randm(seed ^ 1, n, 1), DMatrix::identity(n, n)).unwrap();
        let lo = CostSpec::new(DMatrix::identity(n, n), DMatrix::identity(1, 1), 0.9).unwrap();
        let hi = CostSpec::new(DMatrix::identity(n, n) * (1.0 + extra), DMatrix::identity(1, 1), 0.9).unwrap();
        let mut p_lo = DMatrix::zeros(n, n);
        let mut p_hi = DMatrix::zeros(n, n);
        for _ in 0..30 {
            p_lo = riccati_step(&sys, &lo, &p_lo).unwrap();
            p_hi = riccati_step(&sys, &hi, &p_hi).unwrap();
            prop_assert!(min_eig(&(&p_hi - &p_lo)) >= -1e-9 * p_hi.norm().max(1.0));
        }
    }
}
