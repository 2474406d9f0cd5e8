use ddlqr::data::collect;
use ddlqr::linalg::{min_eig, stein};
use ddlqr::mss::*;
use ddlqr::rng::{child_seed, standard_normal, stream};
use ddlqr::synth::{synth_robust_direct, SynthOptions};
use ddlqr::sys::{quarter_car_discrete, CostSpec, DiscreteLinearSystem, InitialCondition};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn randm(seed: u64, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(r, c, standard_normal(&mut stream(seed), r * c).as_slice())
}

fn robust_gain(r: f64, seed: u64) -> (DiscreteLinearSystem, DMatrix<f64>, ddlqr::synth::SynthesisResult, ddlqr::data::DataSet) {
    let sys = quarter_car_discrete(r).unwrap();
    let spec = CostSpec::new(DMatrix::identity(4, 4), DMatrix::identity(1, 1), 0.9999).unwrap();
    let start = InitialCondition::quarter_car().sampler().sample(&mut stream(child_seed(seed, &[1])));
    let ds = collect(&sys, 10, &start, 10.0, seed).unwrap();
    let res = synth_robust_direct(&ds, &spec, Some(&sys.w), &SynthOptions::default()).unwrap();
    let k = res.k.clone().expect("robust synthesis failed");
    (sys, k, res, ds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn decomposition_reconstructs_noise_term(n in 1usize..=6, len in 1usize..=20, seed in any::<u64>()) {
        let omega = randm(seed, n, len);
        let g = randm(seed ^ 0x5eed, len, n);
        let sys = MultiplicativeNoiseSystem::new(DMatrix::zeros(n, n), &g);
        prop_assert_eq!(sys.theta_dim, n * len);
        for a in &sys.ai {
            prop_assert!(a.row_iter().filter(|r| r.iter().any(|&v| v != 0.0)).count() <= 1);
        }
        let recon = sys.realize(&theta_from_noise(&omega));
        prop_assert!((recon + &omega * &g).norm() <= 1e-12 * (1.0 + omega.norm() * g.norm()));
    }
}

#[test]
fn certificate_is_decreasing_in_discount() {
    let g = randm(1, 6, 2) * 0.1;
    let x1 = randm(2, 2, 6);
    let u0 = randm(3, 1, 6);
    let p = DMatrix::identity(2, 2) * 5.0;
    let w = DMatrix::identity(2, 2) * 0.1;
    let mut prev = f64::INFINITY;
    for gamma in [0.01, 0.1, 0.3, 0.6, 0.9, 0.99] {
        let spec = CostSpec::new(DMatrix::identity(2, 2), scalar(1.0), gamma).unwrap();
        let e = mss_certificate(&g, &p, &x1, &u0, &w, &spec).residual_min_eig;
        assert!(e <= prev + 1e-12);
        prev = e;
    }
}

#[test]
fn deadbeat_loop_whitens_noise() {
    let n = 2;
    let sys = DiscreteLinearSystem::new(DMatrix::identity(n, n) * 0.7, DMatrix::identity(n, n), DMatrix::identity(n, n)).unwrap();
    let k = DMatrix::identity(n, n) * -0.7;
    assert_eq!(true_spectral_radius(&sys.a, &sys.b, &k), 0.0);
    let est = empirical_mss(&sys, &k, 200, 200, 1).unwrap();
    assert!(est.converged);
    let id = DMatrix::<f64>::identity(n, n);
    assert!((&est.sigma_inf - &id).norm() / id.norm() <= 0.15);
}

#[test]
fn unstable_loop_is_not_mean_square_stable() {
    let sys = DiscreteLinearSystem::new(scalar(1.0), scalar(1.0), scalar(1.0)).unwrap();
    let est = empirical_mss(&sys, &scalar(0.1), 50, 400, 2).unwrap();
    assert!(!est.converged);
}

#[test]
fn too_few_trials_is_rejected() {
    let sys = DiscreteLinearSystem::new(scalar(0.5), scalar(1.0), scalar(1.0)).unwrap();
    assert!(empirical_mss(&sys, &scalar(0.0), 29, 100, 0).is_err());
}

#[test]
fn robust_quarter_car_loop_matches_lyapunov_covariance() {
    let (sys, k, _, _) = robust_gain(1e-5, 3);
    let l = sys.closed_loop(&k);
    let sigma = stein(&l, &sys.w).unwrap();
    let est = empirical_mss(&sys, &k, 400, 1500, 7).unwrap();
    assert!(est.converged, "drift {}", est.tail_drift);
    let err = (&est.sigma_inf - &sigma).norm() / sigma.norm();
    assert!(err <= 0.2, "{err}");
    let lyap = &est.sigma_inf - &l * &est.sigma_inf * l.transpose() - &sys.w;
    assert!(lyap.norm() <= 0.25 * est.sigma_inf.norm());
    assert!(min_eig(&est.sigma_inf) > 0.0);
}

#[test]
fn passing_data_certificate_implies_true_stability() {
    let spec = CostSpec::new(DMatrix::identity(4, 4), DMatrix::identity(1, 1), 0.9999).unwrap();
    for r in [1e-5, 2e-4] {
        for seed in 0..4 {
            let (sys, k, res, ds) = robust_gain(r, 100 + seed);
            let cert = mss_certificate_alpha(&res.g().unwrap(), res.p.as_ref().unwrap(), &ds.x1, &ds.u0, res.alpha.unwrap(), &spec);
            if cert.passes {
                assert!(true_spectral_radius(&sys.a, &sys.b, &k) < 1.0, "r = {r}, seed {seed}");
            }
        }
    }
}

#[test]
fn halving_a_passing_p_fails() {
    let (_, _, res, ds) = robust_gain(1e-5, 5);
    let spec = CostSpec::new(DMatrix::identity(4, 4), DMatrix::identity(1, 1), 0.9999).unwrap();
    let g = res.g().unwrap();
    let p = res.p.unwrap();
    let alpha = res.alpha.unwrap();
    assert!(mss_certificate_alpha(&g, &p, &ds.x1, &ds.u0, alpha, &spec).passes);
    assert!(!mss_certificate_alpha(&g, &(&p * 0.5), &ds.x1, &ds.u0, alpha, &spec).passes);
}
