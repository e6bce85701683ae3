mod common;

use common::oracles::{
    covariance, jacobi_eigen, kkt_residual, ols_gauss_jordan, span_angle, structured_rows, svr_dual_projected_gradient,
    OracleKernel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transim::regression::{
    fit_linear, fit_pca2, fit_svr, kfold_mae, split_train_test, Dataset, KernelSpec, Regressor, SvrHyperParams,
};

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

#[test]
fn smo_matches_dense_dual_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..25 {
        let n = rng.gen_range(6..=20);
        let d = rng.gen_range(1..=3);
        let rows = random_rows(&mut rng, n, d);
        let targets: Vec<f64> =
            rows.iter().map(|r| r.iter().map(|v| v.sin()).sum::<f64>() + rng.gen_range(-0.1..0.1)).collect();
        let (kernel, oracle_kernel) = if case % 2 == 0 {
            let sigma = rng.gen_range(0.5..1.5);
            (KernelSpec::rbf(sigma).unwrap(), OracleKernel::Rbf(sigma))
        } else {
            (KernelSpec::Polynomial2, OracleKernel::Poly2)
        };
        let (c, eps) = (rng.gen_range(1.0..10.0), rng.gen_range(0.01..0.1));
        let data = Dataset::new(rows.clone(), targets.clone()).unwrap();
        let model = fit_svr(&data, kernel, SvrHyperParams::new(c, eps).unwrap()).unwrap();
        let qp = svr_dual_projected_gradient(&rows, &targets, &oracle_kernel, c, eps, 200_000);
        for x in &rows {
            let ours = model.predict(x).unwrap();
            let theirs = qp.predict(&oracle_kernel, &rows, x);
            assert!((ours - theirs).abs() < 1e-3, "case {case}: {ours} vs {theirs}");
        }
        let kkt = kkt_residual(&model, &rows, &targets, c, eps);
        assert!(kkt < 1e-3, "case {case}: KKT residual {kkt}");
    }
}

#[test]
fn svr_fits_within_tube_when_feasible() {
    // Targets within ε/2 of a line can be fitted with every residual inside the tube.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eps = 0.05;
    let xs: Vec<f64> = (0..15).map(|i| i as f64 / 14.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 0.3 + 0.8 * x + rng.gen_range(-eps / 2.0..eps / 2.0)).collect();
    let data = Dataset::univariate(&xs, &ys).unwrap();
    let model = fit_svr(&data, KernelSpec::rbf(0.5).unwrap(), SvrHyperParams::new(100.0, eps).unwrap()).unwrap();
    let preds = model.predict_many(data.features()).unwrap();
    let mae = preds.iter().zip(&ys).map(|(p, y)| (p - y).abs()).sum::<f64>() / ys.len() as f64;
    assert!(mae <= eps, "training MAE {mae}");
}

#[test]
fn ols_recovers_planted_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let d = rng.gen_range(1..=4);
        let n = rng.gen_range(d + 2..30);
        let coef: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b = rng.gen_range(-3.0..3.0);
        let rows = random_rows(&mut rng, n, d);
        let ys: Vec<f64> = rows.iter().map(|r| r.iter().zip(&coef).map(|(x, c)| x * c).sum::<f64>() + b).collect();
        let m = fit_linear(&Dataset::new(rows, ys).unwrap()).unwrap();
        for (got, want) in m.coefficients.iter().zip(&coef) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((m.intercept - b).abs() < 1e-9);
    }
}

#[test]
fn ols_matches_gauss_jordan_on_noisy_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let rows = random_rows(&mut rng, 25, d);
        let ys: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() + rng.gen_range(-0.5..0.5)).collect();
        let m = fit_linear(&Dataset::new(rows.clone(), ys.clone()).unwrap()).unwrap();
        let oracle = ols_gauss_jordan(&rows, &ys);
        for (got, want) in m.coefficients.iter().chain([&m.intercept]).zip(&oracle) {
            assert!((got - want).abs() < 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }
}

#[test]
fn ols_rejects_collinear_columns() {
    let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let ys: Vec<f64> = (0..6).map(|i| i as f64).collect();
    assert!(fit_linear(&Dataset::new(rows, ys).unwrap()).is_err());
}

#[test]
fn pca_matches_jacobi_on_random_covariances() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let d = rng.gen_range(3..=5);
        let mut variances: Vec<f64> = vec![rng.gen_range(8.0..12.0), rng.gen_range(3.0..5.0)];
        variances.extend((2..d).map(|_| rng.gen_range(0.1..0.5)));
        let rows = structured_rows(&mut rng, 200, &variances);
        let data = Dataset::new(rows.clone(), vec![0.0; rows.len()]).unwrap();
        let pca = fit_pca2(&data).unwrap();
        let (vals, vecs) = jacobi_eigen(&covariance(&rows));
        let angle = span_angle(&pca.components, &vecs[..2]);
        assert!(angle < 1e-3, "span angle {angle}");
        for (got, want) in pca.explained_variance.iter().zip(&vals) {
            assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn kfold_and_split_are_seeded() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
    let ys: Vec<f64> = (0..12).map(|i| (i * i) as f64).collect();
    let data = Dataset::new(rows, ys).unwrap();
    let (a, b) = split_train_test(&data, 42).unwrap();
    let (c, d) = split_train_test(&data, 42).unwrap();
    assert_eq!((a.features(), b.features()), (c.features(), d.features()));
    assert_eq!(a.n_samples(), 10);
    let r1 = kfold_mae(&data, 4, 7, fit_linear).unwrap();
    let r2 = kfold_mae(&data, 4, 7, fit_linear).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.fold_maes.len(), 4);
}
