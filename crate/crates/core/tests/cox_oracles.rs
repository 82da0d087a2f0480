mod common;

use common::{cox_loglik_bruteforce, golden_max};
use epistasis::cox::{
    cox_wald_test, fit_cox, log_partial_likelihood, score_and_information, SurvivalData,
};
use epistasis::glm::ConvergenceControl;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// n subjects with one N(0,1) covariate, Weibull(shape 2, scale 1) baseline,
/// uniform censoring.
fn weibull_instance(seed: u64, n: usize, beta: f64) -> (Vec<f64>, Vec<bool>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut time = Vec::new();
    let mut event = Vec::new();
    let mut x = Vec::new();
    for _ in 0..n {
        let xi: f64 = rng.sample(rand_distr::StandardNormal);
        let u: f64 = rng.random();
        let t = (-(1.0 - u).ln() * (-beta * xi).exp()).sqrt();
        let c = rng.random_range(1.0..2.5);
        time.push(t.min(c));
        event.push(t <= c);
        x.push(xi);
    }
    (time, event, x)
}

#[test]
fn all_equal_covariate_loglik_counts_risk_sets() {
    // A zero covariate is rejected as uninformative, so check the beta = 0
    // likelihood of the brute-force oracle against the counting formula and
    // against the implementation on a non-degenerate covariate.
    let time = [1.0, 2.0, 3.0];
    let event = [true; 3];
    let zeros = vec![vec![0.0]; 3];
    let expected = -(3.0f64.ln() + 2.0f64.ln() + 1.0f64.ln());
    assert!((cox_loglik_bruteforce(&time, &event, &zeros, &[0.7]) - expected).abs() < 1e-14);
    let data = SurvivalData::new(time.to_vec(), event.to_vec(), vec![vec![0.0, 1.0, 0.0]]).unwrap();
    assert!((log_partial_likelihood(&data, &[0.0]) - expected).abs() < 1e-14);
}

#[test]
fn one_covariate_fit_matches_golden_section_oracle() {
    let (time, event, x) = weibull_instance(2024, 20, 0.5);
    let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
    let f = |b: f64| cox_loglik_bruteforce(&time, &event, &rows, &[b]);
    let oracle = golden_max(f, -5.0, 5.0);
    let data = SurvivalData::new(time.clone(), event.clone(), vec![x.clone()]).unwrap();
    let fit = fit_cox(&data, &ConvergenceControl::default()).unwrap();
    assert!(fit.converged);
    assert!((fit.beta_hat[0] - oracle).abs() < 1e-6, "{} vs {oracle}", fit.beta_hat[0]);
    assert!((fit.loglik - f(oracle)).abs() < 1e-9);

    // standard error from the numeric curvature of the oracle likelihood
    let h = 1e-4;
    let b = fit.beta_hat[0];
    let curvature = (f(b + h) - 2.0 * f(b) + f(b - h)) / (h * h);
    let se_oracle = (-1.0 / curvature).sqrt();
    let w = cox_wald_test(&fit, 0).unwrap();
    assert!((w.std_err - se_oracle).abs() / se_oracle < 1e-4);
}

#[test]
fn score_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for inst in 0..5 {
        let n = 15 + inst * 5;
        let time: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let event: Vec<bool> = (0..n).map(|i| i == 0 || rng.random_bool(0.8)).collect();
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![cols[0][i], cols[1][i]]).collect();
        let data = SurvivalData::new(time.clone(), event.clone(), cols).unwrap();
        for _ in 0..10 {
            let beta = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let (score, info) = score_and_information(&data, &beta);
            let h = 1e-5;
            for a in 0..2 {
                let mut bp = beta;
                let mut bm = beta;
                bp[a] += h;
                bm[a] -= h;
                let fd = (cox_loglik_bruteforce(&time, &event, &rows, &bp)
                    - cox_loglik_bruteforce(&time, &event, &rows, &bm))
                    / (2.0 * h);
                assert!((score[a] - fd).abs() <= 1e-5 * fd.abs().max(1.0));
                let (sp, _) = score_and_information(&data, &bp);
                let (sm, _) = score_and_information(&data, &bm);
                for b in 0..2 {
                    let fd_info = -(sp[b] - sm[b]) / (2.0 * h);
                    assert!((info[(a, b)] - fd_info).abs() <= 1e-5 * fd_info.abs().max(1.0));
                }
            }
            let ll = log_partial_likelihood(&data, &beta);
            let brute = cox_loglik_bruteforce(&time, &event, &rows, &beta);
            assert!((ll - brute).abs() < 1e-10);
        }
    }
}

#[test]
fn increasing_time_transform_leaves_fit_unchanged() {
    let (time, event, x) = weibull_instance(5, 60, 0.8);
    let x2: Vec<f64> = x.iter().map(|v| v * v - 1.0).collect();
    let c = ConvergenceControl::default();
    let a = fit_cox(&SurvivalData::new(time.clone(), event.clone(), vec![x.clone(), x2.clone()]).unwrap(), &c).unwrap();
    let squared: Vec<f64> = time.iter().map(|t| t * t).collect();
    let b = fit_cox(&SurvivalData::new(squared, event, vec![x, x2]).unwrap(), &c).unwrap();
    for (u, v) in a.beta_hat.iter().zip(&b.beta_hat) {
        assert!((u - v).abs() < 1e-10);
    }
    assert!((a.loglik - b.loglik).abs() < 1e-10);
}

#[test]
fn censoring_after_last_event_does_not_change_fit() {
    // where a subject is censored beyond the last event time is irrelevant
    let (mut time, mut event, mut x) = weibull_instance(8, 40, -0.4);
    let c = ConvergenceControl::default();
    let last_event = time
        .iter()
        .zip(&event)
        .filter(|(_, e)| **e)
        .map(|(t, _)| *t)
        .fold(0.0, f64::max);
    for extra in [0.7, -1.2] {
        time.push(last_event + 0.01);
        event.push(false);
        x.push(extra);
    }
    let late: Vec<f64> = time
        .iter()
        .enumerate()
        .map(|(i, &t)| if t > last_event { last_event + 50.0 + i as f64 } else { t })
        .collect();
    let base = fit_cox(&SurvivalData::new(time, event.clone(), vec![x.clone()]).unwrap(), &c).unwrap();
    let shifted = fit_cox(&SurvivalData::new(late, event, vec![x]).unwrap(), &c).unwrap();
    assert!((base.beta_hat[0] - shifted.beta_hat[0]).abs() < 1e-12);
    assert!((base.loglik - shifted.loglik).abs() < 1e-12);
}

#[test]
fn tied_event_times_use_breslow() {
    let time = vec![1.0, 1.0, 2.0, 2.0, 3.0, 4.0];
    let event = vec![true, true, true, false, true, true];
    let x = vec![0.5, -0.2, 1.0, 0.3, -1.0, 0.0];
    let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
    let data = SurvivalData::new(time.clone(), event.clone(), vec![x]).unwrap();
    for b in [-0.7, 0.0, 0.4] {
        let brute = cox_loglik_bruteforce(&time, &event, &rows, &[b]);
        assert!((log_partial_likelihood(&data, &[b]) - brute).abs() < 1e-12);
    }
}
