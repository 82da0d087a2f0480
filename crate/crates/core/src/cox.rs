//! Cox proportional-hazards regression by Newton-Raphson on the Breslow
//! log partial likelihood.
//!
//! A subject is at risk at time `t` when `T_i >= t`, so it belongs to the
//! risk set of its own event. Tied event times share a risk set (Breslow).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::{no_worse, step_is_negligible, wald_test, ConvergenceControl, FitResult, WaldTest};
use crate::linalg::SpdFactor;

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalData {
    time: Arc<[f64]>,
    event: Arc<[bool]>,
    /// Indices sorted by ascending time, events before censorings at ties.
    order: Arc<[usize]>,
    sorted_time: Arc<[f64]>,
    sorted_event: Arc<[bool]>,
    /// Column-major `n x q`, no intercept column.
    covariates: Vec<f64>,
    /// Row-major `n x q` copy in sort order, for the risk-set sweep.
    sorted: Vec<f64>,
    q: usize,
}

impl SurvivalData {
    pub fn new(time: Vec<f64>, event: Vec<bool>, covariates: Vec<Vec<f64>>) -> Result<Self> {
        let n = time.len();
        if event.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} times but {} event indicators",
                n,
                event.len()
            )));
        }
        if let Some(i) = time.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidResponse(format!(
                "survival time {i} is not positive"
            )));
        }
        if !event.iter().any(|&e| e) {
            return Err(Error::NoEvents);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| time[a].total_cmp(&time[b]).then(event[b].cmp(&event[a])));
        let sorted_time: Vec<f64> = order.iter().map(|&i| time[i]).collect();
        let sorted_event: Vec<bool> = order.iter().map(|&i| event[i]).collect();
        let skeleton = SurvivalData {
            time: time.into(),
            event: event.into(),
            order: order.into(),
            sorted_time: sorted_time.into(),
            sorted_event: sorted_event.into(),
            covariates: Vec::new(),
            sorted: Vec::new(),
            q: 0,
        };
        skeleton.with_covariates(covariates)
    }

    /// Reuses the time/event data and its sort order with a new set of
    /// covariate columns.
    pub fn with_covariates(&self, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.time.len();
        let q = columns.len();
        let mut covariates = Vec::with_capacity(n * q);
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "covariate {j} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().all(|&v| v == col[0]) {
                return Err(Error::NoInformation { column: j });
            }
            covariates.extend(col);
        }
        let mut sorted = Vec::with_capacity(n * q);
        for &i in self.order.iter() {
            sorted.extend((0..q).map(|j| covariates[j * n + i]));
        }
        Ok(SurvivalData {
            time: Arc::clone(&self.time),
            event: Arc::clone(&self.event),
            order: Arc::clone(&self.order),
            sorted_time: Arc::clone(&self.sorted_time),
            sorted_event: Arc::clone(&self.sorted_event),
            covariates,
            sorted,
            q,
        })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn ncovariates(&self) -> usize {
        self.q
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn covariate(&self, j: usize) -> &[f64] {
        let n = self.len();
        &self.covariates[j * n..(j + 1) * n]
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }
}

/// Risk-set sums at one distinct event time:
/// `S0 = sum_j Y_j exp(eta_j)`, `S1 = sum_j Y_j exp(eta_j) X_j`,
/// `S2 = sum_j Y_j exp(eta_j) X_j X_j'`.
///
/// The sums are unnormalized and scaled by a common factor `exp(-shift)`,
/// which cancels in every ratio the fitter uses.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSetAccumulators {
    pub time: f64,
    pub events: usize,
    pub s0: f64,
    pub s1: DVector<f64>,
    pub s2: DMatrix<f64>,
}

struct Derivatives {
    loglik: f64,
    score: DVector<f64>,
    information: DMatrix<f64>,
}

/// Walks the subjects from the latest time backwards, calling `visit` once
/// per distinct event time with the accumulated risk-set sums and the sort
/// positions of the events at that time. `eta` is indexed by sort position.
fn sweep_risk_sets(
    data: &SurvivalData,
    beta: &[f64],
    with_s2: bool,
    mut visit: impl FnMut(&RiskSetAccumulators, &[usize], &[f64], f64),
) {
    let n = data.len();
    let q = data.q;
    let rows = &data.sorted;
    let eta: Vec<f64> = (0..n)
        .map(|pos| rows[pos * q..(pos + 1) * q].iter().zip(beta).map(|(x, b)| x * b).sum())
        .collect();
    let shift = eta.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e));

    let mut acc = RiskSetAccumulators {
        time: f64::INFINITY,
        events: 0,
        s0: 0.0,
        s1: DVector::zeros(q),
        s2: DMatrix::zeros(q, q),
    };
    let mut s1 = vec![0.0; q];
    let mut s2 = vec![0.0; q * q];
    let mut tied_events = Vec::new();
    let (time, event) = (&data.sorted_time, &data.sorted_event);
    let mut pos = n;
    while pos > 0 {
        let t = time[pos - 1];
        tied_events.clear();
        while pos > 0 && time[pos - 1] == t {
            pos -= 1;
            let r = (eta[pos] - shift).exp();
            let x = &rows[pos * q..(pos + 1) * q];
            acc.s0 += r;
            for a in 0..q {
                let rx = r * x[a];
                s1[a] += rx;
                if with_s2 {
                    for b in a..q {
                        s2[a * q + b] += rx * x[b];
                    }
                }
            }
            if event[pos] {
                tied_events.push(pos);
            }
        }
        if !tied_events.is_empty() {
            acc.time = t;
            acc.events = tied_events.len();
            acc.s1.copy_from_slice(&s1);
            if with_s2 {
                for a in 0..q {
                    for b in a..q {
                        acc.s2[(a, b)] = s2[a * q + b];
                        acc.s2[(b, a)] = s2[a * q + b];
                    }
                }
            }
            visit(&acc, &tied_events, &eta, shift);
        }
    }
}

/// Risk-set accumulators at every distinct event time, latest first.
pub fn risk_set_accumulators(data: &SurvivalData, beta: &[f64]) -> Vec<RiskSetAccumulators> {
    let mut out = Vec::new();
    sweep_risk_sets(data, beta, true, |acc, _, _, _| out.push(acc.clone()));
    out
}

/// Breslow log partial likelihood at `beta`.
pub fn log_partial_likelihood(data: &SurvivalData, beta: &[f64]) -> f64 {
    derivatives(data, beta, false).loglik
}

/// Analytic score and observed information of the log partial likelihood.
pub fn score_and_information(data: &SurvivalData, beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let d = derivatives(data, beta, true);
    (d.score, d.information)
}

fn derivatives(data: &SurvivalData, beta: &[f64], with_info: bool) -> Derivatives {
    let q = data.q;
    let mut loglik = 0.0;
    let mut score = DVector::zeros(q);
    let mut information = DMatrix::zeros(q, q);
    let mut mean = vec![0.0; q];
    sweep_risk_sets(data, beta, with_info, |acc, events, eta, shift| {
        let d = acc.events as f64;
        let log_s0 = acc.s0.ln() + shift;
        for (m, s1) in mean.iter_mut().zip(acc.s1.iter()) {
            *m = s1 / acc.s0;
        }
        for &pos in events {
            loglik += eta[pos] - log_s0;
            let x = &data.sorted[pos * q..(pos + 1) * q];
            for a in 0..q {
                score[a] += x[a] - mean[a];
            }
        }
        if with_info {
            // d * (S2/S0 - S1 S1' / S0^2)
            for a in 0..q {
                for b in 0..q {
                    information[(a, b)] += d * (acc.s2[(a, b)] / acc.s0 - mean[a] * mean[b]);
                }
            }
        }
    });
    Derivatives {
        loglik,
        score,
        information,
    }
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Maximizes the log partial likelihood by Newton-Raphson with step-halving.
pub fn fit_cox(data: &SurvivalData, control: &ConvergenceControl) -> Result<FitResult> {
    let q = data.q;
    let events = data.n_events();
    if events == 0 {
        return Err(Error::NoEvents);
    }
    if events < q + 1 {
        return Err(Error::InvalidInput(format!(
            "Cox fit needs at least q + 1 = {} events, found {events}",
            q + 1
        )));
    }
    let singular = || Error::SingularInformation("partial-likelihood information".into());

    let mut beta = vec![0.0; q];
    let mut d = derivatives(data, &beta, true);
    let mut converged = false;
    let mut iterations = 0;
    let mut degenerate = false;

    while iterations < control.max_iter {
        let polishing = max_abs(&d.score) < control.tol;
        iterations += 1;
        let Some(factor) = SpdFactor::new(d.information.clone()) else {
            degenerate = true;
            break;
        };
        let step = factor.solve(&d.score);
        let mut scale = 1.0;
        let mut halvings = 0;
        let (cand, cand_d) = loop {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let cd = derivatives(data, &cand, true);
            if polishing || no_worse(cd.loglik, d.loglik) || halvings >= control.max_step_halvings {
                break (cand, cd);
            }
            scale *= 0.5;
            halvings += 1;
        };
        let rel_change = (cand_d.loglik - d.loglik).abs() / d.loglik.abs().max(1.0);
        let settled = step_is_negligible(&step, &beta);
        let previous_score = max_abs(&d.score);
        beta = cand;
        d = cand_d;
        if polishing {
            converged = true;
            break;
        }
        if rel_change < control.rel_loglik_tol && settled && max_abs(&d.score) >= previous_score {
            converged = max_abs(&d.score).is_finite();
            break;
        }
    }
    if !converged && max_abs(&d.score) < control.tol {
        converged = true;
    }

    let separation_suspected = beta.iter().any(|b| b.abs() > control.separation_bound);
    let (cov_hat, condition) = match SpdFactor::new(d.information.clone()) {
        Some(f) => (f.inverse(), f.condition),
        // a monotone partial likelihood drives the information to zero
        None if separation_suspected || degenerate => (DMatrix::from_element(q, q, f64::NAN), f64::INFINITY),
        None => return Err(singular()),
    };
    Ok(FitResult {
        beta_hat: beta,
        cov_hat,
        loglik: d.loglik,
        iterations,
        converged: converged && !separation_suspected && !degenerate,
        sigma2_hat: None,
        score_norm: max_abs(&d.score),
        separation_suspected: separation_suspected || degenerate,
        condition,
    })
}

/// Wald test on a Cox coefficient; same contract as [`wald_test`].
pub fn cox_wald_test(fit: &FitResult, coef_index: usize) -> Result<WaldTest> {
    wald_test(fit, coef_index)
}
