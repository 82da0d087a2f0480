//! Maximum-likelihood fitting of canonical-link GLMs (Gaussian, logistic,
//! Poisson with offset) and Wald tests on single coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{SpdFactor, CONDITION_WARNING};
use crate::stats::two_sided_normal_p;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    Logistic,
    /// Poisson counts with a per-observation exposure `t`, `log E[Y] = log t + x'b`.
    PoissonOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColumnRole {
    Intercept,
    Fixed,
    Tested,
    Interaction,
}

/// Column-major `n x q` design. Column 0 is the intercept; roles are ordered
/// intercept, fixed covariates, tested covariates, interaction products.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    data: Vec<f64>,
    roles: Vec<ColumnRole>,
}

impl DesignMatrix {
    pub fn builder(n: usize) -> DesignBuilder {
        DesignBuilder {
            n,
            data: vec![1.0; n],
            roles: vec![ColumnRole::Intercept],
        }
    }

    /// Builds a design from row vectors whose first entry is the intercept;
    /// remaining columns are tagged as tested covariates.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInput("design has no rows".into()));
        }
        let q = rows[0].len();
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::DimensionMismatch("ragged design rows".into()));
        }
        let mut data = Vec::with_capacity(n * q);
        for j in 0..q {
            data.extend(rows.iter().map(|r| r[j]));
        }
        let mut roles = vec![ColumnRole::Tested; q];
        if q > 0 {
            roles[0] = ColumnRole::Intercept;
        }
        Self::from_columns(n, data, roles)
    }

    pub fn from_columns(n: usize, data: Vec<f64>, roles: Vec<ColumnRole>) -> Result<Self> {
        let q = roles.len();
        if data.len() != n * q {
            return Err(Error::DimensionMismatch(format!(
                "design data has {} entries, expected {n} x {q}",
                data.len()
            )));
        }
        if q == 0 || roles[0] != ColumnRole::Intercept {
            return Err(Error::InvalidInput("column 0 must be the intercept".into()));
        }
        if roles[1..].iter().any(|r| *r == ColumnRole::Intercept) || !roles.is_sorted() {
            return Err(Error::InvalidInput(
                "column roles must be ordered intercept, fixed, tested, interaction".into(),
            ));
        }
        if n < q + 1 {
            return Err(Error::InvalidInput(format!(
                "design needs n >= q + 1 (n = {n}, q = {q})"
            )));
        }
        if data[..n].iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidInput("intercept column must be all ones".into()));
        }
        let design = DesignMatrix { n, data, roles };
        for j in 1..q {
            let col = design.column(j);
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(Error::ZeroVariance { column: j });
            }
        }
        Ok(design)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.roles.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn roles(&self) -> &[ColumnRole] {
        &self.roles
    }

    fn linear_predictor(&self, beta: &[f64], offsets: Option<&[f64]>) -> Vec<f64> {
        let logs: Option<Vec<f64>> = offsets.map(|t| t.iter().map(|t| t.ln()).collect());
        self.linear_predictor_log(beta, logs.as_deref())
    }

    fn linear_predictor_log(&self, beta: &[f64], log_offsets: Option<&[f64]>) -> Vec<f64> {
        let mut eta = match log_offsets {
            Some(l) => l.to_vec(),
            None => vec![0.0; self.n],
        };
        for (j, b) in beta.iter().enumerate() {
            for (e, x) in eta.iter_mut().zip(self.column(j)) {
                *e += b * x;
            }
        }
        eta
    }

    /// `X' diag(w) X`
    fn weighted_gram(&self, w: Option<&[f64]>) -> DMatrix<f64> {
        let q = self.ncols();
        let mut g = DMatrix::zeros(q, q);
        for a in 0..q {
            let ca = self.column(a);
            for b in a..q {
                let cb = self.column(b);
                let s: f64 = match w {
                    Some(w) => ca.iter().zip(cb).zip(w).map(|((x, y), w)| x * y * w).sum(),
                    None => ca.iter().zip(cb).map(|(x, y)| x * y).sum(),
                };
                g[(a, b)] = s;
                g[(b, a)] = s;
            }
        }
        g
    }

    fn cross(&self, v: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.ncols(),
            (0..self.ncols()).map(|j| self.column(j).iter().zip(v).map(|(x, v)| x * v).sum()),
        )
    }
}

pub struct DesignBuilder {
    n: usize,
    data: Vec<f64>,
    roles: Vec<ColumnRole>,
}

impl DesignBuilder {
    pub fn column(mut self, role: ColumnRole, values: impl IntoIterator<Item = f64>) -> Self {
        let before = self.data.len();
        self.data.extend(values);
        debug_assert_eq!(self.data.len() - before, self.n);
        self.roles.push(role);
        self
    }

    pub fn fixed(self, values: impl IntoIterator<Item = f64>) -> Self {
        self.column(ColumnRole::Fixed, values)
    }

    pub fn tested(self, values: impl IntoIterator<Item = f64>) -> Self {
        self.column(ColumnRole::Tested, values)
    }

    pub fn interaction(self, values: impl IntoIterator<Item = f64>) -> Self {
        self.column(ColumnRole::Interaction, values)
    }

    pub fn build(self) -> Result<DesignMatrix> {
        DesignMatrix::from_columns(self.n, self.data, self.roles)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceControl {
    /// Stop when the max-norm of the score falls below this.
    pub tol: f64,
    /// ...or when the relative change in log-likelihood falls below this.
    pub rel_loglik_tol: f64,
    pub max_iter: usize,
    pub max_step_halvings: usize,
    /// Coefficients beyond this magnitude signal (quasi-)separation.
    pub separation_bound: f64,
}

impl Default for ConvergenceControl {
    fn default() -> Self {
        ConvergenceControl {
            tol: 1e-8,
            rel_loglik_tol: 1e-12,
            max_iter: 50,
            max_step_halvings: 10,
            separation_bound: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    /// Estimated covariance of `beta_hat`.
    pub cov_hat: DMatrix<f64>,
    /// Log-likelihood (or log partial likelihood for Cox fits).
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual variance `RSS / (n - q)`, Gaussian fits only.
    pub sigma2_hat: Option<f64>,
    /// Max-norm of the score at `beta_hat`.
    pub score_norm: f64,
    pub separation_suspected: bool,
    /// Condition estimate of the matrix inverted for `cov_hat`.
    pub condition: f64,
}

impl FitResult {
    pub fn ill_conditioned(&self) -> bool {
        self.condition > CONDITION_WARNING
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldTest {
    pub estimate: f64,
    pub std_err: f64,
    pub z: f64,
    pub p_value: f64,
}

impl WaldTest {
    pub fn new(estimate: f64, std_err: f64) -> Self {
        let z = estimate / std_err;
        WaldTest {
            estimate,
            std_err,
            z,
            p_value: two_sided_normal_p(z),
        }
    }
}

/// Wald test of a single coefficient against zero with a standard-normal reference.
pub fn wald_test(fit: &FitResult, coef_index: usize) -> Result<WaldTest> {
    let q = fit.beta_hat.len();
    if coef_index >= q {
        return Err(Error::IndexOutOfRange {
            index: coef_index,
            q,
        });
    }
    let var = fit.cov_hat[(coef_index, coef_index)];
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::DegenerateVariance {
            index: coef_index,
            value: var,
        });
    }
    Ok(WaldTest::new(fit.beta_hat[coef_index], var.sqrt()))
}

fn validate_response(
    design: &DesignMatrix,
    y: &[f64],
    family: Family,
    offsets: Option<&[f64]>,
) -> Result<()> {
    let n = design.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {n} rows",
            y.len()
        )));
    }
    check_response(y, family, offsets)
}

/// Family-specific checks on the response and offsets.
pub fn check_response(y: &[f64], family: Family, offsets: Option<&[f64]>) -> Result<()> {
    let n = y.len();
    match (family, offsets) {
        (Family::PoissonOffset, Some(t)) => {
            if t.len() != n {
                return Err(Error::DimensionMismatch("offsets length".into()));
            }
            if let Some(bad) = t.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(Error::InvalidResponse(format!(
                    "offset {bad} is not strictly positive"
                )));
            }
        }
        (Family::PoissonOffset, None) => {
            return Err(Error::InvalidInput("Poisson family requires offsets".into()))
        }
        (_, Some(_)) => {
            return Err(Error::InvalidInput(
                "offsets are only valid for the Poisson family".into(),
            ))
        }
        (_, None) => {}
    }
    let bad = match family {
        Family::Gaussian => y.iter().position(|v| !v.is_finite()),
        Family::Logistic => y.iter().position(|&v| v != 0.0 && v != 1.0),
        Family::PoissonOffset => y
            .iter()
            .position(|&v| !(v >= 0.0 && v.fract() == 0.0 && v.is_finite())),
    };
    match bad {
        Some(i) => Err(Error::InvalidResponse(format!(
            "observation {i} ({}) is not valid for {family:?}",
            y[i]
        ))),
        None => Ok(()),
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Log-likelihood of a non-Gaussian family at `beta` (full Poisson constant included).
pub fn loglik(
    design: &DesignMatrix,
    y: &[f64],
    family: Family,
    offsets: Option<&[f64]>,
    beta: &[f64],
) -> f64 {
    let eta = design.linear_predictor(beta, offsets);
    loglik_kernel(y, family, &eta) - log_factorial_sum(y, family)
}

fn log_factorial_sum(y: &[f64], family: Family) -> f64 {
    match family {
        Family::PoissonOffset => y.iter().map(|y| ln_gamma(y + 1.0)).sum(),
        _ => 0.0,
    }
}

/// Log-likelihood without the Poisson `log y!` terms.
fn loglik_kernel(y: &[f64], family: Family, eta: &[f64]) -> f64 {
    match family {
        Family::Logistic => y.iter().zip(eta).map(|(y, e)| y * e - softplus(*e)).sum(),
        Family::PoissonOffset => y.iter().zip(eta).map(|(y, e)| y * e - e.exp()).sum(),
        Family::Gaussian => {
            // unit-variance Gaussian kernel; only used by derivative checks
            -0.5 * y.iter().zip(eta).map(|(y, e)| (y - e) * (y - e)).sum::<f64>()
        }
    }
}

fn mean_and_weight(family: Family, eta: f64) -> (f64, f64) {
    match family {
        Family::Logistic => {
            let mu = 1.0 / (1.0 + (-eta).exp());
            (mu, mu * (1.0 - mu))
        }
        Family::PoissonOffset => {
            let mu = eta.exp();
            (mu, mu)
        }
        Family::Gaussian => (eta, 1.0),
    }
}

/// Analytic score `X'(y - mu)` and observed information `X' W X` at `beta`.
pub fn score_and_information(
    design: &DesignMatrix,
    y: &[f64],
    family: Family,
    offsets: Option<&[f64]>,
    beta: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let eta = design.linear_predictor(beta, offsets);
    score_info_from_eta(design, y, family, &eta)
}

fn score_info_from_eta(
    design: &DesignMatrix,
    y: &[f64],
    family: Family,
    eta: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let mut resid = Vec::with_capacity(eta.len());
    let mut w = Vec::with_capacity(eta.len());
    for (yi, &e) in y.iter().zip(eta) {
        let (mu, wi) = mean_and_weight(family, e);
        resid.push(yi - mu);
        w.push(wi);
    }
    (design.cross(&resid), design.weighted_gram(Some(&w)))
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// A flat log-likelihood only ends the iteration once the Newton step itself
/// is negligible; otherwise the quadratic phase is still making progress.
/// Step acceptance with slack for the rounding error of the summed
/// log-likelihood, which near the optimum exceeds the true improvement.
pub(crate) fn no_worse(candidate: f64, current: f64) -> bool {
    candidate.is_finite() && candidate >= current - 64.0 * f64::EPSILON * current.abs().max(1.0)
}

pub(crate) fn step_is_negligible(step: &DVector<f64>, beta: &[f64]) -> bool {
    let scale = beta.iter().fold(1.0f64, |m, b| m.max(b.abs()));
    max_abs(step) < 1e-6 * scale
}

/// Fits a GLM by maximum likelihood.
///
/// Gaussian fits solve the normal equations directly. Logistic and Poisson
/// fits run Newton-Raphson (equivalently IRLS under the canonical link) with
/// step-halving. Hitting the iteration cap is not an error: the result comes
/// back with `converged = false`.
pub fn fit_glm(
    design: &DesignMatrix,
    y: &[f64],
    family: Family,
    offsets: Option<&[f64]>,
    control: &ConvergenceControl,
) -> Result<FitResult> {
    validate_response(design, y, family, offsets)?;
    match family {
        Family::Gaussian => fit_gaussian(design, y),
        _ => fit_newton(design, y, family, offsets, control),
    }
}

fn fit_gaussian(design: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    let n = design.nrows();
    let q = design.ncols();
    let gram = design.weighted_gram(None);
    let factor = SpdFactor::new(gram)
        .ok_or_else(|| Error::SingularDesign("X'X is not positive definite".into()))?;
    let beta = factor.solve(&design.cross(y));
    let fitted = design.linear_predictor(beta.as_slice(), None);
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let mut rss: f64 = resid.iter().map(|r| r * r).sum();
    let yty: f64 = y.iter().map(|v| v * v).sum();
    if rss <= 64.0 * n as f64 * f64::EPSILON * f64::EPSILON * yty {
        // exact fit up to rounding
        rss = 0.0;
    }
    let sigma2 = rss / (n - q) as f64;
    let cov = factor.inverse() * sigma2;
    let score_norm = max_abs(&design.cross(&resid));
    let sigma2_ml = rss / n as f64;
    let loglik = if sigma2_ml > 0.0 {
        -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2_ml).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(FitResult {
        beta_hat: beta.as_slice().to_vec(),
        cov_hat: cov,
        loglik,
        iterations: 0,
        converged: true,
        sigma2_hat: Some(sigma2),
        score_norm,
        separation_suspected: false,
        condition: factor.condition,
    })
}

fn initial_beta(design: &DesignMatrix, y: &[f64], family: Family, offsets: Option<&[f64]>) -> Vec<f64> {
    let mut beta = vec![0.0; design.ncols()];
    let total: f64 = y.iter().sum();
    beta[0] = match family {
        Family::Logistic => {
            let p = (total / y.len() as f64).clamp(1e-4, 1.0 - 1e-4);
            (p / (1.0 - p)).ln()
        }
        Family::PoissonOffset => {
            let exposure: f64 = offsets.map_or(y.len() as f64, |t| t.iter().sum());
            (total.max(0.5) / exposure).ln()
        }
        Family::Gaussian => 0.0,
    };
    beta
}

fn fit_newton(
    design: &DesignMatrix,
    y: &[f64],
    family: Family,
    offsets: Option<&[f64]>,
    control: &ConvergenceControl,
) -> Result<FitResult> {
    let singular = || Error::SingularDesign("Fisher information is not positive definite".into());
    let mut beta = initial_beta(design, y, family, offsets);
    let log_offsets: Option<Vec<f64>> = offsets.map(|t| t.iter().map(|t| t.ln()).collect());
    let log_offsets = log_offsets.as_deref();
    let mut eta = design.linear_predictor_log(&beta, log_offsets);
    let mut ll = loglik_kernel(y, family, &eta);
    let (mut score, mut info) = score_info_from_eta(design, y, family, &eta);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < control.max_iter {
        // once inside tolerance, one more full Newton step polishes beta
        let polishing = max_abs(&score) < control.tol;
        let step = match SpdFactor::new(info.clone()) {
            Some(f) => f.solve(&score),
            None if beta.iter().any(|b| b.abs() > control.separation_bound) => break,
            None => return Err(singular()),
        };
        iterations += 1;
        let mut scale = 1.0;
        let mut halvings = 0;
        let (candidate, cand_eta, cand_ll) = loop {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let e = design.linear_predictor_log(&cand, log_offsets);
            let l = loglik_kernel(y, family, &e);
            if polishing || no_worse(l, ll) || halvings >= control.max_step_halvings {
                break (cand, e, l);
            }
            scale *= 0.5;
            halvings += 1;
        };
        let rel_change = (cand_ll - ll).abs() / ll.abs().max(1.0);
        let settled = step_is_negligible(&step, &beta);
        let previous_score = max_abs(&score);
        beta = candidate;
        eta = cand_eta;
        ll = cand_ll;
        (score, info) = score_info_from_eta(design, y, family, &eta);
        if polishing {
            converged = true;
            break;
        }
        // numerical floor: flat likelihood, tiny step, score no longer shrinking
        if rel_change < control.rel_loglik_tol && settled && max_abs(&score) >= previous_score {
            converged = max_abs(&score).is_finite();
            break;
        }
    }
    if !converged && max_abs(&score) < control.tol {
        converged = true;
    }

    let separation_suspected = beta.iter().any(|b| b.abs() > control.separation_bound);
    let q = beta.len();
    let (cov_hat, condition) = match SpdFactor::new(info) {
        Some(f) => (f.inverse(), f.condition),
        None if separation_suspected => (DMatrix::from_element(q, q, f64::NAN), f64::INFINITY),
        None => return Err(singular()),
    };
    Ok(FitResult {
        cov_hat,
        beta_hat: beta,
        loglik: ll - log_factorial_sum(y, family),
        iterations,
        converged: converged && !separation_suspected,
        sigma2_hat: None,
        score_norm: max_abs(&score),
        separation_suspected,
        condition,
    })
}
