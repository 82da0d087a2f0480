//! Independent reference implementations used as test oracles. Nothing here
//! calls into the fitters under test.
#![allow(dead_code)]

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let q = b.len();
    for col in 0..q {
        let piv = (col..q)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..q {
            let f = a[row][col] / a[col][col];
            for k in col..q {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; q];
    for row in (0..q).rev() {
        let s: f64 = ((row + 1)..q).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn gauss_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let q = a.len();
    let cols: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            gauss_solve(a.to_vec(), e)
        })
        .collect();
    (0..q).map(|i| (0..q).map(|j| cols[j][i]).collect()).collect()
}

/// Normal-equation least squares on row-major `x`: returns (beta, cov) with
/// `cov = RSS / (n - q) * (X'X)^-1`.
pub fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let q = x[0].len();
    let n = x.len();
    let mut xtx = vec![vec![0.0; q]; q];
    let mut xty = vec![0.0; q];
    for (row, yi) in x.iter().zip(y) {
        for a in 0..q {
            xty[a] += row[a] * yi;
            for b in 0..q {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    let beta = gauss_solve(xtx.clone(), xty);
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, yi)| {
            let f: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - f) * (yi - f)
        })
        .sum();
    let s2 = rss / (n - q) as f64;
    let inv = gauss_inverse(&xtx);
    let cov = inv
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * s2).collect())
        .collect();
    (beta, cov)
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum GlmKind {
    Logistic,
    Poisson,
}

/// Plain Newton iteration on the analytic score/Hessian of the logistic or
/// Poisson log-likelihood; returns (beta, inverse information).
pub fn newton_oracle(
    kind: GlmKind,
    x: &[Vec<f64>],
    y: &[f64],
    offset: Option<&[f64]>,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let q = x[0].len();
    let mut beta = vec![0.0; q];
    let mut info = vec![vec![0.0; q]; q];
    for _ in 0..200 {
        let mut grad = vec![0.0; q];
        info = vec![vec![0.0; q]; q];
        for (i, row) in x.iter().enumerate() {
            let mut eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            if let Some(t) = offset {
                eta += t[i].ln();
            }
            let (mu, w) = match kind {
                GlmKind::Logistic => {
                    let m = 1.0 / (1.0 + (-eta).exp());
                    (m, m * (1.0 - m))
                }
                GlmKind::Poisson => (eta.exp(), eta.exp()),
            };
            for a in 0..q {
                grad[a] += row[a] * (y[i] - mu);
                for b in 0..q {
                    info[a][b] += w * row[a] * row[b];
                }
            }
        }
        let step = gauss_solve(info.clone(), grad.clone());
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if step.iter().all(|s| s.abs() < 1e-14) {
            break;
        }
    }
    (beta, gauss_inverse(&info))
}

/// Breslow log partial likelihood by brute force over risk sets.
pub fn cox_loglik_bruteforce(time: &[f64], event: &[bool], x: &[Vec<f64>], beta: &[f64]) -> f64 {
    let eta: Vec<f64> = x
        .iter()
        .map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let mut ll = 0.0;
    for i in 0..time.len() {
        if !event[i] {
            continue;
        }
        let denom: f64 = (0..time.len())
            .filter(|&j| time[j] >= time[i])
            .map(|j| eta[j].exp())
            .sum();
        ll += eta[i] - denom.ln();
    }
    ll
}

/// Maximizes a unimodal function on `[lo, hi]` by a grid scan followed by
/// golden-section refinement.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let grid = 400;
    let h = (hi - lo) / grid as f64;
    let best = (0..=grid)
        .map(|k| lo + k as f64 * h)
        .max_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = (best - h, best + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    0.5 * (a + b)
}
