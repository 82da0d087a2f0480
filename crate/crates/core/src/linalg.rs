//! Symmetric positive-definite solves for the small normal-equation and
//! information matrices used by the fitters.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Condition-number estimate above which a fit is flagged as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e12;

/// Beyond this the factorization is treated as singular at working precision.
const CONDITION_SINGULAR: f64 = 1e15;

pub(crate) struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    pub condition: f64,
}

impl SpdFactor {
    /// Factorizes a symmetric matrix; `None` if it is not numerically
    /// positive definite.
    pub fn new(m: DMatrix<f64>) -> Option<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let chol = m.cholesky()?;
        let diag = chol.l_dirty().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for d in diag.iter() {
            lo = lo.min(d.abs());
            hi = hi.max(d.abs());
        }
        if lo <= 0.0 {
            return None;
        }
        // squared ratio of Cholesky pivots; a cheap lower bound on cond(m)
        let condition = (hi / lo).powi(2);
        if condition > CONDITION_SINGULAR {
            return None;
        }
        Some(SpdFactor { chol, condition })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.chol.inverse();
        symmetrize(&mut inv);
        inv
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let q = m.nrows();
    for i in 0..q {
        for j in (i + 1)..q {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
