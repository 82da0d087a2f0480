use serde::{Deserialize, Serialize};

use crate::data::{allele_counts, GenotypeMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    /// Pairs with squared correlation at or above this value are not tested.
    pub r2_max: f64,
    pub min_variance: f64,
    /// Applied to `min(f, 1 - f)` with `f` the column mean over 2.
    pub min_maf: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            r2_max: 0.9,
            min_variance: 1e-3,
            min_maf: 0.01,
        }
    }
}

impl QualityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r2_max > 0.0 && self.r2_max <= 1.0) {
            return Err(Error::Config(format!("r2_max = {} must be in (0, 1]", self.r2_max)));
        }
        if !(self.min_variance >= 0.0 && self.min_variance.is_finite()) {
            return Err(Error::Config("min_variance must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.min_maf) {
            return Err(Error::Config(format!("min_maf = {} must be in [0, 0.5)", self.min_maf)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QualityFlag {
    Ok,
    LowVariance,
    LowMaf,
    PairCollinear,
    FitFailed,
}

impl QualityFlag {
    pub fn is_ok(self) -> bool {
        self == QualityFlag::Ok
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityFlag::Ok => "ok",
            QualityFlag::LowVariance => "low_variance",
            QualityFlag::LowMaf => "low_maf",
            QualityFlag::PairCollinear => "pair_collinear",
            QualityFlag::FitFailed => "fit_failed",
        }
    }
}

impl std::fmt::Display for QualityFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Single-marker check on the raw allele counts.
pub fn marker_quality(geno: &GenotypeMatrix, j: usize, config: &QualityConfig) -> QualityFlag {
    if geno.variance(j) < config.min_variance || geno.variance(j) == 0.0 {
        return QualityFlag::LowVariance;
    }
    let f = geno.maf(j);
    if f.min(1.0 - f) < config.min_maf {
        return QualityFlag::LowMaf;
    }
    QualityFlag::Ok
}

/// Pair check on raw allele counts: marker checks on both columns, then the
/// variance of the product column, then squared correlations among
/// `x_k`, `x_l` and `x_k x_l`.
pub fn quality_check(geno: &GenotypeMatrix, k: usize, l: usize, config: &QualityConfig) -> QualityFlag {
    let table = PairTable::direct(geno.column(k), geno.column(l));
    let raw = [0.0, 1.0, 2.0];
    pair_quality(geno, k, l, &table, &raw, &raw, config)
}

pub(crate) fn pair_quality(
    geno: &GenotypeMatrix,
    k: usize,
    l: usize,
    table: &PairTable,
    values_k: &[f64; 3],
    values_l: &[f64; 3],
    config: &QualityConfig,
) -> QualityFlag {
    for j in [k, l] {
        let flag = marker_quality(geno, j, config);
        if !flag.is_ok() {
            return flag;
        }
    }
    let m = table.moments(values_k, values_l);
    if m.var_w < config.min_variance || m.var_w == 0.0 {
        return QualityFlag::LowVariance;
    }
    let r2 = |c: f64, va: f64, vb: f64| c * c / (va * vb);
    if k == l
        || r2(m.cov_xy, m.var_x, m.var_y) >= config.r2_max
        || r2(m.cov_xw, m.var_x, m.var_w) >= config.r2_max
        || r2(m.cov_yw, m.var_y, m.var_w) >= config.r2_max
    {
        return QualityFlag::PairCollinear;
    }
    QualityFlag::Ok
}

/// 3x3 genotype contingency table of a marker pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PairTable {
    pub counts: [[usize; 3]; 3],
}

pub(crate) struct PairMoments {
    pub var_x: f64,
    pub var_y: f64,
    pub var_w: f64,
    pub cov_xy: f64,
    pub cov_xw: f64,
    pub cov_yw: f64,
}

impl PairTable {
    pub fn direct(a: &[u8], b: &[u8]) -> Self {
        let mut counts = [[0usize; 3]; 3];
        for (&x, &y) in a.iter().zip(b) {
            counts[x as usize][y as usize] += 1;
        }
        PairTable { counts }
    }

    /// Population moments of `x = u[g_k]`, `y = v[g_l]` and `w = x y`.
    pub fn moments(&self, u: &[f64; 3], v: &[f64; 3]) -> PairMoments {
        let mut n = 0.0;
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for a in 0..3 {
            for b in 0..3 {
                let c = self.counts[a][b] as f64;
                n += c;
                sx += c * u[a];
                sy += c * v[b];
                sw += c * u[a] * v[b];
            }
        }
        let (mx, my, mw) = (sx / n, sy / n, sw / n);
        let mut m = PairMoments {
            var_x: 0.0,
            var_y: 0.0,
            var_w: 0.0,
            cov_xy: 0.0,
            cov_xw: 0.0,
            cov_yw: 0.0,
        };
        for a in 0..3 {
            for b in 0..3 {
                let c = self.counts[a][b] as f64 / n;
                let (dx, dy, dw) = (u[a] - mx, v[b] - my, u[a] * v[b] - mw);
                m.var_x += c * dx * dx;
                m.var_y += c * dy * dy;
                m.var_w += c * dw * dw;
                m.cov_xy += c * dx * dy;
                m.cov_xw += c * dx * dw;
                m.cov_yw += c * dy * dw;
            }
        }
        m
    }
}

/// Bit planes `g == 1` and `g == 2` per column, for fast pair tables.
#[derive(Debug, Clone)]
pub(crate) struct GenotypeBits {
    n: usize,
    words: usize,
    ones: Vec<u64>,
    twos: Vec<u64>,
    counts: Vec<[usize; 3]>,
}

impl GenotypeBits {
    pub fn new(geno: &GenotypeMatrix) -> Self {
        let n = geno.nrows();
        let words = n.div_ceil(64);
        let p = geno.ncols();
        let mut ones = vec![0u64; words * p];
        let mut twos = vec![0u64; words * p];
        let mut counts = Vec::with_capacity(p);
        for j in 0..p {
            let col = geno.column(j);
            for (i, &g) in col.iter().enumerate() {
                let bit = 1u64 << (i % 64);
                match g {
                    1 => ones[j * words + i / 64] |= bit,
                    2 => twos[j * words + i / 64] |= bit,
                    _ => {}
                }
            }
            counts.push(allele_counts(col));
        }
        GenotypeBits {
            n,
            words,
            ones,
            twos,
            counts,
        }
    }

    pub fn table(&self, k: usize, l: usize) -> PairTable {
        let w = self.words;
        let (a1, a2) = (&self.ones[k * w..(k + 1) * w], &self.twos[k * w..(k + 1) * w]);
        let (b1, b2) = (&self.ones[l * w..(l + 1) * w], &self.twos[l * w..(l + 1) * w]);
        let mut c = [[0usize; 3]; 3];
        for i in 0..w {
            c[1][1] += (a1[i] & b1[i]).count_ones() as usize;
            c[1][2] += (a1[i] & b2[i]).count_ones() as usize;
            c[2][1] += (a2[i] & b1[i]).count_ones() as usize;
            c[2][2] += (a2[i] & b2[i]).count_ones() as usize;
        }
        let (ra, cb) = (self.counts[k], self.counts[l]);
        c[1][0] = ra[1] - c[1][1] - c[1][2];
        c[2][0] = ra[2] - c[2][1] - c[2][2];
        c[0][1] = cb[1] - c[1][1] - c[2][1];
        c[0][2] = cb[2] - c[1][2] - c[2][2];
        c[0][0] = self.n - c[1][0] - c[2][0] - c[0][1] - c[0][2] - c[1][1] - c[1][2] - c[2][1] - c[2][2];
        PairTable { counts: c }
    }
}
