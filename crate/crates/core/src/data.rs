//! Genotype matrices, outcomes and fixed covariates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n x p` minor-allele counts in `{0, 1, 2}`, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    n: usize,
    p: usize,
    data: Vec<u8>,
    maf: Vec<f64>,
    variance: Vec<f64>,
    names: Option<Vec<String>>,
}

impl GenotypeMatrix {
    pub fn from_columns(n: usize, columns: Vec<Vec<u8>>) -> Result<Self> {
        let p = columns.len();
        let mut data = Vec::with_capacity(n * p);
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "genotype column {j} has {} entries, expected {n}",
                    col.len()
                )));
            }
            data.extend(col);
        }
        Self::from_column_major(n, p, data)
    }

    pub fn from_column_major(n: usize, p: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "genotype data has {} entries, expected {n} x {p}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&g| g > 2) {
            return Err(Error::InvalidInput(format!(
                "genotype entry (row {}, column {}) is {}, expected 0, 1 or 2",
                pos % n.max(1),
                pos / n.max(1),
                data[pos]
            )));
        }
        let mut maf = Vec::with_capacity(p);
        let mut variance = Vec::with_capacity(p);
        for j in 0..p {
            let col = &data[j * n..(j + 1) * n];
            let counts = allele_counts(col);
            let nf = n as f64;
            let mean = (counts[1] + 2 * counts[2]) as f64 / nf;
            let second = (counts[1] + 4 * counts[2]) as f64 / nf;
            maf.push(mean / 2.0);
            variance.push((second - mean * mean).max(0.0));
        }
        Ok(GenotypeMatrix {
            n,
            p,
            data,
            maf,
            variance,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "{} marker names for {} markers",
                names.len(),
                self.p
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[j * self.n + i]
    }

    /// Allele frequency `mean / 2` of column `j`.
    pub fn maf(&self, j: usize) -> f64 {
        self.maf[j]
    }

    /// Population variance (divisor n) of column `j`.
    pub fn variance(&self, j: usize) -> f64 {
        self.variance[j]
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn marker_name(&self, j: usize) -> String {
        match &self.names {
            Some(names) => names[j].clone(),
            None => format!("m{j}"),
        }
    }
}

pub(crate) fn allele_counts(col: &[u8]) -> [usize; 3] {
    let mut c = [0usize; 3];
    for &g in col {
        c[g as usize] += 1;
    }
    c
}

/// Phenotype data for one of the supported model families.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Real response (linear model) or 0/1 response (logistic model).
    Continuous(Vec<f64>),
    /// Counts with positive exposures for the Poisson-with-offset model.
    Count { y: Vec<f64>, offset: Vec<f64> },
    Survival { time: Vec<f64>, event: Vec<bool> },
}

impl Outcome {
    pub fn len(&self) -> usize {
        match self {
            Outcome::Continuous(y) => y.len(),
            Outcome::Count { y, .. } => y.len(),
            Outcome::Survival { time, .. } => time.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Model family of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Linear,
    Logistic,
    Poisson,
    Cox,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [
        ModelFamily::Linear,
        ModelFamily::Logistic,
        ModelFamily::Poisson,
        ModelFamily::Cox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Linear => "linear",
            ModelFamily::Logistic => "logistic",
            ModelFamily::Poisson => "poisson",
            ModelFamily::Cox => "cox",
        }
    }

    pub fn check_outcome(self, outcome: &Outcome) -> Result<()> {
        let ok = matches!(
            (self, outcome),
            (ModelFamily::Linear | ModelFamily::Logistic, Outcome::Continuous(_))
                | (ModelFamily::Poisson, Outcome::Count { .. })
                | (ModelFamily::Cox, Outcome::Survival { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "outcome type does not match the {} family",
                self.name()
            )))
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "gaussian" => Ok(ModelFamily::Linear),
            "logistic" => Ok(ModelFamily::Logistic),
            "poisson" => Ok(ModelFamily::Poisson),
            "cox" => Ok(ModelFamily::Cox),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Row-aligned real covariates included in every model, column-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedCovariates {
    n: usize,
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl FixedCovariates {
    pub fn none(n: usize) -> Self {
        FixedCovariates {
            n,
            columns: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn new(n: usize, columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch("covariate names".into()));
        }
        if let Some(j) = columns.iter().position(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "fixed covariate {j} has {} rows, expected {n}",
                columns[j].len()
            )));
        }
        Ok(FixedCovariates { n, columns, names })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_matches_data() {
        let g = GenotypeMatrix::from_columns(4, vec![vec![0, 1, 2, 1], vec![2, 2, 2, 2]]).unwrap();
        assert!((g.maf(0) - 0.5).abs() < 1e-12);
        assert!((g.variance(0) - 0.5).abs() < 1e-12);
        assert_eq!(g.maf(1), 1.0);
        assert_eq!(g.variance(1), 0.0);
        assert_eq!(g.get(2, 0), 2);
    }

    #[test]
    fn rejects_out_of_range_entries() {
        let err = GenotypeMatrix::from_columns(2, vec![vec![0, 1], vec![3, 0]]).unwrap_err();
        assert!(err.to_string().contains("row 0, column 1"));
    }
}
