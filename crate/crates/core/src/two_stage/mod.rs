//! Two-stage interaction scan: marginal screening of every marker, then
//! Bonferroni-corrected interaction tests among the markers that survive.
//!
//! [`ScanContext`] holds the per-dataset state (validated outcome, bit planes
//! for the pair quality check, survival sort order) and exposes the single
//! marker and single pair tests the drivers are built from.

mod quality;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cox::{cox_wald_test, fit_cox, SurvivalData};
use crate::data::{FixedCovariates, GenotypeMatrix, ModelFamily, Outcome};
use crate::error::{Error, Result};
use crate::glm::{check_response, fit_glm, wald_test, ColumnRole, ConvergenceControl, DesignMatrix, Family, WaldTest};

pub use quality::{marker_quality, quality_check, QualityConfig, QualityFlag};
use quality::{pair_quality, GenotypeBits};

/// Stage-1 significance level, shared or per marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stage1Threshold {
    Scalar(f64),
    PerMarker(Vec<f64>),
}

impl Stage1Threshold {
    pub fn get(&self, j: usize) -> f64 {
        match self {
            Stage1Threshold::Scalar(a) => *a,
            Stage1Threshold::PerMarker(v) => v[j],
        }
    }

    /// `p * alpha1`, or the sum of the per-marker levels.
    pub fn expected_selected(&self, p: usize) -> f64 {
        match self {
            Stage1Threshold::Scalar(a) => p as f64 * a,
            Stage1Threshold::PerMarker(v) => v.iter().sum(),
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let ok = |a: f64| a > 0.0 && a <= 1.0;
        match self {
            Stage1Threshold::Scalar(a) if !ok(*a) => {
                Err(Error::Config(format!("stage-1 threshold {a} must be in (0, 1]")))
            }
            Stage1Threshold::PerMarker(v) if v.len() != p => Err(Error::Config(format!(
                "{} stage-1 thresholds for {p} markers",
                v.len()
            ))),
            Stage1Threshold::PerMarker(v) => match v.iter().position(|a| !ok(*a)) {
                Some(j) => Err(Error::Config(format!(
                    "stage-1 threshold of marker {j} ({}) must be in (0, 1]",
                    v[j]
                ))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// How the stage-2 Bonferroni divisor is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum K1Mode {
    /// Number of pairs actually tested.
    #[default]
    Observed,
    /// `ceil((p alpha1)^2)`, at least 1.
    Deterministic,
}

impl std::str::FromStr for K1Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "observed" => Ok(K1Mode::Observed),
            "deterministic" => Ok(K1Mode::Deterministic),
            other => Err(Error::Config(format!("unknown k1 mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for K1Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            K1Mode::Observed => "observed",
            K1Mode::Deterministic => "deterministic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub family: ModelFamily,
    /// Family-wise error level.
    pub alpha: f64,
    pub stage1_threshold: Stage1Threshold,
    /// Empty, or row-aligned with the genotypes.
    pub fixed: FixedCovariates,
    pub quality: QualityConfig,
    pub k1_mode: K1Mode,
    /// Center and scale every marker before fitting; products are formed
    /// from the standardized columns.
    pub standardize: bool,
    pub control: ConvergenceControl,
}

impl ScanConfig {
    pub fn new(family: ModelFamily) -> Self {
        ScanConfig {
            family,
            alpha: 0.05,
            stage1_threshold: Stage1Threshold::Scalar(0.05),
            fixed: FixedCovariates::none(0),
            quality: QualityConfig::default(),
            k1_mode: K1Mode::Observed,
            standardize: false,
            control: ConvergenceControl::default(),
        }
    }

    pub fn with_stage1(mut self, alpha1: f64) -> Self {
        self.stage1_threshold = Stage1Threshold::Scalar(alpha1);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerScreen {
    pub index: usize,
    pub z: f64,
    pub p_value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub flag: QualityFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenResult {
    pub markers: Vec<MarkerScreen>,
    /// Indices of passing markers, ascending.
    pub selected: Vec<usize>,
    /// Quality-passing pairs among `selected`.
    pub k1: usize,
    /// `p alpha1` (or the sum of per-marker levels), for the deterministic divisor.
    pub expected_selected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResult {
    pub k: usize,
    pub l: usize,
    pub estimate: f64,
    pub std_err: f64,
    pub z: f64,
    pub raw_p: f64,
    pub corrected_p: f64,
    pub significant: bool,
    pub flag: QualityFlag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub screen: ScreenResult,
    /// Every pair of selected markers in lexicographic order; pairs that were
    /// not tested carry NaN statistics and a non-ok flag.
    pub pairs: Vec<PairResult>,
    pub k1_mode: K1Mode,
    /// Bonferroni divisor actually applied.
    pub k1_effective: usize,
    /// `alpha / k1_effective`; `None` when no pair was tested.
    pub alpha2: Option<f64>,
    pub any_rejection: bool,
}

impl ScanReport {
    pub fn significant_pairs(&self) -> impl Iterator<Item = &PairResult> {
        self.pairs.iter().filter(|r| r.significant)
    }
}

/// Outcome of one marker or pair test: a Wald test of the last coefficient,
/// or the reason no test was made.
pub type TestOutcome = std::result::Result<WaldTest, QualityFlag>;

pub struct ScanContext<'a> {
    geno: &'a GenotypeMatrix,
    outcome: &'a Outcome,
    config: &'a ScanConfig,
    values: Vec<[f64; 3]>,
    bits: GenotypeBits,
    survival: Option<SurvivalData>,
}

impl<'a> ScanContext<'a> {
    pub fn new(geno: &'a GenotypeMatrix, outcome: &'a Outcome, config: &'a ScanConfig) -> Result<Self> {
        let (n, p) = (geno.nrows(), geno.ncols());
        if p == 0 || n == 0 {
            return Err(Error::InvalidInput(format!("empty genotype matrix ({n} x {p})")));
        }
        if outcome.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes for {n} genotype rows",
                outcome.len()
            )));
        }
        if config.fixed.ncols() > 0 && config.fixed.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} fixed-covariate rows for {n} genotype rows",
                config.fixed.nrows()
            )));
        }
        if !(config.alpha > 0.0 && config.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha = {} must be in (0, 1]", config.alpha)));
        }
        config.stage1_threshold.validate(p)?;
        config.quality.validate()?;
        config.family.check_outcome(outcome)?;
        let survival = match outcome {
            Outcome::Continuous(y) => {
                let fam = glm_family(config.family);
                check_response(y, fam, None)?;
                None
            }
            Outcome::Count { y, offset } => {
                check_response(y, Family::PoissonOffset, Some(offset))?;
                None
            }
            Outcome::Survival { time, event } => {
                Some(SurvivalData::new(time.clone(), event.clone(), Vec::new())?)
            }
        };
        let values = (0..p)
            .map(|j| {
                let sd = geno.variance(j).sqrt();
                if config.standardize && sd > 0.0 {
                    let mean = 2.0 * geno.maf(j);
                    [-mean / sd, (1.0 - mean) / sd, (2.0 - mean) / sd]
                } else {
                    [0.0, 1.0, 2.0]
                }
            })
            .collect();
        Ok(ScanContext {
            geno,
            outcome,
            config,
            values,
            bits: GenotypeBits::new(geno),
            survival,
        })
    }

    pub fn genotypes(&self) -> &GenotypeMatrix {
        self.geno
    }

    pub fn config(&self) -> &ScanConfig {
        self.config
    }

    fn marker_values(&self, j: usize) -> Vec<f64> {
        let map = &self.values[j];
        self.geno.column(j).iter().map(|&g| map[g as usize]).collect()
    }

    pub fn marker_flag(&self, j: usize) -> QualityFlag {
        marker_quality(self.geno, j, &self.config.quality)
    }

    /// Quality check of a pair on the columns as they enter the model.
    pub fn pair_flag(&self, k: usize, l: usize) -> QualityFlag {
        let table = self.bits.table(k, l);
        pair_quality(self.geno, k, l, &table, &self.values[k], &self.values[l], &self.config.quality)
    }

    /// Marginal test of marker `j`: intercept (GLMs), fixed covariates, `x_j`.
    pub fn marker_test(&self, j: usize) -> TestOutcome {
        let flag = self.marker_flag(j);
        if !flag.is_ok() {
            return Err(flag);
        }
        self.fit_last(vec![(ColumnRole::Tested, self.marker_values(j))])
            .ok_or(QualityFlag::FitFailed)
    }

    /// Interaction test of `(k, l)`: intercept (GLMs), fixed covariates,
    /// `x_k`, `x_l`, `x_k x_l`.
    pub fn pair_test(&self, k: usize, l: usize) -> TestOutcome {
        let flag = self.pair_flag(k, l);
        if !flag.is_ok() {
            return Err(flag);
        }
        let xk = self.marker_values(k);
        let xl = self.marker_values(l);
        let prod = xk.iter().zip(&xl).map(|(a, b)| a * b).collect();
        self.fit_last(vec![
            (ColumnRole::Tested, xk),
            (ColumnRole::Tested, xl),
            (ColumnRole::Interaction, prod),
        ])
        .ok_or(QualityFlag::FitFailed)
    }

    fn fit_last(&self, tested: Vec<(ColumnRole, Vec<f64>)>) -> Option<WaldTest> {
        let control = &self.config.control;
        let fixed = self.config.fixed.columns();
        let wald = match (self.outcome, &self.survival) {
            (Outcome::Survival { .. }, Some(template)) => {
                let mut cols: Vec<Vec<f64>> = fixed.to_vec();
                cols.extend(tested.into_iter().map(|(_, c)| c));
                let q = cols.len();
                let data = template.with_covariates(cols).ok()?;
                let fit = fit_cox(&data, control).ok()?;
                if !fit.converged {
                    return None;
                }
                cox_wald_test(&fit, q - 1).ok()?
            }
            (Outcome::Continuous(y), _) | (Outcome::Count { y, .. }, _) => {
                let mut builder = DesignMatrix::builder(self.geno.nrows());
                for col in fixed {
                    builder = builder.fixed(col.iter().copied());
                }
                for (role, col) in tested {
                    builder = builder.column(role, col);
                }
                let design = builder.build().ok()?;
                let offset = match self.outcome {
                    Outcome::Count { offset, .. } => Some(offset.as_slice()),
                    _ => None,
                };
                let fit = fit_glm(&design, y, glm_family(self.config.family), offset, control).ok()?;
                if !fit.converged {
                    return None;
                }
                wald_test(&fit, design.ncols() - 1).ok()?
            }
            _ => return None,
        };
        wald.p_value.is_finite().then_some(wald)
    }

    /// Stage-1 tests of every marker, in index order.
    pub fn stage_one_tests(&self) -> Vec<TestOutcome> {
        (0..self.geno.ncols())
            .into_par_iter()
            .map(|j| self.marker_test(j))
            .collect()
    }

    /// Applies `threshold` to precomputed stage-1 tests. A level of 1 means
    /// no selection: every marker with a successful fit passes.
    pub fn screen_from_tests(&self, tests: &[TestOutcome], threshold: &Stage1Threshold) -> ScreenResult {
        let markers: Vec<MarkerScreen> = tests
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let level = threshold.get(j);
                match t {
                    Ok(w) => MarkerScreen {
                        index: j,
                        z: w.z,
                        p_value: w.p_value,
                        threshold: level,
                        passed: w.p_value < level || level >= 1.0,
                        flag: QualityFlag::Ok,
                    },
                    Err(flag) => MarkerScreen {
                        index: j,
                        z: f64::NAN,
                        p_value: f64::NAN,
                        threshold: level,
                        passed: false,
                        flag: *flag,
                    },
                }
            })
            .collect();
        let selected: Vec<usize> = markers.iter().filter(|m| m.passed).map(|m| m.index).collect();
        let k1 = self.count_quality_pairs(&selected);
        ScreenResult {
            markers,
            selected,
            k1,
            expected_selected: threshold.expected_selected(self.geno.ncols()),
        }
    }

    /// Number of quality-passing pairs among `selected`.
    pub fn count_quality_pairs(&self, selected: &[usize]) -> usize {
        (0..selected.len())
            .into_par_iter()
            .map(|a| {
                selected[a + 1..]
                    .iter()
                    .filter(|&&l| self.pair_flag(selected[a], l).is_ok())
                    .count()
            })
            .sum()
    }

    pub fn screen(&self) -> ScreenResult {
        self.screen_from_tests(&self.stage_one_tests(), &self.config.stage1_threshold)
    }

    /// Stage 2 on the pairs of `screen.selected`.
    pub fn stage_two(&self, screen: ScreenResult) -> ScanReport {
        let sel = &screen.selected;
        let pairs: Vec<(usize, usize)> = (0..sel.len())
            .flat_map(|a| ((a + 1)..sel.len()).map(move |b| (a, b)))
            .map(|(a, b)| (sel[a], sel[b]))
            .collect();
        let tests: Vec<TestOutcome> = pairs.par_iter().map(|&(k, l)| self.pair_test(k, l)).collect();
        let tested = tests.iter().filter(|t| t.is_ok()).count();
        let k1_effective = match self.config.k1_mode {
            K1Mode::Observed => tested,
            K1Mode::Deterministic => {
                let e = screen.expected_selected;
                ((e * e).ceil() as usize).max(1)
            }
        };
        let alpha2 = (tested > 0 && k1_effective > 0).then(|| self.config.alpha / k1_effective as f64);
        let k1f = k1_effective as f64;
        let pairs: Vec<PairResult> = pairs
            .iter()
            .zip(&tests)
            .map(|(&(k, l), t)| match t {
                Ok(w) => PairResult {
                    k,
                    l,
                    estimate: w.estimate,
                    std_err: w.std_err,
                    z: w.z,
                    raw_p: w.p_value,
                    corrected_p: (w.p_value * k1f).min(1.0),
                    significant: alpha2.is_some_and(|a2| w.p_value < a2),
                    flag: QualityFlag::Ok,
                },
                Err(flag) => PairResult {
                    k,
                    l,
                    estimate: f64::NAN,
                    std_err: f64::NAN,
                    z: f64::NAN,
                    raw_p: f64::NAN,
                    corrected_p: f64::NAN,
                    significant: false,
                    flag: *flag,
                },
            })
            .collect();
        let any_rejection = pairs.iter().any(|r| r.significant);
        ScanReport {
            screen,
            pairs,
            k1_mode: self.config.k1_mode,
            k1_effective,
            alpha2,
            any_rejection,
        }
    }
}

fn glm_family(family: ModelFamily) -> Family {
    match family {
        ModelFamily::Logistic => Family::Logistic,
        ModelFamily::Poisson => Family::PoissonOffset,
        _ => Family::Gaussian,
    }
}

pub fn stage_one_screen(geno: &GenotypeMatrix, outcome: &Outcome, config: &ScanConfig) -> Result<ScreenResult> {
    Ok(ScanContext::new(geno, outcome, config)?.screen())
}

/// Stage 2 for a screen produced by [`stage_one_screen`] on the same data.
pub fn stage_two_scan(
    geno: &GenotypeMatrix,
    outcome: &Outcome,
    screen: ScreenResult,
    config: &ScanConfig,
) -> Result<ScanReport> {
    if screen.markers.len() != geno.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "screen covers {} markers, genotypes have {}",
            screen.markers.len(),
            geno.ncols()
        )));
    }
    let ctx = ScanContext::new(geno, outcome, config)?;
    Ok(ctx.stage_two(screen))
}

pub fn run_two_stage(geno: &GenotypeMatrix, outcome: &Outcome, config: &ScanConfig) -> Result<ScanReport> {
    let ctx = ScanContext::new(geno, outcome, config)?;
    let screen = ctx.screen();
    Ok(ctx.stage_two(screen))
}

/// Single-stage scan of every pair of markers that pass the single-marker
/// quality check, Bonferroni-corrected over the pairs tested. No stage-1
/// fits are made; the screen lists every such marker as passed with NaN
/// statistics.
pub fn exhaustive_scan(geno: &GenotypeMatrix, outcome: &Outcome, config: &ScanConfig) -> Result<ScanReport> {
    let ctx = ScanContext::new(geno, outcome, config)?;
    let tests: Vec<TestOutcome> = (0..geno.ncols())
        .map(|j| {
            let flag = ctx.marker_flag(j);
            if flag.is_ok() {
                Ok(WaldTest {
                    estimate: f64::NAN,
                    std_err: f64::NAN,
                    z: f64::NAN,
                    p_value: f64::NAN,
                })
            } else {
                Err(flag)
            }
        })
        .collect();
    let screen = ctx.screen_from_tests(&tests, &Stage1Threshold::Scalar(1.0));
    Ok(ctx.stage_two(screen))
}
