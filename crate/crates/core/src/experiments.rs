//! Monte-Carlo studies of the two-stage procedure: family-wise error rate,
//! power, independence of the stage statistics, and marginal screening.
//!
//! Replicate `r` of a study draws from stream `replicate_offset + r` of a
//! seed derived from the master seed and a label naming the study and
//! family. Runs over disjoint replicate ranges therefore pool exactly, and
//! no result depends on the thread count.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FixedCovariates, GenotypeMatrix, ModelFamily, Outcome};
use crate::error::{Error, Result};
use crate::glm::ConvergenceControl;
use crate::simulate::{
    derive_seed, simulate_genotypes_correlated, simulate_genotypes_independent, simulate_outcome,
    simulate_phenotype, CausalPair, CorrelatedGenotypes, IndependentGenotypes, PhenotypeSpec, RngSpec,
};
use crate::stats::{binomial_se, pearson, spearman};
use crate::two_stage::{K1Mode, QualityConfig, ScanConfig, ScanContext, Stage1Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenotypeSetting {
    /// Fresh independent markers in every replicate.
    #[default]
    Independent,
    /// One latent-AR(1) genotype matrix shared by all replicates.
    Correlated,
}

impl GenotypeSetting {
    pub fn name(self) -> &'static str {
        match self {
            GenotypeSetting::Independent => "independent",
            GenotypeSetting::Correlated => "correlated",
        }
    }
}

impl std::str::FromStr for GenotypeSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independent" | "uncorrelated" => Ok(GenotypeSetting::Independent),
            "correlated" => Ok(GenotypeSetting::Correlated),
            other => Err(Error::Config(format!("unknown genotype setting '{other}'"))),
        }
    }
}

/// Main effects of the causal pair in the power study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MainEffects {
    #[default]
    None,
    /// `beta1 = beta2 = 0.5`.
    Both,
    /// `beta1 = beta2 = -0.5`.
    Opposite,
}

impl MainEffects {
    pub fn value(self) -> f64 {
        match self {
            MainEffects::None => 0.0,
            MainEffects::Both => 0.5,
            MainEffects::Opposite => -0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MainEffects::None => "none",
            MainEffects::Both => "both",
            MainEffects::Opposite => "opposite",
        }
    }
}

impl std::str::FromStr for MainEffects {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(MainEffects::None),
            "both" => Ok(MainEffects::Both),
            "opposite" => Ok(MainEffects::Opposite),
            other => Err(Error::Config(format!("unknown main-effect setting '{other}'"))),
        }
    }
}

/// Rejection count and binomial standard error of one study cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub hits: usize,
    pub replicates: usize,
}

impl Proportion {
    pub fn estimate(&self) -> f64 {
        self.hits as f64 / self.replicates as f64
    }

    pub fn se(&self) -> f64 {
        binomial_se(self.estimate(), self.replicates)
    }
}

fn check_common(n: usize, replicates: usize) -> Result<()> {
    if replicates == 0 {
        return Err(Error::Config("replicates must be >= 1".into()));
    }
    if n < 10 {
        return Err(Error::Config(format!("n = {n} is too small")));
    }
    Ok(())
}

fn check_levels(name: &str, levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    match levels.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        Some(a) => Err(Error::Config(format!("{name} level {a} must be in (0, 1]"))),
        None => Ok(()),
    }
}

fn fixed_correlated_genotypes(seed: u64, n: usize, p: usize, block_rho: f64, causal: Option<CausalPair>) -> Result<GenotypeMatrix> {
    let params = CorrelatedGenotypes {
        block_rho,
        causal,
        ..Default::default()
    };
    let label = if causal.is_some() { "genotypes/correlated/causal" } else { "genotypes/correlated" };
    simulate_genotypes_correlated(n, p, &params, &mut RngSpec::new(derive_seed(seed, label), 0).rng())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FwerConfig {
    pub family: ModelFamily,
    pub n: usize,
    pub p: usize,
    pub replicates: usize,
    /// Set by the caller, never read from configuration files.
    #[serde(skip)]
    pub seed: u64,
    pub replicate_offset: u64,
    pub alpha: f64,
    /// Stage-1 levels; every level is applied to the same replicates.
    pub fst: Vec<f64>,
    pub k1_mode: K1Mode,
    pub quality: QualityConfig,
    pub setting: GenotypeSetting,
    pub block_rho: f64,
    pub control: ConvergenceControl,
}

impl Default for FwerConfig {
    fn default() -> Self {
        FwerConfig {
            family: ModelFamily::Linear,
            n: 500,
            p: 200,
            replicates: 500,
            seed: 0,
            replicate_offset: 0,
            alpha: 0.05,
            fst: vec![0.05, 0.01, 0.005],
            k1_mode: K1Mode::Observed,
            quality: QualityConfig::default(),
            setting: GenotypeSetting::Independent,
            block_rho: 0.7,
            control: ConvergenceControl::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwerCell {
    pub fst: f64,
    pub rejections: Proportion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwerReport {
    pub config: FwerConfig,
    pub cells: Vec<FwerCell>,
    /// Seed of the replicate streams `replicate_offset..replicate_offset + replicates`.
    pub stream_seed: u64,
}

fn scan_config(family: ModelFamily, alpha: f64, k1_mode: K1Mode, quality: QualityConfig, control: ConvergenceControl) -> ScanConfig {
    let mut c = ScanConfig::new(family).with_alpha(alpha);
    c.k1_mode = k1_mode;
    c.quality = quality;
    c.control = control;
    c
}

/// Fraction of full-null replicates with at least one significant pair.
pub fn estimate_fwer(config: &FwerConfig) -> Result<FwerReport> {
    check_common(config.n, config.replicates)?;
    check_levels("fst", &config.fst)?;
    if config.p < 2 {
        return Err(Error::Config("need at least 2 markers".into()));
    }
    let scan = scan_config(config.family, config.alpha, config.k1_mode, config.quality, config.control);
    scan.quality.validate()?;
    let fixed = match config.setting {
        GenotypeSetting::Correlated => Some(fixed_correlated_genotypes(config.seed, config.n, config.p, config.block_rho, None)?),
        GenotypeSetting::Independent => None,
    };
    let stream_seed = derive_seed(config.seed, &format!("fwer/{}", config.family));
    let null = PhenotypeSpec::null(config.family);

    let per_replicate: Vec<Vec<bool>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<bool>> {
            let mut rng = RngSpec::new(stream_seed, config.replicate_offset + r).rng();
            let fresh;
            let geno = match &fixed {
                Some(g) => g,
                None => {
                    fresh = simulate_genotypes_independent(config.n, config.p, &IndependentGenotypes::default(), &mut rng)?;
                    &fresh
                }
            };
            let outcome = simulate_phenotype(geno, &null, &mut rng)?;
            let ctx = ScanContext::new(geno, &outcome, &scan)?;
            let tests = ctx.stage_one_tests();
            Ok(config
                .fst
                .iter()
                .map(|&a1| {
                    let screen = ctx.screen_from_tests(&tests, &Stage1Threshold::Scalar(a1));
                    ctx.stage_two(screen).any_rejection
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let cells = config
        .fst
        .iter()
        .enumerate()
        .map(|(c, &fst)| FwerCell {
            fst,
            rejections: Proportion {
                hits: per_replicate.iter().filter(|r| r[c]).count(),
                replicates: config.replicates,
            },
        })
        .collect();
    Ok(FwerReport {
        config: config.clone(),
        cells,
        stream_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub family: ModelFamily,
    pub n: usize,
    pub p: usize,
    pub replicates: usize,
    #[serde(skip)]
    pub seed: u64,
    pub replicate_offset: u64,
    pub alpha: f64,
    pub fst: Vec<f64>,
    pub beta3: Vec<f64>,
    pub main_effects: MainEffects,
    pub k1_mode: K1Mode,
    pub quality: QualityConfig,
    pub setting: GenotypeSetting,
    pub block_rho: f64,
    pub control: ConvergenceControl,
}

/// `0, 0.05, ..., 1`.
pub fn default_beta3_grid() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * 0.05).collect()
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            family: ModelFamily::Linear,
            n: 1000,
            p: 200,
            replicates: 200,
            seed: 0,
            replicate_offset: 0,
            alpha: 0.05,
            fst: vec![1.0, 0.1, 0.05, 0.01, 0.005],
            beta3: default_beta3_grid(),
            main_effects: MainEffects::None,
            k1_mode: K1Mode::Observed,
            quality: QualityConfig::default(),
            setting: GenotypeSetting::Independent,
            block_rho: 0.7,
            control: ConvergenceControl::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCell {
    pub fst: f64,
    pub beta3: f64,
    pub power: Proportion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub config: PowerConfig,
    /// Ordered by `beta3`, then `fst`, following the configured grids.
    pub cells: Vec<PowerCell>,
    pub stream_seed: u64,
}

impl PowerReport {
    pub fn cell(&self, fst: f64, beta3: f64) -> Option<&PowerCell> {
        self.cells.iter().find(|c| c.fst == fst && c.beta3 == beta3)
    }
}

/// Fraction of replicates in which the causal pair (columns 0 and 1) is
/// significant after the stage-2 Bonferroni correction.
///
/// Only the causal pair is fitted in stage 2. Under the observed divisor,
/// `K1` is the number of quality-passing pairs among the selected markers,
/// which assumes every such pair fits successfully. The same replicates
/// (genotypes and noise) are used for every `beta3` and every stage-1 level.
pub fn power_curve(config: &PowerConfig) -> Result<PowerReport> {
    check_common(config.n, config.replicates)?;
    check_levels("fst", &config.fst)?;
    if config.beta3.is_empty() {
        return Err(Error::Config("beta3 grid is empty".into()));
    }
    if config.p < 2 {
        return Err(Error::Config("need at least 2 markers".into()));
    }
    let scan = scan_config(config.family, config.alpha, config.k1_mode, config.quality, config.control);
    scan.quality.validate()?;
    let fixed = match config.setting {
        GenotypeSetting::Correlated => Some(fixed_correlated_genotypes(
            config.seed,
            config.n,
            config.p,
            config.block_rho,
            Some(CausalPair::default()),
        )?),
        GenotypeSetting::Independent => None,
    };
    let causal_geno = IndependentGenotypes {
        causal_count: 2,
        ..Default::default()
    };
    let stream_seed = derive_seed(config.seed, &format!("power/{}", config.family));
    let main = config.main_effects.value();

    let jobs: Vec<(usize, u64)> = (0..config.beta3.len())
        .flat_map(|b| (0..config.replicates as u64).map(move |r| (b, r)))
        .collect();
    let hits: Vec<Vec<bool>> = jobs
        .par_iter()
        .map(|&(b, r)| -> Result<Vec<bool>> {
            let mut rng = RngSpec::new(stream_seed, config.replicate_offset + r).rng();
            let fresh;
            let geno = match &fixed {
                Some(g) => g,
                None => {
                    fresh = simulate_genotypes_independent(config.n, config.p, &causal_geno, &mut rng)?;
                    &fresh
                }
            };
            let spec = PhenotypeSpec::null(config.family).with_effects(main, main, config.beta3[b]);
            let outcome = simulate_phenotype(geno, &spec, &mut rng)?;
            let ctx = ScanContext::new(geno, &outcome, &scan)?;
            let tests = ctx.stage_one_tests();
            let causal_p = ctx.pair_test(0, 1).ok().map(|w| w.p_value);
            Ok(config
                .fst
                .iter()
                .map(|&a1| {
                    let Some(p01) = causal_p else { return false };
                    let threshold = Stage1Threshold::Scalar(a1);
                    let passes = |j: usize| match &tests[j] {
                        Ok(w) => w.p_value < a1 || a1 >= 1.0,
                        Err(_) => false,
                    };
                    if !(passes(0) && passes(1)) {
                        return false;
                    }
                    let k1 = match config.k1_mode {
                        K1Mode::Observed => {
                            let selected: Vec<usize> = (0..config.p).filter(|&j| passes(j)).collect();
                            ctx.count_quality_pairs(&selected)
                        }
                        K1Mode::Deterministic => {
                            let e = threshold.expected_selected(config.p);
                            ((e * e).ceil() as usize).max(1)
                        }
                    };
                    k1 > 0 && p01 < config.alpha / k1 as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(config.beta3.len() * config.fst.len());
    for (b, &beta3) in config.beta3.iter().enumerate() {
        let rows = &hits[b * config.replicates..(b + 1) * config.replicates];
        for (c, &fst) in config.fst.iter().enumerate() {
            cells.push(PowerCell {
                fst,
                beta3,
                power: Proportion {
                    hits: rows.iter().filter(|h| h[c]).count(),
                    replicates: config.replicates,
                },
            });
        }
    }
    Ok(PowerReport {
        config: config.clone(),
        cells,
        stream_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndependenceConfig {
    pub family: ModelFamily,
    pub n: usize,
    pub replicates: usize,
    #[serde(skip)]
    pub seed: u64,
    pub replicate_offset: u64,
    /// Effect of one standard-normal fixed covariate; none when absent.
    pub fixed_effect: Option<f64>,
    pub control: ConvergenceControl,
}

impl Default for IndependenceConfig {
    fn default() -> Self {
        IndependenceConfig {
            family: ModelFamily::Linear,
            n: 1000,
            replicates: 2000,
            seed: 0,
            replicate_offset: 0,
            fixed_effect: None,
            control: ConvergenceControl::default(),
        }
    }
}

/// Statistics recorded per replicate, in this order.
pub const INDEPENDENCE_STATISTICS: [&str; 4] = ["s1_k", "s1_l", "s1_j", "s2_kl"];

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEntry {
    pub first: &'static str,
    pub second: &'static str,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub config: IndependenceConfig,
    /// All pairwise correlations of the recorded statistics.
    pub correlations: Vec<CorrelationEntry>,
    /// Replicates in which every fit succeeded.
    pub used: usize,
    /// Mardia's multivariate kurtosis and its standardized deviation from the
    /// normal-theory value.
    pub mardia_kurtosis: f64,
    pub mardia_z: f64,
    pub stream_seed: u64,
}

impl IndependenceReport {
    pub fn correlation(&self, first: &str, second: &str) -> Option<f64> {
        self.correlations
            .iter()
            .find(|e| (e.first == first && e.second == second) || (e.first == second && e.second == first))
            .map(|e| e.correlation)
    }

    /// Largest |correlation| between a stage-1 and the stage-2 statistic.
    pub fn max_abs_cross_stage(&self) -> f64 {
        self.correlations
            .iter()
            .filter(|e| e.second == "s2_kl")
            .map(|e| e.correlation.abs())
            .fold(0.0, f64::max)
    }
}

/// Under the full null with three independent standardized markers
/// `k = 0`, `l = 1`, `j = 2`, records the stage-1 Wald z of each marker and
/// the stage-2 interaction z of `(k, l)` in every replicate.
pub fn independence_check(config: &IndependenceConfig) -> Result<IndependenceReport> {
    check_common(config.n, config.replicates)?;
    if config.replicates < 10 {
        return Err(Error::Config("need at least 10 replicates".into()));
    }
    let stream_seed = derive_seed(config.seed, &format!("independence/{}", config.family));
    let rows: Vec<Option<[f64; 4]>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<Option<[f64; 4]>> {
            let mut rng = RngSpec::new(stream_seed, config.replicate_offset + r).rng();
            let geno = simulate_genotypes_independent(config.n, 3, &IndependentGenotypes::default(), &mut rng)?;
            let spec = PhenotypeSpec::null(config.family);
            let mut scan = scan_config(config.family, 0.05, K1Mode::Observed, QualityConfig::default(), config.control);
            scan.standardize = true;
            let outcome = match config.fixed_effect {
                None => simulate_phenotype(&geno, &spec, &mut rng)?,
                Some(b) => {
                    let z: Vec<f64> = (0..config.n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
                    let eta: Vec<f64> = z.iter().map(|v| b * v).collect();
                    scan.fixed = FixedCovariates::new(config.n, vec![z], vec!["z".into()])?;
                    simulate_outcome(&eta, &spec, &mut rng)?
                }
            };
            let ctx = ScanContext::new(&geno, &outcome, &scan)?;
            let (Ok(k), Ok(l), Ok(j), Ok(kl)) = (ctx.marker_test(0), ctx.marker_test(1), ctx.marker_test(2), ctx.pair_test(0, 1)) else {
                return Ok(None);
            };
            Ok(Some([k.z, l.z, j.z, kl.z]))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<[f64; 4]> = rows.into_iter().flatten().collect();
    if kept.len() < 10 {
        return Err(Error::Config("too few successful replicates".into()));
    }
    let column = |c: usize| -> Vec<f64> { kept.iter().map(|r| r[c]).collect() };
    let mut correlations = Vec::new();
    for a in 0..4 {
        for b in (a + 1)..4 {
            correlations.push(CorrelationEntry {
                first: INDEPENDENCE_STATISTICS[a],
                second: INDEPENDENCE_STATISTICS[b],
                correlation: pearson(&column(a), &column(b)),
            });
        }
    }
    let (mardia_kurtosis, mardia_z) = mardia(&kept);
    Ok(IndependenceReport {
        config: config.clone(),
        correlations,
        used: kept.len(),
        mardia_kurtosis,
        mardia_z,
        stream_seed,
    })
}

/// Mardia's kurtosis `b = mean(d_i^2)` with `d_i` the Mahalanobis distance,
/// and `(b - d(d+2)) / sqrt(8 d (d+2) / N)`.
fn mardia(rows: &[[f64; 4]]) -> (f64, f64) {
    let d = 4;
    let nf = rows.len() as f64;
    let mut mean = DVector::zeros(d);
    for r in rows {
        mean += DVector::from_column_slice(r);
    }
    mean /= nf;
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        let c = DVector::from_column_slice(r) - &mean;
        cov += &c * c.transpose();
    }
    cov /= nf;
    let Some(inv) = cov.try_inverse() else {
        return (f64::NAN, f64::NAN);
    };
    let b = rows
        .iter()
        .map(|r| {
            let c = DVector::from_column_slice(r) - &mean;
            let m = (c.transpose() * &inv * &c)[(0, 0)];
            m * m
        })
        .sum::<f64>()
        / nf;
    let df = (d * (d + 2)) as f64;
    (b, (b - df) / (8.0 * df / nf).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginalConfig {
    pub family: ModelFamily,
    pub n: usize,
    pub maf: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_step: f64,
    #[serde(skip)]
    pub seed: u64,
    pub control: ConvergenceControl,
}

impl Default for MarginalConfig {
    fn default() -> Self {
        MarginalConfig {
            family: ModelFamily::Linear,
            n: 2000,
            maf: 0.3,
            beta_min: -1.0,
            beta_max: 1.0,
            beta_step: 0.002,
            seed: 0,
            control: ConvergenceControl::default(),
        }
    }
}

impl MarginalConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.beta_step > 0.0 && self.beta_max >= self.beta_min) {
            return Err(Error::Config("beta grid needs step > 0 and max >= min".into()));
        }
        let steps = ((self.beta_max - self.beta_min) / self.beta_step + 1e-9).floor() as usize;
        Ok((0..=steps).map(|i| self.beta_min + i as f64 * self.beta_step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub beta: f64,
    /// Stage-1 Wald z of `x1`; NaN when the fit failed.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub config: MarginalConfig,
    pub rows: Vec<MarginalRow>,
    pub stream_seed: u64,
}

impl MarginalReport {
    /// Spearman correlation of `beta` and `|z|` over rows with `beta > 0`.
    pub fn positive_half_spearman(&self) -> f64 {
        let (b, z): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.beta > 0.0 && r.z.is_finite())
            .map(|r| (r.beta, r.z.abs()))
            .unzip();
        spearman(&b, &z)
    }
}

/// For every `beta` on the grid, one dataset of two markers with MAF `maf`
/// and an interaction-only phenotype `beta x1 x2`; records the marginal
/// Wald z of `x1`.
pub fn marginal_scan_study(config: &MarginalConfig) -> Result<MarginalReport> {
    check_common(config.n, 1)?;
    if !(config.maf > 0.0 && config.maf <= 0.5) {
        return Err(Error::Config(format!("maf = {} must be in (0, 0.5]", config.maf)));
    }
    let grid = config.grid()?;
    let stream_seed = derive_seed(config.seed, &format!("marginal/{}", config.family));
    let params = IndependentGenotypes {
        maf_low: config.maf,
        maf_high: config.maf,
        ..Default::default()
    };
    let scan = scan_config(config.family, 0.05, K1Mode::Observed, QualityConfig::default(), config.control);
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &beta)| -> Result<MarginalRow> {
            let mut rng = RngSpec::new(stream_seed, i as u64).rng();
            let geno = simulate_genotypes_independent(config.n, 2, &params, &mut rng)?;
            let spec = PhenotypeSpec::null(config.family).with_effects(0.0, 0.0, beta);
            let outcome: Outcome = simulate_phenotype(&geno, &spec, &mut rng)?;
            let ctx = ScanContext::new(&geno, &outcome, &scan)?;
            let z = ctx.marker_test(0).map(|w| w.z).unwrap_or(f64::NAN);
            Ok(MarginalRow { beta, z })
        })
        .collect::<Result<_>>()?;
    Ok(MarginalReport {
        config: config.clone(),
        rows,
        stream_seed,
    })
}
