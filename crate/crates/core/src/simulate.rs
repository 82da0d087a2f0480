//! Synthetic genotype and phenotype generators.
//!
//! Every generator draws from a caller-supplied RNG; [`RngSpec`] turns a
//! `(seed, stream)` pair into an independent ChaCha8 stream so replicates can
//! run in any order on any number of threads and still reproduce bit-for-bit.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

use crate::data::{GenotypeMatrix, ModelFamily, Outcome};
use crate::error::{Error, Result};
use crate::stats::{bivariate_normal_cdf, normal_cdf, normal_quantile};

/// Master seed plus stream id (typically the replicate index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Derives the seed of a labelled sub-experiment from a master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    // FNV-1a keeps labels platform independent
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(master ^ splitmix64(h))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependentGenotypes {
    pub maf_low: f64,
    pub maf_high: f64,
    pub causal_maf: f64,
    /// 0 or 2; causal markers occupy columns 0 and 1.
    pub causal_count: usize,
}

impl Default for IndependentGenotypes {
    fn default() -> Self {
        IndependentGenotypes {
            maf_low: 0.1,
            maf_high: 0.5,
            causal_maf: 0.2,
            causal_count: 0,
        }
    }
}

fn check_maf_range(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && lo <= hi && hi <= 0.5) {
        return Err(Error::InvalidRange(format!(
            "MAF range [{lo}, {hi}] must satisfy 0 < low <= high <= 0.5"
        )));
    }
    Ok(())
}

fn check_shape(n: usize, p: usize, causal_count: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidRange(format!("need n, p >= 1 (n = {n}, p = {p})")));
    }
    if causal_count != 0 && causal_count != 2 {
        return Err(Error::InvalidRange("causal_count must be 0 or 2".into()));
    }
    if causal_count > p {
        return Err(Error::InvalidRange("fewer markers than causal markers".into()));
    }
    Ok(())
}

fn binomial2(rng: &mut impl Rng, maf: f64) -> u8 {
    u8::from(rng.random::<f64>() < maf) + u8::from(rng.random::<f64>() < maf)
}

/// Independent markers: column `j` draws its MAF from `U[maf_low, maf_high]`
/// and then `n` i.i.d. `Binomial(2, MAF_j)` counts.
pub fn simulate_genotypes_independent(
    n: usize,
    p: usize,
    params: &IndependentGenotypes,
    rng: &mut impl Rng,
) -> Result<GenotypeMatrix> {
    check_shape(n, p, params.causal_count)?;
    check_maf_range(params.maf_low, params.maf_high)?;
    if !(params.causal_maf > 0.0 && params.causal_maf <= 0.5) {
        return Err(Error::InvalidRange("causal MAF must be in (0, 0.5]".into()));
    }
    let mut data = Vec::with_capacity(n * p);
    for j in 0..p {
        let maf = if j < params.causal_count {
            params.causal_maf
        } else if params.maf_low == params.maf_high {
            params.maf_low
        } else {
            rng.random_range(params.maf_low..params.maf_high)
        };
        data.extend((0..n).map(|_| binomial2(rng, maf)));
    }
    GenotypeMatrix::from_column_major(n, p, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalPair {
    /// Target Pearson correlation of the two allele-count columns.
    pub rho: f64,
    pub mafs: (f64, f64),
}

impl Default for CausalPair {
    fn default() -> Self {
        CausalPair {
            rho: 0.3,
            mafs: (0.48, 0.25),
        }
    }
}

/// Latent-Gaussian AR(1) surrogate for linkage disequilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedGenotypes {
    /// Lag-1 correlation of the latent chain.
    pub block_rho: f64,
    pub maf_low: f64,
    pub maf_high: f64,
    /// Columns 0 and 1 when present.
    pub causal: Option<CausalPair>,
}

impl Default for CorrelatedGenotypes {
    fn default() -> Self {
        CorrelatedGenotypes {
            block_rho: 0.7,
            maf_low: 0.1,
            maf_high: 0.5,
            causal: None,
        }
    }
}

/// Pearson correlation of the indicators `1{Z1 < q(a)}`, `1{Z2 < q(b)}` for
/// standard bivariate normal `(Z1, Z2)` with correlation `latent_rho`.
pub fn thresholded_correlation(latent_rho: f64, maf_a: f64, maf_b: f64) -> f64 {
    let joint = bivariate_normal_cdf(normal_quantile(maf_a), normal_quantile(maf_b), latent_rho);
    (joint - maf_a * maf_b) / (maf_a * (1.0 - maf_a) * maf_b * (1.0 - maf_b)).sqrt()
}

/// Latent correlation whose thresholded indicators have Pearson correlation `target`.
pub fn latent_correlation_for(target: f64, maf_a: f64, maf_b: f64) -> Result<f64> {
    let (mut lo, mut hi) = (-0.999_999, 0.999_999);
    let f = |r: f64| thresholded_correlation(r, maf_a, maf_b) - target;
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::InvalidRange(format!(
            "allele-count correlation {target} is unattainable for MAFs {maf_a} and {maf_b}"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Correlated markers. Each individual carries two independent haplotypes;
/// a haplotype is a latent standard-normal AR(1) chain across columns, and
/// column `j` carries the minor allele where the latent value falls below the
/// `MAF_j` quantile. The genotype is the sum over the two haplotypes.
pub fn simulate_genotypes_correlated(
    n: usize,
    p: usize,
    params: &CorrelatedGenotypes,
    rng: &mut impl Rng,
) -> Result<GenotypeMatrix> {
    let causal_count = if params.causal.is_some() { 2 } else { 0 };
    check_shape(n, p, causal_count)?;
    check_maf_range(params.maf_low, params.maf_high)?;
    if !(params.block_rho.abs() < 1.0) {
        return Err(Error::InvalidRange("|block_rho| must be < 1".into()));
    }

    let mut mafs = Vec::with_capacity(p);
    let mut lag = vec![params.block_rho; p];
    if let Some(c) = params.causal {
        for m in [c.mafs.0, c.mafs.1] {
            if !(m > 0.0 && m < 1.0) {
                return Err(Error::InvalidRange("causal MAFs must be in (0, 1)".into()));
            }
        }
        mafs.extend([c.mafs.0, c.mafs.1]);
        lag[1] = latent_correlation_for(c.rho, c.mafs.0, c.mafs.1)?;
    }
    // MAFs drift along the chain (their own AR(1) with the same lag
    // correlation, mapped to uniform), so neighbouring columns can be in
    // strong LD; each MAF is still marginally U[maf_low, maf_high].
    let mut w: f64 = rng.sample(StandardNormal);
    let drift = (1.0 - params.block_rho * params.block_rho).sqrt();
    for j in 0..p {
        if j > 0 {
            let e: f64 = rng.sample(StandardNormal);
            w = params.block_rho * w + drift * e;
        }
        if j >= mafs.len() {
            mafs.push(params.maf_low + (params.maf_high - params.maf_low) * normal_cdf(w));
        }
    }
    let thresholds: Vec<f64> = mafs.iter().map(|&m| normal_quantile(m)).collect();
    let innovation: Vec<f64> = lag.iter().map(|r| (1.0 - r * r).sqrt()).collect();

    let mut data = vec![0u8; n * p];
    for i in 0..n {
        for _ in 0..2 {
            let mut z: f64 = rng.sample(StandardNormal);
            for j in 0..p {
                if j > 0 {
                    let e: f64 = rng.sample(StandardNormal);
                    z = lag[j] * z + innovation[j] * e;
                }
                if z < thresholds[j] {
                    data[j * n + i] += 1;
                }
            }
        }
    }
    GenotypeMatrix::from_column_major(n, p, data)
}

/// Phenotype model `eta = b1 x1 + b2 x2 + b3 x1 x2` on a causal marker pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhenotypeSpec {
    pub family: ModelFamily,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub causal: (usize, usize),
    /// Error standard deviation of the linear model.
    pub noise_sd: f64,
    /// Logistic-model intercept (0 gives a prevalence of one half under the null).
    pub intercept: f64,
    /// Poisson exposures are drawn from `U[lo, hi]`.
    pub offset_range: (f64, f64),
    pub weibull_shape: f64,
    pub weibull_scale: f64,
    /// Censoring times are uniform between these baseline Weibull quantiles.
    pub censor_quantiles: (f64, f64),
}

impl PhenotypeSpec {
    pub fn null(family: ModelFamily) -> Self {
        PhenotypeSpec {
            family,
            beta1: 0.0,
            beta2: 0.0,
            beta3: 0.0,
            causal: (0, 1),
            noise_sd: 1.0,
            intercept: 0.0,
            offset_range: (1.0, 5.0),
            weibull_shape: 2.0,
            weibull_scale: 1.0,
            censor_quantiles: (0.70, 0.99),
        }
    }

    pub fn with_effects(mut self, beta1: f64, beta2: f64, beta3: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self.beta3 = beta3;
        self
    }

    /// `q`-quantile of the baseline Weibull distribution.
    pub fn weibull_quantile(&self, q: f64) -> f64 {
        self.weibull_scale * (-(1.0 - q).ln()).powf(1.0 / self.weibull_shape)
    }
}

/// Simulates an outcome from the causal-pair model of `spec`.
pub fn simulate_phenotype(
    geno: &GenotypeMatrix,
    spec: &PhenotypeSpec,
    rng: &mut impl Rng,
) -> Result<Outcome> {
    let (a, b) = spec.causal;
    if a == b || a >= geno.ncols() || b >= geno.ncols() {
        return Err(Error::InvalidInput(format!(
            "causal pair ({a}, {b}) invalid for {} markers",
            geno.ncols()
        )));
    }
    let eta: Vec<f64> = geno
        .column(a)
        .iter()
        .zip(geno.column(b))
        .map(|(&x1, &x2)| {
            let (x1, x2) = (f64::from(x1), f64::from(x2));
            spec.beta1 * x1 + spec.beta2 * x2 + spec.beta3 * x1 * x2
        })
        .collect();
    simulate_outcome(&eta, spec, rng)
}

/// Draws an outcome for an arbitrary linear predictor; the effect sizes in
/// `spec` are ignored, only the family parameters are used.
pub fn simulate_outcome(eta: &[f64], spec: &PhenotypeSpec, rng: &mut impl Rng) -> Result<Outcome> {
    Ok(match spec.family {
        ModelFamily::Linear => Outcome::Continuous(
            eta.iter()
                .map(|e| e + spec.noise_sd * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        ),
        ModelFamily::Logistic => Outcome::Continuous(
            eta.iter()
                .map(|e| {
                    let prob = 1.0 / (1.0 + (-(spec.intercept + e)).exp());
                    f64::from(rng.random::<f64>() < prob)
                })
                .collect(),
        ),
        ModelFamily::Poisson => {
            let (lo, hi) = spec.offset_range;
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::InvalidRange(format!("offset range [{lo}, {hi}]")));
            }
            let mut y = Vec::with_capacity(eta.len());
            let mut offset = Vec::with_capacity(eta.len());
            for e in eta {
                let t = if lo == hi { lo } else { rng.random_range(lo..hi) };
                let mean = t * e.exp();
                let d = Poisson::new(mean)
                    .map_err(|err| Error::InvalidRange(format!("Poisson mean {mean}: {err}")))?;
                y.push(rng.sample(d));
                offset.push(t);
            }
            Outcome::Count { y, offset }
        }
        ModelFamily::Cox => {
            let (qa, qb) = spec.censor_quantiles;
            if !(0.0 < qa && qa <= qb && qb < 1.0) {
                return Err(Error::InvalidRange(format!("censoring quantiles ({qa}, {qb})")));
            }
            let (ca, cb) = (spec.weibull_quantile(qa), spec.weibull_quantile(qb));
            let shape = spec.weibull_shape;
            let mut time = Vec::with_capacity(eta.len());
            let mut event = Vec::with_capacity(eta.len());
            for e in eta {
                // cumulative hazard (t / scale)^shape exp(eta) equals -log U
                let u: f64 = rng.sample(Open01);
                let h = -u.ln() * (-e).exp();
                let t = spec.weibull_scale * if shape == 2.0 { h.sqrt() } else { h.powf(1.0 / shape) };
                let c = if ca == cb { ca } else { rng.random_range(ca..cb) };
                time.push(t.min(c));
                event.push(t <= c);
            }
            Outcome::Survival { time, event }
        }
    })
}
