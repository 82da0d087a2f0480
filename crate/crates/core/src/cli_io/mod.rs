//! Command-line front end: file formats, configuration and the subcommands
//! of the `epistasis` binary.
//!
//! Exit codes: 0 on success, 1 on a numerical failure, 2 on a user error
//! (bad flags, unreadable or malformed files, invalid configuration).

pub mod config;
pub mod formats;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{FixedCovariates, ModelFamily};
use crate::error::{Error, Result};
use crate::experiments::{
    estimate_fwer, independence_check, marginal_scan_study, power_curve, GenotypeSetting, MainEffects,
};
use crate::simulate::{
    derive_seed, simulate_genotypes_correlated, simulate_genotypes_independent, simulate_phenotype, CausalPair,
    CorrelatedGenotypes, IndependentGenotypes, PhenotypeSpec, RngSpec,
};
use crate::two_stage::{run_two_stage, K1Mode, ScanConfig, Stage1Threshold};
use config::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "epistasis", version, about = "Two-stage pairwise interaction scans")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the two-stage scan on genotype and phenotype files.
    Scan(ScanArgs),
    /// Write a simulated genotype and phenotype data set.
    Simulate(SimulateArgs),
    /// Estimate the family-wise error rate under the global null.
    Fwer(FwerArgs),
    /// Estimate power to detect the causal interaction.
    Power(PowerArgs),
    /// Correlations between stage-1 and stage-2 statistics under the null.
    Independence(IndependenceArgs),
    /// Marginal z-statistic across a grid of interaction effects.
    Marginal(MarginalArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub genotypes: PathBuf,
    #[arg(long)]
    pub phenotypes: PathBuf,
    /// Fixed covariates, one column per covariate.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    /// Directory receiving screen.csv and pairs.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub family: Option<ModelFamily>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stage-1 level, or a file with one level per marker.
    #[arg(long)]
    pub fst: Option<String>,
    #[arg(long)]
    pub k1_mode: Option<K1Mode>,
    #[arg(long)]
    pub r2_max: Option<f64>,
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: u64,
    /// Directory receiving genotypes.csv and phenotypes.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub family: Option<ModelFamily>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub setting: Option<GenotypeSetting>,
    #[arg(long)]
    pub block_rho: Option<f64>,
    /// Plant causal markers in the first two columns.
    #[arg(long)]
    pub causal: bool,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub beta3: Option<f64>,
}

/// Flags shared by the simulation studies.
#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<ModelFamily>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// First replicate stream; disjoint ranges can be pooled.
    #[arg(long)]
    pub replicate_offset: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FwerArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated stage-1 levels.
    #[arg(long, value_delimiter = ',')]
    pub fst: Option<Vec<f64>>,
    #[arg(long)]
    pub k1_mode: Option<K1Mode>,
    #[arg(long)]
    pub r2_max: Option<f64>,
    #[arg(long)]
    pub setting: Option<GenotypeSetting>,
    #[arg(long)]
    pub block_rho: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub fst: Option<Vec<f64>>,
    /// Comma-separated interaction effects.
    #[arg(long, value_delimiter = ',')]
    pub beta3: Option<Vec<f64>>,
    #[arg(long)]
    pub main_effects: Option<MainEffects>,
    #[arg(long)]
    pub k1_mode: Option<K1Mode>,
    #[arg(long)]
    pub r2_max: Option<f64>,
    #[arg(long)]
    pub setting: Option<GenotypeSetting>,
    #[arg(long)]
    pub block_rho: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IndependenceArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Effect of a standard-normal fixed covariate.
    #[arg(long)]
    pub fixed_effect: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<ModelFamily>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub maf: Option<f64>,
    #[arg(long)]
    pub beta_min: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub beta_step: Option<f64>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_user_error() {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = ConfigFile::load_optional(cli.config.as_deref())?;
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be >= 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(cli.command, config)),
        None => dispatch(cli.command, config),
    }
}

fn dispatch(command: Command, config: ConfigFile) -> Result<()> {
    match command {
        Command::Scan(a) => scan(a, config),
        Command::Simulate(a) => simulate(a, config),
        Command::Fwer(a) => fwer(a, config),
        Command::Power(a) => power(a, config),
        Command::Independence(a) => independence(a, config),
        Command::Marginal(a) => marginal(a, config),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn stage1_from_flag(value: &str) -> Result<Stage1Threshold> {
    match value.parse::<f64>() {
        Ok(a) => Ok(Stage1Threshold::Scalar(a)),
        Err(_) => formats::read_thresholds(Path::new(value)).map(Stage1Threshold::PerMarker),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes to `path`, or to standard output when absent.
fn write_output(
    path: Option<&Path>,
    render: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = formats::create(p)?;
            render(&mut w).and_then(|()| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn scan(a: ScanArgs, config: ConfigFile) -> Result<()> {
    let mut s = config.scan;
    set(&mut s.family, a.family);
    set(&mut s.alpha, a.alpha);
    set(&mut s.k1_mode, a.k1_mode);
    set(&mut s.quality.r2_max, a.r2_max);
    if let Some(f) = &a.fst {
        s.fst = stage1_from_flag(f)?;
    }
    s.standardize |= a.standardize;

    let geno = formats::read_genotypes(&a.genotypes)?;
    let outcome = formats::read_phenotypes(&a.phenotypes, s.family)?;
    let fixed = match &a.covariates {
        Some(p) => formats::read_covariates(p)?,
        None => FixedCovariates::none(geno.nrows()),
    };
    formats::check_alignment(&geno, &outcome, &fixed)?;

    let scan = ScanConfig {
        family: s.family,
        alpha: s.alpha,
        stage1_threshold: s.fst,
        fixed,
        quality: s.quality,
        k1_mode: s.k1_mode,
        standardize: s.standardize,
        control: s.control,
    };
    let report = run_two_stage(&geno, &outcome, &scan)?;

    create_dir(&a.out)?;
    let screen_path = a.out.join("screen.csv");
    write_output(Some(&screen_path), |w| report::write_screen(w, &report, &geno))?;
    let pairs_path = a.out.join("pairs.csv");
    write_output(Some(&pairs_path), |w| report::write_pairs(w, &report, &geno))?;
    println!("{}", report::summary_line(&report));
    Ok(())
}

fn simulate(a: SimulateArgs, config: ConfigFile) -> Result<()> {
    let mut s = config.simulate;
    set(&mut s.family, a.family);
    set(&mut s.n, a.n);
    set(&mut s.p, a.p);
    set(&mut s.setting, a.setting);
    set(&mut s.block_rho, a.block_rho);
    set(&mut s.beta1, a.beta1);
    set(&mut s.beta2, a.beta2);
    set(&mut s.beta3, a.beta3);
    s.causal |= a.causal;
    if s.p < 2 {
        return Err(Error::Config("need at least 2 markers".into()));
    }

    let mut geno_rng = RngSpec::new(derive_seed(a.seed, "simulate/genotypes"), 0).rng();
    let geno = match s.setting {
        GenotypeSetting::Independent => {
            let params = IndependentGenotypes {
                causal_count: if s.causal { 2 } else { 0 },
                ..Default::default()
            };
            simulate_genotypes_independent(s.n, s.p, &params, &mut geno_rng)?
        }
        GenotypeSetting::Correlated => {
            let params = CorrelatedGenotypes {
                block_rho: s.block_rho,
                causal: s.causal.then(CausalPair::default),
                ..Default::default()
            };
            simulate_genotypes_correlated(s.n, s.p, &params, &mut geno_rng)?
        }
    };
    let geno = geno.with_names((0..s.p).map(|j| format!("m{j}")).collect())?;
    let spec = PhenotypeSpec::null(s.family).with_effects(s.beta1, s.beta2, s.beta3);
    let mut pheno_rng = RngSpec::new(derive_seed(a.seed, "simulate/phenotypes"), 0).rng();
    let outcome = simulate_phenotype(&geno, &spec, &mut pheno_rng)?;

    create_dir(&a.out)?;
    formats::write_genotypes(&a.out.join("genotypes.csv"), &geno)?;
    formats::write_phenotypes(&a.out.join("phenotypes.csv"), &outcome)?;
    println!("seed={} family={} n={} p={}", a.seed, s.family, s.n, s.p);
    Ok(())
}

fn fwer(a: FwerArgs, config: ConfigFile) -> Result<()> {
    let mut c = config.fwer;
    c.seed = a.study.seed;
    set(&mut c.family, a.study.family);
    set(&mut c.n, a.study.n);
    set(&mut c.replicates, a.study.replicates);
    set(&mut c.replicate_offset, a.study.replicate_offset);
    set(&mut c.p, a.p);
    set(&mut c.alpha, a.alpha);
    set(&mut c.fst, a.fst);
    set(&mut c.k1_mode, a.k1_mode);
    set(&mut c.quality.r2_max, a.r2_max);
    set(&mut c.setting, a.setting);
    set(&mut c.block_rho, a.block_rho);
    let report = estimate_fwer(&c)?;
    write_output(a.study.out.as_deref(), |w| report::write_fwer(w, &report))
}

fn power(a: PowerArgs, config: ConfigFile) -> Result<()> {
    let mut c = config.power;
    c.seed = a.study.seed;
    set(&mut c.family, a.study.family);
    set(&mut c.n, a.study.n);
    set(&mut c.replicates, a.study.replicates);
    set(&mut c.replicate_offset, a.study.replicate_offset);
    set(&mut c.p, a.p);
    set(&mut c.alpha, a.alpha);
    set(&mut c.fst, a.fst);
    set(&mut c.beta3, a.beta3);
    set(&mut c.main_effects, a.main_effects);
    set(&mut c.k1_mode, a.k1_mode);
    set(&mut c.quality.r2_max, a.r2_max);
    set(&mut c.setting, a.setting);
    set(&mut c.block_rho, a.block_rho);
    let report = power_curve(&c)?;
    write_output(a.study.out.as_deref(), |w| report::write_power(w, &report))
}

fn independence(a: IndependenceArgs, config: ConfigFile) -> Result<()> {
    let mut c = config.independence;
    c.seed = a.study.seed;
    set(&mut c.family, a.study.family);
    set(&mut c.n, a.study.n);
    set(&mut c.replicates, a.study.replicates);
    set(&mut c.replicate_offset, a.study.replicate_offset);
    if a.fixed_effect.is_some() {
        c.fixed_effect = a.fixed_effect;
    }
    let report = independence_check(&c)?;
    write_output(a.study.out.as_deref(), |w| report::write_independence(w, &report))
}

fn marginal(a: MarginalArgs, config: ConfigFile) -> Result<()> {
    let mut c = config.marginal;
    c.seed = a.seed;
    set(&mut c.family, a.family);
    set(&mut c.n, a.n);
    set(&mut c.maf, a.maf);
    set(&mut c.beta_min, a.beta_min);
    set(&mut c.beta_max, a.beta_max);
    set(&mut c.beta_step, a.beta_step);
    let report = marginal_scan_study(&c)?;
    write_output(a.out.as_deref(), |w| report::write_marginal(w, &report))
}
