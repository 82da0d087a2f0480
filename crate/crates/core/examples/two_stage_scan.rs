// Screens markers by their marginal association and tests interactions
// among the survivors, then compares with an exhaustive pair scan.
//
// ```bash
// cargo run --release --example two_stage_scan
// ```

use epistasis::data::ModelFamily;
use epistasis::simulate::{simulate_genotypes_independent, simulate_phenotype, IndependentGenotypes, PhenotypeSpec, RngSpec};
use epistasis::two_stage::{exhaustive_scan, run_two_stage, ScanConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, p) = (1000, 200);
    let params = IndependentGenotypes {
        causal_count: 2,
        ..Default::default()
    };
    let geno = simulate_genotypes_independent(n, p, &params, &mut RngSpec::new(3, 0).rng())?;
    let spec = PhenotypeSpec::null(ModelFamily::Linear).with_effects(0.0, 0.0, 0.6);
    let outcome = simulate_phenotype(&geno, &spec, &mut RngSpec::new(3, 1).rng())?;

    let config = ScanConfig::new(ModelFamily::Linear).with_stage1(0.05);
    let report = run_two_stage(&geno, &outcome, &config)?;
    println!(
        "stage 1 kept {} of {p} markers; {} pairs tested at level {:.2e}",
        report.screen.selected.len(),
        report.k1_effective,
        report.alpha2.unwrap_or(f64::NAN)
    );
    for pair in report.significant_pairs() {
        println!("  ({}, {}) z {:+.2} corrected p {:.2e}", pair.k, pair.l, pair.z, pair.corrected_p);
    }

    let all = exhaustive_scan(&geno, &outcome, &config)?;
    println!(
        "exhaustive scan: {} pairs, {} significant",
        all.k1_effective,
        all.significant_pairs().count()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
