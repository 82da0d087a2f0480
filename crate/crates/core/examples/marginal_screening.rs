// Shows how a pure interaction leaks into the marginal test of one of its
// markers, which is what makes stage-1 screening informative.
//
// ```bash
// cargo run --release --example marginal_screening
// ```

use epistasis::data::ModelFamily;
use epistasis::experiments::{marginal_scan_study, MarginalConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = MarginalConfig {
        family: ModelFamily::Cox,
        beta_step: 0.25,
        seed: 4,
        ..Default::default()
    };
    let report = marginal_scan_study(&config)?;
    for row in &report.rows {
        println!("beta3 {:+.2} marginal z {:+.2}", row.beta, row.z);
    }
    println!("Spearman over beta3 > 0: {:.3}", report.positive_half_spearman());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
