// Estimates the family-wise error rate of the two-stage scan under the
// global null, for independent and correlated genotypes.
//
// ```bash
// cargo run --release --example fwer_study
// ```

use epistasis::data::ModelFamily;
use epistasis::experiments::{estimate_fwer, FwerConfig, GenotypeSetting};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for setting in [GenotypeSetting::Independent, GenotypeSetting::Correlated] {
        let config = FwerConfig {
            family: ModelFamily::Poisson,
            n: 300,
            p: 60,
            replicates: 100,
            seed: 11,
            fst: vec![0.1, 0.05],
            setting,
            ..Default::default()
        };
        let report = estimate_fwer(&config)?;
        for cell in &report.cells {
            println!(
                "{:<11} fst {:<5} FWER {:.3} (se {:.3})",
                setting.name(),
                cell.fst,
                cell.rejections.estimate(),
                cell.rejections.se()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
