// Traces detection power of the causal interaction over a grid of effect
// sizes, with and without stage-1 screening.
//
// ```bash
// cargo run --release --example power_study
// ```

use epistasis::experiments::{power_curve, MainEffects, PowerConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = PowerConfig {
        n: 500,
        p: 50,
        replicates: 40,
        seed: 5,
        fst: vec![1.0, 0.05],
        beta3: vec![0.0, 0.3, 0.6],
        main_effects: MainEffects::Both,
        ..Default::default()
    };
    let report = power_curve(&config)?;
    for cell in &report.cells {
        println!("fst {:<5} beta3 {:.1} power {:.3}", cell.fst, cell.beta3, cell.power.estimate());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
