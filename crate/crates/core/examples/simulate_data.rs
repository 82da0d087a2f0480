// Draws independent and correlated genotype panels, adds a phenotype with
// an interaction between the two causal markers and writes both to CSV.
//
// ```bash
// cargo run --example simulate_data
// ```

use epistasis::cli_io::formats::{read_genotypes, write_genotypes, write_phenotypes};
use epistasis::data::ModelFamily;
use epistasis::simulate::{
    simulate_genotypes_correlated, simulate_genotypes_independent, simulate_phenotype, CausalPair,
    CorrelatedGenotypes, IndependentGenotypes, PhenotypeSpec, RngSpec,
};
use epistasis::stats::pearson;

fn as_f64(col: &[u8]) -> Vec<f64> {
    col.iter().map(|&g| f64::from(g)).collect()
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, p) = (1000, 50);
    let params = IndependentGenotypes {
        causal_count: 2,
        ..Default::default()
    };
    let geno = simulate_genotypes_independent(n, p, &params, &mut RngSpec::new(1, 0).rng())?;
    println!("independent panel {n} x {p}, causal MAFs {:.3} {:.3}", geno.maf(0), geno.maf(1));

    let correlated = CorrelatedGenotypes {
        causal: Some(CausalPair::default()),
        ..Default::default()
    };
    let ld = simulate_genotypes_correlated(n, p, &correlated, &mut RngSpec::new(1, 1).rng())?;
    println!(
        "correlated panel: causal r {:.3}, columns 5/6 r {:.3}",
        pearson(&as_f64(ld.column(0)), &as_f64(ld.column(1))),
        pearson(&as_f64(ld.column(5)), &as_f64(ld.column(6)))
    );

    let spec = PhenotypeSpec::null(ModelFamily::Cox).with_effects(0.2, 0.2, 0.5);
    let outcome = simulate_phenotype(&geno, &spec, &mut RngSpec::new(1, 2).rng())?;

    let dir = std::env::temp_dir().join(format!("epistasis-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let (gpath, ppath) = (dir.join("genotypes.csv"), dir.join("phenotypes.csv"));
    write_genotypes(&gpath, &geno)?;
    write_phenotypes(&ppath, &outcome)?;
    let back = read_genotypes(&gpath)?;
    assert_eq!(back.column(3), geno.column(3));
    println!("wrote {} and {}", gpath.display(), ppath.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
