// Drives the `epistasis` command line in-process: simulate a data set,
// then scan it and print the written report.
//
// ```bash
// cargo run --example command_line
// ```

use epistasis::cli_io::main_with_args;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("epistasis-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let d = dir.to_str().expect("utf-8 temp path");
    let geno = format!("{d}/genotypes.csv");
    let pheno = format!("{d}/phenotypes.csv");

    let code = main_with_args([
        "epistasis", "simulate", "--seed", "9", "--n", "300", "--p", "30", "--causal", "--beta3", "0.8",
        "--out", d,
    ]);
    assert_eq!(code, 0);
    let code = main_with_args([
        "epistasis", "scan", "--genotypes", &geno, "--phenotypes", &pheno, "--fst", "0.1", "--out", d,
    ]);
    assert_eq!(code, 0);
    print!("{}", std::fs::read_to_string(dir.join("pairs.csv"))?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
