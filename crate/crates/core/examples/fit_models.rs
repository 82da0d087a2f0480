// Fits each regression family to simulated data and prints Wald tests.
//
// ```bash
// cargo run --example fit_models
// ```

use epistasis::cox::{cox_wald_test, fit_cox, SurvivalData};
use epistasis::data::{ModelFamily, Outcome};
use epistasis::glm::{fit_glm, wald_test, ConvergenceControl, DesignMatrix, Family};
use epistasis::simulate::{simulate_outcome, PhenotypeSpec, RngSpec};
use rand::Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 500;
    let mut rng = RngSpec::new(7, 0).rng();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eta: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
    let control = ConvergenceControl::default();
    let design = DesignMatrix::builder(n).tested(x.iter().copied()).build()?;

    for family in ModelFamily::ALL {
        let outcome = simulate_outcome(&eta, &PhenotypeSpec::null(family), &mut RngSpec::new(7, 1).rng())?;
        let (fit, test) = match &outcome {
            Outcome::Continuous(y) => {
                let glm = if family == ModelFamily::Linear { Family::Gaussian } else { Family::Logistic };
                let fit = fit_glm(&design, y, glm, None, &control)?;
                let test = wald_test(&fit, 1)?;
                (fit, test)
            }
            Outcome::Count { y, offset } => {
                let fit = fit_glm(&design, y, Family::PoissonOffset, Some(offset), &control)?;
                let test = wald_test(&fit, 1)?;
                (fit, test)
            }
            Outcome::Survival { time, event } => {
                let data = SurvivalData::new(time.clone(), event.clone(), vec![x.clone()])?;
                let fit = fit_cox(&data, &control)?;
                let test = cox_wald_test(&fit, 0)?;
                (fit, test)
            }
        };
        println!(
            "{family:<8} slope {:+.4} se {:.4} z {:+.2} p {:.2e} ({} iterations)",
            test.estimate, test.std_err, test.z, test.p_value, fit.iterations
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
