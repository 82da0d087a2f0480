//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the verdict lines always
//! appear in `cargo test` output. Set `EPISTASIS_PAPER_SCALE=1` to add the
//! long-running full-size type I error comparison. Failed criteria are
//! reported on their line; the process exits non-zero on a failure only when
//! `EPISTASIS_ACCEPTANCE_STRICT` is set.

mod common;

use std::time::Instant;

use common::{cox_loglik_bruteforce, golden_max, newton_oracle, ols_oracle, GlmKind};
use epistasis::cox::{fit_cox, SurvivalData};
use epistasis::data::{ModelFamily, Outcome};
use epistasis::experiments::{
    estimate_fwer, independence_check, marginal_scan_study, power_curve, FwerConfig, GenotypeSetting,
    IndependenceConfig, MainEffects, MarginalConfig, PowerConfig, PowerReport,
};
use epistasis::glm::{fit_glm, ConvergenceControl, DesignMatrix, Family};
use epistasis::simulate::{simulate_genotypes_independent, simulate_outcome, simulate_phenotype, IndependentGenotypes, PhenotypeSpec, RngSpec};
use epistasis::stats::isotonic_increasing;
use epistasis::two_stage::{exhaustive_scan, run_two_stage, ScanConfig, ScanContext, ScanReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(u32, &str, fn() -> Verdict); 8] = [
        (1, "fitter oracle equivalence", fitter_oracles),
        (2, "FWER control at desk scale", fwer_control),
        (3, "stage independence", stage_independence),
        (4, "power curve shapes", power_shapes),
        (5, "marginal screening signal", marginal_signal),
        (6, "reduction identity", reduction_identity),
        (7, "thread-count determinism", determinism),
        (8, "simulation calibration", calibration),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let v = check();
        println!(
            "criterion {id} ({name}): {} [{:.1}s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if std::env::var_os("EPISTASIS_PAPER_SCALE").is_some() {
        let start = Instant::now();
        let v = fwer_paper_scale();
        println!(
            "criterion 2 (FWER at full size): {} [{:.1}s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
        failed += usize::from(!v.pass);
    } else {
        println!("criterion 2 (FWER at full size): not run, set EPISTASIS_PAPER_SCALE=1");
    }
    println!("acceptance: {failed} failed");
    if failed > 0 && std::env::var_os("EPISTASIS_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..q).map(|_| rng.random_range(-2.0..2.0)));
            r
        })
        .collect()
}

fn fitter_oracles() -> Verdict {
    let control = ConvergenceControl::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = [0.0f64; 3];

    for _ in 0..50 {
        let q = rng.random_range(2..=6);
        let n = rng.random_range(20..=300);
        let rows = random_rows(&mut rng, n, q);
        let y: Vec<f64> = rows.iter().map(|r| r[1] - 0.5 * r[q - 1] + rng.random_range(-2.0..2.0)).collect();
        let (beta, _) = ols_oracle(&rows, &y);
        let fit = fit_glm(&DesignMatrix::from_rows(&rows).unwrap(), &y, Family::Gaussian, None, &control).unwrap();
        let diff: f64 = fit.beta_hat.iter().zip(&beta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst[0] = worst[0].max(diff / norm);
    }

    for case in 0..60 {
        let q = rng.random_range(2..=5);
        let n = rng.random_range(80..=400);
        let rows = random_rows(&mut rng, n, q);
        let truth: Vec<f64> = (0..q).map(|_| rng.random_range(-0.6..0.6)).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let logistic = case % 2 == 0;
        let y: Vec<f64> = rows
            .iter()
            .zip(&t)
            .map(|(r, ti)| {
                let eta: f64 = r.iter().zip(&truth).map(|(a, b)| a * b).sum();
                if logistic {
                    f64::from(rng.random_bool(1.0 / (1.0 + (-eta).exp())))
                } else {
                    rng.sample(rand_distr::Poisson::new(ti * eta.exp()).unwrap())
                }
            })
            .collect();
        let (kind, family, offset) = if logistic {
            (GlmKind::Logistic, Family::Logistic, None)
        } else {
            (GlmKind::Poisson, Family::PoissonOffset, Some(t.as_slice()))
        };
        let (oracle, _) = newton_oracle(kind, &rows, &y, offset);
        let fit = fit_glm(&DesignMatrix::from_rows(&rows).unwrap(), &y, family, offset, &control).unwrap();
        let d = fit.beta_hat.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst[1] = worst[1].max(d);
    }

    for _ in 0..20 {
        let n = rng.random_range(15..=150);
        let beta = rng.random_range(-1.0..1.0);
        let (mut time, mut event, mut x) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            let xi: f64 = rng.sample(rand_distr::StandardNormal);
            let u: f64 = rng.random();
            let t = (-(1.0 - u).ln() * (-beta * xi).exp()).sqrt();
            let c = rng.random_range(0.8..2.5);
            time.push(t.min(c));
            event.push(t <= c);
            x.push(xi);
        }
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        let oracle = golden_max(|b| cox_loglik_bruteforce(&time, &event, &rows, &[b]), -6.0, 6.0);
        let fit = fit_cox(&SurvivalData::new(time, event, vec![x]).unwrap(), &control).unwrap();
        worst[2] = worst[2].max((fit.beta_hat[0] - oracle).abs());
    }

    Verdict::new(
        worst[0] < 1e-10 && worst[1] < 1e-8 && worst[2] < 1e-6,
        format!(
            "gaussian rel err {:.2e} (< 1e-10), logistic/poisson abs err {:.2e} (< 1e-8), cox abs err {:.2e} (< 1e-6)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn fwer_control() -> Verdict {
    let bound = 0.05 + 3.0 * (0.05f64 * 0.95 / 500.0).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for family in ModelFamily::ALL {
        let base = FwerConfig {
            family,
            seed: SEED,
            fst: vec![0.05, 0.01],
            ..Default::default()
        };
        let ind = estimate_fwer(&base).unwrap();
        let cor = estimate_fwer(&FwerConfig {
            setting: GenotypeSetting::Correlated,
            block_rho: 0.99,
            ..base
        })
        .unwrap();
        for (a, b) in ind.cells.iter().zip(&cor.cells) {
            let (ei, ec) = (a.rejections.estimate(), b.rejections.estimate());
            let ok = ei <= bound && ec < ei;
            pass &= ok;
            parts.push(format!("{family} fst {}: indep {ei:.3} corr {ec:.3}{}", a.fst, if ok { "" } else { " !" }));
        }
    }
    Verdict::new(pass, format!("bound {bound:.4}, corr < indep; {}", parts.join("; ")))
}

fn fwer_paper_scale() -> Verdict {
    let table = [
        (ModelFamily::Linear, [0.0448, 0.0462, 0.0452]),
        (ModelFamily::Poisson, [0.0416, 0.0492, 0.0364]),
        (ModelFamily::Cox, [0.0432, 0.0432, 0.0490]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (family, expected) in table {
        let r = estimate_fwer(&FwerConfig {
            family,
            n: 2000,
            p: 3000,
            replicates: 5000,
            seed: SEED,
            fst: vec![0.05, 0.01, 0.005],
            ..Default::default()
        })
        .unwrap();
        for (cell, e) in r.cells.iter().zip(expected) {
            let est = cell.rejections.estimate();
            let ok = (est - e).abs() <= 0.01;
            pass &= ok;
            parts.push(format!("{family} fst {}: {est:.4} vs {e}", cell.fst));
        }
    }
    Verdict::new(pass, parts.join("; "))
}

fn stage_independence() -> Verdict {
    let bound = 3.0 / 2000f64.sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for family in ModelFamily::ALL {
        let r = independence_check(&IndependenceConfig {
            family,
            seed: SEED,
            ..Default::default()
        })
        .unwrap();
        let pairwise = r.correlation("s1_k", "s2_kl").unwrap().abs().max(r.correlation("s1_l", "s2_kl").unwrap().abs());
        let mixed = r.correlation("s1_j", "s2_kl").unwrap().abs();
        let ok = pairwise < bound && mixed < bound && r.used == 2000;
        pass &= ok;
        parts.push(format!("{family}: pairwise {pairwise:.4} mixed {mixed:.4} used {}", r.used));
    }
    Verdict::new(pass, format!("bound {bound:.4}; {}", parts.join("; ")))
}

fn power_of(r: &PowerReport, fst: f64, beta3: f64) -> (f64, f64) {
    let c = r.cell(fst, beta3).unwrap();
    (c.power.estimate(), c.power.se())
}

fn power_shapes() -> Verdict {
    let config = PowerConfig {
        seed: SEED,
        ..Default::default()
    };
    let r = power_curve(&config).unwrap();
    let reps = config.replicates as f64;

    // (a) isotonic deviation within 3 binomial SEs of the fitted curve
    let mut worst_dev = 0.0f64;
    let mut a_ok = true;
    for &fst in &config.fst {
        let ys: Vec<f64> = config.beta3.iter().map(|&b| power_of(&r, fst, b).0).collect();
        let iso = isotonic_increasing(&ys, &vec![1.0; ys.len()]);
        for (y, f) in ys.iter().zip(&iso) {
            let fc = f.clamp(0.5 / reps, 1.0 - 0.5 / reps);
            let dev = (y - f).abs() / (fc * (1.0 - fc) / reps).sqrt();
            worst_dev = worst_dev.max(dev);
            a_ok &= dev <= 3.0;
        }
    }

    // (b) at the grid point whose single-stage power is closest to one half
    let mid = config
        .beta3
        .iter()
        .copied()
        .filter(|&b| {
            let p = power_of(&r, 1.0, b).0;
            p > 0.1 && p < 0.9
        })
        .min_by(|a, b| {
            let da = (power_of(&r, 1.0, *a).0 - 0.5).abs();
            let db = (power_of(&r, 1.0, *b).0 - 0.5).abs();
            da.total_cmp(&db)
        });
    let (b_ok, b_detail) = match mid {
        Some(b) => {
            let (p1, s1) = power_of(&r, 1.0, b);
            let (p2, s2) = power_of(&r, 0.01, b);
            let need = 2.0 * (s1 * s1 + s2 * s2).sqrt();
            (p2 - p1 >= need, format!("beta3 {b:.2}: fst 0.01 {p2:.3} vs fst 1 {p1:.3}, gap needed {need:.3}"))
        }
        None => (false, "no grid point with single-stage power in (0.1, 0.9)".to_string()),
    };

    // (c) opposite main effects at the grid maximum
    let top = *config.beta3.last().unwrap();
    let opp = power_curve(&PowerConfig {
        seed: SEED,
        beta3: vec![top],
        fst: vec![1.0, 0.005],
        main_effects: MainEffects::Opposite,
        ..Default::default()
    })
    .unwrap();
    let (q1, _) = power_of(&opp, 1.0, top);
    let (q2, _) = power_of(&opp, 0.005, top);
    let c_ok = q2 < q1;

    Verdict::new(
        a_ok && b_ok && c_ok,
        format!(
            "(a) max isotonic deviation {worst_dev:.2} SE (<= 3); (b) {b_detail}; (c) opposite, beta3 {top}: fst 0.005 {q2:.3} vs fst 1 {q1:.3}"
        ),
    )
}

fn marginal_signal() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for family in ModelFamily::ALL {
        let r = marginal_scan_study(&MarginalConfig {
            family,
            seed: SEED,
            ..Default::default()
        })
        .unwrap();
        let rho = r.positive_half_spearman();
        pass &= rho > 0.9;
        parts.push(format!("{family} {rho:.3}"));
    }
    Verdict::new(pass, format!("Spearman(beta3, |z|) > 0.9: {}", parts.join(", ")))
}

fn report_bits(r: &ScanReport) -> Vec<(usize, usize, u64, u64, u64, u64, bool, String)> {
    r.pairs
        .iter()
        .map(|p| {
            (
                p.k,
                p.l,
                p.estimate.to_bits(),
                p.z.to_bits(),
                p.raw_p.to_bits(),
                p.corrected_p.to_bits(),
                p.significant,
                p.flag.to_string(),
            )
        })
        .collect()
}

fn reduction_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = Vec::new();
    let mut total_pairs = 0;
    for instance in 0..20u64 {
        let family = ModelFamily::ALL[instance as usize % 4];
        let n = rng.random_range(120..=250);
        let p = rng.random_range(6..=14);
        let params = IndependentGenotypes {
            causal_count: 2,
            ..Default::default()
        };
        let g = simulate_genotypes_independent(n, p, &params, &mut RngSpec::new(SEED, 1000 + instance).rng()).unwrap();
        let spec = PhenotypeSpec::null(family).with_effects(0.0, 0.0, rng.random_range(0.0..0.8));
        let y = simulate_phenotype(&g, &spec, &mut RngSpec::new(SEED, 2000 + instance).rng()).unwrap();
        let config = ScanConfig::new(family).with_stage1(1.0);
        let two = run_two_stage(&g, &y, &config).unwrap();
        let all = exhaustive_scan(&g, &y, &config).unwrap();

        // independent enumeration of the pairs an exhaustive scan must test
        let ctx = ScanContext::new(&g, &y, &config).unwrap();
        let ok_markers: Vec<usize> = (0..p).filter(|&j| ctx.marker_flag(j).is_ok()).collect();
        let expected_pairs = ok_markers.len() * ok_markers.len().saturating_sub(1) / 2;

        total_pairs += two.pairs.len();
        if report_bits(&two) != report_bits(&all)
            || two.k1_effective != all.k1_effective
            || two.pairs.len() != expected_pairs
        {
            mismatches.push(instance);
        }
    }
    Verdict::new(
        mismatches.is_empty(),
        format!("20 instances, {total_pairs} pairs compared bit for bit, mismatching instances {mismatches:?}"),
    )
}

fn run_cli(args: &[String], threads: &str) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let mut full: Vec<String> = vec!["epistasis".into()];
    full.extend(args.iter().cloned());
    full.extend(["--threads".into(), threads.into(), "--out".into(), out.to_str().unwrap().into()]);
    let code = epistasis::cli_io::main_with_args(&full);
    assert_eq!(code, 0, "{full:?}");
    std::fs::read(out).unwrap()
}

fn determinism() -> Verdict {
    let mut differing = Vec::new();
    let mut runs = 0;
    for seed in 1..=5u64 {
        let family = ModelFamily::ALL[(seed as usize - 1) % 4].to_string();
        let s = seed.to_string();
        let commands: Vec<Vec<&str>> = vec![
            vec!["fwer", "--n", "200", "--p", "30", "--replicates", "20", "--fst", "0.2,0.05"],
            vec!["power", "--n", "200", "--p", "30", "--replicates", "10", "--beta3", "0,0.5,1", "--fst", "1,0.1"],
            vec!["independence", "--n", "200", "--replicates", "50"],
            vec!["marginal", "--n", "300", "--beta-step", "0.25"],
        ];
        for cmd in commands {
            let mut args: Vec<String> = cmd.iter().map(|a| a.to_string()).collect();
            args.extend(["--seed".into(), s.clone(), "--family".into(), family.clone()]);
            runs += 1;
            if run_cli(&args, "1") != run_cli(&args, "8") {
                differing.push(format!("{} seed {seed}", cmd[0]));
            }
        }
    }
    Verdict::new(
        differing.is_empty(),
        format!("{runs} command runs compared at 1 and 8 threads, differing: {differing:?}"),
    )
}

fn calibration() -> Verdict {
    let n = 100_000;
    let nf = n as f64;

    let cox = simulate_outcome(&vec![0.0; n], &PhenotypeSpec::null(ModelFamily::Cox), &mut RngSpec::new(SEED, 1).rng()).unwrap();
    let Outcome::Survival { event, .. } = cox else { unreachable!() };
    let censored = event.iter().filter(|e| !**e).count() as f64 / nf;
    let cens_ok = (censored - 0.10).abs() <= 0.01;

    let spec = PhenotypeSpec {
        censor_quantiles: (1.0 - 1e-12, 1.0 - 1e-12),
        ..PhenotypeSpec::null(ModelFamily::Cox)
    };
    let Outcome::Survival { mut time, .. } = simulate_outcome(&vec![0.0; n], &spec, &mut RngSpec::new(SEED, 2).rng()).unwrap() else {
        unreachable!()
    };
    time.sort_by(f64::total_cmp);
    let mut worst_na = 0.0f64;
    for k in 0..=9 {
        let t = 0.3 + 0.1 * f64::from(k);
        let h: f64 = (0..time.partition_point(|&s| s <= t)).map(|i| 1.0 / (n - i) as f64).sum();
        worst_na = worst_na.max((h / (t * t) - 1.0).abs());
    }
    let na_ok = worst_na < 0.05;

    let Outcome::Continuous(y) = simulate_outcome(&vec![0.0; n], &PhenotypeSpec::null(ModelFamily::Linear), &mut RngSpec::new(SEED, 3).rng()).unwrap() else {
        unreachable!()
    };
    let m = y.iter().sum::<f64>() / nf;
    let v = y.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nf - 1.0);
    let (zm, zv) = (m * nf.sqrt(), (v - 1.0) / (2.0 / nf).sqrt());

    let pspec = PhenotypeSpec {
        offset_range: (3.0, 3.0),
        ..PhenotypeSpec::null(ModelFamily::Poisson)
    };
    let Outcome::Count { y: counts, .. } = simulate_outcome(&vec![2f64.ln(); n], &pspec, &mut RngSpec::new(SEED, 4).rng()).unwrap() else {
        unreachable!()
    };
    let pm = counts.iter().sum::<f64>() / nf;
    let zp = (pm - 6.0) / (6.0 / nf).sqrt();
    let moments_ok = zm.abs() < 4.0 && zv.abs() < 4.0 && zp.abs() < 4.0;

    Verdict::new(
        cens_ok && na_ok && moments_ok,
        format!(
            "censored {censored:.4} (0.10 +- 0.01); Nelson-Aalen max rel err {worst_na:.4} (< 0.05); gaussian mean {zm:.2} SE, variance {zv:.2} SE; poisson mean {zp:.2} SE (|.| < 4)"
        ),
    )
}
