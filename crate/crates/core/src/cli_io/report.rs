//! CSV renderings of scan and study results. Column order is fixed; reals use
//! [`fmt_real`].

use std::io::Write;

use super::formats::fmt_real;
use crate::data::GenotypeMatrix;
use crate::experiments::{FwerReport, IndependenceReport, MarginalReport, PowerReport};
use crate::two_stage::ScanReport;

pub const SCREEN_HEADER: &str = "marker,z,p,passed,threshold,quality_flag";
pub const PAIRS_HEADER: &str = "k,l,estimate,z,raw_p,corrected_p,significant,quality_flag";
pub const FWER_HEADER: &str = "family,setting,fst,estimate,se,rejections,replicates,seed";
pub const POWER_HEADER: &str = "fst,beta3,power,se,hits,replicates,family,main_effects,setting,seed";
pub const INDEPENDENCE_HEADER: &str = "first,second,correlation,replicates,mardia_kurtosis,mardia_z,family,seed";
pub const MARGINAL_HEADER: &str = "beta,z,family,n,seed";

pub fn write_screen(w: &mut (impl Write + ?Sized), report: &ScanReport, geno: &GenotypeMatrix) -> std::io::Result<()> {
    writeln!(w, "{SCREEN_HEADER}")?;
    for m in &report.screen.markers {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            geno.marker_name(m.index),
            fmt_real(m.z),
            fmt_real(m.p_value),
            m.passed,
            fmt_real(m.threshold),
            m.flag
        )?;
    }
    Ok(())
}

pub fn write_pairs(w: &mut (impl Write + ?Sized), report: &ScanReport, geno: &GenotypeMatrix) -> std::io::Result<()> {
    writeln!(w, "{PAIRS_HEADER}")?;
    for r in &report.pairs {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            geno.marker_name(r.k),
            geno.marker_name(r.l),
            fmt_real(r.estimate),
            fmt_real(r.z),
            fmt_real(r.raw_p),
            fmt_real(r.corrected_p),
            r.significant,
            r.flag
        )?;
    }
    Ok(())
}

/// One-line summary of a scan.
pub fn summary_line(report: &ScanReport) -> String {
    let tested = report.pairs.iter().filter(|r| r.flag.is_ok()).count();
    let alpha2 = report.alpha2.map_or_else(|| "NA".to_string(), fmt_real);
    format!(
        "K={} selected={} pairs={} tested={} k1_mode={} K1={} alpha2={} significant={} any_rejection={}",
        report.screen.markers.len(),
        report.screen.selected.len(),
        report.pairs.len(),
        tested,
        report.k1_mode,
        report.k1_effective,
        alpha2,
        report.significant_pairs().count(),
        report.any_rejection
    )
}

pub fn write_fwer(w: &mut (impl Write + ?Sized), report: &FwerReport) -> std::io::Result<()> {
    writeln!(w, "{FWER_HEADER}")?;
    let c = &report.config;
    for cell in &report.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            c.family,
            c.setting.name(),
            fmt_real(cell.fst),
            fmt_real(cell.rejections.estimate()),
            fmt_real(cell.rejections.se()),
            cell.rejections.hits,
            cell.rejections.replicates,
            c.seed
        )?;
    }
    Ok(())
}

pub fn write_power(w: &mut (impl Write + ?Sized), report: &PowerReport) -> std::io::Result<()> {
    writeln!(w, "{POWER_HEADER}")?;
    let c = &report.config;
    for cell in &report.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_real(cell.fst),
            fmt_real(cell.beta3),
            fmt_real(cell.power.estimate()),
            fmt_real(cell.power.se()),
            cell.power.hits,
            cell.power.replicates,
            c.family,
            c.main_effects.name(),
            c.setting.name(),
            c.seed
        )?;
    }
    Ok(())
}

pub fn write_independence(w: &mut (impl Write + ?Sized), report: &IndependenceReport) -> std::io::Result<()> {
    writeln!(w, "{INDEPENDENCE_HEADER}")?;
    for e in &report.correlations {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            e.first,
            e.second,
            fmt_real(e.correlation),
            report.used,
            fmt_real(report.mardia_kurtosis),
            fmt_real(report.mardia_z),
            report.config.family,
            report.config.seed
        )?;
    }
    Ok(())
}

pub fn write_marginal(w: &mut (impl Write + ?Sized), report: &MarginalReport) -> std::io::Result<()> {
    writeln!(w, "{MARGINAL_HEADER}")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_real(r.beta),
            fmt_real(r.z),
            report.config.family,
            report.config.n,
            report.config.seed
        )?;
    }
    Ok(())
}
