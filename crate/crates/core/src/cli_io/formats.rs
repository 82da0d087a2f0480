//! CSV readers and writers for genotypes, phenotypes, fixed covariates and
//! per-marker thresholds.
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{FixedCovariates, GenotypeMatrix, ModelFamily, Outcome};
use crate::error::{Error, Result};

/// `{:.16e}`: 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Header fields and data rows of a comma-separated file; blank lines are
/// skipped, every row must have as many fields as the header.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<(usize, Vec<String>)>)> {
    let mut lines = open(path)?.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, Ok(l))) if l.trim().is_empty() => continue,
            Some((_, Ok(l))) => break split(&l),
            Some((i, Err(e))) => return Err(parse_error(path, i + 1, e.to_string())),
            None => return Err(parse_error(path, 1, "file is empty")),
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split(&line);
        if fields.len() != header.len() {
            return Err(parse_error(
                path,
                i + 1,
                format!("{} fields, header has {}", fields.len(), header.len()),
            ));
        }
        rows.push((i + 1, fields));
    }
    Ok((header, rows))
}

fn split(line: &str) -> Vec<String> {
    line.trim_end_matches('\r').split(',').map(|f| f.trim().to_string()).collect()
}

fn parse_real(path: &Path, line: usize, column: &str, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| parse_error(path, line, format!("column '{column}': '{field}' is not a number")))
}

pub fn read_genotypes(path: &Path) -> Result<GenotypeMatrix> {
    let (names, rows) = read_table(path)?;
    let (n, p) = (rows.len(), names.len());
    if n == 0 {
        return Err(parse_error(path, 2, "no genotype rows"));
    }
    let mut data = vec![0u8; n * p];
    for (r, (line, fields)) in rows.iter().enumerate() {
        for (j, f) in fields.iter().enumerate() {
            data[j * n + r] = match f.as_str() {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                other => {
                    return Err(parse_error(
                        path,
                        *line,
                        format!(
                            "row {}, column {} ('{}'): entry '{other}' is not 0, 1 or 2",
                            r + 1,
                            j + 1,
                            names[j]
                        ),
                    ))
                }
            };
        }
    }
    GenotypeMatrix::from_column_major(n, p, data)?.with_names(names)
}

pub fn write_genotypes(path: &Path, geno: &GenotypeMatrix) -> Result<()> {
    let mut w = create(path)?;
    let p = geno.ncols();
    let names: Vec<String> = (0..p).map(|j| geno.marker_name(j)).collect();
    let mut out = names.join(",");
    out.push('\n');
    let mut line = String::with_capacity(2 * p);
    for i in 0..geno.nrows() {
        line.clear();
        for j in 0..p {
            if j > 0 {
                line.push(',');
            }
            line.push(char::from(b'0' + geno.get(i, j)));
        }
        line.push('\n');
        out.push_str(&line);
        if out.len() > 1 << 16 {
            w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
            out.clear();
        }
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn expected_columns(family: ModelFamily) -> &'static [&'static str] {
    match family {
        ModelFamily::Linear | ModelFamily::Logistic => &["y"],
        ModelFamily::Poisson => &["y", "offset"],
        ModelFamily::Cox => &["time", "event"],
    }
}

pub fn read_phenotypes(path: &Path, family: ModelFamily) -> Result<Outcome> {
    let (header, rows) = read_table(path)?;
    let expected = expected_columns(family);
    if header != expected {
        return Err(parse_error(
            path,
            1,
            format!("header {:?} does not match {:?} for the {family} family", header, expected),
        ));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); expected.len()];
    let mut events = Vec::new();
    for (line, fields) in &rows {
        for (c, f) in fields.iter().enumerate() {
            if family == ModelFamily::Cox && c == 1 {
                events.push(match f.as_str() {
                    "1" => true,
                    "0" => false,
                    other => return Err(parse_error(path, *line, format!("event '{other}' is not 0 or 1"))),
                });
            } else {
                cols[c].push(parse_real(path, *line, expected[c], f)?);
            }
        }
    }
    let mut cols = cols.into_iter();
    let first = cols.next().unwrap_or_default();
    Ok(match family {
        ModelFamily::Linear | ModelFamily::Logistic => Outcome::Continuous(first),
        ModelFamily::Poisson => Outcome::Count {
            y: first,
            offset: cols.next().unwrap_or_default(),
        },
        ModelFamily::Cox => Outcome::Survival {
            time: first,
            event: events,
        },
    })
}

pub fn write_phenotypes(path: &Path, outcome: &Outcome) -> Result<()> {
    let mut out = String::new();
    match outcome {
        Outcome::Continuous(y) => {
            out.push_str("y\n");
            for v in y {
                out.push_str(&fmt_real(*v));
                out.push('\n');
            }
        }
        Outcome::Count { y, offset } => {
            out.push_str("y,offset\n");
            for (v, t) in y.iter().zip(offset) {
                out.push_str(&format!("{},{}\n", fmt_count(*v), fmt_real(*t)));
            }
        }
        Outcome::Survival { time, event } => {
            out.push_str("time,event\n");
            for (t, e) in time.iter().zip(event) {
                out.push_str(&format!("{},{}\n", fmt_real(*t), u8::from(*e)));
            }
        }
    }
    let mut w = create(path)?;
    w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt_count(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_real(v)
    }
}

pub fn read_covariates(path: &Path) -> Result<FixedCovariates> {
    let (names, rows) = read_table(path)?;
    let mut cols = vec![Vec::with_capacity(rows.len()); names.len()];
    for (line, fields) in &rows {
        for (c, f) in fields.iter().enumerate() {
            cols[c].push(parse_real(path, *line, &names[c], f)?);
        }
    }
    FixedCovariates::new(rows.len(), cols, names)
}

pub fn write_covariates(path: &Path, fixed: &FixedCovariates) -> Result<()> {
    let mut out = fixed.names().join(",");
    out.push('\n');
    for i in 0..fixed.nrows() {
        let row: Vec<String> = fixed.columns().iter().map(|c| fmt_real(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut w = create(path)?;
    w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// One threshold per line in marker order; an optional non-numeric first
/// line is taken as a header.
pub fn read_thresholds(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(parse_error(path, i + 1, format!("'{field}' is not a number"))),
        }
    }
    Ok(out)
}

/// Checks that genotypes, outcome and covariates describe the same individuals.
pub fn check_alignment(geno: &GenotypeMatrix, outcome: &Outcome, fixed: &FixedCovariates) -> Result<()> {
    let n = geno.nrows();
    if outcome.len() != n {
        return Err(Error::Alignment(format!(
            "phenotype file has {} rows, genotype file has {n}",
            outcome.len()
        )));
    }
    if fixed.ncols() > 0 && fixed.nrows() != n {
        return Err(Error::Alignment(format!(
            "covariate file has {} rows, genotype file has {n}",
            fixed.nrows()
        )));
    }
    Ok(())
}
