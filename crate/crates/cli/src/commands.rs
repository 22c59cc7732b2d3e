//! Subcommands other than `verify`.

use serde::Serialize;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use signlab_core::eigenforms::cache::load_or_generate;
use signlab_core::eigenforms::{CoefficientTable, FormId};
use signlab_core::gmf::{exponents_from_coefficients, roundtrip_check, write_exponent_csv};
use signlab_core::signlab::{
    dyadic_windows, prime_sum_series, scan_windows, write_primesums_csv, write_signchanges_csv,
    FitReport, SignChangeReport, SignSource, TheoremConstants, Window,
};
use signlab_core::{Error, Result};

use crate::config::{Format, RunConfig, Series};
use crate::svg::loglog_chart;

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Exact checks that ran alongside the command and failed.
    pub failures: Vec<String>,
}

impl Outcome {
    fn files(files: Vec<PathBuf>) -> Outcome {
        Outcome {
            files,
            failures: Vec::new(),
        }
    }
}

pub fn load_table(cfg: &RunConfig, form: FormId, limit: u64) -> Result<CoefficientTable> {
    Ok(load_or_generate(form.spec(), limit, cfg.cache_dir.as_deref())?.0)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn cmd_coeffs(cfg: &RunConfig) -> Result<Outcome> {
    let limit = cfg.limit.unwrap_or(1000);
    let table = load_table(cfg, cfg.form, limit)?;
    let path = cfg.out.join(format!(
        "coeffs_{}_{}.{}",
        cfg.form,
        limit,
        extension(cfg.format)
    ));
    match cfg.format {
        Format::Csv => {
            let mut w = create(&path)?;
            writeln!(w, "n,a_n")?;
            for (i, a) in table.coefficients().iter().enumerate() {
                writeln!(w, "{},{}", i + 1, a)?;
            }
            w.flush()?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Coeffs {
                form: String,
                limit: u64,
                a_n: Vec<String>,
            }
            write_json(
                &path,
                &Coeffs {
                    form: cfg.form.to_string(),
                    limit,
                    a_n: table.coefficients().iter().map(|a| a.to_string()).collect(),
                },
            )?;
        }
    }
    Ok(Outcome::files(vec![path]))
}

pub fn cmd_gmf(cfg: &RunConfig) -> Result<Outcome> {
    let limit = cfg.limit.unwrap_or(1000);
    let table = load_table(cfg, cfg.form, limit)?;
    let exp = exponents_from_coefficients(&table)?;
    let path = cfg
        .out
        .join(format!("exponents_{}_{}.csv", cfg.form, limit));
    write_exponent_csv(&exp, create(&path)?)?;
    let mut out = Outcome::files(vec![path]);
    let rt = roundtrip_check(&exp, &table)?;
    if let Some(n) = rt.first_failure {
        out.failures
            .push(format!("round trip fails first at n = {n}"));
    }
    Ok(out)
}

/// Windows for the configured grid and the table limit they need.
fn grid(cfg: &RunConfig) -> Result<(Vec<Window>, u64)> {
    let windows = dyadic_windows(cfg.x0, cfg.windows, cfg.window_mode);
    let reach = windows.iter().map(|w| w.x + w.h).fold(0.0, f64::max);
    if !reach.is_finite() || reach >= u64::MAX as f64 {
        return Err(Error::Capacity {
            what: "window range",
            requested: u64::MAX,
            ceiling: signlab_core::eigenforms::GENERATION_CEILING,
        });
    }
    let needed = (reach.floor() as u64).max(2);
    Ok((windows, needed.max(cfg.limit.unwrap_or(0))))
}

fn series_tag(cfg: &RunConfig) -> String {
    match cfg.series {
        Series::Lambda => format!("j{}", cfg.power),
        Series::CPrime => "cprime".into(),
    }
}

/// Sign-change reports for the configured grid, with the scan description.
fn scan(cfg: &RunConfig) -> Result<(Vec<SignChangeReport>, String)> {
    let (windows, limit) = grid(cfg)?;
    let table = load_table(cfg, cfg.form, limit)?;
    match cfg.series {
        Series::Lambda => {
            let source = SignSource::Lambda {
                table: &table,
                j: cfg.power,
            };
            Ok((scan_windows(source, &windows)?, source.describe()))
        }
        Series::CPrime => {
            let exponents = exponents_from_coefficients(&table)?;
            let source = SignSource::CPrime {
                exponents: &exponents,
            };
            Ok((scan_windows(source, &windows)?, source.describe()))
        }
    }
}

/// `δ_j` for λ(n^j) scans with `j ∈ {2, 3, 4}`.
fn reference_exponent(cfg: &RunConfig) -> Option<f64> {
    match cfg.series {
        Series::Lambda => TheoremConstants::for_power(cfg.power)
            .ok()
            .map(|c| c.delta_f64()),
        Series::CPrime => None,
    }
}

pub fn cmd_signchanges(cfg: &RunConfig) -> Result<Outcome> {
    let (reports, title) = scan(cfg)?;
    let stem = format!("signchanges_{}_{}", cfg.form, series_tag(cfg));
    let path = cfg.out.join(format!("{stem}.{}", extension(cfg.format)));
    match cfg.format {
        Format::Csv => write_signchanges_csv(&reports, create(&path)?)?,
        Format::Json => write_json(&path, &reports)?,
    }
    let mut files = vec![path];
    if cfg.svg {
        let points: Vec<(f64, u64)> = reports.iter().map(|r| (r.x, r.count)).collect();
        let svg_path = cfg.out.join(format!("{stem}.svg"));
        let mut w = create(&svg_path)?;
        w.write_all(
            loglog_chart(
                &format!("sign changes of {title}"),
                &points,
                reference_exponent(cfg),
            )
            .as_bytes(),
        )?;
        w.flush()?;
        files.push(svg_path);
    }
    Ok(Outcome::files(files))
}

pub fn cmd_primesums(cfg: &RunConfig) -> Result<Outcome> {
    let xs: Vec<f64> = (0..cfg.windows)
        .map(|t| cfg.x0 * 2f64.powi(t as i32))
        .collect();
    let top = xs.last().copied().unwrap_or(cfg.x0);
    let limit = (top.floor() as u64).max(2).max(cfg.limit.unwrap_or(0));
    let table = load_table(cfg, cfg.form, limit)?;
    let reports = prime_sum_series(&table, &xs)?;
    let path = cfg
        .out
        .join(format!("primesums_{}.{}", cfg.form, extension(cfg.format)));
    match cfg.format {
        Format::Csv => write_primesums_csv(&reports, create(&path)?)?,
        Format::Json => write_json(&path, &reports)?,
    }
    Ok(Outcome::files(vec![path]))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Outcome> {
    let (reports, title) = scan(cfg)?;
    let points = reports.iter().map(|r| (r.x, r.count)).collect();
    let report = FitReport::new(title, points, reference_exponent(cfg))?;
    let path = cfg
        .out
        .join(format!("fit_{}_{}.json", cfg.form, series_tag(cfg)));
    write_json(&path, &report)?;
    Ok(Outcome::files(vec![path]))
}
