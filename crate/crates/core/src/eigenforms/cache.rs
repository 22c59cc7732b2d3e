//! On-disk coefficient cache.
//!
//! One file per `(form, limit)`, named `<form>_<limit>.tsv`: a header line,
//! then one row `n<TAB>a(n)` per index.
//!
//! ```text
//! # form=delta weight=12 level=1 limit=5
//! 1    1
//! 2    -24
//! ...
//! ```
//!
//! A cache file is only trusted up to the limit in its header. A request for
//! a smaller limit is served by truncating the closest larger file; a larger
//! request regenerates and writes a new file.

use num_bigint::BigInt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{generate_coefficients, CoefficientTable, FormId, FormSpec};
use crate::{Error, Result};

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "SIGNLAB_CACHE_DIR";

pub fn cache_file_name(form: FormId, limit: u64) -> String {
    format!("{}_{}.tsv", form.as_str(), limit)
}

pub fn header_line(form: FormSpec, limit: u64) -> String {
    format!(
        "# form={} weight={} level={} limit={}",
        form.id, form.weight, form.level, limit
    )
}

/// Serializes a table in cache format.
pub fn write_table<W: Write>(table: &CoefficientTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", header_line(table.form(), table.limit()))?;
    for (i, a) in table.coefficients().iter().enumerate() {
        writeln!(out, "{}\t{}", i + 1, a)?;
    }
    out.flush()
}

/// Writes `<dir>/<form>_<limit>.tsv` atomically and returns its path.
pub fn write_cache(table: &CoefficientTable, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(cache_file_name(table.form().id, table.limit()));
    let tmp = path.with_extension("tsv.tmp");
    {
        let f = fs::File::create(&tmp)?;
        write_table(table, BufWriter::new(f))?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn parse_header(line: &str) -> Option<(FormSpec, u64)> {
    let rest = line.strip_prefix("# ")?;
    let mut form = None;
    let mut weight = None;
    let mut level = None;
    let mut limit = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        match k {
            "form" => form = v.parse::<FormId>().ok(),
            "weight" => weight = v.parse::<u32>().ok(),
            "level" => level = v.parse::<u64>().ok(),
            "limit" => limit = v.parse::<u64>().ok(),
            _ => return None,
        }
    }
    let spec = form?.spec();
    if Some(spec.weight) != weight || Some(spec.level) != level {
        return None;
    }
    Some((spec, limit?))
}

/// Reads a cache file. The header must name a cataloged form with its own
/// weight and level, and the body must hold exactly `1..=limit` in order.
pub fn read_cache(path: &Path) -> Result<CoefficientTable> {
    let bad = |reason: String| Error::Cache {
        path: path.to_path_buf(),
        reason,
    };
    let f = fs::File::open(path)?;
    let mut lines = BufReader::new(f).lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let (form, limit) =
        parse_header(&header).ok_or_else(|| bad(format!("bad header `{header}`")))?;
    let mut coeffs = Vec::with_capacity(limit as usize);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let expect = i as u64 + 1;
        let (n, a) = line
            .split_once('\t')
            .ok_or_else(|| bad(format!("line {} has no tab", i + 2)))?;
        if n.parse::<u64>().ok() != Some(expect) {
            return Err(bad(format!("expected index {expect}, found `{n}`")));
        }
        let a: BigInt = a
            .parse()
            .map_err(|_| bad(format!("bad coefficient `{a}` at n = {expect}")))?;
        coeffs.push(a);
    }
    if coeffs.len() as u64 != limit {
        return Err(bad(format!(
            "header limit {limit} but {} coefficient lines",
            coeffs.len()
        )));
    }
    CoefficientTable::from_coefficients(form, coeffs)
}

/// Where a table came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    /// Generated without a cache directory.
    Uncached,
    /// Exact `(form, limit)` file.
    Hit(PathBuf),
    /// Truncated from a file with a larger limit.
    Truncated(PathBuf),
    /// Generated and written to the cache.
    Generated(PathBuf),
}

/// Cache files for `form` present in `dir`, as `(limit, path)` ascending.
pub fn cached_limits(form: FormId, dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    let prefix = format!("{}_", form.as_str());
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(limit) = name
            .strip_prefix(&prefix)
            .and_then(|r| r.strip_suffix(".tsv"))
            .and_then(|r| r.parse::<u64>().ok())
        {
            out.push((limit, path));
        }
    }
    out.sort();
    Ok(out)
}

/// The table for `(form, limit)`, served from `dir` when possible.
pub fn load_or_generate(
    form: FormSpec,
    limit: u64,
    dir: Option<&Path>,
) -> Result<(CoefficientTable, CacheOutcome)> {
    let Some(dir) = dir else {
        return Ok((generate_coefficients(form, limit)?, CacheOutcome::Uncached));
    };
    let candidates = cached_limits(form.id, dir)?;
    if let Some((cached_limit, path)) = candidates.into_iter().find(|(l, _)| *l >= limit) {
        let table = read_cache(&path)?;
        if table.form() != form || table.limit() != cached_limit {
            return Err(Error::Cache {
                path,
                reason: "header does not match file name".into(),
            });
        }
        return if cached_limit == limit {
            Ok((table, CacheOutcome::Hit(path)))
        } else {
            Ok((table.truncated(limit)?, CacheOutcome::Truncated(path)))
        };
    }
    let table = generate_coefficients(form, limit)?;
    let path = write_cache(&table, dir)?;
    Ok((table, CacheOutcome::Generated(path)))
}
