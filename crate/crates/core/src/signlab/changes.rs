use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use super::{format_sig, Sign};
use crate::eigenforms::{power_sign_factored, CoefficientTable};
use crate::gmf::ExponentTable;
use crate::numtheory::{sieve_primes, SpfTable};
use crate::{Error, Result};

/// Which indices a [`SignSeries`] ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IndexDomain {
    Integers,
    Primes,
}

/// Exact signs at strictly increasing indices covering `(start, end]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignSeries {
    domain: IndexDomain,
    start: u64,
    end: u64,
    entries: Vec<(u64, Sign)>,
}

impl SignSeries {
    pub fn new(
        domain: IndexDomain,
        start: u64,
        end: u64,
        entries: Vec<(u64, Sign)>,
    ) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Usage(
                "sign series indices must be strictly increasing".into(),
            ));
        }
        if entries.first().is_some_and(|e| e.0 <= start)
            || entries.last().is_some_and(|e| e.0 > end)
        {
            return Err(Error::Usage(
                "sign series entry outside its coverage".into(),
            ));
        }
        Ok(SignSeries {
            domain,
            start,
            end,
            entries,
        })
    }

    pub fn domain(&self) -> IndexDomain {
        self.domain
    }

    /// Covered indices are `(start, end]`.
    pub fn coverage(&self) -> (u64, u64) {
        (self.start, self.end)
    }

    pub fn entries(&self) -> &[(u64, Sign)] {
        &self.entries
    }

    pub fn flipped(&self) -> SignSeries {
        SignSeries {
            entries: self
                .entries
                .iter()
                .map(|&(i, s)| (i, s.flipped()))
                .collect(),
            ..self.clone()
        }
    }
}

/// Counted sign changes in `(x, x + h]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignChangeReport {
    pub x: f64,
    pub h: f64,
    pub count: u64,
    /// Consecutive nonzero entries `(n₁, n₂)` of opposite sign.
    pub positions: Vec<(u64, u64)>,
    pub zeros_seen: u64,
    pub nonzero_seen: u64,
}

/// Counts opposite-sign pairs among consecutive nonzero entries inside
/// `(x, x + h]`. Zeros are skipped: they neither break nor create a change.
pub fn count_sign_changes(s: &SignSeries, x: f64, h: f64) -> Result<SignChangeReport> {
    if !(x >= 0.0 && h > 0.0 && (x + h).is_finite()) {
        return Err(Error::Domain(format!(
            "window ({x}, {x} + {h}] is not valid"
        )));
    }
    let hi = x + h;
    let hi_index = hi.floor() as u64;
    if hi_index > s.end {
        return Err(Error::insufficient(hi_index, s.end));
    }
    if x < s.start as f64 {
        return Err(Error::InsufficientData {
            needed: x.floor() as u64,
            available: s.start,
        });
    }
    let first = s.entries.partition_point(|&(i, _)| i as f64 <= x);
    let mut report = SignChangeReport {
        x,
        h,
        count: 0,
        positions: Vec::new(),
        zeros_seen: 0,
        nonzero_seen: 0,
    };
    let mut last: Option<(u64, Sign)> = None;
    for &(i, sign) in s.entries[first..]
        .iter()
        .take_while(|&&(i, _)| i as f64 <= hi)
    {
        if sign == Sign::Zero {
            report.zeros_seen += 1;
            continue;
        }
        report.nonzero_seen += 1;
        if let Some((j, prev)) = last {
            if prev != sign {
                report.positions.push((j, i));
            }
        }
        last = Some((i, sign));
    }
    report.count = report.positions.len() as u64;
    Ok(report)
}

/// A sequence whose signs can be scanned.
#[derive(Clone, Copy, Debug)]
pub enum SignSource<'a> {
    /// `λ(n^j)` over all `n`.
    Lambda { table: &'a CoefficientTable, j: u32 },
    /// `c′(p)` over primes.
    CPrime { exponents: &'a ExponentTable },
}

impl SignSource<'_> {
    pub fn domain(&self) -> IndexDomain {
        match self {
            SignSource::Lambda { .. } => IndexDomain::Integers,
            SignSource::CPrime { .. } => IndexDomain::Primes,
        }
    }

    /// Largest index the source can produce.
    pub fn reach(&self) -> u64 {
        match self {
            SignSource::Lambda { table, .. } => table.limit(),
            SignSource::CPrime { exponents } => exponents.limit(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SignSource::Lambda { table, j } => format!("lambda(n^{j}) {}", table.form().id),
            SignSource::CPrime { exponents } => format!("cprime(p) {}", exponents.form().id),
        }
    }
}

/// Exact signs of `source` at every index in `(start, end]`.
pub fn sign_series(source: SignSource<'_>, start: u64, end: u64) -> Result<SignSeries> {
    if end > source.reach() {
        return Err(Error::insufficient(end, source.reach()));
    }
    let entries = match source {
        SignSource::Lambda { table, j } => {
            let spf = SpfTable::new(end)?;
            ((start + 1)..=end)
                .into_par_iter()
                .map(|n| Ok((n, power_sign_factored(table, &spf.factorize(n)?, j)?)))
                .collect::<Result<Vec<_>>>()?
        }
        SignSource::CPrime { exponents } => sieve_primes(end)?
            .into_iter()
            .filter(|&p| p > start)
            .map(|p| Ok((p, Sign::of_i64(exponents.m(p)?))))
            .collect::<Result<Vec<_>>>()?,
    };
    SignSeries::new(source.domain(), start, end, entries)
}

/// `(x, x + h]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub x: f64,
    pub h: f64,
}

/// How the window length `h` follows from its left end `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowMode {
    /// `h = x`.
    Dyadic,
    /// `h = x^a`.
    Power(f64),
    /// `h = x / exp(A·√log x)`.
    ExpSqrt(f64),
}

impl WindowMode {
    pub fn h(&self, x: f64) -> f64 {
        match *self {
            WindowMode::Dyadic => x,
            WindowMode::Power(a) => x.powf(a),
            WindowMode::ExpSqrt(a) => x / (a * x.ln().max(0.0).sqrt()).exp(),
        }
    }
}

/// Windows starting at `x₀·2^t`, `t = 0..count`.
pub fn dyadic_windows(x0: f64, count: u32, mode: WindowMode) -> Vec<Window> {
    (0..count)
        .map(|t| {
            let x = x0 * 2f64.powi(t as i32);
            Window { x, h: mode.h(x) }
        })
        .collect()
}

/// One report per window. Windows are evaluated in parallel; the output
/// order and content do not depend on scheduling.
pub fn scan_windows(source: SignSource<'_>, windows: &[Window]) -> Result<Vec<SignChangeReport>> {
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let lo = windows.iter().map(|w| w.x).fold(f64::INFINITY, f64::min);
    let hi = windows.iter().map(|w| w.x + w.h).fold(0.0, f64::max);
    if !(lo >= 0.0 && hi.is_finite()) {
        return Err(Error::Domain(
            "window bounds must be finite and non-negative".into(),
        ));
    }
    let series = sign_series(source, lo.floor() as u64, hi.floor() as u64)?;
    windows
        .par_iter()
        .map(|w| count_sign_changes(&series, w.x, w.h))
        .collect()
}

/// Reports for `(x, 2x]`, `x = x₀·2^t`, `t = 0..windows`.
pub fn dyadic_sign_change_scan(
    source: SignSource<'_>,
    x0: f64,
    windows: u32,
) -> Result<Vec<SignChangeReport>> {
    scan_windows(source, &dyadic_windows(x0, windows, WindowMode::Dyadic))
}

/// CSV with header `x,h,count,zeros_seen,first_pair,last_pair`; pairs are
/// written `n1:n2` and left empty when there is none.
pub fn write_signchanges_csv<W: Write>(
    reports: &[SignChangeReport],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "x,h,count,zeros_seen,first_pair,last_pair")?;
    let pair = |p: Option<&(u64, u64)>| p.map(|(a, b)| format!("{a}:{b}")).unwrap_or_default();
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_sig(r.x),
            format_sig(r.h),
            r.count,
            r.zeros_seen,
            pair(r.positions.first()),
            pair(r.positions.last()),
        )?;
    }
    out.flush()
}
