use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use super::{format_sig, CompensatedSum, TheoremConstants};
use crate::eigenforms::{lambda_power_factored, CoefficientTable};
use crate::numtheory::{sieve_primes, SpfTable};
use crate::{Error, Result};

/// `λ(n^j)` for `n ≤ end`, in index order.
fn power_values(table: &CoefficientTable, j: u32, start: u64, end: u64) -> Result<Vec<f64>> {
    if end > table.limit() {
        return Err(Error::insufficient(end, table.limit()));
    }
    if end <= start {
        return Ok(Vec::new());
    }
    let spf = SpfTable::new(end)?;
    ((start + 1)..=end)
        .into_par_iter()
        .map(|n| Ok(lambda_power_factored(table, &spf.factorize(n)?, j)?.value))
        .collect()
}

fn check_power(j: u32) -> Result<()> {
    if (1..=4).contains(&j) {
        Ok(())
    } else {
        Err(Error::Domain(format!("power j = {j} outside 1..=4")))
    }
}

fn window_end(x: f64) -> Result<u64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!(
            "bound {x} must be finite and non-negative"
        )));
    }
    Ok(x.floor() as u64)
}

/// Running moments of `λ(n^j)` over `n ≤ x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerMoments {
    pub x: f64,
    pub first: f64,
    pub second: f64,
    /// `second / x`.
    pub bhat: f64,
    /// Indices with `λ(n^j) = 0`.
    pub zeros: u64,
}

pub fn power_moment_sums(table: &CoefficientTable, j: u32, x: f64) -> Result<PowerMoments> {
    check_power(j)?;
    let end = window_end(x)?;
    if end == 0 {
        return Err(Error::Domain("moment sums need x ≥ 1".into()));
    }
    let values = power_values(table, j, 0, end)?;
    let first: CompensatedSum = values.iter().copied().collect();
    let second: CompensatedSum = values.iter().map(|v| v * v).collect();
    Ok(PowerMoments {
        x,
        first: first.value(),
        second: second.value(),
        bhat: second.value() / x,
        zeros: values.iter().filter(|&&v| v == 0.0).count() as u64,
    })
}

/// Moments of `λ(n^j)` over `(x, x + h]` with the scales they are compared to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalMoments {
    pub x: f64,
    pub h: f64,
    pub first: f64,
    pub second: f64,
    /// `h·B̂_j(x + h)`.
    pub reference_second: f64,
    /// `(x + h)^{β_j}`; absent for `j = 1`.
    pub reference_first: Option<f64>,
}

pub fn interval_moments(
    table: &CoefficientTable,
    j: u32,
    x: f64,
    h: f64,
) -> Result<IntervalMoments> {
    check_power(j)?;
    if h.is_nan() || h < 0.0 {
        return Err(Error::Domain(format!("window length {h} is negative")));
    }
    let lo = window_end(x)?;
    let hi = window_end(x + h)?;
    let all = power_values(table, j, 0, hi)?;
    let second_of = |vals: &[f64]| {
        vals.iter()
            .map(|v| v * v)
            .collect::<CompensatedSum>()
            .value()
    };
    let inside = &all[lo.min(hi) as usize..];
    let first: CompensatedSum = inside.iter().copied().collect();
    let bhat = if hi == 0 {
        0.0
    } else {
        second_of(&all) / (x + h)
    };
    let reference_first = match j {
        1 => None,
        _ => Some((x + h).powf(TheoremConstants::for_power(j)?.beta_f64())),
    };
    Ok(IntervalMoments {
        x,
        h,
        first: first.value(),
        second: second_of(inside),
        reference_second: h * bhat,
        reference_first,
    })
}

/// Weighted prime sums up to `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrimeSumReport {
    pub x: f64,
    /// `Σ λ(p) log p`.
    pub s1: f64,
    /// `Σ λ²(p) log p`.
    pub s2: f64,
    /// `Σ c′²(p)`; weight-2 newforms only.
    pub c2: Option<f64>,
    /// `Σ c′(p) log p`.
    pub c1_log: Option<f64>,
    /// `Σ c′²(p) log p`.
    pub c2_log: Option<f64>,
    pub s1_over_x: f64,
    pub s2_over_x: f64,
    pub c2_logx_over_x: Option<f64>,
}

#[derive(Default)]
struct PrimeAccumulator {
    s1: CompensatedSum,
    s2: CompensatedSum,
    c2: CompensatedSum,
    c1_log: CompensatedSum,
    c2_log: CompensatedSum,
}

impl PrimeAccumulator {
    fn add(&mut self, table: &CoefficientTable, p: u64) -> Result<()> {
        let lp = (p as f64).ln();
        let lambda = table.lambda(p)?;
        self.s1.add(lambda * lp);
        self.s2.add(lambda * lambda * lp);
        if table.form().is_weight_two_newform() {
            let c = cprime_from_coefficient(table, p)?;
            self.c2.add(c * c);
            self.c1_log.add(c * lp);
            self.c2_log.add(c * c * lp);
        }
        Ok(())
    }

    fn report(&self, table: &CoefficientTable, x: f64) -> PrimeSumReport {
        let newform = table.form().is_weight_two_newform();
        let opt = |s: &CompensatedSum| newform.then(|| s.value());
        let c2 = opt(&self.c2);
        PrimeSumReport {
            x,
            s1: self.s1.value(),
            s2: self.s2.value(),
            c2,
            c1_log: opt(&self.c1_log),
            c2_log: opt(&self.c2_log),
            s1_over_x: self.s1.value() / x,
            s2_over_x: self.s2.value() / x,
            c2_logx_over_x: c2.map(|c| c * x.ln() / x),
        }
    }
}

/// `c′(p) = (1 − b(p))/√p`.
fn cprime_from_coefficient(table: &CoefficientTable, p: u64) -> Result<f64> {
    let b = table
        .a(p)?
        .to_i64()
        .ok_or_else(|| Error::Consistency(format!("b({p}) does not fit in i64")))?;
    Ok((1 - b) as f64 / (p as f64).sqrt())
}

pub fn prime_sums(table: &CoefficientTable, x: f64) -> Result<PrimeSumReport> {
    Ok(prime_sum_series(table, &[x])?.remove(0))
}

/// Reports at each of `xs`, which must be non-decreasing. One ascending pass.
pub fn prime_sum_series(table: &CoefficientTable, xs: &[f64]) -> Result<Vec<PrimeSumReport>> {
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Usage(
            "prime-sum bounds must be non-decreasing".into(),
        ));
    }
    for &x in xs {
        if x.is_nan() || x <= 0.0 {
            return Err(Error::Domain(format!(
                "prime-sum bound {x} must be positive"
            )));
        }
    }
    let Some(&top) = xs.last() else {
        return Ok(Vec::new());
    };
    let end = window_end(top)?;
    if end > table.limit() {
        return Err(Error::insufficient(end, table.limit()));
    }
    let primes = sieve_primes(end)?;
    let mut acc = PrimeAccumulator::default();
    let mut next = 0;
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        while next < primes.len() && primes[next] as f64 <= x {
            acc.add(table, primes[next])?;
            next += 1;
        }
        out.push(acc.report(table, x));
    }
    Ok(out)
}

/// Direct and partial-summation values of `Σ_{p≤x} c′²(p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AbelReport {
    pub x: f64,
    pub direct: f64,
    pub reconstructed: f64,
    /// `|direct − reconstructed| / direct`.
    pub gap: f64,
}

/// Rebuilds `Σ a_p` from `W(t) = Σ_{p≤t} a_p log p` as
/// `W(x)/log x + ∫₂ˣ W(t)/(t log²t) dt`. `W` is constant between primes,
/// so the integral is `Σ W(p_i)·(1/log p_i − 1/log p_{i+1})` with the last
/// endpoint clipped to `x`.
pub fn abel_consistency(table: &CoefficientTable, x: f64) -> Result<AbelReport> {
    let form = table.form();
    if !form.is_weight_two_newform() {
        return Err(Error::UnsupportedForm(format!(
            "{} is not a weight-2 newform",
            form.id
        )));
    }
    if x.is_nan() || x < 3.0 {
        return Err(Error::Domain(format!(
            "partial summation needs x ≥ 3, got {x}"
        )));
    }
    let end = window_end(x)?;
    if end > table.limit() {
        return Err(Error::insufficient(end, table.limit()));
    }
    let primes = sieve_primes(end)?;
    let mut direct = CompensatedSum::new();
    let mut weighted = CompensatedSum::new();
    let mut integral = CompensatedSum::new();
    for (i, &p) in primes.iter().enumerate() {
        let c = cprime_from_coefficient(table, p)?;
        direct.add(c * c);
        weighted.add(c * c * (p as f64).ln());
        let right = primes.get(i + 1).map_or(x, |&q| q as f64);
        integral.add(weighted.value() * (1.0 / (p as f64).ln() - 1.0 / right.ln()));
    }
    let reconstructed = weighted.value() / x.ln() + integral.value();
    let direct = direct.value();
    Ok(AbelReport {
        x,
        direct,
        reconstructed,
        gap: (direct - reconstructed).abs() / direct,
    })
}

/// CSV with header `x,S1,S2,C2,S1_over_x,S2_over_x,C2_logx_over_x`; the `C2`
/// columns are empty for forms without exponents.
pub fn write_primesums_csv<W: Write>(
    reports: &[PrimeSumReport],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "x,S1,S2,C2,S1_over_x,S2_over_x,C2_logx_over_x")?;
    let opt = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_sig(r.x),
            format_sig(r.s1),
            format_sig(r.s2),
            opt(r.c2),
            format_sig(r.s1_over_x),
            format_sig(r.s2_over_x),
            opt(r.c2_logx_over_x),
        )?;
    }
    out.flush()
}
