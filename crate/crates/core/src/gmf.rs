//! q-exponents of the generalized modular function attached to a weight-2
//! newform.
//!
//! With `g = Σ b(n)qⁿ` the logarithmic derivative of `f = Π (1 − qⁿ)^{c(n)}`,
//! the exponents satisfy `b(n) = −Σ_{d|n} d·c(d)`. The table stores the
//! integers `m(n) = n·c(n)`, recovered by Möbius inversion
//! `m(n) = −Σ_{d|n} μ(n/d) b(d)`, so every sign decision stays exact.

use num_traits::ToPrimitive;
use std::io::Write;

use crate::eigenforms::{CoefficientTable, FormSpec};
use crate::numtheory::{is_prime, moebius_table, sieve_primes};
use crate::signlab::{format_sig, Sign};
use crate::{Error, Result};

/// `m(n) = n·c(n)` for `1 ≤ n ≤ limit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentTable {
    form: FormSpec,
    // m[0] unused
    m: Vec<i64>,
}

impl ExponentTable {
    pub fn form(&self) -> FormSpec {
        self.form
    }

    pub fn limit(&self) -> u64 {
        (self.m.len() - 1) as u64
    }

    pub fn m(&self, n: u64) -> Result<i64> {
        if n == 0 {
            return Err(Error::Domain("exponent index 0".into()));
        }
        self.m
            .get(n as usize)
            .copied()
            .ok_or_else(|| Error::insufficient(n, self.limit()))
    }

    /// `c(n) = m(n)/n` as a float.
    pub fn c(&self, n: u64) -> Result<f64> {
        Ok(self.m(n)? as f64 / n as f64)
    }

    /// Overwrites `m(n)`. For fault-injection experiments.
    pub fn set(&mut self, n: u64, value: i64) -> Result<()> {
        let limit = self.limit();
        match self.m.get_mut(n as usize).filter(|_| n > 0) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::insufficient(n, limit)),
        }
    }
}

/// Inverts `b(n) = −Σ_{d|n} m(d)` over the whole table.
pub fn exponents_from_coefficients(table: &CoefficientTable) -> Result<ExponentTable> {
    let form = table.form();
    if !form.is_weight_two_newform() {
        return Err(Error::UnsupportedForm(format!(
            "{} has weight {} and level {}; exponents need a weight-2 newform",
            form.id, form.weight, form.level
        )));
    }
    let limit = table.limit() as usize;
    let b = small_coefficients(table)?;
    let mu = moebius_table(limit as u64);
    let overflow = || Error::Consistency("exponent sum left the i64 range".into());
    let mut m = vec![0i64; limit + 1];
    // m = μ * (−b) as a Dirichlet convolution
    for (d, &bd) in b.iter().enumerate().skip(1) {
        if bd == 0 {
            continue;
        }
        for (k, n) in (d..=limit).step_by(d).enumerate() {
            let mu_k = mu[k + 1];
            if mu_k != 0 {
                m[n] = m[n]
                    .checked_sub(i64::from(mu_k) * bd)
                    .ok_or_else(overflow)?;
            }
        }
    }
    Ok(ExponentTable { form, m })
}

fn small_coefficients(table: &CoefficientTable) -> Result<Vec<i64>> {
    let mut b = Vec::with_capacity(table.limit() as usize + 1);
    b.push(0);
    for (i, a) in table.coefficients().iter().enumerate() {
        b.push(a.to_i64().ok_or_else(|| {
            Error::Consistency(format!("b({}) = {a} does not fit in i64", i + 1))
        })?);
    }
    Ok(b)
}

/// Result of [`roundtrip_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundTrip {
    pub ok: bool,
    pub first_failure: Option<u64>,
}

/// Whether `b(n) = −Σ_{d|n} m(d)` for every `n ≤ exp.limit`, exactly.
pub fn roundtrip_check(exp: &ExponentTable, source: &CoefficientTable) -> Result<RoundTrip> {
    if exp.form != source.form() {
        return Err(Error::Usage(format!(
            "exponents of {} checked against coefficients of {}",
            exp.form.id,
            source.form().id
        )));
    }
    if exp.limit() > source.limit() {
        return Err(Error::Usage(format!(
            "exponent table to {} but coefficients only to {}",
            exp.limit(),
            source.limit()
        )));
    }
    let limit = exp.limit() as usize;
    let mut sums = vec![0i128; limit + 1];
    for d in 1..=limit {
        let md = exp.m[d] as i128;
        for n in (d..=limit).step_by(d) {
            sums[n] += md;
        }
    }
    for (n, s) in sums.iter().enumerate().skip(1) {
        let b = source.coefficients()[n - 1].to_i128();
        if b != Some(-s) {
            return Ok(RoundTrip {
                ok: false,
                first_failure: Some(n as u64),
            });
        }
    }
    Ok(RoundTrip {
        ok: true,
        first_failure: None,
    })
}

/// `c′(p) = √p·c(p) = (1 − b(p))/√p` with the sign of `1 − b(p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CPrime {
    pub value: f64,
    pub sign: Sign,
}

pub fn cprime(exp: &ExponentTable, p: u64) -> Result<CPrime> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    cprime_unchecked(exp, p)
}

pub(crate) fn cprime_unchecked(exp: &ExponentTable, p: u64) -> Result<CPrime> {
    let m = exp.m(p)?;
    Ok(CPrime {
        value: m as f64 / (p as f64).sqrt(),
        sign: Sign::of_i64(m),
    })
}

/// Primes `p ≤ limit` with `|c′(p)| > 3`.
pub fn cprime_bound_violations(exp: &ExponentTable) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for p in sieve_primes(exp.limit())? {
        if cprime_unchecked(exp, p)?.value.abs() > 3.0 {
            out.push(p);
        }
    }
    Ok(out)
}

/// CSV with header `n,m_n,c_n_float`.
pub fn write_exponent_csv<W: Write>(exp: &ExponentTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,m_n,c_n_float")?;
    for n in 1..=exp.limit() {
        let m = exp.m[n as usize];
        writeln!(out, "{n},{m},{}", format_sig(m as f64 / n as f64))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenforms::{generate_coefficients, FormId};
    use num_bigint::BigInt;

    fn n11(limit: u64) -> CoefficientTable {
        generate_coefficients(FormId::N11.spec(), limit).unwrap()
    }

    /// Divisor-by-divisor Möbius inversion with trial-division μ.
    fn oracle_m(table: &CoefficientTable, n: u64) -> i64 {
        crate::numtheory::divisors(n)
            .unwrap()
            .into_iter()
            .map(|d| {
                let mu = i64::from(crate::numtheory::moebius(n / d).unwrap());
                -mu * table.a(d).unwrap().to_i64().unwrap()
            })
            .sum()
    }

    #[test]
    fn exponent_examples() {
        let t = n11(2000);
        let e = exponents_from_coefficients(&t).unwrap();
        assert_eq!(e.m(1).unwrap(), -1);
        assert_eq!(e.m(2).unwrap(), 3);
        assert_eq!(e.c(2).unwrap(), 1.5);
        assert_eq!(e.m(4).unwrap(), -4);
        assert_eq!(e.c(4).unwrap(), -1.0);
        for n in 1..=2000 {
            assert_eq!(e.m(n).unwrap(), oracle_m(&t, n), "n = {n}");
        }
        for p in sieve_primes(2000).unwrap() {
            assert_eq!(e.m(p).unwrap(), 1 - t.a(p).unwrap().to_i64().unwrap());
        }
    }

    #[test]
    fn level_one_is_rejected() {
        let d = generate_coefficients(FormId::Delta.spec(), 10).unwrap();
        assert!(matches!(
            exponents_from_coefficients(&d),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn roundtrip_examples() {
        for id in [FormId::N11, FormId::N14, FormId::N15] {
            let t = generate_coefficients(id.spec(), 10_000).unwrap();
            let e = exponents_from_coefficients(&t).unwrap();
            assert!(roundtrip_check(&e, &t).unwrap().ok, "{id}");
        }
        let t = n11(10);
        let e = exponents_from_coefficients(&t).unwrap();
        let b4 = t.a(4).unwrap();
        assert_eq!(b4, &BigInt::from(2));
        assert_eq!(-(e.m(1).unwrap() + e.m(2).unwrap() + e.m(4).unwrap()), 2);

        let mut bad = e.clone();
        bad.set(2, 4).unwrap();
        let rt = roundtrip_check(&bad, &t).unwrap();
        assert!(!rt.ok);
        assert_eq!(rt.first_failure, Some(2));
    }

    #[test]
    fn roundtrip_usage_errors() {
        let t = n11(50);
        let e = exponents_from_coefficients(&t).unwrap();
        let other = generate_coefficients(FormId::N14.spec(), 50).unwrap();
        assert!(matches!(roundtrip_check(&e, &other), Err(Error::Usage(_))));
        assert!(matches!(
            roundtrip_check(&e, &t.truncated(20).unwrap()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn cprime_examples() {
        let e = exponents_from_coefficients(&n11(100)).unwrap();
        let c2 = cprime(&e, 2).unwrap();
        assert!((c2.value - 3.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((c2.value - 2.1213203).abs() < 1e-7);
        assert_eq!(c2.sign, Sign::Positive);
        let c5 = cprime(&e, 5).unwrap();
        assert_eq!(c5.value, 0.0);
        assert_eq!(c5.sign, Sign::Zero);
        let c13 = cprime(&e, 13).unwrap();
        assert!((c13.value + 3.0 / 13f64.sqrt()).abs() < 1e-15);
        assert!((c13.value + 0.8320503).abs() < 1e-7);
        assert_eq!(c13.sign, Sign::Negative);
        assert!(matches!(cprime(&e, 9), Err(Error::Domain(_))));
        assert!(cprime(&e, 101).is_err());
    }

    #[test]
    fn cprime_invariants() {
        for id in [FormId::N11, FormId::N14, FormId::N15] {
            let t = generate_coefficients(id.spec(), 20_000).unwrap();
            let e = exponents_from_coefficients(&t).unwrap();
            assert!(cprime_bound_violations(&e).unwrap().is_empty());
            for p in sieve_primes(20_000).unwrap() {
                let c = cprime(&e, p).unwrap();
                let b = t.a(p).unwrap().to_i64().unwrap();
                assert_eq!(c.sign, Sign::of_i64(1 - b));
                // positive scaling keeps the sign of c(p) = m(p)/p
                assert_eq!(c.sign, Sign::of_f64(e.c(p).unwrap()));
                let back = c.value * (p as f64).sqrt() + b as f64;
                assert!((back - 1.0).abs() <= 1e-12 * (b.abs() as f64 + 1.0));
                if id.spec().is_ramified(p) {
                    let expect = [0.0, 2.0 / (p as f64).sqrt()];
                    assert!(expect.iter().any(|v| (c.value.abs() - v).abs() < 1e-15));
                } else {
                    assert!(c.value.abs() <= 1.0 / (p as f64).sqrt() + 2.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn exponent_csv_format() {
        let e = exponents_from_coefficients(&n11(4)).unwrap();
        let mut buf = Vec::new();
        write_exponent_csv(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,m_n,c_n_float\n1,-1,-1\n2,3,1.5\n3,2,0.666666666667\n4,-4,-1\n"
        );
    }
}
