//! The closed catalog of normalized Hecke eigenforms, their exact
//! coefficient tables, and `a(p^r)` via the Hecke recurrence.
//!
//! Level-1 forms have one-dimensional cusp spaces, so `Δ·E` products of the
//! right weight are automatically eigenforms. The weight-2 forms are the
//! eta-quotient newforms of levels 11, 14 and 15.
//!
//! Signs are always read off exact integers. Floating-point `λ` values are
//! for display and summation only.

pub mod cache;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;

use crate::numtheory::{factorize, is_prime, sieve_primes, Factorization};
use crate::qseries::modular::{expand_multimodular, MAX_TRUNC};
use crate::qseries::{EtaQuotient, ProductRecipe, SeriesFactor};
use crate::signlab::Sign;
use crate::{Error, Result};

/// Largest table limit [`generate_coefficients`] accepts.
pub const GENERATION_CEILING: u64 = MAX_TRUNC as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormId {
    Delta,
    E16,
    E18,
    E20,
    E22,
    E26,
    N11,
    N14,
    N15,
}

impl FormId {
    pub const ALL: [FormId; 9] = [
        FormId::Delta,
        FormId::E16,
        FormId::E18,
        FormId::E20,
        FormId::E22,
        FormId::E26,
        FormId::N11,
        FormId::N14,
        FormId::N15,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormId::Delta => "delta",
            FormId::E16 => "e16",
            FormId::E18 => "e18",
            FormId::E20 => "e20",
            FormId::E22 => "e22",
            FormId::E26 => "e26",
            FormId::N11 => "n11",
            FormId::N14 => "n14",
            FormId::N15 => "n15",
        }
    }

    pub fn spec(self) -> FormSpec {
        let (weight, level) = match self {
            FormId::Delta => (12, 1),
            FormId::E16 => (16, 1),
            FormId::E18 => (18, 1),
            FormId::E20 => (20, 1),
            FormId::E22 => (22, 1),
            FormId::E26 => (26, 1),
            FormId::N11 => (2, 11),
            FormId::N14 => (2, 14),
            FormId::N15 => (2, 15),
        };
        FormSpec {
            id: self,
            weight,
            level,
        }
    }
}

impl fmt::Display for FormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownForm(s.to_string()))
    }
}

/// Identity of a cataloged form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FormSpec {
    pub id: FormId,
    pub weight: u32,
    pub level: u64,
}

impl FormSpec {
    pub fn is_level_one(&self) -> bool {
        self.level == 1
    }

    pub fn is_weight_two_newform(&self) -> bool {
        self.weight == 2 && self.level > 1
    }

    /// Whether `p` divides the level.
    pub fn is_ramified(&self, p: u64) -> bool {
        self.level.is_multiple_of(p)
    }

    /// `Δ = η(z)²⁴` times Eisenstein series for level 1; an eta quotient otherwise.
    pub fn recipe(&self) -> ProductRecipe {
        use SeriesFactor::{Eisenstein, Eta};
        let eta = |f: Vec<(u32, i32)>| Eta(EtaQuotient::new(f).expect("cataloged quotient"));
        let delta = || eta(vec![(1, 24)]);
        let factors = match self.id {
            FormId::Delta => vec![delta()],
            FormId::E16 => vec![delta(), Eisenstein(4)],
            FormId::E18 => vec![delta(), Eisenstein(6)],
            FormId::E20 => vec![delta(), Eisenstein(4), Eisenstein(4)],
            FormId::E22 => vec![delta(), Eisenstein(4), Eisenstein(6)],
            FormId::E26 => vec![delta(), Eisenstein(4), Eisenstein(4), Eisenstein(6)],
            FormId::N11 => vec![eta(vec![(1, 2), (11, 2)])],
            FormId::N14 => vec![eta(vec![(1, 1), (2, 1), (7, 1), (14, 1)])],
            FormId::N15 => vec![eta(vec![(1, 1), (3, 1), (5, 1), (15, 1)])],
        };
        ProductRecipe::new(factors).expect("cataloged recipe")
    }

    /// `log₂` of Deligne's bound `d(n)·n^{(k−1)/2}` over `n ≤ limit`, with
    /// `d(n) ≤ 2√n`.
    fn coefficient_bound_bits(&self, limit: u64) -> f64 {
        let l = (limit.max(2)) as f64;
        (2.0 * l.sqrt()).log2() + (self.weight as f64 - 1.0) / 2.0 * l.log2() + 1.0
    }
}

/// The catalog, in a fixed order.
pub fn catalog() -> [FormSpec; 9] {
    FormId::ALL.map(FormId::spec)
}

/// Exact coefficients `a(1..=limit)` of a cataloged form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientTable {
    form: FormSpec,
    // a[0] is unused and kept at zero so that a[n] is a(n)
    a: Vec<BigInt>,
}

impl CoefficientTable {
    /// Wraps `a(1..=limit)` given in order. No eigenform property is checked.
    pub fn from_coefficients(form: FormSpec, coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Usage("empty coefficient list".into()));
        }
        let mut a = Vec::with_capacity(coeffs.len() + 1);
        a.push(BigInt::zero());
        a.extend(coeffs);
        Ok(CoefficientTable { form, a })
    }

    pub fn form(&self) -> FormSpec {
        self.form
    }

    pub fn limit(&self) -> u64 {
        (self.a.len() - 1) as u64
    }

    /// `a(1..=limit)`.
    pub fn coefficients(&self) -> &[BigInt] {
        &self.a[1..]
    }

    pub fn a(&self, n: u64) -> Result<&BigInt> {
        if n == 0 {
            return Err(Error::Domain("coefficient index 0".into()));
        }
        self.a
            .get(n as usize)
            .ok_or_else(|| Error::insufficient(n, self.limit()))
    }

    /// `λ(n) = a(n) / n^{(k−1)/2}`.
    pub fn lambda(&self, n: u64) -> Result<f64> {
        Ok(normalize(self.a(n)?, n, 1, self.form.weight))
    }

    pub fn truncated(&self, limit: u64) -> Result<CoefficientTable> {
        if limit == 0 || limit > self.limit() {
            return Err(Error::insufficient(limit, self.limit()));
        }
        Ok(CoefficientTable {
            form: self.form,
            a: self.a[..=limit as usize].to_vec(),
        })
    }

    /// Overwrites one entry. For fault-injection experiments.
    pub fn set(&mut self, n: u64, value: BigInt) -> Result<()> {
        let limit = self.limit();
        let slot = self
            .a
            .get_mut(n as usize)
            .filter(|_| n > 0)
            .ok_or_else(|| Error::insufficient(n, limit))?;
        *slot = value;
        Ok(())
    }
}

/// `a / (base^r)^{(k−1)/2}` as `f64`; direct division when everything is in
/// range, log-space otherwise.
pub fn normalize(a: &BigInt, base: u64, r: u32, weight: u32) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let b = base as f64;
    let den_log2 = r as f64 * (weight as f64 - 1.0) / 2.0 * b.log2();
    if a.bits() < 1000 && den_log2 < 1000.0 {
        let whole = (r * (weight - 2) / 2) as i32;
        let root = if r.is_multiple_of(2) {
            b.powi((r / 2) as i32)
        } else {
            b.powi(((r - 1) / 2) as i32) * b.sqrt()
        };
        let num = a.to_f64().expect("bounded bit length");
        return num / (b.powi(whole) * root);
    }
    let shift = a.bits().saturating_sub(64);
    let top = (a.magnitude() >> shift).to_f64().expect("64-bit head");
    let ln = top.ln() + shift as f64 * std::f64::consts::LN_2
        - r as f64 * (weight as f64 - 1.0) / 2.0 * b.ln();
    let v = ln.exp();
    if a.is_negative() {
        -v
    } else {
        v
    }
}

/// Exact coefficients through `limit` by the multi-modular engine.
pub fn generate_coefficients(form: FormSpec, limit: u64) -> Result<CoefficientTable> {
    check_generation_limit(limit)?;
    let series = expand_multimodular(
        &form.recipe(),
        limit as usize,
        form.coefficient_bound_bits(limit),
    )?;
    finish_table(form, series.into_coeffs())
}

/// Same table through big-integer sparse and schoolbook products only.
/// Quadratic in `limit` for the Eisenstein products.
pub fn generate_coefficients_exact(form: FormSpec, limit: u64) -> Result<CoefficientTable> {
    check_generation_limit(limit)?;
    let series = form.recipe().expand_exact(limit as usize)?;
    finish_table(form, series.into_coeffs())
}

fn check_generation_limit(limit: u64) -> Result<()> {
    if limit < 2 {
        return Err(Error::Domain(format!("coefficient limit {limit} < 2")));
    }
    if limit > GENERATION_CEILING {
        return Err(Error::Capacity {
            what: "coefficient limit",
            requested: limit,
            ceiling: GENERATION_CEILING,
        });
    }
    Ok(())
}

fn finish_table(form: FormSpec, mut coeffs: Vec<BigInt>) -> Result<CoefficientTable> {
    coeffs.remove(0);
    let table = CoefficientTable::from_coefficients(form, coeffs)?;
    if !table.a(1)?.is_one() {
        return Err(Error::Consistency(format!("{}: a(1) != 1", form.id)));
    }
    Ok(table)
}

/// `a(p^r)` from `a(p)` alone.
///
/// For `p ∤ N`: `a(p^{r+1}) = a(p)a(p^r) − p^{k−1}a(p^{r−1})`.
/// For `p | N` (squarefree level): `a(p^r) = a(p)^r`.
pub fn hecke_prime_power(table: &CoefficientTable, p: u64, r: u32) -> Result<BigInt> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if p > table.limit() {
        return Err(Error::insufficient(p, table.limit()));
    }
    Ok(prime_power_unchecked(table, p, r))
}

fn prime_power_unchecked(table: &CoefficientTable, p: u64, r: u32) -> BigInt {
    let ap = &table.a[p as usize];
    if r == 0 {
        return BigInt::one();
    }
    if table.form.is_ramified(p) {
        return ap.pow(r);
    }
    let pk1 = BigInt::from(p).pow(table.form.weight - 1);
    let mut prev = BigInt::one();
    let mut cur = ap.clone();
    for _ in 1..r {
        let next = ap * &cur - &pk1 * &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `λ(n^j)` with its exact sign.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPower {
    pub value: f64,
    pub sign: Sign,
    /// `a(n^j)`.
    pub exact: BigInt,
}

/// `λ(n^j)` computed multiplicatively from [`hecke_prime_power`].
pub fn lambda_power(table: &CoefficientTable, n: u64, j: u32) -> Result<LambdaPower> {
    lambda_power_factored(table, &factorize(n)?, j)
}

/// As [`lambda_power`], for an already factored `n`.
pub fn lambda_power_factored(
    table: &CoefficientTable,
    n: &Factorization,
    j: u32,
) -> Result<LambdaPower> {
    if !(1..=4).contains(&j) {
        return Err(Error::Domain(format!("power j = {j} outside 1..=4")));
    }
    if let Some(&(p, _)) = n.factors().last() {
        if p > table.limit() {
            return Err(Error::insufficient(p, table.limit()));
        }
    }
    let mut value = 1.0f64;
    let mut exact = BigInt::one();
    for &(p, e) in n.factors() {
        let apr = prime_power_unchecked(table, p, e * j);
        value *= normalize(&apr, p, e * j, table.form.weight);
        exact *= apr;
    }
    Ok(LambdaPower {
        value,
        sign: Sign::of(&exact),
        exact,
    })
}

/// Exact sign of `a(n^j)` without forming the full product.
pub fn power_sign_factored(table: &CoefficientTable, n: &Factorization, j: u32) -> Result<Sign> {
    if !(1..=4).contains(&j) {
        return Err(Error::Domain(format!("power j = {j} outside 1..=4")));
    }
    let mut sign = Sign::Positive;
    for &(p, e) in n.factors() {
        if p > table.limit() {
            return Err(Error::insufficient(p, table.limit()));
        }
        sign = sign.product(Sign::of(&prime_power_unchecked(table, p, e * j)));
        if sign == Sign::Zero {
            break;
        }
    }
    Ok(sign)
}

/// Outcome of [`verify_multiplicativity`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiplicativityReport {
    /// Coprime `(m, n)`, `2 ≤ m < n ≤ bound`, with `a(mn) ≠ a(m)a(n)`.
    pub coprime_violations: Vec<(u64, u64)>,
    /// `(p, r)` with `p^r ≤ limit` where the table disagrees with the recurrence.
    pub recurrence_violations: Vec<(u64, u32)>,
    pub pairs_checked: u64,
    pub powers_checked: u64,
}

impl MultiplicativityReport {
    pub fn is_clean(&self) -> bool {
        self.coprime_violations.is_empty() && self.recurrence_violations.is_empty()
    }
}

/// Checks `a(mn) = a(m)a(n)` for coprime `m, n ≤ bound` and the prime-power
/// recurrence at every `p^r ≤ limit`, `r ≥ 2`, against the table's own entries.
pub fn verify_multiplicativity(
    table: &CoefficientTable,
    bound: u64,
) -> Result<MultiplicativityReport> {
    let limit = table.limit();
    if bound.checked_mul(bound).is_none_or(|b2| b2 > limit) {
        return Err(Error::Usage(format!(
            "coprime bound {bound} needs a table to {}, have {limit}",
            bound.saturating_mul(bound)
        )));
    }
    let mut report = MultiplicativityReport::default();
    for m in 2..=bound {
        for n in (m + 1)..=bound {
            if m.gcd(&n) != 1 {
                continue;
            }
            report.pairs_checked += 1;
            let lhs = &table.a[(m * n) as usize];
            if *lhs != &table.a[m as usize] * &table.a[n as usize] {
                report.coprime_violations.push((m, n));
            }
        }
    }
    let root = crate::numtheory::isqrt(limit);
    let weight = table.form.weight;
    for p in sieve_primes(root)? {
        let ramified = table.form.is_ramified(p);
        let ap = &table.a[p as usize];
        let pk1 = BigInt::from(p).pow(weight - 1);
        let (mut pr_prev, mut pr) = (1u64, p);
        let mut r = 1u32;
        while let Some(next) = pr.checked_mul(p).filter(|&v| v <= limit) {
            r += 1;
            report.powers_checked += 1;
            let expected = if ramified {
                ap * &table.a[pr as usize]
            } else {
                ap * &table.a[pr as usize] - &pk1 * &table.a[pr_prev as usize]
            };
            if table.a[next as usize] != expected {
                report.recurrence_violations.push((p, r));
            }
            pr_prev = pr;
            pr = next;
        }
    }
    Ok(report)
}

/// Outcome of [`check_bounds`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundReport {
    /// Unramified primes with `|λ(p)| > 2 + slack`.
    pub deligne_violations: Vec<u64>,
    /// Ramified primes with `a(p) ∉ {−1, 1}`.
    pub ramified_violations: Vec<u64>,
    pub max_abs_lambda: f64,
    pub primes_checked: u64,
}

impl BoundReport {
    pub fn is_clean(&self) -> bool {
        self.deligne_violations.is_empty() && self.ramified_violations.is_empty()
    }
}

pub const DELIGNE_SLACK: f64 = 1e-9;

/// Deligne's bound at unramified primes and `|a(p)| = 1` at ramified ones.
pub fn check_bounds(table: &CoefficientTable) -> Result<BoundReport> {
    let mut report = BoundReport::default();
    for p in sieve_primes(table.limit())? {
        report.primes_checked += 1;
        if table.form.is_ramified(p) {
            if table.a[p as usize].abs() != BigInt::one() {
                report.ramified_violations.push(p);
            }
            continue;
        }
        let l = table.lambda(p)?.abs();
        report.max_abs_lambda = report.max_abs_lambda.max(l);
        if l > 2.0 + DELIGNE_SLACK {
            report.deligne_violations.push(p);
        }
    }
    Ok(report)
}
