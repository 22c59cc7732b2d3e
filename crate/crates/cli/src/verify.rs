//! The `verify` invariant suite.
//!
//! Coefficient tables are read through the cache, so a damaged cache file
//! shows up as failed checks rather than being silently regenerated.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use signlab_core::eigenforms::{
    check_bounds, generate_coefficients, generate_coefficients_exact, verify_multiplicativity,
    CoefficientTable, FormId,
};
use signlab_core::gmf::{cprime_bound_violations, exponents_from_coefficients, roundtrip_check};
use signlab_core::numtheory::{divisors, is_prime, isqrt, moebius, sieve_primes, sigma};
use signlab_core::qseries::{eisenstein, euler_product_sparse};
use signlab_core::signlab::{
    abel_consistency, dyadic_sign_change_scan, interval_moments, SignChangeReport, SignSource,
};
use signlab_core::Result;

use crate::commands::load_table;
use crate::config::RunConfig;

/// Default table limit for the suite.
pub const DEFAULT_VERIFY_LIMIT: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Vec<Check>,
    pub pass_count: usize,
    pub fail_count: usize,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.fail_count == 0
    }
}

type Outcome = std::result::Result<String, String>;

struct Context<'a> {
    cfg: &'a RunConfig,
    limit: u64,
    tables: BTreeMap<FormId, std::result::Result<CoefficientTable, String>>,
    checks: Vec<Check>,
}

impl Context<'_> {
    fn table(&mut self, id: FormId) -> std::result::Result<&CoefficientTable, String> {
        let (cfg, limit) = (self.cfg, self.limit);
        self.tables
            .entry(id)
            .or_insert_with(|| load_table(cfg, id, limit).map_err(|e| format!("loading {id}: {e}")))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn record(&mut self, name: String, outcome: Outcome) {
        let (pass, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check { name, pass, detail });
    }

    fn forms(&self) -> Vec<FormId> {
        if self.cfg.form_given {
            vec![self.cfg.form]
        } else {
            FormId::ALL.to_vec()
        }
    }
}

fn ensure(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn lift(r: Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| Err(e.to_string()))
}

pub fn run(cfg: &RunConfig) -> VerifyReport {
    let mut ctx = Context {
        cfg,
        limit: cfg.limit.unwrap_or(DEFAULT_VERIFY_LIMIT),
        tables: BTreeMap::new(),
        checks: Vec::new(),
    };
    for suite in &cfg.suites {
        match *suite {
            "numtheory" => numtheory(&mut ctx),
            "qseries" => qseries(&mut ctx),
            "eigenforms" => eigenforms(&mut ctx),
            "gmf" => gmf(&mut ctx),
            "signlab" => signlab(&mut ctx),
            other => unreachable!("suite `{other}` passed validation"),
        }
    }
    let pass_count = ctx.checks.iter().filter(|c| c.pass).count();
    VerifyReport {
        fail_count: ctx.checks.len() - pass_count,
        pass_count,
        suite: ctx.checks,
    }
}

fn numtheory(ctx: &mut Context) {
    const N: u64 = 100_000;
    ctx.record(
        "numtheory.sieve_matches_trial_division".into(),
        lift((|| {
            let sieved = sieve_primes(N)?;
            let trial: Vec<u64> = (2..=N).filter(|&n| is_prime(n)).collect();
            Ok(ensure(
                sieved == trial,
                format!("{} primes up to {N}", sieved.len()),
                "sieve and trial division disagree".into(),
            ))
        })()),
    );
    ctx.record(
        "numtheory.moebius_divisor_sum".into(),
        lift((|| {
            for n in 1..=10_000u64 {
                let mut s = 0i64;
                for d in divisors(n)? {
                    s += i64::from(moebius(d)?);
                }
                if s != i64::from(n == 1) {
                    return Ok(Err(format!("sum of mu(d) over d | {n} is {s}")));
                }
            }
            Ok(Ok("n <= 10000".into()))
        })()),
    );
    ctx.record(
        "numtheory.sigma_multiplicative".into(),
        lift((|| {
            let mut pairs = 0;
            for k in [3u32, 5, 7, 11] {
                for m in 1..=60u64 {
                    for n in 1..=60u64 {
                        if num_integer::gcd(m, n) == 1 {
                            pairs += 1;
                            if sigma(k, m * n)? != sigma(k, m)? * sigma(k, n)? {
                                return Ok(Err(format!("sigma_{k}({m}*{n}) not multiplicative")));
                            }
                        }
                    }
                }
            }
            Ok(Ok(format!("{pairs} coprime pairs")))
        })()),
    );
}

fn qseries(ctx: &mut Context) {
    const T: usize = 500;
    ctx.record(
        "qseries.euler_product_matches_dense_product".into(),
        lift({
            let mut dense = vec![0i128; T + 1];
            dense[0] = 1;
            for n in 1..=T {
                for i in (n..=T).rev() {
                    dense[i] -= dense[i - n];
                }
            }
            let sparse = euler_product_sparse(T).to_dense();
            let want: Vec<BigInt> = dense.iter().map(|&c| BigInt::from(c)).collect();
            Ok(ensure(
                sparse.coeffs() == want.as_slice(),
                format!("through q^{T}"),
                "pentagonal expansion differs from the dense product".into(),
            ))
        }),
    );
    ctx.record(
        "qseries.eisenstein_square_identity".into(),
        lift((|| {
            let e4 = eisenstein(4, T)?;
            let sq = e4.mul_dense(&e4)?;
            for n in 1..=T {
                let want = BigInt::from(sigma(7, n as u64)?) * 480;
                if sq.coeffs()[n] != want {
                    return Ok(Err(format!("E4^2 and E8 differ at q^{n}")));
                }
            }
            Ok(Ok(format!("E4^2 = E8 through q^{T}")))
        })()),
    );
    ctx.record(
        "qseries.multimodular_matches_exact".into(),
        lift((|| {
            for id in FormId::ALL {
                let fast = generate_coefficients(id.spec(), T as u64)?;
                let exact = generate_coefficients_exact(id.spec(), T as u64)?;
                if fast != exact {
                    return Ok(Err(format!("{id}: expansion routes disagree")));
                }
            }
            Ok(Ok(format!("all forms through n = {T}")))
        })()),
    );
}

fn eigenforms(ctx: &mut Context) {
    let limit = ctx.limit;
    for id in ctx.forms() {
        let table = ctx.table(id).cloned();
        let name = |what: &str| format!("eigenforms.{id}.{what}");
        let Ok(table) = table else {
            let err = table.unwrap_err();
            ctx.record(name("load"), Err(err));
            continue;
        };
        ctx.record(
            name("matches_fresh_expansion"),
            lift((|| {
                let fresh = generate_coefficients(id.spec(), limit)?;
                let first_bad = (1..=limit).find(|&n| table.a(n).ok() != fresh.a(n).ok());
                Ok(match first_bad {
                    None => Ok(format!("n <= {limit}")),
                    Some(n) => Err(format!("stored a({n}) differs from a fresh expansion")),
                })
            })()),
        );
        ctx.record(
            name("multiplicativity"),
            lift((|| {
                let bound = isqrt(limit).min(300);
                let r = verify_multiplicativity(&table, bound)?;
                Ok(ensure(
                    r.is_clean(),
                    format!(
                        "{} coprime pairs up to {bound}, {} prime powers",
                        r.pairs_checked, r.powers_checked
                    ),
                    format!(
                        "coprime violations {:?}, recurrence violations {:?}",
                        truncate(&r.coprime_violations),
                        truncate(&r.recurrence_violations)
                    ),
                ))
            })()),
        );
        ctx.record(
            name("coefficient_bounds"),
            lift((|| {
                let r = check_bounds(&table)?;
                Ok(ensure(
                    r.is_clean(),
                    format!(
                        "{} primes, max |lambda(p)| = {:.6}",
                        r.primes_checked, r.max_abs_lambda
                    ),
                    format!(
                        "bound violations at {:?}, ramified violations at {:?}",
                        truncate(&r.deligne_violations),
                        truncate(&r.ramified_violations)
                    ),
                ))
            })()),
        );
    }
}

fn truncate<T: Clone>(v: &[T]) -> Vec<T> {
    v.iter().take(8).cloned().collect()
}

fn gmf(ctx: &mut Context) {
    let forms: Vec<FormId> = ctx
        .forms()
        .into_iter()
        .filter(|id| id.spec().is_weight_two_newform())
        .collect();
    for id in forms {
        let name = |what: &str| format!("gmf.{id}.{what}");
        let table = match ctx.table(id) {
            Ok(t) => t.clone(),
            Err(e) => {
                ctx.record(name("load"), Err(e));
                continue;
            }
        };
        let exp = match exponents_from_coefficients(&table) {
            Ok(e) => e,
            Err(e) => {
                ctx.record(name("exponents"), Err(e.to_string()));
                continue;
            }
        };
        ctx.record(
            name("roundtrip"),
            lift(
                roundtrip_check(&exp, &table).map(|rt| match rt.first_failure {
                    None => Ok(format!("exact through n = {}", exp.limit())),
                    Some(n) => Err(format!("first failure at n = {n}")),
                }),
            ),
        );
        ctx.record(
            name("leading_exponent"),
            lift(
                exp.m(1)
                    .map(|m| ensure(m == -1, "m(1) = -1".into(), format!("m(1) = {m}"))),
            ),
        );
        ctx.record(
            name("cprime_bound"),
            lift(cprime_bound_violations(&exp).map(|v| {
                ensure(
                    v.is_empty(),
                    format!("|c'(p)| <= 3 for p <= {}", exp.limit()),
                    format!("|c'(p)| > 3 at {:?}", truncate(&v)),
                )
            })),
        );
    }
}

/// `(x, 2x]` windows from `2^first` while `2x` stays within `limit`.
fn dyadic_count(first: u32, limit: u64) -> u32 {
    (first..63).take_while(|&t| 2u64 << t <= limit).count() as u32
}

fn positivity(reports: &[SignChangeReport]) -> Outcome {
    match reports.iter().find(|r| r.count == 0) {
        Some(r) => Err(format!("no sign change in ({}, {}]", r.x, r.x + r.h)),
        None => Ok(format!(
            "{} windows, counts {:?}",
            reports.len(),
            reports.iter().map(|r| r.count).collect::<Vec<_>>()
        )),
    }
}

fn signlab(ctx: &mut Context) {
    let limit = ctx.limit;
    match ctx.table(FormId::Delta).cloned() {
        Err(e) => ctx.record("signlab.delta.load".into(), Err(e)),
        Ok(delta) => {
            ctx.record(
                "signlab.delta.interval_moments".into(),
                lift(interval_moments(&delta, 2, 1.0, 3.0).map(|m| {
                    ensure(
                        (m.first + 1.1249158).abs() < 1e-6 && (m.second - 0.9835366).abs() < 1e-6,
                        format!("first {:.7}, second {:.7}", m.first, m.second),
                        format!("first {}, second {}", m.first, m.second),
                    )
                })),
            );
            let windows = dyadic_count(4, limit);
            for j in 2..=4 {
                ctx.record(
                    format!("signlab.delta.sign_changes_j{j}"),
                    lift(
                        dyadic_sign_change_scan(
                            SignSource::Lambda { table: &delta, j },
                            16.0,
                            windows,
                        )
                        .map(|r| positivity(&r)),
                    ),
                );
            }
            ctx.record(
                "signlab.scan_is_thread_independent".into(),
                lift((|| {
                    let source = SignSource::Lambda {
                        table: &delta,
                        j: 2,
                    };
                    let here = dyadic_sign_change_scan(source, 16.0, windows)?;
                    let single = rayon::ThreadPoolBuilder::new()
                        .num_threads(1)
                        .build()
                        .map_err(|e| signlab_core::Error::Usage(e.to_string()))?
                        .install(|| dyadic_sign_change_scan(source, 16.0, windows))?;
                    Ok(ensure(
                        here == single,
                        format!("{} threads vs 1", rayon::current_num_threads()),
                        "reports differ between thread pools".into(),
                    ))
                })()),
            );
        }
    }
    match ctx.table(FormId::N11).cloned() {
        Err(e) => ctx.record("signlab.n11.load".into(), Err(e)),
        Ok(n11) => {
            ctx.record(
                "signlab.n11.cprime_sign_changes".into(),
                lift((|| {
                    let exp = exponents_from_coefficients(&n11)?;
                    let r = dyadic_sign_change_scan(
                        SignSource::CPrime { exponents: &exp },
                        64.0,
                        dyadic_count(6, limit),
                    )?;
                    Ok(positivity(&r))
                })()),
            );
            let xs: Vec<f64> = [1e3, 1e4, 1e5]
                .into_iter()
                .filter(|&x| x <= limit as f64)
                .collect();
            let gaps: Result<Vec<(f64, f64)>> = xs
                .par_iter()
                .map(|&x| Ok((x, abel_consistency(&n11, x)?.gap)))
                .collect();
            ctx.record(
                "signlab.n11.abel_identity".into(),
                lift(gaps.map(|g| {
                    ensure(
                        g.iter().all(|&(_, gap)| gap <= 1e-6),
                        format!("gaps {g:?}"),
                        format!("gap above 1e-6 in {g:?}"),
                    )
                })),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_window_counts() {
        assert_eq!(dyadic_count(4, 10_000), windows_below(4, 10_000));
        assert_eq!(dyadic_count(4, 31), 0);
        assert_eq!(dyadic_count(4, 32), 1);
        assert_eq!(dyadic_count(6, 1 << 20), 14);
    }

    /// Windows `(2^t, 2^{t+1}]` with `2^{t+1} ≤ limit`, counted directly.
    fn windows_below(first: u32, limit: u64) -> u32 {
        let mut t = first;
        while 2u64.pow(t + 1) <= limit {
            t += 1;
        }
        t - first
    }
}
