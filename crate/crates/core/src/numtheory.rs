//! Arithmetic-function substrate: primes, factorization, Möbius function,
//! divisors and divisor-power sums.
//!
//! Everything here is exact. Functions that could overflow their integer
//! representation check and report instead of wrapping.

use num_bigint::BigUint;
use num_traits::One;

use crate::{Error, Result};

/// Ceiling for [`sieve_primes`] unless overridden.
pub const DEFAULT_SIEVE_CEILING: u64 = 100_000_000;

/// Ceiling for trial-division factorization (√ of this is the loop bound).
pub const FACTOR_CEILING: u64 = 1 << 48;

const SEGMENT_LEN: usize = 1 << 16;

/// A positive integer together with its prime factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `(p, e)` pairs with strictly increasing `p`.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn num_divisors(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(_, e)| u64::from(e) + 1)
            .product()
    }

    /// All divisors in ascending order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let base_len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..base_len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }

    pub fn moebius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

/// Primes in `[2, limit]`, ascending, with the default ceiling.
pub fn sieve_primes(limit: u64) -> Result<Vec<u64>> {
    sieve_primes_with_ceiling(limit, DEFAULT_SIEVE_CEILING)
}

/// Segmented sieve of Eratosthenes.
///
/// Working memory is the base primes up to `√limit` plus one fixed-size
/// segment; the returned list is the only thing that grows with `limit`.
pub fn sieve_primes_with_ceiling(limit: u64, ceiling: u64) -> Result<Vec<u64>> {
    if limit > ceiling {
        return Err(Error::Capacity {
            what: "sieve limit",
            requested: limit,
            ceiling,
        });
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    let root = isqrt(limit);
    let base = simple_sieve(root);
    let mut primes = base.clone();

    let mut segment = vec![true; SEGMENT_LEN];
    let mut low = root + 1;
    while low <= limit {
        let high = (low + SEGMENT_LEN as u64 - 1).min(limit);
        let len = (high - low + 1) as usize;
        segment[..len].fill(true);
        for &p in &base {
            let mut start = low.div_ceil(p) * p;
            if start < p * p {
                start = p * p;
            }
            let mut m = start;
            while m <= high {
                segment[(m - low) as usize] = false;
                m += p;
            }
        }
        primes.extend(
            segment[..len]
                .iter()
                .enumerate()
                .filter(|(_, &keep)| keep)
                .map(|(i, _)| low + i as u64),
        );
        low = high + 1;
    }
    Ok(primes)
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut is_prime = vec![true; n + 1];
    is_prime[0] = false;
    is_prime[1] = false;
    let mut i = 2;
    while i * i <= n {
        if is_prime[i] {
            let mut m = i * i;
            while m <= n {
                is_prime[m] = false;
                m += i;
            }
        }
        i += 1;
    }
    is_prime
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

/// Integer square root, `⌊√n⌋`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Factorization by trial division.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("factorize(0)".into()));
    }
    if n > FACTOR_CEILING {
        return Err(Error::Capacity {
            what: "factorize argument",
            requested: n,
            ceiling: FACTOR_CEILING,
        });
    }
    let mut factors = Vec::new();
    let mut rest = n;
    for p in [2u64, 3] {
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    }
    let mut d = 5u64;
    while d * d <= rest {
        for p in [d, d + 2] {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            if e > 0 {
                factors.push((p, e));
            }
        }
        d += 6;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(Factorization { n, factors })
}

/// Smallest-prime-factor table for fast repeated factorization.
///
/// Immutable once built; share it freely across threads.
#[derive(Clone, Debug)]
pub struct SpfTable {
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl SpfTable {
    pub fn new(limit: u64) -> Result<Self> {
        if limit > DEFAULT_SIEVE_CEILING {
            return Err(Error::Capacity {
                what: "spf table limit",
                requested: limit,
                ceiling: DEFAULT_SIEVE_CEILING,
            });
        }
        let n = limit.max(1) as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i] as u64;
            for &p in &primes {
                if p > si || p * i as u64 > n as u64 {
                    break;
                }
                spf[p as usize * i] = p as u32;
            }
        }
        Ok(SpfTable { spf, primes })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Primes up to the table limit, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n <= self.limit() {
            n >= 2 && self.spf[n as usize] as u64 == n
        } else {
            is_prime(n)
        }
    }

    /// Uses the table when `n` is within it, trial division otherwise.
    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        if n == 0 {
            return Err(Error::Domain("factorize(0)".into()));
        }
        if n > self.limit() {
            return factorize(n);
        }
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut rest = n as usize;
        while rest > 1 {
            let p = self.spf[rest] as usize;
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        Ok(Factorization { n, factors })
    }
}

/// μ(n).
pub fn moebius(n: u64) -> Result<i8> {
    Ok(factorize(n)?.moebius())
}

/// μ(1..=limit) by a linear sieve; index 0 holds 0.
pub fn moebius_table(limit: u64) -> Vec<i8> {
    let n = limit as usize;
    let mut mu = vec![0i8; n + 1];
    if n == 0 {
        return mu;
    }
    mu[1] = 1;
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let m = p * i;
            if m > n {
                break;
            }
            composite[m] = true;
            if i % p == 0 {
                mu[m] = 0;
                break;
            }
            mu[m] = -mu[i];
        }
    }
    mu
}

/// Ascending divisors of `n`.
pub fn divisors(n: u64) -> Result<Vec<u64>> {
    Ok(factorize(n)?.divisors())
}

/// Largest accepted `k` in [`sigma`].
pub const SIGMA_MAX_POWER: u32 = 16;

/// σ_k(n) = Σ_{d|n} d^k, exactly.
pub fn sigma(k: u32, n: u64) -> Result<BigUint> {
    if k > SIGMA_MAX_POWER {
        return Err(Error::Domain(format!(
            "sigma power {k} > {SIGMA_MAX_POWER}"
        )));
    }
    let f = factorize(n)?;
    // multiplicative: σ_k(p^e) = 1 + p^k + … + p^{ek}
    let mut total = BigUint::one();
    for &(p, e) in f.factors() {
        let pk = BigUint::from(p).pow(k);
        let mut term = BigUint::one();
        let mut acc = BigUint::one();
        for _ in 0..e {
            term *= &pk;
            acc += &term;
        }
        total *= acc;
    }
    Ok(total)
}

/// σ_k(0..=limit) in `u128` by a divisor sieve; index 0 holds 0.
///
/// Fails instead of wrapping when a value leaves the `u128` range.
pub fn divisor_power_sums(k: u32, limit: u64) -> Result<Vec<u128>> {
    let n = limit as usize;
    let mut out = vec![0u128; n + 1];
    let overflow = || Error::Capacity {
        what: "sigma table limit (u128 overflow)",
        requested: limit,
        ceiling: 0,
    };
    for d in 1..=n {
        let dk = (d as u128).checked_pow(k).ok_or_else(overflow)?;
        let mut m = d;
        while m <= n {
            out[m] = out[m].checked_add(dk).ok_or_else(overflow)?;
            m += d;
        }
    }
    Ok(out)
}
