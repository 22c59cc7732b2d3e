//! Multi-modular evaluation of [`ProductRecipe`]s.
//!
//! Each recipe is evaluated modulo a handful of 31-bit NTT-friendly primes
//! with number-theoretic-transform products, then lifted back to exact
//! integers by Garner's CRT. The caller supplies a bound on the absolute
//! value of every coefficient; enough primes are used to cover twice that
//! bound, and one more prime serves as a guard: every lifted coefficient is
//! re-reduced modulo the guard and compared against the guard's independent
//! evaluation. A mismatch means the bound was wrong and is reported as a
//! [`Error::Consistency`] failure.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::{eisenstein_params, pentagonal_terms, IntSeries, ProductRecipe, SeriesFactor};
use crate::numtheory::divisor_power_sums;
use crate::{Error, Result};

/// Primes `c·2²² + 1 < 2³¹` with a primitive root for each.
pub const NTT_PRIMES: [(u32, u32); 20] = [
    (2130706433, 3),
    (2113929217, 5),
    (2088763393, 5),
    (2025848833, 10),
    (2013265921, 31),
    (1866465281, 3),
    (1811939329, 13),
    (1790967809, 13),
    (1711276033, 29),
    (1572864001, 13),
    (1484783617, 5),
    (1438646273, 3),
    (1321205761, 11),
    (1300234241, 3),
    (1224736769, 3),
    (1212153857, 3),
    (1161822209, 3),
    (1107296257, 10),
    (998244353, 3),
    (985661441, 3),
];

/// Largest transform length, `2²²`; products are exact through `q^{2²¹ − 1}`.
pub const MAX_NTT_LEN: usize = 1 << 22;

/// Largest truncation the engine accepts.
pub const MAX_TRUNC: usize = MAX_NTT_LEN / 2 - 1;

const SCHOOLBOOK_CUTOFF: usize = 48;

/// Montgomery arithmetic modulo an odd `p < 2³¹`, with `R = 2³²`.
#[derive(Clone, Copy, Debug)]
pub struct Montgomery {
    p: u32,
    neg_inv: u32,
    r2: u32,
    root: u32,
}

impl Montgomery {
    pub fn new(p: u32, root: u32) -> Self {
        debug_assert!(p % 2 == 1 && p < (1 << 31));
        let mut inv: u32 = 1;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u32.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = (1u64 << 32) % p as u64;
        let r2 = ((r * r) % p as u64) as u32;
        Montgomery {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
            root,
        }
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    #[inline(always)]
    fn redc(&self, t: u64) -> u32 {
        let m = (t as u32).wrapping_mul(self.neg_inv);
        let u = ((t + m as u64 * self.p as u64) >> 32) as u32;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.redc(a as u64 * b as u64)
    }

    #[inline(always)]
    pub fn to_mont(&self, a: u32) -> u32 {
        self.mul(a, self.r2)
    }

    #[inline(always)]
    pub fn from_mont(&self, a: u32) -> u32 {
        self.redc(a as u64)
    }

    #[inline(always)]
    fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    /// `base^exp` on Montgomery-form operands.
    fn pow(&self, base: u32, mut exp: u64) -> u32 {
        let mut acc = self.to_mont(1);
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// In-place transform of Montgomery-form data; `a.len()` a power of two.
    fn ntt(&self, a: &mut [u32], inverse: bool) {
        let n = a.len();
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                a.swap(i, j);
            }
        }
        let g = self.to_mont(self.root);
        let mut twiddles = Vec::with_capacity(n / 2);
        let mut len = 2;
        while len <= n {
            let mut w = self.pow(g, (self.p as u64 - 1) / len as u64);
            if inverse {
                w = self.pow(w, self.p as u64 - 2);
            }
            let half = len / 2;
            twiddles.clear();
            let mut cur = self.to_mont(1);
            for _ in 0..half {
                twiddles.push(cur);
                cur = self.mul(cur, w);
            }
            for chunk in a.chunks_exact_mut(len) {
                let (lo, hi) = chunk.split_at_mut(half);
                for ((x, y), &tw) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                    let u = *x;
                    let v = self.mul(*y, tw);
                    *x = self.add(u, v);
                    *y = self.sub(u, v);
                }
            }
            len <<= 1;
        }
        if inverse {
            let n_inv = self.pow(self.to_mont(n as u32), self.p as u64 - 2);
            for x in a.iter_mut() {
                *x = self.mul(*x, n_inv);
            }
        }
    }

    /// Product of two Montgomery-form series truncated to `out_len` terms.
    pub fn mul_trunc(&self, a: &[u32], b: &[u32], out_len: usize) -> Vec<u32> {
        let a = &a[..a.len().min(out_len)];
        let b = &b[..b.len().min(out_len)];
        if a.is_empty() || b.is_empty() {
            return vec![0; out_len];
        }
        if a.len().min(b.len()) <= SCHOOLBOOK_CUTOFF {
            let mut out = vec![0u32; out_len];
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate().take(out_len - i) {
                    out[i + j] = self.add(out[i + j], self.mul(x, y));
                }
            }
            return out;
        }
        let full = (a.len() + b.len() - 1).min(2 * out_len - 1);
        let size = full.next_power_of_two();
        assert!(
            size <= MAX_NTT_LEN,
            "transform length {size} exceeds {MAX_NTT_LEN}"
        );
        let mut fa = vec![0u32; size];
        fa[..a.len()].copy_from_slice(a);
        self.ntt(&mut fa, false);
        if std::ptr::eq(a, b) {
            for x in fa.iter_mut() {
                *x = self.mul(*x, *x);
            }
        } else {
            let mut fb = vec![0u32; size];
            fb[..b.len()].copy_from_slice(b);
            self.ntt(&mut fb, false);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = self.mul(*x, *y);
            }
        }
        self.ntt(&mut fa, true);
        fa.truncate(out_len);
        fa.resize(out_len, 0);
        fa
    }

    fn pow_trunc(&self, base: &[u32], mut exp: u32, out_len: usize) -> Vec<u32> {
        let mut acc: Option<Vec<u32>> = None;
        let mut b = base.to_vec();
        loop {
            if exp & 1 == 1 {
                acc = Some(match acc {
                    None => b.clone(),
                    Some(x) => self.mul_trunc(&x, &b, out_len),
                });
            }
            exp >>= 1;
            if exp == 0 {
                break;
            }
            b = self.mul_trunc(&b, &b, out_len);
        }
        acc.unwrap_or_else(|| {
            let mut one = vec![0u32; out_len];
            one[0] = self.to_mont(1);
            one
        })
    }

    fn reduce_i128(&self, v: i128) -> u32 {
        v.rem_euclid(self.p as i128) as u32
    }
}

/// Exact inputs shared by every prime: divisor-power tables for the
/// Eisenstein factors.
struct SharedTables {
    sigma3: Option<Vec<u128>>,
    sigma5: Option<Vec<u128>>,
}

impl SharedTables {
    fn build(recipe: &ProductRecipe, inner: usize) -> Result<Self> {
        let wants = |k| recipe.factors().contains(&SeriesFactor::Eisenstein(k));
        Ok(SharedTables {
            sigma3: if wants(4) {
                Some(divisor_power_sums(3, inner as u64)?)
            } else {
                None
            },
            sigma5: if wants(6) {
                Some(divisor_power_sums(5, inner as u64)?)
            } else {
                None
            },
        })
    }
}

/// Mod-`p` coefficients of the recipe with the leading `q^lead` already
/// removed, truncated to `inner + 1` terms, in ordinary (non-Montgomery) form.
fn evaluate_mod(
    recipe: &ProductRecipe,
    inner: usize,
    tables: &SharedTables,
    mont: &Montgomery,
) -> Result<Vec<u32>> {
    let len = inner + 1;
    let one = mont.to_mont(1);
    let minus_one = mont.to_mont(mont.modulus() - 1);
    let pent = pentagonal_terms(inner);
    let mut acc: Option<Vec<u32>> = None;
    for f in recipe.factors() {
        let series = match f {
            SeriesFactor::Eta(eq) => {
                let mut prod: Option<Vec<u32>> = None;
                for &(m, r) in eq.factors() {
                    let m = m as usize;
                    let mut base = vec![0u32; len];
                    for &(i, s) in &pent {
                        match i.checked_mul(m) {
                            Some(idx) if idx <= inner => {
                                base[idx] = if s > 0 { one } else { minus_one };
                            }
                            _ => break,
                        }
                    }
                    let powered = mont.pow_trunc(&base, r as u32, len);
                    prod = Some(match prod {
                        None => powered,
                        Some(x) => mont.mul_trunc(&x, &powered, len),
                    });
                }
                prod.expect("eta quotient has at least one factor")
            }
            SeriesFactor::Eisenstein(k) => {
                let (scale, _) = eisenstein_params(*k)?;
                let sig = match k {
                    4 => tables.sigma3.as_ref(),
                    _ => tables.sigma5.as_ref(),
                }
                .expect("sigma table prepared for every Eisenstein factor");
                let scale_mod = mont.reduce_i128(scale as i128);
                let p = mont.modulus() as u128;
                let mut s: Vec<u32> = sig
                    .iter()
                    .map(|&v| mont.to_mont(mont.mul(mont.to_mont((v % p) as u32), scale_mod)))
                    .collect();
                s[0] = one;
                s
            }
        };
        acc = Some(match acc {
            None => series,
            Some(x) => mont.mul_trunc(&x, &series, len),
        });
    }
    let acc = acc.expect("recipe has at least one factor");
    Ok(acc.into_iter().map(|x| mont.from_mont(x)).collect())
}

/// Number of primes from [`NTT_PRIMES`] needed to represent integers of
/// absolute value below `2^bound_bits`, not counting the guard.
pub fn primes_needed(bound_bits: f64) -> Result<usize> {
    let mut bits = 0.0;
    for (i, &(p, _)) in NTT_PRIMES.iter().enumerate() {
        bits += (p as f64).log2();
        if bits > bound_bits + 1.0 {
            if i + 2 > NTT_PRIMES.len() {
                break;
            }
            return Ok(i + 1);
        }
    }
    Err(Error::Capacity {
        what: "coefficient bound bits",
        requested: bound_bits.ceil() as u64,
        ceiling: (bits - 1.0).floor() as u64,
    })
}

/// Exact expansion through `q^trunc`, assuming every coefficient has
/// absolute value below `2^bound_bits`.
pub fn expand_multimodular(
    recipe: &ProductRecipe,
    trunc: usize,
    bound_bits: f64,
) -> Result<IntSeries> {
    if trunc > MAX_TRUNC {
        return Err(Error::Capacity {
            what: "multimodular truncation",
            requested: trunc as u64,
            ceiling: MAX_TRUNC as u64,
        });
    }
    let lead = recipe.leading_power();
    if trunc < lead {
        return Ok(IntSeries::zero(trunc));
    }
    let inner = trunc - lead;
    let k = primes_needed(bound_bits)?;
    let tables = SharedTables::build(recipe, inner)?;

    // k working primes plus the guard; evaluation order does not affect results.
    let residues: Vec<Vec<u32>> = NTT_PRIMES[..=k]
        .par_iter()
        .map(|&(p, g)| evaluate_mod(recipe, inner, &tables, &Montgomery::new(p, g)))
        .collect::<Result<_>>()?;
    let moduli: Vec<u32> = NTT_PRIMES[..k].iter().map(|&(p, _)| p).collect();
    let guard = NTT_PRIMES[k].0;
    let lifted = crt_lift(&residues[..k], &moduli)?;

    let mut coeffs = vec![BigInt::zero(); lead];
    coeffs.reserve(inner + 1);
    for (i, v) in lifted.into_iter().enumerate() {
        let back = v.mod_floor_u32(guard);
        if back != residues[k][i] {
            return Err(Error::Consistency(format!(
                "CRT guard mismatch at q^{}: coefficient bound 2^{bound_bits:.1} too small",
                i + lead
            )));
        }
        coeffs.push(v);
    }
    IntSeries::from_coeffs(coeffs)
}

trait ModFloorU32 {
    fn mod_floor_u32(&self, m: u32) -> u32;
}

impl ModFloorU32 for BigInt {
    fn mod_floor_u32(&self, m: u32) -> u32 {
        let r = (self.magnitude() % m)
            .to_u32()
            .expect("remainder below modulus");
        if self.sign() == Sign::Minus && r != 0 {
            m - r
        } else {
            r
        }
    }
}

/// Garner reconstruction of the symmetric representatives in `(−M/2, M/2]`,
/// `M = Π moduli`, one per coefficient position.
pub fn crt_lift(residues: &[Vec<u32>], moduli: &[u32]) -> Result<Vec<BigInt>> {
    let k = moduli.len();
    if k == 0 || residues.len() != k {
        return Err(Error::Usage(
            "crt_lift needs one residue vector per modulus".into(),
        ));
    }
    let len = residues[0].len();
    if residues.iter().any(|r| r.len() != len) {
        return Err(Error::Usage("residue vectors differ in length".into()));
    }
    // inv[i][j] = moduli[j]^{-1} mod moduli[i] for j < i
    let inv: Vec<Vec<u64>> = (0..k)
        .map(|i| {
            (0..i)
                .map(|j| mod_inverse(moduli[j] as u64 % moduli[i] as u64, moduli[i] as u64))
                .collect()
        })
        .collect();
    let modulus: BigUint = moduli.iter().map(|&m| BigUint::from(m)).product();
    let half: BigUint = &modulus >> 1u32;
    let modulus = BigInt::from(modulus);

    let out = (0..len)
        .into_par_iter()
        .map(|pos| {
            let mut digits = [0u64; NTT_PRIMES.len()];
            for i in 0..k {
                let pi = moduli[i] as u64;
                let mut t = residues[i][pos] as u64;
                for j in 0..i {
                    t = ((t + pi - digits[j] % pi) % pi) * inv[i][j] % pi;
                }
                digits[i] = t;
            }
            if k <= 2 {
                let mut v: u128 = digits[k - 1] as u128;
                for i in (0..k - 1).rev() {
                    v = v * moduli[i] as u128 + digits[i] as u128;
                }
                let m: u128 = moduli.iter().map(|&x| x as u128).product();
                return if v > m / 2 {
                    BigInt::from(v as i128 - m as i128)
                } else {
                    BigInt::from(v)
                };
            }
            let mut v = BigUint::from(digits[k - 1]);
            for i in (0..k - 1).rev() {
                v = v * moduli[i] + digits[i];
            }
            if v > half {
                BigInt::from(v) - &modulus
            } else {
                BigInt::from(v)
            }
        })
        .collect();
    Ok(out)
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "moduli must be coprime");
    old_s.rem_euclid(m as i128) as u64
}
