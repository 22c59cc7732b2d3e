//! Truncated q-series with exact integer coefficients.
//!
//! The building blocks are the Euler product `P(q) = Π (1 − qⁿ)`, which by
//! the pentagonal number theorem has only `O(√T)` nonzero coefficients up to
//! `q^T`, eta quotients `q^{Σmr/24} Π P(q^m)^r`, and the Eisenstein series
//! E₄ and E₆. Products are formed by repeatedly multiplying a dense
//! accumulator by a sparse factor.
//!
//! [`modular`] evaluates the same recipes modulo word-sized primes and lifts
//! the result by CRT, which is what makes truncations of 10⁵–10⁶ practical.

pub mod modular;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::ops::Mul;

use crate::numtheory::divisor_power_sums;
use crate::{Error, Result};

/// A power series `Σ_{n=0}^{trunc} a_n qⁿ` with exact integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntSeries {
    coeffs: Vec<BigInt>,
}

impl IntSeries {
    /// Takes ownership of `coeffs`; the truncation is `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Usage(
                "a series needs at least the q^0 coefficient".into(),
            ));
        }
        Ok(IntSeries { coeffs })
    }

    pub fn from_i64s(coeffs: &[i64]) -> Result<Self> {
        Self::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(trunc: usize) -> Self {
        IntSeries {
            coeffs: vec![BigInt::zero(); trunc + 1],
        }
    }

    pub fn one(trunc: usize) -> Self {
        let mut s = Self::zero(trunc);
        s.coeffs[0] = BigInt::one();
        s
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Option<&BigInt> {
        self.coeffs.get(n)
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_sparse(&self) -> SparseSeries {
        SparseSeries {
            trunc: self.trunc(),
            terms: self
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i, c.clone()))
                .collect(),
        }
    }

    /// Schoolbook product, truncated.
    pub fn mul_dense(&self, other: &IntSeries) -> Result<IntSeries> {
        check_trunc(self.trunc(), other.trunc())?;
        let t = self.trunc();
        let mut out = vec![BigInt::zero(); t + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=t - i].iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Ok(IntSeries { coeffs: out })
    }

    /// `self · q^shift`, keeping the truncation.
    pub fn shifted(&self, shift: usize) -> IntSeries {
        let t = self.trunc();
        let mut out = vec![BigInt::zero(); t + 1];
        if shift <= t {
            out[shift..].clone_from_slice(&self.coeffs[..=t - shift]);
        }
        IntSeries { coeffs: out }
    }

    /// Re-truncates to `trunc`, which must not exceed the current one.
    pub fn truncated(&self, trunc: usize) -> Result<IntSeries> {
        if trunc > self.trunc() {
            return Err(Error::insufficient(trunc as u64, self.trunc() as u64));
        }
        Ok(IntSeries {
            coeffs: self.coeffs[..=trunc].to_vec(),
        })
    }
}

impl Mul for &IntSeries {
    type Output = IntSeries;

    /// Panics on mismatched truncation; use [`IntSeries::mul_dense`] to get an error instead.
    fn mul(self, rhs: &IntSeries) -> IntSeries {
        self.mul_dense(rhs).expect("mismatched truncation")
    }
}

/// A series stored by its nonzero terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseSeries {
    trunc: usize,
    terms: Vec<(usize, BigInt)>,
}

impl SparseSeries {
    /// `terms` must have strictly increasing indices, all `<= trunc`.
    pub fn new(trunc: usize, terms: Vec<(usize, BigInt)>) -> Result<Self> {
        if terms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Usage(
                "sparse terms must be strictly increasing".into(),
            ));
        }
        if terms.last().is_some_and(|(i, _)| *i > trunc) {
            return Err(Error::Usage("sparse term beyond truncation".into()));
        }
        Ok(SparseSeries { trunc, terms })
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn terms(&self) -> &[(usize, BigInt)] {
        &self.terms
    }

    pub fn to_dense(&self) -> IntSeries {
        let mut s = IntSeries::zero(self.trunc);
        for (i, c) in &self.terms {
            s.coeffs[*i] = c.clone();
        }
        s
    }
}

fn check_trunc(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Usage(format!("truncation mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Generalized pentagonal numbers `k(3k∓1)/2 ≤ trunc` with their sign `(−1)^k`,
/// ascending. The first entry is `(0, 1)`.
pub fn pentagonal_terms(trunc: usize) -> Vec<(usize, i8)> {
    let mut terms = vec![(0usize, 1i8)];
    let mut k = 1usize;
    loop {
        let sign = if k.is_multiple_of(2) { 1 } else { -1 };
        let lo = k * (3 * k - 1) / 2;
        let hi = k * (3 * k + 1) / 2;
        if lo > trunc {
            break;
        }
        terms.push((lo, sign));
        if hi <= trunc {
            terms.push((hi, sign));
        }
        k += 1;
    }
    terms
}

/// `P(q) = Π_{n≥1} (1 − qⁿ)` truncated at `trunc`, via the pentagonal number theorem.
pub fn euler_product_sparse(trunc: usize) -> SparseSeries {
    SparseSeries {
        trunc,
        terms: pentagonal_terms(trunc)
            .into_iter()
            .map(|(i, s)| (i, BigInt::from(s)))
            .collect(),
    }
}

/// `a(q) · s(q^scale)`, truncated. Cost is `trunc × |support of s below trunc/scale|`.
pub fn mul_dense_sparse(a: &IntSeries, s: &SparseSeries, scale: usize) -> Result<IntSeries> {
    check_trunc(a.trunc(), s.trunc())?;
    if scale == 0 {
        return Err(Error::Usage("sparse multiplier scale must be >= 1".into()));
    }
    let t = a.trunc();
    let mut out = vec![BigInt::zero(); t + 1];
    for (idx, c) in &s.terms {
        let shift = match idx.checked_mul(scale) {
            Some(v) if v <= t => v,
            _ => break,
        };
        if c.is_one() {
            for (o, x) in out[shift..].iter_mut().zip(&a.coeffs) {
                *o += x;
            }
        } else if (-c).is_one() {
            for (o, x) in out[shift..].iter_mut().zip(&a.coeffs) {
                *o -= x;
            }
        } else {
            for (o, x) in out[shift..].iter_mut().zip(&a.coeffs) {
                *o += c * x;
            }
        }
    }
    Ok(IntSeries { coeffs: out })
}

/// `Π η(m z)^r` over `(m, r)` factors, tracked without the fractional
/// `q^{1/24}` prefactor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EtaQuotient {
    factors: Vec<(u32, i32)>,
    leading_power: usize,
}

impl EtaQuotient {
    /// Only positive exponents with `Σ m·r ≡ 0 (mod 24)` are supported.
    pub fn new(factors: Vec<(u32, i32)>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::UnsupportedQuotient("empty factor list".into()));
        }
        let mut weight_sum: i64 = 0;
        for &(m, r) in &factors {
            if m == 0 {
                return Err(Error::UnsupportedQuotient("multiplier 0".into()));
            }
            if r <= 0 {
                return Err(Error::UnsupportedQuotient(format!(
                    "exponent {r} on eta({m}z); only positive exponents are supported"
                )));
            }
            weight_sum += i64::from(m) * i64::from(r);
        }
        if weight_sum % 24 != 0 {
            return Err(Error::UnsupportedQuotient(format!(
                "sum of m*r = {weight_sum} is not divisible by 24"
            )));
        }
        Ok(EtaQuotient {
            factors,
            leading_power: (weight_sum / 24) as usize,
        })
    }

    pub fn factors(&self) -> &[(u32, i32)] {
        &self.factors
    }

    /// Order of vanishing at infinity, `Σ m·r / 24`.
    pub fn leading_power(&self) -> usize {
        self.leading_power
    }

    /// Weight `Σ r / 2`.
    pub fn weight(&self) -> u32 {
        (self.factors.iter().map(|&(_, r)| r as i64).sum::<i64>() / 2) as u32
    }
}

/// q-expansion of an eta quotient through `q^trunc`.
///
/// One sparse multiplication per unit of exponent.
pub fn eta_quotient_expand(eq: &EtaQuotient, trunc: usize) -> Result<IntSeries> {
    let lead = eq.leading_power();
    if trunc < lead {
        return Err(Error::Usage(format!(
            "truncation {trunc} is below the leading power {lead}"
        )));
    }
    let inner = trunc - lead;
    let p = euler_product_sparse(inner);
    let mut acc = IntSeries::one(inner);
    for &(m, r) in eq.factors() {
        for _ in 0..r {
            acc = mul_dense_sparse(&acc, &p, m as usize)?;
        }
    }
    let mut coeffs = vec![BigInt::zero(); lead];
    coeffs.extend(acc.coeffs);
    IntSeries::from_coeffs(coeffs)
}

/// Eisenstein series E₄ = 1 + 240 Σ σ₃(n)qⁿ or E₆ = 1 − 504 Σ σ₅(n)qⁿ.
pub fn eisenstein(k: u32, trunc: usize) -> Result<IntSeries> {
    let (scale, power) = eisenstein_params(k)?;
    let sig = divisor_power_sums(power, trunc as u64)?;
    let mut coeffs: Vec<BigInt> = sig.iter().map(|&s| BigInt::from(s) * scale).collect();
    coeffs[0] = BigInt::one();
    IntSeries::from_coeffs(coeffs)
}

/// `(scale, divisor power)` for E_k.
pub(crate) fn eisenstein_params(k: u32) -> Result<(i64, u32)> {
    match k {
        4 => Ok((240, 3)),
        6 => Ok((-504, 5)),
        _ => Err(Error::UnsupportedForm(format!(
            "Eisenstein series of weight {k}"
        ))),
    }
}

/// One factor of a [`ProductRecipe`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SeriesFactor {
    Eta(EtaQuotient),
    Eisenstein(u32),
}

/// A product of eta quotients and Eisenstein series.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductRecipe {
    factors: Vec<SeriesFactor>,
}

impl ProductRecipe {
    pub fn new(factors: Vec<SeriesFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Usage("empty recipe".into()));
        }
        for f in &factors {
            if let SeriesFactor::Eisenstein(k) = f {
                eisenstein_params(*k)?;
            }
        }
        Ok(ProductRecipe { factors })
    }

    pub fn factors(&self) -> &[SeriesFactor] {
        &self.factors
    }

    pub fn leading_power(&self) -> usize {
        self.factors
            .iter()
            .map(|f| match f {
                SeriesFactor::Eta(eq) => eq.leading_power(),
                SeriesFactor::Eisenstein(_) => 0,
            })
            .sum()
    }

    pub fn weight(&self) -> u32 {
        self.factors
            .iter()
            .map(|f| match f {
                SeriesFactor::Eta(eq) => eq.weight(),
                SeriesFactor::Eisenstein(k) => *k,
            })
            .sum()
    }

    /// Exact expansion with big-integer sparse and schoolbook products.
    ///
    /// Quadratic once Eisenstein factors are involved; meant for small
    /// truncations and as an independent route against [`modular`].
    pub fn expand_exact(&self, trunc: usize) -> Result<IntSeries> {
        let mut acc = IntSeries::one(trunc);
        for f in &self.factors {
            acc = match f {
                SeriesFactor::Eta(eq) => {
                    if trunc < eq.leading_power() {
                        IntSeries::zero(trunc)
                    } else {
                        acc.mul_dense(&eta_quotient_expand(eq, trunc)?)?
                    }
                }
                SeriesFactor::Eisenstein(k) => acc.mul_dense(&eisenstein(*k, trunc)?)?,
            };
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense brute force: multiply by (1 − qⁿ) for every n ≤ T.
    fn brute_euler(t: usize) -> Vec<i64> {
        let mut c = vec![0i64; t + 1];
        c[0] = 1;
        for n in 1..=t {
            for i in (n..=t).rev() {
                c[i] -= c[i - n];
            }
        }
        c
    }

    /// Brute force Π (1 − q^{m n})^r for a factor list, dense i128.
    fn brute_eta(factors: &[(usize, u32)], t: usize) -> Vec<i128> {
        let lead: usize = factors.iter().map(|&(m, r)| m * r as usize).sum::<usize>() / 24;
        let inner = t - lead;
        let mut c = vec![0i128; inner + 1];
        c[0] = 1;
        for &(m, r) in factors {
            for n in 1..=inner {
                let step = m * n;
                if step > inner {
                    break;
                }
                for _ in 0..r {
                    for i in (step..=inner).rev() {
                        c[i] -= c[i - step];
                    }
                }
            }
        }
        let mut out = vec![0i128; lead];
        out.extend(c);
        out
    }

    fn ints(s: &IntSeries) -> Vec<i64> {
        s.coeffs()
            .iter()
            .map(|c| i64::try_from(c).unwrap())
            .collect()
    }

    #[test]
    fn euler_product_examples() {
        let p7 = euler_product_sparse(7).to_dense();
        assert_eq!(ints(&p7), brute_euler(7));
        assert_eq!(ints(&p7), vec![1, -1, -1, 0, 0, 1, 0, 1]);
        let p12 = euler_product_sparse(12).to_dense();
        assert_eq!(brute_euler(12)[12], -1);
        assert_eq!(ints(&p12)[12], -1);
    }

    #[test]
    fn euler_product_matches_brute_force_to_200() {
        for t in 1..=200 {
            let sparse = euler_product_sparse(t);
            assert!(sparse
                .terms()
                .iter()
                .all(|(_, c)| c.is_one() || (-c).is_one()));
            assert_eq!(ints(&sparse.to_dense()), brute_euler(t), "T = {t}");
        }
    }

    #[test]
    fn dense_sparse_examples() {
        let a = IntSeries::from_i64s(&[1, 1, 0]).unwrap();
        let s = IntSeries::from_i64s(&[1, -1, 0]).unwrap().to_sparse();
        assert_eq!(ints(&mul_dense_sparse(&a, &s, 1).unwrap()), vec![1, 0, -1]);

        let a = IntSeries::from_i64s(&[3, -7, 2, 9]).unwrap();
        let one = IntSeries::one(3).to_sparse();
        assert_eq!(mul_dense_sparse(&a, &one, 1).unwrap(), a);

        let p = euler_product_sparse(10);
        let p2 = mul_dense_sparse(&p.to_dense(), &p, 1).unwrap();
        // schoolbook convolution oracle
        let pd = brute_euler(10);
        let oracle: Vec<i64> = (0..=10)
            .map(|n| (0..=n).map(|i| pd[i] * pd[n - i]).sum())
            .collect();
        assert_eq!(oracle, vec![1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1]);
        assert_eq!(ints(&p2), oracle);
    }

    #[test]
    fn dense_sparse_scale_and_mismatch() {
        let a = IntSeries::from_i64s(&[1, 1, 1, 1, 1]).unwrap();
        let s = IntSeries::from_i64s(&[1, -1, 0, 0, 0]).unwrap().to_sparse();
        // (1+q+q²+q³+q⁴)(1−q²)
        assert_eq!(
            ints(&mul_dense_sparse(&a, &s, 2).unwrap()),
            vec![1, 1, 0, 0, 0]
        );
        let short = IntSeries::one(3).to_sparse();
        assert!(matches!(
            mul_dense_sparse(&a, &short, 1),
            Err(Error::Usage(_))
        ));
        assert!(mul_dense_sparse(&a, &s, 0).is_err());
    }

    #[test]
    fn eta_quotient_examples() {
        let delta = EtaQuotient::new(vec![(1, 24)]).unwrap();
        assert_eq!(delta.leading_power(), 1);
        let d = eta_quotient_expand(&delta, 5).unwrap();
        let oracle = brute_eta(&[(1, 24)], 5);
        assert_eq!(oracle, vec![0, 1, -24, 252, -1472, 4830]);
        assert_eq!(ints(&d), vec![0, 1, -24, 252, -1472, 4830]);

        let n11 = EtaQuotient::new(vec![(1, 2), (11, 2)]).unwrap();
        let g = eta_quotient_expand(&n11, 7).unwrap();
        let oracle = brute_eta(&[(1, 2), (11, 2)], 7);
        assert_eq!(oracle[1..], [1, -2, -1, 2, 1, 2, -2]);
        assert_eq!(ints(&g)[1..], [1, -2, -1, 2, 1, 2, -2]);
    }

    #[test]
    fn eta_quotients_agree_with_brute_force() {
        let cases: Vec<Vec<(usize, u32)>> = vec![
            vec![(1, 24)],
            vec![(1, 2), (11, 2)],
            vec![(1, 1), (2, 1), (7, 1), (14, 1)],
            vec![(1, 1), (3, 1), (5, 1), (15, 1)],
            vec![(1, 8), (2, 8)],
        ];
        for f in cases {
            let eq =
                EtaQuotient::new(f.iter().map(|&(m, r)| (m as u32, r as i32)).collect()).unwrap();
            let s = eta_quotient_expand(&eq, 150).unwrap();
            let oracle = brute_eta(&f, 150);
            let got: Vec<i128> = s
                .coeffs()
                .iter()
                .map(|c| i128::try_from(c).unwrap())
                .collect();
            assert_eq!(got, oracle, "{f:?}");
            assert!(s.coeff(eq.leading_power()).unwrap().is_one());
            assert!(s.coeffs()[..eq.leading_power()].iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn eta_quotient_rejections() {
        assert!(matches!(
            EtaQuotient::new(vec![(1, 23)]),
            Err(Error::UnsupportedQuotient(_))
        ));
        assert!(matches!(
            EtaQuotient::new(vec![(1, 30), (2, -3)]),
            Err(Error::UnsupportedQuotient(_))
        ));
        let delta = EtaQuotient::new(vec![(1, 24)]).unwrap();
        assert!(eta_quotient_expand(&delta, 0).is_err());
        assert_eq!(ints(&eta_quotient_expand(&delta, 1).unwrap()), vec![0, 1]);
    }

    #[test]
    fn eta24_is_strategy_independent() {
        let t = 120;
        let delta = EtaQuotient::new(vec![(1, 24)]).unwrap();
        let direct = eta_quotient_expand(&delta, t).unwrap();

        // P², P⁴, P⁸, P¹⁶ by dense squaring, then P¹⁶·P⁸, then shift by q¹
        let inner = t - 1;
        let p = euler_product_sparse(inner).to_dense();
        let p2 = &p * &p;
        let p4 = &p2 * &p2;
        let p8 = &p4 * &p4;
        let p16 = &p8 * &p8;
        let p24 = &p16 * &p8;
        let mut coeffs = vec![BigInt::zero()];
        coeffs.extend(p24.into_coeffs());
        assert_eq!(IntSeries::from_coeffs(coeffs).unwrap(), direct);
    }

    #[test]
    fn eisenstein_examples() {
        assert_eq!(ints(&eisenstein(4, 2).unwrap()), vec![1, 240, 2160]);
        assert_eq!(ints(&eisenstein(6, 1).unwrap()), vec![1, -504]);
        assert!(eisenstein(4, 0).unwrap().coeff(0).unwrap().is_one());
        assert!(eisenstein(6, 0).unwrap().coeff(0).unwrap().is_one());
        assert!(matches!(eisenstein(8, 3), Err(Error::UnsupportedForm(_))));
    }

    #[test]
    fn eisenstein_product_identity() {
        // E₄² = E₈ = 1 + 480 Σ σ₇(n)qⁿ
        let e4 = eisenstein(4, 60).unwrap();
        let e8 = &e4 * &e4;
        for n in 1..=60u64 {
            let s7 = crate::numtheory::sigma(7, n).unwrap();
            assert_eq!(e8.coeffs()[n as usize], BigInt::from(s7) * 480);
        }
    }

    #[test]
    fn recipe_weight_and_exact_expansion() {
        let r = ProductRecipe::new(vec![
            SeriesFactor::Eta(EtaQuotient::new(vec![(1, 24)]).unwrap()),
            SeriesFactor::Eisenstein(4),
        ])
        .unwrap();
        assert_eq!(r.weight(), 16);
        assert_eq!(r.leading_power(), 1);
        let s = r.expand_exact(2).unwrap();
        assert_eq!(ints(&s), vec![0, 1, 216]);
        assert!(ProductRecipe::new(vec![SeriesFactor::Eisenstein(2)]).is_err());
    }

    fn small_series(t: usize) -> impl Strategy<Value = IntSeries> {
        proptest::collection::vec(-9i64..=9, t + 1).prop_map(|v| IntSeries::from_i64s(&v).unwrap())
    }

    proptest! {
        #[test]
        fn multiplication_commutes_and_associates(
            (a, b, c) in (1usize..=64).prop_flat_map(|t| (small_series(t), small_series(t), small_series(t)))
        ) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            let sparse_b = b.to_sparse();
            prop_assert_eq!(mul_dense_sparse(&a, &sparse_b, 1).unwrap(), &a * &b);
        }
    }
}
