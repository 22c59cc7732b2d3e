//! Sign-change counting, moment sums and prime sums over coefficient tables.
//!
//! Every sign comes from exact integers. Floating-point sums are compensated
//! and always accumulated in ascending index order, so results do not depend
//! on how work was split across threads.

mod changes;
mod fit;
mod moments;

pub use changes::{
    count_sign_changes, dyadic_sign_change_scan, dyadic_windows, scan_windows, sign_series,
    write_signchanges_csv, IndexDomain, SignChangeReport, SignSeries, SignSource, Window,
    WindowMode,
};
pub use fit::{decay_constant, fit_exponent, ExponentFit, FitReport};
pub use moments::{
    abel_consistency, interval_moments, power_moment_sums, prime_sum_series, prime_sums,
    write_primesums_csv, AbelReport, IntervalMoments, PowerMoments, PrimeSumReport,
};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::{Error, Result};

/// Exact sign of a sequence term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: &BigInt) -> Sign {
        if v.is_zero() {
            Sign::Zero
        } else if v.is_negative() {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn of_i64(v: i64) -> Sign {
        match v.signum() {
            -1 => Sign::Negative,
            0 => Sign::Zero,
            _ => Sign::Positive,
        }
    }

    /// Display/testing only; exact data should use [`Sign::of`].
    pub fn of_f64(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn product(self, other: Sign) -> Sign {
        match self.as_i8() * other.as_i8() {
            -1 => Sign::Negative,
            0 => Sign::Zero,
            _ => Sign::Positive,
        }
    }
}

/// Exponents governing the moment estimates for `λ(n^j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremConstants {
    pub j: u32,
    /// δ_j as `(numerator, denominator)`.
    pub delta: (u32, u32),
    /// β_j as `(numerator, denominator)`.
    pub beta: (u32, u32),
    /// Reporting parameter only.
    pub epsilon: f64,
}

impl TheoremConstants {
    pub fn for_power(j: u32) -> Result<Self> {
        let (delta, beta) = match j {
            2 => ((2, 11), (1, 2)),
            3 => ((1, 9), (3, 4)),
            4 => ((2, 27), (7, 9)),
            _ => {
                return Err(Error::Domain(format!(
                    "no sign-change exponents for j = {j}"
                )))
            }
        };
        Ok(TheoremConstants {
            j,
            delta,
            beta,
            epsilon: 0.0,
        })
    }

    pub fn delta_f64(&self) -> f64 {
        self.delta.0 as f64 / self.delta.1 as f64
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta.0 as f64 / self.beta.1 as f64
    }

    /// `1 − δ_j − β_j` as an exact fraction; positive for every cataloged `j`.
    pub fn gap(&self) -> (i64, i64) {
        let (dn, dd) = (self.delta.0 as i64, self.delta.1 as i64);
        let (bn, bd) = (self.beta.0 as i64, self.beta.1 as i64);
        let den = dd * bd;
        (den - dn * bd - bn * dd, den)
    }

    /// Window length `x^{1−δ_j+2ε}` used by the interval comparison.
    pub fn window(&self, x: f64) -> f64 {
        x.powf(1.0 - self.delta_f64() + 2.0 * self.epsilon)
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
