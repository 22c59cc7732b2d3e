//! Exact Fourier coefficients of level-1 Hecke eigenforms and weight-2
//! eta-quotient newforms, the q-exponents of the associated generalized
//! modular functions, and the machinery to count and analyse their sign
//! changes.
//!
//! Layout:
//! - [`numtheory`]: sieve, factorization, Möbius, divisor sums.
//! - [`qseries`]: truncated integer power series, eta quotients, Eisenstein
//!   series, and a multi-modular engine for large truncations.
//! - [`eigenforms`]: the form catalog, coefficient tables, Hecke recurrences.
//! - [`gmf`]: exponents `c(n)` recovered from weight-2 coefficients.
//! - [`signlab`]: sign-change counting, moment sums, prime sums, fits.

pub mod eigenforms;
pub mod error;
pub mod gmf;
pub mod numtheory;
pub mod qseries;
pub mod signlab;

pub use error::{Error, Result};
