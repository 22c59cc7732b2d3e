use serde::Serialize;

use crate::{Error, Result};

/// Least-squares line `log(count) ≈ slope·log(x) + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub residual: f64,
    /// Points with `count ≥ 1`.
    pub used: usize,
}

fn least_squares(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("fit points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, residual))
}

/// Fits `log(count)` against `log(x)`; points with `count = 0` are dropped.
pub fn fit_exponent(points: &[(f64, u64)]) -> Result<ExponentFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, c)| c >= 1 && x > 0.0)
        .map(|&(x, c)| (x.ln(), (c as f64).ln()))
        .collect();
    if logs.len() < 2 {
        return Err(Error::insufficient(2, logs.len() as u64));
    }
    let (slope, intercept, residual) = least_squares(&logs)?;
    Ok(ExponentFit {
        slope,
        intercept,
        residual,
        used: logs.len(),
    })
}

/// Empirical `A` in `error ≈ C·exp(−A·√log x)` from `(x, error)` pairs,
/// fitted as `log(error)` against `√log x`. Pairs with `error ≤ 0` or `x ≤ 1`
/// are dropped.
pub fn decay_constant(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, e)| e > 0.0 && x > 1.0)
        .map(|&(x, e)| (x.ln().sqrt(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::insufficient(2, pts.len() as u64));
    }
    let (slope, intercept, residual) = least_squares(&pts)?;
    Ok(ExponentFit {
        slope: -slope,
        intercept,
        residual,
        used: pts.len(),
    })
}

/// JSON fit report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub series: String,
    /// `(x, count)` pairs as fitted.
    pub points: Vec<(f64, u64)>,
    pub slope: f64,
    pub residual: f64,
    /// Exponent the slope is compared against, when there is one.
    pub reference_exponent: Option<f64>,
}

impl FitReport {
    pub fn new(
        series: String,
        points: Vec<(f64, u64)>,
        reference_exponent: Option<f64>,
    ) -> Result<Self> {
        let fit = fit_exponent(&points)?;
        Ok(FitReport {
            series,
            points,
            slope: fit.slope,
            residual: fit.residual,
            reference_exponent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_examples() {
        let f = fit_exponent(&[(100.0, 10), (1000.0, 100)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        let f = fit_exponent(&[(100.0, 5), (10000.0, 5)]).unwrap();
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn zero_counts_are_dropped() {
        let f = fit_exponent(&[(10.0, 0), (100.0, 10), (1000.0, 100)]).unwrap();
        assert_eq!(f.used, 2);
        assert!(matches!(
            fit_exponent(&[(10.0, 0), (100.0, 3)]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(fit_exponent(&[(10.0, 2), (10.0, 3)]).is_err());
    }

    #[test]
    fn recovers_power_law() {
        let pts: Vec<(f64, u64)> = (4..16)
            .map(|t| {
                let x = 2f64.powi(t);
                (x, (3.0 * x.powf(0.75)).round() as u64)
            })
            .collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope - 0.75).abs() < 0.01);
    }

    #[test]
    fn decay_recovers_constant() {
        let pts: Vec<(f64, f64)> = [1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&x: &f64| (x, 0.5 * (-1.3 * x.ln().sqrt()).exp()))
            .collect();
        let f = decay_constant(&pts).unwrap();
        assert!((f.slope - 1.3).abs() < 1e-9);
        assert!((f.intercept - 0.5f64.ln()).abs() < 1e-9);
    }
}
