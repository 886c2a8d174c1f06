//! Least-squares line fits and grid error measurement.

use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::math::ln;
use crate::net::Network;

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// Fitted slope.
    pub slope: f64,
    /// Fitted intercept.
    pub intercept: f64,
    /// Coefficient of determination; 1 when `y` is constant and fitted exactly.
    pub r2: f64,
}

/// Fits a line through `(x_i, y_i)`; needs two distinct `x` values and
/// finite data.
pub fn fit_linear(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(param("line fit needs at least two paired points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(param("line fit needs finite data"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(param("line fit needs two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (slope * a + intercept);
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Line fit of `ln y` against `ln x`; all values must be positive.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| *v <= 0.0) {
        return Err(param("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| ln(*v)).collect();
    fit_linear(&lx, &ly)
}

/// Line fit of `ln y` against `x`.
pub fn fit_semilog(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if y.iter().any(|v| *v <= 0.0) {
        return Err(param("semi-log fit needs positive data"));
    }
    let ly: Vec<f64> = y.iter().map(|v| ln(*v)).collect();
    fit_linear(x, &ly)
}

/// Largest `|net(x) - f(x)|` over the given points, skipping those for
/// which `exclude` returns true. Returns 0 when every point is skipped.
pub fn sup_error(
    net: &Network,
    f: &dyn Fn(&[f64]) -> f64,
    points: &[Vec<f64>],
    exclude: &dyn Fn(&[f64]) -> bool,
) -> f64 {
    points
        .iter()
        .filter(|x| !exclude(x))
        .map(|x| (net.eval_scalar(x) - f(x)).abs())
        .fold(0.0, f64::max)
}

/// Regular grid with `per_axis + 1` points per axis on `[0, 1]^d`.
pub fn unit_grid(d: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = (per_axis + 1).pow(d as u32);
    for mut i in 0..total {
        let mut x = Vec::with_capacity(d);
        for _ in 0..d {
            x.push((i % (per_axis + 1)) as f64 / per_axis as f64);
            i /= per_axis + 1;
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::affine_rows;
    use alloc::vec;

    #[test]
    fn exact_line() {
        let f = fit_linear(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(-2)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!(fit_loglog(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(fit_linear(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn noisy_r2_below_one() {
        let f = fit_linear(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(f.r2 < 0.5);
    }

    #[test]
    fn sup_error_with_exclusion() {
        let net = affine_rows(1, vec![vec![(0, 1.0)]], vec![0.0]).unwrap();
        let pts = unit_grid(1, 10);
        assert_eq!(pts.len(), 11);
        let e = sup_error(&net, &|x| x[0] * x[0], &pts, &|_| false);
        assert!((e - 0.25).abs() < 1e-12);
        let e2 = sup_error(&net, &|x| x[0] * x[0], &pts, &|x| x[0] > 0.2 && x[0] < 0.8);
        assert!(e2 < 0.25);
        assert_eq!(unit_grid(2, 3).len(), 16);
    }
}
