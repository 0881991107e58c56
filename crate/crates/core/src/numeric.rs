//! Small numerical helpers: least-squares polynomial fits, Horner evaluation
//! and log-log slopes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `Σ_{p ∈ powers} c_p x^p` to `(xs, ys)`.
/// Returns coefficients in the order of `powers`.
pub fn polyfit(xs: &[f64], ys: &[f64], powers: &[u32]) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() < powers.len() {
        return Err(Error::Numerical(format!(
            "polyfit needs at least {} points, got {} abscissae and {} values",
            powers.len(),
            xs.len(),
            ys.len()
        )));
    }
    let design = DMatrix::from_fn(xs.len(), powers.len(), |r, c| xs[r].powi(powers[c] as i32));
    let rhs = DVector::from_column_slice(ys);
    let svd = design.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(format!("polyfit solve failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

/// Evaluates `Σ c_i x^{powers_i}`.
pub fn polyval(coeffs: &[f64], powers: &[u32], x: f64) -> f64 {
    coeffs.iter().zip(powers).map(|(c, &p)| c * x.powi(p as i32)).sum()
}

/// Slope of the least-squares line through `(log x, log y)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(f64::MIN_POSITIVE).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Largest `|a_i − b_i|` divided by the largest `|b_i|` (or 1 when all vanish).
pub fn max_relative_deviation(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

/// Relative size below which a central-difference error counts as round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

/// Central-difference errors of a scalar function at `ε = 0` against a
/// claimed derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdCurve {
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Log-log slope over the errors above the round-off floor; NaN when
    /// fewer than two remain.
    pub slope: f64,
    pub target: f64,
    /// Absolute round-off floor, `ROUNDOFF_FLOOR · max(1, |f(0)|, |target|)`.
    pub floor: f64,
}

impl FdCurve {
    /// Every error sits at the round-off floor: the difference quotient is
    /// exact and no slope can be observed.
    pub fn exact(&self) -> bool {
        self.errors.iter().all(|&e| e <= self.floor)
    }

    /// Number of errors above the floor.
    pub fn resolved(&self) -> usize {
        self.errors.iter().filter(|&&e| e > self.floor).count()
    }

    pub fn slope_ok(&self) -> bool {
        (self.slope - 2.0).abs() <= 0.2
    }

    /// Exact, or the errors above the floor are those of the largest steps
    /// and decay at second order. A single resolved error is accepted: a
    /// wrong derivative leaves a step-independent error at every `δ`.
    pub fn passes(&self) -> bool {
        let r = self.resolved();
        let prefix = self.errors.iter().take(r).all(|&e| e > self.floor);
        self.exact() || (prefix && (r == 1 || self.slope_ok()))
    }
}

/// `deltas` must be decreasing.
pub fn central_difference_curve<F>(f: &F, target: f64, deltas: &[f64]) -> Result<FdCurve>
where
    F: Fn(f64) -> Result<f64>,
{
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Numerical("finite-difference steps must decrease".into()));
    }
    let f0 = f(0.0)?;
    let errors = deltas
        .iter()
        .map(|&dl| Ok(((f(dl)? - f(-dl)?) / (2.0 * dl) - target).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let floor = ROUNDOFF_FLOOR * f0.abs().max(target.abs()).max(1.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas.iter().zip(&errors).filter(|(_, &e)| e > floor).unzip();
    let slope = if xs.len() >= 2 { loglog_slope(&xs, &ys) } else { f64::NAN };
    Ok(FdCurve {
        deltas: deltas.to_vec(),
        slope,
        errors,
        target,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_curve_classifies() {
        let deltas = [1e-2, 1e-3, 1e-4];
        let cubic = |x: f64| Ok(1.0 + 2.0 * x + 5.0 * x * x * x);
        let c = central_difference_curve(&cubic, 2.0, &deltas).unwrap();
        assert!(c.slope_ok() && !c.exact() && c.passes());
        let quad = |x: f64| Ok(1.0 + 2.0 * x + 5.0 * x * x);
        let q = central_difference_curve(&quad, 2.0, &deltas).unwrap();
        assert!(q.exact() && q.passes());
        let off = central_difference_curve(&quad, 2.5, &deltas).unwrap();
        assert!(!off.passes());
        // Tiny cubic term: the smallest step drops below the floor.
        let small = |x: f64| Ok(1.0 + 2.0 * x + 3e-2 * x * x * x);
        let s = central_difference_curve(&small, 2.0, &deltas).unwrap();
        assert_eq!(s.resolved(), 2);
        assert!((s.slope - 2.0).abs() < 1e-6 && s.passes());
        let first_order = |x: f64| Ok(2.0 * x + 0.3 * x * x.abs());
        assert!(!central_difference_curve(&first_order, 2.0, &deltas).unwrap().passes());
        assert!(central_difference_curve(&quad, 2.0, &[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn fit_recovers_exact_polynomial() {
        let xs: [f64; 5] = [-1.0, -0.4, 0.3, 0.8, 1.1];
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 * x - 0.5 * x * x * x + 0.25 * x.powi(4)).collect();
        let c = polyfit(&xs, &ys, &[1, 2, 3, 4]).unwrap();
        for (got, want) in c.iter().zip([2.0, 0.0, -0.5, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((polyval(&c, &[1, 2, 3, 4], 0.5) - (1.0 - 0.0625 + 0.015625)).abs() < 1e-12);
        assert!(polyfit(&xs[..2], &ys[..2], &[1, 2, 3]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1e-2, 1e-3, 1e-4];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn relative_deviation_uses_largest_target() {
        assert!((max_relative_deviation(&[1.0, 2.1], &[1.0, 2.0]) - 0.05).abs() < 1e-15);
        assert_eq!(max_relative_deviation(&[0.5], &[0.0]), 0.5);
    }
}
