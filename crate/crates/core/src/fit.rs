//! Log-space least-squares fit of `Γ_opt = A · IPR^(λ + κ·IPR)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::optimizer::Status;
use crate::sweep::SweepRecord;
use crate::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `A` in units of J.
    pub amplitude: f64,
    /// Fitted intercept `ln A`.
    pub log_amplitude: f64,
    pub lambda_exp: f64,
    pub kappa_exp: f64,
    /// Standard deviation of the `ln Γ_opt` residuals.
    pub residual_sd: f64,
    /// Variances of (`ln A`, `λ`, `κ`).
    pub covariance_diagonal: [f64; 3],
    /// Quadrature sum of the parameter standard errors.
    pub error: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, ipr: f64) -> f64 {
        self.amplitude * ipr.powf(self.lambda_exp + self.kappa_exp * ipr)
    }
}

/// Fits `(IPR, Γ_opt)` pairs.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitResult> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::Underdetermined {
            available: usable.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let n = usable.len();
    let x = DMatrix::from_fn(n, 3, |i, j| {
        let ipr = usable[i].0;
        match j {
            0 => 1.0,
            1 => ipr.ln(),
            _ => ipr * ipr.ln(),
        }
    });
    let y = DVector::from_iterator(n, usable.iter().map(|p| p.1.ln()));

    let xtx = x.transpose() * &x;
    let inverse = xtx
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SolverFailure("fit design matrix is singular".into()))?;
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::SolverFailure(format!("least squares failed: {e}")))?;
    let rank = svd.rank(1e-12 * svd.singular_values.max());
    if rank < 3 {
        return Err(Error::SolverFailure(
            "fit design matrix is rank deficient".into(),
        ));
    }

    let residuals = &y - &x * &beta;
    let dof = (n - 3).max(1) as f64;
    let s2 = residuals.norm_squared() / dof;
    let cov = inverse * s2;
    let diag = [cov[(0, 0)], cov[(1, 1)], cov[(2, 2)]];
    Ok(FitResult {
        amplitude: beta[0].exp(),
        log_amplitude: beta[0],
        lambda_exp: beta[1],
        kappa_exp: beta[2],
        residual_sd: s2.sqrt(),
        covariance_diagonal: diag,
        error: diag.iter().map(|v| v.max(0.0)).sum::<f64>().sqrt(),
        n_points: n,
    })
}

/// Fits the `Interior` records; clipped and failed rows are excluded.
pub fn fit_power_law(records: &[SweepRecord]) -> Result<FitResult> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.status == Status::Interior)
        .map(|r| (r.ipr, r.gamma_opt))
        .collect();
    fit_points(&points)
}
