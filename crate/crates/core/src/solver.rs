//! Steady-state solvers for generic Liouvillians.
//!
//! Both strategies work on [`Liouvillian::hermitian_real_form`], which halves
//! the storage and keeps the arithmetic real.

use nalgebra::{DMatrix, DVector};

use crate::liouvillian::{DensityMatrix, HermitianCoords, Liouvillian};
use crate::{Error, Result};

/// Relative singular-value threshold below which a direction counts as null.
pub const NULL_SPACE_TOLERANCE: f64 = 1e-8;
/// Required `‖L(ρ)‖ / ‖L‖` of an accepted solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const PIVOT_RATIO_FLOOR: f64 = 1e-13;

pub trait SteadyStateSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Solves `R x = 0, Σ diag(x) = 1` for the real form `R` of a generator
    /// acting on a `dim`-level system.
    fn solve_real(&self, real_form: &DMatrix<f64>, dim: usize) -> Result<DensityMatrix>;

    fn solve(&self, liouvillian: &Liouvillian) -> Result<DensityMatrix> {
        self.solve_real(&liouvillian.hermitian_real_form(), liouvillian.dim())
    }
}

fn residual_ok(real_form: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    let scale = real_form.norm();
    let residual = (real_form * x).norm();
    residual.is_finite() && residual <= RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE)
}

fn into_density(x: &DVector<f64>, dim: usize) -> Result<DensityMatrix> {
    let coords = HermitianCoords::new(dim);
    let trace: f64 = (0..dim).map(|j| x[coords.diag(j)]).sum();
    if !trace.is_finite() || trace.abs() < 1e-300 {
        return Err(Error::SolverFailure("null vector has zero trace".into()));
    }
    DensityMatrix::new(coords.to_matrix(&(x / trace))).map(DensityMatrix::normalized)
}

/// Replaces one population row of `L` with the trace constraint and solves
/// the resulting square system by LU. Falls back to [`SvdNullSpace`] when the
/// system is numerically singular or the residual is poor.
#[derive(Debug, Clone, Copy, Default)]
pub struct TraceRowLu;

impl SteadyStateSolver for TraceRowLu {
    fn name(&self) -> &'static str {
        "lu"
    }

    fn solve_real(&self, real_form: &DMatrix<f64>, dim: usize) -> Result<DensityMatrix> {
        let size = dim * dim;
        if real_form.nrows() != size || real_form.ncols() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                found: real_form.nrows(),
            });
        }
        let coords = HermitianCoords::new(dim);
        let mut system = real_form.clone();
        let row = coords.diag(0);
        system.row_mut(row).fill(0.0);
        for j in 0..dim {
            system[(row, coords.diag(j))] = 1.0;
        }
        let mut rhs = DVector::zeros(size);
        rhs[row] = 1.0;

        let lu = system.lu();
        let pivots = lu.u().diagonal().map(f64::abs);
        let well_posed = pivots.max() > 0.0 && pivots.min() / pivots.max() > PIVOT_RATIO_FLOOR;
        if well_posed {
            if let Some(x) = lu.solve(&rhs) {
                if x.iter().all(|v| v.is_finite()) && residual_ok(real_form, &x) {
                    return into_density(&x, dim);
                }
            }
        }
        SvdNullSpace.solve_real(real_form, dim)
    }
}

/// Takes the right singular vector of the smallest singular value, after
/// checking that the numerical null space is one-dimensional.
#[derive(Debug, Clone, Copy, Default)]
pub struct SvdNullSpace;

impl SvdNullSpace {
    /// Number of singular values below `NULL_SPACE_TOLERANCE · σ_max`.
    pub fn nullity(real_form: &DMatrix<f64>) -> usize {
        let sv = real_form.clone().singular_values();
        let cutoff = NULL_SPACE_TOLERANCE * sv.max();
        sv.iter().filter(|&&s| s < cutoff).count()
    }
}

impl SteadyStateSolver for SvdNullSpace {
    fn name(&self) -> &'static str {
        "svd"
    }

    fn solve_real(&self, real_form: &DMatrix<f64>, dim: usize) -> Result<DensityMatrix> {
        let svd = real_form.clone().svd(false, true);
        let v_t = svd
            .v_t
            .as_ref()
            .ok_or_else(|| Error::SolverFailure("SVD did not return right vectors".into()))?;
        let sv = &svd.singular_values;
        if sv.iter().any(|s| !s.is_finite()) {
            return Err(Error::SolverFailure("non-finite singular values".into()));
        }
        let cutoff = NULL_SPACE_TOLERANCE * sv.max();
        let nullity = sv.iter().filter(|&&s| s < cutoff).count();
        if nullity > 1 {
            return Err(Error::NonUniqueSteadyState { nullity });
        }
        let (k, _) = sv
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let x = v_t.row(k).transpose();
        if !residual_ok(real_form, &x) {
            return Err(Error::SolverFailure(format!(
                "no null vector: smallest singular value {:.3e}",
                sv[k]
            )));
        }
        into_density(&x, dim)
    }
}

/// Steady state with the default strategy.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    TraceRowLu.solve(liouvillian)
}
