//! Adaptive Dormand-Prince 5(4) integration of `dρ/dt = L(ρ)`.

use crate::liouvillian::{DensityMatrix, Liouvillian};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 50_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    l: &'a Liouvillian,
    opts: PropagationOptions,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
}

impl<'a> Stepper<'a> {
    fn new(l: &'a Liouvillian, opts: PropagationOptions) -> Self {
        let n = l.dim() * l.dim();
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            l,
            opts,
            k: std::array::from_fn(|_| z.clone()),
            stage: z.clone(),
            y_new: z,
        }
    }

    /// Attempts one step of size `h` from `y` (with `k[0] = L y` already
    /// filled) and returns the scaled error norm.
    fn attempt(&mut self, y: &[C64], h: f64) -> f64 {
        for s in 1..7 {
            for i in 0..y.len() {
                let mut acc = C64::new(0.0, 0.0);
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += self.k[j][i] * *a;
                    }
                }
                self.stage[i] = y[i] + acc * h;
            }
            self.l.apply_vec(&self.stage, &mut self.k[s]);
        }
        // The last stage is evaluated at the fifth-order solution.
        self.y_new.copy_from_slice(&self.stage);
        let mut sum = 0.0;
        for i in 0..y.len() {
            let mut err = C64::new(0.0, 0.0);
            for (s, e) in E.iter().enumerate() {
                err += self.k[s][i] * *e;
            }
            let scale = self.opts.atol + self.opts.rtol * y[i].norm().max(self.y_new[i].norm());
            sum += (err.norm() * h / scale).powi(2);
        }
        (sum / y.len() as f64).sqrt()
    }
}

/// Integrates from `ρ(0) = rho0` and returns `ρ(t)` at each of `times`.
pub fn propagate(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    propagate_with(l, rho0, times, PropagationOptions::default())
}

pub fn propagate_with(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: PropagationOptions,
) -> Result<Vec<DensityMatrix>> {
    let dim = l.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.dim(),
        });
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidParameter(
            "output times must be finite, non-negative and ascending".into(),
        ));
    }

    let mut stepper = Stepper::new(l, opts);
    let mut y: Vec<C64> = rho0.matrix.as_slice().to_vec();
    l.apply_vec(&y, &mut stepper.k[0]);
    let mut t = 0.0;
    let mut h = initial_step(&y, &stepper.k[0], opts);
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(times.len());

    for &target in times {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let err = stepper.attempt(&y, step);
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::SolverFailure(format!(
                    "exceeded {} steps at t = {t}",
                    opts.max_steps
                )));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut stepper.y_new);
                stepper.k.swap(0, 6);
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last || step * grow > h {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
            }
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::StepSizeUnderflow { t, step: h });
            }
        }
        out.push(DensityMatrix {
            matrix: DMatrix::from_column_slice(dim, dim, &y),
        });
    }
    Ok(out)
}

fn initial_step(y: &[C64], f: &[C64], opts: PropagationOptions) -> f64 {
    let rms = |v: &[C64]| {
        let s: f64 = v
            .iter()
            .zip(y)
            .map(|(x, y0)| (x.norm() / (opts.atol + opts.rtol * y0.norm())).powi(2))
            .sum();
        (s / v.len() as f64).sqrt()
    };
    let (d0, d1) = (rms(y), rms(f));
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_hamiltonian, ChainSpec, SiteEnergies};
    use crate::lindblad::{build_liouvillian, wavepacket_variance, TransportSpec};
    use crate::solver::steady_state;

    #[test]
    fn zero_time_is_identity() {
        let h = ChainSpec::new(3, 0.1, 0.5, 1).unwrap().hamiltonian();
        let l = build_liouvillian(&h, &TransportSpec::new(0.4)).unwrap();
        let rho0 = DensityMatrix::site_projector(0, 4);
        let out = propagate(&l, &rho0, &[0.0, 0.0]).unwrap();
        assert_eq!(out[0], rho0);
        assert_eq!(out[1], rho0);
    }

    #[test]
    fn two_level_rabi() {
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.0, 0.0]), 1.0);
        let l = build_liouvillian(&h, &TransportSpec::closed(0.0)).unwrap();
        let times: Vec<f64> = (1..=10).map(|k| 0.37 * k as f64).collect();
        let out = propagate(&l, &DensityMatrix::site_projector(0, 2), &times).unwrap();
        for (t, rho) in times.iter().zip(&out) {
            assert!((rho.population(0) - t.cos().powi(2)).abs() < 1e-7);
        }
    }

    #[test]
    fn dephased_dimer_relaxes_exponentially() {
        let gamma = 0.75;
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.0, 0.0]), 1.0);
        let l = build_liouvillian(&h, &TransportSpec::closed(gamma)).unwrap();
        let times = [0.5, 1.0, 3.0];
        let out = propagate(&l, &DensityMatrix::site_projector(0, 2), &times).unwrap();
        // z'' + 4Γ z' + 4 z = 0, z(0) = 1, z'(0) = 0.
        let g = 2.0 * gamma;
        let w = (4.0 - g * g).sqrt();
        for (t, rho) in times.iter().zip(&out) {
            let z = (-g * t).exp() * ((w * t).cos() + g / w * (w * t).sin());
            assert!((rho.population(0) - rho.population(1) - z).abs() < 1e-7);
        }
    }

    #[test]
    fn trace_and_hermiticity_along_trajectory() {
        let h = ChainSpec::new(5, 1.0, 0.8, 3).unwrap().hamiltonian();
        let l = build_liouvillian(&h, &TransportSpec::new(0.2)).unwrap();
        let times: Vec<f64> = (0..20).map(|k| k as f64).collect();
        for rho in propagate(&l, &DensityMatrix::site_projector(2, 6), &times).unwrap() {
            assert!((rho.trace().re - 1.0).abs() < 1e-8);
            assert!(rho.trace().im.abs() < 1e-8);
            assert!(rho.hermiticity_error() < 1e-8);
        }
    }

    #[test]
    fn long_time_reaches_steady_state() {
        let h = ChainSpec::new(4, 0.1, 0.5, 9).unwrap().hamiltonian();
        let l = build_liouvillian(&h, &TransportSpec::new(2.0)).unwrap();
        let ss = steady_state(&l).unwrap();
        let out = propagate(&l, &DensityMatrix::maximally_mixed_sites(4, 5), &[400.0]).unwrap();
        assert!(out[0].max_abs_diff(&ss) < 1e-6);
    }

    #[test]
    fn ballistic_spreading() {
        let n = 41;
        let h = build_hamiltonian(&SiteEnergies::new(vec![0.0; n]), 1.0);
        let l = build_liouvillian(&h, &TransportSpec::closed(0.0)).unwrap();
        let times: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
        let out = propagate(&l, &DensityMatrix::site_projector(n / 2, n), &times).unwrap();
        for (t, rho) in times.iter().zip(&out) {
            let v = wavepacket_variance(rho, n).unwrap();
            assert!((v - 2.0 * t * t).abs() <= 0.02 * 2.0 * t * t, "t={t}: {v}");
        }
    }

    #[test]
    fn rejects_descending_times() {
        let h = ChainSpec::ordered(2).unwrap().hamiltonian();
        let l = build_liouvillian(&h, &TransportSpec::new(0.1)).unwrap();
        assert!(propagate(&l, &DensityMatrix::site_projector(0, 3), &[1.0, 0.5]).is_err());
    }
}
