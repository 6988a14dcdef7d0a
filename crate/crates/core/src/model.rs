//! Dephasing models: how a chain's steady state depends on the noise rate.
//!
//! A [`TransportModel`] prepares a chain once and hands back a
//! [`DephasingResponse`] that can be evaluated at many rates `Γ`. Every
//! generator here is affine in `Γ`, so preparation caches whatever does not
//! depend on it.

use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::chain::Hamiltonian;
use crate::lindblad::{build_liouvillian, steady_current, variance_of, TransportSpec};
use crate::liouvillian::DensityMatrix;
use crate::redfield::{build_redfield_liouvillian, redfield_dissipator, BathSpec};
use crate::solver::{SteadyStateSolver, TraceRowLu};
use crate::spectral::SpectralDephasing;
use crate::Result;

pub trait TransportModel: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn prepare(
        &self,
        h: &Hamiltonian,
        transport: &TransportSpec,
    ) -> Result<Box<dyn DephasingResponse>>;
}

pub trait DephasingResponse: Send + Sync {
    fn n_sites(&self) -> usize;

    fn transport(&self) -> &TransportSpec;

    fn steady_state(&self, gamma: f64) -> Result<DensityMatrix>;

    fn current(&self, gamma: f64) -> Result<f64> {
        Ok(steady_current(
            &self.steady_state(gamma)?,
            self.n_sites(),
            self.transport(),
        ))
    }

    fn population_variance(&self, gamma: f64) -> Result<f64> {
        let rho = self.steady_state(gamma)?;
        Ok(variance_of(&rho.populations()[..self.n_sites()]))
    }
}

/// Real forms `R(Γ) = R₀ + Γ·R₁` solved by a generic steady-state solver.
pub struct AffineGenerator {
    n_sites: usize,
    dim: usize,
    transport: TransportSpec,
    r0: DMatrix<f64>,
    r1: DMatrix<f64>,
    solver: Arc<dyn SteadyStateSolver>,
}

impl AffineGenerator {
    pub fn lindblad(
        h: &Hamiltonian,
        transport: &TransportSpec,
        solver: Arc<dyn SteadyStateSolver>,
    ) -> Result<Self> {
        let l0 = build_liouvillian(h, &transport.with_dephasing(0.0))?;
        let l1 = build_liouvillian(h, &transport.with_dephasing(1.0))?;
        let r0 = l0.hermitian_real_form();
        let r1 = l1.hermitian_real_form() - &r0;
        Ok(Self {
            n_sites: h.n_sites(),
            dim: l0.dim(),
            transport: *transport,
            r0,
            r1,
            solver,
        })
    }

    pub fn redfield(
        h: &Hamiltonian,
        bath: &BathSpec,
        transport: &TransportSpec,
        solver: Arc<dyn SteadyStateSolver>,
    ) -> Result<Self> {
        let l0 = build_redfield_liouvillian(h, 0.0, bath, transport)?;
        let r0 = l0.hermitian_real_form();
        let r1 = redfield_dissipator(h, bath, transport).hermitian_real_form();
        Ok(Self {
            n_sites: h.n_sites(),
            dim: l0.dim(),
            transport: *transport,
            r0,
            r1,
            solver,
        })
    }
}

impl DephasingResponse for AffineGenerator {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn transport(&self) -> &TransportSpec {
        &self.transport
    }

    fn steady_state(&self, gamma: f64) -> Result<DensityMatrix> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(crate::Error::NegativeRate {
                name: "dephasing_rate",
                value: gamma,
            });
        }
        let r = &self.r0 + &self.r1 * gamma;
        self.solver.solve_real(&r, self.dim)
    }
}

/// Pure-dephasing Lindblad model. With `fast` set, open chains use
/// [`SpectralDephasing`] and drop to the full generator only where the
/// reduced solve declines.
#[derive(Debug, Clone)]
pub struct PureDephasing {
    pub fast: bool,
    pub solver: Arc<dyn SteadyStateSolver>,
}

impl PureDephasing {
    pub fn fast() -> Self {
        Self {
            fast: true,
            solver: Arc::new(TraceRowLu),
        }
    }

    pub fn dense(solver: Arc<dyn SteadyStateSolver>) -> Self {
        Self {
            fast: false,
            solver,
        }
    }
}

impl Debug for dyn SteadyStateSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

struct SpectralResponse {
    spectral: SpectralDephasing,
    h: Hamiltonian,
    transport: TransportSpec,
    solver: Arc<dyn SteadyStateSolver>,
    fallback: OnceLock<Result<AffineGenerator>>,
}

impl SpectralResponse {
    fn fallback(&self) -> Result<&AffineGenerator> {
        self.fallback
            .get_or_init(|| {
                AffineGenerator::lindblad(&self.h, &self.transport, self.solver.clone())
            })
            .as_ref()
            .map_err(|e| crate::Error::SolverFailure(e.to_string()))
    }
}

impl DephasingResponse for SpectralResponse {
    fn n_sites(&self) -> usize {
        self.h.n_sites()
    }

    fn transport(&self) -> &TransportSpec {
        &self.transport
    }

    fn steady_state(&self, gamma: f64) -> Result<DensityMatrix> {
        match self.spectral.steady_state(gamma) {
            Err(e) if e.is_recoverable() => self.fallback()?.steady_state(gamma),
            other => other,
        }
    }

    fn current(&self, gamma: f64) -> Result<f64> {
        match self.spectral.current(gamma) {
            Err(e) if e.is_recoverable() => self.fallback()?.current(gamma),
            other => other,
        }
    }

    fn population_variance(&self, gamma: f64) -> Result<f64> {
        match self.spectral.populations(gamma) {
            Ok(p) => Ok(variance_of(p.sites.as_slice())),
            Err(e) if e.is_recoverable() => self.fallback()?.population_variance(gamma),
            Err(e) => Err(e),
        }
    }
}

impl TransportModel for PureDephasing {
    fn name(&self) -> &'static str {
        if self.fast {
            "lindblad"
        } else {
            "lindblad-dense"
        }
    }

    fn prepare(
        &self,
        h: &Hamiltonian,
        transport: &TransportSpec,
    ) -> Result<Box<dyn DephasingResponse>> {
        transport.validate(h.n_sites())?;
        if self.fast && SpectralDephasing::supports(transport) {
            match SpectralDephasing::new(h, transport) {
                Ok(spectral) => {
                    return Ok(Box::new(SpectralResponse {
                        spectral,
                        h: h.clone(),
                        transport: *transport,
                        solver: self.solver.clone(),
                        fallback: OnceLock::new(),
                    }))
                }
                Err(e) if e.is_recoverable() => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Box::new(AffineGenerator::lindblad(
            h,
            transport,
            self.solver.clone(),
        )?))
    }
}

/// Nonsecular Bloch-Redfield model with a thermal bath on every site.
#[derive(Debug, Clone)]
pub struct Redfield {
    pub bath: BathSpec,
    pub solver: Arc<dyn SteadyStateSolver>,
}

impl Redfield {
    pub fn new(bath: BathSpec) -> Self {
        Self {
            bath,
            solver: Arc::new(TraceRowLu),
        }
    }
}

impl TransportModel for Redfield {
    fn name(&self) -> &'static str {
        "redfield"
    }

    fn prepare(
        &self,
        h: &Hamiltonian,
        transport: &TransportSpec,
    ) -> Result<Box<dyn DephasingResponse>> {
        transport.validate(h.n_sites())?;
        Ok(Box::new(AffineGenerator::redfield(
            h,
            &self.bath,
            transport,
            self.solver.clone(),
        )?))
    }
}
