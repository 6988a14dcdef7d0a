//! Name-keyed registries of interchangeable strategies.
//!
//! Each registry maps a name to a factory closure; experiments pick the
//! implementation at runtime from configuration.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use crate::model::{PureDephasing, Redfield, TransportModel};
use crate::optimizer::{GridScan, LogGolden, PeakFinder};
use crate::redfield::{BathSpec, DrudeLorentz, Flat, SpectralDensity};
use crate::solver::{SteadyStateSolver, SvdNullSpace, TraceRowLu};
use crate::{Error, Result};

type Factory<T, A> = Box<dyn Fn(&A) -> Result<Arc<T>> + Send + Sync>;

pub struct Registry<T: ?Sized, A = ()> {
    kind: &'static str,
    factories: BTreeMap<String, Factory<T, A>>,
}

impl<T: ?Sized, A> Registry<T, A> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            factories: BTreeMap::new(),
        }
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        factory: impl Fn(&A) -> Result<Arc<T>> + Send + Sync + 'static,
    ) -> &mut Self {
        self.factories.insert(name.into(), Box::new(factory));
        self
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn create(&self, name: &str, args: &A) -> Result<Arc<T>> {
        match self.factories.get(name) {
            Some(f) => f(args),
            None => Err(Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            }),
        }
    }
}

/// Parameters a spectral-density factory may draw on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParams {
    pub magnitude: f64,
    pub coupling: f64,
    pub linewidth: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            magnitude: 1.0,
            coupling: 1.0,
            linewidth: 1.0,
        }
    }
}

/// What a model factory is given.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub solver: Arc<dyn SteadyStateSolver>,
    pub bath: Option<BathSpec>,
}

pub struct Registries {
    pub models: Registry<dyn TransportModel, ModelParams>,
    pub solvers: Registry<dyn SteadyStateSolver>,
    pub peak_finders: Registry<dyn PeakFinder>,
    pub spectral_densities: Registry<dyn SpectralDensity, DensityParams>,
}

impl Default for Registries {
    fn default() -> Self {
        let mut solvers: Registry<dyn SteadyStateSolver> = Registry::new("solver");
        solvers
            .register("lu", |_| Ok(Arc::new(TraceRowLu)))
            .register("svd", |_| Ok(Arc::new(SvdNullSpace)));

        let mut peak_finders: Registry<dyn PeakFinder> = Registry::new("peak finder");
        peak_finders
            .register("log-golden", |_| Ok(Arc::new(LogGolden)))
            .register("grid", |_| Ok(Arc::new(GridScan)));

        let mut spectral_densities: Registry<dyn SpectralDensity, DensityParams> =
            Registry::new("spectral density");
        spectral_densities
            .register("flat", |p: &DensityParams| {
                positive("magnitude", p.magnitude)?;
                Ok(Arc::new(Flat {
                    magnitude: p.magnitude,
                }))
            })
            .register("drude-lorentz", |p: &DensityParams| {
                positive("coupling", p.coupling)?;
                positive("linewidth", p.linewidth)?;
                Ok(Arc::new(DrudeLorentz {
                    coupling: p.coupling,
                    linewidth: p.linewidth,
                }))
            });

        let mut models: Registry<dyn TransportModel, ModelParams> = Registry::new("model");
        models
            .register("lindblad", |p: &ModelParams| {
                Ok(Arc::new(PureDephasing {
                    fast: true,
                    solver: p.solver.clone(),
                }))
            })
            .register("lindblad-dense", |p: &ModelParams| {
                Ok(Arc::new(PureDephasing::dense(p.solver.clone())))
            })
            .register("redfield", |p: &ModelParams| {
                let bath = p.bath.clone().ok_or_else(|| {
                    Error::Config("the redfield model needs a [bath] section".into())
                })?;
                Ok(Arc::new(Redfield {
                    bath,
                    solver: p.solver.clone(),
                }))
            });

        Self {
            models,
            solvers,
            peak_finders,
            spectral_densities,
        }
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

/// The built-in strategies.
pub fn builtin() -> &'static Registries {
    static REGISTRIES: OnceLock<Registries> = OnceLock::new();
    REGISTRIES.get_or_init(Registries::default)
}
