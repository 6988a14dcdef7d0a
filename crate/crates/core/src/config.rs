//! TOML run configuration.
//!
//! Every key is optional; unknown keys are rejected. Energies and rates are
//! in units of the coupling `J`.
//!
//! ```toml
//! lengths = [40]
//! gradients = [0.0, 0.1, 1.0, 10.0]
//! sigmas = [0.0, 0.1, 1.0]
//! realizations = 100
//! seed = 7
//! model = "lindblad"          # lindblad | lindblad-dense | redfield
//! solver = "lu"               # lu | svd
//! peak_finder = "log-golden"  # log-golden | grid
//! injection = "all-sites"     # all-sites | single-site | none
//! injection_site = 1
//! trap_rate = 3.0
//! gamma_min = 1e-3
//! gamma_max = 50.0
//!
//! [bath]
//! betas = [0.1, 1.0, 10.0]
//! spectral_density = "flat"   # flat | drude-lorentz
//! magnitude = 1.0
//!
//! [dynamics]
//! rates = [0.0, 0.5, 1.0, 2.0]
//! t_max = 1000.0
//! t_step = 5.0
//!
//! [fit]
//! input = "out/records.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::lindblad::{InjectionMode, TransportSpec, DEFAULT_TRAP_RATE};
use crate::optimizer::SearchOptions;
use crate::redfield::BathSpec;
use crate::registry::{DensityParams, ModelParams, Registries};
use crate::sweep::{default_sigma_grid, SweepConfig, DEFAULT_GRADIENTS};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lengths: Option<Vec<usize>>,
    pub gradients: Option<Vec<f64>>,
    pub sigmas: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub model: Option<String>,
    pub solver: Option<String>,
    pub peak_finder: Option<String>,
    pub injection: Option<String>,
    pub injection_site: Option<usize>,
    pub trap_rate: Option<f64>,
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub rel_tolerance: Option<f64>,
    pub record_curves: Option<bool>,
    pub bath: Option<BathConfig>,
    pub dynamics: Option<DynamicsConfig>,
    pub fit: Option<FitConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub betas: Vec<f64>,
    pub spectral_density: Option<String>,
    pub magnitude: Option<f64>,
    pub coupling: Option<f64>,
    pub linewidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub rates: Vec<f64>,
    pub t_max: f64,
    pub t_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub input: PathBuf,
    /// Only records with this gradient are fitted.
    pub gradient: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn injection_mode(&self) -> Result<InjectionMode> {
        match (
            self.injection.as_deref().unwrap_or("all-sites"),
            self.injection_site,
        ) {
            ("all-sites", None) => Ok(InjectionMode::AllSites),
            ("none", None) => Ok(InjectionMode::None),
            ("single-site", site) => Ok(InjectionMode::SingleSite(site.unwrap_or(1))),
            (mode @ ("all-sites" | "none"), Some(_)) => Err(Error::Config(format!(
                "injection_site only applies to single-site injection, not {mode}"
            ))),
            (other, _) => Err(Error::Config(format!(
                "unknown injection mode {other:?}; expected all-sites, single-site or none"
            ))),
        }
    }

    pub fn transport(&self) -> Result<TransportSpec> {
        Ok(TransportSpec::new(0.0)
            .with_trap_rate(self.trap_rate.unwrap_or(DEFAULT_TRAP_RATE))
            .with_injection(self.injection_mode()?))
    }

    pub fn search(&self) -> SearchOptions {
        let d = SearchOptions::default();
        SearchOptions {
            lower: self.gamma_min.unwrap_or(d.lower),
            upper: self.gamma_max.unwrap_or(d.upper),
            grid_points: self.grid_points.unwrap_or(d.grid_points),
            rel_tolerance: self.rel_tolerance.unwrap_or(d.rel_tolerance),
            record_curve: self.record_curves.unwrap_or(d.record_curve),
        }
    }

    pub fn betas(&self) -> Vec<f64> {
        self.bath
            .as_ref()
            .map(|b| b.betas.clone())
            .unwrap_or_default()
    }

    pub fn bath_at(&self, beta: f64, registries: &Registries) -> Result<BathSpec> {
        let cfg = self
            .bath
            .as_ref()
            .ok_or_else(|| Error::Config("missing [bath] section".into()))?;
        let d = DensityParams::default();
        let params = DensityParams {
            magnitude: cfg.magnitude.unwrap_or(d.magnitude),
            coupling: cfg.coupling.unwrap_or(d.coupling),
            linewidth: cfg.linewidth.unwrap_or(d.linewidth),
        };
        let name = cfg.spectral_density.as_deref().unwrap_or("flat");
        BathSpec::new(beta, registries.spectral_densities.create(name, &params)?)
    }

    /// Sweep settings with `bath` (if any) supplied to the model factory.
    pub fn sweep_config(
        &self,
        registries: &Registries,
        bath: Option<BathSpec>,
    ) -> Result<SweepConfig> {
        let solver = registries
            .solvers
            .create(self.solver.as_deref().unwrap_or("lu"), &())?;
        let model_name = self.model.as_deref().unwrap_or("lindblad");
        let model = registries
            .models
            .create(model_name, &ModelParams { solver, bath })?;
        let peak_finder = registries
            .peak_finders
            .create(self.peak_finder.as_deref().unwrap_or("log-golden"), &())?;
        let config = SweepConfig {
            lengths: self.lengths.clone().unwrap_or_else(|| vec![10]),
            gradients: self
                .gradients
                .clone()
                .unwrap_or_else(|| DEFAULT_GRADIENTS.to_vec()),
            sigmas: self.sigmas.clone().unwrap_or_else(default_sigma_grid),
            realizations: self.realizations,
            master_seed: self.seed.unwrap_or(0),
            model,
            peak_finder,
            transport: self.transport()?,
            search: self.search(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn dynamics_times(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self
            .dynamics
            .as_ref()
            .ok_or_else(|| Error::Config("missing [dynamics] section".into()))?;
        if !(d.t_step > 0.0 && d.t_max >= 0.0 && d.t_max.is_finite()) {
            return Err(Error::Config(
                "dynamics needs t_step > 0 and finite t_max ≥ 0".into(),
            ));
        }
        if d.rates.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::Config(
                "dynamics rates must be finite and non-negative".into(),
            ));
        }
        let steps = (d.t_max / d.t_step).round() as usize;
        let times = (0..=steps)
            .map(|k| (k as f64 * d.t_step).min(d.t_max))
            .collect();
        Ok((d.rates.clone(), times))
    }
}
